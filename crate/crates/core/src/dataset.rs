//! Seeded samplers for the example distributions and labeled-dataset CSV I/O.
//!
//! All randomness goes through [`seeded_rng`], a ChaCha8 stream cipher RNG
//! (`rand_chacha::ChaCha8Rng`) seeded with `seed_from_u64`. The ChaCha
//! keystream is specified independently of platform, so a given seed yields
//! the same dataset everywhere.
//!
//! # CSV layout
//!
//! One point per row: `d` coordinate columns, then (for labeled files) an
//! integer class column. `.` is the decimal separator. Files have no header
//! unless one is requested, in which case the header is `x0,x1,...[,label]`.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// The crate-wide RNG.
pub type CrateRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> CrateRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Points in `R^d` with one class id per point.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let dim = validate_points(&points)?;
        Ok(Self {
            points,
            labels,
            dim,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of classes, `max(label) + 1`.
    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Points carrying `label`, in dataset order.
    pub fn class_points(&self, label: usize) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == label)
            .map(|(p, _)| p.clone())
            .collect()
    }

    /// Uniform-weight empirical distribution over the points (labels dropped).
    pub fn to_distribution(&self) -> EmpiricalDistribution {
        EmpiricalDistribution::uniform(self.points.clone())
            .expect("dataset points were validated on construction")
    }
}

/// Weighted point cloud standing in for a density: `sum_n w_n delta(x - x_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    dim: usize,
}

impl EmpiricalDistribution {
    /// Every point gets mass `1/N`.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        let weights = vec![1.0 / n.max(1) as f64; n];
        Self::weighted(points, weights)
    }

    /// Weights are normalized to sum to one.
    pub fn weighted(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = validate_points(&points)?;
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("weights sum to zero"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            points,
            weights,
            dim,
        })
    }

    /// `alpha * a + (1 - alpha) * b`: the point lists are concatenated and
    /// the weights rescaled.
    pub fn mixture(a: &Self, b: &Self, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!(
                "mixture weight {alpha} not in [0, 1]"
            )));
        }
        crate::error::check_dim(a.dim, b.dim)?;
        let points = a.points.iter().chain(&b.points).cloned().collect();
        let weights = a
            .weights
            .iter()
            .map(|w| w * alpha)
            .chain(b.weights.iter().map(|w| w * (1.0 - alpha)))
            .collect();
        Self::weighted(points, weights)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weighted mean of each coordinate.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (mi, xi) in m.iter_mut().zip(p) {
                *mi += w * xi;
            }
        }
        m
    }
}

fn validate_points(points: &[Vec<f64>]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyDataset)?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::invalid("points must have dimension >= 1"));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::invalid(format!(
                "point {i} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("point {i} is not finite")));
        }
    }
    Ok(dim)
}

/// Two interleaved half-circles of radius 1.
///
/// Class 0 (`floor(n/2)` points) lies on `(cos t, sin t)`, class 1
/// (`ceil(n/2)` points) on `(1 - cos t, 1 - sin t - 0.5)`, with `t` evenly
/// spaced over `[0, pi]` including both ends. Isotropic Gaussian noise with
/// standard deviation `noise` is then added to every coordinate. Points are
/// emitted class 0 first, unshuffled.
pub fn sample_halfmoon(n: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    if n < 2 {
        return Err(Error::invalid(format!("halfmoon needs n >= 2, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(format!("noise must be >= 0, got {noise}")));
    }
    let n_upper = n / 2;
    let n_lower = n - n_upper;
    let arc = |k: usize, count: usize| {
        if count == 1 {
            0.0
        } else {
            PI * k as f64 / (count - 1) as f64
        }
    };

    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n_upper {
        let t = arc(k, n_upper);
        points.push(vec![t.cos(), t.sin()]);
        labels.push(0);
    }
    for k in 0..n_lower {
        let t = arc(k, n_lower);
        points.push(vec![1.0 - t.cos(), 1.0 - t.sin() - 0.5]);
        labels.push(1);
    }

    if noise > 0.0 {
        let mut rng = seeded_rng(seed);
        for p in &mut points {
            for v in p.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += noise * z;
            }
        }
    }
    LabeledDataset::new(points, labels)
}

/// `n` i.i.d. draws from `N(mean, cov_scale^2 I)` with uniform weights.
pub fn sample_gaussian(
    n: usize,
    mean: &[f64],
    cov_scale: f64,
    seed: u64,
) -> Result<EmpiricalDistribution> {
    if n < 1 {
        return Err(Error::invalid("gaussian sampler needs n >= 1"));
    }
    if mean.is_empty() {
        return Err(Error::invalid("mean must have dimension >= 1"));
    }
    if !(cov_scale > 0.0 && cov_scale.is_finite()) {
        return Err(Error::invalid(format!(
            "cov_scale must be positive, got {cov_scale}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let points = (0..n)
        .map(|_| {
            mean.iter()
                .map(|m| {
                    let z: f64 = rng.sample(StandardNormal);
                    m + cov_scale * z
                })
                .collect()
        })
        .collect();
    EmpiricalDistribution::uniform(points)
}

fn read_rows(path: &Path, header: bool) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn parse_coords(line: u64, cells: &[String]) -> Result<Vec<f64>> {
    cells
        .iter()
        .map(|c| {
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("`{c}` is not a finite number"),
                })
        })
        .collect()
}

fn check_width(line: u64, got: usize, expected: &mut Option<usize>) -> Result<()> {
    match *expected {
        None => {
            *expected = Some(got);
            Ok(())
        }
        Some(w) if w == got => Ok(()),
        Some(w) => Err(Error::Parse {
            line,
            message: format!("row has {got} columns, previous rows have {w}"),
        }),
    }
}

/// Reads a labeled CSV: coordinate columns followed by an integer label.
pub fn load_csv(path: impl AsRef<Path>, header: bool) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut width = None;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (line, cells) in read_rows(path, header)? {
        check_width(line, cells.len(), &mut width)?;
        if cells.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "labeled rows need at least one coordinate and a label".into(),
            });
        }
        let (coords, label) = cells.split_at(cells.len() - 1);
        points.push(parse_coords(line, coords)?);
        labels.push(label[0].parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("`{}` is not a nonnegative integer label", label[0]),
        })?);
    }
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    LabeledDataset::new(points, labels)
}

/// Reads an unlabeled point CSV as a uniform empirical distribution. With
/// `labeled`, the trailing label column is validated and dropped.
pub fn load_points_csv(
    path: impl AsRef<Path>,
    header: bool,
    labeled: bool,
) -> Result<EmpiricalDistribution> {
    if labeled {
        return Ok(load_csv(path, header)?.to_distribution());
    }
    let path = path.as_ref();
    let mut width = None;
    let mut points = Vec::new();
    for (line, cells) in read_rows(path, header)? {
        check_width(line, cells.len(), &mut width)?;
        points.push(parse_coords(line, &cells)?);
    }
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    EmpiricalDistribution::uniform(points)
}

fn header_row(dim: usize, labeled: bool) -> String {
    let mut cols: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    if labeled {
        cols.push("label".into());
    }
    cols.join(",")
}

fn write_text(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_csv(ds: &LabeledDataset, path: impl AsRef<Path>, header: bool) -> Result<()> {
    let mut out = String::new();
    if header {
        out.push_str(&header_row(ds.dim, true));
        out.push('\n');
    }
    for (p, l) in ds.points.iter().zip(&ds.labels) {
        for v in p {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{l}\n"));
    }
    write_text(path.as_ref(), out)
}

/// Writes point coordinates only; weights are not stored.
pub fn save_points_csv(
    dist: &EmpiricalDistribution,
    path: impl AsRef<Path>,
    header: bool,
) -> Result<()> {
    let mut out = String::new();
    if header {
        out.push_str(&header_row(dist.dim, false));
        out.push('\n');
    }
    for p in &dist.points {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path.as_ref(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_halfmoon_lies_on_arcs() {
        let ds = sample_halfmoon(4, 0.0, 7).unwrap();
        assert_eq!(ds.class_points(0).len(), 2);
        assert_eq!(ds.class_points(1).len(), 2);
        for p in ds.class_points(0) {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            assert!(p[1] >= -1e-12);
        }
        for p in ds.class_points(1) {
            assert!(((p[0] - 1.0).hypot(p[1] - 0.5) - 1.0).abs() < 1e-12);
            assert!(p[1] <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn odd_halfmoon_split() {
        let ds = sample_halfmoon(5, 0.1, 0).unwrap();
        assert_eq!(ds.class_points(0).len(), 2);
        assert_eq!(ds.class_points(1).len(), 3);
    }

    #[test]
    fn halfmoon_is_deterministic() {
        let a = sample_halfmoon(1000, 0.1, 1).unwrap();
        let b = sample_halfmoon(1000, 0.1, 1).unwrap();
        assert_eq!(a, b);
        let c = sample_halfmoon(1000, 0.1, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn halfmoon_class_means() {
        // Noise-free arc means: class 0 at y = 2/pi, class 1 at y = 0.5 - 2/pi
        // (for a dense arc); the seeded noisy sample stays close to that.
        let ds = sample_halfmoon(1000, 0.1, 1).unwrap();
        let mean_y = |l| {
            let pts = ds.class_points(l);
            pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64
        };
        let (m0, m1) = (mean_y(0), mean_y(1));
        assert!(m0 > m1);
        assert!((m0 - 2.0 / PI).abs() < 0.02, "{m0}");
        assert!((m1 - (0.5 - 2.0 / PI)).abs() < 0.02, "{m1}");
    }

    #[test]
    fn halfmoon_rejects_small_n() {
        assert!(matches!(
            sample_halfmoon(1, 0.0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn gaussian_sample_mean() {
        let d = sample_gaussian(100_000, &[0.0, 0.0], 1.0, 3).unwrap();
        for m in d.mean() {
            assert!(m.abs() < 0.02, "{m}");
        }
        let total: f64 = d.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_degenerate_scale() {
        let d = sample_gaussian(1, &[5.0, 5.0], 1e-9, 0).unwrap();
        assert!((d.points()[0][0] - 5.0).abs() < 1e-6);
        assert!((d.points()[0][1] - 5.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_rejects_nonpositive_scale() {
        assert!(sample_gaussian(10, &[0.0], 0.0, 0).is_err());
        assert!(sample_gaussian(10, &[0.0], -1.0, 0).is_err());
    }

    #[test]
    fn weights_are_normalized() {
        let d =
            EmpiricalDistribution::weighted(vec![vec![0.0], vec![1.0]], vec![2.0, 6.0]).unwrap();
        assert_eq!(d.weights(), &[0.25, 0.75]);
        assert!(EmpiricalDistribution::weighted(vec![vec![0.0]], vec![-1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = sample_halfmoon(50, 0.1, 9).unwrap();
        for header in [false, true] {
            let path = dir.path().join(format!("moons_{header}.csv"));
            save_csv(&ds, &path, header).unwrap();
            assert_eq!(load_csv(&path, header).unwrap(), ds);
        }
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "0.5,0.5,1\n1.0,2.0,abc\n").unwrap();
        match load_csv(&path, false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "0.5,0.5\n1.0,2.0,abc\n").unwrap();
        match load_points_csv(&path, false, false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_mixed_dimensionality() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mixed.csv");
        std::fs::write(&path, "1,2\n1,2,3\n").unwrap();
        assert!(matches!(
            load_points_csv(&path, false, false),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn csv_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "").unwrap();
        assert!(matches!(load_csv(&path, false), Err(Error::EmptyDataset)));
        assert!(matches!(
            load_points_csv(&path, false, false),
            Err(Error::EmptyDataset)
        ));
    }
}
