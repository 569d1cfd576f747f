//! Radon and generalized Radon transforms of empirical distributions.
//!
//! For `p = sum_n w_n delta(x - x_n)` the transform along a defining function
//! `g` is `sum_n w_n delta(t - g(x_n, theta))`: each slice is the weighted list
//! of projected values `g(x_n, theta)`, turned into a density on a grid by
//! [`estimate_density`]. The same push-forward computes the density of the
//! output of any node, and of the label oracle.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::EmpiricalDistribution;
use crate::defining_fn::{Linear, Surface};
use crate::density::{
    estimate_density, estimate_kde_on_grid, min_max, silverman_bandwidth, uniform_grid, Density1D,
    DensityMethod,
};
use crate::error::{check_dim, Error, Result};

/// Default number of grid points for slice densities.
pub const DEFAULT_RESOLUTION: usize = 256;

/// `g(x_n, theta)` for every sample, in sample order.
pub fn project_samples<S: Surface + ?Sized>(
    dist: &EmpiricalDistribution,
    g: &S,
) -> Result<Vec<f64>> {
    check_dim(g.input_dim(), dist.dim())?;
    dist.points().iter().map(|x| g.value(x)).collect()
}

/// One slice of the (generalized) Radon transform of an empirical distribution.
#[derive(Debug, Clone)]
pub struct Slice {
    pub theta_id: String,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub density: Density1D,
}

pub fn slice<S: Surface + ?Sized>(
    dist: &EmpiricalDistribution,
    g: &S,
    theta_id: impl Into<String>,
    method: DensityMethod,
    resolution: usize,
) -> Result<Slice> {
    let values = project_samples(dist, g)?;
    let density = estimate_density(&values, Some(dist.weights()), method, resolution)?;
    Ok(Slice {
        theta_id: theta_id.into(),
        values,
        weights: dist.weights().to_vec(),
        density,
    })
}

/// The map whose push-forward density is requested.
pub enum PushforwardMap<'a> {
    /// Any scalar surface: a defining function, a perceptron, a classifier.
    Surface(&'a dyn Surface),
    /// A label oracle `h(x_n) = labels[n]`.
    Labels(&'a [usize]),
}

/// Density of `h(X)` for `X ~ dist`. For an empirical distribution this is
/// the generalized Radon slice along `h`.
pub fn rvt_pushforward(
    dist: &EmpiricalDistribution,
    map: PushforwardMap<'_>,
    method: DensityMethod,
    resolution: usize,
) -> Result<Density1D> {
    let values = match map {
        PushforwardMap::Surface(h) => project_samples(dist, h)?,
        PushforwardMap::Labels(labels) => {
            if labels.len() != dist.len() {
                return Err(Error::invalid(format!(
                    "{} labels for {} samples",
                    labels.len(),
                    dist.len()
                )));
            }
            labels.iter().map(|&l| l as f64).collect()
        }
    };
    estimate_density(&values, Some(dist.weights()), method, resolution)
}

/// Slice densities on a shared `(t, phi)` grid. `values` is row-major with
/// one row per `t` sample and one column per angle. Offsets are measured
/// from `center`: `t = (x - center) . (cos phi, sin phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    angles: Vec<f64>,
    t: Vec<f64>,
    values: Vec<f64>,
    center: [f64; 2],
}

impl Sinogram {
    pub fn new(angles: Vec<f64>, t: Vec<f64>, values: Vec<f64>, center: [f64; 2]) -> Result<Self> {
        if angles.is_empty() || t.len() < 2 {
            return Err(Error::invalid("sinogram needs >= 1 angle and >= 2 offsets"));
        }
        if values.len() != angles.len() * t.len() {
            return Err(Error::invalid(format!(
                "sinogram has {} values for a {}x{} grid",
                values.len(),
                t.len(),
                angles.len()
            )));
        }
        Ok(Self {
            angles,
            t,
            values,
            center,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn n_thetas(&self) -> usize {
        self.angles.len()
    }

    pub fn n_t(&self) -> usize {
        self.t.len()
    }

    pub fn dt(&self) -> f64 {
        (self.t[self.t.len() - 1] - self.t[0]) / (self.t.len() - 1) as f64
    }

    pub fn get(&self, t_idx: usize, angle_idx: usize) -> f64 {
        self.values[t_idx * self.angles.len() + angle_idx]
    }

    pub fn column(&self, angle_idx: usize) -> Vec<f64> {
        (0..self.t.len()).map(|i| self.get(i, angle_idx)).collect()
    }

    pub(crate) fn from_columns(
        angles: Vec<f64>,
        t: Vec<f64>,
        columns: &[Vec<f64>],
        center: [f64; 2],
    ) -> Result<Self> {
        let n_theta = angles.len();
        let mut values = vec![0.0; t.len() * n_theta];
        for (k, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                values[i * n_theta + k] = *v;
            }
        }
        Self::new(angles, t, values, center)
    }

    /// Column `k` as a normalized density.
    pub fn column_density(&self, angle_idx: usize) -> Result<Density1D> {
        Density1D::from_values(
            self.t.clone(),
            self.column(angle_idx)
                .into_iter()
                .map(|v| v.max(0.0))
                .collect(),
            self.dt(),
        )
    }

    /// CSV: first row `phi,<angle_0>,...`; every further row is
    /// `<t_i>,<value_i0>,<value_i1>,...`. Angles are in radians.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi");
        for a in &self.angles {
            out.push_str(&format!(",{a}"));
        }
        out.push('\n');
        for (i, t) in self.t.iter().enumerate() {
            out.push_str(&t.to_string());
            for k in 0..self.angles.len() {
                out.push_str(&format!(",{}", self.get(i, k)));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, center: [f64; 2]) -> Result<Self> {
        let parse = |line: usize, s: &str| {
            s.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: line as u64,
                message: format!("`{s}` is not a number"),
            })
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or(Error::EmptyDataset)?;
        let mut cells = head.split(',');
        if cells.next().map(str::trim) != Some("phi") {
            return Err(Error::Parse {
                line: 1,
                message: "first row must start with `phi`".into(),
            });
        }
        let angles = cells.map(|c| parse(1, c)).collect::<Result<Vec<_>>>()?;
        let mut t = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let row = line
                .split(',')
                .map(|c| parse(i + 1, c))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != angles.len() + 1 {
                return Err(Error::Parse {
                    line: i as u64 + 1,
                    message: format!("expected {} columns", angles.len() + 1),
                });
            }
            t.push(row[0]);
            values.extend_from_slice(&row[1..]);
        }
        Self::new(angles, t, values, center)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `phi_k = k pi / n` for `k = 0..n`.
pub fn angle_grid(n_thetas: usize) -> Vec<f64> {
    (0..n_thetas)
        .map(|k| PI * k as f64 / n_thetas as f64)
        .collect()
}

/// Linear Radon slices of a 2-D empirical distribution at `n_thetas` angles
/// uniformly covering `[0, pi)`, estimated by KDE on a common `t` grid.
///
/// Each column uses its own Silverman bandwidth; the grid spans
/// `[min - 3h, max + 3h]` over all projections with the largest bandwidth.
/// With a single angle the result equals [`slice`] along that angle.
pub fn sinogram(
    dist: &EmpiricalDistribution,
    n_thetas: usize,
    resolution: usize,
) -> Result<Sinogram> {
    if dist.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            expected: 2,
            got: dist.dim(),
        });
    }
    if n_thetas < 1 || resolution < 2 {
        return Err(Error::invalid(
            "sinogram needs n_thetas >= 1 and resolution >= 2",
        ));
    }
    let angles = angle_grid(n_thetas);
    let weights = dist.weights();
    let projections: Vec<(Vec<f64>, f64)> = angles
        .par_iter()
        .map(|&phi| {
            let v = project_samples(
                dist,
                &crate::defining_fn::DefiningFunction::Linear(Linear::from_angle(phi)),
            )?;
            let h = silverman_bandwidth(&v, weights);
            Ok((v, h))
        })
        .collect::<Result<_>>()?;

    let (lo, hi) = projections
        .iter()
        .map(|(v, _)| min_max(v))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| {
            (a.0.min(b.0), a.1.max(b.1))
        });
    let h_max = projections.iter().map(|p| p.1).fold(0.0, f64::max);

    if h_max == 0.0 {
        // Point mass: every column is the same spike.
        let d = estimate_density(
            &projections[0].0,
            Some(weights),
            DensityMethod::Kde,
            resolution,
        )?;
        let cols = vec![d.density().to_vec(); n_thetas];
        return Sinogram::from_columns(angles, d.grid().to_vec(), &cols, [0.0, 0.0]);
    }

    let grid = uniform_grid(lo - 3.0 * h_max, hi + 3.0 * h_max, resolution);
    let dt = grid[1] - grid[0];
    let columns: Vec<Vec<f64>> = projections
        .par_iter()
        .map(|(v, h)| {
            if *h > 0.0 {
                Ok(estimate_kde_on_grid(v, Some(weights), *h, grid.clone())?
                    .density()
                    .to_vec())
            } else {
                // Degenerate direction: all mass at one offset.
                let mut col = vec![0.0; grid.len()];
                let i = (((v[0] - grid[0]) / dt).round() as usize).min(grid.len() - 1);
                col[i] = 1.0 / dt;
                Ok(col)
            }
        })
        .collect::<Result<_>>()?;
    Sinogram::from_columns(angles, grid, &columns, [0.0, 0.0])
}

/// Two-column CSV `t,density`.
pub fn density_to_csv(d: &Density1D) -> String {
    let mut out = String::from("t,density\n");
    for (t, p) in d.grid().iter().zip(d.density()) {
        out.push_str(&format!("{t},{p}\n"));
    }
    out
}
