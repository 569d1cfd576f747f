//! One-dimensional density estimates on uniform grids, and Kolmogorov-Smirnov
//! distances between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel support is truncated at this many bandwidths.
const KERNEL_CUTOFF: f64 = 8.0;

/// Grid width used for the single-spike density of constant data.
const SPIKE_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    /// Gaussian kernel, Silverman bandwidth `1.06 sigma n^(-1/5)`.
    #[default]
    Kde,
    /// Freedman-Diaconis bin width `2 IQR n^(-1/3)`.
    Histogram,
}

impl std::str::FromStr for DensityMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kde" => Ok(DensityMethod::Kde),
            "histogram" | "hist" => Ok(DensityMethod::Histogram),
            _ => Err(Error::invalid(format!("unknown density method `{s}`"))),
        }
    }
}

/// Density values at uniformly spaced bin centres, normalized so that
/// `sum(density) * dt == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    grid: Vec<f64>,
    density: Vec<f64>,
    dt: f64,
    bandwidth: f64,
}

impl Density1D {
    /// Builds a density from raw nonnegative values on a uniform grid and
    /// normalizes it.
    pub fn from_values(grid: Vec<f64>, mut density: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if grid.is_empty() || grid.len() != density.len() {
            return Err(Error::invalid(
                "grid and density must be nonempty and equal length",
            ));
        }
        let dt = if grid.len() > 1 {
            (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64
        } else {
            bandwidth
        };
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::invalid("grid must be strictly increasing"));
        }
        if density.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(
                "density values must be finite and nonnegative",
            ));
        }
        let mass: f64 = density.iter().sum::<f64>() * dt;
        if mass <= 0.0 {
            return Err(Error::invalid("density has zero mass on its grid"));
        }
        density.iter_mut().for_each(|v| *v /= mass);
        Ok(Self {
            grid,
            density,
            dt,
            bandwidth,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Kernel bandwidth or histogram bin width.
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `sum(density) * dt`.
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.dt
    }

    /// Probability mass of each bin.
    pub fn masses(&self) -> Vec<f64> {
        self.density.iter().map(|d| d * self.dt).collect()
    }

    pub fn mean(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.density)
            .map(|(t, d)| t * d * self.dt)
            .sum()
    }

    /// Linear interpolation between bin centres; zero outside the grid.
    pub fn pdf(&self, t: f64) -> f64 {
        let n = self.grid.len();
        let u = (t - self.grid[0]) / self.dt;
        if u < -0.5 || u > n as f64 - 0.5 {
            return 0.0;
        }
        if n == 1 {
            return self.density[0];
        }
        let u = u.clamp(0.0, (n - 1) as f64);
        let i = (u.floor() as usize).min(n - 2);
        let f = u - i as f64;
        self.density[i] * (1.0 - f) + self.density[i + 1] * f
    }

    /// CDF treating each bin as uniform mass over `[t - dt/2, t + dt/2]`.
    pub fn cdf(&self, t: f64) -> f64 {
        let lo = self.grid[0] - 0.5 * self.dt;
        let u = (t - lo) / self.dt;
        if u <= 0.0 {
            return 0.0;
        }
        let n = self.grid.len();
        if u >= n as f64 {
            return 1.0;
        }
        let i = u.floor() as usize;
        let below: f64 = self.density[..i].iter().sum::<f64>() * self.dt;
        (below + (u - i as f64) * self.density[i] * self.dt).min(1.0)
    }

    /// Bin edges: `len() + 1` values.
    fn edges(&self) -> impl Iterator<Item = f64> + '_ {
        let lo = self.grid[0] - 0.5 * self.dt;
        (0..=self.grid.len()).map(move |i| lo + i as f64 * self.dt)
    }

    /// Sup-distance between this CDF and `reference`, evaluated at every bin
    /// edge (where the piecewise-linear CDF has its kinks).
    pub fn ks_distance_to(&self, reference: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        let mut worst: f64 = reference(self.grid[0] - 0.5 * self.dt).abs();
        for (edge, d) in self.edges().skip(1).zip(&self.density) {
            acc += d * self.dt;
            worst = worst.max((acc.min(1.0) - reference(edge)).abs());
        }
        worst
    }

    /// KS distance between two estimated densities.
    pub fn ks_distance(&self, other: &Density1D) -> f64 {
        let a = self.edges().map(|e| (e, self.cdf(e), other.cdf(e)));
        let b = other.edges().map(|e| (e, self.cdf(e), other.cdf(e)));
        a.chain(b)
            .map(|(_, x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn weighted_std(values: &[f64], weights: &[f64]) -> f64 {
    let mean: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    let var: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean).powi(2))
        .sum();
    let n = values.len() as f64;
    // Bessel correction for uniform weights.
    (var * n / (n - 1.0).max(1.0)).sqrt()
}

fn weighted_quantile(sorted: &[(f64, f64)], q: f64) -> f64 {
    let mut acc = 0.0;
    for &(v, w) in sorted {
        acc += w;
        if acc >= q {
            return v;
        }
    }
    sorted.last().map_or(0.0, |p| p.0)
}

fn validate(values: &[f64], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("cannot estimate a density from no values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values must be finite"));
    }
    match weights {
        None => Ok(vec![1.0 / values.len() as f64; values.len()]),
        Some(w) => {
            if w.len() != values.len() {
                return Err(Error::invalid("values and weights differ in length"));
            }
            let total: f64 = w.iter().sum();
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || total <= 0.0 {
                return Err(Error::invalid(
                    "weights must be nonnegative with positive sum",
                ));
            }
            Ok(w.iter().map(|x| x / total).collect())
        }
    }
}

/// Silverman's rule-of-thumb bandwidth `1.06 sigma n^(-1/5)`.
pub fn silverman_bandwidth(values: &[f64], weights: &[f64]) -> f64 {
    1.06 * weighted_std(values, weights) * (values.len() as f64).powf(-0.2)
}

fn spike(center: f64, resolution: usize) -> Result<Density1D> {
    let res = resolution.max(1) | 1;
    let w = SPIKE_WIDTH * center.abs().max(1.0);
    let mid = res / 2;
    let grid = (0..res)
        .map(|i| center + (i as f64 - mid as f64) * w)
        .collect();
    let mut density = vec![0.0; res];
    density[mid] = 1.0;
    Density1D::from_values(grid, density, w)
}

/// Estimates the density of `values` (optionally weighted) on
/// `[min - 3h, max + 3h]`, `h` being the bandwidth or bin width.
///
/// KDE evaluates on `resolution` grid points. The histogram uses the
/// Freedman-Diaconis width, widened if needed so that at most `resolution`
/// bins cover the support (and falling back to `range / resolution` when the
/// IQR is zero). Constant data yields a single-spike density centred on the
/// value.
pub fn estimate_density(
    values: &[f64],
    weights: Option<&[f64]>,
    method: DensityMethod,
    resolution: usize,
) -> Result<Density1D> {
    if resolution < 2 {
        return Err(Error::invalid("density resolution must be >= 2"));
    }
    let w = validate(values, weights)?;
    let (min, max) = min_max(values);
    if min == max {
        return spike(min, resolution);
    }
    match method {
        DensityMethod::Kde => {
            let h = silverman_bandwidth(values, &w);
            let grid = uniform_grid(min - 3.0 * h, max + 3.0 * h, resolution);
            kde_on_grid(values, &w, h, grid)
        }
        DensityMethod::Histogram => histogram(values, &w, min, max, resolution),
    }
}

/// KDE evaluated on a caller-supplied uniform grid with bandwidth `h`.
pub fn estimate_kde_on_grid(
    values: &[f64],
    weights: Option<&[f64]>,
    h: f64,
    grid: Vec<f64>,
) -> Result<Density1D> {
    let w = validate(values, weights)?;
    if h.is_nan() || h <= 0.0 {
        return Err(Error::invalid("bandwidth must be positive"));
    }
    kde_on_grid(values, &w, h, grid)
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

pub(crate) fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let dt = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * dt).collect()
}

fn kde_on_grid(values: &[f64], weights: &[f64], h: f64, grid: Vec<f64>) -> Result<Density1D> {
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .copied()
        .zip(weights.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let reach = KERNEL_CUTOFF * h;
    let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .iter()
        .map(|&t| {
            let start = pairs.partition_point(|p| p.0 < t - reach);
            pairs[start..]
                .iter()
                .take_while(|p| p.0 <= t + reach)
                .map(|&(v, w)| {
                    let u = (t - v) / h;
                    w * (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    Density1D::from_values(grid, density, h)
}

fn histogram(
    values: &[f64],
    weights: &[f64],
    min: f64,
    max: f64,
    resolution: usize,
) -> Result<Density1D> {
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .copied()
        .zip(weights.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let iqr = weighted_quantile(&pairs, 0.75) - weighted_quantile(&pairs, 0.25);
    let range = max - min;
    let mut h = 2.0 * iqr * (values.len() as f64).powf(-1.0 / 3.0);
    if h.is_nan() || h <= 0.0 {
        h = range / resolution as f64;
    }
    // range + 6h must fit in `resolution` bins of width h
    if range / h + 6.0 > resolution as f64 {
        h = range / (resolution as f64 - 6.0).max(1.0);
    }
    let lo = min - 3.0 * h;
    let n_bins = ((range + 6.0 * h) / h).ceil() as usize;
    let n_bins = n_bins.clamp(1, resolution);
    let mut counts = vec![0.0; n_bins];
    for (v, w) in pairs {
        let i = (((v - lo) / h).floor() as usize).min(n_bins - 1);
        counts[i] += w;
    }
    let grid = (0..n_bins).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let mut d = Density1D::from_values(grid, counts, h)?;
    d.dt = h;
    Ok(d)
}
