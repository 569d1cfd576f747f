//! Gridded 2-D Radon transform and its inversion by filtered back-projection.
//!
//! Geometry: a [`GridImage`] samples a scalar field at pixel centres
//! `(origin_x + j dx, origin_y + i dy)` for row `i` and column `j`; outside
//! the grid the field is zero. Projections are taken about the image centre
//! `c`, with `t = (x - c) . (cos phi, sin phi)`.
//!
//! Interpolation is bilinear when sampling the image along lines and linear
//! when reading filtered projections back; the Fourier-slice diagnostic
//! interpolates the 2-D spectrum bilinearly. These choices bound the
//! achievable reconstruction accuracy.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::empirical_radon::{angle_grid, Sinogram};
use crate::error::{Error, Result};

/// A scalar field on a regular 2-D grid, stored row-major (rows along `y`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    height: usize,
    width: usize,
    origin: [f64; 2],
    spacing: [f64; 2],
    values: Vec<f64>,
}

/// Shape and placement of a grid, without values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub height: usize,
    pub width: usize,
    /// Coordinates of the centre of pixel `(0, 0)`.
    pub origin: [f64; 2],
    /// `[dx, dy]`.
    pub spacing: [f64; 2],
}

impl GridGeometry {
    /// `n x n` pixels covering `[-half_extent, half_extent]^2` centre to centre.
    pub fn square(n: usize, half_extent: f64) -> Self {
        let d = 2.0 * half_extent / (n.max(2) - 1) as f64;
        Self {
            height: n,
            width: n,
            origin: [-half_extent, -half_extent],
            spacing: [d, d],
        }
    }

    pub fn center(&self) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * (self.width - 1) as f64 * self.spacing[0],
            self.origin[1] + 0.5 * (self.height - 1) as f64 * self.spacing[1],
        ]
    }

    fn validate(&self) -> Result<()> {
        if self.height < 2 || self.width < 2 {
            return Err(Error::invalid(format!(
                "grid must be at least 2x2, got {}x{}",
                self.height, self.width
            )));
        }
        if !(self.spacing[0] > 0.0 && self.spacing[1] > 0.0)
            || self
                .origin
                .iter()
                .chain(&self.spacing)
                .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("grid spacing must be positive and finite"));
        }
        Ok(())
    }
}

impl GridImage {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.height * geometry.width {
            return Err(Error::invalid(format!(
                "{} values for a {}x{} grid",
                values.len(),
                geometry.height,
                geometry.width
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid values must be finite"));
        }
        Ok(Self {
            height: geometry.height,
            width: geometry.width,
            origin: geometry.origin,
            spacing: geometry.spacing,
            values,
        })
    }

    pub fn zeros(geometry: GridGeometry) -> Result<Self> {
        Self::new(geometry, vec![0.0; geometry.height * geometry.width])
    }

    /// Samples `f(x, y)` at every pixel centre.
    pub fn from_fn(geometry: GridGeometry, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(geometry.height * geometry.width);
        for i in 0..geometry.height {
            let y = geometry.origin[1] + i as f64 * geometry.spacing[1];
            for j in 0..geometry.width {
                values.push(f(geometry.origin[0] + j as f64 * geometry.spacing[0], y));
            }
        }
        Self::new(geometry, values)
    }

    /// Isotropic Gaussian density `N(center, sigma^2 I)` sampled on `geometry`.
    pub fn gaussian(geometry: GridGeometry, center: [f64; 2], sigma: f64) -> Result<Self> {
        let norm = 1.0 / (2.0 * PI * sigma * sigma);
        Self::from_fn(geometry, |x, y| {
            let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
            norm * (-0.5 * r2 / (sigma * sigma)).exp()
        })
    }

    pub fn geometry(&self) -> GridGeometry {
        GridGeometry {
            height: self.height,
            width: self.width,
            origin: self.origin,
            spacing: self.spacing,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.width + j]
    }

    pub fn x(&self, j: usize) -> f64 {
        self.origin[0] + j as f64 * self.spacing[0]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.origin[1] + i as f64 * self.spacing[1]
    }

    pub fn center(&self) -> [f64; 2] {
        self.geometry().center()
    }

    pub fn pixel_area(&self) -> f64 {
        self.spacing[0] * self.spacing[1]
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.pixel_area()
    }

    pub fn min_max(&self) -> (f64, f64) {
        crate::density::min_max(&self.values)
    }

    fn at_or_zero(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i >= self.height as isize || j >= self.width as isize {
            0.0
        } else {
            self.values[i as usize * self.width + j as usize]
        }
    }

    /// Bilinear interpolation; the field is zero beyond the outer pixel centres'
    /// neighbours.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let u = (x - self.origin[0]) / self.spacing[0];
        let v = (y - self.origin[1]) / self.spacing[1];
        if u <= -1.0 || v <= -1.0 || u >= self.width as f64 || v >= self.height as f64 {
            return 0.0;
        }
        let (j0, i0) = (u.floor(), v.floor());
        let (fu, fv) = (u - j0, v - i0);
        let (j0, i0) = (j0 as isize, i0 as isize);
        let a = self.at_or_zero(i0, j0);
        let b = self.at_or_zero(i0, j0 + 1);
        let c = self.at_or_zero(i0 + 1, j0);
        let d = self.at_or_zero(i0 + 1, j0 + 1);
        (a * (1.0 - fu) + b * fu) * (1.0 - fv) + (c * (1.0 - fu) + d * fu) * fv
    }

    /// Three header lines (`height,H`, `width,W`, `geometry,dx,dy,x0,y0`)
    /// followed by one CSV row per image row.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "height,{}\nwidth,{}\ngeometry,{},{},{},{}\n",
            self.height,
            self.width,
            self.spacing[0],
            self.spacing[1],
            self.origin[0],
            self.origin[1]
        );
        for row in self.values.chunks(self.width) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut header = |key: &str| -> Result<Vec<String>> {
            let (i, line) = lines.next().ok_or(Error::EmptyDataset)?;
            let cells: Vec<String> = line.split(',').map(|c| c.trim().to_owned()).collect();
            if cells.first().map(String::as_str) != Some(key) {
                return Err(Error::Parse {
                    line: i as u64 + 1,
                    message: format!("expected `{key}` header"),
                });
            }
            Ok(cells[1..].to_vec())
        };
        let parse_usize = |cells: Vec<String>, line: u64| -> Result<usize> {
            cells
                .first()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: "expected an integer".into(),
                })
        };
        let height = parse_usize(header("height")?, 1)?;
        let width = parse_usize(header("width")?, 2)?;
        let geo = header("geometry")?
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .ok()
            .filter(|g| g.len() == 4)
            .ok_or_else(|| Error::Parse {
                line: 3,
                message: "geometry needs dx,dy,x0,y0".into(),
            })?;
        let mut values = Vec::with_capacity(height * width);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let before = values.len();
            for c in line.split(',') {
                values.push(c.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: i as u64 + 1,
                    message: format!("`{c}` is not a number"),
                })?);
            }
            if values.len() - before != width {
                return Err(Error::Parse {
                    line: i as u64 + 1,
                    message: format!("expected {width} values"),
                });
            }
        }
        Self::new(
            GridGeometry {
                height,
                width,
                origin: [geo[2], geo[3]],
                spacing: [geo[0], geo[1]],
            },
            values,
        )
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// `sum_s f(c + t theta + s theta_perp) ds` over the given `s` samples.
fn line_integral(img: &GridImage, center: [f64; 2], phi: f64, t: f64, s: &[f64], ds: f64) -> f64 {
    let (sin, cos) = phi.sin_cos();
    let bx = center[0] + t * cos;
    let by = center[1] + t * sin;
    s.iter()
        .map(|&s| img.bilinear(bx - s * sin, by + s * cos))
        .sum::<f64>()
        * ds
}

fn image_diagonal(img: &GridImage) -> f64 {
    (img.width as f64 * img.spacing[0]).hypot(img.height as f64 * img.spacing[1])
}

/// Default number of offsets: one per pixel step across the diagonal.
pub fn default_n_t(img: &GridImage) -> usize {
    let step = img.spacing[0].min(img.spacing[1]);
    (image_diagonal(img) / step).ceil() as usize + 1
}

/// Line integrals at angles `phi_k = k pi / n_thetas` over `n_t` offsets
/// spanning the image diagonal. Works for any scalar field; for a density the
/// columns are its slices.
pub fn forward_radon_grid(img: &GridImage, n_thetas: usize, n_t: usize) -> Result<Sinogram> {
    if n_thetas < 2 || n_t < 2 {
        return Err(Error::invalid(format!(
            "forward Radon needs n_thetas >= 2 and n_t >= 2, got {n_thetas} and {n_t}"
        )));
    }
    forward_radon_at(img, &angle_grid(n_thetas), n_t)
}

/// Forward transform at arbitrary angles (radians).
pub fn forward_radon_at(img: &GridImage, angles: &[f64], n_t: usize) -> Result<Sinogram> {
    if angles.is_empty() || n_t < 2 {
        return Err(Error::invalid("need at least one angle and n_t >= 2"));
    }
    let diag = image_diagonal(img);
    let t: Vec<f64> = crate::density::uniform_grid(-0.5 * diag, 0.5 * diag, n_t);
    let ds = img.spacing[0].min(img.spacing[1]);
    let n_s = (diag / ds).ceil() as usize + 1;
    let s: Vec<f64> = (0..n_s)
        .map(|m| (m as f64 - 0.5 * (n_s - 1) as f64) * ds)
        .collect();
    let center = img.center();
    let columns: Vec<Vec<f64>> = angles
        .par_iter()
        .map(|&phi| {
            t.iter()
                .map(|&ti| line_integral(img, center, phi, ti, &s, ds))
                .collect()
        })
        .collect();
    Sinogram::from_columns(angles.to_vec(), t, &columns, center)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FilterWindow {
    #[default]
    None,
    /// `cos(pi omega / (2 omega_c))` roll-off up to the cutoff.
    Cosine,
}

/// How the ramp `|omega|` is discretized on the DFT grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RampKernel {
    /// The DFT of the sampled band-limited ramp kernel `h[0] = pi/2`,
    /// `h[m] = -2 / (pi m^2)` for odd `m`, zero for even `m`. It equals
    /// `|omega|` up to a small positive term near DC that accounts for the
    /// kernel's tails, which the finite DFT would otherwise drop; without it
    /// reconstructions carry a constant offset.
    #[default]
    BandLimited,
    /// `|omega|` evaluated at the DFT frequencies; removes DC exactly.
    Sampled,
}

/// Frequency response `ramp(omega)^exponent`, windowed and cut off at
/// `cutoff * Nyquist`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampFilterSpec {
    /// `d - 1`; 1 for planar data.
    pub exponent: f64,
    pub kernel: RampKernel,
    pub window: FilterWindow,
    /// Fraction of the Nyquist frequency, in `(0, 1]`.
    pub cutoff: f64,
    /// Zero-pad to the next power of two at least twice the signal length,
    /// suppressing circular wraparound. Without padding the filter acts
    /// circularly on the signal as given.
    pub pad: bool,
}

impl Default for RampFilterSpec {
    fn default() -> Self {
        Self {
            exponent: 1.0,
            kernel: RampKernel::BandLimited,
            window: FilterWindow::None,
            cutoff: 1.0,
            pad: true,
        }
    }
}

impl RampFilterSpec {
    fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff <= 1.0) {
            return Err(Error::invalid(format!(
                "ramp cutoff must be in (0, 1], got {}",
                self.cutoff
            )));
        }
        if !(self.exponent >= 0.0 && self.exponent.is_finite()) {
            return Err(Error::invalid("ramp exponent must be >= 0"));
        }
        Ok(())
    }

    /// Window and cutoff factor at `omega` radians per sample.
    pub fn window_gain(&self, omega: f64) -> f64 {
        let w = omega.abs();
        let wc = self.cutoff * PI;
        if w > wc {
            return 0.0;
        }
        match self.window {
            FilterWindow::None => 1.0,
            FilterWindow::Cosine => (0.5 * PI * w / wc).cos(),
        }
    }

    /// Gain applied to each bin of an `n`-point DFT.
    pub fn response(&self, n: usize) -> Vec<f64> {
        let omega = |k: usize| {
            let signed = if k <= n / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            };
            2.0 * PI * signed / n as f64
        };
        let ramp: Vec<f64> = match self.kernel {
            RampKernel::Sampled => (0..n).map(|k| omega(k).abs()).collect(),
            RampKernel::BandLimited => {
                let mut h: Vec<Complex64> = (0..n)
                    .map(|k| {
                        let m = if k <= n / 2 {
                            k as i64
                        } else {
                            k as i64 - n as i64
                        };
                        let v = if m == 0 {
                            0.5 * PI
                        } else if m % 2 == 0 {
                            0.0
                        } else {
                            -2.0 / (PI * (m * m) as f64)
                        };
                        Complex64::new(v, 0.0)
                    })
                    .collect();
                FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut h);
                // The kernel is real and even, so its DFT is real.
                h.iter().map(|c| c.re.max(0.0)).collect()
            }
        };
        ramp.iter()
            .enumerate()
            .map(|(k, r)| r.powf(self.exponent) * self.window_gain(omega(k)))
            .collect()
    }
}

/// Filters `signal` by multiplying its DFT with the ramp response.
pub fn apply_ramp_filter(signal: &[f64], spec: &RampFilterSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if signal.len() < 4 {
        return Err(Error::invalid("ramp filter needs at least 4 samples"));
    }
    let n = if spec.pad {
        (2 * signal.len()).next_power_of_two()
    } else {
        signal.len()
    };
    let response = spec.response(n);
    Ok(filter_with(signal, &response))
}

fn filter_with(signal: &[f64], response: &[f64]) -> Vec<f64> {
    let n = response.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = signal
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (b, r) in buf.iter_mut().zip(response) {
        *b *= r;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf[..signal.len()]
        .iter()
        .map(|c| c.re / n as f64)
        .collect()
}

fn check_uniform(values: &[f64], what: &str) -> Result<f64> {
    let step = (values[values.len() - 1] - values[0]) / (values.len() - 1) as f64;
    let tol = 1e-9 * step.abs().max(1e-300) * values.len() as f64;
    for (i, v) in values.iter().enumerate() {
        if (v - (values[0] + i as f64 * step)).abs() > tol.max(1e-12) {
            return Err(Error::invalid(format!("{what} grid is not uniform")));
        }
    }
    Ok(step)
}

/// Filtered back-projection.
///
/// Each column is ramp filtered (in physical frequency units), smeared back
/// along its angle with linear interpolation in `t`, and the sum is scaled by
/// `pi / n_thetas` and the planar inversion constant `1 / (2 pi)`. The result
/// is finally rescaled so its total mass matches the mass carried by the
/// sinogram (mean over columns of `sum_t R dt`); this fixes the otherwise
/// arbitrary angle-independent constant of the discrete filter.
///
/// The sinogram must have angles `k pi / n` and a uniform `t` grid reaching
/// every output pixel.
pub fn fbp_reconstruct(
    sino: &Sinogram,
    out: GridGeometry,
    spec: &RampFilterSpec,
) -> Result<GridImage> {
    out.validate()?;
    let n_theta = sino.n_thetas();
    let expected = angle_grid(n_theta);
    if sino
        .angles()
        .iter()
        .zip(&expected)
        .any(|(a, e)| (a - e).abs() > 1e-9)
    {
        return Err(Error::invalid(
            "sinogram angles must be uniform on [0, pi) starting at 0",
        ));
    }
    let dt = check_uniform(sino.t(), "t")?;
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::invalid("t grid must be increasing"));
    }
    let center = sino.center();
    let (t0, t_last) = (sino.t()[0], sino.t()[sino.n_t() - 1]);
    let corners = [
        (out.origin[0], out.origin[1]),
        (
            out.origin[0] + (out.width - 1) as f64 * out.spacing[0],
            out.origin[1],
        ),
        (
            out.origin[0],
            out.origin[1] + (out.height - 1) as f64 * out.spacing[1],
        ),
        (
            out.origin[0] + (out.width - 1) as f64 * out.spacing[0],
            out.origin[1] + (out.height - 1) as f64 * out.spacing[1],
        ),
    ];
    let reach = corners
        .iter()
        .map(|(x, y)| (x - center[0]).hypot(y - center[1]))
        .fold(0.0, f64::max);
    if reach > t0.abs().min(t_last.abs()) + dt {
        return Err(Error::invalid(format!(
            "output grid reaches radius {reach} but sinogram offsets only cover [{t0}, {t_last}]"
        )));
    }

    spec.validate()?;
    if sino.n_t() < 4 {
        return Err(Error::invalid("ramp filter needs at least 4 samples"));
    }
    let n_fft = if spec.pad {
        (2 * sino.n_t()).next_power_of_two()
    } else {
        sino.n_t()
    };
    let response = spec.response(n_fft);
    let filtered: Vec<Vec<f64>> = (0..n_theta)
        .into_par_iter()
        .map(|k| {
            filter_with(&sino.column(k), &response)
                .into_iter()
                .map(|v| v / dt)
                .collect()
        })
        .collect();
    let trig: Vec<(f64, f64)> = sino.angles().iter().map(|a| a.sin_cos()).collect();
    let scale = (PI / n_theta as f64) / (2.0 * PI);
    let n_t = sino.n_t();

    let rows: Vec<Vec<f64>> = (0..out.height)
        .into_par_iter()
        .map(|i| {
            let y = out.origin[1] + i as f64 * out.spacing[1] - center[1];
            (0..out.width)
                .map(|j| {
                    let x = out.origin[0] + j as f64 * out.spacing[0] - center[0];
                    let mut acc = 0.0;
                    for (q, &(sin, cos)) in filtered.iter().zip(&trig) {
                        let u = (x * cos + y * sin - t0) / dt;
                        if u < 0.0 || u > (n_t - 1) as f64 {
                            continue;
                        }
                        let k = (u.floor() as usize).min(n_t - 2);
                        let f = u - k as f64;
                        acc += q[k] * (1.0 - f) + q[k + 1] * f;
                    }
                    acc * scale
                })
                .collect()
        })
        .collect();
    let mut img = GridImage::new(out, rows.concat())?;

    let sino_mass = (0..n_theta)
        .map(|k| sino.column(k).iter().sum::<f64>() * dt)
        .sum::<f64>()
        / n_theta as f64;
    let recon_mass = img.total_mass();
    if sino_mass != 0.0 && recon_mass != 0.0 {
        let r = sino_mass / recon_mass;
        img.values.iter_mut().for_each(|v| *v *= r);
    }
    Ok(img)
}

/// Relative L1 error of `recon` against `truth` over the disk inscribed in
/// the grid (same geometry required).
pub fn relative_l1_in_disk(recon: &GridImage, truth: &GridImage) -> Result<f64> {
    if recon.geometry() != truth.geometry() {
        return Err(Error::invalid("images have different geometry"));
    }
    let c = truth.center();
    let radius = 0.5
        * ((truth.width - 1) as f64 * truth.spacing[0])
            .min((truth.height - 1) as f64 * truth.spacing[1]);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..truth.height {
        for j in 0..truth.width {
            if (truth.x(j) - c[0]).hypot(truth.y(i) - c[1]) <= radius {
                num += (recon.get(i, j) - truth.get(i, j)).abs();
                den += truth.get(i, j).abs();
            }
        }
    }
    Ok(if den == 0.0 { num } else { num / den })
}

fn fft2(data: &mut [Complex64], n: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
}

/// Normalized L2 mismatch between the 1-D Fourier transform of the
/// projection at angle `phi` and the radial line of the 2-D Fourier
/// transform at the same angle.
///
/// Both transforms are taken about the image centre on a zero-padded grid of
/// `N = next_pow2(2 max(H, W))` samples with the pixel pitch as sample step,
/// so the radial samples fall on the 2-D frequency lattice at `phi = 0`.
/// Off-axis samples are bilinearly interpolated. Returns 0 for a zero image.
/// Pixels must be square.
pub fn fourier_slice_residual(img: &GridImage, phi: f64) -> Result<f64> {
    let d = img.spacing[0];
    if (img.spacing[1] - d).abs() > 1e-12 * d {
        return Err(Error::invalid(
            "fourier slice diagnostic needs square pixels",
        ));
    }
    let n = (2 * img.width.max(img.height)).next_power_of_two();
    let nf = n as f64;
    let jc = 0.5 * (img.width - 1) as f64;
    let ic = 0.5 * (img.height - 1) as f64;
    let center = img.center();

    // 2-D spectrum about the centre.
    let mut spec2 = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..img.height {
        for j in 0..img.width {
            spec2[i * n + j] = Complex64::new(img.get(i, j), 0.0);
        }
    }
    fft2(&mut spec2, n);
    let signed = |k: usize| if k < n / 2 { k as f64 } else { k as f64 - nf };
    for l in 0..n {
        for k in 0..n {
            let phase = 2.0 * PI * (signed(k) * jc + signed(l) * ic) / nf;
            spec2[l * n + k] *= Complex64::from_polar(d * d, phase);
        }
    }
    let lattice = |k: isize, l: isize| {
        let wrap = |v: isize| v.rem_euclid(n as isize) as usize;
        spec2[wrap(l) * n + wrap(k)]
    };
    let sample2 = |u: f64, v: f64| {
        let (k0, l0) = (u.floor(), v.floor());
        let (fu, fv) = (u - k0, v - l0);
        let (k0, l0) = (k0 as isize, l0 as isize);
        (lattice(k0, l0) * (1.0 - fu) + lattice(k0 + 1, l0) * fu) * (1.0 - fv)
            + (lattice(k0, l0 + 1) * (1.0 - fu) + lattice(k0 + 1, l0 + 1) * fu) * fv
    };

    // Projection sampled so that at phi = 0 the lines pass through pixel centres.
    let ft = jc.fract();
    let fs = ic.fract();
    let t: Vec<f64> = (0..n).map(|m| (m as f64 - nf / 2.0 - ft) * d).collect();
    let s: Vec<f64> = (0..n).map(|m| (m as f64 - nf / 2.0 - fs) * d).collect();
    let mut spec1: Vec<Complex64> = t
        .iter()
        .map(|&ti| Complex64::new(line_integral(img, center, phi, ti, &s, d), 0.0))
        .collect();
    FftPlanner::<f64>::new()
        .plan_fft_forward(n)
        .process(&mut spec1);
    let (sin, cos) = phi.sin_cos();
    let (mut num, mut norm1, mut norm2) = (0.0, 0.0, 0.0);
    for (m, p) in spec1.iter().enumerate() {
        let ms = signed(m);
        if ms.abs() >= nf / 2.0 - 1.0 {
            continue;
        }
        let p = *p * Complex64::from_polar(d, 2.0 * PI * ms * (nf / 2.0 + ft) / nf);
        let f = sample2(ms * cos, ms * sin);
        num += (p - f).norm_sqr();
        norm1 += p.norm_sqr();
        norm2 += f.norm_sqr();
    }
    let denom = norm1.max(norm2).sqrt();
    Ok(if denom == 0.0 {
        0.0
    } else {
        num.sqrt() / denom
    })
}
