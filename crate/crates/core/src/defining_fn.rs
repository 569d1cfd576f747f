//! Defining functions `g(x, theta)` whose level sets `{x : g(x, theta) = t}`
//! are the integration hypersurfaces of a generalized Radon transform.
//!
//! Four families are provided:
//!
//! - [`Linear`]: `theta . x`, the classical Radon transform.
//! - [`Circular`]: `|x - r theta|`, integration over spheres centred at `r theta`.
//! - [`HomogeneousPoly`]: `sum_{|alpha| = m} theta_alpha x^alpha` for odd `m`.
//! - [`MlpModel`]: the scalar output of a multi-layer perceptron.
//!
//! A defining function should be smooth, homogeneous of degree one in
//! `theta`, have a non-vanishing `x`-gradient and a positive mixed Hessian
//! determinant. Degree-one homogeneity can be checked per instance with
//! [`check_homogeneity`] for the families that are linear in `theta`. The
//! mixed-Hessian condition is a property of a family rather than an instance
//! and is not checked at runtime. Circular and MLP defining functions are not
//! homogeneous in their parameters; MLPs are accepted regardless.
//!
//! # JSON
//!
//! Serialized with an internal `kind` tag:
//!
//! ```json
//! {"kind": "linear", "theta": [0.6, 0.8]}
//! {"kind": "circular", "theta": [0.0, 1.0], "radius": 1.0}
//! {"kind": "homogeneous_poly", "dim": 2, "degree": 1,
//!  "coeffs": [0.6, 0.8], "index_table": [[1, 0], [0, 1]]}
//! {"kind": "mlp", "model": { ...MlpModel JSON... }}
//! ```
//!
//! `index_table` must list every multi-index of the declared degree in
//! graded lexicographic order (see [`enumerate_multi_indices`]); `coeffs[i]`
//! multiplies the monomial `x^index_table[i]`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::nn::MlpModel;

/// Parameters must have unit norm to within this tolerance unless the
/// constructor is asked to normalize them.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// A scalar field on `R^d` with an `x`-gradient.
pub trait Surface: Sync {
    fn input_dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Exponent vector `alpha`; its degree is `|alpha| = sum alpha_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `x^alpha = prod x_i^alpha_i`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }
}

/// Every `alpha` in `N^d` with `|alpha| = m`, in graded lexicographic order:
/// the first exponent descends fastest, so `(d=2, m=2)` yields
/// `[(2,0), (1,1), (0,2)]`. The count is `C(d + m - 1, m)`.
pub fn enumerate_multi_indices(d: usize, m: u32) -> Result<Vec<MultiIndex>> {
    if d == 0 || m == 0 {
        return Err(Error::invalid(format!(
            "multi-indices need d >= 1 and m >= 1, got d={d}, m={m}"
        )));
    }
    fn fill(prefix: &mut Vec<u32>, remaining: u32, slots: usize, out: &mut Vec<MultiIndex>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for a in (0..=remaining).rev() {
            prefix.push(a);
            fill(prefix, remaining - a, slots - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(multi_index_count(d, m));
    fill(&mut Vec::with_capacity(d), m, d, &mut out);
    Ok(out)
}

/// `C(d + m - 1, m)`.
pub fn multi_index_count(d: usize, m: u32) -> usize {
    let m = m as usize;
    let mut c: usize = 1;
    for i in 1..=m {
        c = c * (d + i - 1) / i;
    }
    c
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit_vector(theta: Vec<f64>, normalize: bool, what: &str) -> Result<Vec<f64>> {
    if theta.is_empty() {
        return Err(Error::invalid(format!("{what} must be nonempty")));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} must be finite")));
    }
    let n = norm(&theta);
    if n == 0.0 {
        return Err(Error::invalid(format!("{what} must be nonzero")));
    }
    if normalize {
        Ok(theta.into_iter().map(|v| v / n).collect())
    } else if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
        Err(Error::invalid(format!(
            "{what} has norm {n}, expected 1 (pass normalize=true to rescale)"
        )))
    } else {
        Ok(theta)
    }
}

/// `g(x, theta) = theta . x` with `|theta| = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinearJson")]
pub struct Linear {
    theta: Vec<f64>,
}

#[derive(Deserialize)]
struct LinearJson {
    theta: Vec<f64>,
}

impl TryFrom<LinearJson> for Linear {
    type Error = Error;
    fn try_from(raw: LinearJson) -> Result<Self> {
        Linear::new(raw.theta, false)
    }
}

impl Linear {
    pub fn new(theta: Vec<f64>, normalize: bool) -> Result<Self> {
        Ok(Self {
            theta: unit_vector(theta, normalize, "theta")?,
        })
    }

    /// `(cos phi, sin phi)`.
    pub fn from_angle(phi: f64) -> Self {
        Self {
            theta: vec![phi.cos(), phi.sin()],
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

/// `g(x, theta) = |x - r theta|` with `|theta| = 1` and a fixed radius `r >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircularJson")]
pub struct Circular {
    theta: Vec<f64>,
    radius: f64,
}

#[derive(Deserialize)]
struct CircularJson {
    theta: Vec<f64>,
    #[serde(default = "default_radius")]
    radius: f64,
}

fn default_radius() -> f64 {
    Circular::DEFAULT_RADIUS
}

impl TryFrom<CircularJson> for Circular {
    type Error = Error;
    fn try_from(raw: CircularJson) -> Result<Self> {
        Circular::new(raw.theta, raw.radius, false)
    }
}

impl Circular {
    pub const DEFAULT_RADIUS: f64 = 1.0;

    pub fn new(theta: Vec<f64>, radius: f64, normalize: bool) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("radius must be >= 0, got {radius}")));
        }
        Ok(Self {
            theta: unit_vector(theta, normalize, "theta")?,
            radius,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The sphere centre `r theta`.
    pub fn center(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t * self.radius).collect()
    }
}

/// `g(x, theta) = sum_alpha theta_alpha x^alpha` over all `|alpha| = m`, `m`
/// odd, with the coefficient vector on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyJson")]
pub struct HomogeneousPoly {
    dim: usize,
    degree: u32,
    coeffs: Vec<f64>,
    index_table: Vec<MultiIndex>,
}

#[derive(Deserialize)]
struct PolyJson {
    dim: usize,
    degree: u32,
    coeffs: Vec<f64>,
    #[serde(default)]
    index_table: Option<Vec<MultiIndex>>,
}

impl TryFrom<PolyJson> for HomogeneousPoly {
    type Error = Error;
    fn try_from(raw: PolyJson) -> Result<Self> {
        let poly = HomogeneousPoly::new(raw.dim, raw.degree, raw.coeffs, false)?;
        if let Some(table) = raw.index_table {
            if table != poly.index_table {
                return Err(Error::invalid(
                    "index_table is not the graded lexicographic enumeration",
                ));
            }
        }
        Ok(poly)
    }
}

impl HomogeneousPoly {
    pub fn new(dim: usize, degree: u32, coeffs: Vec<f64>, normalize: bool) -> Result<Self> {
        if degree.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "homogeneous polynomial degree must be odd, got {degree}"
            )));
        }
        let index_table = enumerate_multi_indices(dim, degree)?;
        if coeffs.len() != index_table.len() {
            return Err(Error::invalid(format!(
                "degree {degree} in {dim} variables needs {} coefficients, got {}",
                index_table.len(),
                coeffs.len()
            )));
        }
        Ok(Self {
            dim,
            degree,
            coeffs: unit_vector(coeffs, normalize, "coeffs")?,
            index_table,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn index_table(&self) -> &[MultiIndex] {
        &self.index_table
    }

    fn eval_with(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        coeffs
            .iter()
            .zip(&self.index_table)
            .map(|(c, a)| c * a.monomial(x))
            .sum()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (c, alpha) in self.coeffs.iter().zip(&self.index_table) {
            let e = alpha.exponents();
            for (j, gj) in g.iter_mut().enumerate() {
                if e[j] == 0 {
                    continue;
                }
                let mut term = c * e[j] as f64;
                for (i, (&ei, &xi)) in e.iter().zip(x).enumerate() {
                    let p = if i == j { ei - 1 } else { ei };
                    term *= xi.powi(p as i32);
                }
                *gj += term;
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefiningFunction {
    Linear(Linear),
    Circular(Circular),
    HomogeneousPoly(HomogeneousPoly),
    Mlp { model: MlpModel },
}

impl DefiningFunction {
    pub fn variant_name(&self) -> &'static str {
        match self {
            DefiningFunction::Linear(_) => "linear",
            DefiningFunction::Circular(_) => "circular",
            DefiningFunction::HomogeneousPoly(_) => "homogeneous_poly",
            DefiningFunction::Mlp { .. } => "mlp",
        }
    }

    /// Short human-readable identifier for the parameter set.
    pub fn describe(&self) -> String {
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.4}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            DefiningFunction::Linear(l) => format!("linear[{}]", fmt(&l.theta)),
            DefiningFunction::Circular(c) => {
                format!("circular[{}; r={}]", fmt(&c.theta), c.radius)
            }
            DefiningFunction::HomogeneousPoly(p) => {
                format!("poly[d={}, m={}]", p.dim, p.degree)
            }
            DefiningFunction::Mlp { model } => format!("mlp{:?}", model.widths()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DefiningFunction::Linear(l) => l.theta.len(),
            DefiningFunction::Circular(c) => c.theta.len(),
            DefiningFunction::HomogeneousPoly(p) => p.dim,
            DefiningFunction::Mlp { model } => model.input_dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            DefiningFunction::Linear(l) => dot(&l.theta, x),
            DefiningFunction::Circular(c) => x
                .iter()
                .zip(&c.theta)
                .map(|(xi, ti)| (xi - c.radius * ti).powi(2))
                .sum::<f64>()
                .sqrt(),
            DefiningFunction::HomogeneousPoly(p) => p.eval_with(&p.coeffs, x),
            DefiningFunction::Mlp { model } => return model.forward(x),
        })
    }

    /// Analytic `d g / d x`. The circular gradient is undefined at the centre.
    pub fn grad_x(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            DefiningFunction::Linear(l) => l.theta.clone(),
            DefiningFunction::Circular(c) => {
                let diff: Vec<f64> = x
                    .iter()
                    .zip(&c.theta)
                    .map(|(xi, ti)| xi - c.radius * ti)
                    .collect();
                let n = norm(&diff);
                if n == 0.0 {
                    return Err(Error::SingularPoint(x.to_vec()));
                }
                diff.into_iter().map(|v| v / n).collect()
            }
            DefiningFunction::HomogeneousPoly(p) => p.grad(x),
            DefiningFunction::Mlp { model } => return model.grad_input(x),
        })
    }

    /// Flat parameter vector: `theta` (linear, circular), the coefficients
    /// (polynomial) or all weights (MLP). The circular radius is a fixed
    /// hyperparameter and not included.
    pub fn params(&self) -> Vec<f64> {
        match self {
            DefiningFunction::Linear(l) => l.theta.clone(),
            DefiningFunction::Circular(c) => c.theta.clone(),
            DefiningFunction::HomogeneousPoly(p) => p.coeffs.clone(),
            DefiningFunction::Mlp { model } => model.params(),
        }
    }

    /// `d g / d params` in the layout of [`DefiningFunction::params`].
    pub fn grad_params(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            DefiningFunction::Linear(_) => x.to_vec(),
            DefiningFunction::Circular(c) => {
                let diff: Vec<f64> = x
                    .iter()
                    .zip(&c.theta)
                    .map(|(xi, ti)| xi - c.radius * ti)
                    .collect();
                let n = norm(&diff);
                if n == 0.0 {
                    return Err(Error::SingularPoint(x.to_vec()));
                }
                diff.into_iter().map(|v| -c.radius * v / n).collect()
            }
            DefiningFunction::HomogeneousPoly(p) => {
                p.index_table.iter().map(|a| a.monomial(x)).collect()
            }
            DefiningFunction::Mlp { model } => model.grad_params(x, 1.0)?.concat(),
        })
    }

    /// Replaces the parameters and projects them back onto the family's
    /// parameter set: the unit sphere for linear, circular and polynomial
    /// families, unit rows for row-normalized MLPs.
    pub fn set_params_projected(&mut self, params: &[f64]) -> Result<()> {
        check_dim(self.params().len(), params.len())?;
        match self {
            DefiningFunction::Linear(l) => l.theta = unit_vector(params.to_vec(), true, "theta")?,
            DefiningFunction::Circular(c) => c.theta = unit_vector(params.to_vec(), true, "theta")?,
            DefiningFunction::HomogeneousPoly(p) => {
                p.coeffs = unit_vector(params.to_vec(), true, "coeffs")?
            }
            DefiningFunction::Mlp { model } => {
                model.set_params(params)?;
                if model.row_normalized() {
                    model.normalize_rows();
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Surface for DefiningFunction {
    fn input_dim(&self) -> usize {
        self.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        self.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.grad_x(x)
    }
}

/// `|g(x, lambda theta) - lambda g(x, theta)|` for the families that are
/// linear in their parameters. Callers compare the residual against zero.
pub fn check_homogeneity(g: &DefiningFunction, x: &[f64], lambda: f64) -> Result<f64> {
    check_dim(g.dim(), x.len())?;
    match g {
        DefiningFunction::Linear(l) => {
            let scaled: Vec<f64> = l.theta.iter().map(|t| lambda * t).collect();
            Ok((dot(&scaled, x) - lambda * dot(&l.theta, x)).abs())
        }
        DefiningFunction::HomogeneousPoly(p) => {
            let scaled: Vec<f64> = p.coeffs.iter().map(|c| lambda * c).collect();
            Ok((p.eval_with(&scaled, x) - lambda * p.eval_with(&p.coeffs, x)).abs())
        }
        other => Err(Error::UnsupportedVariant {
            operation: "check_homogeneity",
            variant: other.variant_name(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::seeded_rng;
    use crate::nn::Activation;
    use rand::Rng;

    /// Independent count: scan the whole exponent grid `{0..=m}^d`.
    fn brute_force_multi_indices(d: usize, m: u32) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let base = m as usize + 1;
        for code in 0..base.pow(d as u32) {
            let mut c = code;
            let alpha: Vec<u32> = (0..d)
                .map(|_| {
                    let a = (c % base) as u32;
                    c /= base;
                    a
                })
                .collect();
            if alpha.iter().sum::<u32>() == m {
                out.push(alpha);
            }
        }
        out
    }

    #[test]
    fn multi_indices_small_cases() {
        let idx = enumerate_multi_indices(2, 1).unwrap();
        assert_eq!(
            idx,
            vec![MultiIndex::new(vec![1, 0]), MultiIndex::new(vec![0, 1])]
        );
        assert_eq!(enumerate_multi_indices(2, 5).unwrap().len(), 6);
        assert_eq!(enumerate_multi_indices(3, 3).unwrap().len(), 10);
        assert!(enumerate_multi_indices(0, 3).is_err());
        assert!(enumerate_multi_indices(2, 0).is_err());
    }

    #[test]
    fn multi_indices_match_brute_force() {
        for d in 1..=4 {
            for m in 1..=7 {
                let fast = enumerate_multi_indices(d, m).unwrap();
                let mut slow = brute_force_multi_indices(d, m);
                assert_eq!(fast.len(), slow.len(), "d={d} m={m}");
                assert_eq!(fast.len(), multi_index_count(d, m));
                // graded lex: descending lexicographic within a degree
                slow.sort_by(|a, b| b.cmp(a));
                let fast: Vec<Vec<u32>> = fast.into_iter().map(|a| a.0).collect();
                assert_eq!(fast, slow);
            }
        }
    }

    #[test]
    fn eval_examples() {
        let lin = DefiningFunction::Linear(Linear::new(vec![1.0, 0.0], false).unwrap());
        assert_eq!(lin.eval(&[1.0, 0.0]).unwrap(), 1.0);
        let circ = DefiningFunction::Circular(Circular::new(vec![0.0, 1.0], 2.0, false).unwrap());
        assert_eq!(circ.eval(&[0.0, 2.0]).unwrap(), 0.0);
        assert!(matches!(
            lin.eval(&[1.0, 2.0, 3.0]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn degree_one_poly_is_linear() {
        let mut rng = seeded_rng(2);
        let theta = vec![0.3, -1.1];
        let lin = DefiningFunction::Linear(Linear::new(theta.clone(), true).unwrap());
        let poly =
            DefiningFunction::HomogeneousPoly(HomogeneousPoly::new(2, 1, theta, true).unwrap());
        for _ in 0..1000 {
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let diff = (lin.eval(&x).unwrap() - poly.eval(&x).unwrap()).abs();
            assert!(diff <= 1e-12, "{diff}");
        }
    }

    #[test]
    fn gradient_examples() {
        let lin = DefiningFunction::Linear(Linear::new(vec![0.6, 0.8], false).unwrap());
        assert_eq!(lin.grad_x(&[7.0, -2.0]).unwrap(), vec![0.6, 0.8]);
        let circ = DefiningFunction::Circular(Circular::new(vec![0.0, 1.0], 1.0, false).unwrap());
        let g = circ.grad_x(&[2.0, 0.0]).unwrap();
        let s5 = 5f64.sqrt();
        assert!((g[0] - 2.0 / s5).abs() < 1e-15 && (g[1] + 1.0 / s5).abs() < 1e-15);
        assert!(matches!(
            circ.grad_x(&[0.0, 1.0]),
            Err(Error::SingularPoint(_))
        ));
    }

    fn fd_rel_err(g: &DefiningFunction, x: &[f64]) -> f64 {
        let h = 1e-6;
        let analytic = g.grad_x(x).unwrap();
        let fd: Vec<f64> = (0..x.len())
            .map(|i| {
                let (mut p, mut m) = (x.to_vec(), x.to_vec());
                p[i] += h;
                m[i] -= h;
                (g.eval(&p).unwrap() - g.eval(&m).unwrap()) / (2.0 * h)
            })
            .collect();
        let diff = norm(
            &analytic
                .iter()
                .zip(&fd)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        diff / norm(&analytic).max(norm(&fd)).max(1e-8)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = seeded_rng(21);
        let rand_vec = |n: usize, rng: &mut crate::dataset::CrateRng| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-1.5..1.5)).collect()
        };
        for trial in 0..100 {
            let x = rand_vec(2, &mut rng);
            let variants = vec![
                DefiningFunction::Linear(Linear::new(rand_vec(2, &mut rng), true).unwrap()),
                DefiningFunction::Circular(
                    Circular::new(rand_vec(2, &mut rng), 0.5, true).unwrap(),
                ),
                DefiningFunction::HomogeneousPoly(
                    HomogeneousPoly::new(2, 5, rand_vec(6, &mut rng), true).unwrap(),
                ),
                DefiningFunction::Mlp {
                    model: MlpModel::random(
                        &[2, 8, 1],
                        Activation::Tanh,
                        Activation::Sigmoid,
                        trial,
                        true,
                    )
                    .unwrap(),
                },
            ];
            for g in &variants {
                let err = fd_rel_err(g, &x);
                assert!(err <= 1e-4, "{} at {x:?}: {err}", g.describe());
            }
        }
    }

    #[test]
    fn homogeneity_residuals() {
        let lin = DefiningFunction::Linear(Linear::new(vec![0.6, 0.8], false).unwrap());
        assert!(check_homogeneity(&lin, &[3.0, -1.0], 2.0).unwrap() < 1e-15);
        assert_eq!(check_homogeneity(&lin, &[3.0, -1.0], 0.0).unwrap(), 0.0);

        let poly = DefiningFunction::HomogeneousPoly(
            HomogeneousPoly::new(2, 5, vec![1.0, -2.0, 0.5, 0.3, 1.0, -0.7], true).unwrap(),
        );
        let x = [1.0, 2.0];
        let r = check_homogeneity(&poly, &x, -3.0).unwrap();
        assert!(r <= 1e-12 * poly.eval(&x).unwrap().abs(), "{r}");
        assert_eq!(check_homogeneity(&poly, &x, 0.0).unwrap(), 0.0);

        let circ = DefiningFunction::Circular(Circular::new(vec![1.0, 0.0], 1.0, false).unwrap());
        assert!(matches!(
            check_homogeneity(&circ, &x, 2.0),
            Err(Error::UnsupportedVariant { .. })
        ));
    }

    #[test]
    fn constructors_enforce_unit_norm() {
        assert!(Linear::new(vec![1.0, 1.0], false).is_err());
        assert!(Linear::new(vec![1.0, 1e-10], false).is_ok());
        let l = Linear::new(vec![3.0, 4.0], true).unwrap();
        assert_eq!(l.theta(), &[0.6, 0.8]);
        assert!(Linear::new(vec![0.0, 0.0], true).is_err());
        assert!(HomogeneousPoly::new(2, 2, vec![1.0, 0.0, 0.0], true).is_err());
        assert!(HomogeneousPoly::new(2, 3, vec![1.0, 0.0], true).is_err());
        assert!(Circular::new(vec![1.0, 0.0], -1.0, false).is_err());
    }

    #[test]
    fn json_round_trip() {
        let fns = vec![
            DefiningFunction::Linear(Linear::new(vec![0.6, 0.8], false).unwrap()),
            DefiningFunction::Circular(Circular::new(vec![0.0, 1.0], 2.0, false).unwrap()),
            DefiningFunction::HomogeneousPoly(
                HomogeneousPoly::new(2, 3, vec![1.0, 2.0, 3.0, 4.0], true).unwrap(),
            ),
            DefiningFunction::Mlp {
                model: MlpModel::random(&[2, 3, 1], Activation::Relu, Activation::Sigmoid, 0, true)
                    .unwrap(),
            },
        ];
        for g in fns {
            let back = DefiningFunction::from_json(&g.to_json().unwrap()).unwrap();
            assert_eq!(back, g);
        }
        let poly = r#"{"kind":"homogeneous_poly","dim":2,"degree":1,
            "coeffs":[0.6,0.8],"index_table":[[0,1],[1,0]]}"#;
        assert!(DefiningFunction::from_json(poly).is_err());
        let unnormalized = r#"{"kind":"linear","theta":[1.0,1.0]}"#;
        assert!(DefiningFunction::from_json(unnormalized).is_err());
    }

    #[test]
    fn param_gradients_match_finite_differences() {
        let mut rng = seeded_rng(33);
        let variants = vec![
            DefiningFunction::Linear(Linear::new(vec![0.2, 0.9], true).unwrap()),
            DefiningFunction::Circular(Circular::new(vec![0.5, -0.4], 0.8, true).unwrap()),
            DefiningFunction::HomogeneousPoly(
                HomogeneousPoly::new(2, 3, vec![0.4, -0.1, 0.7, 0.2], true).unwrap(),
            ),
        ];
        for g in variants {
            for _ in 0..20 {
                let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                let analytic = g.grad_params(&x).unwrap();
                let p = g.params();
                let raw_eval = |q: &[f64]| match &g {
                    DefiningFunction::Linear(_) => dot(q, &x),
                    DefiningFunction::Circular(c) => x
                        .iter()
                        .zip(q)
                        .map(|(xi, ti)| (xi - c.radius() * ti).powi(2))
                        .sum::<f64>()
                        .sqrt(),
                    DefiningFunction::HomogeneousPoly(poly) => poly.eval_with(q, &x),
                    DefiningFunction::Mlp { .. } => unreachable!(),
                };
                for i in 0..p.len() {
                    let (mut a, mut b) = (p.clone(), p.clone());
                    a[i] += 1e-6;
                    b[i] -= 1e-6;
                    let fd = (raw_eval(&a) - raw_eval(&b)) / 2e-6;
                    assert!((fd - analytic[i]).abs() <= 1e-6 * (1.0 + fd.abs()));
                }
            }
        }
    }
}
