//! Walking a point across a decision boundary by following the gradient of
//! the classifier output.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::seeded_rng;
use crate::defining_fn::Surface;
use crate::error::{check_dim, Error, Result};

pub const DEFAULT_GAMMA: f64 = 0.01;
pub const DEFAULT_MAX_STEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Ascend,
    Descend,
}

impl Direction {
    /// The direction that moves a point with output `value` towards the
    /// other class.
    pub fn toward_boundary(value: f64, threshold: f64) -> Self {
        if value < threshold {
            Direction::Ascend
        } else {
            Direction::Descend
        }
    }

    fn sign(self) -> f64 {
        match self {
            Direction::Ascend => 1.0,
            Direction::Descend => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbConfig {
    pub gamma: f64,
    pub max_steps: usize,
    pub direction: Direction,
    /// Cap on `|x - x0|`; the step that would exceed it is shortened onto the
    /// cap sphere and the walk ends there.
    pub max_displacement: Option<f64>,
    pub threshold: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            max_steps: DEFAULT_MAX_STEPS,
            direction: Direction::Ascend,
            max_displacement: None,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Flipped,
    StepBudget,
    DisplacementCap,
    /// The gradient vanished; the walk cannot move.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `points[0]` is the start.
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub outcome: Outcome,
    pub flipped: bool,
}

impl Trajectory {
    pub fn end(&self) -> &[f64] {
        self.points.last().unwrap()
    }

    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    /// `|x_final - x_0|`.
    pub fn displacement(&self) -> f64 {
        distance(&self.points[0], self.end())
    }

    /// `step,x0,...,x{d-1},g`.
    pub fn to_csv(&self) -> String {
        let d = self.points[0].len();
        let mut out = String::from("step");
        for i in 0..d {
            out.push_str(&format!(",x{i}"));
        }
        out.push_str(",g\n");
        for (k, (p, v)) in self.points.iter().zip(&self.values).enumerate() {
            out.push_str(&k.to_string());
            for c in p {
                out.push_str(&format!(",{c}"));
            }
            out.push_str(&format!(",{v}\n"));
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Three-valued side of the decision threshold.
fn side(value: f64, threshold: f64) -> i8 {
    if value > threshold {
        1
    } else if value < threshold {
        -1
    } else {
        0
    }
}

/// `x_{n+1} = x_n +/- gamma grad g(x_n)` until the predicted side differs
/// from the starting side, the step budget runs out, or the displacement cap
/// is reached.
pub fn perturb<S: Surface + ?Sized>(g: &S, x0: &[f64], cfg: &PerturbConfig) -> Result<Trajectory> {
    check_dim(g.input_dim(), x0.len())?;
    if !(cfg.gamma > 0.0 && cfg.gamma.is_finite()) {
        return Err(Error::invalid(format!(
            "gamma must be positive, got {}",
            cfg.gamma
        )));
    }
    if let Some(eps) = cfg.max_displacement {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::invalid("displacement cap must be positive"));
        }
    }
    let v0 = g.value(x0)?;
    let start_side = side(v0, cfg.threshold);
    let mut points = vec![x0.to_vec()];
    let mut values = vec![v0];
    let mut x = x0.to_vec();
    let finish = |points, values, outcome| {
        Ok(Trajectory {
            points,
            values,
            outcome,
            flipped: outcome == Outcome::Flipped,
        })
    };

    for _ in 0..cfg.max_steps {
        let grad = g.gradient(&x)?;
        if grad.iter().all(|v| *v == 0.0) {
            return finish(points, values, Outcome::Stalled);
        }
        let step = cfg.direction.sign() * cfg.gamma;
        let mut next: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + step * gi).collect();
        let mut capped = false;
        if let Some(eps) = cfg.max_displacement {
            let r = distance(x0, &next);
            if r > eps {
                next = x0
                    .iter()
                    .zip(&next)
                    .map(|(a, b)| a + (b - a) * eps / r)
                    .collect();
                capped = true;
            }
        }
        let v = g.value(&next)?;
        points.push(next.clone());
        values.push(v);
        x = next;
        if side(v, cfg.threshold) != start_side {
            return finish(points, values, Outcome::Flipped);
        }
        if capped {
            return finish(points, values, Outcome::DisplacementCap);
        }
    }
    finish(points, values, Outcome::StepBudget)
}

/// Baseline: a straight walk of total length `length` in a uniformly random
/// direction, in `steps` equal steps, stopping at the first side change.
pub fn random_direction_walk<S: Surface + ?Sized>(
    g: &S,
    x0: &[f64],
    length: f64,
    steps: usize,
    threshold: f64,
    seed: u64,
) -> Result<Trajectory> {
    check_dim(g.input_dim(), x0.len())?;
    if steps == 0 || length.is_nan() || length < 0.0 {
        return Err(Error::invalid(
            "random walk needs steps >= 1 and length >= 0",
        ));
    }
    let mut rng = seeded_rng(seed);
    let mut u: Vec<f64> = (0..x0.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    u.iter_mut().for_each(|v| *v /= n);

    let v0 = g.value(x0)?;
    let start_side = side(v0, threshold);
    let mut points = vec![x0.to_vec()];
    let mut values = vec![v0];
    for k in 1..=steps {
        let s = length * k as f64 / steps as f64;
        let p: Vec<f64> = x0.iter().zip(&u).map(|(a, b)| a + s * b).collect();
        let v = g.value(&p)?;
        points.push(p);
        values.push(v);
        if side(v, threshold) != start_side {
            return Ok(Trajectory {
                points,
                values,
                outcome: Outcome::Flipped,
                flipped: true,
            });
        }
    }
    Ok(Trajectory {
        points,
        values,
        outcome: Outcome::StepBudget,
        flipped: false,
    })
}
