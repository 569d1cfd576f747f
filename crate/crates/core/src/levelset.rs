//! Level curves `{x : g(x) = t}` of planar surfaces by marching squares.
//!
//! Cells are classified with `v >= t` counting as above. Crossings are
//! placed by linear interpolation along cell edges; the two ambiguous
//! (saddle) configurations are resolved by comparing the mean of the four
//! corners against `t`: the corners on the opposite side of the mean are cut
//! off individually.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defining_fn::Surface;
use crate::error::{check_dim, Error, Result};
use crate::grid_radon::{GridGeometry, GridImage};

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Bounds {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(x_min, x_max) || !ok(y_min, y_max) {
            return Err(Error::invalid(format!(
                "invalid bounds [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x: [x_min, x_max],
            y: [y_min, y_max],
        })
    }

    /// Parses `x_min,x_max,y_min,y_max`.
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::invalid(format!("bounds `{s}` are not four numbers")))?;
        match v[..] {
            [a, b, c, d] => Self::new(a, b, c, d),
            _ => Err(Error::invalid(format!("bounds `{s}` are not four numbers"))),
        }
    }

    /// The data's bounding box widened by `margin` times its extent on each side.
    pub fn around(points: &[Vec<f64>], margin: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut b = [
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ];
        for p in points {
            check_dim(2, p.len())?;
            b[0] = b[0].min(p[0]);
            b[1] = b[1].max(p[0]);
            b[2] = b[2].min(p[1]);
            b[3] = b[3].max(p[1]);
        }
        let mx = margin * (b[1] - b[0]).max(1e-9);
        let my = margin * (b[3] - b[2]).max(1e-9);
        Self::new(b[0] - mx, b[1] + mx, b[2] - my, b[3] + my)
    }
}

/// Evaluates `g` at the nodes of a `resolution[0] x resolution[1]` grid
/// (columns along `x`, rows along `y`) spanning `bounds` inclusively.
pub fn surface_grid<S: Surface + ?Sized>(
    g: &S,
    bounds: &Bounds,
    resolution: [usize; 2],
) -> Result<GridImage> {
    check_dim(2, g.input_dim())?;
    let [nx, ny] = resolution;
    if nx < 2 || ny < 2 {
        return Err(Error::invalid(format!(
            "surface grid needs at least 2 nodes per axis, got {nx}x{ny}"
        )));
    }
    let geometry = GridGeometry {
        height: ny,
        width: nx,
        origin: [bounds.x[0], bounds.y[0]],
        spacing: [
            (bounds.x[1] - bounds.x[0]) / (nx - 1) as f64,
            (bounds.y[1] - bounds.y[0]) / (ny - 1) as f64,
        ],
    };
    let rows: Vec<Vec<f64>> = (0..ny)
        .into_par_iter()
        .map(|i| {
            let y = geometry.origin[1] + i as f64 * geometry.spacing[1];
            (0..nx)
                .map(|j| {
                    let x = geometry.origin[0] + j as f64 * geometry.spacing[0];
                    let value = g.value(&[x, y])?;
                    if value.is_finite() {
                        Ok(value)
                    } else {
                        Err(Error::Evaluation { x, y, value })
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    GridImage::new(geometry, rows.concat())
}

/// All polylines at one level. Closed curves repeat their first vertex at
/// the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub level: f64,
    pub polylines: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LevelCurveSet {
    pub levels: Vec<LevelCurve>,
}

impl LevelCurveSet {
    pub fn level_values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.level).collect()
    }

    pub fn vertices(&self) -> impl Iterator<Item = (f64, [f64; 2])> + '_ {
        self.levels
            .iter()
            .flat_map(|l| l.polylines.iter().flatten().map(move |p| (l.level, *p)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// `k` evenly spaced levels from the 2nd to the 98th percentile of the grid
/// values (linear interpolation between order statistics).
pub fn default_levels(img: &GridImage, k: usize) -> Vec<f64> {
    let mut v = img.values().to_vec();
    v.sort_by(f64::total_cmp);
    let pct = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(v.len() - 1);
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    let (a, b) = (pct(0.02), pct(0.98));
    match k {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..k)
            .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
            .collect(),
    }
}

/// A cell edge: horizontal edges join `(i, j)`-`(i, j+1)`, vertical edges
/// join `(i, j)`-`(i+1, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

pub fn marching_squares(img: &GridImage, levels: &[f64]) -> LevelCurveSet {
    LevelCurveSet {
        levels: levels
            .par_iter()
            .map(|&t| LevelCurve {
                level: t,
                polylines: contour(img, t),
            })
            .collect(),
    }
}

fn crossing(img: &GridImage, e: Edge, t: f64) -> [f64; 2] {
    let (i, j) = match e {
        Edge::H(i, j) | Edge::V(i, j) => (i, j),
    };
    let v0 = img.get(i, j);
    match e {
        Edge::H(..) => {
            let v1 = img.get(i, j + 1);
            let s = (t - v0) / (v1 - v0);
            [img.x(j) + s * (img.x(j + 1) - img.x(j)), img.y(i)]
        }
        Edge::V(..) => {
            let v1 = img.get(i + 1, j);
            let s = (t - v0) / (v1 - v0);
            [img.x(j), img.y(i) + s * (img.y(i + 1) - img.y(i))]
        }
    }
}

fn cell_segments(img: &GridImage, i: usize, j: usize, t: f64, out: &mut Vec<[Edge; 2]>) {
    let v = [
        img.get(i, j),
        img.get(i, j + 1),
        img.get(i + 1, j + 1),
        img.get(i + 1, j),
    ];
    let above = v.map(|x| x >= t);
    // Edge k joins corner k and corner k+1: bottom, right, top, left.
    let edges = [
        Edge::H(i, j),
        Edge::V(i, j + 1),
        Edge::H(i + 1, j),
        Edge::V(i, j),
    ];
    let crossed: Vec<usize> = (0..4).filter(|&k| above[k] != above[(k + 1) % 4]).collect();
    match crossed.len() {
        2 => out.push([edges[crossed[0]], edges[crossed[1]]]),
        4 => {
            let center_above = v.iter().sum::<f64>() / 4.0 >= t;
            // Corner k sits between edges k-1 and k.
            for k in 0..4 {
                if above[k] != center_above {
                    out.push([edges[(k + 3) % 4], edges[k]]);
                }
            }
        }
        _ => {}
    }
}

fn contour(img: &GridImage, t: f64) -> Vec<Vec<[f64; 2]>> {
    let (lo, hi) = img.min_max();
    if !(t >= lo && t <= hi) || lo == hi {
        return Vec::new();
    }
    let mut segments = Vec::new();
    for i in 0..img.height() - 1 {
        for j in 0..img.width() - 1 {
            cell_segments(img, i, j, t, &mut segments);
        }
    }
    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, s) in segments.iter().enumerate() {
        for e in s {
            by_edge.entry(*e).or_default().push(k);
        }
    }
    let mut used = vec![false; segments.len()];
    let next_segment = |edge: Edge, from: usize, used: &[bool]| {
        by_edge[&edge]
            .iter()
            .copied()
            .find(|&k| k != from && !used[k])
    };
    let mut chains = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut chain = std::collections::VecDeque::from([segments[start][0], segments[start][1]]);
        // Grow forwards from the second edge, then backwards from the first.
        for forward in [true, false] {
            let mut last = start;
            loop {
                let tip = if forward {
                    *chain.back().unwrap()
                } else {
                    *chain.front().unwrap()
                };
                let Some(k) = next_segment(tip, last, &used) else {
                    break;
                };
                used[k] = true;
                let [a, b] = segments[k];
                let other = if a == tip { b } else { a };
                if forward {
                    chain.push_back(other);
                } else {
                    chain.push_front(other);
                }
                last = k;
            }
        }
        let mut points: Vec<[f64; 2]> = Vec::with_capacity(chain.len());
        for p in chain.into_iter().map(|e| crossing(img, e, t)) {
            // A level passing exactly through a node yields the same vertex
            // from both edges meeting there.
            if points.last() != Some(&p) {
                points.push(p);
            }
        }
        chains.push(points);
    }
    chains
}
