//! Minimal SVG writer. Every number is rounded to 6 significant digits so
//! output is stable across platforms and diff-friendly.

use std::fmt::Write;

use radon_lens::grid_radon::GridImage;

/// Shortest representation of `v` rounded to 6 significant digits.
pub fn num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    format!("{rounded}")
}

/// Five-stop viridis approximation; `u` in `[0, 1]`.
pub fn color(u: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let u = if u.is_finite() {
        u.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let pos = u * 4.0;
    let k = (pos.floor() as usize).min(3);
    let f = pos - k as f64;
    let c: Vec<u8> = (0..3)
        .map(|i| (STOPS[k][i] * (1.0 - f) + STOPS[k + 1][i] * f).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

pub const CLASS_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// A rectangular plotting area mapping data coordinates onto pixels
/// (`y` up).
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
}

impl Panel {
    pub fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x_range[0]) / (self.x_range[1] - self.x_range[0]) * self.width
    }

    pub fn py(&self, y: f64) -> f64 {
        self.top + self.height
            - (y - self.y_range[0]) / (self.y_range[1] - self.y_range[0]) * self.height
    }
}

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, s: &str) {
        let escaped = s
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="{}" font-family="sans-serif">{escaped}</text>"#,
            num(x),
            num(y),
            num(size)
        )
        .unwrap();
    }

    pub fn frame(&mut self, p: &Panel) {
        writeln!(
            self.body,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
            num(p.left),
            num(p.top),
            num(p.width),
            num(p.height)
        )
        .unwrap();
    }

    pub fn image(&mut self, p: &Panel, img: &GridImage, max_cells: usize) {
        self.heatmap(p, img.values(), img.height(), img.width(), max_cells);
    }

    /// Filled cells for a row-major `h x w` array (row 0 at the bottom),
    /// block-averaged down to at most `max_cells` per axis. The colour scale
    /// spans the averaged range.
    pub fn heatmap(&mut self, p: &Panel, values: &[f64], h: usize, w: usize, max_cells: usize) {
        let by = h.div_ceil(max_cells).max(1);
        let bx = w.div_ceil(max_cells).max(1);
        let (ny, nx) = (h.div_ceil(by), w.div_ceil(bx));
        let mut cells = vec![0.0; ny * nx];
        for ci in 0..ny {
            for cj in 0..nx {
                let (mut s, mut n) = (0.0, 0.0);
                for i in ci * by..((ci + 1) * by).min(h) {
                    for j in cj * bx..((cj + 1) * bx).min(w) {
                        s += values[i * w + j];
                        n += 1.0;
                    }
                }
                cells[ci * nx + cj] = s / n;
            }
        }
        let (lo, hi) = cells
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(*v), b.max(*v))
            });
        let span = if hi > lo { hi - lo } else { 1.0 };
        let cw = p.width / nx as f64;
        let ch = p.height / ny as f64;
        writeln!(self.body, r#"<g shape-rendering="crispEdges">"#).unwrap();
        for ci in 0..ny {
            for cj in 0..nx {
                let v = cells[ci * nx + cj];
                writeln!(
                    self.body,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                    num(p.left + cj as f64 * cw),
                    num(p.top + p.height - (ci + 1) as f64 * ch),
                    num(cw + 0.5),
                    num(ch + 0.5),
                    color((v - lo) / span)
                )
                .unwrap();
            }
        }
        writeln!(self.body, "</g>").unwrap();
    }

    pub fn polyline(&mut self, p: &Panel, points: &[[f64; 2]], stroke: &str, width: f64) {
        if points.len() < 2 {
            return;
        }
        let coords: Vec<String> = points
            .iter()
            .map(|q| format!("{},{}", num(p.px(q[0])), num(p.py(q[1]))))
            .collect();
        writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{}"/>"#,
            coords.join(" "),
            num(width)
        )
        .unwrap();
    }

    pub fn circle(&mut self, p: &Panel, x: f64, y: f64, r: f64, fill: &str) {
        writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}"/>"#,
            num(p.px(x)),
            num(p.py(y)),
            num(r)
        )
        .unwrap();
    }

    pub fn scatter(&mut self, p: &Panel, points: &[Vec<f64>], labels: &[usize]) {
        for (q, &l) in points.iter().zip(labels) {
            if q[0] < p.x_range[0]
                || q[0] > p.x_range[1]
                || q[1] < p.y_range[0]
                || q[1] > p.y_range[1]
            {
                continue;
            }
            self.circle(p, q[0], q[1], 1.6, CLASS_COLORS[l % CLASS_COLORS.len()]);
        }
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = num(self.width),
            h = num(self.height)
        )
    }
}
