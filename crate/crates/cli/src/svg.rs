//! Deterministic SVG 1.1 output for diagrams and amoebas. Floating point
//! appears only here, for drawing coordinates and amoeba sampling.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scattering_core::series::rational_to_f64;
use scattering_core::{Align, Point, ScatteringDiagram, TruncatedSeries, WallKind};

const SIZE: f64 = 600.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn parse(s: &str) -> Result<Bounds, String> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad bound `{x}`"))
            })
            .collect::<Result<_, _>>()?;
        let [xmin, ymin, xmax, ymax] = v.as_slice() else {
            return Err(format!("expected `xmin,ymin,xmax,ymax`, got `{s}`"));
        };
        let b = Bounds {
            xmin: *xmin,
            ymin: *ymin,
            xmax: *xmax,
            ymax: *ymax,
        };
        if !(b.xmin < b.xmax && b.ymin < b.ymax)
            || [b.xmin, b.ymin, b.xmax, b.ymax]
                .iter()
                .any(|x| !x.is_finite())
        {
            return Err(format!("bounds `{s}` are not a nonempty box"));
        }
        Ok(b)
    }

    /// A box around the given points with a margin, at least `[-4, 4]^2`.
    pub fn around(points: &[(f64, f64)]) -> Bounds {
        let mut b = Bounds {
            xmin: -4.0,
            ymin: -4.0,
            xmax: 4.0,
            ymax: 4.0,
        };
        for &(x, y) in points {
            b.xmin = b.xmin.min(x - 3.0);
            b.xmax = b.xmax.max(x + 3.0);
            b.ymin = b.ymin.min(y - 3.0);
            b.ymax = b.ymax.max(y + 3.0);
        }
        b
    }

    fn scale(self) -> f64 {
        SIZE / (self.xmax - self.xmin).max(self.ymax - self.ymin)
    }

    fn to_px(self, x: f64, y: f64) -> (f64, f64) {
        let s = self.scale();
        ((x - self.xmin) * s, (self.ymax - y) * s)
    }

    fn width(self) -> f64 {
        (self.xmax - self.xmin) * self.scale()
    }

    fn height(self) -> f64 {
        (self.ymax - self.ymin) * self.scale()
    }
}

fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header(b: &Bounds, title: &str) -> String {
    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(b.width()),
        num(b.height()),
        num(b.width()),
        num(b.height())
    )
    .unwrap();
    writeln!(out, "<title>{}</title>", escape(title)).unwrap();
    writeln!(
        out,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        num(b.width()),
        num(b.height())
    )
    .unwrap();
    out
}

/// Clips `base + s d`, `s` in `[lo, ∞)` (or all of `R` when `lo` is `None`)
/// to the box; returns the visible segment.
fn clip(
    b: &Bounds,
    base: (f64, f64),
    d: (f64, f64),
    lo: Option<f64>,
) -> Option<((f64, f64), (f64, f64))> {
    let mut s0 = lo.unwrap_or(f64::NEG_INFINITY);
    let mut s1 = f64::INFINITY;
    for (p, dp, min, max) in [(base.0, d.0, b.xmin, b.xmax), (base.1, d.1, b.ymin, b.ymax)] {
        if dp == 0.0 {
            if p < min || p > max {
                return None;
            }
        } else {
            let (a, c) = ((min - p) / dp, (max - p) / dp);
            s0 = s0.max(a.min(c));
            s1 = s1.min(a.max(c));
        }
    }
    if s0 > s1 {
        return None;
    }
    Some((
        (base.0 + s0 * d.0, base.1 + s0 * d.1),
        (base.0 + s1 * d.0, base.1 + s1 * d.1),
    ))
}

/// Chamber shading: each cell of a coarse grid is tinted by which side of
/// every wall its centre lies on.
fn shade_chambers(out: &mut String, d: &ScatteringDiagram, b: &Bounds) {
    const CELLS: usize = 48;
    let walls: Vec<_> = d.walls().iter().filter(|w| !w.is_trivial()).collect();
    let dx = (b.xmax - b.xmin) / CELLS as f64;
    let dy = (b.ymax - b.ymin) / CELLS as f64;
    writeln!(
        out,
        r#"<g id="chambers" stroke="none" fill-opacity="0.18">"#
    )
    .unwrap();
    for i in 0..CELLS {
        for j in 0..CELLS {
            let (x, y) = (
                b.xmin + (i as f64 + 0.5) * dx,
                b.ymin + (j as f64 + 0.5) * dy,
            );
            let mut h: u64 = 1469598103934665603;
            for w in &walls {
                let (bx, by) = w.base().to_f64();
                let m = w.direction();
                let side = (x - bx) * (-m.b as f64) + (y - by) * (m.a as f64);
                let along = (x - bx) * m.a as f64 + (y - by) * m.b as f64;
                let bit = match w.kind() {
                    WallKind::Line => (side > 0.0) as u64,
                    WallKind::Ray => (side > 0.0) as u64 + 2 * (along > 0.0) as u64,
                };
                h = (h ^ bit).wrapping_mul(1099511628211);
            }
            let hue = h % 360;
            let (px, py) = b.to_px(x - dx / 2.0, y + dy / 2.0);
            writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="hsl({hue},70%,60%)"/>"#,
                num(px),
                num(py),
                num(dx * b.scale()),
                num(dy * b.scale())
            )
            .unwrap();
        }
    }
    writeln!(out, "</g>").unwrap();
}

pub fn diagram_svg(d: &ScatteringDiagram, bounds: Option<Bounds>, title: &str) -> String {
    let mut pts: Vec<(f64, f64)> = d.walls().iter().map(|w| w.base().to_f64()).collect();
    pts.extend(d.excluded().iter().map(Point::to_f64));
    let b = bounds.unwrap_or_else(|| Bounds::around(&pts));
    let mut out = header(&b, title);
    shade_chambers(&mut out, d, &b);
    writeln!(out, r#"<g id="walls" stroke-width="1.5" fill="none">"#).unwrap();
    for (i, w) in d.walls().iter().enumerate() {
        let base = w.base().to_f64();
        let m = w.direction();
        let dir = (m.a as f64, m.b as f64);
        let lo = match w.kind() {
            WallKind::Line => None,
            WallKind::Ray => Some(0.0),
        };
        let Some((p0, p1)) = clip(&b, base, dir, lo) else {
            continue;
        };
        let (x0, y0) = b.to_px(p0.0, p0.1);
        let (x1, y1) = b.to_px(p1.0, p1.1);
        let colour = match (w.kind(), w.align()) {
            (WallKind::Line, _) => "black",
            (WallKind::Ray, Align::Outgoing) => "#1f4fbf",
            (WallKind::Ray, Align::Incoming) => "#bf3f1f",
        };
        writeln!(
            out,
            r#"<line id="wall{i}" class="{}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{colour}"/>"#,
            match w.kind() {
                WallKind::Line => "line",
                WallKind::Ray => "ray",
            },
            num(x0),
            num(y0),
            num(x1),
            num(y1)
        )
        .unwrap();
        let (lx, ly) = ((x0 * 0.3 + x1 * 0.7), (y0 * 0.3 + y1 * 0.7));
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="9" font-family="monospace" fill="{colour}">{}</text>"#,
            num(lx),
            num(ly - 3.0),
            escape(&w.function().to_string())
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    writeln!(out, r#"<g id="marked-points">"#).unwrap();
    for p in d.excluded() {
        let (x, y) = p.to_f64();
        let (px, py) = b.to_px(x, y);
        writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="4" fill="black"/>"#,
            num(px),
            num(py)
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" font-family="monospace">P({})</text>"#,
            num(px + 6.0),
            num(py - 6.0),
            escape(&p.to_string())
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    out.push_str("</svg>\n");
    out
}

/// Complex roots of `Σ c_k x^k` by Durand-Kerner iteration.
fn roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let c: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    let eval = |x: Complex64| {
        c.iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, k| acc * x + k)
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for i in 0..deg {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-13 {
            break;
        }
    }
    z
}

/// Samples of `(log_t |z1|, log_t |z2|)` on the zero set of a Laurent
/// polynomial, solving for one coordinate at random points of the other.
pub fn amoeba_points(
    poly: &TruncatedSeries,
    tbase: f64,
    bounds: &Bounds,
    samples: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<((i64, i64), f64)> = poly
        .terms()
        .map(|(m, c)| ((m.m.a, m.m.b), rational_to_f64(c)))
        .collect();
    let lt = tbase.ln();
    let mut out = Vec::new();
    for k in 0..samples {
        // alternate which coordinate is sampled so every tentacle is covered
        let solve_second = k % 2 == 0;
        let (lo, hi) = if solve_second {
            (bounds.xmin, bounds.xmax)
        } else {
            (bounds.ymin, bounds.ymax)
        };
        let u: f64 = rng.gen_range(lo..hi);
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let fixed = Complex64::from_polar((u * lt).exp(), theta);
        let exps: Vec<(i64, i64, f64)> = terms
            .iter()
            .map(|&((a, b), c)| if solve_second { (a, b, c) } else { (b, a, c) })
            .collect();
        let min_free = exps.iter().map(|e| e.1).min().unwrap_or(0);
        let max_free = exps.iter().map(|e| e.1).max().unwrap_or(0);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (max_free - min_free + 1) as usize];
        for (a, b, c) in exps {
            coeffs[(b - min_free) as usize] += fixed.powi(a as i32) * c;
        }
        for r in roots(&coeffs) {
            if r.norm() == 0.0 || !r.norm().is_finite() {
                continue;
            }
            let v = r.norm().ln() / lt;
            let p = if solve_second { (u, v) } else { (v, u) };
            if p.0 >= bounds.xmin && p.0 <= bounds.xmax && p.1 >= bounds.ymin && p.1 <= bounds.ymax
            {
                out.push(p);
            }
        }
    }
    out
}

pub fn amoeba_svg(
    poly: &TruncatedSeries,
    tbase: f64,
    bounds: &Bounds,
    samples: usize,
    seed: u64,
) -> String {
    let pts = amoeba_points(poly, tbase, bounds, samples, seed);
    let mut out = header(
        bounds,
        &format!("amoeba of {} at t = {tbase}", poly.to_xy_string()),
    );
    let (ax0, ay) = bounds.to_px(bounds.xmin, 0.0);
    let (ax1, _) = bounds.to_px(bounds.xmax, 0.0);
    let (bx, by0) = bounds.to_px(0.0, bounds.ymin);
    let (_, by1) = bounds.to_px(0.0, bounds.ymax);
    writeln!(
        out,
        r##"<g id="axes" stroke="#999999" stroke-width="0.5">"##
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        num(ax0),
        num(ay),
        num(ax1),
        num(ay)
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
        num(bx),
        num(by0),
        num(bx),
        num(by1)
    )
    .unwrap();
    writeln!(out, "</g>").unwrap();
    writeln!(
        out,
        r##"<g id="amoeba" fill="#1f4fbf" fill-opacity="0.5">"##
    )
    .unwrap();
    for (x, y) in pts {
        let (px, py) = bounds.to_px(x, y);
        writeln!(out, r#"<circle cx="{}" cy="{}" r="1"/>"#, num(px), num(py)).unwrap();
    }
    writeln!(out, "</g>").unwrap();
    out.push_str("</svg>\n");
    out
}
