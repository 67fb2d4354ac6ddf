//! Root finding for analytic functions: bisection on real brackets,
//! argument-principle winding counts on rectangles with quad-tree
//! subdivision and Newton refinement, and Taylor coefficients from contour
//! integrals.

use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Bisection for a sign change of `f` on `[a, b]`; returns the midpoint of
/// the final bracket.
pub fn bisect(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numeric(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= xtol || m == a || m == b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]` in ℂ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn contains(&self, z: C64, slack: f64) -> bool {
        z.re >= self.x0 - slack && z.re <= self.x1 + slack && z.im >= self.y0 - slack && z.im <= self.y1 + slack
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.x0, self.y0),
            C64::new(self.x1, self.y0),
            C64::new(self.x1, self.y1),
            C64::new(self.x0, self.y1),
        ]
    }

    /// Split into four, slightly off-center so that split lines through
    /// symmetric roots are unlikely.
    fn quarters(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.x0 + fx * self.width();
        let ym = self.y0 + fy * self.height();
        [
            Rect::new(self.x0, xm, self.y0, ym),
            Rect::new(xm, self.x1, self.y0, ym),
            Rect::new(self.x0, xm, ym, self.y1),
            Rect::new(xm, self.x1, ym, self.y1),
        ]
    }
}

/// Settings for [`find_roots`].
#[derive(Debug, Clone, Copy)]
pub struct RootSearch {
    /// Boxes narrower than this are reported even without Newton
    /// convergence.
    pub min_size: f64,
    /// Newton stopping tolerance relative to `max(1, |z|)`.
    pub newton_tol: f64,
    pub max_depth: usize,
}

impl Default for RootSearch {
    fn default() -> Self {
        RootSearch {
            min_size: 1e-9,
            newton_tol: 1e-14,
            max_depth: 60,
        }
    }
}

/// A root located by the argument principle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub z: C64,
    /// Winding number of the final box (order of the zero).
    pub multiplicity: usize,
    /// Newton converged inside the box.
    pub refined: bool,
}

/// Change of `arg f` along the segment `a → b`, refining until each step
/// turns by less than `π/4`.
fn arg_change<F>(f: &F, a: C64, fa: C64, b: C64, fb: C64, depth: usize) -> Result<f64>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let d = (fb / fa).arg();
    if d.abs() < PI / 4.0 || depth == 0 {
        if depth == 0 && d.abs() >= PI / 4.0 {
            return Err(Error::Numeric(format!("argument tracking failed near {a}")));
        }
        return Ok(d);
    }
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    if fm.norm() == 0.0 || !fm.re.is_finite() || !fm.im.is_finite() {
        return Err(Error::Numeric(format!("zero or pole on contour at {m}")));
    }
    Ok(arg_change(f, a, fa, m, fm, depth - 1)? + arg_change(f, m, fm, b, fb, depth - 1)?)
}

/// Number of zeros minus poles of `f` inside `r` by the argument principle.
pub fn winding_number<F>(f: &F, r: &Rect) -> Result<i64>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let cs = r.corners();
    let mut total = 0.0;
    for i in 0..4 {
        let (a, b) = (cs[i], cs[(i + 1) % 4]);
        // Start from a few samples per edge so that a large argument swing
        // is not aliased by the first comparison.
        let n = 8;
        let pts: Vec<C64> = (0..=n).map(|k| a + (b - a) * (k as f64 / n as f64)).collect();
        let vals = pts.iter().map(|&z| f(z)).collect::<Result<Vec<_>>>()?;
        for k in 0..n {
            if vals[k].norm() == 0.0 {
                return Err(Error::Numeric(format!("zero on contour at {}", pts[k])));
            }
            total += arg_change(f, pts[k], vals[k], pts[k + 1], vals[k + 1], 40)?;
        }
    }
    let w = total / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > 0.1 {
        return Err(Error::Numeric(format!("winding number {w} is not near an integer")));
    }
    Ok(rounded as i64)
}

/// Newton iteration for a zero of multiplicity `m`.
pub fn newton<F, D>(f: &F, df: &D, mut z: C64, m: usize, tol: f64, iters: usize) -> Option<C64>
where
    F: Fn(C64) -> Result<C64>,
    D: Fn(C64) -> Result<C64>,
{
    for _ in 0..iters {
        let fz = f(z).ok()?;
        if fz.norm() == 0.0 {
            return Some(z);
        }
        let d = df(z).ok()?;
        if d.norm() == 0.0 || !d.re.is_finite() {
            return None;
        }
        let step = fz / d * m as f64;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        if step.norm() <= tol * z.norm().max(1.0) {
            return Some(z);
        }
    }
    None
}

/// All zeros of `f` inside `region`, located by winding counts on a
/// quad-tree and refined by Newton. Subtrees are searched in parallel.
pub fn find_roots<F, D>(f: &F, df: &D, region: Rect, opts: RootSearch) -> Result<Vec<Root>>
where
    F: Fn(C64) -> Result<C64> + Sync,
    D: Fn(C64) -> Result<C64> + Sync,
{
    let w = winding_number(f, &region)?;
    let mut out = search(f, df, region, w, 0, opts)?;
    out.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    Ok(out)
}

fn search<F, D>(f: &F, df: &D, r: Rect, w: i64, depth: usize, opts: RootSearch) -> Result<Vec<Root>>
where
    F: Fn(C64) -> Result<C64> + Sync,
    D: Fn(C64) -> Result<C64> + Sync,
{
    if w <= 0 {
        if w < 0 {
            return Err(Error::Numeric(format!("negative winding number in {r:?}: f has poles")));
        }
        return Ok(vec![]);
    }
    let small = r.width().max(r.height()) <= opts.min_size * r.center().norm().max(1.0);
    if w == 1 || small || depth >= opts.max_depth {
        let m = w as usize;
        if let Some(z) = newton(f, df, r.center(), m, opts.newton_tol, 100) {
            if r.contains(z, 1e-12 * z.norm().max(1.0)) {
                return Ok(vec![Root { z, multiplicity: m, refined: true }]);
            }
        }
        if small || depth >= opts.max_depth {
            return Ok(vec![Root {
                z: r.center(),
                multiplicity: m,
                refined: false,
            }]);
        }
    }
    let mut split = None;
    for (fx, fy) in [(0.5117, 0.4893), (0.4711, 0.5309), (0.5533, 0.4429)] {
        let qs = r.quarters(fx, fy);
        if let Ok(ws) = qs.par_iter().map(|q| winding_number(f, q)).collect::<Result<Vec<_>>>() {
            if ws.iter().sum::<i64>() == w {
                split = Some((qs, ws));
                break;
            }
        }
    }
    let Some((qs, ws)) = split else {
        return Err(Error::Numeric(format!("could not subdivide {r:?} consistently")));
    };
    let parts = qs
        .par_iter()
        .zip(ws.par_iter())
        .map(|(q, &wq)| search(f, df, *q, wq, depth + 1, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Taylor coefficients `c_0..c_n` of `f` around `z0` from the trapezoidal
/// rule on the circle of radius `r`; also returns `max |f|` on the circle.
pub fn taylor_coefficients(f: impl Fn(C64) -> Result<C64>, z0: C64, r: f64, n: usize, samples: usize) -> Result<(Vec<C64>, f64)> {
    let vals = (0..samples)
        .map(|k| {
            let th = 2.0 * PI * (k as f64 + 0.5) / samples as f64;
            f(z0 + C64::from_polar(r, th)).map(|v| (th, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let fmax = vals.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    let coeffs = (0..=n)
        .map(|j| {
            let s: C64 = vals.iter().map(|&(th, v)| v * C64::from_polar(1.0, -(j as f64) * th)).sum();
            s / (samples as f64 * r.powi(j as i32))
        })
        .collect();
    Ok((coeffs, fmax))
}

/// Order of the zero of `f` at `z0` (0 if `f(z0) ≠ 0`), read from contour
/// Taylor coefficients; coefficients below `rel · max|f|` count as zero.
/// Returns `None` if all `n + 1` coefficients vanish.
pub fn zero_order(f: impl Fn(C64) -> Result<C64>, z0: C64, r: f64, n: usize, rel: f64) -> Result<Option<usize>> {
    let (c, fmax) = taylor_coefficients(f, z0, r, n, 128.max(4 * n))?;
    Ok(c.iter().enumerate().position(|(j, cj)| cj.norm() * r.powi(j as i32) > rel * fmax))
}
