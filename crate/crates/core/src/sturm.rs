//! Titchmarsh-Weyl coefficients of `-y'' + q y` on the half-lines,
//! computed from the ODE.
//!
//! On `ℝ₊` the Neumann coefficient is `M₊(λ) = -ψ(0)/ψ'(0)` for the `L²`
//! solution `ψ` of `-y'' + qy = λy`. On `ℝ₋` the weight `sgn x = -1` turns
//! the equation into `-y'' + qy = -λy`, and reflecting `x → -x` gives
//! `M₋(λ) = -m(-λ)` with `m` the coefficient of `q(-x)` on `ℝ₊`.
//!
//! The fundamental system is never formed explicitly. The forward Riccati
//! variable `v = c'/c` of the solution with `c(0) = 1, c'(0) = 0` gives the
//! Weyl circle at `X`: radius `e^{-2 log|c(X)|}/(2|Im v(X)|)` and center
//! `-1/w(0)`, where `w = ψ'/ψ` is integrated back from `w(X) = conj v(X)`.
//! Both Riccati flows run in their stable direction and stay pole-free for
//! `Im λ ≠ 0`.

use crate::expr::RealFn;
use crate::infzone::Side;
use crate::measure::{DensityPiece, SpectralMeasure};
use crate::quad::{adaptive, extrapolate_to_zero, QuadTol};
use crate::weyl::WeylCoefficient;
use crate::{sqrt_cut_pos, Error, Result, C64};
use ode_solvers::{Dopri5, OutputType, SVector, System};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative tolerance of the Runge-Kutta steps.
pub const ODE_RTOL: f64 = 1e-10;
/// Largest truncation radius tried by [`PotentialSpec::m_numeric`].
pub const MAX_RADIUS: f64 = 4096.0;

/// Natural cubic spline through sampled points, constant outside the
/// sampled range.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Spec("a sampled potential needs at least two points".into()));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        if xs.windows(2).any(|w| !(w[1] > w[0])) || ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::Spec("samples must have strictly increasing x and finite q".into()));
        }
        let n = xs.len();
        // Second derivatives from the tridiagonal system (Thomas algorithm).
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let rhs = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                d[i] = (rhs - h0 * d[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Ok(NaturalSpline { xs, ys, m })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&t| t <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[derive(Debug, Clone)]
pub enum Potential {
    Zero,
    Expr(RealFn),
    Sampled(NaturalSpline),
}

/// Potential of `-y'' + q y`, assumed limit point at `±∞`.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub q: Potential,
}

/// Potential file: `{"q": "expr(x)"}` or `{"samples": [[x, q], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialFile {
    Expr { q: String },
    Samples { samples: Vec<(f64, f64)> },
}

impl PotentialFile {
    pub fn build(&self) -> Result<PotentialSpec> {
        match self {
            PotentialFile::Expr { q } => PotentialSpec::parse(q),
            PotentialFile::Samples { samples } => Ok(PotentialSpec {
                q: Potential::Sampled(NaturalSpline::new(samples)?),
            }),
        }
    }
}

/// `m` with the Weyl-disk radius at the final truncation radius `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MNumeric {
    pub m: C64,
    pub radius: f64,
    pub x: f64,
}

impl fmt::Display for MNumeric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (disk radius {:e} at X = {})", self.m, self.radius, self.x)
    }
}

type V3 = SVector<f64, 3>;
type V2 = SVector<f64, 2>;

/// `v' = q - μ - v²` together with `(log|c|)' = Re v`.
struct Forward<'a> {
    q: &'a dyn Fn(f64) -> f64,
    mu: C64,
}

impl System<f64, V3> for Forward<'_> {
    fn system(&self, x: f64, y: &V3, dy: &mut V3) {
        let v = C64::new(y[0], y[1]);
        let d = (self.q)(x) - self.mu - v * v;
        dy[0] = d.re;
        dy[1] = d.im;
        dy[2] = y[0];
    }
}

/// `w(X - u)` as a function of `u`: `dw/du = w² + μ - q`.
struct Backward<'a> {
    q: &'a dyn Fn(f64) -> f64,
    mu: C64,
    x_end: f64,
}

impl System<f64, V2> for Backward<'_> {
    fn system(&self, u: f64, y: &V2, dy: &mut V2) {
        let w = C64::new(y[0], y[1]);
        let d = w * w + self.mu - (self.q)(self.x_end - u);
        dy[0] = d.re;
        dy[1] = d.im;
    }
}

fn run<const D: usize, F: System<f64, SVector<f64, D>>>(
    f: F,
    a: f64,
    b: f64,
    y: SVector<f64, D>,
) -> Result<SVector<f64, D>> {
    let mut s = Dopri5::from_param(
        f,
        a,
        b,
        b - a,
        y,
        ODE_RTOL,
        1e-12,
        0.9,
        0.04,
        0.2,
        10.0,
        (b - a).min(0.5),
        (b - a).min(1e-3),
        2_000_000,
        u32::MAX,
        OutputType::Sparse,
    );
    s.integrate().map_err(|e| Error::Numeric(format!("ODE integration: {e}")))?;
    let out = s.y_out().last().copied().unwrap_or(y);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("ODE integration produced non-finite values".into()));
    }
    Ok(out)
}

/// Weyl disk of `-y'' + q y = μ y` on `[0, ∞)`, contracted until its
/// radius is at most `tol`.
fn half_line_m(q: &dyn Fn(f64) -> f64, mu: C64, tol: f64) -> Result<MNumeric> {
    if mu.im <= 0.0 {
        return Err(Error::Spec(format!("half-line m needs Im μ > 0, got {mu}")));
    }
    let k = sqrt_cut_pos(mu);
    // Radius decays like e^{-2 Im √μ X}; start near the expected scale.
    let mut x = (0.5 * (1.0 / tol.max(1e-300)).ln() / k.im).clamp(4.0, MAX_RADIUS / 2.0);
    x = x.min(64.0);
    let mut state = run(Forward { q, mu }, 0.0, x, V3::new(0.0, 0.0, 0.0))?;
    loop {
        let v = C64::new(state[0], state[1]);
        let radius = (-2.0 * state[2]).exp() / (2.0 * v.im.abs());
        if radius <= tol || x >= MAX_RADIUS {
            let w0 = run(
                Backward { q, mu, x_end: x },
                0.0,
                x,
                V2::new(v.re, -v.im),
            )?;
            let m = -1.0 / C64::new(w0[0], w0[1]);
            if radius > tol {
                return Err(Error::DiskTooLarge { radius, tol, x });
            }
            return Ok(MNumeric { m, radius, x });
        }
        let x2 = (2.0 * x).min(MAX_RADIUS);
        state = run(Forward { q, mu }, x, x2, state)?;
        x = x2;
    }
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec { q: Potential::Zero }
    }

    /// Closed-form potential as an expression in `x`.
    pub fn parse(expr: &str) -> Result<Self> {
        Ok(PotentialSpec {
            q: Potential::Expr(RealFn::parse(expr, "x")?),
        })
    }

    /// `q(x) = 6(x⁴ - 6|x|)/(|x|³ + 3)²`, whose half-line Neumann
    /// coefficients both equal [`m0`].
    pub fn critical_example() -> Self {
        PotentialSpec::parse("6*(x^4 - 6*abs(x))/(abs(x)^3 + 3)^2").expect("valid expression")
    }

    fn bound(&self) -> Box<dyn Fn(f64) -> f64 + '_> {
        match &self.q {
            Potential::Zero => Box::new(|_| 0.0),
            Potential::Expr(f) => f.bind(),
            Potential::Sampled(s) => Box::new(move |x| s.eval(x)),
        }
    }

    /// `M±(λ)` from the ODE with Weyl-disk radius at most `tol`.
    pub fn m_numeric(&self, side: Side, l: C64, tol: f64) -> Result<MNumeric> {
        if l.im == 0.0 {
            return Err(Error::Spec(format!("m_numeric needs Im λ ≠ 0, got {l}")));
        }
        if l.im < 0.0 {
            return self.m_numeric(side, l.conj(), tol).map(|r| MNumeric { m: r.m.conj(), ..r });
        }
        let q = self.bound();
        match side {
            Side::Plus => half_line_m(&*q, l, tol),
            Side::Minus => {
                // -m(-λ) = conj(-m(-conj λ)) keeps Im μ > 0
                let reflected = |x: f64| q(-x);
                let r = half_line_m(&reflected, -l.conj(), tol)?;
                Ok(MNumeric { m: -r.m.conj(), ..r })
            }
        }
    }

    /// `max_R |M±(iR) ∓ i/√(±iR)|·R` over `radii`, together with the
    /// individual deviations.
    pub fn asymptotic_check(&self, side: Side, radii: &[f64], tol: f64) -> Result<(f64, Vec<f64>)> {
        let mut devs = Vec::new();
        for &r in radii {
            let l = C64::new(0.0, r);
            let m = self.m_numeric(side, l, tol)?.m;
            let lead = side.sign() * C64::i() / sqrt_cut_pos(side.sign() * l);
            devs.push((m - lead).norm() * r);
        }
        Ok((devs.iter().cloned().fold(0.0, f64::max), devs))
    }
}

/// `m₀(λ) = λ/(1 + λ(-λ)^{1/2})` with the principal root, `(-1 + i0)^{1/2} = i`.
pub fn m0(l: C64) -> C64 {
    l / (1.0 + l * (-l).sqrt())
}

/// Spectral data of [`m0`]: an atom of mass `2/3` at `-1` and density
/// `t^{5/2}/(π(1+t³))` on `[0, ∞)`, with `C = Re m₀(i)`.
pub fn m0_weyl() -> WeylCoefficient {
    let dens = RealFn::native("t^(5/2)/(pi (1+t^3))", |t| {
        t.powf(2.5) / (std::f64::consts::PI * (1.0 + t * t * t))
    });
    let m = SpectralMeasure::new()
        .with_atom(-1.0, 2.0 / 3.0)
        .with_piece(DensityPiece::new(0.0, f64::INFINITY, dens, 2.5, 0.0, -0.5));
    WeylCoefficient::new(m, m0(C64::i()).re)
}

/// Weyl pair of the critical example: `M₊(λ) = m₀(λ)`, `M₋(λ) = -m₀(-λ)`.
pub fn m0_pair() -> (WeylCoefficient, WeylCoefficient) {
    let plus = m0_weyl();
    let reflected = SpectralMeasure::new()
        .with_atom(1.0, 2.0 / 3.0)
        .with_piece(DensityPiece::new(
            f64::NEG_INFINITY,
            0.0,
            RealFn::native("|t|^(5/2)/(pi (1+|t|^3))", |t: f64| {
                let a = t.abs();
                a.powf(2.5) / (std::f64::consts::PI * (1.0 + a * a * a))
            }),
            0.0,
            2.5,
            -0.5,
        ));
    let minus = WeylCoefficient::new(reflected, (-m0(-C64::i())).re);
    (plus, minus)
}

/// Eigenvalues of the decoupled Neumann operators of the critical example:
/// the pole of `m₀` at `-1`, reflected to `+1` on the minus side.
pub fn m0_a0_discrete(side: Side) -> Vec<f64> {
    vec![-side.sign()]
}

/// Limits of `∫₀ˣ r / ∫₀ˣ 1/p` as `x → +0` and of `∫ₓ⁰ |r| / ∫ₓ⁰ 1/p`
/// as `x → -0`; `None` when the ratio tends to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioVerdict {
    pub r_plus: Option<f64>,
    pub r_minus: Option<f64>,
}

impl RatioVerdict {
    /// Positive limits on both sides imply a nonempty resolvent set.
    pub fn certified(&self) -> bool {
        matches!((self.r_plus, self.r_minus), (Some(a), Some(b)) if a > 0.0 && b > 0.0)
    }
}

/// `∫₀¹ F(x s²) 2 x s ds = ∫₀ˣ F`; the square map removes endpoint power
/// singularities `|t|^a` with `a > -1`.
fn integral_to(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let g = |s: f64| C64::new(f(x * s * s) * 2.0 * x * s, 0.0);
    adaptive(&g, 0.0, 1.0, QuadTol::new(1e-15, 1e-13)).value.re
}

fn ratio_limit(num: &dyn Fn(f64) -> f64, den: &dyn Fn(f64) -> f64) -> Result<Option<f64>> {
    let hs: Vec<f64> = (6..=20).map(|k| 2f64.powi(-k)).collect();
    let vals: Vec<f64> = hs
        .iter()
        .map(|&h| integral_to(num, h) / integral_to(den, h))
        .collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoLimit);
    }
    let first = vals[0].abs();
    let last = vals[vals.len() - 1];
    let tail = vals.len() - 6;
    let cv: Vec<C64> = vals[tail..].iter().map(|&v| C64::new(v, 0.0)).collect();
    let (lim, err) = extrapolate_to_zero(&hs[tail..], &cv);
    let lim = lim.re;
    if err <= 1e-6 * lim.abs().max(1.0) {
        return Ok(if lim > 1e-6 { Some(lim) } else { None });
    }
    // Not settled: shrinking toward zero means no positive limit.
    if last.abs() < 0.05 * first && vals.windows(2).all(|w| w[1].abs() <= w[0].abs()) {
        return Ok(None);
    }
    Err(Error::NoLimit)
}

/// Sufficient test for `ρ(A) ≠ ∅`: positive limits `r±` of the ratios
/// of `r` against `1/p` at the turning point.
pub fn resolvent_nonempty_ratio(r: &RealFn, p: &RealFn) -> Result<RatioVerdict> {
    let r = r.bind();
    let p = p.bind();
    let inv_p = |x: f64| 1.0 / p(x);
    let plus = ratio_limit(&|x| r(x), &inv_p)?;
    let minus = ratio_limit(&|x| r(-x).abs(), &|x| 1.0 / p(-x))?;
    Ok(RatioVerdict {
        r_plus: plus,
        r_minus: minus,
    })
}
