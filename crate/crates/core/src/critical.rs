//! The critical point `0` of `-(sgn x/|r|) d²/dx²`.
//!
//! With `r ∈ L¹(ℝ)` the function `y₁(x) = ∫₀ˣ ∫ₛ^∞ r(t) dt ds` solves the
//! equation at `λ = 0`, so `0` is an eigenvalue. The eigenvector is neutral
//! iff `∫ r = 0`, and `0` is simple iff `∫ y₁² |r| = ∞`. When all three hold,
//! `0` is a singular critical point.
//!
//! Decisions at infinity use declared exponents `|r(x)| ~ c|x|^{α±}` as
//! `x → ±∞`, with numerical confirmation where it is cheap.

use crate::expr::RealFn;
use crate::measure::IntegralValue;
use crate::quad::{integrate_real, End, QuadTol};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

/// Constant `height` added to `r` on `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub plus: f64,
    pub minus: f64,
}

/// Weight file: `{"r": "expr(x)", "exponents": {"plus", "minus"}, "bumps": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightFile {
    pub r: String,
    #[serde(default)]
    pub exponents: Option<Exponents>,
    #[serde(default)]
    pub bumps: Vec<Bump>,
}

impl WeightFile {
    pub fn build(&self) -> Result<WeightFunction> {
        let mut w = WeightFunction::parse(&self.r, self.exponents)?;
        for b in &self.bumps {
            w = w.with_bump(*b)?;
        }
        Ok(w)
    }
}

#[derive(Debug, Clone)]
pub struct WeightFunction {
    pub r: RealFn,
    pub exponents: Option<Exponents>,
    pub bumps: Vec<Bump>,
}

/// Outcome of the `y₁`-norm test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NormVerdict {
    Divergent,
    Finite(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalVerdict {
    pub zero_is_eigenvalue: bool,
    pub eigenvector_neutral: bool,
    /// `None`: undecided.
    pub zero_simple: Option<bool>,
    /// `None`: the maximal operator is not J-self-adjoint.
    pub singular_critical_point: Option<bool>,
    pub evidence: Vec<String>,
}

fn tol() -> QuadTol {
    QuadTol::new(1e-14, 1e-13)
}

// The norm only decides finiteness and reports a value; 1e-8 is plenty.
const NORM_INNER: QuadTol = QuadTol {
    abs: 1e-12,
    rel: 1e-10,
    max_intervals: 200,
};
const NORM_OUTER: QuadTol = QuadTol {
    abs: 1e-10,
    rel: 1e-8,
    max_intervals: 400,
};

// Exponents within this of a threshold count as on it, so that α = -5/3
// rounded to f64 still sits on the boundary.
const EXP_EPS: f64 = 1e-12;

/// Half-width of the band around `-1` where a fitted exponent decides nothing.
const FIT_MARGIN: f64 = 0.1;

/// Whether `∫^∞ xᵞ dx` diverges.
fn diverges(gamma: f64) -> bool {
    gamma >= -1.0 - EXP_EPS
}

/// Exponent of `y₁² |r|` at infinity for `|r| ~ |x|^α`: `y₁ ~ |x|^{α+2}`
/// for `α > -2`, `y₁ ~ log|x|` at `α = -2` and `y₁ → const` below.
pub fn y1_norm_exponent(alpha: f64) -> f64 {
    if alpha > -2.0 {
        3.0 * alpha + 4.0
    } else {
        alpha
    }
}

impl WeightFunction {
    pub fn new(r: RealFn, exponents: Option<Exponents>) -> Self {
        WeightFunction {
            r,
            exponents,
            bumps: Vec::new(),
        }
    }

    pub fn parse(expr: &str, exponents: Option<Exponents>) -> Result<Self> {
        Ok(WeightFunction::new(RealFn::parse(expr, "x")?, exponents))
    }

    /// `sgn(x)(1+|x|)^α`.
    pub fn power(alpha: f64) -> Self {
        WeightFunction::new(
            RealFn::native(&format!("sgn(x)(1+|x|)^{alpha}"), move |x: f64| {
                if x == 0.0 {
                    0.0
                } else {
                    x.signum() * (1.0 + x.abs()).powf(alpha)
                }
            }),
            Some(Exponents {
                plus: alpha,
                minus: alpha,
            }),
        )
    }

    pub fn with_bump(mut self, b: Bump) -> Result<Self> {
        if !(b.lo < b.hi) || !b.height.is_finite() {
            return Err(Error::Spec(format!("bump ({}, {}) is empty", b.lo, b.hi)));
        }
        if b.hi.is_infinite() || b.lo.is_infinite() {
            return Err(Error::Spec("bumps must be bounded".into()));
        }
        self.bumps.push(b);
        Ok(self)
    }

    /// `r · c` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let r = self.r.clone();
        WeightFunction {
            r: RealFn::native(&format!("{c}*({})", self.r.source()), move |x| c * r.eval(x)),
            exponents: self.exponents,
            bumps: self
                .bumps
                .iter()
                .map(|b| Bump {
                    height: c * b.height,
                    ..*b
                })
                .collect(),
        }
    }

    fn bound(&self) -> impl Fn(f64) -> f64 + '_ {
        let r = self.r.bind();
        move |x: f64| {
            let mut v = r(x);
            for b in &self.bumps {
                if x > b.lo && x < b.hi {
                    v += b.height;
                }
            }
            v
        }
    }

    /// Bump edges, mirrored too so that `r(-x)` integrands see them.
    fn breaks(&self) -> Vec<f64> {
        let mut v: Vec<f64> = vec![0.0];
        for b in &self.bumps {
            v.extend([b.lo, b.hi, -b.lo, -b.hi]);
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn exps(&self) -> Result<Exponents> {
        self.exponents
            .ok_or_else(|| Error::Spec("exponents at ±∞ must be declared".into()))
    }

    /// `∫_{ℝ±} x² |r| = ∞` on both sides, i.e. `α± ≥ -3`.
    pub fn check_jsa(&self) -> Result<bool> {
        let e = self.exps()?;
        Ok(e.plus >= -3.0 - EXP_EPS && e.minus >= -3.0 - EXP_EPS)
    }

    pub fn in_l1(&self) -> Result<bool> {
        let e = self.exps()?;
        Ok(!diverges(e.plus) && !diverges(e.minus))
    }

    /// `∫_a^b r` for `a < b`, either end possibly infinite.
    fn integral(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64, decay: f64, t: QuadTol) -> f64 {
        let e = |x: f64| if x.is_infinite() { End::new(x, decay) } else { End::regular(x) };
        let br: Vec<f64> = self.breaks().into_iter().filter(|&x| x > a && x < b).collect();
        integrate_real(f, e(a), e(b), &br, 1.0, t).0
    }

    /// `∫_ℝ r`.
    pub fn total_integral(&self) -> Result<IntegralValue> {
        if !self.in_l1()? {
            return Ok(IntegralValue::Divergent);
        }
        let e = self.exps()?;
        let r = self.bound();
        let v = self.integral(&r, f64::NEG_INFINITY, 0.0, e.minus, tol())
            + self.integral(&r, 0.0, f64::INFINITY, e.plus, tol());
        Ok(IntegralValue::Finite(C64::new(v, 0.0)))
    }

    /// `y₁(x) = x·∫ₓ^∞ r + ∫₀ˣ t r(t) dt`, which equals
    /// `x·∫₀^∞ r - ∫₀ˣ (x - t) r(t) dt` without its cancellation at large `x`.
    pub fn y1_eval(&self, x: f64) -> Result<f64> {
        let ends = self.tails(tol())?;
        Ok(self.y1_with(x, ends, tol()))
    }

    /// `(∫₀^∞ r, ∫_{-∞}^0 r)`, the second `None` when divergent.
    fn tails(&self, t: QuadTol) -> Result<(f64, Option<f64>)> {
        let e = self.exps()?;
        if diverges(e.plus) {
            return Err(Error::InnerDivergent);
        }
        let r = self.bound();
        let plus = self.integral(&r, 0.0, f64::INFINITY, e.plus, t);
        let minus = (!diverges(e.minus)).then(|| self.integral(&r, f64::NEG_INFINITY, 0.0, e.minus, t));
        Ok((plus, minus))
    }

    /// `∫_a^b f` for `0 ≤ a < b < ∞`, on `t = eᵘ` beyond `max(a, 1)` so that
    /// huge `b` costs only `log b`.
    fn seg(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64, t: QuadTol) -> f64 {
        let c = a.max(1.0);
        if b <= 2.0 * c {
            return self.integral(f, a, b, 0.0, t);
        }
        let g = |u: f64| {
            let x = u.exp();
            x * f(x)
        };
        let head = if a < c { self.integral(f, a, c, 0.0, t) } else { 0.0 };
        let mut br: Vec<f64> = self.breaks().into_iter().filter(|&x| x > c && x < b).map(f64::ln).collect();
        br.sort_by(f64::total_cmp);
        head + integrate_real(&g, End::regular(c.ln()), End::regular(b.ln()), &br, 1.0, t).0
    }

    fn y1_with(&self, x: f64, (plus, minus): (f64, Option<f64>), t: QuadTol) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let r = self.bound();
        let e = self.exponents.expect("checked by tails");
        if x > 0.0 {
            let tr = |s: f64| s * r(s);
            let beyond = self.integral(&r, x, f64::INFINITY, e.plus, t);
            return x * beyond + self.seg(&tr, 0.0, x, t);
        }
        // s = -t on the left half-line
        let rm = |s: f64| r(-s);
        let trm = |s: f64| s * r(-s);
        let ax = -x;
        let moment = self.seg(&trm, 0.0, ax, t);
        match minus {
            Some(m) => {
                let below = self.integral(&rm, ax, f64::INFINITY, e.minus, t);
                x * (plus + m - below) + moment
            }
            None => x * (plus + self.seg(&rm, 0.0, ax, t)) + moment,
        }
    }

    /// `y₁² |r|` with looser tolerances, for the outer norm integrals.
    fn norm_density(&self) -> Result<impl Fn(f64) -> f64 + '_> {
        let ends = self.tails(tol())?;
        let r = self.bound();
        Ok(move |x: f64| {
            let y = self.y1_with(x, ends, NORM_INNER);
            y * y * r(x).abs()
        })
    }

    /// `∫_0^X y₁² |r|` (or over `[X, 0]` for `X < 0`).
    fn partial_norm(&self, x_end: f64) -> Result<f64> {
        let f = self.norm_density()?;
        let v = if x_end > 0.0 {
            self.integral(&f, 0.0, x_end, 0.0, NORM_OUTER)
        } else {
            self.integral(&f, x_end, 0.0, 0.0, NORM_OUTER)
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric("y₁ evaluation failed inside the norm integral".into()))
        }
    }

    /// Exponent of `y₁² |r|` fitted from partial integrals at
    /// `X ∈ {10², 10³, 10⁴}`: `log₁₀` of the ratio of successive increments
    /// estimates `γ + 1`.
    pub fn norm_growth_fit(&self, side: f64) -> Result<f64> {
        let p: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&x| self.partial_norm(side * x))
            .collect::<Result<_>>()?;
        let (d1, d2) = (p[1] - p[0], p[2] - p[1]);
        Ok((d2 / d1).log10() - 1.0)
    }

    /// `∫_ℝ y₁² |r|`, decided from the exponents and valued by quadrature
    /// when finite.
    pub fn y1_norm_divergence(&self) -> Result<NormVerdict> {
        let e = self.exps()?;
        if diverges(y1_norm_exponent(e.plus)) || diverges(y1_norm_exponent(e.minus)) {
            return Ok(NormVerdict::Divergent);
        }
        let f = self.norm_density()?;
        let v = self.integral(&f, f64::NEG_INFINITY, 0.0, y1_norm_exponent(e.minus), NORM_OUTER)
            + self.integral(&f, 0.0, f64::INFINITY, y1_norm_exponent(e.plus), NORM_OUTER);
        if !v.is_finite() {
            return Err(Error::Numeric("y₁ norm integral failed".into()));
        }
        Ok(NormVerdict::Finite(v))
    }

    /// Sign changes of `r` on a grid over `[-50, 50]`.
    fn turning_points(&self) -> usize {
        let r = self.bound();
        let xs = (0..=10_000).map(|i| -50.0 + 0.01 * i as f64 + 0.003);
        let signs: Vec<f64> = xs.map(&r).filter(|v| *v != 0.0).map(f64::signum).collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Log-slope of `|r|` between `10⁴` and `10⁶` on each side.
    pub fn estimate_exponents(&self) -> Exponents {
        let r = self.bound();
        let slope = |s: f64| (r(s * 1e6).abs().ln() - r(s * 1e4).abs().ln()) / (2.0 * std::f64::consts::LN_10);
        Exponents {
            plus: slope(1.0),
            minus: slope(-1.0),
        }
    }

    pub fn critical_verdict(&self) -> Result<CriticalVerdict> {
        let r = self.bound();
        if r(1e6) <= 0.0 || r(-1e6) >= 0.0 {
            return Err(Error::Spec("r must be positive near +∞ and negative near -∞".into()));
        }
        let declared = self.exponents.is_some();
        let w = if declared {
            self.clone()
        } else {
            WeightFunction {
                exponents: Some(self.estimate_exponents()),
                ..self.clone()
            }
        };
        let e = w.exps()?;
        let mut evidence = vec![
            format!(
                "alpha+ = {}, alpha- = {} ({})",
                e.plus,
                e.minus,
                if declared { "declared" } else { "estimated from r at 1e4..1e6" }
            ),
            format!("turning points on [-50, 50]: {}", w.turning_points()),
        ];
        if !w.check_jsa()? {
            evidence.push("∫ x²|r| < ∞ on some side: maximal operator not J-self-adjoint".into());
            return Ok(CriticalVerdict {
                zero_is_eigenvalue: false,
                eigenvector_neutral: false,
                zero_simple: None,
                singular_critical_point: None,
                evidence,
            });
        }
        let l1 = w.in_l1()?;
        evidence.push(format!("r in L1: {l1}"));
        if !l1 {
            return Ok(CriticalVerdict {
                zero_is_eigenvalue: false,
                eigenvector_neutral: false,
                zero_simple: None,
                singular_critical_point: Some(false),
                evidence,
            });
        }
        let total = w.total_integral()?.value().map_or(f64::NAN, |v| v.re);
        let neutral = total.abs() <= 1e-9;
        evidence.push(format!("∫ r = {total:e}"));

        // None: the fit cannot tell the sides of -1 apart
        let mut fit_says: Vec<Option<bool>> = Vec::new();
        for (side, a) in [(1.0, e.plus), (-1.0, e.minus)] {
            match w.norm_growth_fit(side) {
                Ok(g) => {
                    let verdict = if g > -1.0 + FIT_MARGIN {
                        Some(true)
                    } else if g < -1.0 - FIT_MARGIN {
                        Some(false)
                    } else {
                        None
                    };
                    let expected = y1_norm_exponent(a);
                    evidence.push(format!("growth fit on side {side}: exponent {g:.3}, from alpha {expected:.3}"));
                    match verdict {
                        Some(v) if v != diverges(expected) => evidence.push(format!(
                            "warning: growth fit on side {side} disagrees with the exponent rule"
                        )),
                        None => evidence.push(format!("growth fit on side {side} inconclusive")),
                        _ => {}
                    }
                    fit_says.push(verdict);
                }
                Err(err) => {
                    evidence.push(format!("growth fit on side {side} failed: {err}"));
                    fit_says.push(None);
                }
            }
        }

        let simple = if declared {
            let norm = w.y1_norm_divergence()?;
            evidence.push(format!("∫ y1² |r|: {norm:?}"));
            Some(matches!(norm, NormVerdict::Divergent))
        } else if fit_says.contains(&Some(true)) {
            Some(true)
        } else if fit_says.iter().all(|v| *v == Some(false)) {
            Some(false)
        } else {
            None
        };
        Ok(CriticalVerdict {
            zero_is_eigenvalue: true,
            eigenvector_neutral: neutral,
            zero_simple: simple,
            singular_critical_point: simple.map(|s| neutral && s),
            evidence,
        })
    }
}

/// `y₁` for `sgn(x)(1+|x|)^α` at `x ≥ 0`.
pub fn power_y1(alpha: f64, x: f64) -> f64 {
    if alpha == -2.0 {
        (1.0 + x).ln()
    } else {
        ((1.0 + x).powf(alpha + 2.0) - 1.0) / (-(alpha + 1.0) * (alpha + 2.0))
    }
}
