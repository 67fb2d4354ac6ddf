//! Weyl functions `M(λ) = C + ∫ (1/(t-λ) - t/(1+t²)) dΣ(t)`, their
//! derivatives, the difference `Φ = M₊ - M₋` and its boundary values on ℝ.

use crate::measure::{IntegralValue, Kernel, MeasureDifference, SpectralMeasure};
use crate::quad::extrapolate_to_zero;
use crate::{Error, Result, Tolerances, C64};
use serde::Serialize;

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// A spectral measure together with the real constant `C`.
#[derive(Debug, Clone)]
pub struct WeylCoefficient {
    pub measure: SpectralMeasure,
    pub c: f64,
}

impl WeylCoefficient {
    pub fn new(measure: SpectralMeasure, c: f64) -> Self {
        WeylCoefficient { measure, c }
    }

    fn check_off_support(&self, x: f64, kernel: Kernel) -> Result<()> {
        if self.measure.mass_at(x) > 0.0 || self.measure.divergence(kernel, C64::new(x, 0.0)).is_some() {
            return Err(Error::OnSupport(x));
        }
        Ok(())
    }

    /// `M(λ)`.
    pub fn eval(&self, l: C64) -> Result<C64> {
        if l.im < 0.0 {
            return self.eval(l.conj()).map(|v| v.conj());
        }
        if l.im == 0.0 {
            self.check_off_support(l.re, Kernel::Weyl)?;
        }
        Ok(self.measure.moment_unchecked(Kernel::Weyl, l)? + self.c)
    }

    /// `M⁽ⁿ⁾(λ) = n! ∫ (t-λ)^(-n-1) dΣ` for `n ≥ 1`; `n = 0` gives `M(λ)`.
    pub fn deriv(&self, l: C64, n: u32) -> Result<C64> {
        if n == 0 {
            return self.eval(l);
        }
        if l.im < 0.0 {
            return self.deriv(l.conj(), n).map(|v| v.conj());
        }
        let k = Kernel::Pole(n + 1);
        if l.im == 0.0 {
            self.check_off_support(l.re, k)?;
        }
        Ok(self.measure.moment_unchecked(k, l)? * factorial(n))
    }

    /// `C = Re M(i)`.
    pub fn constant_from_values(m_at_i: C64) -> f64 {
        m_at_i.re
    }
}

/// `Φ = M₊ - M₋`, evaluated through the difference measure `Σ₊ - Σ₋` so
/// that shared components cancel exactly.
#[derive(Debug, Clone)]
pub struct PhiFunction {
    pub plus: WeylCoefficient,
    pub minus: WeylCoefficient,
    diff: MeasureDifference,
    pub tol: Tolerances,
}

impl PhiFunction {
    pub fn new(plus: WeylCoefficient, minus: WeylCoefficient) -> Self {
        let diff = MeasureDifference::new(&plus.measure, &minus.measure);
        PhiFunction {
            plus,
            minus,
            diff,
            tol: Tolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn difference(&self) -> &MeasureDifference {
        &self.diff
    }

    pub fn delta_c(&self) -> f64 {
        self.plus.c - self.minus.c
    }

    /// `Φ(λ)` off the supports.
    pub fn eval(&self, l: C64) -> Result<C64> {
        self.deriv(l, 0)
    }

    /// `Φ⁽ⁿ⁾(λ)` off the supports.
    pub fn deriv(&self, l: C64, n: u32) -> Result<C64> {
        if l.im < 0.0 {
            return self.deriv(l.conj(), n).map(|v| v.conj());
        }
        let k = if n == 0 { Kernel::Weyl } else { Kernel::Pole(n + 1) };
        if l.im == 0.0 {
            self.plus.check_off_support(l.re, k)?;
            self.minus.check_off_support(l.re, k)?;
        }
        self.raw(l, n)
    }

    fn raw(&self, l: C64, n: u32) -> Result<C64> {
        if n == 0 {
            Ok(self.diff.moment(Kernel::Weyl, l)? + self.delta_c())
        } else {
            Ok(self.diff.moment(Kernel::Pole(n + 1), l)? * factorial(n))
        }
    }

    /// `lim_{ε↓0} Φ⁽ⁿ⁾(λ + iε)`.
    ///
    /// For real λ the limit exists when `dΣ₊({λ}) = dΣ₋({λ})` and
    /// `∫|t-λ|^(-2(n+1)) dΣ± < ∞`; it then equals
    /// `n! (Γ₁⁺ - Γ₁⁻) χ/(t-λ)^(n+1)`, an absolutely convergent integral over
    /// `ℝ∖{λ}`. Unequal masses give `HypothesesFail`, an infinite moment
    /// gives `Divergent`. Nonreal λ returns `Φ⁽ⁿ⁾(λ)`.
    pub fn eval_boundary(&self, l: C64, n: u32) -> Result<IntegralValue> {
        if l.im != 0.0 {
            return self.deriv(l, n).map(IntegralValue::Finite);
        }
        let x = l.re;
        let (mp, mm) = (self.plus.measure.mass_at(x), self.minus.measure.mass_at(x));
        if !self.tol.eq(mp, mm) {
            return Err(Error::HypothesesFail(format!(
                "dΣ₊({{{x}}}) = {mp} differs from dΣ₋({{{x}}}) = {mm}"
            )));
        }
        let k = Kernel::AbsPole(n + 1);
        if self.plus.measure.divergence(k, l).is_some() || self.minus.measure.divergence(k, l).is_some() {
            return Ok(IntegralValue::Divergent);
        }
        self.raw(l, n).map(IntegralValue::Finite)
    }
}

/// Worst violations of the Herglotz sign and of conjugate symmetry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct HerglotzResidual {
    /// `max(0, -Im λ · Im M(λ))`.
    pub sign: f64,
    /// `|M(conj λ) - conj M(λ)|`.
    pub symmetry: f64,
}

impl HerglotzResidual {
    pub fn max(&self) -> f64 {
        self.sign.max(self.symmetry)
    }
}

/// Herglotz and symmetry check of any function on sample points off ℝ.
pub fn herglotz_residual(f: impl Fn(C64) -> Result<C64>, samples: &[C64]) -> Result<HerglotzResidual> {
    let mut r = HerglotzResidual::default();
    for &l in samples {
        let v = f(l)?;
        let vc = f(l.conj())?;
        r.sign = r.sign.max((-(l.im * v.im)).max(0.0));
        r.symmetry = r.symmetry.max((vc - v.conj()).norm());
    }
    Ok(r)
}

/// `r_function_residual` for a Weyl coefficient.
pub fn r_function_residual(w: &WeylCoefficient, samples: &[C64]) -> Result<HerglotzResidual> {
    herglotz_residual(|l| w.eval(l), samples)
}

/// Density estimate from boundary values of a Herglotz function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StieltjesEstimate {
    pub density: f64,
    pub error: f64,
}

/// Default ε schedule for [`stieltjes_invert`].
pub const EPS_SCHEDULE: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// `(1/π) lim_{ε↓0} Im f(t + iε)`, extrapolated polynomially in ε over the
/// schedule. `NoLimit` when the extrapolation does not settle to `1e-6`
/// relative.
pub fn stieltjes_invert(
    f: impl Fn(C64) -> Result<C64>,
    t: f64,
    schedule: &[f64],
) -> Result<StieltjesEstimate> {
    if schedule.len() < 2 {
        return Err(Error::Spec("ε schedule needs at least two entries".into()));
    }
    let vals: Vec<C64> = schedule
        .iter()
        .map(|&e| f(C64::new(t, e)).map(|v| C64::new(v.im / std::f64::consts::PI, 0.0)))
        .collect::<Result<_>>()?;
    let (lim, _) = extrapolate_to_zero(schedule, &vals);
    let (lim2, _) = extrapolate_to_zero(&schedule[1..], &vals[1..]);
    let error = (lim.re - lim2.re).abs();
    if !lim.re.is_finite() || error > 1e-6 * lim.re.abs().max(1.0) {
        return Err(Error::NoLimit);
    }
    Ok(StieltjesEstimate { density: lim.re, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{AtomFamily, DensityPiece};
    use std::f64::consts::PI;

    fn integers() -> SpectralMeasure {
        SpectralMeasure::new().with_family(AtomFamily::parse("k", "1", None, None, 0.0, None).unwrap())
    }

    fn lebesgue() -> SpectralMeasure {
        SpectralMeasure::new().with_piece(DensityPiece::constant(f64::NEG_INFINITY, f64::INFINITY, 1.0))
    }

    /// Midpoint rule after `t = tan θ`, independent of the library
    /// quadrature.
    fn tan_midpoint(f: impl Fn(f64) -> C64) -> C64 {
        let n = 200_000;
        let h = PI / n as f64;
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            let th = -PI / 2.0 + (i as f64 + 0.5) * h;
            let c = th.cos();
            s += f(th.tan()) / (c * c);
        }
        s * h
    }

    #[test]
    fn eval_examples() {
        let atom = WeylCoefficient::new(SpectralMeasure::new().with_atom(0.0, 1.0), 0.0);
        assert!((atom.eval(C64::i()).unwrap() - C64::i()).norm() < 1e-15);
        let leb = WeylCoefficient::new(lebesgue(), 0.0);
        let v = leb.eval(C64::i()).unwrap();
        let oracle = tan_midpoint(|t| C64::new(1.0, 0.0) / (C64::new(t, -1.0)) - t / (1.0 + t * t));
        assert!((oracle - C64::new(0.0, PI)).norm() < 1e-8);
        assert!((v - C64::new(0.0, PI)).norm() < 1e-10, "{v}");
        let shifted = WeylCoefficient::new(lebesgue(), 2.5);
        assert!((shifted.eval(C64::i()).unwrap() - C64::new(2.5, PI)).norm() < 1e-10);
        assert_eq!(leb.eval(C64::new(1.0, 0.0)), Err(Error::OnSupport(1.0)));
        assert_eq!(atom.eval(C64::new(0.0, 0.0)), Err(Error::OnSupport(0.0)));
    }

    #[test]
    fn derivative_examples() {
        let atom = WeylCoefficient::new(SpectralMeasure::new().with_atom(0.0, 1.0), 0.0);
        assert!((atom.deriv(C64::new(2.0, 0.0), 1).unwrap().re - 0.25).abs() < 1e-15);
        let leb = WeylCoefficient::new(lebesgue(), 0.0);
        assert!(leb.deriv(C64::i(), 1).unwrap().norm() < 1e-10);
        let a3 = WeylCoefficient::new(SpectralMeasure::new().with_atom(1.0, 3.0), 0.0);
        let exact = C64::new(6.0, 0.0) / C64::new(1.0, -1.0).powi(3);
        assert!((a3.deriv(C64::i(), 2).unwrap() - exact).norm() < 1e-14);
    }

    #[test]
    fn boundary_examples() {
        let same = PhiFunction::new(
            WeylCoefficient::new(integers(), 0.0),
            WeylCoefficient::new(integers(), 0.0),
        );
        assert_eq!(same.eval_boundary(C64::new(0.5, 0.0), 0).unwrap(), IntegralValue::Finite(C64::new(0.0, 0.0)));
        let extra = PhiFunction::new(
            WeylCoefficient::new(integers(), 0.0),
            WeylCoefficient::new(integers().with_atom(5.0, 1.0), 0.0),
        );
        let v = extra.eval_boundary(C64::new(0.0, 0.0), 0).unwrap().value().unwrap();
        assert!((v.re + 1.0 / 130.0).abs() < 1e-15, "{v}");
        let at0 = PhiFunction::new(
            WeylCoefficient::new(integers(), 0.0),
            WeylCoefficient::new(integers().with_atom(0.0, 1.0), 0.0),
        );
        assert!(matches!(at0.eval_boundary(C64::new(0.0, 0.0), 0), Err(Error::HypothesesFail(_))));
    }

    #[test]
    fn herglotz_examples() {
        let a = WeylCoefficient::new(SpectralMeasure::new().with_atom(1.0, 2.0), 0.0);
        assert!((a.eval(C64::i()).unwrap().im - 1.0).abs() < 1e-15);
        let leb = WeylCoefficient::new(lebesgue(), 0.0);
        assert!((leb.eval(C64::new(0.0, 2.0)).unwrap().im - PI).abs() < 1e-10);
        let samples: Vec<C64> = (0..100)
            .map(|i| C64::new((i as f64 * 0.37).sin() * 20.0, 0.01 + (i as f64 * 0.11).cos().abs() * 5.0))
            .collect();
        for w in [a, leb, WeylCoefficient::new(integers(), -1.0)] {
            assert!(r_function_residual(&w, &samples).unwrap().max() < 1e-10);
        }
    }

    #[test]
    fn stieltjes_examples() {
        let leb = WeylCoefficient::new(lebesgue(), 0.0);
        let d = stieltjes_invert(|l| leb.eval(l), 0.7, &EPS_SCHEDULE).unwrap();
        assert!((d.density - 1.0).abs() < 1e-8);
        let m0 = |l: C64| -> Result<C64> { Ok(l / (l * (-l).sqrt() + 1.0)) };
        let d = stieltjes_invert(m0, 1.0, &EPS_SCHEDULE).unwrap();
        assert!((d.density - 1.0 / (2.0 * PI)).abs() < 1e-6, "{d:?}");
        let atom = WeylCoefficient::new(SpectralMeasure::new().with_atom(0.0, 1.0), 0.0);
        let d = stieltjes_invert(|l| atom.eval(l), 2.0, &EPS_SCHEDULE).unwrap();
        assert!(d.density.abs() < 1e-8);
    }
}
