//! Eigenvalues of the model operator: classification with algebraic
//! multiplicity, the degenerate case `σ(Â) = ℂ`, essential and discrete
//! spectrum, and the support-separation test for definitizability.

use crate::measure::{IntervalSet, Kernel, PointClass, SpectralMeasure};
use crate::modelop::ModelOperator;
use crate::roots::{self, Rect, RootSearch};
use crate::weyl::{PhiFunction, WeylCoefficient};
use crate::{Error, IntegralValue, Result, Tolerances, ZeroTest, C64};
use rayon::prelude::*;
use serde::Serialize;

/// Default cap on the multiplicity search.
pub const K_MAX: usize = 32;
/// Distance kept between argument-principle contours and ℝ.
pub const AXIS_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EigenCase {
    /// `λ ∈ 𝔄₀(Σ₊) ∪ 𝔄₀(Σ₋)`.
    A0Side,
    ApAp,
    ArAr,
    /// `λ ∈ 𝔄_p` for one measure and `𝔄_r` for the other.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Algebraic {
    Finite(usize),
    /// Every condition held up to the cap.
    AtLeast(usize),
    Infinite,
}

impl std::fmt::Display for Algebraic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algebraic::Finite(k) => write!(f, "{k}"),
            Algebraic::AtLeast(k) => write!(f, ">={k}"),
            Algebraic::Infinite => write!(f, "inf"),
        }
    }
}

/// One evaluated condition of the decision tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEval {
    pub name: String,
    /// Magnitude that was tested, when the condition is numeric.
    pub value: Option<f64>,
    pub holds: bool,
    /// The value fell in the ambiguity band of a zero test.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenReport {
    pub lambda: C64,
    pub case: EigenCase,
    pub is_eigenvalue: bool,
    /// 1 for eigenvalues, 0 otherwise.
    pub geometric: usize,
    pub algebraic: Option<Algebraic>,
    pub ambiguous: bool,
    pub trace: Vec<ConditionEval>,
}

/// Where a discrete eigenvalue came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootOrigin {
    /// Isolated atom of both measures.
    CommonAtom,
    /// Real zero of `Φ` in a gap of both supports.
    RealGap,
    /// Nonreal zero of `Φ`.
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteEigenvalue {
    pub lambda: C64,
    pub multiplicity: usize,
    pub origin: RootOrigin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub essential: IntervalSet,
    pub discrete: Vec<DiscreteEigenvalue>,
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

/// Search region for [`SpectralPair::discrete_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Interval(f64, f64),
    Rect(Rect),
}

/// The Weyl data `(Σ₊, C₊, Σ₋, C₋)` of a model operator.
#[derive(Debug, Clone)]
pub struct SpectralPair {
    pub phi: PhiFunction,
    pub tol: Tolerances,
}

struct Trace {
    items: Vec<ConditionEval>,
    ambiguous: bool,
}

impl Trace {
    fn new() -> Self {
        Trace {
            items: Vec::new(),
            ambiguous: false,
        }
    }

    fn flag(&mut self, name: String, holds: bool) -> bool {
        self.items.push(ConditionEval {
            name,
            value: None,
            holds,
            ambiguous: false,
        });
        holds
    }

    fn zero(&mut self, name: String, v: C64, tol: &Tolerances) -> bool {
        let z = tol.zero_test(v.norm());
        let amb = z == ZeroTest::Ambiguous;
        self.ambiguous |= amb;
        self.items.push(ConditionEval {
            name,
            value: Some(v.norm()),
            holds: z == ZeroTest::Zero,
            ambiguous: amb,
        });
        z == ZeroTest::Zero
    }
}

impl SpectralPair {
    pub fn new(plus: WeylCoefficient, minus: WeylCoefficient) -> Self {
        SpectralPair {
            phi: PhiFunction::new(plus, minus),
            tol: Tolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self.phi = self.phi.with_tolerances(tol);
        self
    }

    pub fn plus(&self) -> &WeylCoefficient {
        &self.phi.plus
    }

    pub fn minus(&self) -> &WeylCoefficient {
        &self.phi.minus
    }

    pub fn model_operator(&self) -> ModelOperator {
        ModelOperator::new(self.plus().clone(), self.minus().clone()).with_tolerances(self.tol)
    }

    /// `dΣ₊ = dΣ₋` structurally and `C₊ = C₋`.
    pub fn degenerate_check(&self) -> bool {
        self.plus().measure.structurally_equal(&self.minus().measure) && self.plus().c == self.minus().c
    }

    fn essential_union(&self) -> IntervalSet {
        self.plus().measure.essential().union(&self.minus().measure.essential())
    }

    pub fn essential_spectrum(&self) -> Result<IntervalSet> {
        if self.degenerate_check() {
            return Err(Error::Degenerate);
        }
        Ok(self.essential_union())
    }

    /// `∫(1+|t|)⁻¹dΣ± < ∞` and `C± = ∫ t/(1+t²) dΣ±`; the multiplicity
    /// conditions then reduce to equalities of signed moments.
    fn finite_first_moment(&self) -> bool {
        let i = C64::new(0.0, 1.0);
        [self.plus(), self.minus()].iter().all(|w| {
            w.measure.divergence(Kernel::Pole(1), i).is_none()
                && w
                    .measure
                    .moment_unchecked(Kernel::Pole(1), i)
                    .map(|m| self.tol.eq(m.re, w.c))
                    .unwrap_or(false)
        })
    }

    fn both_finite(&self, l: C64, j: u32, t: &mut Trace) -> bool {
        let lu = if l.im < 0.0 { l.conj() } else { l };
        let p = self.plus().measure.divergence(Kernel::AbsPole(j), lu).is_none();
        let m = self.minus().measure.divergence(Kernel::AbsPole(j), lu).is_none();
        t.flag(format!("∫|t-λ|^-{} dΣ₊ < ∞", 2 * j), p) & t.flag(format!("∫|t-λ|^-{} dΣ₋ < ∞", 2 * j), m)
    }

    /// `Φ⁽ⁿ⁾(λ+i0) = 0`, or the equivalent equality of signed moments
    /// `∫(t-λ)^(-n-1) dΣ₊ = ∫(t-λ)^(-n-1) dΣ₋` when the first moments are
    /// finite.
    fn boundary_zero(&self, l: C64, n: u32, simplified: bool, t: &mut Trace) -> Result<bool> {
        if simplified {
            let lu = if l.im < 0.0 { l.conj() } else { l };
            let v = self.phi.difference().moment(Kernel::Pole(n + 1), lu)?;
            return Ok(t.zero(format!("∫(t-λ)^-{} d(Σ₊-Σ₋) = 0", n + 1), v, &self.tol));
        }
        match self.phi.eval_boundary(l, n)? {
            IntegralValue::Finite(v) => Ok(t.zero(format!("Φ^({n})(λ+i0) = 0"), v, &self.tol)),
            IntegralValue::Divergent => Ok(t.flag(format!("Φ^({n})(λ+i0) exists"), false)),
        }
    }

    /// Decide whether `λ` is an eigenvalue of `Â` and find its algebraic
    /// multiplicity (searched up to `k_max`).
    pub fn classify_eigenvalue(&self, l: C64, k_max: usize) -> Result<EigenReport> {
        let k_max = k_max.max(1);
        let cp = self.plus().measure.classify_point(l);
        let cm = self.minus().measure.classify_point(l);
        let case = match (cp, cm) {
            (PointClass::A0, _) | (_, PointClass::A0) => EigenCase::A0Side,
            (PointClass::Ap, PointClass::Ap) => EigenCase::ApAp,
            (PointClass::Ar, PointClass::Ar) => EigenCase::ArAr,
            _ => EigenCase::Mixed,
        };
        let mut t = Trace::new();
        t.flag(format!("λ ∈ 𝔄 classes: Σ₊ {cp:?}, Σ₋ {cm:?}"), true);
        let report = |t: Trace, eig: bool, alg: Option<Algebraic>| EigenReport {
            lambda: l,
            case,
            is_eigenvalue: eig,
            geometric: usize::from(eig),
            algebraic: alg,
            ambiguous: t.ambiguous,
            trace: t.items,
        };
        if self.degenerate_check() {
            if l.im == 0.0 && self.essential_union().contains(l.re) {
                return Err(Error::Degenerate);
            }
            t.flag("Σ₊ = Σ₋ and C₊ = C₋".into(), true);
            return Ok(report(t, true, Some(Algebraic::Infinite)));
        }
        let simplified = self.finite_first_moment();
        match case {
            EigenCase::A0Side | EigenCase::Mixed => Ok(report(t, false, None)),
            EigenCase::ApAp => {
                let x = l.re;
                let (mp, mm) = (self.plus().measure.mass_at(x), self.minus().measure.mass_at(x));
                let eq = t.flag(format!("dΣ₊({{λ}}) = {mp} equals dΣ₋({{λ}}) = {mm}"), self.tol.eq(mp, mm));
                if !eq || !self.both_finite(l, 1, &mut t) {
                    return Ok(report(t, true, Some(Algebraic::Finite(1))));
                }
                let mut k = 2;
                while k < k_max {
                    let j = k as u32;
                    if !self.both_finite(l, j, &mut t) || !self.boundary_zero(l, j - 2, simplified, &mut t)? {
                        return Ok(report(t, true, Some(Algebraic::Finite(k))));
                    }
                    k += 1;
                }
                Ok(report(t, true, Some(capped(k_max))))
            }
            EigenCase::ArAr => {
                if !self.boundary_zero(l, 0, simplified, &mut t)? {
                    return Ok(report(t, false, None));
                }
                let mut k = 1;
                while k < k_max {
                    let j = (k + 1) as u32;
                    if !self.both_finite(l, j, &mut t) || !self.boundary_zero(l, j - 1, simplified, &mut t)? {
                        return Ok(report(t, true, Some(Algebraic::Finite(k))));
                    }
                    k += 1;
                }
                Ok(report(t, true, Some(capped(k_max))))
            }
        }
    }

    /// Supports separated by finitely many points (see [`definitizable`]).
    pub fn definitizable_check(&self) -> bool {
        definitizable(&self.plus().measure, &self.minus().measure)
    }

    /// Discrete eigenvalues in `region` with their algebraic multiplicities,
    /// sorted by `(Re λ, Im λ)`.
    pub fn discrete_spectrum(&self, region: Region, k_max: usize) -> Result<SpectrumReport> {
        if self.degenerate_check() {
            return Err(Error::Degenerate);
        }
        let mut warnings = Vec::new();
        let mut found = Vec::new();
        let (x0, x1, real_part) = match region {
            Region::Interval(a, b) => (a, b, true),
            Region::Rect(r) => (r.x0, r.x1, r.y0 <= 0.0 && r.y1 >= 0.0),
        };
        if !(x0.is_finite() && x1.is_finite() && x0 < x1) {
            return Err(Error::Spec(format!("search region [{x0}, {x1}] must be finite and nonempty")));
        }
        if real_part {
            found.extend(self.common_atoms(x0, x1, k_max, &mut warnings)?);
            found.extend(self.real_gap_roots(x0, x1, k_max, &mut warnings)?);
        }
        if let Region::Rect(r) = region {
            found.extend(self.complex_roots(r, k_max, &mut warnings)?);
        }
        found.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
        Ok(SpectrumReport {
            essential: self.essential_union(),
            discrete: found,
            degenerate: false,
            warnings,
        })
    }

    /// Atoms of both measures in `[a, b]`, with multiplicity the order of
    /// the zero of `1/M₊ - 1/M₋` at the atom.
    fn common_atoms(&self, a: f64, b: f64, k_max: usize, warnings: &mut Vec<String>) -> Result<Vec<DiscreteEigenvalue>> {
        let ess = self.essential_union();
        let atoms = |m: &SpectralMeasure| {
            m.atoms_in(a, b).ok_or_else(|| {
                let p = ess.intervals().iter().find(|(lo, hi)| *hi >= a && *lo <= b).map_or(a, |iv| iv.0);
                Error::RegionTouchesEssential(p)
            })
        };
        let ap = atoms(&self.plus().measure)?;
        let am = atoms(&self.minus().measure)?;
        let mut all: Vec<f64> = ap.iter().chain(&am).map(|x| x.t).collect();
        all.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        for x in ap.iter().map(|x| x.t) {
            if self.minus().measure.mass_at(x) <= 0.0 {
                continue;
            }
            if ess.distance(x) == 0.0 {
                return Err(Error::RegionTouchesEssential(x));
            }
            // Radius: well inside the distance to every other support point.
            let mut d = ess.distance(x);
            for &y in &all {
                if !crate::measure::same_point(x, y) {
                    d = d.min((y - x).abs());
                }
            }
            let d = if d.is_finite() { d } else { 1.0 };
            let order = self.atom_zero_order(x, 0.25 * d, k_max)?;
            let rep = self.classify_eigenvalue(C64::new(x, 0.0), k_max)?;
            match (order, rep.algebraic) {
                (Some(k), Some(Algebraic::Finite(c))) if k != c => warnings.push(format!(
                    "atom {x}: zero order of 1/M₊-1/M₋ is {k}, classifier gives {c}"
                )),
                (None, _) => warnings.push(format!("atom {x}: zero order of 1/M₊-1/M₋ exceeds {k_max}")),
                _ => {}
            }
            let k = order.unwrap_or(k_max);
            out.push(DiscreteEigenvalue {
                lambda: C64::new(x, 0.0),
                multiplicity: k,
                origin: RootOrigin::CommonAtom,
            });
        }
        Ok(out)
    }

    fn atom_zero_order(&self, x: f64, mut r: f64, k_max: usize) -> Result<Option<usize>> {
        let z0 = C64::new(x, 0.0);
        let g = |z: C64| -> Result<C64> { Ok(self.plus().eval(z)?.inv() - self.minus().eval(z)?.inv()) };
        // Shrink until neither M₊ nor M₋ has a zero inside the circle, i.e.
        // each winds exactly once negatively around it.
        for _ in 0..12 {
            let wp = circle_winding(|z| self.plus().eval(z), z0, r)?;
            let wm = circle_winding(|z| self.minus().eval(z), z0, r)?;
            if wp == -1 && wm == -1 {
                let n = k_max.min(24);
                return roots::zero_order(g, z0, r, n, 1e-8).map(|o| o.filter(|&k| k >= 1));
            }
            r *= 0.25;
        }
        Err(Error::Numeric(format!("no pole-free circle found around the atom {x}")))
    }

    /// Real zeros of `Φ` in the gaps of `supp Σ₊ ∪ supp Σ₋` inside `(a, b)`.
    fn real_gap_roots(&self, a: f64, b: f64, k_max: usize, warnings: &mut Vec<String>) -> Result<Vec<DiscreteEigenvalue>> {
        let ess = self.essential_union();
        let mut blocked: Vec<(f64, f64)> = ess.intervals().to_vec();
        for m in [&self.plus().measure, &self.minus().measure] {
            let atoms = m.atoms_in(a, b).ok_or(Error::RegionTouchesEssential(a))?;
            blocked.extend(atoms.iter().map(|x| (x.t, x.t)));
        }
        let blocked = IntervalSet::new(blocked);
        let gaps = blocked.gaps_within(a, b);
        let phi = |x: f64| -> Result<f64> { Ok(self.phi.eval(C64::new(x, 0.0))?.re) };
        let dphi = |x: f64| -> Result<f64> { Ok(self.phi.deriv(C64::new(x, 0.0), 1)?.re) };
        let per_gap = gaps
            .par_iter()
            .map(|&(g0, g1)| {
                // Stay clear of the essential spectrum; atoms only need a
                // tiny offset since Φ has a simple pole there.
                let off = |e: f64| {
                    if ess.distance(e) == 0.0 {
                        AXIS_MARGIN * e.abs().max(1.0)
                    } else {
                        1e-10 * e.abs().max(1.0)
                    }
                };
                let lo = if g0 == a && !blocked.contains(a) { a } else { g0 + off(g0) };
                let hi = if g1 == b && !blocked.contains(b) { b } else { g1 - off(g1) };
                if lo >= hi {
                    return Ok(vec![]);
                }
                let mut out = Vec::new();
                scan_gap(&phi, &dphi, lo, hi, self.tol.zero, 0, &mut out)?;
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::new();
        for (x, even) in per_gap.into_iter().flat_map(|g| merge_clusters(g, &dphi)) {
            let rep = self.classify_eigenvalue(C64::new(x, 0.0), k_max)?;
            let mult = match rep.algebraic {
                Some(Algebraic::Finite(k)) | Some(Algebraic::AtLeast(k)) => k,
                _ => {
                    warnings.push(format!("real zero {x} of Φ not confirmed by the classifier"));
                    if even {
                        2
                    } else {
                        1
                    }
                }
            };
            if rep.ambiguous {
                warnings.push(format!("real zero {x}: a zero test fell in the ambiguity band"));
            }
            out.push(DiscreteEigenvalue {
                lambda: C64::new(x, 0.0),
                multiplicity: mult,
                origin: RootOrigin::RealGap,
            });
        }
        Ok(out)
    }

    /// Nonreal zeros of `Φ` in `r` with `|Im λ| ≥ AXIS_MARGIN`. The lower
    /// half-plane is covered by conjugating the roots found above ℝ, so the
    /// output is exactly symmetric whenever `r` is.
    fn complex_roots(&self, r: Rect, k_max: usize, warnings: &mut Vec<String>) -> Result<Vec<DiscreteEigenvalue>> {
        let top = r.y1.max(-r.y0);
        let bottom = if r.y0 > 0.0 {
            r.y0
        } else if r.y1 < 0.0 {
            -r.y1
        } else {
            AXIS_MARGIN
        };
        if top <= bottom.max(AXIS_MARGIN) {
            return Ok(vec![]);
        }
        let bottom = bottom.max(AXIS_MARGIN);
        if r.y0 < AXIS_MARGIN && r.y1 > -AXIS_MARGIN && !(r.y0 <= 0.0 && r.y1 >= 0.0) {
            warnings.push(format!("strip |Im λ| < {AXIS_MARGIN:e} is not searched"));
        }
        let upper = Rect::new(r.x0, r.x1, bottom, top);
        let f = |z: C64| self.phi.eval(z);
        let df = |z: C64| self.phi.deriv(z, 1);
        let found = roots::find_roots(&f, &df, upper, RootSearch::default())?;
        let mut out = Vec::new();
        for root in found {
            let z = root.z;
            if !root.refined {
                warnings.push(format!("root near {z} not refined by Newton"));
            }
            let rep = self.classify_eigenvalue(z, k_max)?;
            match rep.algebraic {
                Some(Algebraic::Finite(k)) if k == root.multiplicity => {}
                other => warnings.push(format!(
                    "root {z}: winding number {} but classifier reports {other:?}",
                    root.multiplicity
                )),
            }
            for w in [z, z.conj()] {
                if w.im >= r.y0 && w.im <= r.y1 {
                    out.push(DiscreteEigenvalue {
                        lambda: w,
                        multiplicity: root.multiplicity,
                        origin: RootOrigin::Complex,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Rounding splits an even-order zero into a tight cluster of sign
/// changes; merge clusters closer than `1e-6` into one touching zero at the
/// critical point of `Φ`.
fn merge_clusters(mut v: Vec<(f64, bool)>, dphi: &impl Fn(f64) -> Result<f64>) -> Vec<(f64, bool)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j].0 - v[j - 1].0 <= 1e-6 * v[j].0.abs().max(1.0) {
            j += 1;
        }
        if j - i == 1 {
            out.push(v[i]);
        } else {
            let w = 1e-6 * v[i].0.abs().max(1.0);
            let (a, b) = (v[i].0 - w, v[j - 1].0 + w);
            let x = roots::bisect(dphi, a, b, 1e-15 * b.abs().max(1.0)).unwrap_or(0.5 * (a + b));
            out.push((x, true));
        }
        i = j;
    }
    out
}

fn capped(k_max: usize) -> Algebraic {
    Algebraic::AtLeast(k_max)
}

/// Winding number of `f` around the circle `|z - z0| = r` from 256 samples.
fn circle_winding(f: impl Fn(C64) -> Result<C64>, z0: C64, r: f64) -> Result<i64> {
    let n = 256;
    let vals = (0..n)
        .map(|k| f(z0 + C64::from_polar(r, 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64)))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for k in 0..n {
        total += (vals[(k + 1) % n] / vals[k]).arg();
    }
    Ok((total / (2.0 * std::f64::consts::PI)).round() as i64)
}

/// Recursive search for zeros of a real function on `[a, b]`, subdividing
/// until the sampled derivative has constant sign or the width is below
/// `1e-8`. Records `(x, even)` where `even` marks a touching zero found
/// without a sign change.
fn scan_gap<F, D>(f: &F, df: &D, a: f64, b: f64, zero_tol: f64, depth: usize, out: &mut Vec<(f64, bool)>) -> Result<()>
where
    F: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    let n = if depth == 0 { 33 } else { 9 };
    let xs: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let ds = xs.iter().map(|&x| df(x)).collect::<Result<Vec<_>>>()?;
    let monotone = ds.iter().all(|d| *d > 0.0) || ds.iter().all(|d| *d < 0.0);
    let width_tol = 1e-8 * a.abs().max(b.abs()).max(1.0);
    if monotone || b - a < width_tol {
        let (fa, fb) = (f(a)?, f(b)?);
        if fa == 0.0 || fb == 0.0 || fa.signum() != fb.signum() {
            let x = roots::bisect(f, a, b, 1e-15 * a.abs().max(b.abs()).max(1.0))?;
            out.push((x, false));
        } else if !monotone {
            // Touching zero: locate the extremum through Φ′.
            let x = roots::bisect(df, a, b, 1e-15 * a.abs().max(b.abs()).max(1.0)).unwrap_or(0.5 * (a + b));
            if f(x)?.abs() <= zero_tol {
                out.push((x, true));
            }
        }
        return Ok(());
    }
    let m = 0.5 * (a + b);
    let mut left = Vec::new();
    scan_gap(f, df, a, m, zero_tol, depth + 1, &mut left)?;
    let mut right = Vec::new();
    scan_gap(f, df, m, b, zero_tol, depth + 1, &mut right)?;
    // A root exactly at the split point is reported by both halves.
    if let (Some(l), Some(r)) = (left.last(), right.first()) {
        if (l.0 - r.0).abs() <= 1e-12 * m.abs().max(1.0) {
            right.remove(0);
        }
    }
    out.extend(left);
    out.extend(right);
    Ok(())
}

/// Whether `supp dΣ₊` and `supp dΣ₋` can be separated by finitely many
/// points: no overlapping intervals, and no point (finite or infinite)
/// approached by both supports from the same side.
pub fn definitizable(a: &SpectralMeasure, b: &SpectralMeasure) -> bool {
    if a.essential().overlaps_with_length(&b.essential()) {
        return false;
    }
    let ga = germs(a);
    ga.iter().all(|&(p, s)| !dense_near(b, p, s))
}

/// Points `p` (possibly `±∞`) with the side `s` from which the support of
/// `m` accumulates there.
fn germs(m: &SpectralMeasure) -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for f in m.families() {
        v.extend(f.accumulation_sides());
        for side in f.infinity_sides() {
            v.push((side * f64::INFINITY, -side));
        }
    }
    for p in m.pieces() {
        if p.lo == f64::NEG_INFINITY {
            v.push((f64::NEG_INFINITY, 1.0));
        }
        if p.hi == f64::INFINITY {
            v.push((f64::INFINITY, -1.0));
        }
    }
    v
}

fn dense_near(m: &SpectralMeasure, p: f64, s: f64) -> bool {
    if germs(m).iter().any(|&(q, t)| q == p && t == s) {
        return true;
    }
    m.pieces().iter().any(|piece| {
        if s > 0.0 {
            piece.lo <= p && p < piece.hi
        } else {
            piece.lo < p && p <= piece.hi
        }
    })
}

/// `supp dΣ` bounded below or above.
pub fn semibounded_flag(m: &SpectralMeasure) -> bool {
    match m.support_hull() {
        None => true,
        Some((lo, hi)) => lo > f64::NEG_INFINITY || hi < f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{AtomFamily, DensityPiece};

    fn fam(pos: &str) -> SpectralMeasure {
        SpectralMeasure::new().with_family(AtomFamily::parse(pos, "1", None, None, 0.0, None).unwrap())
    }

    fn pair(p: SpectralMeasure, m: SpectralMeasure) -> SpectralPair {
        SpectralPair::new(WeylCoefficient::new(p, 0.0), WeylCoefficient::new(m, 0.0))
    }

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn atoms_at_z_with_extra_atom_has_multiplicity_two() {
        let p = pair(fam("k"), fam("k").with_atom(5.0, 1.0));
        let rep = p.classify_eigenvalue(r(0.0), K_MAX).unwrap();
        assert_eq!(rep.case, EigenCase::ApAp);
        assert!(rep.is_eigenvalue);
        assert_eq!(rep.geometric, 1);
        assert_eq!(rep.algebraic, Some(Algebraic::Finite(2)));
        let last = rep.trace.last().unwrap();
        assert!((last.value.unwrap() - 1.0 / 130.0).abs() < 1e-12);
        // Oracle: chain of length 2 certified, length 3 fails.
        let op = p.model_operator();
        let c = op.construct_chain(r(0.0), 3).unwrap();
        assert_eq!(c.chain.len(), 2);
        assert!(c.failure.is_some());
        assert!(op.jordan_residual(r(0.0), &c.chain).unwrap().iter().all(|x| x.max() < 1e-8));
    }

    #[test]
    fn lebesgue_is_a0() {
        let leb = SpectralMeasure::new().with_piece(DensityPiece::constant(f64::NEG_INFINITY, f64::INFINITY, 1.0));
        let p = pair(leb.clone(), leb.with_atom(3.0, 1.0));
        let rep = p.classify_eigenvalue(r(1.0), K_MAX).unwrap();
        assert_eq!(rep.case, EigenCase::A0Side);
        assert!(!rep.is_eigenvalue);
    }

    #[test]
    fn integers_against_half_integers_is_mixed() {
        let p = pair(fam("k"), fam("k + 0.5"));
        assert_eq!(p.plus().measure.classify_point(r(0.0)), PointClass::Ap);
        assert_eq!(p.minus().measure.classify_point(r(0.0)), PointClass::Ar);
        let rep = p.classify_eigenvalue(r(0.0), K_MAX).unwrap();
        assert_eq!(rep.case, EigenCase::Mixed);
        assert!(!rep.is_eigenvalue);
    }

    fn dirichlet_half() -> WeylCoefficient {
        let f = AtomFamily::parse("((k + 0.5) * pi)^2", "2", Some(0), None, -0.5, None).unwrap();
        let m = SpectralMeasure::new().with_family(f);
        let c = m.moment_unchecked(Kernel::Pole(1), C64::new(0.0, 1.0)).unwrap().re;
        WeylCoefficient::new(m, c)
    }

    #[test]
    fn degenerate_pair() {
        let w = dirichlet_half();
        // tan(√λ)/√λ at λ = i, as a check that the measure is right.
        let s = C64::new(0.0, 1.0).sqrt();
        let exact = s.tan() / s;
        assert!((w.eval(C64::new(0.0, 1.0)).unwrap() - exact).norm() < 1e-9);
        let p = SpectralPair::new(w.clone(), w.clone());
        assert!(p.degenerate_check());
        for l in [C64::new(0.3, 1.0), r(-4.0), r(1.0)] {
            let rep = p.classify_eigenvalue(l, K_MAX).unwrap();
            assert_eq!(rep.algebraic, Some(Algebraic::Infinite));
            assert_eq!(rep.geometric, 1);
        }
        assert_eq!(p.essential_spectrum(), Err(Error::Degenerate));
        let t0 = (0.5 * std::f64::consts::PI).powi(2);
        let bumped = WeylCoefficient::new(w.measure.clone().with_atom(t0, 1e-3), w.c);
        assert!(!SpectralPair::new(w.clone(), bumped).degenerate_check());
        let shifted = WeylCoefficient::new(w.measure.clone(), w.c + 1.0);
        assert!(!SpectralPair::new(w, shifted).degenerate_check());
    }

    #[test]
    fn real_gap_zeros_of_even_against_odd_integers() {
        // Φ(λ) = C₊ - π/sin(πλ) on (0, 1).
        let p = SpectralPair::new(WeylCoefficient::new(fam("2*k"), 4.0), WeylCoefficient::new(fam("2*k + 1"), 0.0));
        let rep = p.discrete_spectrum(Region::Interval(0.0, 1.0), K_MAX).unwrap();
        let x = (std::f64::consts::PI / 4.0).asin() / std::f64::consts::PI;
        assert_eq!(rep.discrete.len(), 2, "{rep:?}");
        assert!((rep.discrete[0].lambda.re - x).abs() < 1e-12);
        assert!((rep.discrete[1].lambda.re - (1.0 - x)).abs() < 1e-12);
        assert!(rep.discrete.iter().all(|d| d.multiplicity == 1 && d.origin == RootOrigin::RealGap));
        // Without the shift Φ ≤ -π on the gap.
        let q = pair(fam("2*k"), fam("2*k + 1"));
        assert!(q.discrete_spectrum(Region::Interval(0.0, 1.0), K_MAX).unwrap().discrete.is_empty());
    }

    #[test]
    fn touching_zero_is_double() {
        // C₊ = π: Φ = π - π/sin(πλ) touches zero at λ = 1/2.
        let p = SpectralPair::new(
            WeylCoefficient::new(fam("2*k"), std::f64::consts::PI),
            WeylCoefficient::new(fam("2*k + 1"), 0.0),
        );
        let rep = p.discrete_spectrum(Region::Interval(0.1, 0.9), K_MAX).unwrap();
        assert_eq!(rep.discrete.len(), 1, "{rep:?}");
        assert!((rep.discrete[0].lambda.re - 0.5).abs() < 1e-6);
        assert_eq!(rep.discrete[0].multiplicity, 2);
    }

    #[test]
    fn complex_zeros_come_in_conjugate_pairs() {
        // Φ = C - π/sin(πλ) with C = 1 < π has no real zeros in (0, 1) but
        // complex ones with Re λ = 1/2.
        let p = SpectralPair::new(WeylCoefficient::new(fam("2*k"), 1.0), WeylCoefficient::new(fam("2*k + 1"), 0.0));
        let rep = p.discrete_spectrum(Region::Rect(Rect::new(0.1, 0.9, -1.0, 1.0)), K_MAX).unwrap();
        assert_eq!(rep.discrete.len(), 2, "{rep:?}");
        let (a, b) = (rep.discrete[0].lambda, rep.discrete[1].lambda);
        assert_eq!(a, b.conj());
        // sin(πλ) = π at λ = 1/2 + i·acosh(π)/π.
        let y = std::f64::consts::PI.acosh() / std::f64::consts::PI;
        assert!((b - C64::new(0.5, y)).norm() < 1e-10, "{b}");
    }

    #[test]
    fn definitizability_and_semiboundedness() {
        let right = SpectralMeasure::new().with_piece(DensityPiece::constant(0.0, f64::INFINITY, 1.0));
        let left = SpectralMeasure::new().with_piece(DensityPiece::constant(f64::NEG_INFINITY, 0.0, 1.0));
        assert!(definitizable(&right, &left));
        assert!(!definitizable(&fam("2*k"), &fam("2*k+1")));
        assert!(definitizable(&right.clone().with_atom(-1.0, 1.0), &left.clone().with_atom(1.0, 1.0)));
        assert!(semibounded_flag(&right));
        assert!(!semibounded_flag(&fam("k")));
        assert!(semibounded_flag(&right.with_atom(-1.0, 1.0)));
    }
}
