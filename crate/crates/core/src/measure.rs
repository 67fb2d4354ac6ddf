//! Symbolic spectral measures: explicit atoms, rule-generated atom families
//! and density pieces with declared power exponents.
//!
//! Every moment `∫ K(t, λ) dΣ(t)` is first classified as finite or divergent
//! from the declared exponents; only finite moments are evaluated
//! numerically.

use crate::expr::RealFn;
use crate::quad::{integrate, End, QuadTol};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Number of family atoms tabulated on each side of the first index.
pub const TABLE_HALF: i64 = 512;
const SERIES_TERMS: usize = 48;
const FAST_MAX_POWER: u32 = 8;
const MAX_FINITE_FAMILY: i64 = 2_000_000;

/// Two real points are treated as the same atom position when they agree to
/// 1e-12 relative (absolute near the origin).
pub fn same_point(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Result of a moment computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IntegralValue {
    Finite(C64),
    Divergent,
}

impl IntegralValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, IntegralValue::Finite(_))
    }

    pub fn value(&self) -> Option<C64> {
        match self {
            IntegralValue::Finite(v) => Some(*v),
            IntegralValue::Divergent => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    /// `∫|t-λ|⁻² dΣ = ∞`: λ lies in the continuous spectrum.
    A0,
    /// Not an atom, and `∫|t-λ|⁻² dΣ < ∞`.
    Ar,
    /// An atom of the measure.
    Ap,
}

/// Integration kernels `K(t, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `1/(t-λ) - t/(1+t²)`.
    Weyl,
    /// `(t-λ)^(-m)`.
    Pole(u32),
    /// `|t-λ|^(-2j)`.
    AbsPole(u32),
    /// `1`.
    Mass,
    /// `1/(1+t²)`.
    Regular,
}

impl Kernel {
    /// Power of the singularity at `t = λ`.
    pub fn local_power(self) -> f64 {
        match self {
            Kernel::Weyl => 1.0,
            Kernel::Pole(m) => m as f64,
            Kernel::AbsPole(j) => 2.0 * j as f64,
            Kernel::Mass | Kernel::Regular => 0.0,
        }
    }

    /// Decay power of the kernel as `|t| → ∞`.
    pub fn infinity_power(self) -> f64 {
        match self {
            Kernel::Weyl | Kernel::Regular => 2.0,
            Kernel::Pole(m) => m as f64,
            Kernel::AbsPole(j) => 2.0 * j as f64,
            Kernel::Mass => 0.0,
        }
    }

    #[inline]
    pub fn eval(self, t: f64, l: C64) -> C64 {
        if l.im == 0.0 {
            return C64::new(self.eval_real(t, l.re), 0.0);
        }
        match self {
            Kernel::Weyl => (l * t + 1.0) / ((C64::new(t, 0.0) - l) * (1.0 + t * t)),
            Kernel::Pole(m) => (C64::new(t, 0.0) - l).inv().powi(m as i32),
            Kernel::AbsPole(j) => {
                let d = t - l.re;
                C64::new((d * d + l.im * l.im).powi(-(j as i32)), 0.0)
            }
            Kernel::Mass => C64::new(1.0, 0.0),
            Kernel::Regular => C64::new(1.0 / (1.0 + t * t), 0.0),
        }
    }

    #[inline]
    fn eval_real(self, t: f64, l: f64) -> f64 {
        match self {
            Kernel::Weyl => (1.0 + l * t) / ((t - l) * (1.0 + t * t)),
            Kernel::Pole(m) => (t - l).powi(-(m as i32)),
            Kernel::AbsPole(j) => (t - l).powi(-2 * j as i32),
            Kernel::Mass => 1.0,
            Kernel::Regular => 1.0 / (1.0 + t * t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub t: f64,
    pub w: f64,
}

/// Closed intervals on the extended real line, kept sorted and merged.
/// A single point `p` is stored as `[p, p]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    ivs: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { ivs: Vec::new() }
    }

    pub fn new(mut ivs: Vec<(f64, f64)>) -> Self {
        ivs.retain(|&(a, b)| a <= b);
        ivs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(ivs.len());
        for (a, b) in ivs {
            if let Some(last) = out.last_mut() {
                if a <= last.1 {
                    last.1 = last.1.max(b);
                    continue;
                }
            }
            out.push((a, b));
        }
        IntervalSet { ivs: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.ivs
    }

    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut v = self.ivs.clone();
        v.extend_from_slice(&other.ivs);
        IntervalSet::new(v)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ivs.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// Distance from `x` to the set (∞ for the empty set).
    pub fn distance(&self, x: f64) -> f64 {
        self.ivs
            .iter()
            .map(|&(a, b)| {
                if x < a {
                    a - x
                } else if x > b {
                    x - b
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the two sets share a subinterval of positive length.
    pub fn overlaps_with_length(&self, other: &IntervalSet) -> bool {
        for &(a, b) in &self.ivs {
            for &(c, d) in &other.ivs {
                if a.max(c) < b.min(d) {
                    return true;
                }
            }
        }
        false
    }

    /// Open gaps of the set inside `[lo, hi]`.
    pub fn gaps_within(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut gaps = Vec::new();
        let mut cur = lo;
        for &(a, b) in &self.ivs {
            if b < cur {
                continue;
            }
            if a > hi {
                break;
            }
            if a > cur {
                gaps.push((cur, a.min(hi)));
            }
            cur = cur.max(b);
            if cur >= hi {
                break;
            }
        }
        if cur < hi {
            gaps.push((cur, hi));
        }
        gaps
    }

    pub fn bounded_below(&self) -> bool {
        self.ivs.first().map_or(true, |iv| iv.0 > f64::NEG_INFINITY)
    }

    pub fn bounded_above(&self) -> bool {
        self.ivs.last().map_or(true, |iv| iv.1 < f64::INFINITY)
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.ivs.len()))?;
        for &(a, b) in &self.ivs {
            seq.serialize_element(&[crate::spec::ExtReal(a), crate::spec::ExtReal(b)])?;
        }
        seq.end()
    }
}

/// Atoms `(positions(k), weights(k))` for integer `k` in `[lo, hi]`
/// (either bound may be open-ended).
///
/// `tail_exponent` is the exponent `γ` of the equivalent density near the
/// accumulation point: the family puts mass `≈ |t|^γ dt` near infinity, or
/// `≈ |t-p|^γ dt` near a finite accumulation point `p`.
#[derive(Clone)]
pub struct AtomFamily {
    pub positions: RealFn,
    pub weights: RealFn,
    pub lo: Option<i64>,
    pub hi: Option<i64>,
    pub tail_exponent: f64,
    pub accumulation: Option<f64>,
    data: Arc<FamilyData>,
}

struct FamilyData {
    table: Vec<(f64, f64)>,
    tails: Vec<Tail>,
}

struct Tail {
    start: i64,
    dir: i64,
    /// Accumulation point; `None` for infinity.
    target: Option<f64>,
    /// Side from which the positions approach the target (`±1`).
    side: f64,
    first_pos: f64,
    moments: OnceLock<TailMoments>,
}

struct TailMoments {
    /// `Σ w t^(-p)` (infinite target) or `Σ w (t-p)^q` (finite target).
    s: Vec<Option<f64>>,
    /// `Σ w/(t(1+t²))` (infinite target) or `Σ w t/(1+t²)` (finite target).
    weyl0: f64,
    /// `Σ w/(1+t²)`.
    regular: f64,
}

impl fmt::Debug for AtomFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AtomFamily")
            .field("positions", &self.positions.source())
            .field("weights", &self.weights.source())
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("tail_exponent", &self.tail_exponent)
            .field("accumulation", &self.accumulation)
            .finish()
    }
}

impl PartialEq for AtomFamily {
    fn eq(&self, o: &Self) -> bool {
        self.positions == o.positions
            && self.weights == o.weights
            && self.lo == o.lo
            && self.hi == o.hi
            && self.tail_exponent == o.tail_exponent
            && self.accumulation == o.accumulation
    }
}

impl AtomFamily {
    pub fn new(
        positions: RealFn,
        weights: RealFn,
        lo: Option<i64>,
        hi: Option<i64>,
        tail_exponent: f64,
        accumulation: Option<f64>,
    ) -> Result<Self> {
        let pf = positions.bind();
        let wf = weights.bind();
        let (table_range, tail_specs): ((i64, i64), Vec<(i64, i64)>) = match (lo, hi) {
            (Some(a), Some(b)) => {
                if b < a {
                    return Err(Error::Spec(format!("empty family range [{a}, {b}]")));
                }
                if b - a > MAX_FINITE_FAMILY {
                    return Err(Error::Spec("finite family too large to tabulate".into()));
                }
                ((a, b), vec![])
            }
            (Some(a), None) => ((a, a + 2 * TABLE_HALF - 1), vec![(a + 2 * TABLE_HALF, 1)]),
            (None, Some(b)) => ((b - 2 * TABLE_HALF + 1, b), vec![(b - 2 * TABLE_HALF, -1)]),
            (None, None) => (
                (-TABLE_HALF, TABLE_HALF),
                vec![(TABLE_HALF + 1, 1), (-TABLE_HALF - 1, -1)],
            ),
        };
        let mut table = Vec::with_capacity((table_range.1 - table_range.0 + 1) as usize);
        for k in table_range.0..=table_range.1 {
            let kf = k as f64;
            let (t, w) = (pf(kf), wf(kf));
            if !t.is_finite() || !w.is_finite() {
                return Err(Error::Spec(format!(
                    "family atom at k = {k} is not finite (t = {t}, w = {w})"
                )));
            }
            table.push((t, w));
        }
        let mut tails = Vec::new();
        for (start, dir) in tail_specs {
            let first_pos = pf(start as f64);
            let far = pf((start + dir * 64) as f64);
            let side = match accumulation {
                None => far.signum(),
                Some(p) => (far - p).signum(),
            };
            if !first_pos.is_finite() || side == 0.0 {
                return Err(Error::Spec(format!(
                    "family tail from k = {start} does not approach its accumulation point"
                )));
            }
            tails.push(Tail {
                start,
                dir,
                target: accumulation,
                side,
                first_pos,
                moments: OnceLock::new(),
            });
        }
        drop(pf);
        drop(wf);
        Ok(AtomFamily {
            positions,
            weights,
            lo,
            hi,
            tail_exponent,
            accumulation,
            data: Arc::new(FamilyData { table, tails }),
        })
    }

    /// Parse position and weight expressions in the index variable `k`.
    pub fn parse(
        positions: &str,
        weights: &str,
        lo: Option<i64>,
        hi: Option<i64>,
        tail_exponent: f64,
        accumulation: Option<f64>,
    ) -> Result<Self> {
        AtomFamily::new(
            RealFn::parse(positions, "k")?,
            RealFn::parse(weights, "k")?,
            lo,
            hi,
            tail_exponent,
            accumulation,
        )
    }

    /// Tabulated atoms (all atoms for a finite range).
    pub fn table(&self) -> &[(f64, f64)] {
        &self.data.table
    }

    pub fn is_finite(&self) -> bool {
        self.data.tails.is_empty()
    }

    /// Whether some tail of the family runs off to `+∞` (`dir = 1`) or `-∞`.
    fn reaches_infinity(&self) -> impl Iterator<Item = f64> + '_ {
        self.data
            .tails
            .iter()
            .filter(|t| t.target.is_none())
            .map(|t| t.side)
    }

    /// Finite accumulation points together with the side of approach.
    pub fn accumulation_sides(&self) -> Vec<(f64, f64)> {
        self.data
            .tails
            .iter()
            .filter_map(|t| t.target.map(|p| (p, t.side)))
            .collect()
    }

    /// Directions (`±1`) in which the family runs off to infinity.
    pub fn infinity_sides(&self) -> Vec<f64> {
        self.reaches_infinity().collect()
    }
}

impl Tail {
    fn k(&self, x: f64) -> f64 {
        self.start as f64 + self.dir as f64 * x
    }

    /// Monotone progress coordinate: increases as the positions approach the
    /// target (to `+∞` for an infinite target, to `0` for a finite one).
    fn progress(&self, t: f64) -> f64 {
        match self.target {
            None => self.side * t,
            Some(p) => -self.side * (t - p),
        }
    }

    /// Continuous tail index `x ≥ 0` with `position(x) = v`; `0` if `v` lies
    /// before the tail, `∞` if it lies at or beyond the accumulation point.
    fn index_of(&self, pf: &dyn Fn(f64) -> f64, v: f64) -> f64 {
        let pv = self.progress(v);
        if pv <= self.progress(self.first_pos) {
            return 0.0;
        }
        if self.target.is_some() && pv >= 0.0 {
            return f64::INFINITY;
        }
        let mut hi = 1.0f64;
        while self.progress(pf(self.k(hi))) < pv {
            hi *= 2.0;
            if hi > 1e15 {
                return f64::INFINITY;
            }
        }
        let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.progress(pf(self.k(mid))) < pv {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `Σ_{x=a}^{∞} g(x)` by Euler-Maclaurin (integral, endpoint and two
/// derivative corrections).
fn em_infinite(g: &dyn Fn(f64) -> C64, a: f64, kscale: f64) -> C64 {
    let x1 = a + 4.0 * (kscale + a + 16.0);
    let x2 = 2.0 * x1;
    let (g1, g2) = (g(x1).norm(), g(x2).norm());
    let mut e = if g1 > 0.0 && g2 > 0.0 && g1.is_finite() && g2.is_finite() {
        (g2 / g1).ln() / ((kscale + x2) / (kscale + x1)).ln()
    } else {
        -4.0
    };
    if !e.is_finite() {
        e = -4.0;
    }
    let e = e.min(-1.05);
    let ga = g(a);
    let tol = QuadTol::new(1e-16 * ga.norm() * (kscale + a + 1.0), 1e-13);
    let r = integrate(g, End::regular(a), End::new(f64::INFINITY, e), &[], kscale + a + 1.0, tol);
    let (d1, d3) = fd_derivs(g, a);
    r.value + ga * 0.5 - d1 / 12.0 + d3 / 720.0
}

/// `Σ_{x=a}^{b} g(x)` for integers `a ≤ b`.
fn em_finite(g: &dyn Fn(f64) -> C64, a: f64, b: f64, kscale: f64) -> C64 {
    if b < a {
        return C64::new(0.0, 0.0);
    }
    if b - a < 32.0 {
        let mut s = C64::new(0.0, 0.0);
        let mut x = a;
        while x <= b {
            s += g(x);
            x += 1.0;
        }
        return s;
    }
    let (ga, gb) = (g(a), g(b));
    let tol = QuadTol::new(1e-16 * (ga.norm() + gb.norm()) * (b - a), 1e-13);
    let r = integrate(g, End::regular(a), End::regular(b), &[], kscale + a + 1.0, tol);
    let (da1, da3) = fd_derivs(g, a);
    let (db1, db3) = fd_derivs(g, b);
    r.value + (ga + gb) * 0.5 + (db1 - da1) / 12.0 - (db3 - da3) / 720.0
}

fn fd_derivs(g: &dyn Fn(f64) -> C64, x: f64) -> (C64, C64) {
    let h = 0.25;
    let (m2, m1, p1, p2) = (g(x - 2.0 * h), g(x - h), g(x + h), g(x + 2.0 * h));
    let d1 = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h);
    let d3 = (p2 - m2 - (p1 - m1) * 2.0) / (2.0 * h * h * h);
    (d1, d3)
}

impl AtomFamily {
    fn moments<'a>(&self, tail: &'a Tail) -> &'a TailMoments {
        tail.moments.get_or_init(|| {
            let pf = self.positions.bind();
            let wf = self.weights.bind();
            let kscale = tail.start.unsigned_abs() as f64;
            let gamma = self.tail_exponent;
            let nmom = SERIES_TERMS + FAST_MAX_POWER as usize + 1;
            let mut s = Vec::with_capacity(nmom);
            for p in 0..nmom {
                let finite = match tail.target {
                    None => gamma - (p as f64) < -1.0 - 1e-12,
                    Some(_) => gamma > -1.0,
                };
                if !finite {
                    s.push(None);
                    continue;
                }
                let g = |x: f64| {
                    let k = tail.k(x);
                    let t = pf(k);
                    let v = match tail.target {
                        None => wf(k) * t.powi(-(p as i32)),
                        Some(acc) => wf(k) * (t - acc).powi(p as i32),
                    };
                    C64::new(v, 0.0)
                };
                s.push(Some(em_infinite(&g, 0.0, kscale).re));
            }
            let w0 = |x: f64| {
                let k = tail.k(x);
                let t = pf(k);
                let v = match tail.target {
                    None => wf(k) / (t * (1.0 + t * t)),
                    Some(_) => wf(k) * t / (1.0 + t * t),
                };
                C64::new(v, 0.0)
            };
            let reg = |x: f64| {
                let k = tail.k(x);
                let t = pf(k);
                C64::new(wf(k) / (1.0 + t * t), 0.0)
            };
            TailMoments {
                s,
                weyl0: em_infinite(&w0, 0.0, kscale).re,
                regular: em_infinite(&reg, 0.0, kscale).re,
            }
        })
    }

    /// Series evaluation of a tail sum when λ is well separated from it.
    fn fast_tail(&self, tail: &Tail, kernel: Kernel, l: C64) -> Option<C64> {
        let m = match kernel {
            Kernel::Pole(m) => m,
            Kernel::AbsPole(j) if l.im == 0.0 => 2 * j,
            Kernel::Weyl => 1,
            Kernel::Mass | Kernel::Regular => 0,
            _ => return None,
        };
        if m > FAST_MAX_POWER {
            return None;
        }
        match tail.target {
            None => {
                if l.norm() > 0.25 * tail.first_pos.abs() {
                    return None;
                }
                let mo = self.moments(tail);
                match kernel {
                    Kernel::Regular => return Some(C64::new(mo.regular, 0.0)),
                    Kernel::Mass => return mo.s[0].map(|v| C64::new(v, 0.0)),
                    Kernel::Weyl => {
                        let mut acc = C64::new(mo.weyl0, 0.0);
                        let mut lp = C64::new(1.0, 0.0);
                        for p in 1..SERIES_TERMS {
                            lp *= l;
                            acc += lp * mo.s[p + 1]?;
                        }
                        Some(acc)
                    }
                    _ => {
                        let m = m as usize;
                        let mut acc = C64::new(0.0, 0.0);
                        let mut lp = C64::new(1.0, 0.0);
                        let mut c = 1.0;
                        for p in 0..SERIES_TERMS {
                            if p > 0 {
                                lp *= l;
                                c *= (p + m - 1) as f64 / p as f64;
                            }
                            acc += lp * (c * mo.s[m + p]?);
                        }
                        Some(acc)
                    }
                }
            }
            Some(acc_pt) => {
                let d = l - acc_pt;
                if (tail.first_pos - acc_pt).abs() > 0.25 * d.norm() {
                    return None;
                }
                let mo = self.moments(tail);
                let pole = |m: usize| -> Option<C64> {
                    let mut acc = C64::new(0.0, 0.0);
                    let dinv = d.inv();
                    let mut dq = C64::new(1.0, 0.0);
                    let mut c = 1.0;
                    for q in 0..SERIES_TERMS {
                        if q > 0 {
                            dq *= dinv;
                            c *= (q + m - 1) as f64 / q as f64;
                        }
                        acc += dq * (c * mo.s[q]?);
                    }
                    Some(acc * (-d).inv().powi(m as i32))
                };
                match kernel {
                    Kernel::Regular => Some(C64::new(mo.regular, 0.0)),
                    Kernel::Mass => mo.s[0].map(|v| C64::new(v, 0.0)),
                    Kernel::Weyl => Some(pole(1)? - mo.weyl0),
                    _ => pole(m as usize),
                }
            }
        }
    }

    fn tail_sum(
        &self,
        tail: &Tail,
        pf: &dyn Fn(f64) -> f64,
        wf: &dyn Fn(f64) -> f64,
        kernel: Kernel,
        l: C64,
    ) -> C64 {
        if let Some(v) = self.fast_tail(tail, kernel, l) {
            return v;
        }
        let kscale = tail.start.unsigned_abs() as f64;
        let pos = |x: f64| pf(tail.k(x));
        let real_l = l.im == 0.0;
        let g = |x: f64| {
            let k = tail.k(x);
            let t = pf(k);
            if real_l && same_point(t, l.re) && x.fract() == 0.0 {
                return C64::new(0.0, 0.0);
            }
            kernel.eval(t, l) * wf(k)
        };
        let s = kernel.local_power();
        let ok = |x: f64| -> bool {
            if s == 0.0 {
                return true;
            }
            let t0 = pos(x);
            let dt = (pos(x + 1.0) - t0).abs();
            (C64::new(t0, 0.0) - l).norm() >= 40.0 * (s + 1.0) * dt
        };
        let xs = tail.index_of(pf, l.re);
        let window = if xs.is_finite() && xs > 0.0 {
            Some(((xs.floor() - 1.0).max(0.0), xs.ceil() + 1.0))
        } else if !ok(0.0) {
            Some((0.0, 0.0))
        } else {
            None
        };
        let Some((mut lo, mut hi)) = window else {
            return em_infinite(&g, 0.0, kscale);
        };
        let cap = 50_000_000.0;
        while !ok(hi) {
            hi += 1.0;
            if hi - lo > cap {
                break;
            }
        }
        while lo > 0.0 && !ok(lo) {
            lo -= 1.0;
        }
        let mut acc = C64::new(0.0, 0.0);
        if lo > 0.0 {
            acc += em_finite(&g, 0.0, lo - 1.0, kscale);
        }
        let mut x = lo;
        while x <= hi {
            acc += g(x);
            x += 1.0;
        }
        acc + em_infinite(&g, hi + 1.0, kscale)
    }

    /// `Σ_k w_k K(t_k, λ)` over all atoms of the family, excluding an atom
    /// at a real λ.
    pub fn kernel_sum(&self, kernel: Kernel, l: C64) -> C64 {
        let mut acc = if l.im == 0.0 {
            let mut s = 0.0;
            for &(t, w) in &self.data.table {
                if !same_point(t, l.re) {
                    s += w * kernel.eval_real(t, l.re);
                }
            }
            C64::new(s, 0.0)
        } else {
            let mut s = C64::new(0.0, 0.0);
            for &(t, w) in &self.data.table {
                s += kernel.eval(t, l) * w;
            }
            s
        };
        if !self.data.tails.is_empty() {
            let pf = self.positions.bind();
            let wf = self.weights.bind();
            for tail in &self.data.tails {
                acc += self.tail_sum(tail, &*pf, &*wf, kernel, l);
            }
        }
        acc
    }

    /// Total weight of family atoms at the real point `x`.
    pub fn mass_at(&self, x: f64) -> f64 {
        let mut m: f64 = self
            .data
            .table
            .iter()
            .filter(|(t, _)| same_point(*t, x))
            .map(|(_, w)| w)
            .sum();
        if !self.data.tails.is_empty() {
            let pf = self.positions.bind();
            let wf = self.weights.bind();
            for tail in &self.data.tails {
                let xi = tail.index_of(&*pf, x);
                if xi.is_finite() && xi > 0.0 {
                    for c in [xi.floor() - 1.0, xi.floor(), xi.floor() + 1.0, xi.floor() + 2.0] {
                        if c >= 0.0 && same_point(pf(tail.k(c)), x) {
                            m += wf(tail.k(c));
                        }
                    }
                } else if xi == 0.0 && same_point(tail.first_pos, x) {
                    m += wf(tail.k(0.0));
                }
            }
        }
        m
    }

    /// Atoms with position in `[a, b]`; `None` if infinitely many.
    pub fn atoms_in(&self, a: f64, b: f64) -> Option<Vec<Atom>> {
        let mut out: Vec<Atom> = self
            .data
            .table
            .iter()
            .filter(|(t, _)| a <= *t && *t <= b)
            .map(|&(t, w)| Atom { t, w })
            .collect();
        if self.data.tails.is_empty() {
            return Some(out);
        }
        let pf = self.positions.bind();
        let wf = self.weights.bind();
        for tail in &self.data.tails {
            if let Some(p) = tail.target {
                if a <= p && p <= b {
                    return None;
                }
            }
            if (a == f64::NEG_INFINITY && tail.target.is_none() && tail.side < 0.0)
                || (b == f64::INFINITY && tail.target.is_none() && tail.side > 0.0)
            {
                return None;
            }
            let xa = tail.index_of(&*pf, a);
            let xb = tail.index_of(&*pf, b);
            let lo = xa.min(xb).floor() - 1.0;
            let hi = xa.max(xb).ceil() + 1.0;
            if !hi.is_finite() {
                return None;
            }
            let mut x = lo.max(0.0);
            while x <= hi {
                let t = pf(tail.k(x));
                if a <= t && t <= b {
                    out.push(Atom { t, w: wf(tail.k(x)) });
                }
                x += 1.0;
            }
        }
        Some(out)
    }

    /// Exponent of the equivalent density estimated from the atoms far out
    /// in each tail.
    pub fn estimated_tail_exponents(&self) -> Vec<f64> {
        let pf = self.positions.bind();
        let wf = self.weights.bind();
        self.data
            .tails
            .iter()
            .map(|tail| {
                let dens = |x: f64| {
                    let t0 = pf(tail.k(x));
                    let t1 = pf(tail.k(x + 1.0));
                    let rho = wf(tail.k(x)) / (t1 - t0).abs();
                    let r = match tail.target {
                        None => t0.abs(),
                        Some(p) => (t0 - p).abs(),
                    };
                    (rho, r)
                };
                let x1 = 4.0 * TABLE_HALF as f64;
                let (r1, d1) = dens(x1);
                let (r2, d2) = dens(16.0 * x1);
                (r2 / r1).ln() / (d2 / d1).ln()
            })
            .collect()
    }
}

/// Density piece `ρ(t)` on `[lo, hi]` with `ρ ~ |t-lo|^left`,
/// `ρ ~ |t-hi|^right` and `ρ ~ |t|^infinity` at infinite ends.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPiece {
    pub lo: f64,
    pub hi: f64,
    pub density: RealFn,
    pub left: f64,
    pub right: f64,
    pub infinity: f64,
}

impl DensityPiece {
    pub fn new(lo: f64, hi: f64, density: RealFn, left: f64, right: f64, infinity: f64) -> Self {
        DensityPiece {
            lo,
            hi,
            density,
            left,
            right,
            infinity,
        }
    }

    /// Parse the density as an expression in `t`.
    pub fn parse(lo: f64, hi: f64, expr: &str, left: f64, right: f64, infinity: f64) -> Result<Self> {
        Ok(DensityPiece::new(lo, hi, RealFn::parse(expr, "t")?, left, right, infinity))
    }

    /// Constant density on `[lo, hi]`.
    pub fn constant(lo: f64, hi: f64, c: f64) -> Self {
        DensityPiece::new(lo, hi, RealFn::constant(c), 0.0, 0.0, 0.0)
    }

    /// Divergence reason of `∫ ρ K(·, λ)` over this piece, if any.
    fn divergence(&self, kernel: Kernel, l: C64) -> Option<String> {
        let s = kernel.local_power();
        let real = l.im == 0.0;
        let at = |x: f64| real && x.is_finite() && same_point(x, l.re);
        if self.lo.is_finite() {
            let e = self.left - if at(self.lo) { s } else { 0.0 };
            if e <= -1.0 {
                return Some(format!("endpoint {} of a density piece: exponent {e} ≤ -1", self.lo));
            }
        } else if self.infinity - kernel.infinity_power() >= -1.0 {
            return Some(format!(
                "density at -∞: exponent {} ≥ -1",
                self.infinity - kernel.infinity_power()
            ));
        }
        if self.hi.is_finite() {
            let e = self.right - if at(self.hi) { s } else { 0.0 };
            if e <= -1.0 {
                return Some(format!("endpoint {} of a density piece: exponent {e} ≤ -1", self.hi));
            }
        } else if self.infinity - kernel.infinity_power() >= -1.0 {
            return Some(format!(
                "density at +∞: exponent {} ≥ -1",
                self.infinity - kernel.infinity_power()
            ));
        }
        if real && l.re > self.lo && l.re < self.hi && !at(self.lo) && !at(self.hi) && s >= 1.0 {
            return Some(format!("{} is interior to a density piece", l.re));
        }
        None
    }

    fn integral(&self, kernel: Kernel, l: C64, tol: QuadTol) -> C64 {
        let rho = self.density.bind();
        let f = |t: f64| kernel.eval(t, l) * rho(t);
        let s = kernel.local_power();
        let real = l.im == 0.0;
        let ea = if self.lo.is_finite() {
            self.left - if real && same_point(self.lo, l.re) { s } else { 0.0 }
        } else {
            self.infinity - kernel.infinity_power()
        };
        let eb = if self.hi.is_finite() {
            self.right - if real && same_point(self.hi, l.re) { s } else { 0.0 }
        } else {
            self.infinity - kernel.infinity_power()
        };
        let mut breaks = Vec::new();
        if l.re > self.lo && l.re < self.hi && !(real && (same_point(self.lo, l.re) || same_point(self.hi, l.re))) {
            breaks.push(l.re);
        }
        let scale = l.norm().max(1.0);
        integrate(&f, End::new(self.lo, ea), End::new(self.hi, eb), &breaks, scale, tol).value
    }
}

/// Invariant violation reported by [`SpectralMeasure::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    NonPositiveWeight { t: f64, w: f64 },
    DuplicateAtom(f64),
    BadInterval { lo: f64, hi: f64 },
    OverlappingPieces { a: (f64, f64), b: (f64, f64) },
    NegativeDensity { t: f64, value: f64 },
    /// `∫ (1+t²)⁻¹ dΣ = ∞`.
    RegularMomentDivergent(String),
    FiniteTotalMass,
    MassFlagMismatch { declared: bool },
    TailExponentMismatch { declared: f64, estimated: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveWeight { t, w } => write!(f, "atom at {t} has weight {w} ≤ 0"),
            Violation::DuplicateAtom(t) => write!(f, "atom position {t} is listed twice"),
            Violation::BadInterval { lo, hi } => write!(f, "density interval [{lo}, {hi}] is empty"),
            Violation::OverlappingPieces { a, b } => {
                write!(f, "density pieces {a:?} and {b:?} overlap")
            }
            Violation::NegativeDensity { t, value } => write!(f, "density is {value} < 0 at {t}"),
            Violation::RegularMomentDivergent(r) => write!(f, "∫(1+t²)⁻¹dΣ diverges: {r}"),
            Violation::FiniteTotalMass => write!(f, "total mass is finite"),
            Violation::MassFlagMismatch { declared } => {
                write!(f, "total_mass_infinite = {declared} contradicts the components")
            }
            Violation::TailExponentMismatch { declared, estimated } => write!(
                f,
                "declared tail exponent {declared} but the atoms give ≈ {estimated:.3}"
            ),
        }
    }
}

/// Essential and point spectrum of the multiplication operator `t·f(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QSpectrum {
    pub essential: IntervalSet,
    /// Explicit atoms and atoms of finite families.
    pub points: Vec<f64>,
    /// Infinite atom families, by position expression.
    pub point_families: Vec<String>,
}

/// Positive measure on ℝ built from atoms, atom families and densities.
#[derive(Debug, Clone, Default)]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
    families: Vec<AtomFamily>,
    pieces: Vec<DensityPiece>,
    /// Declared `∫ dΣ = ∞` flag, checked by `validate` when present.
    pub total_mass_infinite: Option<bool>,
    tol: Option<QuadTol>,
}

impl SpectralMeasure {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an atom. Atoms at a common position merge by adding weights.
    pub fn with_atom(mut self, t: f64, w: f64) -> Self {
        self.push_atom(t, w);
        self
    }

    pub fn with_atoms(mut self, atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        for (t, w) in atoms {
            self.push_atom(t, w);
        }
        self
    }

    pub fn with_family(mut self, f: AtomFamily) -> Self {
        self.families.push(f);
        self
    }

    pub fn with_piece(mut self, p: DensityPiece) -> Self {
        self.pieces.push(p);
        self
    }

    /// Override the quadrature tolerance used for density pieces.
    pub fn with_quad_tol(mut self, tol: QuadTol) -> Self {
        self.tol = Some(tol);
        self
    }

    fn push_atom(&mut self, t: f64, w: f64) {
        if let Some(a) = self.atoms.iter_mut().find(|a| same_point(a.t, t)) {
            a.w += w;
        } else {
            self.atoms.push(Atom { t, w });
            self.atoms.sort_by(|a, b| a.t.total_cmp(&b.t));
        }
    }

    /// Push without merging; used by the file loader so duplicates can be
    /// reported by `validate`.
    pub(crate) fn push_atom_raw(&mut self, t: f64, w: f64) {
        self.atoms.push(Atom { t, w });
        self.atoms.sort_by(|a, b| a.t.total_cmp(&b.t));
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn families(&self) -> &[AtomFamily] {
        &self.families
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.families.is_empty() && self.pieces.is_empty()
    }

    fn quad_tol(&self) -> QuadTol {
        self.tol.unwrap_or_default()
    }

    /// Reason why `∫ K(t, λ) dΣ(t)` over `ℝ∖{λ}` diverges, if it does.
    pub fn divergence(&self, kernel: Kernel, l: C64) -> Option<String> {
        for p in &self.pieces {
            if let Some(r) = p.divergence(kernel, l) {
                return Some(r);
            }
        }
        let g_inf = kernel.infinity_power();
        let s = kernel.local_power();
        for f in &self.families {
            let gamma = f.tail_exponent;
            for side in f.infinity_sides() {
                if gamma - g_inf >= -1.0 {
                    let end = if side > 0.0 { "+∞" } else { "-∞" };
                    return Some(format!("atom family at {end}: exponent {} ≥ -1", gamma - g_inf));
                }
            }
            for (p, _) in f.accumulation_sides() {
                let e = gamma - if l.im == 0.0 && same_point(p, l.re) { s } else { 0.0 };
                if e <= -1.0 {
                    return Some(format!("atom family accumulating at {p}: exponent {e} ≤ -1"));
                }
            }
        }
        None
    }

    /// `∫_{ℝ∖{λ}} K(t, λ) dΣ(t)`.
    pub fn moment(&self, kernel: Kernel, l: C64) -> Result<IntegralValue> {
        if self.divergence(kernel, l).is_some() {
            return Ok(IntegralValue::Divergent);
        }
        Ok(IntegralValue::Finite(self.moment_unchecked(kernel, l)?))
    }

    /// Evaluate the moment without the divergence test (the caller has
    /// established finiteness, e.g. on a parent measure).
    pub fn moment_unchecked(&self, kernel: Kernel, l: C64) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for a in &self.atoms {
            if !(l.im == 0.0 && same_point(a.t, l.re)) {
                acc += kernel.eval(a.t, l) * a.w;
            }
        }
        for f in &self.families {
            acc += f.kernel_sum(kernel, l);
        }
        let tol = self.quad_tol();
        for p in &self.pieces {
            acc += p.integral(kernel, l, tol);
        }
        if !(acc.re.is_finite() && acc.im.is_finite()) {
            return Err(Error::Numeric(format!("moment at λ = {l} is not finite")));
        }
        Ok(acc)
    }

    /// `dΣ({x})`.
    pub fn mass_at(&self, x: f64) -> f64 {
        let mut m: f64 = self.atoms.iter().filter(|a| same_point(a.t, x)).map(|a| a.w).sum();
        for f in &self.families {
            m += f.mass_at(x);
        }
        m
    }

    /// Signed moment `∫_{ℝ∖{λ}} (t-λ)^(-j) dΣ` for `j ≥ 2`; for `j = 1` the
    /// regularized kernel `1/(t-λ) - t/(1+t²)` is used so the value exists
    /// for every measure with `∫(1+t²)⁻¹dΣ < ∞`. With `absolute` the moment
    /// is `∫_{ℝ∖{λ}} |t-λ|^(-2j) dΣ`.
    pub fn chi_moment(&self, l: C64, j: u32, absolute: bool) -> Result<IntegralValue> {
        if j == 0 {
            return Err(Error::Spec("chi_moment needs j ≥ 1".into()));
        }
        let k = if absolute {
            Kernel::AbsPole(j)
        } else if j == 1 {
            Kernel::Weyl
        } else {
            Kernel::Pole(j)
        };
        self.moment(k, l)
    }

    pub fn classify_point(&self, l: C64) -> PointClass {
        if l.im == 0.0 && self.mass_at(l.re) > 0.0 {
            return PointClass::Ap;
        }
        if self.divergence(Kernel::AbsPole(1), l).is_some() {
            PointClass::A0
        } else {
            PointClass::Ar
        }
    }

    /// Closure of the density supports together with the finite
    /// accumulation points of atom families.
    pub fn essential(&self) -> IntervalSet {
        let mut v: Vec<(f64, f64)> = self.pieces.iter().map(|p| (p.lo, p.hi)).collect();
        for f in &self.families {
            for (p, _) in f.accumulation_sides() {
                v.push((p, p));
            }
        }
        IntervalSet::new(v)
    }

    pub fn q_spectrum(&self) -> QSpectrum {
        let mut points: Vec<f64> = self.atoms.iter().map(|a| a.t).collect();
        let mut point_families = Vec::new();
        for f in &self.families {
            if f.is_finite() {
                points.extend(f.table().iter().map(|&(t, _)| t));
            } else {
                point_families.push(f.positions.source().to_string());
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup_by(|a, b| same_point(*a, *b));
        QSpectrum {
            essential: self.essential(),
            points,
            point_families,
        }
    }

    /// All atoms in `[a, b]` (coincident atoms merged); `None` when the
    /// interval contains infinitely many.
    pub fn atoms_in(&self, a: f64, b: f64) -> Option<Vec<Atom>> {
        let mut v: Vec<Atom> = self.atoms.iter().filter(|x| a <= x.t && x.t <= b).copied().collect();
        for f in &self.families {
            v.extend(f.atoms_in(a, b)?);
        }
        v.sort_by(|x, y| x.t.total_cmp(&y.t));
        let mut out: Vec<Atom> = Vec::with_capacity(v.len());
        for x in v {
            match out.last_mut() {
                Some(last) if same_point(last.t, x.t) => last.w += x.w,
                _ => out.push(x),
            }
        }
        Some(out)
    }

    /// Whether `x` lies in the closed support.
    pub fn support_contains(&self, x: f64) -> bool {
        self.essential().contains(x) || self.mass_at(x) > 0.0
    }

    /// Bounds of the support hull (`±∞` when unbounded, `None` for the
    /// zero measure).
    pub fn support_hull(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            lo = lo.min(a.t);
            hi = hi.max(a.t);
        }
        for p in &self.pieces {
            lo = lo.min(p.lo);
            hi = hi.max(p.hi);
        }
        for f in &self.families {
            for &(t, _) in f.table() {
                lo = lo.min(t);
                hi = hi.max(t);
            }
            for side in f.infinity_sides() {
                if side > 0.0 {
                    hi = f64::INFINITY;
                } else {
                    lo = f64::NEG_INFINITY;
                }
            }
            for tail in &f.data.tails {
                if let Some(p) = tail.target {
                    lo = lo.min(p).min(tail.first_pos);
                    hi = hi.max(p).max(tail.first_pos);
                }
            }
        }
        if lo > hi {
            None
        } else {
            Some((lo, hi))
        }
    }

    /// Check positivity, disjointness and the two integrability conditions
    /// `∫(1+t²)⁻¹dΣ < ∞`, `∫dΣ = ∞`.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for a in &self.atoms {
            if !(a.w > 0.0) {
                out.push(Violation::NonPositiveWeight { t: a.t, w: a.w });
            }
        }
        let mut ts: Vec<f64> = self.atoms.iter().map(|a| a.t).collect();
        ts.sort_by(f64::total_cmp);
        for w in ts.windows(2) {
            if same_point(w[0], w[1]) {
                out.push(Violation::DuplicateAtom(w[0]));
            }
        }
        for f in &self.families {
            for &(t, w) in f.table() {
                if !(w > 0.0) {
                    out.push(Violation::NonPositiveWeight { t, w });
                    break;
                }
            }
            if !f.is_finite() {
                for est in f.estimated_tail_exponents() {
                    if !((est - f.tail_exponent).abs() <= 0.1) {
                        out.push(Violation::TailExponentMismatch {
                            declared: f.tail_exponent,
                            estimated: est,
                        });
                    }
                }
            }
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if !(p.lo < p.hi) {
                out.push(Violation::BadInterval { lo: p.lo, hi: p.hi });
                continue;
            }
            for q in &self.pieces[i + 1..] {
                if p.lo.max(q.lo) < p.hi.min(q.hi) {
                    out.push(Violation::OverlappingPieces {
                        a: (p.lo, p.hi),
                        b: (q.lo, q.hi),
                    });
                }
            }
            let rho = p.density.bind();
            for i in 1..64 {
                let u = i as f64 / 64.0;
                let t = match (p.lo.is_finite(), p.hi.is_finite()) {
                    (true, true) => p.lo + u * (p.hi - p.lo),
                    (true, false) => p.lo + u / (1.0 - u),
                    (false, true) => p.hi - u / (1.0 - u),
                    (false, false) => (u - 0.5) / (u * (1.0 - u)),
                };
                let v = rho(t);
                if !(v >= -1e-14) {
                    out.push(Violation::NegativeDensity { t, value: v });
                    break;
                }
            }
        }
        if let Some(r) = self.divergence(Kernel::Regular, C64::new(0.0, 1.0)) {
            out.push(Violation::RegularMomentDivergent(r));
        }
        let infinite = self.divergence(Kernel::Mass, C64::new(0.0, 1.0)).is_some();
        if !infinite {
            out.push(Violation::FiniteTotalMass);
        }
        if let Some(d) = self.total_mass_infinite {
            if d != infinite {
                out.push(Violation::MassFlagMismatch { declared: d });
            }
        }
        out
    }

    /// Structural equality: same atoms (after merging), same families and
    /// same density descriptors.
    pub fn structurally_equal(&self, other: &SpectralMeasure) -> bool {
        self.atoms.len() == other.atoms.len()
            && self
                .atoms
                .iter()
                .zip(&other.atoms)
                .all(|(a, b)| same_point(a.t, b.t) && a.w == b.w)
            && same_multiset(&self.families, &other.families)
            && same_multiset(&self.pieces, &other.pieces)
    }
}

fn same_multiset<T: PartialEq>(a: &[T], b: &[T]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    'outer: for x in a {
        for (i, y) in b.iter().enumerate() {
            if !used[i] && x == y {
                used[i] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// `Σ₊ - Σ₋` with shared families and density pieces cancelled and explicit
/// atoms netted. The two parts are positive measures (possibly of finite
/// mass) whose difference equals the signed measure.
#[derive(Debug, Clone)]
pub struct MeasureDifference {
    pub plus: SpectralMeasure,
    pub minus: SpectralMeasure,
}

impl MeasureDifference {
    pub fn new(a: &SpectralMeasure, b: &SpectralMeasure) -> Self {
        let mut plus = SpectralMeasure::new();
        let mut minus = SpectralMeasure::new();
        let mut used = vec![false; b.families.len()];
        for f in &a.families {
            match (0..b.families.len()).find(|&i| !used[i] && b.families[i] == *f) {
                Some(i) => used[i] = true,
                None => plus.families.push(f.clone()),
            }
        }
        for (i, f) in b.families.iter().enumerate() {
            if !used[i] {
                minus.families.push(f.clone());
            }
        }
        let mut used = vec![false; b.pieces.len()];
        for p in &a.pieces {
            match (0..b.pieces.len()).find(|&i| !used[i] && b.pieces[i] == *p) {
                Some(i) => used[i] = true,
                None => plus.pieces.push(p.clone()),
            }
        }
        for (i, p) in b.pieces.iter().enumerate() {
            if !used[i] {
                minus.pieces.push(p.clone());
            }
        }
        let mut net: Vec<Atom> = Vec::new();
        for (sign, m) in [(1.0, a), (-1.0, b)] {
            for at in &m.atoms {
                match net.iter_mut().find(|x| same_point(x.t, at.t)) {
                    Some(x) => x.w += sign * at.w,
                    None => net.push(Atom { t: at.t, w: sign * at.w }),
                }
            }
        }
        for at in net {
            if at.w > 0.0 {
                plus.atoms.push(at);
            } else if at.w < 0.0 {
                minus.atoms.push(Atom { t: at.t, w: -at.w });
            }
        }
        plus.tol = a.tol;
        minus.tol = b.tol;
        MeasureDifference { plus, minus }
    }

    pub fn is_zero(&self) -> bool {
        self.plus.is_zero() && self.minus.is_zero()
    }

    /// `∫ K d(Σ₊ - Σ₋)`, assuming finiteness was checked on the parents.
    pub fn moment(&self, kernel: Kernel, l: C64) -> Result<C64> {
        Ok(self.plus.moment_unchecked(kernel, l)? - self.minus.moment_unchecked(kernel, l)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn integers() -> SpectralMeasure {
        SpectralMeasure::new().with_family(AtomFamily::parse("k", "1", None, None, 0.0, None).unwrap())
    }

    fn lebesgue() -> SpectralMeasure {
        SpectralMeasure::new().with_piece(DensityPiece::constant(f64::NEG_INFINITY, f64::INFINITY, 1.0))
    }

    fn direct_sum(l: f64, n: i64, p: i32) -> f64 {
        (-n..=n).map(|k| (k as f64 - l).powi(-p)).sum()
    }

    #[test]
    fn validate_examples() {
        let z0 = SpectralMeasure::new().with_family(
            AtomFamily::parse("k + (1 + signum(k + 0.5))/2", "1", None, None, 0.0, None).unwrap(),
        );
        // ℤ∖{0}: k ↦ k for k < 0, k+1 for k ≥ 0
        assert!(z0.validate().is_empty(), "{:?}", z0.validate());
        let single = SpectralMeasure::new().with_atom(0.0, 1.0);
        assert_eq!(single.validate(), vec![Violation::FiniteTotalMass]);
        let leb = lebesgue();
        assert!(leb.validate().is_empty());
        let reg = leb.moment(Kernel::Regular, C64::new(0.0, 1.0)).unwrap();
        assert!((reg.value().unwrap().re - PI).abs() < 1e-12);
    }

    #[test]
    fn mass_lookup() {
        let m = SpectralMeasure::new().with_atom(2.0, 0.5);
        assert_eq!(m.mass_at(2.0), 0.5);
        assert_eq!(lebesgue().mass_at(1.0), 0.0);
        assert_eq!(integers().mass_at(0.5), 0.0);
        assert_eq!(integers().mass_at(4.0), 1.0);
        assert_eq!(integers().mass_at(123456.0), 1.0);
        assert_eq!(integers().mass_at(-5000.0), 1.0);
    }

    #[test]
    fn chi_moment_examples() {
        let z = integers();
        let v = z.chi_moment(C64::new(0.5, 0.0), 1, true).unwrap().value().unwrap();
        // direct summation of (k-1/2)^-2 with the tail beyond N bounded by 2/N
        let oracle = direct_sum(0.5, 200_000, 2);
        assert!((v.re - oracle).abs() < 2.0 / 200_000.0);
        assert!((v.re - PI * PI).abs() < 1e-10, "{v}");
        assert_eq!(lebesgue().chi_moment(C64::new(0.0, 0.0), 1, true).unwrap(), IntegralValue::Divergent);
        let s = z.chi_moment(C64::new(0.0, 0.0), 1, false).unwrap().value().unwrap();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(lebesgue().classify_point(C64::new(3.0, 0.0)), PointClass::A0);
        assert_eq!(integers().classify_point(C64::new(0.5, 0.0)), PointClass::Ar);
        assert_eq!(integers().classify_point(C64::new(4.0, 0.0)), PointClass::Ap);
    }

    #[test]
    fn q_spectrum_examples() {
        let q = integers().q_spectrum();
        assert!(q.essential.is_empty());
        assert_eq!(q.point_families, vec!["k".to_string()]);
        let half = SpectralMeasure::new().with_piece(DensityPiece::constant(0.0, f64::INFINITY, 1.0));
        assert_eq!(half.q_spectrum().essential.intervals(), &[(0.0, f64::INFINITY)]);
        let m0 = half.clone().with_atom(-1.0, 2.0 / 3.0);
        let q = m0.q_spectrum();
        assert_eq!(q.essential.intervals(), &[(0.0, f64::INFINITY)]);
        assert_eq!(q.points, vec![-1.0]);
    }

    #[test]
    fn tail_paths_agree_with_direct_sums() {
        let z = integers();
        // far from the table: generic window path
        for &l in &[700.3, -5000.25, 1.0e5 + 0.5] {
            let v = z.moment(Kernel::Pole(2), C64::new(l, 0.0)).unwrap().value().unwrap().re;
            let exact = (PI / (PI * l).sin()).powi(2);
            assert!((v - exact).abs() < 1e-9 * exact, "λ={l}: {v} vs {exact}");
        }
        // complex λ, fast path and window path: Σ 1/(k-λ)² = π²/sin²(πλ)
        for l in [C64::new(0.3, 0.7), C64::new(900.2, 3.0)] {
            let v = z.moment(Kernel::Pole(2), l).unwrap().value().unwrap();
            let exact = (C64::new(PI, 0.0) / (l * PI).sin()).powi(2);
            assert!((v - exact).norm() < 1e-9 * exact.norm(), "λ={l}: {v} vs {exact}");
        }
        // regularized Weyl kernel: Σ (1/(k-λ) - k/(1+k²)) = -π cot(πλ) + const
        let w = |l: C64| z.moment(Kernel::Weyl, l).unwrap().value().unwrap();
        let a = C64::new(0.3, 0.2);
        let b = C64::new(250.7, 0.4);
        let cot = |z: C64| (z * PI).cos() / (z * PI).sin();
        let lhs = w(a) - w(b);
        let rhs = -(cot(a) - cot(b)) * PI;
        assert!((lhs - rhs).norm() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn finite_accumulation_family() {
        // atoms 1/k (k ≥ 1) with weights 1/k²: equivalent density ≈ 1 near 0
        let f = AtomFamily::parse("1/k", "1/k^2", Some(1), None, 0.0, Some(0.0)).unwrap();
        let m = SpectralMeasure::new().with_family(f);
        assert!(m.essential().contains(0.0));
        // Σ w = π²/6
        let mass = m.moment(Kernel::Mass, C64::new(0.0, 1.0)).unwrap().value().unwrap();
        assert!((mass.re - PI * PI / 6.0).abs() < 1e-10, "{mass}");
        // Σ k⁻² (1/k - λ)⁻¹ at λ = -1: Σ 1/(k(1+k)) = 1
        let v = m.moment(Kernel::Pole(1), C64::new(-1.0, 0.0)).unwrap().value().unwrap();
        assert!((v.re - 1.0).abs() < 1e-10, "{v}");
        // at the accumulation point: |t|^0 density with a |t|⁻² kernel diverges
        assert_eq!(m.classify_point(C64::new(0.0, 0.0)), PointClass::A0);
        // close to the accumulation point: Σ 1/(k(1 + k/N)) = H_N for λ = -1/N
        let n = 10_000;
        let v = m.moment(Kernel::Pole(1), C64::new(-1.0 / n as f64, 0.0)).unwrap().value().unwrap();
        let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
        assert!((v.re - harmonic).abs() < 1e-9, "{v} vs {harmonic}");
    }

    #[test]
    fn difference_cancels_shared_parts() {
        let a = integers().with_atom(5.0, 1.0);
        let b = integers().with_atom(5.0, 0.25).with_atom(7.0, 1.0);
        let d = MeasureDifference::new(&a, &b);
        assert!(d.plus.families().is_empty());
        assert_eq!(d.plus.atoms(), &[Atom { t: 5.0, w: 0.75 }]);
        assert_eq!(d.minus.atoms(), &[Atom { t: 7.0, w: 1.0 }]);
        assert!(a.structurally_equal(&integers().with_atom(5.0, 1.0)));
        assert!(!a.structurally_equal(&b));
    }

    #[test]
    fn interval_set_gaps() {
        let s = IntervalSet::new(vec![(2.0, 3.0), (0.0, 1.0), (2.5, 4.0), (6.0, 6.0)]);
        assert_eq!(s.intervals(), &[(0.0, 1.0), (2.0, 4.0), (6.0, 6.0)]);
        assert_eq!(s.gaps_within(-1.0, 7.0), vec![(-1.0, 0.0), (1.0, 2.0), (4.0, 6.0), (6.0, 7.0)]);
        assert!(s.contains(6.0) && !s.contains(5.0));
        assert!(s.bounded_below() && s.bounded_above());
    }
}
