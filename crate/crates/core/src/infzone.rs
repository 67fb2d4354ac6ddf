//! Weyl coefficients generated by band-edge data.
//!
//! A zone spec lists the bottom of the spectrum `μ₀ʳ` and gaps
//! `(μˡⱼ, μʳⱼ)` with a point `ξⱼ ∈ [μˡⱼ, μʳⱼ]` and a sign `εⱼ`. At
//! truncation level `N` the entire functions
//!
//! ```text
//! g(λ) = ∏ (ξⱼ-λ)/μˡⱼ
//! f(λ) = (λ-μ₀ʳ) ∏ (λ-μˡⱼ)(λ-μʳⱼ)/μˡⱼ²
//! k(λ) = g(λ) Σ εⱼ √(-f(ξⱼ)) / (g'(ξⱼ)(λ-ξⱼ))
//! h(λ) = (f(λ) + k(λ)²)/g(λ)
//! ```
//!
//! satisfy `hg - k² = f`, and `m±(λ) = ±g/(k ∓ i√f)` are Herglotz
//! functions. The indefinite operator has `M±(λ) = ±m±(±λ)`.
//!
//! Gaps with `μˡⱼ = μʳⱼ = ξⱼ` are collapsed: they contribute matching
//! factors to `g` and `√f` and nothing to the `k`-sum, so a finite list of
//! open gaps describes a finite-zone potential.

use crate::eigen::{Region, SpectralPair, SpectrumReport};
use crate::expr::RealFn;
use crate::measure::{DensityPiece, IntervalSet, PointClass, SpectralMeasure};
use crate::roots::bisect;
use crate::weyl::WeylCoefficient;
use crate::{sqrt_cut_pos, Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

/// Largest truncation level tried by the adaptive rule.
pub const MAX_LEVEL: usize = 1 << 16;
/// Target of the adaptive rule for the tail estimate of `m±`.
pub const TAIL_TARGET: f64 = 1e-10;

/// `+` for `m₊, M₊, Σ₊`; `-` for the reflected side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "+",
            Side::Minus => "-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub mul: f64,
    pub mur: f64,
    pub xi: f64,
    pub eps: f64,
}

impl Gap {
    pub fn is_open(&self) -> bool {
        self.mur > self.mul
    }
}

/// Gaps beyond the explicit list: `μˡⱼ = mul(j)`, `μʳⱼ = μˡⱼ + gap(j)`,
/// `ξⱼ = μˡⱼ + xi_frac·gap(j)` for the global index `j`.
#[derive(Debug, Clone)]
pub struct ZoneTail {
    pub mul: RealFn,
    pub gap: RealFn,
    pub xi_frac: f64,
    pub eps: f64,
}

/// Gap data and `√(-f(ξⱼ))/g'(ξⱼ)` coefficients at one truncation level.
#[derive(Debug)]
struct Level {
    gaps: Vec<Gap>,
    rho: Vec<f64>,
}

pub struct ZoneSpec {
    pub mu0r: f64,
    pub gaps: Vec<Gap>,
    pub tail: Option<ZoneTail>,
    pub truncation: Option<usize>,
    cache: Mutex<HashMap<usize, Arc<Level>>>,
}

impl Clone for ZoneSpec {
    fn clone(&self) -> Self {
        ZoneSpec {
            mu0r: self.mu0r,
            gaps: self.gaps.clone(),
            tail: self.tail.clone(),
            truncation: self.truncation,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl fmt::Debug for ZoneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZoneSpec")
            .field("mu0r", &self.mu0r)
            .field("gaps", &self.gaps)
            .field("tail", &self.tail)
            .field("truncation", &self.truncation)
            .finish()
    }
}

/// Values of `g, f, k, h` at one point and level, with a relative bound
/// for the omitted factors of the products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZoneValues {
    pub g: C64,
    pub f: C64,
    pub k: C64,
    pub h: C64,
    pub level: usize,
    pub tail_bound: f64,
}

/// A real eigenvalue of the decoupled operator on one half-line, with the
/// mass of the corresponding atom of `Σ±`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A0Eigenvalue {
    pub lambda: f64,
    pub weight: f64,
}

/// `g, k/g, √f/g, f/g` at a point away from the `ξⱼ` of open gaps.
struct Core {
    g: C64,
    f: C64,
    f_over_g: C64,
    k_over_g: C64,
    s_over_g: C64,
}

/// Principal `√(μ-λ)`, taking `λ` on ℝ as the limit from above.
fn sqrt_upper(mu: f64, l: C64) -> C64 {
    if l.im == 0.0 {
        let d = mu - l.re;
        if d >= 0.0 {
            C64::new(d.sqrt(), 0.0)
        } else {
            C64::new(0.0, -(-d).sqrt())
        }
    } else {
        (C64::new(mu, 0.0) - l).sqrt()
    }
}

impl ZoneSpec {
    pub fn new(mu0r: f64, gaps: Vec<Gap>) -> Result<Self> {
        let z = ZoneSpec {
            mu0r,
            gaps,
            tail: None,
            truncation: None,
            cache: Mutex::new(HashMap::new()),
        };
        z.validate()?;
        Ok(z)
    }

    /// Spec without gaps: the free operator, `m±(λ) = i/√(λ-μ₀ʳ)`.
    pub fn free(mu0r: f64) -> Self {
        ZoneSpec::new(mu0r, vec![]).expect("no gaps to validate")
    }

    pub fn with_tail(mut self, tail: ZoneTail) -> Result<Self> {
        self.tail = Some(tail);
        self.cache = Mutex::new(HashMap::new());
        self.validate()?;
        self.certify_summability()?;
        Ok(self)
    }

    pub fn with_truncation(mut self, n: usize) -> Self {
        self.truncation = Some(n);
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.mu0r.is_finite() {
            return Err(Error::Spec("μ₀ʳ must be finite".into()));
        }
        let check_gap = |j: usize, g: &Gap, prev: f64| -> Result<()> {
            let ok = g.mul.is_finite()
                && g.mur.is_finite()
                && g.mul > prev
                && g.mur >= g.mul
                && g.xi >= g.mul
                && g.xi <= g.mur
                && (g.eps == 1.0 || g.eps == -1.0)
                && g.mul != 0.0;
            if ok {
                Ok(())
            } else {
                Err(Error::Spec(format!(
                    "gap {j} ({}, {}, ξ={}, ε={}) violates μ₀ʳ < μˡ₁ ≤ μʳ₁ < μˡ₂ ≤ …, ξ ∈ [μˡ, μʳ], ε = ±1, μˡ ≠ 0",
                    g.mul, g.mur, g.xi, g.eps
                )))
            }
        };
        let mut prev = self.mu0r;
        for (i, g) in self.gaps.iter().enumerate() {
            check_gap(i + 1, g, prev)?;
            prev = g.mur;
        }
        if self.tail.is_some() {
            let start = self.gaps.len() + 1;
            for j in start..start + 256 {
                let g = self.gap(j);
                check_gap(j, &g, prev)?;
                prev = g.mur;
            }
        }
        Ok(())
    }

    /// Power-law fits of `μʳⱼ(μʳⱼ-μˡⱼ)` and `1/μˡⱼ` along the tail must
    /// decay faster than `1/j`.
    fn certify_summability(&self) -> Result<()> {
        let j0 = (self.gaps.len() + 1).max(1024);
        let terms: [(&str, Box<dyn Fn(&Gap) -> f64>); 2] = [
            ("μʳ(μʳ-μˡ)", Box::new(|g: &Gap| g.mur * (g.mur - g.mul))),
            ("1/μˡ", Box::new(|g: &Gap| 1.0 / g.mul.abs())),
        ];
        for (name, t) in terms.iter() {
            for k in 0..3 {
                let j = j0 << k;
                let (a, b) = (t(&self.gap(j)), t(&self.gap(2 * j)));
                if a == 0.0 && b == 0.0 {
                    continue;
                }
                let p = (a / b).log2();
                if !(p > 1.05) || !a.is_finite() {
                    return Err(Error::SummabilityUncertified(format!(
                        "{name} decays like j^-{p:.3} near j = {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Gap `j` (1-based), explicit or from the tail formulas.
    pub fn gap(&self, j: usize) -> Gap {
        if j <= self.gaps.len() {
            return self.gaps[j - 1];
        }
        let t = self.tail.as_ref().expect("gap index beyond a finite spec");
        let x = j as f64;
        let mul = t.mul.eval(x);
        let w = t.gap.eval(x).max(0.0);
        Gap {
            mul,
            mur: mul + w,
            xi: mul + t.xi_frac * w,
            eps: t.eps,
        }
    }

    /// Number of gaps actually used at requested level `n`.
    pub fn effective_level(&self, n: usize) -> usize {
        if self.tail.is_some() {
            n
        } else {
            n.min(self.gaps.len())
        }
    }

    fn level(&self, n: usize) -> Arc<Level> {
        let n = self.effective_level(n);
        if let Some(l) = self.cache.lock().expect("cache lock").get(&n) {
            return l.clone();
        }
        let gaps: Vec<Gap> = (1..=n).map(|j| self.gap(j)).collect();
        let rho = rho_coefficients(self.mu0r, &gaps);
        let lvl = Arc::new(Level { gaps, rho });
        self.cache.lock().expect("cache lock").insert(n, lvl.clone());
        lvl
    }

    /// `Σ_{j>n} term(gap j)`: exact for finite specs, otherwise summed to
    /// `4n` and extended by a power-law fit of the last terms.
    fn tail_sum(&self, n: usize, term: impl Fn(&Gap) -> f64) -> Result<f64> {
        let Some(_) = &self.tail else {
            return Ok(self.gaps.iter().skip(n).map(&term).sum());
        };
        let big_j = (4 * n).max(self.gaps.len() + 64).max(256);
        let sum: f64 = (n + 1..=big_j).map(|j| term(&self.gap(j))).sum();
        let (a, b) = (term(&self.gap(big_j / 2)), term(&self.gap(big_j)));
        if b == 0.0 {
            return Ok(sum);
        }
        let p = (a / b).log2();
        if !(p > 1.05) {
            return Err(Error::SummabilityUncertified(format!(
                "tail terms decay like j^-{p:.3} near j = {big_j}"
            )));
        }
        Ok(sum + b * big_j as f64 / (p - 1.0))
    }

    /// Estimated effect on `m±(λ)` of the gaps beyond level `n`.
    pub fn m_tail_bound(&self, l: C64, n: usize) -> Result<f64> {
        self.tail_sum(self.effective_level(n), |g| {
            let w = g.mur - g.mul;
            if w == 0.0 {
                return 0.0;
            }
            w / (C64::new(g.mul, 0.0) - l).norm().max(1e-300)
                + 0.5 * g.mur.abs().sqrt() * w / (l - g.xi).norm().max(1e-300)
        })
    }

    /// Truncation level used at `λ`: the fixed one if set, otherwise doubled
    /// until [`ZoneSpec::m_tail_bound`] is below [`TAIL_TARGET`].
    pub fn level_at(&self, l: C64) -> Result<usize> {
        if let Some(n) = self.truncation {
            return Ok(self.effective_level(n));
        }
        if self.tail.is_none() {
            return Ok(self.gaps.len());
        }
        let mut n = self.gaps.len().max(8);
        while n < MAX_LEVEL && self.m_tail_bound(l, n)? >= TAIL_TARGET {
            n *= 2;
        }
        Ok(n.min(MAX_LEVEL))
    }

    /// Level for global objects (measures, `A₀` eigenvalues).
    pub fn global_level(&self) -> Result<usize> {
        self.level_at(C64::new(self.mu0r - 1.0, 1.0))
    }

    fn core(&self, lvl: &Level, l: C64) -> Core {
        let mut g = C64::new(1.0, 0.0);
        let mut f = l - self.mu0r;
        let mut fog = l - self.mu0r;
        let mut s = sqrt_cut_pos(l - self.mu0r);
        let mut kog = C64::new(0.0, 0.0);
        for (gp, &rho) in lvl.gaps.iter().zip(&lvl.rho) {
            let d = C64::new(gp.xi, 0.0) - l;
            let gf = d / gp.mul;
            let ff = (l - gp.mul) * (l - gp.mur) / (gp.mul * gp.mul);
            g *= gf;
            f *= ff;
            if gp.is_open() {
                fog *= ff / gf;
                s *= sqrt_upper(gp.mul, l) * sqrt_upper(gp.mur, l) / d;
                kog -= rho / d;
            } else {
                fog *= gf;
            }
        }
        Core {
            g,
            f,
            f_over_g: fog,
            k_over_g: kog,
            s_over_g: s,
        }
    }

    /// Distance from `λ` to the nearest `ξⱼ` of an open gap and that `ξ`.
    fn nearest_open_xi(lvl: &Level, l: C64) -> Option<(f64, f64)> {
        lvl.gaps
            .iter()
            .filter(|g| g.is_open())
            .map(|g| ((l - g.xi).norm(), g.xi))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// `(k, h)` at `λ`; near an open `ξⱼ`, where both are computed as
    /// `0·∞`, by the mean value property of the entire functions on a small
    /// circle.
    fn k_h(&self, lvl: &Level, l: C64) -> (C64, C64) {
        let direct = |z: C64| {
            let c = self.core(lvl, z);
            (c.g * c.k_over_g, c.f_over_g + c.g * c.k_over_g * c.k_over_g)
        };
        match Self::nearest_open_xi(lvl, l) {
            Some((d, xi)) if d < 1e-7 * xi.abs().max(1.0) => {
                let spacing = lvl
                    .gaps
                    .iter()
                    .filter(|g| g.xi != xi)
                    .map(|g| (g.xi - xi).abs().min((g.mul - xi).abs()))
                    .fold(f64::INFINITY, f64::min);
                let r = (1e-4 * xi.abs().max(1.0)).min(0.25 * spacing);
                let n = 32;
                let (mut k, mut h) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for i in 0..n {
                    let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
                    let (a, b) = direct(l + C64::from_polar(r, th));
                    k += a;
                    h += b;
                }
                (k / n as f64, h / n as f64)
            }
            _ => direct(l),
        }
    }

    /// `g, f, k, h` at level `n`.
    pub fn build_zone_functions(&self, l: C64, n: usize) -> Result<ZoneValues> {
        let lvl = self.level(n);
        if lvl.gaps.iter().any(|g| g.is_open() && l == C64::new(g.xi, 0.0)) {
            return Err(Error::AtXi(l.re));
        }
        let c = self.core(&lvl, l);
        let k = c.g * c.k_over_g;
        let h = c.f_over_g + c.g * c.k_over_g * c.k_over_g;
        let tail_bound = self.tail_sum(lvl.gaps.len(), |g| {
            (2.0 * l.norm() + 2.0 * (g.mur - g.mul) + (g.xi - g.mul)) / g.mul.abs()
        })?;
        Ok(ZoneValues {
            g: c.g,
            f: c.f,
            k,
            h,
            level: lvl.gaps.len(),
            tail_bound,
        })
    }

    /// `max |h g - k² - f| / (1 + |f|)` over `samples` at level `n`.
    pub fn identity_residual(&self, samples: &[C64], n: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for &l in samples {
            let v = self.build_zone_functions(l, n)?;
            worst = worst.max((v.h * v.g - v.k * v.k - v.f).norm() / (1.0 + v.f.norm()));
        }
        Ok(worst)
    }

    /// `m±(λ)` at level `n`, cross-checked against `±(k ± i√f)/h`.
    pub fn m_at_level(&self, l: C64, side: Side, n: usize) -> Result<C64> {
        if l.im < 0.0 {
            return self.m_at_level(l.conj(), side, n).map(|v| v.conj());
        }
        let sg = side.sign();
        let i = C64::i();
        let lvl = self.level(n);
        if let Some((d, _)) = Self::nearest_open_xi(&lvl, l) {
            if d == 0.0 {
                // g = 0: only the second form is usable
                let (k, h) = self.k_h(&lvl, l);
                let s = self.s_direct(&lvl, l);
                return Ok(sg * (k + sg * i * s) / h);
            }
        }
        let c = self.core(&lvl, l);
        let m = sg / (c.k_over_g - sg * i * c.s_over_g);
        let k = c.g * c.k_over_g;
        let s = c.g * c.s_over_g;
        let gk2 = c.g * c.k_over_g * c.k_over_g;
        let h = c.f_over_g + gk2;
        let alt = sg * (k + sg * i * s) / h;
        let cond = 1.0 + (c.f_over_g.norm() + gk2.norm()) / h.norm().max(1e-300);
        let scale = m.norm().max(1.0);
        if !m.is_finite() {
            return Err(Error::Numeric(format!("m{side}({l}) is not finite")));
        }
        if alt.is_finite() && (m - alt).norm() > 1e-9 * scale * cond {
            return Err(Error::BranchAmbiguity(format!(
                "m{side}({l}): {m} vs {alt} from (k ± i√f)/h"
            )));
        }
        if l.im > 0.0 && m.im < -1e-10 * scale {
            return Err(Error::BranchAmbiguity(format!("Im m{side}({l}) = {} < 0", m.im)));
        }
        Ok(m)
    }

    /// `√f` directly from the factored product.
    fn s_direct(&self, lvl: &Level, l: C64) -> C64 {
        let mut s = sqrt_cut_pos(l - self.mu0r);
        for gp in &lvl.gaps {
            if gp.is_open() {
                s *= sqrt_upper(gp.mul, l) * sqrt_upper(gp.mur, l) / gp.mul;
            } else {
                s *= (C64::new(gp.xi, 0.0) - l) / gp.mul;
            }
        }
        s
    }

    /// `m±(λ)` at the adaptive (or fixed) level.
    pub fn m_coefficient(&self, l: C64, side: Side) -> Result<C64> {
        let n = self.level_at(l)?;
        self.m_at_level(l, side, n)
    }

    /// `M±(λ) = ±m±(±λ)`.
    pub fn indefinite_weyl(&self, l: C64, side: Side) -> Result<C64> {
        match side {
            Side::Plus => self.m_coefficient(l, Side::Plus),
            Side::Minus => Ok(-self.m_coefficient(-l, Side::Minus)?),
        }
    }

    /// Closed bands of `L` below `hi` at level `n`, i.e. `σ(L) ∩ (-∞, hi]`
    /// for finite specs.
    pub fn bands(&self, n: usize) -> IntervalSet {
        let lvl = self.level(n);
        let mut out = Vec::new();
        let mut lo = self.mu0r;
        for g in lvl.gaps.iter().filter(|g| g.is_open()) {
            out.push((lo, g.mul));
            lo = g.mur;
        }
        out.push((lo, f64::INFINITY));
        IntervalSet::new(out)
    }

    /// `τ` lies in a closed band, checking all gaps with `μˡ ≤ τ`.
    fn in_band(&self, tau: f64) -> bool {
        if tau < self.mu0r {
            return false;
        }
        let mut j = 1;
        loop {
            if j > self.gaps.len() && self.tail.is_none() {
                return true;
            }
            let g = self.gap(j);
            if g.mul >= tau {
                return true;
            }
            if tau < g.mur {
                return false;
            }
            j += 1;
        }
    }

    /// `Σ'±(t) = Im m±(±t + i0)/π = √f(±t)/(π h(±t))`.
    pub fn band_density(&self, t: f64, side: Side) -> Result<f64> {
        let tau = side.sign() * t;
        if !self.in_band(tau) {
            return Err(Error::OutsideBand(t));
        }
        let m = self.m_coefficient(C64::new(tau, 0.0), side)?;
        Ok((m.im / std::f64::consts::PI).max(0.0))
    }

    /// Zeros of `h` off `σ(L)` at level `n`, each with `k ± i√f` there.
    fn h_zeros(&self, n: usize) -> Result<Vec<(f64, C64, C64)>> {
        let lvl = self.level(n);
        let h = |x: f64| -> Result<f64> { Ok(self.k_h(&lvl, C64::new(x, 0.0)).1.re) };
        let mut brackets = Vec::new();
        for g in lvl.gaps.iter().filter(|g| g.is_open()) {
            let m = 64;
            let xs: Vec<f64> = (0..=m).map(|i| g.mul + (g.mur - g.mul) * i as f64 / m as f64).collect();
            let hs = xs.iter().map(|&x| h(x)).collect::<Result<Vec<_>>>()?;
            for i in 0..m {
                if hs[i] * hs[i + 1] < 0.0 || (hs[i + 1] == 0.0 && i + 1 < m) {
                    brackets.push((xs[i], xs[i + 1]));
                }
            }
        }
        // One more zero may sit below μ₀ʳ.
        let h0 = h(self.mu0r)?;
        let mut d = 1.0;
        while d < 1e12 {
            let x = self.mu0r - d;
            if h(x)? * h0 < 0.0 {
                brackets.push((x, self.mu0r));
                break;
            }
            d *= 2.0;
        }
        let mut out = Vec::new();
        for (a, b) in brackets {
            let x = bisect(&h, a, b, 1e-15 * a.abs().max(b.abs()).max(1.0))?;
            let edge = lvl
                .gaps
                .iter()
                .flat_map(|g| [g.mul, g.mur])
                .chain([self.mu0r])
                .any(|e| (e - x).abs() <= 1e-12 * e.abs().max(1.0));
            if edge {
                continue;
            }
            let z = C64::new(x, 0.0);
            let (k, _) = self.k_h(&lvl, z);
            let s = self.s_direct(&lvl, z);
            let i = C64::i();
            out.push((x, k + i * s, k - i * s));
        }
        Ok(out)
    }

    /// `h'(x)` from Cauchy's formula on a small circle.
    fn h_prime(&self, n: usize, x: f64) -> C64 {
        let lvl = self.level(n);
        let r = 1e-4 * x.abs().max(1.0);
        let m = 32;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..m {
            let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
            let e = C64::from_polar(1.0, th);
            acc += self.k_h(&lvl, C64::new(x, 0.0) + e * r).1 / e;
        }
        acc / (m as f64 * r)
    }

    /// Real eigenvalues of the decoupled half-line operator `A₀±`: zeros
    /// `τ` of `h` off `σ(L)` with `k(τ) ± i√f(τ) ≠ 0`, reported at `±τ`
    /// with the mass of the atom of `Σ±` there.
    pub fn a0_discrete(&self, side: Side) -> Result<Vec<A0Eigenvalue>> {
        let n = self.global_level()?;
        let mut out = Vec::new();
        for (x, kp, km) in self.h_zeros(n)? {
            // Exactly one of k ± i√f vanishes at a zero of h.
            let (num, other) = match side {
                Side::Plus => (kp, km),
                Side::Minus => (km, kp),
            };
            if num.norm() <= other.norm() {
                continue;
            }
            let hp = self.h_prime(n, x);
            let weight = match side {
                Side::Plus => -(num / hp).re,
                Side::Minus => (num / hp).re,
            };
            out.push(A0Eigenvalue {
                lambda: side.sign() * x,
                weight,
            });
        }
        out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        Ok(out)
    }

    /// `Σ±` rebuilt from band densities and `A₀±` atoms, with `C± = Re M±(i)`.
    pub fn spectral_measure(&self, side: Side) -> Result<WeylCoefficient> {
        let n = self.global_level()?;
        let sg = side.sign();
        let z = Arc::new(self.clone().with_truncation(n));
        let mut m = SpectralMeasure::new();
        for &(lo, hi) in self.bands(n).intervals() {
            let zz = z.clone();
            let dens = RealFn::native(&format!("zone density {side} on [{lo}, {hi}] at level {n}"), move |t| {
                zz.band_density(t, side).unwrap_or(f64::NAN)
            });
            let inf = if hi.is_infinite() { -0.5 } else { 0.0 };
            let piece = if sg > 0.0 {
                DensityPiece::new(lo, hi, dens, 0.5, 0.5, inf)
            } else {
                DensityPiece::new(-hi, -lo, dens, 0.5, 0.5, inf)
            };
            m = m.with_piece(piece);
        }
        for a in z.a0_discrete(side)? {
            if a.weight <= 0.0 {
                return Err(Error::Numeric(format!(
                    "atom of Σ{side} at {} has non-positive mass {}",
                    a.lambda, a.weight
                )));
            }
            m = m.with_atom(a.lambda, a.weight);
        }
        let c = z.indefinite_weyl(C64::i(), side)?.re;
        Ok(WeylCoefficient::new(m, c))
    }

    /// Spectral pair of `A = (sgn x)L` rebuilt from the zone data.
    pub fn spectral_pair(&self) -> Result<SpectralPair> {
        Ok(SpectralPair::new(
            self.spectral_measure(Side::Plus)?,
            self.spectral_measure(Side::Minus)?,
        ))
    }

    /// Points spread over the bands of `±L` inside `[a, b]`, edges included.
    pub fn band_probe_points(&self, a: f64, b: f64, per_band: usize) -> Result<Vec<(f64, Side)>> {
        let n = self.global_level()?;
        let mut out = Vec::new();
        for side in [Side::Plus, Side::Minus] {
            for &(lo, hi) in self.bands(n).intervals() {
                let (lo, hi) = if side == Side::Plus { (lo, hi) } else { (-hi, -lo) };
                let (lo, hi) = (lo.max(a), hi.min(b));
                if lo > hi {
                    continue;
                }
                for i in 0..=per_band {
                    out.push((lo + (hi - lo) * i as f64 / per_band.max(1) as f64, side));
                }
            }
        }
        Ok(out)
    }

    /// Essential bands, discrete eigenvalues in `region` and a probe of the
    /// band points: a point of `σ(±L)` classified other than `A₀` for `Σ±`
    /// would allow an embedded eigenvalue and is reported as a warning.
    pub fn indefinite_spectrum(&self, region: Region, k_max: usize) -> Result<SpectrumReport> {
        let pair = self.spectral_pair()?;
        let mut rep = pair.discrete_spectrum(region, k_max)?;
        let (a, b) = match region {
            Region::Interval(a, b) => (a, b),
            Region::Rect(r) => (r.x0, r.x1),
        };
        for (x, side) in self.band_probe_points(a, b, 8)? {
            let m = match side {
                Side::Plus => &pair.plus().measure,
                Side::Minus => &pair.minus().measure,
            };
            let class = m.classify_point(C64::new(x, 0.0));
            if class != PointClass::A0 {
                rep.warnings.push(format!("band point {x} of Σ{side} classified {class:?}"));
            }
        }
        Ok(rep)
    }
}

/// `εⱼ √(-f(ξⱼ))/g'(ξⱼ)` for every gap, in log form. Collapsed gaps cancel
/// from the ratio and get 0.
fn rho_coefficients(mu0r: f64, gaps: &[Gap]) -> Vec<f64> {
    let sign_mul: f64 = gaps.iter().map(|g| g.mul.signum()).product();
    (0..gaps.len())
        .into_par_iter()
        .map(|j| {
            let gj = gaps[j];
            if !gj.is_open() {
                return 0.0;
            }
            let x = gj.xi;
            let mut lg = 0.5 * ((x - mu0r).abs().ln() + (x - gj.mul).abs().ln() + (gj.mur - x).abs().ln());
            for (i, gi) in gaps.iter().enumerate() {
                if i != j && gi.is_open() {
                    lg += 0.5 * ((x - gi.mul).abs().ln() + (x - gi.mur).abs().ln()) - (gi.xi - x).abs().ln();
                }
            }
            // sign g'(ξⱼ) = -(-1)^j ∏ sign μˡᵢ
            let sign_gp = if j % 2 == 0 { -sign_mul } else { sign_mul };
            gj.eps * sign_gp * lg.exp()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::{stieltjes_invert, EPS_SCHEDULE};

    fn one_gap() -> ZoneSpec {
        ZoneSpec::new(
            0.0,
            vec![Gap {
                mul: 1.0,
                mur: 2.0,
                xi: 1.5,
                eps: 1.0,
            }],
        )
        .unwrap()
    }

    fn two_gaps() -> ZoneSpec {
        ZoneSpec::new(
            0.5,
            vec![
                Gap {
                    mul: 1.0,
                    mur: 1.6,
                    xi: 1.2,
                    eps: -1.0,
                },
                Gap {
                    mul: 3.0,
                    mur: 3.0,
                    xi: 3.0,
                    eps: 1.0,
                },
                Gap {
                    mul: 4.0,
                    mur: 4.5,
                    xi: 4.4,
                    eps: 1.0,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn one_gap_hand_values() {
        let v = one_gap().build_zone_functions(C64::new(-1.0, 0.0), 1).unwrap();
        assert!((v.g - 2.5).norm() < 1e-15);
        assert!((v.f + 6.0).norm() < 1e-14);
        assert!((v.k - 0.375f64.sqrt()).norm() < 1e-14, "{}", v.k);
        assert!((v.h + 2.25).norm() < 1e-14, "{}", v.h);
        assert_eq!(v.tail_bound, 0.0);
        let f0 = one_gap().build_zone_functions(C64::new(0.0, 0.0), 1).unwrap().f;
        assert_eq!(f0, C64::new(0.0, 0.0));
        assert_eq!(
            one_gap().build_zone_functions(C64::new(1.5, 0.0), 1),
            Err(Error::AtXi(1.5))
        );
    }

    #[test]
    fn identity_holds_and_collapsed_gaps_give_zero_k() {
        let samples: Vec<C64> = (0..40)
            .map(|i| C64::from_polar(0.3 + 0.2 * i as f64, 0.7 * i as f64 + 0.1))
            .collect();
        for z in [one_gap(), two_gaps()] {
            for n in 0..=3 {
                assert!(z.identity_residual(&samples, n).unwrap() < 1e-12);
            }
        }
        let collapsed = ZoneSpec::new(
            0.0,
            vec![Gap {
                mul: 2.0,
                mur: 2.0,
                xi: 2.0,
                eps: 1.0,
            }],
        )
        .unwrap();
        let v = collapsed.build_zone_functions(C64::new(0.3, 0.7), 1).unwrap();
        assert_eq!(v.k, C64::new(0.0, 0.0));
        assert!((v.h * v.g - v.f).norm() < 1e-15);
    }

    #[test]
    fn free_case_is_inverse_square_root() {
        let z = ZoneSpec::free(0.0);
        for l in [C64::new(0.3, 0.5), C64::new(-2.0, 0.1), C64::new(5.0, -1.0)] {
            let mp = z.m_coefficient(l, Side::Plus).unwrap();
            assert!((mp - C64::i() / sqrt_cut_pos(l)).norm() < 1e-14);
            let mm = z.indefinite_weyl(l, Side::Minus).unwrap();
            assert!((mm + C64::i() / sqrt_cut_pos(-l)).norm() < 1e-14);
        }
        assert!((z.band_density(1.0, Side::Plus).unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!(z.a0_discrete(Side::Plus).unwrap().is_empty());
        assert!(z.a0_discrete(Side::Minus).unwrap().is_empty());
        // collapsed gaps change nothing
        let c = ZoneSpec::new(
            0.0,
            vec![Gap {
                mul: 2.0,
                mur: 2.0,
                xi: 2.0,
                eps: 1.0,
            }],
        )
        .unwrap();
        let l = C64::new(1.3, 0.4);
        assert!((c.m_coefficient(l, Side::Plus).unwrap() - z.m_coefficient(l, Side::Plus).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn herglotz_and_real_on_gaps() {
        let z = two_gaps();
        for i in 0..200 {
            let l = C64::new(-3.0 + 0.05 * i as f64, 0.01 + 0.02 * (i % 7) as f64);
            for side in [Side::Plus, Side::Minus] {
                let m = z.m_coefficient(l, side).unwrap();
                assert!(m.im >= -1e-12, "{l} {side} {m}");
                let mc = z.m_coefficient(l.conj(), side).unwrap();
                assert!((mc - m.conj()).norm() < 1e-14);
            }
        }
        let m = z.m_coefficient(C64::new(1.3, 0.0), Side::Plus).unwrap();
        assert!(m.im.abs() < 1e-14 * m.norm().max(1.0), "{m}");
        // one-gap spec at λ = -1: g/(k + √6)
        let m = one_gap().m_coefficient(C64::new(-1.0, 0.0), Side::Plus).unwrap();
        assert!((m - 2.5 / (0.375f64.sqrt() + 6f64.sqrt())).norm() < 1e-14, "{m}");
    }

    #[test]
    fn band_density_matches_inversion() {
        for z in [one_gap(), two_gaps()] {
            for t in [0.6, 2.5, 5.0] {
                for side in [Side::Plus, Side::Minus] {
                    let tt = side.sign() * t;
                    let d = z.band_density(tt, side).unwrap();
                    let inv = stieltjes_invert(|l| z.indefinite_weyl(l, side), tt, &EPS_SCHEDULE).unwrap();
                    assert!((d - inv.density).abs() < 1e-6, "{t} {side}: {d} vs {}", inv.density);
                }
            }
        }
        assert_eq!(one_gap().band_density(1.5, Side::Plus), Err(Error::OutsideBand(1.5)));
        assert_eq!(one_gap().band_density(1.0, Side::Plus), Ok(0.0));
        // square-root edge behavior
        let z = one_gap();
        let r: Vec<f64> = [1e-4, 1e-6]
            .iter()
            .map(|e| z.band_density(2.0 + e, Side::Plus).unwrap() / e.sqrt())
            .collect();
        assert!((r[0] / r[1] - 1.0).abs() < 1e-2, "{r:?}");
    }

    #[test]
    fn h_zeros_and_atoms() {
        let z = one_gap();
        let lvl = z.level(1);
        let plus = z.a0_discrete(Side::Plus).unwrap();
        let minus = z.a0_discrete(Side::Minus).unwrap();
        let all: Vec<f64> = plus.iter().map(|a| a.lambda).chain(minus.iter().map(|a| -a.lambda)).collect();
        assert!(all.iter().any(|&x| (1.0..=2.0).contains(&x)), "{all:?}");
        for &x in &all {
            assert!(z.k_h(&lvl, C64::new(x, 0.0)).1.norm() < 1e-10);
        }
        // masses are residues of M± at the atoms
        for (side, atoms) in [(Side::Plus, &plus), (Side::Minus, &minus)] {
            for a in atoms {
                assert!(a.weight > 0.0);
                let e = 1e-6;
                let v = z.indefinite_weyl(C64::new(a.lambda, e), side).unwrap();
                assert!(((v.im * e) - a.weight).abs() < 1e-5 * a.weight.max(1.0), "{side} {a:?} {v}");
            }
        }
    }

    #[test]
    fn rebuilt_measures_reproduce_m() {
        let z = two_gaps();
        for side in [Side::Plus, Side::Minus] {
            let w = z.spectral_measure(side).unwrap();
            for l in [C64::new(0.3, 1.0), C64::new(-2.0, 0.5), C64::new(4.2, 0.2)] {
                let a = w.eval(l).unwrap();
                let b = z.indefinite_weyl(l, side).unwrap();
                assert!((a - b).norm() < 1e-8 * b.norm().max(1.0), "{side} {l}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn tail_specs_converge() {
        let tail = ZoneTail {
            mul: RealFn::parse("j^2", "j").unwrap(),
            gap: RealFn::parse("1/j^4", "j").unwrap(),
            xi_frac: 0.5,
            eps: 1.0,
        };
        let z = ZoneSpec::new(0.0, vec![]).unwrap().with_tail(tail).unwrap();
        let l = C64::new(0.7, 0.3);
        let mut prev = f64::INFINITY;
        for n in [4, 8, 16, 32] {
            let d = (z.m_at_level(l, Side::Plus, n).unwrap() - z.m_at_level(l, Side::Plus, 2 * n).unwrap()).norm();
            let bound = z.m_tail_bound(l, n).unwrap();
            assert!(d <= 10.0 * bound && d < prev, "{n}: {d} vs {bound}");
            prev = d;
        }
        let slow = ZoneTail {
            mul: RealFn::parse("j", "j").unwrap(),
            gap: RealFn::parse("0.1/j", "j").unwrap(),
            xi_frac: 0.5,
            eps: 1.0,
        };
        assert!(matches!(
            ZoneSpec::new(0.0, vec![]).unwrap().with_tail(slow),
            Err(Error::SummabilityUncertified(_))
        ));
    }

    #[test]
    fn invalid_specs() {
        let bad = |mul, mur, xi, eps| ZoneSpec::new(0.0, vec![Gap { mul, mur, xi, eps }]).is_err();
        assert!(bad(-1.0, 1.0, 0.0, 1.0));
        assert!(bad(1.0, 0.5, 0.7, 1.0));
        assert!(bad(1.0, 2.0, 3.0, 1.0));
        assert!(bad(1.0, 2.0, 1.5, 0.5));
    }

    #[test]
    fn indefinite_spectrum_examples() {
        use crate::roots::Rect;
        let free = ZoneSpec::free(0.0);
        let rep = free
            .indefinite_spectrum(Region::Rect(Rect::new(-10.0, 10.0, -10.0, 10.0)), 8)
            .unwrap();
        assert!(rep.discrete.is_empty(), "{:?}", rep.discrete);
        assert!(rep.warnings.is_empty(), "{:?}", rep.warnings);
        assert_eq!(rep.essential.intervals(), &[(f64::NEG_INFINITY, f64::INFINITY)]);
        let z = one_gap();
        let rep = z.indefinite_spectrum(Region::Rect(Rect::new(-4.0, 4.0, -3.0, 3.0)), 8).unwrap();
        assert!(rep.warnings.is_empty(), "{:?}", rep.warnings);
        for e in &rep.discrete {
            let phi = z.indefinite_weyl(e.lambda, Side::Plus).unwrap() - z.indefinite_weyl(e.lambda, Side::Minus).unwrap();
            assert!(phi.norm() < 1e-8, "{e:?} {phi}");
        }
        eprintln!("{:?}", rep.discrete);
    }
}
