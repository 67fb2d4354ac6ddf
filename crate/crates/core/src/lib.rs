//! Numerical spectral theory for J-self-adjoint Sturm-Liouville operators
//! `A = (sgn x)(-d²/dx² + q)` with one turning point.
//!
//! The crate works with the functional model of such operators: a pair of
//! spectral measures `Σ±` and real constants `C±` determine the Weyl functions
//! `M±`, and the point spectrum, the algebraic multiplicities and the
//! essential/discrete spectrum are decided from moments of the measures.
//! Around that core sit an infinite-zone layer (Weyl data generated by band
//! edges), an ODE layer computing Titchmarsh-Weyl coefficients from a
//! potential, and tests for a singular critical point at zero.

pub mod critical;
pub mod eigen;
mod error;
pub mod expr;
pub mod infzone;
pub mod measure;
pub mod modelop;
pub mod quad;
pub mod roots;
pub mod spec;
pub mod sturm;
pub mod weyl;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub use critical::{CriticalVerdict, WeightFunction};
pub use eigen::{Algebraic, EigenCase, EigenReport, SpectralPair, SpectrumReport};
pub use infzone::{Side, ZoneSpec};
pub use measure::{IntegralValue, IntervalSet, PointClass, SpectralMeasure};
pub use modelop::ChainVector;
pub use sturm::PotentialSpec;
pub use weyl::{PhiFunction, WeylCoefficient};

use serde::{Deserialize, Serialize};

/// Numeric tolerances shared by the decision procedures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative tolerance for equality of integral values.
    pub rel: f64,
    /// Absolute floor for equality of integral values.
    pub abs_floor: f64,
    /// Absolute tolerance for zero tests on boundary limits of `Φ`.
    pub zero: f64,
    /// Absolute tolerance for boundary-condition residuals.
    pub domain: f64,
    /// Absolute target for quadrature.
    pub quad_abs: f64,
    /// Relative target for quadrature.
    pub quad_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rel: 1e-9,
            abs_floor: 1e-12,
            zero: 1e-9,
            domain: 1e-9,
            quad_abs: 1e-13,
            quad_rel: 1e-12,
        }
    }
}

impl Tolerances {
    /// `|a - b| <= max(rel * max(|a|,|b|), abs_floor)`.
    pub fn eq(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= (self.rel * a.abs().max(b.abs())).max(self.abs_floor)
    }

    pub fn eq_c(&self, a: C64, b: C64) -> bool {
        (a - b).norm() <= (self.rel * a.norm().max(b.norm())).max(self.abs_floor)
    }

    /// Classify a value against the zero tolerance and its ambiguity band.
    pub fn zero_test(&self, v: f64) -> ZeroTest {
        if v <= self.zero {
            ZeroTest::Zero
        } else if v <= 10.0 * self.zero {
            ZeroTest::Ambiguous
        } else {
            ZeroTest::NonZero
        }
    }
}

/// Outcome of a knife-edge zero test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroTest {
    Zero,
    Ambiguous,
    NonZero,
}

/// Branch of `√z` with the cut along `[0, ∞)`, `√(-1) = i` and `√t ≥ 0` on
/// `[0, ∞)`. Equivalently `Im √z ≥ 0` everywhere.
pub fn sqrt_cut_pos(z: C64) -> C64 {
    if z.im == 0.0 && z.re >= 0.0 {
        return C64::new(z.re.sqrt(), 0.0);
    }
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}
