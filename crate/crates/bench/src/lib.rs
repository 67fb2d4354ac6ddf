//! Fixtures shared by the kernel benchmarks.

use indefspec::infzone::{Gap, ZoneSpec};
use indefspec::measure::AtomFamily;
use indefspec::{SpectralMeasure, SpectralPair, WeylCoefficient};

/// Unit atoms at the integers given by `pos`.
pub fn family(pos: &str) -> SpectralMeasure {
    SpectralMeasure::new().with_family(AtomFamily::parse(pos, "1", None, None, 0.0, None).expect("valid family"))
}

/// Atoms at even integers against atoms at odd integers, `Φ = c - π/sin(πλ)` on (0, 1).
pub fn even_odd(c: f64) -> SpectralPair {
    SpectralPair::new(WeylCoefficient::new(family("2*k"), c), WeylCoefficient::new(family("2*k + 1"), 0.0))
}

/// Integer atoms against integer atoms plus extra atoms at ±5, a triple zero at 0.
pub fn triple_zero() -> SpectralPair {
    let plus = family("k").with_atom(5.0, 1.0).with_atom(-5.0, 1.0);
    SpectralPair::new(WeylCoefficient::new(plus, 0.0), WeylCoefficient::new(family("k"), 0.0))
}

/// `n` open gaps of length 1/2 at 2, 4, 6, ...
pub fn zone(n: usize) -> ZoneSpec {
    let gaps = (1..=n)
        .map(|j| {
            let mul = 2.0 * j as f64;
            Gap { mul, mur: mul + 0.5, xi: mul + 0.25, eps: if j % 2 == 0 { 1.0 } else { -1.0 } }
        })
        .collect();
    ZoneSpec::new(0.0, gaps).expect("valid zone")
}
