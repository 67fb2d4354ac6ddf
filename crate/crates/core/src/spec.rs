//! Serde schemas for the JSON/TOML input files and their conversion into
//! library objects.

use crate::expr::RealFn;
use crate::infzone::{Gap, ZoneSpec, ZoneTail};
use crate::measure::{AtomFamily, DensityPiece, SpectralMeasure};
use crate::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// Extended real number. Serializes infinities as `"inf"`/`"-inf"` and
/// accepts numbers, those strings, and `null` (read as infinite by context).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else if self.0 < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = ExtReal;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, \"inf\", \"-inf\" or null")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "+inf" | "infinity" | "+infinity" => Ok(ExtReal(f64::INFINITY)),
                    "-inf" | "-infinity" => Ok(ExtReal(f64::NEG_INFINITY)),
                    s => s.parse::<f64>().map(ExtReal).map_err(E::custom),
                }
            }
            fn visit_unit<E: serde::de::Error>(self) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(f64::NAN))
            }
            fn visit_none<E: serde::de::Error>(self) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(f64::NAN))
            }
        }
        d.deserialize_any(V)
    }
}

/// Read a JSON or TOML file (chosen by extension; JSON otherwise).
pub fn load_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Spec(format!("{}: {e}", path.display())))?;
    parse_str(&text, path.extension().and_then(|e| e.to_str()) == Some("toml"))
        .map_err(|e| Error::Spec(format!("{}: {e}", path.display())))
}

/// Parse JSON (or TOML when `toml` is set).
pub fn parse_str<T: DeserializeOwned>(text: &str, toml: bool) -> Result<T> {
    if toml {
        toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    } else {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomSpec {
    pub t: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    /// Position expression in the index `k`.
    pub positions: String,
    /// Weight expression in `k`.
    pub weights: String,
    /// Index range `[lo, hi]`; `null`/`"inf"` entries are open.
    #[serde(default = "open_range")]
    pub range: [ExtReal; 2],
    pub tail_exponent: f64,
    /// Finite accumulation point; omitted for families running to infinity.
    #[serde(default)]
    pub accumulation: Option<f64>,
}

fn open_range() -> [ExtReal; 2] {
    [ExtReal(f64::NAN), ExtReal(f64::NAN)]
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Exponents {
    #[serde(default)]
    pub left: f64,
    #[serde(default)]
    pub right: f64,
    #[serde(default)]
    pub infinity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensitySpec {
    pub interval: [ExtReal; 2],
    /// Density expression in `t`.
    pub expr: String,
    #[serde(default)]
    pub exponents: Exponents,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Measure file. `C` is the real constant of the Weyl coefficient.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    #[serde(default, alias = "atom_families")]
    pub atom_family: Option<OneOrMany<FamilySpec>>,
    #[serde(default)]
    pub densities: Vec<DensitySpec>,
    #[serde(default)]
    pub total_mass_infinite: Option<bool>,
    #[serde(default, rename = "C")]
    pub c: Option<f64>,
}

fn range_bound(x: ExtReal, lower: bool) -> Result<Option<i64>> {
    let v = x.0;
    if v.is_nan() || v.is_infinite() {
        if v.is_infinite() && (v > 0.0) == lower {
            return Err(Error::Spec(format!("index range bound {v} on the wrong side")));
        }
        return Ok(None);
    }
    if v.fract() != 0.0 {
        return Err(Error::Spec(format!("index range bound {v} is not an integer")));
    }
    Ok(Some(v as i64))
}

fn interval_end(x: ExtReal, lower: bool) -> f64 {
    if x.0.is_nan() {
        if lower {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        x.0
    }
}

impl MeasureSpec {
    pub fn build(&self) -> Result<SpectralMeasure> {
        let mut m = SpectralMeasure::new();
        for a in &self.atoms {
            m.push_atom_raw(a.t, a.w);
        }
        if let Some(fams) = &self.atom_family {
            for f in fams.to_vec() {
                let fam = AtomFamily::parse(
                    &f.positions,
                    &f.weights,
                    range_bound(f.range[0], true)?,
                    range_bound(f.range[1], false)?,
                    f.tail_exponent,
                    f.accumulation,
                )?;
                m = m.with_family(fam);
            }
        }
        for d in &self.densities {
            let p = DensityPiece::parse(
                interval_end(d.interval[0], true),
                interval_end(d.interval[1], false),
                &d.expr,
                d.exponents.left,
                d.exponents.right,
                d.exponents.infinity,
            )?;
            m = m.with_piece(p);
        }
        m.total_mass_infinite = self.total_mass_infinite;
        Ok(m)
    }

    pub fn constant(&self) -> f64 {
        self.c.unwrap_or(0.0)
    }
}

fn half() -> f64 {
    0.5
}

fn plus_one() -> f64 {
    1.0
}

/// Tail formulas in the gap index `j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZoneTailSpec {
    pub mul_expr: String,
    pub gap_expr: String,
    /// Position of `ξⱼ` as a fraction of the gap.
    #[serde(default = "half")]
    pub xi_frac: f64,
    #[serde(default = "plus_one")]
    pub eps: f64,
}

/// Zone file: `{"mu0r", "gaps": [{"mul", "mur", "xi", "eps"}], "tail"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZoneFile {
    pub mu0r: f64,
    #[serde(default)]
    pub gaps: Vec<Gap>,
    #[serde(default)]
    pub tail: Option<ZoneTailSpec>,
    #[serde(default)]
    pub truncation: Option<usize>,
}

impl ZoneFile {
    pub fn build(&self) -> Result<ZoneSpec> {
        let mut z = ZoneSpec::new(self.mu0r, self.gaps.clone())?;
        if let Some(t) = &self.tail {
            z = z.with_tail(ZoneTail {
                mul: RealFn::parse(&t.mul_expr, "j")?,
                gap: RealFn::parse(&t.gap_expr, "j")?,
                xi_frac: t.xi_frac,
                eps: t.eps,
            })?;
        }
        if let Some(n) = self.truncation {
            z = z.with_truncation(n);
        }
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn json_and_toml_measure_files_agree() {
        let json = r#"{
            "atoms": [{"t": 5, "w": 1}],
            "atom_family": {"positions": "k", "weights": "1", "range": [null, "inf"], "tail_exponent": 0},
            "densities": [{"interval": [0, "inf"], "expr": "t^2/(1+t^4)", "exponents": {"left": 2, "infinity": -2}}],
            "C": 0.5
        }"#;
        let toml = r#"
            C = 0.5
            atoms = [{t = 5.0, w = 1.0}]
            [atom_family]
            positions = "k"
            weights = "1"
            range = ["-inf", "inf"]
            tail_exponent = 0.0
            [[densities]]
            interval = [0.0, inf]
            expr = "t^2/(1+t^4)"
            exponents = {left = 2.0, infinity = -2.0}
        "#;
        let a: MeasureSpec = parse_str(json, false).unwrap();
        let b: MeasureSpec = parse_str(toml, true).unwrap();
        let (ma, mb) = (a.build().unwrap(), b.build().unwrap());
        assert!(ma.structurally_equal(&mb));
        assert_eq!(a.constant(), 0.5);
        assert_eq!(ma.mass_at(5.0), 2.0);
        let l = C64::new(0.3, 1.0);
        let va = ma.chi_moment(l, 2, false).unwrap().value().unwrap();
        let vb = mb.chi_moment(l, 2, false).unwrap().value().unwrap();
        assert_eq!(va, vb);
    }

    #[test]
    fn extreal_roundtrip() {
        let v = serde_json::to_string(&[ExtReal(1.5), ExtReal(f64::NEG_INFINITY)]).unwrap();
        assert_eq!(v, r#"[1.5,"-inf"]"#);
        let back: [ExtReal; 2] = serde_json::from_str(&v).unwrap();
        assert_eq!(back[1].0, f64::NEG_INFINITY);
    }

    #[test]
    fn zone_file_parses() {
        let json = r#"{"mu0r": 0, "gaps": [{"mul": 1, "mur": 2, "xi": 1.5, "eps": 1}],
            "tail": {"mul_expr": "j^2 + 1", "gap_expr": "1/j^4"}}"#;
        let z = parse_str::<ZoneFile>(json, false).unwrap().build().unwrap();
        assert_eq!(z.gap(1).xi, 1.5);
        let g = z.gap(3);
        assert_eq!(g.mul, 10.0);
        assert!((g.mur - 10.0 - 1.0 / 81.0).abs() < 1e-15);
        let toml = "mu0r = 0.0\ntruncation = 4\n[[gaps]]\nmul = 1.0\nmur = 2.0\nxi = 1.5\neps = -1.0\n";
        let z = parse_str::<ZoneFile>(toml, true).unwrap().build().unwrap();
        assert_eq!(z.truncation, Some(4));
        assert_eq!(z.gaps[0].eps, -1.0);
        let bad = r#"{"mu0r": 0, "gaps": [{"mul": 2, "mur": 1, "xi": 1.5, "eps": 1}]}"#;
        assert!(parse_str::<ZoneFile>(bad, false).unwrap().build().is_err());
    }
}
