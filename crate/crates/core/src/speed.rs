//! Speed measures: a piecewise-constant density plus point masses, where a
//! mass may be infinite (an absorbing point).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Interval;

/// Constant density `value` on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct DensityPiece {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

impl From<[f64; 3]> for DensityPiece {
    fn from([lo, hi, value]: [f64; 3]) -> Self {
        Self { lo, hi, value }
    }
}

impl From<DensityPiece> for [f64; 3] {
    fn from(p: DensityPiece) -> Self {
        [p.lo, p.hi, p.value]
    }
}

/// Point mass; `mass` may be `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub at: f64,
    pub mass: f64,
}

impl Atom {
    pub fn is_infinite(&self) -> bool {
        self.mass.is_infinite()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MassRepr {
    Number(f64),
    Text(String),
}

impl Serialize for Atom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mass = if self.mass.is_infinite() {
            MassRepr::Text("inf".into())
        } else {
            MassRepr::Number(self.mass)
        };
        (self.at, mass).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (at, mass) = <(f64, MassRepr)>::deserialize(d)?;
        let mass = match mass {
            MassRepr::Number(m) => m,
            MassRepr::Text(t) if t == "inf" => f64::INFINITY,
            MassRepr::Text(t) => {
                return Err(serde::de::Error::custom(format!("bad atom mass {t:?}")))
            }
        };
        Ok(Atom { at, mass })
    }
}

#[derive(Serialize, Deserialize)]
struct SpeedJson {
    carrier: [f64; 2],
    density_pieces: Vec<DensityPiece>,
    atoms: Vec<Atom>,
}

/// A measure on a bounded carrier interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpeedJson", into = "SpeedJson")]
pub struct SpeedMeasure {
    carrier: Interval,
    density: Vec<DensityPiece>,
    atoms: Vec<Atom>,
}

impl TryFrom<SpeedJson> for SpeedMeasure {
    type Error = Error;

    fn try_from(raw: SpeedJson) -> Result<Self> {
        SpeedMeasure::new(raw.carrier.into(), raw.density_pieces, raw.atoms)
    }
}

impl From<SpeedMeasure> for SpeedJson {
    fn from(m: SpeedMeasure) -> Self {
        Self {
            carrier: m.carrier.into(),
            density_pieces: m.density,
            atoms: m.atoms,
        }
    }
}

impl SpeedMeasure {
    /// Validates and sorts the pieces and atoms.
    pub fn new(carrier: Interval, mut density: Vec<DensityPiece>, mut atoms: Vec<Atom>) -> Result<Self> {
        if !(carrier.lo.is_finite() && carrier.hi.is_finite() && carrier.lo <= carrier.hi) {
            return Err(Error::InvalidSpeed(format!(
                "carrier [{}, {}] is not a bounded interval",
                carrier.lo, carrier.hi
            )));
        }
        density.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for p in &density {
            if !(p.lo < p.hi && p.value >= 0.0 && p.value.is_finite()) {
                return Err(Error::InvalidSpeed(format!(
                    "density piece [{}, {}] with value {} is invalid",
                    p.lo, p.hi, p.value
                )));
            }
            if p.lo < carrier.lo || p.hi > carrier.hi {
                return Err(Error::InvalidSpeed(format!(
                    "density piece [{}, {}] leaves the carrier",
                    p.lo, p.hi
                )));
            }
        }
        for w in density.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::InvalidSpeed("density pieces overlap".into()));
            }
        }
        atoms.sort_by(|a, b| a.at.total_cmp(&b.at));
        for a in &atoms {
            if !(a.mass > 0.0) || !carrier.contains_closed(a.at) {
                return Err(Error::InvalidSpeed(format!(
                    "atom ({}, {}) needs positive mass inside the carrier",
                    a.at, a.mass
                )));
            }
        }
        for w in atoms.windows(2) {
            if w[0].at == w[1].at {
                return Err(Error::InvalidSpeed(format!("two atoms at {}", w[0].at)));
            }
        }
        Ok(Self {
            carrier,
            density,
            atoms,
        })
    }

    /// Lebesgue measure on the carrier.
    pub fn lebesgue(carrier: Interval) -> Result<Self> {
        let density = if carrier.len() > 0.0 {
            vec![DensityPiece {
                lo: carrier.lo,
                hi: carrier.hi,
                value: 1.0,
            }]
        } else {
            Vec::new()
        };
        Self::new(carrier, density, Vec::new())
    }

    pub fn carrier(&self) -> Interval {
        self.carrier
    }

    pub fn density_pieces(&self) -> &[DensityPiece] {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Mass of the closed interval `[lo, hi]` (atoms on the ends included).
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let cont: f64 = self
            .density
            .iter()
            .map(|p| p.value * Interval::new(p.lo, p.hi).overlap(lo, hi))
            .sum();
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| lo <= a.at && a.at <= hi)
            .map(|a| a.mass)
            .sum();
        cont + atoms
    }

    /// Total mass of the carrier.
    pub fn total(&self) -> f64 {
        self.mass(self.carrier.lo, self.carrier.hi)
    }

    /// `∫_{[lo, hi]} (h - |ξ - y|)⁺ density(ξ) dξ`, the density part only.
    pub fn tent_density(&self, y: f64, h: f64, lo: f64, hi: f64) -> f64 {
        self.density
            .iter()
            .map(|p| p.value * tent_integral(y, h, p.lo.max(lo), p.hi.min(hi)))
            .sum()
    }

    /// `∫_{[lo, hi]} (h - |ξ - y|)⁺ m(dξ)`, atoms included.
    pub fn tent(&self, y: f64, h: f64, lo: f64, hi: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| lo <= a.at && a.at <= hi)
            .map(|a| {
                let k = (h - (a.at - y).abs()).max(0.0);
                if k > 0.0 {
                    k * a.mass
                } else {
                    0.0
                }
            })
            .sum();
        self.tent_density(y, h, lo, hi) + atoms
    }
}

/// `∫_lo^hi (h - |ξ - y|)⁺ dξ`, zero when `lo >= hi`.
pub fn tent_integral(y: f64, h: f64, lo: f64, hi: f64) -> f64 {
    // Antiderivative of the tent, measured from its left foot.
    let prim = |x: f64| {
        let t = (x - (y - h)).clamp(0.0, 2.0 * h);
        if t <= h {
            0.5 * t * t
        } else {
            let r = 2.0 * h - t;
            h * h - 0.5 * r * r
        }
    };
    if lo >= hi {
        0.0
    } else {
        prim(hi) - prim(lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tent_pieces() {
        assert_eq!(tent_integral(0.0, 1.0, -5.0, 5.0), 1.0);
        assert_eq!(tent_integral(0.0, 1.0, 0.0, 5.0), 0.5);
        assert_eq!(tent_integral(0.0, 0.5, 0.0, 0.25), 0.09375);
        assert_eq!(tent_integral(0.0, 1.0, 2.0, 3.0), 0.0);
    }

    #[test]
    fn kernel_mass_with_atom() {
        let m = SpeedMeasure::new(
            Interval::new(0.0, 0.75),
            vec![DensityPiece {
                lo: 0.0,
                hi: 0.75,
                value: 1.0,
            }],
            vec![Atom {
                at: 0.375,
                mass: 0.25,
            }],
        )
        .unwrap();
        assert_eq!(m.total(), 1.0);
        let h = 0.125;
        assert_eq!(m.tent(0.375, h, 0.0, 0.75), h * h + h * 0.25);
        assert_eq!(m.tent(0.25, h, 0.0, 0.75), h * h);
    }

    #[test]
    fn json_with_infinite_atom() {
        let m = SpeedMeasure::new(
            Interval::new(0.0, 1.0),
            vec![DensityPiece {
                lo: 0.0,
                hi: 1.0,
                value: 1.0,
            }],
            vec![Atom {
                at: 1.0,
                mass: f64::INFINITY,
            }],
        )
        .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(
            text,
            r#"{"carrier":[0.0,1.0],"density_pieces":[[0.0,1.0,1.0]],"atoms":[[1.0,"inf"]]}"#
        );
        let back: SpeedMeasure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_bad_atoms() {
        let c = Interval::new(0.0, 1.0);
        assert!(SpeedMeasure::new(c, vec![], vec![Atom { at: 2.0, mass: 1.0 }]).is_err());
        assert!(SpeedMeasure::new(
            c,
            vec![],
            vec![Atom { at: 0.5, mass: 1.0 }, Atom { at: 0.5, mass: 2.0 }]
        )
        .is_err());
    }
}
