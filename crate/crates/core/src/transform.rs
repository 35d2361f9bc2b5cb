//! The scale function `s(x) = ∫ 1_G` and the darning map `j(x) = ∫_z^x 1_F`,
//! their set-valued inverses, images and pushforward measures, and the
//! boundary classification by the finiteness of `s(±∞)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Interval, IntervalSet, Part, Tail};
use crate::speed::{Atom, DensityPiece, SpeedMeasure};

/// Boundary classification of the scale function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCase {
    /// `s(-∞) = -∞` and `s(∞) = ∞`.
    CaseI,
    /// Exactly one of `s(±∞)` is finite.
    CaseII,
    /// Both `s(±∞)` are finite.
    CaseIII,
}

/// Which ends of the line carry infinite `G`-mass, `(left, right)`.
pub fn infinite_sides(set: &IntervalSet) -> Result<(bool, bool)> {
    let t = set.tails();
    match (set.tail_g_infinite(t.left), set.tail_g_infinite(t.right)) {
        (Some(l), Some(r)) => Ok((l, r)),
        _ => Err(Error::TailsRequired),
    }
}

pub fn classify_case(set: &IntervalSet) -> Result<BoundaryCase> {
    Ok(match infinite_sides(set)? {
        (true, true) => BoundaryCase::CaseI,
        (false, false) => BoundaryCase::CaseIII,
        _ => BoundaryCase::CaseII,
    })
}

/// A maximal stretch of the window on which the map is affine.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Piece {
    lo: f64,
    hi: f64,
    rising: bool,
    start: f64,
}

/// Full preimage of a point under a cumulative map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Preimage {
    Point(f64),
    Interval(Interval),
}

impl Preimage {
    /// A single representative: the point, or the midpoint of a collapsed stretch.
    pub fn representative(&self) -> f64 {
        match *self {
            Preimage::Point(x) => x,
            Preimage::Interval(i) => i.midpoint(),
        }
    }
}

/// `x ↦ ∫_anchor^x 1_part`, the common shape of `s` (part `G`) and `j` (part `F`).
#[derive(Clone, Debug)]
pub struct CumulativeMap {
    set: IntervalSet,
    part: Part,
    anchor: f64,
    pieces: Vec<Piece>,
}

impl CumulativeMap {
    pub fn new(set: IntervalSet, part: Part, anchor: f64) -> Result<Self> {
        let w = set.window();
        if !w.contains_closed(anchor) {
            return Err(Error::OutOfRange {
                what: "anchor",
                value: anchor,
                lo: w.lo,
                hi: w.hi,
            });
        }
        let mut stretches: Vec<(Interval, Part)> = set
            .components()
            .iter()
            .map(|&c| (c, Part::G))
            .chain(set.f_components().iter().map(|&f| (f, Part::F)))
            .collect();
        stretches.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));

        let mut pieces = Vec::with_capacity(stretches.len());
        let mut acc = 0.0;
        for (iv, p) in stretches {
            let rising = p == part;
            pieces.push(Piece {
                lo: iv.lo,
                hi: iv.hi,
                rising,
                start: acc,
            });
            if rising {
                acc += iv.len();
            }
        }
        let mut map = Self {
            set,
            part,
            anchor,
            pieces,
        };
        let shift = map.eval_raw(anchor);
        for p in &mut map.pieces {
            p.start -= shift;
        }
        Ok(map)
    }

    pub fn set(&self) -> &IntervalSet {
        &self.set
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// The part of the line on which the map increases.
    pub fn part(&self) -> Part {
        self.part
    }

    fn piece_index(&self, x: f64) -> usize {
        self.pieces
            .partition_point(|p| p.hi < x)
            .min(self.pieces.len() - 1)
    }

    fn eval_raw(&self, x: f64) -> f64 {
        let p = &self.pieces[self.piece_index(x)];
        if p.rising {
            p.start + (x - p.lo)
        } else {
            p.start
        }
    }

    /// Value at `x`; points outside the window use the declared tails.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let w = self.set.window();
        if x < w.lo {
            let (g, f) = self.set.masses(x, w.lo)?;
            let m = if self.part == Part::G { g } else { f };
            Ok(self.eval_raw(w.lo) - m)
        } else if x > w.hi {
            let (g, f) = self.set.masses(w.hi, x)?;
            let m = if self.part == Part::G { g } else { f };
            Ok(self.eval_raw(w.hi) + m)
        } else {
            Ok(self.eval_raw(x))
        }
    }

    /// Image of the window.
    pub fn window_image(&self) -> Interval {
        let w = self.set.window();
        Interval::new(self.eval_raw(w.lo), self.eval_raw(w.hi))
    }

    /// Full preimage of `y` inside the window.
    pub fn inverse(&self, y: f64) -> Result<Preimage> {
        let img = self.window_image();
        if !img.contains_closed(y) {
            return Err(Error::OutOfRange {
                what: "image value",
                value: y,
                lo: img.lo,
                hi: img.hi,
            });
        }
        // First piece whose end value reaches y.
        let end = |p: &Piece| if p.rising { p.start + (p.hi - p.lo) } else { p.start };
        let k = self.pieces.partition_point(|p| end(p) < y);
        let p = &self.pieces[k.min(self.pieces.len() - 1)];
        if !p.rising && p.start == y {
            return Ok(Preimage::Interval(Interval::new(p.lo, p.hi)));
        }
        if p.rising {
            // A flat piece may begin exactly where this one ends.
            if y == end(p) {
                if let Some(next) = self.pieces.get(k + 1) {
                    if !next.rising && next.start == y {
                        return Ok(Preimage::Interval(Interval::new(next.lo, next.hi)));
                    }
                }
            }
            return Ok(Preimage::Point((p.lo + (y - p.start)).min(p.hi)));
        }
        Ok(Preimage::Point(p.lo))
    }

    /// Closed stretches of the window collapsed to single points, with the
    /// point they collapse to.
    pub fn collapsed(&self) -> impl Iterator<Item = (Interval, f64)> + '_ {
        self.pieces
            .iter()
            .filter(|p| !p.rising)
            .map(|p| (Interval::new(p.lo, p.hi), p.start))
    }

    /// Image of Lebesgue measure on the window: density 1 on the image and an
    /// atom at each collapsed point carrying the length of its stretch.
    pub fn window_pushforward(&self) -> Result<SpeedMeasure> {
        let carrier = self.window_image();
        if carrier.len() <= 0.0 {
            return Err(Error::DegenerateCarrier);
        }
        let atoms = self
            .collapsed()
            .map(|(iv, at)| Atom { at, mass: iv.len() })
            .collect();
        SpeedMeasure::new(
            carrier,
            vec![DensityPiece {
                lo: carrier.lo,
                hi: carrier.hi,
                value: 1.0,
            }],
            atoms,
        )
    }
}

/// `s(x) = ∫_anchor^x 1_G(t) dt`.
#[derive(Clone, Debug)]
pub struct ScaleFunction {
    map: CumulativeMap,
}

impl ScaleFunction {
    /// Anchor defaults to 0 when it lies in the window, otherwise to the window start.
    pub fn new(set: IntervalSet, anchor: Option<f64>) -> Result<Self> {
        let w = set.window();
        let anchor = anchor.unwrap_or(if w.contains_closed(0.0) { 0.0 } else { w.lo });
        Ok(Self {
            map: CumulativeMap::new(set, Part::G, anchor)?,
        })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.map.eval(x)
    }

    pub fn inverse(&self, y: f64) -> Result<Preimage> {
        self.map.inverse(y)
    }

    pub fn anchor(&self) -> f64 {
        self.map.anchor
    }

    pub fn set(&self) -> &IntervalSet {
        &self.map.set
    }

    pub fn map(&self) -> &CumulativeMap {
        &self.map
    }

    pub fn classify_case(&self) -> Result<BoundaryCase> {
        classify_case(&self.map.set)
    }
}

/// How an end of `R_j` looks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ImageEnd {
    /// `R_j` extends to infinity on this side.
    Unbounded,
    /// An unbounded component of `G` collapses to this point, which belongs
    /// to `R_j` and carries an infinite `m_j`-atom.
    Closed(f64),
    Undeclared,
}

/// A collapsed point `p*_n = j(Ī_n)` of a bounded component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CollapsedPoint {
    pub component: Interval,
    pub point: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DarningImage {
    pub window_image: Interval,
    pub collapsed: Vec<CollapsedPoint>,
    pub left: ImageEnd,
    pub right: ImageEnd,
}

/// Source measures that can be pushed through `j`.
#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    Lebesgue,
    /// `1_F(x) dx`.
    FLebesgue,
    Trace(&'a crate::trace::TraceMeasure),
}

/// `j(x) = ∫_z^x 1_F(t) dt`.
#[derive(Clone, Debug)]
pub struct DarningMap {
    map: CumulativeMap,
}

impl DarningMap {
    /// `z` must be a point of `F \ H` inside the window; by default the window
    /// start if it qualifies, else the midpoint of the first component of `F`.
    pub fn new(set: IntervalSet, z: Option<f64>) -> Result<Self> {
        let z = match z {
            Some(z) => {
                let w = set.window();
                if !w.contains_closed(z) {
                    return Err(Error::OutOfRange {
                        what: "darning anchor",
                        value: z,
                        lo: w.lo,
                        hi: w.hi,
                    });
                }
                if set.part_of(z)? == Part::G {
                    return Err(Error::AnchorInG { z });
                }
                if set.is_endpoint(z) {
                    return Err(Error::AnchorInH { z });
                }
                z
            }
            None => default_anchor(&set)?,
        };
        Ok(Self {
            map: CumulativeMap::new(set, Part::F, z)?,
        })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.map.eval(x)
    }

    pub fn inverse(&self, y: f64) -> Result<Preimage> {
        self.map.inverse(y)
    }

    pub fn z(&self) -> f64 {
        self.map.anchor
    }

    pub fn set(&self) -> &IntervalSet {
        &self.map.set
    }

    pub fn map(&self) -> &CumulativeMap {
        &self.map
    }

    pub fn image(&self) -> DarningImage {
        let set = &self.map.set;
        let collapsed = set
            .finite_components()
            .map(|(_, c)| CollapsedPoint {
                component: c,
                point: self.map.eval_raw(c.lo),
                mass: c.len(),
            })
            .collect();
        let img = self.map.window_image();
        let end = |tail: Option<Tail>, at: f64| match tail {
            None => ImageEnd::Undeclared,
            Some(Tail::AllG) => ImageEnd::Closed(at),
            Some(Tail::AllF) | Some(Tail::Periodic) => ImageEnd::Unbounded,
        };
        let t = set.tails();
        DarningImage {
            window_image: img,
            collapsed,
            left: end(t.left, img.lo),
            right: end(t.right, img.hi),
        }
    }

    /// `m_j = source ∘ j⁻¹` restricted to the window image. Points where an
    /// unbounded component of `G` collapses get an infinite atom.
    pub fn pushforward_speed(&self, source: Source<'_>) -> Result<SpeedMeasure> {
        let image = self.image();
        let carrier = image.window_image;
        if carrier.len() <= 0.0 {
            return Err(Error::DegenerateCarrier);
        }
        let density = vec![DensityPiece {
            lo: carrier.lo,
            hi: carrier.hi,
            value: 1.0,
        }];
        let mut atoms: Vec<Atom> = Vec::new();
        match source {
            Source::FLebesgue => {}
            Source::Lebesgue => {
                atoms.extend(image.collapsed.iter().map(|c| Atom {
                    at: c.point,
                    mass: c.mass,
                }));
                for end in [image.left, image.right] {
                    if let ImageEnd::Closed(at) = end {
                        atoms.push(Atom {
                            at,
                            mass: f64::INFINITY,
                        });
                    }
                }
            }
            Source::Trace(mu) => {
                for a in mu.atoms() {
                    if self.map.set.part_of(a.at)? != Part::F {
                        return Err(Error::UnsupportedSource(format!(
                            "trace atom at {} does not lie in F",
                            a.at
                        )));
                    }
                    let at = self.map.eval(a.at)?;
                    match atoms.iter_mut().find(|b| b.at == at) {
                        Some(b) => b.mass += a.mass,
                        None => atoms.push(Atom { at, mass: a.mass }),
                    }
                }
            }
        }
        SpeedMeasure::new(carrier, density, atoms)
    }
}

fn default_anchor(set: &IntervalSet) -> Result<f64> {
    let w = set.window();
    if set.part_of(w.lo)? == Part::F && !set.is_endpoint(w.lo) {
        return Ok(w.lo);
    }
    set.f_components()
        .first()
        .map(|f| f.midpoint())
        .ok_or(Error::NoAnchor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{periodic_fat_cantor, svc_complement, Tails};

    fn d1() -> IntervalSet {
        svc_complement(1, Interval::new(0.0, 1.0)).unwrap()
    }

    #[test]
    fn scale_values() {
        let s = ScaleFunction::new(d1(), None).unwrap();
        assert_eq!(s.eval(0.625).unwrap() - s.eval(0.375).unwrap(), 0.25);
        assert_eq!(s.eval(0.375).unwrap() - s.eval(0.0).unwrap(), 0.0);
        assert_eq!(s.eval(0.5).unwrap(), 0.125);
        // AllF tails: flat outside the window.
        assert_eq!(s.eval(-4.0).unwrap(), 0.0);
        assert_eq!(s.eval(7.0).unwrap(), 0.25);
    }

    #[test]
    fn scale_inverse_is_set_valued() {
        let s = ScaleFunction::new(d1(), None).unwrap();
        assert_eq!(
            s.inverse(0.0).unwrap(),
            Preimage::Interval(Interval::new(0.0, 0.375))
        );
        assert_eq!(s.inverse(0.125).unwrap(), Preimage::Point(0.5));
        assert_eq!(
            s.inverse(0.25).unwrap(),
            Preimage::Interval(Interval::new(0.625, 1.0))
        );
        assert!(s.inverse(0.3).is_err());
    }

    #[test]
    fn darning_values() {
        let j = DarningMap::new(d1(), Some(0.0)).unwrap();
        assert_eq!(j.eval(1.0).unwrap(), 0.75);
        for x in [0.375, 0.4, 0.5, 0.625] {
            assert_eq!(j.eval(x).unwrap(), 0.375);
        }
        assert_eq!(j.eval(0.0).unwrap(), 0.0);
        let image = j.image();
        assert_eq!(image.collapsed.len(), 1);
        assert_eq!(image.collapsed[0].point, 0.375);
        assert_eq!(image.collapsed[0].mass, 0.25);
        assert_eq!(image.left, ImageEnd::Unbounded);
        assert_eq!(
            j.inverse(0.375).unwrap(),
            Preimage::Interval(Interval::new(0.375, 0.625))
        );
        assert_eq!(j.inverse(0.5).unwrap(), Preimage::Point(0.75));
    }

    #[test]
    fn anchor_checks() {
        assert!(matches!(
            DarningMap::new(d1(), Some(0.5)),
            Err(Error::AnchorInG { .. })
        ));
        assert!(matches!(
            DarningMap::new(d1(), Some(0.375)),
            Err(Error::AnchorInH { .. })
        ));
        let open = d1().with_tails(Tails::both(Tail::AllG)).unwrap();
        let j = DarningMap::new(open, None).unwrap();
        assert_eq!(j.z(), 0.1875);
    }

    #[test]
    fn pushforwards() {
        let j = DarningMap::new(d1(), Some(0.0)).unwrap();
        let leb = j.pushforward_speed(Source::Lebesgue).unwrap();
        assert_eq!(leb.carrier(), Interval::new(0.0, 0.75));
        assert_eq!(leb.atoms(), &[Atom { at: 0.375, mass: 0.25 }]);
        let f = j.pushforward_speed(Source::FLebesgue).unwrap();
        assert!(f.atoms().is_empty());

        let open = d1().with_tails(Tails::both(Tail::AllG)).unwrap();
        let j = DarningMap::new(open, None).unwrap();
        let leb = j.pushforward_speed(Source::Lebesgue).unwrap();
        let inf: Vec<f64> = leb
            .atoms()
            .iter()
            .filter(|a| a.is_infinite())
            .map(|a| a.at)
            .collect();
        assert_eq!(inf, vec![-0.1875, 0.5625]);
    }

    #[test]
    fn cases() {
        let p = periodic_fat_cantor(3, 2.0).unwrap();
        assert_eq!(classify_case(&p).unwrap(), BoundaryCase::CaseI);
        let s = d1();
        assert_eq!(classify_case(&s).unwrap(), BoundaryCase::CaseIII);
        let two = s.with_tails(Tails::new(Tail::AllF, Tail::AllG)).unwrap();
        assert_eq!(classify_case(&two).unwrap(), BoundaryCase::CaseII);
        let undeclared = s.with_tails(Tails::UNDECLARED).unwrap();
        assert!(matches!(classify_case(&undeclared), Err(Error::TailsRequired)));
    }
}
