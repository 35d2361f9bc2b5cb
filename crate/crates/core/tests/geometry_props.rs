mod common;

use common::{svc, UNIT};
use proptest::prelude::*;
use traceform::geometry::{periodic_fat_cantor, svc_complement, Interval, IntervalSet, Part, Tails};
use traceform::transform::{DarningMap, Preimage, ScaleFunction};

/// Removed length after `k` steps: Σ 2^(i-1) 4^-i = (1 - 2^-k) / 2.
fn svc_g_mass(depth: u32) -> f64 {
    0.5 * (1.0 - 0.5f64.powi(depth as i32))
}

proptest! {
    #[test]
    fn lebesgue_parts_sum_to_length(depth in 0u32..8, lo in 0.0..1.0f64, len in 0.0..1.0f64) {
        let set = svc(depth);
        let hi = (lo + len).min(1.0);
        let g = set.lebesgue(lo, hi, Part::G).unwrap();
        let f = set.lebesgue(lo, hi, Part::F).unwrap();
        prop_assert!((g + f - (hi - lo)).abs() < 1e-14);
        prop_assert!(g >= 0.0 && f >= 0.0);
    }

    #[test]
    fn svc_masses_match_the_construction(depth in 0u32..12) {
        let set = svc(depth);
        prop_assert_eq!(set.components().len(), (1usize << depth) - 1);
        prop_assert_eq!(set.g_mass_in_window(), svc_g_mass(depth));
        prop_assert_eq!(set.endpoints().len(), 2 * set.components().len());
    }

    #[test]
    fn validate_is_monotone_in_delta(depth in 1u32..8, d1 in 0.001..0.5f64, d2 in 0.001..0.5f64) {
        let set = svc(depth);
        let (small, large) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        if set.validate(small).ok() {
            prop_assert!(set.validate(large).ok());
        }
    }

    #[test]
    fn scale_and_darning_increments_add_up(depth in 0u32..7, x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let set = svc(depth);
        let sf = ScaleFunction::new(set.clone(), None).unwrap();
        let dm = DarningMap::new(set, None).unwrap();
        let ds = sf.eval(x).unwrap() - sf.eval(y).unwrap();
        let dj = dm.eval(x).unwrap() - dm.eval(y).unwrap();
        prop_assert!((ds + dj - (x - y)).abs() < 1e-14);
    }

    #[test]
    fn scale_inverse_round_trip(depth in 1u32..7, x in 0.0..1.0f64) {
        let sf = ScaleFunction::new(svc(depth), None).unwrap();
        let y = sf.eval(x).unwrap();
        match sf.inverse(y).unwrap() {
            Preimage::Point(p) => prop_assert!((p - x).abs() < 1e-13, "{} vs {}", p, x),
            Preimage::Interval(i) => {
                prop_assert!(i.lo - 1e-13 <= x && x <= i.hi + 1e-13);
                prop_assert_eq!(sf.set().part_of(i.midpoint()).unwrap(), Part::F);
            }
        }
        prop_assert_eq!(sf.eval(sf.inverse(y).unwrap().representative()).unwrap(), y);
    }

    #[test]
    fn darning_collapses_each_gap(depth in 1u32..7, t in 0.0..1.0f64) {
        let set = svc(depth);
        let dm = DarningMap::new(set.clone(), None).unwrap();
        for c in set.components() {
            let x = c.lo + t * c.len();
            prop_assert_eq!(dm.eval(x).unwrap(), dm.eval(c.lo).unwrap());
            prop_assert_eq!(dm.eval(c.hi).unwrap(), dm.eval(c.lo).unwrap());
        }
    }

    #[test]
    fn json_round_trip(depth in 0u32..6, lo in -2.0..2.0f64, len in 0.5..4.0f64) {
        let set = svc_complement(depth, Interval::new(lo, lo + len)).unwrap();
        let text = serde_json::to_string(&set).unwrap();
        let back: IntervalSet = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.components(), set.components());
        prop_assert_eq!(back.window(), set.window());
        prop_assert_eq!(back.tails(), set.tails());
    }
}

#[test]
fn periodic_set_has_periodic_tails() {
    let set = periodic_fat_cantor(2, 1.5).unwrap();
    assert_eq!(set.tails(), Tails::periodic(1.5));
    assert_eq!(set.window(), Interval::new(0.0, 1.5));
    // Beyond the window the pattern repeats.
    let (g, f) = set.masses(1.5, 3.0).unwrap();
    assert_eq!((g, f), set.masses(0.0, 1.5).unwrap());
    assert_eq!(set.part_of(UNIT.hi).unwrap(), Part::F);
}

#[test]
fn overlapping_components_are_rejected() {
    let r = IntervalSet::new(
        UNIT,
        vec![Interval::new(0.1, 0.4), Interval::new(0.3, 0.6)],
        Tails::UNDECLARED,
    );
    assert!(matches!(r, Err(traceform::Error::Overlap { .. })));
    let r = IntervalSet::new(
        UNIT,
        vec![Interval::new(0.1, 0.4), Interval::new(0.4, 0.6)],
        Tails::UNDECLARED,
    );
    assert!(matches!(r, Err(traceform::Error::SharedEndpoint { .. })));
}
