//! Orthogonal splitting `u = u₁ + u₂` of a function on the window into a
//! part in the (extended) regular subspace and a part in its complement.

use serde::Serialize;

use crate::energy::dirichlet_energy;
use crate::error::{Error, Result};
use crate::geometry::{IntervalSet, Part, Tail};
use crate::grid::{cell_part, check_adapted, GridFunction};
use crate::transform::{classify_case, infinite_sides, BoundaryCase, ScaleFunction};

/// Constants produced by the splitting; unused ones are `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Constants {
    /// Slope of `u₂` on `G`.
    pub c0: f64,
    /// `∫_{-∞}^{anchor} u' 1_G` when the left side carries finite `G`-mass.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_minus_inf: Option<f64>,
    /// `∫_{anchor}^{∞} u' 1_G` when the right side carries finite `G`-mass.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_plus_inf: Option<f64>,
    /// `M / m(G)` with `M = ∫ u' 1_G`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    /// `∫_{-∞}^{anchor} (u' - C₁) 1_G`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub u1: GridFunction,
    pub u2: GridFunction,
    pub case: BoundaryCase,
    pub constants: Constants,
}

/// Running sums `Σ_{G-cells left of x_i} (Δu - slope Δx)` at every node.
fn g_cumulative(u: &GridFunction, set: &IntervalSet, slope: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(u.nodes().len());
    out.push(0.0);
    for c in u.cells() {
        if cell_part(set, &c) == Part::G {
            acc += c.rise - slope * c.len();
        }
        out.push(acc);
    }
    out
}

fn interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    match nodes.binary_search_by(|n| n.total_cmp(&x)) {
        Ok(i) => values[i],
        Err(i) => {
            let (x0, x1) = (nodes[i - 1], nodes[i]);
            values[i - 1] + (values[i] - values[i - 1]) * (x - x0) / (x1 - x0)
        }
    }
}

fn require_all_f(set: &IntervalSet, left: bool, right: bool) -> Result<()> {
    let t = set.tails();
    let ok = (!left || t.left == Some(Tail::AllF)) && (!right || t.right == Some(Tail::AllF));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "the G-integral of u' towards a side with finite G-mass can only be truncated at the \
             window when that tail is AllF"
                .into(),
        ))
    }
}

/// Splits `u` into `u₁` (integral of `u' 1_G`, normalised per boundary case)
/// and `u₂ = u - u₁`, whose slope on `G` is constant (zero unless both sides
/// carry finite `G`-mass).
pub fn project_subspace(u: &GridFunction, sf: &ScaleFunction) -> Result<Decomposition> {
    let set = sf.set();
    check_adapted(u, set)?;
    let case = classify_case(set)?;
    let (inf_left, _) = infinite_sides(set)?;
    let nodes = u.nodes();
    let anchor = sf.anchor();
    let mut constants = Constants::default();

    let u1_values: Vec<f64> = match case {
        BoundaryCase::CaseI => {
            let cum = g_cumulative(u, set, 0.0);
            let base = interpolate(nodes, &cum, anchor);
            cum.iter().map(|v| v - base).collect()
        }
        BoundaryCase::CaseII => {
            let cum = g_cumulative(u, set, 0.0);
            if !inf_left {
                require_all_f(set, true, false)?;
                constants.m_minus_inf = Some(interpolate(nodes, &cum, anchor));
                cum
            } else {
                require_all_f(set, false, true)?;
                let total = cum[cum.len() - 1];
                constants.m_plus_inf = Some(total - interpolate(nodes, &cum, anchor));
                cum.iter().map(|v| v - total).collect()
            }
        }
        BoundaryCase::CaseIII => {
            require_all_f(set, true, true)?;
            let total = g_cumulative(u, set, 0.0);
            let m = total[total.len() - 1];
            let mg = set.g_mass_in_window();
            let c1 = if mg > 0.0 { m / mg } else { 0.0 };
            let cum = g_cumulative(u, set, c1);
            constants.c0 = c1;
            constants.c1 = Some(c1);
            constants.c2 = Some(interpolate(nodes, &cum, anchor));
            cum
        }
    };
    let u1 = GridFunction::new(nodes.to_vec(), u1_values)?;
    let u2_values = u
        .values()
        .iter()
        .zip(u1.values())
        .map(|(a, b)| a - b)
        .collect();
    let u2 = GridFunction::new(nodes.to_vec(), u2_values)?;
    Ok(Decomposition {
        u1,
        u2,
        case,
        constants,
    })
}

/// Whether `u'` is constant a.e. on `G` (and zero unless both sides carry
/// finite `G`-mass).
pub fn is_in_complement(u: &GridFunction, set: &IntervalSet, tol: f64) -> Result<bool> {
    check_adapted(u, set)?;
    let case = classify_case(set)?;
    let slopes: Vec<f64> = u
        .cells()
        .filter(|c| cell_part(set, c) == Part::G)
        .map(|c| c.slope())
        .collect();
    let Some(&first) = slopes.first() else {
        return Ok(true);
    };
    let target = if case == BoundaryCase::CaseIII { first } else { 0.0 };
    Ok(slopes.iter().all(|s| (s - target).abs() <= tol))
}

fn require_harmonic(u: &GridFunction, set: &IntervalSet, tol: f64) -> Result<()> {
    let mut current: Option<(usize, f64)> = None;
    for c in u.cells() {
        let Some(k) = set.component_containing(c.midpoint()) else {
            current = None;
            continue;
        };
        match current {
            Some((j, s)) if j == k => {
                if (c.slope() - s).abs() > tol * s.abs().max(1.0) {
                    let comp = set.components()[k];
                    return Err(Error::NotHarmonic {
                        lo: comp.lo,
                        hi: comp.hi,
                    });
                }
            }
            _ => current = Some((k, c.slope())),
        }
    }
    Ok(())
}

/// [`project_subspace`] for functions linear on every component of `G`;
/// both parts are again linear there.
pub fn decompose_harmonic(u: &GridFunction, sf: &ScaleFunction, tol: f64) -> Result<Decomposition> {
    require_harmonic(u, sf.set(), tol)?;
    let d = project_subspace(u, sf)?;
    require_harmonic(&d.u1, sf.set(), tol)?;
    Ok(d)
}

impl Decomposition {
    /// `E(u₁, u₂)`.
    pub fn cross_energy(&self) -> Result<f64> {
        Ok(dirichlet_energy(&self.u1, &self.u2)?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{periodic_fat_cantor, svc_complement, Interval, Tails};
    use crate::grid::adapted_grid;

    #[test]
    fn identity_in_case_one() {
        let set = periodic_fat_cantor(1, 2.0).unwrap();
        let sf = ScaleFunction::new(set.clone(), None).unwrap();
        let u = GridFunction::from_fn(adapted_grid(&set, 2), |x| x).unwrap();
        let d = project_subspace(&u, &sf).unwrap();
        assert_eq!(d.case, BoundaryCase::CaseI);
        for (x, v) in d.u1.nodes().iter().zip(d.u1.values()) {
            assert_eq!(*v, sf.eval(*x).unwrap());
        }
        for c in d.u2.cells() {
            let expect = if cell_part(&set, &c) == Part::F { 1.0 } else { 0.0 };
            assert!((c.slope() - expect).abs() < 1e-12);
        }
        assert!(is_in_complement(&d.u2, &set, 1e-9).unwrap());
        assert!(!is_in_complement(&u, &set, 1e-9).unwrap());
    }

    #[test]
    fn tent_in_case_three() {
        let set = svc_complement(2, Interval::new(0.0, 1.0)).unwrap();
        let sf = ScaleFunction::new(set.clone(), None).unwrap();
        let mut nodes = adapted_grid(&set, 1);
        nodes.push(0.5);
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let u = GridFunction::from_fn(nodes, |x| 1.0 - (2.0 * x - 1.0).abs()).unwrap();
        let d = project_subspace(&u, &sf).unwrap();
        assert_eq!(d.case, BoundaryCase::CaseIII);
        // Symmetric tent: ∫ u' 1_G = 0.
        assert_eq!(d.constants.c1, Some(0.0));
        let v = d.u1.values();
        assert_eq!(v[0], 0.0);
        assert!(v[v.len() - 1].abs() < 1e-15);
        assert!(d.cross_energy().unwrap().abs() < 1e-15);

        let x = GridFunction::from_fn(adapted_grid(&set, 1), |x| x).unwrap();
        assert!(is_in_complement(&x, &set, 1e-9).unwrap());
    }

    #[test]
    fn case_two_needs_all_f_on_finite_side() {
        let base = svc_complement(1, Interval::new(0.0, 1.0)).unwrap();
        let set = base
            .with_tails(Tails::new(crate::geometry::Tail::AllF, crate::geometry::Tail::AllG))
            .unwrap();
        let sf = ScaleFunction::new(set.clone(), None).unwrap();
        let u = GridFunction::from_fn(adapted_grid(&set, 2), |x| x * x).unwrap();
        let d = project_subspace(&u, &sf).unwrap();
        assert_eq!(d.case, BoundaryCase::CaseII);
        assert_eq!(d.u1.values()[0], 0.0);
        assert!(d.cross_energy().unwrap().abs() < 1e-15);
    }

    #[test]
    fn harmonic_check() {
        let set = svc_complement(1, Interval::new(0.0, 1.0)).unwrap();
        let sf = ScaleFunction::new(set.clone(), None).unwrap();
        let bent = GridFunction::new(
            vec![0.0, 0.375, 0.5, 0.625, 1.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        assert!(matches!(
            decompose_harmonic(&bent, &sf, 1e-9),
            Err(Error::NotHarmonic { .. })
        ));
        let c = GridFunction::constant(Interval::new(0.0, 1.0), 2.0).unwrap();
        let c = c.refine(&adapted_grid(&set, 1)).unwrap();
        let d = decompose_harmonic(&c, &sf, 1e-9).unwrap();
        assert!(d.u1.values().iter().all(|&v| v == 0.0));
    }
}
