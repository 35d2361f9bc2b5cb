//! Bilinear forms `½∫u'v'` and their restrictions, energy measures and the
//! unit contraction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Interval, IntervalSet, Part};
use crate::grid::{cell_part, check_adapted, on_common_grid, subspace_violation, Cell, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormTag {
    Full,
    Subspace,
    Part,
    Trace,
    TraceSubspace,
    TraceComplement,
    Darned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Cell,
    Jump,
}

/// One summand of an energy: a cell integral or a jump across a gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Term {
    pub lo: f64,
    pub hi: f64,
    pub kind: TermKind,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub form: FormTag,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump: Option<f64>,
    pub breakdown: Vec<Term>,
}

impl EnergyReport {
    pub(crate) fn from_terms(form: FormTag, breakdown: Vec<Term>) -> Self {
        let sum = |k: TermKind| -> f64 {
            breakdown
                .iter()
                .filter(|t| t.kind == k)
                .map(|t| t.value)
                .sum()
        };
        let local = sum(TermKind::Cell);
        let jump = sum(TermKind::Jump);
        let has_jump = breakdown.iter().any(|t| t.kind == TermKind::Jump);
        Self {
            form,
            value: local + jump,
            local: has_jump.then_some(local),
            jump: has_jump.then_some(jump),
            breakdown,
        }
    }
}

/// `½ ∫ u'v'` over one cell, computed from increments.
pub(crate) fn cell_term(cu: &Cell, cv: &Cell) -> Term {
    Term {
        lo: cu.lo,
        hi: cu.hi,
        kind: TermKind::Cell,
        value: 0.5 * cu.rise * cv.rise / cu.len(),
    }
}

fn cell_terms(
    u: &GridFunction,
    v: &GridFunction,
    keep: impl Fn(&Cell) -> bool,
) -> Result<Vec<Term>> {
    let (u, v) = on_common_grid(u, v)?;
    Ok(u.cells()
        .zip(v.cells())
        .filter(|(c, _)| keep(c))
        .map(|(cu, cv)| cell_term(&cu, &cv))
        .collect())
}

/// `½ ∫_window u'v' dx`.
pub fn dirichlet_energy(u: &GridFunction, v: &GridFunction) -> Result<EnergyReport> {
    Ok(EnergyReport::from_terms(FormTag::Full, cell_terms(u, v, |_| true)?))
}

fn require_subspace(u: &GridFunction, set: &IntervalSet, tol: f64) -> Result<()> {
    if let Some(c) = subspace_violation(u, set, tol)? {
        return Err(Error::NotInSubspace {
            lo: c.lo,
            hi: c.hi,
            slope: c.slope(),
        });
    }
    Ok(())
}

/// `½ ∫ (du/ds)(dv/ds) ds = ½ ∫ u'v' 1_G dx` for members of the regular subspace.
pub fn subspace_energy(
    u: &GridFunction,
    v: &GridFunction,
    set: &IntervalSet,
    tol: f64,
) -> Result<EnergyReport> {
    require_subspace(u, set, tol)?;
    require_subspace(v, set, tol)?;
    let terms = cell_terms(u, v, |c| cell_part(set, c) == Part::G)?;
    Ok(EnergyReport::from_terms(FormTag::Subspace, terms))
}

fn require_vanishing(u: &GridFunction, set: &IntervalSet, tol: f64) -> Result<()> {
    check_adapted(u, set)?;
    for (&x, &value) in u.nodes().iter().zip(u.values()) {
        if set.part_of(x)? == Part::F && value.abs() > tol {
            return Err(Error::NotVanishingOnF { x, value });
        }
    }
    Ok(())
}

/// Part form on `G`: `½ ∫_G u'v' dx` for functions vanishing on `F`.
pub fn part_energy(
    u: &GridFunction,
    v: &GridFunction,
    set: &IntervalSet,
    tol: f64,
) -> Result<EnergyReport> {
    require_vanishing(u, set, tol)?;
    require_vanishing(v, set, tol)?;
    let terms = cell_terms(u, v, |c| cell_part(set, c) == Part::G)?;
    Ok(EnergyReport::from_terms(FormTag::Part, terms))
}

/// `∫_A u'(x)² dx`.
pub fn energy_measure(u: &GridFunction, a: Interval) -> f64 {
    u.cells()
        .map(|c| {
            let s = c.slope();
            s * s * Interval::new(c.lo, c.hi).overlap(a.lo, a.hi)
        })
        .sum()
}

/// Query region for the subspace energy measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Interval(Interval),
    /// `G` or `F` intersected with the window.
    Part(Part),
}

/// `∫_A (du/ds)² ds = ∫_A u'² 1_G dx`; vanishes on `F`.
pub fn subspace_energy_measure(u: &GridFunction, set: &IntervalSet, region: Region) -> Result<f64> {
    check_adapted(u, set)?;
    Ok(u.cells()
        .filter(|c| cell_part(set, c) == Part::G)
        .map(|c| {
            let s = c.slope();
            let weight = match region {
                Region::Interval(a) => Interval::new(c.lo, c.hi).overlap(a.lo, a.hi),
                Region::Part(Part::G) => c.len(),
                Region::Part(Part::F) => 0.0,
            };
            s * s * weight
        })
        .sum())
}

/// `0 ∨ u ∧ 1`, with nodes added where `u` crosses 0 or 1 inside a cell so
/// that the result is again exactly piecewise linear.
pub fn unit_contraction(u: &GridFunction) -> GridFunction {
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    let mut nodes = Vec::with_capacity(u.nodes().len());
    let mut values = Vec::with_capacity(u.nodes().len());
    let (xs, vs) = (u.nodes(), u.values());
    for i in 0..xs.len() {
        if i > 0 {
            let (x0, x1, v0, v1) = (xs[i - 1], xs[i], vs[i - 1], vs[i]);
            let mut cuts: Vec<(f64, f64)> = [0.0, 1.0]
                .into_iter()
                .filter(|&l| (v0 - l) * (v1 - l) < 0.0)
                .map(|l| (x0 + (l - v0) / (v1 - v0) * (x1 - x0), l))
                .filter(|&(x, _)| x0 < x && x < x1)
                .collect();
            cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (x, level) in cuts {
                if nodes.last().is_some_and(|&last| last >= x) {
                    continue;
                }
                nodes.push(x);
                values.push(level);
            }
        }
        nodes.push(xs[i]);
        values.push(clamp(vs[i]));
    }
    GridFunction::new(nodes, values).expect("contraction keeps the grid valid")
}
