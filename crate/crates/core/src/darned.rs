//! The darned form on `R_j` and the metric comparisons between a complement
//! function on the line and its darned image.

use serde::Serialize;

use crate::energy::{dirichlet_energy, EnergyReport, FormTag};
use crate::error::{Error, Result};
use crate::grid::{darn_function, GridFunction};
use crate::speed::SpeedMeasure;
use crate::trace::{trace_energy, TraceFunction};
use crate::transform::DarningMap;

/// `½ ∫_{R_j} û' v̂' dx`.
pub fn darned_energy(uhat: &GridFunction, vhat: &GridFunction) -> Result<EnergyReport> {
    let mut e = dirichlet_energy(uhat, vhat)?;
    e.form = FormTag::Darned;
    Ok(e)
}

/// `φ̂` with `φ̂ ∘ j = φ` on `F`: the two ends of every gap collapse onto
/// one node, so `φ` must agree there.
pub fn darn_trace_function(phi: &TraceFunction, dm: &DarningMap, tol: f64) -> Result<GridFunction> {
    let set = dm.set();
    let mut nodes: Vec<f64> = Vec::with_capacity(phi.nodes().len());
    let mut values: Vec<f64> = Vec::with_capacity(phi.nodes().len());
    for (&x, &v) in phi.nodes().iter().zip(phi.values()) {
        let y = dm.eval(x)?;
        if nodes.last() == Some(&y) {
            let prev = values[values.len() - 1];
            if (prev - v).abs() > tol {
                let k = set
                    .components()
                    .iter()
                    .position(|c| c.hi == x)
                    .unwrap_or(0);
                let c = set.components()[k];
                return Err(Error::NotConstantOnComponent { lo: c.lo, hi: c.hi });
            }
            continue;
        }
        nodes.push(y);
        values.push(v);
    }
    GridFunction::new(nodes, values)
}

/// `∫ û² dm` for a piecewise-linear `û` and a density-plus-atoms measure.
/// An infinite atom contributes 0 where `û` vanishes (within `tol`) and
/// `∞` otherwise.
pub fn l2_squared_against(uhat: &GridFunction, m: &SpeedMeasure, tol: f64) -> Result<f64> {
    let mut total = 0.0;
    for p in m.density_pieces() {
        let mut nodes: Vec<f64> = uhat
            .nodes()
            .iter()
            .copied()
            .filter(|&x| p.lo < x && x < p.hi)
            .collect();
        nodes.insert(0, p.lo);
        nodes.push(p.hi);
        let piece = uhat.refine(&nodes)?;
        total += p.value * piece.l2_squared();
    }
    for a in m.atoms() {
        let v = uhat.eval(a.at)?;
        if a.is_infinite() {
            if v.abs() > tol {
                return Ok(f64::INFINITY);
            }
        } else {
            total += a.mass * v * v;
        }
    }
    Ok(total)
}

/// A quantity measured on the line and on `R_j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Pair {
    pub line: f64,
    pub darned: f64,
}

impl Pair {
    pub fn rel_gap(&self) -> f64 {
        (self.line - self.darned).abs() / self.line.abs().max(self.darned.abs()).max(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub sup: Pair,
    /// `L²(window, dx)` against `L²(R_j, m_j)`, squared norms.
    pub l2: Pair,
    pub energy: Pair,
    /// Energy of the restriction to `F` in the trace form.
    pub trace_energy: f64,
    /// Darning of `u|_F` reproduces the darning of `u` node for node.
    pub trace_side_identical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DarnedSpaceReport {
    pub samples: Vec<SampleReport>,
}

impl DarnedSpaceReport {
    /// Largest relative discrepancy over all samples and metrics.
    pub fn worst_gap(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| {
                [
                    s.sup.rel_gap(),
                    s.l2.rel_gap(),
                    s.energy.rel_gap(),
                    Pair {
                        line: s.energy.line,
                        darned: s.trace_energy,
                    }
                    .rel_gap(),
                ]
            })
            .fold(0.0, f64::max)
    }

    pub fn all_identical(&self) -> bool {
        self.samples.iter().all(|s| s.trace_side_identical)
    }
}

/// Compares each sample (a function with `u' = 0` on `G`) with its darned
/// image: sup norm, `L²` norm (Lebesgue on the window against its image
/// measure) and energy, plus the trace-side darning.
pub fn equivalence_report(samples: &[GridFunction], dm: &DarningMap, tol: f64) -> Result<DarnedSpaceReport> {
    let set = dm.set();
    let m_j = dm.map().window_pushforward()?;
    let mut out = Vec::with_capacity(samples.len());
    for u in samples {
        let uhat = darn_function(u, dm, tol)?;
        let restricted = TraceFunction::restrict(u, set)?;
        let from_trace = darn_trace_function(&restricted, dm, tol)?;
        out.push(SampleReport {
            sup: Pair {
                line: u.sup_norm(),
                darned: uhat.sup_norm(),
            },
            l2: Pair {
                line: u.l2_squared(),
                darned: l2_squared_against(&uhat, &m_j, tol)?,
            },
            energy: Pair {
                line: dirichlet_energy(u, u)?.value,
                darned: darned_energy(&uhat, &uhat)?.value,
            },
            trace_energy: trace_energy(&restricted, set).value,
            trace_side_identical: from_trace == uhat,
        });
    }
    Ok(DarnedSpaceReport { samples: out })
}
