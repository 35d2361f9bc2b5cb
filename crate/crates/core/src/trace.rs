//! Functions on `F`, their harmonic extensions across the gaps, hitting
//! kernels, jump weights and the trace energies.

use std::io::Write;

use serde::Serialize;

use crate::energy::{cell_term, EnergyReport, FormTag, Term, TermKind};
use crate::error::{Error, Result};
use crate::geometry::{Interval, IntervalSet, Part};
use crate::grid::GridFunction;
use crate::speed::Atom;
use crate::transform::ScaleFunction;

/// Node data on `F`: values at every endpoint of `H` in the window, at the
/// window edges lying in `F`, and at any further points of `F`. Between two
/// nodes in the same component of `F` the function is linear.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl TraceFunction {
    pub fn new(set: &IntervalSet, nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("nodes and values must be finite".into()));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "nodes not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        let w = set.window();
        for &x in &nodes {
            if !w.contains_closed(x) {
                return Err(Error::OutOfRange {
                    what: "trace node",
                    value: x,
                    lo: w.lo,
                    hi: w.hi,
                });
            }
            if set.part_of(x)? == Part::G {
                return Err(Error::TraceNodeInG { x });
            }
        }
        let has = |x: f64| nodes.binary_search_by(|n| n.total_cmp(&x)).is_ok();
        let mut required = set.endpoints();
        for edge in [w.lo, w.hi] {
            if set.part_of(edge)? == Part::F {
                required.push(edge);
            }
        }
        if let Some(&x) = required.iter().find(|&&x| !has(x)) {
            return Err(Error::MissingEndpoint { x });
        }
        if nodes.is_empty() {
            return Err(Error::InvalidGrid("F has no points in the window".into()));
        }
        Ok(Self { nodes, values })
    }

    /// `φ(x) = f(x)` on `per_component` equal cells of every component of `F`.
    pub fn from_fn(set: &IntervalSet, per_component: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let k = per_component.max(1);
        let mut nodes = Vec::new();
        for c in set.f_components() {
            for i in 0..=k {
                nodes.push(c.lo + c.len() * i as f64 / k as f64);
            }
        }
        nodes.dedup();
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(set, nodes, values)
    }

    /// Restriction of a grid function on an adapted grid to `F`.
    pub fn restrict(u: &GridFunction, set: &IntervalSet) -> Result<Self> {
        crate::grid::check_adapted(u, set)?;
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (&x, &v) in u.nodes().iter().zip(u.values()) {
            if set.part_of(x)? == Part::F {
                nodes.push(x);
                values.push(v);
            }
        }
        Self::new(set, nodes, values)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, x: f64) -> Option<f64> {
        self.nodes
            .binary_search_by(|n| n.total_cmp(&x))
            .ok()
            .map(|i| self.values[i])
    }

    /// Value at a point of `F` inside the node span.
    pub fn eval(&self, set: &IntervalSet, x: f64) -> Result<f64> {
        if let Some(v) = self.value_at(x) {
            return Ok(v);
        }
        let i = self.nodes.partition_point(|&n| n < x);
        if i == 0 || i == self.nodes.len() || set.part_of(x)? == Part::G {
            let (lo, hi) = (self.nodes[0], self.nodes[self.nodes.len() - 1]);
            return Err(Error::OutOfRange {
                what: "trace evaluation point",
                value: x,
                lo,
                hi,
            });
        }
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        Ok(v0 + (v1 - v0) * (x - x0) / (x1 - x0))
    }

    /// Node pairs `(i, i + 1)` with the part of the line between them.
    fn spans<'a>(&'a self, set: &'a IntervalSet) -> impl Iterator<Item = (usize, Part)> + 'a {
        (0..self.nodes.len().saturating_sub(1)).map(move |i| {
            let mid = 0.5 * (self.nodes[i] + self.nodes[i + 1]);
            let part = if set.component_containing(mid).is_some() {
                Part::G
            } else {
                Part::F
            };
            (i, part)
        })
    }

    /// The same function on a larger node set inside `F`.
    pub fn refine(&self, set: &IntervalSet, nodes: &[f64]) -> Result<Self> {
        let values = nodes
            .iter()
            .map(|&x| self.eval(set, x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(set, nodes.to_vec(), values)
    }
}

/// `H_F φ`: linear across every bounded gap, constant on unbounded ones.
pub fn harmonic_extension(phi: &TraceFunction, set: &IntervalSet) -> Result<GridFunction> {
    let w = set.window();
    let mut nodes = phi.nodes.clone();
    let mut values = phi.values.clone();
    if nodes[0] > w.lo {
        nodes.insert(0, w.lo);
        values.insert(0, values[0]);
    }
    if nodes[nodes.len() - 1] < w.hi {
        nodes.push(w.hi);
        values.push(values[values.len() - 1]);
    }
    GridFunction::new(nodes, values)
}

/// Harmonic extension for the subspace: linear in the scale coordinate on
/// every gap, sampled at `interior` extra points per bounded gap.
pub fn harmonic_extension_scale(
    phi: &TraceFunction,
    sf: &ScaleFunction,
    interior: usize,
) -> Result<GridFunction> {
    let set = sf.set();
    let ext = harmonic_extension(phi, set)?;
    let mut nodes = Vec::with_capacity(ext.nodes().len() * (interior + 1));
    let mut values = Vec::with_capacity(nodes.capacity());
    let (xs, vs) = (ext.nodes(), ext.values());
    for i in 0..xs.len() {
        nodes.push(xs[i]);
        values.push(vs[i]);
        let Some(&next) = xs.get(i + 1) else { break };
        let mid = 0.5 * (xs[i] + next);
        if set.component_containing(mid).is_none() {
            continue;
        }
        let (sa, sb) = (sf.eval(xs[i])?, sf.eval(next)?);
        for k in 1..=interior {
            let x = xs[i] + (next - xs[i]) * k as f64 / (interior + 1) as f64;
            let t = (sf.eval(x)? - sa) / (sb - sa);
            nodes.push(x);
            values.push(vs[i] + (vs[i + 1] - vs[i]) * t);
        }
    }
    GridFunction::new(nodes, values)
}

/// `E^x(e^{-α σ_F}; X_{σ_F} = a)` and the same for `b`, for Brownian motion
/// started at `x ∈ [a, b]`. With `α = 0` these are the hitting probabilities.
pub fn hitting_kernels(a: f64, b: f64, alpha: f64, x: f64) -> Result<(f64, f64)> {
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("({a}, {b}) is not a bounded gap")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be >= 0")));
    }
    if !(a <= x && x <= b) {
        return Err(Error::OutOfRange {
            what: "starting point",
            value: x,
            lo: a,
            hi: b,
        });
    }
    let d = b - a;
    if alpha == 0.0 {
        return Ok(((b - x) / d, (x - a) / d));
    }
    let c = (2.0 * alpha).sqrt();
    // sinh(c t) / sinh(c d) = e^{c (t - d)} (1 - e^{-2 c t}) / (1 - e^{-2 c d})
    let ratio = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            (c * (t - d)).exp() * (-2.0 * c * t).exp_m1() / (-2.0 * c * d).exp_m1()
        }
    };
    Ok((ratio(b - x), ratio(x - a)))
}

/// [`hitting_kernels`] for the `n`-th component of `set`.
pub fn alpha_hitting(set: &IntervalSet, n: usize, alpha: f64, x: f64) -> Result<(f64, f64)> {
    let c = *set.components().get(n).ok_or_else(|| {
        Error::InvalidParameter(format!("component index {n} out of range"))
    })?;
    if set.is_unbounded(n) {
        return Err(Error::InfiniteComponent { index: n });
    }
    hitting_kernels(c.lo, c.hi, alpha, x)
}

fn check_length(d: f64) -> Result<()> {
    if d.is_nan() || d <= 0.0 {
        return Err(Error::InvalidParameter(format!("gap length {d} must be positive")));
    }
    Ok(())
}

/// Jump intensity `1/(2d)` between the two ends of a gap of length `d`
/// (zero for an unbounded gap).
pub fn feller_weight(d: f64) -> Result<f64> {
    check_length(d)?;
    Ok(if d.is_infinite() { 0.0 } else { 0.5 / d })
}

/// `α ∫_a^b p(x)(1 - r(x)) dx = 1/(2d) - α / (c sinh(c d))` with `c = √(2α)`,
/// `r(x) = (b - x)/d`. Increases to [`feller_weight`] as `α → ∞`.
pub fn feller_numeric(d: f64, alpha: f64) -> Result<f64> {
    check_length(d)?;
    if d.is_infinite() {
        return Err(Error::InvalidParameter("the gap must be bounded".into()));
    }
    if !(alpha >= 0.0) || alpha.is_infinite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be finite and >= 0")));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let c = (2.0 * alpha).sqrt();
    // α / (c sinh(cd)) = (c/2) / sinh(cd) = c e^{-cd} / (1 - e^{-2cd})
    let tail = c * (-c * d).exp() / -(-2.0 * c * d).exp_m1();
    Ok(0.5 / d - tail)
}

fn trace_terms(phi: &TraceFunction, set: &IntervalSet) -> Vec<Term> {
    phi.spans(set)
        .map(|(i, part)| {
            let (x0, x1) = (phi.nodes[i], phi.nodes[i + 1]);
            let rise = phi.values[i + 1] - phi.values[i];
            let cell = crate::grid::Cell { lo: x0, hi: x1, rise };
            let mut term = cell_term(&cell, &cell);
            if part == Part::G {
                term.kind = TermKind::Jump;
            }
            term
        })
        .collect()
}

/// `½ ∫_F φ'² dx + ½ Σ (φ(a_n) - φ(b_n))² / d_n`.
pub fn trace_energy(phi: &TraceFunction, set: &IntervalSet) -> EnergyReport {
    let mut report = EnergyReport::from_terms(FormTag::Trace, trace_terms(phi, set));
    report.local.get_or_insert(report.value);
    report.jump.get_or_insert(0.0);
    report
}

/// Jump part only; the local part must vanish (within `tol`).
pub fn trace_subspace_energy(phi: &TraceFunction, set: &IntervalSet, tol: f64) -> Result<EnergyReport> {
    let full = trace_energy(phi, set);
    let local = full.local.unwrap_or(0.0);
    if local > tol {
        return Err(Error::NotInTraceSubspace { local });
    }
    let jumps = full
        .breakdown
        .into_iter()
        .filter(|t| t.kind == TermKind::Jump)
        .collect();
    let mut report = EnergyReport::from_terms(FormTag::TraceSubspace, jumps);
    report.local = Some(0.0);
    report.jump.get_or_insert(0.0);
    Ok(report)
}

fn require_no_jumps(u: &TraceFunction, set: &IntervalSet, tol: f64) -> Result<()> {
    for (_, c) in set.finite_components() {
        let (a, b) = (u.value_at(c.lo), u.value_at(c.hi));
        if let (Some(a), Some(b)) = (a, b) {
            if (a - b).abs() > tol {
                return Err(Error::NotInComplement(format!(
                    "values {a} and {b} differ at the ends of ({}, {})",
                    c.lo, c.hi
                )));
            }
        }
    }
    Ok(())
}

/// `½ ∫_F u'v' dx` for restrictions of complement functions, which take equal
/// values at the two ends of every gap.
pub fn trace_complement_energy(
    u: &TraceFunction,
    v: &TraceFunction,
    set: &IntervalSet,
    tol: f64,
) -> Result<EnergyReport> {
    require_no_jumps(u, set, tol)?;
    require_no_jumps(v, set, tol)?;
    let (u, v) = if u.nodes == v.nodes {
        (u.clone(), v.clone())
    } else {
        let mut nodes: Vec<f64> = u.nodes.iter().chain(&v.nodes).copied().collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        (u.refine(set, &nodes)?, v.refine(set, &nodes)?)
    };
    let terms = u
        .spans(set)
        .filter(|(_, part)| *part == Part::F)
        .map(|(i, _)| {
            let (x0, x1) = (u.nodes[i], u.nodes[i + 1]);
            let cu = crate::grid::Cell { lo: x0, hi: x1, rise: u.values[i + 1] - u.values[i] };
            let cv = crate::grid::Cell { lo: x0, hi: x1, rise: v.values[i + 1] - v.values[i] };
            cell_term(&cu, &cv)
        })
        .collect();
    Ok(EnergyReport::from_terms(FormTag::TraceComplement, terms))
}

/// `μ = 1_F dx + Σ d_n/2 (δ_{a_n} + δ_{b_n})`, with infinite atoms at the
/// finite ends of unbounded components.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceMeasure {
    pub f_components: Vec<Interval>,
    pub atoms: Vec<Atom>,
}

impl TraceMeasure {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Mass of `[lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let cont: f64 = self.f_components.iter().map(|f| f.overlap(lo, hi)).sum();
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| lo <= a.at && a.at <= hi)
            .map(|a| a.mass)
            .sum();
        cont + atoms
    }
}

pub fn trace_measure(set: &IntervalSet) -> TraceMeasure {
    let mut atoms = Vec::new();
    if let Some(b) = set.unbounded_left() {
        atoms.push(Atom {
            at: b,
            mass: f64::INFINITY,
        });
    }
    for (_, c) in set.finite_components() {
        let half = 0.5 * c.len();
        atoms.push(Atom { at: c.lo, mass: half });
        atoms.push(Atom { at: c.hi, mass: half });
    }
    if let Some(a) = set.unbounded_right() {
        atoms.push(Atom {
            at: a,
            mass: f64::INFINITY,
        });
    }
    TraceMeasure {
        f_components: set.f_components().to_vec(),
        atoms,
    }
}

/// Row of the jump table: a gap and the jump intensity between its ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JumpRow {
    pub a_n: f64,
    pub b_n: f64,
    pub d_n: f64,
    pub weight: f64,
}

pub fn jump_table(set: &IntervalSet) -> Vec<JumpRow> {
    let mut rows = Vec::new();
    if let Some(b) = set.unbounded_left() {
        rows.push(JumpRow {
            a_n: f64::NEG_INFINITY,
            b_n: b,
            d_n: f64::INFINITY,
            weight: 0.0,
        });
    }
    for (_, c) in set.finite_components() {
        rows.push(JumpRow {
            a_n: c.lo,
            b_n: c.hi,
            d_n: c.len(),
            weight: 0.5 / c.len(),
        });
    }
    if let Some(a) = set.unbounded_right() {
        rows.push(JumpRow {
            a_n: a,
            b_n: f64::INFINITY,
            d_n: f64::INFINITY,
            weight: 0.0,
        });
    }
    rows
}

pub fn write_jump_table<W: Write>(rows: &[JumpRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
