//! Continuous piecewise-linear functions on a node grid.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Interval, IntervalSet, Part};
use crate::transform::{DarningMap, Preimage};

/// Default slack for constancy and slope checks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

/// One grid cell with the slope of the function on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    /// Value increment across the cell.
    pub rise: f64,
}

impl Cell {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn slope(&self) -> f64 {
        self.rise / (self.hi - self.lo)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    x: f64,
    value: f64,
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid("need at least two nodes".into()));
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
        Ok(Self { nodes, values })
    }

    pub fn from_fn(nodes: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, values)
    }

    pub fn constant(domain: Interval, c: f64) -> Result<Self> {
        Self::new(vec![domain.lo, domain.hi], vec![c, c])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| Cell {
                lo: x[0],
                hi: x[1],
                rise: v[1] - v[0],
            })
    }

    /// Slope on each cell.
    pub fn derivative(&self) -> Vec<f64> {
        self.cells().map(|c| c.slope()).collect()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let d = self.domain();
        if !d.contains_closed(x) {
            return Err(Error::OutOfRange {
                what: "evaluation point",
                value: x,
                lo: d.lo,
                hi: d.hi,
            });
        }
        match self.nodes.binary_search_by(|n| n.total_cmp(&x)) {
            Ok(i) => Ok(self.values[i]),
            Err(i) => {
                let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
                let (v0, v1) = (self.values[i - 1], self.values[i]);
                Ok(v0 + (v1 - v0) * (x - x0) / (x1 - x0))
            }
        }
    }

    /// The same function on a finer node set containing the current nodes
    /// (extra nodes only; existing values are kept bit-for-bit).
    pub fn refine(&self, nodes: &[f64]) -> Result<Self> {
        let values = nodes
            .iter()
            .map(|&x| self.eval(x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes.to_vec(), values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ u² dx` over the domain, exact for piecewise-linear `u`.
    pub fn l2_squared(&self) -> f64 {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| (x[1] - x[0]) * (v[0] * v[0] + v[0] * v[1] + v[1] * v[1]) / 3.0)
            .sum()
    }

    /// Node-wise map of values.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Writes the "x,value" CSV layout.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (&x, &value) in self.nodes.iter().zip(&self.values) {
            w.serialize(Row { x, value })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for row in r.deserialize() {
            let row: Row = row?;
            nodes.push(row.x);
            values.push(row.value);
        }
        Self::new(nodes, values)
    }

    /// Reads a CSV and checks that the grid is adapted to `set`.
    pub fn read_csv_adapted<R: Read>(input: R, set: &IntervalSet) -> Result<Self> {
        let u = Self::read_csv(input)?;
        check_adapted(&u, set)?;
        Ok(u)
    }
}

/// Union of two node sets on the same domain.
pub fn common_nodes(u: &GridFunction, v: &GridFunction) -> Result<Vec<f64>> {
    let (du, dv) = (u.domain(), v.domain());
    if du != dv {
        return Err(Error::IncompatibleGrids {
            a0: du.lo,
            a1: du.hi,
            b0: dv.lo,
            b1: dv.hi,
        });
    }
    let mut nodes: Vec<f64> = u.nodes.iter().chain(&v.nodes).copied().collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    Ok(nodes)
}

/// Both functions on the union of their grids.
pub fn on_common_grid(u: &GridFunction, v: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    if u.nodes == v.nodes {
        return Ok((u.clone(), v.clone()));
    }
    let nodes = common_nodes(u, v)?;
    Ok((u.refine(&nodes)?, v.refine(&nodes)?))
}

/// A grid is adapted to `set` when it spans the window and contains every
/// endpoint of `H` in it, so that every cell lies in `G` or in `F`.
pub fn check_adapted(u: &GridFunction, set: &IntervalSet) -> Result<()> {
    let (d, w) = (u.domain(), set.window());
    if d != w {
        return Err(Error::NotAdapted(format!(
            "grid spans [{}, {}] but the window is [{}, {}]",
            d.lo, d.hi, w.lo, w.hi
        )));
    }
    for h in set.endpoints() {
        if u.nodes.binary_search_by(|n| n.total_cmp(&h)).is_err() {
            return Err(Error::NotAdapted(format!("endpoint {h} is not a grid node")));
        }
    }
    Ok(())
}

/// Which part of the partition a cell of an adapted grid lies in.
pub fn cell_part(set: &IntervalSet, cell: &Cell) -> Part {
    if set.component_containing(cell.midpoint()).is_some() {
        Part::G
    } else {
        Part::F
    }
}

/// Uniform grid on the window with `per_piece` cells on every component of
/// `G` and of `F`.
pub fn adapted_grid(set: &IntervalSet, per_piece: usize) -> Vec<f64> {
    let per_piece = per_piece.max(1);
    let mut pieces: Vec<Interval> = set
        .components()
        .iter()
        .chain(set.f_components())
        .copied()
        .collect();
    pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut nodes = vec![set.window().lo];
    for p in pieces {
        for k in 1..per_piece {
            nodes.push(p.lo + p.len() * k as f64 / per_piece as f64);
        }
        nodes.push(p.hi);
    }
    nodes
}

/// Whether `u' = 0` a.e. on `F`: every `F`-cell has slope at most `tol`.
pub fn is_in_subspace(u: &GridFunction, set: &IntervalSet, tol: f64) -> Result<bool> {
    Ok(subspace_violation(u, set, tol)?.is_none())
}

/// First `F`-cell on which `u` is not flat.
pub fn subspace_violation(u: &GridFunction, set: &IntervalSet, tol: f64) -> Result<Option<Cell>> {
    check_adapted(u, set)?;
    Ok(u
        .cells()
        .find(|c| cell_part(set, c) == Part::F && c.slope().abs() > tol))
}

/// `û` with `û ∘ j = u`, on the image of the window. `u` must be constant on
/// every closed component of `G`.
pub fn darn_function(u: &GridFunction, dm: &DarningMap, tol: f64) -> Result<GridFunction> {
    let set = dm.set();
    check_adapted(u, set)?;
    for c in u.cells() {
        if cell_part(set, &c) == Part::G && c.rise.abs() > tol {
            let k = set.component_containing(c.midpoint()).unwrap_or(0);
            let comp = set.components()[k];
            return Err(Error::NotConstantOnComponent {
                lo: comp.lo,
                hi: comp.hi,
            });
        }
    }
    let mut nodes: Vec<f64> = Vec::with_capacity(u.nodes.len());
    let mut values: Vec<f64> = Vec::with_capacity(u.nodes.len());
    // Within a collapsed run, keep the value at the first node lying in F so
    // that the result matches darning of the restriction to F exactly.
    let mut from_f: Vec<bool> = Vec::with_capacity(u.nodes.len());
    for (&x, &v) in u.nodes.iter().zip(&u.values) {
        let y = dm.eval(x)?;
        let in_f = set.part_of(x)? == Part::F;
        if nodes.last() == Some(&y) {
            let last = from_f.len() - 1;
            if in_f && !from_f[last] {
                values[last] = v;
                from_f[last] = true;
            }
            continue;
        }
        nodes.push(y);
        values.push(v);
        from_f.push(in_f);
    }
    GridFunction::new(nodes, values)
}

/// `u = û ∘ j` on the window. The grid consists of the endpoints of `H`,
/// the window edges and the preimages of the nodes of `û`, so the result is
/// exact.
pub fn undarn_function(uhat: &GridFunction, dm: &DarningMap) -> Result<GridFunction> {
    let set = dm.set();
    let w = set.window();
    let mut nodes = vec![w.lo, w.hi];
    nodes.extend(set.endpoints());
    let img = dm.map().window_image();
    for &y in &uhat.nodes {
        if img.contains_open(y) {
            match dm.inverse(y)? {
                Preimage::Point(x) => nodes.push(x),
                Preimage::Interval(i) => nodes.extend([i.lo, i.hi]),
            }
        }
    }
    nodes.retain(|x| w.contains_closed(*x));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    undarn_onto(uhat, dm, nodes)
}

/// `û ∘ j` evaluated on a caller-chosen grid.
pub fn undarn_onto(uhat: &GridFunction, dm: &DarningMap, nodes: Vec<f64>) -> Result<GridFunction> {
    let values = nodes
        .iter()
        .map(|&x| uhat.eval(dm.eval(x)?))
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(nodes, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::svc_complement;

    fn d1() -> IntervalSet {
        svc_complement(1, Interval::new(0.0, 1.0)).unwrap()
    }

    #[test]
    fn slopes() {
        let u = GridFunction::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(u.derivative(), vec![1.0]);
        let v = GridFunction::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(v.derivative(), vec![2.0, 0.0]);
        assert_eq!(v.eval(0.25).unwrap(), 0.5);
        assert!(v.eval(1.5).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridFunction::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(GridFunction::new(vec![0.0], vec![1.0]).is_err());
        assert!(GridFunction::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn subspace_membership() {
        let set = d1();
        let nodes = vec![0.0, 0.375, 0.625, 1.0];
        let u = GridFunction::new(nodes.clone(), vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(is_in_subspace(&u, &set, DEFAULT_TOL).unwrap());
        let x = GridFunction::from_fn(nodes.clone(), |x| x).unwrap();
        assert!(!is_in_subspace(&x, &set, DEFAULT_TOL).unwrap());
        let zero = GridFunction::from_fn(nodes, |_| 0.0).unwrap();
        assert!(is_in_subspace(&zero, &set, DEFAULT_TOL).unwrap());

        let coarse = GridFunction::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            is_in_subspace(&coarse, &set, DEFAULT_TOL),
            Err(Error::NotAdapted(_))
        ));
    }

    #[test]
    fn darn_example() {
        let dm = DarningMap::new(d1(), Some(0.0)).unwrap();
        let u = GridFunction::new(vec![0.0, 0.375, 0.625, 1.0], vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        let uhat = darn_function(&u, &dm, DEFAULT_TOL).unwrap();
        assert_eq!(uhat.nodes(), &[0.0, 0.375, 0.75]);
        assert_eq!(uhat.values(), &[0.0, 1.0, 2.0]);
        let back = undarn_function(&uhat, &dm).unwrap();
        assert_eq!(back, u);

        let bad = GridFunction::from_fn(vec![0.0, 0.375, 0.625, 1.0], |x| x).unwrap();
        assert!(matches!(
            darn_function(&bad, &dm, DEFAULT_TOL),
            Err(Error::NotConstantOnComponent { lo, .. }) if lo == 0.375
        ));
    }

    #[test]
    fn undarn_constant() {
        let dm = DarningMap::new(d1(), Some(0.0)).unwrap();
        let c = GridFunction::constant(Interval::new(0.0, 0.75), 3.0).unwrap();
        let u = undarn_function(&c, &dm).unwrap();
        assert!(u.values().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn csv_round_trip() {
        let u = GridFunction::new(vec![0.0, 0.375, 1.0], vec![0.5, -1.25, 2.0]).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,value\n"));
        assert_eq!(GridFunction::read_csv(buf.as_slice()).unwrap(), u);
        assert!(GridFunction::read_csv_adapted(buf.as_slice(), &d1()).is_err());
    }
}
