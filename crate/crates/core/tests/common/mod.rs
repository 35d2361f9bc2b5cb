//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use traceform::geometry::{periodic_fat_cantor, svc_complement, Interval, IntervalSet, Part, Tail, Tails};
use traceform::darned::equivalence_report;
use traceform::decomposition::{is_in_complement, project_subspace};
use traceform::energy::{dirichlet_energy, part_energy, subspace_energy, unit_contraction};
use traceform::grid::{adapted_grid, cell_part, GridFunction};
use traceform::sim::WalkGrid;
use traceform::trace::{harmonic_extension, harmonic_extension_scale, trace_energy, TraceFunction};
use traceform::transform::{DarningMap, ScaleFunction};

pub const UNIT: Interval = Interval::new(0.0, 1.0);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn svc(depth: u32) -> IntervalSet {
    svc_complement(depth, UNIT).unwrap()
}

/// A set in each boundary case: I periodic, II one infinite side, III none.
pub fn case_set(rng: &mut ChaCha8Rng, case: usize) -> IntervalSet {
    let depth = rng.random_range(1..=4);
    match case {
        0 => periodic_fat_cantor(depth, 1.0 + rng.random_range(1..=4) as f64 * 0.25).unwrap(),
        1 => {
            let tails = if rng.random() {
                Tails::new(Tail::AllF, Tail::AllG)
            } else {
                Tails::new(Tail::AllG, Tail::AllF)
            };
            svc(depth).with_tails(tails).unwrap()
        }
        _ => svc(depth),
    }
}

/// Random values on a grid adapted to `set`.
pub fn random_function(rng: &mut ChaCha8Rng, set: &IntervalSet) -> GridFunction {
    let nodes = adapted_grid(set, rng.random_range(1..=4));
    let values = nodes.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    GridFunction::new(nodes, values).unwrap()
}

/// Random function whose slope vanishes on every cell lying in `flat`.
pub fn random_flat_on(rng: &mut ChaCha8Rng, set: &IntervalSet, flat: Part, per_piece: usize) -> GridFunction {
    let nodes = adapted_grid(set, per_piece);
    let mut values = vec![rng.random_range(-1.0..1.0)];
    for w in nodes.windows(2) {
        let cell = traceform::grid::Cell { lo: w[0], hi: w[1], rise: 0.0 };
        let last = values[values.len() - 1];
        values.push(if cell_part(set, &cell) == flat {
            last
        } else {
            rng.random_range(-1.0..1.0)
        });
    }
    GridFunction::new(nodes, values).unwrap()
}

/// Random function vanishing at every node in `F`.
pub fn random_vanishing_on_f(rng: &mut ChaCha8Rng, set: &IntervalSet) -> GridFunction {
    let nodes = adapted_grid(set, rng.random_range(2..=4));
    let values = nodes
        .iter()
        .map(|&x| {
            if set.part_of(x).unwrap() == Part::F {
                0.0
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect();
    GridFunction::new(nodes, values).unwrap()
}

pub fn random_trace(rng: &mut ChaCha8Rng, set: &IntervalSet) -> TraceFunction {
    let shape = TraceFunction::from_fn(set, rng.random_range(1..=3), |_| 0.0).unwrap();
    let values = shape.nodes().iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    TraceFunction::new(set, shape.nodes().to_vec(), values).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Adaptive Simpson quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Stationary law of the continuous-time chain behind a walk grid with
/// reflecting ends, by solving `π Q = 0, Σ π = 1` directly.
pub fn chain_stationary(grid: &WalkGrid) -> Vec<f64> {
    let n = grid.cells() + 1;
    let means = grid.means();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let rate = 1.0 / means[i];
        q[(i, i)] = -rate;
        let moves: Vec<(usize, f64)> = if i == 0 {
            vec![(1, 1.0)]
        } else if i == n - 1 {
            vec![(n - 2, 1.0)]
        } else {
            vec![(i - 1, 0.5), (i + 1, 0.5)]
        };
        for (j, p) in moves {
            q[(i, j)] += rate * p;
        }
    }
    let mut a = q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = a.lu().solve(&rhs).expect("chain generator is irreducible");
    pi.iter().copied().collect()
}


fn energy(u: &GridFunction) -> f64 {
    dirichlet_energy(u, u).unwrap().value
}

/// Relative gap between the trace energy of a random `φ` and the energy of
/// its harmonic extension.
pub fn trace_identity_gap(rng: &mut ChaCha8Rng) -> f64 {
    let set = svc(rng.random_range(1..=4));
    let phi = random_trace(rng, &set);
    let e = trace_energy(&phi, &set);
    let ext = harmonic_extension(&phi, &set).unwrap();
    rel(e.value, energy(&ext))
}

/// Cross energy and Pythagoras defect of the splitting of a random `u`,
/// both scaled by `max(1, E(u))`.
pub fn decomposition_defects(rng: &mut ChaCha8Rng, case: usize) -> (f64, f64) {
    let set = case_set(rng, case);
    let sf = ScaleFunction::new(set.clone(), None).unwrap();
    let u = random_function(rng, &set);
    let d = project_subspace(&u, &sf).unwrap();
    let scale = energy(&u).max(1.0);
    let cross = d.cross_energy().unwrap().abs() / scale;
    let pyth = (energy(&u) - energy(&d.u1) - energy(&d.u2)).abs() / scale;
    (cross, pyth)
}

/// In the periodic case, moving the anchor of `s` shifts `u₁` by a constant.
pub fn anchor_shift_defect(rng: &mut ChaCha8Rng) -> f64 {
    let set = case_set(rng, 0);
    let u = random_function(rng, &set);
    let w = set.window();
    let a = ScaleFunction::new(set.clone(), Some(w.lo)).unwrap();
    let b = ScaleFunction::new(set, Some(rng.random_range(w.lo..w.hi))).unwrap();
    let da = project_subspace(&u, &a).unwrap();
    let db = project_subspace(&u, &b).unwrap();
    let shift: Vec<f64> = da.u1.values().iter().zip(db.u1.values()).map(|(x, y)| x - y).collect();
    shift.iter().map(|s| (s - shift[0]).abs()).fold(0.0, f64::max)
}

/// Worst relative metric gap for a random complement member and whether the
/// trace-side darning agreed node for node.
pub fn darning_gap(rng: &mut ChaCha8Rng) -> (f64, bool) {
    let set = svc(rng.random_range(1..=4));
    let dm = DarningMap::new(set.clone(), None).unwrap();
    let per = rng.random_range(1..=3);
    let u = random_flat_on(rng, &set, Part::G, per);
    let report = equivalence_report(&[u], &dm, 1e-12).unwrap();
    (report.worst_gap(), report.all_identical())
}

/// Relative gaps for the three coincidences on one random case:
/// subspace form, part form, and `H^(s)_F = H_F`.
pub fn coincidence_gaps(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let set = svc(rng.random_range(1..=4));
    let per = rng.random_range(1..=3);
    let u = random_flat_on(rng, &set, Part::F, per);
    let v = random_flat_on(rng, &set, Part::F, per);
    let sub = rel(subspace_energy(&u, &v, &set, 1e-12).unwrap().value, dirichlet_energy(&u, &v).unwrap().value);

    let p = random_vanishing_on_f(rng, &set);
    let part = rel(part_energy(&p, &p, &set, 1e-12).unwrap().value, energy(&p));

    let sf = ScaleFunction::new(set.clone(), None).unwrap();
    let phi = TraceFunction::restrict(&u, &set).unwrap();
    let hs = harmonic_extension_scale(&phi, &sf, 3).unwrap();
    let h = harmonic_extension(&phi, &set).unwrap();
    let ext = hs
        .nodes()
        .iter()
        .zip(hs.values())
        .map(|(&x, &v)| rel(v, h.eval(x).unwrap()))
        .fold(0.0, f64::max);
    [sub, part, ext]
}

/// Whether the unit contraction of a random function kept the energy from
/// growing and, for a complement member, stayed in the complement.
pub fn contraction_ok(rng: &mut ChaCha8Rng) -> bool {
    let set = svc(rng.random_range(1..=4));
    let u = random_function(rng, &set).map_values(|v| 1.5 * v + 0.5);
    let cu = unit_contraction(&u);
    let energy_ok = energy(&cu) <= energy(&u) * (1.0 + 1e-12);
    let c = random_flat_on(rng, &set, Part::G, 2).map_values(|v| 1.5 * v + 0.5);
    let cc = unit_contraction(&c);
    let member = is_in_complement(&cc, &set, 1e-12).unwrap_or(false);
    energy_ok && member && cc.values().iter().all(|v| (0.0..=1.0).contains(v))
}

/// `(gap, x0)` pairs for the hitting battery: random gaps and starting
/// points, plus the components of a fat Cantor complement.
pub fn hitting_cases(count: usize, seed: u64) -> Vec<(Interval, f64)> {
    let mut r = rng(seed);
    let mut cases: Vec<(Interval, f64)> = svc(3)
        .components()
        .iter()
        .map(|&c| (c, c.lo + 0.3 * c.len()))
        .collect();
    while cases.len() < count {
        let lo = r.random_range(-1.0..1.0);
        let gap = Interval::new(lo, lo + r.random_range(0.1..2.0));
        cases.push((gap, gap.lo + r.random_range(0.05..0.95) * gap.len()));
    }
    cases.truncate(count);
    cases
}

/// The sticky walk of the depth-1 darning image: carrier `[0, 3/4]`,
/// Lebesgue density and an atom of mass `1/4` at `3/8`.
pub fn sticky_speed() -> traceform::speed::SpeedMeasure {
    let set = svc(1);
    let dm = DarningMap::new(set.clone(), None).unwrap();
    let mu = traceform::trace::trace_measure(&set);
    dm.pushforward_speed(traceform::transform::Source::Trace(&mu)).unwrap()
}
