//! Acceptance battery: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use traceform::geometry::Interval;
use traceform::sim::*;
use traceform::speed::SpeedMeasure;
use traceform::trace::{feller_numeric, feller_weight, hitting_kernels, trace_energy, TraceFunction};
use traceform::transform::DarningMap;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn feller_limit() -> Outcome {
    let mut worst_limit = 0.0f64;
    let mut worst_quad = 0.0f64;
    let mut monotone = true;
    for d in [0.25, 0.5, 1.0] {
        let mut last = 0.0;
        for alpha in [1e2, 1e3, 1e4] {
            let closed = feller_numeric(d, alpha).unwrap();
            let f = |x: f64| alpha * hitting_kernels(0.0, d, alpha, x).unwrap().0 * (x / d);
            let pieces = 256;
            let h = d / pieces as f64;
            let quad: f64 = (0..pieces)
                .map(|k| simpson(&f, k as f64 * h, (k + 1) as f64 * h, 1e-14))
                .sum();
            worst_quad = worst_quad.max((quad - closed).abs());
            monotone &= closed >= last;
            last = closed;
        }
        let limit = feller_weight(d).unwrap();
        worst_limit = worst_limit.max((last - limit).abs() / limit);
    }
    outcome(
        worst_limit < 1e-3 && worst_quad < 1e-8 && monotone,
        format!("rel gap to 1/(2d) at alpha=1e4: {worst_limit:.1e}; quadrature gap {worst_quad:.1e}; monotone {monotone}"),
    )
}

fn trace_identity() -> Outcome {
    let mut r = rng(SEED);
    let worst = (0..200).map(|_| trace_identity_gap(&mut r)).fold(0.0, f64::max);
    let set = svc(1);
    let phi = TraceFunction::from_fn(&set, 1, |x| x).unwrap();
    let e = trace_energy(&phi, &set);
    let worked = e.local == Some(0.375) && e.jump == Some(0.125) && e.value == 0.5;
    outcome(
        worst <= 1e-12 && worked,
        format!("200 cases, worst rel gap {worst:.1e}; depth-1 split 3/8 + 1/8 exact: {worked}"),
    )
}

fn decomposition() -> Outcome {
    let mut r = rng(SEED + 1);
    let (mut cross, mut pyth) = (0.0f64, 0.0f64);
    for k in 0..200 {
        let (c, p) = decomposition_defects(&mut r, k % 3);
        cross = cross.max(c);
        pyth = pyth.max(p);
    }
    let shift = (0..20).map(|_| anchor_shift_defect(&mut r)).fold(0.0, f64::max);
    outcome(
        cross <= 1e-12 && pyth <= 1e-12 && shift <= 1e-12,
        format!("200 cases over three boundary cases: |E(u1,u2)| {cross:.1e}, Pythagoras {pyth:.1e}; anchor shift non-constancy {shift:.1e}"),
    )
}

fn darning() -> Outcome {
    let mut r = rng(SEED + 2);
    let mut worst = 0.0f64;
    let mut identical = true;
    for _ in 0..100 {
        let (g, same) = darning_gap(&mut r);
        worst = worst.max(g);
        identical &= same;
    }
    outcome(
        worst <= 1e-12 && identical,
        format!("100 cases, worst rel gap over energy/sup/L2 {worst:.1e}; trace-side darning identical: {identical}"),
    )
}

fn coincidences() -> Outcome {
    let mut r = rng(SEED + 3);
    let mut worst = [0.0f64; 3];
    for _ in 0..100 {
        let g = coincidence_gaps(&mut r);
        for k in 0..3 {
            worst[k] = worst[k].max(g[k]);
        }
    }
    outcome(
        worst.iter().all(|w| *w <= 1e-12),
        format!(
            "100 cases each: subspace form {:.1e}, part form {:.1e}, scale extension {:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

struct HittingRun {
    estimates: Vec<HittingEstimate>,
    laplace: Vec<LaplaceEstimate>,
}

fn laplace_cases() -> Vec<(Interval, f64, f64)> {
    let mut cases = Vec::new();
    for alpha in [0.5, 2.0] {
        for (gap, x0) in [
            (Interval::new(0.0, 1.0), 0.25),
            (Interval::new(0.0, 1.0), 0.5),
            (Interval::new(0.0, 1.0), 0.75),
            (Interval::new(0.0, 2.0), 0.5),
        ] {
            cases.push((gap, x0, alpha));
        }
    }
    cases
}

fn hitting_battery(workers: usize) -> HittingRun {
    let opts = ExitOptions { workers, ..Default::default() };
    let estimates = hitting_cases(100, SEED)
        .into_iter()
        .enumerate()
        .map(|(i, (gap, x0))| estimate_exit(gap, x0, 100_000, SEED + i as u64, &opts).unwrap())
        .collect();
    let lopts = ExitOptions { steps_per_gap: 25.0, workers, ..Default::default() };
    let laplace = laplace_cases()
        .into_iter()
        .enumerate()
        .map(|(i, (gap, x0, alpha))| estimate_laplace_in_gap(gap, x0, alpha, 100_000, SEED + i as u64, &lopts).unwrap())
        .collect();
    HittingRun { estimates, laplace }
}

fn hitting_laws(run: &HittingRun) -> Outcome {
    let misses = run
        .estimates
        .iter()
        .filter(|e| !e.left.covers((e.gap.hi - e.x0) / e.gap.len(), 3.0, 0.0))
        .count();
    let mut laplace_misses = 0;
    let mut worst_z = 0.0f64;
    for e in &run.laplace {
        let (p, q) = hitting_kernels(e.gap.lo, e.gap.hi, e.alpha, e.x0).unwrap();
        for (r, exact, bias) in [(&e.left, p, e.bias_left), (&e.right, q, e.bias_right)] {
            worst_z = worst_z.max((r.estimate - exact).abs() / r.std_error);
            if !r.covers(exact, 3.0, bias) {
                laplace_misses += 1;
            }
        }
    }
    outcome(
        misses <= 1 && laplace_misses == 0,
        format!(
            "hitting: {misses}/100 outside 3 sigma (n = 1e5); Laplace: {laplace_misses}/{} outside 3 sigma + bias band, worst |z| {worst_z:.2}",
            2 * run.laplace.len()
        ),
    )
}

struct Occupation {
    direct: EstimatorResult,
    line: EstimatorResult,
    oracle: f64,
}

fn occupation_run() -> Occupation {
    let h = 1.0 / 64.0;
    let grid = WalkGrid::new(&sticky_speed(), h, WalkOptions::default()).unwrap();
    let pi = chain_stationary(&grid);
    let atom = Target::Point(0.375);
    let oracle = pi.iter().enumerate().map(|(i, p)| p * grid.attribution(i, &atom)).sum();
    let path = grid.run(0.0, 1_000.0, SEED, 0).unwrap();
    let opts = OccupationOptions::default();
    let direct = grid.attributed_occupation(&path, &[atom], &opts).unwrap().remove(0);

    let set = svc(1);
    let dm = DarningMap::new(set.clone(), None).unwrap();
    let line = simulate_darning_line(&dm, h, 0.0, 1_000.0, SEED + 1, WalkOptions::default()).unwrap();
    let line_grid = WalkGrid::new(&SpeedMeasure::lebesgue(set.window()).unwrap(), h, WalkOptions::default()).unwrap();
    let gap = Target::Interval(Interval::new(0.375, 0.625));
    let line = line_grid.attributed_occupation(&line.line, &[gap], &opts).unwrap().remove(0);
    Occupation { direct, line, oracle }
}

fn ergodic(o: &Occupation) -> Outcome {
    let d = &o.direct;
    let rel_err = (d.estimate - 0.25).abs() / 0.25;
    let chain_ok = d.covers(o.oracle, 3.0, 0.0);
    let routes = (d.estimate - o.line.estimate).abs() <= 3.0 * d.std_error.hypot(o.line.std_error);
    outcome(
        rel_err < 0.05 && chain_ok && routes,
        format!(
            "atom occupation {:.4} +/- {:.4} (batch SE), rel err {:.1}%; chain oracle {:.6}; line route {:.4} +/- {:.4}",
            d.estimate,
            d.std_error,
            100.0 * rel_err,
            o.oracle,
            o.line.estimate,
            o.line.std_error
        ),
    )
}

fn contraction() -> Outcome {
    let mut r = rng(SEED + 4);
    let violations = (0..500).filter(|_| !contraction_ok(&mut r)).count();
    outcome(violations == 0, format!("500 cases, {violations} violations"))
}

fn determinism(reference: &HittingRun, occupation: &Occupation) -> Outcome {
    let mut same = true;
    let (gap, x0) = hitting_cases(100, SEED)[0];
    let (lgap, lx0, alpha) = laplace_cases()[0];
    for workers in [1, 2, 8] {
        let opts = ExitOptions { workers, ..Default::default() };
        let e = estimate_exit(gap, x0, 100_000, SEED, &opts).unwrap();
        same &= json(&e) == json(&reference.estimates[0]);
        let lopts = ExitOptions { steps_per_gap: 25.0, workers, ..Default::default() };
        let l = estimate_laplace_in_gap(lgap, lx0, alpha, 100_000, SEED, &lopts).unwrap();
        same &= json(&l) == json(&reference.laplace[0]);
    }
    let grid = WalkGrid::new(&sticky_speed(), 1.0 / 64.0, WalkOptions::default()).unwrap();
    let csv = |paths: &[PathSample]| {
        let mut buf = Vec::new();
        for p in paths {
            p.write_csv(&mut buf).unwrap();
        }
        buf
    };
    let base = csv(&walk_batch(&grid, 0.375, 20.0, SEED, 16, 1).unwrap());
    for workers in [2, 8] {
        same &= csv(&walk_batch(&grid, 0.375, 20.0, SEED, 16, workers).unwrap()) == base;
    }
    let again = occupation_run();
    same &= json(&again.direct) == json(&occupation.direct) && json(&again.line) == json(&occupation.line);
    outcome(same, format!("hitting, Laplace and walk outputs byte-identical across 1, 2 and 8 workers: {same}"))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap()
}

fn report(id: usize, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    let in_budget = budget.is_none_or(|b| elapsed <= b);
    let pass = o.pass && in_budget;
    let budget_note = match budget {
        Some(b) if !in_budget => format!(", over the {:.0} s budget", b.as_secs_f64()),
        _ => String::new(),
    };
    println!(
        "{} {id}. {name}: {} ({:.2} s{budget_note})",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= report(1, "Feller weight limit", Some(secs(1)), feller_limit);
    ok &= report(2, "trace identity", Some(secs(5)), trace_identity);
    ok &= report(3, "orthogonal decomposition", Some(secs(5)), decomposition);
    ok &= report(4, "darning isometry", Some(secs(5)), darning);
    ok &= report(5, "subspace coincidences", None, coincidences);

    let mut run = None;
    ok &= report(6, "Monte Carlo hitting laws", Some(secs(120)), || {
        let r = hitting_battery(0);
        let o = hitting_laws(&r);
        run = Some(r);
        o
    });
    let mut occ = None;
    ok &= report(7, "ergodic occupation", Some(secs(120)), || {
        let r = occupation_run();
        let o = ergodic(&r);
        occ = Some(r);
        o
    });
    ok &= report(8, "unit contraction", None, contraction);
    let (run, occ) = (run.expect("criterion 6 ran"), occ.expect("criterion 7 ran"));
    ok &= report(9, "determinism", None, || determinism(&run, &occ));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
