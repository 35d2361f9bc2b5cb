use std::fs::File;
use std::path::Path;

use clap::Parser;
use serde::Serialize;
use serde_json::json;
use traceform::darned::equivalence_report;
use traceform::decomposition::{decompose_harmonic, project_subspace};
use traceform::energy::{
    dirichlet_energy, energy_measure, part_energy, subspace_energy, subspace_energy_measure, Region,
};
use traceform::geometry::IntervalSet;
use traceform::grid::{darn_function, GridFunction};
use traceform::sim::{
    bm_paths, estimate_exit, estimate_hitting, estimate_laplace, estimate_laplace_in_gap,
    occupation_fractions, simulate_darning_line, simulate_xs, walk_batch, ExitOptions, Flag,
    OccupationOptions, PathSample, Target, WalkGrid,
};
use traceform::speed::SpeedMeasure;
use traceform::trace::{
    feller_numeric, feller_weight, hitting_kernels, jump_table, trace_energy, trace_measure,
    trace_subspace_energy, write_jump_table, TraceFunction,
};
use traceform::transform::{DarningMap, ScaleFunction, Source};

use crate::args::*;
use crate::output::{read_manifest, Output, MANIFEST};
use crate::CliError;

type Res<T> = Result<T, CliError>;

/// Most paths a single simulate call will write out.
const MAX_PATH_FILES: u64 = 10_000;

/// Runs a parsed command line; `argv` is what goes into the manifest.
pub fn run(cli: Cli, argv: Vec<String>) -> Res<u8> {
    if let Cmd::Rerun { manifest } = &cli.cmd {
        return rerun(manifest, &cli.out, cli.workers);
    }
    let mut out = Output::new(&cli.out)?;
    let (code, seed) = dispatch(cli.cmd, cli.workers, &mut out)?;
    let dir = out.dir().to_path_buf();
    out.finish(argv, seed)?;
    eprintln!("wrote {}", dir.join(MANIFEST).display());
    Ok(code)
}

fn rerun(manifest: &Path, out_dir: &Path, workers: usize) -> Res<u8> {
    let recorded = read_manifest(manifest)?;
    if recorded.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, running {}",
            recorded.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let mut full = vec!["traceform".to_string()];
    full.extend(recorded.argv.iter().cloned());
    let cli = Cli::try_parse_from(&full).map_err(|e| CliError::validation(format!("manifest argv: {e}")))?;
    if matches!(cli.cmd, Cmd::Rerun { .. }) {
        return Err(CliError::validation("a manifest cannot record a rerun"));
    }
    let mut out = Output::new(out_dir)?;
    let (code, seed) = dispatch(cli.cmd, workers, &mut out)?;
    let fresh = out.finish(recorded.argv.clone(), seed)?;
    let mismatched: Vec<&str> = recorded
        .outputs
        .iter()
        .filter(|o| !fresh.outputs.contains(o))
        .map(|(name, _)| name.as_str())
        .collect();
    if !mismatched.is_empty() || fresh.outputs.len() != recorded.outputs.len() {
        return Err(CliError::validation(format!(
            "rerun differs from the manifest in: {}",
            mismatched.join(", ")
        )));
    }
    println!("reproduced {} outputs byte for byte", fresh.outputs.len());
    Ok(code)
}

fn dispatch(cmd: Cmd, workers: usize, out: &mut Output) -> Res<(u8, Option<u64>)> {
    let code = match cmd {
        Cmd::Set(c) => set(c, out)?,
        Cmd::Scale(ScaleCmd::Eval { set, points, anchor }) => {
            let set = set.load()?;
            let sf = ScaleFunction::new(set.clone(), anchor)?;
            let xs = points.resolve(set.window());
            let rows = xs.iter().map(|&x| Ok((x, sf.eval(x)?))).collect::<Res<Vec<_>>>()?;
            out.bytes("scale.csv", &xy_csv("x", "s", &rows)?)?;
            out.json(
                "scale.json",
                &json!({
                    "anchor": sf.anchor(),
                    "window_image": sf.map().window_image(),
                    "case": sf.classify_case().ok(),
                }),
            )?;
            0
        }
        Cmd::Darn(c) => darn(c, out)?,
        Cmd::Energy(c) => energy(c, out)?,
        Cmd::Decompose {
            set,
            u,
            anchor,
            harmonic,
            tol,
        } => {
            let set = set.load()?;
            let u = read_adapted(&u, &set)?;
            let sf = ScaleFunction::new(set, anchor)?;
            let d = if harmonic {
                decompose_harmonic(&u, &sf, tol)?
            } else {
                project_subspace(&u, &sf)?
            };
            let e = |f: &GridFunction| dirichlet_energy(f, f).map(|r| r.value);
            out.json(
                "decomposition.json",
                &json!({
                    "case": d.case,
                    "anchor": sf.anchor(),
                    "constants": d.constants,
                    "energy": e(&u)?,
                    "energy_u1": e(&d.u1)?,
                    "energy_u2": e(&d.u2)?,
                    "cross_energy": d.cross_energy()?,
                }),
            )?;
            out.with_buffer("u1.csv", |w| d.u1.write_csv(w))?;
            out.with_buffer("u2.csv", |w| d.u2.write_csv(w))?;
            0
        }
        Cmd::Trace(c) => trace(c, out)?,
        Cmd::Feller { d, alpha_ladder } => {
            let limit = feller_weight(d)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["alpha", "value", "limit"]).map_err(csv_err)?;
            for alpha in alpha_ladder {
                let value = feller_numeric(d, alpha)?;
                w.serialize((alpha, value, limit)).map_err(csv_err)?;
            }
            out.bytes("feller.csv", &csv_bytes(w)?)?;
            0
        }
        Cmd::Equivalence { set, u, z, tol } => {
            let set = set.load()?;
            let samples = u.iter().map(|p| read_adapted(p, &set)).collect::<Res<Vec<_>>>()?;
            let dm = DarningMap::new(set, z.z)?;
            let report = equivalence_report(&samples, &dm, tol)?;
            out.json(
                "equivalence.json",
                &json!({
                    "z": dm.z(),
                    "worst_relative_gap": report.worst_gap(),
                    "trace_side_identical": report.all_identical(),
                    "samples": report.samples,
                }),
            )?;
            0
        }
        Cmd::Simulate(c) => return simulate(c, workers, out),
        Cmd::Estimate(c) => return estimate(c, workers, out),
        Cmd::Rerun { .. } => unreachable!("handled before dispatch"),
    };
    Ok((code, None))
}

fn set(cmd: SetCmd, out: &mut Output) -> Res<u8> {
    match cmd {
        SetCmd::Build { set } => {
            let set = set.load()?;
            out.json("set.json", &set)?;
            println!(
                "{} components, G-mass {} in window [{}, {}]",
                set.components().len(),
                set.g_mass_in_window(),
                set.window().lo,
                set.window().hi
            );
            Ok(0)
        }
        SetCmd::Validate { set, delta } => {
            let set = set.load()?;
            let report = set.validate(delta);
            let ok = report.ok();
            out.json("validation.json", &json!({ "ok": ok, "report": report }))?;
            println!("{ok}");
            Ok(if ok { 0 } else { CliError::VALIDATION })
        }
    }
}

fn darn(cmd: DarnCmd, out: &mut Output) -> Res<u8> {
    match cmd {
        DarnCmd::Map { set, points, z } => {
            let set = set.load()?;
            let dm = DarningMap::new(set.clone(), z.z)?;
            let xs = points.resolve(set.window());
            let rows = xs.iter().map(|&x| Ok((x, dm.eval(x)?))).collect::<Res<Vec<_>>>()?;
            out.bytes("darn.csv", &xy_csv("x", "j", &rows)?)?;
            let mu = trace_measure(&set);
            out.json("darning.json", &json!({ "z": dm.z(), "image": dm.image() }))?;
            out.json("speed.json", &dm.pushforward_speed(Source::Trace(&mu))?)?;
        }
        DarnCmd::Function { set, u, z, tol } => {
            let set = set.load()?;
            let u = read_adapted(&u, &set)?;
            let dm = DarningMap::new(set, z.z)?;
            let darned = darn_function(&u, &dm, tol)?;
            out.with_buffer("darned.csv", |w| darned.write_csv(w))?;
        }
    }
    Ok(0)
}

fn energy(cmd: EnergyCmd, out: &mut Output) -> Res<u8> {
    let report = match cmd {
        EnergyCmd::Full { u, v } => {
            let u = read_grid(&u)?;
            let v = v.map(|p| read_grid(&p)).transpose()?.unwrap_or_else(|| u.clone());
            dirichlet_energy(&u, &v)?
        }
        EnergyCmd::Subspace { set, u, v, tol } => {
            let set = set.load()?;
            let (u, v) = pair(&u, v.as_deref(), &set)?;
            subspace_energy(&u, &v, &set, tol)?
        }
        EnergyCmd::Part { set, u, v, tol } => {
            let set = set.load()?;
            let (u, v) = pair(&u, v.as_deref(), &set)?;
            part_energy(&u, &v, &set, tol)?
        }
        EnergyCmd::Measure {
            set,
            u,
            over,
            subspace,
            part,
        } => {
            let u = read_grid(&u)?;
            let value = if subspace {
                let set = set.load()?;
                let region = match (part, over) {
                    (Some(p), _) => Region::Part(p.into()),
                    (None, Some(a)) => Region::Interval(a),
                    (None, None) => Region::Interval(u.domain()),
                };
                subspace_energy_measure(&u, &set, region)?
            } else {
                energy_measure(&u, over.unwrap_or(u.domain()))
            };
            out.json("energy_measure.json", &json!({ "subspace": subspace, "value": value }))?;
            return Ok(0);
        }
    };
    out.json("energy.json", &report)?;
    Ok(0)
}

fn trace(cmd: TraceCmd, out: &mut Output) -> Res<u8> {
    match cmd {
        TraceCmd::Energy { set, phi } => {
            let set = set.load()?;
            let phi = read_trace(&phi, &set)?;
            out.json("trace_energy.json", &trace_energy(&phi, &set))?;
        }
        TraceCmd::Subspace { set, phi, tol } => {
            let set = set.load()?;
            let phi = read_trace(&phi, &set)?;
            out.json("trace_energy.json", &trace_subspace_energy(&phi, &set, tol)?)?;
        }
        TraceCmd::JumpTable { set } => {
            let rows = jump_table(&set.load()?);
            out.with_buffer("jump_table.csv", |w| write_jump_table(&rows, w))?;
        }
        TraceCmd::Measure { set } => {
            out.json("trace_measure.json", &trace_measure(&set.load()?))?;
        }
    }
    Ok(0)
}

/// Parameters of a stochastic run, written next to its paths.
#[derive(Serialize)]
struct Experiment<'a> {
    process: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    x0: f64,
    n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    seed: u64,
}

fn simulate(cmd: SimulateCmd, workers: usize, out: &mut Output) -> Res<(u8, Option<u64>)> {
    let seed = match cmd {
        SimulateCmd::Bm {
            x0,
            n,
            dt,
            horizon,
            seed,
        } => {
            check_path_count(n)?;
            let paths = bm_paths(n, dt, horizon, x0, seed)?;
            write_paths(out, &paths)?;
            out.json(
                "experiment.json",
                &Experiment {
                    process: "bm",
                    input: None,
                    x0,
                    n,
                    dt: Some(dt),
                    h: None,
                    horizon,
                    alpha: None,
                    seed,
                },
            )?;
            seed
        }
        SimulateCmd::Walk { speed, walk, n } => {
            check_path_count(n)?;
            let m = read_speed(&speed)?;
            let grid = WalkGrid::new(&m, walk.h, walk.ends.options())?;
            let paths = walk_batch(&grid, walk.x0, walk.horizon, walk.seed, n, workers)?;
            write_paths(out, &paths)?;
            out.json("experiment.json", &walk_experiment("walk", Some(&speed), &walk, n))?;
            walk.seed
        }
        SimulateCmd::Xs { set, anchor, walk } => {
            let sf = ScaleFunction::new(set.load()?, anchor)?;
            let p = simulate_xs(&sf, walk.h, walk.x0, walk.horizon, walk.seed, walk.ends.options())?;
            out.with_buffer("path.csv", |w| p.line.write_csv(w))?;
            out.with_buffer("image_path.csv", |w| p.image.write_csv(w))?;
            out.json("experiment.json", &walk_experiment("xs", set.set.as_deref(), &walk, 1))?;
            walk.seed
        }
        SimulateCmd::Darning { set, z, walk, route } => {
            let s = set.load()?;
            let dm = DarningMap::new(s.clone(), z.z)?;
            match route {
                Route::Direct => {
                    let mu = trace_measure(&s);
                    let m = dm.pushforward_speed(Source::Trace(&mu))?;
                    let grid = WalkGrid::new(&m, walk.h, walk.ends.options())?;
                    let p = grid.run(dm.eval(walk.x0)?, walk.horizon, walk.seed, 0)?;
                    out.with_buffer("path.csv", |w| p.write_csv(w))?;
                    out.json("speed.json", &m)?;
                }
                Route::Line => {
                    let p = simulate_darning_line(&dm, walk.h, walk.x0, walk.horizon, walk.seed, walk.ends.options())?;
                    out.with_buffer("path.csv", |w| p.image.write_csv(w))?;
                    out.with_buffer("line_path.csv", |w| p.line.write_csv(w))?;
                }
            }
            let process = match route {
                Route::Direct => "darning",
                Route::Line => "darning_line",
            };
            out.json("experiment.json", &walk_experiment(process, set.set.as_deref(), &walk, 1))?;
            walk.seed
        }
    };
    Ok((0, Some(seed)))
}

fn walk_experiment<'a>(process: &'a str, input: Option<&Path>, walk: &WalkArgs, n: u64) -> Experiment<'a> {
    Experiment {
        process,
        input: input.map(|p| {
            std::fs::canonicalize(p)
                .unwrap_or_else(|_| p.to_path_buf())
                .display()
                .to_string()
        }),
        x0: walk.x0,
        n,
        dt: None,
        h: Some(walk.h),
        horizon: walk.horizon,
        alpha: None,
        seed: walk.seed,
    }
}

fn estimate(cmd: EstimateCmd, workers: usize, out: &mut Output) -> Res<(u8, Option<u64>)> {
    match cmd {
        EstimateCmd::Hitting { set, exit } => {
            let opts = exit_options(&exit, workers);
            let est = match exit.gap {
                Some(gap) => estimate_exit(gap, exit.x0, exit.n, exit.seed, &opts)?,
                None => estimate_hitting(&set.load()?, exit.x0, exit.n, exit.seed, &opts)?,
            };
            let (gap, x0) = (est.gap, est.x0);
            let left = (gap.hi - x0) / gap.len();
            let within = est.left.covers(left, 3.0, 0.0);
            println!(
                "P(exit at {}) = {:.5} ± {:.5} (closed form {:.5})",
                gap.lo, est.left.estimate, est.left.std_error, left
            );
            out.json(
                "hitting.json",
                &json!({
                    "estimate": est,
                    "closed_form": { "left": left, "right": 1.0 - left },
                    "within_3_sigma": within,
                }),
            )?;
            Ok((0, Some(exit.seed)))
        }
        EstimateCmd::Laplace { set, exit, alpha } => {
            let opts = exit_options(&exit, workers);
            let est = match exit.gap {
                Some(gap) => estimate_laplace_in_gap(gap, exit.x0, alpha, exit.n, exit.seed, &opts)?,
                None => estimate_laplace(&set.load()?, exit.x0, alpha, exit.n, exit.seed, &opts)?,
            };
            let (p, q) = hitting_kernels(est.gap.lo, est.gap.hi, alpha, est.x0)?;
            let within = est.left.covers(p, 3.0, est.bias_left) && est.right.covers(q, 3.0, est.bias_right);
            println!(
                "left {:.5} ± {:.5} (closed form {:.5}), right {:.5} ± {:.5} (closed form {:.5})",
                est.left.estimate, est.left.std_error, p, est.right.estimate, est.right.std_error, q
            );
            out.json(
                "laplace.json",
                &json!({
                    "estimate": est,
                    "closed_form": { "left": p, "right": q },
                    "within_3_sigma_plus_bias": within,
                }),
            )?;
            Ok((0, Some(exit.seed)))
        }
        EstimateCmd::Occupation {
            speed,
            path,
            targets,
            h,
            x0,
            horizon,
            seed,
            ends,
            burn_in,
            batches,
        } => {
            let opts = OccupationOptions { burn_in, batches };
            if let Some(path) = path {
                let sample = read_path(&path)?;
                let results = occupation_fractions(&sample, &targets, &opts)?;
                out.json("occupation.json", &json!({ "targets": targets, "results": results }))?;
                return Ok((0, None));
            }
            let speed = speed.expect("clap requires --speed or --path");
            let (Some(h), Some(x0), Some(horizon), Some(seed)) = (h, x0, horizon, seed) else {
                return Err(CliError::validation(
                    "occupation of a simulated walk needs --h, --x0, --horizon and --seed",
                ));
            };
            let m = read_speed(&speed)?;
            let walk_opts = ends.options();
            let grid = WalkGrid::new(&m, h, walk_opts)?;
            let p = grid.run(x0, horizon, seed, 0)?;
            let results = grid.attributed_occupation(&p, &targets, &opts)?;
            out.json(
                "occupation.json",
                &json!({
                    "targets": targets,
                    "results": results,
                    "stationary": stationary(&m, &targets, ends.left == End::Reflect && ends.right == End::Reflect),
                }),
            )?;
            Ok((0, Some(seed)))
        }
    }
}

/// `m(T) / m(carrier)` when the walk is positive recurrent: both ends
/// reflecting and no infinite atom.
fn stationary(m: &SpeedMeasure, targets: &[Target], reflecting: bool) -> Option<Vec<f64>> {
    let total = m.total();
    (reflecting && total.is_finite()).then(|| {
        targets
            .iter()
            .map(|t| {
                let (lo, hi) = t.bounds();
                m.mass(lo, hi) / total
            })
            .collect()
    })
}

fn exit_options(exit: &ExitArgs, workers: usize) -> ExitOptions {
    ExitOptions {
        steps_per_gap: exit.steps_per_gap,
        bridge: !exit.no_bridge,
        workers,
    }
}

fn check_path_count(n: u64) -> Res<()> {
    if n == 0 || n > MAX_PATH_FILES {
        return Err(CliError::validation(format!(
            "--n = {n} paths; expected between 1 and {MAX_PATH_FILES}"
        )));
    }
    Ok(())
}

fn write_paths(out: &mut Output, paths: &[PathSample]) -> Res<()> {
    if let [only] = paths {
        return out.with_buffer("path.csv", |w| only.write_csv(w));
    }
    for (i, p) in paths.iter().enumerate() {
        out.with_buffer(&format!("path_{i:04}.csv"), |w| p.write_csv(w))?;
    }
    Ok(())
}

fn open(path: &Path) -> Res<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

fn read_grid(path: &Path) -> Res<GridFunction> {
    GridFunction::read_csv(open(path)?).map_err(|e| located(path, e))
}

fn read_adapted(path: &Path, set: &IntervalSet) -> Res<GridFunction> {
    GridFunction::read_csv_adapted(open(path)?, set).map_err(|e| located(path, e))
}

fn read_trace(path: &Path, set: &IntervalSet) -> Res<TraceFunction> {
    let g = read_grid(path)?;
    TraceFunction::new(set, g.nodes().to_vec(), g.values().to_vec()).map_err(|e| located(path, e))
}

fn read_speed(path: &Path) -> Res<SpeedMeasure> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

#[derive(serde::Deserialize)]
struct PathRow {
    t: f64,
    x: f64,
    flag: Flag,
}

fn read_path(path: &Path) -> Res<PathSample> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let mut sample = PathSample {
        times: Vec::new(),
        states: Vec::new(),
        flags: Vec::new(),
        seed: 0,
        stream: 0,
    };
    for row in r.deserialize() {
        let row: PathRow = row.map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        sample.times.push(row.t);
        sample.states.push(row.x);
        sample.flags.push(row.flag);
    }
    if sample.times.len() < 2 || sample.times.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::validation(format!(
            "{}: a path needs at least two rows with nondecreasing t",
            path.display()
        )));
    }
    Ok(sample)
}

fn pair(u: &Path, v: Option<&Path>, set: &IntervalSet) -> Res<(GridFunction, GridFunction)> {
    let u = read_adapted(u, set)?;
    let v = match v {
        Some(p) => read_adapted(p, set)?,
        None => u.clone(),
    };
    Ok((u, v))
}

fn located(path: &Path, e: traceform::Error) -> CliError {
    let mut err = CliError::from(e);
    err.message = format!("{}: {}", path.display(), err.message);
    err
}

fn xy_csv(x: &str, y: &str, rows: &[(f64, f64)]) -> Res<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([x, y]).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    csv_bytes(w)
}

fn csv_bytes(w: csv::Writer<Vec<u8>>) -> Res<Vec<u8>> {
    w.into_inner().map_err(|e| CliError::internal(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::internal(e.to_string())
}
