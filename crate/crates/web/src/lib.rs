//! Browser bindings: each export takes plain numbers and returns a JSON
//! report that `www/main.js` draws on a canvas.

use serde::Serialize;
use traceform::energy::dirichlet_energy;
use traceform::geometry::{svc_complement, Interval, IntervalSet};
use traceform::sim::{EstimatorResult, OccupationOptions, PathSample, Target, WalkGrid, WalkOptions};
use traceform::trace::{harmonic_extension, trace_energy, trace_measure, TraceFunction};
use traceform::transform::{DarningMap, ScaleFunction, Source};
use traceform::{Error, Result};
use wasm_bindgen::prelude::*;

const UNIT: Interval = Interval::new(0.0, 1.0);
/// Deepest set the page offers.
pub const MAX_DEPTH: u32 = 6;
/// Expected walk steps a single request may cost.
const STEP_BUDGET: f64 = 2e7;
/// Points kept from a simulated path for drawing.
const PLOT_POINTS: usize = 2000;

fn set_of(depth: u32) -> Result<IntervalSet> {
    if depth > MAX_DEPTH {
        return Err(Error::InvalidParameter(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    svc_complement(depth, UNIT)
}

#[derive(Debug, Serialize)]
pub struct Geometry {
    pub components: Vec<Interval>,
    pub f_components: Vec<Interval>,
    pub g_mass: f64,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub j: Vec<f64>,
}

/// The fat Cantor complement of `depth` with its scale function and
/// darning map sampled at `samples` points.
pub fn geometry_report(depth: u32, samples: usize) -> Result<Geometry> {
    let set = set_of(depth)?;
    let sf = ScaleFunction::new(set.clone(), None)?;
    let dm = DarningMap::new(set.clone(), None)?;
    let n = samples.clamp(2, 4096) - 1;
    let x: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let s = x.iter().map(|&t| sf.eval(t)).collect::<Result<_>>()?;
    let j = x.iter().map(|&t| dm.eval(t)).collect::<Result<_>>()?;
    Ok(Geometry {
        components: set.components().to_vec(),
        f_components: set.f_components().to_vec(),
        g_mass: set.g_mass_in_window(),
        x,
        s,
        j,
    })
}

#[derive(Debug, Serialize)]
pub struct TraceSplit {
    pub local: f64,
    pub jump: f64,
    pub value: f64,
    /// Energy of the harmonic extension, computed on the line.
    pub extension_energy: f64,
    pub extension_x: Vec<f64>,
    pub extension_y: Vec<f64>,
    pub f_components: Vec<Interval>,
}

fn shape(name: &str) -> Result<fn(f64) -> f64> {
    Ok(match name {
        "identity" => |x| x,
        "square" => |x| x * x,
        "wave" => |x| (6.0 * std::f64::consts::PI * x).sin(),
        "tent" => |x| 1.0 - (2.0 * x - 1.0).abs(),
        other => return Err(Error::InvalidParameter(format!("unknown shape `{other}`"))),
    })
}

/// Local and jump parts of the trace energy of a named function restricted
/// to `F`, next to the energy of its harmonic extension.
pub fn trace_report(depth: u32, name: &str, per_component: usize) -> Result<TraceSplit> {
    let set = set_of(depth)?;
    let phi = TraceFunction::from_fn(&set, per_component.clamp(1, 256), shape(name)?)?;
    let e = trace_energy(&phi, &set);
    let ext = harmonic_extension(&phi, &set)?;
    Ok(TraceSplit {
        local: e.local.unwrap_or(0.0),
        jump: e.jump.unwrap_or(0.0),
        value: e.value,
        extension_energy: dirichlet_energy(&ext, &ext)?.value,
        extension_x: ext.nodes().to_vec(),
        extension_y: ext.values().to_vec(),
        f_components: set.f_components().to_vec(),
    })
}

#[derive(Debug, Serialize)]
pub struct StickyRun {
    pub h: f64,
    pub carrier: Interval,
    /// Collapsed gaps: position on the image and the mass sitting there.
    pub atoms: Vec<(f64, f64)>,
    pub occupation: Vec<EstimatorResult>,
    /// `m({p}) / m(carrier)` for each atom.
    pub stationary: Vec<f64>,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

/// The state held at each of `points` even times, for drawing.
fn thin(path: &PathSample, points: usize) -> (Vec<f64>, Vec<f64>) {
    let horizon = path.horizon();
    let n = points.max(2) - 1;
    let mut k = 0;
    (0..=n)
        .map(|i| {
            let t = horizon * i as f64 / n as f64;
            while k + 1 < path.times.len() && path.times[k + 1] <= t {
                k += 1;
            }
            (t, path.states[k])
        })
        .unzip()
}

/// The darning process of the depth-`depth` set: a walk on the image of `j`
/// that sticks at each collapsed gap, with its occupation of those points.
pub fn sticky_report(depth: u32, h: f64, horizon: f64, seed: u64) -> Result<StickyRun> {
    let set = set_of(depth)?;
    if !(h > 0.0 && horizon > 0.0) || horizon / (h * h) > STEP_BUDGET {
        return Err(Error::InvalidParameter(format!(
            "horizon / h² = {:.3e} walk steps; keep it under {STEP_BUDGET:e}",
            horizon / (h * h)
        )));
    }
    let dm = DarningMap::new(set.clone(), None)?;
    let mu = trace_measure(&set);
    let speed = dm.pushforward_speed(Source::Trace(&mu))?;
    let grid = WalkGrid::new(&speed, h, WalkOptions::default())?;
    let path = grid.run(0.0, horizon, seed, 0)?;
    let targets: Vec<Target> = speed.atoms().iter().map(|a| Target::Point(a.at)).collect();
    let occupation = grid.attributed_occupation(&path, &targets, &OccupationOptions::default())?;
    let total = speed.total();
    let (t, y) = thin(&path, PLOT_POINTS);
    Ok(StickyRun {
        h,
        carrier: speed.carrier(),
        atoms: speed.atoms().iter().map(|a| (a.at, a.mass)).collect(),
        stationary: speed.atoms().iter().map(|a| a.mass / total).collect(),
        occupation,
        t,
        y,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn geometry(depth: u32, samples: usize) -> std::result::Result<String, JsError> {
    to_js(geometry_report(depth, samples))
}

#[wasm_bindgen]
pub fn trace_split(depth: u32, shape: &str, per_component: usize) -> std::result::Result<String, JsError> {
    to_js(trace_report(depth, shape, per_component))
}

#[wasm_bindgen]
pub fn sticky_walk(depth: u32, h: f64, horizon: f64, seed: u64) -> std::result::Result<String, JsError> {
    to_js(sticky_report(depth, h, horizon, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_curves_end_where_the_masses_say() {
        let g = geometry_report(1, 9).unwrap();
        assert_eq!(g.components, vec![Interval::new(0.375, 0.625)]);
        assert_eq!(*g.s.last().unwrap(), 0.25);
        assert_eq!(*g.j.last().unwrap(), 0.75);
        assert!(g.s.windows(2).all(|w| w[0] <= w[1]));
        assert!(geometry_report(MAX_DEPTH + 1, 9).is_err());
    }

    #[test]
    fn identity_splits_into_three_eighths_and_one_eighth() {
        let r = trace_report(1, "identity", 1).unwrap();
        assert_eq!((r.local, r.jump, r.value), (0.375, 0.125, 0.5));
        assert!((r.extension_energy - 0.5).abs() < 1e-15);
        assert!(trace_report(1, "nope", 1).is_err());
    }

    #[test]
    fn sticky_walk_reports_each_atom() {
        let r = sticky_report(1, 1.0 / 32.0, 50.0, 3).unwrap();
        assert_eq!(r.atoms, vec![(0.375, 0.25)]);
        assert_eq!(r.stationary, vec![0.25]);
        assert_eq!(r.t.len(), PLOT_POINTS);
        assert!(r.y.iter().all(|&y| (0.0..=0.75).contains(&y)));
        assert!(sticky_report(1, 1e-4, 1e3, 3).is_err());
    }

    #[test]
    fn every_page_setting_runs() {
        for depth in 0..=MAX_DEPTH {
            geometry_report(depth, 801).unwrap();
            for name in ["identity", "square", "tent", "wave"] {
                let r = trace_report(depth, name, 16).unwrap();
                assert!((r.value - r.extension_energy).abs() <= 1e-12 * r.value.max(1.0));
            }
        }
        for (depth, h) in [(1, 1.0 / 64.0), (2, 1.0 / 64.0), (3, 1.0 / 256.0)] {
            let r = sticky_report(depth, h, 1.0, 1).unwrap();
            assert_eq!(r.atoms.len(), (1 << depth) - 1);
        }
    }
}
