use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{map_indexed, path_rng, EstimatorResult, Flag, PathSample};
use crate::error::{Error, Result};
use crate::geometry::{Interval, IntervalSet};

/// Brownian paths (generator `½Δ`) on the grid `0, dt, 2dt, …`, with a
/// shorter last step ending exactly at `horizon`.
pub fn bm_paths(n: u64, dt: f64, horizon: f64, x0: f64, seed: u64) -> Result<Vec<PathSample>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon = {horizon} must be >= 0")));
    }
    let steps = (horizon / dt).ceil() as usize;
    Ok((0..n)
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut times = Vec::with_capacity(steps + 1);
            let mut states = Vec::with_capacity(steps + 1);
            let (mut t, mut x) = (0.0, x0);
            times.push(t);
            states.push(x);
            for k in 1..=steps {
                let next = (k as f64 * dt).min(horizon);
                let z: f64 = rng.sample(StandardNormal);
                x += (next - t).sqrt() * z;
                t = next;
                times.push(t);
                states.push(x);
            }
            PathSample {
                flags: vec![Flag::None; times.len()],
                times,
                states,
                seed,
                stream: i,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitOptions {
    /// Time step such that `√dt = gap / steps_per_gap`.
    pub steps_per_gap: f64,
    /// Catch crossings between grid times with the Brownian-bridge
    /// probability `exp(-2 (x₀ - a)(x₁ - a) / dt)`.
    pub bridge: bool,
    /// Worker threads (0 = all).
    pub workers: usize,
}

impl Default for ExitOptions {
    fn default() -> Self {
        Self {
            steps_per_gap: 50.0,
            bridge: true,
            workers: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// First exit of discretised Brownian motion from `(a, b)`: the side and an
/// approximate exit time.
fn exit_once<R: Rng>(rng: &mut R, a: f64, b: f64, x0: f64, dt: f64, bridge: bool) -> (Side, f64) {
    let sd = dt.sqrt();
    let (mut x, mut t) = (x0, 0.0);
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let x1 = x + sd * z;
        if x1 <= a {
            return (Side::Left, t + dt * (x - a) / (x - x1));
        }
        if x1 >= b {
            return (Side::Right, t + dt * (b - x) / (x1 - x));
        }
        if bridge {
            let ea = 2.0 * (x - a) * (x1 - a) / dt;
            if ea < 40.0 && rng.random::<f64>() < (-ea).exp() {
                return (Side::Left, t + 0.5 * dt);
            }
            let eb = 2.0 * (b - x) * (b - x1) / dt;
            if eb < 40.0 && rng.random::<f64>() < (-eb).exp() {
                return (Side::Right, t + 0.5 * dt);
            }
        }
        x = x1;
        t += dt;
    }
}

fn check_gap(gap: Interval, x0: f64, n: u64) -> Result<()> {
    if !(gap.lo < gap.hi && gap.lo.is_finite() && gap.hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "({}, {}) is not a bounded gap",
            gap.lo, gap.hi
        )));
    }
    if !gap.contains_closed(x0) {
        return Err(Error::OutOfRange {
            what: "starting point",
            value: x0,
            lo: gap.lo,
            hi: gap.hi,
        });
    }
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two paths".into()));
    }
    Ok(())
}

fn exits(gap: Interval, x0: f64, n: u64, seed: u64, dt: f64, opts: &ExitOptions) -> Vec<(Side, f64)> {
    map_indexed(n, opts.workers, |i| {
        let mut rng = path_rng(seed, i);
        exit_once(&mut rng, gap.lo, gap.hi, x0, dt, opts.bridge)
    })
}

/// Exit-side frequencies of Brownian motion started at `x0` in the gap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingEstimate {
    pub gap: Interval,
    pub x0: f64,
    pub dt: f64,
    pub left: EstimatorResult,
    pub right: EstimatorResult,
}

pub fn estimate_exit(gap: Interval, x0: f64, n: u64, seed: u64, opts: &ExitOptions) -> Result<HittingEstimate> {
    check_gap(gap, x0, n)?;
    let dt = (gap.len() / opts.steps_per_gap).powi(2);
    let runs = exits(gap, x0, n, seed, dt, opts);
    let left = EstimatorResult::from_values(
        runs.iter().map(|(s, _)| (*s == Side::Left) as u8 as f64),
        format!("P(exit at {})", gap.lo),
    );
    let right = EstimatorResult::from_values(
        runs.iter().map(|(s, _)| (*s == Side::Right) as u8 as f64),
        format!("P(exit at {})", gap.hi),
    );
    Ok(HittingEstimate {
        gap,
        x0,
        dt,
        left,
        right,
    })
}

fn gap_of(set: &IntervalSet, x0: f64) -> Result<Interval> {
    let k = set.component_containing(x0).ok_or(Error::StartInF { x: x0 })?;
    if set.is_unbounded(k) {
        return Err(Error::InfiniteComponent { index: k });
    }
    Ok(set.components()[k])
}

/// [`estimate_exit`] for the bounded component of `G` containing `x0`.
pub fn estimate_hitting(set: &IntervalSet, x0: f64, n: u64, seed: u64, opts: &ExitOptions) -> Result<HittingEstimate> {
    estimate_exit(gap_of(set, x0)?, x0, n, seed, opts)
}

/// `E^x(e^{-α σ}; exit side)` at `dt` and at `dt/4`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaplaceEstimate {
    pub gap: Interval,
    pub x0: f64,
    pub alpha: f64,
    pub dt: f64,
    /// Run at `dt / 4`; the headline estimate.
    pub left: EstimatorResult,
    pub right: EstimatorResult,
    /// Run at `dt`.
    pub coarse_left: EstimatorResult,
    pub coarse_right: EstimatorResult,
    /// `|coarse - fine|`, a first-order bound on the remaining time-step bias.
    pub bias_left: f64,
    pub bias_right: f64,
}

fn laplace_run(
    gap: Interval,
    x0: f64,
    alpha: f64,
    n: u64,
    seed: u64,
    dt: f64,
    opts: &ExitOptions,
) -> (EstimatorResult, EstimatorResult) {
    let runs = exits(gap, x0, n, seed, dt, opts);
    let side = |want: Side| {
        runs.iter()
            .map(move |&(s, t)| if s == want { (-alpha * t).exp() } else { 0.0 })
    };
    (
        EstimatorResult::from_values(side(Side::Left), format!("E[exp(-{alpha} σ); exit at {}]", gap.lo)),
        EstimatorResult::from_values(side(Side::Right), format!("E[exp(-{alpha} σ); exit at {}]", gap.hi)),
    )
}

pub fn estimate_laplace_in_gap(
    gap: Interval,
    x0: f64,
    alpha: f64,
    n: u64,
    seed: u64,
    opts: &ExitOptions,
) -> Result<LaplaceEstimate> {
    check_gap(gap, x0, n)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be finite and >= 0")));
    }
    let dt = (gap.len() / opts.steps_per_gap).powi(2);
    let (coarse_left, coarse_right) = laplace_run(gap, x0, alpha, n, seed, dt, opts);
    let fine_seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let (left, right) = laplace_run(gap, x0, alpha, n, fine_seed, dt / 4.0, opts);
    Ok(LaplaceEstimate {
        gap,
        x0,
        alpha,
        dt,
        bias_left: (coarse_left.estimate - left.estimate).abs(),
        bias_right: (coarse_right.estimate - right.estimate).abs(),
        left,
        right,
        coarse_left,
        coarse_right,
    })
}

/// [`estimate_laplace_in_gap`] for the bounded component of `G` containing `x0`.
pub fn estimate_laplace(
    set: &IntervalSet,
    x0: f64,
    alpha: f64,
    n: u64,
    seed: u64,
    opts: &ExitOptions,
) -> Result<LaplaceEstimate> {
    estimate_laplace_in_gap(gap_of(set, x0)?, x0, alpha, n, seed, opts)
}
