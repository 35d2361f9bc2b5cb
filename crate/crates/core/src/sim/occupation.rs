use serde::{Deserialize, Serialize};

use super::{EstimatorResult, PathSample};
use crate::error::{Error, Result};
use crate::geometry::Interval;

/// A set whose occupation time is measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Closed interval.
    Interval(Interval),
    Point(f64),
}

impl Target {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Target::Interval(i) => (i.lo, i.hi),
            Target::Point(p) => (p, p),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.bounds();
        lo <= x && x <= hi
    }

    pub fn describe(&self) -> String {
        match *self {
            Target::Interval(i) => format!("time fraction in [{}, {}]", i.lo, i.hi),
            Target::Point(p) => format!("time fraction at {p}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OccupationOptions {
    /// Initial stretch discarded; `None` means a twentieth of the horizon.
    pub burn_in: Option<f64>,
    pub batches: usize,
}

impl Default for OccupationOptions {
    fn default() -> Self {
        Self {
            burn_in: None,
            batches: 20,
        }
    }
}

/// Time-weighted fractions with batch-means standard errors. `weight(x, k)`
/// is the share of time spent at state `x` credited to target `k`.
pub(crate) fn batch_means(
    path: &PathSample,
    targets: &[Target],
    opts: &OccupationOptions,
    weight: impl Fn(f64, usize) -> f64,
) -> Result<Vec<EstimatorResult>> {
    let horizon = path.horizon();
    let burn = opts.burn_in.unwrap_or(horizon / 20.0);
    if !(burn >= 0.0) || horizon <= burn {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must exceed the burn-in {burn}"
        )));
    }
    let nb = opts.batches.max(2);
    let len = (horizon - burn) / nb as f64;
    let mut acc = vec![vec![0.0; targets.len()]; nb];
    for k in 0..path.len().saturating_sub(1) {
        let (mut t0, t1) = (path.times[k].max(burn), path.times[k + 1]);
        if t1 <= t0 {
            continue;
        }
        let w: Vec<f64> = (0..targets.len()).map(|j| weight(path.states[k], j)).collect();
        while t0 < t1 {
            let b = (((t0 - burn) / len) as usize).min(nb - 1);
            let end = if b == nb - 1 { t1 } else { t1.min(burn + (b + 1) as f64 * len) };
            let dt = end - t0;
            for (a, wj) in acc[b].iter_mut().zip(&w) {
                *a += wj * dt;
            }
            if end <= t0 {
                break;
            }
            t0 = end;
        }
    }
    let warning = (horizon < 10.0 * burn).then(|| {
        format!("horizon {horizon} is shorter than ten times the burn-in {burn}")
    });
    Ok(targets
        .iter()
        .enumerate()
        .map(|(j, t)| {
            let mut r = EstimatorResult::from_values(acc.iter().map(|b| b[j] / len), t.describe());
            r.warning = warning.clone();
            r
        })
        .collect())
}

/// Fraction of time the path spends in each target (state membership).
pub fn occupation_fractions(
    path: &PathSample,
    targets: &[Target],
    opts: &OccupationOptions,
) -> Result<Vec<EstimatorResult>> {
    batch_means(path, targets, opts, |x, k| targets[k].contains(x) as u8 as f64)
}
