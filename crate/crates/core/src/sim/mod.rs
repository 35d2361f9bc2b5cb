//! Monte Carlo: Brownian exit from a gap, and diffusions given by a speed
//! measure in natural scale, simulated as a time-changed nearest-neighbour
//! walk.
//!
//! Every path `i` of a run seeded with `seed` draws from its own ChaCha8
//! stream (`seed`, stream `i`), and reductions run in path order, so results
//! do not depend on the number of worker threads.

mod bm;
mod line;
mod occupation;
mod walk;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use bm::{
    bm_paths, estimate_exit, estimate_hitting, estimate_laplace, estimate_laplace_in_gap,
    ExitOptions, HittingEstimate, LaplaceEstimate,
};
pub use line::{simulate_darning_line, simulate_line, simulate_xs, LinePath};
pub use occupation::{occupation_fractions, OccupationOptions, Target};
pub use walk::{walk_batch, walk_paths, Boundary, Holding, WalkGrid, WalkOptions};

/// Random stream for path `index` of a run.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `f(0), …, f(n-1)` in index order. `workers = 0` uses every available
/// thread, `1` runs inline.
pub fn map_indexed<T, F>(n: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if workers != 1 {
        use rayon::prelude::*;
        let run = || (0..n).into_par_iter().map(&f).collect();
        if workers == 0 {
            return run();
        }
        return match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(run),
            Err(_) => (0..n).map(&f).collect(),
        };
    }
    let _ = workers;
    (0..n).map(f).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    #[serde(rename = "")]
    None,
    /// The state stands for a collapsed stretch (reported at its midpoint).
    Collapsed,
    /// The path has been absorbed and stays put.
    Absorbed,
}

/// A trajectory sampled at its jump times: the state is `states[k]` on
/// `[times[k], times[k+1])`; the last row marks the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub flags: Vec<Flag>,
    pub seed: u64,
    pub stream: u64,
}

#[derive(Serialize)]
struct PathRow {
    t: f64,
    x: f64,
    flag: Flag,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Time at which the path was absorbed, if it was.
    pub fn absorbed_at(&self) -> Option<f64> {
        self.flags
            .iter()
            .position(|f| *f == Flag::Absorbed)
            .map(|k| self.times[k])
    }

    /// Writes the "t,x,flag" CSV layout.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for k in 0..self.len() {
            w.serialize(PathRow {
                t: self.times[k],
                x: self.states[k],
                flag: self.flags[k],
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub target: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl EstimatorResult {
    /// Mean and `sd / √n` of a sequence, folded in order.
    pub fn from_values(values: impl IntoIterator<Item = f64>, target: impl Into<String>) -> Self {
        let (mut n, mut mean, mut m2) = (0u64, 0.0, 0.0);
        for v in values {
            n += 1;
            let delta = v - mean;
            mean += delta / n as f64;
            m2 += delta * (v - mean);
        }
        let sd = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
        Self {
            estimate: mean,
            std_error: if n > 0 { sd / (n as f64).sqrt() } else { f64::NAN },
            samples: n,
            target: target.into(),
            warning: None,
        }
    }

    /// Whether `value` lies within `k` standard errors plus `slack`.
    pub fn covers(&self, value: f64, k: f64, slack: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error + slack
    }
}
