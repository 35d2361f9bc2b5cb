use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::occupation::{batch_means, OccupationOptions, Target};
use super::{map_indexed, path_rng, EstimatorResult, Flag, PathSample};
use crate::error::{Error, Result};
use crate::speed::{Atom, SpeedMeasure};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Reflect,
    Absorb,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Holding {
    #[default]
    Exponential,
    Deterministic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WalkOptions {
    pub left: Boundary,
    pub right: Boundary,
    pub holding: Holding,
}

/// The walk on `carrier.lo + h·{0, …, N}`: a symmetric nearest-neighbour
/// chain held at node `y` for a mean time `∫ (h - |ξ - y|)⁺ m(dξ)`.
///
/// An atom of mass `w` at a node adds `h·w` to its mean; pure Lebesgue gives
/// `h²`, the mean exit time of Brownian motion from `(y - h, y + h)`. At a
/// reflecting end only half the kernel lies in the carrier and the chain
/// leaves in one direction only, so the mean is doubled. Nodes carrying an
/// infinite atom, and absorbing ends, trap the walk.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkGrid {
    speed: SpeedMeasure,
    h: f64,
    cells: usize,
    means: Vec<f64>,
    absorbing: Vec<bool>,
    opts: WalkOptions,
}

impl WalkGrid {
    pub fn new(speed: &SpeedMeasure, h: f64, opts: WalkOptions) -> Result<Self> {
        let c = speed.carrier();
        if c.len() <= 0.0 {
            return Err(Error::DegenerateCarrier);
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("step h = {h} must be positive")));
        }
        let ratio = c.len() / h;
        let cells = ratio.round();
        if cells < 1.0 || (ratio - cells).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "h = {h} does not divide the carrier length {}",
                c.len()
            )));
        }
        let cells = cells as usize;
        let node = |i: usize| if i == cells { c.hi } else { c.lo + i as f64 * h };

        // Snap atoms to nodes.
        let mut snapped: Vec<(usize, Atom)> = Vec::with_capacity(speed.atoms().len());
        for a in speed.atoms() {
            let i = (((a.at - c.lo) / h).round() as usize).min(cells);
            if let Some((j, prev)) = snapped.last() {
                if *j == i {
                    return Err(Error::AtomCollision { p0: prev.at, p1: a.at });
                }
            }
            snapped.push((i, *a));
        }
        let atoms = snapped
            .iter()
            .map(|(i, a)| Atom { at: node(*i), mass: a.mass })
            .collect();
        let speed = SpeedMeasure::new(c, speed.density_pieces().to_vec(), atoms)?;

        let mut means = vec![0.0; cells + 1];
        let mut absorbing = vec![false; cells + 1];
        for (i, m) in means.iter_mut().enumerate() {
            *m = speed.tent_density(node(i), h, c.lo, c.hi);
        }
        for (i, a) in &snapped {
            if a.is_infinite() {
                absorbing[*i] = true;
            } else {
                means[*i] += h * a.mass;
            }
        }
        means[0] *= 2.0;
        means[cells] *= 2.0;
        absorbing[0] |= opts.left == Boundary::Absorb;
        absorbing[cells] |= opts.right == Boundary::Absorb;
        if let Some(i) = (0..=cells).find(|&i| !absorbing[i] && !(means[i] > 0.0)) {
            return Err(Error::InvalidSpeed(format!(
                "the speed measure puts no mass near node {}",
                node(i)
            )));
        }
        Ok(Self {
            speed,
            h,
            cells,
            means,
            absorbing,
            opts,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of cells `N`; nodes are indexed `0..=N`.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn node(&self, i: usize) -> f64 {
        let c = self.speed.carrier();
        if i == self.cells {
            c.hi
        } else {
            c.lo + i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells).map(|i| self.node(i)).collect()
    }

    /// Index of the node nearest to `x`.
    pub fn index_of(&self, x: f64) -> usize {
        let c = self.speed.carrier();
        (((x - c.lo) / self.h).round().max(0.0) as usize).min(self.cells)
    }

    /// Mean holding time at each node.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn absorbing(&self) -> &[bool] {
        &self.absorbing
    }

    /// The speed measure with atoms moved onto nodes.
    pub fn speed(&self) -> &SpeedMeasure {
        &self.speed
    }

    pub fn options(&self) -> WalkOptions {
        self.opts
    }

    /// Share of the holding kernel at node `i` that falls in `target`.
    pub fn attribution(&self, i: usize, target: &Target) -> f64 {
        let c = self.speed.carrier();
        let (lo, hi) = target.bounds();
        let y = self.node(i);
        let part = self.speed.tent(y, self.h, lo.max(c.lo), hi.min(c.hi));
        let whole = self.speed.tent(y, self.h, c.lo, c.hi);
        if whole.is_infinite() {
            return if part.is_infinite() { 1.0 } else { 0.0 };
        }
        if whole > 0.0 {
            part / whole
        } else {
            0.0
        }
    }

    /// One path from the node nearest `x0`, on stream `stream` of `seed`.
    pub fn run(&self, x0: f64, horizon: f64, seed: u64, stream: u64) -> Result<PathSample> {
        let c = self.speed.carrier();
        if !c.contains_closed(x0) {
            return Err(Error::OutOfRange {
                what: "starting point",
                value: x0,
                lo: c.lo,
                hi: c.hi,
            });
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon = {horizon} must be >= 0")));
        }
        let mut rng = path_rng(seed, stream);
        let mut i = self.index_of(x0);
        let mut t = 0.0;
        let mut times = vec![t];
        let mut states = vec![self.node(i)];
        let mut flags = vec![Flag::None];
        while t < horizon {
            if self.absorbing[i] {
                *flags.last_mut().expect("nonempty") = Flag::Absorbed;
                times.push(horizon);
                states.push(self.node(i));
                flags.push(Flag::Absorbed);
                break;
            }
            let hold = match self.opts.holding {
                Holding::Exponential => self.means[i] * rng.sample::<f64, _>(Exp1),
                Holding::Deterministic => self.means[i],
            };
            let up = rng.random::<bool>();
            if t + hold >= horizon {
                times.push(horizon);
                states.push(self.node(i));
                flags.push(Flag::None);
                break;
            }
            t += hold;
            i = if i == 0 {
                1
            } else if i == self.cells {
                self.cells - 1
            } else if up {
                i + 1
            } else {
                i - 1
            };
            times.push(t);
            states.push(self.node(i));
            flags.push(Flag::None);
        }
        Ok(PathSample {
            times,
            states,
            flags,
            seed,
            stream,
        })
    }

    /// Time fractions in each target, splitting the time held at a node
    /// between targets in proportion to the holding kernel (the fraction of
    /// `∫ (h - |ξ - y|)⁺ m(dξ)` lying in the target). For the stationary walk
    /// this recovers `m(target) / m(carrier)` exactly.
    pub fn attributed_occupation(
        &self,
        path: &PathSample,
        targets: &[Target],
        opts: &OccupationOptions,
    ) -> Result<Vec<EstimatorResult>> {
        let table: Vec<Vec<f64>> = (0..=self.cells)
            .map(|i| targets.iter().map(|t| self.attribution(i, t)).collect())
            .collect();
        batch_means(path, targets, opts, |x, k| table[self.index_of(x)][k])
    }
}

/// Single path of the walk driven by `speed`.
pub fn walk_paths(
    speed: &SpeedMeasure,
    h: f64,
    x0: f64,
    horizon: f64,
    seed: u64,
    opts: WalkOptions,
) -> Result<PathSample> {
    WalkGrid::new(speed, h, opts)?.run(x0, horizon, seed, 0)
}

/// `n` independent paths, path `i` on stream `i`.
pub fn walk_batch(
    grid: &WalkGrid,
    x0: f64,
    horizon: f64,
    seed: u64,
    n: u64,
    workers: usize,
) -> Result<Vec<PathSample>> {
    map_indexed(n, workers, |i| grid.run(x0, horizon, seed, i))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Interval;
    use crate::speed::DensityPiece;

    fn sticky() -> SpeedMeasure {
        SpeedMeasure::new(
            Interval::new(0.0, 0.75),
            vec![DensityPiece { lo: 0.0, hi: 0.75, value: 1.0 }],
            vec![Atom { at: 0.375, mass: 0.25 }],
        )
        .unwrap()
    }

    #[test]
    fn holding_means() {
        let g = WalkGrid::new(&SpeedMeasure::lebesgue(Interval::new(0.0, 1.0)).unwrap(), 0.25, WalkOptions::default())
            .unwrap();
        assert_eq!(g.means(), &[0.0625; 5]);
        let g = WalkGrid::new(&sticky(), 0.125, WalkOptions::default()).unwrap();
        assert_eq!(g.means()[3], 0.125 * 0.125 + 0.125 * 0.25);
        assert_eq!(g.attribution(3, &Target::Point(0.375)), 0.25 / (0.125 + 0.25));
    }

    #[test]
    fn grid_checks() {
        let m = sticky();
        assert!(matches!(
            WalkGrid::new(&m, 0.2, WalkOptions::default()),
            Err(Error::InvalidGrid(_))
        ));
        let two = SpeedMeasure::new(
            Interval::new(0.0, 1.0),
            vec![],
            vec![Atom { at: 0.4, mass: 1.0 }, Atom { at: 0.45, mass: 1.0 }],
        )
        .unwrap();
        assert!(matches!(
            WalkGrid::new(&two, 0.25, WalkOptions::default()),
            Err(Error::AtomCollision { .. })
        ));
    }

    #[test]
    fn absorption() {
        let m = SpeedMeasure::new(
            Interval::new(0.0, 1.0),
            vec![DensityPiece { lo: 0.0, hi: 1.0, value: 1.0 }],
            vec![Atom { at: 1.0, mass: f64::INFINITY }],
        )
        .unwrap();
        let p = walk_paths(&m, 0.125, 0.5, 50.0, 4, WalkOptions::default()).unwrap();
        let t = p.absorbed_at().expect("absorbed");
        assert!(t < 50.0);
        let k = p.times.iter().position(|&s| s == t).unwrap();
        assert!(p.states[k..].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn deterministic_holding_and_seeds() {
        let opts = WalkOptions { holding: Holding::Deterministic, ..Default::default() };
        let p = walk_paths(&sticky(), 0.125, 0.0, 1.0, 2, opts).unwrap();
        assert_eq!(p.times[1], 0.125 * 0.125);
        let a = walk_paths(&sticky(), 0.125, 0.3, 5.0, 2, WalkOptions::default()).unwrap();
        let b = walk_paths(&sticky(), 0.125, 0.3, 5.0, 2, WalkOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.times.windows(2).all(|w| w[0] < w[1]));
    }
}
