use super::walk::{WalkGrid, WalkOptions};
use super::{Flag, PathSample};
use crate::error::{Error, Result};
use crate::geometry::Part;
use crate::speed::SpeedMeasure;
use crate::transform::{CumulativeMap, DarningMap, Preimage, ScaleFunction};

/// A walk run in the image of a cumulative map, together with the same path
/// read back on the line.
#[derive(Clone, Debug, PartialEq)]
pub struct LinePath {
    /// States in image coordinates.
    pub image: PathSample,
    /// States mapped back through the inverse; a collapsed stretch is
    /// reported at its midpoint and flagged.
    pub line: PathSample,
}

/// Runs the walk with speed equal to the image of Lebesgue measure on the
/// window under `map`, started at `map(x0)`.
pub fn simulate_line(
    map: &CumulativeMap,
    h: f64,
    x0: f64,
    horizon: f64,
    seed: u64,
    opts: WalkOptions,
) -> Result<LinePath> {
    let w = map.set().window();
    if !w.contains_closed(x0) {
        return Err(Error::OutOfRange {
            what: "starting point",
            value: x0,
            lo: w.lo,
            hi: w.hi,
        });
    }
    let speed = map.window_pushforward()?;
    let grid = WalkGrid::new(&speed, h, opts)?;
    let image = grid.run(map.eval(x0)?, horizon, seed, 0)?;
    let mut line = image.clone();
    for (k, y) in image.states.iter().enumerate() {
        match map.inverse(*y)? {
            Preimage::Point(x) => line.states[k] = x,
            Preimage::Interval(i) => {
                line.states[k] = i.midpoint();
                if line.flags[k] == Flag::None {
                    line.flags[k] = Flag::Collapsed;
                }
            }
        }
    }
    Ok(LinePath { image, line })
}

/// The diffusion with scale `s` and Lebesgue speed, simulated in natural
/// scale.
pub fn simulate_xs(
    sf: &ScaleFunction,
    h: f64,
    x0: f64,
    horizon: f64,
    seed: u64,
    opts: WalkOptions,
) -> Result<LinePath> {
    simulate_line(sf.map(), h, x0, horizon, seed, opts)
}

/// Brownian motion on the window (walk with Lebesgue speed) observed through
/// the darning map. The image path is flagged while the line walk sits
/// inside `G`.
pub fn simulate_darning_line(
    dm: &DarningMap,
    h: f64,
    x0: f64,
    horizon: f64,
    seed: u64,
    opts: WalkOptions,
) -> Result<LinePath> {
    let set = dm.set();
    let speed = SpeedMeasure::lebesgue(set.window())?;
    let grid = WalkGrid::new(&speed, h, opts)?;
    let line = grid.run(x0, horizon, seed, 0)?;
    let mut image = line.clone();
    for k in 0..line.len() {
        let x = line.states[k];
        if set.part_of(x)? == Part::G && image.flags[k] == Flag::None {
            image.flags[k] = Flag::Collapsed;
        }
        image.states[k] = dm.eval(x)?;
    }
    Ok(LinePath { image, line })
}
