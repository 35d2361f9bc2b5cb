use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use traceform::geometry::{periodic_fat_cantor, svc_complement, Interval, IntervalSet, Part, Tail};
use traceform::sim::{Boundary, Holding, Target, WalkOptions};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "traceform", version, about = "Experiments on regular subspaces of one-dimensional Brownian motion")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "TRACEFORM_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for path generation (0 = all). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Build or check an interval set.
    #[command(subcommand)]
    Set(SetCmd),
    /// The scale function s.
    #[command(subcommand)]
    Scale(ScaleCmd),
    /// The darning map j.
    #[command(subcommand)]
    Darn(DarnCmd),
    /// Dirichlet energies of grid functions.
    #[command(subcommand)]
    Energy(EnergyCmd),
    /// Split u into its subspace part and its orthogonal complement.
    Decompose {
        #[command(flatten)]
        set: SetArgs,
        /// Grid function CSV (x,value).
        #[arg(long)]
        u: PathBuf,
        /// Point where s vanishes (default: left end of the window).
        #[arg(long, allow_hyphen_values = true)]
        anchor: Option<f64>,
        /// Require u, and hence both parts, to be linear on every gap.
        #[arg(long)]
        harmonic: bool,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Trace forms on F.
    #[command(subcommand)]
    Trace(TraceCmd),
    /// Jump weight α∫p(1-r) of a gap of length d along a ladder of α.
    Feller {
        #[arg(long)]
        d: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha_ladder: Vec<f64>,
    },
    /// Sup, L² and energy metrics of complement members before and after darning.
    Equivalence {
        #[command(flatten)]
        set: SetArgs,
        /// Grid function CSVs, one per sample.
        #[arg(long, required = true)]
        u: Vec<PathBuf>,
        #[command(flatten)]
        z: Anchor,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Write sample paths.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Monte Carlo estimates with their closed forms.
    #[command(subcommand)]
    Estimate(EstimateCmd),
    /// Repeat the run recorded in a manifest and compare output hashes.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SetCmd {
    /// Write set.json.
    Build {
        #[command(flatten)]
        set: SetArgs,
    },
    /// Check δ-measure-density and the standing assumptions; exit 2 if any fails.
    Validate {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        delta: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScaleCmd {
    /// Evaluate s at points of the window.
    Eval {
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        points: Points,
        #[arg(long, allow_hyphen_values = true)]
        anchor: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DarnCmd {
    /// Evaluate j, describe its image and the image of the trace measure.
    Map {
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        points: Points,
        #[command(flatten)]
        z: Anchor,
    },
    /// Darn a complement member onto the image of j.
    Function {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        u: PathBuf,
        #[command(flatten)]
        z: Anchor,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum EnergyCmd {
    /// ½∫u'v' dx.
    Full {
        #[arg(long)]
        u: PathBuf,
        /// Second argument (default: u).
        #[arg(long)]
        v: Option<PathBuf>,
    },
    /// ½∫u'v' 1_G dx for functions flat on F.
    Subspace {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        v: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// ½∫_G u'v' dx for functions vanishing on F.
    Part {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        v: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// ∫_A u'² dx, or ∫_A u'² 1_G dx with --subspace.
    Measure {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        u: PathBuf,
        /// A = [a, b] (default: the domain of u).
        #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
        over: Option<Interval>,
        /// Measure with respect to the subspace; needs a set.
        #[arg(long)]
        subspace: bool,
        /// With --subspace, take A = G or F inside the window.
        #[arg(long, value_enum, requires = "subspace", conflicts_with = "over")]
        part: Option<PartArg>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TraceCmd {
    /// Local and jump parts of the trace energy of φ.
    Energy {
        #[command(flatten)]
        set: SetArgs,
        /// Trace function CSV (x,value) on F.
        #[arg(long)]
        phi: PathBuf,
    },
    /// Trace of the subspace form: the local part only.
    Subspace {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Gaps with their jump weights 1/(2d).
    JumpTable {
        #[command(flatten)]
        set: SetArgs,
    },
    /// Lebesgue on F plus d/2 at each gap end.
    Measure {
        #[command(flatten)]
        set: SetArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    /// Brownian paths on a fixed time grid.
    Bm {
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        seed: u64,
    },
    /// The diffusion in natural scale with a given speed measure.
    Walk {
        /// Speed measure JSON.
        #[arg(long)]
        speed: PathBuf,
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value_t = 1)]
        n: u64,
    },
    /// The diffusion with scale s and Lebesgue speed, read back on the line.
    Xs {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, allow_hyphen_values = true)]
        anchor: Option<f64>,
        #[command(flatten)]
        walk: WalkArgs,
    },
    /// The darning process on the image of j.
    Darning {
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        z: Anchor,
        #[command(flatten)]
        walk: WalkArgs,
        /// `direct` walks on the image with the pushed-forward trace measure;
        /// `line` runs Brownian motion on the window and maps it through j.
        #[arg(long, value_enum, default_value_t = Route::Direct)]
        route: Route,
    },
}

#[derive(Debug, Subcommand)]
pub enum EstimateCmd {
    /// Exit-side frequencies from a gap.
    Hitting {
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        exit: ExitArgs,
    },
    /// Laplace transforms of the exit time, by side.
    Laplace {
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        exit: ExitArgs,
        #[arg(long)]
        alpha: f64,
    },
    /// Occupation fractions of a simulated walk or of a path file.
    Occupation {
        /// Speed measure JSON; a walk is simulated and time is attributed by its kernel.
        #[arg(long, conflicts_with = "path", required_unless_present = "path")]
        speed: Option<PathBuf>,
        /// Path CSV (t,x,flag); plain time fractions.
        #[arg(long)]
        path: Option<PathBuf>,
        /// A point `p` or an interval `a,b`; repeatable.
        #[arg(long = "target", value_parser = parse_target, allow_hyphen_values = true, required = true)]
        targets: Vec<Target>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        ends: EndArgs,
        /// Discarded initial time (default: a twentieth of the horizon).
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long, default_value_t = 20)]
        batches: usize,
    },
}

/// Where the interval set comes from.
#[derive(Debug, Clone, Args)]
pub struct SetArgs {
    /// Interval set JSON.
    #[arg(long, conflicts_with_all = ["svc_depth", "periodic_depth"])]
    pub set: Option<PathBuf>,
    /// Smith-Volterra-Cantor complement of this depth on --window.
    #[arg(long, conflicts_with = "periodic_depth")]
    pub svc_depth: Option<u32>,
    /// Periodic fat Cantor set on [0, period].
    #[arg(long, requires = "period")]
    pub periodic_depth: Option<u32>,
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long, value_parser = parse_interval, default_value = "0,1", allow_hyphen_values = true)]
    pub window: Interval,
    /// Override the left tail.
    #[arg(long, value_enum)]
    pub tail_left: Option<TailArg>,
    /// Override the right tail.
    #[arg(long, value_enum)]
    pub tail_right: Option<TailArg>,
}

impl SetArgs {
    pub fn load(&self) -> Result<IntervalSet, CliError> {
        let set = if let Some(path) = &self.set {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?
        } else if let Some(k) = self.svc_depth {
            svc_complement(k, self.window)?
        } else if let (Some(k), Some(p)) = (self.periodic_depth, self.period) {
            periodic_fat_cantor(k, p)?
        } else {
            return Err(CliError::validation(
                "no interval set: pass --set, --svc-depth or --periodic-depth",
            ));
        };
        if self.tail_left.is_none() && self.tail_right.is_none() {
            return Ok(set);
        }
        let mut tails = set.tails();
        if let Some(t) = self.tail_left {
            tails.left = Some(t.into());
        }
        if let Some(t) = self.tail_right {
            tails.right = Some(t.into());
        }
        if tails.left != Some(Tail::Periodic) && tails.right != Some(Tail::Periodic) {
            tails.period = None;
        }
        Ok(set.with_tails(tails)?)
    }
}

/// Evaluation points: an explicit list, or an even grid over the window.
#[derive(Debug, Clone, Args)]
pub struct Points {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 101, conflicts_with = "x")]
    pub points: usize,
}

impl Points {
    pub fn resolve(&self, window: Interval) -> Vec<f64> {
        if !self.x.is_empty() {
            return self.x.clone();
        }
        let n = self.points.max(2) - 1;
        (0..=n)
            .map(|k| window.lo + window.len() * k as f64 / n as f64)
            .collect()
    }
}

/// Anchor of the darning map.
#[derive(Debug, Clone, Args)]
pub struct Anchor {
    /// Point of F, not a gap end, where j vanishes (default: the first such point).
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct WalkArgs {
    /// Grid step.
    #[arg(long)]
    pub h: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long)]
    pub horizon: f64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub ends: EndArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EndArgs {
    #[arg(long, value_enum, default_value_t = End::Reflect)]
    pub left: End,
    #[arg(long, value_enum, default_value_t = End::Reflect)]
    pub right: End,
    #[arg(long, value_enum, default_value_t = HoldingArg::Exponential)]
    pub holding: HoldingArg,
}

impl EndArgs {
    pub fn options(&self) -> WalkOptions {
        WalkOptions {
            left: self.left.into(),
            right: self.right.into(),
            holding: match self.holding {
                HoldingArg::Exponential => Holding::Exponential,
                HoldingArg::Deterministic => Holding::Deterministic,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExitArgs {
    /// A bounded gap `a,b`; otherwise the component of the set containing x0.
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    pub gap: Option<Interval>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub seed: u64,
    /// Time step `dt = (gap / steps)²`.
    #[arg(long, default_value_t = 50.0)]
    pub steps_per_gap: f64,
    /// Only count exits seen at grid times.
    #[arg(long)]
    pub no_bridge: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TailArg {
    AllG,
    AllF,
    Periodic,
}

impl From<TailArg> for Tail {
    fn from(t: TailArg) -> Self {
        match t {
            TailArg::AllG => Tail::AllG,
            TailArg::AllF => Tail::AllF,
            TailArg::Periodic => Tail::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PartArg {
    G,
    F,
}

impl From<PartArg> for Part {
    fn from(p: PartArg) -> Self {
        match p {
            PartArg::G => Part::G,
            PartArg::F => Part::F,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum End {
    Reflect,
    Absorb,
}

impl From<End> for Boundary {
    fn from(e: End) -> Self {
        match e {
            End::Reflect => Boundary::Reflect,
            End::Absorb => Boundary::Absorb,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HoldingArg {
    Exponential,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Direct,
    Line,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let num = |t: &str| f64::from_str(t.trim()).map_err(|e| format!("`{t}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let (a, b) = parse_pair(s)?;
    if !(a < b) {
        return Err(format!("`{s}` is not an interval with a < b"));
    }
    Ok(Interval::new(a, b))
}

fn parse_target(s: &str) -> Result<Target, String> {
    if s.contains(',') {
        let (a, b) = parse_pair(s)?;
        if a > b {
            return Err(format!("`{s}` has a > b"));
        }
        Ok(Target::Interval(Interval::new(a, b)))
    } else {
        f64::from_str(s.trim()).map(Target::Point).map_err(|e| format!("`{s}`: {e}"))
    }
}
