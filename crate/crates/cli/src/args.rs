use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stochanneal::sampler::Selection;
use stochanneal::{BoltzmannConfig, Scheme};

#[derive(Parser, Debug)]
#[command(
    name = "stochanneal",
    version,
    about = "Max-Cut by stochastic annealing on simulated RRAM neurons"
)]
pub struct Cli {
    /// Device parameter file (JSON). Falls back to $STOCHANNEAL_PARAMS, then the bundled reference.
    #[arg(long, global = true, value_name = "PATH")]
    pub params: Option<PathBuf>,

    /// JSON file of sampler settings; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for ensembles (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an ensemble on one instance and write one row per run.
    Solve(SolveArgs),
    /// Largest solvable size on a generated ladder, per drift slope and scheme.
    SweepDrift(SweepDriftArgs),
    /// Settling-energy error and μ spread under device-to-device variation.
    SweepD2d(SweepD2dArgs),
    /// μ and σ drift of independent devices over repeated Reset-Set cycles.
    Cycling(CyclingArgs),
    /// Program devices to a target μ and report where they land.
    Calibrate(CalibrateArgs),
    /// Fit a device surface to Set-time measurements.
    Fit(FitArgs),
    /// Generate a random instance in rudy format.
    Gen(GenArgs),
    /// Exact Max-Cut by enumeration (n <= 20).
    Brute(BruteArgs),
    /// Re-run the invocation recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Ideal,
    FixedInput,
    Monitored,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Ideal => Scheme::Ideal,
            SchemeArg::FixedInput => Scheme::FixedInput,
            SchemeArg::Monitored => Scheme::Monitored,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SelectionArg {
    Random,
    RoundRobin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightsArg {
    /// {-1, +1}
    Pm1,
    /// {-1, 0, +1}, zeros omitted
    Pm1z,
    /// all +1
    One,
}

impl WeightsArg {
    pub fn set(self) -> &'static [i64] {
        match self {
            WeightsArg::Pm1 => &[-1, 1],
            WeightsArg::Pm1z => &[-1, 0, 1],
            WeightsArg::One => &[1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Linear,
    Log10,
}

/// Sampler settings shared by the network commands. Unset flags fall back to
/// the config file, then to the built-in defaults shown.
#[derive(Args, Debug, Default, Clone)]
pub struct SamplerArgs {
    /// HRS scheme [default: ideal]
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Iterations per run [default: 100000; sweep-drift: 1000000]
    #[arg(long)]
    pub iters: Option<u64>,
    /// Runs per ensemble [default: 25; sweep-drift: 10]
    #[arg(long)]
    pub runs: Option<usize>,
    /// Master seed [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Volts per unit of normalised field [default: 1.0]
    #[arg(long)]
    pub gain: Option<f64>,
    /// Final gain of an optional linear schedule [default: off]
    #[arg(long)]
    pub gain_final: Option<f64>,
    /// Set voltage at zero field [default: 1.8]
    #[arg(long)]
    pub v_center: Option<f64>,
    /// Lower voltage clamp [default: 1.6]
    #[arg(long)]
    pub v_min: Option<f64>,
    /// Upper voltage clamp [default: 2.2]
    #[arg(long)]
    pub v_max: Option<f64>,
    /// Pulse width in seconds [default: centre pulse width at the nominal HRS]
    #[arg(long)]
    pub t_pw: Option<f64>,
    /// μ the nominal HRS is chosen for, log10 seconds [default: -5]
    #[arg(long, allow_hyphen_values = true)]
    pub mu_target: Option<f64>,
    /// HRS drift slope, kΩ per cycle [default: from the parameter file]
    #[arg(long, allow_hyphen_values = true)]
    pub m_hrs: Option<f64>,
    /// HRS random-walk step, kΩ per cycle [default: from the parameter file]
    #[arg(long)]
    pub s_rw: Option<f64>,
    /// Monitored Reset tolerance, fractional [default: from the parameter file]
    #[arg(long)]
    pub hrs_tolerance: Option<f64>,
    /// Device-to-device μ offset spread as a fraction of |mu_target| [default: 0]
    #[arg(long)]
    pub d2d_cv: Option<f64>,
    /// Calibrate every device to mu_target before the run [default: off]
    #[arg(long)]
    pub calibrate: bool,
    /// Calibration actuator precision, fractional [default: 0.2]
    #[arg(long)]
    pub precision: Option<f64>,
    /// Fraction of the best-known cut that counts as converged [default: 0.9]
    #[arg(long)]
    pub convergence_fraction: Option<f64>,
    /// Unit selection order [default: random]
    #[arg(long, value_enum)]
    pub selection: Option<SelectionArg>,
    /// Smoothing window in iterations [default: 2% of iters]
    #[arg(long)]
    pub window: Option<u64>,
    /// Record every k-th energy [default: 1 for n <= 512, else n]
    #[arg(long)]
    pub stride: Option<u64>,
}

impl SamplerArgs {
    pub fn apply(&self, cfg: &mut BoltzmannConfig) {
        if let Some(s) = self.scheme {
            cfg.scheme = s.into();
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { cfg.$field = v; })*
            };
        }
        set!(iters => max_iters, runs => runs, seed => seed, gain => gain, v_center => v_center,
             v_min => v_min, v_max => v_max, mu_target => mu_target, d2d_cv => d2d_cv,
             precision => calibration_precision, convergence_fraction => convergence_fraction);
        if let Some(v) = self.m_hrs {
            cfg.drift.m_hrs = v;
        }
        if let Some(v) = self.s_rw {
            cfg.drift.s_rw = v;
        }
        if let Some(v) = self.hrs_tolerance {
            cfg.drift.hrs_tolerance = v;
        }
        if self.gain_final.is_some() {
            cfg.gain_final = self.gain_final;
        }
        if self.t_pw.is_some() {
            cfg.t_pw = self.t_pw;
        }
        if self.calibrate {
            cfg.calibrate = true;
        }
        if let Some(s) = self.selection {
            cfg.selection = match s {
                SelectionArg::Random => Selection::Random,
                SelectionArg::RoundRobin => Selection::RoundRobin,
            };
        }
        if self.window.is_some() {
            cfg.smoothing_window = self.window;
        }
        if self.stride.is_some() {
            cfg.trace_stride = self.stride;
        }
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Instance file (rudy format)
    #[arg(long, value_name = "PATH")]
    pub instance: PathBuf,
    /// Best-known registry (JSON) used for convergence
    #[arg(long, value_name = "PATH")]
    pub registry: Option<PathBuf>,
    /// Best-known cut, overriding the registry
    #[arg(long)]
    pub best_known: Option<i64>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Per-iteration energy trace CSV
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Result CSV; a manifest is written beside it. Stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LadderArgs {
    /// Instance sizes of the generated ladder
    #[arg(long, value_delimiter = ',', default_value = "25,50,125,250,500,1000,2000")]
    pub sizes: Vec<usize>,
    /// Average degree of generated instances
    #[arg(long, default_value_t = 4.0)]
    pub degree: f64,
    /// Edge weight set of generated instances
    #[arg(long, value_enum, default_value_t = WeightsArg::Pm1)]
    pub weights: WeightsArg,
    /// Instance of size n is generated with seed instance_seed + n
    #[arg(long, default_value_t = 1000)]
    pub instance_seed: u64,
    /// Best-known registry; missing entries are brute-forced (n <= 20) or estimated
    #[arg(long, value_name = "PATH")]
    pub registry: Option<PathBuf>,
    /// Iterations of each proxy best-known run
    #[arg(long, default_value_t = 4_000_000)]
    pub proxy_iters: u64,
    /// Runs of the proxy best-known ensemble
    #[arg(long, default_value_t = 8)]
    pub proxy_runs: usize,
}

#[derive(Args, Debug)]
pub struct SweepDriftArgs {
    #[command(flatten)]
    pub ladder: LadderArgs,
    /// Drift slopes to sweep, kΩ per cycle
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.01")]
    pub mhrs: Vec<f64>,
    /// Schemes compared at each slope
    #[arg(long, value_enum, value_delimiter = ',', default_value = "fixed-input,monitored")]
    pub schemes: Vec<SchemeArg>,
    /// Iteration budget per rung in sweeps of n (capped by --iters); 0 uses --iters throughout
    #[arg(long, default_value_t = 500)]
    pub sweeps: u64,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Result CSV; a manifest is written beside it. Stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepD2dArgs {
    /// Instance file; a random instance is generated when absent
    #[arg(long, value_name = "PATH")]
    pub instance: Option<PathBuf>,
    /// Nodes of the generated instance
    #[arg(long, default_value_t = 125)]
    pub nodes: usize,
    /// Average degree of the generated instance
    #[arg(long, default_value_t = 4.0)]
    pub degree: f64,
    /// Seed of the generated instance
    #[arg(long, default_value_t = 77)]
    pub instance_seed: u64,
    /// Device-to-device spreads to sweep
    #[arg(long = "cv", value_delimiter = ',', default_value = "0,0.1,0.2")]
    pub cv_list: Vec<f64>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Result CSV; a manifest is written beside it. Stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CyclingArgs {
    /// HRS scheme
    #[arg(long, value_enum, default_value_t = SchemeArg::FixedInput)]
    pub scheme: SchemeArg,
    /// Reset-Set cycles per device
    #[arg(long, default_value_t = 100)]
    pub cycles: u64,
    /// Independent devices
    #[arg(long, default_value_t = 100)]
    pub devices: usize,
    /// Read voltage for μ and σ
    #[arg(long, default_value_t = 1.8)]
    pub v_ref: f64,
    /// Initial HRS in kΩ [default: HRS giving μ = -5 at v_ref]
    #[arg(long)]
    pub hrs0: Option<f64>,
    /// HRS drift slope, kΩ per cycle [default: from the parameter file]
    #[arg(long, allow_hyphen_values = true)]
    pub m_hrs: Option<f64>,
    /// HRS random-walk step, kΩ per cycle [default: from the parameter file]
    #[arg(long)]
    pub s_rw: Option<f64>,
    /// Monitored Reset tolerance, fractional [default: from the parameter file]
    #[arg(long)]
    pub hrs_tolerance: Option<f64>,
    /// Master seed
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Per-cycle μ series CSV
    #[arg(long, value_name = "PATH")]
    pub series: Option<PathBuf>,
    /// Result CSV; a manifest is written beside it. Stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Target μ, log10 seconds
    #[arg(long, allow_hyphen_values = true, default_value_t = -5.0)]
    pub mu_target: f64,
    /// Actuator precision, fractional
    #[arg(long, default_value_t = 0.2)]
    pub precision: f64,
    /// Read voltage
    #[arg(long, default_value_t = 1.8)]
    pub v_ref: f64,
    /// Devices to program
    #[arg(long, default_value_t = 1)]
    pub devices: usize,
    /// Device-to-device μ offset spread as a fraction of |mu_target|
    #[arg(long, default_value_t = 0.0)]
    pub cv: f64,
    /// Master seed
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Result CSV; a manifest is written beside it. Stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Measurement CSV with columns v_set,hrs_kohm,t_set_s
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    /// HRS coordinate of the surface
    #[arg(long, value_enum, default_value_t = AxisArg::Linear)]
    pub axis: AxisArg,
    /// Voltage bins of the σ grid
    #[arg(long, default_value_t = 5)]
    pub v_bins: usize,
    /// HRS bins of the σ grid
    #[arg(long, default_value_t = 5)]
    pub r_bins: usize,
    /// Minimum samples per σ cell
    #[arg(long, default_value_t = 5)]
    pub min_per_cell: usize,
    /// Lower bound on σ, decades
    #[arg(long, default_value_t = 0.05)]
    pub sigma_floor: f64,
    /// Write the fitted surface as a parameter file (drift taken from --params)
    #[arg(long, value_name = "PATH")]
    pub params_out: Option<PathBuf>,
    /// Coefficient CSV; a manifest is written beside it. Stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Number of nodes
    #[arg(long)]
    pub nodes: usize,
    /// Average degree
    #[arg(long, default_value_t = 4.0)]
    pub degree: f64,
    /// Edge weight set
    #[arg(long, value_enum, default_value_t = WeightsArg::Pm1)]
    pub weights: WeightsArg,
    /// Generator seed
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Instance file; a manifest is written beside it. Stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BruteArgs {
    /// Instance file (rudy format)
    #[arg(long, value_name = "PATH")]
    pub instance: PathBuf,
    /// Registry to record the exact optimum in
    #[arg(long, value_name = "PATH")]
    pub registry: Option<PathBuf>,
    /// Result CSV; a manifest is written beside it
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run
    pub manifest: PathBuf,
    /// Write the result here instead of the recorded path
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
