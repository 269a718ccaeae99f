use std::path::PathBuf;

use bellforge_core::psbell::DEFAULT_LINE_POINTS;
use bellforge_core::waves::Sign;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bellforge", version, about = "Bell-inequality and phase-space density experiments")]
pub struct Cli {
    /// Report format written to standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the command's table as CSV to this path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for randomized search and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CHSH value of a two-photon polarization state.
    Chsh(ChshArgs),
    /// Local-hidden-variable feasibility of a behavior.
    Lhv(LhvArgs),
    /// One-dimensional CDF-matching momentum map and its marginal checks.
    Rs1d(Rs1dArgs),
    /// Two-dimensional chained map and its marginal checks.
    Rs2d(Rs2dArgs),
    /// Phase-space Bell functional of the cutoff states over a list of cutoffs.
    MarginalTheorem(MarginalTheoremArgs),
    /// Wigner function, marginal errors and Hudson diagnostics.
    Wigner(WignerArgs),
    /// Displaced-parity CHSH value of the two-mode squeezed vacuum.
    ParityChsh(ParityChshArgs),
    /// Arthurs–Kelly readout peaks against the CDF-matching map.
    AkCompare(AkCompareArgs),
    /// Grid wavefunction utilities.
    #[command(subcommand)]
    Waves(WavesCommand),
}

#[derive(Debug, Subcommand)]
pub enum WavesCommand {
    /// Tabulate the position or momentum density of a state.
    Dump(DumpArgs),
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    /// psi-plus, psi-minus, singlet, or a JSON file `{"amplitudes": [[re, im] × 4]}`.
    #[arg(long, default_value = "psi-plus")]
    pub state: String,

    /// Analyzer kinds for a, b, a′, b′ (L = linear, E = elliptic).
    #[arg(long, default_value = "LLLL")]
    pub kinds: String,

    /// Angles a,b,a′,b′ (defaults to 0, π/8, π/4, 3π/8).
    #[arg(long, conflicts_with = "optimize", allow_hyphen_values = true)]
    pub angles: Option<String>,

    /// Maximize over all four angles.
    #[arg(long)]
    pub optimize: bool,

    /// Angles are given (and echoed) in degrees.
    #[arg(long)]
    pub degrees: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct LhvArgs {
    /// Behavior file `{"p": {"11": [[p++, p+-], [p-+, p--]], "12": …, "21": …, "22": …}}`.
    #[arg(long)]
    pub behavior: Option<PathBuf>,

    /// Output of `chsh` (path, or `-` for standard input); its state and
    /// settings define the behavior.
    #[arg(long)]
    pub from_state: Option<PathBuf>,
}

/// State selection shared by the grid commands.
#[derive(Debug, Args)]
pub struct WaveArgs {
    /// gaussian, two-gaussian, excited, or a JSON file
    /// `{"n": [N…], "extent": [X…], "values": [[re, im], …]}`.
    #[arg(long, default_value = "gaussian")]
    pub psi: String,

    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x0: f64,

    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub p0: f64,

    /// Initial position spread of the Gaussian packet.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    /// Free evolution time.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,

    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,

    /// Oscillator level for `excited`.
    #[arg(long, default_value_t = 1)]
    pub level: usize,

    /// Grid points per axis (power of two).
    #[arg(long)]
    pub grid: Option<usize>,

    /// Half-width of the position grid (defaults to the balanced grid).
    #[arg(long)]
    pub xmax: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Rs1dArgs {
    #[command(flatten)]
    pub wave: WaveArgs,

    #[arg(long, default_value = "+1", value_parser = parse_sign, allow_hyphen_values = true)]
    pub epsilon: Sign,

    /// Also verify with this many Monte Carlo samples.
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ordering {
    Px,
    Xp,
}

#[derive(Debug, Args)]
pub struct Rs2dArgs {
    /// gaussian (correlated, see --cov and --chirp) or a 2-D JSON state file.
    #[arg(long, default_value = "gaussian")]
    pub psi: String,

    /// Position covariance entries s11,s12,s22.
    #[arg(long, default_value = "1,0.5,0.8", allow_hyphen_values = true)]
    pub cov: String,

    /// Quadratic phase entries c11,c12,c22 of `exp(i xᵀCx/2)`.
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    pub chirp: String,

    #[arg(long, default_value = "+1", value_parser = parse_sign, allow_hyphen_values = true)]
    pub epsilon: Sign,

    #[arg(long, default_value = "+1", value_parser = parse_sign, allow_hyphen_values = true)]
    pub epsilon2: Sign,

    #[arg(long, value_enum, default_value_t = Ordering::Px)]
    pub ordering: Ordering,

    /// Also build the other ordering and report how far the two maps differ.
    #[arg(long)]
    pub compare: bool,

    #[arg(long, default_value_t = 128)]
    pub grid: usize,

    #[arg(long)]
    pub xmax: Option<f64>,

    #[arg(long)]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MarginalTheoremArgs {
    /// Cutoffs, strictly increasing.
    #[arg(long = "L", value_delimiter = ',', required = true)]
    pub ls: Vec<f64>,

    /// Points of the one-dimensional line grid.
    #[arg(long, default_value_t = DEFAULT_LINE_POINTS)]
    pub grid: usize,

    /// Which state's values fill the CSV column.
    #[arg(long, default_value = "+", value_parser = parse_sign, allow_hyphen_values = true)]
    pub sign: Sign,
}

#[derive(Debug, Args)]
pub struct WignerArgs {
    /// gaussian, excited, or psi-plus:L.
    #[arg(long, default_value = "gaussian")]
    pub state: String,

    /// Position spread of `gaussian` (defaults to the ground state).
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    pub sigma: f64,

    #[arg(long, default_value_t = 1)]
    pub level: usize,

    #[arg(long)]
    pub grid: Option<usize>,

    #[arg(long)]
    pub xmax: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ParityChshArgs {
    /// Squeezing parameter.
    #[arg(long)]
    pub r: f64,

    /// Maximize over the displacements (the default without --alphas).
    #[arg(long, conflicts_with = "alphas")]
    pub optimize: bool,

    /// Displacements α, α′, β, β′ as eight numbers re,im,re,im,….
    #[arg(long, allow_hyphen_values = true)]
    pub alphas: Option<String>,

    /// Search all four complex displacements instead of the family with one
    /// undisplaced setting per side.
    #[arg(long, conflicts_with = "alphas")]
    pub unrestricted: bool,

    /// Random starts of the unrestricted search.
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
}

#[derive(Debug, Args)]
pub struct AkCompareArgs {
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t: f64,

    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,

    /// Apparatus window width.
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,

    #[arg(long, default_value = "+1", value_parser = parse_sign, allow_hyphen_values = true)]
    pub epsilon: Sign,

    #[arg(long, default_value_t = 1024)]
    pub grid: usize,

    #[arg(long)]
    pub xmax: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Repr {
    Position,
    Momentum,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    /// Anything accepted by the grid commands, plus psi-plus:L / psi-minus:L.
    #[command(flatten)]
    pub wave: WaveArgs,

    #[arg(long, value_enum, default_value_t = Repr::Position)]
    pub repr: Repr,
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    match s {
        "+" | "+1" | "1" => Ok(Sign::Plus),
        "-" | "-1" => Ok(Sign::Minus),
        other => Err(format!("expected +1 or -1, got {other:?}")),
    }
}
