use std::io::Read;
use std::path::Path;

use bellforge_core::spinor::StateVector4;
use bellforge_core::waves::*;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::args::WaveArgs;
use crate::error::{CliError, CliResult};

/// Reads JSON from a file, or from standard input for `-`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text).map_err(|source| CliError::Io { path: "<stdin>".into(), source })?;
    } else {
        text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    }
    serde_json::from_str(&text)
        .map_err(|source| CliError::Json { context: format!("parsing {}", path.display()), source })
}

pub fn parse_list(s: &str, len: usize, what: &str) -> CliResult<Vec<f64>> {
    let values = s
        .split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| CliError::Validation(format!("{what}: cannot parse {t:?} as a number")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if values.len() != len {
        return Err(CliError::Validation(format!(
            "{what}: expected {len} comma-separated values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Validation(format!("{what}: values must be finite")));
    }
    Ok(values)
}

/// Two-photon amplitudes in the basis `|xx⟩, |xy⟩, |yx⟩, |yy⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub amplitudes: [[f64; 2]; 4],
}

impl From<&StateVector4> for StateFile {
    fn from(s: &StateVector4) -> Self {
        Self { amplitudes: s.amplitudes().map(|c| [c.re, c.im]) }
    }
}

pub fn spinor_state(name: &str) -> CliResult<StateVector4> {
    Ok(match name {
        "psi-plus" => StateVector4::psi_plus(),
        "psi-minus" => StateVector4::psi_minus(),
        "singlet" => StateVector4::singlet(),
        path => {
            let file: StateFile = read_json(Path::new(path))?;
            StateVector4::new(file.amplitudes.map(|[re, im]| Complex64::new(re, im)))?
        }
    })
}

/// Sampled wavefunction on a centred grid: `n` points per axis spanning
/// `[−extent, extent)`, values row-major. Values are renormalized on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFile {
    pub n: Vec<usize>,
    pub extent: Vec<f64>,
    pub values: Vec<[f64; 2]>,
}

pub fn load_wave(path: &Path) -> CliResult<GridWavefunction> {
    let file: WaveFile = read_json(path)?;
    if file.n.is_empty() || file.n.len() > 2 || file.n.len() != file.extent.len() {
        return Err(CliError::Validation("state file needs one or two entries in both \"n\" and \"extent\"".into()));
    }
    let axes = file
        .n
        .iter()
        .zip(&file.extent)
        .map(|(&n, &x)| Axis::with_extent(Representation::Position, n, x))
        .collect::<Result<Vec<_>, _>>()?;
    let values = file.values.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
    let (psi, _) = GridWavefunction::normalized(axes, values)?;
    Ok(psi)
}

fn position_axis(grid: usize, xmax: Option<f64>) -> CliResult<Axis> {
    Ok(match xmax {
        Some(x) => Axis::with_extent(Representation::Position, grid, x)?,
        None => Axis::balanced(Representation::Position, grid)?,
    })
}

/// Unequal-weight pair of moving packets.
pub const TWO_GAUSSIAN: [GaussianComponent; 2] = [
    GaussianComponent { weight: 0.8, x0: -2.0, p0: 1.0, sigma: 0.7 },
    GaussianComponent { weight: 0.45, x0: 2.5, p0: -0.5, sigma: 1.1 },
];

/// Parses `psi-plus:L` / `psi-minus:L`.
pub fn cutoff_state(name: &str) -> CliResult<Option<(Sign, f64)>> {
    let (sign, rest) = if let Some(rest) = name.strip_prefix("psi-plus:") {
        (Sign::Plus, rest)
    } else if let Some(rest) = name.strip_prefix("psi-minus:") {
        (Sign::Minus, rest)
    } else {
        return Ok(None);
    };
    let l = rest.parse::<f64>().map_err(|_| CliError::Validation(format!("cannot parse cutoff {rest:?}")))?;
    Ok(Some((sign, l)))
}

/// Two-mode cutoff state on a square grid (default 64 points, half-width
/// 1.2 L).
pub fn cutoff_wave(sign: Sign, l: f64, grid: Option<usize>, xmax: Option<f64>) -> CliResult<GridWavefunction> {
    let a = Axis::with_extent(Representation::Position, grid.unwrap_or(64), xmax.unwrap_or(1.2 * l))?;
    Ok(psi_marginal_state(sign, l, [a, a])?.0)
}

pub fn build_wave(args: &WaveArgs, default_grid: usize) -> CliResult<GridWavefunction> {
    if let Some((sign, l)) = cutoff_state(&args.psi)? {
        return cutoff_wave(sign, l, args.grid, args.xmax);
    }
    let axis = || position_axis(args.grid.unwrap_or(default_grid), args.xmax);
    Ok(match args.psi.as_str() {
        "gaussian" => gaussian_packet(axis()?, args.x0, args.p0, args.sigma, args.t, args.mass)?,
        "two-gaussian" => gaussian_superposition(axis()?, &TWO_GAUSSIAN)?,
        "excited" => oscillator_state(axis()?, args.level)?,
        path => load_wave(Path::new(path))?,
    })
}

pub fn require_dim(psi: &GridWavefunction, dim: usize) -> CliResult<()> {
    if psi.dim() != dim {
        return Err(CliError::Validation(format!("expected a {dim}-D state, got {}-D", psi.dim())));
    }
    Ok(())
}
