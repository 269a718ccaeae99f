//! Arthurs–Kelly joint position/momentum readouts modelled as a Gaussian
//! windowed Fourier transform, and their momentum peaks compared with the
//! Roy–Singh map.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::causal::rs_map_1d;
use crate::optimize::polyfit;
use crate::waves::{centred_transform, GridDensity, GridWavefunction, Representation, Sign, NORM_TOL};
use crate::{Error, Result};

/// A scale counts as "much larger" than another beyond this ratio.
pub const REGIME_RATIO: f64 = 10.0;

/// Apparatus preparation: position window of width `b`, momentum window
/// `1/(2b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AkConfig {
    b: f64,
}

impl AkConfig {
    pub fn new(b: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::Domain(format!("apparatus width must be positive, got {b}")));
        }
        Ok(Self { b })
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// `g_b(x) = (2πb²)^{−1/4} e^{−x²/(4b²)}`, so that `g_b²` has variance `b²`.
pub fn window(b: f64, x: f64) -> f64 {
    (2.0 * PI * b * b).powf(-0.25) * (-x * x / (4.0 * b * b)).exp()
}

fn check_input(psi: &GridWavefunction, cfg: &AkConfig) -> Result<()> {
    if psi.dim() != 1 || psi.axis(0).repr != Representation::Position {
        return Err(Error::Domain("readout statistics need a 1-D position-space wavefunction".into()));
    }
    let norm = psi.norm_sq();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sq: norm });
    }
    let axis = psi.axis(0);
    if 8.0 * cfg.b > axis.extent() {
        return Err(Error::Truncation(format!(
            "window width {} does not fit the grid extent {}",
            cfg.b,
            axis.extent()
        )));
    }
    if cfg.b < axis.spacing {
        return Err(Error::Resolution(format!("window width {} is below the grid spacing {}", cfg.b, axis.spacing)));
    }
    Ok(())
}

struct Readout<'a> {
    psi: &'a GridWavefunction,
    b: f64,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl<'a> Readout<'a> {
    fn new(psi: &'a GridWavefunction, cfg: &AkConfig) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(psi.axis(0).n);
        Self { psi, b: cfg.b, fft }
    }

    /// `P(x₁ = x_j, x₂)` on the momentum nodes.
    fn row(&self, j: usize) -> Vec<f64> {
        let axis = self.psi.axis(0);
        let x1 = axis.coord(j);
        let mut buf: Vec<Complex64> =
            self.psi.values().iter().enumerate().map(|(k, v)| v * window(self.b, axis.coord(k) - x1)).collect();
        centred_transform(&self.fft, &mut buf, axis.spacing / (2.0 * PI).sqrt());
        buf.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// `P(x₁, x₂) = |(2π)^{−1/2} ∫ dx ψ(x) g_b(x − x₁) e^{−i x₂ x}|²` with `x₁` on
/// the position nodes and `x₂` on the conjugate momentum nodes.
pub fn ak_distribution(psi: &GridWavefunction, cfg: &AkConfig) -> Result<GridDensity> {
    check_input(psi, cfg)?;
    let readout = Readout::new(psi, cfg);
    let axis = *psi.axis(0);
    let values: Vec<f64> = (0..axis.n).into_par_iter().flat_map_iter(|j| readout.row(j)).collect();
    Ok(GridDensity { axes: vec![axis, axis.conjugate()], values })
}

/// Readout variances next to the smoothed system variances they should equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AkVariances {
    pub var_x1: f64,
    pub var_x2: f64,
    /// `Var_ψ(q) + b²`.
    pub expected_x1: f64,
    /// `Var_ψ(p) + 1/(4b²)`.
    pub expected_x2: f64,
}

impl AkVariances {
    /// Relative residuals of the two variance relations.
    pub fn residuals(&self) -> [f64; 2] {
        [(self.var_x1 - self.expected_x1) / self.expected_x1, (self.var_x2 - self.expected_x2) / self.expected_x2]
    }
}

pub fn ak_variances(psi: &GridWavefunction, cfg: &AkConfig) -> Result<AkVariances> {
    let p = ak_distribution(psi, cfg)?;
    let (_, var_q) = psi.density().moments(0);
    let (_, var_p) = psi.fourier(0)?.density().moments(0);
    let b2 = cfg.b * cfg.b;
    Ok(AkVariances {
        var_x1: p.moments(0).1,
        var_x2: p.moments(1).1,
        expected_x1: var_q + b2,
        expected_x2: var_p + 0.25 / b2,
    })
}

/// Conditions of the good-approximation regime that `var_q`, `var_p` and
/// `b` violate, as human-readable messages (empty when all hold).
pub fn regime_warnings(var_q: f64, var_p: f64, b: f64) -> Vec<String> {
    let (dq, dp) = (var_q.sqrt(), var_p.sqrt());
    let mut out = Vec::new();
    if dq * dp < REGIME_RATIO {
        out.push(format!("Δq·Δp = {:.4} is not much larger than 1", dq * dp));
    }
    if b < REGIME_RATIO / dp {
        out.push(format!("b = {b} is not much larger than 1/Δp = {:.4}", 1.0 / dp));
    }
    if b * REGIME_RATIO > dq {
        out.push(format!("b = {b} is not much smaller than Δq = {dq:.4}"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakRow {
    pub q: f64,
    /// Mode of `P(q, ·)`; `None` when the conditional has no isolated peak.
    pub p_ak: Option<f64>,
    pub p_rs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation from the fitted line.
    pub max_residual: f64,
}

/// Least-squares line through `(xs, ys)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let c = polyfit(xs, ys, 1)?;
    let max_residual = xs.iter().zip(ys).fold(0.0f64, |m, (x, y)| m.max((y - c[0] - c[1] * x).abs()));
    Some(LineFit { slope: c[1], intercept: c[0], max_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakTable {
    pub rows: Vec<PeakRow>,
    pub ak_fit: Option<LineFit>,
    pub rs_fit: Option<LineFit>,
}

/// Momentum peaks of the readout distribution and the Roy–Singh momentum at
/// the position nodes within three standard deviations of the mean of
/// `|ψ|²`.
///
/// The peak is refined by a parabola through the logarithms of the three
/// samples around the grid maximum.
pub fn momentum_peaks(psi: &GridWavefunction, cfg: &AkConfig, epsilon: Sign) -> Result<PeakTable> {
    check_input(psi, cfg)?;
    let map = rs_map_1d(psi, epsilon)?;
    let readout = Readout::new(psi, cfg);
    let axis = *psi.axis(0);
    let p_axis = axis.conjugate();
    let (mean, var) = psi.density().moments(0);
    let half = 3.0 * var.sqrt();
    let nodes: Vec<usize> = (0..axis.n).filter(|&j| (axis.coord(j) - mean).abs() <= half).collect();
    let rows: Vec<PeakRow> = nodes
        .par_iter()
        .map(|&j| {
            let row = readout.row(j);
            let q = axis.coord(j);
            PeakRow { q, p_ak: refine_peak(&row).map(|m| p_axis.coord(0) + m * p_axis.spacing), p_rs: map.eval(q) }
        })
        .collect();
    let (aq, ap): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| r.p_ak.map(|p| (r.q, p))).unzip();
    let qs: Vec<f64> = rows.iter().map(|r| r.q).collect();
    let ps: Vec<f64> = rows.iter().map(|r| r.p_rs).collect();
    Ok(PeakTable { ak_fit: fit_line(&aq, &ap), rs_fit: fit_line(&qs, &ps), rows })
}

/// Fractional index of the maximum of `row`.
fn refine_peak(row: &[f64]) -> Option<f64> {
    let (m, _) =
        row.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best });
    if m == 0 || m + 1 == row.len() || row[m - 1] <= 0.0 || row[m + 1] <= 0.0 {
        return None;
    }
    let (a, c, e) = (row[m - 1].ln(), row[m].ln(), row[m + 1].ln());
    let curvature = a - 2.0 * c + e;
    if !(curvature < 0.0) {
        return None;
    }
    Some(m as f64 + 0.5 * (a - e) / curvature)
}
