//! Grid wavefunctions in one and two dimensions.
//!
//! Every axis carries a representation label and a centred grid
//! `x_j = (j − N/2)Δ`, `j = 0..N`. The Fourier transform maps a position axis
//! of spacing `Δ` onto a momentum axis of spacing `2π/(NΔ)` with the unitary
//! convention `ψ̃(p) = (2π)^{-1/2} ∫ e^{−ipx} ψ(x) dx` (ħ = 1), discretized so
//! that the grid norm `Σ|ψ|²ΠΔ` is preserved exactly.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on the grid norm of a constructed wavefunction.
pub const NORM_TOL: f64 = 1e-8;

/// A ± choice (state sign, reflection parameter ε, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(Sign::Plus)
        } else if v == -1.0 {
            Ok(Sign::Minus)
        } else {
            Err(Error::Input(format!("sign must be +1 or -1, got {v}")))
        }
    }
}

/// Label of the variable sampled along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Representation {
    Position,
    Momentum,
}

impl Representation {
    pub fn conjugate(self) -> Self {
        match self {
            Representation::Position => Representation::Momentum,
            Representation::Momentum => Representation::Position,
        }
    }
}

/// Centred uniform grid along one axis.
///
/// Equality allows a relative spacing difference of 1e-12 so that an axis
/// survives a round trip through its conjugate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Axis {
    pub repr: Representation,
    pub n: usize,
    pub spacing: f64,
}

impl PartialEq for Axis {
    fn eq(&self, other: &Self) -> bool {
        self.repr == other.repr
            && self.n == other.n
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing.abs().max(other.spacing.abs())
    }
}

impl Axis {
    /// `n` must be a power of two no smaller than 4.
    pub fn new(repr: Representation, n: usize, spacing: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Domain(format!("grid size must be a power of two >= 4, got {n}")));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Domain(format!("grid spacing must be positive, got {spacing}")));
        }
        Ok(Self { repr, n, spacing })
    }

    /// Grid covering `[−extent, extent)`.
    pub fn with_extent(repr: Representation, n: usize, extent: f64) -> Result<Self> {
        Self::new(repr, n, 2.0 * extent / n as f64)
    }

    /// Grid whose conjugate has the same spacing (`Δ = √(2π/n)`).
    pub fn balanced(repr: Representation, n: usize) -> Result<Self> {
        Self::new(repr, n, (2.0 * PI / n as f64).sqrt())
    }

    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Half-width `NΔ/2` of the grid.
    pub fn extent(&self) -> f64 {
        (self.n / 2) as f64 * self.spacing
    }

    /// Axis produced by a Fourier transform.
    pub fn conjugate(&self) -> Self {
        Self { repr: self.repr.conjugate(), n: self.n, spacing: 2.0 * PI / (self.n as f64 * self.spacing) }
    }
}

/// Complex samples of a wavefunction on a 1-D or 2-D grid, stored row-major
/// (`index = i0·n1 + i1`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    axes: Vec<Axis>,
    values: Vec<Complex64>,
}

fn check_axes(axes: &[Axis], len: usize) -> Result<()> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::Domain(format!("only 1-D and 2-D grids are supported, got {} axes", axes.len())));
    }
    let expected: usize = axes.iter().map(|a| a.n).product();
    if expected != len {
        return Err(Error::Domain(format!("expected {expected} samples, got {len}")));
    }
    Ok(())
}

fn cell_volume(axes: &[Axis]) -> f64 {
    axes.iter().map(|a| a.spacing).product()
}

impl GridWavefunction {
    /// Wraps samples that are already normalized on the grid.
    pub fn new(axes: Vec<Axis>, values: Vec<Complex64>) -> Result<Self> {
        check_axes(&axes, values.len())?;
        let norm_sq = values.iter().map(Complex64::norm_sqr).sum::<f64>() * cell_volume(&axes);
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { axes, values })
    }

    /// Rescales samples to unit grid norm and returns the norm before scaling.
    pub fn normalized(axes: Vec<Axis>, mut values: Vec<Complex64>) -> Result<(Self, f64)> {
        check_axes(&axes, values.len())?;
        let norm_sq = values.iter().map(Complex64::norm_sqr).sum::<f64>() * cell_volume(&axes);
        if !(norm_sq > 0.0) || !norm_sq.is_finite() {
            return Err(Error::Domain("wavefunction has zero or non-finite norm".into()));
        }
        let s = norm_sq.sqrt().recip();
        for v in &mut values {
            *v *= s;
        }
        Ok((Self { axes, values }, norm_sq))
    }

    /// Samples `f` on a 1-D grid and normalizes.
    pub fn from_fn_1d(axis: Axis, f: impl Fn(f64) -> Complex64) -> Result<(Self, f64)> {
        let values = axis.coords().into_iter().map(f).collect();
        Self::normalized(vec![axis], values)
    }

    /// Samples `f` on a 2-D grid and normalizes.
    pub fn from_fn_2d(axes: [Axis; 2], f: impl Fn(f64, f64) -> Complex64) -> Result<(Self, f64)> {
        let c0 = axes[0].coords();
        let c1 = axes[1].coords();
        let mut values = Vec::with_capacity(c0.len() * c1.len());
        for &u in &c0 {
            for &v in &c1 {
                values.push(f(u, v));
            }
        }
        Self::normalized(axes.to_vec(), values)
    }

    /// Tensor product of two 1-D wavefunctions.
    pub fn product(a: &GridWavefunction, b: &GridWavefunction) -> Result<Self> {
        if a.dim() != 1 || b.dim() != 1 {
            return Err(Error::Domain("product expects two 1-D wavefunctions".into()));
        }
        let mut values = Vec::with_capacity(a.values.len() * b.values.len());
        for u in &a.values {
            for v in &b.values {
                values.push(u * v);
            }
        }
        Ok(Self { axes: vec![a.axes[0], b.axes[0]], values })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(Complex64::norm_sqr).sum::<f64>() * cell_volume(&self.axes)
    }

    /// Fourier transform along `axis`, in the direction set by its label.
    pub fn fourier(&self, axis: usize) -> Result<Self> {
        if axis >= self.dim() {
            return Err(Error::Domain(format!("axis {axis} out of range for a {}-D grid", self.dim())));
        }
        let ax = self.axes[axis];
        let n = ax.n;
        let forward = ax.repr == Representation::Position;
        let mut planner = FftPlanner::new();
        let fft = if forward { planner.plan_fft_forward(n) } else { planner.plan_fft_inverse(n) };
        // the global (−1)^{N/2} phase is 1 because N/2 is even
        let scale = ax.spacing / (2.0 * PI).sqrt();

        let mut out = self.values.clone();
        let (outer, stride) =
            if self.dim() == 1 || axis == 1 { (self.values.len() / n, 1) } else { (1, self.axes[1].n) };
        let lines: Vec<(usize, usize)> = if stride == 1 {
            (0..outer).map(|o| (o * n, 1)).collect()
        } else {
            (0..stride).map(|c| (c, stride)).collect()
        };
        let mut buf = vec![Complex64::default(); n];
        for (start, step) in lines {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = self.values[start + k * step];
            }
            centred_transform(&fft, &mut buf, scale);
            for (k, b) in buf.iter().enumerate() {
                out[start + k * step] = *b;
            }
        }
        let mut axes = self.axes.clone();
        axes[axis] = ax.conjugate();
        Ok(Self { axes, values: out })
    }

    /// `ψ*(−x)` on a 1-D grid (the unpaired node `−NΔ/2` maps to itself).
    pub fn reflected_conjugate(&self) -> Result<Self> {
        if self.dim() != 1 {
            return Err(Error::Domain("reflection is defined for 1-D grids".into()));
        }
        let n = self.axes[0].n;
        let values = (0..n).map(|j| self.values[(n - j) % n].conj()).collect();
        Ok(Self { axes: self.axes.clone(), values })
    }

    /// `|ψ|²` on the same grid.
    pub fn density(&self) -> GridDensity {
        GridDensity { axes: self.axes.clone(), values: self.values.iter().map(Complex64::norm_sqr).collect() }
    }
}

/// `(−1)^j` pre/post phases turn a cyclic FFT into the centred transform.
pub(crate) fn centred_transform(fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64], scale: f64) {
    for (j, v) in buf.iter_mut().enumerate() {
        if j % 2 == 1 {
            *v = -*v;
        }
    }
    fft.process(buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let s = if k % 2 == 1 { -scale } else { scale };
        *v *= s;
    }
}

/// Nonnegative density on a 1-D or 2-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
}

impl GridDensity {
    /// Riemann sum `Σρ·ΠΔ`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * cell_volume(&self.axes)
    }

    /// Density of one coordinate, integrated over the other.
    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        if self.axes.len() == 1 {
            return self.values.clone();
        }
        let (n0, n1) = (self.axes[0].n, self.axes[1].n);
        if axis == 0 {
            (0..n0).map(|i| self.values[i * n1..(i + 1) * n1].iter().sum::<f64>() * self.axes[1].spacing).collect()
        } else {
            (0..n1).map(|j| (0..n0).map(|i| self.values[i * n1 + j]).sum::<f64>() * self.axes[0].spacing).collect()
        }
    }

    /// Mean and variance of the coordinate along `axis`.
    pub fn moments(&self, axis: usize) -> (f64, f64) {
        let m = self.marginal(axis);
        let ax = &self.axes[axis];
        let d = ax.spacing;
        let mean: f64 = m.iter().enumerate().map(|(j, &v)| ax.coord(j) * v).sum::<f64>() * d;
        let var: f64 = m.iter().enumerate().map(|(j, &v)| (ax.coord(j) - mean).powi(2) * v).sum::<f64>() * d;
        (mean, var)
    }
}

/// Analytic free-particle Gaussian packet at time `t`, sampled on a position
/// axis. Fails if the grid truncates more than 1e-6 of the norm.
pub fn gaussian_packet(axis: Axis, x0: f64, p0: f64, sigma: f64, t: f64, mass: f64) -> Result<GridWavefunction> {
    if axis.repr != Representation::Position {
        return Err(Error::Domain("gaussian_packet samples a position axis".into()));
    }
    if !(sigma > 0.0) || !(mass > 0.0) {
        return Err(Error::Domain(format!("sigma and mass must be positive (sigma = {sigma}, mass = {mass})")));
    }
    let (psi, norm_sq) = GridWavefunction::from_fn_1d(axis, |x| gaussian_amplitude(x, x0, p0, sigma, t, mass))?;
    if 1.0 - norm_sq > 1e-6 {
        return Err(Error::Truncation(format!(
            "grid [-{:.4}, {:.4}) misses {:.3e} of the packet norm",
            axis.extent(),
            axis.extent(),
            1.0 - norm_sq
        )));
    }
    Ok(psi)
}

/// `ψ(x, t)` of a free Gaussian with initial width `σ`, centre `x0` and
/// momentum `p0`.
pub fn gaussian_amplitude(x: f64, x0: f64, p0: f64, sigma: f64, t: f64, mass: f64) -> Complex64 {
    let tau = t / (2.0 * mass * sigma * sigma);
    let z = Complex64::new(1.0, tau);
    let v = p0 / mass;
    let d = x - x0 - v * t;
    let pre = (2.0 * PI * sigma * sigma).powf(-0.25) / z.sqrt();
    let exponent = -d * d / (4.0 * sigma * sigma * z) + Complex64::new(0.0, p0 * (x - 0.5 * v * t));
    pre * exponent.exp()
}

/// Weighted Gaussian component of a superposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
}

/// Normalized superposition `Σ w_k g_k(x)` of Gaussians at `t = 0`.
pub fn gaussian_superposition(axis: Axis, parts: &[GaussianComponent]) -> Result<GridWavefunction> {
    if parts.iter().any(|g| !(g.sigma > 0.0)) {
        return Err(Error::Domain("component widths must be positive".into()));
    }
    let (psi, _) = GridWavefunction::from_fn_1d(axis, |x| {
        parts.iter().map(|g| g.weight * gaussian_amplitude(x, g.x0, g.p0, g.sigma, 0.0, 1.0)).sum()
    })?;
    Ok(psi)
}

/// Unit-frequency oscillator eigenstate `|n⟩` (`ψ_0 = π^{-1/4} e^{−x²/2}`).
pub fn oscillator_state(axis: Axis, level: usize) -> Result<GridWavefunction> {
    let (psi, _) = GridWavefunction::from_fn_1d(axis, |x| Complex64::new(oscillator_amplitude(level, x), 0.0))?;
    Ok(psi)
}

/// Normalized Hermite function via the stable three-term recursion.
pub fn oscillator_amplitude(level: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    for k in 0..level {
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * x * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// 2-D Gaussian `exp(−¼ xᵀΣ⁻¹x + ½ i xᵀCx)` whose position density has
/// covariance `Σ = cov`; the symmetric `chirp` matrix `C` adds a quadratic
/// phase (zero gives a real state).
pub fn correlated_gaussian_2d(axes: [Axis; 2], cov: [[f64; 2]; 2], chirp: [[f64; 2]; 2]) -> Result<GridWavefunction> {
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    if !(cov[0][0] > 0.0) || !(det > 0.0) || cov[0][1] != cov[1][0] {
        return Err(Error::Domain("covariance must be symmetric positive definite".into()));
    }
    if chirp[0][1] != chirp[1][0] {
        return Err(Error::Domain("chirp matrix must be symmetric".into()));
    }
    let inv = [[cov[1][1] / det, -cov[0][1] / det], [-cov[1][0] / det, cov[0][0] / det]];
    let quad = |m: &[[f64; 2]; 2], u: f64, v: f64| m[0][0] * u * u + 2.0 * m[0][1] * u * v + m[1][1] * v * v;
    let (psi, norm_sq) = GridWavefunction::from_fn_2d(axes, |u, v| {
        Complex64::new(-0.25 * quad(&inv, u, v), 0.5 * quad(&chirp, u, v)).exp()
    })?;
    let analytic = 2.0 * PI * det.sqrt();
    if ((norm_sq - analytic) / analytic).abs() > 1e-6 {
        return Err(Error::Truncation(format!(
            "grid truncates the 2-D Gaussian (relative norm deficit {:.3e})",
            1.0 - norm_sq / analytic
        )));
    }
    Ok(psi)
}

/// Radial profile `h_L(q) = θ(L − q)/√((q + 1) ln(L + 1))` with `θ(0) = 1/2`.
pub fn cutoff_profile(q: f64, l: f64) -> f64 {
    if q < 0.0 || q > l {
        return 0.0;
    }
    let h = ((q + 1.0) * (l + 1.0).ln()).sqrt().recip();
    if q == l {
        0.5 * h
    } else {
        h
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Two-mode state `[1 ± e^{iπ/4} sgn q₁ sgn q₂]/(2√2) · h_L(|q₁|) h_L(|q₂|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalTheoremState {
    pub sign: Sign,
    pub l: f64,
}

impl MarginalTheoremState {
    pub fn new(sign: Sign, l: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Domain(format!("cutoff L must be positive, got {l}")));
        }
        Ok(Self { sign, l })
    }

    /// Interference coefficient `± e^{iπ/4}`.
    pub fn phase(&self) -> Complex64 {
        Complex64::from_polar(self.sign.value(), PI / 4.0)
    }

    pub fn amplitude(&self, q1: f64, q2: f64) -> Complex64 {
        let env = cutoff_profile(q1.abs(), self.l) * cutoff_profile(q2.abs(), self.l);
        if env == 0.0 {
            return Complex64::default();
        }
        (Complex64::new(1.0, 0.0) + self.phase() * (sgn(q1) * sgn(q2))) * (env / (2.0 * 2f64.sqrt()))
    }
}

/// Samples `ψ±` on a 2-D position grid, renormalizes, and returns the raw
/// grid norm alongside.
pub fn psi_marginal_state(sign: Sign, l: f64, axes: [Axis; 2]) -> Result<(GridWavefunction, f64)> {
    let state = MarginalTheoremState::new(sign, l)?;
    for a in &axes {
        if a.repr != Representation::Position {
            return Err(Error::Domain("psi_marginal_state samples position axes".into()));
        }
        if a.extent() <= l {
            return Err(Error::Domain(format!("grid extent {} must exceed the cutoff L = {l}", a.extent())));
        }
    }
    GridWavefunction::from_fn_2d(axes, |u, v| state.amplitude(u, v))
}
