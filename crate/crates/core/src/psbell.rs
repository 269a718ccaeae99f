//! Phase-space Bell functional over the four position/momentum densities of
//! a two-mode state.
//!
//! For sign observables `sgn ω₁ · sgn ω₂` the functional
//! `S = E_qq + E_qp + E_pq − E_pp` is bounded by 2 in magnitude whenever the
//! four densities are marginals of one nonnegative phase-space density. The
//! states `ψ±` of [`crate::waves::MarginalTheoremState`] push `S` towards
//! `±2√2` as the cutoff `L` grows.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::optimize::polyfit;
use crate::waves::{cutoff_profile, GridDensity, GridWavefunction, MarginalTheoremState, Representation, Sign};
use crate::{Error, Result};

/// `σ_qq, σ_qp, σ_pq, σ_pp` of one two-mode state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadDensities {
    pub qq: GridDensity,
    pub qp: GridDensity,
    pub pq: GridDensity,
    pub pp: GridDensity,
}

impl QuadDensities {
    /// Largest disagreement between single-coordinate marginals shared by
    /// two of the densities (e.g. the `q₁` marginals of `σ_qq` and `σ_qp`).
    pub fn consistency_error(&self) -> f64 {
        let pairs =
            [(&self.qq, &self.qp, 0), (&self.pq, &self.pp, 0), (&self.qq, &self.pq, 1), (&self.qp, &self.pp, 1)];
        pairs
            .iter()
            .map(|(a, b, axis)| {
                a.marginal(*axis).iter().zip(b.marginal(*axis)).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// The four mixed densities via partial Fourier transforms.
pub fn quad_densities(psi: &GridWavefunction) -> Result<QuadDensities> {
    if psi.dim() != 2 || psi.axes().iter().any(|a| a.repr != Representation::Position) {
        return Err(Error::Domain("quad_densities expects a 2-D position-space wavefunction".into()));
    }
    let pq = psi.fourier(0)?;
    let qp = psi.fourier(1)?;
    let pp = pq.fourier(1)?;
    Ok(QuadDensities { qq: psi.density(), qp: qp.density(), pq: pq.density(), pp: pp.density() })
}

/// Sign pattern of a function of one variable, given by its ascending
/// sign-change points and its sign below the first of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPattern {
    pub breakpoints: Vec<f64>,
    pub sign_below: f64,
}

impl SignPattern {
    /// `sgn(ω)`.
    pub fn coordinate() -> Self {
        Self { breakpoints: vec![0.0], sign_below: -1.0 }
    }

    pub fn new(breakpoints: Vec<f64>, sign_below: f64) -> Result<Self> {
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Input("sign-change points must be finite and strictly increasing".into()));
        }
        if sign_below.abs() != 1.0 {
            return Err(Error::Input("sign below the first sign change must be +1 or -1".into()));
        }
        Ok(Self { breakpoints, sign_below })
    }

    fn sign_at(&self, x: f64) -> f64 {
        let flips = self.breakpoints.partition_point(|&b| b < x);
        if flips % 2 == 0 {
            self.sign_below
        } else {
            -self.sign_below
        }
    }

    /// Average of the sign over the cell `[c − w/2, c + w/2]`.
    pub fn cell_average(&self, centre: f64, width: f64) -> f64 {
        let (lo, hi) = (centre - 0.5 * width, centre + 0.5 * width);
        let mut acc = 0.0;
        let mut left = lo;
        for &b in self.breakpoints.iter().filter(|&&b| b > lo && b < hi) {
            acc += self.sign_at(0.5 * (left + b)) * (b - left);
            left = b;
        }
        acc += self.sign_at(0.5 * (left + hi)) * (hi - left);
        acc / width
    }
}

/// `∫ sgn ω₁ sgn ω₂ σ`, cells straddling zero split evenly.
pub fn quadrant_correlator(sigma: &GridDensity) -> f64 {
    let s = SignPattern::coordinate();
    quadrant_correlator_with(sigma, &s, &s)
}

/// Quadrant correlator for general sign patterns on each axis.
pub fn quadrant_correlator_with(sigma: &GridDensity, f1: &SignPattern, f2: &SignPattern) -> f64 {
    let [a0, a1] = [sigma.axes[0], sigma.axes[1]];
    let w0: Vec<f64> = a0.coords().iter().map(|&x| f1.cell_average(x, a0.spacing)).collect();
    let w1: Vec<f64> = a1.coords().iter().map(|&x| f2.cell_average(x, a1.spacing)).collect();
    let mut acc = 0.0;
    for (i, wi) in w0.iter().enumerate() {
        let row = &sigma.values[i * a1.n..(i + 1) * a1.n];
        acc += wi * row.iter().zip(&w1).map(|(v, w)| v * w).sum::<f64>();
    }
    acc * a0.spacing * a1.spacing
}

/// The four quadrant correlators and their Bell combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellCorrelators {
    pub e_qq: f64,
    pub e_qp: f64,
    pub e_pq: f64,
    pub e_pp: f64,
}

impl BellCorrelators {
    /// `E_qq + E_qp + E_pq − E_pp`
    pub fn s(&self) -> f64 {
        self.e_qq + self.e_qp + self.e_pq - self.e_pp
    }
}

pub fn correlators(qd: &QuadDensities) -> BellCorrelators {
    BellCorrelators {
        e_qq: quadrant_correlator(&qd.qq),
        e_qp: quadrant_correlator(&qd.qp),
        e_pq: quadrant_correlator(&qd.pq),
        e_pp: quadrant_correlator(&qd.pp),
    }
}

/// `S = E_qq + E_qp + E_pq − E_pp`.
pub fn s_functional(qd: &QuadDensities) -> f64 {
    correlators(qd).s()
}

/// Default resolution of the one-dimensional engine used for `ψ±`.
pub const DEFAULT_LINE_POINTS: usize = 1 << 20;

/// Two-mode state `Σ_t c_t u_{i_t}(q₁) u_{j_t}(q₂)` with real profiles
/// tabulated on the cell-centred grid `(k + ½)Δ`, `k = −N/2..N/2`.
#[derive(Debug, Clone)]
struct SeparableState {
    spacing: f64,
    profiles: Vec<Vec<f64>>,
    terms: Vec<(Complex64, usize, usize)>,
}

/// Matrix elements `⟨u_i|O|u_k⟩` for the identity, `sgn Q` and `sgn P`.
struct LineOperators {
    identity: Vec<Vec<Complex64>>,
    sgn_q: Vec<Vec<Complex64>>,
    sgn_p: Vec<Vec<Complex64>>,
}

impl SeparableState {
    fn sample(
        n: usize,
        extent: f64,
        profiles: &[&(dyn Fn(f64) -> f64 + Sync)],
        terms: Vec<(Complex64, usize, usize)>,
    ) -> Self {
        let spacing = 2.0 * extent / n as f64;
        let xs: Vec<f64> = (0..n).map(|k| (k as f64 - (n / 2) as f64 + 0.5) * spacing).collect();
        let profiles = profiles.iter().map(|f| xs.iter().map(|&x| f(x)).collect()).collect();
        Self { spacing, profiles, terms }
    }

    fn operators(&self) -> LineOperators {
        let n = self.profiles[0].len();
        let half = n / 2;
        let hilbert: Vec<Vec<f64>> = self.profiles.par_iter().map(|f| discrete_hilbert(f)).collect();
        let k = self.profiles.len();
        let d = self.spacing;
        let mut identity = vec![vec![Complex64::default(); k]; k];
        let mut sgn_q = identity.clone();
        let mut sgn_p = identity.clone();
        for i in 0..k {
            for j in 0..k {
                let (u, v) = (&self.profiles[i], &self.profiles[j]);
                let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * d;
                let neg: f64 = u[..half].iter().zip(&v[..half]).map(|(a, b)| a * b).sum::<f64>() * d;
                let h: f64 = u.iter().zip(&hilbert[j]).map(|(a, b)| a * b).sum::<f64>() * d;
                identity[i][j] = Complex64::new(dot, 0.0);
                sgn_q[i][j] = Complex64::new(dot - 2.0 * neg, 0.0);
                // sgn(P) = i·H for the Hilbert transform H
                sgn_p[i][j] = Complex64::new(0.0, h);
            }
        }
        LineOperators { identity, sgn_q, sgn_p }
    }

    fn correlators(&self) -> BellCorrelators {
        let ops = self.operators();
        let pair = |a: &Vec<Vec<Complex64>>, b: &Vec<Vec<Complex64>>| -> Complex64 {
            let mut acc = Complex64::default();
            for &(c, i, j) in &self.terms {
                for &(c2, i2, j2) in &self.terms {
                    acc += c.conj() * c2 * a[i][i2] * b[j][j2];
                }
            }
            acc
        };
        let norm = pair(&ops.identity, &ops.identity).re;
        BellCorrelators {
            e_qq: pair(&ops.sgn_q, &ops.sgn_q).re / norm,
            e_qp: pair(&ops.sgn_q, &ops.sgn_p).re / norm,
            e_pq: pair(&ops.sgn_p, &ops.sgn_q).re / norm,
            e_pp: pair(&ops.sgn_p, &ops.sgn_p).re / norm,
        }
    }
}

/// `(Hf)_j = Σ_{k≠j} f_k / (π(j − k))` by zero-padded FFT convolution.
fn discrete_hilbert(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let m = 2 * n;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut kernel = vec![Complex64::default(); m];
    for d in 1..n {
        let v = 1.0 / (PI * d as f64);
        kernel[d] = Complex64::new(v, 0.0);
        kernel[m - d] = Complex64::new(-v, 0.0);
    }
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(m, Complex64::default());
    fwd.process(&mut kernel);
    fwd.process(&mut buf);
    for (b, k) in buf.iter_mut().zip(&kernel) {
        *b *= k;
    }
    inv.process(&mut buf);
    buf[..n].iter().map(|v| v.re / m as f64).collect()
}

/// Correlators of `ψ±(L)` from its rank-two separable form
/// `[h⊗h ± e^{iπ/4} g⊗g]/(2√2)` with `h = h_L(|q|)`, `g = sgn(q) h_L(|q|)`.
///
/// One-dimensional matrix elements use a cell-centred grid of `n` points on
/// `[−L, L]` and the discrete Hilbert transform; one Richardson step against
/// `n/2` points removes the leading `O(Δ)` error.
pub fn marginal_state_correlators(state: &MarginalTheoremState, n: usize) -> Result<BellCorrelators> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::Domain(format!("line resolution must be a power of two >= 8, got {n}")));
    }
    let l = state.l;
    let even = move |x: f64| cutoff_profile(x.abs(), l);
    let odd = move |x: f64| x.signum() * cutoff_profile(x.abs(), l);
    let c_even = Complex64::new(1.0 / (2.0 * SQRT_2), 0.0);
    let c_odd = state.phase() / (2.0 * SQRT_2);
    let terms = vec![(c_even, 0, 0), (c_odd, 1, 1)];
    let eval = |points: usize| SeparableState::sample(points, l, &[&even, &odd], terms.clone()).correlators();
    let (fine, coarse) = rayon::join(|| eval(n), || eval(n / 2));
    let r = |a: f64, b: f64| 2.0 * a - b;
    Ok(BellCorrelators {
        e_qq: r(fine.e_qq, coarse.e_qq),
        e_qp: r(fine.e_qp, coarse.e_qp),
        e_pq: r(fine.e_pq, coarse.e_pq),
        e_pp: r(fine.e_pp, coarse.e_pp),
    })
}

/// One row of the marginal-theorem table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalTheoremRow {
    pub l: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub correlators_plus: BellCorrelators,
}

/// Table of `S(ψ±, L)` with the derived verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalTheoremReport {
    pub rows: Vec<MarginalTheoremRow>,
    /// `S(ψ₊, L)` strictly increases along the (ascending) cutoffs.
    pub monotone: bool,
    /// Every `|S|` stays below `2√2 + 1e-6`.
    pub bounded: bool,
    /// `S(ψ₊, L) = −S(ψ₋, L)` within 1e-6 on every row.
    pub antisymmetric: bool,
    /// First cutoff with `S(ψ₊, L) > 2`.
    pub exceeds_2_at: Option<f64>,
    /// Intercept of the least-squares quadratic in `1/ln(L + 1)`.
    pub extrapolated_limit: Option<f64>,
}

/// Evaluates `S(ψ±, L)` for each cutoff (ascending order is required for
/// the monotonicity verdict) at line resolution `n`.
pub fn marginal_theorem_demo(ls: &[f64], n: usize) -> Result<MarginalTheoremReport> {
    if ls.is_empty() {
        return Err(Error::Input("at least one cutoff L is required".into()));
    }
    if ls.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("cutoffs must be strictly increasing".into()));
    }
    let rows: Vec<MarginalTheoremRow> = ls
        .par_iter()
        .map(|&l| -> Result<MarginalTheoremRow> {
            let plus = marginal_state_correlators(&MarginalTheoremState::new(Sign::Plus, l)?, n)?;
            let minus = marginal_state_correlators(&MarginalTheoremState::new(Sign::Minus, l)?, n)?;
            Ok(MarginalTheoremRow { l, s_plus: plus.s(), s_minus: minus.s(), correlators_plus: plus })
        })
        .collect::<Result<_>>()?;
    let ceiling = 2.0 * SQRT_2 + 1e-6;
    let monotone = rows.windows(2).all(|w| w[1].s_plus > w[0].s_plus);
    let bounded = rows.iter().all(|r| r.s_plus.abs() <= ceiling && r.s_minus.abs() <= ceiling);
    let antisymmetric = rows.iter().all(|r| (r.s_plus + r.s_minus).abs() <= 1e-6);
    let exceeds_2_at = rows.iter().find(|r| r.s_plus > 2.0).map(|r| r.l);
    let xs: Vec<f64> = rows.iter().map(|r| 1.0 / (r.l + 1.0).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.s_plus).collect();
    let extrapolated_limit = polyfit(&xs, &ys, 2.min(rows.len().saturating_sub(1))).map(|c| c[0]);
    Ok(MarginalTheoremReport { rows, monotone, bounded, antisymmetric, exceeds_2_at, extrapolated_limit })
}
