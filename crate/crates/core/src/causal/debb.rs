//! de Broglie–Bohm momentum field and the mismatch of its momentum marginal.

use serde::{Deserialize, Serialize};

use super::{cell_masses, ngp_index};
use crate::waves::{GridWavefunction, Representation};
use crate::{Error, Result};

/// Amplitude below which the phase (and hence the field) is undefined.
pub const NODE_THRESHOLD: f64 = 1e-12;

/// `p_dBB(x) = ∂S/∂x` on the grid nodes from the central phase difference
/// `arg(ψ_{k+1} ψ*_{k−1})/(2Δ)` (one-sided at the ends). Nodes where the
/// amplitude or a neighbour used in the stencil falls below
/// [`NODE_THRESHOLD`] are `None`.
pub fn debb_momentum_field(psi: &GridWavefunction) -> Result<Vec<Option<f64>>> {
    if psi.dim() != 1 || psi.axis(0).repr != Representation::Position {
        return Err(Error::Domain("the momentum field needs a 1-D position-space wavefunction".into()));
    }
    let v = psi.values();
    let d = psi.axis(0).spacing;
    let n = v.len();
    let ok = |k: usize| v[k].norm() >= NODE_THRESHOLD;
    Ok((0..n)
        .map(|k| {
            let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n - 1));
            if !ok(k) || !ok(lo) || !ok(hi) {
                return None;
            }
            Some((v[hi] * v[lo].conj()).arg() / ((hi - lo) as f64 * d))
        })
        .collect())
}

/// Analytic field of the free Gaussian packet of
/// [`crate::waves::gaussian_amplitude`].
pub fn debb_gaussian_field(x: f64, x0: f64, p0: f64, sigma: f64, t: f64, mass: f64) -> f64 {
    let s4 = sigma.powi(4);
    p0 + (x - x0 - p0 / mass * t) * t / (4.0 * mass * s4 + t * t / mass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TakabayasiReport {
    /// L1 distance between the field pushforward and `|ψ̃|²`.
    pub gap: f64,
    /// Probability on nodes where the field is undefined.
    pub excluded_mass: f64,
}

/// L1 distance between the nearest-grid-point pushforward of `|ψ(x)|²`
/// under `p_dBB` and the momentum distribution `|ψ̃(p)|²`. Mass mapped off the
/// momentum grid counts as mismatch.
pub fn takabayasi_gap(psi: &GridWavefunction) -> Result<TakabayasiReport> {
    let field = debb_momentum_field(psi)?;
    let phi = psi.fourier(0)?;
    let target = *phi.axis(0);
    let px = cell_masses(psi);
    let pp = cell_masses(&phi);
    let mut pushed = vec![0.0; target.n];
    let mut excluded = 0.0;
    let mut outside = 0.0;
    for (m, f) in px.iter().zip(&field) {
        match f.and_then(|p| ngp_index(&target, p)) {
            Some(k) => pushed[k] += m,
            None if f.is_none() => excluded += m,
            None => outside += m,
        }
    }
    let kept: f64 = 1.0 - excluded;
    let gap = pushed.iter().zip(&pp).map(|(a, b)| (a / kept - b).abs()).sum::<f64>() + outside / kept;
    Ok(TakabayasiReport { gap, excluded_mass: excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waves::{gaussian_packet, Axis};

    fn axis() -> Axis {
        Axis::balanced(Representation::Position, 1024).unwrap()
    }

    #[test]
    fn real_gaussian_has_zero_field() {
        let psi = gaussian_packet(axis(), 0.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        for f in debb_momentum_field(&psi).unwrap().into_iter().flatten() {
            assert!(f.abs() < 1e-12);
        }
    }

    #[test]
    fn spreading_gaussian_matches_analytic_field() {
        let (sigma, t, p0) = (1.0, 1.3, 0.4);
        let psi = gaussian_packet(axis(), 0.2, p0, sigma, t, 1.0).unwrap();
        let field = debb_momentum_field(&psi).unwrap();
        for (x, f) in psi.axis(0).coords().iter().zip(&field) {
            if x.abs() < 4.0 {
                let exact = debb_gaussian_field(*x, 0.2, p0, sigma, t, 1.0);
                // central differences of a quadratic phase are exact up to the 2π wrap
                assert!((f.unwrap() - exact).abs() < 1e-9, "x = {x}");
            }
        }
    }

    #[test]
    fn nodes_are_undefined() {
        let psi = crate::waves::oscillator_state(axis(), 1).unwrap();
        let field = debb_momentum_field(&psi).unwrap();
        let centre = psi.axis(0).n / 2;
        assert!(field[centre].is_none());
    }
}
