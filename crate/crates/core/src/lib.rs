//! Numerics for Bell-type correlation experiments and phase-space
//! realizations of quantum states.
//!
//! The crate is organised by experiment:
//!
//! * [`spinor`]: two-photon polarization states, linear and elliptic
//!   analyzers, CHSH evaluation and maximization.
//! * [`lhv`]: local-hidden-variable feasibility of 2×2-setting behaviors.
//! * [`waves`]: grid wavefunctions and the centred unitary Fourier transform.
//! * [`causal`]: de Broglie–Bohm momentum fields and CDF-matching
//!   (Roy–Singh) transport maps in one and two dimensions.
//! * [`psbell`]: phase-space Bell functional over the four mixed
//!   position/momentum densities of a two-dimensional state.
//! * [`wigner`]: Wigner transforms, Hudson diagnostics and displaced-parity
//!   correlations of the two-mode squeezed vacuum.
//! * [`akmeas`]: Arthurs–Kelly joint position/momentum readout statistics.
//!
//! Units are natural throughout (ħ = 1).

pub mod akmeas;
pub mod causal;
mod error;
pub mod lhv;
pub mod optimize;
pub mod psbell;
pub mod spinor;
pub mod waves;
pub mod wigner;

pub use error::{Error, Result};
