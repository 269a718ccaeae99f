//! Two-photon polarization states, linear/elliptic analyzers and the CHSH
//! functional.
//!
//! Amplitudes are stored in the ordered product basis `|xx⟩, |xy⟩, |yx⟩, |yy⟩`
//! (first factor is photon A). An analyzer transmitting `|θ⟩` induces the
//! dichotomic observable `|θ⟩⟨θ| − |θ+π/2⟩⟨θ+π/2|`, where `|θ⟩` is the plane
//! polarized ket `cos θ|x⟩ + sin θ|y⟩` or the elliptic ket
//! `cos θ|x⟩ + i sin θ|y⟩`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::optimize::compass_maximize;
use crate::{Error, Result};

/// Quantum bound on the CHSH functional for two qubits.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;

const NORM_TOL: f64 = 1e-12;

/// Normalized pure state of two photons (two qubits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector4 {
    amps: [Complex64; 4],
}

impl StateVector4 {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let norm_sq = norm_sq(&amps);
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amps })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amps: [Complex64; 4]) -> Result<Self> {
        let n = norm_sq(&amps).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self { amps: amps.map(|a| a / n) })
    }

    /// `(|xx⟩ + |yy⟩)/√2`
    pub fn psi_plus() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { amps: [h, Complex64::default(), Complex64::default(), h] }
    }

    /// `(|xy⟩ − |yx⟩)/√2`
    pub fn psi_minus() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { amps: [Complex64::default(), h, -h, Complex64::default()] }
    }

    /// Spin singlet `(|↑↓⟩ − |↓↑⟩)/√2` with `↑ ↦ x`, `↓ ↦ y`.
    pub fn singlet() -> Self {
        Self::psi_minus()
    }

    /// Product state `|a⟩ ⊗ |b⟩` (each factor normalized internally).
    pub fn product(a: [Complex64; 2], b: [Complex64; 2]) -> Result<Self> {
        Self::normalized([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.amps)
    }

    fn ensure_normalized(&self) -> Result<()> {
        let n = self.norm_sq();
        if (n - 1.0).abs() > NORM_TOL {
            Err(Error::NotNormalized { norm_sq: n })
        } else {
            Ok(())
        }
    }

    /// `⟨Ψ| A ⊗ B |Ψ⟩` for single-photon operators `A` (photon A) and `B`.
    pub fn expectation(&self, a: &Matrix2, b: &Matrix2) -> Complex64 {
        let mut acc = Complex64::default();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        acc += self.amps[2 * i + j].conj() * a[i][k] * b[j][l] * self.amps[2 * k + l];
                    }
                }
            }
        }
        acc
    }
}

fn norm_sq(amps: &[Complex64; 4]) -> f64 {
    amps.iter().map(Complex64::norm_sqr).sum()
}

/// Row-major 2×2 complex matrix.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Transmission basis of an analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnalyzerKind {
    Linear,
    Elliptic,
}

impl AnalyzerKind {
    pub fn letter(self) -> char {
        match self {
            AnalyzerKind::Linear => 'L',
            AnalyzerKind::Elliptic => 'E',
        }
    }
}

/// Analyzer orientation: angle in `[0, π)` plus basis kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub theta: f64,
    pub kind: AnalyzerKind,
}

impl AnalyzerSetting {
    pub fn new(theta: f64, kind: AnalyzerKind) -> Self {
        Self { theta: wrap_pi(theta), kind }
    }

    pub fn linear(theta: f64) -> Self {
        Self::new(theta, AnalyzerKind::Linear)
    }

    pub fn elliptic(theta: f64) -> Self {
        Self::new(theta, AnalyzerKind::Elliptic)
    }

    /// Transmitted ket `|θ⟩` or `|θ⟩_E`.
    pub fn ket(&self) -> [Complex64; 2] {
        ket(self.theta, self.kind)
    }
}

fn wrap_pi(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

fn ket(theta: f64, kind: AnalyzerKind) -> [Complex64; 2] {
    let (s, c) = theta.sin_cos();
    match kind {
        AnalyzerKind::Linear => [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        AnalyzerKind::Elliptic => [Complex64::new(c, 0.0), Complex64::new(0.0, s)],
    }
}

fn outer(u: &[Complex64; 2], v: &[Complex64; 2]) -> Matrix2 {
    [[u[0] * v[0].conj(), u[0] * v[1].conj()], [u[1] * v[0].conj(), u[1] * v[1].conj()]]
}

/// Projector onto the transmitted (`+1`) or blocked (`−1`) channel.
pub fn projector(s: &AnalyzerSetting, outcome_plus: bool) -> Matrix2 {
    let theta = if outcome_plus { s.theta } else { s.theta + FRAC_PI_2 };
    let k = ket(theta, s.kind);
    outer(&k, &k)
}

/// A ±1-valued single-photon observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomicObservable {
    pub matrix: Matrix2,
}

impl DichotomicObservable {
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.matrix;
        m[0][0].im.abs() <= tol && m[1][1].im.abs() <= tol && (m[0][1] - m[1][0].conj()).norm() <= tol
    }

    /// Eigenvalues in ascending order (assumes Hermitian).
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = &self.matrix;
        let half_tr = 0.5 * (m[0][0].re + m[1][1].re);
        let half_diff = 0.5 * (m[0][0].re - m[1][1].re);
        let r = (half_diff * half_diff + m[0][1].norm_sqr()).sqrt();
        (half_tr - r, half_tr + r)
    }
}

/// `|θ⟩⟨θ| − |θ+π/2⟩⟨θ+π/2|` in the `{|x⟩, |y⟩}` basis.
pub fn observable_from_setting(s: &AnalyzerSetting) -> DichotomicObservable {
    let plus = projector(s, true);
    let minus = projector(s, false);
    let mut matrix = plus;
    for i in 0..2 {
        for j in 0..2 {
            matrix[i][j] -= minus[i][j];
        }
    }
    DichotomicObservable { matrix }
}

/// `⟨Ψ| A(sa) ⊗ B(sb) |Ψ⟩`.
pub fn correlation(state: &StateVector4, sa: &AnalyzerSetting, sb: &AnalyzerSetting) -> Result<f64> {
    state.ensure_normalized()?;
    Ok(correlation_unchecked(state, sa, sb))
}

fn correlation_unchecked(state: &StateVector4, sa: &AnalyzerSetting, sb: &AnalyzerSetting) -> f64 {
    let a = observable_from_setting(sa);
    let b = observable_from_setting(sb);
    state.expectation(&a.matrix, &b.matrix).re
}

fn pauli_dot(n: &[f64; 3]) -> Matrix2 {
    [[Complex64::new(n[2], 0.0), Complex64::new(n[0], -n[1])], [Complex64::new(n[0], n[1]), Complex64::new(-n[2], 0.0)]]
}

/// `⟨σ·a ⊗ σ·b⟩` on the spin singlet (equal to `−a·b`).
pub fn singlet_correlation(a: [f64; 3], b: [f64; 3]) -> Result<f64> {
    for (name, v) in [("a", &a), ("b", &b)] {
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("vector {name} is not a unit vector (|{name}| = {n})")));
        }
    }
    Ok(StateVector4::singlet().expectation(&pauli_dot(&a), &pauli_dot(&b)).re)
}

/// Two analyzer settings per side: `a, a′` on photon A and `b, b′` on photon B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: AnalyzerSetting,
    pub a_prime: AnalyzerSetting,
    pub b: AnalyzerSetting,
    pub b_prime: AnalyzerSetting,
}

impl ChshSettings {
    /// Builds settings from angles ordered `a, b, a′, b′` and matching kinds.
    pub fn from_angles(angles: [f64; 4], kinds: ChshKinds) -> Self {
        Self {
            a: AnalyzerSetting::new(angles[0], kinds.a),
            b: AnalyzerSetting::new(angles[1], kinds.b),
            a_prime: AnalyzerSetting::new(angles[2], kinds.a_prime),
            b_prime: AnalyzerSetting::new(angles[3], kinds.b_prime),
        }
    }

    /// Angles ordered `a, b, a′, b′`.
    pub fn angles(&self) -> [f64; 4] {
        [self.a.theta, self.b.theta, self.a_prime.theta, self.b_prime.theta]
    }

    pub fn kinds(&self) -> ChshKinds {
        ChshKinds { a: self.a.kind, b: self.b.kind, a_prime: self.a_prime.kind, b_prime: self.b_prime.kind }
    }
}

/// Analyzer kinds for the four settings.
///
/// The textual form lists them in the order `a, b, a′, b′`, so `"LELE"` puts
/// plane polarizers on photon A and elliptic ones on photon B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChshKinds {
    pub a: AnalyzerKind,
    pub b: AnalyzerKind,
    pub a_prime: AnalyzerKind,
    pub b_prime: AnalyzerKind,
}

impl ChshKinds {
    pub fn uniform(kind: AnalyzerKind) -> Self {
        Self { a: kind, b: kind, a_prime: kind, b_prime: kind }
    }

    /// Side A uses `side_a` for both settings, side B uses `side_b`.
    pub fn sides(side_a: AnalyzerKind, side_b: AnalyzerKind) -> Self {
        Self { a: side_a, a_prime: side_a, b: side_b, b_prime: side_b }
    }
}

impl FromStr for ChshKinds {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed: Vec<AnalyzerKind> = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'L' => Ok(AnalyzerKind::Linear),
                'E' => Ok(AnalyzerKind::Elliptic),
                other => Err(Error::Input(format!("unknown analyzer kind '{other}' (expected L or E)"))),
            })
            .collect::<Result<_>>()?;
        if parsed.len() != 4 {
            return Err(Error::Input(format!("expected 4 analyzer kinds, got {}", parsed.len())));
        }
        Ok(Self { a: parsed[0], b: parsed[1], a_prime: parsed[2], b_prime: parsed[3] })
    }
}

impl fmt::Display for ChshKinds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in [self.a, self.b, self.a_prime, self.b_prime] {
            write!(f, "{}", k.letter())?;
        }
        Ok(())
    }
}

/// The four correlations entering the CHSH functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshCorrelations {
    #[serde(rename = "ab")]
    pub ab: f64,
    #[serde(rename = "ab'")]
    pub ab_prime: f64,
    #[serde(rename = "a'b")]
    pub a_prime_b: f64,
    #[serde(rename = "a'b'")]
    pub a_prime_b_prime: f64,
}

impl ChshCorrelations {
    /// `|P(a,b) − P(a,b′)| + |P(a′,b) + P(a′,b′)|`
    pub fn chsh(&self) -> f64 {
        (self.ab - self.ab_prime).abs() + (self.a_prime_b + self.a_prime_b_prime).abs()
    }
}

pub fn chsh_correlations(state: &StateVector4, s: &ChshSettings) -> Result<ChshCorrelations> {
    state.ensure_normalized()?;
    Ok(ChshCorrelations {
        ab: correlation_unchecked(state, &s.a, &s.b),
        ab_prime: correlation_unchecked(state, &s.a, &s.b_prime),
        a_prime_b: correlation_unchecked(state, &s.a_prime, &s.b),
        a_prime_b_prime: correlation_unchecked(state, &s.a_prime, &s.b_prime),
    })
}

/// CHSH value of `state` under `s`.
pub fn chsh_value(state: &StateVector4, s: &ChshSettings) -> Result<f64> {
    chsh_correlations(state, s).map(|c| c.chsh())
}

/// Grid steps per angle in the global scan of [`maximize_chsh`].
pub const CHSH_SCAN_STEPS: usize = 64;

const EXTRA_STARTS: usize = 4;

/// Maximizes the CHSH value over the four analyzer angles for fixed kinds.
///
/// A global scan with step `π/64` per angle is followed by coordinate-wise
/// refinement down to 1e-8 rad. Extra refinement starts are drawn from a
/// ChaCha stream seeded by `seed`. Equal values resolve to the
/// lexicographically smallest `(a, b, a′, b′)` tuple.
pub fn maximize_chsh(state: &StateVector4, kinds: ChshKinds, seed: u64) -> Result<(ChshSettings, f64)> {
    state.ensure_normalized()?;
    let n = CHSH_SCAN_STEPS;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 * PI / n as f64).collect();

    let table = |ka: AnalyzerKind, kb: AnalyzerKind| -> Vec<f64> {
        let mut t = vec![0.0; n * n];
        for (i, &ta) in grid.iter().enumerate() {
            for (j, &tb) in grid.iter().enumerate() {
                t[i * n + j] =
                    correlation_unchecked(state, &AnalyzerSetting::new(ta, ka), &AnalyzerSetting::new(tb, kb));
            }
        }
        t
    };
    let t_ab = table(kinds.a, kinds.b);
    let t_abp = table(kinds.a, kinds.b_prime);
    let t_apb = table(kinds.a_prime, kinds.b);
    let t_apbp = table(kinds.a_prime, kinds.b_prime);

    // indices ordered (a, b, a', b'); each `i` scanned independently
    let (_, best_idx) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, [i, 0, 0, 0]);
            for j in 0..n {
                let ab = t_ab[i * n + j];
                for k in 0..n {
                    let apb = t_apb[k * n + j];
                    for l in 0..n {
                        let v = (ab - t_abp[i * n + l]).abs() + (apb + t_apbp[k * n + l]).abs();
                        if v > best.0 {
                            best = (v, [i, j, k, l]);
                        }
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, [0; 4]), |acc, cand| if cand.0 > acc.0 { cand } else { acc });

    let objective = |x: &[f64]| {
        let s = ChshSettings::from_angles([x[0], x[1], x[2], x[3]], kinds);
        chsh_value_unchecked(state, &s)
    };
    let step = PI / n as f64;
    let mut starts: Vec<[f64; 4]> = vec![best_idx.map(|i| grid[i])];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..EXTRA_STARTS {
        starts.push([0; 4].map(|_| rng.gen_range(0.0..PI)));
    }

    let mut best: Option<([f64; 4], f64)> = None;
    for x0 in starts {
        let m = compass_maximize(objective, &x0, step, 1e-9, 200_000);
        let angles = [m.x[0], m.x[1], m.x[2], m.x[3]].map(wrap_pi);
        let value = objective(&angles);
        best = Some(match best {
            None => (angles, value),
            Some((ba, bv)) => {
                if value > bv + 1e-12 || ((value - bv).abs() <= 1e-12 && lex_less(&angles, &ba)) {
                    (angles, value)
                } else {
                    (ba, bv)
                }
            }
        });
    }
    let (angles, value) = best.expect("at least one start");
    Ok((ChshSettings::from_angles(angles, kinds), value))
}

fn chsh_value_unchecked(state: &StateVector4, s: &ChshSettings) -> f64 {
    (correlation_unchecked(state, &s.a, &s.b) - correlation_unchecked(state, &s.a, &s.b_prime)).abs()
        + (correlation_unchecked(state, &s.a_prime, &s.b) + correlation_unchecked(state, &s.a_prime, &s.b_prime)).abs()
}

fn lex_less(x: &[f64; 4], y: &[f64; 4]) -> bool {
    for (a, b) in x.iter().zip(y) {
        if a < b {
            return true;
        }
        if a > b {
            return false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn observable_at_zero_is_diagonal() {
        for s in [AnalyzerSetting::linear(0.0), AnalyzerSetting::elliptic(0.0)] {
            let m = observable_from_setting(&s).matrix;
            assert!((m[0][0] - c(1.0, 0.0)).norm() < 1e-15);
            assert!((m[1][1] - c(-1.0, 0.0)).norm() < 1e-15);
            assert!(m[0][1].norm() < 1e-15 && m[1][0].norm() < 1e-15);
        }
    }

    #[test]
    fn circular_analyzer_gives_sigma_y() {
        let m = observable_from_setting(&AnalyzerSetting::elliptic(FRAC_PI_4)).matrix;
        // kets (1, i)/√2 and (−1, i)/√2 → off-diagonals ∓i
        assert!(m[0][0].norm() < 1e-15 && m[1][1].norm() < 1e-15);
        assert!((m[0][1] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((m[1][0] - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn observables_are_dichotomic() {
        for k in 0..50 {
            let theta = k as f64 * 0.137;
            for s in [AnalyzerSetting::linear(theta), AnalyzerSetting::elliptic(theta)] {
                let o = observable_from_setting(&s);
                assert!(o.is_hermitian(1e-12));
                let (lo, hi) = o.eigenvalues();
                assert!((lo + 1.0).abs() < 1e-10 && (hi - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn correlation_examples() {
        let v = correlation(
            &StateVector4::psi_plus(),
            &AnalyzerSetting::elliptic(FRAC_PI_8),
            &AnalyzerSetting::elliptic(0.0),
        )
        .unwrap();
        assert!((v - FRAC_PI_4.cos()).abs() < 1e-12);

        let v = correlation(
            &StateVector4::psi_plus(),
            &AnalyzerSetting::linear(FRAC_PI_8),
            &AnalyzerSetting::elliptic(FRAC_PI_8),
        )
        .unwrap();
        assert!((v - 0.5).abs() < 1e-12);

        for k in 0..20 {
            let t = k as f64 * 0.31;
            let v = correlation(&StateVector4::psi_minus(), &AnalyzerSetting::linear(t), &AnalyzerSetting::linear(t))
                .unwrap();
            assert!((v + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let bad = StateVector4::new([c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(bad, Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn singlet_examples() {
        let z = [0.0, 0.0, 1.0];
        let x = [1.0, 0.0, 0.0];
        assert!((singlet_correlation(z, z).unwrap() + 1.0).abs() < 1e-12);
        assert!(singlet_correlation(z, x).unwrap().abs() < 1e-12);
        let d = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
        assert!((singlet_correlation(z, d).unwrap() + FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(matches!(singlet_correlation([1.0, 1.0, 0.0], z), Err(Error::Domain(_))));
    }

    #[test]
    fn product_state_respects_local_bound() {
        let xx = StateVector4::product([c(1.0, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        for k in 0..200 {
            let t = k as f64;
            let s = ChshSettings::from_angles(
                [0.3 * t, 0.7 * t + 0.1, 1.3 * t, 0.11 * t],
                if k % 2 == 0 { ChshKinds::uniform(AnalyzerKind::Elliptic) } else { "LEEL".parse().unwrap() },
            );
            assert!(chsh_value(&xx, &s).unwrap() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn kinds_parse_in_angle_order() {
        let k: ChshKinds = "lElE".parse().unwrap();
        assert_eq!(k, ChshKinds::sides(AnalyzerKind::Linear, AnalyzerKind::Elliptic));
        assert_eq!(k.to_string(), "LELE");
        assert!("LLE".parse::<ChshKinds>().is_err());
        assert!("LLEX".parse::<ChshKinds>().is_err());
    }

    #[test]
    fn angles_wrap_into_half_open_interval() {
        assert_eq!(AnalyzerSetting::linear(PI).theta, 0.0);
        assert!((AnalyzerSetting::linear(-0.25).theta - (PI - 0.25)).abs() < 1e-15);
        assert!(AnalyzerSetting::linear(-1e-18).theta < PI);
    }
}
