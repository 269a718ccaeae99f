//! Local-hidden-variable feasibility for two settings and two outcomes per
//! side.
//!
//! A behavior admits a local model iff it is the marginal of a joint
//! distribution over the four ±1 outcomes `(r, r′, s, s′)` of
//! `(a, a′, b, b′)`. [`lhv_feasible`] decides this with a small phase-I
//! simplex on the marginal equations; [`brute_force_feasible`] answers the
//! same question by enumerating bases of the 16 deterministic strategies and
//! serves as an independent oracle.

use std::collections::BTreeMap;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::spinor::{projector, ChshSettings, StateVector4};
use crate::{Error, Result};

/// Tolerance on normalization and no-signalling of a behavior.
pub const BEHAVIOR_TOL: f64 = 1e-9;
/// Tolerance on reproduced marginals.
pub const MARGINAL_TOL: f64 = 1e-7;

const PHASE_ONE_TOL: f64 = 1e-9;
const BASIS_TOL: f64 = 1e-10;

/// Maps an outcome index (0 ↦ +1, 1 ↦ −1) to its sign.
pub fn outcome_sign(index: usize) -> f64 {
    if index == 0 {
        1.0
    } else {
        -1.0
    }
}

fn sign_label(index: usize) -> char {
    if index == 0 {
        '+'
    } else {
        '-'
    }
}

/// Probability table `p[i][j][r][s]` for setting `i` on side A (0 = a,
/// 1 = a′), setting `j` on side B (0 = b, 1 = b′) and outcome indices `r, s`
/// (0 = +1, 1 = −1).
pub type ProbTable = [[[[f64; 2]; 2]; 2]; 2];

/// Validated no-signalling behavior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Behavior {
    p: ProbTable,
}

impl Behavior {
    /// Validates nonnegativity, normalization and no-signalling. Inputs that
    /// violate a constraint are rejected, never projected.
    pub fn new(p: ProbTable) -> Result<Self> {
        for i in 0..2 {
            for j in 0..2 {
                let mut total = 0.0;
                for r in 0..2 {
                    for s in 0..2 {
                        let v = p[i][j][r][s];
                        if !v.is_finite() || v < 0.0 {
                            return Err(Error::Input(format!(
                                "nonnegativity violated: p^{{{}{}}}(a{},b{}) = {v}",
                                sign_label(r),
                                sign_label(s),
                                i + 1,
                                j + 1
                            )));
                        }
                        total += v;
                    }
                }
                if (total - 1.0).abs() > BEHAVIOR_TOL {
                    return Err(Error::Input(format!(
                        "normalization violated for (a{},b{}): sum = {total}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        for i in 0..2 {
            for r in 0..2 {
                let m0 = p[i][0][r][0] + p[i][0][r][1];
                let m1 = p[i][1][r][0] + p[i][1][r][1];
                if (m0 - m1).abs() > BEHAVIOR_TOL {
                    return Err(Error::Input(format!(
                        "no-signalling violated on side A: marginal of a{} = {} differs between b1 ({m0}) and b2 ({m1})",
                        i + 1,
                        sign_label(r)
                    )));
                }
            }
        }
        for j in 0..2 {
            for s in 0..2 {
                let m0 = p[0][j][0][s] + p[0][j][1][s];
                let m1 = p[1][j][0][s] + p[1][j][1][s];
                if (m0 - m1).abs() > BEHAVIOR_TOL {
                    return Err(Error::Input(format!(
                        "no-signalling violated on side B: marginal of b{} = {} differs between a1 ({m0}) and a2 ({m1})",
                        j + 1,
                        sign_label(s)
                    )));
                }
            }
        }
        Ok(Self { p })
    }

    /// `p^{r,s} = 1/4` for every pair of settings.
    pub fn uniform() -> Self {
        Self { p: [[[[0.25; 2]; 2]; 2]; 2] }
    }

    /// Behavior of a deterministic strategy with outcomes `a[i]`, `b[j]`
    /// given as outcome indices (0 ↦ +1, 1 ↦ −1).
    pub fn deterministic(a: [usize; 2], b: [usize; 2]) -> Self {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                p[i][j][a[i] & 1][b[j] & 1] = 1.0;
            }
        }
        Self { p }
    }

    pub fn probabilities(&self) -> &ProbTable {
        &self.p
    }

    /// `Σ_{r,s} r·s·p^{r,s}(a_i, b_j)` with zero-based setting indices.
    pub fn correlator(&self, i: usize, j: usize) -> f64 {
        let q = &self.p[i][j];
        q[0][0] - q[0][1] - q[1][0] + q[1][1]
    }

    /// `Σ_{r,s} r·p^{r,s}(a_i, b_1)`.
    pub fn marginal_a(&self, i: usize) -> f64 {
        let q = &self.p[i][0];
        q[0][0] + q[0][1] - q[1][0] - q[1][1]
    }

    /// `Σ_{r,s} s·p^{r,s}(a_1, b_j)`.
    pub fn marginal_b(&self, j: usize) -> f64 {
        let q = &self.p[0][j];
        q[0][0] - q[0][1] + q[1][0] - q[1][1]
    }

    /// Values of the eight CHSH-form functionals, see [`ChshVariant`].
    pub fn chsh_variants(&self) -> [f64; 8] {
        let e = [[self.correlator(0, 0), self.correlator(0, 1)], [self.correlator(1, 0), self.correlator(1, 1)]];
        std::array::from_fn(|v| ChshVariant::from_index(v).evaluate(&e))
    }
}

/// One of the eight CHSH-form functionals
/// `sign·(E11 + E12 + E21 + E22 − 2·E_minus)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChshVariant {
    /// Zero-based `(i, j)` of the correlator carrying the minus sign.
    pub minus: (usize, usize),
    /// Overall sign, `+1` or `−1`.
    pub sign: i8,
}

impl ChshVariant {
    pub fn from_index(v: usize) -> Self {
        let pos = (v / 2) % 4;
        Self { minus: (pos / 2, pos % 2), sign: if v % 2 == 0 { 1 } else { -1 } }
    }

    /// Coefficient of `E_ij`.
    pub fn coefficients(&self) -> [[f64; 2]; 2] {
        let mut c = [[f64::from(self.sign); 2]; 2];
        c[self.minus.0][self.minus.1] = -f64::from(self.sign);
        c
    }

    pub fn evaluate(&self, e: &[[f64; 2]; 2]) -> f64 {
        let c = self.coefficients();
        c[0][0] * e[0][0] + c[0][1] * e[0][1] + c[1][0] * e[1][0] + c[1][1] * e[1][1]
    }
}

/// Joint distribution over `(r, r′, s, s′)`.
///
/// Index bits, most significant first: `r` (a), `r′` (a′), `s` (b), `s′` (b′);
/// a zero bit means outcome `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub q: [f64; 16],
}

impl JointDistribution {
    /// Outcome indices `[r, r′, s, s′]` of joint index `k`.
    pub fn outcomes(k: usize) -> [usize; 4] {
        [(k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1]
    }

    /// The four pairwise marginals as a probability table.
    pub fn marginals(&self) -> ProbTable {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for (k, &w) in self.q.iter().enumerate() {
            let o = Self::outcomes(k);
            for i in 0..2 {
                for j in 0..2 {
                    p[i][j][o[i]][o[2 + j]] += w;
                }
            }
        }
        p
    }

    /// Max-norm distance between the marginals and `b`.
    pub fn marginal_error(&self, b: &Behavior) -> f64 {
        let m = self.marginals();
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for r in 0..2 {
                    for s in 0..2 {
                        worst = worst.max((m[i][j][r][s] - b.p[i][j][r][s]).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Violated CHSH-form inequality witnessing infeasibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub variant: ChshVariant,
    pub value: f64,
}

/// Outcome of a feasibility test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feasibility {
    Feasible(JointDistribution),
    Infeasible(Certificate),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

fn certificate(b: &Behavior) -> Certificate {
    let values = b.chsh_variants();
    let mut best = 0;
    for v in 1..8 {
        if values[v] > values[best] {
            best = v;
        }
    }
    Certificate { variant: ChshVariant::from_index(best), value: values[best] }
}

/// Projective outcome probabilities `⟨Ψ|Π_a^r ⊗ Π_b^s|Ψ⟩` for the four
/// setting pairs.
pub fn quantum_behavior(state: &StateVector4, s: &ChshSettings) -> Result<Behavior> {
    let n = state.norm_sq();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm_sq: n });
    }
    let sides_a = [s.a, s.a_prime];
    let sides_b = [s.b, s.b_prime];
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for r in 0..2 {
                let pa = projector(&sides_a[i], r == 0);
                for t in 0..2 {
                    let pb = projector(&sides_b[j], t == 0);
                    p[i][j][r][t] = state.expectation(&pa, &pb).re.max(0.0);
                }
            }
        }
    }
    Behavior::new(p)
}

/// Decides local realizability with a phase-I simplex over the 16 joint
/// probabilities constrained by the 16 marginal equations.
pub fn lhv_feasible(b: &Behavior) -> Feasibility {
    const M: usize = 16;
    const N: usize = 16;
    // columns: q (N), artificials (M), rhs
    let width = N + M + 1;
    let mut t = vec![vec![0.0; width]; M + 1];
    for i in 0..2 {
        for j in 0..2 {
            for r in 0..2 {
                for s in 0..2 {
                    let row = ((i * 2 + j) * 2 + r) * 2 + s;
                    for k in 0..N {
                        let o = JointDistribution::outcomes(k);
                        if o[i] == r && o[2 + j] == s {
                            t[row][k] = 1.0;
                        }
                    }
                    t[row][N + row] = 1.0;
                    t[row][width - 1] = b.p[i][j][r][s];
                }
            }
        }
    }
    let mut basis: Vec<usize> = (N..N + M).collect();
    // objective row holds reduced costs of minimizing the artificial sum
    for c in 0..width {
        if !(N..N + M).contains(&c) {
            t[M][c] = -(0..M).map(|row| t[row][c]).sum::<f64>();
        }
    }

    let eps = 1e-12;
    loop {
        // Bland: lowest-index column with negative reduced cost
        let Some(enter) = (0..N + M).find(|&c| t[M][c] < -eps) else { break };
        let mut leave: Option<(usize, f64)> = None;
        for row in 0..M {
            let a = t[row][enter];
            if a > eps {
                let ratio = t[row][width - 1] / a;
                match leave {
                    None => leave = Some((row, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - eps || (ratio <= lratio + eps && basis[row] < basis[lr]) {
                            leave = Some((row, ratio));
                        }
                    }
                }
            }
        }
        let Some((pr, _)) = leave else { break };
        let piv = t[pr][enter];
        for v in t[pr].iter_mut() {
            *v /= piv;
        }
        let pivot_row = t[pr].clone();
        for (row, line) in t.iter_mut().enumerate() {
            if row != pr {
                let f = line[enter];
                if f != 0.0 {
                    for (v, pv) in line.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        basis[pr] = enter;
    }

    let infeasibility = -t[M][width - 1];
    if infeasibility > PHASE_ONE_TOL {
        return Feasibility::Infeasible(certificate(b));
    }
    let mut q = [0.0; 16];
    for (row, &var) in basis.iter().enumerate() {
        if var < N {
            q[var] = t[row][width - 1].max(0.0);
        }
    }
    let total: f64 = q.iter().sum();
    for v in &mut q {
        *v /= total;
    }
    Feasibility::Feasible(JointDistribution { q })
}

/// Oracle: searches every basis of 9 of the 16 deterministic strategies
/// (no-signalling coordinates span 9 dimensions) for a nonnegative solution.
/// By Carathéodory's theorem a local model, if any, is supported on one of
/// them.
pub fn brute_force_feasible(b: &Behavior) -> Feasibility {
    // rows: normalization, <A1>, <A2>, <B1>, <B2>, E11, E12, E21, E22
    let columns: Vec<SVector<f64, 9>> = (0..16)
        .map(|k| {
            let o = JointDistribution::outcomes(k).map(outcome_sign);
            SVector::from([1.0, o[0], o[1], o[2], o[3], o[0] * o[2], o[0] * o[3], o[1] * o[2], o[1] * o[3]])
        })
        .collect();
    let y = SVector::<f64, 9>::from([
        1.0,
        b.marginal_a(0),
        b.marginal_a(1),
        b.marginal_b(0),
        b.marginal_b(1),
        b.correlator(0, 0),
        b.correlator(0, 1),
        b.correlator(1, 0),
        b.correlator(1, 1),
    ]);
    for mask in 0u32..1 << 16 {
        if mask.count_ones() != 9 {
            continue;
        }
        let chosen: Vec<usize> = (0..16).filter(|k| mask >> k & 1 == 1).collect();
        let m = SMatrix::<f64, 9, 9>::from_fn(|r, c| columns[chosen[c]][r]);
        let Some(w) = m.lu().solve(&y) else { continue };
        if w.iter().all(|&v| v >= -BASIS_TOL) && (m * w - y).amax() < BASIS_TOL {
            let mut q = [0.0; 16];
            for (idx, &k) in chosen.iter().enumerate() {
                q[k] = w[idx].max(0.0);
            }
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= total);
            return Feasibility::Feasible(JointDistribution { q });
        }
    }
    Feasibility::Infeasible(certificate(b))
}

/// File representation: `{"p": {"11": [[p++, p+-], [p-+, p--]], ...}}` where
/// key `ij` selects settings `a_i`, `b_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorFile {
    pub p: BTreeMap<String, [[f64; 2]; 2]>,
}

impl From<&Behavior> for BehaviorFile {
    fn from(b: &Behavior) -> Self {
        let mut p = BTreeMap::new();
        for i in 0..2 {
            for j in 0..2 {
                p.insert(format!("{}{}", i + 1, j + 1), b.p[i][j]);
            }
        }
        Self { p }
    }
}

impl TryFrom<BehaviorFile> for Behavior {
    type Error = Error;

    fn try_from(f: BehaviorFile) -> Result<Self> {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let key = format!("{}{}", i + 1, j + 1);
                p[i][j] = *f.p.get(&key).ok_or_else(|| Error::Input(format!("missing setting pair \"{key}\"")))?;
            }
        }
        if let Some(extra) = f.p.keys().find(|k| !["11", "12", "21", "22"].contains(&k.as_str())) {
            return Err(Error::Input(format!("unknown setting pair \"{extra}\"")));
        }
        Behavior::new(p)
    }
}
