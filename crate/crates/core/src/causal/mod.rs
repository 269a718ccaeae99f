//! Causal phase-space densities built from transport maps.
//!
//! A density `|ψ(x)|² δ(p − p̂(x))` reproduces the position distribution by
//! construction and the momentum distribution when `p̂` pushes `|ψ(x)|²` onto
//! `|ψ̃(p)|²`. The monotone (CDF-matching) choice of `p̂` always does; the
//! de Broglie–Bohm choice `p̂ = ∂S/∂x` generally does not.
//!
//! Cumulative distributions are fourth-order accurate interpolants of the
//! grid densities; transport maps are tabulated at the grid nodes.

mod chain;
mod debb;

pub use chain::{context_difference, cross_context_distance, rs_map_2d, ChainOrdering, ChainedMap2D, ConditionalMap};
pub use debb::{debb_gaussian_field, debb_momentum_field, takabayasi_gap, TakabayasiReport, NODE_THRESHOLD};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::waves::{Axis, GridWavefunction, Representation, Sign};
use crate::{Error, Result};

/// Pass threshold for deterministic marginal checks.
pub const QUADRATURE_TOL: f64 = 5e-3;
/// Pass threshold for Monte Carlo marginal checks.
pub const MONTE_CARLO_TOL: f64 = 5e-2;

/// CDF of a density sampled at grid nodes.
///
/// Node values come from the trapezoid rule with the Euler–Maclaurin slope
/// correction, and the CDF between nodes is the cubic Hermite interpolant
/// whose slopes are the sampled densities, limited where needed so that it
/// stays monotone. Both are fourth-order accurate for smooth densities.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    start: f64,
    width: f64,
    values: Vec<f64>,
    /// Hermite end slopes of each interval, in CDF units per interval.
    slopes: Vec<[f64; 2]>,
}

impl Cdf {
    /// Builds the normalized CDF from grid cell masses `ρ_j Δ` on `axis`; also
    /// returns the total of the masses.
    pub fn from_masses(axis: &Axis, masses: &[f64]) -> Result<(Self, f64)> {
        if masses.len() != axis.n {
            return Err(Error::Domain(format!("expected {} cell masses, got {}", axis.n, masses.len())));
        }
        if masses.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::Domain("cell masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        let n = masses.len();
        let mass = |k: isize| if k < 0 || k as usize >= n { 0.0 } else { masses[k as usize] };
        // Δ²ρ'(x_k)/12 in mass units
        let correction = |k: usize| (mass(k as isize + 1) - mass(k as isize - 1)) / 24.0;
        let mut values = Vec::with_capacity(n);
        let mut acc = 0.0;
        values.push(0.0);
        for k in 0..n - 1 {
            let step = 0.5 * (masses[k] + masses[k + 1]) - (correction(k + 1) - correction(k));
            acc += step.max(0.0);
            values.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Domain("cannot build a CDF from zero mass".into()));
        }
        for v in &mut values {
            *v = (*v / acc).min(1.0);
        }
        *values.last_mut().expect("nonempty") = 1.0;
        let slopes = (0..n - 1)
            .map(|k| {
                let secant = values[k + 1] - values[k];
                if !(secant > 0.0) {
                    return [0.0, 0.0];
                }
                let (a, b) = (masses[k] / acc, masses[k + 1] / acc);
                let r = (a * a + b * b).sqrt() / secant;
                let tau = if r > 3.0 { 3.0 / r } else { 1.0 };
                [a * tau, b * tau]
            })
            .collect();
        Ok((Self { start: axis.coord(0), width: axis.spacing, values, slopes }, total))
    }

    /// Grid node `k`.
    pub fn node(&self, k: usize) -> f64 {
        self.start + k as f64 * self.width
    }

    /// CDF values at the grid nodes.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// CDF on interval `k` at fraction `f` and its derivative in `f`.
    fn hermite(&self, k: usize, f: f64) -> (f64, f64) {
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let [s0, s1] = self.slopes[k];
        let (f2, f3) = (f * f, f * f * f);
        let value =
            (2.0 * f3 - 3.0 * f2 + 1.0) * y0 + (f3 - 2.0 * f2 + f) * s0 + (3.0 * f2 - 2.0 * f3) * y1 + (f3 - f2) * s1;
        let slope = 6.0 * (f2 - f) * (y0 - y1) + (3.0 * f2 - 4.0 * f + 1.0) * s0 + (3.0 * f2 - 2.0 * f) * s1;
        (value.clamp(y0, y1), slope)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.start) / self.width;
        if !(t > 0.0) {
            return 0.0;
        }
        let last = self.values.len() - 1;
        if t >= last as f64 {
            return 1.0;
        }
        let k = t.floor() as usize;
        self.hermite(k, t - k as f64).0
    }

    /// Generalized inverse. Levels attained on a flat stretch of the CDF
    /// invert to the midpoint of that stretch.
    pub fn inverse(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let lo = self.values.partition_point(|&v| v < u);
        let hi = self.values.partition_point(|&v| v <= u);
        if lo < hi {
            return 0.5 * (self.node(lo) + self.node(hi - 1));
        }
        // u lies strictly inside interval lo - 1: safeguarded Newton on [0, 1]
        let k = lo - 1;
        let (mut a, mut b) = (0.0, 1.0);
        let mut f = (u - self.values[k]) / (self.values[k + 1] - self.values[k]);
        for _ in 0..100 {
            let (v, d) = self.hermite(k, f);
            if v < u {
                a = f;
            } else if v > u {
                b = f;
            } else {
                break;
            }
            let step = f - (v - u) / d;
            f = if d > 0.0 && step > a && step < b { step } else { 0.5 * (a + b) };
            if b - a < 1e-15 || (f - a).min(b - f) == 0.0 {
                break;
            }
        }
        self.node(k) + f * self.width
    }
}

/// Tabulated monotone transport map `p̂(x)` on the nodes of a position axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneMap {
    pub source: Axis,
    pub target: Axis,
    pub epsilon: Sign,
    /// `p̂` at the source nodes.
    pub values: Vec<f64>,
}

impl MonotoneMap {
    pub fn nodes(&self) -> Vec<f64> {
        self.source.coords()
    }

    /// Linear interpolation between nodes, constant beyond the end nodes.
    pub fn eval(&self, x: f64) -> f64 {
        interpolate(&self.source, &self.values, x)
    }

    /// Nondecreasing for `ε = +1`, nonincreasing for `ε = −1`.
    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| match self.epsilon {
            Sign::Plus => w[1] >= w[0],
            Sign::Minus => w[1] <= w[0],
        })
    }
}

pub(crate) fn interpolate(axis: &Axis, values: &[f64], x: f64) -> f64 {
    let t = x / axis.spacing + (axis.n / 2) as f64;
    if !(t > 0.0) {
        return values[0];
    }
    let last = values.len() - 1;
    if t >= last as f64 {
        return values[last];
    }
    let k = t.floor() as usize;
    let f = t - k as f64;
    values[k] + f * (values[k + 1] - values[k])
}

/// `F_p^{-1}` applied to `F_x(x_j)` (`ε = +1`) or `1 − F_x(x_j)` (`ε = −1`).
pub(crate) fn match_cdfs(source: &Axis, fx: &Cdf, fp: &Cdf, epsilon: Sign) -> Vec<f64> {
    source
        .coords()
        .into_iter()
        .map(|x| {
            let u = fx.eval(x);
            fp.inverse(match epsilon {
                Sign::Plus => u,
                Sign::Minus => 1.0 - u,
            })
        })
        .collect()
}

/// Roy–Singh map of a 1-D position-space wavefunction.
pub fn rs_map_1d(psi: &GridWavefunction, epsilon: Sign) -> Result<MonotoneMap> {
    if psi.dim() != 1 || psi.axis(0).repr != Representation::Position {
        return Err(Error::Domain("rs_map_1d expects a 1-D position-space wavefunction".into()));
    }
    let source = *psi.axis(0);
    let phi = psi.fourier(0)?;
    let target = *phi.axis(0);
    let (fx, _) = Cdf::from_masses(&source, &cell_masses(psi))?;
    let (fp, _) = Cdf::from_masses(&target, &cell_masses(&phi))?;
    Ok(MonotoneMap { source, target, epsilon, values: match_cdfs(&source, &fx, &fp, epsilon) })
}

/// Grid probabilities `|ψ_j|² ΠΔ`.
pub(crate) fn cell_masses(psi: &GridWavefunction) -> Vec<f64> {
    let vol: f64 = psi.axes().iter().map(|a| a.spacing).product();
    psi.values().iter().map(|v| v.norm_sqr() * vol).collect()
}

/// Exact pushforward of the histogram density with CDF `fx` through the
/// piecewise-linear map `(source nodes, values)` onto the cells of `target`.
/// Returns normalized cell probabilities and the probability landing outside
/// the target grid.
pub(crate) fn pushforward(fx: &Cdf, source: &Axis, values: &[f64], epsilon: Sign, target: &Axis) -> (Vec<f64>, f64) {
    let g = |p: f64| -> f64 {
        match epsilon {
            Sign::Plus => {
                // {x : p̂(x) <= p} = (-inf, x*]
                let count = values.partition_point(|&v| v <= p);
                if count == 0 {
                    0.0
                } else if count == values.len() {
                    1.0
                } else {
                    let j = count - 1;
                    let (a, b) = (values[j], values[j + 1]);
                    fx.eval(source.coord(j) + (p - a) / (b - a) * source.spacing)
                }
            }
            Sign::Minus => {
                // {x : p̂(x) <= p} = [x_*, inf)
                let j = values.partition_point(|&v| v > p);
                if j == 0 {
                    1.0
                } else if j == values.len() {
                    0.0
                } else {
                    let (a, b) = (values[j - 1], values[j]);
                    1.0 - fx.eval(source.coord(j - 1) + (a - p) / (a - b) * source.spacing)
                }
            }
        }
    };
    let half = 0.5 * target.spacing;
    let edges: Vec<f64> = (0..=target.n).map(|k| g(target.coord(0) - half + k as f64 * target.spacing)).collect();
    let cells = edges.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let outside = edges[0] + (1.0 - edges[target.n]);
    (cells, outside)
}

/// Probabilities of the interpolated density of `f` on the cells of `axis`.
pub(crate) fn interpolant_cells(f: &Cdf, axis: &Axis) -> Vec<f64> {
    let half = 0.5 * axis.spacing;
    let edges: Vec<f64> = (0..=axis.n).map(|k| f.eval(axis.coord(0) - half + k as f64 * axis.spacing)).collect();
    edges.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Sum of absolute differences plus mass landing off the grid.
pub(crate) fn l1(a: &[f64], b: &[f64], outside: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() + outside
}

/// How reproduced marginals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMethod {
    /// Exact pushforward of the grid histogram through the tabulated map.
    Quadrature,
    /// Seeded sampling with nearest-grid-point histograms.
    MonteCarlo { samples: usize, seed: u64 },
}

impl VerifyMethod {
    pub fn tolerance(&self) -> f64 {
        match self {
            VerifyMethod::Quadrature => QUADRATURE_TOL,
            VerifyMethod::MonteCarlo { .. } => MONTE_CARLO_TOL,
        }
    }
}

/// L1 distance between one reproduced and one quantum distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDistance {
    /// Measurement context, e.g. `"X"`, `"P1X2"`.
    pub ccs: String,
    pub l1: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub method: VerifyMethod,
    pub tolerance: f64,
    pub distances: Vec<MarginalDistance>,
}

impl MarginalReport {
    pub(crate) fn new(method: VerifyMethod, entries: Vec<(String, f64)>) -> Self {
        let tolerance = method.tolerance();
        let distances =
            entries.into_iter().map(|(ccs, l1)| MarginalDistance { ccs, passed: l1 < tolerance, l1 }).collect();
        Self { method, tolerance, distances }
    }

    pub fn passed(&self) -> bool {
        self.distances.iter().all(|d| d.passed)
    }

    pub fn distance(&self, ccs: &str) -> Option<f64> {
        self.distances.iter().find(|d| d.ccs == ccs).map(|d| d.l1)
    }
}

/// Nearest-grid-point cell index, if the point lies on the grid.
pub(crate) fn ngp_index(axis: &Axis, x: f64) -> Option<usize> {
    let k = (x / axis.spacing).round() + (axis.n / 2) as f64;
    if k >= 0.0 && k < axis.n as f64 {
        Some(k as usize)
    } else {
        None
    }
}

/// Normalized histogram plus the fraction of samples off the grid.
pub(crate) fn histogram(axis: &Axis, samples: impl Iterator<Item = f64>) -> (Vec<f64>, f64) {
    let mut h = vec![0.0; axis.n];
    let mut off = 0usize;
    let mut count = 0usize;
    for x in samples {
        count += 1;
        match ngp_index(axis, x) {
            Some(k) => h[k] += 1.0,
            None => off += 1,
        }
    }
    let c = count.max(1) as f64;
    for v in &mut h {
        *v /= c;
    }
    (h, off as f64 / c)
}

/// Position and momentum distances of the density generated by `map`.
pub fn verify_marginals_1d(map: &MonotoneMap, psi: &GridWavefunction, method: VerifyMethod) -> Result<MarginalReport> {
    if psi.dim() != 1 || *psi.axis(0) != map.source {
        return Err(Error::Domain("map was not built on this wavefunction's grid".into()));
    }
    let (fx, _) = Cdf::from_masses(&map.source, &cell_masses(psi))?;
    let (fp, _) = Cdf::from_masses(&map.target, &cell_masses(&psi.fourier(0)?))?;
    let px = interpolant_cells(&fx, &map.source);
    let pp = interpolant_cells(&fp, &map.target);
    let (dx, dp) = match method {
        VerifyMethod::Quadrature => {
            // the position marginal is the base density itself
            let (cells, outside) = pushforward(&fx, &map.source, &map.values, map.epsilon, &map.target);
            (0.0, l1(&cells, &pp, outside))
        }
        VerifyMethod::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..samples).map(|_| fx.inverse(rng.gen::<f64>())).collect();
            let (hx, offx) = histogram(&map.source, xs.iter().copied());
            let (hp, offp) = histogram(&map.target, xs.iter().map(|&x| map.eval(x)));
            (l1(&hx, &px, offx), l1(&hp, &pp, offp))
        }
    };
    Ok(MarginalReport::new(method, vec![("X".into(), dx), ("P".into(), dp)]))
}

/// Distributional check of the "constant along the trajectory" property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    /// L1 distance of transported positions to `|ψ(x, t′)|²`.
    pub position_l1: f64,
    /// L1 distance of `p̂_{t′}` at the transported positions to `|ψ̃(p, t′)|²`.
    pub momentum_l1: f64,
}

/// Samples `x ~ |ψ(x,t)|²`, moves each point along the quantile flow
/// `x′ = F_{t′}^{-1}(F_t(x))` and compares the transported sample and its
/// recomputed map momenta with the quantum distributions at `t′`.
pub fn liouville_surrogate(
    psi_t: &GridWavefunction,
    psi_t2: &GridWavefunction,
    epsilon: Sign,
    samples: usize,
    seed: u64,
) -> Result<LiouvilleReport> {
    let axis = *psi_t.axis(0);
    if psi_t2.axes() != psi_t.axes() || psi_t.dim() != 1 {
        return Err(Error::Domain("both time slices must share one 1-D grid".into()));
    }
    let (f1, _) = Cdf::from_masses(&axis, &cell_masses(psi_t))?;
    let (f2, _) = Cdf::from_masses(&axis, &cell_masses(psi_t2))?;
    let map2 = rs_map_1d(psi_t2, epsilon)?;
    let (fp2, _) = Cdf::from_masses(&map2.target, &cell_masses(&psi_t2.fourier(0)?))?;
    let px2 = interpolant_cells(&f2, &axis);
    let pp2 = interpolant_cells(&fp2, &map2.target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let moved: Vec<f64> = (0..samples).map(|_| f2.inverse(f1.eval(f1.inverse(rng.gen::<f64>())))).collect();
    let (hx, offx) = histogram(&axis, moved.iter().copied());
    let (hp, offp) = histogram(&map2.target, moved.iter().map(|&x| map2.eval(x)));
    Ok(LiouvilleReport { position_l1: l1(&hx, &px2, offx), momentum_l1: l1(&hp, &pp2, offp) })
}
