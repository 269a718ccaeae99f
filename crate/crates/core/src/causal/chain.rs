//! Chained conditional transport maps for two degrees of freedom.
//!
//! Ordering [`ChainOrdering::Px`] follows the contexts
//! `(X₁X₂) → (P₁X₂) → (P₁P₂)`: first `p̂₁(x₁|x₂)` matches, at fixed `x₂`,
//! the conditional CDFs of `|ψ(ε₁x₁, x₂)|²` and `|ψ(p₁, x₂)|²`; then
//! `p̂₂(x₂|p₁)` matches those of `|ψ(p₁, ε₂x₂)|²` and `|ψ(p₁, p₂)|²`.
//! [`ChainOrdering::Xp`] transforms the second coordinate first.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    cell_masses, interpolant_cells, interpolate, l1, match_cdfs, ngp_index, pushforward, Cdf, MarginalReport,
    VerifyMethod,
};
use crate::waves::{Axis, GridWavefunction, Representation, Sign};
use crate::{Error, Result};

/// Largest tolerated disagreement between the position and momentum mass of
/// one conditional slice.
pub const SLICE_MISMATCH_TOL: f64 = 1e-5;

/// Slices lighter than this fraction of the heaviest slice get a zero map.
const EMPTY_SLICE: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainOrdering {
    /// `(X₁X₂) → (P₁X₂) → (P₁P₂)`
    Px,
    /// `(X₁X₂) → (X₁P₂) → (P₁P₂)`
    Xp,
}

impl ChainOrdering {
    /// Axis transformed first.
    fn first_axis(self) -> usize {
        match self {
            ChainOrdering::Px => 0,
            ChainOrdering::Xp => 1,
        }
    }

    /// Context label of the intermediate and of the skipped mixed context.
    pub fn contexts(self) -> (&'static str, &'static str) {
        match self {
            ChainOrdering::Px => ("P1X2", "X1P2"),
            ChainOrdering::Xp => ("X1P2", "P1X2"),
        }
    }
}

/// Family of 1-D monotone maps of one coordinate, indexed by the grid value
/// of the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMap {
    /// Which of the two coordinates is mapped.
    pub mapped_axis: usize,
    pub epsilon: Sign,
    pub source: Axis,
    pub target: Axis,
    /// Grid of the conditioning variable.
    pub condition: Axis,
    /// Row-major `[condition index][source index]`.
    pub table: Vec<f64>,
    /// Probability of each conditioning slice.
    pub slice_mass: Vec<f64>,
}

impl ConditionalMap {
    pub fn row(&self, c: usize) -> &[f64] {
        &self.table[c * self.source.n..(c + 1) * self.source.n]
    }

    /// Bilinear interpolation in (condition, source), clamped at the ends.
    pub fn eval(&self, condition: f64, x: f64) -> f64 {
        let t = condition / self.condition.spacing + (self.condition.n / 2) as f64;
        let last = self.condition.n - 1;
        if !(t > 0.0) {
            return interpolate(&self.source, self.row(0), x);
        }
        if t >= last as f64 {
            return interpolate(&self.source, self.row(last), x);
        }
        let k = t.floor() as usize;
        let f = t - k as f64;
        let a = interpolate(&self.source, self.row(k), x);
        let b = interpolate(&self.source, self.row(k + 1), x);
        a + f * (b - a)
    }
}

/// Two-stage chained map together with the slice-norm diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainedMap2D {
    pub ordering: ChainOrdering,
    pub epsilons: (Sign, Sign),
    pub first: ConditionalMap,
    pub second: ConditionalMap,
    /// Largest slice-by-slice disagreement of position and momentum masses.
    pub max_slice_mismatch: f64,
    axes: [Axis; 2],
}

impl ChainedMap2D {
    /// Position grid the chain was built on.
    pub fn axes(&self) -> &[Axis; 2] {
        &self.axes
    }

    /// Image `(p₁, p₂)` of a position point.
    pub fn apply(&self, x1: f64, x2: f64) -> (f64, f64) {
        match self.ordering {
            ChainOrdering::Px => {
                let p1 = self.first.eval(x2, x1);
                (p1, self.second.eval(p1, x2))
            }
            ChainOrdering::Xp => {
                let p2 = self.first.eval(x1, x2);
                (self.second.eval(p2, x1), p2)
            }
        }
    }

    /// Reproduced context distances: `X1X2`, the intermediate mixed context
    /// and `P1P2`.
    ///
    /// On the quadrature path the intermediate distance is exact for the
    /// linearly interpolated densities, and the `P1P2` entry is the sum of the
    /// stage errors (each stage measured on exact input), which bounds the
    /// distance of the full chain.
    pub fn verify(&self, psi: &GridWavefunction, method: VerifyMethod) -> Result<MarginalReport> {
        self.check_grid(psi)?;
        let a = self.ordering.first_axis();
        let mid = psi.fourier(a)?;
        let fin = mid.fourier(1 - a)?;
        let q_x = cell_masses(psi);
        let q_mid = cell_masses(&mid);
        let q_fin = cell_masses(&fin);
        let (mid_label, _) = self.ordering.contexts();
        let entries = match method {
            VerifyMethod::Quadrature => {
                let mid_axes = [mid.axes()[0], mid.axes()[1]];
                let d1 = stage_error(&q_x, &self.axes, &self.first, &q_mid)?;
                let d2 = stage_error(&q_mid, &mid_axes, &self.second, &q_fin)?;
                // pushforward is an L1 contraction: d1 + d2 bounds the final error
                vec![("X1X2".to_string(), 0.0), (mid_label.to_string(), d1), ("P1P2".to_string(), d1 + d2)]
            }
            VerifyMethod::MonteCarlo { samples, seed } => {
                let pts = self.sample(psi, samples, seed);
                let h = |ax: [Axis; 2], f: &dyn Fn(&(f64, f64, f64, f64)) -> (f64, f64)| {
                    histogram_2d(ax, pts.iter().map(f))
                };
                let x_axes = self.axes;
                let m_axes = [mid.axes()[0], mid.axes()[1]];
                let f_axes = [fin.axes()[0], fin.axes()[1]];
                let (hx, ox) = h(x_axes, &|s| (s.0, s.1));
                let (hm, om) = h(m_axes, &|s| if a == 0 { (s.2, s.1) } else { (s.0, s.3) });
                let (hf, of) = h(f_axes, &|s| (s.2, s.3));
                vec![
                    ("X1X2".to_string(), l1(&hx, &q_x, ox)),
                    (mid_label.to_string(), l1(&hm, &q_mid, om)),
                    ("P1P2".to_string(), l1(&hf, &q_fin, of)),
                ]
            }
        };
        Ok(MarginalReport::new(method, entries))
    }

    fn check_grid(&self, psi: &GridWavefunction) -> Result<()> {
        if psi.dim() != 2 || psi.axes() != self.axes {
            return Err(Error::Domain("map was not built on this wavefunction's grid".into()));
        }
        Ok(())
    }

    /// Seeded samples `(x₁, x₂, p₁, p₂)` with positions drawn uniformly
    /// inside grid cells chosen with probability `|ψ|²ΔΔ`.
    pub fn sample(&self, psi: &GridWavefunction, samples: usize, seed: u64) -> Vec<(f64, f64, f64, f64)> {
        let masses = cell_masses(psi);
        let mut cumulative = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for m in &masses {
            acc += m;
            cumulative.push(acc);
        }
        let [a0, a1] = self.axes;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                let k = cumulative.partition_point(|&c| c <= u).min(masses.len() - 1);
                let x1 = a0.coord(k / a1.n) + (rng.gen::<f64>() - 0.5) * a0.spacing;
                let x2 = a1.coord(k % a1.n) + (rng.gen::<f64>() - 0.5) * a1.spacing;
                let (p1, p2) = self.apply(x1, x2);
                (x1, x2, p1, p2)
            })
            .collect()
    }
}

fn histogram_2d(axes: [Axis; 2], pts: impl Iterator<Item = (f64, f64)>) -> (Vec<f64>, f64) {
    let mut h = vec![0.0; axes[0].n * axes[1].n];
    let (mut count, mut off) = (0usize, 0usize);
    for (u, v) in pts {
        count += 1;
        match (ngp_index(&axes[0], u), ngp_index(&axes[1], v)) {
            (Some(i), Some(j)) => h[i * axes[1].n + j] += 1.0,
            _ => off += 1,
        }
    }
    let c = count.max(1) as f64;
    h.iter_mut().for_each(|v| *v /= c);
    (h, off as f64 / c)
}

fn line(values: &[f64], n1: usize, axis: usize, fixed: usize, len: usize) -> Vec<f64> {
    (0..len).map(|k| if axis == 1 { values[fixed * n1 + k] } else { values[k * n1 + fixed] }).collect()
}

/// L1 error of one stage: slice by slice, the pushforward of the source
/// masses through `map` against the target masses.
fn stage_error(source: &[f64], axes: &[Axis; 2], map: &ConditionalMap, target: &[f64]) -> Result<f64> {
    let m = map.mapped_axis;
    let other = axes[1 - m];
    let n1 = axes[1].n;
    let errors: Vec<f64> = (0..other.n)
        .into_par_iter()
        .map(|c| -> Result<f64> {
            let src = line(source, n1, m, c, map.source.n);
            let tgt = line(target, n1, m, c, map.target.n);
            let (ts, tt) = (src.iter().sum::<f64>(), tgt.iter().sum::<f64>());
            if !(ts > 0.0) || !(tt > 0.0) {
                return Ok((ts - tt).abs());
            }
            let (fx, ts) = Cdf::from_masses(&map.source, &src)?;
            let (fp, tt) = Cdf::from_masses(&map.target, &tgt)?;
            let (cells, outside) = pushforward(&fx, &map.source, map.row(c), map.epsilon, &map.target);
            let reference = interpolant_cells(&fp, &map.target);
            Ok(cells.iter().zip(&reference).map(|(a, b)| (a * ts - b * tt).abs()).sum::<f64>() + outside * ts)
        })
        .collect::<Result<_>>()?;
    Ok(errors.iter().sum())
}

/// Builds the conditional maps of `values` (grid `axes`) along `mapped`.
fn build_stage(values: &[Complex64], axes: [Axis; 2], mapped: usize, epsilon: Sign) -> Result<(ConditionalMap, f64)> {
    let psi = GridWavefunction::new(axes.to_vec(), values.to_vec())?;
    let phi = psi.fourier(mapped)?;
    let qx = cell_masses(&psi);
    let qp = cell_masses(&phi);
    let source = axes[mapped];
    let target = *phi.axis(mapped);
    let condition = axes[1 - mapped];
    let n1 = axes[1].n;
    let slice_totals: Vec<f64> = (0..condition.n).map(|c| line(&qx, n1, mapped, c, source.n).iter().sum()).collect();
    let heaviest = slice_totals.iter().cloned().fold(0.0, f64::max);
    let rows: Vec<(Vec<f64>, f64)> = (0..condition.n)
        .into_par_iter()
        .map(|c| -> Result<(Vec<f64>, f64)> {
            let sx = line(&qx, n1, mapped, c, source.n);
            let sp = line(&qp, n1, mapped, c, target.n);
            let (tx, tp) = (sx.iter().sum::<f64>(), sp.iter().sum::<f64>());
            let mismatch = (tx - tp).abs();
            if tx <= EMPTY_SLICE * heaviest || tp <= EMPTY_SLICE * heaviest {
                return Ok((vec![0.0; source.n], mismatch));
            }
            let (fx, _) = Cdf::from_masses(&source, &sx)?;
            let (fp, _) = Cdf::from_masses(&target, &sp)?;
            Ok((match_cdfs(&source, &fx, &fp, epsilon), mismatch))
        })
        .collect::<Result<_>>()?;
    let mut table = Vec::with_capacity(condition.n * source.n);
    let mut worst: f64 = 0.0;
    for (row, mismatch) in rows {
        table.extend(row);
        worst = worst.max(mismatch);
    }
    let map =
        ConditionalMap { mapped_axis: mapped, epsilon, source, target, condition, table, slice_mass: slice_totals };
    Ok((map, worst))
}

/// Chained Roy–Singh map of a 2-D position-space wavefunction.
pub fn rs_map_2d(psi: &GridWavefunction, eps1: Sign, eps2: Sign, ordering: ChainOrdering) -> Result<ChainedMap2D> {
    if psi.dim() != 2 || psi.axes().iter().any(|a| a.repr != Representation::Position) {
        return Err(Error::Domain("rs_map_2d expects a 2-D position-space wavefunction".into()));
    }
    let axes = [psi.axes()[0], psi.axes()[1]];
    let a = ordering.first_axis();
    let eps = [eps1, eps2];
    let (first, m1) = build_stage(psi.values(), axes, a, eps[a])?;
    let mid = psi.fourier(a)?;
    let mid_axes = [mid.axes()[0], mid.axes()[1]];
    let (second, m2) = build_stage(mid.values(), mid_axes, 1 - a, eps[1 - a])?;
    let max_slice_mismatch = m1.max(m2);
    if max_slice_mismatch > SLICE_MISMATCH_TOL {
        return Err(Error::Resolution(format!(
            "slice masses disagree by {max_slice_mismatch:.3e} between representations"
        )));
    }
    Ok(ChainedMap2D { ordering, epsilons: (eps1, eps2), first, second, max_slice_mismatch, axes })
}

/// L1 distance between the skipped mixed context predicted by the chain and
/// the quantum one (`X1P2` for [`ChainOrdering::Px`], `P1X2` otherwise).
///
/// Along each line of fixed unmapped position the chain image of the other
/// coordinate is piecewise linear between nodes, so the interpolated line
/// density is deposited exactly onto the momentum cells.
pub fn cross_context_distance(map: &ChainedMap2D, psi: &GridWavefunction) -> Result<f64> {
    map.check_grid(psi)?;
    let b = 1 - map.ordering.first_axis();
    let a = 1 - b;
    let skipped = psi.fourier(b)?;
    let q = cell_masses(&skipped);
    let q_x = cell_masses(psi);
    let axes = map.axes;
    let target = *skipped.axis(b);
    let n1 = axes[1].n;
    let errors: Vec<f64> = (0..axes[a].n)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let row = line(&q_x, n1, b, i, axes[b].n);
            let reference = line(&q, n1, b, i, target.n);
            let (tr, tq) = (row.iter().sum::<f64>(), reference.iter().sum::<f64>());
            if !(tr > 0.0) || !(tq > 0.0) {
                return Ok((tr - tq).abs());
            }
            let images: Vec<f64> = (0..axes[b].n)
                .map(|j| {
                    let (x_a, x_b) = (axes[a].coord(i), axes[b].coord(j));
                    let (p1, p2) = if a == 0 { map.apply(x_a, x_b) } else { map.apply(x_b, x_a) };
                    if b == 1 {
                        p2
                    } else {
                        p1
                    }
                })
                .collect();
            let (fx, tr) = Cdf::from_masses(&axes[b], &row)?;
            let (fq, tq) = Cdf::from_masses(&target, &reference)?;
            let (cells, outside) = deposit_lines(&fx, &axes[b], &images, &target);
            let expected = interpolant_cells(&fq, &target);
            Ok(cells.iter().zip(&expected).map(|(u, v)| (u * tr - v * tq).abs()).sum::<f64>() + outside * tr)
        })
        .collect::<Result<_>>()?;
    Ok(errors.iter().sum())
}

/// Pushes the linearly interpolated density of `f` through the piecewise
/// linear (not necessarily monotone) map with node values `images`.
fn deposit_lines(f: &Cdf, source: &Axis, images: &[f64], target: &Axis) -> (Vec<f64>, f64) {
    let mut cells = vec![0.0; target.n];
    let mut outside = 0.0;
    let lower = target.coord(0) - 0.5 * target.spacing;
    for j in 0..source.n - 1 {
        let (x0, x1) = (source.coord(j), source.coord(j + 1));
        let mass = f.eval(x1) - f.eval(x0);
        if mass <= 0.0 {
            continue;
        }
        let (pa, pb) = (images[j], images[j + 1]);
        if pa == pb {
            match ngp_index(target, pa) {
                Some(k) => cells[k] += mass,
                None => outside += mass,
            }
            continue;
        }
        // walk the target cells crossed by [pa, pb]; t is the fraction along the segment
        let (lo, hi) = (pa.min(pb), pa.max(pb));
        let mut deposited = 0.0;
        let first = ((lo - lower) / target.spacing).floor().max(0.0) as usize;
        let last = (((hi - lower) / target.spacing).floor() as isize).min(target.n as isize - 1);
        if last >= first as isize {
            for k in first..=last as usize {
                let (ca, cb) = (lower + k as f64 * target.spacing, lower + (k + 1) as f64 * target.spacing);
                let (s, e) = (ca.max(lo), cb.min(hi));
                if e <= s {
                    continue;
                }
                let (ts, te) = ((s - pa) / (pb - pa), (e - pa) / (pb - pa));
                let (ts, te) = (ts.min(te), ts.max(te));
                let m = f.eval(x0 + te * (x1 - x0)) - f.eval(x0 + ts * (x1 - x0));
                cells[k] += m;
                deposited += m;
            }
        }
        outside += (mass - deposited).max(0.0);
    }
    (cells, outside)
}

/// Largest difference of the composite images `(p₁, p₂)` of two chains on
/// grid nodes where `|ψ|²` exceeds `rel_threshold` times its maximum.
pub fn context_difference(
    a: &ChainedMap2D,
    b: &ChainedMap2D,
    psi: &GridWavefunction,
    rel_threshold: f64,
) -> Result<f64> {
    a.check_grid(psi)?;
    b.check_grid(psi)?;
    let rho = psi.density();
    let peak = rho.values.iter().cloned().fold(0.0, f64::max);
    let [a0, a1] = a.axes;
    let mut worst: f64 = 0.0;
    for i in 0..a0.n {
        for j in 0..a1.n {
            if rho.values[i * a1.n + j] < rel_threshold * peak {
                continue;
            }
            let (x1, x2) = (a0.coord(i), a1.coord(j));
            let (p, q) = (a.apply(x1, x2), b.apply(x1, x2));
            worst = worst.max((p.0 - q.0).abs()).max((p.1 - q.1).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waves::{correlated_gaussian_2d, gaussian_packet};

    fn axes(n: usize) -> [Axis; 2] {
        let a = Axis::balanced(Representation::Position, n).unwrap();
        [a, a]
    }

    #[test]
    fn separable_self_dual_is_identity() {
        let [a, _] = axes(64);
        let g = gaussian_packet(a, 0.0, 0.0, std::f64::consts::FRAC_1_SQRT_2, 0.0, 1.0).unwrap();
        let psi = GridWavefunction::product(&g, &g).unwrap();
        let map = rs_map_2d(&psi, Sign::Plus, Sign::Plus, ChainOrdering::Px).unwrap();
        for x1 in [-1.5, 0.0, 0.8] {
            for x2 in [-0.7, 0.0, 1.1] {
                let (p1, p2) = map.apply(x1, x2);
                assert!((p1 - x1).abs() < 1e-3 && (p2 - x2).abs() < 1e-3, "({x1},{x2}) -> ({p1},{p2})");
            }
        }
    }

    #[test]
    fn correlated_gaussian_marginals_pass() {
        let psi = correlated_gaussian_2d(axes(64), [[1.0, 0.5], [0.5, 0.8]], [[0.0; 2]; 2]).unwrap();
        for ordering in [ChainOrdering::Px, ChainOrdering::Xp] {
            let map = rs_map_2d(&psi, Sign::Plus, Sign::Minus, ordering).unwrap();
            assert!(map.first.table.iter().all(|v| v.is_finite()));
            let report = map.verify(&psi, VerifyMethod::Quadrature).unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let psi = correlated_gaussian_2d(axes(32), [[1.0, 0.5], [0.5, 0.8]], [[0.0; 2]; 2]).unwrap();
        let other = correlated_gaussian_2d(axes(64), [[1.0, 0.5], [0.5, 0.8]], [[0.0; 2]; 2]).unwrap();
        let map = rs_map_2d(&psi, Sign::Plus, Sign::Plus, ChainOrdering::Px).unwrap();
        assert!(map.verify(&other, VerifyMethod::Quadrature).is_err());
    }
}
