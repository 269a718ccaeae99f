//! Derivative-free maximizers and least-squares helpers.

/// A located maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Coordinate-wise compass search for a local maximum of `f`.
///
/// Each sweep tries `x_i ± step` for every coordinate and keeps any strict
/// improvement; the step halves after a sweep without improvement and the
/// search stops once it drops below `min_step` (or after `max_evals`).
pub fn compass_maximize<F>(f: F, x0: &[f64], initial_step: f64, min_step: f64, max_evals: usize) -> Maximum
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    let mut best = f(&x);
    let mut evals = 1;
    let mut step = initial_step;
    while step >= min_step && evals < max_evals {
        let mut improved = false;
        for i in 0..x.len() {
            let old = x[i];
            for dir in [1.0, -1.0] {
                x[i] = old + dir * step;
                let v = f(&x);
                evals += 1;
                if v > best {
                    best = v;
                    improved = true;
                    break;
                }
                x[i] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Maximum { x, value: best, evaluations: evals }
}

/// Exhaustive maximization over a tensor grid given per-axis candidate values.
///
/// Ties resolve to the lexicographically smallest index tuple.
pub fn grid_maximize<F>(axes: &[Vec<f64>], f: F) -> Maximum
where
    F: Fn(&[f64]) -> f64,
{
    let dims = axes.len();
    let mut idx = vec![0usize; dims];
    let mut x: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    let mut best = Maximum { x: x.clone(), value: f64::NEG_INFINITY, evaluations: 0 };
    let total: usize = axes.iter().map(Vec::len).product();
    for _ in 0..total {
        let v = f(&x);
        best.evaluations += 1;
        if v > best.value {
            best.value = v;
            best.x.copy_from_slice(&x);
        }
        // odometer increment, last axis fastest
        for d in (0..dims).rev() {
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                x[d] = axes[d][idx[d]];
                break;
            }
            idx[d] = 0;
            x[d] = axes[d][0];
        }
    }
    best
}

/// Least-squares polynomial coefficients (constant first); `None` with fewer
/// points than coefficients.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Option<Vec<f64>> {
    let k = degree + 1;
    if xs.len() < k || xs.len() != ys.len() {
        return None;
    }
    let a = nalgebra::DMatrix::from_fn(xs.len(), k, |i, j| xs[i].powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(ys);
    let c = a.svd(true, true).solve(&b, 1e-14).ok()?;
    Some(c.iter().copied().collect())
}
