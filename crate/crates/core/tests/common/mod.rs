//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use moc_core::numerics::Mlp;
use ndarray::Array2;
use rand::Rng;

/// O(n^2) dominance filter written without the library's helpers.
pub fn brute_pareto(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    points
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            !points.iter().enumerate().any(|(j, q)| {
                *i != j && q.iter().zip(p.iter()).all(|(a, b)| a >= b) && q.iter().zip(p.iter()).any(|(a, b)| a > b)
            })
        })
        .map(|(_, p)| p.clone())
        .collect()
}

/// Direct double sum `A_t = sum_{l >= 0} (gamma lam)^l delta_{t+l}`.
pub fn gae_double_sum(r: &[f64], v: &[f64], bootstrap: f64, gamma: f64, lam: f64) -> Vec<f64> {
    let n = r.len();
    let delta: Vec<f64> = (0..n)
        .map(|t| {
            let next = if t + 1 < n { v[t + 1] } else { bootstrap };
            r[t] + gamma * next - v[t]
        })
        .collect();
    (0..n)
        .map(|t| (t..n).map(|k| (gamma * lam).powi((k - t) as i32) * delta[k]).sum())
        .collect()
}

/// Dominated volume by integrating the indicator over the grid spanned by
/// all point coordinates: every cell is either fully dominated or not, so the
/// sum over cells is the exact measure.
pub fn grid_hypervolume(points: &[Vec<f64>], reference: &[f64]) -> f64 {
    let dim = reference.len();
    let pts: Vec<&Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(x, r)| x > r))
        .collect();
    if pts.is_empty() {
        return 0.0;
    }
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|j| {
            let mut a: Vec<f64> = pts.iter().map(|p| p[j]).collect();
            a.push(reference[j]);
            a.sort_by(f64::total_cmp);
            a.dedup();
            a
        })
        .collect();
    let mut idx = vec![0usize; dim];
    let mut total = 0.0;
    'cells: loop {
        let mut volume = 1.0;
        let mut mid = vec![0.0; dim];
        for j in 0..dim {
            let (lo, hi) = (axes[j][idx[j]], axes[j][idx[j] + 1]);
            volume *= hi - lo;
            mid[j] = 0.5 * (lo + hi);
        }
        if pts.iter().any(|p| p.iter().zip(&mid).all(|(a, m)| m <= a)) {
            total += volume;
        }
        for j in 0..dim {
            idx[j] += 1;
            if idx[j] + 1 < axes[j].len() {
                continue 'cells;
            }
            idx[j] = 0;
        }
        break;
    }
    total
}

/// Combined norm `|c u1 + (1 - c) u2|`.
pub fn combined_norm(u1: &[f64], u2: &[f64], c: f64) -> f64 {
    u1.iter()
        .zip(u2)
        .map(|(a, b)| (c * a + (1.0 - c) * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Smallest combined norm over the grid `c = 0, 1e-4, ..., 1`.
pub fn grid_min_norm(u1: &[f64], u2: &[f64]) -> f64 {
    (0..=10_000)
        .map(|k| combined_norm(u1, u2, k as f64 * 1e-4))
        .fold(f64::INFINITY, f64::min)
}

/// Relative error `|a - b| / max(|a|, |b|)` of two gradient vectors, with a
/// floor that keeps all-zero gradients from dividing by zero.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-8)
}

/// Central finite differences of `f` with respect to the flat parameters of `net`.
pub fn finite_difference<F: Fn(&Mlp) -> f64>(net: &Mlp, h: f64, f: F) -> Vec<f64> {
    let base = net.to_flat();
    let mut probe = net.clone();
    let mut grad = vec![0.0; base.len()];
    let mut params = base.clone();
    for k in 0..base.len() {
        params[k] = base[k] + h;
        probe.set_flat(&params).unwrap();
        let up = f(&probe);
        params[k] = base[k] - h;
        probe.set_flat(&params).unwrap();
        let down = f(&probe);
        params[k] = base[k];
        grad[k] = (up - down) / (2.0 * h);
    }
    grad
}

/// Random network of 1-3 hidden layers with widths 1-8.
pub fn random_mlp<R: Rng>(rng: &mut R) -> Mlp {
    let depth = rng.random_range(1..=3);
    let mut sizes = vec![rng.random_range(1..=6)];
    for _ in 0..depth {
        sizes.push(rng.random_range(1..=8));
    }
    sizes.push(rng.random_range(1..=4));
    let mut net = Mlp::new(&sizes, rng).unwrap();
    // Non-zero biases so ReLU masks vary across inputs.
    let mut flat = net.to_flat();
    for v in flat.iter_mut() {
        *v += rng.random_range(-0.3..0.3);
    }
    net.set_flat(&flat).unwrap();
    net
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

/// Analytic-vs-numeric gradient check of `sum(upstream * net(x))` for one
/// random network and batch; returns the relative error.
pub fn mlp_gradient_error<R: Rng>(rng: &mut R) -> f64 {
    let net = random_mlp(rng);
    let batch = rng.random_range(1..=4);
    let x = random_matrix(rng, batch, net.input_dim(), 2.0);
    let up = random_matrix(rng, batch, net.output_dim(), 1.0);
    let cache = net.forward_cached(x.view()).unwrap();
    let analytic = net.backward(&cache, up.view()).unwrap().to_flat();
    let numeric = finite_difference(&net, 1e-6, |m| {
        let y = m.forward_batch(x.view()).unwrap();
        (&y * &up).sum()
    });
    relative_error(&analytic, &numeric)
}
