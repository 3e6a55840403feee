//! Helpers shared by the integration suites.
//!
//! The metric functions here are reference implementations written
//! directly from the definitions, deliberately structured differently
//! from the library versions (counting loops instead of rank tables, a
//! numeric scale search instead of the closed-form optimum, plain-order
//! entropy sums) so that agreement between the two is meaningful.

#![allow(dead_code)]

use ndarray::Array2;

fn dist(points: &Array2<f64>, i: usize, j: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(points.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Comes strictly before `(d_b, b)` in the distance-then-index order.
fn closer(d_a: f64, a: usize, d_b: f64, b: usize) -> bool {
    d_a < d_b || (d_a == d_b && a < b)
}

/// Rank of `j` among the neighbors of `i` (1-based, `i` excluded),
/// found by counting points that precede it.
fn rank_from(points: &Array2<f64>, i: usize, j: usize) -> usize {
    let d_j = dist(points, i, j);
    let ahead = (0..points.nrows())
        .filter(|&l| l != i && l != j)
        .filter(|&l| closer(dist(points, i, l), l, d_j, j))
        .count();
    ahead + 1
}

/// The k nearest neighbors of `i`: every point whose rank is at most k.
fn k_nearest(points: &Array2<f64>, i: usize, k: usize) -> Vec<usize> {
    (0..points.nrows())
        .filter(|&j| j != i && rank_from(points, i, j) <= k)
        .collect()
}

/// Trustworthiness from the definition: latent-space neighbors missing
/// from the true neighborhood, penalized by their true-space rank.
pub fn reference_trustworthiness(truth: &Array2<f64>, latent: &Array2<f64>, k: usize) -> f64 {
    let n = truth.nrows();
    let mut penalty = 0.0;
    for i in 0..n {
        for j in k_nearest(latent, i, k) {
            let r = rank_from(truth, i, j);
            if r > k {
                penalty += (r - k) as f64;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * penalty
}

/// Continuity is trustworthiness with the two spaces exchanged.
pub fn reference_continuity(truth: &Array2<f64>, latent: &Array2<f64>, k: usize) -> f64 {
    reference_trustworthiness(latent, truth, k)
}

fn condensed(points: &Array2<f64>) -> Vec<f64> {
    let n = points.nrows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(dist(points, i, j));
        }
    }
    out
}

/// Scale-optimal Kruskal stress via a ternary search over the latent
/// scaling instead of the closed-form optimum.
pub fn reference_kruskal_stress(truth: &Array2<f64>, latent: &Array2<f64>) -> f64 {
    let d = condensed(truth);
    let dh = condensed(latent);
    let sum_d2: f64 = d.iter().map(|v| v * v).sum();
    let sum_dh2: f64 = dh.iter().map(|v| v * v).sum();
    if sum_d2 == 0.0 {
        return 0.0;
    }
    if sum_dh2 == 0.0 {
        return 1.0;
    }
    let residual = |beta: f64| -> f64 {
        d.iter()
            .zip(&dh)
            .map(|(a, b)| (a - beta * b) * (a - beta * b))
            .sum()
    };
    // The residual is quadratic in beta and the optimum is bounded by
    // sqrt(sum d^2 / sum dh^2) (Cauchy-Schwarz), so this bracket holds it.
    let mut lo = 0.0;
    let mut hi = 2.0 * (sum_d2 / sum_dh2).sqrt() + 1.0;
    for _ in 0..300 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if residual(a) < residual(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    (residual(0.5 * (lo + hi)) / sum_d2).sqrt()
}

fn bin_index(v: f64, min: f64, max: f64, num_bins: usize) -> usize {
    if !(max > min) {
        return 0;
    }
    let width = (max - min) / num_bins as f64;
    (((v - min) / width) as usize).min(num_bins - 1)
}

fn bin_all(values: &[f64], num_bins: usize) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().map(|&v| bin_index(v, min, max, num_bins)).collect()
}

/// Rajski distance from a direct joint histogram of the binned pairwise
/// distances, with entropies accumulated in plain storage order.
pub fn reference_rajski_distance(
    truth: &Array2<f64>,
    latent: &Array2<f64>,
    num_bins: usize,
) -> f64 {
    let x = bin_all(&condensed(truth), num_bins);
    let y = bin_all(&condensed(latent), num_bins);
    let m = x.len() as f64;
    let mut joint = vec![0.0f64; num_bins * num_bins];
    for (&a, &b) in x.iter().zip(&y) {
        joint[a * num_bins + b] += 1.0;
    }
    let entropy = |counts: &[f64]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|&c| {
                let p = c / m;
                -p * p.ln()
            })
            .sum()
    };
    let h_joint = entropy(&joint);
    if h_joint == 0.0 {
        return 0.0;
    }
    let mut cx = vec![0.0f64; num_bins];
    let mut cy = vec![0.0f64; num_bins];
    for a in 0..num_bins {
        for b in 0..num_bins {
            cx[a] += joint[a * num_bins + b];
            cy[b] += joint[a * num_bins + b];
        }
    }
    let mutual = entropy(&cx) + entropy(&cy) - h_joint;
    1.0 - mutual / h_joint
}

/// Average ranks, ties sharing the mean of their positions.
fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = fractional_ranks(xs);
    let ry = fractional_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median of a slice, averaging the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
