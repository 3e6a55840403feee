//! Latent-space quality metrics and positioning errors.
//!
//! Trustworthiness and continuity are the standard rank-based
//! neighborhood measures; Kruskal stress is scale-optimal (the latent
//! scaling factor is solved in closed form); the Rajski distance is
//! computed from a joint histogram of equal-width binned pairwise
//! distances. Distance ties are broken by sample index so grid data with
//! many equal distances evaluates deterministically.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All evaluation results for one trained chart. Positioning errors are
/// `None` for charts that live in arbitrary coordinates (B2), where
/// raw-coordinate errors are not meaningful.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub trustworthiness: f64,
    pub continuity: f64,
    pub kruskal_stress: f64,
    pub rajski_distance: f64,
    pub mean_error_m: Option<f64>,
    pub p95_error_m: Option<f64>,
    pub k_neighbors: usize,
    pub num_bins: usize,
    pub n_samples: usize,
}

/// Neighborhood size used when the config does not pin one: N/80,
/// floored at 5.
pub fn default_k(n: usize) -> usize {
    (n / 80).max(5)
}

fn validate_pair(truth: &Array2<f64>, latent: &Array2<f64>) -> Result<()> {
    if truth.nrows() != latent.nrows() {
        return Err(Error::Shape(format!(
            "truth has {} rows, latent has {}",
            truth.nrows(),
            latent.nrows()
        )));
    }
    Ok(())
}

fn validate_k(n: usize, k: usize) -> Result<()> {
    if k < 1 || k >= n {
        return Err(Error::Config(format!(
            "neighborhood size k={k} must satisfy 1 <= k < N={n}"
        )));
    }
    if 3 * k >= 2 * n - 1 {
        return Err(Error::Config(format!(
            "k={k} is too large for N={n}: the rank normalizer needs k < (2N-1)/3"
        )));
    }
    Ok(())
}

fn sq_dist(points: &Array2<f64>, i: usize, j: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(points.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Indices != i sorted by squared distance from i, ties by index.
fn neighbor_order(points: &Array2<f64>, i: usize) -> Vec<usize> {
    let n = points.nrows();
    let mut order: Vec<usize> = (0..n).filter(|j| *j != i).collect();
    order.sort_unstable_by(|a, b| {
        sq_dist(points, i, *a)
            .partial_cmp(&sq_dist(points, i, *b))
            .expect("finite distances")
            .then(a.cmp(b))
    });
    order
}

/// Shared penalty of trustworthiness/continuity: for each point, sum
/// (rank - k) over the k-nearest neighbors in `neighbor_space` that are
/// not among the k-nearest in `rank_space`, with ranks taken in
/// `rank_space`.
fn neighborhood_penalty(
    neighbor_space: &Array2<f64>,
    rank_space: &Array2<f64>,
    k: usize,
) -> f64 {
    let n = neighbor_space.nrows();
    let mut penalty = 0.0;
    let mut rank_of = vec![0usize; n];
    let mut protected = vec![false; n];
    for i in 0..n {
        let rank_order = neighbor_order(rank_space, i);
        for (r, j) in rank_order.iter().enumerate() {
            rank_of[*j] = r + 1;
            protected[*j] = r < k;
        }
        let neighbor_order = neighbor_order(neighbor_space, i);
        for j in neighbor_order.iter().take(k) {
            if !protected[*j] {
                penalty += (rank_of[*j] - k) as f64;
            }
        }
    }
    penalty
}

fn penalty_scale(n: usize, k: usize) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0))
}

/// Penalizes latent-space neighbors that are not true-space neighbors,
/// weighted by how far down the true-space ranking they sit.
pub fn trustworthiness(truth: &Array2<f64>, latent: &Array2<f64>, k: usize) -> Result<f64> {
    validate_pair(truth, latent)?;
    validate_k(truth.nrows(), k)?;
    let penalty = neighborhood_penalty(latent, truth, k);
    Ok(1.0 - penalty_scale(truth.nrows(), k) * penalty)
}

/// Penalizes true-space neighbors that go missing in latent space;
/// symmetric counterpart of [`trustworthiness`].
pub fn continuity(truth: &Array2<f64>, latent: &Array2<f64>, k: usize) -> Result<f64> {
    validate_pair(truth, latent)?;
    validate_k(truth.nrows(), k)?;
    let penalty = neighborhood_penalty(truth, latent, k);
    Ok(1.0 - penalty_scale(truth.nrows(), k) * penalty)
}

fn condensed_distances(points: &Array2<f64>) -> Vec<f64> {
    let n = points.nrows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(sq_dist(points, i, j).sqrt());
        }
    }
    out
}

/// Scale-optimal Kruskal stress: the latent scaling beta minimizing the
/// normalized residual is solved in closed form, so uniformly scaled
/// charts score 0. All latent points coincident scores 1 by convention;
/// all TRUE points coincident scores 0 (any chart fits a point).
pub fn kruskal_stress(truth: &Array2<f64>, latent: &Array2<f64>) -> Result<f64> {
    validate_pair(truth, latent)?;
    if truth.nrows() < 2 {
        return Err(Error::Config("Kruskal stress needs at least 2 samples".into()));
    }
    let d = condensed_distances(truth);
    let dh = condensed_distances(latent);
    let sum_d2: f64 = d.iter().map(|v| v * v).sum();
    let sum_dh2: f64 = dh.iter().map(|v| v * v).sum();
    if sum_d2 == 0.0 {
        return Ok(0.0);
    }
    if sum_dh2 == 0.0 {
        return Ok(1.0);
    }
    let sum_cross: f64 = d.iter().zip(&dh).map(|(a, b)| a * b).sum();
    let beta = sum_cross / sum_dh2;
    let residual: f64 = d
        .iter()
        .zip(&dh)
        .map(|(a, b)| (a - beta * b) * (a - beta * b))
        .sum();
    Ok((residual / sum_d2).sqrt())
}

fn bin_indices(values: &[f64], num_bins: usize) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return vec![0; values.len()];
    }
    let width = (max - min) / num_bins as f64;
    values
        .iter()
        .map(|v| (((v - min) / width) as usize).min(num_bins - 1))
        .collect()
}

/// Rajski distance 1 - I(X;Y)/H(X,Y) between the equal-width binned
/// distributions of true and latent pairwise distances. A single
/// occupied joint bin (zero joint entropy) scores 0 by convention.
pub fn rajski_distance(
    truth: &Array2<f64>,
    latent: &Array2<f64>,
    num_bins: usize,
) -> Result<f64> {
    validate_pair(truth, latent)?;
    if truth.nrows() < 2 {
        return Err(Error::Config("Rajski distance needs at least 2 samples".into()));
    }
    if num_bins < 2 {
        return Err(Error::Config(format!(
            "Rajski distance needs at least 2 bins, got {num_bins}"
        )));
    }
    let x = bin_indices(&condensed_distances(truth), num_bins);
    let y = bin_indices(&condensed_distances(latent), num_bins);
    let m = x.len() as f64;
    let mut joint = vec![0u64; num_bins * num_bins];
    let mut cx = vec![0u64; num_bins];
    let mut cy = vec![0u64; num_bins];
    for (a, b) in x.iter().zip(&y) {
        joint[a * num_bins + b] += 1;
        cx[*a] += 1;
        cy[*b] += 1;
    }
    // I(X;Y) = H(X) + H(Y) - H(X,Y), so the distance is
    // (2 H(X,Y) - H(X) - H(Y)) / H(X,Y). Each entropy sums the same
    // expression over count multisets in sorted order; when the two bin
    // vectors are identical all three multisets coincide, the entropies
    // match bit for bit, and the result is exactly zero.
    let joint_entropy = entropy_of_counts(joint, m);
    if joint_entropy == 0.0 {
        return Ok(0.0);
    }
    let hx = entropy_of_counts(cx, m);
    let hy = entropy_of_counts(cy, m);
    Ok(((2.0 * joint_entropy - hx - hy) / joint_entropy).clamp(0.0, 1.0))
}

fn entropy_of_counts(mut counts: Vec<u64>, total: f64) -> f64 {
    counts.sort_unstable();
    counts
        .into_iter()
        .filter(|c| *c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Per-sample Euclidean position errors: mean and 95th percentile, the
/// latter linearly interpolated between order statistics.
pub fn positioning_errors(truth: &Array2<f64>, latent: &Array2<f64>) -> Result<(f64, f64)> {
    validate_pair(truth, latent)?;
    if truth.ncols() != latent.ncols() {
        return Err(Error::Shape(format!(
            "truth dimension {} does not match latent dimension {}",
            truth.ncols(),
            latent.ncols()
        )));
    }
    let n = truth.nrows();
    if n == 0 {
        return Err(Error::Degenerate("no samples to evaluate".into()));
    }
    let mut errors: Vec<f64> = (0..n).map(|i| sq_dist_rows(truth, latent, i).sqrt()).collect();
    let mean = errors.iter().sum::<f64>() / n as f64;
    errors.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
    let h = 0.95 * (n - 1) as f64;
    let lo = h.floor() as usize;
    let p95 = if lo + 1 < n {
        errors[lo] + (h - lo as f64) * (errors[lo + 1] - errors[lo])
    } else {
        errors[n - 1]
    };
    Ok((mean, p95))
}

fn sq_dist_rows(a: &Array2<f64>, b: &Array2<f64>, i: usize) -> f64 {
    a.row(i)
        .iter()
        .zip(b.row(i).iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Computes the full report for one chart. `anchored = false` suppresses
/// positioning errors.
pub fn evaluate_chart(
    truth: &Array2<f64>,
    latent: &Array2<f64>,
    k: usize,
    num_bins: usize,
    anchored: bool,
) -> Result<MetricsReport> {
    let (mean, p95) = if anchored {
        let (m, p) = positioning_errors(truth, latent)?;
        (Some(m), Some(p))
    } else {
        (None, None)
    };
    Ok(MetricsReport {
        trustworthiness: trustworthiness(truth, latent, k)?,
        continuity: continuity(truth, latent, k)?,
        kruskal_stress: kruskal_stress(truth, latent)?,
        rajski_distance: rajski_distance(truth, latent, num_bins)?,
        mean_error_m: mean,
        p95_error_m: p95,
        k_neighbors: k,
        num_bins,
        n_samples: truth.nrows(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::arr2;
    use rand::Rng;

    fn random_points(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::stream_rng(seed, 33);
        Array2::from_shape_fn((n, 2), |_| rng.gen_range(-10.0..10.0))
    }

    #[test]
    fn identity_embedding_is_perfect() {
        let p = random_points(30, 1);
        assert_eq!(trustworthiness(&p, &p, 5).unwrap(), 1.0);
        assert_eq!(continuity(&p, &p, 5).unwrap(), 1.0);
        assert_eq!(kruskal_stress(&p, &p).unwrap(), 0.0);
        assert_eq!(rajski_distance(&p, &p, 16).unwrap(), 0.0);
        let (mean, p95) = positioning_errors(&p, &p).unwrap();
        assert_eq!((mean, p95), (0.0, 0.0));
    }

    #[test]
    fn rigid_motion_preserves_all_latent_metrics() {
        let p = random_points(25, 2);
        let (c, s) = (0.6f64, 0.8f64);
        let mut q = p.clone();
        for mut row in q.rows_mut() {
            let (x, y) = (row[0], row[1]);
            row[0] = c * x - s * y + 12.0;
            row[1] = s * x + c * y - 7.0;
        }
        assert_eq!(trustworthiness(&p, &q, 4).unwrap(), 1.0);
        assert_eq!(continuity(&p, &q, 4).unwrap(), 1.0);
        assert!(kruskal_stress(&p, &q).unwrap() < 1e-9);
        assert!(rajski_distance(&p, &q, 16).unwrap() < 1e-12);
    }

    #[test]
    fn uniform_scaling_is_free_for_stress() {
        let p = random_points(20, 3);
        let q = p.mapv(|v| v * 2.0);
        assert_eq!(kruskal_stress(&p, &q).unwrap(), 0.0);
    }

    #[test]
    fn collapsed_chart_scores_poorly_but_in_range() {
        let p = random_points(16, 4);
        let q = Array2::zeros((16, 2));
        let tw = trustworthiness(&p, &q, 3).unwrap();
        let ct = continuity(&p, &q, 3).unwrap();
        assert!((0.0..1.0).contains(&tw));
        assert!((0.0..1.0).contains(&ct));
        assert_eq!(kruskal_stress(&p, &q).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_truth_conventions() {
        let p = Array2::zeros((5, 2));
        let q = random_points(5, 5);
        assert_eq!(kruskal_stress(&p, &q).unwrap(), 0.0);
    }

    #[test]
    fn oversized_k_is_rejected() {
        let p = random_points(8, 6);
        // (2N-1)/3 = 5 for N=8: k=5 breaks the normalizer, k=4 is fine.
        assert!(trustworthiness(&p, &p, 5).is_err());
        assert!(trustworthiness(&p, &p, 4).is_ok());
        assert!(continuity(&p, &p, 8).is_err());
        assert!(trustworthiness(&p, &p, 0).is_err());
    }

    #[test]
    fn metrics_stay_in_unit_interval_on_random_charts() {
        for seed in 0..5 {
            let p = random_points(40, 10 + seed);
            let q = random_points(40, 20 + seed);
            let tw = trustworthiness(&p, &q, 6).unwrap();
            let ct = continuity(&p, &q, 6).unwrap();
            let ks = kruskal_stress(&p, &q).unwrap();
            let rd = rajski_distance(&p, &q, 16).unwrap();
            for v in [tw, ct, ks, rd] {
                assert!((0.0..=1.0).contains(&v), "seed {seed}: {v}");
            }
        }
    }

    #[test]
    fn three_point_rajski_matches_hand_computation() {
        let truth = arr2(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]);
        let latent = arr2(&[[0.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        // Binned true distances (1, 3, 2) -> (0, 1, 1); latent (2, 3, 1)
        // -> (1, 1, 0). Three equiprobable joint cells give
        // H(X,Y) = ln 3, I = ln 3 - (4/3) ln 2.
        let expected = (4.0 / 3.0) * 2f64.ln() / 3f64.ln();
        let rd = rajski_distance(&truth, &latent, 2).unwrap();
        assert_relative_eq!(rd, expected, epsilon = 1e-12);
    }

    #[test]
    fn shuffled_chart_pushes_rajski_toward_one() {
        let p = random_points(200, 7);
        let mut idx: Vec<usize> = (0..200).collect();
        use rand::seq::SliceRandom;
        idx.shuffle(&mut crate::rng::stream_rng(8, 34));
        let mut q = Array2::zeros((200, 2));
        for (row, src) in idx.iter().enumerate() {
            q.row_mut(row).assign(&p.row(*src));
        }
        let rd = rajski_distance(&p, &q, 16).unwrap();
        assert!(rd >= 0.9, "shuffle baseline RD = {rd}");
    }

    #[test]
    fn percentile_interpolates_order_statistics() {
        let n = 100;
        let truth = Array2::zeros((n, 2));
        let mut latent = Array2::zeros((n, 2));
        for i in 0..n {
            latent[[i, 0]] = (i + 1) as f64;
        }
        let (mean, p95) = positioning_errors(&truth, &latent).unwrap();
        assert_relative_eq!(mean, 50.5, epsilon = 1e-12);
        assert_relative_eq!(p95, 95.05, epsilon = 1e-9);
    }

    #[test]
    fn constant_errors_pass_through() {
        let n = 7;
        let truth = Array2::zeros((n, 2));
        let mut latent = Array2::zeros((n, 2));
        latent.column_mut(0).fill(3.0);
        latent.column_mut(1).fill(4.0);
        let (mean, p95) = positioning_errors(&truth, &latent).unwrap();
        assert_relative_eq!(mean, 5.0, epsilon = 1e-12);
        assert_relative_eq!(p95, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn translation_shifts_positioning_but_not_latent_metrics() {
        let p = random_points(20, 9);
        let mut q = p.clone();
        q.column_mut(0).mapv_inplace(|v| v + 10.0);
        let (mean, _) = positioning_errors(&p, &q).unwrap();
        assert_relative_eq!(mean, 10.0, epsilon = 1e-12);
        assert_eq!(trustworthiness(&p, &q, 4).unwrap(), 1.0);
    }

    #[test]
    fn report_suppresses_errors_for_unanchored_charts() {
        let p = random_points(20, 11);
        let r = evaluate_chart(&p, &p, 4, 16, false).unwrap();
        assert_eq!(r.mean_error_m, None);
        assert_eq!(r.p95_error_m, None);
        assert_eq!(r.trustworthiness, 1.0);
        let r = evaluate_chart(&p, &p, 4, 16, true).unwrap();
        assert_eq!(r.mean_error_m, Some(0.0));
    }

    #[test]
    fn default_k_scales_with_n() {
        assert_eq!(default_k(800), 10);
        assert_eq!(default_k(100), 5);
        assert_eq!(default_k(3912), 48);
    }
}
