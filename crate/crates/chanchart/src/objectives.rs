//! Training objectives and their sample-set constructors.
//!
//! Five regimes share these pieces:
//! - P1: bilateration only (anchored by AP positions);
//! - P2: triplet + lambda * bilateration;
//! - B1: supervised MSE on all train labels;
//! - B2: triplet only (chart in arbitrary coordinates);
//! - B3: triplet + MSE restricted to a small labeled subset.
//!
//! Triplets pair each anchor with a timestamp-close and a timestamp-far
//! sample; AP pairs order a sample's APs by relative receive power with
//! a dB margin. All hinge losses use subgradient 0 at their kinks and at
//! coincident points, and every gradient here is checked against central
//! finite differences in the test suite.

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

/// Index triples (anchor, close, far) with the time threshold and latent
/// margin they were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletSet {
    pub triplets: Vec<[usize; 3]>,
    pub t_c: f64,
    pub m_t: f64,
}

/// Per-sample ordered AP pairs (stronger, weaker) under power margin
/// `m_p`, plus the latent-space margin `m_b` used by the bilateration
/// hinge.
#[derive(Debug, Clone, PartialEq)]
pub struct ApPairSet {
    pub pairs_per_sample: Vec<Vec<(usize, usize)>>,
    pub m_p: f64,
    pub m_b: f64,
}

impl ApPairSet {
    pub fn total_pairs(&self) -> usize {
        self.pairs_per_sample.iter().map(|p| p.len()).sum()
    }

    pub fn samples_with_pairs(&self) -> usize {
        self.pairs_per_sample.iter().filter(|p| !p.is_empty()).count()
    }
}

/// The five training regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    P1,
    P2,
    B1,
    B2,
    B3,
}

impl Method {
    /// Fixed reporting order.
    pub fn all() -> [Method; 5] {
        [Method::P1, Method::P2, Method::B1, Method::B2, Method::B3]
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::P1 => "P1",
            Method::P2 => "P2",
            Method::B1 => "B1",
            Method::B2 => "B2",
            Method::B3 => "B3",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s.to_ascii_uppercase().as_str() {
            "P1" => Ok(Method::P1),
            "P2" => Ok(Method::P2),
            "B1" => Ok(Method::B1),
            "B2" => Ok(Method::B2),
            "B3" => Ok(Method::B3),
            other => Err(Error::Config(format!(
                "unknown method {other:?}; expected one of P1, P2, B1, B2, B3"
            ))),
        }
    }

    pub fn loss_name(self) -> &'static str {
        match self {
            Method::P1 => "bilateration",
            Method::P2 => "triplet+bilateration",
            Method::B1 => "mse",
            Method::B2 => "triplet",
            Method::B3 => "triplet+mse(subset)",
        }
    }

    pub fn learning_type(self) -> &'static str {
        match self {
            Method::P1 | Method::P2 => "weakly supervised",
            Method::B1 => "supervised",
            Method::B2 => "self-supervised",
            Method::B3 => "semi-supervised",
        }
    }

    pub fn uses_triplets(self) -> bool {
        matches!(self, Method::P2 | Method::B2 | Method::B3)
    }

    pub fn uses_bilateration(self) -> bool {
        matches!(self, Method::P1 | Method::P2)
    }

    /// Whether the trained chart lives in real-world coordinates, i.e.
    /// positioning errors are meaningful. B2 charts are only defined up
    /// to rigid motion, so their errors are suppressed in reports.
    pub fn is_anchored(self) -> bool {
        !matches!(self, Method::B2)
    }
}

/// Loss parameters for one method, defaulting to the published presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub method: Method,
    pub lambda: f64,
    pub t_c: f64,
    pub m_t: f64,
    pub m_p: f64,
    pub m_b: f64,
    pub labeled_fraction: f64,
}

impl LossConfig {
    pub fn preset(method: Method) -> Self {
        let base = Self {
            method,
            lambda: 1.0,
            t_c: 20.0,
            m_t: 15.0,
            m_p: 3.0,
            m_b: 15.0,
            labeled_fraction: 0.05,
        };
        match method {
            Method::B2 => Self { m_t: 1.0, ..base },
            _ => base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == Method::P2 && !(self.lambda > 0.0) {
            return Err(Error::Config(format!(
                "lambda must be positive for P2, got {}",
                self.lambda
            )));
        }
        if self.method == Method::B3
            && !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0)
        {
            return Err(Error::Config(format!(
                "labeled_fraction must lie in (0, 1], got {}",
                self.labeled_fraction
            )));
        }
        Ok(())
    }
}

/// Uniformly draws the labeled subset used by B3 from the train split.
pub fn draw_labeled_subset(
    train_indices: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<Vec<usize>> {
    let count = (fraction * train_indices.len() as f64).round() as usize;
    if count == 0 {
        return Err(Error::Config(format!(
            "labeled fraction {fraction} of {} train samples rounds to zero labels",
            train_indices.len()
        )));
    }
    let mut pool = train_indices.to_vec();
    pool.shuffle(&mut stream_rng(seed, streams::LABELED_SUBSET));
    pool.truncate(count);
    pool.sort_unstable();
    Ok(pool)
}

// ---------------------------------------------------------------------------
// Triplets
// ---------------------------------------------------------------------------

/// Samples up to `budget` triples (anchor n, close c, far f) satisfying
/// 0 < |t_n - t_c| <= t_c_threshold < |t_n - t_f|, uniformly over the
/// valid set; enumerates exhaustively when the valid set is no larger
/// than the budget. An empty valid set yields an empty (logged) result.
pub fn build_triplets(
    timestamps: &[f64],
    t_c_threshold: f64,
    m_t: f64,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TripletSet> {
    if budget == 0 {
        return Err(Error::Config("triplet budget must be at least 1".into()));
    }
    let n = timestamps.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|a, b| {
        timestamps[*a]
            .partial_cmp(&timestamps[*b])
            .expect("finite timestamps")
            .then(a.cmp(b))
    });
    let sorted_ts: Vec<f64> = order.iter().map(|i| timestamps[*i]).collect();

    // Per anchor: the sorted-order window of timestamps within the
    // threshold, the sub-range of equal timestamps (invalid as "close"),
    // and the resulting close/far counts.
    struct Anchor {
        lo: usize,
        hi: usize,
        eq_lo: usize,
        eq_hi: usize,
        close: usize,
        far: usize,
    }
    let anchors: Vec<Anchor> = (0..n)
        .map(|i| {
            let t = timestamps[i];
            let lo = sorted_ts.partition_point(|v| *v < t - t_c_threshold);
            let hi = sorted_ts.partition_point(|v| *v <= t + t_c_threshold);
            let eq_lo = sorted_ts.partition_point(|v| *v < t);
            let eq_hi = sorted_ts.partition_point(|v| *v <= t);
            let close = (hi - lo) - (eq_hi - eq_lo);
            let far = n - (hi - lo);
            Anchor { lo, hi, eq_lo, eq_hi, close, far }
        })
        .collect();

    let total: u128 = anchors.iter().map(|a| a.close as u128 * a.far as u128).sum();
    if total == 0 {
        log::warn!(
            "no valid triplet exists for threshold {t_c_threshold} over {n} timestamps"
        );
        return Ok(TripletSet { triplets: Vec::new(), t_c: t_c_threshold, m_t });
    }

    let mut triplets = Vec::new();
    if total <= budget as u128 {
        for (i, a) in anchors.iter().enumerate() {
            for cp in (a.lo..a.eq_lo).chain(a.eq_hi..a.hi) {
                for fp in (0..a.lo).chain(a.hi..n) {
                    triplets.push([i, order[cp], order[fp]]);
                }
            }
        }
    } else {
        // Weighted anchor choice makes the draw uniform over all valid
        // triples: P(anchor) is proportional to its close * far count.
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0f64;
        for a in &anchors {
            acc += a.close as f64 * a.far as f64;
            cumulative.push(acc);
        }
        for _ in 0..budget {
            let u = rng.gen_range(0.0..acc);
            let i = cumulative.partition_point(|c| *c <= u).min(n - 1);
            let a = &anchors[i];
            let co = rng.gen_range(0..a.close);
            let cp = if co < a.eq_lo - a.lo { a.lo + co } else { a.eq_hi + co - (a.eq_lo - a.lo) };
            let fo = rng.gen_range(0..a.far);
            let fp = if fo < a.lo { fo } else { a.hi + fo - a.lo };
            triplets.push([i, order[cp], order[fp]]);
        }
    }
    Ok(TripletSet { triplets, t_c: t_c_threshold, m_t })
}

fn row_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean hinge loss over the triples:
/// (||x_n - x_c|| - ||x_n - x_f|| + m_t)^+ averaged over the set, with
/// gradients with respect to every latent row.
pub fn triplet_loss(latents: &Array2<f64>, set: &TripletSet) -> Result<(f64, Array2<f64>)> {
    if set.triplets.is_empty() {
        return Err(Error::Degenerate("triplet loss over an empty set".into()));
    }
    let n = latents.nrows();
    let mut grads = Array2::zeros(latents.raw_dim());
    let mut loss = 0.0;
    let weight = 1.0 / set.triplets.len() as f64;
    for &[a, c, f] in &set.triplets {
        if a >= n || c >= n || f >= n {
            return Err(Error::Shape(format!(
                "triplet ({a},{c},{f}) out of range for {n} latents"
            )));
        }
        let d_close = row_dist(latents.row(a), latents.row(c));
        let d_far = row_dist(latents.row(a), latents.row(f));
        let arg = d_close - d_far + set.m_t;
        if arg <= 0.0 {
            continue;
        }
        loss += weight * arg;
        for d in 0..latents.ncols() {
            let xa = latents[[a, d]];
            if d_close > 0.0 {
                let u = (xa - latents[[c, d]]) / d_close;
                grads[[a, d]] += weight * u;
                grads[[c, d]] -= weight * u;
            }
            if d_far > 0.0 {
                let u = (xa - latents[[f, d]]) / d_far;
                grads[[a, d]] -= weight * u;
                grads[[f, d]] += weight * u;
            }
        }
    }
    Ok((loss, grads))
}

// ---------------------------------------------------------------------------
// AP pairs and bilateration
// ---------------------------------------------------------------------------

/// For every sample, all ordered AP pairs whose powers differ by more
/// than `m_p` dB: (a_c, a_f) is stored iff P[n, a_c] > P[n, a_f] + m_p.
/// -inf powers never qualify as the stronger side.
pub fn build_ap_pairs(ap_powers_db: &Array2<f64>, m_p: f64, m_b: f64) -> ApPairSet {
    let (n, a_count) = ap_powers_db.dim();
    let mut pairs_per_sample = Vec::with_capacity(n);
    for i in 0..n {
        let mut pairs = Vec::new();
        for ac in 0..a_count {
            for af in 0..a_count {
                if ac != af && ap_powers_db[[i, ac]] > ap_powers_db[[i, af]] + m_p {
                    pairs.push((ac, af));
                }
            }
        }
        pairs_per_sample.push(pairs);
    }
    ApPairSet { pairs_per_sample, m_p, m_b }
}

/// Bilateration loss: per sample with a nonempty pair set, the mean over
/// its pairs of (||x_n - ap_c|| - ||x_n - ap_f|| + m_b)^+, then the mean
/// over those samples. AP positions are the truncated (latent-dimension)
/// coordinates and receive no gradient.
pub fn bilateration_loss(
    latents: &Array2<f64>,
    ap_positions: &[Vec<f64>],
    set: &ApPairSet,
) -> Result<(f64, Array2<f64>)> {
    let (n, dim) = latents.dim();
    if set.pairs_per_sample.len() != n {
        return Err(Error::Shape(format!(
            "pair set covers {} samples, latents have {n}",
            set.pairs_per_sample.len()
        )));
    }
    if ap_positions.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape(
            "AP positions must match the latent dimension".into(),
        ));
    }
    let occupied = set.samples_with_pairs();
    if occupied == 0 {
        return Err(Error::Degenerate(
            "every AP pair set is empty; the bilateration objective is undefined".into(),
        ));
    }
    let sample_weight = 1.0 / occupied as f64;
    let mut grads = Array2::zeros(latents.raw_dim());
    let mut loss = 0.0;
    for (i, pairs) in set.pairs_per_sample.iter().enumerate() {
        if pairs.is_empty() {
            continue;
        }
        let pair_weight = sample_weight / pairs.len() as f64;
        for &(ac, af) in pairs {
            let d_c = dist_to_ap(latents, i, &ap_positions[ac]);
            let d_f = dist_to_ap(latents, i, &ap_positions[af]);
            let arg = d_c - d_f + set.m_b;
            if arg <= 0.0 {
                continue;
            }
            loss += pair_weight * arg;
            for d in 0..dim {
                if d_c > 0.0 {
                    grads[[i, d]] += pair_weight * (latents[[i, d]] - ap_positions[ac][d]) / d_c;
                }
                if d_f > 0.0 {
                    grads[[i, d]] -= pair_weight * (latents[[i, d]] - ap_positions[af][d]) / d_f;
                }
            }
        }
    }
    Ok((loss, grads))
}

fn dist_to_ap(latents: &Array2<f64>, i: usize, ap: &[f64]) -> f64 {
    latents
        .row(i)
        .iter()
        .zip(ap)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Triplet loss plus lambda times bilateration loss.
pub fn combined_loss(
    latents: &Array2<f64>,
    triplets: &TripletSet,
    pairs: &ApPairSet,
    ap_positions: &[Vec<f64>],
    lambda: f64,
) -> Result<(f64, Array2<f64>)> {
    if !(lambda > 0.0) {
        return Err(Error::Config(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let (lt, gt) = triplet_loss(latents, triplets)?;
    let (lb, gb) = bilateration_loss(latents, ap_positions, pairs)?;
    Ok((lt + lambda * lb, gt + &(gb * lambda)))
}

// ---------------------------------------------------------------------------
// Supervised losses
// ---------------------------------------------------------------------------

/// Mean squared error over the `active` rows:
/// (1/|active|) * sum ||x_n - truth_n||^2.
pub fn mse_loss(
    latents: &Array2<f64>,
    truths: &Array2<f64>,
    active: &[usize],
) -> Result<(f64, Array2<f64>)> {
    if active.is_empty() {
        return Err(Error::Degenerate("MSE over an empty index set".into()));
    }
    if latents.dim() != truths.dim() {
        return Err(Error::Shape(format!(
            "latents {:?} and truths {:?} differ in shape",
            latents.dim(),
            truths.dim()
        )));
    }
    let n = latents.nrows();
    let weight = 1.0 / active.len() as f64;
    let mut grads = Array2::zeros(latents.raw_dim());
    let mut loss = 0.0;
    for &i in active {
        if i >= n {
            return Err(Error::Shape(format!("index {i} out of range for {n} rows")));
        }
        for d in 0..latents.ncols() {
            let e = latents[[i, d]] - truths[[i, d]];
            loss += weight * e * e;
            grads[[i, d]] += 2.0 * weight * e;
        }
    }
    Ok((loss, grads))
}

/// Triplet loss plus MSE restricted to the labeled subset.
pub fn triplet_mse_loss(
    latents: &Array2<f64>,
    triplets: &TripletSet,
    truths: &Array2<f64>,
    labeled: &[usize],
) -> Result<(f64, Array2<f64>)> {
    if labeled.is_empty() {
        return Err(Error::Degenerate(
            "labeled subset is empty; the partial MSE term is undefined".into(),
        ));
    }
    let (lt, gt) = triplet_loss(latents, triplets)?;
    let (lm, gm) = mse_loss(latents, truths, labeled)?;
    Ok((lt + lm, gt + &gm))
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

/// Ground-truth check of a pair set: a stored pair is false when the
/// nominally stronger AP is geometrically farther from the sample.
/// Returns (false-pair fraction, mean pairs per sample over all n).
pub fn false_ap_pair_stats(
    set: &ApPairSet,
    true_positions: &Array2<f64>,
    ap_positions: &[Vec<f64>],
) -> (f64, f64) {
    let n = true_positions.nrows();
    let mut total = 0usize;
    let mut false_pairs = 0usize;
    for (i, pairs) in set.pairs_per_sample.iter().enumerate() {
        for &(ac, af) in pairs {
            total += 1;
            let d_c = dist_to_ap(true_positions, i, &ap_positions[ac]);
            let d_f = dist_to_ap(true_positions, i, &ap_positions[af]);
            if d_c > d_f {
                false_pairs += 1;
            }
        }
    }
    let ratio = if total == 0 { 0.0 } else { false_pairs as f64 / total as f64 };
    (ratio, total as f64 / n.max(1) as f64)
}
