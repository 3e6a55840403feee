//! Delay-domain magnitude features and per-AP relative powers.
//!
//! Pipeline per sample: unitary inverse DFT of each antenna row, keep the
//! first C delay taps, normalize to unit Frobenius norm, then vectorize
//! column-wise and take entrywise moduli. The resulting feature is
//! invariant to global complex scaling of the raw tensor and to per-AP
//! phase rotations, so neither transmit power nor AP clock offsets leak
//! into the chart input.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::chansim::ChannelTensor;
use crate::error::{Error, Result};

/// One sample's chart input: unit-norm magnitude feature of length B*C
/// plus per-AP relative powers in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub ap_powers_db: Vec<f64>,
    pub ue_index: usize,
    pub timestamp: f64,
}

/// Unitary inverse DFT of every row (scaling 1/sqrt(W)), mapping the
/// frequency response to delay taps while preserving per-row energy.
pub fn delay_domain(h: &ChannelTensor) -> Array2<Complex64> {
    let (b, w) = h.entries.dim();
    let mut out = h.entries.clone();
    if w <= 1 {
        return out;
    }
    let fft = FftPlanner::new().plan_fft_inverse(w);
    let scale = 1.0 / (w as f64).sqrt();
    for mut row in out.rows_mut() {
        let row_slice = row.as_slice_mut().expect("rows of a standard-layout matrix");
        fft.process(row_slice);
    }
    out.mapv_inplace(|z| z * scale);
    debug_assert_eq!(out.dim(), (b, w));
    out
}

/// Keeps the first `c` delay taps of every row.
pub fn truncate_taps(hd: &Array2<Complex64>, c: usize) -> Result<Array2<Complex64>> {
    let (_, w) = hd.dim();
    if c == 0 || c > w {
        return Err(Error::Config(format!(
            "tap count must satisfy 1 <= C <= W, got C={c} W={w}"
        )));
    }
    Ok(hd.slice(ndarray::s![.., ..c]).to_owned())
}

/// Scales the truncated tensor to unit Frobenius norm.
pub fn normalize_frobenius(ht: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let norm = frobenius_norm(&ht.view());
    if !(norm > 0.0) {
        return Err(Error::Degenerate(
            "zero-energy tensor cannot be normalized; sample must be dropped".into(),
        ));
    }
    Ok(ht.mapv(|z| z / norm))
}

/// Column-wise vectorization followed by entrywise modulus. The input is
/// expected to be Frobenius-normalized, so the output has unit 2-norm.
pub fn featurize(h_hat: &Array2<Complex64>) -> Vec<f64> {
    let (b, c) = h_hat.dim();
    let mut values = Vec::with_capacity(b * c);
    for col in h_hat.columns() {
        values.extend(col.iter().map(|z| z.norm()));
    }
    values
}

/// Relative power of AP `a` in dB: 20*log10 of the Frobenius norm of its
/// antenna block within the normalized tensor. A zero block yields -inf,
/// which downstream AP-pair construction treats as "never the stronger
/// AP".
pub fn ap_power(h_hat: &Array2<Complex64>, a: usize, m_r: usize) -> Result<f64> {
    let (b, _) = h_hat.dim();
    if m_r == 0 || (a + 1) * m_r > b {
        return Err(Error::Shape(format!(
            "AP {a} block of {m_r} rows does not fit in {b} rows"
        )));
    }
    let block = h_hat.slice(ndarray::s![a * m_r..(a + 1) * m_r, ..]);
    let norm = frobenius_norm(&block);
    if norm == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(20.0 * norm.log10())
}

/// Full per-sample pipeline: delay transform, truncation to `c` taps,
/// Frobenius normalization, magnitude feature, and per-AP powers.
pub fn extract_features(
    h: &ChannelTensor,
    c: usize,
    m_r: usize,
    num_aps: usize,
    timestamp: f64,
) -> Result<FeatureVector> {
    let normalized = normalize_frobenius(&truncate_taps(&delay_domain(h), c)?)?;
    let values = featurize(&normalized);
    let ap_powers_db = (0..num_aps)
        .map(|a| ap_power(&normalized, a, m_r))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureVector {
        values,
        ap_powers_db,
        ue_index: h.ue_index,
        timestamp,
    })
}

fn frobenius_norm(m: &ArrayView2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
