//! Mini-batch training of the chart network under any of the five
//! objectives.
//!
//! Every epoch draws a fresh triplet set (for the methods that use one)
//! from its own RNG stream, shuffles the work into batches, and performs
//! one Adam step per batch. Batches are built in index space; only the
//! rows a batch actually touches are gathered and pushed through the
//! network, so triplet batches cost what their unique samples cost.

use std::collections::HashMap;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::neural_chart::{
    adam_step, backward_batch, forward_batch, glorot_init, AdamState, MlpParams,
};
use crate::objectives::{
    bilateration_loss, build_ap_pairs, build_triplets, draw_labeled_subset, mse_loss,
    triplet_loss, triplet_mse_loss, ApPairSet, LossConfig, Method, TripletSet,
};
use crate::rng::{stream_rng, streams};

/// Optimizer and schedule knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Triplets drawn per epoch, as a multiple of the train-set size.
    pub triplet_budget_per_sample: f64,
    /// Full width list: feature dimension, hidden layers, latent
    /// dimension.
    pub layer_widths: Vec<usize>,
    pub seed: u64,
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.triplet_budget_per_sample > 0.0) {
            return Err(Error::Config(
                "triplet_budget_per_sample must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Training inputs, all indexed by train-split row.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    /// N x D' feature matrix.
    pub features: &'a Array2<f64>,
    /// N x D ground-truth positions, truncated to the latent dimension.
    /// Read only by the supervised terms (B1, B3).
    pub truths: &'a Array2<f64>,
    pub timestamps: &'a [f64],
    /// N x A per-AP received powers in dB.
    pub ap_powers_db: &'a Array2<f64>,
    /// AP positions truncated to the latent dimension.
    pub ap_positions: &'a [Vec<f64>],
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: MlpParams,
    /// Mean batch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains one network from scratch and returns it with its loss curve.
pub fn train_chart(loss_cfg: &LossConfig, data: &TrainData, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    loss_cfg.validate()?;
    let method = loss_cfg.method;
    let n = data.features.nrows();
    check_data(data, cfg, method)?;

    let mut params = glorot_init(&cfg.layer_widths, &mut stream_rng(cfg.seed, streams::GLOROT))?;
    let mut adam = AdamState::new(&params, cfg.learning_rate);

    // Per-sample AP pair sets are a function of the measured powers
    // only, so they are built once. If no sample has a single pair the
    // bilateration objective has no terms at all and training cannot
    // start.
    let pairs = if method.uses_bilateration() {
        let pairs = build_ap_pairs(data.ap_powers_db, loss_cfg.m_p, loss_cfg.m_b);
        if pairs.samples_with_pairs() == 0 {
            return Err(Error::Degenerate(format!(
                "no AP pair clears the {} dB power margin on any sample; \
                 the bilateration objective is empty",
                loss_cfg.m_p
            )));
        }
        Some(pairs)
    } else {
        None
    };

    let labeled = if method == Method::B3 {
        let all: Vec<usize> = (0..n).collect();
        draw_labeled_subset(&all, loss_cfg.labeled_fraction, cfg.seed)?
    } else {
        Vec::new()
    };

    let triplet_budget = (cfg.triplet_budget_per_sample * n as f64).ceil() as usize;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut row_map: HashMap<usize, usize> = HashMap::new();

    for epoch in 0..cfg.epochs {
        let mut rng = stream_rng(cfg.seed, streams::EPOCH_BASE + epoch as u64);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;

        if method.uses_triplets() {
            let mut set = build_triplets(
                data.timestamps,
                loss_cfg.t_c,
                loss_cfg.m_t,
                triplet_budget,
                &mut rng,
            )?;
            if set.triplets.is_empty() {
                return Err(Error::Degenerate(format!(
                    "no timestamp pair lies within the time threshold {}; \
                     the triplet objective is empty",
                    loss_cfg.t_c
                )));
            }
            set.triplets.shuffle(&mut rng);
            for chunk in set.triplets.chunks(cfg.batch_size) {
                let loss = triplet_batch_step(
                    chunk, &set, data, loss_cfg, &pairs, &labeled, &mut params, &mut adam,
                    &mut row_map,
                )?;
                loss_sum += loss;
                batches += 1;
            }
        } else {
            // Sample-indexed batches. P1 trains only on samples that
            // contribute bilateration terms; B1 uses the whole split.
            let mut pool: Vec<usize> = match &pairs {
                Some(pairs) => (0..n)
                    .filter(|i| !pairs.pairs_per_sample[*i].is_empty())
                    .collect(),
                None => (0..n).collect(),
            };
            pool.shuffle(&mut rng);
            for chunk in pool.chunks(cfg.batch_size) {
                let loss =
                    sample_batch_step(chunk, data, &pairs, method, &mut params, &mut adam)?;
                loss_sum += loss;
                batches += 1;
            }
        }

        let epoch_loss = loss_sum / batches as f64;
        epoch_losses.push(epoch_loss);
        log::debug!("{} epoch {epoch}: loss {epoch_loss:.6}", method.name());
    }

    Ok(TrainOutcome { params, epoch_losses })
}

/// One Adam step on a chunk of triplets (P2, B2, B3).
#[allow(clippy::too_many_arguments)]
fn triplet_batch_step(
    chunk: &[[usize; 3]],
    set: &TripletSet,
    data: &TrainData,
    loss_cfg: &LossConfig,
    pairs: &Option<ApPairSet>,
    labeled: &[usize],
    params: &mut MlpParams,
    adam: &mut AdamState,
    row_map: &mut HashMap<usize, usize>,
) -> Result<f64> {
    row_map.clear();
    let mut rows: Vec<usize> = Vec::new();
    let mut local_triplets = Vec::with_capacity(chunk.len());
    for &[a, c, f] in chunk {
        local_triplets.push([
            local_index(a, &mut rows, row_map),
            local_index(c, &mut rows, row_map),
            local_index(f, &mut rows, row_map),
        ]);
    }
    let local_set = TripletSet {
        triplets: local_triplets,
        t_c: set.t_c,
        m_t: set.m_t,
    };
    // B3 evaluates its supervised term on the full labeled subset every
    // step, so those rows always ride along.
    let local_labeled: Vec<usize> = labeled
        .iter()
        .map(|&g| local_index(g, &mut rows, row_map))
        .collect();

    let x = data.features.select(Axis(0), &rows);
    let (latents, cache) = forward_batch(params, &x)?;

    let (loss, upstream) = match loss_cfg.method {
        Method::P2 => {
            let pairs = pairs.as_ref().expect("P2 builds pair sets up front");
            let local_pairs = ApPairSet {
                pairs_per_sample: rows
                    .iter()
                    .map(|&g| pairs.pairs_per_sample[g].clone())
                    .collect(),
                m_p: pairs.m_p,
                m_b: pairs.m_b,
            };
            let (lt, gt) = triplet_loss(&latents, &local_set)?;
            // A batch may happen to contain only pair-less samples; its
            // bilateration estimate is then simply absent.
            if local_pairs.samples_with_pairs() == 0 {
                (lt, gt)
            } else {
                let (lb, gb) = bilateration_loss(&latents, data.ap_positions, &local_pairs)?;
                (lt + loss_cfg.lambda * lb, gt + &(gb * loss_cfg.lambda))
            }
        }
        Method::B2 => triplet_loss(&latents, &local_set)?,
        Method::B3 => {
            let truths = data.truths.select(Axis(0), &rows);
            triplet_mse_loss(&latents, &local_set, &truths, &local_labeled)?
        }
        other => {
            return Err(Error::Config(format!(
                "{} does not train on triplet batches",
                other.name()
            )))
        }
    };

    let grads = backward_batch(params, &cache, &upstream)?;
    adam_step(params, &grads, adam)?;
    Ok(loss)
}

/// One Adam step on a chunk of sample indices (P1, B1).
fn sample_batch_step(
    chunk: &[usize],
    data: &TrainData,
    pairs: &Option<ApPairSet>,
    method: Method,
    params: &mut MlpParams,
    adam: &mut AdamState,
) -> Result<f64> {
    let x = data.features.select(Axis(0), chunk);
    let (latents, cache) = forward_batch(params, &x)?;
    let (loss, upstream) = match method {
        Method::P1 => {
            let pairs = pairs.as_ref().expect("P1 builds pair sets up front");
            let local_pairs = ApPairSet {
                pairs_per_sample: chunk
                    .iter()
                    .map(|&g| pairs.pairs_per_sample[g].clone())
                    .collect(),
                m_p: pairs.m_p,
                m_b: pairs.m_b,
            };
            bilateration_loss(&latents, data.ap_positions, &local_pairs)?
        }
        Method::B1 => {
            let truths = data.truths.select(Axis(0), chunk);
            let active: Vec<usize> = (0..chunk.len()).collect();
            mse_loss(&latents, &truths, &active)?
        }
        other => {
            return Err(Error::Config(format!(
                "{} does not train on sample batches",
                other.name()
            )))
        }
    };
    let grads = backward_batch(params, &cache, &upstream)?;
    adam_step(params, &grads, adam)?;
    Ok(loss)
}

fn local_index(global: usize, rows: &mut Vec<usize>, map: &mut HashMap<usize, usize>) -> usize {
    if let Some(&l) = map.get(&global) {
        return l;
    }
    map.insert(global, rows.len());
    rows.push(global);
    rows.len() - 1
}

fn check_data(data: &TrainData, cfg: &TrainConfig, method: Method) -> Result<()> {
    let n = data.features.nrows();
    if n < 2 {
        return Err(Error::Data(format!("cannot train on {n} samples")));
    }
    if data.timestamps.len() != n || data.ap_powers_db.nrows() != n {
        return Err(Error::Shape(format!(
            "features ({n}), timestamps ({}) and powers ({}) disagree on the sample count",
            data.timestamps.len(),
            data.ap_powers_db.nrows()
        )));
    }
    let widths = &cfg.layer_widths;
    if widths.len() < 2 {
        return Err(Error::Config("the network needs at least input and output widths".into()));
    }
    if data.features.ncols() != widths[0] {
        return Err(Error::Shape(format!(
            "feature dimension {} does not match the input width {}",
            data.features.ncols(),
            widths[0]
        )));
    }
    let latent_dim = *widths.last().unwrap();
    if method.uses_bilateration() {
        if data.ap_positions.len() != data.ap_powers_db.ncols() {
            return Err(Error::Shape(format!(
                "{} AP positions for {} power columns",
                data.ap_positions.len(),
                data.ap_powers_db.ncols()
            )));
        }
        if data.ap_positions.iter().any(|p| p.len() != latent_dim) {
            return Err(Error::Shape(
                "AP positions must be truncated to the latent dimension".into(),
            ));
        }
    }
    if matches!(method, Method::B1 | Method::B3)
        && (data.truths.nrows() != n || data.truths.ncols() != latent_dim)
    {
        return Err(Error::Shape(format!(
            "truth matrix {:?} does not provide {n} positions of dimension {latent_dim}",
            data.truths.dim()
        )));
    }
    Ok(())
}

/// Runs the trained network over a feature matrix.
pub fn chart_positions(params: &MlpParams, features: &Array2<f64>) -> Result<Array2<f64>> {
    let (latents, _) = forward_batch(params, features)?;
    Ok(latents)
}
