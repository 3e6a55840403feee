//! The chart function: a fully-connected network with ReLU hidden layers
//! and a linear output layer, Glorot-uniform initialization, manual
//! forward/backward passes, and an Adam optimizer.
//!
//! All arithmetic is 64-bit. Training is deterministic given (dataset,
//! config, seed): initialization draws come from a seeded stream, and
//! batch reductions use fixed summation order.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Weights and biases of the chart network. Weight `l` maps activations
/// of width `layer_widths[l]` to width `layer_widths[l+1]` and is stored
/// as an (out x in) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layer_widths: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Per-parameter gradients, shaped like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub d_weights: Vec<Array2<f64>>,
    pub d_biases: Vec<Array1<f64>>,
}

/// Intermediate values retained by a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layer_widths: Vec<usize>,
    /// activations[0] is the input batch; activations[l+1] the output of
    /// layer l after its nonlinearity.
    activations: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment_w: Vec<Array2<f64>>,
    pub second_moment_w: Vec<Array2<f64>>,
    pub first_moment_b: Vec<Array1<f64>>,
    pub second_moment_b: Vec<Array1<f64>>,
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl MlpParams {
    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Flattens all parameters layer by layer, row-major weights first,
    /// then the bias of the same layer.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            flat.extend(w.iter());
            flat.extend(b.iter());
        }
        flat
    }

    /// Inverse of [`to_flat`](Self::to_flat).
    pub fn from_flat(layer_widths: &[usize], flat: &[f64]) -> Result<Self> {
        let mut params = zeroed(layer_widths)?;
        if flat.len() != params.num_params() {
            return Err(Error::Shape(format!(
                "flat parameter vector has {} entries, network needs {}",
                flat.len(),
                params.num_params()
            )));
        }
        let mut it = flat.iter();
        for (w, b) in params.weights.iter_mut().zip(params.biases.iter_mut()) {
            for v in w.iter_mut() {
                *v = *it.next().unwrap();
            }
            for v in b.iter_mut() {
                *v = *it.next().unwrap();
            }
        }
        Ok(params)
    }
}

fn validate_widths(layer_widths: &[usize]) -> Result<()> {
    if layer_widths.len() < 2 {
        return Err(Error::Config(format!(
            "a network needs at least input and output widths, got {layer_widths:?}"
        )));
    }
    if layer_widths.iter().any(|w| *w == 0) {
        return Err(Error::Config(format!(
            "layer widths must be positive, got {layer_widths:?}"
        )));
    }
    Ok(())
}

fn zeroed(layer_widths: &[usize]) -> Result<MlpParams> {
    validate_widths(layer_widths)?;
    let weights = layer_widths
        .windows(2)
        .map(|w| Array2::zeros((w[1], w[0])))
        .collect();
    let biases = layer_widths[1..].iter().map(|w| Array1::zeros(*w)).collect();
    Ok(MlpParams {
        layer_widths: layer_widths.to_vec(),
        weights,
        biases,
    })
}

/// Glorot-uniform initialization: weights uniform in
/// +-sqrt(6/(fan_in+fan_out)), biases zero. Weights are drawn layer by
/// layer in row-major order, so the draw sequence is part of the format.
pub fn glorot_init(layer_widths: &[usize], rng: &mut ChaCha8Rng) -> Result<MlpParams> {
    let mut params = zeroed(layer_widths)?;
    for (l, w) in params.weights.iter_mut().enumerate() {
        let bound = (6.0 / (layer_widths[l] + layer_widths[l + 1]) as f64).sqrt();
        for v in w.iter_mut() {
            *v = rng.gen_range(-bound..=bound);
        }
    }
    Ok(params)
}

/// Forward pass over a batch (rows = samples): affine plus ReLU for all
/// but the last layer, affine only for the last.
pub fn forward_batch(params: &MlpParams, x: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
    if x.ncols() != params.layer_widths[0] {
        return Err(Error::Shape(format!(
            "input width {} does not match network input {}",
            x.ncols(),
            params.layer_widths[0]
        )));
    }
    let num_layers = params.weights.len();
    let mut activations = Vec::with_capacity(num_layers + 1);
    let mut pre_activations = Vec::with_capacity(num_layers);
    activations.push(x.clone());
    for l in 0..num_layers {
        let mut z = activations[l].dot(&params.weights[l].t());
        for mut row in z.rows_mut() {
            row += &params.biases[l];
        }
        pre_activations.push(z.clone());
        if l + 1 < num_layers {
            z.mapv_inplace(|v| v.max(0.0));
        }
        activations.push(z);
    }
    let output = activations.last().unwrap().clone();
    Ok((
        output,
        ForwardCache {
            layer_widths: params.layer_widths.clone(),
            activations,
            pre_activations,
        },
    ))
}

/// Gradients of sum_rows <upstream_row, output_row> with respect to all
/// weights and biases. The ReLU subgradient at exactly zero is taken as
/// zero.
pub fn backward_batch(
    params: &MlpParams,
    cache: &ForwardCache,
    upstream: &Array2<f64>,
) -> Result<MlpGradients> {
    if cache.layer_widths != params.layer_widths
        || cache.activations.len() != params.weights.len() + 1
        || cache.activations[0].nrows() != upstream.nrows()
    {
        return Err(Error::Shape(
            "forward cache does not belong to these parameters and batch".into(),
        ));
    }
    if upstream.ncols() != *params.layer_widths.last().unwrap() {
        return Err(Error::Shape(format!(
            "upstream gradient width {} does not match output width {}",
            upstream.ncols(),
            params.layer_widths.last().unwrap()
        )));
    }
    let num_layers = params.weights.len();
    let mut d_weights = Vec::with_capacity(num_layers);
    let mut d_biases = Vec::with_capacity(num_layers);
    let mut delta = upstream.clone();
    for l in (0..num_layers).rev() {
        d_weights.push(delta.t().dot(&cache.activations[l]));
        d_biases.push(delta.sum_axis(Axis(0)));
        if l > 0 {
            let mut prev = delta.dot(&params.weights[l]);
            prev.zip_mut_with(&cache.pre_activations[l - 1], |d, z| {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = prev;
        }
    }
    d_weights.reverse();
    d_biases.reverse();
    Ok(MlpGradients { d_weights, d_biases })
}

/// Single-sample forward pass.
pub fn forward(params: &MlpParams, f: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    let x = Array2::from_shape_vec((1, f.len()), f.to_vec()).expect("1 x n is always valid");
    let (y, cache) = forward_batch(params, &x)?;
    Ok((y.row(0).to_vec(), cache))
}

/// Single-sample backward pass for the scalar <upstream, g(f)>.
pub fn backward(
    params: &MlpParams,
    cache: &ForwardCache,
    upstream: &[f64],
) -> Result<MlpGradients> {
    let u = Array2::from_shape_vec((1, upstream.len()), upstream.to_vec())
        .expect("1 x n is always valid");
    backward_batch(params, cache, &u)
}

impl AdamState {
    /// Fresh optimizer state for `params` with the default moment decays
    /// beta1 = 0.9, beta2 = 0.999 and epsilon = 1e-8.
    pub fn new(params: &MlpParams, learning_rate: f64) -> Self {
        Self {
            first_moment_w: params.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            second_moment_w: params.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            first_moment_b: params.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            second_moment_b: params.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update with bias correction, applied in place.
pub fn adam_step(params: &mut MlpParams, grads: &MlpGradients, state: &mut AdamState) -> Result<()> {
    if grads.d_weights.len() != params.weights.len() {
        return Err(Error::Shape("gradient layer count mismatch".into()));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);
    let scale = state.learning_rate * bias2.sqrt() / bias1;
    let (beta1, beta2, eps) = (state.beta1, state.beta2, state.epsilon);

    for l in 0..params.weights.len() {
        update_tensor(
            params.weights[l].iter_mut(),
            grads.d_weights[l].iter(),
            state.first_moment_w[l].iter_mut(),
            state.second_moment_w[l].iter_mut(),
            (beta1, beta2, eps, scale),
        );
        update_tensor(
            params.biases[l].iter_mut(),
            grads.d_biases[l].iter(),
            state.first_moment_b[l].iter_mut(),
            state.second_moment_b[l].iter_mut(),
            (beta1, beta2, eps, scale),
        );
    }
    Ok(())
}

fn update_tensor<'a>(
    values: impl Iterator<Item = &'a mut f64>,
    grads: impl Iterator<Item = &'a f64>,
    first: impl Iterator<Item = &'a mut f64>,
    second: impl Iterator<Item = &'a mut f64>,
    (beta1, beta2, eps, scale): (f64, f64, f64, f64),
) {
    // scale = lr * sqrt(1 - beta2^t) / (1 - beta1^t) folds both bias
    // corrections into one factor: p -= scale * m / (sqrt(v) + eps').
    for (((v, g), m), s) in values.zip(grads).zip(first).zip(second) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *s = beta2 * *s + (1.0 - beta2) * g * g;
        *v -= scale * *m / (s.sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;
    use ndarray::arr2;

    fn seeded(seed: u64) -> ChaCha8Rng {
        stream_rng(seed, crate::rng::streams::GLOROT)
    }

    #[test]
    fn glorot_respects_bound_and_zeroes_biases() {
        let params = glorot_init(&[100, 100], &mut seeded(1)).unwrap();
        let bound = (6.0 / 200.0f64).sqrt();
        let max = params.weights[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max <= bound, "max {max} exceeds bound {bound}");
        assert!(max > 0.95 * bound, "max {max} suspiciously far from {bound}");
        assert!(params.biases[0].iter().all(|b| *b == 0.0));
    }

    #[test]
    fn glorot_bound_for_4_2_is_one() {
        let params = glorot_init(&[4, 2], &mut seeded(2)).unwrap();
        assert!(params.weights[0].iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn glorot_variance_matches_fan_sum() {
        let params = glorot_init(&[256, 128], &mut seeded(3)).unwrap();
        let w = &params.weights[0];
        let n = w.len() as f64;
        let mean: f64 = w.iter().sum::<f64>() / n;
        let var: f64 = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let expected = 2.0 / (256.0 + 128.0);
        assert!(
            (var - expected).abs() < 0.1 * expected,
            "variance {var} vs {expected}"
        );
    }

    #[test]
    fn glorot_is_seed_deterministic() {
        let a = glorot_init(&[8, 4, 2], &mut seeded(4)).unwrap();
        let b = glorot_init(&[8, 4, 2], &mut seeded(4)).unwrap();
        let c = glorot_init(&[8, 4, 2], &mut seeded(5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn glorot_rejects_degenerate_widths() {
        assert!(glorot_init(&[4], &mut seeded(6)).is_err());
        assert!(glorot_init(&[4, 0, 2], &mut seeded(6)).is_err());
    }

    #[test]
    fn zero_params_map_everything_to_zero() {
        let params = zeroed(&[3, 5, 2]).unwrap();
        let (y, _) = forward(&params, &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn single_linear_layer_is_affine() {
        let mut params = zeroed(&[2, 2]).unwrap();
        params.weights[0] = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        params.biases[0] = ndarray::arr1(&[0.5, -0.5]);
        let (y, _) = forward(&params, &[10.0, 20.0]).unwrap();
        assert_eq!(y, vec![50.5, 109.5]);
    }

    #[test]
    fn dead_relu_region_ignores_input_scaling() {
        let mut params = glorot_init(&[3, 5, 2], &mut seeded(7)).unwrap();
        params.biases[0].fill(-100.0);
        let f = [0.3, -0.2, 0.9];
        let f2: Vec<f64> = f.iter().map(|v| v * 2.0).collect();
        let (y1, _) = forward(&params, &f).unwrap();
        let (y2, _) = forward(&params, &f2).unwrap();
        assert_eq!(y1, y2);
    }

    #[test]
    fn forward_rejects_wrong_input_width() {
        let params = zeroed(&[3, 2]).unwrap();
        assert!(matches!(forward(&params, &[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let params = glorot_init(&[4, 3, 2], &mut seeded(8)).unwrap();
        let (_, cache) = forward(&params, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let grads = backward(&params, &cache, &[0.0, 0.0]).unwrap();
        assert!(grads.d_weights.iter().all(|w| w.iter().all(|v| *v == 0.0)));
        assert!(grads.d_biases.iter().all(|b| b.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn linear_layer_gradients_are_outer_products() {
        let mut params = zeroed(&[2, 2]).unwrap();
        params.weights[0] = arr2(&[[1.0, 0.0], [0.0, 1.0]]);
        let f = [3.0, -4.0];
        let u = [2.0, 5.0];
        let (_, cache) = forward(&params, &f).unwrap();
        let grads = backward(&params, &cache, &u).unwrap();
        assert_eq!(grads.d_weights[0], arr2(&[[6.0, -8.0], [15.0, -20.0]]));
        assert_eq!(grads.d_biases[0].to_vec(), u.to_vec());
    }

    #[test]
    fn backward_rejects_mismatched_cache() {
        let p1 = glorot_init(&[4, 3, 2], &mut seeded(9)).unwrap();
        let p2 = glorot_init(&[4, 5, 2], &mut seeded(9)).unwrap();
        let (_, cache) = forward(&p1, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(matches!(
            backward(&p2, &cache, &[1.0, 1.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn network_gradients_match_finite_differences() {
        for trial in 0..100u64 {
            let mut rng = stream_rng(trial, 91);
            let widths = [
                3 + (trial % 4) as usize,
                2 + (trial % 5) as usize,
                2usize,
            ];
            let params = glorot_init(&widths, &mut rng).unwrap();
            let f: Vec<f64> = (0..widths[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u: Vec<f64> = (0..widths[2]).map(|_| rng.gen_range(-1.0..1.0)).collect();

            let (_, cache) = forward(&params, &f).unwrap();
            let analytic = backward(&params, &cache, &u).unwrap();
            let mut flat_analytic = Vec::new();
            for (w, b) in analytic.d_weights.iter().zip(&analytic.d_biases) {
                flat_analytic.extend(w.iter().copied());
                flat_analytic.extend(b.iter().copied());
            }

            let flat0 = params.to_flat();
            let numeric = crate::gradcheck::central_differences(
                |flat| {
                    let p = MlpParams::from_flat(&widths, flat).unwrap();
                    let (y, _) = forward(&p, &f).unwrap();
                    y.iter().zip(&u).map(|(a, b)| a * b).sum()
                },
                &flat0,
                1e-5,
            );
            let err = crate::gradcheck::max_scaled_error(&flat_analytic, &numeric);
            assert!(err < 1e-4, "trial {trial}: gradient error {err}");
        }
    }

    #[test]
    fn fixed_activation_pattern_is_affine() {
        let params = glorot_init(&[4, 6, 3, 2], &mut seeded(11)).unwrap();
        let x0 = vec![0.4, -0.3, 0.8, 0.1];
        let x1 = vec![0.41, -0.29, 0.79, 0.12];
        let pattern = |x: &[f64]| -> Vec<bool> {
            let (_, cache) = forward(&params, x).unwrap();
            cache
                .pre_activations
                .iter()
                .flat_map(|z| z.iter().map(|v| *v > 0.0))
                .collect()
        };
        let mid: Vec<f64> = x0.iter().zip(&x1).map(|(a, b)| 0.5 * (a + b)).collect();
        assert_eq!(pattern(&x0), pattern(&x1), "probe points straddle a kink");
        assert_eq!(pattern(&x0), pattern(&mid));
        let (y0, _) = forward(&params, &x0).unwrap();
        let (y1, _) = forward(&params, &x1).unwrap();
        let (ym, _) = forward(&params, &mid).unwrap();
        for d in 0..2 {
            assert_relative_eq!(ym[d], 0.5 * (y0[d] + y1[d]), epsilon = 1e-12);
        }
    }

    #[test]
    fn adam_ignores_zero_gradients() {
        let mut params = glorot_init(&[3, 2], &mut seeded(12)).unwrap();
        let before = params.clone();
        let mut state = AdamState::new(&params, 1e-3);
        let grads = MlpGradients {
            d_weights: vec![Array2::zeros((2, 3))],
            d_biases: vec![Array1::zeros(2)],
        };
        for _ in 0..5 {
            adam_step(&mut params, &grads, &mut state).unwrap();
        }
        assert_eq!(params, before);
        assert_eq!(state.step_count, 5);
    }

    #[test]
    fn first_adam_step_moves_by_learning_rate_toward_minus_gradient() {
        let mut params = zeroed(&[1, 1]).unwrap();
        let mut state = AdamState::new(&params, 1e-3);
        let grads = MlpGradients {
            d_weights: vec![arr2(&[[2.0]])],
            d_biases: vec![Array1::zeros(1)],
        };
        adam_step(&mut params, &grads, &mut state).unwrap();
        let update = params.weights[0][[0, 0]];
        assert!(update < 0.0, "update must oppose the gradient");
        assert!(update.abs() <= 1e-3);
        assert_relative_eq!(update.abs(), 1e-3, max_relative = 1e-5);
    }

    #[test]
    fn flat_round_trip_is_exact() {
        let params = glorot_init(&[5, 4, 2], &mut seeded(13)).unwrap();
        let flat = params.to_flat();
        let back = MlpParams::from_flat(&[5, 4, 2], &flat).unwrap();
        assert_eq!(params, back);
        assert!(MlpParams::from_flat(&[5, 4, 3], &flat).is_err());
    }
}
