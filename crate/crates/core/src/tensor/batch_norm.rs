use super::Tensor;
use crate::error::{Error, Result};

pub const BN_EPSILON: f32 = 1e-5;
pub const BN_MOMENTUM: f32 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Training,
    Inference,
}

/// Per-channel affine parameters plus running statistics.
///
/// Training mode normalizes each channel over `(n, h, w)` with the batch
/// statistics and folds them into the running estimates as
/// `running = (1 - momentum) * running + momentum * batch`; the running
/// variance uses the unbiased batch estimate. Inference mode normalizes with
/// the stored running statistics and never mutates state.
#[derive(Debug, Clone)]
pub struct BatchNormState {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub running_mean: Vec<f32>,
    pub running_var: Vec<f32>,
    pub epsilon: f32,
    pub momentum: f32,
    pub mode: BnMode,
}

impl BatchNormState {
    pub fn new(channels: usize) -> Self {
        BatchNormState {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            epsilon: BN_EPSILON,
            momentum: BN_MOMENTUM,
            mode: BnMode::Training,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        let [n, c, h, w] = input.shape();
        if c != self.channels() {
            return Err(Error::ShapeMismatch(format!(
                "batch norm has {} channels but input has {c}",
                self.channels()
            )));
        }
        if n * h * w == 0 {
            return Err(Error::InvalidArgument(format!(
                "batch norm requires non-empty spatial extent, got shape {:?}",
                input.shape()
            )));
        }
        Ok(())
    }
}

/// Cache produced by the training-mode forward; everything the backward pass
/// needs without recomputing batch statistics.
#[derive(Debug, Clone)]
pub struct BnCache {
    /// Normalized input (before gamma/beta), same shape as the input.
    x_hat: Tensor,
    /// Per-channel 1 / sqrt(var + eps).
    inv_std: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BnGrads {
    pub input: Tensor,
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
}

/// Dispatches on `state.mode`; training mode updates the running statistics.
pub fn batch_norm(input: &Tensor, state: &mut BatchNormState) -> Result<Tensor> {
    match state.mode {
        BnMode::Training => Ok(batch_norm_train(input, state)?.0),
        BnMode::Inference => batch_norm_infer(input, state),
    }
}

/// Training-mode forward. Returns the output and the cache for
/// [`batch_norm_backward`]. Updates `running_mean` / `running_var`.
pub fn batch_norm_train(input: &Tensor, state: &mut BatchNormState) -> Result<(Tensor, BnCache)> {
    state.check_input(input)?;
    let [n, c, h, w] = input.shape();
    let m = (n * h * w) as f64;
    let plane = h * w;

    let mut out = Tensor::zeros([n, c, h, w]);
    let mut x_hat = Tensor::zeros([n, c, h, w]);
    let mut inv_std = vec![0f64; c];

    for ch in 0..c {
        let mut sum = 0f64;
        for bn in 0..n {
            let base = (bn * c + ch) * plane;
            for &v in &input.data()[base..base + plane] {
                sum += v as f64;
            }
        }
        let mean = sum / m;

        let mut var_sum = 0f64;
        for bn in 0..n {
            let base = (bn * c + ch) * plane;
            for &v in &input.data()[base..base + plane] {
                let d = v as f64 - mean;
                var_sum += d * d;
            }
        }
        let var = var_sum / m;
        let istd = 1.0 / (var + state.epsilon as f64).sqrt();
        inv_std[ch] = istd;

        let gamma = state.gamma[ch] as f64;
        let beta = state.beta[ch] as f64;
        for bn in 0..n {
            let base = (bn * c + ch) * plane;
            for i in base..base + plane {
                let xh = (input.data()[i] as f64 - mean) * istd;
                x_hat.data_mut()[i] = xh as f32;
                out.data_mut()[i] = (gamma * xh + beta) as f32;
            }
        }

        // Unbiased variance goes into the running estimate; with a single
        // sample per channel the biased value is the only one defined.
        let unbiased = if m > 1.0 { var * m / (m - 1.0) } else { var };
        let mom = state.momentum as f64;
        state.running_mean[ch] =
            ((1.0 - mom) * state.running_mean[ch] as f64 + mom * mean) as f32;
        state.running_var[ch] =
            ((1.0 - mom) * state.running_var[ch] as f64 + mom * unbiased) as f32;
    }

    Ok((out, BnCache { x_hat, inv_std }))
}

/// Inference-mode forward: normalizes with the running statistics. Pure.
pub fn batch_norm_infer(input: &Tensor, state: &BatchNormState) -> Result<Tensor> {
    state.check_input(input)?;
    let [n, c, h, w] = input.shape();
    let plane = h * w;
    let mut out = Tensor::zeros([n, c, h, w]);
    for ch in 0..c {
        let mean = state.running_mean[ch] as f64;
        let istd = 1.0 / (state.running_var[ch] as f64 + state.epsilon as f64).sqrt();
        let gamma = state.gamma[ch] as f64;
        let beta = state.beta[ch] as f64;
        for bn in 0..n {
            let base = (bn * c + ch) * plane;
            for i in base..base + plane {
                out.data_mut()[i] = (gamma * (input.data()[i] as f64 - mean) * istd + beta) as f32;
            }
        }
    }
    Ok(out)
}

/// Backward paired with [`batch_norm_train`]. For channel statistics taken
/// over M elements:
/// `dx = gamma * inv_std * (du - mean(du) - x_hat * mean(du * x_hat))`.
pub fn batch_norm_backward(
    cache: &BnCache,
    state: &BatchNormState,
    upstream: &Tensor,
) -> Result<BnGrads> {
    cache
        .x_hat
        .check_same_shape(upstream, "batch norm upstream")?;
    let [n, c, h, w] = upstream.shape();
    let m = (n * h * w) as f64;
    let plane = h * w;

    let mut grad_input = Tensor::zeros([n, c, h, w]);
    let mut grad_gamma = vec![0f32; c];
    let mut grad_beta = vec![0f32; c];

    for ch in 0..c {
        let mut sum_du = 0f64;
        let mut sum_du_xhat = 0f64;
        for bn in 0..n {
            let base = (bn * c + ch) * plane;
            for i in base..base + plane {
                let du = upstream.data()[i] as f64;
                sum_du += du;
                sum_du_xhat += du * cache.x_hat.data()[i] as f64;
            }
        }
        grad_beta[ch] = sum_du as f32;
        grad_gamma[ch] = sum_du_xhat as f32;

        let mean_du = sum_du / m;
        let mean_du_xhat = sum_du_xhat / m;
        let scale = state.gamma[ch] as f64 * cache.inv_std[ch];
        for bn in 0..n {
            let base = (bn * c + ch) * plane;
            for i in base..base + plane {
                let du = upstream.data()[i] as f64;
                let xh = cache.x_hat.data()[i] as f64;
                grad_input.data_mut()[i] =
                    (scale * (du - mean_du - xh * mean_du_xhat)) as f32;
            }
        }
    }

    Ok(BnGrads {
        input: grad_input,
        gamma: grad_gamma,
        beta: grad_beta,
    })
}
