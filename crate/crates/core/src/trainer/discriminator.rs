use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{
    conv2d_backward, conv2d_forward, leaky_relu, leaky_relu_backward, ConvParams, Tensor,
    DEFAULT_LEAKY_SLOPE,
};
use crate::trainer::adam::ParamSet;

/// Power-iteration vectors for one weight matrix reshaped to
/// `(rows, cols) = (out_c, in_c * kh * kw)`.
#[derive(Debug, Clone)]
pub struct PowerVectors {
    pub u: Vec<f32>,
    pub v: Vec<f32>,
}

impl PowerVectors {
    /// Random unit-norm start so the iteration almost surely overlaps the top
    /// singular direction.
    pub fn new(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u: Vec<f32> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut v: Vec<f32> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize(&mut u);
        normalize(&mut v);
        PowerVectors { u, v }
    }
}

fn normalize(x: &mut [f32]) -> f64 {
    let norm = x.iter().map(|&a| (a as f64) * (a as f64)).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in x.iter_mut() {
            *a = (*a as f64 / norm) as f32;
        }
    }
    norm
}

/// One power-iteration update followed by weight normalization.
///
/// The weight is viewed as the 2-D matrix `W` of shape
/// `(out_c, numel / out_c)`. Updates `v <- normalize(W^T u)`,
/// `u <- normalize(W v)`, estimates `sigma = u^T W v`, and returns
/// `(W / sigma, sigma)`. A zero weight matrix is returned unchanged with
/// sigma 0.
pub fn spectral_normalize(weight: &Tensor, pv: &mut PowerVectors) -> Result<(Tensor, f32)> {
    let rows = weight.shape()[0];
    let cols = weight.numel() / rows;
    if pv.u.len() != rows || pv.v.len() != cols {
        return Err(Error::ShapeMismatch(format!(
            "power vectors ({}, {}) do not match weight matrix ({rows}, {cols})",
            pv.u.len(),
            pv.v.len()
        )));
    }
    let w = weight.data();

    // v = normalize(W^T u)
    let mut wv = vec![0f64; cols];
    for r in 0..rows {
        let ur = pv.u[r] as f64;
        let row = &w[r * cols..(r + 1) * cols];
        for (acc, &x) in wv.iter_mut().zip(row) {
            *acc += ur * x as f64;
        }
    }
    for (dst, &x) in pv.v.iter_mut().zip(wv.iter()) {
        *dst = x as f32;
    }
    if normalize(&mut pv.v) == 0.0 {
        return Ok((weight.clone(), 0.0));
    }

    // u = normalize(W v)
    let mut wu = vec![0f64; rows];
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0f64;
        for (&x, &vv) in row.iter().zip(pv.v.iter()) {
            acc += x as f64 * vv as f64;
        }
        wu[r] = acc;
    }
    for (dst, &x) in pv.u.iter_mut().zip(wu.iter()) {
        *dst = x as f32;
    }
    if normalize(&mut pv.u) == 0.0 {
        return Ok((weight.clone(), 0.0));
    }

    // sigma = u^T W v
    let mut sigma = 0f64;
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0f64;
        for (&x, &vv) in row.iter().zip(pv.v.iter()) {
            acc += x as f64 * vv as f64;
        }
        sigma += pv.u[r] as f64 * acc;
    }
    if sigma == 0.0 {
        return Ok((weight.clone(), 0.0));
    }
    let normalized = weight.map(|x| (x as f64 / sigma) as f32);
    Ok((normalized, sigma as f32))
}

struct DiscLayer {
    name: String,
    conv: ConvParams,
    pv: PowerVectors,
    leaky: bool,
}

/// Patch discriminator: three 5x5 stride-2 convolutions (64, 128, 256
/// channels) with leaky ReLU, then a 3x3 stride-1 projection to a 1-channel
/// patch score map. Every weight is spectrally normalized with one power
/// iteration per forward pass.
pub struct Discriminator {
    layers: Vec<DiscLayer>,
}

/// Per-layer intermediates for the backward pass.
pub struct DiscCache {
    /// (input to the layer, pre-activation output, normalized conv, sigma).
    layers: Vec<(Tensor, Tensor, ConvParams, f32)>,
}

impl Discriminator {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plans = [
            (3usize, 64usize, 5usize, 2usize, true),
            (64, 128, 5, 2, true),
            (128, 256, 5, 2, true),
            (256, 1, 3, 1, false),
        ];
        let mut layers = Vec::new();
        for (i, &(in_c, out_c, k, stride, leaky)) in plans.iter().enumerate() {
            let fan_in = in_c * k * k;
            let std = (2.0 / fan_in as f64).sqrt();
            let normal = rand_distr::Normal::new(0.0, std).unwrap();
            let weight = Tensor::from_fn([out_c, in_c, k, k], |_, _, _, _| {
                rand_distr::Distribution::sample(&normal, &mut rng) as f32
            });
            let conv = ConvParams::new(weight, vec![0.0; out_c], stride, k / 2)
                .expect("discriminator conv construction is always valid");
            let pv = PowerVectors::new(out_c, in_c * k * k, seed ^ (i as u64 + 1));
            layers.push(DiscLayer {
                name: format!("d{i}"),
                conv,
                pv,
                leaky,
            });
        }
        Discriminator { layers }
    }

    /// Forward with one power-iteration update per layer (training behavior).
    /// Returns the patch score map and the cache for [`Discriminator::backward`].
    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, DiscCache)> {
        let mut cur = x.clone();
        let mut cache = Vec::with_capacity(self.layers.len());
        for layer in &mut self.layers {
            let (normed_w, sigma) = spectral_normalize(&layer.conv.weight, &mut layer.pv)?;
            let normed = ConvParams::new(
                normed_w,
                layer.conv.bias.clone(),
                layer.conv.stride,
                layer.conv.padding,
            )?;
            let pre = conv2d_forward(&cur, &normed)?;
            let out = if layer.leaky {
                leaky_relu(&pre, DEFAULT_LEAKY_SLOPE)
            } else {
                pre.clone()
            };
            cache.push((cur, pre, normed, sigma));
            cur = out;
        }
        Ok((cur, DiscCache { layers: cache }))
    }

    /// Backward paired with [`Discriminator::forward_train`]. Returns
    /// gradients for the raw weights (treating the spectral scale as a
    /// constant: dW = dW_normalized / sigma) and the gradient at the input.
    pub fn backward(
        &self,
        cache: &DiscCache,
        upstream: &Tensor,
    ) -> Result<(BTreeMap<String, Vec<f32>>, Tensor)> {
        if cache.layers.len() != self.layers.len() {
            return Err(Error::InvalidArgument(
                "discriminator cache does not match layer count".into(),
            ));
        }
        let mut grads = BTreeMap::new();
        let mut d_out = upstream.clone();
        for (layer, (input, pre, normed, sigma)) in
            self.layers.iter().zip(cache.layers.iter()).rev()
        {
            let d_pre = if layer.leaky {
                leaky_relu_backward(pre, &d_out, DEFAULT_LEAKY_SLOPE)?
            } else {
                d_out
            };
            let cg = conv2d_backward(input, normed, &d_pre)?;
            let inv_sigma = if *sigma != 0.0 { 1.0 / *sigma } else { 1.0 };
            grads.insert(
                format!("{}.weight", layer.name),
                cg.weight.data().iter().map(|&g| g * inv_sigma).collect(),
            );
            grads.insert(format!("{}.bias", layer.name), cg.bias);
            d_out = cg.input;
        }
        Ok((grads, d_out))
    }

    /// Current spectral-norm estimates, one per layer, for diagnostics.
    pub fn sigma_estimates(&mut self) -> Result<Vec<f32>> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            let (_, sigma) = spectral_normalize(&layer.conv.weight, &mut layer.pv)?;
            out.push(sigma);
        }
        Ok(out)
    }
}

impl ParamSet for Discriminator {
    fn visit_params_flat(&mut self, f: &mut dyn FnMut(&str, &mut [f32])) {
        for layer in &mut self.layers {
            f(&format!("{}.weight", layer.name), layer.conv.weight.data_mut());
            f(&format!("{}.bias", layer.name), &mut layer.conv.bias);
        }
    }
}
