//! Gated and partial convolution layers.
//!
//! Both carry a mask stream alongside the image stream so the network can
//! tell repaired pixels from trusted ones. The gated layer learns its gate
//! from the mask features; the partial layer derives a hard validity window
//! from a binary mask and is forward-only (it serves as a non-learned
//! baseline, not a training target).

use crate::error::{Error, Result};
use crate::tensor::{
    conv2d_backward, conv2d_forward, elementwise_mul, leaky_relu, leaky_relu_backward, sigmoid,
    sigmoid_backward, ConvParams, Tensor,
};

/// Activation applied to the image-stream convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureActivation {
    /// Leaky ReLU with the given negative-side slope.
    LeakyRelu(f32),
    /// Logistic sigmoid; used by the final mapping layer so outputs land in
    /// the unit intensity range.
    Sigmoid,
}

/// Activation applied to the gate-stream convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateActivation {
    /// Soft gate in (0, 1); the standard configuration.
    Sigmoid,
    /// No gating nonlinearity; ablation switch for experiments.
    Identity,
}

/// One gated convolution: `out = act(conv_img(image)) .* gate(conv_mask(mask))`.
///
/// The two convolutions share kernel size, stride, padding, and output
/// channels so the elementwise product is well formed.
#[derive(Debug, Clone)]
pub struct GatedConvLayer {
    pub image_conv: ConvParams,
    pub mask_conv: ConvParams,
    pub feature_activation: FeatureActivation,
    pub gate_activation: GateActivation,
}

impl GatedConvLayer {
    pub fn new(
        image_conv: ConvParams,
        mask_conv: ConvParams,
        feature_activation: FeatureActivation,
        gate_activation: GateActivation,
    ) -> Result<Self> {
        if image_conv.out_channels() != mask_conv.out_channels() {
            return Err(Error::ShapeMismatch(format!(
                "image conv outputs {} channels but mask conv outputs {}",
                image_conv.out_channels(),
                mask_conv.out_channels()
            )));
        }
        if image_conv.kernel_hw() != mask_conv.kernel_hw()
            || image_conv.stride != mask_conv.stride
            || image_conv.padding != mask_conv.padding
        {
            return Err(Error::ShapeMismatch(
                "image and mask convolutions must share kernel, stride, and padding".into(),
            ));
        }
        Ok(GatedConvLayer {
            image_conv,
            mask_conv,
            feature_activation,
            gate_activation,
        })
    }
}

/// Intermediates retained by [`gated_forward_cached`] for the backward pass.
#[derive(Debug, Clone)]
pub struct GatedCache {
    pub image_in: Tensor,
    pub mask_in: Tensor,
    /// Image-stream convolution output, before the feature activation.
    pub feat_pre: Tensor,
    /// Feature activation output.
    pub feat: Tensor,
    /// Gate-stream output after the gate activation.
    pub gate: Tensor,
}

/// Gradients of one gated layer with respect to both inputs and all weights.
#[derive(Debug, Clone)]
pub struct GatedGrads {
    pub image_in: Tensor,
    pub mask_in: Tensor,
    pub image_weight: Tensor,
    pub image_bias: Vec<f32>,
    pub mask_weight: Tensor,
    pub mask_bias: Vec<f32>,
}

fn check_streams(image_feat: &Tensor, mask_feat: &Tensor) -> Result<()> {
    let [ni, _, hi, wi] = image_feat.shape();
    let [nm, _, hm, wm] = mask_feat.shape();
    if ni != nm || hi != hm || wi != wm {
        return Err(Error::ShapeMismatch(format!(
            "image stream {:?} and mask stream {:?} must agree on batch and spatial dims",
            image_feat.shape(),
            mask_feat.shape()
        )));
    }
    Ok(())
}

fn apply_feature(pre: &Tensor, act: FeatureActivation) -> Tensor {
    match act {
        FeatureActivation::LeakyRelu(slope) => leaky_relu(pre, slope),
        FeatureActivation::Sigmoid => sigmoid(pre),
    }
}

fn apply_gate(pre: &Tensor, act: GateActivation) -> Tensor {
    match act {
        GateActivation::Sigmoid => sigmoid(pre),
        GateActivation::Identity => pre.clone(),
    }
}

/// Forward pass of a gated convolution. Returns the gated image features and
/// the gate tensor, which the caller threads forward as the next layer's mask
/// stream.
pub fn gated_forward(
    image_feat: &Tensor,
    mask_feat: &Tensor,
    layer: &GatedConvLayer,
) -> Result<(Tensor, Tensor)> {
    let (out, gate, _) = gated_forward_cached(image_feat, mask_feat, layer)?;
    Ok((out, gate))
}

/// Forward pass retaining the intermediates needed by [`gated_backward`].
/// Returns `(gated_output, gate, cache)`.
pub fn gated_forward_cached(
    image_feat: &Tensor,
    mask_feat: &Tensor,
    layer: &GatedConvLayer,
) -> Result<(Tensor, Tensor, GatedCache)> {
    check_streams(image_feat, mask_feat)?;
    let feat_pre = conv2d_forward(image_feat, &layer.image_conv)?;
    let gate_pre = conv2d_forward(mask_feat, &layer.mask_conv)?;
    let feat = apply_feature(&feat_pre, layer.feature_activation);
    let gate = apply_gate(&gate_pre, layer.gate_activation);
    let out = elementwise_mul(&feat, &gate)?;
    let cache = GatedCache {
        image_in: image_feat.clone(),
        mask_in: mask_feat.clone(),
        feat_pre,
        feat,
        gate: gate.clone(),
    };
    Ok((out, gate, cache))
}

/// Backward pass paired with [`gated_forward_cached`].
///
/// `d_out` is dL/d(gated output); `d_gate` is dL/d(gate) from downstream
/// consumers of the mask stream (zero tensor when the gate is unused).
pub fn gated_backward(
    layer: &GatedConvLayer,
    cache: &GatedCache,
    d_out: &Tensor,
    d_gate: &Tensor,
) -> Result<GatedGrads> {
    cache.feat.check_same_shape(d_out, "gated upstream")?;
    cache.gate.check_same_shape(d_gate, "gate upstream")?;

    // Product rule through out = feat .* gate.
    let d_feat = elementwise_mul(d_out, &cache.gate)?;
    let mut d_gate_total = elementwise_mul(d_out, &cache.feat)?;
    for (g, &extra) in d_gate_total.data_mut().iter_mut().zip(d_gate.data()) {
        *g += extra;
    }

    let d_feat_pre = match layer.feature_activation {
        FeatureActivation::LeakyRelu(slope) => leaky_relu_backward(&cache.feat_pre, &d_feat, slope)?,
        FeatureActivation::Sigmoid => sigmoid_backward(&cache.feat, &d_feat)?,
    };
    let d_gate_pre = match layer.gate_activation {
        GateActivation::Sigmoid => sigmoid_backward(&cache.gate, &d_gate_total)?,
        GateActivation::Identity => d_gate_total,
    };

    let img_grads = conv2d_backward(&cache.image_in, &layer.image_conv, &d_feat_pre)?;
    let mask_grads = conv2d_backward(&cache.mask_in, &layer.mask_conv, &d_gate_pre)?;

    Ok(GatedGrads {
        image_in: img_grads.input,
        mask_in: mask_grads.input,
        image_weight: img_grads.weight,
        image_bias: img_grads.bias,
        mask_weight: mask_grads.weight,
        mask_bias: mask_grads.bias,
    })
}

/// Hard-window partial convolution, forward only.
#[derive(Debug, Clone)]
pub struct PartialConvLayer {
    pub image_conv: ConvParams,
}

impl PartialConvLayer {
    pub fn new(image_conv: ConvParams) -> Self {
        PartialConvLayer { image_conv }
    }
}

/// Forward pass of a partial convolution.
///
/// The window tensor counts valid mask pixels under each kernel position,
/// clamped to 1: `window = min(sum_window(mask), 1)`. The convolved image is
/// multiplied by the window, and the window itself is returned as the
/// propagated mask, so a window position with any valid pixel becomes fully
/// valid downstream.
pub fn partial_forward(
    image: &Tensor,
    mask: &Tensor,
    layer: &PartialConvLayer,
) -> Result<(Tensor, Tensor)> {
    check_streams(image, mask)?;
    if mask.c() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "partial convolution mask must have 1 channel, got {}",
            mask.c()
        )));
    }
    if !mask.is_binary() {
        return Err(Error::InvalidArgument(
            "partial convolution mask must be exactly 0/1 valued".into(),
        ));
    }

    let conv_out = conv2d_forward(image, &layer.image_conv)?;
    let [n, _, oh, ow] = conv_out.shape();

    // Slide the kernel window over the mask, counting valid pixels.
    let (kh, kw) = layer.image_conv.kernel_hw();
    let (stride, padding) = (layer.image_conv.stride, layer.image_conv.padding);
    let [_, _, h, w] = mask.shape();
    let mut window = Tensor::zeros([n, 1, oh, ow]);
    for bn in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut count = 0u32;
                for ky in 0..kh {
                    let iy = (oy * stride + ky) as isize - padding as isize;
                    if iy < 0 || iy as usize >= h {
                        continue;
                    }
                    for kx in 0..kw {
                        let ix = (ox * stride + kx) as isize - padding as isize;
                        if ix < 0 || ix as usize >= w {
                            continue;
                        }
                        if mask.get(bn, 0, iy as usize, ix as usize) == 1.0 {
                            count += 1;
                        }
                    }
                }
                window.set(bn, 0, oy, ox, if count > 0 { 1.0 } else { 0.0 });
            }
        }
    }

    // Broadcast the single-channel window over every output channel.
    let [_, oc, _, _] = conv_out.shape();
    let mut out = conv_out;
    for bn in 0..n {
        for c in 0..oc {
            for oy in 0..oh {
                for ox in 0..ow {
                    let i = out.idx(bn, c, oy, ox);
                    out.data_mut()[i] *= window.get(bn, 0, oy, ox);
                }
            }
        }
    }
    Ok((out, window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(shape: [usize; 4], rng: &mut ChaCha8Rng, spread: f32) -> Tensor {
        Tensor::from_fn(shape, |_, _, _, _| rng.gen_range(-spread..spread))
    }

    fn small_layer(rng: &mut ChaCha8Rng, gate: GateActivation) -> GatedConvLayer {
        let image_conv = ConvParams::new(
            random_tensor([3, 2, 3, 3], rng, 0.5),
            vec![0.1, -0.1, 0.0],
            1,
            1,
        )
        .unwrap();
        let mask_conv = ConvParams::new(
            random_tensor([3, 2, 3, 3], rng, 0.5),
            vec![0.0, 0.2, -0.2],
            1,
            1,
        )
        .unwrap();
        GatedConvLayer::new(image_conv, mask_conv, FeatureActivation::LeakyRelu(0.2), gate).unwrap()
    }

    #[test]
    fn gate_lies_strictly_inside_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let layer = small_layer(&mut rng, GateActivation::Sigmoid);
            let img = random_tensor([1, 2, 6, 6], &mut rng, 1.0);
            let mask = random_tensor([1, 2, 6, 6], &mut rng, 1.0);
            let (_, gate) = gated_forward(&img, &mask, &layer).unwrap();
            for &g in gate.data() {
                assert!(g > 0.0 && g < 1.0, "gate value {g} outside (0, 1)");
            }
        }
    }

    #[test]
    fn identity_gate_with_unit_mask_conv_reduces_to_plain_conv() {
        // Identity gate activation and a mask conv that always outputs 1
        // (zero weights, unit bias) make the layer a conv + leaky relu.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let image_conv = ConvParams::new(
            random_tensor([3, 2, 3, 3], &mut rng, 0.5),
            vec![0.0; 3],
            1,
            1,
        )
        .unwrap();
        let mask_conv =
            ConvParams::new(Tensor::zeros([3, 2, 3, 3]), vec![1.0; 3], 1, 1).unwrap();
        let layer = GatedConvLayer::new(
            image_conv.clone(),
            mask_conv,
            FeatureActivation::LeakyRelu(0.2),
            GateActivation::Identity,
        )
        .unwrap();
        let img = random_tensor([1, 2, 5, 5], &mut rng, 1.0);
        let mask = random_tensor([1, 2, 5, 5], &mut rng, 1.0);
        let (out, _) = gated_forward(&img, &mask, &layer).unwrap();
        let plain = leaky_relu(&conv2d_forward(&img, &image_conv).unwrap(), 0.2);
        for (a, b) in out.data().iter().zip(plain.data()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_mismatched_stream_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let layer = small_layer(&mut rng, GateActivation::Sigmoid);
        let img = Tensor::zeros([1, 2, 6, 6]);
        let mask = Tensor::zeros([1, 2, 5, 6]);
        assert!(gated_forward(&img, &mask, &layer).is_err());
    }

    #[test]
    fn gradients_pass_finite_difference_check() {
        use crate::tensor::{grad_check, DiffFn};
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for seed in 0..5u64 {
            let layer = small_layer(&mut rng, GateActivation::Sigmoid);
            let img = random_tensor([1, 2, 4, 4], &mut rng, 1.0);
            let mask = random_tensor([1, 2, 4, 4], &mut rng, 1.0);

            // Check d(out)/d(image input) with the mask stream held fixed.
            let f_img = DiffFn {
                forward: Box::new(|x: &Tensor| {
                    Ok(gated_forward(x, &mask, &layer)?.0)
                }),
                vjp: Box::new(|x: &Tensor, u: &Tensor| {
                    let (_, _, cache) = gated_forward_cached(x, &mask, &layer)?;
                    let zero_gate = Tensor::zeros(cache.gate.shape());
                    Ok(gated_backward(&layer, &cache, u, &zero_gate)?.image_in)
                }),
            };
            let err = grad_check(&f_img, &img, 1e-3, 50 + seed).unwrap();
            assert!(err < 1e-3, "image-input gradient error {err} (seed {seed})");

            // And d(out)/d(mask input) with the image stream held fixed.
            let f_mask = DiffFn {
                forward: Box::new(|x: &Tensor| {
                    Ok(gated_forward(&img, x, &layer)?.0)
                }),
                vjp: Box::new(|x: &Tensor, u: &Tensor| {
                    let (_, _, cache) = gated_forward_cached(&img, x, &layer)?;
                    let zero_gate = Tensor::zeros(cache.gate.shape());
                    Ok(gated_backward(&layer, &cache, u, &zero_gate)?.mask_in)
                }),
            };
            let err = grad_check(&f_mask, &mask, 1e-3, 60 + seed).unwrap();
            assert!(err < 1e-3, "mask-input gradient error {err} (seed {seed})");
        }
    }

    #[test]
    fn partial_window_is_binary_and_kills_empty_regions() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let conv = ConvParams::new(
            random_tensor([2, 1, 3, 3], &mut rng, 0.5),
            vec![0.0; 2],
            1,
            1,
        )
        .unwrap();
        let layer = PartialConvLayer::new(conv);
        let img = random_tensor([1, 1, 6, 6], &mut rng, 1.0);
        // Left half valid, right half missing.
        let mask = Tensor::from_fn([1, 1, 6, 6], |_, _, _, x| if x < 3 { 1.0 } else { 0.0 });
        let (out, window) = partial_forward(&img, &mask, &layer).unwrap();
        assert!(window.is_binary(), "window must be 0/1 valued");
        // Columns 5..6 see no valid input pixel under a 3x3 kernel.
        for y in 0..6 {
            for x in 5..6 {
                assert_eq!(window.get(0, 0, y, x), 0.0);
                for c in 0..2 {
                    assert_eq!(out.get(0, c, y, x), 0.0);
                }
            }
        }
        // Column 3 borders valid pixels, so its window is 1.
        for y in 0..6 {
            assert_eq!(window.get(0, 0, y, 3), 1.0);
        }
    }

    #[test]
    fn partial_all_valid_mask_reduces_to_plain_conv() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let conv = ConvParams::new(
            random_tensor([2, 1, 3, 3], &mut rng, 0.5),
            vec![0.3, -0.3],
            1,
            1,
        )
        .unwrap();
        let layer = PartialConvLayer::new(conv.clone());
        let img = random_tensor([1, 1, 5, 5], &mut rng, 1.0);
        let mask = Tensor::full([1, 1, 5, 5], 1.0);
        let (out, window) = partial_forward(&img, &mask, &layer).unwrap();
        assert!(window.data().iter().all(|&v| v == 1.0));
        let plain = conv2d_forward(&img, &conv).unwrap();
        assert_eq!(out.data(), plain.data());
    }

    #[test]
    fn partial_rejects_non_binary_mask() {
        let conv = ConvParams::new(Tensor::zeros([1, 1, 3, 3]), vec![0.0], 1, 1).unwrap();
        let layer = PartialConvLayer::new(conv);
        let img = Tensor::zeros([1, 1, 4, 4]);
        let mask = Tensor::full([1, 1, 4, 4], 0.5);
        assert!(partial_forward(&img, &mask, &layer).is_err());
    }
}
