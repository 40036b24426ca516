//! The compression network: a residual stack of gated convolutions that maps
//! a damaged full-resolution image plus its validity mask to a repaired
//! thumbnail at 1/8 scale (1/2 per residual pair).
//!
//! Structure, per block table: pairs of (residual conv, gated conv stack)
//! whose outputs are summed, followed by a single mapping layer that projects
//! to 3 channels through a sigmoid. The image stream carries features; the
//! mask stream carries each layer's gate forward as the next layer's mask
//! features.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::gated::{
    gated_backward, gated_forward_cached, FeatureActivation, GateActivation, GatedCache,
    GatedConvLayer,
};
use crate::tensor::{
    batch_norm_backward, batch_norm_infer, batch_norm_train, conv2d_backward, conv2d_forward,
    elementwise_add, BatchNormState, BnCache, ConvParams, Tensor, DEFAULT_LEAKY_SLOPE,
};

/// Role of one block row in a network description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Plain 1-layer convolution on the image stream, added to the paired
    /// stack's output.
    Residual,
    /// `count` gated convolutions; the first applies the block stride, the
    /// rest keep resolution.
    ConvStack,
    /// Final gated convolution projecting to 3 image channels via sigmoid.
    Mapping,
}

impl BlockKind {
    fn parse(s: &str) -> Option<BlockKind> {
        match s {
            "residual" => Some(BlockKind::Residual),
            "conv_stack" => Some(BlockKind::ConvStack),
            "mapping" => Some(BlockKind::Mapping),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            BlockKind::Residual => "residual",
            BlockKind::ConvStack => "conv_stack",
            BlockKind::Mapping => "mapping",
        }
    }
}

/// One row of a network description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSpec {
    pub name: String,
    pub kind: BlockKind,
    pub kernel: usize,
    pub channels: usize,
    pub stride: usize,
    pub count: usize,
}

/// Parses the plain-text network description: one block per line,
/// `name kind kernel channels stride count`, `#` starts a comment.
pub fn parse_netspec(text: &str) -> Result<Vec<BlockSpec>> {
    let mut blocks = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Config(format!(
                "line {}: expected 6 fields (name kind kernel channels stride count), got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let kind = BlockKind::parse(fields[1]).ok_or_else(|| {
            Error::Config(format!(
                "line {}: unknown block kind '{}'",
                lineno + 1,
                fields[1]
            ))
        })?;
        let num = |s: &str, what: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| {
                Error::Config(format!("line {}: bad {what} '{s}'", lineno + 1))
            })
        };
        blocks.push(BlockSpec {
            name: fields[0].to_string(),
            kind,
            kernel: num(fields[2], "kernel")?,
            channels: num(fields[3], "channels")?,
            stride: num(fields[4], "stride")?,
            count: num(fields[5], "count")?,
        });
    }
    if blocks.is_empty() {
        return Err(Error::Config("network description has no blocks".into()));
    }
    Ok(blocks)
}

fn spec_row(name: &str, kind: BlockKind, kernel: usize, channels: usize, stride: usize, count: usize) -> BlockSpec {
    BlockSpec {
        name: name.to_string(),
        kind,
        kernel,
        channels,
        stride,
        count,
    }
}

/// The full-size production layout: three residual pairs narrowing
/// 256 -> 128 -> 64 -> 32, then the 3-channel mapping layer.
pub fn full_spec() -> Vec<BlockSpec> {
    vec![
        spec_row("rb_0", BlockKind::Residual, 1, 64, 2, 1),
        spec_row("cb_0", BlockKind::ConvStack, 5, 64, 2, 5),
        spec_row("rb_1", BlockKind::Residual, 1, 196, 2, 1),
        spec_row("cb_1", BlockKind::ConvStack, 5, 196, 2, 5),
        spec_row("rb_2", BlockKind::Residual, 3, 256, 2, 1),
        spec_row("cb_2", BlockKind::ConvStack, 3, 256, 2, 7),
        spec_row("mb", BlockKind::Mapping, 3, 3, 1, 1),
    ]
}

/// Same topology as [`full_spec`] with narrow channels: every kernel,
/// stride, and layer count is identical, so behavior-level findings transfer,
/// but a desktop core can train it in minutes.
pub fn shrunk_spec() -> Vec<BlockSpec> {
    vec![
        spec_row("rb_0", BlockKind::Residual, 1, 4, 2, 1),
        spec_row("cb_0", BlockKind::ConvStack, 5, 4, 2, 5),
        spec_row("rb_1", BlockKind::Residual, 1, 8, 2, 1),
        spec_row("cb_1", BlockKind::ConvStack, 5, 8, 2, 5),
        spec_row("rb_2", BlockKind::Residual, 3, 8, 2, 1),
        spec_row("cb_2", BlockKind::ConvStack, 3, 8, 2, 7),
        spec_row("mb", BlockKind::Mapping, 3, 3, 1, 1),
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct NetworkOptions {
    pub gate_activation: GateActivation,
    pub leaky_slope: f32,
}

impl Default for NetworkOptions {
    fn default() -> Self {
        NetworkOptions {
            gate_activation: GateActivation::Sigmoid,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }
}

struct StackLayer {
    /// Global layer name, e.g. `cb_1.conv_6`.
    name: String,
    gated: GatedConvLayer,
    bn: BatchNormState,
}

struct Pair {
    residual_name: String,
    residual: ConvParams,
    stack: Vec<StackLayer>,
}

pub struct Network {
    specs: Vec<BlockSpec>,
    options: NetworkOptions,
    pairs: Vec<Pair>,
    mapping_name: String,
    mapping: GatedConvLayer,
}

fn plain_conv(in_c: usize, out_c: usize, kernel: usize, stride: usize) -> ConvParams {
    let padding = kernel / 2;
    ConvParams::new(
        Tensor::zeros([out_c, in_c, kernel, kernel]),
        vec![0.0; out_c],
        stride,
        padding,
    )
    .expect("internal conv construction is always valid")
}

fn gated_layer(
    img_in: usize,
    mask_in: usize,
    out_c: usize,
    kernel: usize,
    stride: usize,
    feature: FeatureActivation,
    gate: GateActivation,
) -> GatedConvLayer {
    GatedConvLayer::new(
        plain_conv(img_in, out_c, kernel, stride),
        plain_conv(mask_in, out_c, kernel, stride),
        feature,
        gate,
    )
    .expect("internal gated construction is always valid")
}

impl Network {
    /// Validates a block table and assembles the (zero-initialized) network.
    ///
    /// Structural rules: one or more (residual, conv_stack) pairs followed by
    /// exactly one mapping block; paired blocks agree on channels and stride;
    /// kernels are odd (so `padding = kernel / 2` is resolution-neutral at
    /// stride 1); the mapping block has 3 channels, stride 1, count 1.
    pub fn build(specs: &[BlockSpec], options: NetworkOptions) -> Result<Network> {
        if specs.len() < 3 || specs.len() % 2 == 0 {
            return Err(Error::Config(format!(
                "network needs (residual, conv_stack) pairs plus one mapping block, got {} blocks",
                specs.len()
            )));
        }
        {
            let mut seen = std::collections::BTreeSet::new();
            for s in specs {
                if !seen.insert(&s.name) {
                    return Err(Error::Config(format!("duplicate block name '{}'", s.name)));
                }
                if s.kernel % 2 == 0 || s.kernel == 0 {
                    return Err(Error::Config(format!(
                        "block '{}': kernel must be odd and positive, got {}",
                        s.name, s.kernel
                    )));
                }
                if s.channels == 0 || s.stride == 0 || s.count == 0 {
                    return Err(Error::Config(format!(
                        "block '{}': channels, stride, and count must be positive",
                        s.name
                    )));
                }
            }
        }

        let n_pairs = (specs.len() - 1) / 2;
        let mut pairs = Vec::with_capacity(n_pairs);
        let mut img_c = 3usize;
        let mut mask_c = 1usize;
        let mut conv_index = 0usize;

        for p in 0..n_pairs {
            let rb = &specs[2 * p];
            let cb = &specs[2 * p + 1];
            if rb.kind != BlockKind::Residual || cb.kind != BlockKind::ConvStack {
                return Err(Error::Config(format!(
                    "blocks {} and {} must form a (residual, conv_stack) pair",
                    rb.name, cb.name
                )));
            }
            if rb.count != 1 {
                return Err(Error::Config(format!(
                    "residual block '{}' must have count 1, got {}",
                    rb.name, rb.count
                )));
            }
            if rb.channels != cb.channels {
                return Err(Error::Config(format!(
                    "pair ({}, {}) disagrees on channels: {} vs {}",
                    rb.name, cb.name, rb.channels, cb.channels
                )));
            }
            if rb.stride != cb.stride {
                return Err(Error::Config(format!(
                    "pair ({}, {}) disagrees on cumulative stride: {} vs {}",
                    rb.name, cb.name, rb.stride, cb.stride
                )));
            }

            let residual = plain_conv(img_c, rb.channels, rb.kernel, rb.stride);
            let mut stack = Vec::with_capacity(cb.count);
            for li in 0..cb.count {
                let stride = if li == 0 { cb.stride } else { 1 };
                let (gin_img, gin_mask) = if li == 0 {
                    (img_c, mask_c)
                } else {
                    (cb.channels, cb.channels)
                };
                stack.push(StackLayer {
                    name: format!("{}.conv_{}", cb.name, conv_index),
                    gated: gated_layer(
                        gin_img,
                        gin_mask,
                        cb.channels,
                        cb.kernel,
                        stride,
                        FeatureActivation::LeakyRelu(options.leaky_slope),
                        options.gate_activation,
                    ),
                    bn: BatchNormState::new(cb.channels),
                });
                conv_index += 1;
            }
            pairs.push(Pair {
                residual_name: rb.name.clone(),
                residual,
                stack,
            });
            img_c = cb.channels;
            mask_c = cb.channels;
        }

        let mb = &specs[specs.len() - 1];
        if mb.kind != BlockKind::Mapping {
            return Err(Error::Config(format!(
                "last block '{}' must be the mapping block",
                mb.name
            )));
        }
        if mb.channels != 3 || mb.stride != 1 || mb.count != 1 {
            return Err(Error::Config(format!(
                "mapping block '{}' must have channels 3, stride 1, count 1",
                mb.name
            )));
        }
        let mapping = gated_layer(
            img_c,
            mask_c,
            3,
            mb.kernel,
            1,
            FeatureActivation::Sigmoid,
            options.gate_activation,
        );

        Ok(Network {
            specs: specs.to_vec(),
            options,
            pairs,
            mapping_name: mb.name.clone(),
            mapping,
        })
    }

    pub fn specs(&self) -> &[BlockSpec] {
        &self.specs
    }

    pub fn options(&self) -> NetworkOptions {
        self.options
    }

    /// Product of pair strides; input height and width must be divisible by
    /// this, and outputs are this factor smaller.
    pub fn downsample_factor(&self) -> usize {
        self.pairs.iter().map(|p| p.residual.stride).product()
    }

    /// He-normal weights (std = sqrt(2 / fan_in)) for every convolution, zero
    /// biases, identity batch-norm parameters. Deterministic in `seed`.
    pub fn init_parameters(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.visit_params_mut(&mut |view: ParamView| {
            let is_kernel = view.dims.len() == 4;
            if is_kernel {
                let fan_in: u32 = view.dims[1] * view.dims[2] * view.dims[3];
                let std = (2.0 / fan_in as f64).sqrt();
                let normal = Normal::new(0.0, std).unwrap();
                for v in view.data.iter_mut() {
                    *v = normal.sample(&mut rng) as f32;
                }
            } else if view.name.ends_with(".gamma") {
                view.data.fill(1.0);
            } else {
                // Biases and beta start at zero.
                view.data.fill(0.0);
            }
        });
        for pair in &mut self.pairs {
            for layer in &mut pair.stack {
                layer.bn.running_mean.fill(0.0);
                layer.bn.running_var.fill(1.0);
            }
        }
    }

    fn check_shapes(&self, image: &Tensor, mask: &Tensor) -> Result<()> {
        let [n, c, h, w] = image.shape();
        if c != 3 {
            return Err(Error::ShapeMismatch(format!(
                "network input must have 3 channels, got {c}"
            )));
        }
        let [nm, cm, hm, wm] = mask.shape();
        if cm != 1 {
            return Err(Error::ShapeMismatch(format!(
                "network mask must have 1 channel, got {cm}"
            )));
        }
        if nm != n || hm != h || wm != w {
            return Err(Error::ShapeMismatch(format!(
                "mask shape {:?} does not match image shape {:?}",
                mask.shape(),
                image.shape()
            )));
        }
        let f = self.downsample_factor();
        if h % f != 0 || w % f != 0 {
            return Err(Error::ShapeMismatch(format!(
                "input height and width must be divisible by {f}, got {h}x{w}"
            )));
        }
        Ok(())
    }

    /// Zeroes hole pixels: each image channel multiplied by the mask.
    fn mask_image(image: &Tensor, mask: &Tensor) -> Tensor {
        let [n, c, h, w] = image.shape();
        Tensor::from_fn([n, c, h, w], |bn, ch, y, x| {
            image.get(bn, ch, y, x) * mask.get(bn, 0, y, x)
        })
    }

    /// Inference forward: batch-norm uses running statistics, nothing is
    /// mutated, and calling twice on the same input is bitwise identical.
    ///
    /// Strict contract: `mask` must be exactly 0/1 and `image` within [0, 1].
    pub fn infer(&self, image: &Tensor, mask: &Tensor) -> Result<Tensor> {
        self.check_shapes(image, mask)?;
        if !mask.is_binary() {
            return Err(Error::InvalidArgument(
                "network mask must be exactly 0/1 valued".into(),
            ));
        }
        if image.data().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument(
                "network image values must lie in [0, 1]".into(),
            ));
        }

        let mut img = Self::mask_image(image, mask);
        let mut msk = mask.clone();
        for pair in &self.pairs {
            let residual = conv2d_forward(&img, &pair.residual)?;
            for layer in &pair.stack {
                let (out, gate, _) = gated_forward_cached(&img, &msk, &layer.gated)?;
                img = batch_norm_infer(&out, &layer.bn)?;
                msk = gate;
            }
            img = elementwise_add(&img, &residual)?;
        }
        let (out, _, _) = gated_forward_cached(&img, &msk, &self.mapping)?;
        Ok(out)
    }

    /// Training forward: batch-norm normalizes with batch statistics and
    /// updates running estimates. Returns the thumbnail and the cache for
    /// [`Network::backward`]. Shape checks only; values are unconstrained so
    /// the finite-difference harness can probe freely.
    pub fn forward_train(&mut self, image: &Tensor, mask: &Tensor) -> Result<(Tensor, ForwardCache)> {
        self.check_shapes(image, mask)?;
        let mut img = Self::mask_image(image, mask);
        let mut msk = mask.clone();
        let mut pair_caches = Vec::with_capacity(self.pairs.len());
        for pair in &mut self.pairs {
            let residual = conv2d_forward(&img, &pair.residual)?;
            let mut layer_caches = Vec::with_capacity(pair.stack.len());
            for layer in &mut pair.stack {
                let (out, gate, gcache) = gated_forward_cached(&img, &msk, &layer.gated)?;
                let (normed, bn_cache) = batch_norm_train(&out, &mut layer.bn)?;
                img = normed;
                msk = gate;
                layer_caches.push((gcache, bn_cache));
            }
            img = elementwise_add(&img, &residual)?;
            pair_caches.push(layer_caches);
        }
        let (out, _, map_cache) = gated_forward_cached(&img, &msk, &self.mapping)?;
        let cache = ForwardCache {
            mask: mask.clone(),
            pairs: pair_caches,
            mapping: map_cache,
        };
        Ok((out, cache))
    }

    /// Backward pass paired with [`Network::forward_train`]. Returns
    /// gradients for every learnable parameter (keyed like the parameter
    /// registry) plus the gradient with respect to the input image.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Tensor) -> Result<NetGradients> {
        let mut grads: BTreeMap<String, Vec<f32>> = BTreeMap::new();

        // Mapping layer; its gate has no downstream consumer.
        let zero_gate = Tensor::zeros(cache.mapping.gate.shape());
        let map_grads = gated_backward(&self.mapping, &cache.mapping, d_out, &zero_gate)?;
        grads.insert(
            format!("{}.weight", self.mapping_name),
            map_grads.image_weight.into_data(),
        );
        grads.insert(format!("{}.bias", self.mapping_name), map_grads.image_bias);
        grads.insert(
            format!("{}.mask_weight", self.mapping_name),
            map_grads.mask_weight.into_data(),
        );
        grads.insert(
            format!("{}.mask_bias", self.mapping_name),
            map_grads.mask_bias,
        );
        let mut d_img = map_grads.image_in;
        let mut d_msk = map_grads.mask_in;

        for (pair, layer_caches) in self.pairs.iter().zip(cache.pairs.iter()).rev() {
            // The pair output is stack_out + residual_out: the incoming image
            // gradient feeds both branches unchanged.
            let d_residual = d_img.clone();
            for (layer, (gcache, bn_cache)) in
                pair.stack.iter().zip(layer_caches.iter()).rev()
            {
                let bn_grads = batch_norm_backward(bn_cache, &layer.bn, &d_img)?;
                grads.insert(format!("{}.gamma", layer.name), bn_grads.gamma);
                grads.insert(format!("{}.beta", layer.name), bn_grads.beta);
                let g = gated_backward(&layer.gated, gcache, &bn_grads.input, &d_msk)?;
                grads.insert(format!("{}.weight", layer.name), g.image_weight.into_data());
                grads.insert(format!("{}.bias", layer.name), g.image_bias);
                grads.insert(
                    format!("{}.mask_weight", layer.name),
                    g.mask_weight.into_data(),
                );
                grads.insert(format!("{}.mask_bias", layer.name), g.mask_bias);
                d_img = g.image_in;
                d_msk = g.mask_in;
            }
            // Residual conv sees the pair's input image stream.
            let pair_input = &layer_caches[0].0.image_in;
            let rg = conv2d_backward(pair_input, &pair.residual, &d_residual)?;
            grads.insert(
                format!("{}.weight", pair.residual_name),
                rg.weight.into_data(),
            );
            grads.insert(format!("{}.bias", pair.residual_name), rg.bias);
            d_img = elementwise_add(&d_img, &rg.input)?;
        }

        // Undo the input masking: d(image) = d(masked) .* mask per channel.
        let [n, c, h, w] = d_img.shape();
        let d_image = Tensor::from_fn([n, c, h, w], |bn, ch, y, x| {
            d_img.get(bn, ch, y, x) * cache.mask.get(bn, 0, y, x)
        });

        Ok(NetGradients {
            params: grads,
            input_image: d_image,
            input_mask_stream: d_msk,
        })
    }

    /// Visits every learnable parameter in a fixed, documented order:
    /// for each pair, the residual conv then each stack layer (image weight,
    /// image bias, mask weight, mask bias, gamma, beta), then the mapping
    /// layer. Checkpoints, the optimizer, and initialization all share this
    /// order.
    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(ParamView)) {
        for pair in &mut self.pairs {
            visit_conv_mut(&pair.residual_name, &mut pair.residual, "", f);
            for layer in &mut pair.stack {
                visit_conv_mut(&layer.name, &mut layer.gated.image_conv, "", f);
                visit_conv_mut(&layer.name, &mut layer.gated.mask_conv, "mask_", f);
                let c = layer.bn.gamma.len() as u32;
                f(ParamView {
                    name: format!("{}.gamma", layer.name),
                    dims: vec![c],
                    data: &mut layer.bn.gamma,
                });
                f(ParamView {
                    name: format!("{}.beta", layer.name),
                    dims: vec![c],
                    data: &mut layer.bn.beta,
                });
            }
        }
        visit_conv_mut(&self.mapping_name, &mut self.mapping.image_conv, "", f);
        visit_conv_mut(&self.mapping_name, &mut self.mapping.mask_conv, "mask_", f);
    }

    /// Read-only variant of [`Network::visit_params_mut`], same order.
    pub fn visit_params(&self, f: &mut dyn FnMut(&str, &[u32], &[f32])) {
        for pair in &self.pairs {
            visit_conv(&pair.residual_name, &pair.residual, "", f);
            for layer in &pair.stack {
                visit_conv(&layer.name, &layer.gated.image_conv, "", f);
                visit_conv(&layer.name, &layer.gated.mask_conv, "mask_", f);
                let c = layer.bn.gamma.len() as u32;
                f(&format!("{}.gamma", layer.name), &[c], &layer.bn.gamma);
                f(&format!("{}.beta", layer.name), &[c], &layer.bn.beta);
            }
        }
        visit_conv(&self.mapping_name, &self.mapping.image_conv, "", f);
        visit_conv(&self.mapping_name, &self.mapping.mask_conv, "mask_", f);
    }

    /// Visits the non-learnable state (batch-norm running statistics).
    pub fn visit_running_stats(&self, f: &mut dyn FnMut(&str, &[u32], &[f32])) {
        for pair in &self.pairs {
            for layer in &pair.stack {
                let c = layer.bn.gamma.len() as u32;
                f(
                    &format!("{}.running_mean", layer.name),
                    &[c],
                    &layer.bn.running_mean,
                );
                f(
                    &format!("{}.running_var", layer.name),
                    &[c],
                    &layer.bn.running_var,
                );
            }
        }
    }

    pub fn visit_running_stats_mut(&mut self, f: &mut dyn FnMut(ParamView)) {
        for pair in &mut self.pairs {
            for layer in &mut pair.stack {
                let c = layer.bn.gamma.len() as u32;
                f(ParamView {
                    name: format!("{}.running_mean", layer.name),
                    dims: vec![c],
                    data: &mut layer.bn.running_mean,
                });
                f(ParamView {
                    name: format!("{}.running_var", layer.name),
                    dims: vec![c],
                    data: &mut layer.bn.running_var,
                });
            }
        }
    }

    /// Total learnable parameter count.
    pub fn param_count(&self) -> usize {
        let mut count = 0;
        self.visit_params(&mut |_, _, data| count += data.len());
        count
    }
}

/// One named parameter slice surfaced by the registry visitors.
pub struct ParamView<'a> {
    pub name: String,
    pub dims: Vec<u32>,
    pub data: &'a mut [f32],
}

fn visit_conv_mut(
    block: &str,
    conv: &mut ConvParams,
    prefix: &str,
    f: &mut dyn FnMut(ParamView),
) {
    let [oc, ic, kh, kw] = conv.weight.shape();
    f(ParamView {
        name: format!("{block}.{prefix}weight"),
        dims: vec![oc as u32, ic as u32, kh as u32, kw as u32],
        data: conv.weight.data_mut(),
    });
    f(ParamView {
        name: format!("{block}.{prefix}bias"),
        dims: vec![oc as u32],
        data: &mut conv.bias,
    });
}

fn visit_conv(block: &str, conv: &ConvParams, prefix: &str, f: &mut dyn FnMut(&str, &[u32], &[f32])) {
    let [oc, ic, kh, kw] = conv.weight.shape();
    f(
        &format!("{block}.{prefix}weight"),
        &[oc as u32, ic as u32, kh as u32, kw as u32],
        conv.weight.data(),
    );
    f(&format!("{block}.{prefix}bias"), &[oc as u32], &conv.bias);
}

/// Everything [`Network::backward`] needs from the paired forward pass.
pub struct ForwardCache {
    mask: Tensor,
    pairs: Vec<Vec<(GatedCache, BnCache)>>,
    mapping: GatedCache,
}

/// Parameter gradients plus input gradients from one backward pass.
pub struct NetGradients {
    /// Keyed by registry parameter name.
    pub params: BTreeMap<String, Vec<f32>>,
    /// dL/d(input image), already folded through the input hole-zeroing.
    pub input_image: Tensor,
    /// dL/d(mask stream input); diagnostic only, since the binary mask is
    /// data rather than an optimizable input.
    pub input_mask_stream: Tensor,
}
