//! A small trainable image classifier standing in for the large pretrained
//! network the similarity metric is normally driven by, plus the synthetic
//! texture dataset used to exercise it.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::metrics::Classifier;
use crate::tensor::{
    conv2d_backward, conv2d_forward, leaky_relu, leaky_relu_backward, ConvParams, Tensor,
};
use crate::trainer::{adam_step, downsample_gt, AdamParams, AdamState, ParamSet, THUMB_FACTOR};

const SLOPE: f32 = 0.2;
const CHANNELS: [usize; 3] = [8, 16, 32];

/// Fixed 8x box-average stem, three stride-2 convolutions, global average
/// pooling, and a linear head.
#[derive(Debug, Clone)]
pub struct ToyClassifier {
    convs: [ConvParams; 3],
    head_weight: Vec<f32>,
    head_bias: Vec<f32>,
    classes: usize,
}

struct ForwardCache {
    conv_inputs: [Tensor; 3],
    pre_activations: [Tensor; 3],
    pooled: Vec<f32>,
    pool_hw: (usize, usize),
}

impl ToyClassifier {
    pub fn new(classes: usize, seed: u64) -> Result<ToyClassifier> {
        if classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "classifier needs at least 2 classes, got {classes}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut he_conv = |in_c: usize, out_c: usize| {
            let fan_in = in_c * 9;
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            let weight = Tensor::from_fn([out_c, in_c, 3, 3], |_, _, _, _| {
                normal.sample(&mut rng) as f32
            });
            ConvParams::new(weight, vec![0.0; out_c], 2, 1).expect("static conv config")
        };
        let convs = [
            he_conv(3, CHANNELS[0]),
            he_conv(CHANNELS[0], CHANNELS[1]),
            he_conv(CHANNELS[1], CHANNELS[2]),
        ];
        let feat = CHANNELS[2];
        let normal = Normal::new(0.0, (2.0 / feat as f64).sqrt()).unwrap();
        let head_weight = (0..classes * feat)
            .map(|_| normal.sample(&mut rng) as f32)
            .collect();
        Ok(ToyClassifier {
            convs,
            head_weight,
            head_bias: vec![0.0; classes],
            classes,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    fn forward_cached(&self, image: &Tensor) -> Result<(Vec<f32>, ForwardCache)> {
        let [n, c, h, w] = image.shape();
        if n != 1 || c != 3 {
            return Err(Error::ShapeMismatch(format!(
                "classifier expects a [1, 3, h, w] image, got {:?}",
                image.shape()
            )));
        }
        if h % THUMB_FACTOR != 0 || w % THUMB_FACTOR != 0 || h < 32 || w < 32 {
            return Err(Error::ShapeMismatch(format!(
                "classifier input extent must be a multiple of {THUMB_FACTOR} and at least 32, got {h}x{w}"
            )));
        }
        let stem = downsample_gt(image)?;

        let mut x = stem;
        let mut conv_inputs: Vec<Tensor> = Vec::with_capacity(3);
        let mut pre_activations: Vec<Tensor> = Vec::with_capacity(3);
        for conv in &self.convs {
            conv_inputs.push(x.clone());
            let pre = conv2d_forward(&x, conv)?;
            x = leaky_relu(&pre, SLOPE);
            pre_activations.push(pre);
        }

        let (fh, fw) = (x.h(), x.w());
        let area = (fh * fw) as f64;
        let feat = CHANNELS[2];
        let mut pooled = vec![0.0f32; feat];
        for (ch, slot) in pooled.iter_mut().enumerate() {
            let mut acc = 0.0f64;
            for y in 0..fh {
                for xx in 0..fw {
                    acc += x.get(0, ch, y, xx) as f64;
                }
            }
            *slot = (acc / area) as f32;
        }

        let mut logits = vec![0.0f32; self.classes];
        for (k, logit) in logits.iter_mut().enumerate() {
            let mut acc = self.head_bias[k] as f64;
            for (ch, &p) in pooled.iter().enumerate() {
                acc += self.head_weight[k * feat + ch] as f64 * p as f64;
            }
            *logit = acc as f32;
        }

        let cache = ForwardCache {
            conv_inputs: conv_inputs.try_into().expect("three conv layers"),
            pre_activations: pre_activations.try_into().expect("three conv layers"),
            pooled,
            pool_hw: (fh, fw),
        };
        Ok((logits, cache))
    }

    /// Gradients of a scalar loss with `d_logits` at the head output.
    fn backward(
        &self,
        cache: &ForwardCache,
        d_logits: &[f32],
    ) -> Result<BTreeMap<String, Vec<f32>>> {
        let feat = CHANNELS[2];
        let mut grads: BTreeMap<String, Vec<f32>> = BTreeMap::new();

        let mut d_head_w = vec![0.0f32; self.classes * feat];
        let mut d_pooled = vec![0.0f64; feat];
        for k in 0..self.classes {
            for ch in 0..feat {
                d_head_w[k * feat + ch] = d_logits[k] * cache.pooled[ch];
                d_pooled[ch] += d_logits[k] as f64 * self.head_weight[k * feat + ch] as f64;
            }
        }
        grads.insert("head.weight".into(), d_head_w);
        grads.insert("head.bias".into(), d_logits.to_vec());

        let (fh, fw) = cache.pool_hw;
        let area = (fh * fw) as f32;
        let d_act = Tensor::from_fn([1, feat, fh, fw], |_, ch, _, _| {
            d_pooled[ch] as f32 / area
        });

        let mut upstream = d_act;
        for i in (0..3).rev() {
            let d_pre = leaky_relu_backward(&cache.pre_activations[i], &upstream, SLOPE)?;
            let conv_grads = conv2d_backward(&cache.conv_inputs[i], &self.convs[i], &d_pre)?;
            grads.insert(format!("c{}.weight", i + 1), conv_grads.weight.into_data());
            grads.insert(format!("c{}.bias", i + 1), conv_grads.bias);
            upstream = conv_grads.input;
        }
        Ok(grads)
    }
}

impl Classifier for ToyClassifier {
    fn num_classes(&self) -> usize {
        self.classes
    }

    fn logits(&self, image: &Tensor) -> Result<Vec<f32>> {
        Ok(self.forward_cached(image)?.0)
    }
}

impl ParamSet for ToyClassifier {
    fn visit_params_flat(&mut self, f: &mut dyn FnMut(&str, &mut [f32])) {
        for (i, conv) in self.convs.iter_mut().enumerate() {
            f(&format!("c{}.weight", i + 1), conv.weight.data_mut());
            f(&format!("c{}.bias", i + 1), &mut conv.bias);
        }
        f("head.weight", &mut self.head_weight);
        f("head.bias", &mut self.head_bias);
    }
}

/// Stable softmax cross-entropy; returns (loss, d_logits).
fn cross_entropy(logits: &[f32], label: usize) -> (f64, Vec<f32>) {
    let max = logits.iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
    let exps: Vec<f64> = logits.iter().map(|&z| ((z as f64) - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + max - logits[label] as f64;
    let d: Vec<f32> = exps
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let p = e / sum;
            (p - if i == label { 1.0 } else { 0.0 }) as f32
        })
        .collect();
    (loss, d)
}

fn accuracy(cls: &ToyClassifier, dataset: &[(Tensor, usize)]) -> Result<f64> {
    let mut hits = 0usize;
    for (image, label) in dataset {
        if crate::metrics::argmax(&cls.logits(image)?) == *label {
            hits += 1;
        }
    }
    Ok(hits as f64 / dataset.len() as f64)
}

/// Trains the toy classifier with Adam and cross-entropy, stopping early at
/// 90% training accuracy. Deterministic per seed. Returns the classifier and
/// its final training accuracy; exhausting the budget below 60% is an error.
pub fn train_toy_classifier(
    dataset: &[(Tensor, usize)],
    classes: usize,
    seed: u64,
    max_steps: usize,
) -> Result<(ToyClassifier, f64)> {
    if classes < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    let mut per_class = vec![0usize; classes];
    for (_, label) in dataset {
        if *label >= classes {
            return Err(Error::InvalidArgument(format!(
                "label {label} exceeds class count {classes}"
            )));
        }
        per_class[*label] += 1;
    }
    if let Some(class) = per_class.iter().position(|&c| c < 8) {
        return Err(Error::InvalidArgument(format!(
            "class {class} has {} images, need at least 8",
            per_class[class]
        )));
    }

    let mut cls = ToyClassifier::new(classes, seed)?;
    let mut opt = AdamState::new(AdamParams {
        lr: 3e-3,
        beta1: 0.9,
        beta2: 0.999,
        epsilon: 1e-8,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let batch = 16.min(dataset.len());
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut cursor = order.len();

    let mut acc = accuracy(&cls, dataset)?;
    for step in 0..max_steps {
        let mut batch_grads: BTreeMap<String, Vec<f32>> = BTreeMap::new();
        for _ in 0..batch {
            if cursor >= order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let (image, label) = &dataset[order[cursor]];
            cursor += 1;
            let (logits, cache) = cls.forward_cached(image)?;
            let (_, d_logits) = cross_entropy(&logits, *label);
            for (name, g) in cls.backward(&cache, &d_logits)? {
                batch_grads
                    .entry(name)
                    .and_modify(|acc| {
                        for (a, b) in acc.iter_mut().zip(&g) {
                            *a += b;
                        }
                    })
                    .or_insert(g);
            }
        }
        for g in batch_grads.values_mut() {
            for v in g.iter_mut() {
                *v /= batch as f32;
            }
        }
        adam_step(&mut opt, &mut cls, &batch_grads)?;

        if (step + 1) % 25 == 0 || step + 1 == max_steps {
            acc = accuracy(&cls, dataset)?;
            if acc >= 0.9 {
                return Ok((cls, acc));
            }
        }
    }
    if acc < 0.6 {
        return Err(Error::Training(format!(
            "classifier stalled at {:.1}% training accuracy after {max_steps} steps",
            acc * 100.0
        )));
    }
    Ok((cls, acc))
}

pub const TEXTURE_CLASS_NAMES: [&str; 4] = ["solid", "gradient", "checker", "noise"];

/// Labeled synthetic textures: solid colors, horizontal gradients,
/// checkerboards, and uniform noise, `per_class` images each, shuffled
/// deterministically.
pub fn synth_texture_dataset(per_class: usize, size: usize, seed: u64) -> Vec<(Tensor, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dataset = Vec::with_capacity(per_class * 4);
    for class in 0..4usize {
        for _ in 0..per_class {
            let image = match class {
                0 => {
                    let color: [f32; 3] = [rng.gen(), rng.gen(), rng.gen()];
                    Tensor::from_fn([1, 3, size, size], |_, c, _, _| color[c])
                }
                1 => {
                    let from: [f32; 3] = [rng.gen(), rng.gen(), rng.gen()];
                    let to: [f32; 3] = [rng.gen(), rng.gen(), rng.gen()];
                    Tensor::from_fn([1, 3, size, size], |_, c, _, x| {
                        let t = x as f32 / (size - 1).max(1) as f32;
                        from[c] * (1.0 - t) + to[c] * t
                    })
                }
                2 => {
                    let a: [f32; 3] = [rng.gen(), rng.gen(), rng.gen()];
                    let b: [f32; 3] = [rng.gen(), rng.gen(), rng.gen()];
                    let cell = *[8usize, 16, 32].choose(&mut rng).unwrap();
                    Tensor::from_fn([1, 3, size, size], |_, c, y, x| {
                        if (y / cell + x / cell) % 2 == 0 {
                            a[c]
                        } else {
                            b[c]
                        }
                    })
                }
                _ => {
                    let mut noise = Tensor::zeros([1, 3, size, size]);
                    for v in noise.data_mut() {
                        *v = rng.gen();
                    }
                    noise
                }
            };
            dataset.push((image, class));
        }
    }
    dataset.shuffle(&mut rng);
    dataset
}

/// Persists the classifier in the shared container format.
pub fn save_classifier(path: &Path, cls: &ToyClassifier) -> Result<()> {
    use crate::trainer::{write_entries, Entry};
    let mut entries = vec![Entry::scalar("toycls.classes", cls.classes as f32)];
    let mut snapshot = cls.clone();
    snapshot.visit_params_flat(&mut |name, data| {
        entries.push(Entry {
            name: format!("toycls.param.{name}"),
            dims: vec![data.len() as u32],
            data: data.to_vec(),
        });
    });
    write_entries(path, &entries)
}

pub fn load_classifier(path: &Path) -> Result<ToyClassifier> {
    use crate::trainer::read_entries;
    let entries = read_entries(path)?;
    let map: BTreeMap<String, Vec<f32>> =
        entries.into_iter().map(|e| (e.name, e.data)).collect();
    let classes = map
        .get("toycls.classes")
        .and_then(|d| d.first())
        .ok_or_else(|| Error::Checkpoint("not a classifier file: missing class count".into()))?;
    let mut cls = ToyClassifier::new(*classes as usize, 0)?;
    let mut problem: Option<String> = None;
    let mut consumed = 1usize;
    cls.visit_params_flat(&mut |name, data| {
        let key = format!("toycls.param.{name}");
        match map.get(&key) {
            Some(stored) if stored.len() == data.len() => {
                data.copy_from_slice(stored);
                consumed += 1;
            }
            Some(_) => problem = Some(format!("parameter '{name}' has the wrong size")),
            None => problem = Some(format!("missing parameter '{name}'")),
        }
    });
    if let Some(problem) = problem {
        return Err(Error::Checkpoint(problem));
    }
    if consumed != map.len() {
        return Err(Error::Checkpoint(
            "classifier file contains unrecognized entries".into(),
        ));
    }
    Ok(cls)
}
