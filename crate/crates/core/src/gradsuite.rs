//! The enumerated gradient-check suite behind the `gradcheck` command: every
//! hand-written backward pass is compared against central finite differences
//! at fixed seeds, so a regression in any layer turns a named entry red.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gated::{
    gated_backward, gated_forward_cached, FeatureActivation, GateActivation, GatedConvLayer,
};
use crate::network::{shrunk_spec, Network, NetworkOptions};
use crate::tensor::{
    batch_norm_backward, batch_norm_train, conv2d_backward, conv2d_forward, grad_check,
    grad_check_sampled, BatchNormState, ConvParams, DiffFn, Tensor,
};
use crate::trainer::{
    l1_loss, l1_loss_backward, l2_loss, l2_loss_backward, variance_loss, variance_loss_backward,
};

/// One named check: its measured worst relative error and the budget it must
/// stay under.
#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
}

impl SuiteEntry {
    pub fn passed(&self) -> bool {
        self.error.is_finite() && self.error < self.tolerance
    }
}

fn random_tensor(shape: [usize; 4], seed: u64, lo: f32, hi: f32) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_, _, _, _| rng.gen_range(lo..hi))
}

fn conv_fixture(seed: u64, in_c: usize, out_c: usize) -> ConvParams {
    let weight = random_tensor([out_c, in_c, 3, 3], seed, -0.4, 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb10c);
    let bias = (0..out_c).map(|_| rng.gen_range(-0.2..0.2)).collect();
    ConvParams::new(weight, bias, 1, 1).expect("static fixture")
}

/// Wraps a scalar loss as a rank-4 single-element output so the generic
/// checker can drive it.
fn scalar_diff_fn<'a>(
    loss: impl Fn(&Tensor) -> Result<f64> + 'a,
    backward: impl Fn(&Tensor) -> Result<Tensor> + 'a,
) -> DiffFn<'a> {
    DiffFn {
        forward: Box::new(move |x| {
            let mut out = Tensor::zeros([1, 1, 1, 1]);
            out.data_mut()[0] = loss(x)? as f32;
            Ok(out)
        }),
        vjp: Box::new(move |x, u| {
            let g = backward(x)?;
            let scale = u.data()[0];
            Ok(g.map(|v| v * scale))
        }),
    }
}

/// Runs every check and reports per-entry errors. Deterministic; intended to
/// finish well inside a minute on one core.
pub fn run_gradient_suite() -> Result<Vec<SuiteEntry>> {
    let mut entries = Vec::new();
    let push = |name: &str, error: f64, tolerance: f64, out: &mut Vec<SuiteEntry>| {
        out.push(SuiteEntry {
            name: name.to_string(),
            error,
            tolerance,
        });
    };

    // conv2d: input, weight, and bias gradients.
    {
        let conv = conv_fixture(11, 3, 4);
        let x0 = random_tensor([1, 3, 6, 6], 12, -1.0, 1.0);
        let f = DiffFn {
            forward: Box::new(|x| conv2d_forward(x, &conv)),
            vjp: Box::new(|x, u| Ok(conv2d_backward(x, &conv, u)?.input)),
        };
        push("conv2d.input", grad_check(&f, &x0, 1e-3, 1)?, 1e-3, &mut entries);

        let w0 = conv.weight.clone();
        let rebuilt = |w: &Tensor| {
            ConvParams::new(w.clone(), conv.bias.clone(), 1, 1).expect("same shape")
        };
        let fw = DiffFn {
            forward: Box::new(|w| conv2d_forward(&x0, &rebuilt(w))),
            vjp: Box::new(|w, u| Ok(conv2d_backward(&x0, &rebuilt(w), u)?.weight)),
        };
        push("conv2d.weight", grad_check(&fw, &w0, 1e-3, 2)?, 1e-3, &mut entries);

        let b0 = {
            let mut t = Tensor::zeros([4, 1, 1, 1]);
            t.data_mut().copy_from_slice(&conv.bias);
            t
        };
        let with_bias = |b: &Tensor| {
            ConvParams::new(conv.weight.clone(), b.data().to_vec(), 1, 1).expect("same shape")
        };
        let fb = DiffFn {
            forward: Box::new(|b| conv2d_forward(&x0, &with_bias(b))),
            vjp: Box::new(|b, u| {
                let g = conv2d_backward(&x0, &with_bias(b), u)?.bias;
                let mut t = Tensor::zeros([4, 1, 1, 1]);
                t.data_mut().copy_from_slice(&g);
                Ok(t)
            }),
        };
        push("conv2d.bias", grad_check(&fb, &b0, 1e-3, 3)?, 1e-3, &mut entries);
    }

    // batch_norm: input and gamma gradients through training-mode forward.
    {
        let mut state = BatchNormState::new(3);
        for (i, g) in state.gamma.iter_mut().enumerate() {
            *g = 0.8 + 0.2 * i as f32;
        }
        for (i, b) in state.beta.iter_mut().enumerate() {
            *b = 0.1 * i as f32;
        }
        let state = RefCell::new(state);
        let x0 = random_tensor([2, 3, 4, 4], 21, -1.5, 1.5);
        let f = DiffFn {
            forward: Box::new(|x| Ok(batch_norm_train(x, &mut state.borrow_mut())?.0)),
            vjp: Box::new(|x, u| {
                let mut s = state.borrow_mut();
                let (_, cache) = batch_norm_train(x, &mut s)?;
                Ok(batch_norm_backward(&cache, &s, u)?.input)
            }),
        };
        push("batch_norm.input", grad_check(&f, &x0, 1e-3, 4)?, 1e-3, &mut entries);

        let g0 = {
            let mut t = Tensor::zeros([3, 1, 1, 1]);
            t.data_mut().copy_from_slice(&state.borrow().gamma);
            t
        };
        let fg = DiffFn {
            forward: Box::new(|g: &Tensor| {
                let mut s = state.borrow().clone();
                s.gamma.copy_from_slice(g.data());
                Ok(batch_norm_train(&x0, &mut s)?.0)
            }),
            vjp: Box::new(|g, u| {
                let mut s = state.borrow().clone();
                s.gamma.copy_from_slice(g.data());
                let (_, cache) = batch_norm_train(&x0, &mut s)?;
                let grads = batch_norm_backward(&cache, &s, u)?;
                let mut t = Tensor::zeros([3, 1, 1, 1]);
                t.data_mut().copy_from_slice(&grads.gamma);
                Ok(t)
            }),
        };
        push("batch_norm.gamma", grad_check(&fg, &g0, 1e-3, 5)?, 1e-3, &mut entries);
    }

    // Gated convolution: both input streams. The probe step sits where
    // leaky-relu kink crossings (error grows with the step) and f32
    // roundoff (error shrinks with it) are both inside tolerance.
    {
        let layer = GatedConvLayer::new(
            conv_fixture(31, 3, 4),
            conv_fixture(32, 2, 4),
            FeatureActivation::LeakyRelu(0.2),
            GateActivation::Sigmoid,
        )?;
        let img0 = random_tensor([1, 3, 6, 6], 33, -1.0, 1.0);
        let msk0 = random_tensor([1, 2, 6, 6], 34, 0.0, 1.0);
        let fi = DiffFn {
            forward: Box::new(|img| Ok(gated_forward_cached(img, &msk0, &layer)?.0)),
            vjp: Box::new(|img, u| {
                let (_, gate, cache) = gated_forward_cached(img, &msk0, &layer)?;
                let zero_gate = Tensor::zeros(gate.shape());
                Ok(gated_backward(&layer, &cache, u, &zero_gate)?.image_in)
            }),
        };
        push("gated.image_input", grad_check(&fi, &img0, 3e-4, 6)?, 1e-3, &mut entries);

        let fm = DiffFn {
            forward: Box::new(|msk| Ok(gated_forward_cached(&img0, msk, &layer)?.0)),
            vjp: Box::new(|msk, u| {
                let (_, gate, cache) = gated_forward_cached(&img0, msk, &layer)?;
                let zero_gate = Tensor::zeros(gate.shape());
                Ok(gated_backward(&layer, &cache, u, &zero_gate)?.mask_in)
            }),
        };
        push("gated.mask_input", grad_check(&fm, &msk0, 3e-4, 7)?, 1e-3, &mut entries);
    }

    // Scalar losses. The wrapped output is a single f32, so a narrow probe
    // would drown in its quantization; wide steps are exact here because L1
    // is linear between kinks and the other two are quadratic.
    {
        let target = random_tensor([1, 3, 6, 6], 41, 0.0, 1.0);
        // Sit half a unit from every kink, with mixed signs so the sign
        // logic is exercised.
        let mut x0 = target.clone();
        for (i, v) in x0.data_mut().iter_mut().enumerate() {
            *v += if i % 2 == 0 { 0.5 } else { -0.5 };
        }
        let f = scalar_diff_fn(|x| l1_loss(x, &target), |x| l1_loss_backward(x, &target));
        push("loss.l1", grad_check(&f, &x0, 0.1, 8)?, 1e-3, &mut entries);

        let f = scalar_diff_fn(|x| l2_loss(x, &target), |x| l2_loss_backward(x, &target));
        let x1 = random_tensor([1, 3, 6, 6], 42, 0.0, 1.0);
        push("loss.l2", grad_check(&f, &x1, 3e-2, 9)?, 1e-3, &mut entries);

        let f = scalar_diff_fn(variance_loss, variance_loss_backward);
        let x2 = random_tensor([1, 3, 6, 6], 43, 0.0, 1.0);
        push("loss.variance", grad_check(&f, &x2, 3e-2, 10)?, 1e-3, &mut entries);
    }

    // Full network, image-input gradient, sampled coordinates.
    {
        let net = {
            let mut n = Network::build(&shrunk_spec(), NetworkOptions::default())?;
            n.init_parameters(51);
            RefCell::new(n)
        };
        let mask = Tensor::from_fn([1, 1, 16, 16], |_, _, _, x| if x < 11 { 1.0 } else { 0.0 });
        let x0 = random_tensor([1, 3, 16, 16], 52, 0.05, 0.95);
        let f = DiffFn {
            forward: Box::new(|x| Ok(net.borrow_mut().forward_train(x, &mask)?.0)),
            vjp: Box::new(|x, u| {
                let mut n = net.borrow_mut();
                let (_, cache) = n.forward_train(x, &mask)?;
                Ok(n.backward(&cache, u)?.input_image)
            }),
        };
        push(
            "network.image_input",
            grad_check_sampled(&f, &x0, 3e-4, 53, 48)?,
            5e-3,
            &mut entries,
        );

        // One end-to-end parameter path: the mapping layer's feature kernel.
        let w0 = {
            let mut found = None;
            net.borrow_mut().visit_params_mut(&mut |view| {
                if view.name == "mb.weight" {
                    let mut t = Tensor::zeros([1, 1, 1, view.data.len()]);
                    t.data_mut().copy_from_slice(view.data);
                    found = Some(t);
                }
            });
            found.expect("mapping weight exists")
        };
        // The checker hands us the exact point to evaluate, so writing the
        // weight into the live network before each call is equivalent to
        // cloning. Batch-norm forward uses batch statistics in training mode,
        // so the drifting running averages cannot leak into these outputs.
        let set_weight = |w: &Tensor| {
            net.borrow_mut().visit_params_mut(&mut |view| {
                if view.name == "mb.weight" {
                    view.data.copy_from_slice(w.data());
                }
            });
        };
        let fw = DiffFn {
            forward: Box::new(|w| {
                set_weight(w);
                Ok(net.borrow_mut().forward_train(&x0, &mask)?.0)
            }),
            vjp: Box::new(|w, u| {
                set_weight(w);
                let mut n = net.borrow_mut();
                let (_, cache) = n.forward_train(&x0, &mask)?;
                let grads = n.backward(&cache, u)?;
                let flat = &grads.params["mb.weight"];
                let mut t = Tensor::zeros([1, 1, 1, flat.len()]);
                t.data_mut().copy_from_slice(flat);
                Ok(t)
            }),
        };
        push(
            "network.mapping_weight",
            grad_check_sampled(&fw, &w0, 3e-4, 54, 16)?,
            5e-3,
            &mut entries,
        );
    }

    Ok(entries)
}
