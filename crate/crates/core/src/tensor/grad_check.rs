use super::{max_abs, Tensor};
use crate::error::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A differentiable map bundled with its hand-written backward pass.
///
/// `forward` maps a tensor to a tensor; `vjp(x, u)` must return
/// d/dx of `sum(u .* forward(x))` evaluated at `x`. Gradient checking probes
/// exactly this scalar projection, so an op with several inputs is checked by
/// fixing all but one and wrapping the free one here.
pub struct DiffFn<'a> {
    pub forward: Box<dyn Fn(&Tensor) -> Result<Tensor> + 'a>,
    pub vjp: Box<dyn Fn(&Tensor, &Tensor) -> Result<Tensor> + 'a>,
}

/// Random tensor with entries drawn uniformly from {-1, +1}.
///
/// Used as the upstream probe: unit magnitude keeps the projected loss on the
/// same scale as the outputs, so f32 rounding noise in the finite difference
/// stays far below the checking tolerances.
pub fn rademacher(shape: [usize; 4], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_, _, _, _| if rng.gen::<bool>() { 1.0 } else { -1.0 })
}

fn projected_loss(f: &DiffFn, x: &Tensor, u: &Tensor) -> Result<f64> {
    let y = (f.forward)(x)?;
    let mut acc = 0f64;
    for (&a, &b) in y.data().iter().zip(u.data()) {
        acc += a as f64 * b as f64;
    }
    Ok(acc)
}

/// Central finite difference for coordinate `i`, using the *realized* f32
/// steps: after rounding `x[i] +- step` to f32 the actual displacement can
/// differ from `step`, so the quotient divides by the measured displacement.
fn numeric_coord(f: &DiffFn, x: &Tensor, u: &Tensor, i: usize, step: f32) -> Result<f64> {
    let orig = x.data()[i];
    let mut xp = x.clone();
    xp.data_mut()[i] = orig + step;
    let sp = xp.data()[i] as f64 - orig as f64;
    let lp = projected_loss(f, &xp, u)?;
    let mut xm = x.clone();
    xm.data_mut()[i] = orig - step;
    let sm = orig as f64 - xm.data()[i] as f64;
    let lm = projected_loss(f, &xm, u)?;
    Ok((lp - lm) / (sp + sm))
}

fn relative_errors(
    f: &DiffFn,
    x: &Tensor,
    step: f32,
    seed: u64,
    coords: &[usize],
) -> Result<f64> {
    let y = (f.forward)(x)?;
    let u = rademacher(y.shape(), seed);
    let analytic = (f.vjp)(x, &u)?;

    let mut numeric = Vec::with_capacity(coords.len());
    let mut max_numeric = 0f64;
    for &i in coords {
        let n = numeric_coord(f, x, &u, i, step)?;
        max_numeric = max_numeric.max(n.abs());
        numeric.push(n);
    }

    // One global scale for the whole gradient: per-coordinate denominators
    // blow up the error on coordinates whose true gradient is tiny.
    let scale = max_abs(&analytic).max(max_numeric).max(1e-6);
    let mut worst = 0f64;
    for (&i, &n) in coords.iter().zip(numeric.iter()) {
        let a = analytic.data()[i] as f64;
        worst = worst.max((a - n).abs() / scale);
    }
    Ok(worst)
}

/// Checks `f.vjp` against central finite differences at every coordinate of
/// `x`. Returns the maximum relative error
/// `max_i |analytic_i - numeric_i| / max(inf_norm(analytic), inf_norm(numeric), 1e-6)`.
pub fn grad_check(f: &DiffFn, x: &Tensor, step: f32, seed: u64) -> Result<f64> {
    let coords: Vec<usize> = (0..x.numel()).collect();
    relative_errors(f, x, step, seed, &coords)
}

/// Like [`grad_check`] but probes at most `max_coords` randomly chosen
/// coordinates. Two forward passes per coordinate make the full check
/// quadratic; sampling keeps whole-network checks inside a time budget.
pub fn grad_check_sampled(
    f: &DiffFn,
    x: &Tensor,
    step: f32,
    seed: u64,
    max_coords: usize,
) -> Result<f64> {
    let n = x.numel();
    let coords: Vec<usize> = if n <= max_coords {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut picked = std::collections::BTreeSet::new();
        while picked.len() < max_coords {
            picked.insert(rng.gen_range(0..n));
        }
        picked.into_iter().collect()
    };
    relative_errors(f, x, step, seed, &coords)
}
