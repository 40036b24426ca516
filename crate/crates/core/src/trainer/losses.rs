use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Thumbnail scale factor between full resolution and the network output.
pub const THUMB_FACTOR: usize = 8;

/// Box-average downsample by 8: each output pixel is the mean of its 8x8
/// source block per channel. This is the ground-truth thumbnail the network
/// learns to reproduce; on block-constant images it is exactly invertible,
/// which the texture-selection tests rely on.
pub fn downsample_gt(image: &Tensor) -> Result<Tensor> {
    let [n, c, h, w] = image.shape();
    if h % THUMB_FACTOR != 0 || w % THUMB_FACTOR != 0 {
        return Err(Error::ShapeMismatch(format!(
            "downsample requires height and width divisible by {THUMB_FACTOR}, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / THUMB_FACTOR, w / THUMB_FACTOR);
    let mut out = Tensor::zeros([n, c, oh, ow]);
    for bn in 0..n {
        for ch in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0f64;
                    for dy in 0..THUMB_FACTOR {
                        for dx in 0..THUMB_FACTOR {
                            acc += image.get(bn, ch, oy * THUMB_FACTOR + dy, ox * THUMB_FACTOR + dx)
                                as f64;
                        }
                    }
                    out.set(bn, ch, oy, ox, (acc / (THUMB_FACTOR * THUMB_FACTOR) as f64) as f32);
                }
            }
        }
    }
    Ok(out)
}

/// Mean absolute elementwise difference.
pub fn l1_loss(a: &Tensor, b: &Tensor) -> Result<f64> {
    a.check_same_shape(b, "l1_loss operands")?;
    let mut acc = 0f64;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        acc += (x as f64 - y as f64).abs();
    }
    Ok(acc / a.numel() as f64)
}

/// d(l1_loss)/da; the gradient with respect to `b` is its negation. The
/// subgradient at equality is taken as 0.
pub fn l1_loss_backward(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.check_same_shape(b, "l1_loss operands")?;
    let n = a.numel() as f64;
    let mut out = Tensor::zeros(a.shape());
    for ((g, &x), &y) in out.data_mut().iter_mut().zip(a.data()).zip(b.data()) {
        let d = x as f64 - y as f64;
        *g = if d > 0.0 {
            (1.0 / n) as f32
        } else if d < 0.0 {
            (-1.0 / n) as f32
        } else {
            0.0
        };
    }
    Ok(out)
}

/// Mean squared elementwise difference.
pub fn l2_loss(a: &Tensor, b: &Tensor) -> Result<f64> {
    a.check_same_shape(b, "l2_loss operands")?;
    let mut acc = 0f64;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let d = x as f64 - y as f64;
        acc += d * d;
    }
    Ok(acc / a.numel() as f64)
}

/// d(l2_loss)/da.
pub fn l2_loss_backward(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.check_same_shape(b, "l2_loss operands")?;
    let n = a.numel() as f64;
    let mut out = Tensor::zeros(a.shape());
    for ((g, &x), &y) in out.data_mut().iter_mut().zip(a.data()).zip(b.data()) {
        *g = (2.0 * (x as f64 - y as f64) / n) as f32;
    }
    Ok(out)
}

fn check_variance_input(image: &Tensor) -> Result<()> {
    let [_, _, h, w] = image.shape();
    if h < 3 || w < 3 {
        return Err(Error::ShapeMismatch(format!(
            "variance loss needs spatial size at least 3x3, got {h}x{w}"
        )));
    }
    Ok(())
}

/// Color-smoothing penalty: for every interior pixel, the squared deviation
/// from the mean of its 3x3 neighborhood (center included), averaged over
/// batch, channels, and interior positions.
pub fn variance_loss(image: &Tensor) -> Result<f64> {
    check_variance_input(image)?;
    let [n, c, h, w] = image.shape();
    let m = (n * c * (h - 2) * (w - 2)) as f64;
    let mut acc = 0f64;
    for bn in 0..n {
        for ch in 0..c {
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    let mut mean = 0f64;
                    for dy in 0..3 {
                        for dx in 0..3 {
                            mean += image.get(bn, ch, y + dy - 1, x + dx - 1) as f64;
                        }
                    }
                    mean /= 9.0;
                    let d = image.get(bn, ch, y, x) as f64 - mean;
                    acc += d * d;
                }
            }
        }
    }
    Ok(acc / m)
}

/// d(variance_loss)/d(image).
///
/// With `d_p = x_p - mean(N(p))` over interior centers p:
/// `dL/dx_q = (2/M) * (d_q * [q interior] - (1/9) * sum over interior p with q in N(p) of d_p)`.
pub fn variance_loss_backward(image: &Tensor) -> Result<Tensor> {
    check_variance_input(image)?;
    let [n, c, h, w] = image.shape();
    let m = (n * c * (h - 2) * (w - 2)) as f64;
    let mut grad = vec![0f64; image.numel()];
    for bn in 0..n {
        for ch in 0..c {
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    let mut mean = 0f64;
                    for dy in 0..3 {
                        for dx in 0..3 {
                            mean += image.get(bn, ch, y + dy - 1, x + dx - 1) as f64;
                        }
                    }
                    mean /= 9.0;
                    let d = image.get(bn, ch, y, x) as f64 - mean;
                    let scale = 2.0 / m;
                    grad[image.idx(bn, ch, y, x)] += scale * d;
                    for dy in 0..3 {
                        for dx in 0..3 {
                            grad[image.idx(bn, ch, y + dy - 1, x + dx - 1)] -= scale * d / 9.0;
                        }
                    }
                }
            }
        }
    }
    Tensor::new(image.shape(), grad.iter().map(|&v| v as f32).collect())
}

/// Hinge GAN losses over patch score maps:
/// `loss_d = mean(relu(1 - d_real)) + mean(relu(1 + d_fake))`,
/// `loss_g = -mean(d_fake)`.
pub fn gan_losses(d_real: &Tensor, d_fake: &Tensor) -> Result<(f64, f64)> {
    d_real.check_same_shape(d_fake, "patch score maps")?;
    let n = d_real.numel() as f64;
    let mut loss_d = 0f64;
    let mut loss_g = 0f64;
    for (&r, &f) in d_real.data().iter().zip(d_fake.data()) {
        loss_d += (1.0 - r as f64).max(0.0) + (1.0 + f as f64).max(0.0);
        loss_g -= f as f64;
    }
    Ok((loss_d / n, loss_g / n))
}

/// d(loss_d)/d(d_real) and d(loss_d)/d(d_fake).
pub fn gan_d_backward(d_real: &Tensor, d_fake: &Tensor) -> Result<(Tensor, Tensor)> {
    d_real.check_same_shape(d_fake, "patch score maps")?;
    let n = d_real.numel() as f64;
    let g_real = d_real.map(|r| if (r as f64) < 1.0 { (-1.0 / n) as f32 } else { 0.0 });
    let g_fake = d_fake.map(|f| if (f as f64) > -1.0 { (1.0 / n) as f32 } else { 0.0 });
    Ok((g_real, g_fake))
}

/// d(loss_g)/d(d_fake).
pub fn gan_g_backward(d_fake: &Tensor) -> Tensor {
    let n = d_fake.numel() as f64;
    d_fake.map(|_| (-1.0 / n) as f32)
}
