use super::Tensor;
use crate::error::{Error, Result};

/// Weights of one 2-D convolution: kernel `(out_c, in_c, kh, kw)`, one bias
/// per output channel, uniform stride and zero padding on both axes.
///
/// The operation is cross-correlation (no kernel flip), the convention used
/// by every mainstream deep-learning stack.
#[derive(Debug, Clone)]
pub struct ConvParams {
    pub weight: Tensor,
    pub bias: Vec<f32>,
    pub stride: usize,
    pub padding: usize,
}

impl ConvParams {
    pub fn new(weight: Tensor, bias: Vec<f32>, stride: usize, padding: usize) -> Result<Self> {
        let [out_c, _, kh, kw] = weight.shape();
        if out_c == 0 || kh == 0 || kw == 0 {
            return Err(Error::InvalidArgument(format!(
                "convolution kernel must be non-empty, got {:?}",
                weight.shape()
            )));
        }
        if bias.len() != out_c {
            return Err(Error::ShapeMismatch(format!(
                "bias length {} does not match output channels {}",
                bias.len(),
                out_c
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        Ok(ConvParams {
            weight,
            bias,
            stride,
            padding,
        })
    }

    #[inline]
    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    #[inline]
    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    #[inline]
    pub fn kernel_hw(&self) -> (usize, usize) {
        let [_, _, kh, kw] = self.weight.shape();
        (kh, kw)
    }

    /// Output spatial size for an `h x w` input:
    /// `floor((extent + 2*padding - kernel) / stride) + 1`, each axis at least 1.
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let (kh, kw) = self.kernel_hw();
        let oh = Self::out_extent(h, kh, self.stride, self.padding, "height")?;
        let ow = Self::out_extent(w, kw, self.stride, self.padding, "width")?;
        Ok((oh, ow))
    }

    fn out_extent(extent: usize, kernel: usize, stride: usize, padding: usize, axis: &str) -> Result<usize> {
        let padded = extent + 2 * padding;
        if padded < kernel {
            return Err(Error::ShapeMismatch(format!(
                "input {axis} {extent} with padding {padding} is smaller than kernel {kernel}"
            )));
        }
        Ok((padded - kernel) / stride + 1)
    }
}

fn check_input(input: &Tensor, params: &ConvParams) -> Result<(usize, usize)> {
    let [_, in_c, h, w] = input.shape();
    if in_c != params.in_channels() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} channels but kernel expects {}",
            in_c,
            params.in_channels()
        )));
    }
    params.output_hw(h, w)
}

/// Valid output-row range for kernel row `ky`: every `oy` in the returned
/// range reads an input row `oy*stride + ky - padding` inside `[0, extent)`.
#[inline]
fn valid_out_range(extent: usize, out_extent: usize, k: usize, stride: usize, padding: usize) -> Option<(usize, usize)> {
    let hi_num = extent as isize - 1 + padding as isize - k as isize;
    if hi_num < 0 {
        return None;
    }
    let hi = ((hi_num as usize) / stride).min(out_extent - 1);
    let lo_num = padding as isize - k as isize;
    let lo = if lo_num <= 0 {
        0
    } else {
        (lo_num as usize + stride - 1) / stride
    };
    if lo > hi {
        None
    } else {
        Some((lo, hi))
    }
}

/// 2-D convolution with zero padding. Dot products accumulate in `f64` and
/// round to `f32` once per output element.
pub fn conv2d_forward(input: &Tensor, params: &ConvParams) -> Result<Tensor> {
    let (oh, ow) = check_input(input, params)?;
    let [n, in_c, h, w] = input.shape();
    let out_c = params.out_channels();
    let (kh, kw) = params.kernel_hw();
    let (stride, padding) = (params.stride, params.padding);

    let mut out = Tensor::zeros([n, out_c, oh, ow]);
    let mut acc = vec![0f64; oh * ow];
    let in_data = input.data();
    let w_data = params.weight.data();

    for bn in 0..n {
        for oc in 0..out_c {
            acc.fill(params.bias[oc] as f64);
            for ic in 0..in_c {
                let plane = &in_data[(bn * in_c + ic) * h * w..][..h * w];
                let wk = &w_data[(oc * in_c + ic) * kh * kw..][..kh * kw];
                for ky in 0..kh {
                    let Some((oy_lo, oy_hi)) = valid_out_range(h, oh, ky, stride, padding) else {
                        continue;
                    };
                    for kx in 0..kw {
                        let wv = wk[ky * kw + kx] as f64;
                        let Some((ox_lo, ox_hi)) = valid_out_range(w, ow, kx, stride, padding) else {
                            continue;
                        };
                        let x_off = kx as isize - padding as isize;
                        for oy in oy_lo..=oy_hi {
                            let iy = (oy * stride) as isize + ky as isize - padding as isize;
                            let row = &plane[iy as usize * w..][..w];
                            let acc_row = &mut acc[oy * ow..][..ow];
                            if stride == 1 {
                                let start = (ox_lo as isize + x_off) as usize;
                                let src = &row[start..start + (ox_hi - ox_lo + 1)];
                                for (a, &v) in acc_row[ox_lo..=ox_hi].iter_mut().zip(src) {
                                    *a += wv * v as f64;
                                }
                            } else {
                                for ox in ox_lo..=ox_hi {
                                    let ix = (ox * stride) as isize + x_off;
                                    acc_row[ox] += wv * row[ix as usize] as f64;
                                }
                            }
                        }
                    }
                }
            }
            let out_plane = &mut out.data_mut()[(bn * out_c + oc) * oh * ow..][..oh * ow];
            for (o, &a) in out_plane.iter_mut().zip(acc.iter()) {
                *o = a as f32;
            }
        }
    }
    Ok(out)
}

/// Gradients of a convolution with respect to its input, kernel, and bias.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weight: Tensor,
    pub bias: Vec<f32>,
}

/// Backward pass paired with [`conv2d_forward`]. `upstream` is dL/d(output)
/// and must have the forward output shape. Accumulation is `f64` throughout.
pub fn conv2d_backward(input: &Tensor, params: &ConvParams, upstream: &Tensor) -> Result<ConvGrads> {
    let (oh, ow) = check_input(input, params)?;
    let [n, in_c, h, w] = input.shape();
    let out_c = params.out_channels();
    if upstream.shape() != [n, out_c, oh, ow] {
        return Err(Error::ShapeMismatch(format!(
            "upstream gradient {:?} does not match forward output [{n}, {out_c}, {oh}, {ow}]",
            upstream.shape()
        )));
    }
    let (kh, kw) = params.kernel_hw();
    let (stride, padding) = (params.stride, params.padding);

    let in_data = input.data();
    let w_data = params.weight.data();
    let up_data = upstream.data();

    let mut g_in = vec![0f64; n * in_c * h * w];
    let mut g_w = vec![0f64; out_c * in_c * kh * kw];
    let mut g_b = vec![0f64; out_c];

    for bn in 0..n {
        for oc in 0..out_c {
            let up_plane = &up_data[(bn * out_c + oc) * oh * ow..][..oh * ow];
            let mut bias_sum = 0f64;
            for &u in up_plane {
                bias_sum += u as f64;
            }
            g_b[oc] += bias_sum;

            for ic in 0..in_c {
                let plane = &in_data[(bn * in_c + ic) * h * w..][..h * w];
                let gi_plane = &mut g_in[(bn * in_c + ic) * h * w..][..h * w];
                let wk = &w_data[(oc * in_c + ic) * kh * kw..][..kh * kw];
                let gw_k = &mut g_w[(oc * in_c + ic) * kh * kw..][..kh * kw];
                for ky in 0..kh {
                    let Some((oy_lo, oy_hi)) = valid_out_range(h, oh, ky, stride, padding) else {
                        continue;
                    };
                    for kx in 0..kw {
                        let Some((ox_lo, ox_hi)) = valid_out_range(w, ow, kx, stride, padding) else {
                            continue;
                        };
                        let wv = wk[ky * kw + kx] as f64;
                        let x_off = kx as isize - padding as isize;
                        let mut w_sum = 0f64;
                        for oy in oy_lo..=oy_hi {
                            let iy = ((oy * stride) as isize + ky as isize - padding as isize) as usize;
                            let row = &plane[iy * w..][..w];
                            let gi_row = &mut gi_plane[iy * w..][..w];
                            let up_row = &up_plane[oy * ow..][..ow];
                            if stride == 1 {
                                let start = (ox_lo as isize + x_off) as usize;
                                let len = ox_hi - ox_lo + 1;
                                let src = &row[start..start + len];
                                let gi_seg = &mut gi_row[start..start + len];
                                let up_seg = &up_row[ox_lo..=ox_hi];
                                for ((&u, &v), g) in up_seg.iter().zip(src).zip(gi_seg.iter_mut()) {
                                    let u = u as f64;
                                    w_sum += u * v as f64;
                                    *g += u * wv;
                                }
                            } else {
                                for ox in ox_lo..=ox_hi {
                                    let ix = ((ox * stride) as isize + x_off) as usize;
                                    let u = up_row[ox] as f64;
                                    w_sum += u * row[ix] as f64;
                                    gi_row[ix] += u * wv;
                                }
                            }
                        }
                        gw_k[ky * kw + kx] += w_sum;
                    }
                }
            }
        }
    }

    let grad_input = Tensor::new([n, in_c, h, w], g_in.iter().map(|&v| v as f32).collect())?;
    let grad_weight = Tensor::new(
        [out_c, in_c, kh, kw],
        g_w.iter().map(|&v| v as f32).collect(),
    )?;
    let grad_bias = g_b.iter().map(|&v| v as f32).collect();
    Ok(ConvGrads {
        input: grad_input,
        weight: grad_weight,
        bias: grad_bias,
    })
}
