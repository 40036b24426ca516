//! Rank-4 tensor storage and the numerical kernels built on it.
//!
//! Everything in the pipeline moves through [`Tensor`]: images, masks,
//! feature maps, convolution weights. Layout is NCHW, stored as a flat
//! `Vec<f32>` with the innermost axis (width) contiguous. Elements are kept
//! in `f32`; every reduction (convolution dot products, means, variances,
//! losses) accumulates in `f64` before rounding back, which keeps results
//! stable enough for finite-difference gradient verification.

mod activations;
mod batch_norm;
mod conv;
mod grad_check;

pub use activations::{
    elementwise_add, elementwise_mul, leaky_relu, leaky_relu_backward, sigmoid, sigmoid_backward,
    DEFAULT_LEAKY_SLOPE,
};
pub use batch_norm::{
    batch_norm, batch_norm_backward, batch_norm_infer, batch_norm_train, BatchNormState, BnCache,
    BnGrads, BnMode,
};
pub use conv::{conv2d_backward, conv2d_forward, ConvGrads, ConvParams};
pub use grad_check::{grad_check, grad_check_sampled, rademacher, DiffFn};

use crate::error::{Error, Result};

/// Dense rank-4 tensor in NCHW order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: [usize; 4],
    data: Vec<f32>,
}

impl Tensor {
    /// Wraps existing data; `data.len()` must equal the product of `shape`.
    pub fn new(shape: [usize; 4], data: Vec<f32>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if data.len() != numel {
            return Err(Error::ShapeMismatch(format!(
                "tensor data length {} does not match shape {:?} (expected {})",
                data.len(),
                shape,
                numel
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: [usize; 4]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; numel],
        }
    }

    pub fn full(shape: [usize; 4], value: f32) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape,
            data: vec![value; numel],
        }
    }

    /// Builds a tensor by evaluating `f(n, c, y, x)` at every coordinate.
    pub fn from_fn(shape: [usize; 4], mut f: impl FnMut(usize, usize, usize, usize) -> f32) -> Self {
        let mut t = Tensor::zeros(shape);
        let [n, c, h, w] = shape;
        let mut i = 0;
        for bn in 0..n {
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        t.data[i] = f(bn, ch, y, x);
                        i += 1;
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.shape[0]
    }

    #[inline]
    pub fn c(&self) -> usize {
        self.shape[1]
    }

    #[inline]
    pub fn h(&self) -> usize {
        self.shape[2]
    }

    #[inline]
    pub fn w(&self) -> usize {
        self.shape[3]
    }

    #[inline]
    pub fn numel(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Flat index of `(n, c, y, x)`.
    #[inline]
    pub fn idx(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        ((n * self.shape[1] + c) * self.shape[2] + y) * self.shape[3] + x
    }

    #[inline]
    pub fn get(&self, n: usize, c: usize, y: usize, x: usize) -> f32 {
        self.data[self.idx(n, c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, y: usize, x: usize, value: f32) {
        let i = self.idx(n, c, y, x);
        self.data[i] = value;
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, factor: f32) -> Tensor {
        self.map(|v| v * factor)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// True when every element is exactly 0.0 or 1.0, the contract for masks.
    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape == other.shape
    }

    /// Errors unless `self` and `other` have identical shapes; `what` names
    /// the operands in the diagnostic.
    pub fn check_same_shape(&self, other: &Tensor, what: &str) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.shape, other.shape
            )))
        }
    }
}

/// Largest absolute element, 0 for an empty tensor.
pub fn max_abs(t: &Tensor) -> f64 {
    t.data()
        .iter()
        .fold(0.0f64, |acc, &v| acc.max((v as f64).abs()))
}
