use super::Tensor;
use crate::error::Result;

/// Negative-side slope shared by every feature activation in the network.
pub const DEFAULT_LEAKY_SLOPE: f32 = 0.2;

/// `x` for `x >= 0`, `slope * x` otherwise.
pub fn leaky_relu(x: &Tensor, slope: f32) -> Tensor {
    x.map(|v| if v >= 0.0 { v } else { slope * v })
}

/// Backward for [`leaky_relu`]; takes the forward *input*. The derivative at
/// exactly zero is taken as 1.
pub fn leaky_relu_backward(input: &Tensor, upstream: &Tensor, slope: f32) -> Result<Tensor> {
    input.check_same_shape(upstream, "leaky_relu upstream")?;
    let mut out = upstream.clone();
    for (g, &v) in out.data_mut().iter_mut().zip(input.data()) {
        if v < 0.0 {
            *g *= slope;
        }
    }
    Ok(out)
}

/// Logistic sigmoid, evaluated in `f64` per element.
pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(|v| (1.0 / (1.0 + (-(v as f64)).exp())) as f32)
}

/// Backward for [`sigmoid`]; takes the forward *output* `y`, using
/// `dy/dx = y * (1 - y)`.
pub fn sigmoid_backward(output: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    output.check_same_shape(upstream, "sigmoid upstream")?;
    let mut out = upstream.clone();
    for (g, &y) in out.data_mut().iter_mut().zip(output.data()) {
        let y = y as f64;
        *g = (*g as f64 * y * (1.0 - y)) as f32;
    }
    Ok(out)
}

/// Elementwise sum of two equally shaped tensors.
pub fn elementwise_add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.check_same_shape(b, "elementwise_add operands")?;
    let mut out = a.clone();
    for (o, &v) in out.data_mut().iter_mut().zip(b.data()) {
        *o += v;
    }
    Ok(out)
}

/// Elementwise (Hadamard) product of two equally shaped tensors.
pub fn elementwise_mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.check_same_shape(b, "elementwise_mul operands")?;
    let mut out = a.clone();
    for (o, &v) in out.data_mut().iter_mut().zip(b.data()) {
        *o *= v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaky_relu_frozen_values() {
        let x = Tensor::new([1, 1, 1, 4], vec![-2.0, -0.5, 0.0, 3.0]).unwrap();
        let y = leaky_relu(&x, 0.2);
        assert_eq!(y.data(), &[-0.4, -0.1, 0.0, 3.0]);
    }

    #[test]
    fn sigmoid_frozen_values() {
        let x = Tensor::new([1, 1, 1, 3], vec![0.0, 2.0, -2.0]).unwrap();
        let y = sigmoid(&x);
        assert!((y.data()[0] - 0.5).abs() < 1e-7);
        assert!((y.data()[1] - 0.880_797).abs() < 1e-6);
        assert!((y.data()[2] - 0.119_203).abs() < 1e-6);
        // Symmetry: sigmoid(-x) = 1 - sigmoid(x).
        assert!((y.data()[1] + y.data()[2] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn sigmoid_output_stays_in_unit_interval() {
        // Strictly interior for moderate inputs; extreme inputs saturate to
        // the f32 endpoints but never escape [0, 1].
        let x = Tensor::new([1, 1, 1, 4], vec![-15.0, -1.0, 1.0, 15.0]).unwrap();
        for &v in sigmoid(&x).data() {
            assert!(v > 0.0 && v < 1.0, "sigmoid output {v} escaped (0, 1)");
        }
        let x = Tensor::new([1, 1, 1, 2], vec![-200.0, 200.0]).unwrap();
        for &v in sigmoid(&x).data() {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn add_and_mul_reject_shape_mismatch() {
        let a = Tensor::zeros([1, 1, 2, 2]);
        let b = Tensor::zeros([1, 1, 2, 3]);
        assert!(elementwise_add(&a, &b).is_err());
        assert!(elementwise_mul(&a, &b).is_err());
    }
}
