use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::network::Network;

/// Adam hyperparameters. Defaults: lr 2e-4, beta1 0.5 (GAN-friendly), beta2
/// 0.999, epsilon 1e-8.
#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1), got {b}"
                )));
            }
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Anything whose named parameters Adam can update in place.
///
/// Implementations must visit parameters in a stable order and use globally
/// unique names; gradient maps are keyed by those names.
pub trait ParamSet {
    fn visit_params_flat(&mut self, f: &mut dyn FnMut(&str, &mut [f32]));
}

impl ParamSet for Network {
    fn visit_params_flat(&mut self, f: &mut dyn FnMut(&str, &mut [f32])) {
        self.visit_params_mut(&mut |view| f(&view.name, view.data));
    }
}

/// First/second moment slots plus the step counter.
///
/// Slots are keyed by parameter name and created lazily on first update, so
/// one state can serve any [`ParamSet`] whose naming is stable.
#[derive(Debug, Clone)]
pub struct AdamState {
    hyper: AdamParams,
    t: u64,
    slots: BTreeMap<String, (Vec<f32>, Vec<f32>)>,
}

impl AdamState {
    pub fn new(hyper: AdamParams) -> Self {
        AdamState {
            hyper,
            t: 0,
            slots: BTreeMap::new(),
        }
    }

    pub fn hyper(&self) -> AdamParams {
        self.hyper
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Iterates `(name, m, v)` in name order; used by checkpointing.
    pub fn visit_slots(&self, f: &mut dyn FnMut(&str, &[f32], &[f32])) {
        for (name, (m, v)) in &self.slots {
            f(name, m, v);
        }
    }

    /// Rebuilds a state from checkpointed parts.
    pub fn from_parts(
        hyper: AdamParams,
        t: u64,
        slots: BTreeMap<String, (Vec<f32>, Vec<f32>)>,
    ) -> Self {
        AdamState { hyper, t, slots }
    }
}

/// One bias-corrected Adam update over every parameter of `model`.
///
/// `theta -= lr * m_hat / (sqrt(v_hat) + epsilon)` with
/// `m_hat = m / (1 - beta1^t)`, `v_hat = v / (1 - beta2^t)`.
///
/// The whole gradient map is validated first (every parameter present, shapes
/// matching, no unknown names, every value finite); on any violation the
/// model and state are left untouched.
pub fn adam_step(
    state: &mut AdamState,
    model: &mut dyn ParamSet,
    grads: &BTreeMap<String, Vec<f32>>,
) -> Result<()> {
    let mut expected: Vec<(String, usize)> = Vec::new();
    model.visit_params_flat(&mut |name, data| expected.push((name.to_string(), data.len())));

    for (name, len) in &expected {
        let g = grads.get(name).ok_or_else(|| {
            Error::InvalidArgument(format!("gradient map is missing parameter '{name}'"))
        })?;
        if g.len() != *len {
            return Err(Error::ShapeMismatch(format!(
                "gradient for '{name}' has {} elements, parameter has {len}",
                g.len()
            )));
        }
        if let Some(bad) = g.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient for '{name}' contains {bad}"
            )));
        }
    }
    if grads.len() != expected.len() {
        let known: std::collections::BTreeSet<&str> =
            expected.iter().map(|(n, _)| n.as_str()).collect();
        let extra: Vec<&str> = grads
            .keys()
            .map(|k| k.as_str())
            .filter(|k| !known.contains(k))
            .collect();
        return Err(Error::InvalidArgument(format!(
            "gradient map has entries for unknown parameters: {extra:?}"
        )));
    }

    state.t += 1;
    let t = state.t as i32;
    let h = state.hyper;
    let (b1, b2) = (h.beta1 as f64, h.beta2 as f64);
    let bc1 = 1.0 - (h.beta1 as f64).powi(t);
    let bc2 = 1.0 - (h.beta2 as f64).powi(t);
    let lr = h.lr as f64;
    let eps = h.epsilon as f64;

    let slots = &mut state.slots;
    model.visit_params_flat(&mut |name, data| {
        let g = &grads[name];
        let (m, v) = slots
            .entry(name.to_string())
            .or_insert_with(|| (vec![0.0; data.len()], vec![0.0; data.len()]));
        for i in 0..data.len() {
            let gi = g[i] as f64;
            let mi = b1 * m[i] as f64 + (1.0 - b1) * gi;
            let vi = b2 * v[i] as f64 + (1.0 - b2) * gi * gi;
            m[i] = mi as f32;
            v[i] = vi as f32;
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            data[i] = (data[i] as f64 - lr * m_hat / (v_hat.sqrt() + eps)) as f32;
        }
    });
    Ok(())
}
