//! Training loop pieces: losses, the Adam optimizer, the patch
//! discriminator, checkpointing, and the [`Trainer`] that ties one
//! generator step (and optionally one discriminator step) together.

pub mod adam;
pub mod checkpoint;
pub mod discriminator;
pub mod losses;

pub use adam::{adam_step, AdamParams, AdamState, ParamSet};
pub use checkpoint::{load_network, read_entries, save_network, write_entries, Entry};
pub use discriminator::{spectral_normalize, DiscCache, Discriminator, PowerVectors};
pub use losses::{
    downsample_gt, gan_d_backward, gan_g_backward, gan_losses, l1_loss, l1_loss_backward,
    l2_loss, l2_loss_backward, variance_loss, variance_loss_backward, THUMB_FACTOR,
};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::network::Network;
use crate::tensor::Tensor;

/// Relative weights of the three generator loss components. Zero-weight
/// components are neither computed nor backpropagated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w_l1: f32,
    pub w_var: f32,
    pub w_gan: f32,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w_l1: 1.0,
            w_var: 0.1,
            w_gan: 0.1,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("w_l1", self.w_l1), ("w_var", self.w_var), ("w_gan", self.w_gan)] {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "loss weight {name} must be finite and non-negative, got {w}"
                )));
            }
        }
        if self.w_l1 <= 0.0 && self.w_var <= 0.0 && self.w_gan <= 0.0 {
            return Err(Error::InvalidArgument(
                "at least one loss weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// What one call to [`Trainer::train_step`] did. The `l1`, `var`, and
/// `gan_g` fields are the weighted contributions, so they sum to `total`.
/// `gan_d` is the discriminator's own loss and is not part of `total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub l1: f64,
    pub var: f64,
    pub gan_g: f64,
    pub gan_d: f64,
    pub total: f64,
    /// True when a non-finite loss or gradient made this step a no-op.
    pub skipped: bool,
}

/// Owns the generator, its optimizer, and (optionally) the adversarial
/// discriminator with its own optimizer.
pub struct Trainer {
    net: Network,
    net_opt: AdamState,
    disc: Option<Discriminator>,
    disc_opt: AdamState,
    weights: LossWeights,
    step: u64,
}

impl Trainer {
    /// `disc` must be present exactly when `weights.w_gan > 0`.
    pub fn new(
        net: Network,
        weights: LossWeights,
        adam: AdamParams,
        disc: Option<Discriminator>,
    ) -> Result<Trainer> {
        weights.validate()?;
        adam.validate()?;
        if weights.w_gan > 0.0 && disc.is_none() {
            return Err(Error::InvalidArgument(
                "w_gan > 0 requires a discriminator".into(),
            ));
        }
        if weights.w_gan == 0.0 && disc.is_some() {
            return Err(Error::InvalidArgument(
                "a discriminator without w_gan > 0 would never influence training".into(),
            ));
        }
        Ok(Trainer {
            net,
            net_opt: AdamState::new(adam),
            disc,
            disc_opt: AdamState::new(adam),
            weights,
            step: 0,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn into_network(self) -> Network {
        self.net
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.net_opt
    }

    pub fn weights(&self) -> LossWeights {
        self.weights
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Resumes the generator optimizer from a loaded state (the step counter
    /// continues from the optimizer's own timestep).
    pub fn restore_optimizer(&mut self, state: AdamState) {
        self.step = state.t();
        self.net_opt = state;
    }

    /// One optimization step on a batch: the generator repairs the damaged
    /// image into a thumbnail, is scored against the box-averaged ground
    /// truth, and takes an Adam step; afterwards the discriminator (when
    /// enabled) takes its own Adam step on (real thumbnail, repaired
    /// thumbnail). A non-finite loss or gradient skips the update and is
    /// flagged in the report instead of erroring.
    pub fn train_step(&mut self, image: &Tensor, mask: &Tensor) -> Result<StepReport> {
        if !mask.is_binary() {
            return Err(Error::InvalidArgument(
                "training mask must contain exactly 0.0 and 1.0".into(),
            ));
        }
        if !image.all_finite() {
            return Err(Error::NonFinite("training image".into()));
        }

        let step = self.step;
        self.step += 1;
        let w = self.weights;

        let target = downsample_gt(image)?;
        let (lr_out, cache) = self.net.forward_train(image, mask)?;
        lr_out.check_same_shape(&target, "network output vs downsampled target")?;

        let mut d_total = Tensor::zeros(lr_out.shape());
        let accumulate = |grad: &Tensor, weight: f32, d_total: &mut Tensor| {
            let dst = d_total.data_mut();
            for (d, g) in dst.iter_mut().zip(grad.data()) {
                *d += weight * g;
            }
        };

        let mut raw_l1 = 0.0;
        if w.w_l1 > 0.0 {
            raw_l1 = l1_loss(&lr_out, &target)?;
            accumulate(&l1_loss_backward(&lr_out, &target)?, w.w_l1, &mut d_total);
        }
        let mut raw_var = 0.0;
        if w.w_var > 0.0 {
            raw_var = variance_loss(&lr_out)?;
            accumulate(&variance_loss_backward(&lr_out)?, w.w_var, &mut d_total);
        }

        let mut raw_gan_g = 0.0;
        let mut gan_d = 0.0;
        let mut disc_grads: Option<BTreeMap<String, Vec<f32>>> = None;
        if let Some(disc) = self.disc.as_mut() {
            // Generator's adversarial term, scored by the current critic.
            let (fake_score, fake_cache) = disc.forward_train(&lr_out)?;
            raw_gan_g = -mean_of(&fake_score);
            let (_, d_lr) = disc.backward(&fake_cache, &gan_g_backward(&fake_score))?;
            accumulate(&d_lr, w.w_gan, &mut d_total);

            // Critic's own step on (real thumbnail, repaired thumbnail).
            let (real_score, real_cache) = disc.forward_train(&target)?;
            let (fake_score2, fake_cache2) = disc.forward_train(&lr_out)?;
            let (loss_d, _) = gan_losses(&real_score, &fake_score2)?;
            gan_d = loss_d;
            let (up_real, up_fake) = gan_d_backward(&real_score, &fake_score2)?;
            let (mut g_real, _) = disc.backward(&real_cache, &up_real)?;
            let (g_fake, _) = disc.backward(&fake_cache2, &up_fake)?;
            for (name, g) in g_fake {
                let acc = g_real.get_mut(&name).ok_or_else(|| {
                    Error::Training(format!("discriminator gradient maps disagree on '{name}'"))
                })?;
                for (a, b) in acc.iter_mut().zip(g) {
                    *a += b;
                }
            }
            disc_grads = Some(g_real);
        }

        let l1 = w.w_l1 as f64 * raw_l1;
        let var = w.w_var as f64 * raw_var;
        let gan_g = w.w_gan as f64 * raw_gan_g;
        let total = l1 + var + gan_g;

        let mut report = StepReport {
            step,
            l1,
            var,
            gan_g,
            gan_d,
            total,
            skipped: false,
        };
        if !total.is_finite() || !gan_d.is_finite() {
            report.skipped = true;
            return Ok(report);
        }

        let net_grads = self.net.backward(&cache, &d_total)?;
        match adam_step(&mut self.net_opt, &mut self.net, &net_grads.params) {
            Ok(()) => {}
            Err(Error::NonFinite(_)) => {
                report.skipped = true;
                return Ok(report);
            }
            Err(e) => return Err(e),
        }

        if let (Some(disc), Some(grads)) = (self.disc.as_mut(), disc_grads) {
            match adam_step(&mut self.disc_opt, disc, &grads) {
                Ok(()) => {}
                // The generator step already landed; a bad critic batch only
                // freezes the critic for this step.
                Err(Error::NonFinite(_)) => {}
                Err(e) => return Err(e),
            }
        }

        Ok(report)
    }
}

fn mean_of(t: &Tensor) -> f64 {
    if t.numel() == 0 {
        return 0.0;
    }
    t.data().iter().map(|&v| v as f64).sum::<f64>() / t.numel() as f64
}
