//! Mask generators: edge bands, rectangles, and random irregular strokes.
//!
//! Masks are `[1, 1, h, w]` tensors holding exactly 0.0 (missing) or 1.0
//! (valid).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Which border an edge mask removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskSide {
    Top,
    Bottom,
    Left,
    Right,
}

impl MaskSide {
    pub const ALL: [MaskSide; 4] = [
        MaskSide::Top,
        MaskSide::Bottom,
        MaskSide::Left,
        MaskSide::Right,
    ];

    pub fn parse(s: &str) -> Result<MaskSide> {
        match s {
            "top" => Ok(MaskSide::Top),
            "bottom" => Ok(MaskSide::Bottom),
            "left" => Ok(MaskSide::Left),
            "right" => Ok(MaskSide::Right),
            other => Err(Error::InvalidArgument(format!(
                "unknown mask side '{other}', expected top|bottom|left|right"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaskSide::Top => "top",
            MaskSide::Bottom => "bottom",
            MaskSide::Left => "left",
            MaskSide::Right => "right",
        }
    }
}

/// Fraction of pixels that are missing (value 0).
pub fn missing_fraction(mask: &Tensor) -> f64 {
    if mask.numel() == 0 {
        return 0.0;
    }
    let missing = mask.data().iter().filter(|&&v| v == 0.0).count();
    missing as f64 / mask.numel() as f64
}

/// Zeroes a contiguous band of `round(fraction * extent)` rows or columns on
/// the named side.
pub fn edge_mask(side: MaskSide, fraction: f64, h: usize, w: usize) -> Result<Tensor> {
    if !fraction.is_finite() || !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "edge fraction must lie in [0, 1), got {fraction}"
        )));
    }
    if h == 0 || w == 0 {
        return Err(Error::InvalidArgument("mask extent must be positive".into()));
    }
    let extent = match side {
        MaskSide::Top | MaskSide::Bottom => h,
        MaskSide::Left | MaskSide::Right => w,
    };
    let band = (fraction * extent as f64).round() as usize;
    Ok(Tensor::from_fn([1, 1, h, w], |_, _, y, x| {
        let in_band = match side {
            MaskSide::Top => y < band,
            MaskSide::Bottom => y >= h - band,
            MaskSide::Left => x < band,
            MaskSide::Right => x >= w - band,
        };
        if in_band {
            0.0
        } else {
            1.0
        }
    }))
}

/// Zeroes exactly the rectangle `rows y0..y0+h_hole, cols x0..x0+w_hole`.
pub fn rect_mask(
    x0: usize,
    y0: usize,
    h_hole: usize,
    w_hole: usize,
    h: usize,
    w: usize,
) -> Result<Tensor> {
    if y0 + h_hole > h || x0 + w_hole > w {
        return Err(Error::InvalidArgument(format!(
            "hole {h_hole}x{w_hole} at ({y0},{x0}) leaves the {h}x{w} frame"
        )));
    }
    Ok(Tensor::from_fn([1, 1, h, w], |_, _, y, x| {
        if y >= y0 && y < y0 + h_hole && x >= x0 && x < x0 + w_hole {
            0.0
        } else {
            1.0
        }
    }))
}

/// Accumulates random thick strokes until at least `target_fraction` of the
/// pixels are missing. Deterministic per seed. Checking the fraction after
/// every disc stamp keeps the overshoot below one stamp's area, so the final
/// fraction stays within [target, target + 0.1] at the supported sizes.
pub fn irregular_mask(seed: u64, target_fraction: f64, h: usize, w: usize) -> Result<Tensor> {
    if !target_fraction.is_finite() || target_fraction <= 0.0 || target_fraction > 0.9 {
        return Err(Error::InvalidArgument(format!(
            "irregular target fraction must lie in (0, 0.9], got {target_fraction}"
        )));
    }
    if h == 0 || w == 0 {
        return Err(Error::InvalidArgument("mask extent must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut valid = vec![true; h * w];
    let mut missing = 0usize;
    let target = (target_fraction * (h * w) as f64).ceil() as usize;

    // Stroke radii scale with the frame so one stamp cannot blow past the
    // target on small test images; at 256x256 the range is the full 4..=16.
    let scale = h.min(w) as f64 / 256.0;
    let r_lo = ((4.0 * scale).round() as usize).max(1);
    let r_hi = ((16.0 * scale).round() as usize).max(r_lo);

    let stamp = |cy: f64, cx: f64, r: usize, valid: &mut [bool], missing: &mut usize| {
        let rr = (r * r) as f64;
        let y_lo = (cy - r as f64).floor().max(0.0) as usize;
        let y_hi = ((cy + r as f64).ceil() as usize).min(h - 1);
        let x_lo = (cx - r as f64).floor().max(0.0) as usize;
        let x_hi = ((cx + r as f64).ceil() as usize).min(w - 1);
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let dy = y as f64 - cy;
                let dx = x as f64 - cx;
                if dy * dy + dx * dx <= rr && valid[y * w + x] {
                    valid[y * w + x] = false;
                    *missing += 1;
                }
            }
        }
    };

    'strokes: while missing < target {
        let r = rng.gen_range(r_lo..=r_hi);
        let mut cy = rng.gen_range(0.0..h as f64);
        let mut cx = rng.gen_range(0.0..w as f64);
        let mut angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let steps = rng.gen_range(4..=16);
        for _ in 0..steps {
            stamp(cy, cx, r, &mut valid, &mut missing);
            if missing >= target {
                break 'strokes;
            }
            angle += rng.gen_range(-0.8..0.8);
            let hop = rng.gen_range(0.5..1.5) * r as f64;
            cy = (cy + angle.sin() * hop).clamp(0.0, (h - 1) as f64);
            cx = (cx + angle.cos() * hop).clamp(0.0, (w - 1) as f64);
        }
    }

    Ok(Tensor::from_fn([1, 1, h, w], |_, _, y, x| {
        if valid[y * w + x] {
            1.0
        } else {
            0.0
        }
    }))
}

/// Fraction used for randomly sampled training masks.
pub const TRAINING_EDGE_FRACTION: f64 = 0.30;

/// Uniformly picks one of the four edge masks at the training fraction.
pub fn sample_training_mask(seed: u64, h: usize, w: usize) -> Result<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = MaskSide::ALL[rng.gen_range(0..4)];
    edge_mask(side, TRAINING_EDGE_FRACTION, h, w)
}
