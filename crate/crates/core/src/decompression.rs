//! Thumbnail-to-full-resolution restoration by similar-texture selection.
//!
//! Each pixel of the repaired thumbnail is matched to the most similar pixel
//! of a low-resolution reference, the corresponding 8x8 block of the
//! high-resolution reference is copied in, and pixels that stay close to a
//! stretched copy of the damaged input are blended back from it. A plain
//! bilinear x8 upscale serves as the baseline mode.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::trainer::downsample_gt;

/// Side of the square block each thumbnail pixel expands to.
pub const BLOCK: usize = 8;

/// Options for the per-pixel similarity search. The candidate set is all
/// reference pixels, optionally restricted by a binary mask (1 = allowed).
#[derive(Debug, Clone, Default)]
pub struct SelectionConfig {
    pub reference_mask: Option<Tensor>,
}

/// Sum of absolute RGB differences, the distance the selection minimizes.
/// Ranges over [0, 3] for pixels in [0, 1].
pub fn pixel_loss(a: [f32; 3], b: [f32; 3]) -> f64 {
    (0..3).map(|c| (a[c] as f64 - b[c] as f64).abs()).sum()
}

fn rgb_at(t: &Tensor, y: usize, x: usize) -> [f32; 3] {
    [t.get(0, 0, y, x), t.get(0, 1, y, x), t.get(0, 2, y, x)]
}

fn check_rgb(t: &Tensor, what: &str) -> Result<()> {
    if t.n() != 1 || t.c() != 3 {
        return Err(Error::ShapeMismatch(format!(
            "{what} must be a [1, 3, h, w] image, got {:?}",
            t.shape()
        )));
    }
    Ok(())
}

fn check_candidate_mask(mask: &Tensor, h: usize, w: usize) -> Result<()> {
    if mask.shape() != [1, 1, h, w] {
        return Err(Error::ShapeMismatch(format!(
            "candidate mask must be [1, 1, {h}, {w}], got {:?}",
            mask.shape()
        )));
    }
    if !mask.is_binary() {
        return Err(Error::InvalidArgument(
            "candidate mask must contain exactly 0.0 and 1.0".into(),
        ));
    }
    if !mask.data().iter().any(|&v| v == 1.0) {
        return Err(Error::InvalidArgument(
            "candidate mask allows no reference pixel".into(),
        ));
    }
    Ok(())
}

/// Returns the reference coordinates `(i, j)` (row, column) minimizing
/// [`pixel_loss`] against thumbnail pixel `(x, y)` (row, column), scanning
/// candidates in row-major order and keeping the first minimum, so ties
/// resolve to the smallest `(i, j)`.
pub fn find_similar_pixel(
    lr_output: &Tensor,
    lr_reference: &Tensor,
    x: usize,
    y: usize,
    cfg: &SelectionConfig,
) -> Result<(usize, usize)> {
    check_rgb(lr_output, "lr_output")?;
    check_rgb(lr_reference, "lr_reference")?;
    lr_output.check_same_shape(lr_reference, "lr_output vs lr_reference")?;
    let (h, w) = (lr_output.h(), lr_output.w());
    if x >= h || y >= w {
        return Err(Error::InvalidArgument(format!(
            "pixel ({x}, {y}) outside {h}x{w} thumbnail"
        )));
    }
    if let Some(mask) = &cfg.reference_mask {
        check_candidate_mask(mask, h, w)?;
    }

    let probe = rgb_at(lr_output, x, y);
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..h {
        for j in 0..w {
            if let Some(mask) = &cfg.reference_mask {
                if mask.get(0, 0, i, j) == 0.0 {
                    continue;
                }
            }
            let loss = pixel_loss(probe, rgb_at(lr_reference, i, j));
            if best.map_or(true, |(b, _, _)| loss < b) {
                best = Some((loss, i, j));
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
        .ok_or_else(|| Error::InvalidArgument("empty candidate set".into()))
}

/// For each thumbnail pixel, copies the 8x8 `hr_reference` block of its most
/// similar reference pixel into the output. Every output block is an exact
/// copy; there is no blending.
pub fn select_textures(
    lr_output: &Tensor,
    lr_reference: &Tensor,
    hr_reference: &Tensor,
    cfg: &SelectionConfig,
) -> Result<Tensor> {
    check_rgb(lr_output, "lr_output")?;
    check_rgb(lr_reference, "lr_reference")?;
    check_rgb(hr_reference, "hr_reference")?;
    lr_output.check_same_shape(lr_reference, "lr_output vs lr_reference")?;
    let (h, w) = (lr_output.h(), lr_output.w());
    if hr_reference.h() != h * BLOCK || hr_reference.w() != w * BLOCK {
        return Err(Error::ShapeMismatch(format!(
            "hr_reference must be [1, 3, {}, {}], got {:?}",
            h * BLOCK,
            w * BLOCK,
            hr_reference.shape()
        )));
    }

    let mut out = Tensor::zeros([1, 3, h * BLOCK, w * BLOCK]);
    for x in 0..h {
        for y in 0..w {
            let (i, j) = find_similar_pixel(lr_output, lr_reference, x, y, cfg)?;
            for c in 0..3 {
                for n in 0..BLOCK {
                    for m in 0..BLOCK {
                        let v = hr_reference.get(0, c, i * BLOCK + n, j * BLOCK + m);
                        out.set(0, c, x * BLOCK + n, y * BLOCK + m, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Bilinear resampling with half-pixel sample centers, clamped at the edges.
/// Degenerates to an exact copy when source and destination sizes agree.
fn bilinear_resize(src: &Tensor, dst_h: usize, dst_w: usize) -> Tensor {
    let (c_n, h, w) = (src.c(), src.h(), src.w());
    let sy = h as f64 / dst_h as f64;
    let sx = w as f64 / dst_w as f64;
    Tensor::from_fn([1, c_n, dst_h, dst_w], |_, c, dy, dx| {
        let fy = ((dy as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let fx = ((dx as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
        let y0 = fy.floor() as usize;
        let x0 = fx.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let x1 = (x0 + 1).min(w - 1);
        let wy = fy - y0 as f64;
        let wx = fx - x0 as f64;
        let v00 = src.get(0, c, y0, x0) as f64;
        let v01 = src.get(0, c, y0, x1) as f64;
        let v10 = src.get(0, c, y1, x0) as f64;
        let v11 = src.get(0, c, y1, x1) as f64;
        let top = v00 * (1.0 - wx) + v01 * wx;
        let bot = v10 * (1.0 - wx) + v11 * wx;
        (top * (1.0 - wy) + bot * wy) as f32
    })
}

/// Crops the tight bounding box of valid pixels and bilinearly resamples it
/// back to the full frame. Depends only on the damaged input and its mask.
pub fn stretch_damaged(image: &Tensor, mask: &Tensor) -> Result<Tensor> {
    check_rgb(image, "image")?;
    if mask.shape() != [1, 1, image.h(), image.w()] {
        return Err(Error::ShapeMismatch(format!(
            "mask must be [1, 1, {}, {}], got {:?}",
            image.h(),
            image.w(),
            mask.shape()
        )));
    }
    if !mask.is_binary() {
        return Err(Error::InvalidArgument(
            "mask must contain exactly 0.0 and 1.0".into(),
        ));
    }
    let (h, w) = (image.h(), image.w());
    let (mut y_lo, mut y_hi, mut x_lo, mut x_hi) = (h, 0usize, w, 0usize);
    for y in 0..h {
        for x in 0..w {
            if mask.get(0, 0, y, x) == 1.0 {
                y_lo = y_lo.min(y);
                y_hi = y_hi.max(y + 1);
                x_lo = x_lo.min(x);
                x_hi = x_hi.max(x + 1);
            }
        }
    }
    if y_lo >= y_hi {
        return Err(Error::InvalidArgument(
            "mask has no valid pixel to stretch from".into(),
        ));
    }
    let crop = Tensor::from_fn([1, 3, y_hi - y_lo, x_hi - x_lo], |_, c, y, x| {
        image.get(0, c, y_lo + y, x_lo + x)
    });
    Ok(bilinear_resize(&crop, h, w))
}

/// Per pixel: when the restored pixel is within `t` of the stretched one
/// (strictly), the stretched pixel wins; otherwise the restored pixel stays.
pub fn finetune(hr_output: &Tensor, stretched: &Tensor, t: f64) -> Result<Tensor> {
    check_rgb(hr_output, "hr_output")?;
    hr_output.check_same_shape(stretched, "hr_output vs stretched")?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "finetune threshold must be finite and non-negative, got {t}"
        )));
    }
    let (h, w) = (hr_output.h(), hr_output.w());
    let mut out = hr_output.clone();
    for y in 0..h {
        for x in 0..w {
            let loss = pixel_loss(rgb_at(hr_output, y, x), rgb_at(stretched, y, x));
            if loss < t {
                for c in 0..3 {
                    out.set(0, c, y, x, stretched.get(0, c, y, x));
                }
            }
        }
    }
    Ok(out)
}

/// Bilinear x8 upscale, the reference-free fallback.
pub fn upscale_baseline(lr: &Tensor) -> Result<Tensor> {
    check_rgb(lr, "lr")?;
    Ok(bilinear_resize(lr, lr.h() * BLOCK, lr.w() * BLOCK))
}

/// How [`decompress`] restores full resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompressMode {
    /// Similar-texture selection plus threshold blending.
    Selection,
    /// Bilinear upscale; references are ignored.
    Baseline,
}

impl DecompressMode {
    pub fn parse(s: &str) -> Result<DecompressMode> {
        match s {
            "selection" => Ok(DecompressMode::Selection),
            "baseline" => Ok(DecompressMode::Baseline),
            other => Err(Error::InvalidArgument(format!(
                "unknown decompression mode '{other}', expected selection|baseline"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DecompressMode::Selection => "selection",
            DecompressMode::Baseline => "baseline",
        }
    }
}

/// Everything selection mode consults besides the thumbnail: the reference
/// pair it copies from and the damaged input it blends back toward.
#[derive(Debug, Clone)]
pub struct ReferencePack {
    pub lr_reference: Tensor,
    pub hr_reference: Tensor,
    pub damaged: Tensor,
    pub mask: Tensor,
    pub reference_mask: Option<Tensor>,
}

impl ReferencePack {
    /// References taken from the intact source image. Restoration quality is
    /// an upper bound, but this consults data an inpainting deployment would
    /// not have.
    pub fn from_truth(truth: &Tensor, damaged: &Tensor, mask: &Tensor) -> Result<ReferencePack> {
        check_rgb(truth, "truth")?;
        truth.check_same_shape(damaged, "truth vs damaged")?;
        Ok(ReferencePack {
            lr_reference: downsample_gt(truth)?,
            hr_reference: truth.clone(),
            damaged: damaged.clone(),
            mask: mask.clone(),
            reference_mask: None,
        })
    }

    /// Leakage-free references: only the damaged input itself, with
    /// candidates restricted to thumbnail pixels whose whole 8x8 block is
    /// valid.
    pub fn from_damaged(damaged: &Tensor, mask: &Tensor) -> Result<ReferencePack> {
        check_rgb(damaged, "damaged")?;
        if mask.shape() != [1, 1, damaged.h(), damaged.w()] {
            return Err(Error::ShapeMismatch(format!(
                "mask must be [1, 1, {}, {}], got {:?}",
                damaged.h(),
                damaged.w(),
                mask.shape()
            )));
        }
        if !mask.is_binary() {
            return Err(Error::InvalidArgument(
                "mask must contain exactly 0.0 and 1.0".into(),
            ));
        }
        let (th, tw) = (damaged.h() / BLOCK, damaged.w() / BLOCK);
        let candidates = Tensor::from_fn([1, 1, th, tw], |_, _, i, j| {
            for n in 0..BLOCK {
                for m in 0..BLOCK {
                    if mask.get(0, 0, i * BLOCK + n, j * BLOCK + m) == 0.0 {
                        return 0.0;
                    }
                }
            }
            1.0
        });
        if !candidates.data().iter().any(|&v| v == 1.0) {
            return Err(Error::InvalidArgument(
                "no fully valid 8x8 block to use as reference".into(),
            ));
        }
        Ok(ReferencePack {
            lr_reference: downsample_gt(damaged)?,
            hr_reference: damaged.clone(),
            damaged: damaged.clone(),
            mask: mask.clone(),
            reference_mask: Some(candidates),
        })
    }
}

/// Restores a full-resolution image from a repaired thumbnail.
pub fn decompress(
    lr_output: &Tensor,
    pack: Option<&ReferencePack>,
    mode: DecompressMode,
    t: f64,
) -> Result<Tensor> {
    match mode {
        DecompressMode::Baseline => upscale_baseline(lr_output),
        DecompressMode::Selection => {
            let pack = pack.ok_or_else(|| {
                Error::InvalidArgument("selection mode needs a reference pack".into())
            })?;
            let cfg = SelectionConfig {
                reference_mask: pack.reference_mask.clone(),
            };
            let selected =
                select_textures(lr_output, &pack.lr_reference, &pack.hr_reference, &cfg)?;
            if t == 0.0 {
                return Ok(selected);
            }
            let stretched = stretch_damaged(&pack.damaged, &pack.mask)?;
            finetune(&selected, &stretched, t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::edge_mask;
    use crate::masks::MaskSide;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, h: usize, w: usize) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn([1, 3, h, w], |_, _, _, _| rng.gen_range(0.0..1.0))
    }

    /// Same problem solved with a different structure: materialize every
    /// candidate and take the lexicographic minimum of (loss, i, j).
    fn argmin_oracle(
        lr_output: &Tensor,
        lr_reference: &Tensor,
        x: usize,
        y: usize,
        mask: Option<&Tensor>,
    ) -> (usize, usize) {
        let probe = rgb_at(lr_output, x, y);
        let mut all: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..lr_reference.h() {
            for j in 0..lr_reference.w() {
                if mask.map_or(true, |m| m.get(0, 0, i, j) == 1.0) {
                    all.push((pixel_loss(probe, rgb_at(lr_reference, i, j)), i, j));
                }
            }
        }
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (all[0].1, all[0].2)
    }

    #[test]
    fn exact_copy_wins_with_zero_loss() {
        let mut reference = random_image(1, 16, 16);
        let output = random_image(2, 16, 16);
        for c in 0..3 {
            let v = output.get(0, c, 4, 7);
            reference.set(0, c, 11, 3, v);
        }
        let (i, j) =
            find_similar_pixel(&output, &reference, 4, 7, &SelectionConfig::default()).unwrap();
        assert_eq!((i, j), (11, 3));
    }

    #[test]
    fn uniform_reference_ties_break_to_origin() {
        let reference = Tensor::full([1, 3, 8, 8], 0.5);
        let output = random_image(3, 8, 8);
        for x in [0, 3, 7] {
            for y in [0, 5] {
                let (i, j) =
                    find_similar_pixel(&output, &reference, x, y, &SelectionConfig::default())
                        .unwrap();
                assert_eq!((i, j), (0, 0));
            }
        }
    }

    #[test]
    fn selection_matches_brute_force_oracle_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..50 {
            // Quantized values make exact ties common.
            let quantize = |v: f32| (v * 4.0).floor() / 4.0;
            let output = random_image(100 + trial, 16, 16).map(quantize);
            let reference = random_image(200 + trial, 16, 16).map(quantize);
            let x = rng.gen_range(0..16);
            let y = rng.gen_range(0..16);
            let got =
                find_similar_pixel(&output, &reference, x, y, &SelectionConfig::default())
                    .unwrap();
            let want = argmin_oracle(&output, &reference, x, y, None);
            assert_eq!(got, want, "trial {trial} probe ({x},{y})");
        }
    }

    #[test]
    fn candidate_mask_restricts_and_empty_set_errors() {
        let output = random_image(4, 8, 8);
        let mut reference = random_image(5, 8, 8);
        // Plant an exact copy in a forbidden location.
        for c in 0..3 {
            reference.set(0, c, 2, 2, output.get(0, c, 1, 1));
        }
        let mask = Tensor::from_fn([1, 1, 8, 8], |_, _, i, j| {
            if i == 2 && j == 2 {
                0.0
            } else {
                1.0
            }
        });
        let cfg = SelectionConfig {
            reference_mask: Some(mask.clone()),
        };
        let got = find_similar_pixel(&output, &reference, 1, 1, &cfg).unwrap();
        assert_ne!(got, (2, 2), "forbidden candidate must not win");
        assert_eq!(got, argmin_oracle(&output, &reference, 1, 1, Some(&mask)));

        let empty = SelectionConfig {
            reference_mask: Some(Tensor::zeros([1, 1, 8, 8])),
        };
        assert!(find_similar_pixel(&output, &reference, 1, 1, &empty).is_err());
    }

    #[test]
    fn block_copy_indexing_follows_the_match() {
        // Distinct reference pixels, and the probe equals reference (10, 2).
        let lr_reference = Tensor::from_fn([1, 3, 32, 32], |_, c, i, j| {
            (i * 32 + j) as f32 / 1024.0 + c as f32 * 2.0
        });
        let mut lr_output = Tensor::full([1, 3, 32, 32], -1.0);
        for c in 0..3 {
            lr_output.set(0, c, 3, 5, lr_reference.get(0, c, 10, 2));
        }
        let hr_reference = random_image(6, 256, 256);
        let out = select_textures(
            &lr_output,
            &lr_reference,
            &hr_reference,
            &SelectionConfig::default(),
        )
        .unwrap();
        for c in 0..3 {
            for n in 0..8 {
                for m in 0..8 {
                    assert_eq!(
                        out.get(0, c, 24 + n, 40 + m),
                        hr_reference.get(0, c, 80 + n, 16 + m)
                    );
                }
            }
        }
    }

    #[test]
    fn every_output_block_is_a_reference_block() {
        // Block-constant reference: each output block must equal one of the
        // reference constants exactly.
        let hr_reference = Tensor::from_fn([1, 3, 64, 64], |_, c, y, x| {
            ((y / 8) * 8 + (x / 8)) as f32 / 64.0 + c as f32
        });
        let lr_reference = downsample_gt(&hr_reference).unwrap();
        let lr_output = random_image(8, 8, 8);
        let out = select_textures(
            &lr_output,
            &lr_reference,
            &hr_reference,
            &SelectionConfig::default(),
        )
        .unwrap();
        let reference_values: Vec<f32> = (0..64).map(|b| b as f32 / 64.0).collect();
        for by in 0..8 {
            for bx in 0..8 {
                let v = out.get(0, 0, by * 8, bx * 8);
                assert!(
                    reference_values.iter().any(|&r| r == v),
                    "block ({by},{bx}) value {v} is not a reference constant"
                );
                for n in 0..8 {
                    for m in 0..8 {
                        assert_eq!(out.get(0, 0, by * 8 + n, bx * 8 + m), v);
                    }
                }
            }
        }
    }

    #[test]
    fn distinct_thumbnails_reproduce_the_reference_exactly() {
        let hr_reference = Tensor::from_fn([1, 3, 64, 64], |_, c, y, x| {
            ((y / 8) * 8 + (x / 8)) as f32 / 100.0 + c as f32 * 0.001
        });
        let thumb = downsample_gt(&hr_reference).unwrap();
        let out = select_textures(
            &thumb,
            &thumb,
            &hr_reference,
            &SelectionConfig::default(),
        )
        .unwrap();
        assert_eq!(out.data(), hr_reference.data());
    }

    #[test]
    fn stretch_with_all_valid_mask_is_the_identity() {
        let img = random_image(9, 32, 32);
        let mask = Tensor::full([1, 1, 32, 32], 1.0);
        let out = stretch_damaged(&img, &mask).unwrap();
        assert_eq!(out.data(), img.data());
    }

    #[test]
    fn stretch_of_constant_half_stays_constant() {
        let img = Tensor::from_fn([1, 3, 16, 16], |_, _, _, x| if x < 8 { 0.3 } else { 0.9 });
        let mask = edge_mask(MaskSide::Right, 0.5, 16, 16).unwrap();
        let out = stretch_damaged(&img, &mask).unwrap();
        for v in out.data() {
            assert!((v - 0.3).abs() < 1e-6, "constant region must stay 0.3, got {v}");
        }
    }

    #[test]
    fn stretch_matches_the_analytic_ramp() {
        // Horizontal ramp, right half missing: the 128-column crop maps to
        // output column c from source column c/2 - 0.25 (half-pixel centers,
        // clamped), where the ramp is linear so bilinear is exact.
        let (h, w) = (8usize, 256usize);
        let img = Tensor::from_fn([1, 3, h, w], |_, _, _, x| x as f32 / 255.0);
        let mask = edge_mask(MaskSide::Right, 0.5, h, w).unwrap();
        let out = stretch_damaged(&img, &mask).unwrap();
        for c in 0..w {
            let src = (c as f64 / 2.0 - 0.25).clamp(0.0, 127.0);
            let expected = src / 255.0;
            let got = out.get(0, 0, 3, c) as f64;
            assert!(
                (got - expected).abs() < 1e-6,
                "column {c}: got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn stretch_rejects_an_empty_valid_region() {
        let img = random_image(10, 8, 8);
        let mask = Tensor::zeros([1, 1, 8, 8]);
        assert!(stretch_damaged(&img, &mask).is_err());
    }

    #[test]
    fn finetune_endpoints_and_hand_case() {
        let a = random_image(11, 8, 8);
        let b = random_image(12, 8, 8);
        let at_zero = finetune(&a, &b, 0.0).unwrap();
        assert_eq!(at_zero.data(), a.data(), "t = 0 keeps the restored image");
        let at_max = finetune(&a, &b, 3.0 + 1e-6).unwrap();
        assert_eq!(at_max.data(), b.data(), "t > 3 takes the stretched image");

        // Two-pixel hand case at t = 0.1: per-pixel loss 0.05 replaced,
        // 0.2 kept.
        let mut hr = Tensor::zeros([1, 3, 1, 2]);
        let mut st = Tensor::zeros([1, 3, 1, 2]);
        hr.set(0, 0, 0, 0, 0.50);
        st.set(0, 0, 0, 0, 0.55);
        hr.set(0, 0, 0, 1, 0.50);
        st.set(0, 0, 0, 1, 0.70);
        let out = finetune(&hr, &st, 0.1).unwrap();
        assert_eq!(out.get(0, 0, 0, 0), 0.55);
        assert_eq!(out.get(0, 0, 0, 1), 0.50);
    }

    #[test]
    fn finetune_replacement_grows_monotonically_with_t() {
        let a = random_image(13, 16, 16);
        let b = random_image(14, 16, 16);
        let mut prev: Option<Vec<bool>> = None;
        for t in [0.0, 0.2, 0.5, 1.0, 2.0, 3.5] {
            let out = finetune(&a, &b, t).unwrap();
            let taken: Vec<bool> = (0..16 * 16)
                .map(|p| {
                    let (y, x) = (p / 16, p % 16);
                    (0..3).all(|c| out.get(0, c, y, x) == b.get(0, c, y, x))
                })
                .collect();
            if let Some(prev) = &prev {
                for (was, now) in prev.iter().zip(&taken) {
                    assert!(!was || *now, "a replaced pixel un-replaced as t grew");
                }
            }
            prev = Some(taken);
        }
    }

    #[test]
    fn baseline_upscale_shape_and_smooth_round_trip() {
        let constant = Tensor::full([1, 3, 32, 32], 0.42);
        let up = upscale_baseline(&constant).unwrap();
        assert_eq!(up.shape(), [1, 3, 256, 256]);
        assert!(up.data().iter().all(|&v| (v - 0.42).abs() < 1e-6));

        let smooth = Tensor::from_fn([1, 3, 32, 32], |_, c, y, x| {
            let fy = y as f32 / 31.0;
            let fx = x as f32 / 31.0;
            0.5 + 0.3 * (fy * 3.0).sin() * (fx * 2.0).cos() + c as f32 * 0.01
        });
        let round = downsample_gt(&upscale_baseline(&smooth).unwrap()).unwrap();
        let mae: f64 = smooth
            .data()
            .iter()
            .zip(round.data())
            .map(|(a, b)| (*a as f64 - *b as f64).abs())
            .sum::<f64>()
            / smooth.numel() as f64;
        assert!(mae < 0.05, "smooth round trip mae {mae}");
    }

    #[test]
    fn decompress_modes_compose_the_pieces() {
        let truth = random_image(15, 64, 64);
        let mask = edge_mask(MaskSide::Left, 0.3, 64, 64).unwrap();
        let damaged = Tensor::from_fn([1, 3, 64, 64], |_, c, y, x| {
            truth.get(0, c, y, x) * mask.get(0, 0, y, x)
        });
        let lr = downsample_gt(&truth).unwrap();
        let pack = ReferencePack::from_truth(&truth, &damaged, &mask).unwrap();

        // Baseline ignores the pack entirely.
        let base_with = decompress(&lr, Some(&pack), DecompressMode::Baseline, 0.15).unwrap();
        let base_without = decompress(&lr, None, DecompressMode::Baseline, 0.15).unwrap();
        assert_eq!(base_with.data(), base_without.data());

        // Selection without references is rejected.
        assert!(decompress(&lr, None, DecompressMode::Selection, 0.15).is_err());

        // t = 0 equals the raw texture selection.
        let sel = decompress(&lr, Some(&pack), DecompressMode::Selection, 0.0).unwrap();
        let direct = select_textures(
            &lr,
            &pack.lr_reference,
            &pack.hr_reference,
            &SelectionConfig {
                reference_mask: None,
            },
        )
        .unwrap();
        assert_eq!(sel.data(), direct.data());
    }

    #[test]
    fn damaged_reference_pack_never_consults_missing_blocks() {
        let truth = random_image(16, 64, 64);
        let mask = edge_mask(MaskSide::Top, 0.3, 64, 64).unwrap();
        let damaged = Tensor::from_fn([1, 3, 64, 64], |_, c, y, x| {
            truth.get(0, c, y, x) * mask.get(0, 0, y, x)
        });
        let pack = ReferencePack::from_damaged(&damaged, &mask).unwrap();
        let candidates = pack.reference_mask.as_ref().unwrap();
        // round(0.3 * 64) = 19 rows missing: thumbnail rows 0..2 overlap the
        // band fully or partially, row 2 partially (rows 16..19), so rows
        // 0, 1, 2 are excluded and rows 3.. are allowed.
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i <= 2 { 0.0 } else { 1.0 };
                assert_eq!(candidates.get(0, 0, i, j), expected, "block ({i},{j})");
            }
        }

        let lr = downsample_gt(&truth).unwrap();
        let out = decompress(&lr, Some(&pack), DecompressMode::Selection, 0.0).unwrap();
        // Every copied block must come from valid rows, hence equal the
        // truth there (the damaged image equals truth on valid pixels).
        for by in 0..8 {
            for bx in 0..8 {
                let mut found = false;
                for i in 3..8 {
                    for j in 0..8 {
                        let matches = (0..8).all(|n| {
                            (0..8).all(|m| {
                                out.get(0, 0, by * 8 + n, bx * 8 + m)
                                    == truth.get(0, 0, i * 8 + n, j * 8 + m)
                            })
                        });
                        if matches {
                            found = true;
                        }
                    }
                }
                assert!(found, "block ({by},{bx}) is not a valid reference block");
            }
        }

        // A fully missing mask cannot provide references.
        let all_missing = Tensor::zeros([1, 1, 64, 64]);
        assert!(ReferencePack::from_damaged(&damaged, &all_missing).is_err());
    }
}
