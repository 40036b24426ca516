//! PNG image and mask I/O. Images decode to `[1, 3, h, w]` tensors in
//! [0, 1]; masks are single-channel with 0 = missing and 255 = valid.

use std::path::Path;

use image::imageops::FilterType;
use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Full-resolution frame side used throughout the pipeline.
pub const IMAGE_SIZE: usize = 256;

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Loads an RGB PNG as a `[1, 3, size, size]` tensor in [0, 1]. Inputs of a
/// different size are resized so the shorter side is `size`, then
/// center-cropped.
pub fn load_image_sized(path: &Path, size: usize) -> Result<Tensor> {
    if size == 0 {
        return Err(Error::InvalidArgument("image size must be positive".into()));
    }
    let mut rgb = open(path)?.to_rgb8();
    let (w, h) = rgb.dimensions();
    if w as usize != size || h as usize != size {
        if w == 0 || h == 0 {
            return Err(Error::Image {
                path: path.to_path_buf(),
                message: "empty image".into(),
            });
        }
        let scale = size as f64 / w.min(h) as f64;
        let new_w = ((w as f64 * scale).round() as u32).max(size as u32);
        let new_h = ((h as f64 * scale).round() as u32).max(size as u32);
        let resized = DynamicImage::ImageRgb8(rgb)
            .resize_exact(new_w, new_h, FilterType::Triangle)
            .to_rgb8();
        let x0 = (new_w - size as u32) / 2;
        let y0 = (new_h - size as u32) / 2;
        rgb = image::imageops::crop_imm(&resized, x0, y0, size as u32, size as u32).to_image();
    }
    Ok(Tensor::from_fn([1, 3, size, size], |_, c, y, x| {
        rgb.get_pixel(x as u32, y as u32).0[c] as f32 / 255.0
    }))
}

/// Loads at the pipeline's standard 256x256.
pub fn load_image(path: &Path) -> Result<Tensor> {
    load_image_sized(path, IMAGE_SIZE)
}

/// Saves a `[1, 3, h, w]` tensor as an 8-bit RGB PNG, mapping values by
/// round-half-up of `v * 255` with clamping.
pub fn save_image(image: &Tensor, path: &Path) -> Result<()> {
    let [n, c, h, w] = image.shape();
    if n != 1 || c != 3 {
        return Err(Error::ShapeMismatch(format!(
            "can only save [1, 3, h, w] images, got {:?}",
            image.shape()
        )));
    }
    let mut out = RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let px: [u8; 3] = std::array::from_fn(|ch| {
                let v = image.get(0, ch, y, x);
                ((v * 255.0 + 0.5).floor()).clamp(0.0, 255.0) as u8
            });
            out.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    out.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Loads a grayscale PNG mask at its native size; every pixel must be
/// exactly 0 (missing) or 255 (valid).
pub fn load_mask(path: &Path) -> Result<Tensor> {
    let gray = open(path)?.to_luma8();
    let (w, h) = gray.dimensions();
    let mut mask = Tensor::zeros([1, 1, h as usize, w as usize]);
    for y in 0..h {
        for x in 0..w {
            let v = gray.get_pixel(x, y).0[0];
            let m = match v {
                0 => 0.0,
                255 => 1.0,
                other => {
                    return Err(Error::Image {
                        path: path.to_path_buf(),
                        message: format!(
                            "mask pixel ({x}, {y}) is {other}; masks must be exactly 0 or 255"
                        ),
                    })
                }
            };
            mask.set(0, 0, y as usize, x as usize, m);
        }
    }
    Ok(mask)
}

/// Saves a binary `[1, 1, h, w]` mask as a grayscale PNG (0/255).
pub fn save_mask(mask: &Tensor, path: &Path) -> Result<()> {
    let [n, c, h, w] = mask.shape();
    if n != 1 || c != 1 {
        return Err(Error::ShapeMismatch(format!(
            "can only save [1, 1, h, w] masks, got {:?}",
            mask.shape()
        )));
    }
    if !mask.is_binary() {
        return Err(Error::InvalidArgument(
            "mask must contain exactly 0.0 and 1.0".into(),
        ));
    }
    let mut out = GrayImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let v = if mask.get(0, 0, y, x) == 1.0 { 255u8 } else { 0u8 };
            out.put_pixel(x as u32, y as u32, image::Luma([v]));
        }
    }
    out.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
