//! Compression-decompression inpainting pipeline.
//!
//! A damaged full-resolution image is repaired at thumbnail scale by a
//! gated-convolution residual network (the compression half), then restored
//! to full resolution by similar-texture selection against a reference image
//! (the decompression half). The crate also ships the training loop, mask
//! generators, evaluation metrics, and a CLI binding it all together.

pub mod config;
pub mod dataset;
pub mod decompression;
pub mod error;
pub mod gated;
pub mod gradsuite;
pub mod imageio;
pub mod masks;
pub mod metrics;
pub mod network;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
