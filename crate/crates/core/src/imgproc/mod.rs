//! Pure image kernels over 8-bit grayscale rasters.
//!
//! Every operation returns a fresh image; intermediate arithmetic is done in
//! `f64` and quantized (round half away from zero, clamp to `[0, 255]`) only
//! when an output image is produced.

mod codec;
mod filters;
mod image;

pub use codec::{
    decode_pgm, encode_pgm, load_image, load_pgm, read_pgm, read_png, save_pgm, write_pgm,
};
pub use filters::{
    bilateral_filter, convolve2d, correlate_f64, histogram_equalize, make_variants,
    resize_bilinear, sharpen,
};
pub use image::{quantize, reflect_index, GrayImage, Kernel};

#[derive(Debug, thiserror::Error)]
pub enum ImgError {
    #[error("image must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("buffer length {actual} does not match expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("unsupported image: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
