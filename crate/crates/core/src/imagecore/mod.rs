//! Raster primitives shared by every stage of scene synthesis.
//!
//! Images are single-channel `f64` rasters in gray-level units. Masks and
//! label maps carry the scene areas (target, local background band, remaining
//! background, occultant) over which region statistics are computed.

mod buffer;
mod mask;
mod morphology;
mod stats;

pub use buffer::{blit, ImageBuffer};
pub use mask::{mask_ops, LabelMap, MaskOp, RegionMask};
pub use morphology::{dilate, dilation_ring, disc_offsets};
pub use stats::{region_stats, RegionStats};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImageError {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("statistics requested on an empty mask")]
    EmptyMask,
    #[error("placement at offset ({dx}, {dy}) falls outside the {width}x{height} frame")]
    OutOfFrame {
        dx: i64,
        dy: i64,
        width: usize,
        height: usize,
    },
    #[error("pixel data length {len} does not match {width}x{height}")]
    BadLength {
        len: usize,
        width: usize,
        height: usize,
    },
    #[error("non-finite pixel value at index {index}")]
    NonFinite { index: usize },
    #[error("dilation radius must be at least 1")]
    InvalidRadius,
}

pub(crate) fn check_dims(
    expected: (usize, usize),
    actual: (usize, usize),
) -> Result<(), ImageError> {
    if expected == actual {
        Ok(())
    } else {
        Err(ImageError::DimensionMismatch { expected, actual })
    }
}
