use serde::{Deserialize, Serialize};

use super::{check_dims, ImageBuffer, ImageError, RegionMask};

/// Surface, mean and population standard deviation of a masked area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub surface: usize,
    pub mean: f64,
    pub stddev: f64,
}

/// Two-pass statistics over the pixels of `img` selected by `mask`.
pub fn region_stats(img: &ImageBuffer, mask: &RegionMask) -> Result<RegionStats, ImageError> {
    check_dims(img.dims(), mask.dims())?;
    let selected = || {
        img.data()
            .iter()
            .zip(mask.bits())
            .filter_map(|(&v, &m)| m.then_some(v))
    };
    let surface = mask.count();
    if surface == 0 {
        return Err(ImageError::EmptyMask);
    }
    let n = surface as f64;
    let mean = selected().sum::<f64>() / n;
    // Compensated second pass keeps σ exact for constant fields.
    let (sq, comp) = selected().fold((0.0, 0.0), |(sq, comp), v| {
        let d = v - mean;
        (sq + d * d, comp + d)
    });
    let var = ((sq - comp * comp / n) / n).max(0.0);
    Ok(RegionStats {
        surface,
        mean,
        stddev: var.sqrt(),
    })
}
