use super::{ImageError, RegionMask};

/// Offsets of the Euclidean disc `dx² + dy² <= radius²`.
pub fn disc_offsets(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Binary dilation of `mask` by a Euclidean disc of `radius`.
pub fn dilate(mask: &RegionMask, radius: usize) -> RegionMask {
    let (w, h) = mask.dims();
    let disc = disc_offsets(radius);
    let mut out = mask.clone();
    // The nearest set pixel to any outside point always has an unset
    // in-frame 4-neighbour, so only those need stamping.
    let is_edge = |x: usize, y: usize| {
        (x > 0 && !mask.get(x - 1, y))
            || (x + 1 < w && !mask.get(x + 1, y))
            || (y > 0 && !mask.get(x, y - 1))
            || (y + 1 < h && !mask.get(x, y + 1))
    };
    for (x, y) in mask.points() {
        if !is_edge(x, y) {
            continue;
        }
        for &(dx, dy) in &disc {
            let tx = x as i64 + dx;
            let ty = y as i64 + dy;
            if tx >= 0 && ty >= 0 && tx < w as i64 && ty < h as i64 {
                out.set(tx as usize, ty as usize, true);
            }
        }
    }
    out
}

/// Band of pixels within `radius` of `silhouette` but outside it.
pub fn dilation_ring(silhouette: &RegionMask, radius: usize) -> Result<RegionMask, ImageError> {
    if radius == 0 {
        return Err(ImageError::InvalidRadius);
    }
    dilate(silhouette, radius).and_not(silhouette)
}
