use std::collections::BTreeSet;

use super::{check_dims, ImageError};

/// One boolean per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegionMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskOp {
    And,
    Or,
    AndNot,
}

impl RegionMask {
    /// Empty mask.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImageError> {
        if bits.len() != width * height {
            return Err(ImageError::BadLength {
                len: bits.len(),
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Coordinates of set pixels in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of set pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        self.points().fold(None, |acc, (x, y)| match acc {
            None => Some((x, y, x, y)),
            Some((x0, y0, x1, y1)) => Some((x0.min(x), y0.min(y), x1.max(x), y1.max(y))),
        })
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> Result<bool, ImageError> {
        check_dims(self.dims(), other.dims())?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    pub fn intersects(&self, other: &RegionMask) -> Result<bool, ImageError> {
        check_dims(self.dims(), other.dims())?;
        Ok(self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b))
    }

    pub fn and(&self, other: &RegionMask) -> Result<RegionMask, ImageError> {
        mask_ops(self, other, MaskOp::And)
    }

    pub fn or(&self, other: &RegionMask) -> Result<RegionMask, ImageError> {
        mask_ops(self, other, MaskOp::Or)
    }

    pub fn and_not(&self, other: &RegionMask) -> Result<RegionMask, ImageError> {
        mask_ops(self, other, MaskOp::AndNot)
    }

    /// Places this mask into a `width`x`height` frame at `(dx, dy)`.
    ///
    /// Fails if any set pixel would land outside the frame.
    pub fn translated(
        &self,
        width: usize,
        height: usize,
        dx: i64,
        dy: i64,
    ) -> Result<RegionMask, ImageError> {
        let mut out = RegionMask::new(width, height);
        for (x, y) in self.points() {
            let tx = x as i64 + dx;
            let ty = y as i64 + dy;
            if tx < 0 || ty < 0 || tx >= width as i64 || ty >= height as i64 {
                return Err(ImageError::OutOfFrame {
                    dx,
                    dy,
                    width,
                    height,
                });
            }
            out.set(tx as usize, ty as usize, true);
        }
        Ok(out)
    }
}

/// Pixel-wise boolean combination of two equally sized masks.
pub fn mask_ops(a: &RegionMask, b: &RegionMask, op: MaskOp) -> Result<RegionMask, ImageError> {
    check_dims(a.dims(), b.dims())?;
    let f: fn(bool, bool) -> bool = match op {
        MaskOp::And => |x, y| x && y,
        MaskOp::Or => |x, y| x || y,
        MaskOp::AndNot => |x, y| x && !y,
    };
    Ok(RegionMask {
        width: a.width,
        height: a.height,
        bits: a.bits.iter().zip(&b.bits).map(|(&x, &y)| f(x, y)).collect(),
    })
}

/// Per-pixel region codes; 0 is non-target, 1..=255 are thermal regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelMap {
    pub fn from_vec(width: usize, height: usize, labels: Vec<u8>) -> Result<Self, ImageError> {
        if labels.len() != width * height {
            return Err(ImageError::BadLength {
                len: labels.len(),
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            labels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn silhouette(&self) -> RegionMask {
        RegionMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l > 0).collect(),
        }
    }

    pub fn region(&self, code: u8) -> RegionMask {
        RegionMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l == code).collect(),
        }
    }

    /// Distinct nonzero codes present in the map.
    pub fn codes(&self) -> BTreeSet<u8> {
        self.labels.iter().copied().filter(|&l| l > 0).collect()
    }
}
