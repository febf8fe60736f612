use super::{check_dims, ImageError, RegionMask};

/// Row-major single-channel raster of gray levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(value.is_finite(), "fill value must be finite");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Wraps existing pixel data, rejecting wrong lengths and non-finite values.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::BadLength {
                len: data.len(),
                width,
                height,
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(ImageError::NonFinite { index });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, data).expect("generator produced a non-finite value")
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!(value.is_finite());
        self.data[y * self.width + x] = value;
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.data.iter().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Value range of the pixels under `mask`, `None` when the mask is empty.
    pub fn masked_min_max(&self, mask: &RegionMask) -> Result<Option<(f64, f64)>, ImageError> {
        check_dims(self.dims(), mask.dims())?;
        Ok(self.data.iter().zip(mask.bits()).filter(|(_, &m)| m).fold(
            None,
            |acc, (&v, _)| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            },
        ))
    }

    /// Applies `gain * v + offset` to every pixel under `mask`.
    pub fn apply_affine_masked(
        &mut self,
        mask: &RegionMask,
        gain: f64,
        offset: f64,
    ) -> Result<(), ImageError> {
        check_dims(self.dims(), mask.dims())?;
        for (v, &m) in self.data.iter_mut().zip(mask.bits()) {
            if m {
                *v = gain * *v + offset;
            }
        }
        if let Some(index) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(ImageError::NonFinite { index });
        }
        Ok(())
    }

    /// Copies `src` pixels wherever `mask` is set; all three must share dimensions.
    pub fn copy_masked(&mut self, src: &ImageBuffer, mask: &RegionMask) -> Result<(), ImageError> {
        check_dims(self.dims(), src.dims())?;
        check_dims(self.dims(), mask.dims())?;
        for ((d, &s), &m) in self.data.iter_mut().zip(&src.data).zip(mask.bits()) {
            if m {
                *d = s;
            }
        }
        Ok(())
    }

    /// Places `self` into a `width`x`height` frame at `(dx, dy)`, zero elsewhere.
    pub fn translated(&self, width: usize, height: usize, dx: i64, dy: i64) -> ImageBuffer {
        let mut out = ImageBuffer::new(width, height);
        for y in 0..self.height {
            let ty = y as i64 + dy;
            if ty < 0 || ty >= height as i64 {
                continue;
            }
            for x in 0..self.width {
                let tx = x as i64 + dx;
                if tx < 0 || tx >= width as i64 {
                    continue;
                }
                out.set(tx as usize, ty as usize, self.get(x, y));
            }
        }
        out
    }
}

/// Copies the masked pixels of `src` into `dst`, translated by `offset`.
///
/// `src_mask` has the dimensions of `src`. Every translated masked pixel must
/// land inside `dst`; partial off-frame placement is an error.
pub fn blit(
    dst: &ImageBuffer,
    src: &ImageBuffer,
    src_mask: &RegionMask,
    offset: (i64, i64),
) -> Result<ImageBuffer, ImageError> {
    check_dims(src.dims(), src_mask.dims())?;
    let (dx, dy) = offset;
    let out_of_frame = ImageError::OutOfFrame {
        dx,
        dy,
        width: dst.width,
        height: dst.height,
    };
    let mut out = dst.clone();
    for y in 0..src.height {
        for x in 0..src.width {
            if !src_mask.get(x, y) {
                continue;
            }
            let tx = x as i64 + dx;
            let ty = y as i64 + dy;
            if tx < 0 || ty < 0 || tx >= dst.width as i64 || ty >= dst.height as i64 {
                return Err(out_of_frame);
            }
            out.set(tx as usize, ty as usize, src.get(x, y));
        }
    }
    Ok(out)
}
