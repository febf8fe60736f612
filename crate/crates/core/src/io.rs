//! File formats.
//!
//! * Gray images: 8/16-bit PNG or PGM, mapped to gray levels with
//!   `gray = offset + scale·code`.
//! * Raw float (`.irf`): `b"IRF1"`, `u32` width, `u32` height, `u32` reserved
//!   (zero), then width·height little-endian `f64` in row-major order.
//! * Masks: 8-bit PNG/PGM, 0 = outside, any nonzero = inside (written as 255).
//! * Label maps: 8-bit PNG/PGM holding region codes.
//! * View bundle directory: `ta.png`, `tf.png`, `regions.png`, `regions.json`.
//! * Occultant directory: `image.png` and `mask.png`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat, Luma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{ImageBuffer, ImageError, LabelMap, RegionMask};
use crate::thermal::{Region, RegionTable, ThermalError, ViewBundle};

pub const IRF_MAGIC: &[u8; 4] = b"IRF1";
const IRF_HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: ImageError,
    },
    #[error("{path}: {source}")]
    Thermal {
        path: PathBuf,
        #[source]
        source: ThermalError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// `gray = offset + scale·code` for integer images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrayMapping {
    pub scale: f64,
    pub offset: f64,
}

impl Default for GrayMapping {
    fn default() -> Self {
        Self {
            scale: 1.0,
            offset: 0.0,
        }
    }
}

fn is_raw_float(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("irf"))
}

fn decode(path: &Path) -> Result<DynamicImage, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    image::load_from_memory(&bytes).map_err(|source| IoError::Decode {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a gray image; integer formats go through `mapping`.
pub fn load_image(path: &Path, mapping: GrayMapping) -> Result<ImageBuffer, IoError> {
    if is_raw_float(path) {
        let bytes = fs::read(path).map_err(io_err(path))?;
        return decode_irf(&bytes).map_err(|m| format_err(path, m));
    }
    let (w, h, codes): (usize, usize, Vec<f64>) = match decode(path)? {
        DynamicImage::ImageLuma8(img) => (
            img.width() as usize,
            img.height() as usize,
            img.into_raw().into_iter().map(f64::from).collect(),
        ),
        DynamicImage::ImageLuma16(img) => (
            img.width() as usize,
            img.height() as usize,
            img.into_raw().into_iter().map(f64::from).collect(),
        ),
        other => {
            return Err(format_err(
                path,
                format!("expected a grayscale image, found {:?}", other.color()),
            ))
        }
    };
    let data = codes
        .into_iter()
        .map(|c| mapping.offset + mapping.scale * c)
        .collect();
    ImageBuffer::from_vec(w, h, data).map_err(|source| IoError::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn load_u8(path: &Path) -> Result<(usize, usize, Vec<u8>), IoError> {
    match decode(path)? {
        DynamicImage::ImageLuma8(img) => {
            Ok((img.width() as usize, img.height() as usize, img.into_raw()))
        }
        other => Err(format_err(
            path,
            format!(
                "expected an 8-bit grayscale image, found {:?}",
                other.color()
            ),
        )),
    }
}

pub fn load_mask(path: &Path) -> Result<RegionMask, IoError> {
    let (w, h, raw) = load_u8(path)?;
    RegionMask::from_bits(w, h, raw.into_iter().map(|v| v != 0).collect()).map_err(|source| {
        IoError::Image {
            path: path.to_path_buf(),
            source,
        }
    })
}

pub fn load_label_map(path: &Path) -> Result<LabelMap, IoError> {
    let (w, h, raw) = load_u8(path)?;
    LabelMap::from_vec(w, h, raw).map_err(|source| IoError::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn format_for(path: &Path) -> Result<ImageFormat, IoError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
    {
        Some(e) if e == "png" => Ok(ImageFormat::Png),
        Some(e) if e == "pgm" => Ok(ImageFormat::Pnm),
        _ => Err(format_err(path, "unsupported extension, use .png or .pgm")),
    }
}

/// Encodes 16-bit gray codes.
pub fn encode_gray16(
    width: usize,
    height: usize,
    codes: &[u16],
    format: ImageFormat,
) -> Result<Vec<u8>, image::ImageError> {
    let img =
        image::ImageBuffer::<Luma<u16>, _>::from_raw(width as u32, height as u32, codes.to_vec())
            .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    DynamicImage::ImageLuma16(img).write_to(&mut out, format)?;
    Ok(out.into_inner())
}

pub fn encode_gray8(
    width: usize,
    height: usize,
    codes: &[u8],
    format: ImageFormat,
) -> Result<Vec<u8>, image::ImageError> {
    let img =
        image::ImageBuffer::<Luma<u8>, _>::from_raw(width as u32, height as u32, codes.to_vec())
            .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    DynamicImage::ImageLuma8(img).write_to(&mut out, format)?;
    Ok(out.into_inner())
}

pub fn encode_mask(mask: &RegionMask, format: ImageFormat) -> Result<Vec<u8>, image::ImageError> {
    let raw: Vec<u8> = mask
        .bits()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    encode_gray8(mask.width(), mask.height(), &raw, format)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

fn encode_err(path: &Path) -> impl FnOnce(image::ImageError) -> IoError + '_ {
    move |source| IoError::Decode {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_gray16(path: &Path, width: usize, height: usize, codes: &[u16]) -> Result<(), IoError> {
    let bytes = encode_gray16(width, height, codes, format_for(path)?).map_err(encode_err(path))?;
    write_bytes(path, &bytes)
}

pub fn save_gray8(path: &Path, width: usize, height: usize, codes: &[u8]) -> Result<(), IoError> {
    let bytes = encode_gray8(width, height, codes, format_for(path)?).map_err(encode_err(path))?;
    write_bytes(path, &bytes)
}

pub fn save_mask(path: &Path, mask: &RegionMask) -> Result<(), IoError> {
    let bytes = encode_mask(mask, format_for(path)?).map_err(encode_err(path))?;
    write_bytes(path, &bytes)
}

/// Writes an image whose values are already integral 16-bit codes, such as
/// a signature loaded with the identity mapping. Values are rounded and
/// clamped to `[0, 65535]`.
pub fn save_image_as_gray16(path: &Path, img: &ImageBuffer) -> Result<(), IoError> {
    let codes: Vec<u16> = img
        .data()
        .iter()
        .map(|&v| v.round_ties_even().clamp(0.0, 65535.0) as u16)
        .collect();
    save_gray16(path, img.width(), img.height(), &codes)
}

pub fn encode_irf(img: &ImageBuffer) -> Vec<u8> {
    let mut out = Vec::with_capacity(IRF_HEADER_LEN + 8 * img.data().len());
    out.extend_from_slice(IRF_MAGIC);
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in img.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_irf(bytes: &[u8]) -> Result<ImageBuffer, String> {
    if bytes.len() < IRF_HEADER_LEN || &bytes[..4] != IRF_MAGIC {
        return Err("missing IRF1 header".into());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (w, h) = (word(4), word(8));
    let body = &bytes[IRF_HEADER_LEN..];
    if body.len() != w * h * 8 {
        return Err(format!(
            "expected {} bytes of pixel data, found {}",
            w * h * 8,
            body.len()
        ));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ImageBuffer::from_vec(w, h, data).map_err(|e| e.to_string())
}

pub fn save_irf(path: &Path, img: &ImageBuffer) -> Result<(), IoError> {
    write_bytes(path, &encode_irf(img))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionTableFile {
    pub regions: Vec<RegionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionEntry {
    pub code: u8,
    pub name: Region,
}

impl RegionTableFile {
    pub fn from_table(table: &RegionTable) -> Self {
        Self {
            regions: table
                .iter()
                .map(|(&code, &name)| RegionEntry { code, name })
                .collect(),
        }
    }

    pub fn to_table(&self) -> Result<RegionTable, String> {
        let mut table = BTreeMap::new();
        for e in &self.regions {
            if e.code == 0 {
                return Err("code 0 is reserved for non-target pixels".into());
            }
            if table.insert(e.code, e.name).is_some() {
                return Err(format!("code {} listed twice", e.code));
            }
        }
        Ok(table)
    }
}

pub const BUNDLE_TA: &str = "ta.png";
pub const BUNDLE_TF: &str = "tf.png";
pub const BUNDLE_REGIONS: &str = "regions.png";
pub const BUNDLE_TABLE: &str = "regions.json";

/// Loads a view bundle directory; the view id is the last two path
/// components (`<target>/<aspect>`).
pub fn load_bundle(dir: &Path, mapping: GrayMapping) -> Result<ViewBundle, IoError> {
    let ta = load_image(&dir.join(BUNDLE_TA), mapping)?;
    let tf = load_image(&dir.join(BUNDLE_TF), mapping)?;
    let regions = load_label_map(&dir.join(BUNDLE_REGIONS))?;
    let table_path = dir.join(BUNDLE_TABLE);
    let text = fs::read_to_string(&table_path).map_err(io_err(&table_path))?;
    let table = serde_json::from_str::<RegionTableFile>(&text)
        .map_err(|e| e.to_string())
        .and_then(|f| f.to_table())
        .map_err(|m| format_err(&table_path, m))?;
    let view_id = dir
        .iter()
        .rev()
        .take(2)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .map(|c| c.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/");
    ViewBundle::new(view_id, ta, tf, regions, table).map_err(|source| IoError::Thermal {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn save_bundle(dir: &Path, bundle: &ViewBundle) -> Result<(), IoError> {
    save_image_as_gray16(&dir.join(BUNDLE_TA), &bundle.ta)?;
    save_image_as_gray16(&dir.join(BUNDLE_TF), &bundle.tf)?;
    let (w, h) = bundle.dims();
    save_gray8(&dir.join(BUNDLE_REGIONS), w, h, bundle.regions.labels())?;
    let json = serde_json::to_string_pretty(&RegionTableFile::from_table(&bundle.table))
        .expect("region table serializes");
    write_bytes(&dir.join(BUNDLE_TABLE), json.as_bytes())
}

/// Opaque foreground object (tree, rock) composited over the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Occultant {
    pub image: ImageBuffer,
    pub mask: RegionMask,
}

pub const OCCULTANT_IMAGE: &str = "image.png";
pub const OCCULTANT_MASK: &str = "mask.png";

pub fn load_occultant(dir: &Path, mapping: GrayMapping) -> Result<Occultant, IoError> {
    let image = load_image(&dir.join(OCCULTANT_IMAGE), mapping)?;
    let mask_path = dir.join(OCCULTANT_MASK);
    let mask = load_mask(&mask_path)?;
    if mask.dims() != image.dims() {
        return Err(IoError::Image {
            path: mask_path,
            source: ImageError::DimensionMismatch {
                expected: image.dims(),
                actual: mask.dims(),
            },
        });
    }
    if mask.is_empty() {
        return Err(format_err(&mask_path, "occultant mask is empty"));
    }
    Ok(Occultant { image, mask })
}

pub fn save_occultant(dir: &Path, occ: &Occultant) -> Result<(), IoError> {
    save_image_as_gray16(&dir.join(OCCULTANT_IMAGE), &occ.image)?;
    save_mask(&dir.join(OCCULTANT_MASK), &occ.mask)
}
