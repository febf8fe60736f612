//! Image-quality metrics of a laid-out scene: local contrast (RSS),
//! detectability (Q_D), signal-to-clutter ratio (SCR), occultation ratio
//! (R_x) and internal target contrast (K).
//!
//! Target statistics are taken on the visible target area, the local
//! background on the band grown around it, and clutter on the whole
//! background with target and occultant excluded.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{region_stats, ImageBuffer, ImageError, RegionMask, RegionStats};
use crate::layout::SceneLayout;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("calibration must be strictly positive, got {0}")]
    InvalidCalibration(f64),
    #[error("background clutter is zero, SCR is undefined")]
    ZeroClutter,
    #[error("local contrast is zero, K is undefined")]
    ZeroContrast,
    #[error("target silhouette is empty")]
    EmptyTarget,
    #[error("visible area is not contained in the target silhouette")]
    VisibilityNotSubset,
    #[error("inconsistent scene layout: {0}")]
    LayoutInconsistent(String),
    #[error("{area}: {source}")]
    Region {
        area: &'static str,
        #[source]
        source: ImageError,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Gray levels per Kelvin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Calibration(f64);

impl Calibration {
    pub fn new(nu_k: f64) -> Result<Self, MetricsError> {
        if nu_k.is_finite() && nu_k > 0.0 {
            Ok(Self(nu_k))
        } else {
            Err(MetricsError::InvalidCalibration(nu_k))
        }
    }

    pub fn nu_k(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Calibration {
    type Error = MetricsError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Calibration> for f64 {
    fn from(c: Calibration) -> f64 {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    /// Kelvin.
    pub rss: f64,
    /// Kelvin·pixels.
    pub qd: f64,
    pub scr: f64,
    pub rx: f64,
    pub k: f64,
    /// μ_F1 − μ_C in gray levels.
    pub delta_mu: f64,
    pub target_surface: usize,
    pub target_stddev: f64,
    pub clutter_stddev: f64,
}

pub fn compute_rss(stats_c: &RegionStats, stats_f1: &RegionStats, cal: Calibration) -> f64 {
    (stats_c.mean - stats_f1.mean).hypot(stats_c.stddev) / cal.nu_k()
}

pub fn compute_qd(rss: f64, target_surface: usize) -> f64 {
    rss * target_surface as f64
}

pub fn compute_scr(rss: f64, stats_f: &RegionStats, cal: Calibration) -> Result<f64, MetricsError> {
    if stats_f.stddev == 0.0 {
        return Err(MetricsError::ZeroClutter);
    }
    Ok(cal.nu_k() * rss / stats_f.stddev)
}

/// Occluded fraction of the full target silhouette.
pub fn compute_rx(full_silhouette: &RegionMask, visible: &RegionMask) -> Result<f64, MetricsError> {
    let full = full_silhouette.count();
    if full == 0 {
        return Err(MetricsError::EmptyTarget);
    }
    if !visible.is_subset_of(full_silhouette)? {
        return Err(MetricsError::VisibilityNotSubset);
    }
    Ok(1.0 - visible.count() as f64 / full as f64)
}

/// Positive when the local background is warmer than the target mean.
pub fn compute_k(
    stats_c: &RegionStats,
    stats_f1: &RegionStats,
    rss: f64,
    cal: Calibration,
) -> Result<f64, MetricsError> {
    if rss == 0.0 {
        return Err(MetricsError::ZeroContrast);
    }
    Ok((stats_f1.mean - stats_c.mean) / (cal.nu_k() * rss))
}

pub fn measure_scene(
    img: &ImageBuffer,
    layout: &SceneLayout,
    cal: Calibration,
) -> Result<MetricSet, MetricsError> {
    layout.check().map_err(MetricsError::LayoutInconsistent)?;
    let rx = compute_rx(&layout.c_full, &layout.c_visible)?;
    let area = |area: &'static str, mask: &RegionMask| {
        region_stats(img, mask).map_err(|source| match source {
            ImageError::EmptyMask if area == "target" => MetricsError::EmptyTarget,
            source => MetricsError::Region { area, source },
        })
    };
    let stats_c = area("target", &layout.c_visible)?;
    let stats_f1 = area("local background", &layout.f1)?;
    let stats_f = area("background", &layout.background())?;
    let rss = compute_rss(&stats_c, &stats_f1, cal);
    Ok(MetricSet {
        rss,
        qd: compute_qd(rss, stats_c.surface),
        scr: compute_scr(rss, &stats_f, cal)?,
        rx,
        k: compute_k(&stats_c, &stats_f1, rss, cal)?,
        delta_mu: stats_f1.mean - stats_c.mean,
        target_surface: stats_c.surface,
        target_stddev: stats_c.stddev,
        clutter_stddev: stats_f.stddev,
    })
}
