//! Inversion of the scene metrics into per-area gains and offsets, and the
//! occultant placement search that realizes a requested occultation ratio.
//!
//! The background is solved first: a single affine transform on the whole
//! background fixes its clutter σ_F' = ν_k·RSS*/SCR*. The target is then
//! solved against the transformed local-background mean, using
//!
//! ```text
//! σ_C' = ν_k·RSS*·sqrt(1 − K*²)
//! μ_C' = μ_F1' − K*·ν_k·RSS*
//! ```
//!
//! which satisfies `(μ_C' − μ_F1')² + σ_C'² = (ν_k·RSS*)²` exactly, so no
//! iteration is needed.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{ImageError, RegionMask, RegionStats};
use crate::metrics::Calibration;

/// Allowed |achieved R_x − requested R_x|.
pub const RX_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("internal contrast K* = {0} is outside [-1, 1]")]
    InfeasibleK(f64),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("background clutter is zero, SCR* cannot be reached by scaling")]
    ZeroClutter,
    #[error("target is flat but the requested internal contrast needs σ_C' = {required}")]
    DegenerateTarget { required: f64 },
    #[error("no in-frame occultant placement reaches R_x* = {requested} (closest {best:?})")]
    Unachievable { requested: f64, best: Option<f64> },
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanPolicy {
    #[default]
    Preserve,
    SetTo(f64),
}

/// Requested scene metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConstraints {
    /// Kelvin.
    pub rss: f64,
    pub scr: f64,
    pub k: f64,
    pub rx: f64,
    pub calibration: Calibration,
    #[serde(default)]
    pub background_mean: MeanPolicy,
}

impl SceneConstraints {
    /// Checks the constraint values on their own, without any imagery.
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.k.is_nan() || self.k.abs() > 1.0 {
            return Err(SolverError::InfeasibleK(self.k));
        }
        if !(self.rss.is_finite() && self.rss > 0.0) {
            return Err(SolverError::InvalidConstraint(format!(
                "RSS* must be positive, got {}",
                self.rss
            )));
        }
        if !(self.scr.is_finite() && self.scr > 0.0) {
            return Err(SolverError::InvalidConstraint(format!(
                "SCR* must be positive, got {}",
                self.scr
            )));
        }
        if !(0.0..=1.0).contains(&self.rx) {
            return Err(SolverError::InvalidConstraint(format!(
                "R_x* must lie in [0, 1], got {}",
                self.rx
            )));
        }
        if let MeanPolicy::SetTo(m) = self.background_mean {
            if !m.is_finite() {
                return Err(SolverError::InvalidConstraint(
                    "background mean must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    /// ν_k·RSS*, the contrast budget in gray levels.
    pub fn contrast_gray(&self) -> f64 {
        self.calibration.nu_k() * self.rss
    }

    /// Background standard deviation that realizes SCR*.
    pub fn clutter_goal(&self) -> f64 {
        self.contrast_gray() / self.scr
    }
}

/// `gain·v + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    pub gain: f64,
    pub offset: f64,
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform {
        gain: 1.0,
        offset: 0.0,
    };

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        self.gain * v + self.offset
    }
}

pub fn solve_background(
    stats_f: &RegionStats,
    c: &SceneConstraints,
) -> Result<AffineTransform, SolverError> {
    if stats_f.stddev == 0.0 {
        return Err(SolverError::ZeroClutter);
    }
    let gain = c.clutter_goal() / stats_f.stddev;
    let offset = match c.background_mean {
        MeanPolicy::Preserve => stats_f.mean * (1.0 - gain),
        MeanPolicy::SetTo(m) => m - gain * stats_f.mean,
    };
    Ok(AffineTransform { gain, offset })
}

/// Solves the target transform against the already transformed local
/// background mean `mu_f1_after`.
pub fn solve_target(
    stats_c: &RegionStats,
    mu_f1_after: f64,
    c: &SceneConstraints,
) -> Result<AffineTransform, SolverError> {
    if c.k.is_nan() || c.k.abs() > 1.0 {
        return Err(SolverError::InfeasibleK(c.k));
    }
    let budget = c.contrast_gray();
    let sigma_goal = budget * (1.0 - c.k * c.k).sqrt();
    let mean_goal = mu_f1_after - c.k * budget;
    let gain = if sigma_goal == 0.0 {
        0.0
    } else if stats_c.stddev == 0.0 {
        return Err(SolverError::DegenerateTarget {
            required: sigma_goal,
        });
    } else {
        sigma_goal / stats_c.stddev
    };
    Ok(AffineTransform {
        gain,
        offset: mean_goal - gain * stats_c.mean,
    })
}

/// Occultant offset chosen by [`place_occultant`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccultantOffset {
    pub ox: i64,
    pub oy: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccultantPlacement {
    pub offset: OccultantOffset,
    /// Target pixels hidden by the occultant.
    pub overlap: usize,
    pub achieved_rx: f64,
}

/// Overlap between a placed target and a translatable occultant.
struct OverlapField<'a> {
    target: &'a RegionMask,
    target_box: (i64, i64, i64, i64),
    points: Vec<(i64, i64)>,
    occ_box: (i64, i64, i64, i64),
    /// Admissible offsets, inclusive.
    ox_range: (i64, i64),
    oy_range: (i64, i64),
    target_count: usize,
}

impl<'a> OverlapField<'a> {
    fn new(target: &'a RegionMask, occultant: &RegionMask) -> Option<Self> {
        let (w, h) = target.dims();
        let tb = target.bounding_box()?;
        let ob = occultant.bounding_box()?;
        let (x0, y0, x1, y1) = (ob.0 as i64, ob.1 as i64, ob.2 as i64, ob.3 as i64);
        let ox_range = (-x0, w as i64 - 1 - x1);
        let oy_range = (-y0, h as i64 - 1 - y1);
        if ox_range.0 > ox_range.1 || oy_range.0 > oy_range.1 {
            return None;
        }
        Some(Self {
            target,
            target_box: (tb.0 as i64, tb.1 as i64, tb.2 as i64, tb.3 as i64),
            points: occultant
                .points()
                .map(|(x, y)| (x as i64, y as i64))
                .collect(),
            occ_box: (x0, y0, x1, y1),
            ox_range,
            oy_range,
            target_count: target.count(),
        })
    }

    fn overlap(&self, ox: i64, oy: i64) -> usize {
        let (tx0, ty0, tx1, ty1) = self.target_box;
        let (x0, y0, x1, y1) = self.occ_box;
        if x1 + ox < tx0 || x0 + ox > tx1 || y1 + oy < ty0 || y0 + oy > ty1 {
            return 0;
        }
        self.points
            .iter()
            .filter(|&&(x, y)| self.target.get((x + ox) as usize, (y + oy) as usize))
            .count()
    }

    fn rx(&self, ox: i64, oy: i64) -> f64 {
        self.overlap(ox, oy) as f64 / self.target_count as f64
    }
}

/// Largest change in overlap count when the occultant moves by at most
/// `step` pixels along each axis, from the run structure of its rows and
/// columns.
fn shift_bound(occultant: &RegionMask, step: usize) -> usize {
    let (w, h) = occultant.dims();
    let line_bound = |runs: usize, count: usize| (2 * runs * step).min(2 * count);
    let mut total = 0;
    for y in 0..h {
        let (mut runs, mut count, mut prev) = (0, 0, false);
        for x in 0..w {
            let b = occultant.get(x, y);
            count += usize::from(b);
            runs += usize::from(b && !prev);
            prev = b;
        }
        total += line_bound(runs, count);
    }
    for x in 0..w {
        let (mut runs, mut count, mut prev) = (0, 0, false);
        for y in 0..h {
            let b = occultant.get(x, y);
            count += usize::from(b);
            runs += usize::from(b && !prev);
            prev = b;
        }
        total += line_bound(runs, count);
    }
    total
}

/// Finds an in-frame occultant offset whose occultation ratio is within
/// `tolerance` of `rx_target`.
///
/// `target` is the frame-sized placed silhouette; `occultant` is the
/// occultant's own mask, translated by the returned offset. Candidates are
/// found by a coarse grid scan refined exhaustively wherever the coarse value
/// could hide a solution; one is chosen uniformly with `rng` from the
/// lexicographically sorted candidate list, so the result is independent of
/// scan order.
pub fn place_occultant<R: Rng + ?Sized>(
    target: &RegionMask,
    occultant: &RegionMask,
    rx_target: f64,
    tolerance: f64,
    rng: &mut R,
) -> Result<OccultantPlacement, SolverError> {
    let unachievable = |best| SolverError::Unachievable {
        requested: rx_target,
        best,
    };
    let field = OverlapField::new(target, occultant).ok_or(unachievable(None))?;
    let occ_width = (field.occ_box.2 - field.occ_box.0 + 1) as usize;
    let stride = (occ_width / 32).max(1);
    let slack = shift_bound(occultant, stride) as f64 / field.target_count as f64;

    let axis = |(lo, hi): (i64, i64)| {
        let mut v: Vec<i64> = (lo..=hi).step_by(stride).collect();
        if *v.last().expect("non-empty range") != hi {
            v.push(hi);
        }
        v
    };
    let (xs, ys) = (axis(field.ox_range), axis(field.oy_range));

    let mut best: Option<(f64, f64)> = None;
    let mut candidates = BTreeSet::new();
    let mut visited = BTreeSet::new();
    let mut consider = |ox: i64, oy: i64, candidates: &mut BTreeSet<(i64, i64)>| {
        if !visited.insert((ox, oy)) {
            return;
        }
        let rx = field.rx(ox, oy);
        let err = (rx - rx_target).abs();
        if best.is_none_or(|(e, _)| err < e) {
            best = Some((err, rx));
        }
        if err <= tolerance {
            candidates.insert((ox, oy));
        }
    };
    for &ox in &xs {
        for &oy in &ys {
            let err = (field.rx(ox, oy) - rx_target).abs();
            if err <= tolerance + slack {
                let r = stride as i64;
                for nx in (ox - r).max(field.ox_range.0)..=(ox + r).min(field.ox_range.1) {
                    for ny in (oy - r).max(field.oy_range.0)..=(oy + r).min(field.oy_range.1) {
                        consider(nx, ny, &mut candidates);
                    }
                }
            } else {
                consider(ox, oy, &mut candidates);
            }
        }
    }
    if candidates.is_empty() {
        return Err(unachievable(best.map(|(_, rx)| rx)));
    }
    let pick = rng.random_range(0..candidates.len());
    let (ox, oy) = *candidates.iter().nth(pick).expect("index in range");
    let overlap = field.overlap(ox, oy);
    Ok(OccultantPlacement {
        offset: OccultantOffset { ox, oy },
        overlap,
        achieved_rx: overlap as f64 / field.target_count as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum FeasibilityIssue {
    InfeasibleK {
        k: f64,
    },
    InvalidConstraint {
        message: String,
    },
    ZeroClutter,
    EmptyTarget,
    EmptyLocalBackground,
    DegenerateTarget {
        required_stddev: f64,
    },
    UnreachableRx {
        requested: f64,
        closest: Option<f64>,
    },
    ExportRangeExceeded {
        predicted: (f64, f64),
        export: (f64, f64),
    },
}

impl FeasibilityIssue {
    pub fn severity(&self) -> Severity {
        match self {
            FeasibilityIssue::ExportRangeExceeded { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

/// Everything the feasibility check may look at. Missing entries are treated
/// as not yet known and skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityInputs {
    pub stats_f: Option<RegionStats>,
    pub stats_f1: Option<RegionStats>,
    pub stats_c: Option<RegionStats>,
    /// Value range of all pixels the background transform will touch.
    pub background_range: Option<(f64, f64)>,
    /// Value range of the visible target pixels.
    pub target_range: Option<(f64, f64)>,
    pub rx: Option<Result<f64, Option<f64>>>,
    pub export_range: Option<(f64, f64)>,
    /// Set when the target or local background areas turned out empty.
    pub empty_target: bool,
    pub empty_local_background: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub issues: Vec<FeasibilityIssue>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.issues.iter().all(|i| i.severity() != Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &FeasibilityIssue> {
        self.issues
            .iter()
            .filter(|i| i.severity() == Severity::Error)
    }
}

/// Lists every violated precondition without mutating anything.
pub fn check_feasibility(c: &SceneConstraints, inputs: &FeasibilityInputs) -> FeasibilityReport {
    let mut issues = Vec::new();
    match c.validate() {
        Ok(()) => {}
        Err(SolverError::InfeasibleK(k)) => issues.push(FeasibilityIssue::InfeasibleK { k }),
        Err(e) => issues.push(FeasibilityIssue::InvalidConstraint {
            message: e.to_string(),
        }),
    }
    let constraints_ok = issues.is_empty();
    if inputs.empty_target {
        issues.push(FeasibilityIssue::EmptyTarget);
    }
    if inputs.empty_local_background {
        issues.push(FeasibilityIssue::EmptyLocalBackground);
    }
    if let Some(Err(closest)) = inputs.rx {
        issues.push(FeasibilityIssue::UnreachableRx {
            requested: c.rx,
            closest,
        });
    }
    if !constraints_ok {
        return FeasibilityReport { issues };
    }

    let background = inputs.stats_f.map(|s| solve_background(&s, c));
    if let Some(Err(_)) = background {
        issues.push(FeasibilityIssue::ZeroClutter);
    }
    let target = match (&background, inputs.stats_f1, inputs.stats_c) {
        (Some(Ok(bg)), Some(f1), Some(sc)) => match solve_target(&sc, bg.apply(f1.mean), c) {
            Ok(t) => Some(t),
            Err(SolverError::DegenerateTarget { required }) => {
                issues.push(FeasibilityIssue::DegenerateTarget {
                    required_stddev: required,
                });
                None
            }
            Err(_) => None,
        },
        _ => None,
    };

    if let Some(export) = inputs.export_range {
        let mut predicted: Option<(f64, f64)> = None;
        let mut extend = |t: &AffineTransform, (lo, hi): (f64, f64)| {
            let (a, b) = (t.apply(lo), t.apply(hi));
            let (a, b) = (a.min(b), a.max(b));
            predicted = Some(predicted.map_or((a, b), |(p, q)| (p.min(a), q.max(b))));
        };
        if let (Some(Ok(bg)), Some(r)) = (&background, inputs.background_range) {
            extend(bg, r);
        }
        if let (Some(t), Some(r)) = (&target, inputs.target_range) {
            extend(t, r);
        }
        if let Some((lo, hi)) = predicted {
            if lo < export.0 || hi > export.1 {
                issues.push(FeasibilityIssue::ExportRangeExceeded {
                    predicted: (lo, hi),
                    export,
                });
            }
        }
    }
    FeasibilityReport { issues }
}
