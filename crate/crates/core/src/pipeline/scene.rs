use std::fmt;
use std::path::Path;
use std::sync::Arc;

use image::ImageFormat;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::assets::{AssetError, AssetSource};
use super::recipe::{PlacementPolicy, SceneRecipe};
use crate::imagecore::{region_stats, ImageBuffer, ImageError, RegionMask, RegionStats};
use crate::io::{encode_gray16, encode_gray8, encode_irf, encode_mask, IoError, Occultant};
use crate::layout::SceneLayout;
use crate::metrics::{measure_scene, MetricSet, MetricsError};
use crate::seed::{derive_seed, rng_from_seed};
use crate::sensor::{apply_mtf, apply_noise, quantize, QuantizationMapping, QuantizedImage};
use crate::solver::{
    check_feasibility, place_occultant, solve_background, solve_target, AffineTransform,
    FeasibilityInputs, FeasibilityReport, OccultantOffset, SolverError, RX_TOLERANCE,
};
use crate::thermal::{draw_state, mix, ThermalError, ThermalState, ViewBundle};

/// Pipeline stage, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Recipe,
    Assets,
    Thermal,
    TargetPlacement,
    OccultantPlacement,
    Layout,
    Feasibility,
    Gains,
    Sensor,
    Export,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Step::Recipe => "recipe",
            Step::Assets => "assets",
            Step::Thermal => "thermal mixing",
            Step::TargetPlacement => "target placement (B)",
            Step::OccultantPlacement => "occultant placement (A)",
            Step::Layout => "layout",
            Step::Feasibility => "feasibility",
            Step::Gains => "gains and offsets (C)",
            Step::Sensor => "sensor (D)",
            Step::Export => "export",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum SceneErrorKind {
    #[error("{0}")]
    InvalidRecipe(String),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error("target silhouette {silhouette:?} does not fit in frame {frame:?}")]
    TargetTooLarge {
        silhouette: (usize, usize),
        frame: (usize, usize),
    },
    #[error("target offset ({dx}, {dy}) leaves the frame")]
    TargetOutOfFrame { dx: i64, dy: i64 },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("infeasible: {}", summarize(.0))]
    Infeasible(FeasibilityReport),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("encoding: {0}")]
    Encode(String),
}

fn summarize(report: &FeasibilityReport) -> String {
    report
        .errors()
        .map(|i| serde_json::to_string(i).expect("issue serializes"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Error)]
#[error("{step}: {kind}")]
pub struct SceneError {
    pub step: Step,
    #[source]
    pub kind: SceneErrorKind,
}

trait AtStep<T> {
    fn at(self, step: Step) -> Result<T, SceneError>;
}

impl<T, E: Into<SceneErrorKind>> AtStep<T> for Result<T, E> {
    fn at(self, step: Step) -> Result<T, SceneError> {
        self.map_err(|e| SceneError {
            step,
            kind: e.into(),
        })
    }
}

/// Per-stage seeds, each derived from the scene seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneSeeds {
    pub scene: u64,
    pub thermal: u64,
    pub target_placement: u64,
    pub occultant_placement: u64,
    pub noise: u64,
}

impl SceneSeeds {
    pub fn from_scene_seed(scene: u64) -> Self {
        Self {
            scene,
            thermal: derive_seed(scene, 0),
            target_placement: derive_seed(scene, 1),
            occultant_placement: derive_seed(scene, 2),
            noise: derive_seed(scene, 3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Requested {
    pub rss: f64,
    pub scr: f64,
    pub k: f64,
    pub rx: f64,
}

/// Paths relative to the dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFiles {
    pub image: String,
    pub c_visible: String,
    pub c_full: String,
    pub occultant: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub intermediate: Option<String>,
}

/// Ground truth for one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene_id: String,
    pub recipe: SceneRecipe,
    pub seeds: SceneSeeds,
    pub view_id: String,
    pub lambda: ThermalState,
    pub target_offset: (i64, i64),
    pub occultant_offset: Option<OccultantOffset>,
    pub background_transform: AffineTransform,
    pub target_transform: AffineTransform,
    pub requested: Requested,
    pub achieved_pre_sensor: MetricSet,
    pub achieved_post_sensor: Option<MetricSet>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub post_sensor_error: Option<String>,
    pub feasibility: FeasibilityReport,
    pub quantization: QuantizationMapping,
    pub saturated_low: usize,
    pub saturated_high: usize,
    pub files: Option<SceneFiles>,
}

#[derive(Debug, Clone)]
pub struct SceneOutput {
    pub record: SceneRecord,
    pub layout: SceneLayout,
    /// Step-C output: constraints hold exactly here.
    pub intermediate: ImageBuffer,
    /// After blur and noise, before quantization.
    pub sensed: ImageBuffer,
    pub image: QuantizedImage,
}

/// Draws the target offset. Valid offsets keep every silhouette pixel in frame.
pub fn target_placement<R: Rng + ?Sized>(
    frame: (usize, usize),
    silhouette: &RegionMask,
    policy: PlacementPolicy,
    rng: &mut R,
) -> Result<(i64, i64), SceneErrorKind> {
    let (x0, y0, x1, y1) = silhouette
        .bounding_box()
        .ok_or(SceneErrorKind::InvalidRecipe(
            "target silhouette is empty".into(),
        ))?;
    let (x0, y0, x1, y1) = (x0 as i64, y0 as i64, x1 as i64, y1 as i64);
    let dx_range = (-x0, frame.0 as i64 - 1 - x1);
    let dy_range = (-y0, frame.1 as i64 - 1 - y1);
    if dx_range.0 > dx_range.1 || dy_range.0 > dy_range.1 {
        return Err(SceneErrorKind::TargetTooLarge {
            silhouette: ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize),
            frame,
        });
    }
    match policy {
        PlacementPolicy::Fixed { dx, dy } => {
            let inside =
                (dx_range.0..=dx_range.1).contains(&dx) && (dy_range.0..=dy_range.1).contains(&dy);
            if inside {
                Ok((dx, dy))
            } else {
                Err(SceneErrorKind::TargetOutOfFrame { dx, dy })
            }
        }
        PlacementPolicy::Random => Ok((
            rng.random_range(dx_range.0..=dx_range.1),
            rng.random_range(dy_range.0..=dy_range.1),
        )),
    }
}

/// Steps up to, and including, the feasibility check.
struct Prepared {
    seeds: SceneSeeds,
    bundle: Arc<ViewBundle>,
    lambda: ThermalState,
    target_offset: (i64, i64),
    occultant_offset: Option<OccultantOffset>,
    layout: SceneLayout,
    /// Background with occultant and visible target pasted, untransformed.
    composite: ImageBuffer,
    report: FeasibilityReport,
    stats_f: Option<RegionStats>,
    stats_c: Option<RegionStats>,
}

fn prepare(recipe: &SceneRecipe, assets: &dyn AssetSource) -> Result<Prepared, SceneError> {
    recipe
        .validate()
        .map_err(SceneErrorKind::InvalidRecipe)
        .at(Step::Recipe)?;
    let seeds = SceneSeeds::from_scene_seed(recipe.seed);
    let background = assets.background(&recipe.background).at(Step::Assets)?;
    let bundle = assets.bundle(&recipe.bundle).at(Step::Assets)?;
    let occultant: Option<Arc<Occultant>> = recipe
        .occultant
        .as_deref()
        .map(|id| assets.occultant(id))
        .transpose()
        .at(Step::Assets)?;
    let frame = background.dims();

    if let Some(r) = bundle
        .present_regions()
        .into_iter()
        .find(|r| !recipe.thermal.contains_key(r))
    {
        return Err(ThermalError::MissingRegionLambda(r)).at(Step::Thermal);
    }
    let lambda =
        draw_state(&recipe.thermal, &mut rng_from_seed(seeds.thermal)).at(Step::Thermal)?;
    let signature = mix(&bundle, &lambda).at(Step::Thermal)?;

    let silhouette = bundle.silhouette();
    let (dx, dy) = target_placement(
        frame,
        &silhouette,
        recipe.placement,
        &mut rng_from_seed(seeds.target_placement),
    )
    .at(Step::TargetPlacement)?;
    let c_full = silhouette
        .translated(frame.0, frame.1, dx, dy)
        .at(Step::TargetPlacement)?;

    let mut rx_outcome = Ok(0.0);
    let (occultant_offset, occ_mask) = match &occultant {
        None => (None, RegionMask::new(frame.0, frame.1)),
        Some(occ) => match place_occultant(
            &c_full,
            &occ.mask,
            recipe.constraints.rx,
            RX_TOLERANCE,
            &mut rng_from_seed(seeds.occultant_placement),
        ) {
            Ok(p) => {
                let OccultantOffset { ox, oy } = p.offset;
                rx_outcome = Ok(p.achieved_rx);
                let m = occ
                    .mask
                    .translated(frame.0, frame.1, ox, oy)
                    .at(Step::OccultantPlacement)?;
                (Some(p.offset), m)
            }
            Err(SolverError::Unachievable { best, .. }) => {
                rx_outcome = Err(best);
                (None, RegionMask::new(frame.0, frame.1))
            }
            Err(e) => return Err(e).at(Step::OccultantPlacement),
        },
    };

    let layout = SceneLayout::from_masks(c_full, occ_mask, recipe.f1_radius).at(Step::Layout)?;
    let mut composite = (*background).clone();
    if let (Some(occ), Some(off)) = (&occultant, occultant_offset) {
        let placed = occ.image.translated(frame.0, frame.1, off.ox, off.oy);
        composite
            .copy_masked(&placed, &layout.occultant)
            .at(Step::Layout)?;
    }
    let placed_signature = signature.translated(frame.0, frame.1, dx, dy);
    composite
        .copy_masked(&placed_signature, &layout.c_visible)
        .at(Step::Layout)?;

    let stats = |m: &RegionMask| region_stats(&composite, m).ok();
    let stats_c = stats(&layout.c_visible);
    let stats_f1 = stats(&layout.f1);
    let stats_f = stats(&layout.background());
    let not_target = layout.c_visible.complement();
    let inputs = FeasibilityInputs {
        stats_f,
        stats_f1,
        stats_c,
        background_range: composite.masked_min_max(&not_target).at(Step::Layout)?,
        target_range: composite
            .masked_min_max(&layout.c_visible)
            .at(Step::Layout)?,
        rx: Some(rx_outcome),
        export_range: Some(recipe.sensor.range),
        empty_target: stats_c.is_none(),
        empty_local_background: stats_f1.is_none(),
    };
    let report = check_feasibility(&recipe.constraints, &inputs);
    Ok(Prepared {
        seeds,
        bundle,
        lambda,
        target_offset: (dx, dy),
        occultant_offset,
        layout,
        composite,
        report,
        stats_f,
        stats_c,
    })
}

/// Runs every step before gain application and returns the feasibility
/// report. Writes nothing.
pub fn check_scene(
    recipe: &SceneRecipe,
    assets: &dyn AssetSource,
) -> Result<FeasibilityReport, SceneError> {
    prepare(recipe, assets).map(|p| p.report)
}

/// Builds one scene in memory.
pub fn build_scene(
    recipe: &SceneRecipe,
    assets: &dyn AssetSource,
) -> Result<SceneOutput, SceneError> {
    let p = prepare(recipe, assets)?;
    if !p.report.is_feasible() {
        return Err(SceneErrorKind::Infeasible(p.report)).at(Step::Feasibility);
    }
    let c = &recipe.constraints;
    let layout = p.layout;
    let stats_f = p.stats_f.expect("feasible scenes have a background");
    let stats_c = p.stats_c.expect("feasible scenes have a visible target");

    let bg = solve_background(&stats_f, c).at(Step::Gains)?;
    let mut img = p.composite;
    let not_target = layout.c_visible.complement();
    img.apply_affine_masked(&not_target, bg.gain, bg.offset)
        .at(Step::Gains)?;
    let mu_f1_after = region_stats(&img, &layout.f1).at(Step::Gains)?.mean;
    let tg = solve_target(&stats_c, mu_f1_after, c).at(Step::Gains)?;
    img.apply_affine_masked(&layout.c_visible, tg.gain, tg.offset)
        .at(Step::Gains)?;
    let achieved = measure_scene(&img, &layout, c.calibration).at(Step::Gains)?;

    let blurred = apply_mtf(&img, &recipe.sensor);
    let sensed = apply_noise(&blurred, &recipe.sensor, &mut rng_from_seed(p.seeds.noise));
    let (post, post_err) = match measure_scene(&sensed, &layout, c.calibration) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let image = quantize(&sensed, &recipe.sensor);

    let record = SceneRecord {
        scene_id: recipe.scene_id.clone(),
        recipe: recipe.clone(),
        seeds: p.seeds,
        view_id: p.bundle.view_id.clone(),
        lambda: p.lambda,
        target_offset: p.target_offset,
        occultant_offset: p.occultant_offset,
        background_transform: bg,
        target_transform: tg,
        requested: Requested {
            rss: c.rss,
            scr: c.scr,
            k: c.k,
            rx: c.rx,
        },
        achieved_pre_sensor: achieved,
        achieved_post_sensor: post,
        post_sensor_error: post_err,
        feasibility: p.report,
        quantization: image.mapping,
        saturated_low: image.saturated_low,
        saturated_high: image.saturated_high,
        files: None,
    };
    Ok(SceneOutput {
        record,
        layout,
        intermediate: img,
        sensed,
        image,
    })
}

/// PNG bytes of the exported image.
pub fn encode_scene_image(q: &QuantizedImage) -> Result<Vec<u8>, image::ImageError> {
    if q.mapping.depth == 8 {
        let codes: Vec<u8> = q.codes.iter().map(|&c| c as u8).collect();
        encode_gray8(q.width, q.height, &codes, ImageFormat::Png)
    } else {
        encode_gray16(q.width, q.height, &q.codes, ImageFormat::Png)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), SceneErrorKind> {
    let wrap = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    std::fs::write(path, bytes).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Writes image, masks and optionally the step-C intermediate under
/// `dataset_dir`, filling `record.files`.
pub fn write_scene(
    dataset_dir: &Path,
    out: &mut SceneOutput,
    keep_intermediate: bool,
) -> Result<(), SceneError> {
    let id = &out.record.scene_id;
    let files = SceneFiles {
        image: format!("images/{id}.png"),
        c_visible: format!("masks/{id}_c_visible.png"),
        c_full: format!("masks/{id}_c_full.png"),
        occultant: format!("masks/{id}_occultant.png"),
        intermediate: keep_intermediate.then(|| format!("intermediate/{id}.irf")),
    };
    let enc = |e: image::ImageError| SceneErrorKind::Encode(e.to_string());
    let png = ImageFormat::Png;
    write(
        &dataset_dir.join(&files.image),
        &encode_scene_image(&out.image)
            .map_err(enc)
            .at(Step::Export)?,
    )
    .at(Step::Export)?;
    for (rel, mask) in [
        (&files.c_visible, &out.layout.c_visible),
        (&files.c_full, &out.layout.c_full),
        (&files.occultant, &out.layout.occultant),
    ] {
        write(
            &dataset_dir.join(rel),
            &encode_mask(mask, png).map_err(enc).at(Step::Export)?,
        )
        .at(Step::Export)?;
    }
    if let Some(rel) = &files.intermediate {
        write(&dataset_dir.join(rel), &encode_irf(&out.intermediate)).at(Step::Export)?;
    }
    out.record.files = Some(files);
    Ok(())
}
