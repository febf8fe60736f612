use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::assets::AssetSource;
use super::recipe::{PlacementPolicy, SceneRecipe};
use super::scene::{build_scene, write_scene, SceneRecord, Step};
use crate::metrics::Calibration;
use crate::seed::derive_seed;
use crate::sensor::SensorModel;
use crate::solver::{MeanPolicy, SceneConstraints};
use crate::thermal::OperationalMode;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("sweep expands to no scenes (empty axis: {0})")]
    EmptySweep(&'static str),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Cartesian sweep over scene parameters.
///
/// Expansion order, outermost first: backgrounds, bundles, occultants,
/// thermal configurations, RSS*, SCR*, K*, R_x*, replicates. Scene `i` gets
/// seed `derive_seed(master_seed, i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub dataset: String,
    pub master_seed: u64,
    pub backgrounds: Vec<String>,
    pub bundles: Vec<String>,
    pub occultants: Vec<Option<String>>,
    pub thermal_configs: Vec<(String, OperationalMode)>,
    pub rss: Vec<f64>,
    pub scr: Vec<f64>,
    pub k: Vec<f64>,
    pub rx: Vec<f64>,
    pub replicates: usize,
    pub calibration: Calibration,
    pub background_mean: MeanPolicy,
    pub placement: PlacementPolicy,
    pub f1_radius: usize,
    pub sensor: SensorModel,
}

impl SweepSpec {
    pub fn expand(&self) -> Result<Vec<SceneRecipe>, BatchError> {
        let axes: [(&'static str, usize); 9] = [
            ("backgrounds", self.backgrounds.len()),
            ("bundles", self.bundles.len()),
            ("occultants", self.occultants.len()),
            ("thermal_configs", self.thermal_configs.len()),
            ("rss", self.rss.len()),
            ("scr", self.scr.len()),
            ("k", self.k.len()),
            ("rx", self.rx.len()),
            ("replicates", self.replicates),
        ];
        if let Some((name, _)) = axes.iter().find(|(_, n)| *n == 0) {
            return Err(BatchError::EmptySweep(name));
        }
        let mut out = Vec::new();
        for bg in &self.backgrounds {
            for bundle in &self.bundles {
                for occ in &self.occultants {
                    for (config_name, modes) in &self.thermal_configs {
                        for &rss in &self.rss {
                            for &scr in &self.scr {
                                for &k in &self.k {
                                    for &rx in &self.rx {
                                        for _ in 0..self.replicates {
                                            let index = out.len();
                                            out.push(SceneRecipe {
                                                scene_id: format!("scene_{index:05}"),
                                                background: bg.clone(),
                                                bundle: bundle.clone(),
                                                occultant: occ.clone(),
                                                constraints: SceneConstraints {
                                                    rss,
                                                    scr,
                                                    k,
                                                    rx,
                                                    calibration: self.calibration,
                                                    background_mean: self.background_mean,
                                                },
                                                thermal_config: config_name.clone(),
                                                thermal: modes.clone(),
                                                placement: self.placement,
                                                f1_radius: self.f1_radius,
                                                sensor: self.sensor,
                                                seed: derive_seed(self.master_seed, index as u64),
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedScene {
    pub scene_id: String,
    pub step: Step,
    pub error: String,
    pub recipe: SceneRecipe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ManifestEntry {
    Ok {
        index: usize,
        record: Box<SceneRecord>,
    },
    Failed {
        index: usize,
        failure: Box<FailedScene>,
    },
}

impl ManifestEntry {
    pub fn index(&self) -> usize {
        match self {
            ManifestEntry::Ok { index, .. } | ManifestEntry::Failed { index, .. } => *index,
        }
    }

    pub fn record(&self) -> Option<&SceneRecord> {
        match self {
            ManifestEntry::Ok { record, .. } => Some(record),
            ManifestEntry::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub dataset: String,
    pub master_seed: u64,
    pub scene_count: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub scenes: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Where a batch writes its files.
#[derive(Debug, Clone)]
pub struct BatchOutput {
    /// `out/<dataset>`.
    pub dataset_dir: PathBuf,
    pub keep_intermediate: bool,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Builds every scene of the sweep on `jobs` workers. Failed scenes are
/// recorded and never abort the batch. Entries are ordered by scene index.
pub fn batch_generate(
    sweep: &SweepSpec,
    assets: &dyn AssetSource,
    output: Option<&BatchOutput>,
    jobs: usize,
) -> Result<DatasetManifest, BatchError> {
    let recipes = sweep.expand()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;
    let scenes: Vec<ManifestEntry> = pool.install(|| {
        recipes
            .par_iter()
            .enumerate()
            .map(|(index, recipe)| run_one(index, recipe, assets, output))
            .collect()
    });
    let failed = scenes
        .iter()
        .filter(|e| matches!(e, ManifestEntry::Failed { .. }))
        .count();
    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        dataset: sweep.dataset.clone(),
        master_seed: sweep.master_seed,
        scene_count: scenes.len(),
        succeeded: scenes.len() - failed,
        failed,
        scenes,
    };
    if let Some(out) = output {
        write_manifest(&out.dataset_dir, &manifest)?;
    }
    Ok(manifest)
}

fn run_one(
    index: usize,
    recipe: &SceneRecipe,
    assets: &dyn AssetSource,
    output: Option<&BatchOutput>,
) -> ManifestEntry {
    let result = build_scene(recipe, assets).and_then(|mut scene| {
        if let Some(out) = output {
            write_scene(&out.dataset_dir, &mut scene, out.keep_intermediate)?;
        }
        Ok(scene.record)
    });
    match result {
        Ok(record) => ManifestEntry::Ok {
            index,
            record: Box::new(record),
        },
        Err(e) => ManifestEntry::Failed {
            index,
            failure: Box::new(FailedScene {
                scene_id: recipe.scene_id.clone(),
                step: e.step,
                error: e.kind.to_string(),
                recipe: recipe.clone(),
            }),
        },
    }
}

pub fn write_manifest(dataset_dir: &Path, manifest: &DatasetManifest) -> Result<(), BatchError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| BatchError::Io { path, source }
    };
    std::fs::create_dir_all(dataset_dir).map_err(io(dataset_dir))?;
    let path = dataset_dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_json()).map_err(io(&path))
}
