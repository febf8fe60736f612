//! Run configuration files (TOML).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use irforge::io::GrayMapping;
use irforge::layout::DEFAULT_F1_RADIUS;
use irforge::metrics::Calibration;
use irforge::pipeline::{PlacementPolicy, SceneRecipe, SweepSpec};
use irforge::sensor::SensorModel;
use irforge::solver::MeanPolicy;
use irforge::thermal::OperationalMode;
use serde::Deserialize;

pub const CONFIG_VERSION: u32 = 1;

pub const SEED_ENV: &str = "IRFORGE_SEED";

/// `generate` / `check` configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub dataset: String,
    pub seed: u64,
    /// Relative to the config file.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Relative to the config file; asset ids are relative to this.
    #[serde(default = "default_asset_root")]
    pub asset_root: PathBuf,
    /// 0 quiet, 1 normal, 2 verbose.
    #[serde(default = "default_verbosity")]
    pub verbosity: u8,
    #[serde(default)]
    pub gray: GrayMapping,
    pub sweep: SweepAxes,
    pub thermal: Vec<ThermalConfig>,
    #[serde(default)]
    pub sensor: SensorModel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub backgrounds: Vec<String>,
    pub bundles: Vec<String>,
    /// Empty means no occultant.
    #[serde(default)]
    pub occultants: Vec<String>,
    pub rss: Vec<f64>,
    pub scr: Vec<f64>,
    pub k: Vec<f64>,
    #[serde(default = "default_rx")]
    pub rx: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub nu_k: Calibration,
    #[serde(default)]
    pub background_mean: MeanPolicy,
    #[serde(default = "default_placement")]
    pub placement: PlacementPolicy,
    #[serde(default = "default_f1_radius")]
    pub f1_radius: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalConfig {
    pub name: String,
    pub modes: OperationalMode,
}

/// `expand` configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandConfig {
    pub version: u32,
    pub seed: u64,
    pub n_per_config: usize,
    #[serde(default)]
    pub gray: GrayMapping,
    pub thermal: Vec<ThermalConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_asset_root() -> PathBuf {
    PathBuf::from(".")
}
fn default_verbosity() -> u8 {
    1
}
fn default_rx() -> Vec<f64> {
    vec![0.0]
}
fn default_replicates() -> usize {
    1
}
fn default_placement() -> PlacementPolicy {
    PlacementPolicy::Random
}
fn default_f1_radius() -> usize {
    DEFAULT_F1_RADIUS
}

/// Name of an error's enum variant, for diagnostics scripts can grep.
pub fn variant_name<E: std::fmt::Debug>(e: &E) -> String {
    format!("{e:?}")
        .chars()
        .take_while(|c| c.is_alphanumeric() || *c == '_')
        .collect()
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// The config's seed unless `IRFORGE_SEED` is set.
pub fn resolve_seed(config_seed: u64) -> Result<(u64, &'static str)> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            let seed = v
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}=`{v}` is not an unsigned 64-bit integer"))?;
            Ok((seed, SEED_ENV))
        }
        Err(std::env::VarError::NotPresent) => Ok((config_seed, "config")),
        Err(e) => bail!("{SEED_ENV}: {e}"),
    }
}

fn check_thermal(configs: &[ThermalConfig]) -> Result<()> {
    ensure!(
        !configs.is_empty(),
        "at least one [[thermal]] configuration is required"
    );
    let mut names = BTreeSet::new();
    for t in configs {
        ensure!(!t.name.is_empty(), "thermal configuration with empty name");
        ensure!(
            names.insert(&t.name),
            "thermal configuration `{}` defined twice",
            t.name
        );
        ensure!(
            !t.modes.is_empty(),
            "thermal configuration `{}` has no regions",
            t.name
        );
    }
    Ok(())
}

/// A validated run: every scene recipe has passed its own checks.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub seed: u64,
    pub seed_source: &'static str,
    pub asset_root: PathBuf,
    pub dataset_dir: PathBuf,
    pub sweep: SweepSpec,
    pub recipes: Vec<SceneRecipe>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_toml(path)
    }

    /// Validates everything that does not need imagery. Touches no files.
    pub fn resolve(
        self,
        config_path: &Path,
        output_override: Option<&Path>,
    ) -> Result<ResolvedRun> {
        ensure!(
            self.version == CONFIG_VERSION,
            "unsupported config version {} (expected {CONFIG_VERSION})",
            self.version
        );
        ensure!(
            !self.dataset.is_empty()
                && !self.dataset.contains(['/', '\\'])
                && self.dataset != ".."
                && self.dataset != ".",
            "dataset name `{}` must be a plain directory name",
            self.dataset
        );
        ensure!(self.verbosity <= 2, "verbosity must be 0, 1 or 2");
        ensure!(
            self.gray.scale.is_finite() && self.gray.scale != 0.0 && self.gray.offset.is_finite(),
            "gray mapping must have a finite non-zero scale and finite offset"
        );
        check_thermal(&self.thermal)?;
        self.sensor
            .validate()
            .map_err(|e| anyhow::anyhow!("sensor: {}: {e}", variant_name(&e)))?;
        let (seed, seed_source) = resolve_seed(self.seed)?;
        let base = config_path.parent().unwrap_or(Path::new("."));
        let asset_root = base.join(&self.asset_root);
        let dataset_dir = match output_override {
            Some(o) => o.join(&self.dataset),
            None => base.join(&self.output_dir).join(&self.dataset),
        };
        let s = &self.sweep;
        let sweep = SweepSpec {
            dataset: self.dataset.clone(),
            master_seed: seed,
            backgrounds: s.backgrounds.clone(),
            bundles: s.bundles.clone(),
            occultants: if s.occultants.is_empty() {
                vec![None]
            } else {
                s.occultants.iter().cloned().map(Some).collect()
            },
            thermal_configs: self
                .thermal
                .iter()
                .map(|t| (t.name.clone(), t.modes.clone()))
                .collect(),
            rss: s.rss.clone(),
            scr: s.scr.clone(),
            k: s.k.clone(),
            rx: s.rx.clone(),
            replicates: s.replicates,
            calibration: s.nu_k,
            background_mean: s.background_mean,
            placement: s.placement,
            f1_radius: s.f1_radius,
            sensor: self.sensor,
        };
        let recipes = sweep.expand().map_err(|e| anyhow::anyhow!("sweep: {e}"))?;
        for r in &recipes {
            if let Err(e) = r.constraints.validate() {
                bail!("{}: {}: {e}", r.scene_id, variant_name(&e));
            }
            r.validate()
                .map_err(|e| anyhow::anyhow!("{}: {e}", r.scene_id))?;
        }
        Ok(ResolvedRun {
            config: self,
            seed,
            seed_source,
            asset_root,
            dataset_dir,
            sweep,
            recipes,
        })
    }
}

impl ExpandConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_toml(path)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.version == CONFIG_VERSION,
            "unsupported config version {} (expected {CONFIG_VERSION})",
            self.version
        );
        ensure!(self.n_per_config >= 1, "n_per_config must be at least 1");
        check_thermal(&self.thermal)
    }
}
