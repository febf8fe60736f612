//! Intrinsic thermal variability of a target signature.
//!
//! Each thermal region of a view is interpolated between its ambient (TA) and
//! operational (TF) signature with a per-region rate λ in [0, 1]. Rates are
//! drawn from mode-conditioned laws: half-Gaussians anchored at 0 (ambient)
//! and 1 (operating), a Gaussian centred on 0.5 (intermediate), each with 3σ
//! equal to the half-width of its nominal interval.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{check_dims, ImageBuffer, ImageError, LabelMap, RegionMask};
use crate::seed::{derive_seed, rng_from_seed};

/// Rejection attempts before a draw is declared stuck.
pub const SAMPLER_ITERATION_CAP: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermalError {
    #[error("no rate or mode given for region `{0}`")]
    MissingRegionLambda(Region),
    #[error("label code {0} is not in the region table")]
    UnknownLabel(u8),
    #[error("unknown region name `{0}`")]
    UnknownRegion(String),
    #[error("rate {value} for region `{region}` is outside [0, 1]")]
    RateOutOfRange { region: Region, value: f64 },
    #[error("λ sampler exceeded {SAMPLER_ITERATION_CAP} rejections")]
    SamplerStuck,
    #[error("at least one signature per configuration is required")]
    EmptyExpansion,
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Vehicle sub-surfaces with homogeneous, independent thermal behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Engine,
    MainBody,
    Muffler,
    Windows,
    #[serde(alias = "caterpillar", alias = "tracks")]
    Tires,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::Engine,
        Region::MainBody,
        Region::Muffler,
        Region::Windows,
        Region::Tires,
    ];

    /// Label code used when a bundle does not provide its own table.
    pub fn default_code(self) -> u8 {
        match self {
            Region::Engine => 1,
            Region::MainBody => 2,
            Region::Muffler => 3,
            Region::Windows => 4,
            Region::Tires => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Engine => "engine",
            Region::MainBody => "main_body",
            Region::Muffler => "muffler",
            Region::Windows => "windows",
            Region::Tires => "tires",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Region {
    type Err = ThermalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "engine" => Ok(Region::Engine),
            "main_body" | "body" => Ok(Region::MainBody),
            "muffler" => Ok(Region::Muffler),
            "windows" => Ok(Region::Windows),
            "tires" | "caterpillar" | "tracks" => Ok(Region::Tires),
            other => Err(ThermalError::UnknownRegion(other.to_string())),
        }
    }
}

/// Mapping from label codes to regions.
pub type RegionTable = BTreeMap<u8, Region>;

pub fn default_region_table() -> RegionTable {
    Region::ALL.iter().map(|&r| (r.default_code(), r)).collect()
}

/// Pre-rendered target data for one target type and aspect angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewBundle {
    pub view_id: String,
    pub ta: ImageBuffer,
    pub tf: ImageBuffer,
    pub regions: LabelMap,
    pub table: RegionTable,
}

impl ViewBundle {
    pub fn new(
        view_id: impl Into<String>,
        ta: ImageBuffer,
        tf: ImageBuffer,
        regions: LabelMap,
        table: RegionTable,
    ) -> Result<Self, ThermalError> {
        check_dims(ta.dims(), tf.dims())?;
        check_dims(ta.dims(), regions.dims())?;
        if let Some(code) = regions.codes().into_iter().find(|c| !table.contains_key(c)) {
            return Err(ThermalError::UnknownLabel(code));
        }
        Ok(Self {
            view_id: view_id.into(),
            ta,
            tf,
            regions,
            table,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.ta.dims()
    }

    pub fn silhouette(&self) -> RegionMask {
        self.regions.silhouette()
    }

    /// Regions that actually occur in the label map.
    pub fn present_regions(&self) -> Vec<Region> {
        let mut out: Vec<Region> = self
            .regions
            .codes()
            .into_iter()
            .map(|c| self.table[&c])
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// λ per region.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThermalState(pub BTreeMap<Region, f64>);

impl ThermalState {
    pub fn uniform(regions: &[Region], lambda: f64) -> Self {
        Self(regions.iter().map(|&r| (r, lambda)).collect())
    }

    pub fn get(&self, region: Region) -> Option<f64> {
        self.0.get(&region).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Ambient,
    Intermediate,
    Operating,
}

impl Mode {
    pub fn law(self) -> LambdaLaw {
        match self {
            Mode::Ambient => LambdaLaw {
                mode: self,
                center: 0.0,
                sigma: 0.1 / 3.0,
            },
            Mode::Intermediate => LambdaLaw {
                mode: self,
                center: 0.5,
                sigma: 0.4 / 3.0,
            },
            Mode::Operating => LambdaLaw {
                mode: self,
                center: 1.0,
                sigma: 0.1 / 3.0,
            },
        }
    }

    /// Nominal interval: `[0, 0.1]`, `]0.1, 0.9[`, `[0.9, 1]`.
    pub fn contains(self, lambda: f64) -> bool {
        match self {
            Mode::Ambient => (0.0..=0.1).contains(&lambda),
            Mode::Intermediate => lambda > 0.1 && lambda < 0.9,
            Mode::Operating => (0.9..=1.0).contains(&lambda),
        }
    }
}

/// Operational mode per region.
pub type OperationalMode = BTreeMap<Region, Mode>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaLaw {
    pub mode: Mode,
    pub center: f64,
    pub sigma: f64,
}

/// Interpolates TA and TF per region; non-target pixels are 0.
pub fn mix(bundle: &ViewBundle, state: &ThermalState) -> Result<ImageBuffer, ThermalError> {
    let mut lut = [None::<f64>; 256];
    for (&code, &region) in &bundle.table {
        if let Some(l) = state.get(region) {
            if !(0.0..=1.0).contains(&l) {
                return Err(ThermalError::RateOutOfRange { region, value: l });
            }
            lut[code as usize] = Some(l);
        }
    }
    let (w, h) = bundle.dims();
    let mut data = Vec::with_capacity(w * h);
    for ((&code, &ta), &tf) in bundle
        .regions
        .labels()
        .iter()
        .zip(bundle.ta.data())
        .zip(bundle.tf.data())
    {
        if code == 0 {
            data.push(0.0);
            continue;
        }
        let lambda = lut[code as usize].ok_or_else(|| {
            bundle
                .table
                .get(&code)
                .map_or(ThermalError::UnknownLabel(code), |&r| {
                    ThermalError::MissingRegionLambda(r)
                })
        })?;
        data.push((1.0 - lambda) * ta + lambda * tf);
    }
    Ok(ImageBuffer::from_vec(w, h, data)?)
}

/// Draws one λ for `mode`, rejection-resampled into [0, 1].
pub fn sample_lambda<R: Rng + ?Sized>(mode: Mode, rng: &mut R) -> Result<f64, ThermalError> {
    let law = mode.law();
    let normal = Normal::new(0.0, law.sigma).expect("law sigma is positive");
    for _ in 0..SAMPLER_ITERATION_CAP {
        let z = normal.sample(rng);
        let lambda = match mode {
            Mode::Ambient => z.abs(),
            Mode::Operating => 1.0 - z.abs(),
            Mode::Intermediate => law.center + z,
        };
        if (0.0..=1.0).contains(&lambda) {
            return Ok(lambda);
        }
    }
    Err(ThermalError::SamplerStuck)
}

/// Independent draw per region, in region order.
pub fn draw_state<R: Rng + ?Sized>(
    modes: &OperationalMode,
    rng: &mut R,
) -> Result<ThermalState, ThermalError> {
    let mut state = BTreeMap::new();
    for (&region, &mode) in modes {
        state.insert(region, sample_lambda(mode, rng)?);
    }
    Ok(ThermalState(state))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedSignature {
    pub config_index: usize,
    pub seed: u64,
    pub state: ThermalState,
    pub image: ImageBuffer,
}

/// `n_per_config` mixed signatures per configuration.
///
/// Item `i` (config-major order) uses its own generator seeded with
/// `derive_seed(seed, i)`, so the output does not depend on thread count.
pub fn expand_database(
    bundle: &ViewBundle,
    configs: &[OperationalMode],
    n_per_config: usize,
    seed: u64,
) -> Result<Vec<ExpandedSignature>, ThermalError> {
    if n_per_config == 0 {
        return Err(ThermalError::EmptyExpansion);
    }
    for config in configs {
        if let Some(r) = bundle
            .present_regions()
            .into_iter()
            .find(|r| !config.contains_key(r))
        {
            return Err(ThermalError::MissingRegionLambda(r));
        }
    }
    (0..configs.len() * n_per_config)
        .into_par_iter()
        .map(|i| {
            let config_index = i / n_per_config;
            let item_seed = derive_seed(seed, i as u64);
            let state = draw_state(&configs[config_index], &mut rng_from_seed(item_seed))?;
            let image = mix(bundle, &state)?;
            Ok(ExpandedSignature {
                config_index,
                seed: item_seed,
                state,
                image,
            })
        })
        .collect()
}
