use serde::{Deserialize, Serialize};

use crate::sensor::SensorModel;
use crate::solver::SceneConstraints;
use crate::thermal::OperationalMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum PlacementPolicy {
    /// Uniform over every in-frame offset.
    Random,
    Fixed {
        dx: i64,
        dy: i64,
    },
}

/// Everything needed to build one scene. The seed determines every
/// stochastic choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecipe {
    pub scene_id: String,
    pub background: String,
    pub bundle: String,
    pub occultant: Option<String>,
    pub constraints: SceneConstraints,
    /// Name of the thermal configuration, for reporting.
    pub thermal_config: String,
    pub thermal: OperationalMode,
    pub placement: PlacementPolicy,
    pub f1_radius: usize,
    pub sensor: SensorModel,
    pub seed: u64,
}

impl SceneRecipe {
    /// Checks the parts of the recipe that do not depend on imagery.
    pub fn validate(&self) -> Result<(), String> {
        self.constraints.validate().map_err(|e| e.to_string())?;
        self.sensor.validate().map_err(|e| e.to_string())?;
        if self.f1_radius == 0 {
            return Err("f1_radius must be at least 1".into());
        }
        if self.constraints.rx > 0.0 && self.occultant.is_none() {
            return Err(format!(
                "R_x* = {} needs an occultant, none given",
                self.constraints.rx
            ));
        }
        Ok(())
    }
}
