//! End-to-end scene generation: thermal mixing, target and occultant
//! placement, gain/offset application under metric constraints, sensor
//! effect and export, with a ground-truth record per scene.

mod assets;
mod batch;
mod recipe;
mod scene;

pub use assets::{AssetError, AssetSource, DirectoryAssets, MemoryAssets};
pub use batch::{
    batch_generate, BatchError, BatchOutput, DatasetManifest, FailedScene, ManifestEntry,
    SweepSpec, MANIFEST_SCHEMA_VERSION,
};
pub use recipe::{PlacementPolicy, SceneRecipe};
pub use scene::{
    build_scene, check_scene, encode_scene_image, target_placement, write_scene, Requested,
    SceneError, SceneErrorKind, SceneFiles, SceneOutput, SceneRecord, SceneSeeds, Step,
};

pub use crate::layout::SceneLayout;
