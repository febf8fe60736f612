use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::imagecore::ImageBuffer;
use crate::io::{load_bundle, load_image, load_occultant, GrayMapping, IoError, Occultant};
use crate::thermal::ViewBundle;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Resolves the asset references of a recipe.
pub trait AssetSource: Sync {
    fn background(&self, id: &str) -> Result<Arc<ImageBuffer>, AssetError>;
    fn bundle(&self, id: &str) -> Result<Arc<ViewBundle>, AssetError>;
    fn occultant(&self, id: &str) -> Result<Arc<Occultant>, AssetError>;
}

/// In-memory assets keyed by id.
#[derive(Debug, Default, Clone)]
pub struct MemoryAssets {
    pub backgrounds: HashMap<String, Arc<ImageBuffer>>,
    pub bundles: HashMap<String, Arc<ViewBundle>>,
    pub occultants: HashMap<String, Arc<Occultant>>,
}

impl MemoryAssets {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_background(mut self, id: &str, img: ImageBuffer) -> Self {
        self.backgrounds.insert(id.to_string(), Arc::new(img));
        self
    }

    pub fn with_bundle(mut self, id: &str, bundle: ViewBundle) -> Self {
        self.bundles.insert(id.to_string(), Arc::new(bundle));
        self
    }

    pub fn with_occultant(mut self, id: &str, occ: Occultant) -> Self {
        self.occultants.insert(id.to_string(), Arc::new(occ));
        self
    }
}

fn lookup<T>(
    map: &HashMap<String, Arc<T>>,
    kind: &'static str,
    id: &str,
) -> Result<Arc<T>, AssetError> {
    map.get(id).cloned().ok_or_else(|| AssetError::NotFound {
        kind,
        id: id.to_string(),
    })
}

impl AssetSource for MemoryAssets {
    fn background(&self, id: &str) -> Result<Arc<ImageBuffer>, AssetError> {
        lookup(&self.backgrounds, "background", id)
    }

    fn bundle(&self, id: &str) -> Result<Arc<ViewBundle>, AssetError> {
        lookup(&self.bundles, "bundle", id)
    }

    fn occultant(&self, id: &str) -> Result<Arc<Occultant>, AssetError> {
        lookup(&self.occultants, "occultant", id)
    }
}

/// Assets on disk, ids being paths relative to `root`. Loaded once and cached.
#[derive(Debug)]
pub struct DirectoryAssets {
    root: PathBuf,
    mapping: GrayMapping,
    backgrounds: Mutex<HashMap<String, Arc<ImageBuffer>>>,
    bundles: Mutex<HashMap<String, Arc<ViewBundle>>>,
    occultants: Mutex<HashMap<String, Arc<Occultant>>>,
}

impl DirectoryAssets {
    pub fn new(root: impl Into<PathBuf>, mapping: GrayMapping) -> Self {
        Self {
            root: root.into(),
            mapping,
            backgrounds: Mutex::default(),
            bundles: Mutex::default(),
            occultants: Mutex::default(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn cached<T>(
        cache: &Mutex<HashMap<String, Arc<T>>>,
        id: &str,
        load: impl FnOnce() -> Result<T, IoError>,
    ) -> Result<Arc<T>, AssetError> {
        if let Some(hit) = cache.lock().expect("asset cache poisoned").get(id) {
            return Ok(hit.clone());
        }
        let value = Arc::new(load()?);
        cache
            .lock()
            .expect("asset cache poisoned")
            .insert(id.to_string(), value.clone());
        Ok(value)
    }
}

impl AssetSource for DirectoryAssets {
    fn background(&self, id: &str) -> Result<Arc<ImageBuffer>, AssetError> {
        Self::cached(&self.backgrounds, id, || {
            load_image(&self.root.join(id), self.mapping)
        })
    }

    fn bundle(&self, id: &str) -> Result<Arc<ViewBundle>, AssetError> {
        Self::cached(&self.bundles, id, || {
            load_bundle(&self.root.join(id), self.mapping)
        })
    }

    fn occultant(&self, id: &str) -> Result<Arc<Occultant>, AssetError> {
        Self::cached(&self.occultants, id, || {
            load_occultant(&self.root.join(id), self.mapping)
        })
    }
}
