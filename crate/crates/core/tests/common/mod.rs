#![allow(dead_code)]

use irforge::metrics::Calibration;
use irforge::pipeline::{MemoryAssets, PlacementPolicy, SceneRecipe, SweepSpec};
use irforge::sensor::SensorModel;
use irforge::solver::{MeanPolicy, SceneConstraints};
use irforge::synthetic::{synthetic_bundle, synthetic_occultant, textured_background};
use irforge::thermal::{Mode, OperationalMode, Region};

pub fn assets() -> MemoryAssets {
    MemoryAssets::new()
        .with_background("bg0", textured_background(256, 256, 1, 20_000.0, 400.0))
        .with_background("bg1", textured_background(256, 256, 2, 21_000.0, 250.0))
        .with_background(
            "flat",
            irforge::imagecore::ImageBuffer::filled(256, 256, 20_000.0),
        )
        .with_bundle("tank", synthetic_bundle(48, 28, 7))
        .with_occultant("tree", synthetic_occultant(30, 30, 5))
}

pub fn modes(mode: Mode) -> OperationalMode {
    Region::ALL.iter().map(|&r| (r, mode)).collect()
}

pub fn standby() -> OperationalMode {
    let mut m = modes(Mode::Ambient);
    m.insert(Region::Engine, Mode::Operating);
    m.insert(Region::Muffler, Mode::Operating);
    m
}

pub fn sensor() -> SensorModel {
    SensorModel {
        blur_sigma: 1.0,
        noise_sigma: 3.0,
        depth: 16,
        range: (0.0, 65535.0),
    }
}

pub fn recipe(rss: f64, scr: f64, k: f64, rx: f64, seed: u64) -> SceneRecipe {
    SceneRecipe {
        scene_id: format!("s{seed}"),
        background: "bg0".into(),
        bundle: "tank".into(),
        occultant: (rx > 0.0).then(|| "tree".to_string()),
        constraints: SceneConstraints {
            rss,
            scr,
            k,
            rx,
            calibration: Calibration::new(100.0).unwrap(),
            background_mean: MeanPolicy::Preserve,
        },
        thermal_config: "standby".into(),
        thermal: standby(),
        placement: PlacementPolicy::Random,
        f1_radius: 5,
        sensor: sensor(),
        seed,
    }
}

pub fn sweep(dataset: &str) -> SweepSpec {
    SweepSpec {
        dataset: dataset.into(),
        master_seed: 2024,
        backgrounds: vec!["bg0".into(), "bg1".into()],
        bundles: vec!["tank".into()],
        occultants: vec![None],
        thermal_configs: vec![
            ("ambient".into(), modes(Mode::Ambient)),
            ("standby".into(), standby()),
            ("operating".into(), modes(Mode::Operating)),
        ],
        rss: vec![1.0, 3.0],
        scr: vec![2.0],
        k: vec![0.4],
        rx: vec![0.0],
        replicates: 1,
        calibration: Calibration::new(100.0).unwrap(),
        background_mean: MeanPolicy::Preserve,
        placement: PlacementPolicy::Random,
        f1_radius: 5,
        sensor: sensor(),
    }
}

/// |a − b| ≤ tol·max(|b|, floor).
pub fn close(a: f64, b: f64, tol: f64, floor: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(floor)
}
