//! Deterministic synthetic assets for tests, demos and acceptance runs.

use rand::Rng;

use crate::imagecore::{ImageBuffer, LabelMap, RegionMask};
use crate::io::Occultant;
use crate::seed::rng_from_seed;
use crate::thermal::{default_region_table, Region, ViewBundle};

/// Smooth clutter: a handful of random plane waves plus box-filtered noise,
/// centred on `mean` with roughly `amplitude` peak deviation.
pub fn textured_background(
    width: usize,
    height: usize,
    seed: u64,
    mean: f64,
    amplitude: f64,
) -> ImageBuffer {
    let mut rng = rng_from_seed(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let freq = rng.random_range(0.01..0.15);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let weight = rng.random_range(0.2..1.0);
            (freq * angle.cos(), freq * angle.sin(), phase, weight)
        })
        .collect();
    let total: f64 = waves.iter().map(|w| w.3).sum();
    let noise: Vec<f64> = (0..width * height)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let smooth = |x: usize, y: usize| {
        let (mut acc, mut n) = (0.0, 0.0);
        for yy in y.saturating_sub(1)..(y + 2).min(height) {
            for xx in x.saturating_sub(1)..(x + 2).min(width) {
                acc += noise[yy * width + xx];
                n += 1.0;
            }
        }
        acc / n
    };
    ImageBuffer::from_fn(width, height, |x, y| {
        let s: f64 = waves
            .iter()
            .map(|&(fx, fy, ph, wt)| wt * (fx * x as f64 + fy * y as f64 + ph).sin())
            .sum();
        mean + amplitude * (0.7 * s / total + 0.3 * smooth(x, y))
    })
}

/// Boxy vehicle side view with all five thermal regions. TF is hotter than TA
/// everywhere, most of all on the engine, muffler and tires.
pub fn synthetic_bundle(width: usize, height: usize, seed: u64) -> ViewBundle {
    assert!(
        width >= 12 && height >= 10,
        "bundle too small for five regions"
    );
    let mut rng = rng_from_seed(seed);
    let (w, h) = (width as f64, height as f64);
    let labels = LabelMap::from_fn(width, height, |x, y| {
        let (u, v) = ((x as f64 + 0.5) / w, (y as f64 + 0.5) / h);
        if !(0.05..0.95).contains(&u) || !(0.1..0.95).contains(&v) {
            return 0;
        }
        let region = if v > 0.78 {
            Region::Tires
        } else if v < 0.4 && u < 0.3 {
            if v < 0.25 {
                Region::Muffler
            } else {
                Region::Engine
            }
        } else if v < 0.4 && u > 0.65 {
            Region::Windows
        } else if u < 0.3 {
            Region::Engine
        } else {
            Region::MainBody
        };
        region.default_code()
    });
    let base = 20_000.0 + rng.random_range(-500.0..500.0);
    let heat = |r: Region| match r {
        Region::Engine => 900.0,
        Region::Muffler => 1400.0,
        Region::Tires => 600.0,
        Region::Windows => 150.0,
        Region::MainBody => 250.0,
    };
    let table = default_region_table();
    let texture: Vec<f64> = (0..width * height)
        .map(|_| rng.random_range(-40.0..40.0))
        .collect();
    let ta = ImageBuffer::from_fn(width, height, |x, y| {
        let code = labels.get(x, y);
        if code == 0 {
            0.0
        } else {
            (base + texture[y * width + x] + 3.0 * (x as f64 - w / 2.0)).round()
        }
    });
    let tf = ImageBuffer::from_fn(width, height, |x, y| match labels.get(x, y) {
        0 => 0.0,
        code => (ta.get(x, y) + heat(table[&code]) * (1.0 + 0.2 * (y as f64 / h))).round(),
    });
    ViewBundle::new(format!("synthetic/{seed:04}"), ta, tf, labels, table)
        .expect("generated bundle is consistent")
}

/// Random union of ellipses, touching the centre of the raster.
pub fn random_blob(width: usize, height: usize, seed: u64, lobes: usize) -> RegionMask {
    let mut rng = rng_from_seed(seed);
    let (w, h) = (width as f64, height as f64);
    let ellipses: Vec<(f64, f64, f64, f64)> = (0..lobes.max(1))
        .map(|i| {
            let (cx, cy) = if i == 0 {
                (w / 2.0, h / 2.0)
            } else {
                (
                    rng.random_range(0.2 * w..0.8 * w),
                    rng.random_range(0.2 * h..0.8 * h),
                )
            };
            let rx = rng.random_range(0.15 * w..0.45 * w).max(1.0);
            let ry = rng.random_range(0.15 * h..0.45 * h).max(1.0);
            (cx, cy, rx, ry)
        })
        .collect();
    RegionMask::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        ellipses.iter().any(|&(cx, cy, rx, ry)| {
            let (dx, dy) = ((px - cx) / rx, (py - cy) / ry);
            dx * dx + dy * dy <= 1.0
        })
    })
}

/// Tree-like occultant: a blob mask over a mildly textured cool patch.
pub fn synthetic_occultant(width: usize, height: usize, seed: u64) -> Occultant {
    let mask = random_blob(width, height, seed, 3);
    let mut rng = rng_from_seed(seed ^ 0x5eed);
    let image = ImageBuffer::from_fn(width, height, |_, _| {
        (19_500.0 + rng.random_range(-60.0f64..60.0)).round()
    });
    Occultant { image, mask }
}
