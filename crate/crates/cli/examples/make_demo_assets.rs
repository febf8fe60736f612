//! Writes a small synthetic asset tree plus `demo.toml` and `expand.toml`.
//!
//!     cargo run -p irforge-cli --example make_demo_assets -- demo
//!     cargo run -p irforge-cli -- generate demo/demo.toml

use std::path::Path;

use irforge::io::{save_bundle, save_image_as_gray16, Occultant};
use irforge::synthetic::{synthetic_bundle, synthetic_occultant, textured_background};

pub const DEMO_CONFIG: &str = r#"version = 1
dataset = "demo"
seed = 20240601
output_dir = "out"
asset_root = "assets"

[sweep]
backgrounds = ["backgrounds/field.png", "backgrounds/forest.png"]
bundles = ["bundles/tank/side"]
occultants = ["occultants/tree"]
rss = [1.0, 3.0]
scr = [2.0]
k = [0.4, -0.6]
rx = [0.0, 0.25]
nu_k = 100.0
f1_radius = 5

[[thermal]]
name = "standby"
modes = { engine = "operating", muffler = "operating", main_body = "ambient", windows = "ambient", tires = "ambient" }

[[thermal]]
name = "moving"
modes = { engine = "operating", muffler = "operating", main_body = "intermediate", windows = "intermediate", tires = "operating" }

[sensor]
blur_sigma = 1.0
noise_sigma = 3.0
depth = 16
range = [0.0, 65535.0]
"#;

pub const EXPAND_CONFIG: &str = r#"version = 1
seed = 7
n_per_config = 4

[[thermal]]
name = "cold"
modes = { engine = "ambient", muffler = "ambient", main_body = "ambient", windows = "ambient", tires = "ambient" }

[[thermal]]
name = "standby"
modes = { engine = "operating", muffler = "operating", main_body = "ambient", windows = "ambient", tires = "ambient" }

[[thermal]]
name = "warm"
modes = { engine = "intermediate", muffler = "intermediate", main_body = "intermediate", windows = "intermediate", tires = "intermediate" }
"#;

pub fn write_demo_assets(dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let assets = dir.join("assets");
    std::fs::create_dir_all(assets.join("backgrounds"))?;
    save_image_as_gray16(
        &assets.join("backgrounds/field.png"),
        &textured_background(256, 256, 1, 20_000.0, 400.0),
    )?;
    save_image_as_gray16(
        &assets.join("backgrounds/forest.png"),
        &textured_background(256, 256, 2, 21_000.0, 250.0),
    )?;
    let mut bundle = synthetic_bundle(48, 28, 7);
    bundle.view_id = "tank/side".into();
    save_bundle(&assets.join("bundles/tank/side"), &bundle)?;
    let occ: Occultant = synthetic_occultant(30, 30, 5);
    irforge::io::save_occultant(&assets.join("occultants/tree"), &occ)?;
    std::fs::write(dir.join("demo.toml"), DEMO_CONFIG)?;
    std::fs::write(dir.join("expand.toml"), EXPAND_CONFIG)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "demo".into());
    write_demo_assets(Path::new(&dir))?;
    println!("wrote demo assets and configs to {dir}/");
    Ok(())
}
