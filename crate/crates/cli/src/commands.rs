use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use irforge::imagecore::{ImageBuffer, ImageError, RegionMask};
use irforge::io::{
    load_bundle, load_image, load_mask, save_image_as_gray16, save_irf, GrayMapping,
};
use irforge::layout::SceneLayout;
use irforge::metrics::{measure_scene, Calibration};
use irforge::pipeline::{
    batch_generate, check_scene, AssetSource, BatchOutput, DatasetManifest, DirectoryAssets,
    ManifestEntry,
};
use irforge::thermal::{expand_database, mix, ThermalError, ThermalState};
use serde_json::json;

use crate::config::{variant_name, ExpandConfig, ResolvedRun, RunConfig};
use crate::{ExitStatus, Failure, EXIT_CONFIG, EXIT_RUNTIME};

type CmdResult = Result<u8, Failure>;

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn load_run(config: &Path, output_dir: Option<&Path>) -> Result<ResolvedRun, Failure> {
    let run = RunConfig::load(config)
        .and_then(|c| c.resolve(config, output_dir))
        .config_err()?;
    eprintln!(
        "irforge: master seed {} (from {})",
        run.seed, run.seed_source
    );
    Ok(run)
}

/// Loads every referenced asset once and checks that each thermal
/// configuration covers every region of every bundle.
fn preload(run: &ResolvedRun, assets: &DirectoryAssets) -> anyhow::Result<usize> {
    let s = &run.sweep;
    let uniq = |v: &[String]| v.iter().cloned().collect::<BTreeSet<_>>();
    let mut n = 0;
    for id in uniq(&s.backgrounds) {
        assets
            .background(&id)
            .with_context(|| format!("background `{id}`"))?;
        n += 1;
    }
    for id in s
        .occultants
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
    {
        assets
            .occultant(&id)
            .with_context(|| format!("occultant `{id}`"))?;
        n += 1;
    }
    for id in uniq(&s.bundles) {
        let bundle = assets
            .bundle(&id)
            .with_context(|| format!("bundle `{id}`"))?;
        n += 1;
        for (name, modes) in &s.thermal_configs {
            if let Some(r) = bundle
                .present_regions()
                .into_iter()
                .find(|r| !modes.contains_key(r))
            {
                let e = ThermalError::MissingRegionLambda(r);
                bail!(
                    "thermal config `{name}`, bundle `{id}`: {}: {e}",
                    variant_name(&e)
                );
            }
        }
    }
    Ok(n)
}

fn open_assets(run: &ResolvedRun) -> Result<DirectoryAssets, Failure> {
    let assets = DirectoryAssets::new(&run.asset_root, run.config.gray);
    let n = preload(run, &assets).config_err()?;
    if run.config.verbosity >= 2 {
        eprintln!("irforge: {n} assets under {}", run.asset_root.display());
    }
    Ok(assets)
}

pub fn check(config: &Path) -> CmdResult {
    let run = load_run(config, None)?;
    open_assets(&run)?;
    emit(&format!(
        "ok: {} scenes, dataset `{}` -> {}\n",
        run.recipes.len(),
        run.config.dataset,
        run.dataset_dir.display()
    ));
    Ok(0)
}

pub fn generate(
    config: &Path,
    dry_run: bool,
    keep_intermediate: bool,
    jobs: Option<usize>,
    output_dir: Option<&Path>,
) -> CmdResult {
    let run = load_run(config, output_dir)?;
    let jobs = jobs.unwrap_or_else(default_jobs);
    if jobs == 0 {
        return Err(anyhow!("--jobs must be at least 1")).config_err();
    }
    let assets = open_assets(&run)?;
    if dry_run {
        return dry_run_report(&run, &assets);
    }
    let out = BatchOutput {
        dataset_dir: run.dataset_dir.clone(),
        keep_intermediate,
    };
    let manifest = batch_generate(&run.sweep, &assets, Some(&out), jobs).runtime_err()?;
    if run.config.verbosity >= 1 {
        emit(&summary_table(&manifest));
    }
    eprintln!(
        "irforge: {}/{} scenes succeeded; manifest {}",
        manifest.succeeded,
        manifest.scene_count,
        run.dataset_dir.join("manifest.json").display()
    );
    for entry in &manifest.scenes {
        if let ManifestEntry::Failed { failure, .. } = entry {
            eprintln!(
                "irforge: {} failed at {}: {}",
                failure.scene_id, failure.step, failure.error
            );
        }
    }
    Ok(if manifest.failed == 0 {
        0
    } else {
        EXIT_RUNTIME
    })
}

fn dry_run_report(run: &ResolvedRun, assets: &DirectoryAssets) -> CmdResult {
    let mut all_ok = true;
    let scenes: Vec<_> = run
        .recipes
        .iter()
        .map(|r| match check_scene(r, assets) {
            Ok(report) => {
                all_ok &= report.is_feasible();
                json!({
                    "scene_id": r.scene_id,
                    "feasible": report.is_feasible(),
                    "issues": report.issues,
                })
            }
            Err(e) => {
                all_ok = false;
                json!({
                    "scene_id": r.scene_id,
                    "feasible": false,
                    "step": e.step,
                    "error": e.kind.to_string(),
                })
            }
        })
        .collect();
    let report = json!({
        "dataset": run.config.dataset,
        "master_seed": run.seed,
        "scenes": scenes,
    });
    emit(&(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"));
    Ok(if all_ok { 0 } else { EXIT_RUNTIME })
}

/// Requested vs achieved (pre-sensor) metrics, one line per scene.
pub fn summary_table(m: &DatasetManifest) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14} {:>9} {:>9} {:>8} {:>8} {:>7} {:>7} {:>6} {:>6}",
        "scene", "RSS*", "RSS", "SCR*", "SCR", "K*", "K", "Rx*", "Rx"
    );
    for e in &m.scenes {
        match e {
            ManifestEntry::Ok { record, .. } => {
                let (q, a) = (&record.requested, &record.achieved_pre_sensor);
                let _ = writeln!(
                    s,
                    "{:<14} {:>9.4} {:>9.4} {:>8.4} {:>8.4} {:>7.4} {:>7.4} {:>6.3} {:>6.3}",
                    record.scene_id, q.rss, a.rss, q.scr, a.scr, q.k, a.k, q.rx, a.rx
                );
            }
            ManifestEntry::Failed { failure, .. } => {
                let _ = writeln!(
                    s,
                    "{:<14} FAILED at {}: {}",
                    failure.scene_id, failure.step, failure.error
                );
            }
        }
    }
    s
}

pub struct MetricsArgs {
    pub image: PathBuf,
    pub c_full: PathBuf,
    pub occultant: Option<PathBuf>,
    pub c_visible: Option<PathBuf>,
    pub nu_k: f64,
    pub f1_radius: usize,
    pub gray: GrayMapping,
}

fn same_dims(what: &str, mask: &RegionMask, frame: (usize, usize)) -> anyhow::Result<()> {
    if mask.dims() != frame {
        let e = ImageError::DimensionMismatch {
            expected: frame,
            actual: mask.dims(),
        };
        bail!("{what}: {}: {e}", variant_name(&e));
    }
    Ok(())
}

pub fn metrics(args: MetricsArgs) -> CmdResult {
    let cal = Calibration::new(args.nu_k).config_err()?;
    if args.f1_radius == 0 {
        return Err(anyhow!("--f1-radius must be at least 1")).config_err();
    }
    let img = load_image(&args.image, args.gray).config_err()?;
    let frame = img.dims();
    let c_full = load_mask(&args.c_full).config_err()?;
    same_dims("c_full", &c_full, frame).config_err()?;
    let occ = match &args.occultant {
        Some(p) => {
            let m = load_mask(p).config_err()?;
            same_dims("occultant", &m, frame).config_err()?;
            m
        }
        None => RegionMask::new(frame.0, frame.1),
    };
    let layout = SceneLayout::from_masks(c_full, occ, args.f1_radius).config_err()?;
    if let Some(p) = &args.c_visible {
        let vis = load_mask(p).config_err()?;
        same_dims("c_visible", &vis, frame).config_err()?;
        if vis != layout.c_visible {
            return Err(anyhow!("c_visible is not c_full minus occultant")).config_err();
        }
    }
    let m = measure_scene(&img, &layout, cal)
        .map_err(|e| anyhow!("{}: {e}", variant_name(&e)))
        .runtime_err()?;
    emit(&(serde_json::to_string_pretty(&m).expect("metrics serialize") + "\n"));
    Ok(0)
}

pub const EXPANSION_MANIFEST: &str = "expansion.json";

pub fn expand(
    bundle_dir: &Path,
    config: &Path,
    out: &Path,
    lambda_override: Option<f64>,
) -> CmdResult {
    let cfg = ExpandConfig::load(config)
        .and_then(|c| c.validate().map(|_| c))
        .config_err()?;
    if let Some(l) = lambda_override {
        if !(0.0..=1.0).contains(&l) {
            return Err(anyhow!("--lambda-override {l} is outside [0, 1]")).config_err();
        }
    }
    let (seed, source) = crate::config::resolve_seed(cfg.seed).config_err()?;
    eprintln!("irforge: master seed {seed} (from {source})");
    let bundle = load_bundle(bundle_dir, cfg.gray).config_err()?;
    let configs: Vec<_> = cfg.thermal.iter().map(|t| t.modes.clone()).collect();
    let mut sigs =
        expand_database(&bundle, &configs, cfg.n_per_config, seed).map_err(|e| Failure {
            code: if matches!(e, ThermalError::MissingRegionLambda(_)) {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            },
            error: anyhow!("{}: {e}", variant_name(&e)),
        })?;
    if let Some(l) = lambda_override {
        for s in &mut sigs {
            s.state = ThermalState(s.state.0.keys().map(|&r| (r, l)).collect());
            s.image = mix(&bundle, &s.state).runtime_err()?;
        }
    }

    let sig_dir = out.join("signatures");
    std::fs::create_dir_all(&sig_dir)
        .with_context(|| format!("creating {}", sig_dir.display()))
        .runtime_err()?;
    let mut entries = Vec::with_capacity(sigs.len());
    for (i, s) in sigs.iter().enumerate() {
        let name = &cfg.thermal[s.config_index].name;
        let stem = format!("{name}_{i:05}");
        let irf = format!("signatures/{stem}.irf");
        let png = format!("signatures/{stem}.png");
        save_irf(&out.join(&irf), &s.image).runtime_err()?;
        let codes = ImageBuffer::from_vec(
            s.image.width(),
            s.image.height(),
            s.image
                .data()
                .iter()
                .map(|v| (v - cfg.gray.offset) / cfg.gray.scale)
                .collect(),
        )
        .expect("same length");
        save_image_as_gray16(&out.join(&png), &codes).runtime_err()?;
        entries.push(json!({
            "index": i,
            "config": name,
            "config_index": s.config_index,
            "seed": s.seed,
            "lambda": s.state,
            "irf": irf,
            "png": png,
        }));
    }
    let manifest = json!({
        "schema_version": 1,
        "bundle": bundle_dir.display().to_string(),
        "view_id": bundle.view_id,
        "master_seed": seed,
        "n_per_config": cfg.n_per_config,
        "lambda_override": lambda_override,
        "configs": cfg.thermal.iter().map(|t| json!({"name": t.name, "modes": t.modes})).collect::<Vec<_>>(),
        "signatures": entries,
    });
    let path = out.join(EXPANSION_MANIFEST);
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
    .with_context(|| format!("writing {}", path.display()))
    .runtime_err()?;
    eprintln!(
        "irforge: {} signatures, manifest {}",
        sigs.len(),
        path.display()
    );
    Ok(0)
}
