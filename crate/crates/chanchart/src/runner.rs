//! Experiment orchestration: generate, train, evaluate, plot, report.
//!
//! Each command is an ordinary function over a [`RunConfig`] and an
//! output directory, with a thin clap CLI on top. Artifacts live under
//! fixed names in the output directory and are tracked in a manifest
//! with content hashes; commands refuse to mix artifacts from different
//! datasets.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use ndarray::Array2;
use rand::Rng;

use crate::chansim::{add_receiver_noise, synthesize_channel, PropagationModel};
use crate::chart_metrics::{evaluate_chart, MetricsReport};
use crate::config::{Profile, RunConfig};
use crate::csi_features::{extract_features, FeatureVector};
use crate::error::{Error, Result};
use crate::neural_chart::MlpParams;
use crate::objectives::{LossConfig, Method};
use crate::plot::{normalize_powers_per_ap, position_colors, power_distance_svg, scatter_svg, ChartPlot};
use crate::rng::{stream_rng, streams};
use crate::scenario::{build_grid, place_aps, spiral_timestamps, split_dataset, ApLayout};
use crate::storage::{
    read_dataset_positions, read_features, update_manifest, write_checkpoint, write_csv,
    write_features, Checkpoint, DatasetHeader, DatasetSample, DatasetWriter, FeaturesHeader,
    Manifest, SamplePosition,
};
use crate::train::{chart_positions, train_chart, TrainConfig, TrainData};

/// Fixed artifact layout inside an output directory.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset.ccds")
    }

    pub fn features(&self) -> PathBuf {
        self.root.join("features.ccft")
    }

    pub fn positions_csv(&self) -> PathBuf {
        self.root.join("positions.csv")
    }

    fn method_file(&self, prefix: &str, method: Method, ext: &str) -> PathBuf {
        self.root
            .join(format!("{prefix}_{}.{ext}", method.name().to_lowercase()))
    }

    pub fn checkpoint(&self, method: Method) -> PathBuf {
        self.method_file("checkpoint", method, "ccck")
    }

    pub fn trainlog(&self, method: Method) -> PathBuf {
        self.method_file("trainlog", method, "csv")
    }

    pub fn metrics(&self, method: Method) -> PathBuf {
        self.method_file("metrics", method, "json")
    }

    pub fn chart_svg(&self, method: Option<Method>) -> PathBuf {
        match method {
            Some(m) => self.method_file("chart", m, "svg"),
            None => self.root.join("chart_truth.svg"),
        }
    }

    pub fn power_svg(&self) -> PathBuf {
        self.root.join("power_distance.svg")
    }

    pub fn report_csv(&self) -> PathBuf {
        self.root.join("report.csv")
    }

    pub fn report_txt(&self) -> PathBuf {
        self.root.join("report.txt")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    fn file_name(path: &Path) -> String {
        path.file_name().expect("artifact paths have names").to_string_lossy().into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub num_samples: usize,
    pub dropped: usize,
    pub total_antennas: usize,
    pub num_subcarriers: usize,
    pub trunc_taps: usize,
    pub feature_dim: usize,
}

/// Synthesizes the dataset and its features.
pub fn cmd_generate(cfg: &RunConfig, out_root: &Path) -> Result<GenerateSummary> {
    let started = Instant::now();
    cfg.validate()?;
    let out = OutDir::new(out_root)?;
    let scenario = cfg.scenario()?;
    let params = cfg.channel_params();
    let model = PropagationModel::realize(&scenario, &params)?;
    let grid = spiral_timestamps(build_grid(&scenario)?);
    let aps = place_aps(&scenario)?;
    let n = grid.len();
    let config_text = cfg.to_canonical_string();

    let header = DatasetHeader {
        seed: cfg.rng_seed,
        num_samples: n as u64,
        num_aps: scenario.num_aps as u32,
        antennas_per_ap: scenario.antennas_per_ap as u32,
        num_subcarriers: scenario.num_subcarriers as u32,
        config_text: config_text.clone(),
    };
    let mut writer = DatasetWriter::create(&out.dataset(), &header)?;
    let mut features: Vec<FeatureVector> = Vec::with_capacity(n);
    let mut position_rows: Vec<Vec<String>> = Vec::with_capacity(n);
    let mut dropped = 0usize;
    let (snr_lo, snr_hi) = cfg.noise_snr_db_range;

    for i in 0..n {
        // The multipath environment is frozen: every sample sees the
        // same reflection coefficients, so nearby samples get similar
        // channels. Only the receiver noise differs per sample.
        let mut reflections = stream_rng(cfg.rng_seed, streams::REFLECTIONS);
        let clean = synthesize_channel(i, grid.positions[i], &aps, &scenario, &model, &mut reflections)?;
        let mut noise_rng = stream_rng(cfg.rng_seed, streams::NOISE_BASE + i as u64);
        let snr_db = noise_rng.gen_range(snr_lo..=snr_hi);
        let mut tensor = add_receiver_noise(clean, snr_db, scenario.antennas_per_ap, &mut noise_rng)?;
        tensor.quantize_to_f32();

        writer.write_sample(&DatasetSample {
            index: i as u64,
            position: grid.positions[i],
            timestamp: grid.timestamps[i],
            tensor: tensor.entries.clone(),
        })?;
        position_rows.push(vec![
            i.to_string(),
            format!("{:.6}", grid.positions[i][0]),
            format!("{:.6}", grid.positions[i][1]),
            format!("{:.6}", grid.positions[i][2]),
            format!("{:.6}", grid.timestamps[i]),
        ]);

        match extract_features(
            &tensor,
            scenario.trunc_taps,
            scenario.antennas_per_ap,
            scenario.num_aps,
            grid.timestamps[i],
        ) {
            Ok(fv) => features.push(fv),
            Err(Error::Degenerate(msg)) => {
                log::warn!("sample {i} has no usable features and is dropped: {msg}");
                dropped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    writer.finish()?;

    let features_header = FeaturesHeader {
        seed: cfg.rng_seed,
        num_samples: features.len() as u64,
        feature_dim: scenario.feature_dim() as u32,
        num_aps: scenario.num_aps as u32,
        config_text: config_text.clone(),
    };
    write_features(&out.features(), &features_header, &features)?;
    write_csv(
        &out.positions_csv(),
        &["sample", "x_m", "y_m", "z_m", "timestamp"],
        &position_rows,
    )?;

    record_step(cfg, &out, "generate", started, &[
        OutDir::file_name(&out.dataset()),
        OutDir::file_name(&out.features()),
        OutDir::file_name(&out.positions_csv()),
    ])?;

    let summary = GenerateSummary {
        num_samples: n,
        dropped,
        total_antennas: scenario.total_antennas(),
        num_subcarriers: scenario.num_subcarriers,
        trunc_taps: scenario.trunc_taps,
        feature_dim: scenario.feature_dim(),
    };
    println!(
        "generated N={} samples (B={} antennas, W={} subcarriers, C={} taps, D'={}), {} dropped",
        summary.num_samples,
        summary.total_antennas,
        summary.num_subcarriers,
        summary.trunc_taps,
        summary.feature_dim,
        summary.dropped
    );
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub method: Method,
    pub epoch_losses: Vec<f64>,
}

/// Trains one method on the train split and writes its checkpoint and
/// loss log.
pub fn cmd_train(cfg: &RunConfig, out_root: &Path, method: Method) -> Result<TrainSummary> {
    let started = Instant::now();
    cfg.validate()?;
    let out = OutDir::new(out_root)?;
    let world = load_world(cfg, &out)?;
    let (train_idx, _) = split_dataset(world.num_samples, cfg.train_fraction, cfg.rng_seed)?;
    let split = gather_split(&world, &train_idx, cfg.latent_dim)?;

    let loss_cfg = loss_config(cfg, method);
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        triplet_budget_per_sample: cfg.triplet_budget_per_sample,
        layer_widths: cfg.layer_widths()?,
        seed: cfg.rng_seed,
    };
    let data = TrainData {
        features: &split.features,
        truths: &split.truths,
        timestamps: &split.timestamps,
        ap_powers_db: &split.powers,
        ap_positions: &world.aps.truncated_positions,
    };
    log::info!(
        "training {} ({}) on {} samples for {} epochs",
        method.name(),
        method.loss_name(),
        split.sample_indices.len(),
        train_cfg.epochs
    );
    let outcome = train_chart(&loss_cfg, &data, &train_cfg)?;

    write_checkpoint(&out.checkpoint(method), &Checkpoint {
        method,
        seed: cfg.rng_seed,
        config_hash: cfg.dataset_fingerprint_hash(),
        layer_widths: train_cfg.layer_widths.clone(),
        flat_params: outcome.params.to_flat(),
    })?;
    let log_rows: Vec<Vec<String>> = outcome
        .epoch_losses
        .iter()
        .enumerate()
        .map(|(e, l)| vec![e.to_string(), format!("{l:.9e}")])
        .collect();
    write_csv(&out.trainlog(method), &["epoch", "loss"], &log_rows)?;

    record_step(cfg, &out, &format!("train_{}", method.name().to_lowercase()), started, &[
        OutDir::file_name(&out.checkpoint(method)),
        OutDir::file_name(&out.trainlog(method)),
    ])?;

    let first = outcome.epoch_losses.first().copied().unwrap_or(f64::NAN);
    let last = outcome.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained {}: {} epochs, loss {first:.6} -> {last:.6}",
        method.name(),
        outcome.epoch_losses.len()
    );
    Ok(TrainSummary {
        method,
        epoch_losses: outcome.epoch_losses,
    })
}

/// Evaluates one trained method on the test split. With
/// `identity_latents` the chart is replaced by the ground truth itself,
/// which must score perfectly; this exists to sanity-check the metric
/// stack, not to evaluate a model.
pub fn cmd_evaluate(
    cfg: &RunConfig,
    out_root: &Path,
    method: Method,
    identity_latents: bool,
) -> Result<MetricsReport> {
    let started = Instant::now();
    cfg.validate()?;
    let out = OutDir::new(out_root)?;
    let world = load_world(cfg, &out)?;
    let (_, test_idx) = split_dataset(world.num_samples, cfg.train_fraction, cfg.rng_seed)?;
    let split = gather_split(&world, &test_idx, cfg.latent_dim)?;

    let latents = if identity_latents {
        split.truths.clone()
    } else {
        if !out.checkpoint(method).exists() {
            return Err(Error::Data(format!(
                "no checkpoint for {} at {}; run train first",
                method.name(),
                out.checkpoint(method).display()
            )));
        }
        let ckpt = crate::storage::read_checkpoint(&out.checkpoint(method))?;
        if ckpt.config_hash != cfg.dataset_fingerprint_hash() {
            return Err(Error::Config(format!(
                "checkpoint {} was trained on a different dataset",
                out.checkpoint(method).display()
            )));
        }
        if ckpt.method != method {
            return Err(Error::Data(format!(
                "checkpoint file for {} actually holds a {} model",
                method.name(),
                ckpt.method.name()
            )));
        }
        if ckpt.layer_widths.first().copied() != Some(split.features.ncols()) {
            return Err(Error::Shape(format!(
                "checkpoint expects {}-dimensional features, dataset provides {}",
                ckpt.layer_widths.first().copied().unwrap_or(0),
                split.features.ncols()
            )));
        }
        let params = MlpParams::from_flat(&ckpt.layer_widths, &ckpt.flat_params)?;
        chart_positions(&params, &split.features)?
    };

    let anchored = identity_latents || method.is_anchored();
    let k = cfg.effective_k(split.sample_indices.len());
    let report = evaluate_chart(&split.truths, &latents, k, cfg.rd_num_bins, anchored)?;

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Data(format!("cannot serialize metrics: {e}")))?;
    std::fs::write(out.metrics(method), json + "\n")?;
    record_step(cfg, &out, &format!("evaluate_{}", method.name().to_lowercase()), started, &[
        OutDir::file_name(&out.metrics(method)),
    ])?;

    println!("evaluated {}: {}", method.name(), report_line(&report));
    Ok(report)
}

/// Renders the truth chart, one chart per trained method, and the
/// power-versus-distance figure.
pub fn cmd_plot(cfg: &RunConfig, out_root: &Path) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    cfg.validate()?;
    let out = OutDir::new(out_root)?;
    let world = load_world(cfg, &out)?;
    let all_rows: Vec<usize> = (0..world.num_samples).collect();
    let split = gather_split(&world, &all_rows, cfg.latent_dim)?;
    let colors = position_colors(&split.truths);
    let ap_latent = &world.aps.truncated_positions;
    let mut written = Vec::new();

    let truth_path = out.chart_svg(None);
    std::fs::write(&truth_path, scatter_svg(&ChartPlot {
        title: "ground truth",
        points: &split.truths,
        colors: &colors,
        ap_positions: Some(ap_latent),
    }))?;
    written.push(truth_path);

    for method in Method::all() {
        let ckpt_path = out.checkpoint(method);
        if !ckpt_path.exists() {
            continue;
        }
        let ckpt = crate::storage::read_checkpoint(&ckpt_path)?;
        if ckpt.config_hash != cfg.dataset_fingerprint_hash() {
            return Err(Error::Config(format!(
                "checkpoint {} was trained on a different dataset",
                ckpt_path.display()
            )));
        }
        let params = MlpParams::from_flat(&ckpt.layer_widths, &ckpt.flat_params)?;
        let latents = chart_positions(&params, &split.features)?;
        let title = format!("{} chart ({})", method.name(), method.loss_name());
        let path = out.chart_svg(Some(method));
        std::fs::write(&path, scatter_svg(&ChartPlot {
            title: &title,
            points: &latents,
            colors: &colors,
            // Unanchored charts live in arbitrary coordinates, so AP
            // markers would be meaningless there.
            ap_positions: method.is_anchored().then_some(ap_latent.as_slice()),
        }))?;
        written.push(path);
    }

    let mut distances = Array2::zeros((split.sample_indices.len(), world.aps.len()));
    for (r, &i) in split.sample_indices.iter().enumerate() {
        let p = world.positions[i].position;
        for (a, ap) in world.aps.positions.iter().enumerate() {
            distances[[r, a]] = (p[0] - ap[0]).hypot(p[1] - ap[1]);
        }
    }
    let powers = normalize_powers_per_ap(&split.powers);
    let power_path = out.power_svg();
    std::fs::write(&power_path, power_distance_svg(&distances, &powers))?;
    written.push(power_path);

    let names: Vec<String> = written.iter().map(|p| OutDir::file_name(p)).collect();
    record_step(cfg, &out, "plot", started, &names)?;
    println!("wrote {} figures to {}", written.len(), out.root().display());
    Ok(written)
}

/// Collates every evaluated method into the final CSV and text table.
/// Returns the CSV body.
pub fn cmd_report(out_root: &Path) -> Result<String> {
    let started = Instant::now();
    let out = OutDir::new(out_root)?;
    let manifest_path = out.manifest();
    let manifest = if manifest_path.exists() {
        let m = Manifest::load(&manifest_path)?;
        m.verify(out.root())?;
        Some(m)
    } else {
        log::warn!("no manifest in {}; reporting nothing", out.root().display());
        None
    };

    let mut rows: Vec<(Method, MetricsReport)> = Vec::new();
    for method in Method::all() {
        let path = out.metrics(method);
        if !path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        let report: MetricsReport = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("metrics file {} is corrupt: {e}", path.display())))?;
        rows.push((method, report));
    }

    let csv = render_report_csv(&rows);
    let table = render_report_table(&rows);
    std::fs::write(out.report_csv(), &csv)?;
    std::fs::write(out.report_txt(), &table)?;
    print!("{table}");

    if let Some(mut manifest) = manifest {
        manifest.record(out.root(), &OutDir::file_name(&out.report_csv()))?;
        manifest.record(out.root(), &OutDir::file_name(&out.report_txt()))?;
        manifest
            .timings_s
            .insert("report".into(), started.elapsed().as_secs_f64());
        manifest.save(&manifest_path)?;
    }
    Ok(csv)
}

const REPORT_COLUMNS: &str =
    "method,loss,learning_type,trustworthiness,continuity,kruskal_stress,rajski_distance,mean_error_m,p95_error_m";

fn render_report_csv(rows: &[(Method, MetricsReport)]) -> String {
    let mut csv = String::from(REPORT_COLUMNS);
    csv.push('\n');
    for (method, r) in rows {
        csv.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{},{}\n",
            method.name(),
            method.loss_name(),
            method.learning_type(),
            r.trustworthiness,
            r.continuity,
            r.kruskal_stress,
            r.rajski_distance,
            opt_cell(r.mean_error_m),
            opt_cell(r.p95_error_m),
        ));
    }
    csv
}

fn render_report_table(rows: &[(Method, MetricsReport)]) -> String {
    let mut table = format!(
        "{:<6} {:<22} {:<17} {:>8} {:>8} {:>8} {:>8} {:>10} {:>10}\n",
        "method", "loss", "learning", "TW", "CT", "KS", "RD", "mean [m]", "p95 [m]"
    );
    for (method, r) in rows {
        table.push_str(&format!(
            "{:<6} {:<22} {:<17} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10} {:>10}\n",
            method.name(),
            method.loss_name(),
            method.learning_type(),
            r.trustworthiness,
            r.continuity,
            r.kruskal_stress,
            r.rajski_distance,
            opt_cell(r.mean_error_m),
            opt_cell(r.p95_error_m),
        ));
    }
    table
}

fn opt_cell(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.6}"),
        None => "--".to_string(),
    }
}

fn report_line(r: &MetricsReport) -> String {
    format!(
        "TW={:.4} CT={:.4} KS={:.4} RD={:.4} mean={} p95={}",
        r.trustworthiness,
        r.continuity,
        r.kruskal_stress,
        r.rajski_distance,
        opt_cell(r.mean_error_m),
        opt_cell(r.p95_error_m)
    )
}

/// Per-method loss parameters: published presets overlaid with the
/// config's shared knobs.
fn loss_config(cfg: &RunConfig, method: Method) -> LossConfig {
    let preset = LossConfig::preset(method);
    LossConfig {
        method,
        lambda: cfg.lambda,
        t_c: cfg.t_c,
        m_t: if cfg.m_t > 0.0 { cfg.m_t } else { preset.m_t },
        m_p: cfg.m_p,
        m_b: cfg.m_b,
        labeled_fraction: cfg.labeled_fraction,
    }
}

/// The generated artifacts a command needs, cross-checked against the
/// active config.
struct World {
    num_samples: usize,
    positions: Vec<SamplePosition>,
    features: Vec<FeatureVector>,
    /// Row in `features` per sample index, when the sample has one.
    feature_row: Vec<Option<usize>>,
    feature_dim: usize,
    num_aps: usize,
    aps: ApLayout,
}

fn load_world(cfg: &RunConfig, out: &OutDir) -> Result<World> {
    if !out.dataset().exists() {
        return Err(Error::Data(format!(
            "no dataset at {}; run generate first",
            out.dataset().display()
        )));
    }
    let (header, positions) = read_dataset_positions(&out.dataset())?;
    check_same_dataset(cfg, &header.config_text, &out.dataset())?;
    let (fheader, features) = read_features(&out.features())?;
    check_same_dataset(cfg, &fheader.config_text, &out.features())?;

    let num_samples = header.num_samples as usize;
    for (i, p) in positions.iter().enumerate() {
        if p.index != i as u64 {
            return Err(Error::Data(format!(
                "dataset sample {i} is stored out of order (index {})",
                p.index
            )));
        }
    }
    let mut feature_row = vec![None; num_samples];
    for (row, fv) in features.iter().enumerate() {
        if fv.ue_index >= num_samples {
            return Err(Error::Data(format!(
                "feature row {row} references sample {} outside the dataset",
                fv.ue_index
            )));
        }
        feature_row[fv.ue_index] = Some(row);
    }
    let scenario = cfg.scenario()?;
    if num_samples != scenario.num_samples() {
        return Err(Error::Data(format!(
            "dataset holds {num_samples} samples, the scenario defines {}",
            scenario.num_samples()
        )));
    }
    let aps = place_aps(&scenario)?;
    Ok(World {
        num_samples,
        positions,
        features,
        feature_row,
        feature_dim: fheader.feature_dim as usize,
        num_aps: fheader.num_aps as usize,
        aps,
    })
}

fn check_same_dataset(cfg: &RunConfig, stored_text: &str, path: &Path) -> Result<()> {
    let stored = RunConfig::from_canonical_string(stored_text)
        .map_err(|e| Error::Data(format!("{} carries an unreadable config echo: {e}", path.display())))?;
    if stored.dataset_fingerprint() != cfg.dataset_fingerprint() {
        return Err(Error::Config(format!(
            "{} was generated with a different scenario or channel config; \
             regenerate or pass the matching config",
            path.display()
        )));
    }
    Ok(())
}

/// Matrices for one index split, restricted to samples that have
/// features.
struct SplitMatrices {
    features: Array2<f64>,
    truths: Array2<f64>,
    timestamps: Vec<f64>,
    powers: Array2<f64>,
    sample_indices: Vec<usize>,
}

fn gather_split(world: &World, indices: &[usize], latent_dim: usize) -> Result<SplitMatrices> {
    let kept: Vec<usize> = indices
        .iter()
        .copied()
        .filter(|&i| world.feature_row[i].is_some())
        .collect();
    if kept.len() < indices.len() {
        log::warn!(
            "{} of {} split samples have no features and are skipped",
            indices.len() - kept.len(),
            indices.len()
        );
    }
    if kept.is_empty() {
        return Err(Error::Data("no sample in this split has features".into()));
    }
    let mut features = Array2::zeros((kept.len(), world.feature_dim));
    let mut truths = Array2::zeros((kept.len(), latent_dim));
    let mut powers = Array2::zeros((kept.len(), world.num_aps));
    let mut timestamps = Vec::with_capacity(kept.len());
    for (r, &i) in kept.iter().enumerate() {
        let fv = &world.features[world.feature_row[i].expect("kept rows have features")];
        for (c, v) in fv.values.iter().enumerate() {
            features[[r, c]] = *v;
        }
        for (c, p) in fv.ap_powers_db.iter().enumerate() {
            powers[[r, c]] = *p;
        }
        for d in 0..latent_dim {
            truths[[r, d]] = world.positions[i].position[d];
        }
        timestamps.push(world.positions[i].timestamp);
    }
    Ok(SplitMatrices {
        features,
        truths,
        timestamps,
        powers,
        sample_indices: kept,
    })
}

fn record_step(
    cfg: &RunConfig,
    out: &OutDir,
    step: &str,
    started: Instant,
    artifact_names: &[String],
) -> Result<()> {
    update_manifest(
        out.root(),
        &cfg.dataset_fingerprint_hash(),
        &cfg.to_canonical_string(),
        cfg.rng_seed,
        |m| {
            for name in artifact_names {
                m.record(out.root(), name)?;
            }
            m.timings_s.insert(step.to_string(), started.elapsed().as_secs_f64());
            Ok(())
        },
    )
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "chanchart",
    version,
    about = "Channel charting experiments on a synthetic multipoint wireless scenario"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Baseline profile: desk (minutes on one core) or paper (full
    /// published scenario shape).
    #[arg(long, global = true, default_value = "desk", value_parser = parse_profile_arg)]
    profile: Profile,
    /// TOML file overlaid onto the profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides rng_seed from the profile and config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(clap::Subcommand, Debug)]
enum Cmd {
    /// Synthesize the dataset, features and positions.
    Generate,
    /// Train one method on the train split.
    Train {
        #[arg(long, value_parser = parse_method_arg)]
        method: Method,
    },
    /// Compute chart metrics for one method on the test split.
    Evaluate {
        #[arg(long, value_parser = parse_method_arg)]
        method: Method,
        /// Replace the chart with the ground truth (metric sanity
        /// check).
        #[arg(long)]
        debug_identity_latents: bool,
    },
    /// Render the chart and power figures.
    Plot,
    /// Collate evaluated methods into report.csv and report.txt.
    Report,
}

fn parse_method_arg(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).map_err(|e| e.to_string())
}

fn parse_profile_arg(s: &str) -> std::result::Result<Profile, String> {
    match s.to_ascii_lowercase().as_str() {
        "desk" => Ok(Profile::Desk),
        "paper" => Ok(Profile::Paper),
        other => Err(format!("unknown profile {other:?} (expected desk or paper)")),
    }
}

/// Parses the process arguments, runs the requested command, and maps
/// the outcome to an exit code: 0 success, 1 usage, 2 config, 3 data,
/// 4 numeric failure.
pub fn run_cli() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    if matches!(cli.command, Cmd::Report) {
        // Reporting only collates existing artifacts; it works from the
        // manifest alone so it never needs the original flags.
        cmd_report(&cli.out)?;
        return Ok(());
    }
    let cfg = RunConfig::load(cli.profile, cli.config.as_deref(), cli.seed)?;
    match cli.command {
        Cmd::Generate => {
            cmd_generate(&cfg, &cli.out)?;
        }
        Cmd::Train { method } => {
            cmd_train(&cfg, &cli.out, method)?;
        }
        Cmd::Evaluate { method, debug_identity_latents } => {
            cmd_evaluate(&cfg, &cli.out, method, debug_identity_latents)?;
        }
        Cmd::Plot => {
            cmd_plot(&cfg, &cli.out)?;
        }
        Cmd::Report => unreachable!("handled above"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::file_sha256;

    /// Small enough that generate + train + evaluate runs in well under
    /// a second.
    fn tiny_config() -> RunConfig {
        RunConfig::desk()
            .overlaid(
                "grid_cols = 6\n\
                 grid_rows = 6\n\
                 num_aps = 2\n\
                 antennas_per_ap = 2\n\
                 num_subcarriers = 8\n\
                 trunc_taps = 4\n\
                 num_scatterers = 6\n\
                 epochs = 3\n\
                 batch_size = 16\n\
                 hidden_widths = [8, 8]\n\
                 t_c = 6.0\n",
            )
            .unwrap()
    }

    #[test]
    fn pipeline_runs_end_to_end_on_a_tiny_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config();
        let summary = cmd_generate(&cfg, dir.path()).unwrap();
        assert_eq!(summary.num_samples, 36);
        assert_eq!(summary.feature_dim, 16);
        assert_eq!(summary.dropped, 0);

        let train = cmd_train(&cfg, dir.path(), Method::B1).unwrap();
        assert_eq!(train.epoch_losses.len(), 3);
        assert!(train.epoch_losses.iter().all(|l| l.is_finite()));

        let report = cmd_evaluate(&cfg, dir.path(), Method::B1, false).unwrap();
        assert!(report.trustworthiness.is_finite());
        assert!(report.mean_error_m.is_some());

        let figures = cmd_plot(&cfg, dir.path()).unwrap();
        // Truth chart, one trained method, and the power figure.
        assert_eq!(figures.len(), 3);

        let csv = cmd_report(dir.path()).unwrap();
        assert!(csv.starts_with(REPORT_COLUMNS));
        assert!(csv.contains("B1,mse,supervised"));
        assert!(dir.path().join("report.txt").exists());
    }

    #[test]
    fn identity_latents_score_perfectly() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config();
        cmd_generate(&cfg, dir.path()).unwrap();
        let report = cmd_evaluate(&cfg, dir.path(), Method::B1, true).unwrap();
        assert_eq!(report.trustworthiness, 1.0);
        assert_eq!(report.continuity, 1.0);
        assert_eq!(report.kruskal_stress, 0.0);
        assert_eq!(report.rajski_distance, 0.0);
        assert_eq!(report.mean_error_m, Some(0.0));
        assert_eq!(report.p95_error_m, Some(0.0));
    }

    #[test]
    fn unanchored_methods_report_no_positioning_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config();
        cmd_generate(&cfg, dir.path()).unwrap();
        cmd_train(&cfg, dir.path(), Method::B2).unwrap();
        let report = cmd_evaluate(&cfg, dir.path(), Method::B2, false).unwrap();
        assert_eq!(report.mean_error_m, None);
        assert_eq!(report.p95_error_m, None);
        let csv = cmd_report(dir.path()).unwrap();
        let b2_row = csv.lines().find(|l| l.starts_with("B2,")).unwrap();
        assert!(b2_row.ends_with(",--,--"), "{b2_row}");
    }

    #[test]
    fn regenerating_with_the_same_seed_is_byte_identical() {
        let cfg = tiny_config();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        cmd_generate(&cfg, a.path()).unwrap();
        cmd_generate(&cfg, b.path()).unwrap();
        for name in ["dataset.ccds", "features.ccft", "positions.csv"] {
            let (ha, _) = file_sha256(&a.path().join(name)).unwrap();
            let (hb, _) = file_sha256(&b.path().join(name)).unwrap();
            assert_eq!(ha, hb, "{name} differs between identical runs");
        }
    }

    #[test]
    fn mixing_configs_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        cmd_generate(&tiny_config(), dir.path()).unwrap();
        let other = RunConfig {
            rng_seed: 99,
            ..tiny_config()
        };
        let err = cmd_train(&other, dir.path(), Method::B1).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn report_without_artifacts_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let csv = cmd_report(dir.path()).unwrap();
        assert_eq!(csv, format!("{REPORT_COLUMNS}\n"));
    }

    #[test]
    fn training_knob_overrides_reuse_the_dataset() {
        let dir = tempfile::tempdir().unwrap();
        cmd_generate(&tiny_config(), dir.path()).unwrap();
        let retrain = tiny_config().overlaid("epochs = 2\nlearning_rate = 0.01\n").unwrap();
        let summary = cmd_train(&retrain, dir.path(), Method::B1).unwrap();
        assert_eq!(summary.epoch_losses.len(), 2);
    }
}
