//! `csi-lab`: dataset synthesis, training, tiered evaluation, the benchmark
//! table, and the gradient-check runner.
//!
//! Exit codes: 0 ok, 1 usage error, 2 data error, 3 training divergence.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use csi_core::csinet::{
    checkpoint_bytes, full_model_gradcheck, predict, read_checkpoint, ModelConfig,
};
use csi_core::harness::{
    eval_tier, mean_sd, render_curves_tsv, render_markdown, render_sweep_tsv, render_tsv,
    run_bench, split_features, train_model, Ablation, EvalMethods, RunConfig,
};
use csi_core::io::{read_dataset_dir, write_dataset_dir, BundleManifest, SplitFile};
use csi_core::pipeline::segment_features;
use csi_core::rng::derive_seed;
use csi_core::synth::{
    generate_dataset, radial_tangential_correlation, Dataset, DatasetSpec, NoiseTier, Segment,
    SegmentRecord,
};
use csi_core::Error;

#[derive(Parser)]
#[command(name = "csi-lab", version, about = "Cross-modal command source identification lab")]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Run configuration JSON; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeds (0..N) overriding the configured seed list.
    #[arg(long)]
    seeds: Option<u64>,
    /// Window scales as an inclusive range "5:20".
    #[arg(long)]
    windows: Option<String>,
    /// Ablation: no_film | no_fusion | single_window=W | time_domain.
    #[arg(long)]
    ablation: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory of segment bundles.
    Synth {
        #[command(flatten)]
        common: CommonOpts,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a dataset directory and write a checkpoint.
    Train {
        #[command(flatten)]
        common: CommonOpts,
        /// Dataset directory produced by `synth`.
        #[arg(long)]
        dataset: PathBuf,
        /// Output model directory (checkpoint.bin, model.json, curves.tsv).
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a method on the held-out split at a desync tier.
    Eval {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        dataset: PathBuf,
        /// Model directory from `train` (unused by spectral_cosine).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Tier: clean | t1 | t2 | t3.
        #[arg(long, default_value = "clean")]
        tier: String,
        /// Method: csinet | time_domain | linear | xcorr | dtw | spectral_cosine.
        #[arg(long, default_value = "csinet")]
        method: String,
    },
    /// Full benchmark: all methods × tiers plus the window sweep.
    Bench {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        out: PathBuf,
        /// Skip the single-window sweep.
        #[arg(long, default_value_t = false)]
        no_sweep: bool,
        /// Skip the quality-modulation ablation.
        #[arg(long, default_value_t = false)]
        no_film_ablation: bool,
    },
    /// Full-model finite-difference gradient check.
    Gradcheck {
        /// Relative-error tolerance.
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) => 1,
        Error::Divergence(_) => 3,
        _ => 2,
    }
}

fn parse_windows(spec: &str) -> Result<Vec<usize>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    let err = || Error::InvalidArgument(format!("bad --windows '{spec}', expected LO:HI"));
    if parts.len() != 2 {
        return Err(err());
    }
    let lo: usize = parts[0].parse().map_err(|_| err())?;
    let hi: usize = parts[1].parse().map_err(|_| err())?;
    if lo < 2 || hi < lo {
        return Err(err());
    }
    Ok((lo..=hi).collect())
}

fn load_config(common: &CommonOpts, default: RunConfig) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::InvalidArgument(format!("bad config file: {e}")))?,
        None => default,
    };
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
        cfg.dataset.seed = seed;
        cfg.train.seed = seed;
    }
    if let Some(n) = common.seeds {
        cfg.seeds = (0..n).collect();
    }
    if let Some(w) = &common.windows {
        cfg.model.windows = parse_windows(w)?;
        cfg.sweep_windows.retain(|w| cfg.model.windows.contains(w));
    }
    if let Some(ab) = &common.ablation {
        let ablation = Ablation::parse(ab)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ablation '{ab}'")))?;
        ablation.apply(&mut cfg.model);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_synth(common: &CommonOpts, out: &Path) -> Result<(), Error> {
    let cfg = load_config(common, RunConfig::default())?;
    let dataset = generate_dataset(&cfg.dataset)?;
    write_dataset_dir(out, &dataset)?;
    println!(
        "dataset: {} segments ({} train / {} val / {} test), {} subjects",
        dataset.records.len(),
        dataset.train.len(),
        dataset.val.len(),
        dataset.test.len(),
        cfg.dataset.n_subjects
    );
    println!("generator self-check (radial vs tangential speed correlation, 3-6 m):");
    let mut all_ok = true;
    for (class, rho) in
        radial_tangential_correlation(104, cfg.dataset.flow_noise_base, cfg.dataset.seed)
    {
        let ok = rho > 0.9;
        all_ok &= ok;
        println!("  {:<10} ρ = {rho:.4} {}", class.name(), if ok { "ok" } else { "LOW" });
    }
    if !all_ok {
        return Err(Error::InvalidData("generator self-check below 0.9".into()));
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Rebuilds the in-memory dataset view from a dataset directory.
fn load_dataset(dir: &Path) -> Result<(Dataset, Vec<BundleManifest>), Error> {
    let (pairs, split) = read_dataset_dir(dir)?;
    let SplitFile { train, val, test } = split;
    let ids: Vec<String> =
        train.iter().chain(&val).chain(&test).cloned().collect();
    let mut records = Vec::with_capacity(pairs.len());
    let mut manifests = Vec::with_capacity(pairs.len());
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, ((segment, manifest), id)) in pairs.into_iter().zip(ids).enumerate() {
        index.insert(id, i);
        records.push(SegmentRecord { segment, subject: manifest.subject });
        manifests.push(manifest);
    }
    let lookup = |names: &[String]| -> Vec<usize> {
        names.iter().filter_map(|n| index.get(n).copied()).collect()
    };
    let dataset = Dataset {
        spec: DatasetSpec::default(),
        profiles: Vec::new(),
        records,
        train: lookup(&train),
        val: lookup(&val),
        test: lookup(&test),
    };
    Ok((dataset, manifests))
}

fn cmd_train(common: &CommonOpts, dataset_dir: &Path, out: &Path) -> Result<(), Error> {
    let cfg = load_config(common, RunConfig::default())?;
    let (dataset, _) = load_dataset(dataset_dir)?;
    if dataset.train.is_empty() {
        return Err(Error::InvalidData("dataset has no training split".into()));
    }
    let feats = split_features(&dataset, &cfg.model.windows, cfg.model.feature_mode)?;
    let seed = *cfg.seeds.first().unwrap_or(&0);
    let output = train_model(&cfg.model, &cfg.train, &feats, seed)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("checkpoint.bin"), checkpoint_bytes(&output.params))?;
    fs::write(out.join("model.json"), serde_json::to_string_pretty(&cfg.model)?)?;
    fs::write(out.join("curves.tsv"), render_curves_tsv(&output.curves))?;
    println!(
        "trained {} epochs, best val accuracy {:.2}% at epoch {}{}",
        output.curves.len(),
        100.0 * output.best_val_accuracy,
        output.best_epoch,
        if output.stopped_early { " (early stop)" } else { "" }
    );
    println!("wrote {}", out.join("checkpoint.bin").display());
    Ok(())
}

fn load_model(dir: &Path) -> Result<(csi_core::autodiff::ParamStore, ModelConfig), Error> {
    let model_cfg: ModelConfig = serde_json::from_str(&fs::read_to_string(dir.join("model.json"))?)
        .map_err(|e| Error::InvalidData(format!("bad model.json: {e}")))?;
    let bytes = fs::read(dir.join("checkpoint.bin"))?;
    let params = read_checkpoint(bytes.as_slice(), &model_cfg)?;
    Ok((params, model_cfg))
}

fn cmd_eval(
    common: &CommonOpts,
    dataset_dir: &Path,
    model_dir: Option<&Path>,
    tier_name: &str,
    method: &str,
) -> Result<(), Error> {
    let cfg = load_config(common, RunConfig::default())?;
    let tier = NoiseTier::from_name(tier_name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown tier '{tier_name}'")))?;
    if !["csinet", "time_domain", "linear", "xcorr", "dtw", "spectral_cosine"].contains(&method) {
        return Err(Error::InvalidArgument(format!("unknown method '{method}'")));
    }
    let needs_model = method != "spectral_cosine";
    if needs_model && model_dir.is_none() {
        return Err(Error::InvalidArgument(format!("method '{method}' requires --model DIR")));
    }

    let (dataset, _) = load_dataset(dataset_dir)?;
    if dataset.test.is_empty() {
        return Err(Error::InvalidData("dataset has no test split".into()));
    }

    let loaded = match model_dir {
        Some(dir) => Some(load_model(dir)?),
        None => None,
    };

    let mut per_seed = Vec::new();
    let mut band_rows: Vec<(usize, f64, usize)> = Vec::new();
    for &seed in &cfg.seeds {
        let methods = match method {
            "csinet" => {
                let (params, mc) = loaded.as_ref().unwrap();
                EvalMethods { csinet: Some((params, mc)), ..Default::default() }
            }
            "time_domain" => {
                let (params, mc) = loaded.as_ref().unwrap();
                EvalMethods { time_domain: Some((params, mc)), ..Default::default() }
            }
            "linear" | "xcorr" | "dtw" => {
                let (params, mc) = loaded.as_ref().unwrap();
                EvalMethods {
                    time_domain: Some((params, mc)),
                    with_prealign: true,
                    ..Default::default()
                }
            }
            "spectral_cosine" => EvalMethods {
                spectral_cosine: Some(cfg.model.windows.clone()),
                ..Default::default()
            },
            other => {
                return Err(Error::InvalidArgument(format!("unknown method '{other}'")));
            }
        };
        let results = eval_tier(&dataset, tier, derive_seed(seed, 0xe7a1), &methods)?;
        let records = results
            .get(method)
            .ok_or_else(|| Error::InvalidData(format!("method '{method}' produced no records")))?;
        per_seed.push(csi_core::harness::accuracy(records));
        if band_rows.is_empty() {
            band_rows = csi_core::harness::accuracy_per_band(records, &cfg.band_edges);
        }
    }
    let stats = mean_sd(&per_seed);
    println!(
        "{method} @ {tier_name}: accuracy {:.2}% ± {:.2} over {} seed(s), {} test segments",
        100.0 * stats.mean,
        100.0 * stats.sd,
        stats.n,
        dataset.test.len()
    );
    for (b, acc, n) in band_rows {
        println!(
            "  band {:>2}: {:.0}-{:.0} m  {:.2}%  (n={n}, first seed)",
            b,
            cfg.band_edges[b],
            cfg.band_edges[b + 1],
            100.0 * acc
        );
    }
    Ok(())
}

fn cmd_bench(
    common: &CommonOpts,
    out: &Path,
    no_sweep: bool,
    no_film_ablation: bool,
) -> Result<(), Error> {
    let mut cfg = load_config(common, RunConfig::benchmark())?;
    if no_sweep {
        cfg.sweep_windows.clear();
    }
    let report = run_bench(&cfg, !no_film_ablation)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("bench.md"), render_markdown(&report))?;
    fs::write(out.join("bench.tsv"), render_tsv(&report))?;
    if let Some(sweep) = render_sweep_tsv(&report) {
        fs::write(out.join("window_sweep.tsv"), sweep)?;
    }
    fs::write(out.join("curves.tsv"), render_curves_tsv(&report.curves))?;
    fs::write(out.join("config.json"), serde_json::to_string_pretty(&report.config)?)?;
    println!("{}", render_markdown(&report));
    println!("wrote report to {}", out.display());
    Ok(())
}

fn cmd_gradcheck(tolerance: f64) -> Result<(), Error> {
    let report = full_model_gradcheck(tolerance, None)?;
    for g in &report.groups {
        println!(
            "{} {:<22} max rel err {:.3e}",
            if g.passed { "PASS" } else { "FAIL" },
            g.name,
            g.max_rel_err
        );
    }
    if report.passed() {
        println!("gradcheck: all {} parameter groups pass at {tolerance:.0e}", report.groups.len());
        Ok(())
    } else {
        Err(Error::InvalidData("gradient check failed".into()))
    }
}

/// Trivial smoke: `predict` is reachable from the CLI crate (used by tests).
#[allow(dead_code)]
fn _touch(segment: &Segment) -> Result<(), Error> {
    let cfg = ModelConfig::tiny();
    let params = csi_core::csinet::init_params(&cfg, 0)?;
    let feats = segment_features(segment, &cfg.windows, cfg.feature_mode)?;
    let _ = predict(&feats, &params, &cfg)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match CliArgs::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path with exit 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Synth { common, out } => cmd_synth(common, out),
        Command::Train { common, dataset, out } => cmd_train(common, dataset, out),
        Command::Eval { common, dataset, model, tier, method } => {
            cmd_eval(common, dataset, model.as_deref(), tier, method)
        }
        Command::Bench { common, out, no_sweep, no_film_ablation } => {
            cmd_bench(common, out, *no_sweep, *no_film_ablation)
        }
        Command::Gradcheck { tolerance } => cmd_gradcheck(*tolerance),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
