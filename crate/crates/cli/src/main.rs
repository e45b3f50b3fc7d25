//! Command-line front end for the workload-recognition pipeline.

mod config;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;
use scvcnet::eval::{
    diagnostics_maps, run_case, seed_sweep, tune_hyperparams, CaseData, CASES,
};
use scvcnet::io;
use scvcnet::model::train;
use scvcnet::types::{DatabaseId, EpochFeatures};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_SELFTEST: u8 = 3;

#[derive(Parser)]
#[command(name = "scvcnet", about = "EEG cognitive-workload recognition pipeline")]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the kernel-initialization seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Accept feature files whose preprocessing hash does not match.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract feature files from raw recordings.
    Features,
    /// Train and evaluate cases, writing JSON reports and a summary CSV.
    Bench {
        #[arg(long, default_value = "all")]
        case: String,
        #[arg(long, default_value = "all")]
        paradigm: String,
        /// Tune (channels, C) on the validation split before evaluating.
        #[arg(long)]
        tune: bool,
    },
    /// Grid-search hyperparameters on a case's validation split.
    Tune {
        #[arg(long)]
        case: String,
        #[arg(long, default_value = "1")]
        paradigm: String,
    },
    /// Re-run cases over twenty seeds and report mean and std.
    SweepSeeds {
        #[arg(long, default_value = "all")]
        case: String,
        #[arg(long, default_value = "all")]
        paradigm: String,
    },
    /// Write averaged frequency-pair and channel-pair response maps.
    Maps {
        #[arg(long)]
        case: String,
        #[arg(long, default_value = "1")]
        paradigm: String,
    },
    /// Run the built-in verification suites on synthetic data.
    Selftest,
}

fn parse_cases(arg: &str) -> Result<Vec<u8>> {
    if arg == "all" {
        return Ok(CASES.iter().map(|c| c.case_id).collect());
    }
    let id: u8 = arg
        .parse()
        .map_err(|_| anyhow!("--case must be 1..6 or 'all', got '{arg}'"))?;
    if !(1..=6).contains(&id) {
        bail!("--case must be 1..6 or 'all', got '{arg}'");
    }
    Ok(vec![id])
}

fn parse_paradigms(arg: &str) -> Result<Vec<u8>> {
    match arg {
        "all" => Ok(vec![1, 2]),
        "1" => Ok(vec![1]),
        "2" => Ok(vec![2]),
        _ => bail!("--paradigm must be 1, 2, or 'all', got '{arg}'"),
    }
}

struct Features {
    nback: Vec<EpochFeatures>,
    stew: Vec<EpochFeatures>,
    eegmat: Vec<EpochFeatures>,
}

impl Features {
    fn data(&self) -> CaseData<'_> {
        CaseData {
            nback: &self.nback,
            stew: &self.stew,
            eegmat: &self.eegmat,
        }
    }
}

fn load_features(cfg: &RunConfig, force: bool) -> Result<Features> {
    let mut sets = Vec::new();
    for db in [DatabaseId::Nback, DatabaseId::Stew, DatabaseId::Eegmat] {
        let path = cfg.feature_path(db);
        if !path.exists() {
            bail!(
                "feature file '{}' not found; run `scvcnet features` first",
                path.display()
            );
        }
        let file = io::read_features(&path, Some(&cfg.preprocess), force)?;
        if file.database_id != db {
            bail!(
                "'{}' holds features for {}, expected {}",
                path.display(),
                file.database_id.as_str(),
                db.as_str()
            );
        }
        sets.push(file.epochs);
    }
    let mut it = sets.into_iter();
    Ok(Features {
        nback: it.next().unwrap(),
        stew: it.next().unwrap(),
        eegmat: it.next().unwrap(),
    })
}

fn cmd_features(cfg: &RunConfig) -> Result<()> {
    let mut wrote_any = false;
    for db in [DatabaseId::Nback, DatabaseId::Stew, DatabaseId::Eegmat] {
        let Some(root) = cfg.raw_root(db) else {
            continue;
        };
        let mut participants: Vec<PathBuf> = std::fs::read_dir(root)
            .with_context(|| format!("cannot read raw root '{}'", root.display()))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        participants.sort();
        if participants.is_empty() {
            bail!("raw root '{}' contains no participant directories", root.display());
        }
        let mut epochs = Vec::new();
        for dir in &participants {
            let pid = dir
                .file_name()
                .map(|n| n.to_string_lossy().to_string())
                .unwrap_or_default();
            let rec = io::load_recording(dir)?;
            epochs.extend(scvcnet::signal::extract_recording_epochs(
                &rec,
                db,
                &pid,
                &cfg.preprocess,
            )?);
        }
        let path = cfg.feature_path(db);
        io::write_features(&path, db, &epochs, &cfg.preprocess)?;
        println!(
            "{}: {} participants, {} epochs -> {}",
            db.as_str(),
            participants.len(),
            epochs.len(),
            path.display()
        );
        wrote_any = true;
    }
    if !wrote_any {
        bail!("no raw data roots configured; set paths.raw_* in the config file");
    }
    Ok(())
}

fn cmd_bench(cfg: &RunConfig, case: &str, paradigm: &str, tune: bool, force: bool) -> Result<()> {
    let features = load_features(cfg, force)?;
    let data = features.data();
    let dir = cfg.report_dir();
    let mut reports = Vec::new();
    for &case_id in &parse_cases(case)? {
        for &paradigm in &parse_paradigms(paradigm)? {
            let mut model_cfg = cfg.model.clone();
            if tune {
                model_cfg = tune_hyperparams(case_id, paradigm, &data, &cfg.tuning, &model_cfg)?;
                println!(
                    "case {case_id} paradigm {paradigm}: tuned c={} C={:.3e}",
                    model_cfg.channels, model_cfg.regularization
                );
            }
            let report = run_case(case_id, paradigm, &data, &model_cfg)?;
            let path = io::write_report(&dir, &report)?;
            println!(
                "case {case_id} paradigm {paradigm}: acc {:.4} f1 {:.4} -> {}",
                report.mean_acc,
                report.mean_f1,
                path.display()
            );
            reports.push(report);
        }
    }
    let refs: Vec<&_> = reports.iter().collect();
    let summary = io::append_summary(&dir, &refs)?;
    println!("summary -> {}", summary.display());
    Ok(())
}

fn cmd_tune(cfg: &RunConfig, case: &str, paradigm: &str, force: bool) -> Result<()> {
    let features = load_features(cfg, force)?;
    let data = features.data();
    let dir = cfg.report_dir();
    for &case_id in &parse_cases(case)? {
        for &paradigm in &parse_paradigms(paradigm)? {
            let tuned = tune_hyperparams(case_id, paradigm, &data, &cfg.tuning, &cfg.model)?;
            let path = dir.join(format!("tuned_case{case_id}_p{paradigm}.json"));
            io::write_atomic(&path, serde_json::to_string_pretty(&tuned)?.as_bytes())?;
            println!(
                "case {case_id} paradigm {paradigm}: c={} C={:.3e} -> {}",
                tuned.channels,
                tuned.regularization,
                path.display()
            );
        }
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, case: &str, paradigm: &str, force: bool) -> Result<()> {
    let features = load_features(cfg, force)?;
    let data = features.data();
    let dir = cfg.report_dir();
    let seeds: Vec<u64> = (1..=20).collect();
    for &case_id in &parse_cases(case)? {
        for &paradigm in &parse_paradigms(paradigm)? {
            let sweep = seed_sweep(case_id, paradigm, &data, &cfg.model, &seeds)?;
            let path = dir.join(format!("sweep_case{case_id}_p{paradigm}.json"));
            io::write_atomic(&path, serde_json::to_string_pretty(&sweep)?.as_bytes())?;
            println!(
                "case {case_id} paradigm {paradigm}: acc {:.4} +/- {:.4}, f1 {:.4} +/- {:.4} -> {}",
                sweep.mean_acc,
                sweep.std_acc,
                sweep.mean_f1,
                sweep.std_f1,
                path.display()
            );
        }
    }
    Ok(())
}

fn cmd_maps(cfg: &RunConfig, case: &str, paradigm: &str, force: bool) -> Result<()> {
    let features = load_features(cfg, force)?;
    let data = features.data();
    let dir = cfg.report_dir();
    for &case_id in &parse_cases(case)? {
        for &paradigm in &parse_paradigms(paradigm)? {
            let split = scvcnet::eval::build_case(case_id, paradigm, &data)?;
            let (bank, model) = train(&split.train, &cfg.model)?;
            let (freq_map, chan_map) = diagnostics_maps(
                &bank,
                &split.test,
                model.config.stride,
                model.config.cross_term,
            )?;
            let freq_path = dir.join(format!("freq_pair_map_case{case_id}_p{paradigm}.csv"));
            io::write_map_csv(
                &freq_path,
                &freq_map,
                &io::band_freq_labels(scvcnet::types::THETA_START_HZ),
                &io::band_freq_labels(scvcnet::types::ALPHA_START_HZ),
            )?;
            let chan_path = dir.join(format!("channel_pair_map_case{case_id}_p{paradigm}.csv"));
            io::write_map_csv(
                &chan_path,
                &chan_map,
                &io::channel_labels(),
                &io::channel_labels(),
            )?;
            println!(
                "case {case_id} paradigm {paradigm}: {} and {}",
                freq_path.display(),
                chan_path.display()
            );
        }
    }
    Ok(())
}

fn cmd_selftest() -> ExitCode {
    let start = std::time::Instant::now();
    let results = selftest::run_all();
    let mut failures = Vec::new();
    for r in &results {
        println!(
            "{}: {} ({})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        if !r.pass {
            failures.push(r.name);
        }
    }
    println!(
        "{}/{} suites passed in {:.1} s",
        results.len() - failures.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed suites: {}", failures.join(", "));
        ExitCode::from(EXIT_SELFTEST)
    }
}

fn apply_overrides(cfg: &mut RunConfig, seed: Option<u64>) {
    if let Some(seed) = seed {
        cfg.model.seed = seed;
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are successful exits.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    if let Command::Selftest = cli.command {
        return cmd_selftest();
    }
    let mut cfg = match RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    apply_overrides(&mut cfg, cli.seed);
    let result = match &cli.command {
        Command::Features => cmd_features(&cfg),
        Command::Bench { case, paradigm, tune } => {
            cmd_bench(&cfg, case, paradigm, *tune, cli.force)
        }
        Command::Tune { case, paradigm } => cmd_tune(&cfg, case, paradigm, cli.force),
        Command::SweepSeeds { case, paradigm } => cmd_sweep(&cfg, case, paradigm, cli.force),
        Command::Maps { case, paradigm } => cmd_maps(&cfg, case, paradigm, cli.force),
        Command::Selftest => unreachable!(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // Flag-shaped mistakes are usage errors; everything else is a
            // data error.
            let msg = format!("{e}");
            if msg.starts_with("--") || msg.contains("config") {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_DATA)
            }
        }
    }
}
