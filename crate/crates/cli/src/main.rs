//! Pipeline driver: generate synthetic events, extract modal features, run
//! the fold/split/step robustness protocol, and summarize percentile AUC.
//!
//! All subcommands share four flags: `--config` (JSON run configuration),
//! `--out` (artifact directory), `--seed` (master-seed override), and
//! `--jobs` (worker-thread count, wall time only — outputs are identical at
//! any parallelism). Each subcommand writes the fully resolved
//! configuration it acted on next to its outputs. Exit codes: 0 success,
//! 2 configuration errors, 1 runtime or IO failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ringdown::config::RunConfig;
use ringdown::dataset::{
    read_events, read_features, write_events, write_features, Channel, EventClass,
};
use ringdown::experiment::{
    aggregate, read_results, run_plan, write_aggregates, write_failures, write_results,
    write_timings, AggregateRow,
};
use ringdown::modal::{extract_features, EventRecon};
use ringdown::synth::generate_dataset;
use ringdown::{Error, Result};

/// Synthetic-event identification pipeline.
#[derive(Parser)]
#[command(name = "ringdown", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for all artifacts (created if absent).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic labeled event corpus.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Extract modal features from a generated event set.
    Extract {
        #[command(flatten)]
        common: Common,
        /// Event manifest to read (default: <out>/events/manifest.json).
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Run the fold/split/step protocol over a feature table.
    Run {
        #[command(flatten)]
        common: Common,
        /// Feature table to read (default: <out>/features.csv).
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Aggregate results into percentile summaries.
    Report {
        #[command(flatten)]
        common: Common,
        /// Results table to read (default: <out>/results.csv).
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2u8 } else { 1u8 })
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate { common } => cmd_generate(&common),
        Command::Extract { common, events } => cmd_extract(&common, events.as_deref()),
        Command::Run { common, features } => cmd_run(&common, features.as_deref()),
        Command::Report { common, results } => cmd_report(&common, results.as_deref()),
    }
}

/// Loads, overrides, and validates the configuration, creates the output
/// directory, applies the `--jobs` hint, and echoes the effective
/// configuration next to the outputs.
fn prepare(common: &Common, subcommand: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.plan.master_seed = seed;
    }
    cfg.validate()?;
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        // Ignore the error from configuring twice (tests call in-process).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    fs::create_dir_all(&common.out)
        .map_err(|e| Error::io(common.out.display().to_string(), e))?;
    let echo = common.out.join(format!("effective_config_{subcommand}.json"));
    fs::write(&echo, cfg.to_pretty_json()?)
        .map_err(|e| Error::io(echo.display().to_string(), e))?;
    Ok(cfg)
}

fn cmd_generate(common: &Common) -> Result<()> {
    let cfg = prepare(common, "generate")?;
    let records = generate_dataset(&cfg.generator, &cfg.signatures, cfg.plan.master_seed)?;
    let events_dir = common.out.join("events");
    let manifest = write_events(&events_dir, &records)?;
    for class in EventClass::ALL {
        let count = records
            .iter()
            .filter(|r| r.class == Some(class))
            .count();
        println!("{}: {count}", class.name());
    }
    println!("total: {} events -> {}", records.len(), manifest.display());
    Ok(())
}

fn cmd_extract(common: &Common, events: Option<&Path>) -> Result<()> {
    let cfg = prepare(common, "extract")?;
    let default_manifest = common.out.join("events").join("manifest.json");
    let manifest = events.unwrap_or(&default_manifest);
    let records = read_events(manifest)?;
    let (features, recon) = extract_features(&records, &cfg.extraction)?;
    let features_path = common.out.join("features.csv");
    write_features(&features_path, &features)?;
    let recon_path = common.out.join("recon.csv");
    write_recon(&recon_path, &recon)?;
    let padded = recon.iter().filter(|r| r.padded).count();
    println!(
        "{} events -> {} feature columns ({} with fewer than p modes) -> {}",
        features.len(),
        features.dim(),
        padded,
        features_path.display()
    );
    Ok(())
}

/// Writes the per-event reconstruction-error sidecar: mean and max relative
/// error per channel plus the padding flag.
fn write_recon(path: &Path, recon: &[EventRecon]) -> Result<()> {
    let mut text = String::from("event_id");
    for ch in Channel::ALL {
        text.push_str(&format!(",{0}_mean_err,{0}_max_err", ch.tag()));
    }
    text.push_str(",padded\n");
    for row in recon {
        text.push_str(&row.event_id);
        for (mean, max) in row.channel_err {
            text.push_str(&format!(",{mean:.6e},{max:.6e}"));
        }
        text.push_str(if row.padded { ",true\n" } else { ",false\n" });
    }
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn cmd_run(common: &Common, features: Option<&Path>) -> Result<()> {
    let cfg = prepare(common, "run")?;
    let default_features = common.out.join("features.csv");
    let features_path = features.unwrap_or(&default_features);
    let table = read_features(features_path)?;

    let results_path = common.out.join("results.csv");
    let existing = if results_path.exists() {
        read_results(&results_path)?
    } else {
        Vec::new()
    };
    let carried = existing.len();

    let out = run_plan(&table, &cfg.plan, &existing, &|done, total| {
        eprintln!("fold/split block {done}/{total}");
    })?;
    println!(
        "protocol: n_D = {}, n_V = {}, n_T = {}, n_U = {}, n_S = {}",
        out.sizes.n_d, out.sizes.n_v, out.sizes.n_t, out.sizes.n_u, out.sizes.n_s
    );

    write_results(&results_path, &out.results)?;
    write_timings(&common.out.join("timings.csv"), &out.results)?;
    write_failures(&common.out.join("failures.csv"), &out.failures)?;
    println!(
        "{} result rows ({} carried over), {} failed cells -> {}",
        out.results.len(),
        carried.min(out.results.len()),
        out.failures.len(),
        results_path.display()
    );
    Ok(())
}

fn cmd_report(common: &Common, results: Option<&Path>) -> Result<()> {
    prepare(common, "report")?;
    let default_results = common.out.join("results.csv");
    let results_path = results.unwrap_or(&default_results);
    let rows = read_results(results_path)?;
    if rows.is_empty() {
        return Err(Error::Format(format!(
            "{}: no result rows to report",
            results_path.display()
        )));
    }
    let aggregates = aggregate(&rows);
    let agg_path = common.out.join("aggregates.csv");
    write_aggregates(&agg_path, &aggregates)?;
    print_summary(&aggregates);
    println!("aggregates -> {}", agg_path.display());
    Ok(())
}

/// Prints per-combination 5th-percentile AUC at the first and final steps
/// and flags the best final-step combination.
fn print_summary(aggregates: &[AggregateRow]) {
    let s_last = aggregates.iter().map(|a| a.s).max().unwrap_or(0);
    println!(
        "{:<16} {:<11} {:>9} {:>14} {:>8}",
        "engine", "classifier", "p5 @ s=0", "p5 @ final s", "delta"
    );
    let mut best: Option<&AggregateRow> = None;
    // Aggregates arrive sorted by (engine, classifier, s), so the first and
    // final steps of a combination can be paired in one pass.
    let mut first_of_combo: Option<&AggregateRow> = None;
    for row in aggregates {
        if first_of_combo
            .map(|f| (&f.engine, &f.classifier) != (&row.engine, &row.classifier))
            .unwrap_or(true)
        {
            first_of_combo = Some(row);
        }
        if row.s == s_last {
            let first = first_of_combo.expect("combo has a first row");
            println!(
                "{:<16} {:<11} {:>9.4} {:>14.4} {:>+8.4}",
                row.engine,
                row.classifier,
                first.p5_auc,
                row.p5_auc,
                row.p5_auc - first.p5_auc
            );
            if best.map(|b| row.p5_auc > b.p5_auc).unwrap_or(true) {
                best = Some(row);
            }
        }
    }
    if let Some(b) = best {
        println!(
            "best at final step: {}+{} (p5 AUC {:.4} over {} cells)",
            b.engine, b.classifier, b.p5_auc, b.n_cells
        );
    }
}
