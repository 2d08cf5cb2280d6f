//! Command-line front end: argument parsing, config/override resolution and
//! dispatch to the pipeline stages and snapshot utilities.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use mtaudit::config::{BackendKind, Overrides, RunConfig};
use mtaudit::report;
use mtaudit::translator::TranslationStore;
use mtaudit::{AuditError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "mtaudit",
    version,
    about = "Audit pronominal gender bias in a machine-translation backend"
)]
pub struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration file.
    #[arg(long, default_value = "audit.toml", global = true)]
    config: PathBuf,

    /// Override the configured backend: live or fixture.
    #[arg(long, global = true)]
    backend: Option<String>,

    /// Override the fixture snapshot path.
    #[arg(long, global = true)]
    snapshot: Option<PathBuf>,

    /// Override the significance level, strictly between 0 and 1.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Comma-separated language codes to audit (default: all included).
    #[arg(long, global = true, value_delimiter = ',')]
    languages: Option<Vec<String>>,

    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline: ingest, probes, translate, classify, stats, report.
    Run,
    /// Load and validate the corpus files; write the canonical stage copy.
    Ingest,
    /// Instantiate probe sentences for every word, language and template.
    Probes,
    /// Translate probe sentences through the configured backend.
    Translate,
    /// Classify the pronominal gender of each translated sentence.
    Classify,
    /// Aggregate labels into tables, test matrices and plot data.
    Stats,
    /// Cross-check stage counts and write the run manifest.
    Report,
    /// Move recorded translations between caches and snapshot files.
    Snapshot {
        #[command(subcommand)]
        action: SnapshotAction,
    },
}

#[derive(Debug, Subcommand)]
enum SnapshotAction {
    /// Write the configured translation source as a sorted snapshot file.
    Export {
        /// Destination snapshot path.
        #[arg(long)]
        to: PathBuf,
    },
    /// Merge a snapshot file into the configured translation source.
    Import {
        /// Source snapshot path.
        #[arg(long)]
        from: PathBuf,
    },
}

impl Common {
    fn overrides(&self) -> Result<Overrides> {
        let backend = match &self.backend {
            Some(raw) => Some(raw.parse::<BackendKind>()?),
            None => None,
        };
        Ok(Overrides {
            backend,
            snapshot: self.snapshot.clone(),
            alpha: self.alpha,
            languages: self.languages.clone(),
            out_dir: self.out.clone(),
        })
    }
}

fn run_stage(config: &RunConfig, name: &'static str) -> Result<()> {
    let (_, stage) = report::STAGES
        .iter()
        .find(|(n, _)| *n == name)
        .expect("stage names are static");
    let detail = stage(config).map_err(|e| AuditError::stage(name, e))?;
    eprintln!("mtaudit: stage {name}: {detail}");
    Ok(())
}

fn snapshot_export(config: &RunConfig, to: &Path) -> Result<()> {
    let source = config.translation_source_path();
    let store = TranslationStore::load_snapshot(source)?;
    store.export_snapshot(to)?;
    eprintln!(
        "mtaudit: exported {} records from {} to {}",
        store.len(),
        source.display(),
        to.display()
    );
    Ok(())
}

fn snapshot_import(config: &RunConfig, from: &Path) -> Result<()> {
    let source = TranslationStore::load_snapshot(from)?;
    let dest_path = config.translation_source_path();
    let mut dest = TranslationStore::open(dest_path)?;
    let mut added = 0usize;
    for (key, value) in source.entries_sorted() {
        if dest.get(key).is_none() {
            dest.insert(key.clone(), value.clone())?;
            added += 1;
        }
    }
    eprintln!(
        "mtaudit: imported {added} new records ({} total) into {}",
        dest.len(),
        dest_path.display()
    );
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let overrides = cli.common.overrides()?;
    let config = RunConfig::load(&cli.common.config, &overrides)?;
    match cli.command {
        Command::Run => {
            for (name, detail) in report::run_audit(&config)? {
                eprintln!("mtaudit: stage {name}: {detail}");
            }
            println!("{}", config.out_dir.display());
            Ok(())
        }
        Command::Ingest => run_stage(&config, "ingest"),
        Command::Probes => run_stage(&config, "probes"),
        Command::Translate => run_stage(&config, "translate"),
        Command::Classify => run_stage(&config, "classify"),
        Command::Stats => run_stage(&config, "stats"),
        Command::Report => run_stage(&config, "report"),
        Command::Snapshot { action } => match action {
            SnapshotAction::Export { to } => snapshot_export(&config, &to),
            SnapshotAction::Import { from } => snapshot_import(&config, &from),
        },
    }
}
