//! Run configuration: a TOML file naming the data inputs, the translation
//! backend, analysis settings and the output directory, plus the handful of
//! command-line overrides layered on top.
//!
//! Every relative path in the file resolves against the directory containing
//! the config file, so a run is reproducible from any working directory.
//! Paths given on the command line resolve against the working directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::translator::BackendConfig;

/// Which translation backend a run uses.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendChoice {
    /// Replay a recorded snapshot; never touches the network.
    Fixture { snapshot: PathBuf },
    /// Query a live HTTP endpoint through the persistent cache.
    Live(BackendConfig),
}

impl BackendChoice {
    pub fn kind(&self) -> BackendKind {
        match self {
            BackendChoice::Fixture { .. } => BackendKind::Fixture,
            BackendChoice::Live(_) => BackendKind::Live,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Fixture,
}

impl std::str::FromStr for BackendKind {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "live" => Ok(BackendKind::Live),
            "fixture" => Ok(BackendKind::Fixture),
            other => Err(AuditError::Config(format!(
                "unknown backend {other:?}; expected \"live\" or \"fixture\""
            ))),
        }
    }
}

/// Locations of the shipped data files.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPaths {
    pub occupations: PathBuf,
    pub categories: PathBuf,
    pub adjectives: PathBuf,
    pub exclusions: PathBuf,
    pub lexicon: PathBuf,
    pub registry: PathBuf,
}

/// Fully resolved configuration for one audit run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataPaths,
    pub backend: BackendChoice,
    /// Significance level for every hypothesis test, in (0, 1).
    pub alpha: f64,
    /// Language codes to audit; empty means every included language.
    pub languages: Vec<String>,
    /// Occupation categories to audit; empty means all of them.
    pub categories: Vec<String>,
    pub out_dir: PathBuf,
    /// The pipeline draws no random numbers; the flag asserts that promise
    /// and must be true.
    pub random_free: bool,
}

/// Command-line overrides applied after the file is read.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub backend: Option<BackendKind>,
    pub snapshot: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub languages: Option<Vec<String>>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    data: RawData,
    backend: RawBackend,
    #[serde(default)]
    analysis: RawAnalysis,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    occupations: PathBuf,
    categories: PathBuf,
    adjectives: PathBuf,
    exclusions: PathBuf,
    lexicon: PathBuf,
    registry: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBackend {
    kind: BackendKind,
    snapshot: Option<PathBuf>,
    live: Option<RawLive>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLive {
    endpoint: String,
    credential_env: String,
    #[serde(default = "default_max_concurrent")]
    max_concurrent: usize,
    #[serde(default = "default_requests_per_second")]
    requests_per_second: u32,
    #[serde(default = "default_retry_budget")]
    retry_budget: u32,
    #[serde(default = "default_retry_base_ms")]
    retry_base_ms: u64,
    cache: PathBuf,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    alpha: Option<f64>,
    #[serde(default)]
    languages: Vec<String>,
    #[serde(default)]
    categories: Vec<String>,
    random_free: Option<bool>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

fn default_max_concurrent() -> usize {
    4
}
fn default_requests_per_second() -> u32 {
    8
}
fn default_retry_budget() -> u32 {
    3
}
fn default_retry_base_ms() -> u64 {
    250
}

pub const DEFAULT_ALPHA: f64 = 0.05;

impl RunConfig {
    /// Reads and resolves a config file, then applies the overrides.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AuditError::Config(format!("{}: {e}", path.display())))?;
        let raw: RawConfig = toml::from_str(&text)
            .map_err(|e| AuditError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &Path| -> PathBuf {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let data = DataPaths {
            occupations: resolve(&raw.data.occupations),
            categories: resolve(&raw.data.categories),
            adjectives: resolve(&raw.data.adjectives),
            exclusions: resolve(&raw.data.exclusions),
            lexicon: resolve(&raw.data.lexicon),
            registry: resolve(&raw.data.registry),
        };

        let kind = overrides.backend.unwrap_or(raw.backend.kind);
        let snapshot = overrides
            .snapshot
            .clone()
            .or_else(|| raw.backend.snapshot.as_deref().map(resolve));
        let backend = match kind {
            BackendKind::Fixture => {
                let snapshot = snapshot.ok_or_else(|| {
                    AuditError::Config(
                        "fixture backend needs a snapshot path (backend.snapshot or --snapshot)"
                            .into(),
                    )
                })?;
                BackendChoice::Fixture { snapshot }
            }
            BackendKind::Live => {
                let live = raw.backend.live.as_ref().ok_or_else(|| {
                    AuditError::Config("live backend needs a [backend.live] section".into())
                })?;
                BackendChoice::Live(BackendConfig {
                    endpoint: live.endpoint.clone(),
                    credential_env: live.credential_env.clone(),
                    max_concurrent: live.max_concurrent,
                    requests_per_second: live.requests_per_second,
                    retry_budget: live.retry_budget,
                    retry_base_ms: live.retry_base_ms,
                    cache_path: resolve(&live.cache),
                })
            }
        };

        let alpha = overrides
            .alpha
            .or(raw.analysis.alpha)
            .unwrap_or(DEFAULT_ALPHA);
        let languages = overrides
            .languages
            .clone()
            .unwrap_or(raw.analysis.languages);
        let out_dir = overrides
            .out_dir
            .clone()
            .or_else(|| raw.output.dir.as_deref().map(resolve))
            .unwrap_or_else(|| base.join("out"));

        let config = RunConfig {
            data,
            backend,
            alpha,
            languages,
            categories: raw.analysis.categories,
            out_dir,
            random_free: raw.analysis.random_free.unwrap_or(true),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(AuditError::Config(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            )));
        }
        if !self.random_free {
            return Err(AuditError::Config(
                "random_free must be true: the pipeline draws no random numbers".into(),
            ));
        }
        if let BackendChoice::Live(live) = &self.backend {
            live.validate()?;
        }
        Ok(())
    }

    /// The file whose digest identifies this run's translation source: the
    /// snapshot for fixture runs, the cache for live runs.
    pub fn translation_source_path(&self) -> &Path {
        match &self.backend {
            BackendChoice::Fixture { snapshot } => snapshot,
            BackendChoice::Live(live) => &live.cache_path,
        }
    }
}

/// The resolved settings echoed into the run manifest. The output directory
/// is deliberately left out so relocating a run does not change its manifest.
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub backend: BackendKind,
    pub alpha: f64,
    pub languages: Vec<String>,
    pub categories: Vec<String>,
    pub random_free: bool,
}

impl ConfigEcho {
    pub fn of(config: &RunConfig) -> ConfigEcho {
        ConfigEcho {
            backend: config.backend.kind(),
            alpha: config.alpha,
            languages: config.languages.clone(),
            categories: config.categories.clone(),
            random_free: config.random_free,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("audit.toml");
        std::fs::write(&path, body).unwrap();
        path
    }

    const MINIMAL: &str = r#"
[data]
occupations = "data/occupations.tsv"
categories = "data/categories.tsv"
adjectives = "data/adjectives.txt"
exclusions = "data/exclusions.txt"
lexicon = "data/lexicon.txt"
registry = "data/languages.toml"

[backend]
kind = "fixture"
snapshot = "fixtures/snapshot.tsv"
"#;

    #[test]
    fn resolves_paths_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), MINIMAL);
        let config = RunConfig::load(&path, &Overrides::default()).unwrap();
        assert_eq!(config.data.occupations, dir.path().join("data/occupations.tsv"));
        assert_eq!(
            config.backend,
            BackendChoice::Fixture {
                snapshot: dir.path().join("fixtures/snapshot.tsv")
            }
        );
        assert_eq!(config.alpha, 0.05);
        assert!(config.languages.is_empty());
        assert_eq!(config.out_dir, dir.path().join("out"));
        assert!(config.random_free);
    }

    #[test]
    fn overrides_take_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), MINIMAL);
        let overrides = Overrides {
            alpha: Some(0.005),
            languages: Some(vec!["hu".into(), "eu".into()]),
            out_dir: Some(PathBuf::from("/tmp/elsewhere")),
            snapshot: Some(PathBuf::from("/tmp/other-snapshot.tsv")),
            backend: None,
        };
        let config = RunConfig::load(&path, &overrides).unwrap();
        assert_eq!(config.alpha, 0.005);
        assert_eq!(config.languages, vec!["hu".to_string(), "eu".to_string()]);
        assert_eq!(config.out_dir, PathBuf::from("/tmp/elsewhere"));
        assert_eq!(
            config.backend,
            BackendChoice::Fixture {
                snapshot: PathBuf::from("/tmp/other-snapshot.tsv")
            }
        );
    }

    #[test]
    fn live_backend_requires_its_section() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), MINIMAL);
        let overrides = Overrides {
            backend: Some(BackendKind::Live),
            ..Overrides::default()
        };
        let err = RunConfig::load(&path, &overrides).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("backend.live"));
    }

    #[test]
    fn live_section_parses() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "{MINIMAL}
[backend.live]
endpoint = \"https://translate.example/v2\"
credential_env = \"AUDIT_TOKEN\"
cache = \"cache/translations.tsv\"
"
        );
        let path = write_config(dir.path(), &body);
        let overrides = Overrides {
            backend: Some(BackendKind::Live),
            ..Overrides::default()
        };
        let config = RunConfig::load(&path, &overrides).unwrap();
        let BackendChoice::Live(live) = &config.backend else {
            panic!("expected live backend");
        };
        assert_eq!(live.credential_env, "AUDIT_TOKEN");
        assert_eq!(live.max_concurrent, 4);
        assert_eq!(live.cache_path, dir.path().join("cache/translations.tsv"));
    }

    #[test]
    fn rejects_random_dependence_and_bad_alpha() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{MINIMAL}\n[analysis]\nrandom_free = false\n");
        let path = write_config(dir.path(), &body);
        let err = RunConfig::load(&path, &Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("random_free"));

        let path = write_config(dir.path(), MINIMAL);
        let overrides = Overrides {
            alpha: Some(1.0),
            ..Overrides::default()
        };
        let err = RunConfig::load(&path, &overrides).unwrap_err();
        assert!(err.to_string().contains("alpha"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{MINIMAL}\ntypo_section = 1\n");
        let path = write_config(dir.path(), &body);
        let err = RunConfig::load(&path, &Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
