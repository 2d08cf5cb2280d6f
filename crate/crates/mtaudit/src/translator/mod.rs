//! Pluggable translation access with a persistent cache.
//!
//! Every request is answered from the store when possible; only misses reach
//! the backend, under a concurrency bound, a request-rate ceiling and bounded
//! exponential retry. A fixture translator is the same machinery with the
//! store preloaded from a snapshot and no backend behind it, which makes
//! replay runs pure functions of their inputs.

mod limiter;
mod live;
mod store;

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use crate::error::{AuditError, Result};

use limiter::{ConcurrencyGate, RateLimiter};
pub use live::{FetchBackend, FetchError, LiveBackend};
pub use store::{StoreKey, StoredValue, TranslationStore};

/// One unit of translatable text with its route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationRequest {
    pub text: String,
    pub source_lang: String,
    pub target_lang: String,
}

impl TranslationRequest {
    pub fn new(
        text: impl Into<String>,
        source_lang: impl Into<String>,
        target_lang: impl Into<String>,
    ) -> Result<TranslationRequest> {
        let request = TranslationRequest {
            text: text.into(),
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
        };
        if request.text.is_empty() {
            return Err(AuditError::InvalidRequest("text is empty".into()));
        }
        if request.source_lang.is_empty() || request.target_lang.is_empty() {
            return Err(AuditError::InvalidRequest("language code is empty".into()));
        }
        if request.source_lang == request.target_lang {
            return Err(AuditError::InvalidRequest(format!(
                "source and target are both {:?}",
                request.source_lang
            )));
        }
        for code in [&request.source_lang, &request.target_lang] {
            if code.contains('\t') || code.contains('\n') {
                return Err(AuditError::InvalidRequest(format!(
                    "language code {code:?} contains a separator"
                )));
            }
        }
        Ok(request)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationRecord {
    pub text: String,
    pub source_lang: String,
    pub target_lang: String,
    pub output: String,
    pub backend_id: String,
    /// Recorded at fetch time and replayed verbatim from the store.
    /// Timestamps never affect computation.
    pub retrieved_at: String,
    pub from_cache: bool,
}

/// Pacing and persistence settings for a live backend.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub endpoint: String,
    pub credential_env: String,
    pub max_concurrent: usize,
    pub requests_per_second: u32,
    pub retry_budget: u32,
    pub retry_base_ms: u64,
    pub cache_path: PathBuf,
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_concurrent == 0 {
            return Err(AuditError::Config("max_concurrent must be at least 1".into()));
        }
        if self.requests_per_second == 0 {
            return Err(AuditError::Config(
                "requests_per_second must be at least 1".into(),
            ));
        }
        if self.retry_budget > 10 {
            return Err(AuditError::Config(format!(
                "retry_budget {} exceeds the ceiling of 10",
                self.retry_budget
            )));
        }
        Ok(())
    }
}

pub struct Translator {
    store: Mutex<TranslationStore>,
    backend: Option<Box<dyn FetchBackend>>,
    limiter: RateLimiter,
    gate: ConcurrencyGate,
    retry_budget: u32,
    retry_base: Duration,
    lookup_id: String,
}

impl std::fmt::Debug for Translator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Translator")
            .field("lookup_id", &self.lookup_id)
            .field("live", &self.backend.is_some())
            .field("retry_budget", &self.retry_budget)
            .finish_non_exhaustive()
    }
}

impl Translator {
    /// Live translator: disk cache plus an HTTP backend for misses.
    pub fn live(config: &BackendConfig) -> Result<Translator> {
        config.validate()?;
        let backend = LiveBackend::new(&config.endpoint, &config.credential_env)?;
        let store = TranslationStore::open(&config.cache_path)?;
        Ok(Translator::assemble(store, Some(Box::new(backend)), config))
    }

    /// Replay translator: a recorded snapshot answers everything, misses are
    /// unavailable. The backend id for lookups is taken from the snapshot.
    pub fn fixture(snapshot: &Path) -> Result<Translator> {
        let store = TranslationStore::load_snapshot(snapshot).map_err(|e| {
            AuditError::Unavailable(format!("cannot load snapshot: {e}"))
        })?;
        let lookup_id = match store.backend_ids()[..] {
            [] => "fixture".to_string(),
            [only] => only.to_string(),
            ref many => {
                return Err(AuditError::Config(format!(
                    "snapshot {} mixes backend ids {:?}; split it per backend",
                    snapshot.display(),
                    many
                )))
            }
        };
        Ok(Translator {
            store: Mutex::new(store),
            backend: None,
            limiter: RateLimiter::new(1),
            gate: ConcurrencyGate::new(1),
            retry_budget: 0,
            retry_base: Duration::ZERO,
            lookup_id,
        })
    }

    /// Custom backend over an explicit store; the constructor tests and
    /// embedders use.
    pub fn with_backend(
        store: TranslationStore,
        backend: Box<dyn FetchBackend>,
        config: &BackendConfig,
    ) -> Result<Translator> {
        config.validate()?;
        Ok(Translator::assemble(store, Some(backend), config))
    }

    fn assemble(
        store: TranslationStore,
        backend: Option<Box<dyn FetchBackend>>,
        config: &BackendConfig,
    ) -> Translator {
        let lookup_id = backend
            .as_ref()
            .map(|b| b.id().to_string())
            .unwrap_or_else(|| "fixture".to_string());
        Translator {
            store: Mutex::new(store),
            backend,
            limiter: RateLimiter::new(config.requests_per_second),
            gate: ConcurrencyGate::new(config.max_concurrent),
            retry_budget: config.retry_budget,
            retry_base: Duration::from_millis(config.retry_base_ms),
            lookup_id,
        }
    }

    /// Backend id stamped into new records and used for store lookups.
    pub fn backend_id(&self) -> &str {
        &self.lookup_id
    }

    /// How many requests the caller may usefully keep in flight.
    pub fn concurrency_hint(&self) -> usize {
        self.gate.limit()
    }

    pub fn store_len(&self) -> usize {
        self.store.lock().unwrap().len()
    }

    /// Writes the store, sorted, to a snapshot file.
    pub fn export_snapshot(&self, path: &Path) -> Result<()> {
        self.store.lock().unwrap().export_snapshot(path)
    }

    pub fn translate(&self, request: &TranslationRequest) -> Result<TranslationRecord> {
        let key = StoreKey {
            backend_id: self.lookup_id.clone(),
            source_lang: request.source_lang.clone(),
            target_lang: request.target_lang.clone(),
            text: request.text.clone(),
        };
        if let Some(value) = self.store.lock().unwrap().get(&key) {
            return Ok(self.record(request, value.clone(), true));
        }
        let Some(backend) = self.backend.as_deref() else {
            return Err(AuditError::Unavailable(format!(
                "no recorded translation for {}->{} {:?}",
                request.source_lang, request.target_lang, request.text
            )));
        };

        let _slot = self.gate.acquire();
        // Another holder may have fetched the same key while we waited.
        if let Some(value) = self.store.lock().unwrap().get(&key) {
            return Ok(self.record(request, value.clone(), true));
        }

        let mut attempt = 0u32;
        loop {
            self.limiter.acquire();
            match backend.fetch(request) {
                Ok(output) => {
                    let value = StoredValue {
                        output,
                        retrieved_at: now_rfc3339(),
                    };
                    self.store.lock().unwrap().insert(key, value.clone())?;
                    return Ok(self.record(request, value, false));
                }
                Err(FetchError::Fatal(e)) => return Err(e),
                Err(FetchError::Retryable(detail)) => {
                    if attempt >= self.retry_budget {
                        return Err(AuditError::Unavailable(format!(
                            "{}->{} {:?} failed after {} attempts: {detail}",
                            request.source_lang,
                            request.target_lang,
                            request.text,
                            attempt + 1,
                        )));
                    }
                    std::thread::sleep(self.retry_base * 2u32.pow(attempt));
                    attempt += 1;
                }
            }
        }
    }

    fn record(
        &self,
        request: &TranslationRequest,
        value: StoredValue,
        from_cache: bool,
    ) -> TranslationRecord {
        TranslationRecord {
            text: request.text.clone(),
            source_lang: request.source_lang.clone(),
            target_lang: request.target_lang.clone(),
            output: value.output,
            backend_id: self.lookup_id.clone(),
            retrieved_at: value.retrieved_at,
            from_cache,
        }
    }
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
