//! HTTP translation backend.
//!
//! Speaks a minimal JSON shape: POST {"q", "source", "target", "format"}
//! with a bearer credential, answer carried either as Google-v2-style
//! `data.translations[0].translatedText` or flat `translatedText` /
//! `translation`. Transport failures and 429/5xx answers are retryable;
//! other failures are final.

use crate::error::AuditError;

use super::TranslationRequest;

#[derive(Debug)]
pub enum FetchError {
    /// Worth retrying: transport trouble or an overloaded upstream.
    Retryable(String),
    /// Retrying cannot help; surfaces as-is.
    Fatal(AuditError),
}

/// A translation source the caching layer can call.
pub trait FetchBackend: Send + Sync {
    /// Stable identifier, part of every cache key this backend fills.
    fn id(&self) -> &str;
    fn fetch(&self, request: &TranslationRequest) -> Result<String, FetchError>;
}

pub struct LiveBackend {
    endpoint: String,
    credential: String,
    client: reqwest::blocking::Client,
    id: String,
}

impl std::fmt::Debug for LiveBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // The credential never appears in debug output.
        f.debug_struct("LiveBackend")
            .field("endpoint", &self.endpoint)
            .field("id", &self.id)
            .finish_non_exhaustive()
    }
}

impl LiveBackend {
    /// Builds the backend, resolving the credential from the environment
    /// variable named in the config. A missing credential fails here,
    /// before any network activity.
    pub fn new(endpoint: &str, credential_env: &str) -> Result<LiveBackend, AuditError> {
        let credential = std::env::var(credential_env).map_err(|_| {
            AuditError::Config(format!(
                "credential environment variable {credential_env} is not set"
            ))
        })?;
        let url = reqwest::Url::parse(endpoint)
            .map_err(|e| AuditError::Config(format!("invalid endpoint {endpoint:?}: {e}")))?;
        let host = url
            .host_str()
            .ok_or_else(|| AuditError::Config(format!("endpoint {endpoint:?} lacks a host")))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(30))
            .build()
            .map_err(|e| AuditError::Config(format!("cannot build HTTP client: {e}")))?;
        Ok(LiveBackend {
            endpoint: endpoint.to_string(),
            credential,
            client,
            id: format!("http:{host}"),
        })
    }
}

impl FetchBackend for LiveBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn fetch(&self, request: &TranslationRequest) -> Result<String, FetchError> {
        let body = serde_json::json!({
            "q": request.text,
            "source": request.source_lang,
            "target": request.target_lang,
            "format": "text",
        });
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.credential)
            .json(&body)
            .send()
            .map_err(|e| FetchError::Retryable(format!("transport: {e}")))?;

        let status = response.status();
        let text = response
            .text()
            .map_err(|e| FetchError::Retryable(format!("reading response: {e}")))?;

        if status.as_u16() == 429 || status.is_server_error() {
            return Err(FetchError::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(FetchError::Fatal(AuditError::Protocol(format!(
                "HTTP {status}: {}",
                truncate(&text)
            ))));
        }
        parse_translation(&text).ok_or_else(|| {
            FetchError::Fatal(AuditError::Protocol(format!(
                "no translation in response: {}",
                truncate(&text)
            )))
        })
    }
}

fn parse_translation(body: &str) -> Option<String> {
    let value: serde_json::Value = serde_json::from_str(body).ok()?;
    let candidate = value
        .pointer("/data/translations/0/translatedText")
        .or_else(|| value.get("translatedText"))
        .or_else(|| value.get("translation"))?;
    candidate.as_str().map(|s| s.to_string())
}

fn truncate(text: &str) -> &str {
    let cut = text
        .char_indices()
        .nth(200)
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    &text[..cut]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_response_shapes() {
        let google = r#"{"data":{"translations":[{"translatedText":"she's a nurse"}]}}"#;
        assert_eq!(parse_translation(google).unwrap(), "she's a nurse");
        let flat = r#"{"translatedText":"he is a judge"}"#;
        assert_eq!(parse_translation(flat).unwrap(), "he is a judge");
        let simple = r#"{"translation":"it works"}"#;
        assert_eq!(parse_translation(simple).unwrap(), "it works");
        assert!(parse_translation("not json").is_none());
        assert!(parse_translation(r#"{"other":"shape"}"#).is_none());
    }

    #[test]
    fn missing_credential_fails_before_any_network() {
        let err = LiveBackend::new("http://127.0.0.1:1/translate", "MTAUDIT_TEST_UNSET_VAR")
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("MTAUDIT_TEST_UNSET_VAR"));
    }

    #[test]
    fn invalid_endpoint_is_a_config_error() {
        std::env::set_var("MTAUDIT_TEST_CRED_URL", "k");
        let err = LiveBackend::new("not a url", "MTAUDIT_TEST_CRED_URL").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
