//! Language registry: which source languages the audit covers, their sentence
//! templates, and machine-readable reasons for the ones deliberately left out.
//!
//! Every language here is gender-neutral in third-person pronouns or carries
//! an explicit exclusion reason. Templates hold exactly one `{word}`
//! placeholder; a language may carry several templates (Bengali has six, one
//! per pronoun register).

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

pub const PLACEHOLDER: &str = "{word}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageSpec {
    /// ISO 639-1 code, also the code sent to the translation backend.
    pub code: String,
    pub name: String,
    pub family: String,
    #[serde(default)]
    pub occupation_templates: Vec<String>,
    #[serde(default)]
    pub adjective_templates: Vec<String>,
    pub included: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion_reason: Option<String>,
}

impl LanguageSpec {
    pub fn templates(&self, kind: crate::probes::SubjectKind) -> &[String] {
        match kind {
            crate::probes::SubjectKind::Occupation => &self.occupation_templates,
            crate::probes::SubjectKind::Adjective => &self.adjective_templates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    #[serde(rename = "language")]
    pub languages: Vec<LanguageSpec>,
}

impl Registry {
    pub fn load(path: &Path) -> Result<Registry> {
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        let registry: Registry = toml::from_str(&text)
            .map_err(|e| AuditError::data(path, 0, format!("invalid registry: {e}")))?;
        registry.validate().map_err(AuditError::Config)?;
        Ok(registry)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("registry serializes")
    }

    fn validate(&self) -> Result<(), String> {
        let mut codes = HashSet::new();
        for lang in &self.languages {
            if !codes.insert(lang.code.as_str()) {
                return Err(format!("duplicate language code {:?}", lang.code));
            }
            if lang.included {
                if lang.occupation_templates.is_empty() || lang.adjective_templates.is_empty() {
                    return Err(format!(
                        "included language {:?} must carry occupation and adjective templates",
                        lang.code
                    ));
                }
                if lang.exclusion_reason.is_some() {
                    return Err(format!(
                        "included language {:?} must not carry an exclusion reason",
                        lang.code
                    ));
                }
            } else if lang.exclusion_reason.as_deref().unwrap_or("").is_empty() {
                return Err(format!(
                    "excluded language {:?} must state its exclusion reason",
                    lang.code
                ));
            }
            for template in lang
                .occupation_templates
                .iter()
                .chain(&lang.adjective_templates)
            {
                if template.matches(PLACEHOLDER).count() != 1 {
                    return Err(format!(
                        "template {template:?} of {:?} must contain exactly one {PLACEHOLDER}",
                        lang.code
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn included(&self) -> impl Iterator<Item = &LanguageSpec> {
        self.languages.iter().filter(|l| l.included)
    }

    pub fn get(&self, code: &str) -> Option<&LanguageSpec> {
        self.languages.iter().find(|l| l.code == code)
    }

    /// Resolves a language filter against the registry: every code must exist
    /// and be included. An empty filter selects all included languages.
    pub fn select(&self, filter: &[String]) -> Result<Vec<&LanguageSpec>> {
        if filter.is_empty() {
            return Ok(self.included().collect());
        }
        filter
            .iter()
            .map(|code| {
                let lang = self.get(code).ok_or_else(|| {
                    AuditError::Config(format!("unknown language code {code:?}"))
                })?;
                if !lang.included {
                    return Err(AuditError::Config(format!(
                        "language {code:?} is excluded from the audit: {}",
                        lang.exclusion_reason.as_deref().unwrap_or("no reason")
                    )));
                }
                Ok(lang)
            })
            .collect()
    }
}
