//! Pronoun gender classification of translated English sentences.
//!
//! A sentence is scanned token by token, left to right; the first token found
//! in any lexicon set decides the label. Sentences whose tokens span two or
//! more gender sets are flagged as conflicts for the run report.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use crate::error::{AuditError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GenderLabel {
    Female,
    Male,
    Neutral,
    Undetermined,
}

impl GenderLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            GenderLabel::Female => "female",
            GenderLabel::Male => "male",
            GenderLabel::Neutral => "neutral",
            GenderLabel::Undetermined => "undetermined",
        }
    }

    pub fn parse(s: &str) -> Option<GenderLabel> {
        match s {
            "female" => Some(GenderLabel::Female),
            "male" => Some(GenderLabel::Male),
            "neutral" => Some(GenderLabel::Neutral),
            "undetermined" => Some(GenderLabel::Undetermined),
            _ => None,
        }
    }
}

impl fmt::Display for GenderLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Splits a sentence into lowercase tokens.
///
/// Tokens are maximal runs of alphanumeric characters; an apostrophe is kept
/// only between two alphanumerics, so contractions survive ("she's") while
/// quoting does not. U+2019 is treated as an apostrophe.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(ch) = chars.next() {
        let ch = if ch == '\u{2019}' { '\'' } else { ch };
        if ch.is_alphanumeric() {
            for lc in ch.to_lowercase() {
                current.push(lc);
            }
        } else if ch == '\''
            && !current.is_empty()
            && chars.peek().is_some_and(|next| next.is_alphanumeric())
        {
            current.push('\'');
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Token sets deciding pronoun gender, pairwise disjoint and lowercase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    female: HashSet<String>,
    male: HashSet<String>,
    neutral: HashSet<String>,
}

impl Lexicon {
    pub fn new(
        female: impl IntoIterator<Item = String>,
        male: impl IntoIterator<Item = String>,
        neutral: impl IntoIterator<Item = String>,
    ) -> Result<Lexicon> {
        let lexicon = Lexicon {
            female: female.into_iter().collect(),
            male: male.into_iter().collect(),
            neutral: neutral.into_iter().collect(),
        };
        lexicon.validate().map_err(AuditError::Config)?;
        Ok(lexicon)
    }

    /// Reads a lexicon file: three sections opened by FEMALE, MALE and
    /// NEUTRAL header lines, one token per line, `#` comments allowed.
    pub fn load(path: &Path) -> Result<Lexicon> {
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        let mut female = HashSet::new();
        let mut male = HashSet::new();
        let mut neutral = HashSet::new();
        let mut section: Option<&mut HashSet<String>> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "FEMALE" => section = Some(&mut female),
                "MALE" => section = Some(&mut male),
                "NEUTRAL" => section = Some(&mut neutral),
                token => {
                    if token.chars().any(|c| c.is_uppercase()) {
                        return Err(AuditError::data(
                            path,
                            idx + 1,
                            format!("lexicon token {token:?} must be lowercase"),
                        ));
                    }
                    match section.as_deref_mut() {
                        Some(set) => {
                            set.insert(token.to_string());
                        }
                        None => {
                            return Err(AuditError::data(
                                path,
                                idx + 1,
                                "token appears before any FEMALE/MALE/NEUTRAL header",
                            ));
                        }
                    }
                }
            }
        }
        let lexicon = Lexicon {
            female,
            male,
            neutral,
        };
        lexicon
            .validate()
            .map_err(|msg| AuditError::Data {
                path: path.to_path_buf(),
                line: 0,
                message: msg,
            })
            .map(|()| lexicon)
    }

    fn validate(&self) -> Result<(), String> {
        for (name, set) in [
            ("female", &self.female),
            ("male", &self.male),
            ("neutral", &self.neutral),
        ] {
            if set.is_empty() {
                return Err(format!("lexicon {name} set is empty"));
            }
            if let Some(bad) = set.iter().find(|t| t.chars().any(|c| c.is_uppercase())) {
                return Err(format!("lexicon token {bad:?} must be lowercase"));
            }
        }
        for (a_name, a, b_name, b) in [
            ("female", &self.female, "male", &self.male),
            ("female", &self.female, "neutral", &self.neutral),
            ("male", &self.male, "neutral", &self.neutral),
        ] {
            if let Some(shared) = a.intersection(b).next() {
                return Err(format!(
                    "lexicon sets {a_name} and {b_name} both contain {shared:?}"
                ));
            }
        }
        Ok(())
    }

    pub fn label_of(&self, token: &str) -> Option<GenderLabel> {
        if self.female.contains(token) {
            Some(GenderLabel::Female)
        } else if self.male.contains(token) {
            Some(GenderLabel::Male)
        } else if self.neutral.contains(token) {
            Some(GenderLabel::Neutral)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub label: GenderLabel,
    /// True when tokens from two or more distinct gender sets appear.
    pub conflict: bool,
}

/// Labels a translated sentence by its first gendered token.
pub fn classify(text: &str, lexicon: &Lexicon) -> Classification {
    let mut label = None;
    let mut seen = HashSet::new();
    for token in tokenize(text) {
        if let Some(hit) = lexicon.label_of(&token) {
            label.get_or_insert(hit);
            seen.insert(hit);
        }
    }
    Classification {
        label: label.unwrap_or(GenderLabel::Undetermined),
        conflict: seen.len() >= 2,
    }
}
