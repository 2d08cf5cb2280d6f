//! Probe construction: localize an English subject word into each audited
//! language through the translation backend, then instantiate that language's
//! sentence templates around it.
//!
//! Output order is word-major, then language in registry order, then template
//! index, independent of how localization requests complete.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{AuditError, Result};
use crate::registry::{LanguageSpec, PLACEHOLDER};
use crate::translator::{TranslationRequest, Translator};

/// Language the corpus words are written in.
pub const CORPUS_LANGUAGE: &str = "en";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubjectKind {
    Occupation,
    Adjective,
}

impl SubjectKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SubjectKind::Occupation => "occupation",
            SubjectKind::Adjective => "adjective",
        }
    }

    pub fn parse(s: &str) -> Option<SubjectKind> {
        match s {
            "occupation" => Some(SubjectKind::Occupation),
            "adjective" => Some(SubjectKind::Adjective),
            _ => None,
        }
    }
}

impl fmt::Display for SubjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One source sentence awaiting translation back to English.
///
/// Identity is (language, kind, subject, template_index); instantiation is
/// injective over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub language: String,
    pub kind: SubjectKind,
    pub subject: String,
    pub template_index: usize,
    pub localized_subject: String,
    pub sentence: String,
}

/// A probe that could not be built because its subject never localized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnavailableProbe {
    pub language: String,
    pub kind: SubjectKind,
    pub subject: String,
    pub template_index: usize,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct ProbeBatch {
    pub probes: Vec<Probe>,
    pub unavailable: Vec<UnavailableProbe>,
}

/// Renders a subject word in the probe language via the backend.
///
/// A language matching the corpus language is an identity mapping and never
/// touches the backend.
pub fn localize_subject(
    subject: &str,
    language: &LanguageSpec,
    translator: &Translator,
) -> Result<String> {
    if language.code == CORPUS_LANGUAGE {
        return Ok(subject.to_string());
    }
    let request = TranslationRequest::new(subject, CORPUS_LANGUAGE, &language.code)?;
    Ok(translator.translate(&request)?.output)
}

/// Builds every (word, language, template) probe, recording per-probe
/// unavailability instead of aborting when a word fails to localize.
pub fn build_probes(
    words: &[String],
    kind: SubjectKind,
    languages: &[&LanguageSpec],
    translator: &Translator,
) -> Result<ProbeBatch> {
    if let Some(bad) = languages.iter().find(|l| !l.included) {
        return Err(AuditError::Config(format!(
            "language {:?} is excluded from the audit",
            bad.code
        )));
    }

    let localized = localize_all(words, languages, translator)?;

    let mut batch = ProbeBatch::default();
    for word in words {
        for language in languages {
            match &localized[&(word.as_str(), language.code.as_str())] {
                Ok(local) => {
                    for (template_index, template) in
                        language.templates(kind).iter().enumerate()
                    {
                        batch.probes.push(Probe {
                            language: language.code.clone(),
                            kind,
                            subject: word.clone(),
                            template_index,
                            localized_subject: local.clone(),
                            sentence: template.replacen(PLACEHOLDER, local, 1),
                        });
                    }
                }
                Err(detail) => {
                    for template_index in 0..language.templates(kind).len() {
                        batch.unavailable.push(UnavailableProbe {
                            language: language.code.clone(),
                            kind,
                            subject: word.clone(),
                            template_index,
                            detail: detail.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(batch)
}

type LocalizedMap<'a> = HashMap<(&'a str, &'a str), Result<String, String>>;

/// Localizes every (word, language) pair, concurrently up to the
/// translator's own in-flight bound. Unavailability is recorded per pair;
/// any other backend error aborts.
fn localize_all<'a>(
    words: &'a [String],
    languages: &[&'a LanguageSpec],
    translator: &Translator,
) -> Result<LocalizedMap<'a>> {
    let tasks: Vec<(&str, &LanguageSpec)> = words
        .iter()
        .flat_map(|w| languages.iter().map(move |l| (w.as_str(), *l)))
        .collect();

    let results: Mutex<LocalizedMap<'a>> = Mutex::new(HashMap::with_capacity(tasks.len()));
    let fatal: Mutex<Option<AuditError>> = Mutex::new(None);
    let cursor = AtomicUsize::new(0);
    let workers = translator.concurrency_hint().min(tasks.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                let Some(&(word, language)) = tasks.get(i) else {
                    return;
                };
                match localize_subject(word, language, translator) {
                    Ok(local) => {
                        results
                            .lock()
                            .unwrap()
                            .insert((word, language.code.as_str()), Ok(local));
                    }
                    Err(AuditError::Unavailable(detail)) => {
                        results
                            .lock()
                            .unwrap()
                            .insert((word, language.code.as_str()), Err(detail));
                    }
                    Err(other) => {
                        fatal.lock().unwrap().get_or_insert(other);
                        return;
                    }
                }
            });
        }
    });

    if let Some(err) = fatal.into_inner().unwrap() {
        return Err(err);
    }
    Ok(results.into_inner().unwrap())
}
