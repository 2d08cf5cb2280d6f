//! Occupation and adjective corpus loading.
//!
//! Occupations come from a labor-survey extract: one row per detailed
//! occupation with its survey category and the share of women among its
//! workers. Rows lacking a share fall back to the category-level figure.
//! Rows whose title carries an English gender mark (waitress, salesman) or a
//! catch-all phrase ("..., all other") are dropped and reported, since their
//! probe sentences would not be gender-neutral or name a real occupation.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::error::{AuditError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticipationSource {
    /// The row carried its own participation value.
    Direct,
    /// The value was filled from the row's category.
    CategoryFallback,
}

impl ParticipationSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParticipationSource::Direct => "direct",
            ParticipationSource::CategoryFallback => "category-fallback",
        }
    }

    pub fn parse(s: &str) -> Option<ParticipationSource> {
        match s {
            "direct" => Some(ParticipationSource::Direct),
            "category-fallback" => Some(ParticipationSource::CategoryFallback),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationRecord {
    pub name: String,
    pub category: String,
    pub group: String,
    /// Share of women among workers, as a fraction in [0, 1].
    pub female_participation: f64,
    pub participation_source: ParticipationSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjectiveRecord {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategorySummary {
    pub category: String,
    pub group: String,
    pub occupation_count: usize,
    /// Category-level participation fraction, echoed from the category table.
    pub female_participation: f64,
}

#[derive(Debug, Clone)]
struct CategoryRow {
    category: String,
    group: String,
    participation: f64,
}

/// Survey categories with their merged reporting group and category-level
/// participation fraction. Row order follows the file and is preserved in
/// summaries and reports.
#[derive(Debug, Clone)]
pub struct CategoryTable {
    rows: Vec<CategoryRow>,
    index: HashMap<String, usize>,
}

impl CategoryTable {
    pub fn load(path: &Path) -> Result<CategoryTable> {
        let table = read_delimited(path, &["category", "group", "participation"])?;
        let mut rows = Vec::new();
        let mut index = HashMap::new();
        for line in &table.lines {
            let category = line.fields[0].clone();
            let group = line.fields[1].clone();
            let participation =
                parse_percent(&line.fields[2], path, line.number, &category)?.ok_or_else(
                    || {
                        AuditError::data(
                            path,
                            line.number,
                            format!("category {category:?} lacks a participation value"),
                        )
                    },
                )?;
            if index.insert(category.clone(), rows.len()).is_some() {
                return Err(AuditError::data(
                    path,
                    line.number,
                    format!("duplicate category {category:?}"),
                ));
            }
            rows.push(CategoryRow {
                category,
                group,
                participation,
            });
        }
        Ok(CategoryTable { rows, index })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.category.as_str())
    }

    /// Merged group names in first-appearance order.
    pub fn groups(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for row in &self.rows {
            if seen.insert(row.group.as_str()) {
                out.push(row.group.clone());
            }
        }
        out
    }

    pub fn group_of(&self, category: &str) -> Option<&str> {
        self.index
            .get(category)
            .map(|&i| self.rows[i].group.as_str())
    }

    pub fn participation_of(&self, category: &str) -> Option<f64> {
        self.index.get(category).map(|&i| self.rows[i].participation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionReason {
    GenderedWord,
    GenericPhrase,
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExclusionReason::GenderedWord => "gendered-word",
            ExclusionReason::GenericPhrase => "generic-phrase",
        })
    }
}

/// Title filters applied while loading occupations.
///
/// Gendered entries match whole lowercase words of the title; generic entries
/// match as lowercase substrings.
#[derive(Debug, Clone, Default)]
pub struct ExclusionRules {
    gendered_words: HashSet<String>,
    generic_phrases: Vec<String>,
}

impl ExclusionRules {
    /// Reads an exclusion file: GENDERED and GENERIC section headers, one
    /// entry per line, `#` comments allowed.
    pub fn load(path: &Path) -> Result<ExclusionRules> {
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        let mut rules = ExclusionRules::default();
        let mut section = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "GENDERED" => section = Some(ExclusionReason::GenderedWord),
                "GENERIC" => section = Some(ExclusionReason::GenericPhrase),
                entry => match section {
                    Some(ExclusionReason::GenderedWord) => {
                        rules.gendered_words.insert(entry.to_lowercase());
                    }
                    Some(ExclusionReason::GenericPhrase) => {
                        rules.generic_phrases.push(entry.to_lowercase());
                    }
                    None => {
                        return Err(AuditError::data(
                            path,
                            idx + 1,
                            "entry appears before any GENDERED/GENERIC header",
                        ));
                    }
                },
            }
        }
        Ok(rules)
    }

    pub fn reason_for(&self, name: &str) -> Option<ExclusionReason> {
        let lower = name.to_lowercase();
        if lower
            .split(|c: char| !c.is_alphanumeric())
            .any(|word| !word.is_empty() && self.gendered_words.contains(word))
        {
            return Some(ExclusionReason::GenderedWord);
        }
        if self.generic_phrases.iter().any(|p| lower.contains(p)) {
            return Some(ExclusionReason::GenericPhrase);
        }
        None
    }
}

#[derive(Debug, Clone)]
pub struct ExcludedRow {
    pub line: usize,
    pub name: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone)]
pub struct CorpusLoad {
    pub records: Vec<OccupationRecord>,
    pub excluded: Vec<ExcludedRow>,
}

/// Loads the occupation file, filling blank participation values from the
/// category table and dropping rows matched by the exclusion rules.
///
/// Participation is stored as a fraction although the file carries percent.
pub fn load_occupations(
    path: &Path,
    categories: &CategoryTable,
    exclusions: &ExclusionRules,
) -> Result<CorpusLoad> {
    let table = read_delimited(path, &["name", "category", "female_participation"])?;
    let mut records = Vec::new();
    let mut excluded = Vec::new();
    let mut seen = HashSet::new();
    for line in &table.lines {
        let name = line.fields[0].clone();
        let category = line.fields[1].clone();
        if !seen.insert(name.clone()) {
            return Err(AuditError::data(
                path,
                line.number,
                format!("duplicate occupation {name:?}"),
            ));
        }
        if let Some(reason) = exclusions.reason_for(&name) {
            excluded.push(ExcludedRow {
                line: line.number,
                name,
                reason,
            });
            continue;
        }
        let group = categories.group_of(&category).ok_or_else(|| {
            AuditError::data(
                path,
                line.number,
                format!("occupation {name:?} has unknown category {category:?}"),
            )
        })?;
        let (female_participation, participation_source) =
            match parse_percent(&line.fields[2], path, line.number, &name)? {
                Some(value) => (value, ParticipationSource::Direct),
                None => (
                    categories
                        .participation_of(&category)
                        .expect("category known, checked above"),
                    ParticipationSource::CategoryFallback,
                ),
            };
        records.push(OccupationRecord {
            name,
            category,
            group: group.to_string(),
            female_participation,
            participation_source,
        });
    }
    Ok(CorpusLoad { records, excluded })
}

/// Loads adjectives, one per line, `#` comments allowed, duplicates rejected.
pub fn load_adjectives(path: &Path) -> Result<Vec<AdjectiveRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen.insert(line.to_string()) {
            return Err(AuditError::data(
                path,
                idx + 1,
                format!("duplicate adjective {line:?}"),
            ));
        }
        records.push(AdjectiveRecord {
            name: line.to_string(),
        });
    }
    Ok(records)
}

/// Per-category record counts with the category-level participation echoed
/// from the table, in table order, restricted to categories present.
pub fn summarize_categories(
    records: &[OccupationRecord],
    categories: &CategoryTable,
) -> Vec<CategorySummary> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for record in records {
        *counts.entry(record.category.as_str()).or_default() += 1;
    }
    categories
        .rows
        .iter()
        .filter_map(|row| {
            counts.get(row.category.as_str()).map(|&count| CategorySummary {
                category: row.category.clone(),
                group: row.group.clone(),
                occupation_count: count,
                female_participation: row.participation,
            })
        })
        .collect()
}

struct DelimitedLine {
    number: usize,
    fields: Vec<String>,
}

struct DelimitedFile {
    lines: Vec<DelimitedLine>,
}

/// Reads a comma- or tab-separated file; the header line declares which by
/// containing the delimiter. Field counts and header names are enforced.
fn read_delimited(path: &Path, expected_header: &[&str]) -> Result<DelimitedFile> {
    let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
    let header_line = text.lines().next().unwrap_or("");
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| AuditError::data(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header != expected_header {
        return Err(AuditError::Schema {
            path: path.to_path_buf(),
            expected: expected_header.join(","),
            found: header.join(","),
        });
    }

    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| AuditError::data(path, 0, e.to_string()))?;
        let number = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        if record.len() != expected_header.len() {
            return Err(AuditError::data(
                path,
                number,
                format!(
                    "expected {} fields, found {}",
                    expected_header.len(),
                    record.len()
                ),
            ));
        }
        lines.push(DelimitedLine {
            number,
            fields: record.iter().map(|f| f.trim().to_string()).collect(),
        });
    }
    Ok(DelimitedFile { lines })
}

/// Parses a percent field into a fraction; blank means absent.
fn parse_percent(field: &str, path: &Path, line: usize, subject: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    let pct: f64 = field.parse().map_err(|_| {
        AuditError::data(
            path,
            line,
            format!("{subject:?}: participation {field:?} is not a number"),
        )
    })?;
    if !(0.0..=100.0).contains(&pct) {
        return Err(AuditError::data(
            path,
            line,
            format!("{subject:?}: participation {pct} outside [0, 100] percent"),
        ));
    }
    Ok(Some(pct / 100.0))
}
