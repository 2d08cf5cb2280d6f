//! Aggregation of classified probe results: per-cell label percentages,
//! pronoun-count histograms, language/group heatmaps, paired gender tests and
//! the comparison of translated-female frequency against labor-force
//! participation.
//!
//! All percentages are fractions here; rendering to rounded percent is the
//! report layer's job. "Total" scopes aggregate over all selected probes,
//! never over sub-cell means, so multi-template languages weigh by probe.

mod ttest;

use std::collections::HashMap;

use crate::classifier::GenderLabel;
use crate::corpus::{CategoryTable, OccupationRecord};
use crate::error::{AuditError, Result};
use crate::probes::SubjectKind;

pub use ttest::{paired_one_sided_t_test, reg_inc_beta, student_t_sf, TestResult, Verdict};

/// A classified probe: identity plus the gender label of its translation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledProbe {
    pub language: String,
    pub kind: SubjectKind,
    pub subject: String,
    pub template_index: usize,
    pub label: GenderLabel,
    pub conflict: bool,
}

/// Which probes a cell covers. `language: None` spans all languages; the
/// subject side picks occupations (all, one category, or one merged group)
/// or adjectives (all or one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scope {
    pub language: Option<String>,
    pub subjects: SubjectScope,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubjectScope {
    AllOccupations,
    Category(String),
    Group(String),
    AllAdjectives,
    Adjective(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub scope: Scope,
    pub n_probes: usize,
    pub pct_female: f64,
    pub pct_male: f64,
    pub pct_neutral: f64,
    pub pct_undetermined: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountBin {
    pub value: usize,
    /// Occupations per merged group whose probe count for the gender equals
    /// `value`; parallel to the histogram's group list.
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountHistogram {
    pub gender: GenderLabel,
    pub groups: Vec<String>,
    pub bins: Vec<CountBin>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub gender: GenderLabel,
    /// (code, display name) per row, ascending by row marginal mean.
    pub rows: Vec<(String, String)>,
    /// Merged group per column, ascending by column marginal mean.
    pub cols: Vec<String>,
    /// Fraction of `gender` among the cell's probes; 0 for empty cells.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBin {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileHistogram {
    pub bins: Vec<QuantileBin>,
}

#[derive(Debug, Clone)]
pub struct ParticipationComparison {
    pub occupations_used: usize,
    /// Occupations carrying no probes at all, left out of the comparison.
    pub excluded_zero_probe: Vec<String>,
    pub mean_participation: f64,
    pub var_participation: f64,
    pub mean_translated_female: f64,
    pub var_translated_female: f64,
    pub participation_hist: QuantileHistogram,
    pub translated_hist: QuantileHistogram,
    /// One-sided: participation exceeds translated-female frequency.
    pub test: TestResult,
}

#[derive(Debug, Clone)]
struct Row {
    language: String,
    kind: SubjectKind,
    subject: String,
    label: GenderLabel,
    group: Option<String>,
    category: Option<String>,
}

/// Classified probes joined with corpus metadata, ready for aggregation.
///
/// Languages keep the order they were handed in (registry order); groups and
/// categories keep category-table order; adjectives keep corpus order.
#[derive(Debug, Clone)]
pub struct ResultSet {
    rows: Vec<Row>,
    languages: Vec<(String, String)>,
    groups: Vec<String>,
    categories: Vec<String>,
    adjectives: Vec<String>,
}

impl ResultSet {
    pub fn assemble(
        labeled: &[LabeledProbe],
        occupations: &[OccupationRecord],
        languages: &[(String, String)],
        categories: &CategoryTable,
    ) -> Result<ResultSet> {
        let by_name: HashMap<&str, &OccupationRecord> =
            occupations.iter().map(|r| (r.name.as_str(), r)).collect();
        let known_language: HashMap<&str, ()> =
            languages.iter().map(|(code, _)| (code.as_str(), ())).collect();

        let mut rows = Vec::with_capacity(labeled.len());
        let mut adjectives = Vec::new();
        for probe in labeled {
            if !known_language.contains_key(probe.language.as_str()) {
                return Err(AuditError::Stats(format!(
                    "probe language {:?} is not in the language list",
                    probe.language
                )));
            }
            let (group, category) = match probe.kind {
                SubjectKind::Occupation => {
                    let record = by_name.get(probe.subject.as_str()).ok_or_else(|| {
                        AuditError::Stats(format!(
                            "occupation {:?} has probes but no corpus record",
                            probe.subject
                        ))
                    })?;
                    (Some(record.group.clone()), Some(record.category.clone()))
                }
                SubjectKind::Adjective => {
                    if !adjectives.contains(&probe.subject) {
                        adjectives.push(probe.subject.clone());
                    }
                    (None, None)
                }
            };
            rows.push(Row {
                language: probe.language.clone(),
                kind: probe.kind,
                subject: probe.subject.clone(),
                label: probe.label,
                group,
                category,
            });
        }

        let present_language = |code: &str| rows.iter().any(|r| r.language == code);
        let languages: Vec<(String, String)> = languages
            .iter()
            .filter(|(code, _)| present_language(code))
            .cloned()
            .collect();
        let present_category = |c: &str| rows.iter().any(|r| r.category.as_deref() == Some(c));
        let categories: Vec<String> = categories
            .categories()
            .filter(|c| present_category(c))
            .map(|c| c.to_string())
            .collect();
        let mut groups = Vec::new();
        for category in &categories {
            if let Some(record) = occupations.iter().find(|r| &r.category == category) {
                if !groups.contains(&record.group) {
                    groups.push(record.group.clone());
                }
            }
        }

        Ok(ResultSet {
            rows,
            languages,
            groups,
            categories,
            adjectives,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// (code, name) pairs of languages present, in the order handed in.
    pub fn languages(&self) -> &[(String, String)] {
        &self.languages
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn adjectives(&self) -> &[String] {
        &self.adjectives
    }

    fn selects(&self, row: &Row, scope: &Scope) -> bool {
        if let Some(language) = &scope.language {
            if &row.language != language {
                return false;
            }
        }
        match &scope.subjects {
            SubjectScope::AllOccupations => row.kind == SubjectKind::Occupation,
            SubjectScope::Category(c) => row.category.as_deref() == Some(c.as_str()),
            SubjectScope::Group(g) => row.group.as_deref() == Some(g.as_str()),
            SubjectScope::AllAdjectives => row.kind == SubjectKind::Adjective,
            SubjectScope::Adjective(a) => {
                row.kind == SubjectKind::Adjective && row.subject == *a
            }
        }
    }

    /// Label percentages over every probe the scope selects.
    pub fn cell_stats(&self, scope: &Scope) -> Result<CellStats> {
        let mut counts = [0usize; 4];
        let mut n = 0usize;
        for row in &self.rows {
            if self.selects(row, scope) {
                counts[label_index(row.label)] += 1;
                n += 1;
            }
        }
        if n == 0 {
            return Err(AuditError::Stats(format!("scope {scope:?} selects no probes")));
        }
        let frac = |c: usize| c as f64 / n as f64;
        Ok(CellStats {
            scope: scope.clone(),
            n_probes: n,
            pct_female: frac(counts[0]),
            pct_male: frac(counts[1]),
            pct_neutral: frac(counts[2]),
            pct_undetermined: frac(counts[3]),
        })
    }

    /// Per-occupation probe counts of one gender within an optional language
    /// and group restriction, in corpus-appearance order.
    fn occupation_counts(
        &self,
        gender: GenderLabel,
        language: Option<&str>,
        group: Option<&str>,
    ) -> Vec<(&str, Option<&str>, u64, u64)> {
        let mut order: Vec<&str> = Vec::new();
        let mut hits: HashMap<&str, (Option<&str>, u64, u64)> = HashMap::new();
        for row in &self.rows {
            if row.kind != SubjectKind::Occupation {
                continue;
            }
            if language.is_some_and(|l| row.language != l) {
                continue;
            }
            if group.is_some_and(|g| row.group.as_deref() != Some(g)) {
                continue;
            }
            let entry = hits.entry(row.subject.as_str()).or_insert_with(|| {
                order.push(row.subject.as_str());
                (row.group.as_deref(), 0, 0)
            });
            entry.2 += 1;
            if row.label == gender {
                entry.1 += 1;
            }
        }
        order
            .into_iter()
            .map(|subject| {
                let (group, count, total) = hits[subject];
                (subject, group, count, total)
            })
            .collect()
    }

    /// How many occupations, per merged group, collected 0, 1, ... probes of
    /// the given gender across every language and template.
    pub fn pronoun_count_histogram(&self, gender: GenderLabel) -> CountHistogram {
        let per_occupation = self.occupation_counts(gender, None, None);
        let max = per_occupation
            .iter()
            .map(|(_, _, _, total)| *total)
            .max()
            .unwrap_or(0) as usize;
        let group_index: HashMap<&str, usize> = self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| (g.as_str(), i))
            .collect();
        let mut bins: Vec<CountBin> = (0..=max)
            .map(|value| CountBin {
                value,
                counts: vec![0; self.groups.len()],
            })
            .collect();
        for (_, group, count, _) in per_occupation {
            let g = group.and_then(|g| group_index.get(g)).copied();
            if let Some(g) = g {
                bins[count as usize].counts[g] += 1;
            }
        }
        CountHistogram {
            gender,
            groups: self.groups.clone(),
            bins,
        }
    }

    /// Share of `gender` per (language, merged group) cell, with rows and
    /// columns independently sorted ascending by marginal mean and ties
    /// broken lexicographically by display label.
    pub fn heatmap(&self, gender: GenderLabel) -> Result<Heatmap> {
        if self.languages.is_empty() || self.groups.is_empty() {
            return Err(AuditError::Stats("heatmap needs occupation probes".into()));
        }
        let n_rows = self.languages.len();
        let n_cols = self.groups.len();
        let mut hit = vec![vec![0u64; n_cols]; n_rows];
        let mut total = vec![vec![0u64; n_cols]; n_rows];
        let language_index: HashMap<&str, usize> = self
            .languages
            .iter()
            .enumerate()
            .map(|(i, (code, _))| (code.as_str(), i))
            .collect();
        let group_index: HashMap<&str, usize> = self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| (g.as_str(), i))
            .collect();
        for row in &self.rows {
            let (Some(group), SubjectKind::Occupation) = (&row.group, row.kind) else {
                continue;
            };
            let r = language_index[row.language.as_str()];
            let c = group_index[group.as_str()];
            total[r][c] += 1;
            if row.label == gender {
                hit[r][c] += 1;
            }
        }
        let values: Vec<Vec<f64>> = hit
            .iter()
            .zip(&total)
            .map(|(h_row, t_row)| {
                h_row
                    .iter()
                    .zip(t_row)
                    .map(|(&h, &t)| if t == 0 { 0.0 } else { h as f64 / t as f64 })
                    .collect()
            })
            .collect();

        let row_order = sorted_by_marginal((0..n_rows).map(|r| {
            (marginal_mean(values[r].clone()), self.languages[r].1.clone())
        }));
        let col_order = sorted_by_marginal((0..n_cols).map(|c| {
            let column: Vec<f64> = values.iter().map(|row| row[c]).collect();
            (marginal_mean(column), self.groups[c].clone())
        }));

        Ok(Heatmap {
            gender,
            rows: row_order
                .iter()
                .map(|&r| self.languages[r].clone())
                .collect(),
            cols: col_order.iter().map(|&c| self.groups[c].clone()).collect(),
            values: row_order
                .iter()
                .map(|&r| col_order.iter().map(|&c| values[r][c]).collect())
                .collect(),
        })
    }

    /// One-sided test that gender `a` out-counts gender `b` per occupation
    /// within the scope. Items are per-occupation probe counts.
    pub fn gender_pair_test(
        &self,
        language: Option<&str>,
        group: Option<&str>,
        a: GenderLabel,
        b: GenderLabel,
        alpha: f64,
    ) -> Result<TestResult> {
        let a_counts = self.occupation_counts(a, language, group);
        let b_counts = self.occupation_counts(b, language, group);
        debug_assert_eq!(a_counts.len(), b_counts.len());
        let x: Vec<f64> = a_counts.iter().map(|(_, _, c, _)| *c as f64).collect();
        let y: Vec<f64> = b_counts.iter().map(|(_, _, c, _)| *c as f64).collect();
        paired_one_sided_t_test(&x, &y, alpha)
    }

    /// Compares labor-force participation against translated-female
    /// frequency per occupation: two 12-bin histograms over [0, 1] and a
    /// one-sided paired test that participation is higher.
    pub fn participation_comparison(
        &self,
        records: &[OccupationRecord],
        alpha: f64,
    ) -> Result<ParticipationComparison> {
        let female = self.occupation_counts(GenderLabel::Female, None, None);
        let by_subject: HashMap<&str, (u64, u64)> = female
            .iter()
            .map(|(subject, _, count, total)| (*subject, (*count, *total)))
            .collect();

        let mut participation = Vec::new();
        let mut translated = Vec::new();
        let mut excluded = Vec::new();
        for record in records {
            match by_subject.get(record.name.as_str()) {
                Some(&(count, total)) if total > 0 => {
                    participation.push(record.female_participation);
                    translated.push(count as f64 / total as f64);
                }
                _ => excluded.push(record.name.clone()),
            }
        }
        if participation.len() < 2 {
            return Err(AuditError::Stats(format!(
                "participation comparison needs at least 2 occupations with probes, got {}",
                participation.len()
            )));
        }

        let test = paired_one_sided_t_test(&participation, &translated, alpha)?;
        Ok(ParticipationComparison {
            occupations_used: participation.len(),
            excluded_zero_probe: excluded,
            mean_participation: mean(&participation),
            var_participation: sample_variance(&participation),
            mean_translated_female: mean(&translated),
            var_translated_female: sample_variance(&translated),
            participation_hist: quantile_histogram(&participation),
            translated_hist: quantile_histogram(&translated),
            test,
        })
    }
}

fn label_index(label: GenderLabel) -> usize {
    match label {
        GenderLabel::Female => 0,
        GenderLabel::Male => 1,
        GenderLabel::Neutral => 2,
        GenderLabel::Undetermined => 3,
    }
}

/// Indices sorted ascending by marginal mean, ties broken by label.
/// Mean with summands accumulated in sorted order, so the result is a pure
/// function of the multiset of values. Axis ordering would otherwise depend
/// on the caller's language order through float rounding.
fn marginal_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("cell fractions are finite"));
    values.iter().sum::<f64>() / values.len() as f64
}

fn sorted_by_marginal(marginals: impl Iterator<Item = (f64, String)>) -> Vec<usize> {
    let mut keyed: Vec<(usize, f64, String)> = marginals
        .enumerate()
        .map(|(i, (mean, label))| (i, mean, label))
        .collect();
    keyed.sort_by(|(_, m1, l1), (_, m2, l2)| {
        m1.partial_cmp(m2)
            .expect("marginal means are finite")
            .then_with(|| l1.cmp(l2))
    });
    keyed.into_iter().map(|(i, _, _)| i).collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

/// Twelve equal-width bins over [0, 1]; 1.0 lands in the last bin.
fn quantile_histogram(values: &[f64]) -> QuantileHistogram {
    const BINS: usize = 12;
    let mut counts = [0u64; BINS];
    for &v in values {
        let idx = ((v * BINS as f64).floor() as usize).min(BINS - 1);
        counts[idx] += 1;
    }
    QuantileHistogram {
        bins: (0..BINS)
            .map(|i| QuantileBin {
                lower: i as f64 / BINS as f64,
                upper: (i + 1) as f64 / BINS as f64,
                count: counts[i],
            })
            .collect(),
    }
}
