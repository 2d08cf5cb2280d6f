//! Pipeline orchestration: six file-to-file stages (ingest, probes,
//! translate, classify, stats, report) plus `run_audit`, which is nothing
//! more than the six stages run in order. Each stage re-reads its
//! predecessor's schema-tagged file, so partial re-runs against an updated
//! snapshot behave identically to a full run.

pub mod emit;
pub mod stage_io;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::classifier::{classify, GenderLabel, Lexicon};
use crate::config::{BackendChoice, ConfigEcho, RunConfig};
use crate::corpus::{
    load_adjectives, load_occupations, CategoryTable, ExclusionRules, OccupationRecord,
    ParticipationSource,
};
use crate::error::{AuditError, Result};
use crate::probes::{build_probes, Probe, SubjectKind, UnavailableProbe, CORPUS_LANGUAGE};
use crate::registry::Registry;
use crate::stats::{LabeledProbe, ResultSet};
use crate::translator::{TranslationRecord, TranslationRequest, Translator};

use stage_io::{read_stage_file, write_stage_file};

/// Paths of everything a run writes under its output directory.
#[derive(Debug, Clone)]
pub struct OutputLayout {
    root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: &Path) -> OutputLayout {
        OutputLayout {
            root: root.to_path_buf(),
        }
    }

    fn stage(&self, name: &str) -> PathBuf {
        self.root.join("stage").join(name)
    }

    pub fn corpus(&self) -> PathBuf {
        self.stage("corpus.tsv")
    }
    pub fn excluded(&self) -> PathBuf {
        self.stage("excluded.tsv")
    }
    pub fn adjectives(&self) -> PathBuf {
        self.stage("adjectives.tsv")
    }
    pub fn probes(&self) -> PathBuf {
        self.stage("probes.tsv")
    }
    pub fn probes_unavailable(&self) -> PathBuf {
        self.stage("probes_unavailable.tsv")
    }
    pub fn translations(&self) -> PathBuf {
        self.stage("translations.tsv")
    }
    pub fn translate_unavailable(&self) -> PathBuf {
        self.stage("translate_unavailable.tsv")
    }
    pub fn labeled(&self) -> PathBuf {
        self.stage("labeled.tsv")
    }
    pub fn tables_dir(&self) -> PathBuf {
        self.root.join("tables")
    }
    pub fn tests_dir(&self) -> PathBuf {
        self.root.join("tests")
    }
    pub fn plots_dir(&self) -> PathBuf {
        self.root.join("plots")
    }
    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.toml")
    }
}

const CORPUS_SCHEMA: &str = "mtaudit/corpus@1";
const CORPUS_HEADER: [&str; 5] = ["name", "category", "group", "participation", "source"];
const EXCLUDED_SCHEMA: &str = "mtaudit/excluded@1";
const EXCLUDED_HEADER: [&str; 3] = ["line", "name", "reason"];
const ADJECTIVES_SCHEMA: &str = "mtaudit/adjectives@1";
const ADJECTIVES_HEADER: [&str; 1] = ["name"];
const PROBES_SCHEMA: &str = "mtaudit/probes@1";
const PROBES_HEADER: [&str; 6] = [
    "language",
    "kind",
    "subject",
    "template_index",
    "localized_subject",
    "sentence",
];
const PROBES_UNAVAILABLE_SCHEMA: &str = "mtaudit/probes-unavailable@1";
const PROBES_UNAVAILABLE_HEADER: [&str; 5] =
    ["language", "kind", "subject", "template_index", "detail"];
const TRANSLATIONS_SCHEMA: &str = "mtaudit/translations@1";
const TRANSLATIONS_HEADER: [&str; 9] = [
    "language",
    "kind",
    "subject",
    "template_index",
    "sentence",
    "output",
    "backend_id",
    "retrieved_at",
    "from_cache",
];
const TRANSLATE_UNAVAILABLE_SCHEMA: &str = "mtaudit/translate-unavailable@1";
const TRANSLATE_UNAVAILABLE_HEADER: [&str; 6] = [
    "language",
    "kind",
    "subject",
    "template_index",
    "sentence",
    "detail",
];
const LABELED_SCHEMA: &str = "mtaudit/labeled@1";
const LABELED_HEADER: [&str; 7] = [
    "language",
    "kind",
    "subject",
    "template_index",
    "output",
    "label",
    "conflict",
];

/// The translation backend a config selects.
pub fn build_translator(config: &RunConfig) -> Result<Translator> {
    match &config.backend {
        BackendChoice::Fixture { snapshot } => Translator::fixture(snapshot),
        BackendChoice::Live(backend) => Translator::live(backend),
    }
}

// Stage-file records are machine-written with no blank lines, so a record's
// file line is its index plus the schema and header lines plus one.
fn record_line(idx: usize) -> usize {
    idx + 3
}

fn parse_field<T, F>(path: &Path, idx: usize, what: &str, raw: &str, parse: F) -> Result<T>
where
    F: FnOnce(&str) -> Option<T>,
{
    parse(raw).ok_or_else(|| {
        AuditError::data(path, record_line(idx), format!("bad {what}: {raw:?}"))
    })
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

/// Stage 1: load, filter and re-emit the corpus so later stages work from
/// one canonical, already-validated file set.
pub fn stage_ingest(config: &RunConfig) -> Result<String> {
    let layout = OutputLayout::new(&config.out_dir);
    let table = CategoryTable::load(&config.data.categories)?;
    let rules = ExclusionRules::load(&config.data.exclusions)?;
    let loaded = load_occupations(&config.data.occupations, &table, &rules)?;
    let adjectives = load_adjectives(&config.data.adjectives)?;

    let mut records = loaded.records;
    if !config.categories.is_empty() {
        for category in &config.categories {
            if table.participation_of(category).is_none() {
                return Err(AuditError::Config(format!(
                    "category filter names unknown category {category:?}"
                )));
            }
        }
        records.retain(|r| config.categories.contains(&r.category));
        if records.is_empty() {
            return Err(AuditError::Config(
                "category filter selects no occupations".into(),
            ));
        }
    }

    write_stage_file(
        &layout.corpus(),
        CORPUS_SCHEMA,
        &CORPUS_HEADER,
        records.iter().map(|r| {
            vec![
                r.name.clone(),
                r.category.clone(),
                r.group.clone(),
                format!("{}", r.female_participation),
                r.participation_source.as_str().to_string(),
            ]
        }),
    )?;
    write_stage_file(
        &layout.excluded(),
        EXCLUDED_SCHEMA,
        &EXCLUDED_HEADER,
        loaded.excluded.iter().map(|e| {
            vec![e.line.to_string(), e.name.clone(), e.reason.to_string()]
        }),
    )?;
    write_stage_file(
        &layout.adjectives(),
        ADJECTIVES_SCHEMA,
        &ADJECTIVES_HEADER,
        adjectives.iter().map(|a| vec![a.name.clone()]),
    )?;
    Ok(format!(
        "{} occupations kept, {} excluded, {} adjectives",
        records.len(),
        loaded.excluded.len(),
        adjectives.len()
    ))
}

fn read_corpus(layout: &OutputLayout) -> Result<Vec<OccupationRecord>> {
    let path = layout.corpus();
    let rows = read_stage_file(&path, CORPUS_SCHEMA, &CORPUS_HEADER)?;
    let mut records = Vec::with_capacity(rows.len());
    for (idx, row) in rows.into_iter().enumerate() {
        let participation = parse_field(&path, idx, "participation", &row[3], |s| {
            s.parse::<f64>().ok().filter(|v| (0.0..=1.0).contains(v))
        })?;
        let source = parse_field(&path, idx, "source", &row[4], ParticipationSource::parse)?;
        records.push(OccupationRecord {
            name: row[0].clone(),
            category: row[1].clone(),
            group: row[2].clone(),
            female_participation: participation,
            participation_source: source,
        });
    }
    Ok(records)
}

fn read_adjective_names(layout: &OutputLayout) -> Result<Vec<String>> {
    let rows = read_stage_file(&layout.adjectives(), ADJECTIVES_SCHEMA, &ADJECTIVES_HEADER)?;
    Ok(rows.into_iter().map(|mut row| row.remove(0)).collect())
}

fn probe_row(p: &Probe) -> Vec<String> {
    vec![
        p.language.clone(),
        p.kind.as_str().to_string(),
        p.subject.clone(),
        p.template_index.to_string(),
        p.localized_subject.clone(),
        p.sentence.clone(),
    ]
}

fn unavailable_row(u: &UnavailableProbe) -> Vec<String> {
    vec![
        u.language.clone(),
        u.kind.as_str().to_string(),
        u.subject.clone(),
        u.template_index.to_string(),
        u.detail.clone(),
    ]
}

/// Stage 2: instantiate every (word, language, template) probe, localizing
/// subjects through the backend.
pub fn stage_probes(config: &RunConfig) -> Result<String> {
    let layout = OutputLayout::new(&config.out_dir);
    let records = read_corpus(&layout)?;
    let adjectives = read_adjective_names(&layout)?;
    let registry = Registry::load(&config.data.registry)?;
    let selection = registry.select(&config.languages)?;
    let translator = build_translator(config)?;

    let occupation_names: Vec<String> = records.iter().map(|r| r.name.clone()).collect();
    let occupations = build_probes(
        &occupation_names,
        SubjectKind::Occupation,
        &selection,
        &translator,
    )?;
    let adjective_batch = build_probes(
        &adjectives,
        SubjectKind::Adjective,
        &selection,
        &translator,
    )?;

    let probes = occupations.probes.iter().chain(&adjective_batch.probes);
    let unavailable = occupations
        .unavailable
        .iter()
        .chain(&adjective_batch.unavailable);
    write_stage_file(
        &layout.probes(),
        PROBES_SCHEMA,
        &PROBES_HEADER,
        probes.map(probe_row),
    )?;
    write_stage_file(
        &layout.probes_unavailable(),
        PROBES_UNAVAILABLE_SCHEMA,
        &PROBES_UNAVAILABLE_HEADER,
        unavailable.map(unavailable_row),
    )?;
    Ok(format!(
        "{} probes built, {} unavailable, {} languages",
        occupations.probes.len() + adjective_batch.probes.len(),
        occupations.unavailable.len() + adjective_batch.unavailable.len(),
        selection.len()
    ))
}

#[derive(Debug, Clone)]
struct ProbeRow {
    language: String,
    kind: SubjectKind,
    subject: String,
    template_index: usize,
    sentence: String,
}

fn read_probes(layout: &OutputLayout) -> Result<Vec<ProbeRow>> {
    let path = layout.probes();
    let rows = read_stage_file(&path, PROBES_SCHEMA, &PROBES_HEADER)?;
    let mut probes = Vec::with_capacity(rows.len());
    for (idx, row) in rows.into_iter().enumerate() {
        probes.push(ProbeRow {
            language: row[0].clone(),
            kind: parse_field(&path, idx, "kind", &row[1], SubjectKind::parse)?,
            subject: row[2].clone(),
            template_index: parse_field(&path, idx, "template_index", &row[3], |s| {
                s.parse::<usize>().ok()
            })?,
            sentence: row[5].clone(),
        });
    }
    Ok(probes)
}

/// Stage 3: translate every probe sentence into the corpus language,
/// fanning out per the backend's concurrency contract. Probes the backend
/// cannot serve are recorded, not fatal; protocol and config errors abort.
pub fn stage_translate(config: &RunConfig) -> Result<String> {
    let layout = OutputLayout::new(&config.out_dir);
    let probes = read_probes(&layout)?;
    let translator = build_translator(config)?;

    let n = probes.len();
    let results: Mutex<Vec<Option<Result<TranslationRecord, String>>>> =
        Mutex::new(vec![None; n]);
    let fatal: Mutex<Option<AuditError>> = Mutex::new(None);
    let cursor = AtomicUsize::new(0);
    let workers = translator.concurrency_hint().min(n.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= n || fatal.lock().expect("fatal flag poisoned").is_some() {
                    break;
                }
                let probe = &probes[i];
                let outcome = TranslationRequest::new(
                    &probe.sentence,
                    &probe.language,
                    CORPUS_LANGUAGE,
                )
                .and_then(|request| translator.translate(&request));
                match outcome {
                    Ok(record) => {
                        results.lock().expect("results poisoned")[i] = Some(Ok(record));
                    }
                    Err(AuditError::Unavailable(detail)) => {
                        results.lock().expect("results poisoned")[i] = Some(Err(detail));
                    }
                    Err(other) => {
                        let mut slot = fatal.lock().expect("fatal flag poisoned");
                        if slot.is_none() {
                            *slot = Some(other);
                        }
                        break;
                    }
                }
            });
        }
    });
    if let Some(err) = fatal.into_inner().expect("fatal flag poisoned") {
        return Err(err);
    }

    let results = results.into_inner().expect("results poisoned");
    let mut translated = Vec::new();
    let mut unavailable = Vec::new();
    for (probe, result) in probes.iter().zip(results) {
        let result = result.expect("every probe position was filled");
        match result {
            Ok(record) => translated.push((probe, record)),
            Err(detail) => unavailable.push((probe, detail)),
        }
    }

    write_stage_file(
        &layout.translations(),
        TRANSLATIONS_SCHEMA,
        &TRANSLATIONS_HEADER,
        translated.iter().map(|(p, r)| {
            vec![
                p.language.clone(),
                p.kind.as_str().to_string(),
                p.subject.clone(),
                p.template_index.to_string(),
                p.sentence.clone(),
                r.output.clone(),
                r.backend_id.clone(),
                r.retrieved_at.clone(),
                r.from_cache.to_string(),
            ]
        }),
    )?;
    write_stage_file(
        &layout.translate_unavailable(),
        TRANSLATE_UNAVAILABLE_SCHEMA,
        &TRANSLATE_UNAVAILABLE_HEADER,
        unavailable.iter().map(|(p, detail)| {
            vec![
                p.language.clone(),
                p.kind.as_str().to_string(),
                p.subject.clone(),
                p.template_index.to_string(),
                p.sentence.clone(),
                detail.clone(),
            ]
        }),
    )?;
    Ok(format!(
        "{} translated, {} unavailable",
        translated.len(),
        unavailable.len()
    ))
}

/// Stage 4: classify each translated sentence's pronominal gender.
pub fn stage_classify(config: &RunConfig) -> Result<String> {
    let layout = OutputLayout::new(&config.out_dir);
    let lexicon = Lexicon::load(&config.data.lexicon)?;
    let path = layout.translations();
    let rows = read_stage_file(&path, TRANSLATIONS_SCHEMA, &TRANSLATIONS_HEADER)?;

    let mut labeled = Vec::with_capacity(rows.len());
    let mut conflicts = 0usize;
    for row in &rows {
        let classification = classify(&row[5], &lexicon);
        if classification.conflict {
            conflicts += 1;
        }
        labeled.push(vec![
            row[0].clone(),
            row[1].clone(),
            row[2].clone(),
            row[3].clone(),
            row[5].clone(),
            classification.label.as_str().to_string(),
            classification.conflict.to_string(),
        ]);
    }
    write_stage_file(
        &layout.labeled(),
        LABELED_SCHEMA,
        &LABELED_HEADER,
        labeled,
    )?;
    Ok(format!(
        "{} sentences labeled, {} conflicts",
        rows.len(),
        conflicts
    ))
}

fn read_labeled(layout: &OutputLayout) -> Result<Vec<LabeledProbe>> {
    let path = layout.labeled();
    let rows = read_stage_file(&path, LABELED_SCHEMA, &LABELED_HEADER)?;
    let mut labeled = Vec::with_capacity(rows.len());
    for (idx, row) in rows.into_iter().enumerate() {
        labeled.push(LabeledProbe {
            language: row[0].clone(),
            kind: parse_field(&path, idx, "kind", &row[1], SubjectKind::parse)?,
            subject: row[2].clone(),
            template_index: parse_field(&path, idx, "template_index", &row[3], |s| {
                s.parse::<usize>().ok()
            })?,
            label: parse_field(&path, idx, "label", &row[5], GenderLabel::parse)?,
            conflict: parse_field(&path, idx, "conflict", &row[6], parse_bool)?,
        });
    }
    Ok(labeled)
}

/// Stage 5: aggregate labels into every table, test matrix and plot-data
/// file. Artifacts whose preconditions the data cannot meet (a heatmap with
/// no occupation probes, a comparison with under two occupations) are
/// omitted rather than fabricated.
pub fn stage_stats(config: &RunConfig) -> Result<String> {
    let layout = OutputLayout::new(&config.out_dir);
    let labeled = read_labeled(&layout)?;
    let records = read_corpus(&layout)?;
    let table = CategoryTable::load(&config.data.categories)?;
    let registry = Registry::load(&config.data.registry)?;
    let selection = registry.select(&config.languages)?;
    let languages: Vec<(String, String)> = selection
        .iter()
        .map(|l| (l.code.clone(), l.name.clone()))
        .collect();

    let set = ResultSet::assemble(&labeled, &records, &languages, &table)?;
    if set.is_empty() {
        return Err(AuditError::Stats(
            "no labeled probes to aggregate; did the translate stage produce anything?".into(),
        ));
    }

    let tables = layout.tables_dir();
    let tests = layout.tests_dir();
    let plots = layout.plots_dir();
    emit::emit_gender_tables(&set, &tables)?;

    use GenderLabel::{Female, Male, Neutral};
    for (a, b, stem) in [
        (Male, Female, "male_vs_female"),
        (Male, Neutral, "male_vs_neutral"),
        (Neutral, Female, "neutral_vs_female"),
    ] {
        emit::emit_test_matrix(&set, a, b, config.alpha, &tests, stem)?;
    }
    for (gender, stem) in [
        (Female, "hist_female"),
        (Male, "hist_male"),
        (Neutral, "hist_neutral"),
    ] {
        emit::emit_histogram(
            &set.pronoun_count_histogram(gender),
            &plots.join(format!("{stem}.tsv")),
        )?;
    }
    for (gender, stem) in [
        (Female, "heatmap_female"),
        (Male, "heatmap_male"),
        (Neutral, "heatmap_neutral"),
    ] {
        match set.heatmap(gender) {
            Ok(map) => emit::emit_heatmap(&map, &plots.join(format!("{stem}.tsv")))?,
            Err(AuditError::Stats(_)) => {}
            Err(other) => return Err(other),
        }
    }
    match set.participation_comparison(&records, config.alpha) {
        Ok(cmp) => emit::emit_participation(&cmp, &tables, &plots)?,
        Err(AuditError::Stats(_)) => {}
        Err(other) => return Err(other),
    }

    Ok(format!(
        "{} labeled probes aggregated over {} languages, {} groups",
        set.len(),
        set.languages().len(),
        set.groups().len()
    ))
}

#[derive(Debug, Serialize)]
pub struct ProbeCounts {
    /// Words × templates over the selected languages.
    pub expected: usize,
    pub built: usize,
    pub localization_unavailable: usize,
    pub translated: usize,
    pub translation_unavailable: usize,
}

/// Everything needed to audit a run after the fact.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    /// SHA-256 of the translation source: the snapshot for fixture runs,
    /// the cache for live runs.
    pub snapshot_sha256: String,
    pub config: ConfigEcho,
    pub probes: ProbeCounts,
    /// Probes whose translation mixed two or more gender sets, per language.
    pub conflicts: BTreeMap<String, u64>,
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| AuditError::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Stage 6: cross-check the stage files' counts and write the manifest.
pub fn stage_report(config: &RunConfig) -> Result<String> {
    let layout = OutputLayout::new(&config.out_dir);
    let registry = Registry::load(&config.data.registry)?;
    let selection = registry.select(&config.languages)?;
    let records = read_corpus(&layout)?;
    let adjectives = read_adjective_names(&layout)?;

    let expected: usize = selection
        .iter()
        .map(|l| {
            l.occupation_templates.len() * records.len()
                + l.adjective_templates.len() * adjectives.len()
        })
        .sum();
    let built = read_probes(&layout)?.len();
    let localization_unavailable = read_stage_file(
        &layout.probes_unavailable(),
        PROBES_UNAVAILABLE_SCHEMA,
        &PROBES_UNAVAILABLE_HEADER,
    )?
    .len();
    let translated = read_stage_file(
        &layout.translations(),
        TRANSLATIONS_SCHEMA,
        &TRANSLATIONS_HEADER,
    )?
    .len();
    let translation_unavailable = read_stage_file(
        &layout.translate_unavailable(),
        TRANSLATE_UNAVAILABLE_SCHEMA,
        &TRANSLATE_UNAVAILABLE_HEADER,
    )?
    .len();
    let labeled = read_labeled(&layout)?;

    if built + localization_unavailable != expected {
        return Err(AuditError::Stats(format!(
            "probe accounting broken: built {built} + unavailable {localization_unavailable} != expected {expected}"
        )));
    }
    if translated + translation_unavailable != built {
        return Err(AuditError::Stats(format!(
            "translation accounting broken: translated {translated} + unavailable {translation_unavailable} != built {built}"
        )));
    }
    if labeled.len() != translated {
        return Err(AuditError::Stats(format!(
            "classification accounting broken: {} labeled != {translated} translated",
            labeled.len()
        )));
    }

    let mut conflicts: BTreeMap<String, u64> = selection
        .iter()
        .map(|l| (l.code.clone(), 0))
        .collect();
    for probe in &labeled {
        if probe.conflict {
            *conflicts.entry(probe.language.clone()).or_insert(0) += 1;
        }
    }

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        snapshot_sha256: sha256_hex(config.translation_source_path())?,
        config: ConfigEcho::of(config),
        probes: ProbeCounts {
            expected,
            built,
            localization_unavailable,
            translated,
            translation_unavailable,
        },
        conflicts,
    };
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| AuditError::Stats(format!("manifest serialization: {e}")))?;
    std::fs::write(layout.manifest(), text)
        .map_err(|e| AuditError::io(layout.manifest(), e))?;
    Ok(format!(
        "manifest written: {built} probes, {translated} translated"
    ))
}

type StageFn = fn(&RunConfig) -> Result<String>;

/// The six pipeline stages in execution order.
pub const STAGES: [(&str, StageFn); 6] = [
    ("ingest", stage_ingest),
    ("probes", stage_probes),
    ("translate", stage_translate),
    ("classify", stage_classify),
    ("stats", stage_stats),
    ("report", stage_report),
];

/// Runs the whole audit: exactly the six stages, in order, against the same
/// config — so a full run and a stage-by-stage chain are the same code path.
pub fn run_audit(config: &RunConfig) -> Result<Vec<(&'static str, String)>> {
    let mut summaries = Vec::with_capacity(STAGES.len());
    for (name, stage) in STAGES {
        let detail = stage(config).map_err(|e| AuditError::stage(name, e))?;
        summaries.push((name, detail));
    }
    Ok(summaries)
}
