//! Emitters for the final output files: gender share tables, hypothesis-test
//! matrices, plot data (histograms, heatmaps) and the participation
//! comparison. All files are UTF-8 tab-separated text with a single header
//! line; every percentage is the aggregation module's fraction rounded
//! half-up to three decimals of a percent.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::classifier::GenderLabel;
use crate::error::{AuditError, Result};
use crate::stats::{
    CountHistogram, Heatmap, ParticipationComparison, ResultSet, Scope, SubjectScope, TestResult,
    Verdict,
};

use super::stage_io::escape_field;

fn half_up_3(x: f64) -> f64 {
    (x * 1000.0 + 0.5).floor() / 1000.0
}

/// A fraction rendered as a percentage, rounded half-up to 3 decimals.
pub fn pct3(fraction: f64) -> String {
    format!("{:.3}", half_up_3(fraction * 100.0))
}

/// A plain number rounded half-up to 3 decimals (p-value cells).
pub fn num3(x: f64) -> String {
    format!("{:.3}", half_up_3(x))
}

/// Writes a header + rows table; fields are escaped like stage files.
pub fn write_table<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| AuditError::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| AuditError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| AuditError::io(path, e);
    let head: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
    writeln!(w, "{}", head.join("\t")).map_err(io_err)?;
    for row in rows {
        debug_assert_eq!(row.len(), head.len());
        let line: Vec<String> = row.iter().map(|f| escape_field(f)).collect();
        writeln!(w, "{}", line.join("\t")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

fn stats_row(set: &ResultSet, name: &str, scope: &Scope) -> Option<Vec<String>> {
    // The only way cell_stats fails is an empty scope; such rows are omitted.
    let cell = set.cell_stats(scope).ok()?;
    Some(vec![
        name.to_string(),
        cell.n_probes.to_string(),
        pct3(cell.pct_female),
        pct3(cell.pct_male),
        pct3(cell.pct_neutral),
        pct3(cell.pct_undetermined),
    ])
}

const GENDER_HEADER: [&str; 6] = ["name", "n_probes", "female", "male", "neutral", "undetermined"];

/// The four share tables: occupation results by language, category and
/// merged group, and adjective results by adjective. Each ends with a
/// probe-weighted Total row.
pub fn emit_gender_tables(set: &ResultSet, tables_dir: &Path) -> Result<()> {
    let mut rows = Vec::new();
    for (code, name) in set.languages() {
        let scope = Scope {
            language: Some(code.clone()),
            subjects: SubjectScope::AllOccupations,
        };
        if let Some(mut row) = stats_row(set, name, &scope) {
            row.insert(0, code.clone());
            rows.push(row);
        }
    }
    let total_scope = Scope {
        language: None,
        subjects: SubjectScope::AllOccupations,
    };
    if let Some(mut row) = stats_row(set, "Total", &total_scope) {
        row.insert(0, "total".to_string());
        rows.push(row);
    }
    write_table(
        &tables_dir.join("gender_by_language.tsv"),
        &["code", "name", "n_probes", "female", "male", "neutral", "undetermined"],
        &rows,
    )?;

    let mut rows = Vec::new();
    for category in set.categories() {
        let scope = Scope {
            language: None,
            subjects: SubjectScope::Category(category.clone()),
        };
        rows.extend(stats_row(set, category, &scope));
    }
    rows.extend(stats_row(set, "Total", &total_scope));
    write_table(&tables_dir.join("gender_by_category.tsv"), &GENDER_HEADER, &rows)?;

    let mut rows = Vec::new();
    for group in set.groups() {
        let scope = Scope {
            language: None,
            subjects: SubjectScope::Group(group.clone()),
        };
        rows.extend(stats_row(set, group, &scope));
    }
    rows.extend(stats_row(set, "Total", &total_scope));
    write_table(&tables_dir.join("gender_by_group.tsv"), &GENDER_HEADER, &rows)?;

    let mut rows = Vec::new();
    for adjective in set.adjectives() {
        let scope = Scope {
            language: None,
            subjects: SubjectScope::Adjective(adjective.clone()),
        };
        rows.extend(stats_row(set, adjective, &scope));
    }
    let all_adjectives = Scope {
        language: None,
        subjects: SubjectScope::AllAdjectives,
    };
    rows.extend(stats_row(set, "Total", &all_adjectives));
    write_table(&tables_dir.join("gender_by_adjective.tsv"), &GENDER_HEADER, &rows)?;
    Ok(())
}

/// Cell shading class for a verdict, as written into the test matrices.
pub fn shading(verdict: Verdict) -> &'static str {
    match verdict {
        Verdict::Reject | Verdict::Degenerate => "none",
        Verdict::Accept => "accept",
        Verdict::AcceptComplementRejected => "accept-complement-rejected",
    }
}

/// Matrix cell marker: the p-value, `<alpha` under rejection, `*` when the
/// test degenerated.
pub fn marker(result: &TestResult) -> String {
    match result.verdict {
        Verdict::Degenerate => "*".to_string(),
        _ if result.p < result.alpha => format!("<{}", result.alpha),
        _ => num3(result.p),
    }
}

/// One hypothesis-test matrix (groups × languages, with Total margins) plus
/// its long-format detail file carrying full-precision statistics.
pub fn emit_test_matrix(
    set: &ResultSet,
    a: GenderLabel,
    b: GenderLabel,
    alpha: f64,
    tests_dir: &Path,
    stem: &str,
) -> Result<()> {
    let mut columns: Vec<Option<String>> = set
        .languages()
        .iter()
        .map(|(code, _)| Some(code.clone()))
        .collect();
    columns.push(None);
    let mut row_groups: Vec<Option<String>> =
        set.groups().iter().map(|g| Some(g.clone())).collect();
    row_groups.push(None);

    let mut header = vec!["group".to_string()];
    header.extend(
        columns
            .iter()
            .map(|c| c.clone().unwrap_or_else(|| "total".to_string())),
    );

    let mut matrix = Vec::new();
    let mut detail = Vec::new();
    for group in &row_groups {
        let mut row = vec![group.clone().unwrap_or_else(|| "Total".to_string())];
        for language in &columns {
            match set.gender_pair_test(language.as_deref(), group.as_deref(), a, b, alpha) {
                Ok(result) => {
                    row.push(marker(&result));
                    detail.push(vec![
                        language.clone().unwrap_or_else(|| "all".to_string()),
                        group.clone().unwrap_or_else(|| "all".to_string()),
                        format!("{:.12e}", result.t),
                        result.df.to_string(),
                        format!("{:.12e}", result.p),
                        result.verdict.as_str().to_string(),
                        shading(result.verdict).to_string(),
                    ]);
                }
                // Fewer than two occupations in the cell: no test to run.
                Err(AuditError::Stats(_)) => row.push("n/a".to_string()),
                Err(other) => return Err(other),
            }
        }
        matrix.push(row);
    }
    write_table(&tests_dir.join(format!("{stem}.tsv")), &header, &matrix)?;
    write_table(
        &tests_dir.join(format!("{stem}_detail.tsv")),
        &["language", "group", "t", "df", "p", "verdict", "shading"],
        &detail,
    )?;
    Ok(())
}

/// Pronoun-count histogram: one row per count value, one column per merged
/// group plus a total column.
pub fn emit_histogram(hist: &CountHistogram, path: &Path) -> Result<()> {
    let mut header = vec!["count".to_string()];
    header.extend(hist.groups.iter().cloned());
    header.push("total".to_string());
    let rows: Vec<Vec<String>> = hist
        .bins
        .iter()
        .map(|bin| {
            let mut row = vec![bin.value.to_string()];
            row.extend(bin.counts.iter().map(|c| c.to_string()));
            row.push(bin.counts.iter().sum::<u64>().to_string());
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Language × group heatmap, axes pre-sorted by the aggregation module.
pub fn emit_heatmap(map: &Heatmap, path: &Path) -> Result<()> {
    let mut header = vec!["language".to_string()];
    header.extend(map.cols.iter().cloned());
    let rows: Vec<Vec<String>> = map
        .rows
        .iter()
        .zip(&map.values)
        .map(|((_, name), values)| {
            let mut row = vec![name.clone()];
            row.extend(values.iter().map(|&v| pct3(v)));
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

/// The participation comparison: histogram plot data, the excluded-name
/// list and a key/value summary with full-precision test statistics.
pub fn emit_participation(
    cmp: &ParticipationComparison,
    tables_dir: &Path,
    plots_dir: &Path,
) -> Result<()> {
    let rows: Vec<Vec<String>> = cmp
        .participation_hist
        .bins
        .iter()
        .zip(&cmp.translated_hist.bins)
        .map(|(p, t)| {
            debug_assert_eq!(p.lower, t.lower);
            vec![
                format!("{:.6}", p.lower),
                format!("{:.6}", p.upper),
                p.count.to_string(),
                t.count.to_string(),
            ]
        })
        .collect();
    write_table(
        &plots_dir.join("participation_hist.tsv"),
        &["lower", "upper", "participation", "translated_female"],
        &rows,
    )?;

    let excluded: Vec<Vec<String>> = cmp
        .excluded_zero_probe
        .iter()
        .map(|name| vec![name.clone()])
        .collect();
    write_table(
        &tables_dir.join("participation_excluded.tsv"),
        &["name"],
        &excluded,
    )?;

    let kv = |k: &str, v: String| vec![k.to_string(), v];
    let rows = vec![
        kv("occupations_used", cmp.occupations_used.to_string()),
        kv("excluded_zero_probe", cmp.excluded_zero_probe.len().to_string()),
        kv("mean_participation", format!("{:.6}", cmp.mean_participation)),
        kv("var_participation", format!("{:.6}", cmp.var_participation)),
        kv(
            "mean_translated_female",
            format!("{:.6}", cmp.mean_translated_female),
        ),
        kv(
            "var_translated_female",
            format!("{:.6}", cmp.var_translated_female),
        ),
        kv("t_statistic", format!("{:.12e}", cmp.test.t)),
        kv("degrees_of_freedom", cmp.test.df.to_string()),
        kv("p_value", format!("{:.12e}", cmp.test.p)),
        kv("alpha", cmp.test.alpha.to_string()),
        kv("verdict", cmp.test.verdict.as_str().to_string()),
    ];
    write_table(
        &tables_dir.join("participation_summary.tsv"),
        &["key", "value"],
        &rows,
    )
}
