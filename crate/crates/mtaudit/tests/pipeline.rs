//! End-to-end pipeline behavior over the shipped fixture: stage composition,
//! frozen analysis outputs, language filtering, snapshot round-trips, CLI
//! exit codes and graceful handling of missing translations.

mod common;

use std::process::Command;

use mtaudit::report::{run_audit, STAGES};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mtaudit"))
}

fn fixture_config_arg() -> String {
    common::workspace_root()
        .join("configs/fixture.toml")
        .to_string_lossy()
        .into_owned()
}

/// Running the six stages one by one must write exactly what `run` writes.
#[test]
fn stage_chain_matches_full_run() {
    let scratch = tempfile::tempdir().unwrap();
    let staged = scratch.path().join("staged");
    let config = common::fixture_config(&staged);
    for (_, stage) in STAGES.iter() {
        stage(&config).expect("stage succeeds");
    }
    let full = common::tree_bytes(common::shared_run_dir());
    let chained = common::tree_bytes(&staged);
    assert_eq!(
        full.keys().collect::<Vec<_>>(),
        chained.keys().collect::<Vec<_>>(),
        "stage-by-stage run lists different files"
    );
    for (name, bytes) in &full {
        assert_eq!(bytes, &chained[name], "stage-by-stage output differs in {name}");
    }
}

/// The analysis outputs over the shipped snapshot are frozen in the repo.
#[test]
fn analysis_outputs_match_frozen_copies() {
    let golden_dir = common::workspace_root().join("fixtures/golden");
    let golden = common::tree_bytes(&golden_dir);
    assert!(!golden.is_empty(), "frozen output copies are missing");
    let run = common::tree_bytes(common::shared_run_dir());
    for (name, bytes) in &golden {
        let produced = run
            .get(name)
            .unwrap_or_else(|| panic!("run produced no {name}"));
        assert_eq!(produced, bytes, "{name} drifted from the frozen copy");
    }
}

/// Restricting to Basque, where translations are dominantly neutral, the
/// male-over-neutral test must accept with the complementary test rejecting,
/// and the marker grid must carry the plain p-value.
#[test]
fn basque_neutral_dominance_shading() {
    let scratch = tempfile::tempdir().unwrap();
    let out = scratch.path().join("eu");
    let status = binary()
        .args([
            "--config",
            &fixture_config_arg(),
            "--languages",
            "eu",
            "--out",
            out.to_str().unwrap(),
            "run",
        ])
        .status()
        .expect("binary runs");
    assert!(status.success(), "eu-only run failed: {status:?}");

    let (header, rows) = common::read_tsv(&out.join("tests/male_vs_neutral_detail.tsv"));
    assert_eq!(header, ["language", "group", "t", "df", "p", "verdict", "shading"]);
    let total = rows
        .iter()
        .find(|r| r[0] == "all" && r[1] == "all")
        .expect("overall row present");
    assert_eq!(total[5], "accept-complement-rejected");
    assert_eq!(total[6], "accept-complement-rejected");

    let (matrix_header, matrix_rows) = common::read_tsv(&out.join("tests/male_vs_neutral.tsv"));
    assert_eq!(matrix_header, ["group", "eu", "total"]);
    let total_row = matrix_rows.iter().find(|r| r[0] == "Total").expect("Total row");
    assert_eq!(total_row[2], "1.000", "p-value marker for the overall cell");

    // The manifest echoes the language filter.
    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("languages = [\"eu\"]"), "manifest echoes --languages");
}

/// Export rewrites the shipped snapshot byte for byte; importing into an
/// empty store and exporting again also reproduces it.
#[test]
fn snapshot_export_and_import_roundtrip() {
    let root = common::workspace_root();
    let shipped = std::fs::read(root.join("fixtures/snapshot.tsv")).unwrap();
    let scratch = tempfile::tempdir().unwrap();

    let exported = scratch.path().join("exported.tsv");
    let status = binary()
        .args(["--config", &fixture_config_arg(), "snapshot", "export"])
        .args(["--to", exported.to_str().unwrap()])
        .status()
        .expect("binary runs");
    assert!(status.success());
    assert_eq!(
        std::fs::read(&exported).unwrap(),
        shipped,
        "export is not byte-identical to the shipped snapshot"
    );

    let rebuilt = scratch.path().join("rebuilt.tsv");
    let status = binary()
        .args(["--config", &fixture_config_arg()])
        .args(["--snapshot", rebuilt.to_str().unwrap()])
        .args(["snapshot", "import"])
        .args(["--from", root.join("fixtures/snapshot.tsv").to_str().unwrap()])
        .status()
        .expect("binary runs");
    assert!(status.success());
    let reexported = scratch.path().join("reexported.tsv");
    let status = binary()
        .args(["--config", &fixture_config_arg()])
        .args(["--snapshot", rebuilt.to_str().unwrap()])
        .args(["snapshot", "export"])
        .args(["--to", reexported.to_str().unwrap()])
        .status()
        .expect("binary runs");
    assert!(status.success());
    assert_eq!(
        std::fs::read(&reexported).unwrap(),
        shipped,
        "import followed by export drifted from the shipped snapshot"
    );
}

/// Exit codes: 2 for configuration problems, 3 for unavailable translation
/// sources, 4 for schema violations in stage files.
#[test]
fn cli_exit_codes() {
    let scratch = tempfile::tempdir().unwrap();

    let missing_config = binary()
        .args(["--config", "/nonexistent/audit.toml", "run"])
        .output()
        .expect("binary runs");
    assert_eq!(missing_config.status.code(), Some(2), "missing config file");

    let bad_backend = binary()
        .args(["--config", &fixture_config_arg(), "--backend", "bogus", "run"])
        .output()
        .expect("binary runs");
    assert_eq!(bad_backend.status.code(), Some(2), "unknown backend kind");

    let missing_snapshot = binary()
        .args(["--config", &fixture_config_arg()])
        .args(["--snapshot", "/nonexistent/snapshot.tsv"])
        .args(["--out", scratch.path().join("x").to_str().unwrap()])
        .args(["run"])
        .output()
        .expect("binary runs");
    assert_eq!(missing_snapshot.status.code(), Some(3), "missing snapshot");

    // Corrupt one stage file's schema tag and replay the next stage.
    let out = scratch.path().join("schema");
    let config = common::fixture_config(&out);
    run_audit(&config).expect("baseline run");
    let translations = out.join("stage/translations.tsv");
    let text = std::fs::read_to_string(&translations).unwrap();
    let corrupted = text.replacen("#schema mtaudit/", "#schema other/", 1);
    assert_ne!(text, corrupted, "expected a schema tag to rewrite");
    std::fs::write(&translations, corrupted).unwrap();
    let schema_violation = binary()
        .args(["--config", &fixture_config_arg()])
        .args(["--out", out.to_str().unwrap()])
        .args(["classify"])
        .output()
        .expect("binary runs");
    assert_eq!(schema_violation.status.code(), Some(4), "schema violation");
    let stderr = String::from_utf8_lossy(&schema_violation.stderr);
    assert!(stderr.contains("classify"), "error names the stage: {stderr}");
}

/// A live-backend run without the configured credential variable fails at
/// startup — before any network activity — naming the variable.
#[test]
fn live_backend_requires_credential_env() {
    let live_config = common::workspace_root().join("configs/live.toml");
    let scratch = tempfile::tempdir().unwrap();
    let output = binary()
        .args(["--config", live_config.to_str().unwrap()])
        .args(["--out", scratch.path().join("out").to_str().unwrap()])
        .args(["run"])
        .env_remove("MTAUDIT_TRANSLATE_TOKEN")
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(2), "missing credential is a config error");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("MTAUDIT_TRANSLATE_TOKEN"),
        "error names the credential variable: {stderr}"
    );
}

/// Dropping one language's recorded sentences makes those probes unavailable
/// without failing the run, and the manifest counts still reconcile.
#[test]
fn missing_translations_are_reported_not_fatal() {
    let root = common::workspace_root();
    let scratch = tempfile::tempdir().unwrap();

    let shipped = std::fs::read_to_string(root.join("fixtures/snapshot.tsv")).unwrap();
    let truncated: String = shipped
        .lines()
        .filter(|line| !line.starts_with("eu\t"))
        .map(|line| format!("{line}\n"))
        .collect();
    let snapshot = scratch.path().join("truncated.tsv");
    std::fs::write(&snapshot, truncated).unwrap();

    let out = scratch.path().join("out");
    let status = binary()
        .args(["--config", &fixture_config_arg()])
        .args(["--snapshot", snapshot.to_str().unwrap()])
        .args(["--out", out.to_str().unwrap()])
        .args(["run"])
        .status()
        .expect("binary runs");
    assert!(status.success(), "missing translations must not fail the run");

    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    let count = |key: &str| -> u64 {
        manifest
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")))
            .unwrap_or_else(|| panic!("manifest key {key}"))
            .parse()
            .unwrap()
    };
    let built = count("built");
    let translated = count("translated");
    let unavailable = count("translation_unavailable");
    assert_eq!(built, 17680);
    assert_eq!(unavailable, 1040, "one occupation and one adjective probe per word");
    assert_eq!(translated + unavailable, built, "manifest counts reconcile");

    let (_, failures) = common::read_stage_tsv(&out.join("stage/translate_unavailable.tsv"));
    assert_eq!(failures.len(), 1040);
    assert!(failures.iter().all(|row| row[0] == "eu"));

    // Downstream tables simply lack the language.
    let (_, languages) = common::read_tsv(&out.join("tables/gender_by_language.tsv"));
    assert!(languages.iter().all(|row| row[0] != "eu"));
    assert!(languages.iter().any(|row| row[0] == "fi"));
}

/// The ingest stage honors the category filter end to end.
#[test]
fn category_filter_narrows_the_run() {
    let root = common::workspace_root();
    let scratch = tempfile::tempdir().unwrap();
    let out = scratch.path().join("legal");

    // No --categories flag exists; the filter lives in the config file.
    let config_text = std::fs::read_to_string(root.join("configs/fixture.toml"))
        .unwrap()
        .replace(
            "[analysis]\nalpha = 0.05",
            "[analysis]\nalpha = 0.05\ncategories = [\"Legal\"]",
        )
        .replace("\"../", &format!("\"{}/", root.display()));
    let config_path = scratch.path().join("legal.toml");
    std::fs::write(&config_path, config_text).unwrap();

    let status = binary()
        .args(["--config", config_path.to_str().unwrap()])
        .args(["--out", out.to_str().unwrap()])
        .args(["run"])
        .status()
        .expect("binary runs");
    assert!(status.success());

    let (_, corpus_rows) = common::read_stage_tsv(&out.join("stage/corpus.tsv"));
    assert_eq!(corpus_rows.len(), 7, "Legal keeps seven occupations");
    assert!(corpus_rows.iter().all(|row| row[1] == "Legal"));

    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    // 12 languages, one occupation template each except Bengali's six, plus
    // the same shape again for 21 adjectives.
    let expected = 7 * (11 + 6) + 21 * (11 + 6);
    assert!(
        manifest.contains(&format!("expected = {expected}")),
        "manifest expected-probe count for the Legal slice"
    );
}
