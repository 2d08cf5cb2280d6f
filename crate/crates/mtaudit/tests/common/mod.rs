//! Shared helpers for the integration suites: an independent Student-t
//! survival-function oracle and utilities for running the pipeline against
//! the shipped fixture data.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use mtaudit::config::{Overrides, RunConfig};
use mtaudit::report::run_audit;

/// Ratio Gamma((v+1)/2) / Gamma(v/2) for integer v >= 1, via the downward
/// recurrence r(v) = ((v-1)/2) / r(v-1) from the exact base
/// r(1) = Gamma(1)/Gamma(1/2) = 1/sqrt(pi). Stays bounded for any df, unlike
/// evaluating the two gamma factors separately.
fn gamma_half_ratio(v: u64) -> f64 {
    assert!(v >= 1);
    let mut r = 1.0 / std::f64::consts::PI.sqrt();
    for k in 2..=v {
        r = ((k - 1) as f64 / 2.0) / r;
    }
    r
}

fn t_density(t: f64, df: u64) -> f64 {
    let v = df as f64;
    let norm = gamma_half_ratio(df) / (v * std::f64::consts::PI).sqrt();
    norm * (1.0 + t * t / v).powf(-(v + 1.0) / 2.0)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, whole: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let left = simpson(f, a, c);
    let right = simpson(f, c, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, c, eps / 2.0, left, depth - 1)
            + adaptive(f, c, b, eps / 2.0, right, depth - 1)
    }
}

/// P(T > t) for Student's t with `df` degrees of freedom, by adaptive
/// Simpson quadrature of the density. Absolute error well below 1e-11 over
/// the ranges the tests draw from.
pub fn student_t_sf_oracle(t: f64, df: u64) -> f64 {
    if t < 0.0 {
        return 1.0 - student_t_sf_oracle(-t, df);
    }
    if t == 0.0 {
        return 0.5;
    }
    let f = move |x: f64| t_density(x, df);
    let whole = simpson(&f, 0.0, t);
    let integral = adaptive(&f, 0.0, t, 1e-13, whole, 48);
    (0.5 - integral).clamp(0.0, 1.0)
}

/// Repository root, resolved from the crate directory.
pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root resolves")
}

/// Loads the shipped fixture config with the output directory redirected.
pub fn fixture_config(out_dir: &Path) -> RunConfig {
    let root = workspace_root();
    let overrides = Overrides {
        out_dir: Some(out_dir.to_path_buf()),
        ..Overrides::default()
    };
    RunConfig::load(&root.join("configs/fixture.toml"), &overrides)
        .expect("shipped fixture config loads")
}

/// One pipeline run over the shipped fixture, shared by tests in the same
/// binary. The directory outlives the process; the OS temp dir owns it.
pub fn shared_run_dir() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = std::env::temp_dir().join(format!("mtaudit-it-{}", std::process::id()));
        std::fs::create_dir_all(&dir).expect("temp run dir");
        let config = fixture_config(&dir);
        run_audit(&config).expect("pipeline run over shipped fixture succeeds");
        dir
    })
}

/// All files under `dir`, keyed by path relative to it.
pub fn tree_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    collect(dir, dir, &mut out);
    out
}

fn collect(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).expect("readable dir") {
        let path = entry.expect("dir entry").path();
        if path.is_dir() {
            collect(root, &path, out);
        } else {
            let rel = path
                .strip_prefix(root)
                .expect("path under root")
                .to_string_lossy()
                .replace('\\', "/");
            out.insert(rel, std::fs::read(&path).expect("readable file"));
        }
    }
}

/// Parses a two-column key/value TSV (header line skipped).
pub fn read_kv_tsv(path: &Path) -> BTreeMap<String, String> {
    let text = std::fs::read_to_string(path).expect("readable kv table");
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (k, v) = l.split_once('\t').expect("two columns");
            (k.to_string(), v.to_string())
        })
        .collect()
}

/// Reads a schema-tagged stage file: drops the `#schema` line, returns the
/// header and unescaped rows.
pub fn read_stage_tsv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).expect("readable stage file");
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let tag = lines.next().expect("schema line");
    assert!(tag.starts_with("#schema "), "stage file must carry a schema tag");
    let header: Vec<String> = lines
        .next()
        .expect("header line")
        .split('\t')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| {
            l.split('\t')
                .map(|f| mtaudit::report::stage_io::unescape_field(f).expect("valid escape"))
                .collect()
        })
        .collect();
    (header, rows)
}

/// Splits a plain TSV into header and rows (no unescaping; the callers only
/// touch files whose fields cannot contain escapes).
pub fn read_tsv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).expect("readable table");
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let header: Vec<String> = lines
        .next()
        .expect("header line")
        .split('\t')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect();
    (header, rows)
}
