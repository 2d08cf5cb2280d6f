//! Persistent translation store shared by the disk cache and the snapshot
//! fixture.
//!
//! One record per line: source, target, base64(text), base64(output),
//! backend id, timestamp, tab-separated. Base64 keeps arbitrary text inside
//! the line discipline, so the format round-trips bit-exactly. Lines are
//! self-contained; appends write a whole line in one call. Snapshot export
//! sorts by key and writes through a temp file rename.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;

use crate::error::{AuditError, Result};

/// Cache key: exact text plus route and backend, no normalization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StoreKey {
    pub backend_id: String,
    pub source_lang: String,
    pub target_lang: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredValue {
    pub output: String,
    pub retrieved_at: String,
}

#[derive(Debug)]
pub struct TranslationStore {
    entries: HashMap<StoreKey, StoredValue>,
    append_to: Option<File>,
    path: Option<PathBuf>,
}

impl TranslationStore {
    pub fn in_memory() -> TranslationStore {
        TranslationStore {
            entries: HashMap::new(),
            append_to: None,
            path: None,
        }
    }

    /// Opens (or creates) a disk cache; new entries are appended to the file.
    pub fn open(path: &Path) -> Result<TranslationStore> {
        let mut entries = HashMap::new();
        if path.exists() {
            read_lines(path, &mut entries)?;
        } else if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| AuditError::io(parent, e))?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| AuditError::io(path, e))?;
        Ok(TranslationStore {
            entries,
            append_to: Some(file),
            path: Some(path.to_path_buf()),
        })
    }

    /// Loads a snapshot read-only; lookups hit only what was recorded.
    pub fn load_snapshot(path: &Path) -> Result<TranslationStore> {
        let mut entries = HashMap::new();
        read_lines(path, &mut entries)?;
        Ok(TranslationStore {
            entries,
            append_to: None,
            path: Some(path.to_path_buf()),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &StoreKey) -> Option<&StoredValue> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: StoreKey, value: StoredValue) -> Result<()> {
        if let Some(file) = self.append_to.as_mut() {
            let line = format_line(&key, &value);
            file.write_all(line.as_bytes()).map_err(|e| {
                AuditError::io(self.path.clone().unwrap_or_default(), e)
            })?;
        }
        self.entries.insert(key, value);
        Ok(())
    }

    /// Distinct backend ids present, sorted.
    /// Every entry sorted by key, for deterministic merges and audits.
    pub fn entries_sorted(&self) -> Vec<(&StoreKey, &StoredValue)> {
        let mut items: Vec<_> = self.entries.iter().collect();
        items.sort_by_key(|&(key, _)| key);
        items
    }

    pub fn backend_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .entries
            .keys()
            .map(|k| k.backend_id.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Writes every entry sorted by key, atomically (temp file then rename).
    pub fn export_snapshot(&self, path: &Path) -> Result<()> {
        let mut keys: Vec<&StoreKey> = self.entries.keys().collect();
        keys.sort();
        let mut body = String::new();
        for key in keys {
            body.push_str(&format_line(key, &self.entries[key]));
        }
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, body.as_bytes()).map_err(|e| AuditError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| AuditError::io(path, e))?;
        Ok(())
    }
}

fn read_lines(path: &Path, entries: &mut HashMap<StoreKey, StoredValue>) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (key, value) = parse_line(line)
            .map_err(|msg| AuditError::data(path, idx + 1, format!("corrupt record: {msg}")))?;
        // Re-recording a key overwrites; the newest line wins.
        entries.insert(key, value);
    }
    Ok(())
}

fn format_line(key: &StoreKey, value: &StoredValue) -> String {
    debug_assert!(
        [&key.source_lang, &key.target_lang, &key.backend_id, &value.retrieved_at]
            .iter()
            .all(|f| !f.contains('\t') && !f.contains('\n')),
        "plain fields must stay line-safe"
    );
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\n",
        key.source_lang,
        key.target_lang,
        BASE64.encode(&key.text),
        BASE64.encode(&value.output),
        key.backend_id,
        value.retrieved_at,
    )
}

fn parse_line(line: &str) -> Result<(StoreKey, StoredValue), String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 6 {
        return Err(format!("expected 6 tab-separated fields, found {}", fields.len()));
    }
    let text = decode_field(fields[2], "text")?;
    let output = decode_field(fields[3], "output")?;
    Ok((
        StoreKey {
            backend_id: fields[4].to_string(),
            source_lang: fields[0].to_string(),
            target_lang: fields[1].to_string(),
            text,
        },
        StoredValue {
            output,
            retrieved_at: fields[5].to_string(),
        },
    ))
}

fn decode_field(encoded: &str, what: &str) -> Result<String, String> {
    let bytes = BASE64
        .decode(encoded)
        .map_err(|e| format!("{what} field is not base64: {e}"))?;
    String::from_utf8(bytes).map_err(|_| format!("{what} field is not UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(text: &str) -> StoreKey {
        StoreKey {
            backend_id: "test".into(),
            source_lang: "hu".into(),
            target_lang: "en".into(),
            text: text.into(),
        }
    }

    fn value(output: &str) -> StoredValue {
        StoredValue {
            output: output.into(),
            retrieved_at: "2018-04-15T00:00:00Z".into(),
        }
    }

    #[test]
    fn snapshot_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = TranslationStore::in_memory();
        store.insert(key("ő egy ápolónő"), value("she's a nurse")).unwrap();
        store.insert(key("b\ttab and\nnewline"), value("ok")).unwrap();
        store.insert(key("a"), value("x")).unwrap();

        let first = dir.path().join("snap.tsv");
        store.export_snapshot(&first).unwrap();
        let reloaded = TranslationStore::load_snapshot(&first).unwrap();
        let second = dir.path().join("snap2.tsv");
        reloaded.export_snapshot(&second).unwrap();

        let a = std::fs::read(&first).unwrap();
        let b = std::fs::read(&second).unwrap();
        assert_eq!(a, b);
        assert_eq!(reloaded.len(), 3);
        assert_eq!(
            reloaded.get(&key("ő egy ápolónő")).unwrap().output,
            "she's a nurse"
        );
    }

    #[test]
    fn export_is_sorted_by_key() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = TranslationStore::in_memory();
        store.insert(key("zzz"), value("1")).unwrap();
        store.insert(key("aaa"), value("2")).unwrap();
        let path = dir.path().join("snap.tsv");
        store.export_snapshot(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].contains(&BASE64.encode("aaa")));
        assert!(lines[1].contains(&BASE64.encode("zzz")));
    }

    #[test]
    fn corrupt_line_reports_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.tsv");
        let good = format_line(&key("a"), &value("x"));
        std::fs::write(&path, format!("{good}not\ta\tvalid\tline\n")).unwrap();
        let err = TranslationStore::load_snapshot(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn disk_cache_persists_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.tsv");
        {
            let mut store = TranslationStore::open(&path).unwrap();
            store.insert(key("hello"), value("szia")).unwrap();
        }
        let store = TranslationStore::open(&path).unwrap();
        assert_eq!(store.get(&key("hello")).unwrap().output, "szia");
    }

    #[test]
    fn exact_text_is_the_key() {
        let mut store = TranslationStore::in_memory();
        store.insert(key("a b"), value("1")).unwrap();
        assert!(store.get(&key("a  b")).is_none());
        assert!(store.get(&key("A b")).is_none());
        assert!(store.get(&key("a b")).is_some());
    }
}
