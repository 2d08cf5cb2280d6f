//! Schema-tagged tab-separated stage files.
//!
//! Every intermediate pipeline file starts with a `#schema` line naming its
//! format and version, followed by a fixed header. Readers verify both and
//! fail hard on mismatch, so a stage never silently consumes a file written
//! by a different stage or an older layout. Fields are escaped so text with
//! tabs or newlines survives a round trip while the files stay greppable and
//! hand-writable.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{AuditError, Result};

/// Escapes a field for a tab-separated line: backslash, tab, LF, CR.
pub fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out
}

pub fn unescape_field(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}

/// Writes a stage file: schema line, header, one escaped row per record.
pub fn write_stage_file<I>(path: &Path, schema: &str, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| AuditError::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| AuditError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| AuditError::io(path, e);
    writeln!(w, "#schema {schema}").map_err(io_err)?;
    writeln!(w, "{}", header.join("\t")).map_err(io_err)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let line: Vec<String> = row.iter().map(|f| escape_field(f)).collect();
        writeln!(w, "{}", line.join("\t")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Reads a stage file, verifying its schema tag and header.
pub fn read_stage_file(path: &Path, schema: &str, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let expected_tag = format!("#schema {schema}");
    let (_, first) = lines.next().ok_or_else(|| AuditError::Schema {
        path: path.to_path_buf(),
        expected: expected_tag.clone(),
        found: "an empty file".into(),
    })?;
    if first != expected_tag {
        return Err(AuditError::Schema {
            path: path.to_path_buf(),
            expected: expected_tag,
            found: first.to_string(),
        });
    }

    let expected_header = header.join("\t");
    let (_, second) = lines.next().ok_or_else(|| AuditError::Schema {
        path: path.to_path_buf(),
        expected: expected_header.clone(),
        found: "missing header line".into(),
    })?;
    if second != expected_header {
        return Err(AuditError::Schema {
            path: path.to_path_buf(),
            expected: expected_header,
            found: second.to_string(),
        });
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            return Err(AuditError::data(
                path,
                idx + 1,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        let mut row = Vec::with_capacity(fields.len());
        for field in fields {
            row.push(
                unescape_field(field).map_err(|msg| AuditError::data(path, idx + 1, msg))?,
            );
        }
        rows.push(row);
    }
    Ok(rows)
}
