//! Serialization of results with a reproducibility header.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::Resolved;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn num(v: f64) -> String {
    format!("{v}")
}

/// RFC-4180 quoting for free-text fields.
pub fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn meta_lines(resolved: &Resolved, extra: &[String]) -> Vec<String> {
    let mut lines = vec![
        format!("dmetro {VERSION}"),
        format!("command: {}", resolved.command),
        format!("config-sha256: {}", resolved.hash()),
        format!("gamma-assumed: {}", resolved.gamma_assumed),
        format!("config: {}", resolved.to_json()),
    ];
    lines.extend(extra.iter().cloned());
    lines
}

/// `#`-prefixed metadata, a header row, data rows and optional `#` footer lines.
pub fn csv(
    resolved: &Resolved,
    extra_meta: &[String],
    header: &[&str],
    rows: &[Vec<String>],
    footer: &[String],
) -> String {
    let mut out = String::new();
    for line in meta_lines(resolved, extra_meta) {
        out.push_str("# ");
        out.push_str(&line);
        out.push_str("\r\n");
    }
    out.push_str(&header.join(","));
    out.push_str("\r\n");
    for row in rows {
        out.push_str(&row.join(","));
        out.push_str("\r\n");
    }
    for line in footer {
        out.push_str("# ");
        out.push_str(line);
        out.push_str("\r\n");
    }
    out
}

pub fn meta_json(resolved: &Resolved) -> Value {
    json!({
        "version": VERSION,
        "command": resolved.command,
        "config-sha256": resolved.hash(),
        "gamma-assumed": resolved.gamma_assumed,
        "config": serde_json::from_str::<Value>(&resolved.to_json()).expect("round trip"),
    })
}

pub fn json_doc(resolved: &Resolved, result: Value) -> String {
    let mut s =
        serde_json::to_string_pretty(&json!({ "meta": meta_json(resolved), "result": result }))
            .expect("values serialize");
    s.push('\n');
    s
}

pub fn write_to(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Parses the data rows of a CSV produced by [`csv`].
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut lines = text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("input table is empty".into()))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}
