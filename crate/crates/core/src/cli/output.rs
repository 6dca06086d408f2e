//! Result tables, summaries and where they go.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::Result;

/// Version string carried by every summary.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Output of one command.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Value,
    /// One-line human summary printed when no format is requested.
    pub text: Option<String>,
}

impl Report {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            ..Default::default()
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }
}

/// Formats a cell: integers plainly, floats in shortest round-trip form.
#[macro_export]
macro_rules! cells {
    ($($x:expr),* $(,)?) => { vec![$(format!("{}", $x)),*] };
}

/// CSV body with a `# config: …` echo line on top.
pub fn render_csv(report: &Report, config: &Value) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# config: {config}");
    let _ = writeln!(out, "{}", report.columns.join(","));
    for row in &report.rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn render_summary(command: &str, report: &Report, config: &Value, wall_time: f64) -> String {
    let doc = json!({
        "version": VERSION,
        "command": command,
        "config": config,
        "results": report.summary,
        "wall_time_s": wall_time,
    });
    serde_json::to_string_pretty(&doc).unwrap_or_default() + "\n"
}

fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Writes the report: CSV to `out` (summary JSON next to it), and to stdout
/// the requested format, or the text line if none was requested.
pub fn emit(
    command: &str,
    report: &Report,
    config: &Value,
    out: Option<&Path>,
    format: Option<&str>,
    wall_time: f64,
) -> Result<()> {
    let csv = render_csv(report, config);
    let summary = render_summary(command, report, config, wall_time);
    if let Some(path) = out {
        std::fs::write(path, &csv)?;
        let mut json_path = summary_path(path);
        if json_path == path {
            json_path = path.with_extension("summary.json");
        }
        std::fs::write(json_path, &summary)?;
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match (format, &report.text) {
        (Some("json"), _) => lock.write_all(summary.as_bytes())?,
        (Some(_), _) | (None, None) => {
            if out.is_none() || format.is_some() {
                lock.write_all(csv.as_bytes())?
            }
        }
        (None, Some(text)) => writeln!(lock, "{text}")?,
    }
    Ok(())
}
