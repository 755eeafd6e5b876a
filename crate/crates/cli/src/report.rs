//! Machine-readable report envelope shared by all subcommands.

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Summary {
    pub passed: bool,
    pub checks_passed: usize,
    pub checks_total: usize,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub seed: u64,
    pub command: String,
    pub parameters: Value,
    pub results: Value,
    pub summary: Summary,
}

impl Report {
    pub fn new(
        command: &str,
        seed: u64,
        parameters: Value,
        results: Value,
        checks: &[bool],
    ) -> Self {
        let checks_passed = checks.iter().filter(|c| **c).count();
        Report {
            schema_version: SCHEMA_VERSION,
            tool_version: ftoffoli::VERSION,
            seed,
            command: command.to_string(),
            parameters,
            results,
            summary: Summary {
                passed: checks_passed == checks.len(),
                checks_passed,
                checks_total: checks.len(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

/// Minimal CSV writer; fields containing commas or quotes are quoted.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let field = |f: String| {
        if f.contains([',', '"', '\n']) {
            format!("\"{}\"", f.replace('"', "\"\""))
        } else {
            f
        }
    };
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.into_iter().map(field).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}
