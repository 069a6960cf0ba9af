use serde::{Deserialize, Serialize};

use crate::diagnostics::{sort_diagnostics, Diagnostic, Severity};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub errors: usize,
    pub warnings: usize,
}

impl Summary {
    pub fn of(diags: &[Diagnostic]) -> Self {
        let errors = diags
            .iter()
            .filter(|d| d.severity == Severity::Error)
            .count();
        Summary {
            errors,
            warnings: diags.len() - errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub subject: String,
    pub diagnostics: Vec<Diagnostic>,
    pub summary: Summary,
}

impl Report {
    /// Sorts the diagnostics and derives the summary from them.
    pub fn new(subject: impl Into<String>, mut diagnostics: Vec<Diagnostic>) -> Self {
        sort_diagnostics(&mut diagnostics);
        Report {
            tool_version: TOOL_VERSION.to_string(),
            subject: subject.into(),
            summary: Summary::of(&diagnostics),
            diagnostics,
        }
    }

    pub fn has_errors(&self) -> bool {
        self.summary.errors > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

pub fn render_report(report: &Report, format: Format) -> String {
    match format {
        Format::Text => {
            let mut out = String::new();
            for d in &report.diagnostics {
                out.push_str(&d.to_string());
                out.push('\n');
            }
            out.push_str(&format!(
                "{} errors, {} warnings\n",
                report.summary.errors, report.summary.warnings
            ));
            out
        }
        Format::Json => {
            let mut s = serde_json::to_string(report).expect("reports always serialize");
            s.push('\n');
            s
        }
    }
}
