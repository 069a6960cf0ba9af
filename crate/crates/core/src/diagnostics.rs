use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::SourceLocation;

/// Rule catalog. Declaration order is the reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    /// Syntax or declaration error in the source text.
    P0,
    /// Signal with more than one sender.
    N1,
    /// Connector endpoint does not resolve.
    N2,
    /// Connector source is also one of its targets.
    N3,
    /// Net connector without signal or with a non-digital stereotype.
    N4,
    /// Template recursion, unknown template or duplicate sibling names.
    N5,
    /// Declared port never used by a connector.
    N6,
    /// View element not part of the complete net.
    R1,
    /// View nesting not backed by a whole-part relation.
    R2,
    /// Whole-part relation of the net hidden in the view.
    R3,
    /// View communication not present in the net.
    R4,
    /// Reserved: superblock endpoints are accepted by R4.
    R5,
    /// Specialization is not a subset of its base view.
    R6,
    F1,
    F2,
    F3,
    B1,
    B2,
    B3,
}

impl Code {
    pub const ALL: [Code; 19] = [
        Code::P0,
        Code::N1,
        Code::N2,
        Code::N3,
        Code::N4,
        Code::N5,
        Code::N6,
        Code::R1,
        Code::R2,
        Code::R3,
        Code::R4,
        Code::R5,
        Code::R6,
        Code::F1,
        Code::F2,
        Code::F3,
        Code::B1,
        Code::B2,
        Code::B3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Code::P0 => "P0",
            Code::N1 => "N1",
            Code::N2 => "N2",
            Code::N3 => "N3",
            Code::N4 => "N4",
            Code::N5 => "N5",
            Code::N6 => "N6",
            Code::R1 => "R1",
            Code::R2 => "R2",
            Code::R3 => "R3",
            Code::R4 => "R4",
            Code::R5 => "R5",
            Code::R6 => "R6",
            Code::F1 => "F1",
            Code::F2 => "F2",
            Code::F3 => "F3",
            Code::B1 => "B1",
            Code::B2 => "B2",
            Code::B3 => "B3",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown diagnostic code `{0}`")]
pub struct UnknownCode(pub String);

impl FromStr for Code {
    type Err = UnknownCode;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Code::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownCode(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// One rule finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "DiagnosticRepr", try_from = "DiagnosticRepr")]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    /// Qualified name or declaration the finding is about.
    pub subject: String,
    pub message: String,
    pub location: Option<SourceLocation>,
}

impl Diagnostic {
    pub fn error(code: Code, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Error,
            subject: subject.into(),
            message: message.into(),
            location: None,
        }
    }

    pub fn warning(code: Code, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, subject, message)
        }
    }

    pub fn at(mut self, location: Option<SourceLocation>) -> Self {
        self.location = location;
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}: {}",
            self.code, self.severity, self.subject, self.message
        )
    }
}

/// Sorts by (code, subject), keeping insertion order among equal keys.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| (a.code, &a.subject).cmp(&(b.code, &b.subject)));
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

#[derive(Serialize, Deserialize)]
struct DiagnosticRepr {
    code: String,
    severity: Severity,
    subject: String,
    message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    line: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    column: Option<u32>,
}

impl From<Diagnostic> for DiagnosticRepr {
    fn from(d: Diagnostic) -> Self {
        DiagnosticRepr {
            code: d.code.as_str().to_string(),
            severity: d.severity,
            subject: d.subject,
            message: d.message,
            line: d.location.map(|l| l.line),
            column: d.location.map(|l| l.column),
        }
    }
}

impl TryFrom<DiagnosticRepr> for Diagnostic {
    type Error = UnknownCode;
    fn try_from(r: DiagnosticRepr) -> Result<Self, Self::Error> {
        let location = match (r.line, r.column) {
            (Some(line), Some(column)) => Some(SourceLocation { line, column }),
            _ => None,
        };
        Ok(Diagnostic {
            code: r.code.parse()?,
            severity: r.severity,
            subject: r.subject,
            message: r.message,
            location,
        })
    }
}
