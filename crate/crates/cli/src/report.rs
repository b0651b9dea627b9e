use aip_core::aip::{Diagnostic, Severity};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_PARSE: i32 = 3;

/// Failure class of an error diagnostic; decides the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Parse,
    Validation,
    Numerical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

impl InputRecord {
    pub fn new(role: &str, path: &str, content: &[u8]) -> Self {
        let digest = Sha256::digest(content);
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self { role: role.into(), path: path.into(), sha256, bytes: content.len() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub grid: usize,
    pub seed: u64,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<InputRecord>,
    pub settings: Settings,
    pub status: String,
    pub exit_code: i32,
    pub diagnostics: Vec<Diagnostic>,
    /// Failure class of each error diagnostic, in order.
    pub failures: Vec<Kind>,
    pub result: Map<String, Value>,
    #[serde(skip)]
    pub summary: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}: {} (exit {})\n", self.command, self.status, self.exit_code);
        for d in &self.diagnostics {
            let sev = match d.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
                Severity::Info => "info",
            };
            out.push_str(&format!("  {sev:7} {}: {}\n", d.code, d.message));
        }
        for line in &self.summary {
            out.push_str(&format!("  {line}\n"));
        }
        out
    }
}

/// Collects diagnostics, inputs and result fields while a command runs.
pub(crate) struct Ctx {
    pub diagnostics: Vec<Diagnostic>,
    pub failures: Vec<Kind>,
    pub inputs: Vec<InputRecord>,
    pub result: Map<String, Value>,
    pub summary: Vec<String>,
}

/// Marker for "stop here, the reason is already recorded".
pub(crate) struct Stop;

pub(crate) type Step<T> = Result<T, Stop>;

impl Ctx {
    pub fn new() -> Self {
        Self { diagnostics: Vec::new(), failures: Vec::new(), inputs: Vec::new(), result: Map::new(), summary: Vec::new() }
    }

    pub fn fail(&mut self, kind: Kind, code: &str, message: impl Into<String>) -> Stop {
        self.diagnostics.push(Diagnostic::new(code, Severity::Error, message.into()));
        self.failures.push(kind);
        Stop
    }

    pub fn warn(&mut self, code: &str, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic::new(code, Severity::Warning, message.into()));
    }

    pub fn info(&mut self, code: &str, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic::new(code, Severity::Info, message.into()));
    }

    pub fn set<V: Serialize>(&mut self, key: &str, value: V) {
        self.result.insert(key.into(), serde_json::to_value(value).expect("result values are serializable"));
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    pub fn finish(self, command: &str, settings: Settings) -> Report {
        let exit_code = if self.failures.contains(&Kind::Parse) {
            EXIT_PARSE
        } else if self.failures.contains(&Kind::Validation) {
            EXIT_VALIDATION
        } else if self.failures.contains(&Kind::Numerical) {
            EXIT_NUMERICAL
        } else {
            EXIT_OK
        };
        let status = match exit_code {
            EXIT_OK => "ok",
            EXIT_VALIDATION => "validation failure",
            EXIT_NUMERICAL => "numerical failure",
            _ => "parse error",
        };
        Report {
            tool: "aip".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            inputs: self.inputs,
            settings,
            status: status.into(),
            exit_code,
            diagnostics: self.diagnostics,
            failures: self.failures,
            result: self.result,
            summary: self.summary,
        }
    }
}
