use std::collections::BTreeMap;

use geoconvex::verify::{aggregate, CheckRecord, CheckStatus};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// One flat JSON object per invocation. Command-specific fields are
/// flattened in key order so reports diff cleanly.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub input_digest: String,
    pub seed: u64,
    pub status: String,
    pub exit_code: i32,
    pub checks: Vec<CheckRecord>,
    #[serde(flatten)]
    pub fields: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_offset: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_line: Option<usize>,
    pub wall_time_ms: f64,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Report {
    pub fn new(command: &str, input: &[u8], seed: u64) -> Self {
        Report {
            command: command.to_string(),
            input_digest: digest(input),
            seed,
            status: CheckStatus::Pass.to_string(),
            exit_code: EXIT_PASS,
            checks: Vec::new(),
            fields: BTreeMap::new(),
            error_kind: None,
            error_message: None,
            error_offset: None,
            error_line: None,
            wall_time_ms: 0.0,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.fields.insert(key.to_string(), value.into());
    }

    pub fn check(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    /// Status and exit code from the checks.
    pub fn finish(&mut self) {
        let status = aggregate(self.checks.iter().map(|c| c.status));
        self.status = status.to_string();
        self.exit_code = match status {
            CheckStatus::Pass => EXIT_PASS,
            CheckStatus::Fail => EXIT_FAIL,
            CheckStatus::Inconclusive => EXIT_INCONCLUSIVE,
        };
    }

    pub fn fail_with(&mut self, err: &CliError) {
        self.exit_code = err.exit_code();
        self.status = if self.exit_code == EXIT_INCONCLUSIVE { "inconclusive" } else { "error" }.to_string();
        self.error_kind = Some(err.kind().to_string());
        self.error_message = Some(err.to_string());
        self.error_offset = err.offset();
        self.error_line = err.line();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// The JSON with the timing field removed; equal across reruns.
    pub fn canonical(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        if let Value::Object(map) = &mut v {
            map.remove("wall_time_ms");
        }
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(digest(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn flat_layout() {
        let mut r = Report::new("project", b"x", 7);
        r.set("distance", 0.5);
        r.check(CheckRecord::at_most("vi", 1e-9, 1e-6));
        r.finish();
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["distance"], 0.5);
        assert_eq!(v["status"], "pass");
        assert_eq!(v["checks"][0]["name"], "vi");
        assert!(v.get("error_kind").is_none());
    }

    #[test]
    fn failing_check_exits_one() {
        let mut r = Report::new("kkt", b"", 0);
        r.check(CheckRecord::at_most("a", 1.0, 2.0));
        r.check(CheckRecord::at_most("b", 3.0, 2.0));
        r.finish();
        assert_eq!((r.status.as_str(), r.exit_code), ("fail", EXIT_FAIL));
    }

    #[test]
    fn errors_map_to_exit_codes() {
        let mut r = Report::new("separate", b"", 0);
        r.fail_with(&CliError::Core(geoconvex::Error::PointInSet));
        assert_eq!((r.exit_code, r.error_kind.as_deref()), (EXIT_INPUT, Some("PointInSet")));
        let mut r = Report::new("project", b"", 0);
        r.fail_with(&CliError::Core(geoconvex::Error::SamplingExhausted { wanted: 1, got: 0 }));
        assert_eq!((r.exit_code, r.status.as_str()), (EXIT_INCONCLUSIVE, "inconclusive"));
    }
}
