use std::collections::BTreeMap;

use revlab::verify::CheckResult;
use serde::{Deserialize, Serialize};

/// The JSON document every command emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile<T> {
    pub command: String,
    /// Input name → SHA-256 fingerprint or parameter value.
    pub inputs: BTreeMap<String, String>,
    pub result: T,
    pub checks: Vec<CheckResult>,
}

impl<T> ReportFile<T> {
    pub fn new(command: &str, result: T) -> Self {
        Self {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            result,
            checks: Vec::new(),
        }
    }

    pub fn input(mut self, name: &str, value: impl Into<String>) -> Self {
        self.inputs.insert(name.to_string(), value.into());
        self
    }

    pub fn check(mut self, c: CheckResult) -> Self {
        self.checks.push(c);
        self
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}
