use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::document::SCHEMA_VERSION;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

/// Every fitted constant travels with the grid it was fitted on.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Provenance {
    pub tolerance: f64,
    pub grid: Vec<f64>,
    pub constants: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub command: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub passed: bool,
}

impl ReportDocument {
    pub fn new(command: Value) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            command,
            results: Value::Null,
            checks: Vec::new(),
            provenance: None,
            passed: true,
        }
    }

    pub fn results(mut self, results: impl Serialize) -> Self {
        self.results = to_value(results);
        self
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, witness: Option<Value>) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
            witness,
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

pub fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}
