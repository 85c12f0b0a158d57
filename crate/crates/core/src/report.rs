//! The JSON report shared by every command.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::symbolic::{format_rat, Rat, CF};

pub const REPORT_VERSION: &str = "report_v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
    pub overall: Status,
    pub data: Value,
    /// Wall-clock timings; excluded from [`Report::deterministic_json`].
    pub timing_ms: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Report {
            version: REPORT_VERSION,
            command: command.to_string(),
            config,
            checks: Vec::new(),
            summary: Summary::default(),
            overall: Status::Pass,
            data: json!({}),
            timing_ms: BTreeMap::new(),
        }
    }

    fn push(&mut self, record: CheckRecord) {
        match record.status {
            Status::Pass => self.summary.passed += 1,
            Status::Fail => {
                self.summary.failed += 1;
                self.overall = Status::Fail;
            }
            Status::Skipped => self.summary.skipped += 1,
        }
        self.checks.push(record);
    }

    /// Records a check; `value` and `expected` are shown next to the verdict.
    pub fn check(&mut self, name: impl Into<String>, ok: bool, value: impl Serialize, expected: impl Serialize) {
        self.push(CheckRecord {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            value: serde_json::to_value(value).ok(),
            expected: serde_json::to_value(expected).ok(),
            detail: None,
        });
    }

    pub fn check_detail(
        &mut self,
        name: impl Into<String>,
        ok: bool,
        value: impl Serialize,
        expected: impl Serialize,
        detail: impl Into<String>,
    ) {
        self.push(CheckRecord {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            value: serde_json::to_value(value).ok(),
            expected: serde_json::to_value(expected).ok(),
            detail: Some(detail.into()),
        });
    }

    pub fn skip(&mut self, name: impl Into<String>, reason: impl Into<String>) {
        self.push(CheckRecord {
            name: name.into(),
            status: Status::Skipped,
            value: None,
            expected: None,
            detail: Some(reason.into()),
        });
    }

    pub fn set_data(&mut self, key: &str, value: Value) {
        if let Value::Object(map) = &mut self.data {
            map.insert(key.to_string(), value);
        }
    }

    pub fn time(&mut self, key: &str, ms: f64) {
        self.timing_ms.insert(key.to_string(), ms);
    }

    pub fn passed(&self) -> bool {
        self.overall == Status::Pass
    }

    pub fn find(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without timings, for byte-level comparison of runs.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut v {
            map.remove("timing_ms");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

/// `[re, im]`.
pub fn complex_json(c: &CF) -> Value {
    json!([c.re, c.im])
}

pub fn complex_vec_json(v: &[CF]) -> Value {
    Value::Array(v.iter().map(complex_json).collect())
}

pub fn rat_json(r: &Rat) -> Value {
    Value::String(format_rat(r))
}

pub fn rat_vec_json(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(rat_json).collect())
}

/// 1-based subset labels such as `"{1,3}"`.
pub fn subset_label(idx: &[usize]) -> String {
    let ids: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", ids.join(","))
}
