//! Machine-readable reports: deterministic JSON summaries and CSV series.
//!
//! Identical inputs must yield byte-identical files, so every float is
//! rounded to nine significant digits before serialization and JSON object
//! keys are emitted in sorted order.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::numeric::sig9;
use crate::oracle::SweepPoint;
use crate::{ModelError, Result};

/// Top-level envelope written by every CLI command.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    /// The command that produced the report.
    pub command: String,
    /// Digest of the scenario the command ran on.
    pub scenario_digest: String,
    /// Numeric tolerances the results were computed under.
    pub tolerances: Tolerances,
    /// Command-specific payload.
    pub results: Value,
    /// Human-readable caveats (failed premises, reference-value gaps).
    pub warnings: Vec<String>,
}

/// The settings snapshot attached to every report.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    pub grid_step: f64,
    pub epsilon: f64,
    pub check_tolerance: f64,
}

impl Report {
    pub fn new(
        command: impl Into<String>,
        scenario_digest: impl Into<String>,
        tolerances: Tolerances,
        results: Value,
        warnings: Vec<String>,
    ) -> Self {
        Report {
            command: command.into(),
            scenario_digest: scenario_digest.into(),
            tolerances,
            results,
            warnings,
        }
    }

    /// Deterministic pretty JSON: floats at nine significant digits, keys
    /// sorted, trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)
            .map_err(|e| ModelError::Io(std::io::Error::other(format!("report serialization failed: {e}"))))?;
        let canonical = canonicalize(value);
        let text = serde_json::to_string_pretty(&canonical)
            .map_err(|e| ModelError::Io(std::io::Error::other(format!("report serialization failed: {e}"))))?;
        Ok(format!("{text}\n"))
    }
}

/// Round every number to nine significant digits and sort every object.
pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => {
                serde_json::Number::from_f64(sig9(x)).map_or(Value::Null, Value::Number)
            }
            _ => Value::Number(n),
        },
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(map) => {
            let sorted: BTreeMap<String, Value> = map
                .into_iter()
                .map(|(k, v)| (k, canonicalize(v)))
                .collect();
            Value::Object(sorted.into_iter().collect())
        }
        other => other,
    }
}

/// Serialize any payload into the canonical results value.
pub fn results_value<T: Serialize>(payload: &T) -> Result<Value> {
    serde_json::to_value(payload)
        .map_err(|e| ModelError::Io(std::io::Error::other(format!("result serialization failed: {e}"))))
}

fn fmt9(x: f64) -> String {
    format!("{:.9}", x)
}

/// CSV for a constant-response sweep: `p_f,profit_1,profit_2,welfare`.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("p_f,profit_1,profit_2,welfare\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt9(p.p_f),
            fmt9(p.profit_1),
            fmt9(p.profit_2),
            fmt9(p.welfare)
        ));
    }
    out
}

/// One row of a cutoff sweep (profits along the tie family).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CutoffPoint {
    pub cutoff: f64,
    pub profit_1: f64,
    pub profit_2: f64,
    pub welfare: f64,
}

/// CSV for a cutoff sweep: `cutoff,profit_1,profit_2,welfare`.
pub fn cutoff_csv(points: &[CutoffPoint]) -> String {
    let mut out = String::from("cutoff,profit_1,profit_2,welfare\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt9(p.cutoff),
            fmt9(p.profit_1),
            fmt9(p.profit_2),
            fmt9(p.welfare)
        ));
    }
    out
}
