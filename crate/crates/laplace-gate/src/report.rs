//! Output formats shared by the CLI: the JSON report envelope and the CSV
//! signal format.
//!
//! CSV: header exactly `t,re,im,err_bound`, UTF-8, LF line endings, every
//! number printed with 17 significant digits (locale-independent, exact
//! round trip).

use std::io::{self, Write};

use serde::Serialize;
use serde_json::Value;

use crate::admissibility::AdmissibilityReport;
use crate::analytic_core::TimeSignal;
use crate::forward::ResidualSample;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Top-level JSON document emitted by every subcommand.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub tool_version: &'static str,
    pub command: String,
    pub settings: Value,
    pub report: Option<AdmissibilityReport>,
    pub signals: Option<Value>,
    pub residuals: Option<Vec<ResidualSample>>,
    pub verdict: String,
}

impl Envelope {
    pub fn new(command: &str, settings: Value, verdict: impl Into<String>) -> Self {
        Envelope {
            tool_version: TOOL_VERSION,
            command: command.to_string(),
            settings,
            report: None,
            signals: None,
            residuals: None,
            verdict: verdict.into(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("report serialization");
        s.push('\n');
        s
    }
}

/// Fixed-width significand formatting: 17 significant digits, enough for an
/// exact f64 round trip, stable across runs.
pub fn fmt_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a signal as `t,re,im,err_bound` rows.
pub fn write_csv<W: Write>(w: &mut W, signal: &TimeSignal) -> io::Result<()> {
    writeln!(w, "t,re,im,err_bound")?;
    for i in 0..signal.t_grid.len() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_number(signal.t_grid[i]),
            fmt_number(signal.values[i].re),
            fmt_number(signal.values[i].im),
            fmt_number(signal.err_bounds[i]),
        )?;
    }
    Ok(())
}

/// Signal points as a JSON value (same quadruples as the CSV rows).
pub fn signal_points(signal: &TimeSignal) -> Value {
    let rows: Vec<Value> = (0..signal.t_grid.len())
        .map(|i| {
            serde_json::json!([
                signal.t_grid[i],
                signal.values[i].re,
                signal.values[i].im,
                signal.err_bounds[i],
            ])
        })
        .collect();
    Value::Array(rows)
}
