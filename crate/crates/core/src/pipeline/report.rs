//! CSV and JSON report emission.
//!
//! Every measured real in an [`AnalysisReport`] is already rounded to six
//! significant digits when the report is assembled, so the emitted text and
//! the in-memory values are the same numbers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnalysisReport, PipelineError};

pub const SIGNIFICANT_DIGITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

/// Nearest double to `x` rounded to six significant decimal digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// `%g`-style formatting with `sig` significant digits: fixed notation for
/// decimal exponents in `-4..sig`, scientific otherwise, trailing zeros trimmed.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn render_csv(report: &AnalysisReport) -> String {
    let mut out = String::from("level,layer,lr_accuracy,svm_accuracy,gdv\n");
    for l in &report.layers {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            l.level,
            l.layer_index,
            format_sig(l.lr_accuracy, SIGNIFICANT_DIGITS),
            format_sig(l.svm_accuracy, SIGNIFICANT_DIGITS),
            format_sig(l.gdv, SIGNIFICANT_DIGITS),
        ));
    }
    out
}

pub fn render_json(report: &AnalysisReport) -> Result<String, PipelineError> {
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    Ok(json)
}

pub fn emit_report(report: &AnalysisReport, format: ReportFormat, path: &Path) -> Result<(), PipelineError> {
    let text = match format {
        ReportFormat::Json => render_json(report)?,
        ReportFormat::Csv => render_csv(report),
    };
    fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_report_json(path: &Path) -> Result<AnalysisReport, PipelineError> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}
