//! JSON records written by the commands.

use serde::Serialize;
use serde_json::Value;
use specinfer::infer::{AuditReport, RankedSpec};

/// Scores may be infinite; JSON numbers may not.
pub fn score_value(x: f64) -> Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("+inf")
    } else {
        Value::from("-inf")
    }
}

#[derive(Serialize)]
pub struct RankedRecord {
    pub spec: String,
    pub score: Value,
    pub n_sat: usize,
    pub rand_rate: f64,
}

impl From<&RankedSpec> for RankedRecord {
    fn from(r: &RankedSpec) -> Self {
        Self {
            spec: r.spec.to_string(),
            score: score_value(r.score),
            n_sat: r.n_sat,
            rand_rate: r.rand_rate,
        }
    }
}

#[derive(Serialize)]
pub struct AuditRecord {
    pub skipped: usize,
    pub violations: Vec<RankedRecord>,
}

impl From<&AuditReport> for AuditRecord {
    fn from(a: &AuditReport) -> Self {
        Self {
            skipped: a.skipped,
            violations: a.violations.iter().map(Into::into).collect(),
        }
    }
}

/// Deterministic part of an inference report.
#[derive(Serialize)]
pub struct InferRecord {
    pub algorithm: &'static str,
    pub backend: &'static str,
    pub mode: &'static str,
    pub horizon: usize,
    pub context: Option<String>,
    pub best_spec: String,
    pub scored_spec: String,
    pub best_score: Value,
    pub n_sat: usize,
    pub n_total: usize,
    pub rand_rate: f64,
    pub class_size: usize,
    pub specs_scored: usize,
    pub queries_issued: usize,
    pub oracle_computations: u64,
    pub cache_hits: u64,
    pub query_fraction: f64,
    /// Brute-force query count over this run's.
    pub query_speedup: f64,
    pub ranking: Vec<RankedRecord>,
    pub audit: Option<AuditRecord>,
}

/// Run-dependent measurements, kept apart so reports compare byte-for-byte
/// once this field is dropped.
#[derive(Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub started_unix_seconds: f64,
    pub wall_time_seconds: f64,
    pub class_seconds: f64,
    pub mean_query_seconds: f64,
    pub stddev_query_seconds: f64,
    pub workers: usize,
}

#[derive(Serialize)]
pub struct InferReport {
    pub result: InferRecord,
    pub metadata: Metadata,
}

#[derive(Serialize)]
pub struct ScoreRecord {
    pub spec: String,
    pub scored_spec: String,
    pub n_sat: usize,
    pub n_total: usize,
    pub empirical_rate: f64,
    pub rand_rate: f64,
    pub information_gain: Value,
    pub scores: ModeScores,
    pub beta_prior: BetaRecord,
}

#[derive(Serialize)]
pub struct ModeScores {
    pub indicator: Value,
    pub beta: Value,
}

#[derive(Serialize)]
pub struct BetaRecord {
    pub alpha: f64,
    pub beta: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_scores_become_strings() {
        assert_eq!(score_value(f64::NEG_INFINITY), Value::from("-inf"));
        assert_eq!(score_value(f64::INFINITY), Value::from("+inf"));
        assert_eq!(score_value(1.5), serde_json::json!(1.5));
        assert_eq!(score_value(0.0).to_string(), "0.0");
    }
}
