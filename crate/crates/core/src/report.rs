//! Machine-readable diagnostics reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::problem::{Coordinates, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotRun,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

/// One diagnostic aggregated over the sample set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Whether the verdict counts towards the overall verdict.
    pub enabled: bool,
    pub evaluated: usize,
    pub skipped: usize,
    pub max_residual: Option<f64>,
    /// Point (in the problem's coordinates) where `max_residual` occurred.
    pub argmax: Option<Vec<f64>>,
    pub threshold: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, f64>,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Per-point outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub coords: Vec<f64>,
    pub spectral_ok: bool,
    pub rank_ok: bool,
    pub regular: bool,
    pub torsion: f64,
    pub lagrangian: f64,
    pub relatedness: f64,
    pub integrability_dual: Option<f64>,
    pub integrability_cotangent: Option<f64>,
    pub forbat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forbat_worst_pair: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form_mismatch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing_worst_pair: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub tool: String,
    pub version: String,
    pub input_digest: String,
    pub n: usize,
    pub coordinates: Coordinates,
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub fast: bool,
    pub checks: Vec<CheckRecord>,
    /// Points where both integrability tests ran and their verdicts differ.
    pub dual_cotangent_disagreements: usize,
    pub points: Vec<PointRecord>,
    pub overall: Verdict,
}

impl DiagnosticsReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// 0 when every enabled check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.overall == Verdict::Pass {
            0
        } else {
            1
        }
    }

    /// Human-readable summary, one line per check.
    pub fn summary(&self) -> String {
        summarize(&self.checks, self.overall)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformReport {
    pub tool: String,
    pub version: String,
    pub input_digest: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub singular_points: usize,
    pub checks: Vec<CheckRecord>,
    pub overall: Verdict,
}

impl TransformReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn exit_code(&self) -> i32 {
        if self.overall == Verdict::Pass {
            0
        } else {
            1
        }
    }

    pub fn summary(&self) -> String {
        summarize(&self.checks, self.overall)
    }
}

fn summarize(checks: &[CheckRecord], overall: Verdict) -> String {
    let mut out = String::new();
    for c in checks {
        let verdict = match (c.verdict, c.enabled) {
            (Verdict::NotRun, _) => "not run",
            (_, false) => "info",
            (Verdict::Pass, true) => "pass",
            (Verdict::Fail, true) => "FAIL",
        };
        let residual = c.max_residual.map_or_else(|| "-".to_string(), |r| format!("{r:.3e}"));
        out.push_str(&format!(
            "{:<26} {:<8} max {:<11} threshold {:.1e}  evaluated {} skipped {}\n",
            c.name, verdict, residual, c.threshold, c.evaluated, c.skipped
        ));
    }
    out.push_str(&format!(
        "overall: {}\n",
        if overall == Verdict::Pass { "pass" } else { "FAIL" }
    ));
    out
}

/// Hex SHA-256 of the given parts, each followed by a zero byte.
pub fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

/// Running maximum with the first point attaining it.
#[derive(Clone, Debug, Default)]
pub(crate) struct MaxTracker {
    pub max: Option<f64>,
    pub argmax: Option<Vec<f64>>,
    pub evaluated: usize,
}

impl MaxTracker {
    pub fn push(&mut self, value: f64, at: &[f64]) {
        self.evaluated += 1;
        let better = match self.max {
            None => true,
            Some(m) => value > m || (value.is_nan() && !m.is_nan()),
        };
        if better {
            self.max = Some(value);
            self.argmax = Some(at.to_vec());
        }
    }

    /// `max < threshold`; NaN never passes.
    pub fn below(&self, threshold: f64) -> bool {
        self.max.is_none_or(|m| m < threshold)
    }
}
