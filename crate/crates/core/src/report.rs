//! Structured pass/fail records shared by every verification routine.
//!
//! A report is a flat list of rows. Each row names the module and check, an
//! anchor tag naming the mathematical statement it probes (or the literal
//! `"plumbing"`), the measured value, the threshold it is compared against,
//! and the verdict. Rows are kept in insertion order until [`merge`] sorts
//! them, so serializing the same report twice gives identical bytes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

pub const PLUMBING: &str = "plumbing";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// measured <= threshold
    #[serde(rename = "<=")]
    AtMost,
    /// measured >= threshold
    #[serde(rename = ">=")]
    AtLeast,
    /// measured < threshold
    #[serde(rename = "<")]
    Below,
    /// measured > threshold
    #[serde(rename = ">")]
    Above,
    /// boolean outcome stored as 1.0 / 0.0; threshold is 1.0
    #[serde(rename = "flag")]
    Flag,
}

impl Relation {
    pub fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Relation::AtMost => measured <= threshold,
            Relation::AtLeast => measured >= threshold,
            Relation::Below => measured < threshold,
            Relation::Above => measured > threshold,
            Relation::Flag => measured == 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub module: String,
    pub check_id: String,
    pub anchor: String,
    pub measured: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub rows: Vec<CheckRow>,
    pub summary: Summary,
    pub provenance: Provenance,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("cannot merge an empty list of reports")]
    Empty,
}

/// Short hex digest of any serializable configuration.
pub fn config_hash<T: Serialize + ?Sized>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).unwrap_or_default();
    let digest = Sha256::digest(&bytes);
    hex::encode(&digest[..8])
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_provenance<T: Serialize + ?Sized>(mut self, seed: u64, config: &T) -> Self {
        self.provenance = Provenance {
            config_hash: config_hash(config),
            seed,
        };
        self
    }

    /// Appends a row and returns its verdict.
    pub fn check(
        &mut self,
        module: &str,
        check_id: &str,
        anchor: &str,
        measured: f64,
        relation: Relation,
        threshold: f64,
    ) -> bool {
        self.push(CheckRow {
            module: module.to_string(),
            check_id: check_id.to_string(),
            anchor: anchor.to_string(),
            measured,
            threshold,
            relation,
            passed: relation.holds(measured, threshold),
            details: BTreeMap::new(),
            note: None,
        })
    }

    pub fn flag(&mut self, module: &str, check_id: &str, anchor: &str, ok: bool) -> bool {
        self.check(
            module,
            check_id,
            anchor,
            if ok { 1.0 } else { 0.0 },
            Relation::Flag,
            1.0,
        )
    }

    pub fn push(&mut self, row: CheckRow) -> bool {
        let passed = row.passed;
        debug_assert!(!row.anchor.is_empty());
        self.rows.push(row);
        self.recount();
        passed
    }

    /// Attaches a named auxiliary value to the most recent row.
    pub fn detail(&mut self, key: &str, value: f64) -> &mut Self {
        if let Some(row) = self.rows.last_mut() {
            row.details.insert(key.to_string(), value);
        }
        self
    }

    pub fn note(&mut self, text: &str) -> &mut Self {
        if let Some(row) = self.rows.last_mut() {
            row.note = Some(text.to_string());
        }
        self
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.rows.extend(other.rows);
        self.recount();
    }

    fn recount(&mut self) {
        let passed = self.rows.iter().filter(|r| r.passed).count();
        self.summary = Summary {
            total: self.rows.len(),
            passed,
            failed: self.rows.len() - passed,
        };
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn row(&self, check_id: &str) -> Option<&CheckRow> {
        self.rows.iter().find(|r| r.check_id == check_id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }
}

/// Concatenates reports, orders rows by `(module, check_id)` and suffixes
/// duplicate ids `#2`, `#3`, ... in their original relative order.
pub fn merge(reports: Vec<VerificationReport>) -> Result<VerificationReport, ReportError> {
    if reports.is_empty() {
        return Err(ReportError::Empty);
    }
    let seed = reports[0].provenance.seed;
    let hashes: Vec<&str> = reports
        .iter()
        .map(|r| r.provenance.config_hash.as_str())
        .collect();
    let config_hash = if reports.len() == 1 {
        reports[0].provenance.config_hash.clone()
    } else {
        self::config_hash(&hashes)
    };
    let mut rows: Vec<CheckRow> = reports.into_iter().flat_map(|r| r.rows).collect();
    // stable sort keeps insertion order among equal keys
    rows.sort_by(|a, b| (&a.module, &a.check_id).cmp(&(&b.module, &b.check_id)));
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    for row in rows.iter_mut() {
        let n = seen
            .entry((row.module.clone(), row.check_id.clone()))
            .or_insert(0);
        *n += 1;
        if *n > 1 {
            row.check_id = format!("{}#{}", row.check_id, n);
        }
    }
    let mut out = VerificationReport {
        rows,
        summary: Summary::default(),
        provenance: Provenance { config_hash, seed },
    };
    out.recount();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(ids: &[&str]) -> VerificationReport {
        let mut r = VerificationReport::new();
        for id in ids {
            r.check("m", id, PLUMBING, 1.0, Relation::AtMost, 2.0);
        }
        r
    }

    #[test]
    fn merge_of_single_report_is_identity() {
        let r = sample(&["a", "b"]).with_provenance(7, "cfg");
        let m = merge(vec![r.clone()]).unwrap();
        assert_eq!(m, r);
    }

    #[test]
    fn merge_counts_rows_and_suffixes_duplicates() {
        let m = merge(vec![sample(&["b", "a"]), sample(&["c"]), sample(&["a"])]).unwrap();
        assert_eq!(m.summary.total, 4);
        let ids: Vec<_> = m.rows.iter().map(|r| r.check_id.as_str()).collect();
        assert_eq!(ids, ["a", "a#2", "b", "c"]);
    }

    #[test]
    fn merge_rejects_empty() {
        assert_eq!(merge(vec![]), Err(ReportError::Empty));
    }

    #[test]
    fn summary_tracks_failures() {
        let mut r = VerificationReport::new();
        r.check("m", "x", PLUMBING, 3.0, Relation::AtMost, 2.0);
        r.flag("m", "y", PLUMBING, true);
        assert_eq!(r.summary, Summary { total: 2, passed: 1, failed: 1 });
        assert!(!r.all_passed());
    }

    #[test]
    fn json_is_deterministic() {
        let r = sample(&["a"]).with_provenance(1, &[1, 2, 3]);
        assert_eq!(r.to_json(), r.clone().to_json());
    }
}
