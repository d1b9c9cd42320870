//! The property suite behind `geoconvex verify`: ten numbered criteria, each
//! a list of named checks with a measured value and a tolerance.

use serde::Serialize;

mod criteria;
pub mod instances;
pub mod oracle;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: CheckStatus,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckRecord {
    /// Passes iff value ≤ tolerance (NaN fails).
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let status = if value <= tolerance { CheckStatus::Pass } else { CheckStatus::Fail };
        CheckRecord { name: name.into(), status, value, tolerance }
    }

    /// Passes iff value ≥ tolerance.
    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let status = if value >= tolerance { CheckStatus::Pass } else { CheckStatus::Fail };
        CheckRecord { name: name.into(), status, value, tolerance }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
        CheckRecord { name: name.into(), status, value: f64::from(u8::from(ok)), tolerance: 1.0 }
    }

    /// An error escaping a check: inconclusive for numeric non-certification,
    /// failure otherwise.
    pub fn from_error(name: impl Into<String>, err: &Error) -> Self {
        let status = if err.is_inconclusive() { CheckStatus::Inconclusive } else { CheckStatus::Fail };
        CheckRecord { name: format!("{}.{}", name.into(), err.kind()), status, value: f64::NAN, tolerance: f64::NAN }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<CheckRecord>,
}

impl CriterionReport {
    /// Fail dominates inconclusive, which dominates pass.
    pub fn status(&self) -> CheckStatus {
        aggregate(self.checks.iter().map(|c| c.status))
    }
}

pub fn aggregate(statuses: impl IntoIterator<Item = CheckStatus>) -> CheckStatus {
    let mut out = CheckStatus::Pass;
    for s in statuses {
        match s {
            CheckStatus::Fail => return CheckStatus::Fail,
            CheckStatus::Inconclusive => out = CheckStatus::Inconclusive,
            CheckStatus::Pass => {}
        }
    }
    out
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "geometry roundtrip"),
    (2, "distance convexity"),
    (3, "projection variational inequality"),
    (4, "projection versus oracle"),
    (5, "point separation"),
    (6, "supporting planes"),
    (7, "cone duality"),
    (8, "KKT multipliers"),
    (9, "Fritz-John conditions"),
    (10, "solver sanity"),
];

pub fn title(id: u8) -> Option<&'static str> {
    CRITERIA.iter().find(|(i, _)| *i == id).map(|(_, t)| *t)
}

/// Runs one criterion; unknown ids yield `None`.
pub fn run_criterion(id: u8, seed: u64) -> Option<CriterionReport> {
    let title = title(id)?;
    let checks = match id {
        1 => criteria::geometry_roundtrip(seed),
        2 => criteria::distance_convexity(seed),
        3 => criteria::projection_vi(seed),
        4 => criteria::projection_oracle(seed),
        5 => criteria::separation(seed),
        6 => criteria::supporting_planes(seed),
        7 => criteria::cone_duality(seed),
        8 => criteria::kkt_multipliers(seed),
        9 => criteria::fritz_john(seed),
        10 => criteria::solver_sanity(seed),
        _ => unreachable!(),
    };
    Some(CriterionReport { id, title, checks })
}

pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    CRITERIA.iter().filter_map(|(id, _)| run_criterion(*id, seed)).collect()
}
