use serde::Serialize;
use sphere_partition::partition::{ComparisonReport, MonotoneReport, PartitionReport, SubadditivityReport};
use sphere_partition::system::{StageFailure, StageReport};

use crate::config::RunConfig;

/// Bumped whenever a field of [`RunReport`] changes meaning or is removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub status: Status,
    pub scalar: Option<ScalarSummary>,
    pub continuation: Option<ContinuationSummary>,
    pub partition: Option<PartitionSummary>,
    pub nodal: Option<NodalSummary>,
    pub verification: Option<VerificationSummary>,
    /// Kept last so that everything before it is reproducible byte for byte.
    pub timing: Timing,
}

impl RunReport {
    /// Whether the run finished and every verification passed.
    pub fn passed(&self) -> bool {
        self.status.ok && self.verification.as_ref().map_or(true, |v| v.pass)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Status {
    pub ok: bool,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarSummary {
    pub interval: [f64; 2],
    pub energy: f64,
    pub residual_sup: f64,
    pub nehari_defect: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationSummary {
    pub stages: Vec<StageReport>,
    pub failure: Option<StageFailure>,
    pub d_floor: Option<f64>,
    /// Every overlap of the last stage below `1e-6` of the largest critical integral.
    pub separated: bool,
    /// Cuts between the dominance ranges of the last stage.
    pub supports: Option<Supports>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Supports {
    pub cuts: Vec<f64>,
    pub boundary_radii: Vec<[f64; 2]>,
    /// Component index of each piece, left to right.
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionSummary {
    #[serde(flatten)]
    pub result: PartitionReport,
    pub alternates: Vec<Vec<f64>>,
    pub scanned: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodalSummary {
    pub energy: f64,
    pub sign_changes: usize,
    pub residual_sup: f64,
    pub residual_near_cuts: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationSummary {
    /// Least energy of `(0, pi)` against the constant solution.
    pub scalar_bound: Option<BoundCheck>,
    pub subadditivity: Vec<SubadditivityReport>,
    /// One entry per continuation stage.
    pub comparison: Vec<ComparisonReport>,
    pub monotonicity: Option<MonotoneReport>,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub stages: Vec<(String, f64)>,
    /// Interval solves behind the partition results; concurrent cache misses
    /// may solve one interval twice, so this varies between runs.
    pub interval_solves: Option<usize>,
}
