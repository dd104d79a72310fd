use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::OrbitGrid;
use crate::error::{Error, Result};

use super::{initial_state, minimize_system, CouplingMatrix, EnergyReport, SystemOptions, SystemSolution, SystemState};

/// Deepest nesting of intermediate couplings inserted between two stages.
const MAX_SUBSTEP_DEPTH: usize = 12;

/// Phase separation is declared once every overlap is below this fraction of
/// the largest critical integral.
pub const SEPARATION_RATIO: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct StageResult {
    pub lambda: f64,
    pub state: SystemState,
    pub report: EnergyReport,
    /// Descent iterations, including those of intermediate couplings.
    pub iterations: usize,
    pub converged: bool,
    /// Intermediate couplings solved to reach this stage from the previous one.
    pub substeps: usize,
}

/// Serialized summary of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub lambda: f64,
    pub c_value: f64,
    pub per_component_normsq: Vec<f64>,
    pub overlaps: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

impl StageResult {
    pub fn summary(&self) -> StageReport {
        StageReport {
            lambda: self.lambda,
            c_value: self.report.c_value,
            per_component_normsq: self.report.per_component_normsq.clone(),
            overlaps: self.report.overlaps.clone(),
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: usize,
    pub lambda: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub stages: Vec<StageResult>,
    /// Set when a stage failed; `stages` then holds the stages before it.
    pub failure: Option<StageFailure>,
    /// Norm floor fixed after the first stage.
    pub d_floor: Option<f64>,
}

impl ContinuationResult {
    pub fn last(&self) -> Option<&StageResult> {
        self.stages.last()
    }

    /// Whether the last stage meets the phase-separation criterion.
    pub fn separated(&self) -> bool {
        self.last()
            .is_some_and(|s| s.report.max_overlap() <= SEPARATION_RATIO * s.report.max_crit())
    }
}

/// Solves the system for each coupling strength of `schedule` (uniform
/// `lambda_ij`), warm-starting every stage from the previous one. When the
/// previous state cannot be put on the Nehari set of the next coupling,
/// geometric intermediate strengths are solved first.
pub fn lambda_continuation(
    grid: &Arc<OrbitGrid>,
    exponents: &CouplingMatrix,
    schedule: &[f64],
    opts: &SystemOptions,
) -> Result<ContinuationResult> {
    if schedule.is_empty() {
        return Err(Error::Config("empty lambda schedule".into()));
    }
    if let Some(l) = schedule.iter().find(|l| !(**l < 0.0)) {
        return Err(Error::Config(format!("lambda schedule entry {l} is not negative")));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("lambda schedule must be strictly decreasing".into()));
    }
    let mut result = ContinuationResult {
        stages: Vec::new(),
        failure: None,
        d_floor: None,
    };
    let mut opts = *opts;
    let mut prev: Option<(SystemState, f64)> = None;
    for (k, &lambda) in schedule.iter().enumerate() {
        let outcome = match &prev {
            None => exponents
                .with_lambda(lambda)
                .and_then(|c| {
                    let init = initial_state(grid, &c)?;
                    minimize_system(grid, &c, &init, &opts)
                })
                .map(|s| (s, 0, 0)),
            Some((state, prev_lambda)) => {
                solve_with_substeps(grid, exponents, state, *prev_lambda, lambda, &opts, 0)
            }
        };
        match outcome {
            Ok((sol, extra_iters, substeps)) => {
                if k == 0 {
                    let min = sol.report.per_component_normsq.iter().fold(f64::INFINITY, |m, v| m.min(*v));
                    result.d_floor = Some(0.5 * min);
                    opts.d_floor = result.d_floor;
                }
                prev = Some((sol.state.clone(), lambda));
                result.stages.push(StageResult {
                    lambda,
                    report: sol.report,
                    state: sol.state,
                    iterations: sol.iterations + extra_iters,
                    converged: sol.converged,
                    substeps,
                });
            }
            Err(e) => {
                result.failure = Some(StageFailure {
                    stage: k,
                    lambda,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    Ok(result)
}

/// Returns the solution at `lambda` plus the iterations and number of
/// intermediate couplings spent on the way.
fn solve_with_substeps(
    grid: &Arc<OrbitGrid>,
    exponents: &CouplingMatrix,
    from: &SystemState,
    from_lambda: f64,
    lambda: f64,
    opts: &SystemOptions,
    depth: usize,
) -> Result<(SystemSolution, usize, usize)> {
    let coupling = exponents.with_lambda(lambda)?;
    match minimize_system(grid, &coupling, from, opts) {
        Err(Error::Projection(_)) if depth < MAX_SUBSTEP_DEPTH => {
            let mid = -(from_lambda * lambda).sqrt();
            let (half, it1, n1) = solve_with_substeps(grid, exponents, from, from_lambda, mid, opts, depth + 1)?;
            let (sol, it2, n2) = solve_with_substeps(grid, exponents, &half.state, mid, lambda, opts, depth + 1)?;
            Ok((sol, half.iterations + it1 + it2, n1 + n2 + 1))
        }
        other => other.map(|s| (s, 0, 0)),
    }
}
