use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphere_partition::discretization::fmt_sig17;
use sphere_partition::partition::{
    assemble_nodal, optimize_partition, verify_comparison, verify_monotone_in_m, verify_subadditivity,
    NodalSolution, OptimizedPartition, PartitionReport, PartitionSolver, ScanOptions,
};
use sphere_partition::system::{extract_supports, lambda_continuation, ordered_supports, ContinuationResult};
use sphere_partition::{least_energy_on_interval, Error, OrbitGrid, ReducedFunction, ScalarSolution};

use crate::config::{Mode, RunConfig};
use crate::report::{
    BoundCheck, ContinuationSummary, NodalSummary, PartitionSummary, RunReport, ScalarSummary, Status, Supports,
    Timing, VerificationSummary, SCHEMA_VERSION,
};

/// Fraction of its maximum below which a component does not claim a node.
const SUPPORT_THRESHOLD: f64 = 0.1;
const SUBADDITIVITY_SAMPLES: usize = 8;
const MONOTONE_MARGIN: f64 = 1e-3;
/// Relative slack of the comparison between system and partition values.
const COMPARISON_RTOL: f64 = 1e-6;

/// Functions to be written next to the report.
#[derive(Debug, Default)]
pub struct Outputs {
    /// `(file stem, function)`, one CSV each.
    pub functions: Vec<(String, ReducedFunction)>,
    /// Columns `w1..wM` and the signed profile on a common grid.
    pub plot: Option<(Vec<f64>, Vec<Vec<f64>>)>,
}

struct Stage {
    name: &'static str,
    message: String,
}

impl Stage {
    fn at(name: &'static str) -> impl Fn(Error) -> Stage {
        move |e| Stage {
            name,
            message: e.to_string(),
        }
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    report: RunReport,
    outputs: Outputs,
    started: Instant,
}

impl<'a> Run<'a> {
    fn time(&mut self, name: &str, since: Instant) {
        self.report.timing.stages.push((name.to_string(), since.elapsed().as_secs_f64()));
    }

    fn fail(&mut self, stage: Stage) {
        self.report.status = Status {
            ok: false,
            failed_stage: Some(stage.name.to_string()),
            error: Some(stage.message),
        };
    }

    fn finish(mut self) -> (RunReport, Outputs) {
        self.report.timing.total_seconds = self.started.elapsed().as_secs_f64();
        (self.report, self.outputs)
    }
}

/// Runs the pipelines selected by `cfg.mode`. Stage failures are recorded in
/// the report rather than returned.
pub fn run(cfg: &RunConfig) -> (RunReport, Outputs) {
    let mut run = Run {
        cfg,
        report: RunReport {
            schema_version: SCHEMA_VERSION,
            config: cfg.clone(),
            status: Status {
                ok: true,
                ..Status::default()
            },
            scalar: None,
            continuation: None,
            partition: None,
            nodal: None,
            verification: None,
            timing: Timing::default(),
        },
        outputs: Outputs::default(),
        started: Instant::now(),
    };
    let grid = match OrbitGrid::build(cfg.symmetry(), cfg.cells, cfg.grading) {
        Ok(g) => g,
        Err(e) => {
            run.fail(Stage::at("grid")(e));
            return run.finish();
        }
    };
    if let Err(stage) = dispatch(&mut run, &grid) {
        run.fail(stage);
    }
    run.finish()
}

fn dispatch(run: &mut Run, grid: &Arc<OrbitGrid>) -> Result<(), Stage> {
    let cfg = run.cfg;
    match cfg.mode {
        Mode::Scalar => {
            let sol = scalar_stage(run, grid)?;
            let w = sol.embed(grid);
            run.outputs.plot = Some((grid.nodes().to_vec(), vec![w.values().to_vec(), w.values().to_vec()]));
            run.outputs.functions.push(("w1".into(), sol.profile));
        }
        Mode::System => {
            let result = continuation_stage(run, grid)?;
            system_outputs(run, &result, "w");
        }
        Mode::Partition => {
            let solver = PartitionSolver::new(grid.clone(), cfg.solver_options());
            let (opt, nodal) = partition_stage(run, &solver)?;
            partition_outputs(run, &opt, &nodal);
        }
        Mode::VerifyAll => verify_all(run, grid)?,
    }
    Ok(())
}

fn scalar_stage(run: &mut Run, grid: &Arc<OrbitGrid>) -> Result<ScalarSolution, Stage> {
    let t = Instant::now();
    let [a, b] = run.cfg.interval;
    let sol = least_energy_on_interval(grid, a, b, &run.cfg.solver_options())
        .map_err(Stage::at("scalar"))?;
    run.time("scalar", t);
    run.report.scalar = Some(ScalarSummary {
        interval: [a, b],
        energy: sol.energy,
        residual_sup: sol.residual_sup,
        nehari_defect: sol.nehari_defect(),
        iterations: sol.iterations,
    });
    Ok(sol)
}

fn continue_lambda(cfg: &RunConfig, grid: &Arc<OrbitGrid>) -> Result<ContinuationResult, Error> {
    lambda_continuation(grid, &cfg.exponents(), &cfg.lambda_schedule, &cfg.system_options())
}

fn summarize_continuation(run: &mut Run, result: &ContinuationResult) -> Result<(), Stage> {
    let supports = result.last().and_then(|last| {
        let order = ordered_supports(&last.state, SUPPORT_THRESHOLD).ok()?;
        let p = extract_supports(&last.state, SUPPORT_THRESHOLD).ok()?;
        Some(Supports {
            cuts: p.cuts().to_vec(),
            boundary_radii: p.boundary_radii(),
            order: order.iter().map(|s| s.component).collect(),
        })
    });
    run.report.continuation = Some(ContinuationSummary {
        stages: result.stages.iter().map(|s| s.summary()).collect(),
        failure: result.failure.clone(),
        d_floor: result.d_floor,
        separated: result.separated(),
        supports,
    });
    match &result.failure {
        Some(f) => Err(Stage {
            name: "continuation",
            message: format!("stage {} (lambda = {}): {}", f.stage, f.lambda, f.message),
        }),
        None => Ok(()),
    }
}

fn continuation_stage(run: &mut Run, grid: &Arc<OrbitGrid>) -> Result<ContinuationResult, Stage> {
    let t = Instant::now();
    let result = continue_lambda(run.cfg, grid).map_err(Stage::at("continuation"))?;
    run.time("continuation", t);
    summarize_continuation(run, &result)?;
    Ok(result)
}

fn optimize_and_assemble(
    cfg: &RunConfig,
    solver: &PartitionSolver,
) -> Result<(OptimizedPartition, NodalSolution), Stage> {
    let opt = optimize_partition(solver, cfg.pieces, &ScanOptions::default())
        .map_err(Stage::at("partition"))?;
    let nodal = assemble_nodal(&opt.partition, solver).map_err(Stage::at("nodal"))?;
    Ok((opt, nodal))
}

fn summarize_partition(run: &mut Run, solver: &PartitionSolver, opt: &OptimizedPartition, nodal: &NodalSolution) {
    run.report.partition = Some(PartitionSummary {
        result: PartitionReport::new(&opt.partition, opt.interval_energies.clone()),
        alternates: opt.alternates.iter().map(|p| p.cuts().to_vec()).collect(),
        scanned: opt.scanned,
    });
    run.report.timing.interval_solves = Some(solver.solves());
    run.report.nodal = Some(NodalSummary {
        energy: nodal.total_energy,
        sign_changes: nodal.sign_changes,
        residual_sup: nodal.residual_interior,
        residual_near_cuts: nodal.residual_near_cuts,
    });
}

fn partition_stage(run: &mut Run, solver: &PartitionSolver) -> Result<(OptimizedPartition, NodalSolution), Stage> {
    let t = Instant::now();
    let (opt, nodal) = optimize_and_assemble(run.cfg, solver)?;
    run.time("partition", t);
    summarize_partition(run, solver, &opt, &nodal);
    Ok((opt, nodal))
}

fn partition_outputs(run: &mut Run, opt: &OptimizedPartition, nodal: &NodalSolution) {
    let fine = nodal.grid();
    let mut columns: Vec<Vec<f64>> = nodal.pieces.iter().map(|s| s.embed(fine).into_values()).collect();
    columns.push(nodal.signed_profile.values().to_vec());
    run.outputs.plot = Some((fine.nodes().to_vec(), columns));
    for (i, piece) in nodal.pieces.iter().enumerate() {
        run.outputs.functions.push((format!("w{}", i + 1), piece.profile.clone()));
    }
    debug_assert_eq!(opt.partition.pieces(), nodal.pieces.len());
}

/// Components of the last stage, and their alternating sum in the order
/// their supports appear along `(0, pi)`.
fn system_outputs(run: &mut Run, result: &ContinuationResult, prefix: &str) {
    let Some(last) = result.last() else { return };
    let comps = last.state.components();
    for (i, w) in comps.iter().enumerate() {
        run.outputs.functions.push((format!("{prefix}{}", i + 1), w.clone()));
    }
    if prefix != "w" {
        return;
    }
    let order: Vec<usize> = match ordered_supports(&last.state, SUPPORT_THRESHOLD) {
        Ok(s) => s.iter().map(|s| s.component).collect(),
        Err(_) => (0..comps.len()).collect(),
    };
    let mut signed = vec![0.0; last.state.grid().len()];
    for (k, &i) in order.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for (s, v) in signed.iter_mut().zip(comps[i].values()) {
            *s += sign * v;
        }
    }
    let mut columns: Vec<Vec<f64>> = comps.iter().map(|w| w.values().to_vec()).collect();
    columns.push(signed);
    run.outputs.plot = Some((last.state.grid().nodes().to_vec(), columns));
}

/// Random triples `a < b < c` whose pieces all hold enough nodes.
fn sample_triples(seed: u64, grid: &OrbitGrid) -> Vec<[f64; 3]> {
    let gap = (10.0 * grid.max_spacing()).max(0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(SUBADDITIVITY_SAMPLES);
    while out.len() < SUBADDITIVITY_SAMPLES {
        let mut x = [rng.gen_range(0.0..PI), rng.gen_range(0.0..PI), rng.gen_range(0.0..PI)];
        x.sort_by(f64::total_cmp);
        if x[0] > 0.05 && x[2] < PI - 0.05 && x[1] - x[0] > gap && x[2] - x[1] > gap {
            out.push(x);
        }
    }
    out
}

fn verify_all(run: &mut Run, grid: &Arc<OrbitGrid>) -> Result<(), Stage> {
    let cfg = run.cfg;
    let sol = scalar_stage(run, grid)?;
    let solver = PartitionSolver::new(grid.clone(), cfg.solver_options());

    // The two pipelines share nothing but the read-only grid.
    let (continued, partitioned) = std::thread::scope(|s| {
        let system = s.spawn(|| {
            let t = Instant::now();
            (continue_lambda(cfg, grid), t.elapsed().as_secs_f64())
        });
        let t = Instant::now();
        let part = optimize_and_assemble(cfg, &solver);
        let part_time = t.elapsed().as_secs_f64();
        (system.join().expect("continuation thread panicked"), (part, part_time))
    });
    let ((continued, system_time), (partitioned, partition_time)) = (continued, partitioned);
    run.report.timing.stages.push(("continuation".into(), system_time));
    run.report.timing.stages.push(("partition".into(), partition_time));

    let continued = continued.map_err(Stage::at("continuation"))?;
    let summarized = summarize_continuation(run, &continued);
    let (opt, nodal) = partitioned?;
    summarize_partition(run, &solver, &opt, &nodal);
    partition_outputs(run, &opt, &nodal);
    system_outputs(run, &continued, "system_w");
    summarized?;

    let t = Instant::now();
    let whole = cfg.interval == [0.0, PI];
    let scalar_bound = whole.then(|| {
        let bound = cfg.symmetry().constant_solution_energy();
        BoundCheck {
            value: sol.energy,
            bound,
            margin: bound - sol.energy,
            pass: sol.energy <= bound * (1.0 + 1e-9),
        }
    });
    let subadditivity = sample_triples(cfg.seed, grid)
        .into_iter()
        .map(|[a, b, c]| verify_subadditivity(&solver, a, b, c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Stage::at("subadditivity"))?;
    let comparison: Vec<_> = continued
        .stages
        .iter()
        .map(|s| verify_comparison(s.report.c_value, opt.energy, COMPARISON_RTOL * opt.energy))
        .collect();
    let monotonicity = verify_monotone_in_m(&solver, (cfg.pieces + 1).max(3), &ScanOptions::default(), MONOTONE_MARGIN)
        .map_err(Stage::at("monotonicity"))?;
    let pass = scalar_bound.as_ref().map_or(true, |b| b.pass)
        && subadditivity.iter().all(|r| r.pass)
        && comparison.iter().all(|r| r.pass)
        && monotonicity.pass;
    run.report.verification = Some(VerificationSummary {
        scalar_bound,
        subadditivity,
        comparison,
        monotonicity: Some(monotonicity),
        pass,
    });
    run.time("verification", t);
    run.report.timing.interval_solves = Some(solver.solves());
    Ok(())
}

/// Writes `report.json`, one `t,w` CSV per function and `plotdata.csv`.
pub fn write_outputs(dir: &Path, report: &RunReport, outputs: &Outputs) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    for (stem, w) in &outputs.functions {
        w.write_csv(dir.join(format!("{stem}.csv")))?;
    }
    if let Some((t, columns)) = &outputs.plot {
        let pieces = columns.len() - 1;
        let mut csv = String::from("t");
        for i in 1..=pieces {
            let _ = write!(csv, ",w{i}");
        }
        csv.push_str(",signed\n");
        for (j, tj) in t.iter().enumerate() {
            csv.push_str(&fmt_sig17(*tj));
            for col in columns {
                csv.push(',');
                csv.push_str(&fmt_sig17(col[j]));
            }
            csv.push('\n');
        }
        std::fs::write(dir.join("plotdata.csv"), csv)?;
    }
    Ok(())
}

/// Runs `cfg` and writes its outputs to `cfg.output_dir`.
pub fn execute(cfg: &RunConfig) -> io::Result<RunReport> {
    let (report, outputs) = run(cfg);
    write_outputs(&cfg.output_dir, &report, &outputs)?;
    Ok(report)
}
