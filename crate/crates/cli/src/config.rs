use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sphere_partition::discretization::MIN_CELLS;
use sphere_partition::system::{CouplingMatrix, SystemOptions};
use sphere_partition::{SolverOptions, SymmetryConfig};

/// Environment variable that overrides `--out`.
pub const OUT_ENV: &str = "PARTITION_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One interval solve.
    Scalar,
    /// Continuation of the competitive system in the coupling strength.
    System,
    /// Cut optimization and nodal assembly.
    Partition,
    /// All pipelines plus the inequality checks.
    VerifyAll,
}

impl Mode {
    fn needs_pieces(self) -> bool {
        self != Mode::Scalar
    }

    fn needs_schedule(self) -> bool {
        matches!(self, Mode::System | Mode::VerifyAll)
    }
}

/// Optimal partitions of the sphere into O(m) x O(n)-invariant pieces.
#[derive(Debug, Default, Parser)]
#[command(name = "sphere-partition", version)]
pub struct Args {
    /// TOML file with any of the options below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of pieces / components.
    #[arg(long = "M")]
    pub pieces: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Grid cells on [0, pi].
    #[arg(long = "K")]
    pub cells: Option<usize>,
    /// Node clustering towards both ends; 1 is uniform.
    #[arg(long)]
    pub grading: Option<f64>,
    /// Coupling schedule, e.g. "-1,-10,-100".
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Interval of the scalar solve, e.g. "0.5,1.5" (default: 0,pi).
    #[arg(long, allow_hyphen_values = true)]
    pub interval: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    m: Option<usize>,
    n: Option<usize>,
    #[serde(rename = "M")]
    pieces: Option<usize>,
    mode: Option<Mode>,
    #[serde(rename = "K")]
    cells: Option<usize>,
    grading: Option<f64>,
    lambda: Option<Vec<f64>>,
    interval: Option<[f64; 2]>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    alpha: Option<Vec<Vec<f64>>>,
    beta: Option<Vec<Vec<f64>>>,
    tolerances: Option<Tolerances>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative energy change that stops the interval solver.
    pub energy: f64,
    /// Strong-form residual bound.
    pub residual: f64,
    pub nehari: f64,
    pub gradient: f64,
    /// Relative energy change that stops the system descent.
    pub system_energy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            energy: s.tol_energy,
            residual: s.tol_res,
            nehari: s.tol_nehari,
            gradient: s.tol_grad,
            system_energy: SystemOptions::default().tol_energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "M")]
    pub pieces: usize,
    pub mode: Mode,
    #[serde(rename = "K")]
    pub cells: usize,
    pub grading: f64,
    pub lambda_schedule: Vec<f64>,
    pub interval: [f64; 2],
    pub alpha: Option<Vec<Vec<f64>>>,
    pub beta: Option<Vec<Vec<f64>>>,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn symmetry(&self) -> SymmetryConfig {
        SymmetryConfig::new(self.m, self.n).expect("validated")
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol_energy: self.tolerances.energy,
            tol_res: self.tolerances.residual,
            tol_nehari: self.tolerances.nehari,
            tol_grad: self.tolerances.gradient,
            seed: self.seed,
            ..SolverOptions::default()
        }
    }

    pub fn system_options(&self) -> SystemOptions {
        SystemOptions {
            tol_energy: self.tolerances.system_energy,
            seed: self.seed,
            ..SystemOptions::default()
        }
    }

    /// Exponent pattern of the system with unit strength.
    pub fn exponents(&self) -> CouplingMatrix {
        let p = self.symmetry().p_crit();
        match (&self.alpha, &self.beta) {
            (Some(a), Some(b)) => CouplingMatrix::new(unit_strength(self.pieces), a.clone(), b.clone(), p),
            _ => CouplingMatrix::uniform(self.pieces, -1.0, p),
        }
        .expect("validated")
    }
}

fn unit_strength(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { 0.0 } else { -1.0 }).collect())
        .collect()
}

/// Every violated constraint of a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn parse_list(field: &str, s: &str, violations: &mut Vec<String>) -> Option<Vec<f64>> {
    let parsed: Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match parsed {
        Ok(v) => Some(v),
        Err(_) => {
            violations.push(format!("{field}: cannot parse {s:?} as comma-separated numbers"));
            None
        }
    }
}

fn read_file(path: &Path, violations: &mut Vec<String>) -> FileConfig {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            violations.push(format!("config: cannot read {}: {e}", path.display()));
            return FileConfig::default();
        }
    };
    toml::from_str(&text).unwrap_or_else(|e| {
        violations.push(format!("config: {}: {e}", path.display()));
        FileConfig::default()
    })
}

/// Merges defaults, the optional file, the flags and `env_out` (in rising
/// precedence) and validates the result.
pub fn parse_config(args: &Args, env_out: Option<PathBuf>) -> Result<RunConfig, ConfigError> {
    let mut violations = Vec::new();
    let file = match &args.config {
        Some(p) => read_file(p, &mut violations),
        None => FileConfig::default(),
    };

    let m = args.m.or(file.m).unwrap_or(2);
    let n = args.n.or(file.n).unwrap_or(2);
    let pieces = args.pieces.or(file.pieces).unwrap_or(2);
    let mode = args.mode.or(file.mode).unwrap_or(Mode::Partition);
    let cells = args.cells.or(file.cells).unwrap_or(256);
    let grading = args.grading.or(file.grading).unwrap_or(1.0);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let output_dir = env_out
        .or_else(|| args.out.clone())
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from("out"));
    let lambda_schedule = match &args.lambda {
        Some(s) => parse_list("lambda", s, &mut violations).unwrap_or_default(),
        None => file.lambda.unwrap_or_else(|| vec![-1.0, -10.0, -100.0, -1000.0]),
    };
    let interval = match &args.interval {
        Some(s) => match parse_list("interval", s, &mut violations).as_deref() {
            Some(&[a, b]) => [a, b],
            Some(_) => {
                violations.push("interval: expected two numbers a,b".into());
                [0.0, PI]
            }
            None => [0.0, PI],
        },
        None => file.interval.unwrap_or([0.0, PI]),
    };
    let tolerances = file.tolerances.unwrap_or_default();

    if m < 2 {
        violations.push("m ≥ 2 required".into());
    }
    if n < 2 {
        violations.push("n ≥ 2 required".into());
    }
    if m + n < 4 {
        violations.push(format!("N = m + n - 1 = {} but N ≥ 3 required", (m + n).saturating_sub(1)));
    }
    if mode.needs_pieces() && pieces < 2 {
        violations.push(format!("M ≥ 2 required for mode {mode:?}, got {pieces}"));
    }
    if cells < MIN_CELLS {
        violations.push(format!("K ≥ {MIN_CELLS} required, got {cells}"));
    }
    if !(grading.is_finite() && grading > 0.0) {
        violations.push(format!("grading must be positive, got {grading}"));
    }
    if mode.needs_schedule() && lambda_schedule.is_empty() {
        violations.push("lambda schedule is empty".into());
    }
    if lambda_schedule.iter().any(|l| !(*l < 0.0 && l.is_finite())) {
        violations.push(format!("lambda entries must be negative, got {lambda_schedule:?}"));
    }
    if lambda_schedule.windows(2).any(|w| !(w[1] < w[0])) {
        violations.push(format!("lambda schedule must be strictly decreasing, got {lambda_schedule:?}"));
    }
    let [a, b] = interval;
    if !(0.0 <= a && a < b && b <= PI) {
        violations.push(format!("interval ({a}, {b}) must satisfy 0 ≤ a < b ≤ pi"));
    }
    let tol = [
        ("tolerances.energy", tolerances.energy),
        ("tolerances.residual", tolerances.residual),
        ("tolerances.nehari", tolerances.nehari),
        ("tolerances.gradient", tolerances.gradient),
        ("tolerances.system_energy", tolerances.system_energy),
    ];
    for (name, v) in tol {
        if !(v.is_finite() && v > 0.0) {
            violations.push(format!("{name} must be positive, got {v}"));
        }
    }
    let (alpha, beta) = (file.alpha, file.beta);
    match (&alpha, &beta) {
        (Some(al), Some(be)) if m >= 2 && n >= 2 && pieces >= 1 => {
            let p = SymmetryConfig::new(m, n).expect("checked above").p_crit();
            if let Err(e) = CouplingMatrix::new(unit_strength(pieces), al.clone(), be.clone(), p) {
                violations.push(format!("exponents: {e}"));
            }
        }
        (Some(_), None) | (None, Some(_)) => violations.push("alpha and beta must be given together".into()),
        _ => {}
    }

    if !violations.is_empty() {
        return Err(ConfigError { violations });
    }
    Ok(RunConfig {
        m,
        n,
        dim: m + n - 1,
        pieces,
        mode,
        cells,
        grading,
        lambda_schedule,
        interval,
        alpha,
        beta,
        tolerances,
        output_dir,
        seed,
    })
}
