//! Monte Carlo sweep harness: reproducible instance generation, a bounded
//! worker pool running independent trials, and CSV persistence.
//!
//! Every random quantity is produced by a counter-based generator keyed on
//! `(seed, lane, counter)`, so an instance is a pure function of its
//! parameters — no generator state is carried between entries, users, or
//! trials, and results are bit-identical across platforms and worker counts.

use std::fmt::Write as _;
use std::num::NonZeroUsize;
use std::path::Path;
use std::time::Instant;
use std::{env, fs, io};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::ComplexVector;
use crate::duality::{verify_duality, DualityError};
use crate::instance::ProblemInstance;
use crate::solver::{SolveOptions, SolveStatus};

/// Environment variable overriding the sweep worker count.
pub const WORKERS_ENV: &str = "BEAMSDR_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

// ---------------------------------------------------------------------------
// Seeded instance generation
// ---------------------------------------------------------------------------

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a bijective avalanche mix.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed counter hash: independent 64-bit words for every `(seed, lane,
/// counter)` triple, with no sequential state.
fn keyed(seed: u64, lane: u64, counter: u64) -> u64 {
    let h = mix(seed.wrapping_add(GOLDEN.wrapping_mul(lane.wrapping_add(1))));
    mix(h.wrapping_add(GOLDEN.wrapping_mul(counter.wrapping_add(1))))
}

/// Uniform draw on `[0, 1)` with 53 significant bits.
fn unit(seed: u64, lane: u64, counter: u64) -> f64 {
    (keyed(seed, lane, counter) >> 11) as f64 * 2f64.powi(-53)
}

/// One standard circular complex Gaussian: the squared magnitude is unit-mean
/// exponential and the phase uniform, so real and imaginary parts are
/// independent zero-mean Gaussians of variance one half.
fn standard_complex(seed: u64, lane: u64, counter: u64) -> Complex64 {
    let u1 = unit(seed, lane, 2 * counter);
    let u2 = unit(seed, lane, 2 * counter + 1);
    let amplitude = (-(1.0 - u1).ln()).sqrt();
    Complex64::from_polar(amplitude, std::f64::consts::TAU * u2)
}

/// Builds the seeded random instance for one sweep trial: `k` users sharing a
/// noise floor `sigma2`, uncertainty radius `radius`, and SINR target
/// `gamma_db` (in dB), with channel entries drawn i.i.d. from the standard
/// circular complex Gaussian.
///
/// The same `(nt, k, sigma2, radius, gamma_db, seed)` tuple always yields a
/// bit-identical instance.
pub fn generate_instance(
    nt: usize,
    k: usize,
    sigma2: f64,
    radius: f64,
    gamma_db: f64,
    seed: u64,
) -> ProblemInstance {
    let gamma = 10f64.powf(gamma_db / 10.0);
    let channels: Vec<ComplexVector> = (0..k)
        .map(|i| {
            ComplexVector::new(
                (0..nt)
                    .map(|j| standard_complex(seed, i as u64, j as u64))
                    .collect(),
            )
        })
        .collect();
    ProblemInstance::new(channels, vec![radius; k], vec![sigma2; k], vec![gamma; k])
        .expect("generated instance satisfies the constructor's preconditions")
}

// ---------------------------------------------------------------------------
// Sweep configuration
// ---------------------------------------------------------------------------

/// Solver tolerances as they appear in a sweep config file. Mirrors
/// [`SolveOptions`] so configs round-trip through JSON with defaults for
/// omitted fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let opts = SolveOptions::default();
        Tolerances {
            gap_tol: opts.gap_tol,
            feas_tol: opts.feas_tol,
            max_iterations: opts.max_iterations,
        }
    }
}

impl From<&Tolerances> for SolveOptions {
    fn from(t: &Tolerances) -> Self {
        SolveOptions {
            gap_tol: t.gap_tol,
            feas_tol: t.feas_tol,
            max_iterations: t.max_iterations,
        }
    }
}

/// Parameters of one Monte Carlo sweep over a grid of SINR targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Transmit antennas per instance.
    pub nt: usize,
    /// Users per instance.
    pub k: usize,
    /// Noise power shared by all users.
    pub sigma2: f64,
    /// Uncertainty-ball radius shared by all users.
    pub radius: f64,
    /// SINR targets in dB, strictly ascending.
    pub gamma_db_grid: Vec<f64>,
    /// Independent trials per grid point.
    pub trials: u32,
    /// Master seed; trial seeds are derived from it.
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Worker cap for the trial pool. Defaults to the machine's available
    /// parallelism; the `BEAMSDR_WORKERS` environment variable overrides
    /// both.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.nt == 0 || self.k == 0 {
            return fail(format!("nt and k must be positive (nt={}, k={})", self.nt, self.k));
        }
        if !(self.sigma2 > 0.0) {
            return fail(format!("sigma2 must be positive (got {})", self.sigma2));
        }
        if !(self.radius >= 0.0) {
            return fail(format!("radius must be nonnegative (got {})", self.radius));
        }
        if self.gamma_db_grid.is_empty() {
            return fail("gamma_db_grid must be nonempty".into());
        }
        if !self.gamma_db_grid.iter().all(|g| g.is_finite()) {
            return fail("gamma_db_grid entries must be finite".into());
        }
        if self.gamma_db_grid.windows(2).any(|w| w[0] >= w[1]) {
            return fail("gamma_db_grid must be strictly ascending".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be at least 1 when set".into());
        }
        Ok(())
    }

    /// Seed for trial `trial`, derived from the master seed. The seed is
    /// shared across the gamma grid on purpose (common random numbers):
    /// every grid point sees the same channel set, so per-trial power is
    /// strictly monotone in the target and the feasible trials at a higher
    /// target are a subset of those at a lower one — curves are comparable
    /// point to point instead of only in distribution.
    pub fn trial_seed(&self, trial: u32) -> u64 {
        keyed(self.seed, 0, u64::from(trial))
    }
}

// ---------------------------------------------------------------------------
// Sweep records
// ---------------------------------------------------------------------------

/// Outcome class of one trial, as written to the `status` CSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    /// Verified design with matching certificate.
    Optimal,
    /// The design program is certifiably infeasible at this target.
    Infeasible,
    /// The solver stopped without an optimal or infeasible verdict.
    Solver(SolveStatus),
    /// Solved, but a recovery, transfer, or extraction check failed.
    Verification,
}

impl TrialStatus {
    pub fn label(&self) -> &'static str {
        match self {
            TrialStatus::Optimal => "optimal",
            TrialStatus::Infeasible => "infeasible",
            TrialStatus::Solver(status) => status.as_str(),
            TrialStatus::Verification => "verification_failed",
        }
    }
}

/// One trial's outcome. Result fields are `None` (empty CSV cells) whenever
/// the trial did not produce a verified design, so failures stay in the
/// record stream without aborting the sweep.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub gamma_db: f64,
    pub trial: u32,
    /// Derived per-trial seed (regenerates this trial's instance).
    pub seed: u64,
    pub status: TrialStatus,
    /// Total transmit power of the verified design.
    pub power: Option<f64>,
    pub rel_gap: Option<f64>,
    pub max_rank_ratio: Option<f64>,
    pub min_margin: Option<f64>,
    pub condition1_verdict: Option<&'static str>,
    pub wall_time_ms: f64,
}

/// Per-grid-point summary across trials.
#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub gamma_db: f64,
    pub trials: u32,
    /// Trials with status `optimal`.
    pub feasible: u32,
    pub feasibility_rate: f64,
    /// `10·log10` of the mean linear power over feasible trials; `None` when
    /// no trial at this grid point was feasible.
    pub mean_power_db: Option<f64>,
}

/// All records of a sweep, ordered by `(grid index, trial index)`, plus the
/// per-grid-point aggregate.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub aggregate: Vec<AggregateRow>,
}

// ---------------------------------------------------------------------------
// Running a sweep
// ---------------------------------------------------------------------------

fn worker_count(cfg: &SweepConfig) -> Result<usize, HarnessError> {
    if let Ok(raw) = env::var(WORKERS_ENV) {
        return match raw.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(HarnessError::Config(format!(
                "{WORKERS_ENV} must be a positive integer (got {raw:?})"
            ))),
        };
    }
    Ok(cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, NonZeroUsize::get)))
}

fn run_trial(cfg: &SweepConfig, opts: &SolveOptions, gamma_idx: usize, trial: u32) -> SweepRecord {
    let gamma_db = cfg.gamma_db_grid[gamma_idx];
    let seed = cfg.trial_seed(trial);
    let inst = generate_instance(cfg.nt, cfg.k, cfg.sigma2, cfg.radius, gamma_db, seed);
    let start = Instant::now();
    let outcome = verify_duality(&inst, opts);
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut record = SweepRecord {
        gamma_db,
        trial,
        seed,
        status: TrialStatus::Verification,
        power: None,
        rel_gap: None,
        max_rank_ratio: None,
        min_margin: None,
        condition1_verdict: None,
        wall_time_ms,
    };
    match outcome {
        Ok(report) => {
            record.status = TrialStatus::Optimal;
            record.power = Some(report.primal_obj);
            record.rel_gap = Some(report.rel_gap);
            record.max_rank_ratio = Some(report.max_rank_ratio());
            record.min_margin = Some(report.min_margin());
            record.condition1_verdict = Some(report.condition1_verdict.label());
        }
        Err(DualityError::Infeasible { .. }) => record.status = TrialStatus::Infeasible,
        Err(DualityError::Solve { status, .. }) => record.status = TrialStatus::Solver(status),
        Err(_) => record.status = TrialStatus::Verification,
    }
    record
}

/// Runs every `(grid point, trial)` pair of the sweep on a bounded worker
/// pool. Individual trial failures become records; only a malformed config
/// or pool setup failure is an error. Output is deterministic for a fixed
/// config (`wall_time_ms` aside) regardless of worker count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput, HarnessError> {
    cfg.validate()?;
    let opts = SolveOptions::from(&cfg.tolerances);
    let jobs: Vec<(usize, u32)> = (0..cfg.gamma_db_grid.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(cfg)?)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let mut keyed_records: Vec<((usize, u32), SweepRecord)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, t)| ((g, t), run_trial(cfg, &opts, g, t)))
            .collect()
    });
    keyed_records.sort_by_key(|&(key, _)| key);
    let records: Vec<SweepRecord> = keyed_records.into_iter().map(|(_, r)| r).collect();
    let aggregate = aggregate_records(cfg, &records);
    Ok(SweepOutput { records, aggregate })
}

fn aggregate_records(cfg: &SweepConfig, records: &[SweepRecord]) -> Vec<AggregateRow> {
    let trials = cfg.trials as usize;
    cfg.gamma_db_grid
        .iter()
        .enumerate()
        .map(|(g, &gamma_db)| {
            let chunk = &records[g * trials..(g + 1) * trials];
            let powers: Vec<f64> = chunk
                .iter()
                .filter(|r| r.status == TrialStatus::Optimal)
                .filter_map(|r| r.power)
                .collect();
            let feasible = powers.len() as u32;
            let mean_power_db = if powers.is_empty() {
                None
            } else {
                let mean = powers.iter().sum::<f64>() / powers.len() as f64;
                Some(10.0 * mean.log10())
            };
            AggregateRow {
                gamma_db,
                trials: cfg.trials,
                feasible,
                feasibility_rate: f64::from(feasible) / f64::from(cfg.trials),
                mean_power_db,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// Header of `records.csv`.
pub const RECORDS_HEADER: &str =
    "gamma_db,trial,seed,status,power,power_db,rel_gap,max_rank_ratio,min_margin,condition1,wall_time_ms";

fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Renders the per-trial records. All columns except `wall_time_ms` are a
/// pure function of the config, so files diff cleanly across runs.
pub fn records_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let power_db = r.power.and_then(|p| (p > 0.0).then(|| 10.0 * p.log10()));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.gamma_db,
            r.trial,
            r.seed,
            r.status.label(),
            cell(r.power),
            cell(power_db),
            cell(r.rel_gap),
            cell(r.max_rank_ratio),
            cell(r.min_margin),
            r.condition1_verdict.unwrap_or(""),
            r.wall_time_ms,
        );
    }
    out
}

/// Renders the per-grid-point aggregate, with the averaging policy stated in
/// `#` comment lines so the file is self-describing.
pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::new();
    out.push_str("# feasible counts trials with status=optimal; all other trials are\n");
    out.push_str("# excluded from the power average and reflected in feasibility_rate.\n");
    out.push_str("# mean_power_db = 10*log10(mean linear power over feasible trials);\n");
    out.push_str("# empty when no trial at the grid point was feasible.\n");
    out.push_str("gamma_db,trials,feasible,feasibility_rate,mean_power_db\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.gamma_db,
            row.trials,
            row.feasible,
            row.feasibility_rate,
            cell(row.mean_power_db),
        );
    }
    out
}

/// Writes `records.csv` and `aggregate.csv` into `dir`, creating it first.
pub fn write_sweep_csv(out: &SweepOutput, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("records.csv"), records_csv(&out.records))?;
    fs::write(dir.join("aggregate.csv"), aggregate_csv(&out.aggregate))?;
    Ok(())
}
