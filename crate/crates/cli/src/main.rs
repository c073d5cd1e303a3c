//! Command line front end: solve, verify, and sweep robust beamforming
//! instances, generate seeded test data, and run the worst-case oracle on
//! stored designs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use beamsdr_core::duality::{verify_duality, DualityError, DualityReport};
use beamsdr_core::formulations::build_wsp_sdr;
use beamsdr_core::harness::{generate_instance, run_sweep, write_sweep_csv, SweepConfig};
use beamsdr_core::instance::InstanceFile;
use beamsdr_core::oracle::{extract_beamformers, worst_case_margin, worst_case_sinr, DesignFile};
use beamsdr_core::solver::{SolveOptions, SolveStatus};
use beamsdr_core::ProblemInstance;

#[derive(Parser)]
#[command(
    name = "beamsdr",
    version,
    about = "Robust downlink beamforming via semidefinite relaxation",
    after_help = "Exit codes: 0 success, 1 usage error, 2 infeasible instance, \
                  3 numerical failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the robust design program and print the extracted beamformers,
    /// total power, and rank profile as JSON.
    Solve {
        /// Instance JSON file.
        instance: PathBuf,
        /// Write the solver-level conic program to this path in a sparse
        /// text format (one line per nonzero) before solving.
        #[arg(long, value_name = "PATH")]
        dump_conic: Option<PathBuf>,
    },
    /// Run the full verification pipeline (independent dual solve, duality
    /// gap, first-order residuals, worst-case margins, uniqueness probe) and
    /// print the report as JSON.
    VerifyDuality {
        /// Instance JSON file.
        instance: PathBuf,
    },
    /// Check a stored design against the exact worst-case oracle and print
    /// per-user margins as JSON.
    Oracle {
        /// Instance JSON file.
        instance: PathBuf,
        /// Design JSON file (as printed by `solve`).
        #[arg(long, value_name = "PATH")]
        design: PathBuf,
    },
    /// Run a Monte Carlo sweep from a config file and write records.csv and
    /// aggregate.csv into the output directory.
    Sweep {
        /// Sweep config JSON file.
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Generate a seeded random instance and write it as JSON.
    Gen(GenArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Transmit antennas.
    #[arg(long)]
    nt: usize,
    /// Users.
    #[arg(long)]
    k: usize,
    /// Noise power shared by all users.
    #[arg(long)]
    sigma2: f64,
    /// Uncertainty-ball radius shared by all users.
    #[arg(long)]
    radius: f64,
    /// SINR target in dB shared by all users.
    #[arg(long)]
    gamma_db: f64,
    /// Generator seed.
    #[arg(long)]
    seed: u64,
    /// Output instance JSON path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

/// Failure classes behind the documented exit codes.
enum Failure {
    /// Bad arguments, unreadable files, malformed JSON — exit 1.
    Usage(anyhow::Error),
    /// The instance is certifiably infeasible — exit 2.
    Infeasible(String),
    /// The solver or a verification stage broke down numerically — exit 3.
    Numerical(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        match self {
            Failure::Usage(err) => {
                eprintln!("error: {err:#}");
                ExitCode::from(1)
            }
            Failure::Infeasible(msg) => {
                eprintln!("infeasible: {msg}");
                ExitCode::from(2)
            }
            Failure::Numerical(msg) => {
                eprintln!("numerical failure: {msg}");
                ExitCode::from(3)
            }
        }
    }
}

fn usage<E: Into<anyhow::Error>>(err: E) -> Failure {
    Failure::Usage(err.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve {
            instance,
            dump_conic,
        } => cmd_solve(&instance, dump_conic.as_deref()),
        Command::VerifyDuality { instance } => cmd_verify(&instance),
        Command::Oracle { instance, design } => cmd_oracle(&instance, &design),
        Command::Sweep { config, out } => cmd_sweep(&config, &out),
        Command::Gen(args) => cmd_gen(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => failure.report(),
    }
}

/// Reads and validates an instance file, attributing parse errors (with
/// serde's line/column diagnostics) and shape errors to the path.
fn load_instance(path: &Path) -> Result<ProblemInstance, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Usage)?;
    let file: InstanceFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Usage)?;
    file.into_instance()
        .with_context(|| format!("validating {}", path.display()))
        .map_err(Failure::Usage)
}

fn from_duality(err: DualityError) -> Failure {
    match err {
        DualityError::Infeasible { .. } => Failure::Infeasible(err.to_string()),
        other => Failure::Numerical(other.to_string()),
    }
}

fn cmd_solve(instance: &Path, dump_conic: Option<&Path>) -> Result<(), Failure> {
    let inst = load_instance(instance)?;
    let wsp = build_wsp_sdr(&inst);
    if let Some(path) = dump_conic {
        fs::write(path, wsp.program().dump())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Usage)?;
    }
    let sol = wsp.solve(&SolveOptions::default());
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::PrimalInfeasible => {
            return Err(Failure::Infeasible(format!(
                "design program infeasible (certificate violation {:.2e})",
                sol.certificate_violation
            )));
        }
        status => {
            return Err(Failure::Numerical(format!(
                "design solve stopped with status {}",
                status.as_str()
            )));
        }
    }
    let design = wsp.design_from(&sol);
    let (set, profile) = extract_beamformers(&inst, &design)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    let file = DesignFile::from_set(&set, Some(&profile));
    println!("{}", pretty(serde_json::to_string_pretty(&file))?);
    Ok(())
}

fn cmd_verify(instance: &Path) -> Result<(), Failure> {
    let inst = load_instance(instance)?;
    let report = verify_duality(&inst, &SolveOptions::default()).map_err(from_duality)?;
    println!("{}", pretty(serde_json::to_string_pretty(&report_json(&report)))?);
    Ok(())
}

/// Lays out the verification report for the wire: scalars first, then the
/// per-user arrays, with the probe verdict under its reporting name.
fn report_json(report: &DualityReport) -> serde_json::Value {
    json!({
        "primal_obj": report.primal_obj,
        "dual_obj": report.dual_obj,
        "rel_gap": report.rel_gap,
        "rank_profile": report.rank_profile,
        "max_rank_ratio": report.max_rank_ratio(),
        "kkt": {
            "cone": report.kkt.cone,
            "psi_psd": report.kkt.psi_psd,
            "y_psd": report.kkt.y_psd,
            "psi_complementarity": report.kkt.psi_complementarity,
            "y_complementarity": report.kkt.y_complementarity,
            "trace_bound": report.kkt.trace_bound,
            "trace_complementarity": report.kkt.trace_complementarity,
            "max": report.kkt.max(),
        },
        "worst_case_margins": report.worst_case_margins,
        "min_margin": report.min_margin(),
        "condition1_verdict": report.condition1_verdict.label(),
    })
}

fn cmd_oracle(instance: &Path, design: &Path) -> Result<(), Failure> {
    let inst = load_instance(instance)?;
    let text = fs::read_to_string(design)
        .with_context(|| format!("reading {}", design.display()))
        .map_err(Failure::Usage)?;
    let file: DesignFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", design.display()))
        .map_err(Failure::Usage)?;
    if file.nt != inst.num_antennas() || file.k != inst.num_users() {
        return Err(usage(anyhow!(
            "design is {}x{} (users x antennas) but the instance is {}x{}",
            file.k,
            file.nt,
            inst.num_users(),
            inst.num_antennas()
        )));
    }
    let set = file
        .into_set()
        .with_context(|| format!("validating {}", design.display()))
        .map_err(Failure::Usage)?;
    let margins: Vec<f64> = (0..inst.num_users())
        .map(|i| worst_case_margin(&inst, &set.w, i, inst.sinr_target(i)))
        .collect();
    let sinr: Vec<f64> = (0..inst.num_users())
        .map(|i| worst_case_sinr(&inst, &set, i))
        .collect();
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let out = json!({
        "power": set.power,
        "worst_case_margins": margins,
        "min_margin": min_margin,
        "worst_case_sinr": sinr,
        "sinr_targets": inst.sinr_targets(),
        "all_targets_met": min_margin >= 0.0,
    });
    println!("{}", pretty(serde_json::to_string_pretty(&out))?);
    Ok(())
}

fn cmd_sweep(config: &Path, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))
        .map_err(Failure::Usage)?;
    let cfg: SweepConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", config.display()))
        .map_err(Failure::Usage)?;
    let output = run_sweep(&cfg).map_err(usage)?;
    write_sweep_csv(&output, out).map_err(usage)?;
    println!(
        "wrote {} records to {}",
        output.records.len(),
        out.join("records.csv").display()
    );
    for row in &output.aggregate {
        match row.mean_power_db {
            Some(db) => println!(
                "gamma {:>6.2} dB: feasible {}/{} ({:.0}%), mean power {:.4} dB",
                row.gamma_db,
                row.feasible,
                row.trials,
                100.0 * row.feasibility_rate,
                db
            ),
            None => println!(
                "gamma {:>6.2} dB: feasible 0/{} — no designs to average",
                row.gamma_db, row.trials
            ),
        }
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    if args.nt == 0 || args.k == 0 {
        return Err(usage(anyhow!("--nt and --k must be positive")));
    }
    if !(args.sigma2 > 0.0) {
        return Err(usage(anyhow!("--sigma2 must be positive")));
    }
    if !(args.radius >= 0.0) {
        return Err(usage(anyhow!("--radius must be nonnegative")));
    }
    let inst = generate_instance(
        args.nt,
        args.k,
        args.sigma2,
        args.radius,
        args.gamma_db,
        args.seed,
    );
    let file = InstanceFile::from_instance(&inst);
    let body = pretty(serde_json::to_string_pretty(&file))?;
    fs::write(&args.out, body + "\n")
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(Failure::Usage)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn pretty(rendered: serde_json::Result<String>) -> Result<String, Failure> {
    rendered.map_err(|e| Failure::Numerical(e.to_string()))
}
