//! Self-contained primal-dual interior-point solver for block-diagonal
//! semidefinite programs with nonnegative scalar blocks.
//!
//! [`solve`] is the entry point: it removes linearly dependent equality rows
//! (certifying outright inconsistency when the right-hand sides disagree),
//! runs a Mehrotra predictor-corrector iteration on the reduced program, and
//! lifts the row multipliers back to the original row indexing.

mod ipm;
mod presolve;
mod program;

pub use ipm::SolveOptions;
pub use presolve::{farkas_quality, presolve, PresolveOutcome, Presolved, PIVOT_TOL};
pub use program::{
    BlockData, BlockKind, ConicProgram, ConicSolution, IterRecord, Row, SolveStatus,
};

/// Solves `min <C, X> s.t. <A_i, X> = b_i, X in K` to the requested
/// tolerances, returning primal and dual iterates plus a per-iteration trace.
///
/// Infeasibility is reported with an attached certificate: on
/// [`SolveStatus::PrimalInfeasible`] the multipliers satisfy `b^T y = 1` with
/// `-sum y_i A_i` in the dual cone (stored in `dual_slack`), and on
/// [`SolveStatus::DualInfeasible`] the primal blocks hold an improving ray.
pub fn solve(prog: &ConicProgram, opts: &SolveOptions) -> ConicSolution {
    match presolve(prog) {
        PresolveOutcome::Infeasible { farkas_y } => {
            let mut slack: Vec<BlockData> = (0..prog.num_blocks())
                .map(|j| BlockData::zeros(prog.block(j)))
                .collect();
            for (i, &yi) in farkas_y.iter().enumerate() {
                if yi == 0.0 {
                    continue;
                }
                for (b, a) in &prog.row(i).terms {
                    slack[*b].axpy(-yi, a);
                }
            }
            let violation = slack
                .iter()
                .map(|b| b.min_eig())
                .fold(f64::INFINITY, f64::min)
                .min(0.0);
            let dual_obj: f64 = farkas_y
                .iter()
                .enumerate()
                .map(|(i, &yi)| yi * prog.rhs(i))
                .sum();
            let primal: Vec<BlockData> = (0..prog.num_blocks())
                .map(|j| BlockData::zeros(prog.block(j)))
                .collect();
            ConicSolution {
                status: SolveStatus::PrimalInfeasible,
                primal,
                dual_y: farkas_y,
                dual_slack: slack,
                primal_obj: 0.0,
                dual_obj,
                rel_gap: dual_obj.abs() / (1.0 + dual_obj.abs()),
                primal_residual: 0.0,
                dual_residual: 0.0,
                iterations: 0,
                certificate_violation: violation,
                trace: Vec::new(),
                note: Some("equality rows are linearly inconsistent".into()),
            }
        }
        PresolveOutcome::Reduced(reduced) => {
            let mut sol = ipm::run(&reduced.program, opts);
            sol.dual_y = reduced.lift_dual(&sol.dual_y);
            sol
        }
    }
}
