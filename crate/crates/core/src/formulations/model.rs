//! Lowering layer: semidefinite programs over *complex* Hermitian variables,
//! compiled onto the real block solver.
//!
//! A Hermitian variable `H` of dimension `n` is hosted in a real PSD block of
//! size `2n` through the embedding `[[Re H, -Im H], [Im H, Re H]]`, which
//! preserves positive semidefiniteness and doubles every eigenvalue. Because
//! the embedding doubles trace products, every Hermitian coefficient `F` is
//! lowered as `embed(F)/2`, so real inner products equal complex ones:
//! `<embed(F)/2, embed(H)> = Re tr(F H)`. Objective values, row activities,
//! and row multipliers therefore all read directly in complex units.
//!
//! Inequality rows are converted to equalities with a fresh nonnegative
//! scalar slack, keeping the underlying solver equality-only.

use crate::complex::{herm_from_embedding, real_embed, HermMatrix};
use crate::solver::{
    solve, BlockData, ConicProgram, ConicSolution, SolveOptions, SolveStatus,
};

/// Handle to a Hermitian matrix variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermVar(usize);

/// Handle to a block of nonnegative scalar variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarVar(usize);

/// Handle to one scalar constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowId(usize);

/// Direction of a scalar constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Eq,
    Ge,
    Le,
}

/// A complex-variable semidefinite program and its lowered real form.
#[derive(Debug, Clone, Default)]
pub struct ComplexSdp {
    program: ConicProgram,
    /// Per Hermitian variable: (real block index, complex dimension).
    herm: Vec<(usize, usize)>,
    /// Per scalar variable block: (real block index, length).
    scalar: Vec<(usize, usize)>,
    maximize: bool,
    objective_touched: bool,
}

impl ComplexSdp {
    pub fn new() -> Self {
        ComplexSdp::default()
    }

    /// Declares the program a maximization; must precede objective setting.
    /// The lowered program minimizes the negated objective, and
    /// [`ComplexSdp::objective_value`] / [`ComplexSdp::dual_objective_value`]
    /// undo the flip.
    pub fn set_maximize(&mut self) {
        assert!(
            !self.objective_touched,
            "set_maximize must be called before objective coefficients"
        );
        self.maximize = true;
    }

    pub fn add_herm_var(&mut self, n: usize) -> HermVar {
        let block = self.program.add_psd_block(2 * n);
        self.herm.push((block, n));
        HermVar(self.herm.len() - 1)
    }

    pub fn add_scalar_vars(&mut self, len: usize) -> ScalarVar {
        let block = self.program.add_nonneg_block(len);
        self.scalar.push((block, len));
        ScalarVar(self.scalar.len() - 1)
    }

    fn lower_coeff(&self, f: &HermMatrix) -> BlockData {
        let mut m = real_embed(f);
        m.scale(0.5);
        BlockData::Sym(m)
    }

    /// Sets `<C, H>` as this variable's objective contribution.
    pub fn set_herm_objective(&mut self, v: HermVar, c: &HermMatrix) {
        let (block, n) = self.herm[v.0];
        assert_eq!(c.dim(), n, "objective dimension mismatch");
        let sign = if self.maximize { -1.0 } else { 1.0 };
        let scaled = c.scale(sign);
        self.program.set_objective(block, self.lower_coeff(&scaled));
        self.objective_touched = true;
    }

    pub fn set_scalar_objective(&mut self, v: ScalarVar, c: Vec<f64>) {
        let (block, len) = self.scalar[v.0];
        assert_eq!(c.len(), len, "objective length mismatch");
        let sign = if self.maximize { -1.0 } else { 1.0 };
        self.program
            .set_objective(block, BlockData::Vec(c.into_iter().map(|x| sign * x).collect()));
        self.objective_touched = true;
    }

    /// Appends the row `sum Re tr(F_j H_j) + sum c_j . s_j  (sense)  rhs`.
    pub fn add_row(
        &mut self,
        herm_terms: &[(HermVar, &HermMatrix)],
        scalar_terms: &[(ScalarVar, Vec<f64>)],
        sense: RowSense,
        rhs: f64,
    ) -> RowId {
        let mut terms: Vec<(usize, BlockData)> = Vec::new();
        for (v, f) in herm_terms {
            let (block, n) = self.herm[v.0];
            assert_eq!(f.dim(), n, "row coefficient dimension mismatch");
            terms.push((block, self.lower_coeff(f)));
        }
        for (v, c) in scalar_terms {
            let (block, len) = self.scalar[v.0];
            assert_eq!(c.len(), len, "row coefficient length mismatch");
            terms.push((block, BlockData::Vec(c.clone())));
        }
        match sense {
            RowSense::Eq => {}
            RowSense::Ge => {
                let slack = self.program.add_nonneg_block(1);
                terms.push((slack, BlockData::Vec(vec![-1.0])));
            }
            RowSense::Le => {
                let slack = self.program.add_nonneg_block(1);
                terms.push((slack, BlockData::Vec(vec![1.0])));
            }
        }
        RowId(self.program.add_row(terms, rhs))
    }

    pub fn program(&self) -> &ConicProgram {
        &self.program
    }

    pub fn solve(&self, opts: &SolveOptions) -> ConicSolution {
        solve(&self.program, opts)
    }

    /// Optimal objective in the declared sense (undoes the maximize flip).
    pub fn objective_value(&self, sol: &ConicSolution) -> f64 {
        if self.maximize {
            -sol.primal_obj
        } else {
            sol.primal_obj
        }
    }

    /// Lowered-dual objective in the declared sense.
    pub fn dual_objective_value(&self, sol: &ConicSolution) -> f64 {
        if self.maximize {
            -sol.dual_obj
        } else {
            sol.dual_obj
        }
    }

    /// Recovers a Hermitian variable's value. The averaging in
    /// [`herm_from_embedding`] makes this exact for any solver iterate.
    pub fn herm_value(&self, sol: &ConicSolution, v: HermVar) -> HermMatrix {
        let (block, _) = self.herm[v.0];
        herm_from_embedding(sol.primal[block].as_sym())
    }

    /// Recovers the complex dual slack of a Hermitian variable. Because
    /// coefficients are lowered with a factor 1/2, the complex slack is twice
    /// the recovered real one. Minimization-sense programs only.
    pub fn herm_dual_slack(&self, sol: &ConicSolution, v: HermVar) -> HermMatrix {
        debug_assert!(!self.maximize, "dual recovery is minimize-sense only");
        let (block, _) = self.herm[v.0];
        herm_from_embedding(sol.dual_slack[block].as_sym()).scale(2.0)
    }

    pub fn scalar_value(&self, sol: &ConicSolution, v: ScalarVar) -> Vec<f64> {
        let (block, _) = self.scalar[v.0];
        sol.primal[block].as_vec().to_vec()
    }

    /// Dual slack of a scalar variable block (minimization-sense programs).
    pub fn scalar_dual_slack(&self, sol: &ConicSolution, v: ScalarVar) -> Vec<f64> {
        debug_assert!(!self.maximize, "dual recovery is minimize-sense only");
        let (block, _) = self.scalar[v.0];
        sol.dual_slack[block].as_vec().to_vec()
    }

    /// Row multiplier in complex units (minimization-sense programs).
    pub fn row_dual(&self, sol: &ConicSolution, row: RowId) -> f64 {
        debug_assert!(!self.maximize, "dual recovery is minimize-sense only");
        sol.dual_y[row.0]
    }

    /// True when the solve certified optimality.
    pub fn is_optimal(sol: &ConicSolution) -> bool {
        sol.status == SolveStatus::Optimal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::ComplexVector;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// min tr(H) over Hermitian PSD H with a fixed complex-valued inner
    /// product pinned: simplest end-to-end lowering round trip.
    #[test]
    fn complex_trace_problem_round_trips() {
        let mut sdp = ComplexSdp::new();
        let h = sdp.add_herm_var(2);
        sdp.set_herm_objective(h, &HermMatrix::identity(2));
        // pin <F, H> = 1 with F carrying an imaginary off-diagonal part
        let f = HermMatrix::new(
            2,
            vec![c(1.0, 0.0), c(0.0, 0.4), c(0.0, -0.4), c(1.0, 0.0)],
        );
        sdp.add_row(&[(h, &f)], &[], RowSense::Eq, 1.0);
        let sol = sdp.solve(&SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        // optimum: H = x x^H aligned with F's top eigenvector; value
        // 1 / lambda_max(F) with lambda_max = 1.4
        assert!(
            (sdp.objective_value(&sol) - 1.0 / 1.4).abs() < 1e-7,
            "objective {}",
            sdp.objective_value(&sol)
        );
        let recovered = sdp.herm_value(&sol, h);
        assert!((recovered.inner(&f) - 1.0).abs() < 1e-7);
    }

    /// The recovered dual slack satisfies the complex dual constraint
    /// C - y F = S with S PSD and complementary to H.
    #[test]
    fn dual_slack_recovery_matches_complex_stationarity() {
        let mut sdp = ComplexSdp::new();
        let h = sdp.add_herm_var(2);
        sdp.set_herm_objective(h, &HermMatrix::identity(2));
        let f = HermMatrix::new(
            2,
            vec![c(2.0, 0.0), c(0.3, -0.1), c(0.3, 0.1), c(1.0, 0.0)],
        );
        let row = sdp.add_row(&[(h, &f)], &[], RowSense::Eq, 1.0);
        let sol = sdp.solve(&SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        let y = sdp.row_dual(&sol, row);
        let s = sdp.herm_dual_slack(&sol, h);
        let want = HermMatrix::identity(2).sub(&f.scale(y));
        let diff = s.sub(&want).norm_fro();
        assert!(diff < 1e-7, "dual stationarity residual {diff}");
        // complementarity
        let hval = sdp.herm_value(&sol, h);
        assert!(hval.inner(&s).abs() < 1e-6);
    }

    /// Ge rows get a slack and a nonnegative multiplier; Le rows the mirror.
    #[test]
    fn inequality_rows_have_signed_multipliers() {
        // min tr H  s.t.  <I, H> >= 3  (active at optimum)
        let mut sdp = ComplexSdp::new();
        let h = sdp.add_herm_var(2);
        sdp.set_herm_objective(h, &HermMatrix::identity(2));
        let row = sdp.add_row(
            &[(h, &HermMatrix::identity(2))],
            &[],
            RowSense::Ge,
            3.0,
        );
        let sol = sdp.solve(&SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sdp.objective_value(&sol) - 3.0).abs() < 1e-7);
        assert!(sdp.row_dual(&sol, row) >= -1e-9, "Ge multiplier sign");
    }

    #[test]
    fn maximize_flips_objective_and_value() {
        // max <E11, H> s.t. tr H <= 1: optimum 1
        let mut sdp = ComplexSdp::new();
        let h = sdp.add_herm_var(2);
        sdp.set_maximize();
        let e11 = HermMatrix::from_diag(&[1.0, 0.0]);
        sdp.set_herm_objective(h, &e11);
        sdp.add_row(&[(h, &HermMatrix::identity(2))], &[], RowSense::Le, 1.0);
        let sol = sdp.solve(&SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sdp.objective_value(&sol) - 1.0).abs() < 1e-7);
        assert!((sdp.dual_objective_value(&sol) - 1.0).abs() < 1e-7);
    }

    /// Scalar blocks participate in rows alongside Hermitian terms.
    #[test]
    fn mixed_hermitian_and_scalar_row() {
        // min tr H + 2 s  s.t.  <I,H> + s = 2, s >= 0: all mass goes to H
        let mut sdp = ComplexSdp::new();
        let h = sdp.add_herm_var(1);
        let s = sdp.add_scalar_vars(1);
        sdp.set_herm_objective(h, &HermMatrix::identity(1));
        sdp.set_scalar_objective(s, vec![2.0]);
        sdp.add_row(
            &[(h, &HermMatrix::identity(1))],
            &[(s, vec![1.0])],
            RowSense::Eq,
            2.0,
        );
        let sol = sdp.solve(&SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sdp.objective_value(&sol) - 2.0).abs() < 1e-7);
        assert!(sdp.scalar_value(&sol, s)[0] < 1e-6);
    }

    /// A complex-valued certificate survives the lowering: the phase of the
    /// pinned inner product is carried exactly.
    #[test]
    fn phase_information_survives_lowering() {
        let mut sdp = ComplexSdp::new();
        let h = sdp.add_herm_var(2);
        sdp.set_herm_objective(h, &HermMatrix::identity(2));
        // F = x x^H for a complex direction x; pin <F,H> = 1
        let x = ComplexVector::new(vec![c(0.8, 0.0), c(0.36, 0.48)]);
        let f = x.outer();
        sdp.add_row(&[(h, &f)], &[], RowSense::Eq, 1.0);
        let sol = sdp.solve(&SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        // optimum H = x x^H / ||x||^4 with tr = 1/||x||^2 = 1 (unit x)
        assert!((sdp.objective_value(&sol) - 1.0).abs() < 1e-6);
        let hv = sdp.herm_value(&sol, h);
        let want = x.outer();
        assert!(hv.sub(&want).norm_fro() < 1e-5, "recovered H off by {}", hv.sub(&want).norm_fro());
    }
}
