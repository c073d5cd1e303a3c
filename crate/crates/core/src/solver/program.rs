//! Standard-form conic programs over PSD matrix blocks and nonnegative
//! scalar blocks:
//!
//! ```text
//!   minimize    sum_j <C_j, X_j>
//!   subject to  sum_j <A_{i,j}, X_j> = b_i,   i = 0..m,
//!               X_j in K_j  (PSD cone or nonnegative orthant)
//! ```
//!
//! Inner products are the trace product on symmetric blocks and the dot
//! product on scalar blocks.

use crate::realsym::RealMat;

/// Cone descriptor for one variable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// `n x n` real symmetric positive semidefinite block.
    Psd(usize),
    /// `m` nonnegative scalar variables.
    NonNeg(usize),
}

impl BlockKind {
    /// Contribution to the barrier dimension (rank of the cone).
    pub fn barrier_dim(&self) -> usize {
        match *self {
            BlockKind::Psd(n) => n,
            BlockKind::NonNeg(m) => m,
        }
    }
}

/// Dense data attached to one block: a symmetric matrix for PSD blocks, an
/// entry vector for nonnegative blocks. Used for objective and constraint
/// coefficients as well as primal/dual iterates.
#[derive(Debug, Clone)]
pub enum BlockData {
    Sym(RealMat),
    Vec(Vec<f64>),
}

impl BlockData {
    pub fn zeros(kind: BlockKind) -> Self {
        match kind {
            BlockKind::Psd(n) => BlockData::Sym(RealMat::zeros(n, n)),
            BlockKind::NonNeg(m) => BlockData::Vec(vec![0.0; m]),
        }
    }

    /// Scaled identity element of the cone (`rho * I` or all-`rho`).
    pub fn identity(kind: BlockKind, rho: f64) -> Self {
        match kind {
            BlockKind::Psd(n) => {
                let mut m = RealMat::identity(n);
                m.scale(rho);
                BlockData::Sym(m)
            }
            BlockKind::NonNeg(m) => BlockData::Vec(vec![rho; m]),
        }
    }

    pub fn matches(&self, kind: BlockKind) -> bool {
        match (self, kind) {
            (BlockData::Sym(a), BlockKind::Psd(n)) => a.rows() == n && a.cols() == n,
            (BlockData::Vec(v), BlockKind::NonNeg(m)) => v.len() == m,
            _ => false,
        }
    }

    /// Cone inner product `<self, other>`.
    pub fn inner(&self, other: &BlockData) -> f64 {
        match (self, other) {
            (BlockData::Sym(a), BlockData::Sym(b)) => a.dot(b),
            (BlockData::Vec(a), BlockData::Vec(b)) => {
                a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
            }
            _ => panic!("block shape mismatch in inner product"),
        }
    }

    /// `self += t * other`.
    pub fn axpy(&mut self, t: f64, other: &BlockData) {
        match (self, other) {
            (BlockData::Sym(a), BlockData::Sym(b)) => a.add_scaled(b, t),
            (BlockData::Vec(a), BlockData::Vec(b)) => {
                for (x, y) in a.iter_mut().zip(b.iter()) {
                    *x += t * y;
                }
            }
            _ => panic!("block shape mismatch in axpy"),
        }
    }

    pub fn scale(&mut self, t: f64) {
        match self {
            BlockData::Sym(a) => a.scale(t),
            BlockData::Vec(v) => v.iter_mut().for_each(|x| *x *= t),
        }
    }

    pub fn norm_fro(&self) -> f64 {
        match self {
            BlockData::Sym(a) => a.norm_fro(),
            BlockData::Vec(v) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            BlockData::Sym(a) => a.max_abs(),
            BlockData::Vec(v) => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        }
    }

    pub fn as_sym(&self) -> &RealMat {
        match self {
            BlockData::Sym(a) => a,
            _ => panic!("expected a PSD block"),
        }
    }

    pub fn as_vec(&self) -> &[f64] {
        match self {
            BlockData::Vec(v) => v,
            _ => panic!("expected a nonnegative scalar block"),
        }
    }

    /// Smallest eigenvalue (PSD block) or smallest entry (scalar block);
    /// nonnegative values mean cone membership.
    pub fn min_eig(&self) -> f64 {
        match self {
            BlockData::Sym(a) => {
                if a.rows() == 0 {
                    0.0
                } else {
                    crate::realsym::min_eig(a)
                }
            }
            BlockData::Vec(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Flattens into `out` starting at `offset` (full matrix for Sym).
    pub(crate) fn flatten_into(&self, out: &mut [f64], offset: usize) {
        match self {
            BlockData::Sym(a) => {
                let n = a.rows();
                for i in 0..n {
                    for j in 0..n {
                        out[offset + i * n + j] = a[(i, j)];
                    }
                }
            }
            BlockData::Vec(v) => out[offset..offset + v.len()].copy_from_slice(v),
        }
    }
}

/// Flat length used when rows are flattened for rank analysis.
pub(crate) fn flat_len(kind: BlockKind) -> usize {
    match kind {
        BlockKind::Psd(n) => n * n,
        BlockKind::NonNeg(m) => m,
    }
}

/// One equality row: sparse block coefficients plus the right-hand side.
#[derive(Debug, Clone)]
pub struct Row {
    /// `(block index, coefficient)` pairs, sorted by block index.
    pub terms: Vec<(usize, BlockData)>,
    pub rhs: f64,
}

/// A block-structured conic program in standard equality form.
#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    blocks: Vec<BlockKind>,
    objective: Vec<BlockData>,
    rows: Vec<Row>,
}

impl ConicProgram {
    pub fn new() -> Self {
        ConicProgram::default()
    }

    pub fn add_psd_block(&mut self, n: usize) -> usize {
        assert!(n > 0, "PSD block must be nonempty");
        self.blocks.push(BlockKind::Psd(n));
        self.objective.push(BlockData::zeros(BlockKind::Psd(n)));
        self.blocks.len() - 1
    }

    pub fn add_nonneg_block(&mut self, m: usize) -> usize {
        assert!(m > 0, "nonnegative block must be nonempty");
        self.blocks.push(BlockKind::NonNeg(m));
        self.objective.push(BlockData::zeros(BlockKind::NonNeg(m)));
        self.blocks.len() - 1
    }

    /// Sets the objective coefficient of one block (minimization).
    pub fn set_objective(&mut self, block: usize, c: BlockData) {
        let c = self.canonical(block, c);
        self.objective[block] = c;
    }

    /// Appends an equality row `sum <coeff, X_block> = rhs`; returns its index.
    pub fn add_row(&mut self, terms: Vec<(usize, BlockData)>, rhs: f64) -> usize {
        let mut terms: Vec<(usize, BlockData)> = terms
            .into_iter()
            .map(|(b, c)| {
                let c = self.canonical(b, c);
                (b, c)
            })
            .collect();
        terms.sort_by_key(|(b, _)| *b);
        for pair in terms.windows(2) {
            assert_ne!(pair[0].0, pair[1].0, "duplicate block in constraint row");
        }
        assert!(rhs.is_finite(), "non-finite right-hand side");
        self.rows.push(Row { terms, rhs });
        self.rows.len() - 1
    }

    /// Validates shape and symmetrizes matrix coefficients exactly.
    fn canonical(&self, block: usize, c: BlockData) -> BlockData {
        let kind = self.blocks[block];
        assert!(
            c.matches(kind),
            "coefficient shape does not match block {block} ({kind:?})"
        );
        match c {
            BlockData::Sym(mut a) => {
                #[cfg(any(debug_assertions, test))]
                {
                    let tol = 1e-12 * (1.0 + a.max_abs());
                    for i in 0..a.rows() {
                        for j in 0..i {
                            debug_assert!(
                                (a[(i, j)] - a[(j, i)]).abs() <= tol,
                                "asymmetric coefficient for PSD block {block}"
                            );
                        }
                    }
                }
                a.symmetrize();
                BlockData::Sym(a)
            }
            v => v,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn block(&self, j: usize) -> BlockKind {
        self.blocks[j]
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    pub fn objective(&self) -> &[BlockData] {
        &self.objective
    }

    pub fn row(&self, i: usize) -> &Row {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn rhs(&self, i: usize) -> f64 {
        self.rows[i].rhs
    }

    pub fn rhs_vec(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rhs).collect()
    }

    /// Total barrier dimension (sum of cone ranks).
    pub fn barrier_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.barrier_dim()).sum()
    }

    /// `<C, X>` for a candidate point.
    pub fn objective_value(&self, x: &[BlockData]) -> f64 {
        self.objective
            .iter()
            .zip(x.iter())
            .map(|(c, xb)| c.inner(xb))
            .sum()
    }

    /// `<A_i, X>` for one row.
    pub fn row_value(&self, i: usize, x: &[BlockData]) -> f64 {
        self.rows[i]
            .terms
            .iter()
            .map(|(b, a)| a.inner(&x[*b]))
            .sum()
    }

    /// Largest coefficient Frobenius norm over all rows (scale reference).
    pub fn max_row_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                r.terms
                    .iter()
                    .map(|(_, a)| a.norm_fro().powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Plain-text dump, one line per nonzero coefficient, for cross-checking
    /// against external solvers. Lines:
    ///
    /// ```text
    /// blocks <count>
    /// block <j> psd <n> | nonneg <m>
    /// rhs <i> <value>
    /// obj <block> <row> <col> <value>
    /// con <i> <block> <row> <col> <value>
    /// ```
    ///
    /// Matrix entries are emitted for the upper triangle (`row <= col`) only;
    /// scalar-block entries use `row = col = entry index`. All indices 0-based.
    pub fn dump(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "blocks {}", self.blocks.len());
        for (j, b) in self.blocks.iter().enumerate() {
            match b {
                BlockKind::Psd(n) => {
                    let _ = writeln!(out, "block {j} psd {n}");
                }
                BlockKind::NonNeg(m) => {
                    let _ = writeln!(out, "block {j} nonneg {m}");
                }
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(out, "rhs {i} {:.17e}", r.rhs);
        }
        let emit = |prefix: &str, block: usize, data: &BlockData, out: &mut String| {
            match data {
                BlockData::Sym(a) => {
                    for r in 0..a.rows() {
                        for c in r..a.cols() {
                            if a[(r, c)] != 0.0 {
                                let _ =
                                    writeln!(out, "{prefix} {block} {r} {c} {:.17e}", a[(r, c)]);
                            }
                        }
                    }
                }
                BlockData::Vec(v) => {
                    for (e, x) in v.iter().enumerate() {
                        if *x != 0.0 {
                            let _ = writeln!(out, "{prefix} {block} {e} {e} {x:.17e}");
                        }
                    }
                }
            }
        };
        for (j, c) in self.objective.iter().enumerate() {
            emit("obj", j, c, &mut out);
        }
        for (i, r) in self.rows.iter().enumerate() {
            let prefix = format!("con {i}");
            for (b, a) in &r.terms {
                emit(&prefix, *b, a, &mut out);
            }
        }
        out
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Primal-dual optimal to the requested tolerances.
    Optimal,
    /// Certified primal infeasibility: `y` holds a Farkas vector with
    /// `b^T y = 1` and `-sum y_i A_i` PSD to tolerance (stored in
    /// `dual_slack`).
    PrimalInfeasible,
    /// Certified dual infeasibility (primal unboundedness): `primal` holds an
    /// improving ray with `<C, ray> = -1` and `A(ray) ~ 0`.
    DualInfeasible,
    /// Iteration cap reached; best iterate attached.
    MaxIterations,
    /// Linear algebra broke down; best iterate attached.
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::PrimalInfeasible => "primal_infeasible",
            SolveStatus::DualInfeasible => "dual_infeasible",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

/// One interior-point iteration, for diagnostics.
#[derive(Debug, Clone)]
pub struct IterRecord {
    pub iter: usize,
    pub mu: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub step_primal: f64,
    pub step_dual: f64,
    pub sigma: f64,
}

/// Primal-dual answer for a [`ConicProgram`].
#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Primal blocks `X_j` (or the improving ray on `DualInfeasible`).
    pub primal: Vec<BlockData>,
    /// Row multipliers `y` (or the Farkas vector on `PrimalInfeasible`).
    pub dual_y: Vec<f64>,
    /// Dual slack blocks `S_j = C_j - sum_i y_i A_{i,j}`.
    pub dual_slack: Vec<BlockData>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `|primal_obj - dual_obj| / (1 + |primal_obj| + |dual_obj|)`.
    pub rel_gap: f64,
    /// Relative primal equality residual.
    pub primal_residual: f64,
    /// Relative dual equality residual.
    pub dual_residual: f64,
    pub iterations: usize,
    /// Certificate quality on infeasible statuses: the most negative cone
    /// eigenvalue of the certificate slack (0 when clean).
    pub certificate_violation: f64,
    pub trace: Vec<IterRecord>,
    /// Human-readable detail for non-Optimal statuses.
    pub note: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_tracks_shapes() {
        let mut p = ConicProgram::new();
        let b0 = p.add_psd_block(2);
        let b1 = p.add_nonneg_block(3);
        assert_eq!(p.block(b0), BlockKind::Psd(2));
        assert_eq!(p.block(b1), BlockKind::NonNeg(3));
        assert_eq!(p.barrier_dim(), 5);
        let mut c = RealMat::zeros(2, 2);
        c[(0, 0)] = 1.0;
        c[(1, 1)] = 1.0;
        p.set_objective(b0, BlockData::Sym(c.clone()));
        let r = p.add_row(vec![(b0, BlockData::Sym(c))], 1.0);
        assert_eq!(r, 0);
        assert_eq!(p.num_rows(), 1);
    }

    #[test]
    #[should_panic(expected = "shape")]
    fn rejects_mismatched_coefficient() {
        let mut p = ConicProgram::new();
        let b0 = p.add_psd_block(2);
        p.set_objective(b0, BlockData::Vec(vec![1.0]));
    }

    #[test]
    fn dump_round_trips_values() {
        let mut p = ConicProgram::new();
        let b0 = p.add_psd_block(2);
        let s = p.add_nonneg_block(1);
        let mut c = RealMat::zeros(2, 2);
        c[(0, 1)] = 0.5;
        c[(1, 0)] = 0.5;
        p.set_objective(b0, BlockData::Sym(c.clone()));
        p.add_row(
            vec![(b0, BlockData::Sym(c)), (s, BlockData::Vec(vec![-1.0]))],
            2.0,
        );
        let text = p.dump();
        assert!(text.contains("block 0 psd 2"));
        assert!(text.contains("block 1 nonneg 1"));
        assert!(text.contains("rhs 0 2"));
        // only the upper triangle of the symmetric coefficient appears
        assert_eq!(text.matches("obj 0").count(), 1);
        assert!(text.contains("con 0 1 0 0 -1"));
    }

    #[test]
    fn identity_and_inner() {
        let k = BlockKind::Psd(3);
        let x = BlockData::identity(k, 2.0);
        let c = BlockData::identity(k, 1.0);
        assert_eq!(c.inner(&x), 6.0);
        let k2 = BlockKind::NonNeg(2);
        let v = BlockData::identity(k2, 3.0);
        assert_eq!(v.min_eig(), 3.0);
    }
}
