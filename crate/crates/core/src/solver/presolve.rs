//! Equality-row presolve: drops linearly dependent rows by rank-revealing
//! elimination so the interior-point Schur complement stays nonsingular, and
//! records enough structure to lift reduced dual variables back to the
//! original row set and to certify inconsistency.

use super::program::{flat_len, BlockData, ConicProgram};

/// Pivot threshold: a row whose eliminated remainder falls below
/// `PIVOT_TOL * (1 + original row norm)` is treated as dependent.
pub const PIVOT_TOL: f64 = 1e-10;

/// Outcome of presolving a program.
pub enum PresolveOutcome {
    /// Reduced program with independent rows.
    Reduced(Presolved),
    /// The equality system is inconsistent; `farkas_y` (original row space)
    /// satisfies `sum_i y_i A_i = 0` (to elimination tolerance) with
    /// `b^T y = 1`.
    Infeasible { farkas_y: Vec<f64> },
}

/// A reduced program plus the row bookkeeping needed to undo the reduction.
pub struct Presolved {
    pub program: ConicProgram,
    /// Reduced row index -> original row index.
    pub kept_rows: Vec<usize>,
    /// Number of rows in the original program.
    pub original_rows: usize,
}

impl Presolved {
    /// Lifts a dual vector of the reduced program to the original rows.
    /// Dropped rows are exact combinations of kept rows (matching right-hand
    /// sides), so zero multipliers on them preserve dual feasibility and the
    /// dual objective.
    pub fn lift_dual(&self, reduced_y: &[f64]) -> Vec<f64> {
        assert_eq!(reduced_y.len(), self.kept_rows.len());
        let mut y = vec![0.0; self.original_rows];
        for (r, &orig) in self.kept_rows.iter().enumerate() {
            y[orig] = reduced_y[r];
        }
        y
    }
}

/// Flattens one row's coefficients into a dense vector over all blocks.
fn flatten_row(prog: &ConicProgram, row: usize, offsets: &[usize], dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for (b, coeff) in &prog.row(row).terms {
        coeff.flatten_into(&mut v, offsets[*b]);
    }
    v
}

/// Removes dependent equality rows. Rows are processed in order and the first
/// occurrence of each independent direction is kept, so the reduction is
/// deterministic.
pub fn presolve(prog: &ConicProgram) -> PresolveOutcome {
    let mut offsets = Vec::with_capacity(prog.num_blocks());
    let mut dim = 0usize;
    for j in 0..prog.num_blocks() {
        offsets.push(dim);
        dim += flat_len(prog.block(j));
    }
    let m = prog.num_rows();
    let b_scale = (0..m).map(|i| prog.rhs(i).abs()).fold(0.0, f64::max);

    // Pivot rows in eliminated (mutually orthogonalized) form, their original
    // indices, and their right-hand sides after the same elimination.
    let mut pivots: Vec<Vec<f64>> = Vec::new();
    let mut pivot_orig: Vec<usize> = Vec::new();
    let mut pivot_rhs: Vec<f64> = Vec::new();
    // Combination of original kept rows making up each pivot row:
    // pivot_p = sum_q basis_combo[p][q] * original_row(pivot_orig[q]).
    let mut basis_combo: Vec<Vec<f64>> = Vec::new();

    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    for i in 0..m {
        let mut v = flatten_row(prog, i, &offsets, dim);
        let mut rhs = prog.rhs(i);
        let orig_norm = norm(&v);
        // combination coefficients of this row against the kept originals
        let mut combo = vec![0.0; pivots.len()];
        // two elimination passes (classical "twice is enough") for stability
        for _ in 0..2 {
            for (p, pv) in pivots.iter().enumerate() {
                let c = dot(&v, pv) / dot(pv, pv);
                if c == 0.0 {
                    continue;
                }
                for (x, y) in v.iter_mut().zip(pv.iter()) {
                    *x -= c * y;
                }
                rhs -= c * pivot_rhs[p];
                for (q, w) in basis_combo[p].iter().enumerate() {
                    combo[q] += c * w;
                }
            }
        }
        let residual = norm(&v);
        if residual > PIVOT_TOL * (1.0 + orig_norm) {
            // independent: keep as a new pivot
            let mut own = combo.clone();
            own.iter_mut().for_each(|c| *c = -*c);
            own.push(1.0); // itself
            // pivot_p = row_i - sum combo_q * kept_q, so the combination in
            // terms of originals is (-combo, 1)
            pivots.push(v);
            pivot_rhs.push(rhs);
            pivot_orig.push(i);
            basis_combo.push(own);
        } else {
            // dependent: the eliminated coefficients vanished; the rhs must too
            let combo_scale: f64 = combo.iter().map(|c| c.abs()).sum::<f64>();
            let tol = PIVOT_TOL * (1.0 + b_scale) * (1.0 + combo_scale);
            if rhs.abs() > tol {
                // The coefficients of row_i equal sum_q combo_q * kept_q but
                // the right-hand sides differ, so y = e_i - sum_q combo_q
                // e_kept_q annihilates the coefficient combination while
                // b^T y = rhs != 0; normalize to b^T y = 1.
                let mut y = vec![0.0; m];
                y[i] = 1.0;
                for (q, &c) in combo.iter().enumerate() {
                    y[pivot_orig[q]] -= c;
                }
                let bty: f64 = (0..m).map(|r| y[r] * prog.rhs(r)).sum();
                y.iter_mut().for_each(|v| *v /= bty);
                return PresolveOutcome::Infeasible { farkas_y: y };
            }
            // consistent duplicate: drop silently
        }
    }

    let mut reduced = ConicProgram::new();
    for j in 0..prog.num_blocks() {
        match prog.block(j) {
            super::program::BlockKind::Psd(n) => {
                reduced.add_psd_block(n);
            }
            super::program::BlockKind::NonNeg(mm) => {
                reduced.add_nonneg_block(mm);
            }
        }
        reduced.set_objective(j, prog.objective()[j].clone());
    }
    for &orig in &pivot_orig {
        let row = prog.row(orig);
        reduced.add_row(row.terms.clone(), row.rhs);
    }
    PresolveOutcome::Reduced(Presolved {
        program: reduced,
        kept_rows: pivot_orig,
        original_rows: m,
    })
}

/// Verifies a Farkas vector: returns `(coefficient_norm, b_dot_y)` where the
/// first entry is the Frobenius norm of `sum_i y_i A_i` (should be ~0) and the
/// second is `b^T y` (should be 1 after normalization).
pub fn farkas_quality(prog: &ConicProgram, y: &[f64]) -> (f64, f64) {
    let mut acc: Vec<BlockData> = (0..prog.num_blocks())
        .map(|j| BlockData::zeros(prog.block(j)))
        .collect();
    for (i, &yi) in y.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        for (b, a) in &prog.row(i).terms {
            acc[*b].axpy(yi, a);
        }
    }
    let coeff_norm = acc
        .iter()
        .map(|a| a.norm_fro().powi(2))
        .sum::<f64>()
        .sqrt();
    let bty = y
        .iter()
        .enumerate()
        .map(|(i, &yi)| yi * prog.rhs(i))
        .sum::<f64>();
    (coeff_norm, bty)
}
