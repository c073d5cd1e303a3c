//! Primal-dual path-following interior-point method with Mehrotra
//! predictor-corrector steps and the HKM scaling direction.
//!
//! The iteration solves, for the current `(X, y, S)`,
//!
//! ```text
//!   <A_i, dX>            = r_p[i]
//!   -sum_i dy_i A_i - dS = -R_d
//!   X dS + dX S          = K          (K = -XS, then the corrector target)
//! ```
//!
//! Eliminating `dX = (K - X dS) S^{-1}` and `dS = R_d - sum dy_i A_i` yields
//! the Schur system `M dy = rhs` with `M[i,k] = sum_b tr(A_i X A_k S^{-1})`
//! (symmetric positive definite for independent rows) and
//! `rhs[i] = r_p[i] - <A_i, (K - X R_d) S^{-1}>`. The computed `dX` is
//! symmetrized, which leaves all inner products against symmetric `A_i`
//! unchanged. Starting point is the infeasible `X = S = rho I`, `y = 0`.

use crate::realsym::{min_eig, Cholesky, RealMat};

use super::program::{BlockData, ConicProgram, ConicSolution, IterRecord, SolveStatus};

/// Tolerances and caps for a solve.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative duality-gap target.
    pub gap_tol: f64,
    /// Relative primal/dual residual target.
    pub feas_tol: f64,
    /// Iteration cap.
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    /// Targets near the accuracy floor of a double-precision interior-point
    /// endgame on degenerate optima; pushing below ~1e-8 makes the final
    /// search directions unreliable once the active covariances drop rank.
    /// Callers needing more precision refine the returned point outside the
    /// solver (see the first-order polish in the duality checks).
    fn default() -> Self {
        SolveOptions {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iterations: 200,
        }
    }
}

/// Fraction-to-boundary damping on accepted steps.
const STEP_FRACTION: f64 = 0.98;
/// Dual objective must exceed this multiple of the data scale before an
/// accumulated iterate is tested as a primal-infeasibility ray, so that the
/// bounded `C` contribution inside the candidate ray has already washed out.
const PRIMAL_INFEAS_GATE: f64 = 1e8;
/// Same idea for the primal objective and dual-infeasibility rays.
const DUAL_INFEAS_GATE: f64 = 1e8;

/// Cholesky-style factorization of one cone block.
enum BlockFactor {
    Sym(Cholesky),
    /// The (all-positive) entries themselves.
    Diag(Vec<f64>),
}

fn factor_block(v: &BlockData) -> Option<BlockFactor> {
    match v {
        BlockData::Sym(a) => Cholesky::new(a).map(BlockFactor::Sym),
        BlockData::Vec(d) => {
            if d.iter().all(|&x| x > 0.0 && x.is_finite()) {
                Some(BlockFactor::Diag(d.clone()))
            } else {
                None
            }
        }
    }
}

/// Largest `a >= 0` with `v + a d` still in the cone (`f64::INFINITY` when
/// unbounded), given the factorization of the interior point `v`.
fn max_step(v: &BlockData, d: &BlockData, fac: &BlockFactor) -> f64 {
    match (v, d, fac) {
        (BlockData::Sym(_), BlockData::Sym(dm), BlockFactor::Sym(ch)) => {
            let w = ch.congruence_inv(dm);
            let lam = min_eig(&w);
            if lam >= -1e-14 {
                f64::INFINITY
            } else {
                -1.0 / lam
            }
        }
        (BlockData::Vec(x), BlockData::Vec(dx), _) => {
            let mut a = f64::INFINITY;
            for (xi, di) in x.iter().zip(dx.iter()) {
                if *di < 0.0 {
                    a = a.min(-xi / di);
                }
            }
            a
        }
        _ => unreachable!("mismatched block shapes"),
    }
}

/// `(K - X T) S^{-1}` for one block, where `T` is symmetric block data and
/// `K` is a general square matrix (or entrywise data for scalar blocks).
fn scaled_residual(
    k: &GenBlock,
    x: &BlockData,
    t: &BlockData,
    fac: &BlockFactor,
) -> GenBlock {
    match (k, x, t, fac) {
        (GenBlock::Mat(km), BlockData::Sym(xm), BlockData::Sym(tm), BlockFactor::Sym(ch)) => {
            let mut num = xm.matmul(tm);
            num.scale(-1.0);
            num.add_scaled(km, 1.0);
            // G = num * S^{-1}  =>  G^T = S^{-1} num^T
            GenBlock::Mat(ch.solve_mat(&num.transpose()).transpose())
        }
        (GenBlock::Vec(kv), BlockData::Vec(xv), BlockData::Vec(tv), BlockFactor::Diag(sv)) => {
            GenBlock::Vec(
                kv.iter()
                    .zip(xv)
                    .zip(tv)
                    .zip(sv)
                    .map(|(((k, x), t), s)| (k - x * t) / s)
                    .collect(),
            )
        }
        _ => unreachable!("mismatched block shapes"),
    }
}

/// General (not necessarily symmetric) per-block work matrix.
enum GenBlock {
    Mat(RealMat),
    Vec(Vec<f64>),
}

impl GenBlock {
    /// `<A, G>` = tr(A G) for symmetric A.
    fn inner_sym(&self, a: &BlockData) -> f64 {
        match (a, self) {
            (BlockData::Sym(am), GenBlock::Mat(g)) => am.tr_product(g),
            (BlockData::Vec(av), GenBlock::Vec(g)) => {
                av.iter().zip(g).map(|(x, y)| x * y).sum()
            }
            _ => unreachable!("mismatched block shapes"),
        }
    }

    /// Symmetric part, converted back to block data.
    fn into_symmetrized(self) -> BlockData {
        match self {
            GenBlock::Mat(mut m) => {
                m.symmetrize();
                BlockData::Sym(m)
            }
            GenBlock::Vec(v) => BlockData::Vec(v),
        }
    }
}

/// `-X S` (predictor target) per block.
fn neg_xs(x: &BlockData, s: &BlockData) -> GenBlock {
    match (x, s) {
        (BlockData::Sym(xm), BlockData::Sym(sm)) => {
            let mut p = xm.matmul(sm);
            p.scale(-1.0);
            GenBlock::Mat(p)
        }
        (BlockData::Vec(xv), BlockData::Vec(sv)) => {
            GenBlock::Vec(xv.iter().zip(sv).map(|(a, b)| -a * b).collect())
        }
        _ => unreachable!("mismatched block shapes"),
    }
}

/// `sigma mu I - X S - dX dS` (corrector target) per block.
fn corrector_target(
    x: &BlockData,
    s: &BlockData,
    dx: &BlockData,
    ds: &BlockData,
    sigma_mu: f64,
) -> GenBlock {
    match (x, s, dx, ds) {
        (BlockData::Sym(xm), BlockData::Sym(sm), BlockData::Sym(dxm), BlockData::Sym(dsm)) => {
            let mut k = xm.matmul(sm);
            k.add_scaled(&dxm.matmul(dsm), 1.0);
            k.scale(-1.0);
            for i in 0..k.rows() {
                k[(i, i)] += sigma_mu;
            }
            GenBlock::Mat(k)
        }
        (BlockData::Vec(xv), BlockData::Vec(sv), BlockData::Vec(dxv), BlockData::Vec(dsv)) => {
            GenBlock::Vec(
                (0..xv.len())
                    .map(|j| sigma_mu - xv[j] * sv[j] - dxv[j] * dsv[j])
                    .collect(),
            )
        }
        _ => unreachable!("mismatched block shapes"),
    }
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Workspace<'a> {
    prog: &'a ConicProgram,
    /// Per block: rows touching it, as `(row index, coefficient)`.
    touching: Vec<Vec<(usize, &'a BlockData)>>,
    b: Vec<f64>,
    b_scale: f64,
    c_scale: f64,
    max_coeff_norm: f64,
}

impl<'a> Workspace<'a> {
    fn new(prog: &'a ConicProgram) -> Self {
        let mut touching: Vec<Vec<(usize, &BlockData)>> = vec![Vec::new(); prog.num_blocks()];
        let mut max_coeff_norm = 0.0f64;
        for (i, row) in prog.rows().iter().enumerate() {
            for (b, a) in &row.terms {
                touching[*b].push((i, a));
                max_coeff_norm = max_coeff_norm.max(a.norm_fro());
            }
        }
        let b = prog.rhs_vec();
        let b_scale = 1.0 + vec_norm(&b);
        let c_scale = 1.0
            + prog
                .objective()
                .iter()
                .map(|c| c.norm_fro().powi(2))
                .sum::<f64>()
                .sqrt();
        Workspace {
            prog,
            touching,
            b,
            b_scale,
            c_scale,
            max_coeff_norm,
        }
    }

    /// Dual slack residual blocks `R_d = C - sum_i y_i A_i - S`.
    fn dual_residual(&self, y: &[f64], s: &[BlockData]) -> Vec<BlockData> {
        let mut rd: Vec<BlockData> = self.prog.objective().to_vec();
        for (i, row) in self.prog.rows().iter().enumerate() {
            if y[i] == 0.0 {
                continue;
            }
            for (b, a) in &row.terms {
                rd[*b].axpy(-y[i], a);
            }
        }
        for (rb, sb) in rd.iter_mut().zip(s.iter()) {
            rb.axpy(-1.0, sb);
        }
        rd
    }

    /// `-sum_i y_i A_i` as blocks.
    fn neg_combination(&self, y: &[f64]) -> Vec<BlockData> {
        let mut acc: Vec<BlockData> = (0..self.prog.num_blocks())
            .map(|j| BlockData::zeros(self.prog.block(j)))
            .collect();
        for (i, row) in self.prog.rows().iter().enumerate() {
            if y[i] == 0.0 {
                continue;
            }
            for (b, a) in &row.terms {
                acc[*b].axpy(-y[i], a);
            }
        }
        acc
    }

    /// One Newton solve for a fixed complementarity target.
    #[allow(clippy::too_many_arguments)]
    fn newton(
        &self,
        k_target: &[GenBlock],
        rp: &[f64],
        rd: &[BlockData],
        x: &[BlockData],
        s_fac: &[BlockFactor],
        schur: &RealMat,
        schur_fac: &Cholesky,
    ) -> (Vec<BlockData>, Vec<f64>, Vec<BlockData>) {
        let m = self.prog.num_rows();
        let mut rhs = rp.to_vec();
        for (bidx, rows) in self.touching.iter().enumerate() {
            if rows.is_empty() {
                continue;
            }
            let h = scaled_residual(&k_target[bidx], &x[bidx], &rd[bidx], &s_fac[bidx]);
            for (i, a) in rows {
                rhs[*i] -= h.inner_sym(a);
            }
        }
        let dy = refined_solve(schur, schur_fac, &rhs);
        debug_assert_eq!(dy.len(), m);
        // dS = R_d - sum dy_i A_i
        let mut ds: Vec<BlockData> = rd.to_vec();
        for (i, row) in self.prog.rows().iter().enumerate() {
            if dy[i] == 0.0 {
                continue;
            }
            for (b, a) in &row.terms {
                ds[*b].axpy(-dy[i], a);
            }
        }
        // dX = (K - X dS) S^{-1}, symmetrized
        let mut dx = Vec::with_capacity(x.len());
        for bidx in 0..x.len() {
            let g = scaled_residual(&k_target[bidx], &x[bidx], &ds[bidx], &s_fac[bidx]);
            dx.push(g.into_symmetrized());
        }
        (dx, dy, ds)
    }
}

/// Solves `m * out = rhs` through the factorization, then polishes with
/// iterative refinement. Near convergence the Schur complement's condition
/// number grows like `1/mu`, and the raw triangular solves lose enough digits
/// to corrupt the search direction; one or two refinement passes restore it.
fn refined_solve(m: &RealMat, fac: &Cholesky, rhs: &[f64]) -> Vec<f64> {
    let mut out = rhs.to_vec();
    fac.solve_vec(&mut out);
    let rhs_norm = vec_norm(rhs);
    if rhs_norm == 0.0 {
        return out;
    }
    let mut res_norm = f64::INFINITY;
    for _ in 0..2 {
        let mut res = m.matvec(&out);
        for (r, b) in res.iter_mut().zip(rhs) {
            *r = b - *r;
        }
        let next_norm = vec_norm(&res);
        // Stop once the residual is at roundoff or refinement stalls.
        if next_norm <= 1e-15 * rhs_norm || next_norm >= 0.5 * res_norm {
            break;
        }
        res_norm = next_norm;
        fac.solve_vec(&mut res);
        for (o, c) in out.iter_mut().zip(&res) {
            *o += c;
        }
    }
    out
}

/// Factors the Schur complement, escalating a diagonal jitter when needed.
fn factor_schur(m: &RealMat) -> Option<Cholesky> {
    if let Some(c) = Cholesky::new(m) {
        return Some(c);
    }
    let dmax = (0..m.rows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    let mut delta = 1e-14 * (1.0 + dmax);
    for _ in 0..6 {
        let mut jittered = m.clone();
        for i in 0..jittered.rows() {
            jittered[(i, i)] += delta;
        }
        if let Some(c) = Cholesky::new(&jittered) {
            return Some(c);
        }
        delta *= 100.0;
    }
    None
}

/// Runs the interior-point iteration on a presolved program (rows must be
/// linearly independent).
pub fn run(prog: &ConicProgram, opts: &SolveOptions) -> ConicSolution {
    let ws = Workspace::new(prog);
    let m = prog.num_rows();
    let nu = prog.barrier_dim().max(1) as f64;

    let b_inf = ws.b.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let rho = 1.0 + b_inf.max(ws.c_scale - 1.0);
    let mut x: Vec<BlockData> = (0..prog.num_blocks())
        .map(|j| BlockData::identity(prog.block(j), rho))
        .collect();
    let mut s = x.clone();
    let mut y = vec![0.0; m];

    let mut trace: Vec<IterRecord> = Vec::new();
    let finish = |status: SolveStatus,
                  x: Vec<BlockData>,
                  y: Vec<f64>,
                  s: Vec<BlockData>,
                  iterations: usize,
                  trace: Vec<IterRecord>,
                  certificate_violation: f64,
                  note: Option<String>| {
        let primal_obj = prog.objective_value(&x);
        let dual_obj: f64 = y.iter().zip(ws.b.iter()).map(|(a, b)| a * b).sum();
        let rp: Vec<f64> = (0..m)
            .map(|i| prog.rhs(i) - prog.row_value(i, &x))
            .collect();
        let rd = ws.dual_residual(&y, &s);
        ConicSolution {
            status,
            primal: x,
            dual_y: y,
            dual_slack: s,
            primal_obj,
            dual_obj,
            rel_gap: (primal_obj - dual_obj).abs()
                / (1.0 + primal_obj.abs() + dual_obj.abs()),
            primal_residual: vec_norm(&rp) / ws.b_scale,
            dual_residual: rd
                .iter()
                .map(|r| r.norm_fro().powi(2))
                .sum::<f64>()
                .sqrt()
                / ws.c_scale,
            iterations,
            certificate_violation,
            trace,
            note,
        }
    };

    for iter in 0..=opts.max_iterations {
        // residuals and objective values at the current iterate
        let p_obj = prog.objective_value(&x);
        let d_obj: f64 = y.iter().zip(ws.b.iter()).map(|(a, b)| a * b).sum();
        let rp: Vec<f64> = (0..m)
            .map(|i| prog.rhs(i) - prog.row_value(i, &x))
            .collect();
        let rd = ws.dual_residual(&y, &s);
        let rp_rel = vec_norm(&rp) / ws.b_scale;
        let rd_rel = rd
            .iter()
            .map(|r| r.norm_fro().powi(2))
            .sum::<f64>()
            .sqrt()
            / ws.c_scale;
        let gap: f64 = x.iter().zip(s.iter()).map(|(a, b)| a.inner(b)).sum();
        let mu = gap / nu;
        let obj_scale = 1.0 + p_obj.abs() + d_obj.abs();
        let rel_gap = (p_obj - d_obj).abs() / obj_scale;

        if !mu.is_finite() || !rp_rel.is_finite() || !rd_rel.is_finite() {
            return finish(
                SolveStatus::NumericalFailure,
                x,
                y,
                s,
                iter,
                trace,
                0.0,
                Some("non-finite iterate".into()),
            );
        }

        if rp_rel <= opts.feas_tol
            && rd_rel <= opts.feas_tol
            && (rel_gap <= opts.gap_tol || gap / obj_scale <= opts.gap_tol)
        {
            return finish(SolveStatus::Optimal, x, y, s, iter, trace, 0.0, None);
        }

        // Primal infeasibility: once the dual objective has diverged past the
        // data scale, test y / (b^T y) as a Farkas ray.
        if d_obj > PRIMAL_INFEAS_GATE * (1.0 + ws.c_scale) {
            let yhat: Vec<f64> = y.iter().map(|v| v / d_obj).collect();
            let ray = ws.neg_combination(&yhat);
            let ray_norm = ray
                .iter()
                .map(|r| r.norm_fro().powi(2))
                .sum::<f64>()
                .sqrt();
            let viol = ray
                .iter()
                .map(|r| r.min_eig())
                .fold(f64::INFINITY, f64::min)
                .min(0.0);
            if viol >= -1e-9 * ray_norm.max(1.0) {
                return finish(
                    SolveStatus::PrimalInfeasible,
                    x,
                    yhat,
                    ray,
                    iter,
                    trace,
                    viol,
                    Some("dual objective diverges along a Farkas ray".into()),
                );
            }
        }

        // Dual infeasibility: the primal objective diverges to -infinity
        // along a cone ray that is asymptotically in the constraint nullspace.
        if p_obj < -DUAL_INFEAS_GATE * (1.0 + ws.b_scale) {
            let scale = p_obj.abs();
            let mut ray = x.clone();
            for r in ray.iter_mut() {
                r.scale(1.0 / scale);
            }
            let a_err = (0..m)
                .map(|i| prog.row_value(i, &ray).abs())
                .fold(0.0, f64::max);
            if a_err <= 1e-8 * (1.0 + ws.max_coeff_norm) {
                return finish(
                    SolveStatus::DualInfeasible,
                    ray,
                    y,
                    s,
                    iter,
                    trace,
                    a_err,
                    Some("primal objective diverges along a feasible ray".into()),
                );
            }
        }

        if iter == opts.max_iterations {
            return finish(
                SolveStatus::MaxIterations,
                x,
                y,
                s,
                iter,
                trace,
                0.0,
                Some(format!("iteration cap {} reached", opts.max_iterations)),
            );
        }

        // factorizations of the current interior point
        let s_fac = match s.iter().map(factor_block).collect::<Option<Vec<_>>>() {
            Some(f) => f,
            None => {
                return finish(
                    SolveStatus::NumericalFailure,
                    x,
                    y,
                    s,
                    iter,
                    trace,
                    0.0,
                    Some("dual slack lost definiteness".into()),
                )
            }
        };
        let x_fac = match x.iter().map(factor_block).collect::<Option<Vec<_>>>() {
            Some(f) => f,
            None => {
                return finish(
                    SolveStatus::NumericalFailure,
                    x,
                    y,
                    s,
                    iter,
                    trace,
                    0.0,
                    Some("primal iterate lost definiteness".into()),
                )
            }
        };

        // Schur complement M[i,k] = sum_b tr(A_i X A_k S^{-1})
        let mut schur = RealMat::zeros(m, m);
        for (bidx, rows) in ws.touching.iter().enumerate() {
            if rows.is_empty() {
                continue;
            }
            match (&x[bidx], &s_fac[bidx]) {
                (BlockData::Sym(xm), BlockFactor::Sym(ch)) => {
                    for (kk, (krow, ka)) in rows.iter().enumerate() {
                        let xa = xm.matmul(ka.as_sym());
                        let g = ch.solve_mat(&xa.transpose()).transpose();
                        for (irow, ia) in rows.iter().take(kk + 1) {
                            let v = ia.as_sym().tr_product(&g);
                            schur[(*irow, *krow)] += v;
                            if irow != krow {
                                schur[(*krow, *irow)] += v;
                            }
                        }
                    }
                }
                (BlockData::Vec(xv), BlockFactor::Diag(sv)) => {
                    for (kk, (krow, ka)) in rows.iter().enumerate() {
                        let g: Vec<f64> = ka
                            .as_vec()
                            .iter()
                            .zip(xv.iter())
                            .zip(sv.iter())
                            .map(|((a, xj), sj)| a * xj / sj)
                            .collect();
                        for (irow, ia) in rows.iter().take(kk + 1) {
                            let v: f64 =
                                ia.as_vec().iter().zip(g.iter()).map(|(a, b)| a * b).sum();
                            schur[(*irow, *krow)] += v;
                            if irow != krow {
                                schur[(*krow, *irow)] += v;
                            }
                        }
                    }
                }
                _ => unreachable!("mismatched block shapes"),
            }
        }
        let schur_fac = match factor_schur(&schur) {
            Some(f) => f,
            None => {
                return finish(
                    SolveStatus::NumericalFailure,
                    x,
                    y,
                    s,
                    iter,
                    trace,
                    0.0,
                    Some("Schur complement factorization failed".into()),
                )
            }
        };

        // predictor (affine scaling) step
        let k_pred: Vec<GenBlock> = x.iter().zip(s.iter()).map(|(a, b)| neg_xs(a, b)).collect();
        let (dx_a, _dy_a, ds_a) = ws.newton(&k_pred, &rp, &rd, &x, &s_fac, &schur, &schur_fac);
        let ap_aff = x
            .iter()
            .zip(dx_a.iter())
            .zip(x_fac.iter())
            .map(|((v, d), f)| max_step(v, d, f))
            .fold(f64::INFINITY, f64::min)
            .min(1e12);
        let ad_aff = s
            .iter()
            .zip(ds_a.iter())
            .zip(s_fac.iter())
            .map(|((v, d), f)| max_step(v, d, f))
            .fold(f64::INFINITY, f64::min)
            .min(1e12);
        let gap_aff = gap
            + ap_aff
                * dx_a
                    .iter()
                    .zip(s.iter())
                    .map(|(a, b)| a.inner(b))
                    .sum::<f64>()
            + ad_aff
                * x.iter()
                    .zip(ds_a.iter())
                    .map(|(a, b)| a.inner(b))
                    .sum::<f64>()
            + ap_aff
                * ad_aff
                * dx_a
                    .iter()
                    .zip(ds_a.iter())
                    .map(|(a, b)| a.inner(b))
                    .sum::<f64>();
        let mu_aff = gap_aff.max(0.0) / nu;
        let sigma = (mu_aff / mu).powi(3).clamp(1e-10, 1.0);

        // corrector step reusing the Schur factorization
        let k_corr: Vec<GenBlock> = (0..x.len())
            .map(|bidx| {
                corrector_target(&x[bidx], &s[bidx], &dx_a[bidx], &ds_a[bidx], sigma * mu)
            })
            .collect();
        let (dx, dy, ds) = ws.newton(&k_corr, &rp, &rd, &x, &s_fac, &schur, &schur_fac);
        let ap = (STEP_FRACTION
            * x.iter()
                .zip(dx.iter())
                .zip(x_fac.iter())
                .map(|((v, d), f)| max_step(v, d, f))
                .fold(f64::INFINITY, f64::min))
        .min(1.0);
        let ad = (STEP_FRACTION
            * s.iter()
                .zip(ds.iter())
                .zip(s_fac.iter())
                .map(|((v, d), f)| max_step(v, d, f))
                .fold(f64::INFINITY, f64::min))
        .min(1.0);

        for (xb, dxb) in x.iter_mut().zip(dx.iter()) {
            xb.axpy(ap, dxb);
        }
        for (yi, dyi) in y.iter_mut().zip(dy.iter()) {
            *yi += ad * dyi;
        }
        for (sb, dsb) in s.iter_mut().zip(ds.iter()) {
            sb.axpy(ad, dsb);
        }

        trace.push(IterRecord {
            iter,
            mu,
            primal_obj: p_obj,
            dual_obj: d_obj,
            primal_residual: rp_rel,
            dual_residual: rd_rel,
            step_primal: ap,
            step_dual: ad,
            sigma,
        });
    }
    unreachable!("loop exits via status returns");
}
