//! Builders that lower each optimization problem to a conic program, plus
//! typed recovery of solutions and certificates from solver output.

use crate::complex::{herm_basis, CMat, HermMatrix};
use crate::instance::ProblemInstance;
use crate::solver::{ConicProgram, ConicSolution, SolveOptions};

use super::model::{ComplexSdp, HermVar, RowId, RowSense, ScalarVar};
use super::types::{DualCertificate, FormulationError, RobustDesign, CORNER_TOL};
use super::{homogenizer, sinr_margin_matrix};

/// Diagonal matrix that picks out the homogeneous-coordinate corner entry.
fn corner_selector(n: usize) -> HermMatrix {
    let mut d = vec![0.0; n];
    d[n - 1] = 1.0;
    HermMatrix::from_diag(&d)
}

/// The worst-case power minimization in semidefinite relaxation form:
/// minimize total transmit power subject to each user's robust SINR
/// constraint holding over its whole channel uncertainty ball.
///
/// Users with positive radius get a PSD certificate block tied to the design
/// by linear equalities (one per Hermitian basis element) together with a
/// nonnegative ball multiplier; users with an exact channel get the single
/// SINR inequality at their nominal channel instead.
#[derive(Debug, Clone)]
pub struct WspSdr {
    model: ComplexSdp,
    w_vars: Vec<HermVar>,
    cert_vars: Vec<Option<HermVar>>,
    multiplier_var: Option<ScalarVar>,
    multiplier_slot: Vec<Option<usize>>,
    point_rows: Vec<Option<RowId>>,
}

pub fn build_wsp_sdr(inst: &ProblemInstance) -> WspSdr {
    let nt = inst.num_antennas();
    let k = inst.num_users();
    let mut model = ComplexSdp::new();
    let w_vars: Vec<HermVar> = (0..k).map(|_| model.add_herm_var(nt)).collect();

    let robust: Vec<usize> = (0..k).filter(|&i| inst.radius(i) > 0.0).collect();
    let mut multiplier_slot: Vec<Option<usize>> = vec![None; k];
    for (slot, &i) in robust.iter().enumerate() {
        multiplier_slot[i] = Some(slot);
    }
    let multiplier_var = if robust.is_empty() {
        None
    } else {
        Some(model.add_scalar_vars(robust.len()))
    };
    let mut cert_vars: Vec<Option<HermVar>> = vec![None; k];
    for &i in &robust {
        cert_vars[i] = Some(model.add_herm_var(nt + 1));
    }

    let eye = HermMatrix::identity(nt);
    for &w in &w_vars {
        model.set_herm_objective(w, &eye);
    }

    let corner = corner_selector(nt + 1);
    let basis = herm_basis(nt + 1);
    let mut point_rows: Vec<Option<RowId>> = vec![None; k];
    for i in 0..k {
        let gamma = inst.sinr_target(i);
        let sigma2 = inst.noise_power(i);
        if let Some(cert) = cert_vars[i] {
            // Pin the certificate block to the design, one scalar equality per
            // basis element B:
            //   <B, P_i> - <G, W_i>/gamma_i + sum_{k!=i} <G, W_k>
            //            - lambda_i <B, ball_i>  =  -sigma_i^2 <B, corner>
            // where G = U_i^H B U_i pushes B down to antenna space and
            // ball_i = blockdiag(I, -r_i^2) carries the uncertainty budget.
            let r = inst.radius(i);
            let wide = homogenizer(inst, i).adjoint();
            let mut ball_diag = vec![1.0; nt + 1];
            ball_diag[nt] = -r * r;
            let ball = HermMatrix::from_diag(&ball_diag);
            for b in &basis {
                let g = b.congruence(&wide);
                let own = g.scale(-1.0 / gamma);
                let mut terms: Vec<(HermVar, &HermMatrix)> = Vec::with_capacity(k + 1);
                terms.push((cert, b));
                terms.push((w_vars[i], &own));
                for (kk, wv) in w_vars.iter().enumerate() {
                    if kk != i {
                        terms.push((*wv, &g));
                    }
                }
                let mut lam = vec![0.0; robust.len()];
                lam[multiplier_slot[i].expect("robust user has a slot")] = -ball.inner(b);
                let rhs = -sigma2 * corner.inner(b);
                model.add_row(
                    &terms,
                    &[(multiplier_var.expect("robust user exists"), lam)],
                    RowSense::Eq,
                    rhs,
                );
            }
        } else {
            // Exact channel: a single SINR inequality at the nominal channel.
            let outer = inst.channel_outer(i);
            let own = outer.scale(1.0 / gamma);
            let neg = outer.scale(-1.0);
            let mut terms: Vec<(HermVar, &HermMatrix)> = Vec::with_capacity(k);
            terms.push((w_vars[i], &own));
            for (kk, wv) in w_vars.iter().enumerate() {
                if kk != i {
                    terms.push((*wv, &neg));
                }
            }
            point_rows[i] = Some(model.add_row(&terms, &[], RowSense::Ge, sigma2));
        }
    }

    WspSdr {
        model,
        w_vars,
        cert_vars,
        multiplier_var,
        multiplier_slot,
        point_rows,
    }
}

impl WspSdr {
    pub fn model(&self) -> &ComplexSdp {
        &self.model
    }

    pub fn program(&self) -> &ConicProgram {
        self.model.program()
    }

    pub fn solve(&self, opts: &SolveOptions) -> ConicSolution {
        self.model.solve(opts)
    }

    /// Minimum total transmit power reported by a solve.
    pub fn objective_value(&self, sol: &ConicSolution) -> f64 {
        self.model.objective_value(sol)
    }

    /// Recovers the transmit covariances and ball multipliers. Users with an
    /// exact channel carry multiplier zero by convention.
    pub fn design_from(&self, sol: &ConicSolution) -> RobustDesign {
        let w = self
            .w_vars
            .iter()
            .map(|&v| self.model.herm_value(sol, v))
            .collect();
        let vals = self
            .multiplier_var
            .map(|v| self.model.scalar_value(sol, v))
            .unwrap_or_default();
        let lambda = self
            .multiplier_slot
            .iter()
            .map(|slot| slot.map_or(0.0, |s| vals[s]))
            .collect();
        RobustDesign::new(w, lambda)
    }

    /// Recovers the dual certificate from the solver's dual iterate: for a
    /// robust user the dual slack of its certificate block, and for an
    /// exact-channel user the SINR row multiplier concentrated on the
    /// homogeneous corner.
    pub fn certificate_from(&self, inst: &ProblemInstance, sol: &ConicSolution) -> DualCertificate {
        let nt = inst.num_antennas();
        let a = (0..self.w_vars.len())
            .map(|i| {
                if let Some(cert) = self.cert_vars[i] {
                    self.model.herm_dual_slack(sol, cert)
                } else {
                    let row = self.point_rows[i].expect("exact user has a point row");
                    let y = self.model.row_dual(sol, row).max(0.0);
                    corner_selector(nt + 1).scale(y)
                }
            })
            .collect();
        DualCertificate::new(inst, a)
    }

    /// Dual slack matrix paired with covariance `i` — by conic duality this
    /// equals the slack map applied to the recovered certificate matrices.
    pub fn covariance_dual_slack(&self, sol: &ConicSolution, i: usize) -> HermMatrix {
        self.model.herm_dual_slack(sol, self.w_vars[i])
    }
}

/// The dual of the robust design problem, built explicitly from its own
/// statement (not by mechanically dualizing [`WspSdr`]): maximize the
/// corner-weighted noise sum over PSD matrices `A_i` whose traces are
/// controlled by their corners and whose slack maps stay PSD.
#[derive(Debug, Clone)]
pub struct DualSdp {
    model: ComplexSdp,
    a_vars: Vec<HermVar>,
}

pub fn build_dual_sdp(inst: &ProblemInstance) -> DualSdp {
    let nt = inst.num_antennas();
    let k = inst.num_users();
    let mut model = ComplexSdp::new();
    model.set_maximize();
    let a_vars: Vec<HermVar> = (0..k).map(|_| model.add_herm_var(nt + 1)).collect();
    let slack_vars: Vec<HermVar> = (0..k).map(|_| model.add_herm_var(nt)).collect();

    let corner = corner_selector(nt + 1);
    for i in 0..k {
        model.set_herm_objective(a_vars[i], &corner.scale(inst.noise_power(i)));
    }

    // tr(A_i) <= (1 + r_i^2) [A_i]_corner
    for i in 0..k {
        let r = inst.radius(i);
        let mut d = vec![1.0; nt + 1];
        d[nt] = -r * r;
        let coeff = HermMatrix::from_diag(&d);
        model.add_row(&[(a_vars[i], &coeff)], &[], RowSense::Le, 0.0);
    }

    // Pin each slack block to the slack map, one equality per basis element:
    //   <B, Z_i> + (1/gamma_i) <G_i, A_i> - sum_{k!=i} <G_k, A_k> = <B, I>
    // with G_k = U_k B U_k^H lifting B to user k's homogenized space.
    let basis = herm_basis(nt);
    let talls: Vec<CMat> = (0..k).map(|u| homogenizer(inst, u)).collect();
    for i in 0..k {
        for b in &basis {
            let lifted: Vec<HermMatrix> = talls
                .iter()
                .enumerate()
                .map(|(kk, t)| {
                    let g = b.congruence(t);
                    if kk == i {
                        g.scale(1.0 / inst.sinr_target(i))
                    } else {
                        g.scale(-1.0)
                    }
                })
                .collect();
            let mut terms: Vec<(HermVar, &HermMatrix)> = Vec::with_capacity(k + 1);
            terms.push((slack_vars[i], b));
            for (kk, g) in lifted.iter().enumerate() {
                terms.push((a_vars[kk], g));
            }
            model.add_row(&terms, &[], RowSense::Eq, b.trace());
        }
    }

    DualSdp { model, a_vars }
}

impl DualSdp {
    pub fn model(&self) -> &ComplexSdp {
        &self.model
    }

    pub fn program(&self) -> &ConicProgram {
        self.model.program()
    }

    pub fn solve(&self, opts: &SolveOptions) -> ConicSolution {
        self.model.solve(opts)
    }

    /// Largest certified lower bound reported by a solve.
    pub fn objective_value(&self, sol: &ConicSolution) -> f64 {
        self.model.objective_value(sol)
    }

    pub fn certificate_from(&self, inst: &ProblemInstance, sol: &ConicSolution) -> DualCertificate {
        DualCertificate::new(
            inst,
            self.a_vars
                .iter()
                .map(|&v| self.model.herm_value(sol, v))
                .collect(),
        )
    }
}

/// Power minimization against fixed per-user channel second moments `R_i`:
/// minimize total power subject to `tr((W_i/γ_i − Σ_{k≠i} W_k) R_i) ≥ rhs_i`.
#[derive(Debug, Clone)]
pub struct InnerSdp {
    model: ComplexSdp,
    w_vars: Vec<HermVar>,
    rows: Vec<RowId>,
}

fn inner_with_targets(
    inst: &ProblemInstance,
    second_moments: &[HermMatrix],
    rhs: &[f64],
) -> InnerSdp {
    let nt = inst.num_antennas();
    let k = inst.num_users();
    assert_eq!(second_moments.len(), k, "one second moment per user");
    assert_eq!(rhs.len(), k);
    let mut model = ComplexSdp::new();
    let w_vars: Vec<HermVar> = (0..k).map(|_| model.add_herm_var(nt)).collect();
    let eye = HermMatrix::identity(nt);
    for &w in &w_vars {
        model.set_herm_objective(w, &eye);
    }
    let mut rows = Vec::with_capacity(k);
    for i in 0..k {
        debug_assert!(
            second_moments[i].min_eig() > -1e-6 * (1.0 + second_moments[i].norm_fro()),
            "second moments must be positive semidefinite"
        );
        let own = second_moments[i].scale(1.0 / inst.sinr_target(i));
        let neg = second_moments[i].scale(-1.0);
        let mut terms: Vec<(HermVar, &HermMatrix)> = Vec::with_capacity(k);
        terms.push((w_vars[i], &own));
        for (kk, wv) in w_vars.iter().enumerate() {
            if kk != i {
                terms.push((*wv, &neg));
            }
        }
        rows.push(model.add_row(&terms, &[], RowSense::Ge, rhs[i]));
    }
    InnerSdp {
        model,
        w_vars,
        rows,
    }
}

pub fn build_inner_sdp(inst: &ProblemInstance, second_moments: &[HermMatrix]) -> InnerSdp {
    inner_with_targets(inst, second_moments, inst.noise_powers())
}

/// The inner problem whose second moments and constraint levels come from a
/// dual certificate: `R_i = Ũ_i A_i Ũ_i^H` against level `σ_i² [A_i]_corner`.
/// Every minimizer of the robust design problem solves this program too, which
/// is what makes the certificate a usable optimality test.
pub fn build_fixed_certificate_inner(
    inst: &ProblemInstance,
    cert: &DualCertificate,
) -> Result<InnerSdp, FormulationError> {
    let k = inst.num_users();
    if cert.a.len() != k {
        return Err(FormulationError::DimensionMismatch {
            what: "certificate must carry one matrix per user",
        });
    }
    for i in 0..k {
        let corner = cert.corner(i);
        if corner <= CORNER_TOL {
            return Err(FormulationError::DegenerateCertificate { index: i, corner });
        }
    }
    let moments: Vec<HermMatrix> = (0..k)
        .map(|i| cert.a[i].congruence(&homogenizer(inst, i).adjoint()))
        .collect();
    let rhs: Vec<f64> = (0..k)
        .map(|i| inst.noise_power(i) * cert.corner(i))
        .collect();
    Ok(inner_with_targets(inst, &moments, &rhs))
}

impl InnerSdp {
    pub fn model(&self) -> &ComplexSdp {
        &self.model
    }

    pub fn program(&self) -> &ConicProgram {
        self.model.program()
    }

    pub fn solve(&self, opts: &SolveOptions) -> ConicSolution {
        self.model.solve(opts)
    }

    pub fn objective_value(&self, sol: &ConicSolution) -> f64 {
        self.model.objective_value(sol)
    }

    pub fn minimizer_from(&self, sol: &ConicSolution) -> Vec<HermMatrix> {
        self.w_vars
            .iter()
            .map(|&v| self.model.herm_value(sol, v))
            .collect()
    }

    /// Multipliers of the per-user constraint rows.
    pub fn row_duals(&self, sol: &ConicSolution) -> Vec<f64> {
        self.rows
            .iter()
            .map(|&r| self.model.row_dual(sol, r))
            .collect()
    }

    /// Replaces the total-power objective with per-covariance coefficients.
    /// Used to probe whether the feasible set has more than one optimum.
    pub fn set_objectives(&mut self, coeffs: &[HermMatrix]) {
        assert_eq!(coeffs.len(), self.w_vars.len(), "one coefficient per user");
        for (&w, c) in self.w_vars.iter().zip(coeffs) {
            self.model.set_herm_objective(w, c);
        }
    }
}

/// The worst-case channel-error problem of one user for a fixed design:
/// minimize the user's SINR margin over its error distribution set (PSD with
/// unit corner and trace at most `1 + r_i²`).
#[derive(Debug, Clone)]
pub struct ErrorSdr {
    model: ComplexSdp,
    v_var: HermVar,
}

pub fn build_error_sdr(inst: &ProblemInstance, w: &[HermMatrix], i: usize) -> ErrorSdr {
    let nt = inst.num_antennas();
    let q = sinr_margin_matrix(inst, w, i);
    let lifted = q.congruence(&homogenizer(inst, i));
    let mut model = ComplexSdp::new();
    let v_var = model.add_herm_var(nt + 1);
    model.set_herm_objective(v_var, &lifted);
    let r = inst.radius(i);
    model.add_row(
        &[(v_var, &HermMatrix::identity(nt + 1))],
        &[],
        RowSense::Le,
        1.0 + r * r,
    );
    model.add_row(&[(v_var, &corner_selector(nt + 1))], &[], RowSense::Eq, 1.0);
    ErrorSdr { model, v_var }
}

impl ErrorSdr {
    pub fn model(&self) -> &ComplexSdp {
        &self.model
    }

    pub fn program(&self) -> &ConicProgram {
        self.model.program()
    }

    pub fn solve(&self, opts: &SolveOptions) -> ConicSolution {
        self.model.solve(opts)
    }

    /// Worst-case margin numerator: nonnegative exactly when the user's SINR
    /// constraint survives every error in its ball.
    pub fn objective_value(&self, sol: &ConicSolution) -> f64 {
        self.model.objective_value(sol)
    }

    pub fn minimizer_from(&self, sol: &ConicSolution) -> HermMatrix {
        self.model.herm_value(sol, self.v_var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::ComplexVector;
    use crate::solver::SolveStatus;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    fn scalar_instance(radius: f64) -> ProblemInstance {
        ProblemInstance::new(
            vec![ComplexVector::from_real(&[1.0])],
            vec![radius],
            vec![0.1],
            vec![1.0],
        )
        .unwrap()
    }

    /// Two users, two antennas, one robust and one exact channel.
    fn mixed_instance() -> ProblemInstance {
        ProblemInstance::new(
            vec![
                ComplexVector::new(vec![c(1.0, 0.0), c(0.3, 0.4)]),
                ComplexVector::new(vec![c(0.2, -0.5), c(0.9, 0.0)]),
            ],
            vec![0.2, 0.0],
            vec![0.1, 0.05],
            vec![1.5, 1.0],
        )
        .unwrap()
    }

    /// Single-user closed form: serving one scalar user against a ball of
    /// radius r needs power gamma sigma^2 / (|h| - r)^2.
    #[test]
    fn scalar_design_matches_closed_form() {
        let inst = scalar_instance(0.1);
        let prob = build_wsp_sdr(&inst);
        let sol = prob.solve(&opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        let want = 0.1 / (0.9 * 0.9);
        assert!(
            (prob.objective_value(&sol) - want).abs() < 1e-7,
            "objective {} want {want}",
            prob.objective_value(&sol)
        );
        let design = prob.design_from(&sol);
        design.validate(&inst).expect("recovered design feasible");
        // at the optimum the certificate matrix has a double root in the
        // multiplier, pinning it near 1/0.9
        assert!(
            (design.lambda[0] - 1.0 / 0.9).abs() < 1e-3,
            "multiplier {}",
            design.lambda[0]
        );
        let cert = prob.certificate_from(&inst, &sol);
        cert.validate(&inst).expect("recovered certificate feasible");
        assert!((cert.objective - want).abs() < 1e-6);
    }

    #[test]
    fn scalar_design_with_exact_channel_needs_less_power() {
        let inst = scalar_instance(0.0);
        let prob = build_wsp_sdr(&inst);
        let sol = prob.solve(&opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((prob.objective_value(&sol) - 0.1).abs() < 1e-7);
        let design = prob.design_from(&sol);
        design.validate(&inst).expect("point design feasible");
        assert_eq!(design.lambda[0], 0.0, "exact channel carries no multiplier");
        let cert = prob.certificate_from(&inst, &sol);
        cert.validate(&inst).expect("point certificate feasible");
        assert!((cert.objective - 0.1).abs() < 1e-6);
    }

    #[test]
    fn design_power_grows_with_the_target() {
        let mut last = 0.0;
        for gamma in [0.5, 1.0, 2.0] {
            let inst = ProblemInstance::new(
                vec![ComplexVector::from_real(&[1.0])],
                vec![0.1],
                vec![0.1],
                vec![gamma],
            )
            .unwrap();
            let prob = build_wsp_sdr(&inst);
            let sol = prob.solve(&opts());
            assert_eq!(sol.status, SolveStatus::Optimal);
            let obj = prob.objective_value(&sol);
            assert!(obj > last + 1e-6, "tightening the target must cost power");
            last = obj;
        }
    }

    #[test]
    fn explicit_dual_agrees_with_design_problem() {
        for radius in [0.1, 0.0] {
            let inst = scalar_instance(radius);
            let dual = build_dual_sdp(&inst);
            let sol = dual.solve(&opts());
            assert_eq!(sol.status, SolveStatus::Optimal);
            let want = if radius > 0.0 { 0.1 / 0.81 } else { 0.1 };
            assert!(
                (dual.objective_value(&sol) - want).abs() < 1e-6,
                "dual value {} want {want}",
                dual.objective_value(&sol)
            );
            let cert = dual.certificate_from(&inst, &sol);
            cert.validate(&inst).expect("dual solution is a certificate");
        }
    }

    /// The two independently built programs must meet at the same value, and
    /// the certificate recovered from the design solve must be feasible for
    /// the explicit dual with matching objective.
    #[test]
    fn mixed_instance_has_no_duality_gap() {
        let inst = mixed_instance();
        let prob = build_wsp_sdr(&inst);
        let psol = prob.solve(&opts());
        assert_eq!(psol.status, SolveStatus::Optimal);
        let dual = build_dual_sdp(&inst);
        let dsol = dual.solve(&opts());
        assert_eq!(dsol.status, SolveStatus::Optimal);
        let p = prob.objective_value(&psol);
        let d = dual.objective_value(&dsol);
        assert!(
            (p - d).abs() <= 1e-6 * (1.0 + p.abs()),
            "primal {p} vs dual {d}"
        );
        let design = prob.design_from(&psol);
        design.validate(&inst).expect("design feasible");
        let cert = prob.certificate_from(&inst, &psol);
        cert.validate(&inst).expect("recovered certificate feasible");
        assert!((cert.objective - p).abs() <= 1e-6 * (1.0 + p.abs()));
    }

    /// The dual slack paired with each covariance block must equal the slack
    /// map evaluated at the recovered certificate matrices.
    #[test]
    fn recovered_certificate_reproduces_covariance_slacks() {
        let inst = mixed_instance();
        let prob = build_wsp_sdr(&inst);
        let sol = prob.solve(&opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        let cert = prob.certificate_from(&inst, &sol);
        for i in 0..inst.num_users() {
            let from_map = super::super::build_y(&inst, &cert.a, i);
            let from_solver = prob.covariance_dual_slack(&sol, i);
            let diff = from_map.sub(&from_solver).norm_fro();
            assert!(
                diff <= 1e-7 * (1.0 + from_map.norm_fro()),
                "slack mismatch {diff} at user {i}"
            );
        }
        // the certified bound is exactly the solver's dual objective
        assert!((cert.objective - sol.dual_obj).abs() <= 1e-9 * (1.0 + sol.dual_obj.abs()));
    }

    #[test]
    fn rank_one_moment_reduces_to_classic_power_control() {
        let inst = ProblemInstance::new(
            vec![ComplexVector::from_real(&[1.0, 0.0])],
            vec![0.1],
            vec![0.1],
            vec![1.0],
        )
        .unwrap();
        let moment = inst.channel_outer(0);
        let prob = build_inner_sdp(&inst, &[moment.clone()]);
        let sol = prob.solve(&opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((prob.objective_value(&sol) - 0.1).abs() < 1e-7);
        let w = prob.minimizer_from(&sol);
        assert!(w[0].sub(&moment.scale(0.1)).norm_fro() < 1e-5);
    }

    /// Second moments concentrated on the homogeneous corner carry no error
    /// mass, so the inner problem reproduces the exact-channel design.
    #[test]
    fn corner_moments_reproduce_exact_channel_design() {
        let inst = ProblemInstance::new(
            vec![
                ComplexVector::from_real(&[1.0, 0.0]),
                ComplexVector::from_real(&[0.0, 1.0]),
            ],
            vec![0.1, 0.1],
            vec![0.1, 0.1],
            vec![1.0, 1.0],
        )
        .unwrap();
        let moments: Vec<HermMatrix> = (0..2)
            .map(|i| {
                corner_selector(3).congruence(&homogenizer(&inst, i).adjoint())
            })
            .collect();
        for (i, m) in moments.iter().enumerate() {
            assert!(m.sub(&inst.channel_outer(i)).norm_fro() < 1e-14);
        }
        let prob = build_inner_sdp(&inst, &moments);
        let sol = prob.solve(&opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((prob.objective_value(&sol) - 0.2).abs() < 1e-6);
        let w = prob.minimizer_from(&sol);
        for (i, wi) in w.iter().enumerate() {
            assert!(wi.sub(&inst.channel_outer(i).scale(0.1)).norm_fro() < 1e-5);
        }
    }

    /// Two users sharing one channel direction cannot both be served once the
    /// targets are high enough; the solver must certify that, not stall.
    #[test]
    fn shared_direction_moments_are_certified_infeasible() {
        let h = ComplexVector::from_real(&[1.0, 0.0]);
        let inst = ProblemInstance::new(
            vec![h.clone(), h.clone()],
            vec![0.1, 0.1],
            vec![0.1, 0.1],
            vec![2.0, 2.0],
        )
        .unwrap();
        let moment = h.outer();
        let prob = build_inner_sdp(&inst, &[moment.clone(), moment]);
        let sol = prob.solve(&opts());
        assert_eq!(sol.status, SolveStatus::PrimalInfeasible);
    }

    /// Fixing the certificate in the inner problem is a positive row scaling
    /// away from feeding it normalized second moments, and on the scalar
    /// instance its optimum matches the full design problem.
    #[test]
    fn fixed_certificate_inner_matches_design_optimum() {
        let inst = scalar_instance(0.1);
        // hand-built optimal certificate: rank-one with corner 1/0.81
        let a = HermMatrix::new(
            2,
            vec![c(0.01, 0.0), c(-0.1, 0.0), c(-0.1, 0.0), c(1.0, 0.0)],
        )
        .scale(1.0 / 0.81);
        let cert = DualCertificate::new(&inst, vec![a.clone()]);
        cert.validate(&inst).expect("hand-built certificate");
        let fixed = build_fixed_certificate_inner(&inst, &cert).unwrap();
        let fsol = fixed.solve(&opts());
        assert_eq!(fsol.status, SolveStatus::Optimal);
        let want = 0.1 / 0.81;
        assert!((fixed.objective_value(&fsol) - want).abs() < 1e-6);

        // same feasible set as the normalized-moment inner problem
        let corner = cert.corner(0);
        let moment = a
            .scale(1.0 / corner)
            .congruence(&homogenizer(&inst, 0).adjoint());
        let scaled = build_inner_sdp(&inst, &[moment]);
        let ssol = scaled.solve(&opts());
        assert_eq!(ssol.status, SolveStatus::Optimal);
        assert!(
            (fixed.objective_value(&fsol) - scaled.objective_value(&ssol)).abs() < 1e-8,
            "row scaling must not move the optimum"
        );
    }

    #[test]
    fn degenerate_certificate_is_rejected() {
        let inst = scalar_instance(0.1);
        let cert = DualCertificate::new(&inst, vec![HermMatrix::zeros(2)]);
        let err = build_fixed_certificate_inner(&inst, &cert).unwrap_err();
        assert!(matches!(
            err,
            FormulationError::DegenerateCertificate { index: 0, .. }
        ));
    }

    #[test]
    fn worst_case_error_of_zero_design_is_zero() {
        let inst = scalar_instance(0.1);
        let prob = build_error_sdr(&inst, &[HermMatrix::zeros(1)], 0);
        let sol = prob.solve(&opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(prob.objective_value(&sol).abs() < 1e-8);
    }

    /// Scalar design W = (p): the worst error pulls the channel straight
    /// toward zero, leaving p (1 - r)^2.
    #[test]
    fn worst_case_error_hits_the_ball_boundary() {
        let inst = scalar_instance(0.1);
        let prob = build_error_sdr(&inst, &[HermMatrix::from_diag(&[0.2])], 0);
        let sol = prob.solve(&opts());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(
            (prob.objective_value(&sol) - 0.2 * 0.81).abs() < 1e-7,
            "value {}",
            prob.objective_value(&sol)
        );
        let v = prob.minimizer_from(&sol);
        // minimizer is the lifted boundary error e = -r
        let want = HermMatrix::new(
            2,
            vec![c(0.01, 0.0), c(-0.1, 0.0), c(-0.1, 0.0), c(1.0, 0.0)],
        );
        assert!(v.sub(&want).norm_fro() < 1e-5);
    }

    #[test]
    fn worst_case_margin_shrinks_as_the_ball_grows() {
        let h = ComplexVector::new(vec![c(1.0, 0.0), c(0.0, 0.5)]);
        let w = vec![HermMatrix::new(
            2,
            vec![c(1.0, 0.0), c(0.2, 0.0), c(0.2, 0.0), c(0.5, 0.0)],
        )];
        let mut last = f64::INFINITY;
        for radius in [0.05, 0.15, 0.3] {
            let inst = ProblemInstance::new(
                vec![h.clone()],
                vec![radius],
                vec![0.1],
                vec![1.0],
            )
            .unwrap();
            let prob = build_error_sdr(&inst, &w, 0);
            let sol = prob.solve(&opts());
            assert_eq!(sol.status, SolveStatus::Optimal);
            let value = prob.objective_value(&sol);
            assert!(
                value < last - 1e-9,
                "larger ball must not raise the worst case ({value} vs {last})"
            );
            last = value;
        }
    }
}
