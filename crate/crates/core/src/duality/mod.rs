//! Certificate mapping, first-order optimality residuals, and end-to-end
//! verification that the robust design program and its explicit dual meet at
//! the same value with transferable solutions.
//!
//! The centerpiece is [`verify_duality`]: it solves the design program and
//! the dual independently, recovers a certificate, replays the design
//! through the certificate-pinned inner program, checks that every user's
//! worst-case constraint is active, measures all first-order residuals, and
//! probes whether the inner minimizer is unique. Everything it cannot
//! reconcile is an error, never a silently degraded report.

use serde::ser::{Serialize, SerializeStruct, Serializer};
use thiserror::Error;

use num_complex::Complex64;

use crate::complex::{CMat, HermMatrix};
use crate::formulations::{
    build_dual_sdp, build_error_sdr, build_fixed_certificate_inner, build_psi, build_wsp_sdr,
    build_y, homogenizer, sinr_margin_matrix, DualCertificate, FormulationError, MaxMinSolution,
    RobustDesign, CORNER_TOL,
};
use crate::instance::ProblemInstance;
use crate::oracle::{extract_beamformers, worst_case_margin, OracleError};
use crate::solver::{SolveOptions, SolveStatus};

/// First-order residuals pass when none exceeds this times `1 + objective`.
pub const KKT_PASS_TOL: f64 = 1e-6;
/// Relative size of the objective jitter used to probe uniqueness.
const PROBE_JITTER: f64 = 1e-7;
/// Number of jittered re-solves in the uniqueness probe.
const PROBE_ROUNDS: usize = 16;
/// Frobenius deviation (relative to the minimizer's size) above which two
/// inner minimizers count as distinct.
const UNIQUENESS_TOL: f64 = 1e-5;
/// Tolerance for the solution-transfer identities checked by
/// [`verify_duality`].
const TRANSFER_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DualityError {
    /// The design program is infeasible; the solver produced an improving
    /// dual ray whose objective gain certifies it.
    #[error("instance is infeasible: improving dual ray with gain {ray_gain:.3e}")]
    Infeasible { ray_gain: f64 },
    #[error("solver returned {status:?} while solving the {stage}")]
    Solve {
        stage: &'static str,
        status: SolveStatus,
    },
    /// A transfer identity between the design, dual, and inner problems did
    /// not hold to tolerance — the strongest sign of a numerical breakdown.
    #[error("solution transfer violated: {check} off by {error:.3e}")]
    Transfer { check: &'static str, error: f64 },
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Extraction(#[from] OracleError),
}

/// One nonnegative residual per first-order condition of the design program.
///
/// `cone` covers the primal memberships (covariances PSD, multipliers
/// nonnegative); users with an exact channel contribute their scalar
/// constraint's violation and complementarity in place of the certificate
/// matrix they do not carry.
#[derive(Debug, Clone, Default)]
pub struct KktResidual {
    /// Primal cone violations: `max(0, -λ_min(W_i))` and `max(0, -λ_i)`.
    pub cone: f64,
    /// Certificate-matrix PSD violation, `max(0, -λ_min(Ψ_i))`.
    pub psi_psd: f64,
    /// Dual slack PSD violation, `max(0, -λ_min(Y_i))`.
    pub y_psd: f64,
    /// Complementarity between certificate matrices, `‖Ψ_i A_i‖_F`.
    pub psi_complementarity: f64,
    /// Complementarity between slack and covariance, `‖Y_i W_i‖_F`.
    pub y_complementarity: f64,
    /// Dual trace-bound violation, `max(0, tr A_i - (1+r_i²)[A_i]_corner)`.
    pub trace_bound: f64,
    /// Trace-bound complementary slackness,
    /// `|(tr A_i - (1+r_i²)[A_i]_corner)·λ_i|`.
    pub trace_complementarity: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        [
            self.cone,
            self.psi_psd,
            self.y_psd,
            self.psi_complementarity,
            self.y_complementarity,
            self.trace_bound,
            self.trace_complementarity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Pass verdict: no residual above [`KKT_PASS_TOL`] `· (1 + objective)`.
    pub fn passes(&self, objective: f64) -> bool {
        self.max() <= KKT_PASS_TOL * (1.0 + objective)
    }
}

/// Residuals of the first-order system of one user's worst-case error
/// problem, evaluated at a candidate distribution and multipliers.
#[derive(Debug, Clone)]
pub struct ErrorKktResidual {
    /// PSD violation of the stationarity slack.
    pub stationarity_psd: f64,
    /// Complementarity between the slack and the distribution.
    pub complementarity: f64,
    /// Sign violation of the trace multiplier, `max(0, -ξ)`.
    pub multiplier_sign: f64,
    /// Trace-bound complementary slackness, `|ξ·(1 + r² - tr V)|`.
    pub trace_complementarity: f64,
    /// Membership violation of the distribution set (PSD, trace bound,
    /// unit corner).
    pub membership: f64,
}

impl ErrorKktResidual {
    pub fn max(&self) -> f64 {
        [
            self.stationarity_psd,
            self.complementarity,
            self.multiplier_sign,
            self.trace_complementarity,
            self.membership,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, scale: f64) -> bool {
        self.max() <= KKT_PASS_TOL * (1.0 + scale)
    }
}

/// Outcome of the inner-minimizer uniqueness probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeVerdict {
    /// All jittered optima stayed within tolerance of the unperturbed one.
    Unique { max_deviation: f64 },
    /// Some jitter moved the optimum: the minimizer set is not a point.
    Ambiguous { max_deviation: f64 },
    /// A probe solve did not reach optimality.
    Failed,
}

impl ProbeVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            ProbeVerdict::Unique { .. } => "Unique",
            ProbeVerdict::Ambiguous { .. } => "Ambiguous",
            ProbeVerdict::Failed => "Failed",
        }
    }

    pub fn is_unique(&self) -> bool {
        matches!(self, ProbeVerdict::Unique { .. })
    }

    /// Largest observed minimizer deviation, when the probe ran to the end.
    pub fn deviation(&self) -> Option<f64> {
        match self {
            ProbeVerdict::Unique { max_deviation } | ProbeVerdict::Ambiguous { max_deviation } => {
                Some(*max_deviation)
            }
            ProbeVerdict::Failed => None,
        }
    }
}

/// Everything one verification run establishes about an instance.
#[derive(Debug, Clone)]
pub struct DualityReport {
    /// Optimal transmit power of the design program.
    pub primal_obj: f64,
    /// Optimal value of the independently solved explicit dual.
    pub dual_obj: f64,
    /// `|primal - dual| / (1 + |primal|)`.
    pub rel_gap: f64,
    /// Per-user second-to-first eigenvalue ratios of the covariances.
    pub rank_profile: Vec<f64>,
    /// First-order residuals at the recovered primal-dual pair.
    pub kkt: KktResidual,
    /// Ball-worst slack of each SINR constraint at its target (in signal
    /// power units) for the extracted beamformers.
    pub worst_case_margins: Vec<f64>,
    /// Uniqueness probe outcome for the certificate-pinned inner problem.
    pub condition1_verdict: ProbeVerdict,
}

impl DualityReport {
    pub fn max_rank_ratio(&self) -> f64 {
        self.rank_profile.iter().fold(0.0, |m, &x| m.max(x))
    }

    pub fn min_margin(&self) -> f64 {
        self.worst_case_margins
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }
}

impl Serialize for DualityReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        // Flat object, fixed key order: downstream CSV/diff tooling keys on
        // byte-stable output.
        let mut st = serializer.serialize_struct("DualityReport", 15)?;
        st.serialize_field("primal_obj", &self.primal_obj)?;
        st.serialize_field("dual_obj", &self.dual_obj)?;
        st.serialize_field("rel_gap", &self.rel_gap)?;
        st.serialize_field("rank_profile", &self.rank_profile)?;
        st.serialize_field("kkt_cone", &self.kkt.cone)?;
        st.serialize_field("kkt_psi_psd", &self.kkt.psi_psd)?;
        st.serialize_field("kkt_y_psd", &self.kkt.y_psd)?;
        st.serialize_field("kkt_psi_complementarity", &self.kkt.psi_complementarity)?;
        st.serialize_field("kkt_y_complementarity", &self.kkt.y_complementarity)?;
        st.serialize_field("kkt_trace_bound", &self.kkt.trace_bound)?;
        st.serialize_field("kkt_trace_complementarity", &self.kkt.trace_complementarity)?;
        st.serialize_field("kkt_pass", &self.kkt.passes(self.primal_obj))?;
        st.serialize_field("worst_case_margins", &self.worst_case_margins)?;
        st.serialize_field("condition1_verdict", self.condition1_verdict.label())?;
        st.serialize_field("condition1_deviation", &self.condition1_verdict.deviation())?;
        st.end()
    }
}

/// Splits a certificate into per-user distributions and weights: the weight
/// is the corner entry, the distribution the certificate matrix scaled to a
/// unit corner. Fails on corners at or below the degeneracy threshold, which
/// can only come from a solver breakdown.
pub fn map_certificate_to_maxmin(
    cert: &DualCertificate,
) -> Result<(Vec<HermMatrix>, Vec<f64>), FormulationError> {
    let mut v = Vec::with_capacity(cert.a.len());
    let mut mu = Vec::with_capacity(cert.a.len());
    for (i, ai) in cert.a.iter().enumerate() {
        let corner = cert.corner(i);
        if corner <= CORNER_TOL {
            return Err(FormulationError::DegenerateCertificate { index: i, corner });
        }
        mu.push(corner);
        v.push(ai.scale(1.0 / corner));
    }
    Ok((v, mu))
}

/// Reassembles a certificate from distributions and weights, `A_i = μ_i V_i`.
pub fn map_maxmin_to_certificate(
    inst: &ProblemInstance,
    v: &[HermMatrix],
    mu: &[f64],
) -> DualCertificate {
    assert_eq!(v.len(), mu.len(), "one weight per distribution");
    let a = v.iter().zip(mu).map(|(vi, &m)| vi.scale(m)).collect();
    DualCertificate::new(inst, a)
}

fn frobenius(m: &CMat) -> f64 {
    let mut sum = 0.0;
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            sum += m.get(r, c).norm_sqr();
        }
    }
    sum.sqrt()
}

/// Measures every first-order residual of the design program at a
/// primal-dual candidate pair.
pub fn check_design_kkt(
    inst: &ProblemInstance,
    design: &RobustDesign,
    cert: &DualCertificate,
) -> KktResidual {
    let k = inst.num_users();
    assert_eq!(design.w.len(), k, "one covariance per user");
    assert_eq!(cert.a.len(), k, "one certificate matrix per user");
    let mut res = KktResidual::default();
    for i in 0..k {
        let r = inst.radius(i);
        let lambda = design.lambda[i];
        res.cone = res
            .cone
            .max(-design.w[i].min_eig())
            .max(-lambda)
            .max(0.0);
        if r > 0.0 {
            let psi = build_psi(inst, &design.w, i, lambda);
            res.psi_psd = res.psi_psd.max(-psi.min_eig()).max(0.0);
            res.psi_complementarity = res
                .psi_complementarity
                .max(frobenius(&psi.as_cmat().matmul(&cert.a[i].as_cmat())));
        } else {
            // Exact channel: the robust matrix inequality collapses to one
            // scalar constraint; its violation and complementarity stand in
            // for the certificate-matrix conditions.
            let margin = sinr_margin_matrix(inst, &design.w, i).quad_form(inst.channel(i))
                - inst.noise_power(i);
            res.psi_psd = res.psi_psd.max(-margin).max(0.0);
            res.psi_complementarity = res
                .psi_complementarity
                .max((margin * cert.corner(i)).abs());
        }
        let y = build_y(inst, &cert.a, i);
        res.y_psd = res.y_psd.max(-y.min_eig()).max(0.0);
        res.y_complementarity = res
            .y_complementarity
            .max(frobenius(&y.as_cmat().matmul(&design.w[i].as_cmat())));
        let trace_slack = cert.a[i].trace() - (1.0 + r * r) * cert.corner(i);
        res.trace_bound = res.trace_bound.max(trace_slack).max(0.0);
        res.trace_complementarity = res.trace_complementarity.max((trace_slack * lambda).abs());
    }
    res
}

/// Measures the first-order residuals of user `i`'s worst-case error problem
/// at a candidate distribution `v` with multipliers `xi` (trace bound) and
/// `tau` (corner pin). At the design optimum the canonical multipliers are
/// `xi = λ_i` and `tau = -σ_i² - (1+r_i²)λ_i`.
pub fn check_error_kkt(
    inst: &ProblemInstance,
    w: &[HermMatrix],
    i: usize,
    v: &HermMatrix,
    xi: f64,
    tau: f64,
) -> ErrorKktResidual {
    let nt = inst.num_antennas();
    let r = inst.radius(i);
    let mut diag = vec![xi; nt + 1];
    diag[nt] += tau;
    let slack = sinr_margin_matrix(inst, w, i)
        .congruence(&homogenizer(inst, i))
        .add(&HermMatrix::from_diag(&diag));
    let bound = 1.0 + r * r;
    let membership = (-v.min_eig())
        .max(v.trace() - bound)
        .max((v.get(nt, nt).re - 1.0).abs())
        .max(0.0);
    ErrorKktResidual {
        stationarity_psd: (-slack.min_eig()).max(0.0),
        complementarity: frobenius(&slack.as_cmat().matmul(&v.as_cmat())),
        multiplier_sign: (-xi).max(0.0),
        trace_complementarity: (xi * (bound - v.trace())).abs(),
        membership,
    }
}

mod polish;

/// Refines the recovered design/certificate pair to working-precision
/// first-order residuals before it is reported.
///
/// The interior-point iterate pins the uncertainty multipliers and the
/// per-user certificate weights only to brackets whose width scales like
/// the square root of the final duality gap: the worst-case error sits on
/// the ball boundary at the optimum, so the certificate matrix's
/// first-order sensitivity to its multiplier vanishes there, and only the
/// noise-weighted sum of the certificate corners is pinned by the
/// objective. Raw readouts therefore leave complementarity products
/// square-root-of-gap large no matter how tight the solve. This runs a
/// Newton iteration on the complete first-order system over the generic
/// optimal shape (rank-one covariances, rank-one certificate blocks lifted
/// from the worst-case channels, active balls) and adopts the result only
/// when it reaches working precision; otherwise the pair is returned
/// unchanged.
pub fn polish_kkt_pair(
    inst: &ProblemInstance,
    design: &RobustDesign,
    cert: &DualCertificate,
) -> (RobustDesign, DualCertificate) {
    match polish::refine(inst, design, cert) {
        Some(pair) => pair,
        None => (design.clone(), cert.clone()),
    }
}


fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// Identity plus a tiny Hermitian jitter: a perturbed power objective.
fn jittered_identity(n: usize, state: &mut u64) -> HermMatrix {
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for row in 0..n {
        for col in row..n {
            let re = PROBE_JITTER * (unit(state) - 0.5);
            let im = if row == col {
                0.0
            } else {
                PROBE_JITTER * (unit(state) - 0.5)
            };
            entries[row * n + col] = Complex64::new(re, im);
            entries[col * n + row] = Complex64::new(re, -im);
        }
        entries[row * n + row] += 1.0;
    }
    HermMatrix::new(n, entries)
}

/// Decides whether the certificate-pinned inner problem has a unique
/// minimizer by re-solving it under [`PROBE_ROUNDS`] tiny random objective
/// perturbations and comparing every perturbed optimum to the unperturbed
/// one. Covariances are compared directly, which is phase-invariant.
pub fn probe_inner_uniqueness(
    inst: &ProblemInstance,
    cert: &DualCertificate,
    opts: &SolveOptions,
) -> ProbeVerdict {
    let mut fixed = match build_fixed_certificate_inner(inst, cert) {
        Ok(p) => p,
        Err(_) => return ProbeVerdict::Failed,
    };
    let base = fixed.solve(opts);
    if base.status != SolveStatus::Optimal {
        return ProbeVerdict::Failed;
    }
    let w0 = fixed.minimizer_from(&base);
    let scale = 1.0 + w0.iter().map(HermMatrix::norm_fro).fold(0.0, f64::max);
    let mut state = 0x243f_6a88_85a3_08d3u64;
    let mut max_deviation = 0.0f64;
    for _ in 0..PROBE_ROUNDS {
        let coeffs: Vec<HermMatrix> = w0
            .iter()
            .map(|w| jittered_identity(w.dim(), &mut state))
            .collect();
        fixed.set_objectives(&coeffs);
        let sol = fixed.solve(opts);
        if sol.status != SolveStatus::Optimal {
            return ProbeVerdict::Failed;
        }
        for (wp, wb) in fixed.minimizer_from(&sol).iter().zip(&w0) {
            max_deviation = max_deviation.max(wp.sub(wb).norm_fro());
        }
    }
    if max_deviation <= UNIQUENESS_TOL * scale {
        ProbeVerdict::Unique { max_deviation }
    } else {
        ProbeVerdict::Ambiguous { max_deviation }
    }
}

/// Solves the design program and its explicit dual independently, replays
/// the design through the certificate-pinned inner program, checks the
/// worst-case activity of every constraint, and assembles the full report.
///
/// The verified chain, end to end:
/// 1. design program solves to optimality (infeasibility is reported with
///    the dual ray's gain);
/// 2. recovered design and certificate both validate;
/// 3. certificate maps to distributions that validate, and the two
///    objectives read identically through the map;
/// 4. the independently solved dual meets the primal value (`rel_gap`);
/// 5. the inner program pinned to the recovered certificate re-attains the
///    design optimum and accepts the design as feasible — optimal, since
///    the objectives already agree;
/// 6. every user's worst-case constraint value sits exactly at its noise
///    power (activity);
/// 7. beamformers extract and their ball-worst margins are recorded;
/// 8. the inner minimizer is probed for uniqueness.
pub fn verify_duality(
    inst: &ProblemInstance,
    opts: &SolveOptions,
) -> Result<DualityReport, DualityError> {
    let wsp = build_wsp_sdr(inst);
    let psol = wsp.solve(opts);
    match psol.status {
        SolveStatus::Optimal => {}
        SolveStatus::PrimalInfeasible => {
            return Err(DualityError::Infeasible {
                ray_gain: wsp.model().dual_objective_value(&psol),
            })
        }
        status => {
            return Err(DualityError::Solve {
                stage: "robust design program",
                status,
            })
        }
    }
    let design = wsp.design_from(&psol);
    let cert = wsp.certificate_from(inst, &psol);
    design.validate(inst)?;
    cert.validate(inst)?;
    let (design, cert) = polish_kkt_pair(inst, &design, &cert);
    design.validate(inst)?;
    cert.validate(inst)?;
    let primal_obj = design.objective;

    let (v, mu) = map_certificate_to_maxmin(&cert)?;
    let maxmin = MaxMinSolution {
        v,
        mu,
        w: design.w.clone(),
    };
    maxmin.validate(inst)?;
    let remapped = map_maxmin_to_certificate(inst, &maxmin.v, &maxmin.mu);
    let map_drift = (remapped.objective - cert.objective).abs();
    if map_drift > TRANSFER_TOL * (1.0 + cert.objective.abs()) {
        return Err(DualityError::Transfer {
            check: "objective equality across the certificate map",
            error: map_drift,
        });
    }

    // The explicit dual is a cross-check on the gap, so it needs far less
    // precision than the primary solve; its corner-reward geometry also
    // stalls earlier in f64. Retry with relaxed tolerances before giving up.
    let dual = build_dual_sdp(inst);
    let mut dual_opts = opts.clone();
    let mut dsol = dual.solve(&dual_opts);
    while matches!(
        dsol.status,
        SolveStatus::NumericalFailure | SolveStatus::MaxIterations
    ) && dual_opts.gap_tol < 1e-7
    {
        dual_opts.gap_tol *= 10.0;
        dual_opts.feas_tol *= 10.0;
        dsol = dual.solve(&dual_opts);
    }
    if dsol.status != SolveStatus::Optimal {
        return Err(DualityError::Solve {
            stage: "explicit dual program",
            status: dsol.status,
        });
    }
    let dual_obj = dual.objective_value(&dsol);
    let rel_gap = (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs());

    let kkt = check_design_kkt(inst, &design, &cert);

    let fixed = build_fixed_certificate_inner(inst, &cert)?;
    let fsol = fixed.solve(opts);
    if fsol.status != SolveStatus::Optimal {
        return Err(DualityError::Solve {
            stage: "certificate-pinned inner program",
            status: fsol.status,
        });
    }
    let pinned_gap =
        (fixed.objective_value(&fsol) - primal_obj).abs() / (1.0 + primal_obj.abs());
    if pinned_gap > TRANSFER_TOL {
        return Err(DualityError::Transfer {
            check: "pinned inner program optimum",
            error: pinned_gap,
        });
    }
    // The design must be feasible for the pinned program; with the
    // objectives already equal, feasibility is optimality.
    let nt = inst.num_antennas();
    for i in 0..inst.num_users() {
        let moments = cert.a[i].congruence(&homogenizer(inst, i).adjoint());
        debug_assert_eq!(moments.dim(), nt);
        let slack = sinr_margin_matrix(inst, &design.w, i).inner(&moments)
            - inst.noise_power(i) * cert.corner(i);
        if slack < -TRANSFER_TOL * (1.0 + primal_obj.abs()) {
            return Err(DualityError::Transfer {
                check: "design feasibility in the pinned inner program",
                error: -slack,
            });
        }
    }
    for i in 0..inst.num_users() {
        // Worst-case activity: each user's ball-minimal constraint value
        // equals its noise power at the optimum. Users with an exact channel
        // have a point ball, so the value is read off directly — their
        // distribution set is the single corner matrix, which admits no
        // interior point for the error program to walk through.
        let value = if inst.radius(i) > 0.0 {
            let esdr = build_error_sdr(inst, &design.w, i);
            let esol = esdr.solve(opts);
            if esol.status != SolveStatus::Optimal {
                return Err(DualityError::Solve {
                    stage: "worst-case error program",
                    status: esol.status,
                });
            }
            esdr.objective_value(&esol)
        } else {
            sinr_margin_matrix(inst, &design.w, i).quad_form(inst.channel(i))
        };
        let activity = (value - inst.noise_power(i)).abs();
        if activity > TRANSFER_TOL * (1.0 + inst.noise_power(i)) {
            return Err(DualityError::Transfer {
                check: "worst-case constraint activity",
                error: activity,
            });
        }
    }

    let (set, profile) = extract_beamformers(inst, &design)?;
    let worst_case_margins: Vec<f64> = (0..inst.num_users())
        .map(|i| worst_case_margin(inst, &set.w, i, inst.sinr_target(i)))
        .collect();

    let condition1_verdict = probe_inner_uniqueness(inst, &cert, opts);

    Ok(DualityReport {
        primal_obj,
        dual_obj,
        rel_gap,
        rank_profile: profile.ratios,
        kkt,
        worst_case_margins,
        condition1_verdict,
    })
}
