//! Gauss-Newton refinement of a recovered primal-dual pair on the
//! optimal-rank manifold.
//!
//! The interior-point method stops near the f64 duality-gap floor, but two
//! degeneracies of the robust design optimum leave parts of its iterate
//! pinned only to square-root-of-gap brackets: the worst-case error sits on
//! its ball boundary, so the certificate matrix's first-order sensitivity to
//! the uncertainty multiplier vanishes there, and the objective fixes only
//! the noise-weighted sum of the certificate weights, not each weight.
//! First-order products measured at raw readouts therefore plateau orders of
//! magnitude above the gap no matter how tight the solve.
//!
//! At a generic optimum the solution has known shape: every transmit
//! covariance is rank one, every certificate block is a rank-one lift of its
//! worst-case channel, and every ball constraint binds. Parametrized by
//! beamformers, certificate weights, worst-case errors, and multipliers, the
//! complete first-order system becomes square up to beamformer phase, and
//! Newton iteration started from the solver's iterate converges to working
//! precision in a handful of steps. [`refine`] implements exactly that and
//! reassembles the pair; callers keep the raw readouts whenever the shape
//! assumptions fail or the iteration does not reach [`ADOPT_TOL`].

use num_complex::Complex64;

use crate::complex::{herm_eig, ComplexVector, HermMatrix};
use crate::formulations::{sinr_margin_matrix, DualCertificate, RobustDesign, CORNER_TOL};
use crate::instance::ProblemInstance;
use crate::oracle::trs_min;

/// Residual level, relative to `1 + objective`, the refined pair must reach
/// to replace the raw readouts.
const ADOPT_TOL: f64 = 1e-9;
/// Gauss-Newton iteration cap; quadratic convergence needs only a few.
const MAX_STEPS: usize = 12;
/// Relative cutoff separating the gauge null space (beamformer phases) from
/// the identifiable eigenspace of the normal matrix.
const NULL_CUT: f64 = 1e-12;
/// Ball multipliers at or below this signal inactive uncertainty, a
/// degenerate shape the reduced system does not model.
const ACTIVE_TOL: f64 = 1e-8;

/// Reduced unknowns: beamformers, certificate weights, worst-case errors,
/// and ball multipliers. Errors and multipliers stay zero for exact-channel
/// users.
struct Point {
    w: Vec<ComplexVector>,
    mu: Vec<f64>,
    e: Vec<ComplexVector>,
    nu: Vec<f64>,
}

struct System<'a> {
    inst: &'a ProblemInstance,
    ball: Vec<usize>,
}

fn push_parts(out: &mut Vec<f64>, v: &ComplexVector) {
    for z in v.entries() {
        out.push(z.re);
        out.push(z.im);
    }
}

fn read_vector(xs: &[f64], off: &mut usize, n: usize) -> ComplexVector {
    let v = ComplexVector::new(
        (0..n)
            .map(|j| Complex64::new(xs[*off + 2 * j], xs[*off + 2 * j + 1]))
            .collect(),
    );
    *off += 2 * n;
    v
}

fn inf_norm(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, &v| m.max(v.abs()))
}

impl<'a> System<'a> {
    fn new(inst: &'a ProblemInstance) -> Self {
        let ball = (0..inst.num_users())
            .filter(|&i| inst.radius(i) > 0.0)
            .collect();
        System { inst, ball }
    }

    fn vars(&self) -> usize {
        let nt = self.inst.num_antennas();
        let k = self.inst.num_users();
        2 * nt * k + k + self.ball.len() * (2 * nt + 1)
    }

    fn pack(&self, p: &Point) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.vars());
        for w in &p.w {
            push_parts(&mut x, w);
        }
        x.extend_from_slice(&p.mu);
        for &b in &self.ball {
            push_parts(&mut x, &p.e[b]);
            x.push(p.nu[b]);
        }
        x
    }

    fn unpack(&self, x: &[f64]) -> Point {
        let nt = self.inst.num_antennas();
        let k = self.inst.num_users();
        let mut off = 0;
        let w = (0..k).map(|_| read_vector(x, &mut off, nt)).collect();
        let mu = x[off..off + k].to_vec();
        off += k;
        let mut e = vec![ComplexVector::zeros(nt); k];
        let mut nu = vec![0.0; k];
        for &b in &self.ball {
            e[b] = read_vector(x, &mut off, nt);
            nu[b] = x[off];
            off += 1;
        }
        Point { w, mu, e, nu }
    }

    /// Complete first-order system at the generic optimal ranks. Zero means:
    /// every beamformer lies in the null space of its dual slack, every
    /// worst-case error is a boundary stationary point of its user's margin
    /// quadratic, and every worst-case SINR constraint binds.
    fn residual(&self, p: &Point) -> Vec<f64> {
        let inst = self.inst;
        let k = inst.num_users();
        let wmat: Vec<HermMatrix> = p.w.iter().map(ComplexVector::outer).collect();
        let q: Vec<HermMatrix> = (0..k).map(|i| sinr_margin_matrix(inst, &wmat, i)).collect();
        let g: Vec<ComplexVector> = (0..k).map(|i| inst.channel(i).add(&p.e[i])).collect();
        let mut r = Vec::with_capacity(self.vars());
        for i in 0..k {
            // dual slack against the beamformer:
            // (I − (μ_i/γ_i) g_i g_iᴴ + Σ_{j≠i} μ_j g_j g_jᴴ) w_i
            let mut yw = p.w[i].clone();
            for j in 0..k {
                let s = if j == i {
                    1.0 / inst.sinr_target(i)
                } else {
                    -1.0
                };
                let coef = Complex64::new(-s * p.mu[j], 0.0);
                yw = yw.add(&g[j].scale(coef * g[j].inner(&p.w[i])));
            }
            push_parts(&mut r, &yw);
        }
        for &b in &self.ball {
            // worst-case error stationarity: Q_b (h̄_b + e_b) + ν_b e_b = 0
            let stat = q[b]
                .matvec(&g[b])
                .add(&p.e[b].scale(Complex64::new(p.nu[b], 0.0)));
            push_parts(&mut r, &stat);
            let rad = inst.radius(b);
            let nsq: f64 = p.e[b].entries().iter().map(|z| z.norm_sqr()).sum();
            r.push(nsq - rad * rad);
        }
        for i in 0..k {
            r.push(q[i].quad_form(&g[i]) - inst.noise_power(i));
        }
        r
    }
}

/// Damped Gauss-Newton with a central-difference Jacobian; the normal matrix
/// is inverted on its identifiable eigenspace so the phase gauge stays put.
fn gauss_newton(sys: &System, x0: Vec<f64>, scale: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut x = x0;
    let mut r = sys.residual(&sys.unpack(&x));
    let mut best_norm = inf_norm(&r);
    let mut best = x.clone();
    for _ in 0..MAX_STEPS {
        if best_norm <= 1e-13 * scale {
            break;
        }
        let mut jcols: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut xs = x.clone();
            xs[j] = x[j] + h;
            let rp = sys.residual(&sys.unpack(&xs));
            xs[j] = x[j] - h;
            let rm = sys.residual(&sys.unpack(&xs));
            jcols.push(
                rp.iter()
                    .zip(&rm)
                    .map(|(a, b)| (a - b) / (2.0 * h))
                    .collect(),
            );
        }
        let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
        for p in 0..n {
            for q in p..n {
                let v: f64 = jcols[p].iter().zip(&jcols[q]).map(|(a, b)| a * b).sum();
                gram[p * n + q] = Complex64::new(v, 0.0);
                gram[q * n + p] = Complex64::new(v, 0.0);
            }
        }
        let jtr: Vec<f64> = jcols
            .iter()
            .map(|c| c.iter().zip(&r).map(|(a, b)| a * b).sum())
            .collect();
        let eig = herm_eig(&HermMatrix::new(n, gram));
        let top = eig.eigenvalues.iter().fold(0.0_f64, |m, &d| m.max(d));
        if top <= 0.0 {
            break;
        }
        let mut step = vec![0.0; n];
        for (j, &d) in eig.eigenvalues.iter().enumerate() {
            if d > NULL_CUT * top {
                let u = eig.eigenvector(j);
                let coef: f64 = u
                    .entries()
                    .iter()
                    .zip(&jtr)
                    .map(|(uj, gj)| uj.re * gj)
                    .sum::<f64>()
                    / d;
                for (sv, uj) in step.iter_mut().zip(u.entries()) {
                    *sv -= uj.re * coef;
                }
            }
        }
        let mut improved = false;
        let mut t = 1.0;
        for _ in 0..5 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xv, sv)| xv + t * sv).collect();
            let rt = sys.residual(&sys.unpack(&trial));
            let rt_norm = inf_norm(&rt);
            if rt_norm < best_norm {
                x = trial;
                r = rt;
                best_norm = rt_norm;
                best = x.clone();
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (best, best_norm)
}

/// Refines a recovered pair to working-precision first-order residuals.
/// `None` means the pair does not match the generic optimal shape (zero
/// covariance, vanishing certificate weight, or inactive uncertainty ball)
/// or the iteration stalled; callers then keep the raw readouts.
pub(super) fn refine(
    inst: &ProblemInstance,
    design: &RobustDesign,
    cert: &DualCertificate,
) -> Option<(RobustDesign, DualCertificate)> {
    let nt = inst.num_antennas();
    let k = inst.num_users();
    let mut w = Vec::with_capacity(k);
    for wi in &design.w {
        let eig = herm_eig(wi);
        let top = eig.eigenvalues[nt - 1];
        if top <= 0.0 {
            return None;
        }
        w.push(eig.eigenvector(nt - 1).scale(Complex64::new(top.sqrt(), 0.0)));
    }
    let mu: Vec<f64> = (0..k).map(|i| cert.corner(i)).collect();
    if mu.iter().any(|&m| m <= CORNER_TOL) {
        return None;
    }
    let mut e = vec![ComplexVector::zeros(nt); k];
    let mut nu = vec![0.0; k];
    for i in 0..k {
        let r = inst.radius(i);
        if r > 0.0 {
            let worst = trs_min(&sinr_margin_matrix(inst, &design.w, i), inst.channel(i), r);
            if worst.multiplier <= ACTIVE_TOL {
                return None;
            }
            e[i] = worst.argmin;
            nu[i] = worst.multiplier;
        }
    }

    let sys = System::new(inst);
    let scale = 1.0 + design.objective.abs();
    let x0 = sys.pack(&Point { w, mu, e, nu });
    let (x, norm) = gauss_newton(&sys, x0, scale);
    if norm > ADOPT_TOL * scale {
        return None;
    }
    let p = sys.unpack(&x);
    if p.mu.iter().any(|&m| m <= CORNER_TOL) || sys.ball.iter().any(|&b| p.nu[b] <= 0.0) {
        return None;
    }

    let wmat: Vec<HermMatrix> = p.w.iter().map(ComplexVector::outer).collect();
    let mut lambda = design.lambda.clone();
    let mut a = Vec::with_capacity(k);
    for i in 0..k {
        if inst.radius(i) > 0.0 {
            lambda[i] = p.nu[i];
            let mut v = vec![Complex64::new(0.0, 0.0); nt + 1];
            v[..nt].copy_from_slice(p.e[i].entries());
            v[nt] = Complex64::new(1.0, 0.0);
            a.push(ComplexVector::new(v).outer().scale(p.mu[i]));
        } else {
            let mut corner = vec![0.0; nt + 1];
            corner[nt] = 1.0;
            a.push(HermMatrix::from_diag(&corner).scale(p.mu[i]));
        }
    }
    Some((
        RobustDesign::new(wmat, lambda),
        DualCertificate::new(inst, a),
    ))
}
