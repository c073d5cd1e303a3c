//! Exact minimization of a Hermitian quadratic over a norm ball around the
//! channel estimate — the ground truth every relaxation-based result is
//! checked against.
//!
//! The problem `min f(e) = (h̄+e)^H Q (h̄+e)` over `‖e‖ ≤ r` is solved in the
//! eigenbasis of `Q`: with `b` the coordinates of `h̄` and `d_j` the
//! eigenvalues, the minimizer satisfies `(d_j + ν) y_j = ν b_j` for a
//! multiplier `ν ≥ max(0, −λ_min(Q))`, and the ball equation
//! `‖y − b‖ = r` becomes a one-dimensional secular equation in `ν` solved by
//! safeguarded Newton. When the estimate has no component in the bottom
//! eigenspace the secular equation can fail to reach the ball; the remaining
//! budget then goes into that eigenspace directly (the hard case). Working in
//! the complex field directly is fine because the quadratic is real-valued.

use num_complex::Complex64;

use crate::complex::{herm_eig, ComplexVector, HermMatrix};

/// Tolerance on the ball equation `‖e(ν)‖ = r` for the multiplier search.
const NORM_EQ_TOL: f64 = 1e-12;
/// The hard case fires when the gradient component in the bottom eigenspace
/// is below this fraction of the problem scale.
const HARD_CASE_TOL: f64 = 1e-10;

/// Result of minimizing a quadratic over the uncertainty ball.
#[derive(Debug, Clone)]
pub struct TrsResult {
    /// Global minimum of the quadratic over the ball.
    pub value: f64,
    /// A minimizing error vector, `‖argmin‖ ≤ r`.
    pub argmin: ComplexVector,
    /// Ball-constraint multiplier `ν ≥ 0`; zero for interior minimizers.
    pub multiplier: f64,
    /// Whether the budget had to be injected into the bottom eigenspace.
    pub hard_case: bool,
}

/// Minimizes `(h̄+e)^H Q (h̄+e)` over `‖e‖ ≤ r` globally. `Q` may be
/// indefinite; the ball keeps the problem well-posed.
pub fn trs_min(q: &HermMatrix, hbar: &ComplexVector, r: f64) -> TrsResult {
    let n = q.dim();
    assert_eq!(hbar.dim(), n, "center dimension mismatch");
    assert!(r > 0.0 && r.is_finite(), "ball radius must be positive");

    let eig = herm_eig(q);
    let d = &eig.eigenvalues;
    let b = eig.eigenvectors.adjoint().matvec(hbar);
    let d_min = d[0];
    let d_max_abs = d.iter().fold(0.0f64, |m, &x| m.max(x.abs()));

    // secular equation: phi(nu)^2 = sum_j d_j^2 |b_j|^2 / (d_j + nu)^2
    let c: Vec<f64> = (0..n)
        .map(|j| d[j] * d[j] * b.entries()[j].norm_sqr())
        .collect();
    let phi_sq_over = |nu: f64, skip: &dyn Fn(usize) -> bool| -> f64 {
        (0..n)
            .map(|j| {
                if c[j] == 0.0 || skip(j) {
                    0.0
                } else {
                    let den = d[j] + nu;
                    c[j] / (den * den)
                }
            })
            .sum()
    };
    let phi = |nu: f64| phi_sq_over(nu, &|_| false).sqrt();

    // interior minimizer: with Q positive semidefinite, drive every energetic
    // coordinate to zero and leave the flat ones at the center
    if d_min >= 0.0 && phi(0.0) <= r {
        let coords: Vec<Complex64> = (0..n)
            .map(|j| {
                if d[j] > 0.0 {
                    -b.entries()[j]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        return assemble(q, hbar, &eig.eigenvectors, coords, 0.0, false);
    }

    let nu_lo = (-d_min).max(0.0);
    if d_min < 0.0 {
        // bottom eigenspace and the gradient mass it carries
        let ctol = 1e-9 * (1.0 + d_max_abs);
        let in_bottom: Vec<bool> = (0..n).map(|j| d[j] <= d_min + ctol).collect();
        let proj: f64 = (0..n)
            .filter(|&j| in_bottom[j])
            .map(|j| b.entries()[j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        let scale = 1.0 + q.norm_fro() * hbar.norm();
        if d_min.abs() * proj <= HARD_CASE_TOL * scale {
            // the secular equation may stall below the ball radius at nu_lo;
            // check, and if so spend the leftover budget in the bottom space
            let partial = phi_sq_over(nu_lo, &|j| in_bottom[j]);
            if partial.sqrt() <= r {
                let tau = (r * r - partial).max(0.0).sqrt();
                let fill = (0..n).find(|&j| in_bottom[j]).expect("bottom space nonempty");
                let coords: Vec<Complex64> = (0..n)
                    .map(|j| {
                        if j == fill {
                            Complex64::new(tau, 0.0)
                        } else if in_bottom[j] {
                            Complex64::new(0.0, 0.0)
                        } else {
                            -d[j] * b.entries()[j] / (d[j] + nu_lo)
                        }
                    })
                    .collect();
                return assemble(q, hbar, &eig.eigenvectors, coords, nu_lo, true);
            }
        }
    }

    // easy case: phi decreases from above r to zero on (nu_lo, inf); Newton on
    // the well-conditioned reciprocal form 1/phi - 1/r, bisection-safeguarded
    let mut lo = nu_lo;
    let mut hi = nu_lo + d_max_abs * b.norm() / r + 1.0;
    let mut nu = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = phi(nu);
        if (f - r).abs() <= NORM_EQ_TOL * (1.0 + r) || hi - lo <= f64::EPSILON * (1.0 + hi) {
            break;
        }
        if f > r {
            lo = nu;
        } else {
            hi = nu;
        }
        let dphi_sq: f64 = (0..n)
            .map(|j| {
                if c[j] == 0.0 {
                    0.0
                } else {
                    let den = d[j] + nu;
                    -2.0 * c[j] / (den * den * den)
                }
            })
            .sum();
        let psi = 1.0 / f - 1.0 / r;
        let dpsi = -dphi_sq / (2.0 * f * f * f);
        let next = nu - psi / dpsi;
        nu = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    let coords: Vec<Complex64> = (0..n)
        .map(|j| -d[j] * b.entries()[j] / (d[j] + nu))
        .collect();
    assemble(q, hbar, &eig.eigenvectors, coords, nu, false)
}

fn assemble(
    q: &HermMatrix,
    hbar: &ComplexVector,
    vectors: &crate::complex::CMat,
    coords: Vec<Complex64>,
    multiplier: f64,
    hard_case: bool,
) -> TrsResult {
    let argmin = vectors.matvec(&ComplexVector::new(coords));
    let value = q.quad_form(&hbar.add(&argmin));
    TrsResult {
        value,
        argmin,
        multiplier: multiplier.max(0.0),
        hard_case,
    }
}
