//! Conic formulations of the robust downlink beamforming problem.
//!
//! This module turns a [`ProblemInstance`] into the optimization problems the
//! crate revolves around:
//!
//! * the worst-case power minimization in semidefinite relaxation form
//!   ([`build_wsp_sdr`]), whose per-user robust SINR constraints enter through
//!   the certificate matrices of [`build_psi`];
//! * its explicitly constructed dual ([`build_dual_sdp`]), written in terms of
//!   the slack map [`build_y`];
//! * the inner power minimization against fixed channel second moments
//!   ([`build_inner_sdp`]) and the variant whose second moments come from a
//!   dual certificate ([`build_fixed_certificate_inner`]);
//! * the per-user worst-case channel-error problem ([`build_error_sdr`]).
//!
//! Builders are pure functions of immutable inputs and may be called
//! concurrently. Every problem is lowered to a real standard-form conic
//! program through [`ComplexSdp`].

mod model;
mod programs;
mod types;

pub use model::{ComplexSdp, HermVar, RowId, RowSense, ScalarVar};
pub use programs::{
    build_dual_sdp, build_error_sdr, build_fixed_certificate_inner, build_inner_sdp,
    build_wsp_sdr, DualSdp, ErrorSdr, InnerSdp, WspSdr,
};
pub use types::{
    DualCertificate, FormulationError, MaxMinSolution, RobustDesign, CORNER_TOL, MULTIPLIER_TOL,
    PSD_TOL, SCALAR_TOL,
};

use num_complex::Complex64;

use crate::complex::{CMat, HermMatrix};
use crate::instance::ProblemInstance;

/// Tall transfer matrix `[I; h̄_i^H]` of user `i`, mapping antenna space into
/// the homogenized error space: its adjoint sends the lifted error vector
/// `[e; 1]` to the perturbed channel `h̄_i + e`.
pub fn homogenizer(inst: &ProblemInstance, i: usize) -> CMat {
    let nt = inst.num_antennas();
    let h = inst.channel(i);
    let mut t = CMat::zeros(nt + 1, nt);
    for p in 0..nt {
        t.set(p, p, Complex64::new(1.0, 0.0));
        t.set(nt, p, h.entries()[p].conj());
    }
    t
}

/// The covariance combination `W_i/γ_i − Σ_{k≠i} W_k` seen by user `i`: its
/// quadratic form at a channel `h`, minus the noise power, is nonnegative
/// exactly when the user meets its SINR target under `h`.
pub fn sinr_margin_matrix(inst: &ProblemInstance, w: &[HermMatrix], i: usize) -> HermMatrix {
    let nt = inst.num_antennas();
    assert_eq!(w.len(), inst.num_users(), "one covariance per user");
    let mut q = w[i].scale(1.0 / inst.sinr_target(i));
    for (k, wk) in w.iter().enumerate() {
        assert_eq!(wk.dim(), nt, "covariance dimension mismatch");
        if k != i {
            q = q.sub(wk);
        }
    }
    q
}

/// Robust-margin certificate matrix of user `i` for the design `(w, λ_i)`:
///
/// `U_i (W_i/γ_i − Σ_{k≠i} W_k) U_i^H + blockdiag(λ_i I, −σ_i² − λ_i r_i²)`
///
/// with `U_i` the [`homogenizer`]. Positive semidefiniteness of the result
/// certifies that the SINR constraint of user `i` holds for every channel in
/// its uncertainty ball of radius `r_i`. The map is affine in `(w, λ_i)`.
pub fn build_psi(
    inst: &ProblemInstance,
    w: &[HermMatrix],
    i: usize,
    lambda_i: f64,
) -> HermMatrix {
    let nt = inst.num_antennas();
    let q = sinr_margin_matrix(inst, w, i);
    let lifted = q.congruence(&homogenizer(inst, i));
    let r = inst.radius(i);
    let mut diag = vec![lambda_i; nt + 1];
    diag[nt] = -inst.noise_power(i) - lambda_i * r * r;
    lifted.add(&HermMatrix::from_diag(&diag))
}

/// Dual slack matrix of user `i` for certificate matrices `a`:
///
/// `I − (1/γ_i) Ũ_i A_i Ũ_i^H + Σ_{k≠i} Ũ_k A_k Ũ_k^H`
///
/// where `Ũ_k = [I h̄_k]` is the adjoint of the [`homogenizer`]. Positive
/// semidefiniteness of every `Y_i` is the dual feasibility condition paired
/// with the transmit covariances.
pub fn build_y(inst: &ProblemInstance, a: &[HermMatrix], i: usize) -> HermMatrix {
    let nt = inst.num_antennas();
    assert_eq!(a.len(), inst.num_users(), "one dual matrix per user");
    let mut y = HermMatrix::identity(nt);
    for (k, ak) in a.iter().enumerate() {
        assert_eq!(ak.dim(), nt + 1, "dual matrices live on the lifted space");
        let wide = homogenizer(inst, k).adjoint();
        let pushed = ak.congruence(&wide);
        let scale = if k == i {
            -1.0 / inst.sinr_target(i)
        } else {
            1.0
        };
        y = y.add(&pushed.scale(scale));
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::ComplexVector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// One user, one antenna, unit channel and target: every matrix map
    /// collapses to a 2x2 the test can write down symbolically.
    fn scalar_instance(noise: f64, radius: f64, gamma: f64) -> ProblemInstance {
        ProblemInstance::new(
            vec![ComplexVector::from_real(&[1.0])],
            vec![radius],
            vec![noise],
            vec![gamma],
        )
        .expect("valid scalar instance")
    }

    /// Deterministic pseudo-random Hermitian matrices for property checks.
    fn seeded_herm(n: usize, seed: u64) -> HermMatrix {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545f4914f6cdd1d) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut data = vec![c(0.0, 0.0); n * n];
        for p in 0..n {
            data[p * n + p] = c(next(), 0.0);
            for q in (p + 1)..n {
                let z = c(next(), next());
                data[p * n + q] = z;
                data[q * n + p] = z.conj();
            }
        }
        HermMatrix::new(n, data)
    }

    #[test]
    fn scalar_certificate_matches_symbolic_expansion() {
        // W = (p), multiplier l: expect [[p+l, p], [p, p - 0.1 - 0.01 l]]
        let inst = scalar_instance(0.1, 0.1, 1.0);
        let p = 0.37;
        let l = 0.8;
        let psi = build_psi(&inst, &[HermMatrix::from_diag(&[p])], 0, l);
        assert_eq!(psi.dim(), 2);
        assert!((psi.get(0, 0).re - (p + l)).abs() < 1e-14);
        assert!((psi.get(0, 1).re - p).abs() < 1e-14);
        assert!(psi.get(0, 1).im.abs() < 1e-14);
        assert!((psi.get(1, 1).re - (p - 0.1 - 0.01 * l)).abs() < 1e-14);
    }

    #[test]
    fn zero_design_certificate_is_indefinite() {
        // all-zero covariances leave blockdiag(0, -sigma^2): a zero design
        // cannot serve anyone.
        let inst = scalar_instance(0.1, 0.1, 1.0);
        let psi = build_psi(&inst, &[HermMatrix::zeros(1)], 0, 0.0);
        assert!((psi.min_eig() + 0.1).abs() < 1e-12);
    }

    #[test]
    fn certificate_map_is_affine_in_design_and_multiplier() {
        let h1 = ComplexVector::new(vec![c(0.6, -0.2), c(0.1, 0.9), c(-0.3, 0.4)]);
        let h2 = ComplexVector::new(vec![c(-0.5, 0.0), c(0.8, 0.1), c(0.2, -0.7)]);
        let inst = ProblemInstance::new(
            vec![h1, h2],
            vec![0.2, 0.15],
            vec![0.1, 0.2],
            vec![1.5, 2.0],
        )
        .unwrap();
        let wa: Vec<HermMatrix> = (0..2).map(|k| seeded_herm(3, 11 + k)).collect();
        let wb: Vec<HermMatrix> = (0..2).map(|k| seeded_herm(3, 29 + k)).collect();
        let (la, lb) = (0.7, 0.2);
        let t = 0.3;
        for i in 0..2 {
            let blended: Vec<HermMatrix> = wa
                .iter()
                .zip(&wb)
                .map(|(a, b)| a.scale(t).add(&b.scale(1.0 - t)))
                .collect();
            let direct = build_psi(&inst, &blended, i, t * la + (1.0 - t) * lb);
            let mixed = build_psi(&inst, &wa, i, la)
                .scale(t)
                .add(&build_psi(&inst, &wb, i, lb).scale(1.0 - t));
            assert!(
                direct.sub(&mixed).norm_fro() < 1e-12,
                "certificate map must be affine (user {i})"
            );
        }
    }

    #[test]
    fn slack_map_of_zero_certificates_is_identity() {
        let inst = scalar_instance(0.1, 0.1, 1.0);
        let y = build_y(&inst, &[HermMatrix::zeros(2)], 0);
        assert!(y.sub(&HermMatrix::identity(1)).norm_fro() < 1e-15);
    }

    #[test]
    fn scalar_slack_matches_symbolic_expansion() {
        // A = [[a, z], [conj z, d]] against unit channel and target:
        // Y = 1 - (a + z + conj z + d).
        let inst = scalar_instance(0.1, 0.1, 1.0);
        let (a, d) = (0.3, 0.5);
        let z = c(0.1, 0.2);
        let am = HermMatrix::new(2, vec![c(a, 0.0), z, z.conj(), c(d, 0.0)]);
        let y = build_y(&inst, &[am], 0);
        let want = 1.0 - (a + 2.0 * z.re + d);
        assert!((y.get(0, 0).re - want).abs() < 1e-14);
    }

    #[test]
    fn slack_map_stays_hermitian_on_random_inputs() {
        let h1 = ComplexVector::new(vec![c(0.3, 0.4), c(-0.2, 0.6)]);
        let h2 = ComplexVector::new(vec![c(0.9, -0.1), c(0.0, 0.5)]);
        let inst = ProblemInstance::new(
            vec![h1, h2],
            vec![0.1, 0.3],
            vec![0.1, 0.1],
            vec![2.0, 0.5],
        )
        .unwrap();
        for seed in 0..5 {
            let a: Vec<HermMatrix> = (0..2).map(|k| seeded_herm(3, 100 * seed + k)).collect();
            for i in 0..2 {
                let y = build_y(&inst, &a, i);
                // HermMatrix::new debug-asserts Hermitian symmetry; also check
                // the diagonal is real.
                for p in 0..y.dim() {
                    assert!(y.get(p, p).im.abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn margin_matrix_signs_the_sinr_constraint() {
        // Two users, orthogonal channels: serving power helps its own user
        // and hurts the other.
        let inst = ProblemInstance::new(
            vec![
                ComplexVector::from_real(&[1.0, 0.0]),
                ComplexVector::from_real(&[0.0, 1.0]),
            ],
            vec![0.0, 0.0],
            vec![0.1, 0.1],
            vec![1.0, 1.0],
        )
        .unwrap();
        let w: Vec<HermMatrix> = (0..2).map(|i| inst.channel_outer(i).scale(0.2)).collect();
        for i in 0..2 {
            let q = sinr_margin_matrix(&inst, &w, i);
            let margin = q.quad_form(inst.channel(i)) - inst.noise_power(i);
            assert!((margin - 0.1).abs() < 1e-14, "user {i} margin {margin}");
        }
    }
}
