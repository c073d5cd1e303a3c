//! Ground truth independent of the conic pipeline.
//!
//! Everything here answers questions about *concrete* designs by direct
//! computation — exact worst-case channel errors over the uncertainty ball,
//! certificate search for a single robust constraint, achieved worst-case
//! SINR of given beamformers, and rank-one extraction from covariances —
//! so results from the interior-point stack can be checked against an
//! implementation that shares none of its machinery.

mod extract;
mod trs;

pub use extract::{
    extract_beamformers, BeamformerSet, DesignFile, DesignFileError, OracleError, RankProfile,
    RANK_RATIO_TOL,
};
pub use trs::{trs_min, TrsResult};

use crate::complex::{ComplexVector, HermMatrix};
use crate::formulations::{build_psi, sinr_margin_matrix};
use crate::instance::{evaluate_sinr, ProblemInstance};

/// How close to zero the certified minimum eigenvalue may sit, relative to
/// the magnitude of the certificate matrix.
const CERT_EIG_TOL: f64 = 1e-9;

/// Searches for a multiplier `lambda >= 0` certifying that design `w` keeps
/// user `i`'s SINR constraint over the entire uncertainty ball, returning it
/// if one exists.
///
/// The certificate matrix is affine in the multiplier, so its minimum
/// eigenvalue is concave and golden-section search finds the global maximum;
/// the constraint is robustly feasible exactly when that maximum is
/// nonnegative. The search bracket comes from the certificate's corner
/// entry, which caps any workable multiplier at
/// `(h^H Q h - sigma^2) / r^2`.
pub fn slemma_check(inst: &ProblemInstance, w: &[HermMatrix], i: usize) -> Option<f64> {
    let r = inst.radius(i);
    assert!(r > 0.0, "certificate search needs an uncertainty ball");
    let q = sinr_margin_matrix(inst, w, i);
    let corner_margin = q.quad_form(inst.channel(i)) - inst.noise_power(i);
    let cap = (corner_margin / (r * r)).max(0.0) + 1.0;

    let g = |lambda: f64| build_psi(inst, w, i, lambda).min_eig();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, cap);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..90 {
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = g(x1);
        }
    }
    let lambda = 0.5 * (lo + hi);
    let psi = build_psi(inst, w, i, lambda);
    let scale = 1.0 + psi.max_abs();
    if psi.min_eig() >= -CERT_EIG_TOL * scale {
        Some(lambda.max(0.0))
    } else {
        None
    }
}

/// Worst-case margin of user `i`'s SINR constraint at target `gamma`, for
/// concrete beamformers: the ball minimum of
/// `|h^H w_i|^2 / gamma - sum_{k != i} |h^H w_k|^2` minus the noise power.
/// Nonnegative exactly when the constraint survives every admissible error.
pub fn worst_case_margin(
    inst: &ProblemInstance,
    beamformers: &[ComplexVector],
    i: usize,
    gamma: f64,
) -> f64 {
    let q = beamformers
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != i)
        .fold(beamformers[i].outer().scale(1.0 / gamma), |acc, (_, wk)| {
            acc.sub(&wk.outer())
        });
    let r = inst.radius(i);
    let worst = if r > 0.0 {
        trs_min(&q, inst.channel(i), r).value
    } else {
        q.quad_form(inst.channel(i))
    };
    worst - inst.noise_power(i)
}

/// Largest SINR user `i` is guaranteed under `set` for every channel in its
/// uncertainty ball.
///
/// The margin is monotone in the tentative target, so the level is found by
/// bisection over `[1e-6, 1e6]`. The bisection runs in log scale: 30
/// halvings of the 12-decade bracket resolve the target to a relative
/// precision near 3e-8, where linear halving would stall at 1e-3 absolute.
/// The certified-feasible lower end is returned.
pub fn worst_case_sinr(inst: &ProblemInstance, set: &BeamformerSet, i: usize) -> f64 {
    if set.w[i].norm() == 0.0 {
        return 0.0;
    }
    if inst.radius(i) == 0.0 {
        return evaluate_sinr(inst.channel(i), &set.w, i, inst.noise_power(i));
    }
    let feasible = |gamma: f64| worst_case_margin(inst, &set.w, i, gamma) >= 0.0;
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    if !feasible(lo) {
        return 0.0;
    }
    if feasible(hi) {
        return hi;
    }
    for _ in 0..30 {
        let mid = (lo * hi).sqrt();
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_instance() -> ProblemInstance {
        ProblemInstance::new(
            vec![ComplexVector::from_real(&[1.0])],
            vec![0.1],
            vec![0.1],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn certificate_found_above_the_power_threshold() {
        let inst = scalar_instance();
        let w = vec![HermMatrix::from_diag(&[0.1235])];
        let lambda = slemma_check(&inst, &w, 0).expect("robustly feasible design");
        assert!(lambda >= 0.0);
        let psi = build_psi(&inst, &w, 0, lambda);
        assert!(psi.min_eig() >= -1e-9 * (1.0 + psi.max_abs()));
    }

    #[test]
    fn no_certificate_below_the_power_threshold() {
        let inst = scalar_instance();
        // worst case of 0.12 |1 + e|^2 over |e| <= 0.1 is 0.12 * 0.81 < 0.1
        let w = vec![HermMatrix::from_diag(&[0.12])];
        assert!(slemma_check(&inst, &w, 0).is_none());
        let q = sinr_margin_matrix(&inst, &w, 0);
        let worst = trs_min(&q, inst.channel(0), 0.1);
        assert!((worst.value - 0.0972).abs() < 1e-12);
    }

    #[test]
    fn zero_design_has_no_certificate() {
        let inst = scalar_instance();
        let w = vec![HermMatrix::zeros(1)];
        assert!(slemma_check(&inst, &w, 0).is_none());
    }

    /// The multiplier search and the exact ball minimum are two unrelated
    /// routes to the same feasibility question; they must never disagree.
    #[test]
    fn certificate_search_agrees_with_exact_worst_case() {
        let mut state = 0x5eed_cafe_u64;
        let mut next = move || {
            // xorshift64*
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state.wrapping_mul(0x2545_f491_4f6c_dd1d) >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0usize;
        for _ in 0..125 {
            let nt = 1 + (next() * 3.0) as usize % 3;
            let k = 1 + (next() * 2.0) as usize % 2;
            let channels: Vec<ComplexVector> = (0..k)
                .map(|_| {
                    ComplexVector::new(
                        (0..nt).map(|_| c(next() * 2.0 - 1.0, next() * 2.0 - 1.0)).collect(),
                    )
                })
                .collect();
            let radii: Vec<f64> = (0..k).map(|_| 0.05 + 0.35 * next()).collect();
            let noise: Vec<f64> = (0..k).map(|_| 0.05 + 0.25 * next()).collect();
            let targets: Vec<f64> = (0..k).map(|_| 0.5 + 3.5 * next()).collect();
            let inst = ProblemInstance::new(channels, radii, noise, targets).unwrap();
            let w: Vec<HermMatrix> = (0..k)
                .map(|_| {
                    let v = ComplexVector::new(
                        (0..nt).map(|_| c(next() * 2.0 - 1.0, next() * 2.0 - 1.0)).collect(),
                    );
                    v.outer().scale(0.1 + next())
                })
                .collect();
            for i in 0..k {
                let q = sinr_margin_matrix(&inst, &w, i);
                let exact = trs_min(&q, inst.channel(i), inst.radius(i)).value;
                let robust = exact >= inst.noise_power(i) - 1e-9;
                let cert = slemma_check(&inst, &w, i).is_some();
                assert_eq!(
                    cert, robust,
                    "disagreement: exact worst case {exact}, noise {}",
                    inst.noise_power(i)
                );
                checked += 1;
            }
        }
        assert!(checked >= 125);
    }

    #[test]
    fn single_user_worst_case_sinr_matches_closed_form() {
        let inst = scalar_instance();
        let set = BeamformerSet::new(vec![ComplexVector::from_real(&[0.7])]);
        let wcs = worst_case_sinr(&inst, &set, 0);
        let expect = 8.1 * 0.49; // |0.9|^2 * |w|^2 / sigma^2
        assert!(
            (wcs - expect).abs() < 1e-6 * expect,
            "worst-case SINR {wcs} vs {expect}"
        );
    }

    #[test]
    fn exact_channel_reduces_to_point_sinr() {
        let channels = vec![
            ComplexVector::new(vec![c(1.0, 0.0), c(0.3, 0.4)]),
            ComplexVector::new(vec![c(0.2, -0.5), c(0.9, 0.0)]),
        ];
        let inst = ProblemInstance::new(channels, vec![0.0, 0.0], vec![0.1, 0.05], vec![1.5, 1.0])
            .unwrap();
        let set = BeamformerSet::new(vec![
            ComplexVector::new(vec![c(0.6, 0.1), c(-0.2, 0.3)]),
            ComplexVector::new(vec![c(0.1, -0.4), c(0.8, 0.2)]),
        ]);
        for i in 0..2 {
            let wcs = worst_case_sinr(&inst, &set, i);
            let point = evaluate_sinr(inst.channel(i), &set.w, i, inst.noise_power(i));
            assert!((wcs - point).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_beamformer_scores_zero() {
        let inst = scalar_instance();
        let set = BeamformerSet::new(vec![ComplexVector::zeros(1)]);
        assert_eq!(worst_case_sinr(&inst, &set, 0), 0.0);
    }
}
