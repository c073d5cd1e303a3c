//! Rank-one beamformer extraction from covariance designs, with a
//! deterministic power-rescue fallback for covariances that are not
//! numerically rank one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{herm_eig, ComplexVector};
use crate::formulations::RobustDesign;
use crate::instance::ProblemInstance;

use super::worst_case_margin;

/// Threshold on the second-to-first eigenvalue ratio below which a covariance
/// is treated as rank one — an order above the solver's gap tolerance, so
/// numerical dust never misclassifies rank.
pub const RANK_RATIO_TOL: f64 = 1e-6;

/// Concrete per-user transmit vectors and their total power.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    /// One beamforming vector per user.
    pub w: Vec<ComplexVector>,
    /// Total transmit power, `sum_i ||w_i||^2`.
    pub power: f64,
}

impl BeamformerSet {
    pub fn new(w: Vec<ComplexVector>) -> Self {
        let power = w
            .iter()
            .map(|v| {
                let n = v.norm();
                n * n
            })
            .sum();
        BeamformerSet { w, power }
    }
}

/// JSON wire format for a set of beamformers, written by solves and read
/// back by the worst-case oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignFile {
    pub nt: usize,
    pub k: usize,
    /// `w[i][t]` is the `[re, im]` beamforming weight of user `i` at
    /// antenna `t`.
    pub w: Vec<Vec<[f64; 2]>>,
    /// Total transmit power `sum_i ||w_i||^2` of the stored vectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    /// Per-user second-to-first eigenvalue ratios of the covariances the
    /// vectors were extracted from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_profile: Option<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum DesignFileError {
    #[error("declared nt={nt} but user {user} has {got} beamformer weights")]
    NtMismatch { nt: usize, user: usize, got: usize },
    #[error("declared k={k} but found {got} beamformer rows")]
    KMismatch { k: usize, got: usize },
}

impl DesignFile {
    pub fn from_set(set: &BeamformerSet, profile: Option<&RankProfile>) -> Self {
        let nt = set.w.first().map_or(0, ComplexVector::dim);
        DesignFile {
            nt,
            k: set.w.len(),
            w: set
                .w
                .iter()
                .map(|v| v.entries().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            power: Some(set.power),
            rank_profile: profile.map(|p| p.ratios.clone()),
        }
    }

    /// Validates the declared shape and rebuilds the vectors; the power is
    /// recomputed rather than trusted.
    pub fn into_set(self) -> Result<BeamformerSet, DesignFileError> {
        if self.w.len() != self.k {
            return Err(DesignFileError::KMismatch {
                k: self.k,
                got: self.w.len(),
            });
        }
        for (user, row) in self.w.iter().enumerate() {
            if row.len() != self.nt {
                return Err(DesignFileError::NtMismatch {
                    nt: self.nt,
                    user,
                    got: row.len(),
                });
            }
        }
        let w = self
            .w
            .into_iter()
            .map(|row| {
                ComplexVector::new(row.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            })
            .collect();
        Ok(BeamformerSet::new(w))
    }
}

/// Eigenvalue diagnostics reported alongside extracted beamformers.
#[derive(Debug, Clone)]
pub struct RankProfile {
    /// Per-user ratio of the second-largest to the largest eigenvalue.
    pub ratios: Vec<f64>,
    /// Whether the power-rescue fallback had to fire.
    pub fallback_fired: bool,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "beamformer extraction failed: a truncated direction cannot reach its \
         target at any power (eigenvalue ratios {ratios:?})"
    )]
    ExtractionFailed { ratios: Vec<f64> },
}

/// Rotates a vector's global phase so its largest-magnitude entry is real and
/// nonnegative, fixing the phase freedom inherited from eigenvectors.
fn canonical_phase(v: &ComplexVector) -> ComplexVector {
    let mut best = 0usize;
    let mut mag = 0.0;
    for (p, z) in v.entries().iter().enumerate() {
        if z.norm() > mag {
            mag = z.norm();
            best = p;
        }
    }
    if mag == 0.0 {
        return v.clone();
    }
    v.scale(v.entries()[best].conj() / mag)
}

/// Turns a covariance design into per-user transmit vectors.
///
/// Each covariance is eigendecomposed; when the trailing eigenvalue ratio is
/// at most [`RANK_RATIO_TOL`] the dominant pair `sqrt(λ_1) u_1` is the
/// beamformer. Otherwise the dominant directions are kept and a single
/// uniform power factor `t ≥ 1` is bisected (40 iterations) until every
/// user's worst-case constraint holds again — the ball-worst signal scales
/// linearly in `t`, so this deterministic repair either succeeds or proves
/// the truncation hopeless, which is reported as an error carrying the
/// eigenvalue ratios.
pub fn extract_beamformers(
    inst: &ProblemInstance,
    design: &RobustDesign,
) -> Result<(BeamformerSet, RankProfile), OracleError> {
    let k = inst.num_users();
    assert_eq!(design.w.len(), k, "one covariance per user");
    let mut directions = Vec::with_capacity(k);
    let mut ratios = Vec::with_capacity(k);
    for wm in &design.w {
        let n = wm.dim();
        let eig = herm_eig(wm);
        let top = eig.eigenvalues[n - 1];
        if top <= 0.0 {
            directions.push(ComplexVector::zeros(n));
            ratios.push(0.0);
            continue;
        }
        let second = if n >= 2 {
            eig.eigenvalues[n - 2].max(0.0)
        } else {
            0.0
        };
        ratios.push(second / top);
        let u = canonical_phase(&eig.eigenvector(n - 1));
        directions.push(u.scale(Complex64::new(top.sqrt(), 0.0)));
    }

    if ratios.iter().all(|&rho| rho <= RANK_RATIO_TOL) {
        return Ok((
            BeamformerSet::new(directions),
            RankProfile {
                ratios,
                fallback_fired: false,
            },
        ));
    }

    // Ball-worst signal level per user at unit power factor; scaling every
    // beamformer by sqrt(t) scales these linearly.
    let floors: Vec<f64> = (0..k)
        .map(|i| {
            worst_case_margin(inst, &directions, i, inst.sinr_target(i)) + inst.noise_power(i)
        })
        .collect();
    if floors.iter().any(|&f| f <= 0.0) {
        return Err(OracleError::ExtractionFailed { ratios });
    }
    let feasible = |t: f64| (0..k).all(|i| t * floors[i] >= inst.noise_power(i));
    let mut hi = 1.0;
    if !feasible(hi) {
        let mut lo = 1.0;
        while !feasible(hi) {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(OracleError::ExtractionFailed { ratios });
            }
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let root_t = Complex64::new(hi.sqrt(), 0.0);
    let scaled = directions.iter().map(|d| d.scale(root_t)).collect();
    Ok((
        BeamformerSet::new(scaled),
        RankProfile {
            ratios,
            fallback_fired: true,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::HermMatrix;
    use crate::formulations::build_wsp_sdr;
    use crate::oracle::worst_case_sinr;
    use crate::solver::{SolveOptions, SolveStatus};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_user_instance() -> ProblemInstance {
        ProblemInstance::new(
            vec![ComplexVector::from_real(&[1.0, 0.0])],
            vec![0.1],
            vec![0.1],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn exact_rank_one_covariance_returns_its_direction() {
        let v = ComplexVector::new(vec![c(0.5, 0.2), c(-0.3, 0.7), c(0.1, -0.4)]);
        let inst = ProblemInstance::new(
            vec![ComplexVector::from_real(&[1.0, 0.0, 0.0])],
            vec![0.1],
            vec![0.1],
            vec![1.0],
        )
        .unwrap();
        let design = RobustDesign::new(vec![v.outer()], vec![0.0]);
        let (set, profile) = extract_beamformers(&inst, &design).unwrap();
        assert!(!profile.fallback_fired);
        assert!(profile.ratios[0] <= 1e-10);
        let w = &set.w[0];
        // same direction and norm, up to the canonical phase
        let overlap = w.inner(&v).norm();
        let vnorm = v.norm();
        assert!((overlap - vnorm * vnorm).abs() < 1e-9);
        assert!((w.norm() - vnorm).abs() < 1e-10);
        // canonical phase: the largest entry is real and positive
        let top = w
            .entries()
            .iter()
            .cloned()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        assert!(top.im.abs() < 1e-12 && top.re > 0.0);
    }

    #[test]
    fn scalar_design_extraction_hits_closed_form() {
        let inst = ProblemInstance::new(
            vec![ComplexVector::from_real(&[1.0])],
            vec![0.1],
            vec![0.1],
            vec![1.0],
        )
        .unwrap();
        let prob = build_wsp_sdr(&inst);
        let sol = prob.solve(&SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        let design = prob.design_from(&sol);
        let (set, profile) = extract_beamformers(&inst, &design).unwrap();
        assert!(!profile.fallback_fired);
        assert!((set.power - 0.1 / 0.81).abs() < 1e-7);
        let entry = set.w[0].entries()[0];
        assert!(
            (entry - c((0.1f64 / 0.81).sqrt(), 0.0)).norm() < 1e-5,
            "beamformer {entry}"
        );
        assert!(worst_case_sinr(&inst, &set, 0) >= 1.0 - 1e-6);
    }

    /// A covariance that splits power across two directions gets truncated to
    /// its dominant one and rescued by a uniform power raise; the rescued
    /// power lands exactly on the single-direction requirement.
    #[test]
    fn truncation_rescue_restores_the_margin() {
        let inst = single_user_instance();
        let design = RobustDesign::new(vec![HermMatrix::from_diag(&[0.08, 0.04])], vec![0.0]);
        let (set, profile) = extract_beamformers(&inst, &design).unwrap();
        assert!(profile.fallback_fired);
        assert!((profile.ratios[0] - 0.5).abs() < 1e-12);
        assert!(
            (set.power - 0.1 / 0.81).abs() < 1e-6,
            "rescued power {}",
            set.power
        );
        assert!(worst_case_sinr(&inst, &set, 0) >= 1.0 - 1e-6);
    }

    /// Power scaling cannot rescue a direction the worst-case channel is
    /// orthogonal to; that must surface as an error, not a loop.
    #[test]
    fn hopeless_truncation_is_an_error() {
        let inst = single_user_instance();
        let design = RobustDesign::new(vec![HermMatrix::from_diag(&[1e-4, 0.1])], vec![0.0]);
        let err = extract_beamformers(&inst, &design).unwrap_err();
        let OracleError::ExtractionFailed { ratios } = err;
        assert!((ratios[0] - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn zero_covariance_extracts_the_zero_vector() {
        let inst = single_user_instance();
        let design = RobustDesign::new(vec![HermMatrix::zeros(2)], vec![0.0]);
        let (set, profile) = extract_beamformers(&inst, &design).unwrap();
        assert!(!profile.fallback_fired);
        assert_eq!(set.power, 0.0);
        assert!(set.w[0].norm() == 0.0);
    }
}
