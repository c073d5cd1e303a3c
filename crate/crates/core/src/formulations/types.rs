//! Typed solution objects for the robust design problem and its dual, with
//! feasibility validators at pinned numerical tolerances.

use thiserror::Error;

use crate::complex::HermMatrix;
use crate::instance::ProblemInstance;

use super::{build_psi, build_y, sinr_margin_matrix};

/// Matrices are accepted as positive semidefinite down to this eigenvalue,
/// scaled by the solution's power level where one is available.
pub const PSD_TOL: f64 = 1e-7;
/// Scalar multipliers are accepted as nonnegative down to this value,
/// scaled like [`PSD_TOL`].
pub const MULTIPLIER_TOL: f64 = 1e-9;
/// Slack allowed on scalar trace and corner-entry conditions, scaled like
/// [`PSD_TOL`].
pub const SCALAR_TOL: f64 = 1e-7;
/// Corner weights at or below this are treated as degenerate: the matrix
/// carries no usable homogeneous coordinate and cannot be normalized.
pub const CORNER_TOL: f64 = 1e-10;

/// Why a candidate solution object failed validation.
#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("{what}[{index}] is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd {
        what: &'static str,
        index: usize,
        min_eig: f64,
    },
    #[error("multiplier {what}[{index}] = {value:.3e} is negative")]
    NegativeMultiplier {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("trace bound violated at user {index}: tr exceeds (1+r^2) x corner by {excess:.3e}")]
    TraceBound { index: usize, excess: f64 },
    #[error("corner entry of V[{index}] is {value:.6} instead of 1")]
    CornerNotUnit { index: usize, value: f64 },
    #[error("degenerate certificate: corner entry of A[{index}] is {corner:.3e}")]
    DegenerateCertificate { index: usize, corner: f64 },
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: &'static str },
    #[error("exact-channel user {index} misses its SINR constraint by {shortfall:.3e}")]
    PointConstraint { index: usize, shortfall: f64 },
}

/// A transmit design: one covariance per user plus the uncertainty multipliers
/// that certify each robust SINR constraint over its channel ball.
#[derive(Debug, Clone)]
pub struct RobustDesign {
    /// Per-user transmit covariances.
    pub w: Vec<HermMatrix>,
    /// Per-user uncertainty multipliers (zero for users with exact channels).
    pub lambda: Vec<f64>,
    /// Total transmit power, `sum_i tr(W_i)`.
    pub objective: f64,
}

impl RobustDesign {
    pub fn new(w: Vec<HermMatrix>, lambda: Vec<f64>) -> Self {
        let objective = w.iter().map(HermMatrix::trace).sum();
        RobustDesign {
            w,
            lambda,
            objective,
        }
    }

    /// Checks feasibility: covariances PSD, multipliers nonnegative, and every
    /// user's robust constraint certified. Users with an exact channel
    /// (radius zero) have no ball to certify against, so their single SINR
    /// inequality is checked directly instead of a certificate matrix.
    pub fn validate(&self, inst: &ProblemInstance) -> Result<(), FormulationError> {
        let k = inst.num_users();
        if self.w.len() != k || self.lambda.len() != k {
            return Err(FormulationError::DimensionMismatch {
                what: "design must carry one covariance and one multiplier per user",
            });
        }
        for (i, wm) in self.w.iter().enumerate() {
            if wm.dim() != inst.num_antennas() {
                return Err(FormulationError::DimensionMismatch {
                    what: "covariance size must equal the antenna count",
                });
            }
            let eig = wm.min_eig();
            if eig < -PSD_TOL {
                return Err(FormulationError::NotPsd {
                    what: "W",
                    index: i,
                    min_eig: eig,
                });
            }
        }
        for (i, &l) in self.lambda.iter().enumerate() {
            if l < -MULTIPLIER_TOL {
                return Err(FormulationError::NegativeMultiplier {
                    what: "lambda",
                    index: i,
                    value: l,
                });
            }
        }
        for i in 0..k {
            if inst.radius(i) > 0.0 {
                let psi = build_psi(inst, &self.w, i, self.lambda[i]);
                let eig = psi.min_eig();
                if eig < -PSD_TOL {
                    return Err(FormulationError::NotPsd {
                        what: "robust-margin certificate",
                        index: i,
                        min_eig: eig,
                    });
                }
            } else {
                let q = sinr_margin_matrix(inst, &self.w, i);
                let margin = q.quad_form(inst.channel(i)) - inst.noise_power(i);
                if margin < -SCALAR_TOL {
                    return Err(FormulationError::PointConstraint {
                        index: i,
                        shortfall: -margin,
                    });
                }
            }
        }
        Ok(())
    }
}

/// A feasible point of the dual problem: one PSD matrix per user over the
/// homogenized error space, corner-weighted so its objective lower-bounds
/// every feasible transmit power.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    /// Per-user dual matrices of size `N_t + 1`.
    pub a: Vec<HermMatrix>,
    /// Certified lower bound, `sum_i sigma_i^2 [A_i]_corner`.
    pub objective: f64,
}

impl DualCertificate {
    pub fn new(inst: &ProblemInstance, a: Vec<HermMatrix>) -> Self {
        let nt = inst.num_antennas();
        let objective = a
            .iter()
            .enumerate()
            .map(|(i, ai)| inst.noise_power(i) * ai.get(nt, nt).re)
            .sum();
        DualCertificate { a, objective }
    }

    /// Last diagonal entry of `A_i`: the weight on the homogeneous coordinate.
    pub fn corner(&self, i: usize) -> f64 {
        let n = self.a[i].dim() - 1;
        self.a[i].get(n, n).re
    }

    /// Checks dual feasibility: each `A_i` PSD with its trace controlled by
    /// the corner entry, a strictly positive corner, and every slack matrix
    /// `Y_i(A)` PSD.
    pub fn validate(&self, inst: &ProblemInstance) -> Result<(), FormulationError> {
        let k = inst.num_users();
        if self.a.len() != k {
            return Err(FormulationError::DimensionMismatch {
                what: "certificate must carry one matrix per user",
            });
        }
        for (i, ai) in self.a.iter().enumerate() {
            if ai.dim() != inst.num_antennas() + 1 {
                return Err(FormulationError::DimensionMismatch {
                    what: "certificate matrices live on the homogenized error space",
                });
            }
            let eig = ai.min_eig();
            if eig < -PSD_TOL {
                return Err(FormulationError::NotPsd {
                    what: "A",
                    index: i,
                    min_eig: eig,
                });
            }
            let corner = self.corner(i);
            let r = inst.radius(i);
            let excess = ai.trace() - (1.0 + r * r) * corner;
            if excess > SCALAR_TOL {
                return Err(FormulationError::TraceBound { index: i, excess });
            }
            if corner <= 0.0 {
                return Err(FormulationError::DegenerateCertificate { index: i, corner });
            }
        }
        for i in 0..k {
            let y = build_y(inst, &self.a, i);
            let eig = y.min_eig();
            if eig < -PSD_TOL {
                return Err(FormulationError::NotPsd {
                    what: "Y",
                    index: i,
                    min_eig: eig,
                });
            }
        }
        Ok(())
    }
}

/// The max–min view of the dual: per-user worst-case channel distributions
/// `V_i` (unit corner, trace-bounded), their weights `mu_i`, and the inner
/// minimizer's covariances.
#[derive(Debug, Clone)]
pub struct MaxMinSolution {
    /// Per-user error distributions over the homogenized space.
    pub v: Vec<HermMatrix>,
    /// Nonnegative weights attached to each distribution.
    pub mu: Vec<f64>,
    /// Covariances solving the inner power minimization.
    pub w: Vec<HermMatrix>,
}

impl MaxMinSolution {
    /// Checks membership of each `V_i` in its distribution set (PSD, unit
    /// corner, trace at most `1 + r_i^2`), nonnegativity of the weights, and
    /// that the weighted matrices keep every slack `Y_i` PSD.
    pub fn validate(&self, inst: &ProblemInstance) -> Result<(), FormulationError> {
        let k = inst.num_users();
        if self.v.len() != k || self.mu.len() != k {
            return Err(FormulationError::DimensionMismatch {
                what: "solution must carry one distribution and one weight per user",
            });
        }
        let nt = inst.num_antennas();
        for (i, vi) in self.v.iter().enumerate() {
            if vi.dim() != nt + 1 {
                return Err(FormulationError::DimensionMismatch {
                    what: "distributions live on the homogenized error space",
                });
            }
            let eig = vi.min_eig();
            if eig < -PSD_TOL {
                return Err(FormulationError::NotPsd {
                    what: "V",
                    index: i,
                    min_eig: eig,
                });
            }
            let corner = vi.get(nt, nt).re;
            if (corner - 1.0).abs() > SCALAR_TOL {
                return Err(FormulationError::CornerNotUnit {
                    index: i,
                    value: corner,
                });
            }
            let r = inst.radius(i);
            let excess = vi.trace() - (1.0 + r * r);
            if excess > SCALAR_TOL {
                return Err(FormulationError::TraceBound { index: i, excess });
            }
        }
        for (i, &m) in self.mu.iter().enumerate() {
            if m < -MULTIPLIER_TOL {
                return Err(FormulationError::NegativeMultiplier {
                    what: "mu",
                    index: i,
                    value: m,
                });
            }
        }
        let weighted: Vec<HermMatrix> = self
            .v
            .iter()
            .zip(&self.mu)
            .map(|(vi, &m)| vi.scale(m.max(0.0)))
            .collect();
        for i in 0..k {
            let y = build_y(inst, &weighted, i);
            let eig = y.min_eig();
            if eig < -PSD_TOL {
                return Err(FormulationError::NotPsd {
                    what: "Y",
                    index: i,
                    min_eig: eig,
                });
            }
        }
        Ok(())
    }
}
