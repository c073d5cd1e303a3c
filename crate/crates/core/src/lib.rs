//! Robust multiuser downlink beamforming via semidefinite relaxation.
//!
//! The library designs transmit beamformers that guarantee per-user SINR
//! targets for every channel in a norm-ball around each user's channel
//! estimate, and certifies the designs through an explicit dual problem, a
//! max-min reformulation, and first-order optimality checks.
//!
//! Layout:
//! - [`realsym`] / [`complex`]: dense linear algebra (real symmetric and
//!   Hermitian), eigendecompositions via cyclic Jacobi.
//! - [`instance`]: problem data and its JSON wire format.
//! - [`solver`]: a self-contained primal-dual interior-point method for
//!   block-diagonal semidefinite programs.
//! - [`formulations`]: the robust design program, its dual, and the related
//!   max-min / inner programs, built over the solver's real interface.
//! - [`oracle`]: independent checks — worst-case error search over the
//!   uncertainty ball, matrix-inequality verification, achieved-SINR
//!   certification, and beamformer extraction.
//! - [`duality`]: certificate mapping, first-order condition residuals, and
//!   the end-to-end verification pipeline.
//! - [`harness`]: reproducible instance generation and parameter sweeps.

pub mod complex;
pub mod duality;
pub mod formulations;
pub mod harness;
pub mod instance;
pub mod oracle;
pub mod realsym;
pub mod solver;

pub use complex::{ComplexVector, EigDecomp, HermMatrix};
pub use duality::{DualityReport, KktResidual, ProbeVerdict};
pub use formulations::{DualCertificate, MaxMinSolution, RobustDesign};
pub use harness::{SweepConfig, SweepOutput, SweepRecord};
pub use instance::{InstanceFile, ProblemInstance};
pub use oracle::{BeamformerSet, DesignFile, RankProfile, TrsResult};
pub use solver::{ConicProgram, ConicSolution, SolveStatus};
