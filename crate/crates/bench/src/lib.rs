//! Shared fixtures for the criterion benchmarks.

use beamsdr_core::harness::generate_instance;
use beamsdr_core::ProblemInstance;

/// The standard benchmark geometry: four antennas, four users, noise 0.1,
/// radius 0.1, 4 dB target — the same shape the verification suite runs.
pub fn protocol_instance(seed: u64) -> ProblemInstance {
    generate_instance(4, 4, 0.1, 0.1, 4.0, seed)
}
