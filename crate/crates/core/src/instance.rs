//! Downlink design instances: channel estimates, uncertainty radii, noise
//! powers, and SINR targets, plus on-disk JSON serialization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{ComplexVector, HermMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("instance needs at least one user")]
    NoUsers,
    #[error("instance needs at least one transmit antenna")]
    NoAntennas,
    #[error("user {user}: channel estimate has {got} entries, expected {want}")]
    ChannelDim { user: usize, got: usize, want: usize },
    #[error("user {user}: uncertainty radius {value} must be finite and nonnegative")]
    BadRadius { user: usize, value: f64 },
    #[error("user {user}: noise power {value} must be finite and positive")]
    BadNoise { user: usize, value: f64 },
    #[error("user {user}: SINR target {value} must be finite and positive")]
    BadTarget { user: usize, value: f64 },
    #[error("user {user}: channel estimate has non-finite entries")]
    BadChannel { user: usize },
    #[error("field lengths disagree: {0}")]
    LengthMismatch(String),
}

/// One multiuser downlink design problem: `k` single-antenna users served from
/// `nt` transmit antennas, each user specified by a nominal channel, a
/// spherical uncertainty radius around it, a noise power, and an SINR target.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    nt: usize,
    channels: Vec<ComplexVector>,
    radii: Vec<f64>,
    noise_powers: Vec<f64>,
    sinr_targets: Vec<f64>,
}

impl ProblemInstance {
    pub fn new(
        channels: Vec<ComplexVector>,
        radii: Vec<f64>,
        noise_powers: Vec<f64>,
        sinr_targets: Vec<f64>,
    ) -> Result<Self, InstanceError> {
        let k = channels.len();
        if k == 0 {
            return Err(InstanceError::NoUsers);
        }
        if radii.len() != k || noise_powers.len() != k || sinr_targets.len() != k {
            return Err(InstanceError::LengthMismatch(format!(
                "channels={k}, radii={}, noise={}, targets={}",
                radii.len(),
                noise_powers.len(),
                sinr_targets.len()
            )));
        }
        let nt = channels[0].dim();
        if nt == 0 {
            return Err(InstanceError::NoAntennas);
        }
        for (i, h) in channels.iter().enumerate() {
            if h.dim() != nt {
                return Err(InstanceError::ChannelDim {
                    user: i,
                    got: h.dim(),
                    want: nt,
                });
            }
            if h.entries().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(InstanceError::BadChannel { user: i });
            }
        }
        for (i, &r) in radii.iter().enumerate() {
            if !r.is_finite() || r < 0.0 {
                return Err(InstanceError::BadRadius { user: i, value: r });
            }
        }
        for (i, &s) in noise_powers.iter().enumerate() {
            if !s.is_finite() || s <= 0.0 {
                return Err(InstanceError::BadNoise { user: i, value: s });
            }
        }
        for (i, &g) in sinr_targets.iter().enumerate() {
            if !g.is_finite() || g <= 0.0 {
                return Err(InstanceError::BadTarget { user: i, value: g });
            }
        }
        Ok(ProblemInstance {
            nt,
            channels,
            radii,
            noise_powers,
            sinr_targets,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.nt
    }

    pub fn num_users(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, i: usize) -> &ComplexVector {
        &self.channels[i]
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn noise_power(&self, i: usize) -> f64 {
        self.noise_powers[i]
    }

    pub fn sinr_target(&self, i: usize) -> f64 {
        self.sinr_targets[i]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn noise_powers(&self) -> &[f64] {
        &self.noise_powers
    }

    pub fn sinr_targets(&self) -> &[f64] {
        &self.sinr_targets
    }

    /// Rank-one covariance of the nominal channel of user `i`.
    pub fn channel_outer(&self, i: usize) -> HermMatrix {
        self.channels[i].outer()
    }

    /// Returns a copy with every SINR target replaced by `gamma`.
    pub fn with_uniform_target(&self, gamma: f64) -> Result<Self, InstanceError> {
        ProblemInstance::new(
            self.channels.clone(),
            self.radii.clone(),
            self.noise_powers.clone(),
            vec![gamma; self.num_users()],
        )
    }
}

/// SINR of user `i` under beamformers `w` when the true channel is `h`:
/// desired power over interference plus noise.
pub fn evaluate_sinr(
    h: &ComplexVector,
    beamformers: &[ComplexVector],
    user: usize,
    noise_power: f64,
) -> f64 {
    let signal = h.inner(&beamformers[user]).norm_sqr();
    let interference: f64 = beamformers
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != user)
        .map(|(_, w)| h.inner(w).norm_sqr())
        .sum();
    signal / (interference + noise_power)
}

/// JSON wire form of an instance. Complex entries are `[re, im]` pairs; the
/// channel matrix is row-per-user.
#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub nt: usize,
    pub k: usize,
    /// `hbar[i][t]` is the `[re, im]` channel coefficient of user `i` at
    /// antenna `t`.
    pub hbar: Vec<Vec<[f64; 2]>>,
    pub radius: Vec<f64>,
    pub noise: Vec<f64>,
    pub sinr_db: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum InstanceFileError {
    #[error("declared nt={nt} but user {user} has {got} antenna coefficients")]
    NtMismatch { nt: usize, user: usize, got: usize },
    #[error("declared k={k} but found {got} channel rows")]
    KMismatch { k: usize, got: usize },
    #[error(transparent)]
    Invalid(#[from] InstanceError),
}

impl InstanceFile {
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        InstanceFile {
            nt: inst.num_antennas(),
            k: inst.num_users(),
            hbar: (0..inst.num_users())
                .map(|i| {
                    inst.channel(i)
                        .entries()
                        .iter()
                        .map(|z| [z.re, z.im])
                        .collect()
                })
                .collect(),
            radius: inst.radii().to_vec(),
            noise: inst.noise_powers().to_vec(),
            sinr_db: inst
                .sinr_targets()
                .iter()
                .map(|g| 10.0 * g.log10())
                .collect(),
        }
    }

    pub fn into_instance(self) -> Result<ProblemInstance, InstanceFileError> {
        if self.hbar.len() != self.k {
            return Err(InstanceFileError::KMismatch {
                k: self.k,
                got: self.hbar.len(),
            });
        }
        let mut channels = Vec::with_capacity(self.k);
        for (user, row) in self.hbar.iter().enumerate() {
            if row.len() != self.nt {
                return Err(InstanceFileError::NtMismatch {
                    nt: self.nt,
                    user,
                    got: row.len(),
                });
            }
            channels.push(ComplexVector::new(
                row.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
            ));
        }
        let targets = self
            .sinr_db
            .iter()
            .map(|db| 10.0f64.powf(db / 10.0))
            .collect();
        Ok(ProblemInstance::new(
            channels, self.radius, self.noise, targets,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_user_instance() -> ProblemInstance {
        ProblemInstance::new(
            vec![
                ComplexVector::new(vec![c(1.0, 0.0), c(0.0, 0.5)]),
                ComplexVector::new(vec![c(0.2, -0.1), c(1.0, 0.0)]),
            ],
            vec![0.1, 0.1],
            vec![0.1, 0.1],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let h = vec![ComplexVector::new(vec![c(1.0, 0.0)])];
        assert_eq!(
            ProblemInstance::new(h.clone(), vec![-0.1], vec![0.1], vec![1.0]).unwrap_err(),
            InstanceError::BadRadius {
                user: 0,
                value: -0.1
            }
        );
        assert_eq!(
            ProblemInstance::new(h.clone(), vec![0.1], vec![0.0], vec![1.0]).unwrap_err(),
            InstanceError::BadNoise { user: 0, value: 0.0 }
        );
        assert_eq!(
            ProblemInstance::new(h.clone(), vec![0.1], vec![0.1], vec![0.0]).unwrap_err(),
            InstanceError::BadTarget { user: 0, value: 0.0 }
        );
        assert!(ProblemInstance::new(vec![], vec![], vec![], vec![]).is_err());
        // zero radius is allowed: it is exactly the perfect-knowledge case
        assert!(ProblemInstance::new(h, vec![0.0], vec![0.1], vec![1.0]).is_ok());
    }

    #[test]
    fn sinr_single_user_no_interference() {
        let h = ComplexVector::new(vec![c(2.0, 0.0)]);
        let w = vec![ComplexVector::new(vec![c(1.0, 0.0)])];
        // |h^H w|^2 / sigma^2 = 4 / 0.5
        assert_abs_diff_eq!(evaluate_sinr(&h, &w, 0, 0.5), 8.0, epsilon = 1e-14);
    }

    #[test]
    fn sinr_orthogonal_interferer_ignored() {
        let h = ComplexVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let w = vec![
            ComplexVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            ComplexVector::new(vec![c(0.0, 0.0), c(3.0, 0.0)]),
        ];
        assert_abs_diff_eq!(evaluate_sinr(&h, &w, 0, 1.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sinr_counts_cross_terms() {
        let h = ComplexVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let w = vec![
            ComplexVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            ComplexVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]),
        ];
        // signal |1|^2 = 1, interference |1|^2 = 1, noise 1 -> 0.5
        assert_abs_diff_eq!(evaluate_sinr(&h, &w, 0, 1.0), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let inst = two_user_instance();
        let file = InstanceFile::from_instance(&inst);
        let text = serde_json::to_string_pretty(&file).unwrap();
        let parsed: InstanceFile = serde_json::from_str(&text).unwrap();
        let back = parsed.into_instance().unwrap();
        assert_eq!(back.num_antennas(), 2);
        assert_eq!(back.num_users(), 2);
        for i in 0..2 {
            assert_abs_diff_eq!(back.radius(i), inst.radius(i), epsilon = 0.0);
            assert_abs_diff_eq!(back.noise_power(i), inst.noise_power(i), epsilon = 0.0);
            assert_abs_diff_eq!(
                back.sinr_target(i),
                inst.sinr_target(i),
                epsilon = 1e-12
            );
            for t in 0..2 {
                assert_eq!(back.channel(i).entries()[t], inst.channel(i).entries()[t]);
            }
        }
    }

    #[test]
    fn json_rejects_shape_mismatch() {
        let text = r#"{"nt":2,"k":1,"hbar":[[[1.0,0.0]]],"radius":[0.1],"noise":[0.1],"sinr_db":[0.0]}"#;
        let parsed: InstanceFile = serde_json::from_str(text).unwrap();
        assert!(matches!(
            parsed.into_instance(),
            Err(InstanceFileError::NtMismatch { .. })
        ));
    }

    proptest! {
        /// SINR is invariant under a common phase rotation of the channel.
        #[test]
        fn sinr_phase_invariant(phase in 0.0..std::f64::consts::TAU) {
            let h = ComplexVector::new(vec![c(1.0, 0.3), c(-0.2, 0.8)]);
            let rot = Complex64::from_polar(1.0, phase);
            let hr = h.scale(rot);
            let w = vec![
                ComplexVector::new(vec![c(0.9, 0.1), c(0.1, 0.0)]),
                ComplexVector::new(vec![c(0.0, 0.2), c(1.1, -0.3)]),
            ];
            let a = evaluate_sinr(&h, &w, 0, 0.1);
            let b = evaluate_sinr(&hr, &w, 0, 0.1);
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }

        /// Scaling all beamformers by t leaves SINR fixed only in the
        /// noise-free limit; with noise the SINR scales monotonically.
        #[test]
        fn sinr_monotone_in_common_power(t in 1.01..10.0f64) {
            let h = ComplexVector::new(vec![c(1.0, 0.3), c(-0.2, 0.8)]);
            let w: Vec<_> = vec![
                ComplexVector::new(vec![c(0.9, 0.1), c(0.1, 0.0)]),
                ComplexVector::new(vec![c(0.0, 0.2), c(1.1, -0.3)]),
            ];
            let ws: Vec<_> = w.iter().map(|v| v.scale(c(t.sqrt(), 0.0))).collect();
            let a = evaluate_sinr(&h, &w, 0, 0.1);
            let b = evaluate_sinr(&h, &ws, 0, 0.1);
            prop_assert!(b >= a - 1e-12);
        }
    }
}
