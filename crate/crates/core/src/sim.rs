//! Synthetic confounded cohort.
//!
//! Subject `i` (0-based) gets
//!
//! ```text
//! Z ~ Bernoulli(p_z1)
//! X ~ Bernoulli(p_treat_given_z[Z])
//! E ~ Uniform(noise_low, noise_high)
//! T = a * exp((b + c Z + d X + e Z X) * i) + E
//! ```
//!
//! with `T` rounded half-up to whole days and clamped at 0. The exponent is
//! scaled by the subject index itself, so survival times spread over several
//! orders of magnitude for large `n`. With the default coefficients the
//! largest index that still fits in `u64` days is about 470, so bigger cohorts
//! are rejected. Every subject has the event; there is no censoring.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`).
//! Uniforms are `(next_u64() >> 11) * 2^-53`, drawn per subject in the order
//! Z, X, E. Changing any of this changes every generated cohort.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::cohort::{Arm, CohortDataset, CohortError, SubjectRecord};

/// Column/node names used for generated cohorts.
pub const TREATMENT: &str = "X";
pub const TIME: &str = "T";
pub const EVENT: &str = "S";
pub const CONFOUNDER: &str = "Z";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Cohort(#[from] CohortError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub noise: (f64, f64),
    /// P(X = 1 | Z = 0) and P(X = 1 | Z = 1).
    pub p_treat_given_z: [f64; 2],
    pub p_z1: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 200,
            a: 5.0,
            b: 0.025,
            c: 0.005,
            d: -0.015,
            e: 0.075,
            noise: (-0.5, 0.5),
            p_treat_given_z: [0.75, 0.25],
            p_z1: 0.5,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// `P(X=1|Z=0) = bias`, `P(X=1|Z=1) = 1 - bias`; 0.5 means no confounding.
    pub fn with_bias(mut self, bias: f64) -> Self {
        self.p_treat_given_z = [bias, 1.0 - bias];
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(SimError::InvalidConfig(format!("{name} = {p} is not a probability")))
            }
        };
        if self.n < 2 {
            return Err(SimError::InvalidConfig(format!("n = {} must be at least 2", self.n)));
        }
        prob("p_z1", self.p_z1)?;
        prob("P(X=1|Z=0)", self.p_treat_given_z[0])?;
        prob("P(X=1|Z=1)", self.p_treat_given_z[1])?;
        let (lo, hi) = self.noise;
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(SimError::InvalidConfig(format!("noise bounds ({lo}, {hi}) are not ordered")));
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d), ("e", self.e)] {
            if !v.is_finite() {
                return Err(SimError::InvalidConfig(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    /// Noise-free survival time for subject `index`, before rounding.
    pub fn base_time(&self, index: usize, z: bool, x: bool) -> f64 {
        let (z, x) = (f64::from(u8::from(z)), f64::from(u8::from(x)));
        let rate = self.b + self.c * z + self.d * x + self.e * z * x;
        self.a * libm::exp(rate * index as f64)
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Half-up rounding to whole days, clamped at 0.
pub fn to_days(t: f64) -> Option<u64> {
    let r = libm::floor(t + 0.5);
    if !r.is_finite() || r >= u64::MAX as f64 {
        return None;
    }
    Some(if r <= 0.0 { 0 } else { r as u64 })
}

pub fn generate_cohort(config: &SimConfig) -> Result<CohortDataset, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = config.noise;
    let mut subjects = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let z = uniform(&mut rng) < config.p_z1;
        let x = uniform(&mut rng) < config.p_treat_given_z[usize::from(z)];
        let noise = lo + (hi - lo) * uniform(&mut rng);
        let t = config.base_time(i, z, x) + noise;
        let days = to_days(t).ok_or_else(|| {
            SimError::InvalidConfig(format!("survival time of subject {i} overflows ({t})"))
        })?;
        let mut covariates = BTreeMap::new();
        covariates.insert(CONFOUNDER.to_string(), String::from(if z { "1" } else { "0" }));
        subjects.push(SubjectRecord {
            id: format!("{i}"),
            treatment: Arm::from_bit(x),
            survival_time: days,
            event: true,
            covariates,
        });
    }
    Ok(CohortDataset::new(subjects)?)
}
