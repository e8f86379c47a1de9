//! Keyed random streams and lognormal sampling by mean and coefficient of
//! variation.
//!
//! A stream is identified by `(base_seed, replication, role, entity)`. The
//! key is folded through SplitMix64 into a 256-bit ChaCha8 seed, so streams
//! are reproducible on any platform and adding a new role or entity never
//! shifts the draws of existing streams. Demand streams are keyed by
//! replication and item only, which gives every parameter point of one
//! replication identical customer orders (common random numbers).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamRole {
    Demand = 1,
    Processing = 2,
    Setup = 3,
    Prices = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub replication: u64,
    pub role: StreamRole,
    pub entity: u64,
}

impl StreamKey {
    pub fn new(replication: u64, role: StreamRole, entity: u64) -> Self {
        StreamKey {
            replication,
            role,
            entity,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(base_seed: u64, key: StreamKey) -> Self {
        let mut state = base_seed;
        for word in [key.replication, key.role as u64, key.entity] {
            state ^= splitmix64(&mut state) ^ word;
            splitmix64(&mut state);
        }
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        RngStream {
            rng: ChaCha8Rng::from_seed(seed),
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }
}

/// Lognormal distribution described by the moments of the sample itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalSpec {
    pub mean: f64,
    pub cv: f64,
    /// Location of the underlying normal.
    pub mu: f64,
    /// Scale of the underlying normal.
    pub sigma: f64,
}

pub fn lognormal_from_mean_cv(mean: f64, cv: f64) -> Result<LognormalSpec> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::InvalidParam(format!("lognormal mean {mean} must be positive")));
    }
    if !(cv >= 0.0) || !cv.is_finite() {
        return Err(Error::InvalidParam(format!("lognormal cv {cv} must be >= 0")));
    }
    let sigma2 = cv.mul_add(cv, 1.0).ln();
    Ok(LognormalSpec {
        mean,
        cv,
        mu: mean.ln() - sigma2 / 2.0,
        sigma: sigma2.sqrt(),
    })
}

impl LognormalSpec {
    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        sample(stream, self)
    }
}

/// One draw. A zero-CV spec returns the mean exactly but still consumes a
/// normal variate so stream positions do not depend on the CV.
pub fn sample(stream: &mut RngStream, spec: &LognormalSpec) -> f64 {
    let z = stream.standard_normal();
    if spec.sigma == 0.0 {
        spec.mean
    } else {
        (spec.mu + spec.sigma * z).exp()
    }
}
