//! Observation-time designs and the optimal high-frequency step.
//!
//! Three designs are supported:
//!
//! - renewal: i.i.d. positive inter-arrival gaps with a Gamma density of
//!   integer type `r` and mean `delta`;
//! - jittered: the periodic grid `k delta` perturbed by i.i.d. symmetric
//!   noise supported on `[-delta/2, delta/2]`;
//! - high-frequency: the deterministic grid `k delta_n` with a vanishing
//!   step and growing span.
//!
//! All generators take an explicit seed and are pure, so concurrent use
//! only needs distinct seeds.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Splitmix64 finalizer; uncorrelates structured seed inputs.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a base seed and a role tag.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ splitmix64(tag))
}

/// Renewal design: gaps are Gamma of integer type `shape` with mean
/// `mean_interval` (so variance `mean_interval^2 / shape`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Renewal {
    shape: u32,
    mean_interval: f64,
}

impl Renewal {
    pub fn new(shape: u32, mean_interval: f64) -> Result<Self> {
        if shape == 0 {
            return Err(Error::invalid("renewal shape must be a positive integer"));
        }
        if !(mean_interval.is_finite() && mean_interval > 0.0) {
            return Err(Error::invalid("renewal mean interval must be positive and finite"));
        }
        Ok(Renewal { shape, mean_interval })
    }

    pub fn shape(&self) -> u32 {
        self.shape
    }

    pub fn mean_interval(&self) -> f64 {
        self.mean_interval
    }

    /// The renewal density `h(t)`, i.e. the summed convolution powers of
    /// the gap density, in closed form.
    ///
    /// Closed forms exist for types 1 and 2: the Poisson case is the
    /// constant `1/delta`, and type 2 gives `(1 - exp(-4t/delta))/delta`,
    /// which approaches `1/delta` monotonically. In both cases `1/delta`
    /// bounds the density. From type 3 on the density oscillates around
    /// its limit and no closed form is provided here.
    pub fn renewal_density(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::invalid(format!("renewal density requires t >= 0, got {t}")));
        }
        let delta = self.mean_interval;
        match self.shape {
            1 => Ok(1.0 / delta),
            2 => Ok((1.0 - (-4.0 * t / delta).exp()) / delta),
            r => Err(Error::Unsupported(format!(
                "no closed-form renewal density for gamma type {r} (types 1 and 2 only)"
            ))),
        }
    }
}

/// Jitter noise law; symmetric about zero on `[-delta/2, delta/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Jitter {
    #[default]
    Uniform,
}

/// One of the three observation-time designs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingScheme {
    Renewal(Renewal),
    Jittered { period: f64, jitter: Jitter },
    HighFrequency { step: f64 },
}

impl SamplingScheme {
    pub fn renewal(shape: u32, mean_interval: f64) -> Result<Self> {
        Ok(SamplingScheme::Renewal(Renewal::new(shape, mean_interval)?))
    }

    pub fn jittered(period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::invalid("jitter period must be positive and finite"));
        }
        Ok(SamplingScheme::Jittered { period, jitter: Jitter::Uniform })
    }

    pub fn high_frequency(step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid("high-frequency step must be positive and finite"));
        }
        Ok(SamplingScheme::HighFrequency { step })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplingScheme::Renewal(_) => "renewal",
            SamplingScheme::Jittered { .. } => "jittered",
            SamplingScheme::HighFrequency { .. } => "highfreq",
        }
    }
}

/// Generate the arrival times `t_0 < t_1 < ... < t_n` (n + 1 values).
///
/// Renewal and high-frequency sequences start at `t_0 = 0`; the jittered
/// sequence starts at `t_0 = Z_0`, which may be negative. Identical seeds
/// reproduce identical times bit for bit.
pub fn draw_times(scheme: &SamplingScheme, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("at least one observation time is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::with_capacity(n + 1);
    match *scheme {
        SamplingScheme::Renewal(renewal) => {
            let scale = renewal.mean_interval / renewal.shape as f64;
            let mut t = 0.0;
            times.push(t);
            for _ in 0..n {
                let mut gap = 0.0;
                for _ in 0..renewal.shape {
                    gap += exponential(&mut rng, scale);
                }
                t += gap;
                times.push(t);
            }
        }
        SamplingScheme::Jittered { period, jitter: Jitter::Uniform } => {
            for k in 0..=n {
                let z = period * (rng.random::<f64>() - 0.5);
                times.push(k as f64 * period + z);
            }
        }
        SamplingScheme::HighFrequency { step } => {
            for k in 0..=n {
                times.push(k as f64 * step);
            }
        }
    }
    debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
    Ok(times)
}

/// Strictly positive exponential deviate of the given mean, by inversion.
fn exponential(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return -u.ln() * mean;
        }
    }
}

/// Inputs for the minimal admissible high-frequency step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePlan {
    pub gamma0: f64,
    pub dim: usize,
    pub bin_width: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub n: u64,
}

impl SamplePlan {
    fn validate(&self) -> Result<()> {
        if !(self.gamma0.is_finite() && self.gamma0 > 0.0) {
            return Err(Error::invalid("gamma0 must be positive"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::invalid("bin width must be positive"));
        }
        if !(self.d1 > 0.0 && self.d2 > 0.0 && self.d3 > 0.0) {
            return Err(Error::invalid("branch constants d1, d2, d3 must be positive"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        Ok(())
    }
}

/// Minimal sampling step preserving the i.i.d.-optimal MISE rate:
///
/// ```text
/// delta*_n = d1 h^d            if gamma0 < 1
///          = d2 h^d ln(h^-d)   if gamma0 = 1
///          = d3 h^(d/gamma0)   if gamma0 > 1
/// ```
///
/// Branch selection compares `gamma0` against 1 exactly; plans must state
/// `gamma0` exactly to avoid floating-point branch ambiguity.
pub fn delta_star(plan: &SamplePlan) -> Result<f64> {
    plan.validate()?;
    let hd = plan.bin_width.powi(plan.dim as i32);
    if plan.gamma0 < 1.0 {
        Ok(plan.d1 * hd)
    } else if plan.gamma0 == 1.0 {
        if plan.bin_width >= 1.0 {
            return Err(Error::invalid(format!(
                "the gamma0 = 1 step needs bin width below 1 (got {}) so the log factor is positive",
                plan.bin_width
            )));
        }
        Ok(plan.d2 * hd * (1.0 / hd).ln())
    } else {
        Ok(plan.d3 * plan.bin_width.powf(plan.dim as f64 / plan.gamma0))
    }
}

/// Minimal sufficient observation time `T*_n = n delta*_n`.
pub fn minimal_observation_time(plan: &SamplePlan) -> Result<f64> {
    Ok(plan.n as f64 * delta_star(plan)?)
}
