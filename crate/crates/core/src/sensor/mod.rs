//! Monte-Carlo capture of a photon flux map by a clipping photon counter.
//!
//! Each scene pixel is covered by `K×K` jots that split its flux evenly.
//! Per frame every jot draws `min(Poisson(τc/K²), L)`; the capture keeps only
//! the per-pixel sum over all frames and jots.

mod rng;
mod sampler;

pub use rng::{derive_seed, DrawStream};

use rayon::prelude::*;
use sampler::ClippedPoissonSampler;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("invalid scene: {0}")]
    Scene(String),
    #[error("invalid exposure config: {0}")]
    Config(String),
    #[error("jot rate is not finite for flux {flux} at tau {tau}")]
    NonFiniteRate { flux: f64, tau: f64 },
    #[error("at least 1000 trials are required, got {0}")]
    TooFewTrials(u64),
}

/// Ground-truth photon flux in photons per second, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonFluxMap {
    width: usize,
    height: usize,
    flux: Vec<f64>,
}

impl PhotonFluxMap {
    pub fn new(width: usize, height: usize, flux: Vec<f64>) -> Result<Self, SensorError> {
        if width == 0 || height == 0 {
            return Err(SensorError::Scene("width and height must be >= 1".into()));
        }
        if flux.len() != width * height {
            return Err(SensorError::Scene(format!(
                "expected {} flux values, got {}",
                width * height,
                flux.len()
            )));
        }
        if let Some((i, v)) = flux
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
        {
            return Err(SensorError::Scene(format!(
                "flux at index {i} is {v}; must be finite and >= 0"
            )));
        }
        Ok(Self { width, height, flux })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn flux(&self) -> &[f64] {
        &self.flux
    }
}

/// One capture setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureConfig {
    /// Integration time per frame, seconds.
    pub tau: f64,
    /// Counter capacity `L`.
    pub capacity: u32,
    /// Number of frames `T`.
    pub frames: u32,
    /// Jots per side `K`; each pixel has `K×K` jots.
    pub oversample: u32,
    pub seed: u64,
}

impl ExposureConfig {
    pub fn new(tau: f64, capacity: u32, frames: u32, oversample: u32, seed: u64) -> Result<Self, SensorError> {
        let cfg = Self {
            tau,
            capacity,
            frames,
            oversample,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(SensorError::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.capacity == 0 {
            return Err(SensorError::Config("capacity must be >= 1".into()));
        }
        if self.frames == 0 {
            return Err(SensorError::Config("frames must be >= 1".into()));
        }
        if self.oversample == 0 {
            return Err(SensorError::Config("oversample must be >= 1".into()));
        }
        Ok(())
    }

    /// Jots per scene pixel, `K²`.
    pub fn jots(&self) -> u64 {
        u64::from(self.oversample) * u64::from(self.oversample)
    }

    /// Jot-frame samples summed into one pixel, `T·K²`.
    pub fn samples_per_pixel(&self) -> u64 {
        u64::from(self.frames) * self.jots()
    }

    /// Largest possible per-pixel sum, `T·K²·L`.
    pub fn max_sum(&self) -> u64 {
        self.samples_per_pixel() * u64::from(self.capacity)
    }

    /// Photons per jot per frame for a pixel flux `c`.
    pub fn jot_theta(&self, flux: f64) -> f64 {
        self.tau * flux / self.jots() as f64
    }

    /// Inverse of [`Self::jot_theta`].
    pub fn flux_from_jot_theta(&self, theta: f64) -> f64 {
        theta * self.jots() as f64 / self.tau
    }
}

/// Per-pixel sums of clipped counts for one exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct SumImage {
    width: usize,
    height: usize,
    sum: Vec<u64>,
    config: ExposureConfig,
}

impl SumImage {
    pub fn new(width: usize, height: usize, sum: Vec<u64>, config: ExposureConfig) -> Result<Self, SensorError> {
        config.validate()?;
        if width == 0 || height == 0 || sum.len() != width * height {
            return Err(SensorError::Scene(format!(
                "sum image {width}x{height} does not match {} values",
                sum.len()
            )));
        }
        let max = config.max_sum();
        if let Some(v) = sum.iter().find(|&&v| v > max) {
            return Err(SensorError::Scene(format!("sum {v} exceeds T*K^2*L = {max}")));
        }
        Ok(Self {
            width,
            height,
            sum,
            config,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn sum(&self) -> &[u64] {
        &self.sum
    }

    pub fn config(&self) -> &ExposureConfig {
        &self.config
    }
}

/// Simulates one exposure of `scene`.
///
/// Output depends only on `(scene, config)`; the thread count does not
/// matter because every jot-frame draw has its own counter-derived stream.
pub fn capture(scene: &PhotonFluxMap, config: &ExposureConfig) -> Result<SumImage, SensorError> {
    config.validate()?;
    for &c in &scene.flux {
        let theta = config.jot_theta(c);
        if !theta.is_finite() {
            return Err(SensorError::NonFiniteRate { flux: c, tau: config.tau });
        }
    }

    let jots = config.jots() as u32;
    let sum: Vec<u64> = scene
        .flux
        .par_iter()
        .enumerate()
        .map(|(pixel, &c)| {
            let sampler = ClippedPoissonSampler::new(config.jot_theta(c), config.capacity);
            if let ClippedPoissonSampler::Zero = sampler {
                return 0;
            }
            let mut total = 0u64;
            for jot in 0..jots {
                for frame in 0..config.frames {
                    let mut rng = DrawStream::new(config.seed, pixel as u64, jot, frame);
                    total += u64::from(sampler.sample(&mut rng));
                }
            }
            total
        })
        .collect();

    Ok(SumImage {
        width: scene.width,
        height: scene.height,
        sum,
        config: *config,
    })
}

/// Sample mean and unbiased sample variance of `n_trials` single jot-frame
/// draws at rate `theta`, using the capacity and seed of `config`.
pub fn replicate_moments(config: &ExposureConfig, theta: f64, n_trials: u64) -> Result<(f64, f64), SensorError> {
    config.validate()?;
    if n_trials < 1000 {
        return Err(SensorError::TooFewTrials(n_trials));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(SensorError::NonFiniteRate { flux: theta, tau: 1.0 });
    }
    let sampler = ClippedPoissonSampler::new(theta, config.capacity);
    // Chunked Welford merge keeps the result independent of scheduling.
    const CHUNK: u64 = 1 << 14;
    let n_chunks = n_trials.div_ceil(CHUNK);
    let parts: Vec<(f64, f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_trials) {
                let x = f64::from(sampler.sample(&mut DrawStream::new(config.seed, i, 0, 0)));
                n += 1.0;
                let d = x - mean;
                mean += d / n;
                m2 += d * (x - mean);
            }
            (n, mean, m2)
        })
        .collect();

    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for (nb, mb, m2b) in parts {
        let total = n + nb;
        let d = mb - mean;
        mean += d * nb / total;
        m2 += m2b + d * d * n * nb / total;
        n = total;
    }
    Ok((mean, m2 / (n - 1.0)))
}
