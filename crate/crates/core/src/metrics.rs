//! Image quality and SNR-curve generation.
//!
//! Curves are indexed by `θ`, the mean photon count a pixel collects over a
//! whole capture. A config with `T` frames and `K×K` jots spreads that over
//! `n = T·K²` jot-frames, so each point evaluates `snr_h(θ/n, L, n)`. Under
//! this convention every config is compared at equal illumination.

use crate::display::GrayImage;
use crate::stats::{snr_h, snr_h_linear, SnrQuery};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("images differ in size: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Peak signal-to-noise ratio for 8-bit images; `+∞` when they are identical.
pub fn psnr(reference: &GrayImage, test: &GrayImage) -> Result<f64, MetricsError> {
    if reference.width() != test.width() || reference.height() != test.height() {
        return Err(MetricsError::DimensionMismatch(
            reference.width(),
            reference.height(),
            test.width(),
            test.height(),
        ));
    }
    let sse: u64 = reference
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(&a, &b)| {
            let d = u64::from(a.abs_diff(b));
            d * d
        })
        .sum();
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / reference.pixels().len() as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

/// One sensor setting on a curve plot.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig {
    pub capacity: u32,
    pub frames: u32,
    pub oversample: u32,
    pub label: String,
}

impl SensorConfig {
    pub fn new(capacity: u32, frames: u32, oversample: u32, label: impl Into<String>) -> Self {
        Self {
            capacity,
            frames,
            oversample,
            label: label.into(),
        }
    }

    fn jot_frames(&self) -> u64 {
        u64::from(self.frames) * u64::from(self.oversample) * u64::from(self.oversample)
    }

    fn validate(&self) -> Result<(), MetricsError> {
        if self.capacity == 0 || self.frames == 0 || self.oversample == 0 {
            return Err(MetricsError::Invalid(format!(
                "config '{}' needs capacity, frames and oversample >= 1",
                self.label
            )));
        }
        Ok(())
    }

    /// Linear SNR at pixel-level count `theta`; `None` where undefined.
    fn snr_linear(&self, theta: f64) -> Option<f64> {
        let n = self.jot_frames();
        SnrQuery::at(theta / n as f64, self.capacity, n)
            .and_then(|q| snr_h_linear(&q))
            .ok()
    }
}

/// One member of an exposure bracket; `scale` multiplies the base exposure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketExposure {
    pub capacity: u32,
    pub frames: u32,
    pub oversample: u32,
    pub scale: f64,
}

impl BracketExposure {
    fn sensor(&self) -> SensorConfig {
        SensorConfig::new(self.capacity, self.frames, self.oversample, "")
    }
}

/// SNR in dB for several rows over a shared θ axis; `None` marks undefined points.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrCurve {
    theta_axis: Vec<f64>,
    labels: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl SnrCurve {
    pub fn new(theta_axis: Vec<f64>) -> Result<Self, MetricsError> {
        check_axis(&theta_axis)?;
        Ok(Self {
            theta_axis,
            labels: Vec::new(),
            rows: Vec::new(),
        })
    }

    pub fn push_row(&mut self, label: impl Into<String>, row: Vec<Option<f64>>) -> Result<(), MetricsError> {
        if row.len() != self.theta_axis.len() {
            return Err(MetricsError::Invalid(format!(
                "row has {} points, axis has {}",
                row.len(),
                self.theta_axis.len()
            )));
        }
        if row.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MetricsError::Invalid("row values must be finite or undefined".into()));
        }
        self.labels.push(label.into());
        self.rows.push(row);
        Ok(())
    }

    pub fn theta_axis(&self) -> &[f64] {
        &self.theta_axis
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }
}

fn check_axis(axis: &[f64]) -> Result<(), MetricsError> {
    if axis.is_empty() {
        return Err(MetricsError::Invalid("θ axis is empty".into()));
    }
    if axis.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(MetricsError::Invalid("θ axis values must be finite and > 0".into()));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MetricsError::Invalid("θ axis must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_axis(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, MetricsError> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return Err(MetricsError::Invalid(format!(
            "need 0 < lo < hi and n >= 2, got lo={lo} hi={hi} n={n}"
        )));
    }
    let (a, b) = (lo.log10(), hi.log10());
    let mut axis: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect();
    axis[0] = lo;
    axis[n - 1] = hi;
    Ok(axis)
}

/// 200 log-spaced points over `[1e-2, 1e6]`.
pub fn default_theta_axis() -> Vec<f64> {
    log_axis(1e-2, 1e6, 200).expect("static axis is valid")
}

/// Five exposures scaled by `4^0, 4^-1, …, 4^-4`.
pub fn default_bracket(capacity: u32, frames: u32, oversample: u32) -> Vec<BracketExposure> {
    geometric_bracket(capacity, frames, oversample, 4.0, 5)
}

/// `count` exposures scaled by `ratio^0, ratio^-1, …`.
pub fn geometric_bracket(capacity: u32, frames: u32, oversample: u32, ratio: f64, count: usize) -> Vec<BracketExposure> {
    (0..count)
        .map(|i| BracketExposure {
            capacity,
            frames,
            oversample,
            scale: ratio.powi(-(i as i32)),
        })
        .collect()
}

/// Evaluates each config's SNR in dB over `theta_axis`.
pub fn snr_curve(configs: &[SensorConfig], theta_axis: &[f64]) -> Result<SnrCurve, MetricsError> {
    if configs.is_empty() {
        return Err(MetricsError::Invalid("no sensor configs".into()));
    }
    let mut curve = SnrCurve::new(theta_axis.to_vec())?;
    for cfg in configs {
        cfg.validate()?;
        let n = cfg.jot_frames();
        let row = theta_axis
            .iter()
            .map(|&t| {
                SnrQuery::at(t / n as f64, cfg.capacity, n)
                    .and_then(|q| snr_h(&q))
                    .ok()
            })
            .collect();
        curve.push_row(cfg.label.clone(), row)?;
    }
    Ok(curve)
}

/// Inverse-variance bound for fusing a bracket:
/// `10·log10(Σ_i snr_i²)` with exposure `i` seeing `scale_i · θ`.
///
/// Exposures whose SNR is undefined at a point (saturated or dark) drop out;
/// a point where all drop out is `None`.
pub fn combined_snr_curve(exposures: &[BracketExposure], theta_axis: &[f64]) -> Result<Vec<Option<f64>>, MetricsError> {
    if exposures.is_empty() {
        return Err(MetricsError::Invalid("empty exposure bracket".into()));
    }
    check_axis(theta_axis)?;
    for e in exposures {
        e.sensor().validate()?;
        if !(e.scale > 0.0 && e.scale.is_finite()) {
            return Err(MetricsError::Invalid(format!("bracket scale must be > 0, got {}", e.scale)));
        }
    }
    Ok(theta_axis
        .iter()
        .map(|&t| {
            let total: f64 = exposures
                .iter()
                .filter_map(|e| e.sensor().snr_linear(e.scale * t))
                .map(|s| s * s)
                .sum();
            (total > 0.0).then(|| 10.0 * total.log10())
        })
        .collect())
}

/// First and last axis values where `row ≥ floor_db`.
pub fn span_above(theta_axis: &[f64], row: &[Option<f64>], floor_db: f64) -> Option<(f64, f64)> {
    let ok = |i: &usize| row[*i].is_some_and(|v| v >= floor_db);
    let first = (0..row.len()).find(ok)?;
    let last = (0..row.len()).rev().find(ok)?;
    Some((theta_axis[first], theta_axis[last]))
}

/// Axis value of the row's maximum.
pub fn peak_theta(theta_axis: &[f64], row: &[Option<f64>]) -> Option<f64> {
    row.iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| theta_axis[i])
}

/// `max − min` of the defined values with `lo ≤ θ ≤ hi`.
pub fn spread_db(theta_axis: &[f64], row: &[Option<f64>], lo: f64, hi: f64) -> Option<f64> {
    let vals: Vec<f64> = theta_axis
        .iter()
        .zip(row)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .filter_map(|(_, v)| *v)
        .collect();
    if vals.is_empty() {
        return None;
    }
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Some(max - min)
}
