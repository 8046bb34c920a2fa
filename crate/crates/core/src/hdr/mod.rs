//! HDR reconstruction from several clipped-count exposures.
//!
//! The pipeline is: optional Gaussian smoothing of each per-exposure sum,
//! per-pixel inversion of the clipped mean to a flux estimate, then a
//! per-pixel fixed-point fusion where each exposure is weighted by its
//! exposure-referred SNR (squared by default) evaluated at the current
//! fused flux. A tone map turns the fused flux into an 8-bit image.

mod denoise;

pub use denoise::denoise;

use crate::display::GrayImage;
use crate::sensor::{ExposureConfig, PhotonFluxMap, SumImage};
use crate::stats::{invert_mean, snr_h_linear, SnrQuery, StatsError};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HdrError {
    #[error("exposure stack is empty")]
    EmptyStack,
    #[error("exposure {index} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        index: usize,
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("no exposure has a single unsaturated pixel")]
    NoValidPixels,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Real-valued per-pixel sums for one exposure (raw or smoothed).
#[derive(Debug, Clone, PartialEq)]
pub struct SumMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    config: ExposureConfig,
}

impl SumMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, config: ExposureConfig) -> Result<Self, HdrError> {
        config
            .validate()
            .map_err(|e| HdrError::InvalidParameter(e.to_string()))?;
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(HdrError::InvalidParameter(format!(
                "sum map {width}x{height} does not match {} values",
                values.len()
            )));
        }
        let max = config.max_sum() as f64;
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v <= max)) {
            return Err(HdrError::InvalidParameter(format!(
                "sum value {v} outside [0, {max}]"
            )));
        }
        Ok(Self::from_parts(width, height, values, config))
    }

    pub(crate) fn from_parts(width: usize, height: usize, values: Vec<f64>, config: ExposureConfig) -> Self {
        Self {
            width,
            height,
            values,
            config,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn config(&self) -> &ExposureConfig {
        &self.config
    }
}

impl From<&SumImage> for SumMap {
    fn from(img: &SumImage) -> Self {
        Self::from_parts(
            img.width(),
            img.height(),
            img.sum().iter().map(|&s| s as f64).collect(),
            *img.config(),
        )
    }
}

/// Ordered exposures of one scene, all with the same dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureStack {
    entries: Vec<SumMap>,
}

impl ExposureStack {
    pub fn new(entries: Vec<SumMap>) -> Result<Self, HdrError> {
        let first = entries.first().ok_or(HdrError::EmptyStack)?;
        let (w, h) = (first.width, first.height);
        for (index, e) in entries.iter().enumerate() {
            if e.width != w || e.height != h {
                return Err(HdrError::DimensionMismatch {
                    index,
                    want_w: w,
                    want_h: h,
                    got_w: e.width,
                    got_h: e.height,
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn from_sums(sums: &[SumImage]) -> Result<Self, HdrError> {
        Self::new(sums.iter().map(SumMap::from).collect())
    }

    pub fn entries(&self) -> &[SumMap] {
        &self.entries
    }

    pub fn width(&self) -> usize {
        self.entries[0].width
    }

    pub fn height(&self) -> usize {
        self.entries[0].height
    }
}

/// How exposures are weighted during fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Inverse exposure-referred variance, `w ∝ SNR_H²`.
    #[default]
    SnrSquared,
    /// `w ∝ SNR_H`.
    Snr,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub max_iters: u32,
    pub rel_tol: f64,
    pub denoise_sigma: f64,
    /// Pixels whose mean count reaches `saturation_margin · L` are discarded.
    pub saturation_margin: f64,
    pub weighting: Weighting,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            max_iters: 10,
            rel_tol: 1e-4,
            denoise_sigma: 0.0,
            saturation_margin: 0.995,
            weighting: Weighting::SnrSquared,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), HdrError> {
        if self.max_iters == 0 {
            return Err(HdrError::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(HdrError::InvalidParameter(format!(
                "rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if !(self.denoise_sigma >= 0.0 && self.denoise_sigma.is_finite()) {
            return Err(HdrError::InvalidParameter(format!(
                "denoise_sigma must be finite and >= 0, got {}",
                self.denoise_sigma
            )));
        }
        if !(self.saturation_margin > 0.0 && self.saturation_margin < 1.0) {
            return Err(HdrError::InvalidParameter(format!(
                "saturation_margin must lie in (0, 1), got {}",
                self.saturation_margin
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelState {
    Valid,
    /// No photons counted; the estimate is exactly zero.
    Dark,
    /// Mean count at or above the saturation margin; carries no estimate.
    Saturated,
}

/// Per-pixel inversion of one exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureEstimate {
    width: usize,
    height: usize,
    theta_hat: Vec<f64>,
    state: Vec<PixelState>,
    config: ExposureConfig,
}

impl ExposureEstimate {
    /// Estimated photons per jot per frame.
    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn state(&self) -> &[PixelState] {
        &self.state
    }

    pub fn config(&self) -> &ExposureConfig {
        &self.config
    }

    /// Flux estimate in photons per second at pixel `i`.
    pub fn flux(&self, i: usize) -> f64 {
        self.config.flux_from_jot_theta(self.theta_hat[i])
    }

    fn is_usable(&self, i: usize) -> bool {
        self.state[i] != PixelState::Saturated
    }
}

/// Inverts the clipped mean at every pixel of `image`.
pub fn estimate_exposure(image: &SumMap, saturation_margin: f64) -> Result<ExposureEstimate, HdrError> {
    let cfg = image.config;
    let samples = cfg.samples_per_pixel() as f64;
    let cap = cfg.capacity;
    let limit = saturation_margin * f64::from(cap);

    let per_pixel: Result<Vec<(f64, PixelState)>, StatsError> = image
        .values
        .par_iter()
        .map(|&sum| {
            let m = sum / samples;
            if m >= limit {
                Ok((0.0, PixelState::Saturated))
            } else if m == 0.0 {
                Ok((0.0, PixelState::Dark))
            } else {
                invert_mean(m, cap).map(|t| (t, PixelState::Valid))
            }
        })
        .collect();
    let (theta_hat, state) = per_pixel?.into_iter().unzip();

    Ok(ExposureEstimate {
        width: image.width,
        height: image.height,
        theta_hat,
        state,
        config: cfg,
    })
}

/// Fused flux map.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrEstimate {
    width: usize,
    height: usize,
    flux_hat: Vec<f64>,
    weight_sum: Vec<f64>,
    iterations: Vec<u32>,
}

impl HdrEstimate {
    pub fn new(width: usize, height: usize, flux_hat: Vec<f64>, weight_sum: Vec<f64>) -> Result<Self, HdrError> {
        if width == 0 || height == 0 || flux_hat.len() != width * height || weight_sum.len() != flux_hat.len() {
            return Err(HdrError::InvalidParameter("estimate shape mismatch".into()));
        }
        let iterations = vec![0; flux_hat.len()];
        Ok(Self {
            width,
            height,
            flux_hat,
            weight_sum,
            iterations,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Photons per second.
    pub fn flux_hat(&self) -> &[f64] {
        &self.flux_hat
    }

    /// Total fusion weight per pixel; zero where no exposure was usable.
    pub fn weight_sum(&self) -> &[f64] {
        &self.weight_sum
    }

    /// Fixed-point updates performed per pixel.
    pub fn iterations(&self) -> &[u32] {
        &self.iterations
    }
}

/// Flux of the largest mean an exposure still accepts as unsaturated.
fn saturation_flux(cfg: &ExposureConfig, margin: f64) -> Result<f64, StatsError> {
    let theta = invert_mean(margin * f64::from(cfg.capacity), cfg.capacity)?;
    Ok(cfg.flux_from_jot_theta(theta))
}

fn exposure_weight(cfg: &ExposureConfig, flux: f64, weighting: Weighting) -> f64 {
    let snr = SnrQuery::at(cfg.jot_theta(flux), cfg.capacity, cfg.samples_per_pixel())
        .and_then(|q| snr_h_linear(&q))
        .unwrap_or(0.0);
    match weighting {
        Weighting::SnrSquared => snr * snr,
        Weighting::Snr => snr,
    }
}

/// Smooths, inverts and fuses every exposure of `stack`.
pub fn fuse(stack: &ExposureStack, config: &FusionConfig) -> Result<HdrEstimate, HdrError> {
    config.validate()?;
    let estimates = stack
        .entries
        .iter()
        .map(|e| estimate_exposure(&denoise(e, config.denoise_sigma), config.saturation_margin))
        .collect::<Result<Vec<_>, _>>()?;
    fuse_estimates(&estimates, config)
}

/// Fixed-point fusion of already inverted exposures.
pub fn fuse_estimates(estimates: &[ExposureEstimate], config: &FusionConfig) -> Result<HdrEstimate, HdrError> {
    config.validate()?;
    let first = estimates.first().ok_or(HdrError::EmptyStack)?;
    let (width, height) = (first.width, first.height);
    for (index, e) in estimates.iter().enumerate() {
        if e.width != width || e.height != height {
            return Err(HdrError::DimensionMismatch {
                index,
                want_w: width,
                want_h: height,
                got_w: e.width,
                got_h: e.height,
            });
        }
    }
    let n_pixels = width * height;
    if !(0..n_pixels).any(|i| estimates.iter().any(|e| e.is_usable(i))) {
        return Err(HdrError::NoValidPixels);
    }

    // Fallback for pixels saturated everywhere: the bound of the exposure
    // with the shortest frame time (largest bound on ties).
    let mut fallback: Option<(f64, f64)> = None;
    for e in estimates {
        let bound = saturation_flux(&e.config, config.saturation_margin)?;
        let tau = e.config.tau;
        fallback = match fallback {
            Some((t, b)) if t < tau || (t == tau && b >= bound) => Some((t, b)),
            _ => Some((tau, bound)),
        };
    }
    let saturated_flux = fallback.map(|(_, b)| b).unwrap_or(0.0);

    let results: Vec<(f64, f64, u32)> = (0..n_pixels)
        .into_par_iter()
        .map(|i| fuse_pixel(estimates, i, config, saturated_flux))
        .collect();

    let mut flux_hat = Vec::with_capacity(n_pixels);
    let mut weight_sum = Vec::with_capacity(n_pixels);
    let mut iterations = Vec::with_capacity(n_pixels);
    for (f, w, it) in results {
        flux_hat.push(f);
        weight_sum.push(w);
        iterations.push(it);
    }
    Ok(HdrEstimate {
        width,
        height,
        flux_hat,
        weight_sum,
        iterations,
    })
}

fn fuse_pixel(estimates: &[ExposureEstimate], i: usize, config: &FusionConfig, saturated_flux: f64) -> (f64, f64, u32) {
    let usable: Vec<&ExposureEstimate> = estimates.iter().filter(|e| e.is_usable(i)).collect();
    if usable.is_empty() {
        return (saturated_flux, 0.0, 0);
    }

    // Start from the usable exposure with the best SNR at its own estimate;
    // ties go to the larger T·K²·L, then to stack order.
    let mut best: Option<(f64, u64, &ExposureEstimate)> = None;
    for e in &usable {
        let own = exposure_weight(&e.config, e.flux(i), Weighting::Snr);
        let headroom = e.config.max_sum();
        let better = match best {
            None => true,
            Some((s, h, _)) => own > s || (own == s && headroom > h),
        };
        if better {
            best = Some((own, headroom, e));
        }
    }
    let (_, _, init) = best.expect("usable is non-empty");
    let mut flux = init.flux(i);
    if flux == 0.0 {
        return (0.0, 0.0, 0);
    }
    if usable.len() == 1 {
        let w = exposure_weight(&init.config, flux, config.weighting);
        return (flux, w, 1);
    }

    let mut weight_total = 0.0;
    let mut iters = 0;
    while iters < config.max_iters {
        iters += 1;
        let (mut num, mut den) = (0.0, 0.0);
        for e in &usable {
            let w = exposure_weight(&e.config, flux, config.weighting);
            num += w * e.flux(i);
            den += w;
        }
        if den.is_nan() || den <= 0.0 {
            break;
        }
        weight_total = den;
        let next = num / den;
        let converged = (next - flux).abs() <= config.rel_tol * flux;
        flux = next;
        if converged || flux == 0.0 {
            break;
        }
    }
    (flux, weight_total, iters)
}

/// Gamma tone map: `round(255 · clamp(c/c_max, 0, 1)^{1/γ})`.
pub fn tone_map(estimate: &HdrEstimate, c_max: f64, gamma: f64) -> Result<GrayImage, HdrError> {
    tone_map_values(estimate.width, estimate.height, &estimate.flux_hat, c_max, gamma)
}

/// Same mapping applied to a ground-truth flux map.
pub fn tone_map_scene(scene: &PhotonFluxMap, c_max: f64, gamma: f64) -> Result<GrayImage, HdrError> {
    tone_map_values(scene.width(), scene.height(), scene.flux(), c_max, gamma)
}

fn tone_map_values(width: usize, height: usize, flux: &[f64], c_max: f64, gamma: f64) -> Result<GrayImage, HdrError> {
    if !(c_max > 0.0 && c_max.is_finite()) {
        return Err(HdrError::InvalidParameter(format!("c_max must be > 0, got {c_max}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(HdrError::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    let inv = 1.0 / gamma;
    let pixels = flux
        .iter()
        .map(|&c| (255.0 * (c / c_max).clamp(0.0, 1.0).powf(inv)).round() as u8)
        .collect();
    GrayImage::new(width, height, pixels).map_err(|e| HdrError::InvalidParameter(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::capture;
    use std::f64::consts::LN_2;

    fn cfg(tau: f64, cap: u32, frames: u32, k: u32, seed: u64) -> ExposureConfig {
        ExposureConfig::new(tau, cap, frames, k, seed).unwrap()
    }

    fn one_pixel(sum: f64, c: ExposureConfig) -> SumMap {
        SumMap::new(1, 1, vec![sum], c).unwrap()
    }

    #[test]
    fn estimate_examples() {
        let c = cfg(0.25e-6, 1, 4000, 1, 0);
        let dark = estimate_exposure(&SumMap::new(2, 1, vec![0.0, 0.0], c).unwrap(), 0.995).unwrap();
        assert_eq!(dark.theta_hat(), &[0.0, 0.0]);
        assert_eq!(dark.state(), &[PixelState::Dark, PixelState::Dark]);

        let half = estimate_exposure(&one_pixel(2000.0, c), 0.995).unwrap();
        assert!((half.theta_hat()[0] - LN_2).abs() < 1e-15);
        assert_eq!(half.state()[0], PixelState::Valid);
        assert!((half.flux(0) - LN_2 / 0.25e-6).abs() < 1e-6);

        let full = estimate_exposure(&one_pixel(4000.0, c), 0.995).unwrap();
        assert_eq!(full.state()[0], PixelState::Saturated);
    }

    #[test]
    fn flux_restores_oversampling() {
        let c = cfg(1e-6, 1, 250, 2, 0);
        let e = estimate_exposure(&one_pixel(500.0, c), 0.995).unwrap();
        assert!((e.theta_hat()[0] - LN_2).abs() < 1e-15);
        assert!((e.flux(0) - 4.0 * LN_2 / 1e-6).abs() < 1e-6);
    }

    #[test]
    fn empty_and_mismatched_stacks() {
        assert_eq!(ExposureStack::new(vec![]), Err(HdrError::EmptyStack));
        let c = cfg(1e-3, 10, 1, 1, 0);
        let a = SumMap::new(2, 1, vec![1.0, 2.0], c).unwrap();
        let b = SumMap::new(1, 2, vec![1.0, 2.0], c).unwrap();
        assert!(matches!(
            ExposureStack::new(vec![a, b]),
            Err(HdrError::DimensionMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn fully_saturated_stack_is_rejected() {
        let c = cfg(1e-3, 10, 1, 1, 0);
        let stack = ExposureStack::new(vec![one_pixel(10.0, c)]).unwrap();
        assert_eq!(fuse(&stack, &FusionConfig::default()), Err(HdrError::NoValidPixels));
    }

    #[test]
    fn single_exposure_passes_through() {
        let scene = PhotonFluxMap::new(8, 8, (0..64).map(|i| 1e5 * i as f64).collect()).unwrap();
        let c = cfg(2e-6, 3, 200, 1, 4);
        let img = capture(&scene, &c).unwrap();
        let stack = ExposureStack::from_sums(std::slice::from_ref(&img)).unwrap();
        let fused = fuse(&stack, &FusionConfig::default()).unwrap();
        let single = estimate_exposure(&SumMap::from(&img), 0.995).unwrap();
        for i in 0..64 {
            match single.state()[i] {
                PixelState::Saturated => assert_eq!(fused.weight_sum()[i], 0.0),
                _ => assert_eq!(fused.flux_hat()[i], single.flux(i)),
            }
        }
    }

    #[test]
    fn identical_exposures_cancel() {
        let scene = PhotonFluxMap::new(8, 8, (0..64).map(|i| 3e4 * (i + 1) as f64).collect()).unwrap();
        let c = cfg(1e-5, 7, 50, 1, 9);
        let img = capture(&scene, &c).unwrap();
        let one = fuse(&ExposureStack::from_sums(std::slice::from_ref(&img)).unwrap(), &FusionConfig::default()).unwrap();
        let two = fuse(&ExposureStack::from_sums(&[img.clone(), img]).unwrap(), &FusionConfig::default()).unwrap();
        for (a, b) in one.flux_hat().iter().zip(two.flux_hat()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn saturated_exposures_get_zero_weight() {
        // Long exposure saturates, short one does not: result equals short one.
        let long = cfg(1e-3, 10, 1, 1, 0);
        let short = cfg(1e-6, 10, 1, 1, 0);
        let stack = ExposureStack::new(vec![one_pixel(10.0, long), one_pixel(4.0, short)]).unwrap();
        let fused = fuse(&stack, &FusionConfig::default()).unwrap();
        let alone = estimate_exposure(&one_pixel(4.0, short), 0.995).unwrap();
        assert_eq!(fused.flux_hat()[0], alone.flux(0));
        assert!(fused.weight_sum()[0] > 0.0);
    }

    #[test]
    fn all_saturated_pixel_uses_shortest_bound() {
        let long = cfg(1e-3, 10, 1, 1, 0);
        let short = cfg(1e-6, 10, 1, 1, 0);
        let stack = ExposureStack::new(vec![
            SumMap::new(2, 1, vec![10.0, 1.0], long).unwrap(),
            SumMap::new(2, 1, vec![10.0, 0.0], short).unwrap(),
        ])
        .unwrap();
        let fused = fuse(&stack, &FusionConfig::default()).unwrap();
        let bound = invert_mean(0.995 * 10.0, 10).unwrap() / 1e-6;
        assert_eq!(fused.flux_hat()[0], bound);
        assert_eq!(fused.weight_sum()[0], 0.0);
        assert!(fused.weight_sum()[1] > 0.0);
    }

    #[test]
    fn fusion_is_scale_consistent() {
        let scene = PhotonFluxMap::new(16, 4, (0..64).map(|i| 2e4 * (i + 1) as f64).collect()).unwrap();
        let configs = [cfg(1e-4, 50, 1, 1, 1), cfg(1e-6, 1, 300, 1, 2), cfg(5e-6, 7, 40, 1, 3)];
        let s = 8.0;
        let scaled_scene =
            PhotonFluxMap::new(16, 4, scene.flux().iter().map(|c| c / s).collect()).unwrap();
        let fused_at = |scene: &PhotonFluxMap, scale: f64| {
            let sums: Vec<_> = configs
                .iter()
                .map(|c| capture(scene, &ExposureConfig { tau: c.tau * scale, ..*c }).unwrap())
                .collect();
            fuse(&ExposureStack::from_sums(&sums).unwrap(), &FusionConfig::default()).unwrap()
        };
        let base = fused_at(&scene, 1.0);
        let scaled = fused_at(&scaled_scene, s);
        for (a, b) in base.flux_hat().iter().zip(scaled.flux_hat()) {
            assert!((a - b * s).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {}", b * s);
        }
    }

    #[test]
    fn weights_are_finite_and_nonnegative() {
        let scene = PhotonFluxMap::new(32, 1, (0..32).map(|i| 10f64.powf(i as f64 / 4.0)).collect()).unwrap();
        let sums: Vec<_> = [cfg(1e-3, 4000, 1, 1, 1), cfg(0.25e-6, 1, 4000, 1, 2)]
            .iter()
            .map(|c| capture(&scene, c).unwrap())
            .collect();
        let fused = fuse(&ExposureStack::from_sums(&sums).unwrap(), &FusionConfig::default()).unwrap();
        assert!(fused.weight_sum().iter().all(|w| w.is_finite() && *w >= 0.0));
        assert!(fused.flux_hat().iter().all(|c| c.is_finite() && *c >= 0.0));
    }

    #[test]
    fn snr_weighting_switch_changes_result() {
        let long = cfg(1e-5, 20, 1, 1, 0);
        let short = cfg(1e-6, 20, 1, 1, 0);
        let stack = ExposureStack::new(vec![one_pixel(15.0, long), one_pixel(1.0, short)]).unwrap();
        let sq = fuse(&stack, &FusionConfig::default()).unwrap();
        let lin = fuse(
            &stack,
            &FusionConfig {
                weighting: Weighting::Snr,
                ..FusionConfig::default()
            },
        )
        .unwrap();
        assert_ne!(sq.flux_hat()[0], lin.flux_hat()[0]);
    }

    #[test]
    fn fusion_config_validation() {
        let bad = [
            FusionConfig { max_iters: 0, ..Default::default() },
            FusionConfig { rel_tol: 0.0, ..Default::default() },
            FusionConfig { rel_tol: 1.0, ..Default::default() },
            FusionConfig { denoise_sigma: -1.0, ..Default::default() },
            FusionConfig { saturation_margin: 1.0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert!(FusionConfig::default().validate().is_ok());
    }

    #[test]
    fn tone_map_examples() {
        let c_max = 6e6;
        let est = HdrEstimate::new(
            4,
            1,
            vec![0.0, c_max, c_max * 0.5f64.powf(2.2), 2.0 * c_max],
            vec![1.0; 4],
        )
        .unwrap();
        let img = tone_map(&est, c_max, 2.2).unwrap();
        assert_eq!(img.pixels()[0], 0);
        assert_eq!(img.pixels()[1], 255);
        assert!((i32::from(img.pixels()[2]) - 128).abs() <= 1);
        assert_eq!(img.pixels()[3], 255);
        assert!(tone_map(&est, 0.0, 2.2).is_err());
        assert!(tone_map(&est, c_max, 0.0).is_err());
    }
}
