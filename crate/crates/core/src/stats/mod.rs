//! Closed-form statistics of a photon counter that saturates at `L`.
//!
//! A jot sees `X ~ Poisson(θ)` photons per frame and reports `B = min(X, L)`.
//! This module evaluates the mean, variance and response slope of `B`, the
//! exposure-referred SNR built from them, the inverse of the mean response,
//! and an SNR-floor based dynamic range.
//!
//! All moment evaluations go through a single banded summation seeded at
//! the clipping point, so cost scales with `√θ` rather than with `L`.

mod pmf;

pub use pmf::poisson_pmf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("SNR undefined at theta={theta} (zero exposure or fully saturated)")]
    UndefinedSnr { theta: f64 },
    #[error("observed mean {mean} is at or above the counter capacity {capacity}")]
    Saturated { mean: f64, capacity: u32 },
    #[error("no exposure reaches an SNR of {floor_db} dB")]
    FloorUnreachable { floor_db: f64 },
}

/// Rate of a single jot-frame together with its counter capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClippedPoissonParams {
    theta: f64,
    capacity: u32,
}

impl ClippedPoissonParams {
    pub fn new(theta: f64, capacity: u32) -> Result<Self, StatsError> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(StatsError::Domain(format!(
                "theta must be finite and >= 0, got {theta}"
            )));
        }
        if capacity == 0 {
            return Err(StatsError::Domain("capacity must be >= 1".into()));
        }
        Ok(Self { theta, capacity })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }
}

/// SNR evaluation point: `frames` independent jot-frames summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrQuery {
    pub params: ClippedPoissonParams,
    frames: u64,
}

impl SnrQuery {
    pub fn new(params: ClippedPoissonParams, frames: u64) -> Result<Self, StatsError> {
        if frames == 0 {
            return Err(StatsError::Domain("frames must be >= 1".into()));
        }
        Ok(Self { params, frames })
    }

    /// Shorthand for `SnrQuery::new(ClippedPoissonParams::new(theta, capacity)?, frames)`.
    pub fn at(theta: f64, capacity: u32, frames: u64) -> Result<Self, StatsError> {
        Self::new(ClippedPoissonParams::new(theta, capacity)?, frames)
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }
}

/// θ-interval over which the SNR stays above a floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicRangeReport {
    pub theta_min: f64,
    pub theta_max: f64,
    pub ratio_db: f64,
    pub snr_floor_db: f64,
}

/// Mean, variance and `∂μ/∂θ` of the clipped count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClippedMoments {
    pub mean: f64,
    pub variance: f64,
    pub dmean_dtheta: f64,
}

// Summation stops once the weighted term falls below this fraction of the
// running total and is shrinking.
const BAND_EPS: f64 = 1e-19;
const MAX_BAND_TERMS: u64 = 50_000_000;

/// `ψ_q(s) = Σ_{k<q} s^k e^{−s}/k!`, i.e. `P(X ≤ q−1)` for `X ~ Poisson(s)`.
pub fn psi(q: u64, s: f64) -> Result<f64, StatsError> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(StatsError::Domain(format!(
            "psi rate must be finite and >= 0, got {s}"
        )));
    }
    if q == 0 {
        return Ok(0.0);
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let last = q - 1;
    if (last as f64) < s {
        Ok(head_mass(last, s))
    } else {
        Ok(1.0 - tail_mass(q, s))
    }
}

/// `P(X ≤ last)` summed downward from `last`; requires `last < s`.
fn head_mass(last: u64, s: f64) -> f64 {
    let mut k = last;
    let mut p = poisson_pmf(k, s);
    let mut acc = 0.0;
    loop {
        acc += p;
        if k == 0 || p == 0.0 || p < BAND_EPS * acc {
            return acc;
        }
        p *= k as f64 / s;
        k -= 1;
    }
}

/// `P(X ≥ first)` summed upward from `first`; requires `first > s`.
fn tail_mass(first: u64, s: f64) -> f64 {
    let mut k = first;
    let mut p = poisson_pmf(k, s);
    let mut acc = 0.0;
    while p > 0.0 && k - first < MAX_BAND_TERMS {
        acc += p;
        if p < BAND_EPS * acc {
            break;
        }
        k += 1;
        p *= s / k as f64;
    }
    acc
}

/// All three moments of `min(X, L)` from one banded pass.
pub fn moments(params: &ClippedPoissonParams) -> ClippedMoments {
    let theta = params.theta;
    let cap = params.capacity;
    let l = f64::from(cap);

    if theta == 0.0 {
        return ClippedMoments {
            mean: 0.0,
            variance: 0.0,
            dmean_dtheta: 1.0,
        };
    }

    if cap == 1 {
        // B is Bernoulli(1 − e^{−θ})
        let off = (-theta).exp();
        let on = -(-theta).exp_m1();
        return ClippedMoments {
            mean: on,
            variance: off * on,
            dmean_dtheta: off,
        };
    }

    if theta < l {
        // Excess D = (X − L)^+ over the tail k ≥ L:
        //   μ = θ − E[D],  σ² = θ − E[D²] − E[D]² − 2(L − θ)E[D]
        let (mass, e_d, e_d2) = excess_sums(cap, theta);
        let mean = theta - e_d;
        let variance = theta - e_d2 - e_d * e_d - 2.0 * (l - theta) * e_d;
        ClippedMoments {
            mean,
            variance: clamp_variance(variance, theta),
            dmean_dtheta: 1.0 - mass,
        }
    } else {
        // Deficit U = (L − X)^+ over the head k < L:
        //   μ = L − E[U],  σ² = E[U²] − E[U]²
        let (mass, e_u, e_u2) = deficit_sums(cap, theta);
        ClippedMoments {
            mean: l - e_u,
            variance: clamp_variance(e_u2 - e_u * e_u, e_u2),
            dmean_dtheta: mass,
        }
    }
}

/// (P(X ≥ L), E[(X−L)^+], E[((X−L)^+)²]) for θ < L.
fn excess_sums(cap: u32, theta: f64) -> (f64, f64, f64) {
    let start = u64::from(cap);
    let mut k = start;
    let mut p = poisson_pmf(k, theta);
    let (mut mass, mut s1, mut s2) = (0.0, 0.0, 0.0);
    while p > 0.0 && k - start < MAX_BAND_TERMS {
        let d = (k - start) as f64;
        mass += p;
        s1 += d * p;
        s2 += d * d * p;
        let next_ratio = theta / (k + 1) as f64;
        let growth = ((d + 1.0) * (d + 1.0) + 1.0) / (d * d + 1.0);
        if p * (d * d + 1.0) < BAND_EPS * (mass + s2) && next_ratio * growth < 1.0 {
            break;
        }
        k += 1;
        p *= next_ratio;
    }
    (mass, s1, s2)
}

/// (P(X < L), E[(L−X)^+], E[((L−X)^+)²]) for θ ≥ L.
fn deficit_sums(cap: u32, theta: f64) -> (f64, f64, f64) {
    let l = u64::from(cap);
    let mut k = l - 1;
    let mut p = poisson_pmf(k, theta);
    let (mut mass, mut s1, mut s2) = (0.0, 0.0, 0.0);
    loop {
        let u = (l - k) as f64;
        mass += p;
        s1 += u * p;
        s2 += u * u * p;
        if k == 0 || p == 0.0 {
            break;
        }
        let next_ratio = k as f64 / theta;
        let growth = (u + 1.0) * (u + 1.0) / (u * u);
        if p * u * u < BAND_EPS * s2 && next_ratio * growth < 1.0 {
            break;
        }
        p *= next_ratio;
        k -= 1;
    }
    (mass, s1, s2)
}

fn clamp_variance(v: f64, scale: f64) -> f64 {
    if v >= 0.0 {
        v
    } else {
        debug_assert!(
            -v <= 1e-12 * scale.abs().max(1.0),
            "variance residual {v} exceeds rounding tolerance (scale {scale})"
        );
        0.0
    }
}

/// `μ_B = E[min(X, L)]`.
pub fn mean_clipped(params: &ClippedPoissonParams) -> f64 {
    moments(params).mean
}

/// `σ_B² = Var[min(X, L)]`.
pub fn var_clipped(params: &ClippedPoissonParams) -> f64 {
    moments(params).variance
}

/// `∂μ_B/∂θ`, which collapses to `P(X < L)`.
pub fn dmean_dtheta(params: &ClippedPoissonParams) -> f64 {
    moments(params).dmean_dtheta
}

/// Exposure-referred SNR as a linear ratio: `√T·θ·(∂μ_B/∂θ)/σ_B`.
pub fn snr_h_linear(query: &SnrQuery) -> Result<f64, StatsError> {
    let theta = query.params.theta;
    let m = moments(&query.params);
    let sigma = m.variance.sqrt();
    if theta == 0.0 || !(sigma >= 1e-300) {
        return Err(StatsError::UndefinedSnr { theta });
    }
    let snr = (query.frames as f64).sqrt() * theta * m.dmean_dtheta / sigma;
    if snr > 0.0 && snr.is_finite() {
        Ok(snr)
    } else {
        Err(StatsError::UndefinedSnr { theta })
    }
}

/// Exposure-referred SNR in decibels (`20·log10` of [`snr_h_linear`]).
pub fn snr_h(query: &SnrQuery) -> Result<f64, StatsError> {
    snr_h_linear(query).map(|s| 20.0 * s.log10())
}

/// Solves `mean_clipped(θ, L) = observed_mean` for θ.
///
/// Safeguarded Newton on a bracket that is bisected in log θ whenever the
/// Newton step leaves it.
pub fn invert_mean(observed_mean: f64, capacity: u32) -> Result<f64, StatsError> {
    if capacity == 0 {
        return Err(StatsError::Domain("capacity must be >= 1".into()));
    }
    if !(observed_mean >= 0.0) || observed_mean.is_infinite() {
        return Err(StatsError::Domain(format!(
            "observed mean must be finite and >= 0, got {observed_mean}"
        )));
    }
    let l = f64::from(capacity);
    if observed_mean >= l {
        return Err(StatsError::Saturated {
            mean: observed_mean,
            capacity,
        });
    }
    if observed_mean == 0.0 {
        return Ok(0.0);
    }
    if capacity == 1 {
        return Ok(-(-observed_mean).ln_1p());
    }

    let eval = |theta: f64| moments(&ClippedPoissonParams { theta, capacity });

    // μ(θ) ≤ θ, so the root is at least the observed mean.
    let mut lo = observed_mean.max(1e-300);
    let mut hi = (64.0 * l).max(2.0 * lo);
    while eval(hi).mean < observed_mean {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(StatsError::Saturated {
                mean: observed_mean,
                capacity,
            });
        }
    }

    let mut theta = lo;
    for _ in 0..400 {
        let m = eval(theta);
        let f = m.mean - observed_mean;
        if f == 0.0 {
            return Ok(theta);
        }
        if f < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        let newton = theta - f / m.dmean_dtheta;
        let next = if m.dmean_dtheta > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            (lo * hi).sqrt()
        };
        if (next - theta).abs() <= 1e-15 * theta || (hi - lo) <= 4.0 * f64::EPSILON * lo {
            return Ok(next);
        }
        theta = next;
    }
    Ok(theta)
}

/// Points per decade of the coarse scan in [`dynamic_range`].
const DR_GRID_PER_DECADE: f64 = 40.0;

/// θ-interval where `snr_h(θ, L, T) ≥ snr_floor_db`.
///
/// A log-spaced scan locates the region; both edges are then refined by
/// bisection in log θ.
pub fn dynamic_range(
    capacity: u32,
    frames: u64,
    snr_floor_db: f64,
) -> Result<DynamicRangeReport, StatsError> {
    if capacity == 0 || frames == 0 {
        return Err(StatsError::Domain(
            "capacity and frames must be >= 1".into(),
        ));
    }
    if snr_floor_db.is_nan() {
        return Err(StatsError::Domain("SNR floor is NaN".into()));
    }
    if snr_floor_db == f64::INFINITY {
        return Err(StatsError::FloorUnreachable {
            floor_db: snr_floor_db,
        });
    }

    let t = frames as f64;
    let l = f64::from(capacity);
    // Well below the √(Tθ) crossing of the floor, and deep in saturation.
    let lo = (10f64.powf(snr_floor_db / 10.0) / t * 1e-3).clamp(1e-300, 1e-12);
    let hi = 100.0 * (l + 10.0) * t.log10().max(1.0);

    let above = |theta: f64| -> bool {
        SnrQuery::at(theta, capacity, frames)
            .and_then(|q| snr_h(&q))
            .map(|db| db >= snr_floor_db)
            .unwrap_or(false)
    };

    let (log_lo, log_hi) = (lo.log10(), hi.log10());
    let n = ((log_hi - log_lo) * DR_GRID_PER_DECADE).ceil() as usize + 1;
    let grid: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(log_lo + (log_hi - log_lo) * i as f64 / (n - 1) as f64))
        .collect();
    let flags: Vec<bool> = grid.iter().map(|&th| above(th)).collect();

    let first = flags.iter().position(|&b| b);
    let last = flags.iter().rposition(|&b| b);
    let (Some(first), Some(last)) = (first, last) else {
        return Err(StatsError::FloorUnreachable {
            floor_db: snr_floor_db,
        });
    };

    let theta_min = if first == 0 {
        grid[0]
    } else {
        bisect_edge(grid[first - 1], grid[first], &above)
    };
    let theta_max = if last + 1 == grid.len() {
        grid[last]
    } else {
        bisect_edge(grid[last + 1], grid[last], &above)
    };

    Ok(DynamicRangeReport {
        theta_min,
        theta_max,
        ratio_db: 20.0 * (theta_max / theta_min).log10(),
        snr_floor_db,
    })
}

/// Bisects in log space between a point below the floor and one above it.
fn bisect_edge(mut outside: f64, mut inside: f64, above: &impl Fn(f64) -> bool) -> f64 {
    for _ in 0..100 {
        let mid = (outside * inside).sqrt();
        if mid == outside || mid == inside {
            break;
        }
        if above(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}
