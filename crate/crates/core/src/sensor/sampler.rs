//! Clipped Poisson sampling.
//!
//! Small rates use inversion by sequential search over a cached CDF that
//! stops at the clipping point; large rates use Hörmann's PTRS transformed
//! rejection. Transcendentals come from `libm` so draws are bit-identical
//! across platforms for a given stream.

use super::rng::DrawStream;

const INVERSION_LIMIT: f64 = 30.0;

#[derive(Debug, Clone)]
pub(crate) enum ClippedPoissonSampler {
    Zero,
    Inversion { cdf: Vec<f64>, capacity: u32 },
    Ptrs(Ptrs),
}

#[derive(Debug, Clone)]
pub(crate) struct Ptrs {
    lam: f64,
    loglam: f64,
    a: f64,
    b: f64,
    log_invalpha: f64,
    vr: f64,
    capacity: u32,
}

impl ClippedPoissonSampler {
    pub(crate) fn new(theta: f64, capacity: u32) -> Self {
        debug_assert!(theta >= 0.0 && theta.is_finite() && capacity >= 1);
        if theta == 0.0 {
            return Self::Zero;
        }
        if theta < INVERSION_LIMIT {
            // F(k) for k = 0..L-1; anything past the table is clipped to L.
            let mut cdf = Vec::with_capacity(capacity.min(128) as usize);
            let mut p = libm::exp(-theta);
            let mut acc = p;
            cdf.push(acc);
            let mut k = 1u32;
            while k < capacity && acc < 1.0 {
                p *= theta / f64::from(k);
                let next = acc + p;
                if next == acc {
                    break;
                }
                acc = next;
                cdf.push(acc);
                k += 1;
            }
            return Self::Inversion { cdf, capacity };
        }
        let slam = libm::sqrt(theta);
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        Self::Ptrs(Ptrs {
            lam: theta,
            loglam: libm::log(theta),
            a,
            b,
            log_invalpha: libm::log(1.1239 + 1.1328 / (b - 3.4)),
            vr: 0.9277 - 3.6224 / (b - 2.0),
            capacity,
        })
    }

    #[inline]
    pub(crate) fn sample(&self, rng: &mut DrawStream) -> u32 {
        match self {
            Self::Zero => 0,
            Self::Inversion { cdf, capacity } => {
                let u = rng.next_f64();
                let k = cdf.iter().position(|&f| u < f).unwrap_or(cdf.len());
                (k as u32).min(*capacity)
            }
            Self::Ptrs(p) => p.sample(rng),
        }
    }
}

impl Ptrs {
    fn sample(&self, rng: &mut DrawStream) -> u32 {
        loop {
            let u = rng.next_f64() - 0.5;
            let v = rng.next_f64();
            let us = 0.5 - u.abs();
            let kf = libm::floor((2.0 * self.a / us + self.b) * u + self.lam + 0.43);
            if us >= 0.07 && v <= self.vr {
                return self.clip(kf);
            }
            if kf < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = libm::log(v) + self.log_invalpha - libm::log(self.a / (us * us) + self.b);
            let rhs = -self.lam + kf * self.loglam - libm::lgamma(kf + 1.0);
            if lhs <= rhs {
                return self.clip(kf);
            }
        }
    }

    #[inline]
    fn clip(&self, kf: f64) -> u32 {
        if kf >= f64::from(self.capacity) {
            self.capacity
        } else {
            kf as u32
        }
    }
}
