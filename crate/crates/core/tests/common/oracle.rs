//! Independent reference values for the clipped-Poisson moments.
//!
//! Everything here is summed term by term from `k = 0` in 256-bit binary
//! floating point, so it shares no code path with `qis_core::stats`.

use astro_float::{BigFloat, Consts, RoundingMode};

const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Oracle {
    consts: Consts,
}

/// Raw sums over the un-clipped head `k < L` plus the exact tail mass.
struct HeadSums {
    mass: BigFloat,
    first: BigFloat,
    second: BigFloat,
}

impl Oracle {
    pub fn new() -> Self {
        Self {
            consts: Consts::new().expect("constants cache"),
        }
    }

    fn big(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, PREC)
    }

    fn head_sums(&mut self, theta: &BigFloat, cap: u32) -> HeadSums {
        let mut p = theta.neg().exp(PREC, RM, &mut self.consts);
        let mut mass = self.big(0.0);
        let mut first = self.big(0.0);
        let mut second = self.big(0.0);
        for k in 0..cap {
            let kb = BigFloat::from_u32(k, PREC);
            let kp = kb.mul(&p, PREC, RM);
            mass = mass.add(&p, PREC, RM);
            first = first.add(&kp, PREC, RM);
            second = second.add(&kb.mul(&kp, PREC, RM), PREC, RM);
            let next = BigFloat::from_u32(k + 1, PREC);
            p = p.mul(theta, PREC, RM).div(&next, PREC, RM);
        }
        HeadSums { mass, first, second }
    }

    fn mean_var_big(&mut self, theta: &BigFloat, cap: u32) -> (BigFloat, BigFloat) {
        let h = self.head_sums(theta, cap);
        let l = BigFloat::from_u32(cap, PREC);
        let tail = self.big(1.0).sub(&h.mass, PREC, RM);
        let mean = h.first.add(&l.mul(&tail, PREC, RM), PREC, RM);
        let l2 = l.mul(&l, PREC, RM);
        let second = h.second.add(&l2.mul(&tail, PREC, RM), PREC, RM);
        let var = second.sub(&mean.mul(&mean, PREC, RM), PREC, RM);
        (mean, var)
    }

    /// (μ_B, σ_B²) rounded to f64.
    pub fn mean_var(&mut self, theta: f64, cap: u32) -> (f64, f64) {
        let t = self.big(theta);
        let (m, v) = self.mean_var_big(&t, cap);
        (to_f64(&m), to_f64(&v))
    }

    /// Central finite difference of μ_B with step `h`, taken in 256-bit
    /// arithmetic so the difference keeps its significant digits even where
    /// μ_B is within an f64 ulp of `L`.
    pub fn mean_slope_fd(&mut self, theta: f64, cap: u32, h: f64) -> f64 {
        let t = self.big(theta);
        let hb = self.big(h);
        let (up, _) = self.mean_var_big(&t.add(&hb, PREC, RM), cap);
        let (down, _) = self.mean_var_big(&t.sub(&hb, PREC, RM), cap);
        let two_h = hb.mul(&self.big(2.0), PREC, RM);
        to_f64(&up.sub(&down, PREC, RM).div(&two_h, PREC, RM))
    }

    /// Forward difference, for θ = 0 where the central stencil leaves the domain.
    pub fn mean_slope_forward(&mut self, theta: f64, cap: u32, h: f64) -> f64 {
        let t = self.big(theta);
        let hb = self.big(h);
        let (up, _) = self.mean_var_big(&t.add(&hb, PREC, RM), cap);
        let (at, _) = self.mean_var_big(&t, cap);
        to_f64(&up.sub(&at, PREC, RM).div(&hb, PREC, RM))
    }
}

fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let s = format!("{x}");
    s.parse::<f64>()
        .unwrap_or_else(|e| panic!("cannot parse big float {s:?}: {e}"))
}
