//! Accurate Poisson probability mass evaluation.
//!
//! Uses Loader's saddle-point expansion, which keeps full relative precision
//! for large counts and rates where `k·ln θ − θ − ln k!` cancels badly.

use std::f64::consts::PI;

// stirlerr(n) = ln n! − (n + ½)·ln n + n − ½·ln(2π) for n = 0..=15.
#[allow(clippy::excessive_precision)]
const STIRLERR_TABLE: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_67,
    0.041_340_695_955_409_294_093_82,
    0.027_677_925_684_998_339_148_79,
    0.020_790_672_103_765_093_111_52,
    0.016_644_691_189_821_192_163_19,
    0.013_876_128_823_070_747_998_75,
    0.011_896_709_945_891_770_095_06,
    0.010_411_265_261_972_096_497_48,
    0.009_255_462_182_712_732_917_729,
    0.008_330_563_433_362_871_256_469,
    0.007_573_675_487_951_840_794_972,
    0.006_942_840_107_209_529_865_664,
    0.006_408_994_188_004_207_068_44,
    0.005_951_370_112_758_847_735_624,
    0.005_554_733_551_962_801_371_039,
];

/// Error term of Stirling's approximation to ln n!.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 15 {
        return STIRLERR_TABLE[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x·ln(x/m) + m − x`, evaluated without cancellation when
/// `x ≈ m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// `P(X = k)` for `X ~ Poisson(theta)`.
pub fn poisson_pmf(k: u64, theta: f64) -> f64 {
    if theta == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k == 0 {
        return (-theta).exp();
    }
    let x = k as f64;
    (-stirlerr(k) - bd0(x, theta)).exp() / (2.0 * PI * x).sqrt()
}
