use super::SumMap;

/// Normalized Gaussian taps for offsets `-r..=r`, `r = ceil(3σ)`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / norm).collect()
}

/// Mirror index into `0..n` with edge samples repeated (`d c b a | a b c d`).
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let j = i.rem_euclid(period);
    (if j >= n { period - 1 - j } else { j }) as usize
}

fn convolve_rows(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(t, w)| w * row[reflect(x as i64 + t as i64 - radius, width)])
                .sum();
        }
    }
    out
}

fn convolve_cols(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(t, w)| w * src[reflect(y as i64 + t as i64 - radius, height) * width + x])
                .sum();
        }
    }
    out
}

/// Separable Gaussian smoothing of a sum map; `sigma = 0` is the identity.
pub fn denoise(image: &SumMap, sigma: f64) -> SumMap {
    if sigma.is_nan() || sigma <= 0.0 {
        return image.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let (w, h) = (image.width(), image.height());
    let rows = convolve_rows(image.values(), w, h, &kernel);
    let max = image.config().max_sum() as f64;
    let values = convolve_cols(&rows, w, h, &kernel)
        .into_iter()
        .map(|v| v.clamp(0.0, max))
        .collect();
    SumMap::from_parts(w, h, values, *image.config())
}
