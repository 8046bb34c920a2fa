//! Built-in synthetic test scenes.

use crate::display::GrayImage;
use crate::sensor::PhotonFluxMap;

/// 8-bit high-contrast landscape: a sky gradient, a saturated sun with a
/// bright halo, textured ground and a dark checkered window.
pub fn landscape(size: usize) -> GrayImage {
    assert!(size >= 2, "scene needs at least 2×2 pixels");
    let step = 1.0 / (size - 1) as f64;
    let two_pi = std::f64::consts::TAU;
    let mut pixels = Vec::with_capacity(size * size);
    for row in 0..size {
        let y = row as f64 * step;
        for col in 0..size {
            let x = col as f64 * step;
            let mut v = 30.0 + 135.0 * (1.0 - y);
            if y > 0.5 {
                v += 25.0 * (two_pi * 6.0 * x).sin() * (two_pi * 4.0 * y).sin();
            }
            let r2 = (x - 0.72).powi(2) + (y - 0.22).powi(2);
            if r2 < 0.085 * 0.085 {
                v = 255.0;
            } else if r2 < 0.16 * 0.16 {
                v = v.max(215.0);
            }
            if x > 0.08 && x < 0.3 && y > 0.55 && y < 0.8 {
                let checker = ((x * 40.0).floor() + (y * 40.0).floor()).rem_euclid(2.0);
                v = 12.0 + 8.0 * checker;
            }
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(size, size, pixels).expect("square raster")
}

/// Linear map of 8-bit values onto `[0, c_max]` photons per second.
pub fn gray_to_flux(image: &GrayImage, c_max: f64) -> PhotonFluxMap {
    let flux = image.pixels().iter().map(|&v| f64::from(v) / 255.0 * c_max).collect();
    PhotonFluxMap::new(image.width(), image.height(), flux).expect("finite, non-negative flux")
}

/// Horizontal flux ramp from `lo` to `hi`, constant down each column.
pub fn ramp(width: usize, height: usize, lo: f64, hi: f64) -> PhotonFluxMap {
    assert!(width >= 2 && height >= 1, "ramp needs at least 2 columns");
    let row: Vec<f64> = (0..width)
        .map(|x| lo + (hi - lo) * x as f64 / (width - 1) as f64)
        .collect();
    let flux = (0..height).flat_map(|_| row.iter().copied()).collect();
    PhotonFluxMap::new(width, height, flux).expect("finite, non-negative flux")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landscape_has_saturated_and_dark_regions() {
        let img = landscape(256);
        let px = img.pixels();
        assert_eq!(px.len(), 256 * 256);
        assert!(px.contains(&255));
        assert!(px.iter().any(|&v| v <= 20));
        assert_eq!(img.get(0, 0), 165);
        // sun center
        assert_eq!(img.get(184, 56), 255);
    }

    #[test]
    fn ramp_endpoints() {
        let r = ramp(64, 64, 1e3, 6e6);
        assert_eq!(r.flux()[0], 1e3);
        assert_eq!(r.flux()[63], 6e6);
        assert_eq!(r.flux()[64 * 63 + 63], 6e6);
    }
}
