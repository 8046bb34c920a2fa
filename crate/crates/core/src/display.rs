//! 8-bit grayscale display images.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("image is {width}x{height} but holds {len} pixels")]
pub struct ShapeError {
    pub width: usize,
    pub height: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ShapeError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ShapeError {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}
