//! Float rasters and the low-level signal processing every later stage uses.
//!
//! Pixels are stored as `f32` in `[0, 1]`, row-major, channels interleaved.
//! Pixel centers sit at integer coordinates, so a `w × h` image spans
//! `[0, w-1] × [0, h-1]` for interpolation purposes. All border handling is
//! clamp-to-edge.

pub(crate) mod filter;
mod integral;

pub use filter::{
    convolve2d, gaussian_filter, gaussian_kernel, median_filter, sobel_gradients, Kernel,
};
pub use integral::IntegralImages;

use crate::error::{Error, Result};

/// Luma weights applied by [`Image::to_grayscale`].
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Owned raster with 1 (gray) or 3 (RGB) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    /// Image filled with a single value in every channel.
    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        check_shape(width, height, channels)?;
        check_value(value, 0)?;
        Ok(Self { width, height, channels, data: vec![value; width * height * channels] })
    }

    /// Wraps a row-major buffer after validating length and range.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_shape(width, height, channels)?;
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch {
                expected: format!("{} samples", width * height * channels),
                actual: format!("{} samples", data.len()),
            });
        }
        for (i, &v) in data.iter().enumerate() {
            check_value(v, i)?;
        }
        Ok(Self { width, height, channels, data })
    }

    /// Builds an image by evaluating `f(x, y, channel)` at every sample.
    ///
    /// Values are clamped into `[0, 1]`; NaN is rejected.
    pub fn from_fn<F>(width: usize, height: usize, channels: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> f32,
    {
        check_shape(width, height, channels)?;
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    let v = f(x, y, c);
                    if v.is_nan() {
                        return Err(Error::InvalidImage(format!("NaN at ({x}, {y}, {c})")));
                    }
                    data.push(v.clamp(0.0, 1.0));
                }
            }
        }
        Ok(Self { width, height, channels, data })
    }

    /// Decodes 8-bit samples with `v / 255`.
    pub fn from_u8(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        check_shape(width, height, channels)?;
        if bytes.len() != width * height * channels {
            return Err(Error::DimensionMismatch {
                expected: format!("{} bytes", width * height * channels),
                actual: format!("{} bytes", bytes.len()),
            });
        }
        let data = bytes.iter().map(|&b| b as f32 / 255.0).collect();
        Ok(Self { width, height, channels, data })
    }

    /// Encodes samples with `round(v * 255)`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| to_byte(v)).collect()
    }

    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        Self { width, height, channels, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Writes one sample.
    ///
    /// # Panics
    /// If the value is not finite or lies outside `[0, 1]`.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        assert!((0.0..=1.0).contains(&v), "sample {v} outside [0, 1]");
        let i = (y * self.width + x) * self.channels + c;
        self.data[i] = v;
    }

    /// Clamp-to-edge read with signed coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize, c: usize) -> f32 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.get(xc, yc, c)
    }

    /// Luma conversion `0.299 R + 0.587 G + 0.114 B`.
    pub fn to_grayscale(&self) -> Result<Image> {
        if self.channels != 3 {
            return Err(Error::param(format!(
                "to_grayscale expects 3 channels, got {}",
                self.channels
            )));
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| luma(p[0], p[1], p[2]))
            .collect();
        Ok(Image::from_raw(self.width, self.height, 1, data))
    }

    /// Grayscale view: converts RGB, clones gray.
    pub fn gray(&self) -> Image {
        match self.channels {
            1 => self.clone(),
            _ => self.to_grayscale().expect("3-channel image"),
        }
    }

    /// Replicates a gray image into three channels.
    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Image::from_raw(self.width, self.height, 3, data)
    }

    /// Copies the `w × h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::param(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{} image",
                self.width, self.height
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(w * h * c);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * c;
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Ok(Image::from_raw(w, h, c, data))
    }

    /// Mirror image about the vertical axis.
    pub fn flip_horizontal(&self) -> Image {
        let c = self.channels;
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            let row = &self.data[y * self.width * c..(y + 1) * self.width * c];
            for px in row.chunks_exact(c).rev() {
                data.extend_from_slice(px);
            }
        }
        Image::from_raw(self.width, self.height, c, data)
    }

    /// Bilinear read at a subpixel position.
    ///
    /// Returns `None` outside `[0, w-1] × [0, h-1]`; the caller treats that as
    /// transparent. Only the first `channels` entries of the array are used.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<[f32; 3]> {
        let wmax = (self.width - 1) as f64;
        let hmax = (self.height - 1) as f64;
        if !(x >= 0.0 && y >= 0.0 && x <= wmax && y <= hmax) {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let c = self.channels;
        let row0 = y0 * self.width;
        let row1 = y1 * self.width;
        let mut out = [0.0f32; 3];
        for (ch, o) in out.iter_mut().enumerate().take(c) {
            let p00 = self.data[(row0 + x0) * c + ch] as f64;
            let p10 = self.data[(row0 + x1) * c + ch] as f64;
            let p01 = self.data[(row1 + x0) * c + ch] as f64;
            let p11 = self.data[(row1 + x1) * c + ch] as f64;
            let top = p00 + (p10 - p00) * fx;
            let bot = p01 + (p11 - p01) * fx;
            *o = (top + (bot - top) * fy).clamp(0.0, 1.0) as f32;
        }
        Some(out)
    }
}

#[inline]
pub(crate) fn luma(r: f32, g: f32, b: f32) -> f32 {
    let v = LUMA_WEIGHTS[0] * r as f64 + LUMA_WEIGHTS[1] * g as f64 + LUMA_WEIGHTS[2] * b as f64;
    v.min(1.0) as f32
}

#[inline]
pub(crate) fn to_byte(v: f32) -> u8 {
    (v as f64 * 255.0).round().clamp(0.0, 255.0) as u8
}

fn check_shape(width: usize, height: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::InvalidImage(format!("unsupported channel count {channels}")));
    }
    Ok(())
}

fn check_value(v: f32, index: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidImage(format!("sample {index} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Real-valued grid produced by correlation, gradient and corner operators.
///
/// Same indexing as [`Image`]. `margin` is the width of the border band where
/// the operator is undefined; values there are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    pub width: usize,
    pub height: usize,
    pub margin: usize,
    pub data: Vec<f64>,
}

impl ScoreMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, margin: 0, data: vec![0.0; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Position and value of the largest entry (first in scan order on ties).
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in self.data.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        (best.0 % self.width, best.0 / self.width, best.1)
    }

    /// True when `(x, y)` is at least as large as all 8 neighbours.
    pub fn is_local_max(&self, x: usize, y: usize) -> bool {
        let v = self.get(x, y);
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
                    continue;
                }
                if self.get(nx as usize, ny as usize) > v {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rgb(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, 3, |_, _, _| rng.gen::<f32>()).unwrap()
    }

    #[test]
    fn white_to_gray_is_one() {
        let img = Image::filled(5, 4, 3, 1.0).unwrap();
        let g = img.to_grayscale().unwrap();
        assert_eq!(g.channels(), 1);
        assert!(g.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn red_to_gray_uses_red_weight() {
        let img = Image::from_fn(3, 3, 3, |_, _, c| if c == 0 { 1.0 } else { 0.0 }).unwrap();
        let g = img.to_grayscale().unwrap();
        assert!(g.data().iter().all(|&v| v == 0.299f64 as f32));
    }

    #[test]
    fn grayscale_matches_scalar_loop() {
        let img = random_rgb(8, 8, 3);
        let g = img.to_grayscale().unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let r = img.get(x, y, 0) as f64;
                let gg = img.get(x, y, 1) as f64;
                let b = img.get(x, y, 2) as f64;
                let expect = (0.299 * r + 0.587 * gg + 0.114 * b).min(1.0) as f32;
                assert_eq!(g.get(x, y, 0), expect);
            }
        }
    }

    #[test]
    fn grayscale_rejects_gray_input() {
        let img = Image::filled(2, 2, 1, 0.5).unwrap();
        assert!(img.to_grayscale().is_err());
    }

    #[test]
    fn construction_enforces_invariants() {
        assert!(Image::from_vec(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Image::from_vec(1, 1, 1, vec![1.5]).is_err());
        assert!(Image::from_vec(1, 1, 1, vec![f32::NAN]).is_err());
        assert!(Image::filled(0, 3, 1, 0.0).is_err());
        assert!(Image::filled(3, 3, 2, 0.0).is_err());
    }

    #[test]
    fn bilinear_integer_coordinates_are_exact() {
        let img = random_rgb(6, 5, 9);
        for y in 0..5 {
            for x in 0..6 {
                let s = img.sample_bilinear(x as f64, y as f64).unwrap();
                for c in 0..3 {
                    assert_eq!(s[c], img.get(x, y, c));
                }
            }
        }
    }

    #[test]
    fn bilinear_midpoint_and_outside() {
        let img = Image::from_vec(2, 1, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(img.sample_bilinear(0.5, 0.0).unwrap()[0], 0.5);
        assert!(img.sample_bilinear(-0.5, 0.0).is_none());
        assert!(img.sample_bilinear(1.0001, 0.0).is_none());
        assert!(img.sample_bilinear(0.0, f64::NAN).is_none());
    }

    #[test]
    fn flip_and_crop() {
        let img = Image::from_fn(4, 2, 1, |x, y, _| (x + 4 * y) as f32 / 8.0).unwrap();
        let f = img.flip_horizontal();
        assert_eq!(f.get(0, 1, 0), img.get(3, 1, 0));
        assert_eq!(f.flip_horizontal(), img);
        let c = img.crop(1, 1, 2, 1).unwrap();
        assert_eq!(c.data(), &[img.get(1, 1, 0), img.get(2, 1, 0)]);
        assert!(img.crop(3, 0, 2, 1).is_err());
    }

    #[test]
    fn byte_conversion_round_trips() {
        let bytes: Vec<u8> = (0..=255).collect();
        let img = Image::from_u8(256, 1, 1, &bytes).unwrap();
        assert_eq!(img.to_u8(), bytes);
    }
}
