use super::filter::require_gray;
use super::Image;
use crate::error::Result;

/// Summed-area tables of intensity and squared intensity.
///
/// Both tables are `(w+1) × (h+1)` with a zero first row and column, so the
/// sum over `[x0, x1) × [y0, y1)` needs four reads.
#[derive(Debug, Clone)]
pub struct IntegralImages {
    width: usize,
    height: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl IntegralImages {
    pub fn new(img: &Image) -> Result<Self> {
        require_gray(img, "integral_images")?;
        let (w, h) = img.dims();
        Ok(Self::from_plane(img.data(), w, h))
    }

    pub(crate) fn from_plane(data: &[f32], w: usize, h: usize) -> Self {
        let stride = w + 1;
        let mut sum = vec![0.0; stride * (h + 1)];
        let mut sum_sq = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            let mut row_sq = 0.0;
            for x in 0..w {
                let v = data[y * w + x] as f64;
                row += v;
                row_sq += v * v;
                let i = (y + 1) * stride + x + 1;
                sum[i] = sum[i - stride] + row;
                sum_sq[i] = sum_sq[i - stride] + row_sq;
            }
        }
        Self { width: w, height: h, sum, sum_sq }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Sum over the half-open rectangle `[x0, x1) × [y0, y1)`.
    #[inline]
    pub fn rect_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        rect(&self.sum, self.width + 1, x0, y0, x1, y1)
    }

    #[inline]
    pub fn rect_sum_sq(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        rect(&self.sum_sq, self.width + 1, x0, y0, x1, y1)
    }

    /// Raw table entry `S(x, y)` = sum over `[0, x) × [0, y)`.
    pub fn table(&self, x: usize, y: usize) -> f64 {
        self.sum[y * (self.width + 1) + x]
    }
}

#[inline]
fn rect(t: &[f64], stride: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
    if x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    t[y1 * stride + x1] - t[y0 * stride + x1] - t[y1 * stride + x0] + t[y0 * stride + x0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ones_sum_to_area() {
        let img = Image::filled(4, 4, 1, 1.0).unwrap();
        let ii = IntegralImages::new(&img).unwrap();
        assert_eq!(ii.rect_sum(0, 0, 4, 4), 16.0);
        assert_eq!(ii.table(0, 3), 0.0);
        assert_eq!(ii.rect_sum(2, 2, 2, 4), 0.0);
    }

    #[test]
    fn random_rectangles_match_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let img = Image::from_fn(23, 17, 1, |_, _, _| rng.gen::<f32>()).unwrap();
        let ii = IntegralImages::new(&img).unwrap();
        for _ in 0..200 {
            let x0 = rng.gen_range(0..=23);
            let x1 = rng.gen_range(x0..=23);
            let y0 = rng.gen_range(0..=17);
            let y1 = rng.gen_range(y0..=17);
            let (mut s, mut s2) = (0.0, 0.0);
            for y in y0..y1 {
                for x in x0..x1 {
                    let v = img.get(x, y, 0) as f64;
                    s += v;
                    s2 += v * v;
                }
            }
            assert!((ii.rect_sum(x0, y0, x1, y1) - s).abs() <= 1e-9);
            assert!((ii.rect_sum_sq(x0, y0, x1, y1) - s2).abs() <= 1e-9);
        }
    }

    #[test]
    fn rejects_color() {
        let img = Image::filled(2, 2, 3, 0.0).unwrap();
        assert!(IntegralImages::new(&img).is_err());
    }
}
