use crate::error::{Error, Result};
use crate::image::filter::separable_map;
use crate::image::{gaussian_kernel, sobel_gradients, Image, ScoreMap};

/// Harris measure `det(M) − k·trace(M)²` of the Gaussian-weighted (σ_w)
/// structure tensor of Sobel gradients.
pub fn harris_response(img: &Image, sigma_w: f64, k: f64) -> Result<ScoreMap> {
    if !(k > 0.0 && k < 0.25) {
        return Err(Error::param(format!("harris k must lie in (0, 0.25), got {k}")));
    }
    let kernel = gaussian_kernel(sigma_w)?;
    let (gx, gy) = sobel_gradients(img)?;
    let (w, h) = img.dims();
    let mut ixx = ScoreMap::zeros(w, h);
    let mut iyy = ScoreMap::zeros(w, h);
    let mut ixy = ScoreMap::zeros(w, h);
    for i in 0..w * h {
        let (dx, dy) = (gx.data[i], gy.data[i]);
        ixx.data[i] = dx * dx;
        iyy.data[i] = dy * dy;
        ixy.data[i] = dx * dy;
    }
    let sxx = separable_map(&ixx, kernel.taps());
    let syy = separable_map(&iyy, kernel.taps());
    let sxy = separable_map(&ixy, kernel.taps());
    let mut out = ScoreMap::zeros(w, h);
    for i in 0..w * h {
        let (a, b, c) = (sxx.data[i], syy.data[i], sxy.data[i]);
        let tr = a + b;
        out.data[i] = a * b - c * c - k * tr * tr;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marker::render_marker;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_image_has_no_response() {
        let img = Image::filled(20, 20, 1, 0.3).unwrap();
        let r = harris_response(&img, 1.0, 0.04).unwrap();
        assert!(r.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn marker_center_is_the_global_max() {
        for side in [21, 31] {
            let tpl = render_marker(side, 0).unwrap();
            let r = harris_response(&tpl.image, 1.0, 0.04).unwrap();
            let (x, y, v) = r.argmax();
            let c = (side / 2) as f64;
            assert!(v > 0.0);
            assert!((x as f64 - c).hypot(y as f64 - c) <= 1.0, "side {side}: max at ({x}, {y})");
        }
    }

    #[test]
    fn offset_invariant() {
        // Dyadic samples keep `v + 0.25` exact in f32.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = Image::from_fn(24, 24, 1, |_, _, _| rng.gen_range(0..128) as f32 / 256.0).unwrap();
        let shifted = Image::from_fn(24, 24, 1, |x, y, _| img.get(x, y, 0) + 0.25).unwrap();
        let a = harris_response(&img, 1.2, 0.05).unwrap();
        let b = harris_response(&shifted, 1.2, 0.05).unwrap();
        for (p, q) in a.data.iter().zip(&b.data) {
            assert!((p - q).abs() <= 1e-9);
        }
    }

    #[test]
    fn rotates_with_the_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = Image::from_fn(19, 13, 1, |_, _, _| rng.gen::<f32>()).unwrap();
        // 90° clockwise: (x, y) -> (h-1-y, x).
        let (w, h) = img.dims();
        let rot = Image::from_fn(h, w, 1, |x, y, _| img.get(y, h - 1 - x, 0)).unwrap();
        let a = harris_response(&img, 1.0, 0.04).unwrap();
        let b = harris_response(&rot, 1.0, 0.04).unwrap();
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for y in 0..h {
            for x in 0..w {
                assert!((a.get(x, y) - b.get(h - 1 - y, x)).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn parameter_checks() {
        let img = Image::filled(8, 8, 1, 0.3).unwrap();
        assert!(harris_response(&img, 1.0, 0.0).is_err());
        assert!(harris_response(&img, 1.0, 0.25).is_err());
        assert!(harris_response(&img, 0.0, 0.04).is_err());
        let rgb = Image::filled(8, 8, 3, 0.3).unwrap();
        assert!(harris_response(&rgb, 1.0, 0.04).is_err());
    }
}
