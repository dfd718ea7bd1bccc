//! Zero-mean normalized cross-correlation.
//!
//! `ncc(x, y) = Σ t'·I / (‖t'‖ · sqrt(Σ I² − (Σ I)²/N))` with `t'` the
//! zero-mean template, window centered on `(x, y)`. Window statistics come
//! from integral images; the numerator needs no image mean because `t'` sums
//! to zero.

use super::MarkerTemplate;
use crate::error::{Error, Result};
use crate::image::{Image, IntegralImages, ScoreMap};

/// Per-pixel window variance below which a window scores 0.
const MIN_VARIANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub(crate) struct PreparedTemplate {
    pub side: usize,
    pub zero_mean: Vec<f64>,
    pub norm: f64,
}

impl PreparedTemplate {
    pub fn new(img: &Image) -> Self {
        let side = img.width();
        let n = (side * img.height()) as f64;
        let mean = img.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let zero_mean: Vec<f64> = img.data().iter().map(|&v| v as f64 - mean).collect();
        let norm = zero_mean.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self { side, zero_mean, norm }
    }

    /// True when `self == c − other` for some constant `c`, so its NCC is the
    /// negation of `other`'s everywhere.
    pub fn is_inverse_of(&self, other: &PreparedTemplate) -> bool {
        self.side == other.side
            && self.zero_mean.iter().zip(&other.zero_mean).all(|(a, b)| (a + b).abs() < 1e-9)
    }
}

/// NCC of the template against the window whose top-left corner is `(x0, y0)`
/// in a row-major plane of the given width. Same normalization as the map.
pub(crate) fn ncc_window(plane: &[f64], width: usize, x0: usize, y0: usize, tpl: &PreparedTemplate) -> f64 {
    let n = (tpl.side * tpl.side) as f64;
    let (mut s, mut s2, mut dotp) = (0.0, 0.0, 0.0);
    for j in 0..tpl.side {
        let row = &plane[(y0 + j) * width + x0..(y0 + j) * width + x0 + tpl.side];
        let trow = &tpl.zero_mean[j * tpl.side..(j + 1) * tpl.side];
        for (&v, &t) in row.iter().zip(trow) {
            s += v;
            s2 += v * v;
            dotp += v * t;
        }
    }
    finish(dotp, s, s2, n, tpl.norm)
}

#[inline]
fn finish(dotp: f64, s: f64, s2: f64, n: f64, tnorm: f64) -> f64 {
    let ss = s2 - s * s / n;
    if ss / n < MIN_VARIANCE || tnorm == 0.0 {
        return 0.0;
    }
    (dotp / (tnorm * ss.sqrt())).clamp(-1.0, 1.0)
}

/// Fills `out` (map coordinates = window centers) for centers in
/// `[cx0, cx1) × [cy0, cy1)`. Centers must keep the window inside the plane.
pub(crate) fn ncc_fill(
    plane: &[f64],
    width: usize,
    ii: &IntegralImages,
    tpl: &PreparedTemplate,
    (cx0, cy0, cx1, cy1): (usize, usize, usize, usize),
    out: &mut ScoreMap,
) {
    if cx0 >= cx1 {
        return;
    }
    let half = tpl.side / 2;
    let n = (tpl.side * tpl.side) as f64;
    // Row-at-a-time accumulation: one contiguous multiply-add per template
    // tap, which vectorizes far better than per-window dot products.
    let mut acc = vec![0.0f64; cx1 - cx0];
    for cy in cy0..cy1 {
        let y0 = cy - half;
        acc.fill(0.0);
        for j in 0..tpl.side {
            let base = (y0 + j) * width + cx0 - half;
            for i in 0..tpl.side {
                let t = tpl.zero_mean[j * tpl.side + i];
                let src = &plane[base + i..base + i + acc.len()];
                for (a, &p) in acc.iter_mut().zip(src) {
                    *a += t * p;
                }
            }
        }
        for (k, &dotp) in acc.iter().enumerate() {
            let x0 = cx0 + k - half;
            let s = ii.rect_sum(x0, y0, x0 + tpl.side, y0 + tpl.side);
            let s2 = ii.rect_sum_sq(x0, y0, x0 + tpl.side, y0 + tpl.side);
            out.set(cx0 + k, cy, finish(dotp, s, s2, n, tpl.norm));
        }
    }
}

/// NCC at every center where the template fits; the undefined border band
/// (`margin = side / 2`) is zero.
pub fn ncc_score_map(img: &Image, tpl: &MarkerTemplate) -> Result<ScoreMap> {
    if img.channels() != 1 {
        return Err(Error::param("ncc_score_map expects a gray image"));
    }
    let (w, h) = img.dims();
    let side = tpl.side();
    if side > w || side > h {
        return Err(Error::param(format!("template {side}x{side} larger than image {w}x{h}")));
    }
    let plane: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    let ii = IntegralImages::new(img)?;
    let prep = PreparedTemplate::new(&tpl.image);
    let half = side / 2;
    let mut out = ScoreMap::zeros(w, h);
    out.margin = half;
    ncc_fill(&plane, w, &ii, &prep, (half, half, w - half, h - half), &mut out);
    Ok(out)
}

/// NCC between two equally sized gray images (`a` plays the window).
pub fn ncc(a: &Image, b: &Image) -> Result<f64> {
    if a.dims() != b.dims() || a.channels() != 1 || b.channels() != 1 {
        return Err(Error::param("ncc expects two gray images of equal size"));
    }
    let n = a.data().len() as f64;
    let bm = b.data().iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut s, mut s2, mut dotp, mut tn) = (0.0, 0.0, 0.0, 0.0);
    for (&va, &vb) in a.data().iter().zip(b.data()) {
        let (va, t) = (va as f64, vb as f64 - bm);
        s += va;
        s2 += va * va;
        dotp += va * t;
        tn += t * t;
    }
    Ok(finish(dotp, s, s2, n, tn.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marker::render_marker;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, 1, |_, _, _| rng.gen::<f32>()).unwrap()
    }

    fn embed(field: &Image, tpl: &Image, cx: usize, cy: usize, invert: bool) -> Image {
        let half = tpl.width() / 2;
        Image::from_fn(field.width(), field.height(), 1, |x, y, _| {
            let (dx, dy) = (x as isize - cx as isize + half as isize, y as isize - cy as isize + half as isize);
            if dx >= 0 && dy >= 0 && (dx as usize) < tpl.width() && (dy as usize) < tpl.height() {
                let v = tpl.get(dx as usize, dy as usize, 0);
                if invert { 1.0 - v } else { v }
            } else {
                field.get(x, y, 0)
            }
        })
        .unwrap()
    }

    /// Per-window mean and variance straight from the definition.
    fn direct_ncc(img: &Image, tpl: &Image, cx: usize, cy: usize) -> f64 {
        let side = tpl.width();
        let half = side / 2;
        let n = (side * side) as f64;
        let tm = tpl.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let mut wm = 0.0;
        for j in 0..side {
            for i in 0..side {
                wm += img.get(cx - half + i, cy - half + j, 0) as f64;
            }
        }
        wm /= n;
        let (mut num, mut tv, mut wv) = (0.0, 0.0, 0.0);
        for j in 0..side {
            for i in 0..side {
                let a = tpl.get(i, j, 0) as f64 - tm;
                let b = img.get(cx - half + i, cy - half + j, 0) as f64 - wm;
                num += a * b;
                tv += a * a;
                wv += b * b;
            }
        }
        if wv / n < 1e-8 {
            return 0.0;
        }
        num / (tv * wv).sqrt()
    }

    #[test]
    fn embedded_template_scores_one() {
        let tpl = render_marker(15, 0).unwrap();
        let img = embed(&noise(50, 40, 1), &tpl.image, 22, 17, false);
        let map = ncc_score_map(&img, &tpl).unwrap();
        assert!((map.get(22, 17) - 1.0).abs() < 1e-6);
        let inv = embed(&noise(50, 40, 1), &tpl.image, 22, 17, true);
        let map = ncc_score_map(&inv, &tpl).unwrap();
        assert!((map.get(22, 17) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn map_matches_direct_oracle() {
        let img = noise(64, 64, 4);
        let tpl_img = noise(15, 15, 5);
        let tpl = MarkerTemplate { class_id: 0, image: tpl_img.clone(), phase: 0 };
        let map = ncc_score_map(&img, &tpl).unwrap();
        assert_eq!(map.margin, 7);
        for cy in 7..57 {
            for cx in 7..57 {
                let d = direct_ncc(&img, &tpl_img, cx, cy);
                assert!((map.get(cx, cy) - d).abs() <= 1e-6);
            }
        }
        assert_eq!(map.get(3, 30), 0.0);
    }

    #[test]
    fn flat_window_scores_zero_and_oversize_rejected() {
        let tpl = render_marker(15, 0).unwrap();
        let flat = Image::filled(30, 30, 1, 0.4).unwrap();
        let map = ncc_score_map(&flat, &tpl).unwrap();
        assert!(map.data.iter().all(|&v| v == 0.0));
        let small = Image::filled(10, 30, 1, 0.4).unwrap();
        assert!(ncc_score_map(&small, &tpl).is_err());
    }

    #[test]
    fn scores_bounded() {
        for seed in 0..10 {
            let img = noise(40, 40, seed);
            let tpl = MarkerTemplate { class_id: 0, image: noise(15, 15, seed + 100), phase: 0 };
            let map = ncc_score_map(&img, &tpl).unwrap();
            assert!(map.data.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn inverse_templates_detected() {
        let a = PreparedTemplate::new(&render_marker(21, 0).unwrap().image);
        let b = PreparedTemplate::new(&render_marker(21, 1).unwrap().image);
        let c = PreparedTemplate::new(&render_marker(21, 2).unwrap().image);
        assert!(b.is_inverse_of(&a));
        assert!(!c.is_inverse_of(&a));
    }
}
