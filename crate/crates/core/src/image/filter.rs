use super::{Image, ScoreMap};
use crate::error::{Error, Result};

/// Filter taps with a center element on every axis.
///
/// A 1-D kernel has `height == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new_1d(taps: Vec<f64>) -> Result<Self> {
        Self::new_2d(taps.len(), 1, taps)
    }

    pub fn new_2d(width: usize, height: usize, taps: Vec<f64>) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(Error::param(format!("kernel sides must be odd, got {width}x{height}")));
        }
        if taps.len() != width * height {
            return Err(Error::param(format!(
                "kernel {width}x{height} needs {} taps, got {}",
                width * height,
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::param("kernel taps must be finite"));
        }
        Ok(Self { width, height, taps })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn radius(&self) -> usize {
        self.width / 2
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.taps[j * self.width + i]
    }
}

/// Sampled Gaussian of radius `ceil(3σ)`, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::param(format!("gaussian sigma must be positive and finite, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Kernel::new_1d(taps)
}

/// Separable Gaussian blur, horizontal pass then vertical pass.
pub fn gaussian_filter(img: &Image, sigma: f64) -> Result<Image> {
    let k = gaussian_kernel(sigma)?;
    Ok(separable(img, k.taps()))
}

/// Applies the same symmetric 1-D kernel along x then y.
pub(crate) fn separable(img: &Image, taps: &[f64]) -> Image {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let r = taps.len() / 2;
    let src = img.data();
    let mut out = vec![0.0f32; w * h * ch];
    let mut tmp = vec![0.0f64; w * h];
    let mut padded = vec![0.0f64; w + 2 * r];
    let mut acc = vec![0.0f64; w];
    for c in 0..ch {
        for y in 0..h {
            let row = &src[y * w * ch..(y + 1) * w * ch];
            for (i, p) in padded.iter_mut().enumerate() {
                let x = (i as isize - r as isize).clamp(0, w as isize - 1) as usize;
                *p = row[x * ch + c] as f64;
            }
            let dst = &mut tmp[y * w..(y + 1) * w];
            for (x, d) in dst.iter_mut().enumerate() {
                let win = &padded[x..x + taps.len()];
                *d = win.iter().zip(taps).map(|(a, b)| a * b).sum();
            }
        }
        for y in 0..h {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (j, &t) in taps.iter().enumerate() {
                let sy = (y as isize + j as isize - r as isize).clamp(0, h as isize - 1) as usize;
                let srow = &tmp[sy * w..(sy + 1) * w];
                for (a, &s) in acc.iter_mut().zip(srow) {
                    *a += t * s;
                }
            }
            for (x, &a) in acc.iter().enumerate() {
                out[(y * w + x) * ch + c] = unit_clamp(a);
            }
        }
    }
    Image::from_raw(w, h, ch, out)
}

/// Separable symmetric smoothing of a real-valued map, clamp-to-edge.
pub(crate) fn separable_map(map: &ScoreMap, taps: &[f64]) -> ScoreMap {
    let (w, h) = (map.width, map.height);
    let r = taps.len() / 2;
    let mut tmp = vec![0.0f64; w * h];
    let mut padded = vec![0.0f64; w + 2 * r];
    for y in 0..h {
        let row = &map.data[y * w..(y + 1) * w];
        for (i, p) in padded.iter_mut().enumerate() {
            *p = row[(i as isize - r as isize).clamp(0, w as isize - 1) as usize];
        }
        for (x, d) in tmp[y * w..(y + 1) * w].iter_mut().enumerate() {
            *d = padded[x..x + taps.len()].iter().zip(taps).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = ScoreMap::zeros(w, h);
    for y in 0..h {
        let acc = &mut out.data[y * w..(y + 1) * w];
        for (j, &t) in taps.iter().enumerate() {
            let sy = (y as isize + j as isize - r as isize).clamp(0, h as isize - 1) as usize;
            for (a, &s) in acc.iter_mut().zip(&tmp[sy * w..(sy + 1) * w]) {
                *a += t * s;
            }
        }
    }
    out
}

/// Clamps a filter result that should already lie in `[0, 1]` up to rounding.
#[inline]
pub(crate) fn unit_clamp(v: f64) -> f32 {
    debug_assert!(
        (-1e-9..=1.0 + 1e-9).contains(&v),
        "filter output {v} escaped [0, 1] by more than rounding"
    );
    v.clamp(0.0, 1.0) as f32
}

/// Per-channel median over the `(2r+1)²` clamp-to-edge window.
pub fn median_filter(img: &Image, radius: usize) -> Result<Image> {
    if radius == 0 {
        return Err(Error::param("median radius must be at least 1"));
    }
    if radius == 1 {
        return Ok(median3(img));
    }
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let side = 2 * radius + 1;
    let mid = side * side / 2;
    let cols: Vec<Vec<usize>> = (0..w)
        .map(|x| {
            (0..side)
                .map(|i| (x as isize + i as isize - radius as isize).clamp(0, w as isize - 1) as usize)
                .collect()
        })
        .collect();
    let src = img.data();
    let mut out = vec![0.0f32; w * h * ch];
    let mut window = vec![0.0f32; side * side];
    for y in 0..h {
        let rows: Vec<usize> = (0..side)
            .map(|j| (y as isize + j as isize - radius as isize).clamp(0, h as isize - 1) as usize)
            .collect();
        for (x, xs) in cols.iter().enumerate() {
            for c in 0..ch {
                let mut k = 0;
                for &sy in &rows {
                    let base = sy * w;
                    for &sx in xs {
                        window[k] = src[(base + sx) * ch + c];
                        k += 1;
                    }
                }
                let (_, m, _) = window.select_nth_unstable_by(mid, f32::total_cmp);
                out[(y * w + x) * ch + c] = *m;
            }
        }
    }
    Ok(Image::from_raw(w, h, ch, out))
}

/// 3×3 median: each column triple is sorted once, then the median of nine is
/// `med3(max of lows, med3 of middles, min of highs)`.
fn median3(img: &Image) -> Image {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let src = img.data();
    let mut out = vec![0.0f32; w * h * ch];
    let (mut lo, mut md, mut hi) = (vec![0.0f32; w], vec![0.0f32; w], vec![0.0f32; w]);
    for c in 0..ch {
        for y in 0..h {
            let (ya, yb) = (y.saturating_sub(1), (y + 1).min(h - 1));
            for x in 0..w {
                let a = src[(ya * w + x) * ch + c];
                let b = src[(y * w + x) * ch + c];
                let d = src[(yb * w + x) * ch + c];
                let (a, b) = (a.min(b), a.max(b));
                let (b, d) = (b.min(d), b.max(d));
                let (a, b) = (a.min(b), a.max(b));
                lo[x] = a;
                md[x] = b;
                hi[x] = d;
            }
            for x in 0..w {
                let (xa, xb) = (x.saturating_sub(1), (x + 1).min(w - 1));
                let l = lo[xa].max(lo[x]).max(lo[xb]);
                let m = med3(md[xa], md[x], md[xb]);
                let u = hi[xa].min(hi[x]).min(hi[xb]);
                out[(y * w + x) * ch + c] = med3(l, m, u);
            }
        }
    }
    Image::from_raw(w, h, ch, out)
}

#[inline]
fn med3(a: f32, b: f32, c: f32) -> f32 {
    a.min(b).max(a.max(b).min(c))
}

/// Dense 2-D convolution (kernel flipped) of a gray image, clamp-to-edge.
///
/// The result is real-valued, so it comes back as a [`ScoreMap`].
pub fn convolve2d(img: &Image, kernel: &Kernel) -> Result<ScoreMap> {
    require_gray(img, "convolve2d")?;
    let (w, h) = img.dims();
    let rx = kernel.width() as isize / 2;
    let ry = kernel.height() as isize / 2;
    let mut out = ScoreMap::zeros(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for j in 0..kernel.height() {
                for i in 0..kernel.width() {
                    let sx = x - (i as isize - rx);
                    let sy = y - (j as isize - ry);
                    acc += kernel.at(i, j) * img.get_clamped(sx, sy, 0) as f64;
                }
            }
            out.set(x as usize, y as usize, acc);
        }
    }
    Ok(out)
}

/// 3×3 Sobel derivatives. `gx` is positive where intensity rises to the
/// right, `gy` where it rises downward.
pub fn sobel_gradients(img: &Image) -> Result<(ScoreMap, ScoreMap)> {
    require_gray(img, "sobel_gradients")?;
    let (w, h) = img.dims();
    let src = img.data();
    let mut gx = ScoreMap::zeros(w, h);
    let mut gy = ScoreMap::zeros(w, h);
    for y in 0..h {
        let ym = y.saturating_sub(1) * w;
        let y0 = y * w;
        let yp = (y + 1).min(h - 1) * w;
        for x in 0..w {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(w - 1);
            let p = |row: usize, col: usize| src[row + col] as f64;
            let dx = (p(ym, xp) + 2.0 * p(y0, xp) + p(yp, xp)) - (p(ym, xm) + 2.0 * p(y0, xm) + p(yp, xm));
            let dy = (p(yp, xm) + 2.0 * p(yp, x) + p(yp, xp)) - (p(ym, xm) + 2.0 * p(ym, x) + p(ym, xp));
            gx.data[y0 + x] = dx;
            gy.data[y0 + x] = dy;
        }
    }
    Ok((gx, gy))
}

pub(crate) fn require_gray(img: &Image, op: &str) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::param(format!("{op} expects a 1-channel image, got {}", img.channels())));
    }
    Ok(())
}
