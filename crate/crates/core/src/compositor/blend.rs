use super::Layer;
use crate::error::{Error, Result};
use crate::image::Image;

/// `out = (1 − m')·scene + m'·layer` with `m'` the mask eroded then box-blurred
/// by `feather_px` (both with zero outside the layer). Pixels where `m' = 0`
/// keep the scene's exact bits.
pub fn blend(scene: &Image, layer: &Layer, feather_px: usize) -> Result<Image> {
    let mut out = scene.clone();
    blend_into(&mut out, layer, feather_px)?;
    Ok(out)
}

pub(crate) fn blend_into(scene: &mut Image, layer: &Layer, feather_px: usize) -> Result<()> {
    let (lw, lh) = layer.image.dims();
    let (ox, oy) = layer.origin;
    if layer.image.channels() != scene.channels() || ox + lw > scene.width() || oy + lh > scene.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("layer inside {}x{}x{}", scene.width(), scene.height(), scene.channels()),
            actual: format!("{lw}x{lh}x{} at ({ox}, {oy})", layer.image.channels()),
        });
    }
    let mask = feather(&layer.mask, lw, lh, feather_px);
    let ch = scene.channels();
    let sw = scene.width();
    let src = layer.image.data();
    let dst = scene.data_mut();
    for ly in 0..lh {
        for lx in 0..lw {
            let m = mask[ly * lw + lx];
            if m <= 0.0 {
                continue;
            }
            let li = (ly * lw + lx) * ch;
            let si = ((oy + ly) * sw + ox + lx) * ch;
            for c in 0..ch {
                dst[si + c] = if m >= 1.0 {
                    src[li + c]
                } else {
                    ((1.0 - m as f64) * dst[si + c] as f64 + m as f64 * src[li + c] as f64) as f32
                };
            }
        }
    }
    Ok(())
}

/// Erosion (square window) then box blur, both of radius `r`.
fn feather(mask: &[f32], w: usize, h: usize, r: usize) -> Vec<f32> {
    if r == 0 {
        return mask.to_vec();
    }
    let eroded = separable(mask, w, h, r, Reduce::Min);
    separable(&eroded, w, h, r, Reduce::Mean)
}

#[derive(Clone, Copy)]
enum Reduce {
    Min,
    Mean,
}

/// Applies a 1-D window reduction along x then y; samples outside are 0.
fn separable(src: &[f32], w: usize, h: usize, r: usize, op: Reduce) -> Vec<f32> {
    let mut tmp = vec![0.0f32; w * h];
    let mut buf = vec![0.0f32; w.max(h) + 2 * r];
    for y in 0..h {
        buf[r..r + w].copy_from_slice(&src[y * w..(y + 1) * w]);
        reduce_line(&buf[..w + 2 * r], r, op, &mut tmp[y * w..(y + 1) * w]);
    }
    let mut out = vec![0.0f32; w * h];
    let mut line = vec![0.0f32; h];
    buf.fill(0.0);
    for x in 0..w {
        for y in 0..h {
            buf[r + y] = tmp[y * w + x];
        }
        reduce_line(&buf[..h + 2 * r], r, op, &mut line);
        for y in 0..h {
            out[y * w + x] = line[y].clamp(0.0, 1.0);
        }
    }
    out
}

/// `padded` holds `r` zeros on each side of the line.
fn reduce_line(padded: &[f32], r: usize, op: Reduce, out: &mut [f32]) {
    let side = 2 * r + 1;
    match op {
        Reduce::Min => {
            for (o, win) in out.iter_mut().zip(padded.windows(side)) {
                *o = win.iter().copied().fold(f32::INFINITY, f32::min);
            }
        }
        Reduce::Mean => {
            let n = side as f32;
            for (o, win) in out.iter_mut().zip(padded.windows(side)) {
                *o = win.iter().sum::<f32>() / n;
            }
        }
    }
}
