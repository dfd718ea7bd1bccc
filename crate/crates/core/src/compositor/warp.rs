//! Inverse-mapping warps: every destination pixel samples the source through
//! the inverse homography, so the output has no holes.

use super::Layer;
use crate::error::{Error, Result};
use crate::geometry::{point_in_quad, quad_to_quad, scaled_homography, Homography, Point2};
use crate::image::Image;
use crate::marker::MirrorQuad;

/// Warps the feed by `h` onto a canvas of the feed's size. Samples that fall
/// outside the feed are transparent.
pub fn rectify_feed(feed: &Image, h: &Homography) -> Result<Layer> {
    let (w, h_px) = feed.dims();
    if *h == Homography::identity() {
        return Layer::new(feed.clone(), vec![1.0; w * h_px], (0, 0));
    }
    let inv = h.inverse()?;
    let m = inv.matrix();
    let ch = feed.channels();
    let mut data = vec![0.0f32; w * h_px * ch];
    let mut mask = vec![0.0f32; w * h_px];
    for y in 0..h_px {
        for x in 0..w {
            let Some((sx, sy)) = project(m, x as f64, y as f64) else { continue };
            if let Some(px) = feed.sample_bilinear(sx, sy) {
                let i = y * w + x;
                data[i * ch..(i + 1) * ch].copy_from_slice(&px[..ch]);
                mask[i] = 1.0;
            }
        }
    }
    Layer::new(Image::from_vec(w, h_px, ch, data)?, mask, (0, 0))
}

/// Feed rectangle corners (pixel centers) TL, TR, BR, BL.
pub fn feed_corners(width: usize, height: usize) -> [Point2; 4] {
    let (w, h) = (width as f64 - 1.0, height as f64 - 1.0);
    [Point2::new(0.0, 0.0), Point2::new(w, 0.0), Point2::new(w, h), Point2::new(0.0, h)]
}

/// `quad_to_quad(feed → quad) ∘ [flip] ∘ Z(anchor, s)`: the map from feed
/// pixels to output pixels.
pub fn quad_homography(feed_size: (usize, usize), quad: &MirrorQuad, s: f64, anchor: Point2, flip: bool) -> Result<Homography> {
    let mut base = quad_to_quad(&feed_corners(feed_size.0, feed_size.1), quad.corners())?;
    if flip {
        base = base.compose(&Homography::horizontal_flip(feed_size.0 as f64))?;
    }
    scaled_homography(&base, anchor, s)
}

/// Renders the feed into the quad on an `out_dims` canvas. The layer covers
/// the quad's bounding box; its mask is antialiased polygon coverage.
pub fn warp_into_quad(
    feed: &Image,
    quad: &MirrorQuad,
    s: f64,
    anchor: Point2,
    flip: bool,
    out_dims: (usize, usize),
) -> Result<Layer> {
    let h = quad_homography(feed.dims(), quad, s, anchor, flip)?;
    render_layer(feed, None, &h, quad.corners(), out_dims)
}

/// Inverse-maps `src` through `h` over the polygon's bounding box. Coverage is
/// `clamp(d + 0.5, 0, 1)` for signed distance `d` (positive inside), times
/// `src_mask` when given. Sources within one pixel outside the image are
/// clamped onto it; farther ones are transparent.
pub(crate) fn render_layer(
    src: &Image,
    src_mask: Option<&[f32]>,
    h: &Homography,
    quad: &[Point2; 4],
    out_dims: (usize, usize),
) -> Result<Layer> {
    let (ow, oh) = out_dims;
    if ow == 0 || oh == 0 {
        return Err(Error::param("output canvas must be non-empty"));
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in quad {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let bx0 = (x0 - 1.0).floor().max(0.0);
    let by0 = (y0 - 1.0).floor().max(0.0);
    let bx1 = (x1 + 1.0).ceil().min(ow as f64 - 1.0);
    let by1 = (y1 + 1.0).ceil().min(oh as f64 - 1.0);
    if !(bx0 <= bx1 && by0 <= by1) {
        return Ok(Layer::transparent(src.channels()));
    }
    let (bx0, by0, bx1, by1) = (bx0 as usize, by0 as usize, bx1 as usize, by1 as usize);
    let (lw, lh) = (bx1 - bx0 + 1, by1 - by0 + 1);
    let inv = h.inverse()?;
    let m = inv.matrix();
    let ch = src.channels();
    let (sw, sh) = (src.width() as f64, src.height() as f64);
    let lines = edge_lines(quad);
    let mut data = vec![0.0f32; lw * lh * ch];
    let mut mask = vec![0.0f32; lw * lh];
    for ly in 0..lh {
        for lx in 0..lw {
            let p = Point2::new((bx0 + lx) as f64, (by0 + ly) as f64);
            let cover = match &lines {
                // Convex: the smallest signed edge-line distance is exact
                // inside, and beyond -0.5 it proves the pixel is outside.
                Some(lines) => {
                    let d = lines.iter().map(|l| l[0] * p.x + l[1] * p.y + l[2]).fold(f64::INFINITY, f64::min);
                    if d >= 0.5 {
                        1.0
                    } else if d <= -0.5 {
                        0.0
                    } else {
                        coverage(quad, p)
                    }
                }
                None => coverage(quad, p),
            };
            if cover == 0.0 {
                continue;
            }
            let Some((sx, sy)) = project(m, p.x, p.y) else { continue };
            if !(sx >= -1.0 && sy >= -1.0 && sx <= sw && sy <= sh) {
                continue;
            }
            let (sx, sy) = (sx.clamp(0.0, sw - 1.0), sy.clamp(0.0, sh - 1.0));
            let px = src.sample_bilinear(sx, sy).expect("clamped into the image");
            let alpha = match src_mask {
                Some(sm) => cover * sample_plane(sm, src.width(), src.height(), sx, sy),
                None => cover,
            };
            if alpha <= 0.0 {
                continue;
            }
            let i = ly * lw + lx;
            data[i * ch..(i + 1) * ch].copy_from_slice(&px[..ch]);
            mask[i] = alpha as f32;
        }
    }
    Layer::new(Image::from_vec(lw, lh, ch, data)?, mask, (bx0, by0))
}

#[inline]
fn project(m: &[[f64; 3]; 3], x: f64, y: f64) -> Option<(f64, f64)> {
    let w = m[2][0] * x + m[2][1] * y + m[2][2];
    if w.abs() <= 1e-12 {
        return None;
    }
    Some(((m[0][0] * x + m[0][1] * y + m[0][2]) / w, (m[1][0] * x + m[1][1] * y + m[1][2]) / w))
}

/// `clamp(d + 0.5, 0, 1)` for signed boundary distance `d`, positive inside.
fn coverage(quad: &[Point2; 4], p: Point2) -> f64 {
    let d = boundary_distance(quad, p);
    let sd = if point_in_quad(quad, p) { d } else { -d };
    (sd + 0.5).clamp(0.0, 1.0)
}

/// Unit-normal edge lines `a x + b y + c`, positive inside, for a strictly
/// convex quad; `None` otherwise.
fn edge_lines(quad: &[Point2; 4]) -> Option<[[f64; 3]; 4]> {
    let turn = |i: usize| {
        let (a, b, c) = (quad[i], quad[(i + 1) % 4], quad[(i + 2) % 4]);
        (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x)
    };
    let sign = turn(0).signum();
    if sign == 0.0 || (1..4).any(|i| turn(i).signum() != sign) {
        return None;
    }
    let mut out = [[0.0; 3]; 4];
    for i in 0..4 {
        let (a, b) = (quad[i], quad[(i + 1) % 4]);
        let len = (b.x - a.x).hypot(b.y - a.y);
        // Left normal of a→b points inside when the quad turns left.
        let (nx, ny) = (-(b.y - a.y) / len * sign, (b.x - a.x) / len * sign);
        out[i] = [nx, ny, -(nx * a.x + ny * a.y)];
    }
    Some(out)
}

/// Distance from `p` to the nearest quad edge segment.
fn boundary_distance(quad: &[Point2; 4], p: Point2) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let (a, b) = (quad[i], quad[(i + 1) % 4]);
        let (ex, ey) = (b.x - a.x, b.y - a.y);
        let len2 = ex * ex + ey * ey;
        let t = if len2 > 0.0 { (((p.x - a.x) * ex + (p.y - a.y) * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let d = (p.x - a.x - t * ex).hypot(p.y - a.y - t * ey);
        best = best.min(d);
    }
    best
}

/// Bilinear read of a single-channel plane at an in-range position.
fn sample_plane(plane: &[f32], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let at = |xx: usize, yy: usize| plane[yy * w + xx] as f64;
    let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
    let bot = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
    top + (bot - top) * fy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::apply_homography;
    use crate::image::gaussian_filter;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn card(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, 3, |x, y, c| ((x * 7 + y * 3 + c * 5) % 17) as f32 / 16.0).unwrap()
    }

    #[test]
    fn identity_rectify_is_exact() {
        let f = card(20, 10);
        let l = rectify_feed(&f, &Homography::identity()).unwrap();
        assert_eq!(l.image, f);
        assert!(l.mask.iter().all(|&m| m == 1.0));
    }

    #[test]
    fn translation_shifts_content() {
        let f = card(30, 8);
        let l = rectify_feed(&f, &Homography::translation(10.0, 0.0)).unwrap();
        for y in 0..8 {
            for x in 0..30 {
                if x < 10 {
                    assert_eq!(l.mask[y * 30 + x], 0.0);
                } else {
                    assert_eq!(l.mask[y * 30 + x], 1.0);
                    assert_eq!(l.image.get(x, y, 1), f.get(x - 10, y, 1));
                }
            }
        }
    }

    #[test]
    fn round_trip_within_bilinear_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Image::from_fn(64, 48, 1, |_, _, _| rng.gen::<f32>()).unwrap();
        let f = gaussian_filter(&noise, 1.0).unwrap();
        let h = Homography::new([[0.95, 0.05, 2.0], [-0.04, 1.02, 1.5], [2e-4, -1e-4, 1.0]]).unwrap();
        let there = rectify_feed(&f, &h).unwrap();
        let back = rectify_feed(&there.image, &h.inverse().unwrap()).unwrap();
        // Bilinear error per pass is at most (fxx + fyy) / 8 in pixel units;
        // the warp stretches by under 10%, and there are two passes.
        let mut d2 = 0.0f32;
        for y in 1..47 {
            for x in 1..63 {
                let c = 2.0 * f.get(x, y, 0);
                d2 = d2.max((f.get(x - 1, y, 0) + f.get(x + 1, y, 0) - c).abs());
                d2 = d2.max((f.get(x, y - 1, 0) + f.get(x, y + 1, 0) - c).abs());
            }
        }
        let tol = 2.0 * 1.21 * (2.0 * d2) / 8.0 + 1e-5;
        let mut checked = 0;
        for y in 0..48 {
            for x in 0..64 {
                // Interior: source point at least 2 px inside the valid region.
                let q = apply_homography(&h, Point2::new(x as f64, y as f64)).unwrap();
                let inner = q.x >= 2.0 && q.y >= 2.0 && q.x <= 61.0 && q.y <= 45.0 && x >= 2 && y >= 2 && x <= 61 && y <= 45;
                if inner {
                    assert_eq!(back.mask[y * 64 + x], 1.0);
                    assert!((back.image.get(x, y, 0) - f.get(x, y, 0)).abs() <= tol, "({x}, {y}) tol {tol}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 1500);
    }

    #[test]
    fn singular_rectify_rejected() {
        assert!(Homography::new([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn full_frame_quad_reproduces_feed() {
        let f = card(40, 30);
        let q = MirrorQuad::new(0, feed_corners(40, 30)).unwrap();
        let l = warp_into_quad(&f, &q, 1.0, Point2::new(20.0, 15.0), false, (40, 30)).unwrap();
        assert_eq!(l.origin, (0, 0));
        for y in 1..29 {
            for x in 1..39 {
                assert_eq!(l.mask[y * 40 + x], 1.0);
                for c in 0..3 {
                    assert!((l.image.get(x, y, c) - f.get(x, y, c)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn flip_mirrors_the_feed() {
        let f = card(40, 30);
        let q = MirrorQuad::new(0, feed_corners(40, 30)).unwrap();
        let anchor = Point2::new(19.5, 14.5);
        let flipped = warp_into_quad(&f, &q, 1.0, anchor, true, (40, 30)).unwrap();
        let reference = warp_into_quad(&f.flip_horizontal(), &q, 1.0, anchor, false, (40, 30)).unwrap();
        for y in 1..29 {
            for x in 1..39 {
                assert!((flipped.image.get(x, y, 0) - reference.image.get(x, y, 0)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn grid_lands_at_analytic_positions() {
        // White grid lines every 8 px on black.
        let f = Image::from_fn(65, 49, 1, |x, y, _| if x % 8 == 0 || y % 8 == 0 { 1.0 } else { 0.0 }).unwrap();
        let q = MirrorQuad::new(
            0,
            [Point2::new(30.0, 20.0), Point2::new(150.0, 35.0), Point2::new(140.0, 120.0), Point2::new(25.0, 110.0)],
        )
        .unwrap();
        let h = quad_homography((65, 49), &q, 1.0, Point2::new(32.0, 24.0), false).unwrap();
        let l = warp_into_quad(&f, &q, 1.0, Point2::new(32.0, 24.0), false, (180, 140)).unwrap();
        let (ox, oy) = l.origin;
        for gy in (8..49).step_by(8).take(5) {
            for gx in (8..65).step_by(8).take(7) {
                let p = apply_homography(&h, Point2::new(gx as f64, gy as f64)).unwrap();
                // Intensity centroid of the 5×5 around the rounded position is
                // within half a pixel of the analytic intersection.
                let (rx, ry) = (p.x.round() as usize - ox, p.y.round() as usize - oy);
                let (mut sum, mut cx, mut cy, mut peak) = (0.0f64, 0.0f64, 0.0f64, 0.0f32);
                for y in ry - 2..=ry + 2 {
                    for x in rx - 2..=rx + 2 {
                        let v = l.image.get(x, y, 0);
                        peak = peak.max(v);
                        sum += v as f64;
                        cx += v as f64 * (x + ox) as f64;
                        cy += v as f64 * (y + oy) as f64;
                    }
                }
                let d = (cx / sum - p.x).hypot(cy / sum - p.y);
                assert!(d <= 0.5, "grid ({gx},{gy}): {d}");
                assert!(peak > 0.5);
            }
        }
    }

    #[test]
    fn mask_is_zero_outside_polygon() {
        let f = card(40, 30);
        let corners = [Point2::new(10.0, 10.0), Point2::new(60.0, 12.0), Point2::new(58.0, 50.0), Point2::new(12.0, 48.0)];
        let q = MirrorQuad::new(0, corners).unwrap();
        let l = warp_into_quad(&f, &q, 1.0, Point2::new(20.0, 15.0), false, (80, 60)).unwrap();
        let (ox, oy) = l.origin;
        for ly in 0..l.image.height() {
            for lx in 0..l.image.width() {
                let p = Point2::new((lx + ox) as f64, (ly + oy) as f64);
                let m = l.mask[ly * l.image.width() + lx];
                if !point_in_quad(&q.corners().clone(), p) && boundary_distance(&corners, p) >= 0.5 {
                    assert_eq!(m, 0.0);
                }
                if point_in_quad(&corners, p) && boundary_distance(&corners, p) >= 0.5 {
                    assert_eq!(m, 1.0);
                }
            }
        }
    }

    #[test]
    fn convex_coverage_matches_exact_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let f = card(64, 48);
        for _ in 0..20 {
            let mut jit = |x: f64, y: f64| Point2::new(x + rng.gen_range(-12.0..12.0), y + rng.gen_range(-12.0..12.0));
            let corners = [jit(30.0, 25.0), jit(110.0, 25.0), jit(110.0, 85.0), jit(30.0, 85.0)];
            let q = MirrorQuad::new(0, corners).unwrap();
            let l = warp_into_quad(&f, &q, 1.0, Point2::new(31.5, 23.5), false, (140, 110)).unwrap();
            let (ox, oy) = l.origin;
            for ly in 0..l.image.height() {
                for lx in 0..l.image.width() {
                    let p = Point2::new((lx + ox) as f64, (ly + oy) as f64);
                    assert_eq!(l.mask[ly * l.image.width() + lx] as f64, coverage(&corners, p) as f32 as f64);
                }
            }
        }
    }

    #[test]
    fn off_canvas_quad_gives_empty_layer() {
        let f = card(10, 10);
        let corners = [Point2::new(200.0, 200.0), Point2::new(260.0, 200.0), Point2::new(260.0, 240.0), Point2::new(200.0, 240.0)];
        let q = MirrorQuad::new(0, corners).unwrap();
        let l = warp_into_quad(&f, &q, 1.0, Point2::new(5.0, 5.0), false, (100, 100)).unwrap();
        assert!(l.mask.iter().all(|&m| m == 0.0));
    }
}
