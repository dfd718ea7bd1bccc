use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::{sobel_gradients, Image, ScoreMap};

/// Binary map (1.0 / 0.0) of pixels whose Sobel magnitude reaches `thresh`.
pub fn edge_map(img: &Image, thresh: f64) -> Result<ScoreMap> {
    let (gx, gy) = sobel_gradients(img)?;
    edge_map_from_gradients(&gx, &gy, thresh)
}

pub fn edge_map_from_gradients(gx: &ScoreMap, gy: &ScoreMap, thresh: f64) -> Result<ScoreMap> {
    if !(thresh > 0.0) {
        return Err(Error::param(format!("edge threshold must be positive, got {thresh}")));
    }
    let t2 = thresh * thresh;
    let mut out = ScoreMap::zeros(gx.width, gx.height);
    for ((o, &dx), &dy) in out.data.iter_mut().zip(&gx.data).zip(&gy.data) {
        if dx * dx + dy * dy >= t2 {
            *o = 1.0;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub votes: u32,
}

/// Gradient-directed circle Hough transform.
///
/// Every edge pixel votes at distance `r` along both `+∇I` and `−∇I` for each
/// integer radius in `[r_min, r_max]`. Peaks need `vote_frac · 2πr` votes and
/// must survive 3×3 non-max suppression within their radius layer. Results are
/// sorted by votes, strongest first.
pub fn hough_circles(
    edges: &ScoreMap,
    grads: (&ScoreMap, &ScoreMap),
    r_min: usize,
    r_max: usize,
    vote_frac: f64,
) -> Result<Vec<Circle>> {
    if r_min < 2 || r_min > r_max {
        return Err(Error::param(format!("invalid radius range [{r_min}, {r_max}]")));
    }
    if !(vote_frac > 0.0) {
        return Err(Error::param("vote fraction must be positive"));
    }
    let (w, h) = (edges.width, edges.height);
    let (gx, gy) = grads;
    if gx.width != w || gx.height != h || gy.width != w || gy.height != h {
        return Err(Error::param("gradient maps must match the edge map"));
    }
    let layers = r_max - r_min + 1;
    let plane = w * h;
    let mut acc = vec![0u32; layers * plane];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if edges.data[i] == 0.0 {
                continue;
            }
            let (dx, dy) = (gx.data[i], gy.data[i]);
            let mag = dx.hypot(dy);
            if mag == 0.0 {
                continue;
            }
            let (ux, uy) = (dx / mag, dy / mag);
            for (li, r) in (r_min..=r_max).enumerate() {
                for sign in [1.0, -1.0] {
                    let cx = (x as f64 + sign * r as f64 * ux).round();
                    let cy = (y as f64 + sign * r as f64 * uy).round();
                    if cx >= 0.0 && cy >= 0.0 && (cx as usize) < w && (cy as usize) < h {
                        acc[li * plane + cy as usize * w + cx as usize] += 1;
                    }
                }
            }
        }
    }

    let mut out = Vec::new();
    for (li, r) in (r_min..=r_max).enumerate() {
        let layer = &acc[li * plane..(li + 1) * plane];
        let need = vote_frac * 2.0 * PI * r as f64;
        for y in 0..h {
            for x in 0..w {
                let v = layer[y * w + x];
                if v == 0 || (v as f64) < need || !is_peak(layer, w, h, x, y) {
                    continue;
                }
                out.push(Circle { cx: x as f64, cy: y as f64, r: r as f64, votes: v });
            }
        }
    }
    out.sort_by(|a, b| {
        b.votes
            .cmp(&a.votes)
            .then(a.r.total_cmp(&b.r))
            .then(a.cy.total_cmp(&b.cy))
            .then(a.cx.total_cmp(&b.cx))
    });
    Ok(out)
}

/// Plateau-safe local maximum: ≥ later neighbours, > earlier ones.
fn is_peak(layer: &[u32], w: usize, h: usize, x: usize, y: usize) -> bool {
    let v = layer[y * w + x];
    for dy in -1isize..=1 {
        for dx in -1isize..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let n = layer[ny as usize * w + nx as usize];
            let earlier = dy < 0 || (dy == 0 && dx < 0);
            if n > v || (earlier && n == v) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marker::render_marker;

    fn disk_scene(w: usize, h: usize, disks: &[(f64, f64, f64)]) -> Image {
        Image::from_fn(w, h, 1, |x, y, _| {
            let mut v = 0.2;
            for &(cx, cy, r) in disks {
                // 4×4 supersampled coverage.
                let mut cov = 0.0;
                for j in 0..4 {
                    for i in 0..4 {
                        let px = x as f64 + (i as f64 + 0.5) / 4.0 - 0.5;
                        let py = y as f64 + (j as f64 + 0.5) / 4.0 - 0.5;
                        if (px - cx).hypot(py - cy) <= r {
                            cov += 1.0 / 16.0;
                        }
                    }
                }
                v += 0.6 * cov;
            }
            v as f32
        })
        .unwrap()
    }

    fn detect(img: &Image, r_min: usize, r_max: usize) -> Vec<Circle> {
        let (gx, gy) = sobel_gradients(img).unwrap();
        let edges = edge_map_from_gradients(&gx, &gy, 0.5).unwrap();
        hough_circles(&edges, (&gx, &gy), r_min, r_max, 0.3).unwrap()
    }

    #[test]
    fn constant_image_has_no_edges() {
        let img = Image::filled(16, 16, 1, 0.6).unwrap();
        let e = edge_map(&img, 0.1).unwrap();
        assert!(e.data.iter().all(|&v| v == 0.0));
        assert!(edge_map(&img, 0.0).is_err());
    }

    #[test]
    fn step_edges_stay_near_the_step() {
        let img = Image::from_fn(20, 10, 1, |x, _, _| if x < 12 { 0.1 } else { 0.9 }).unwrap();
        let e = edge_map(&img, 0.5).unwrap();
        for y in 0..10 {
            for x in 0..20 {
                if e.get(x, y) > 0.0 {
                    assert!((11..=12).contains(&x));
                }
            }
        }
        assert!(e.get(11, 5) > 0.0);
    }

    #[test]
    fn marker_edges_cover_circle_and_diameters() {
        let side = 31;
        let tpl = render_marker(side, 0).unwrap();
        let e = edge_map(&tpl.image, 0.5).unwrap();
        let c = 15.0;
        let radius = side as f64 / 2.0;
        let mut analytic = Vec::new();
        for k in 0..360 {
            let t = (k as f64).to_radians();
            analytic.push((c + (radius - 0.5) * t.cos(), c + (radius - 0.5) * t.sin()));
        }
        for k in -13..=13 {
            analytic.push((c + k as f64, c));
            analytic.push((c, c + k as f64));
        }
        let near = |(px, py): (f64, f64)| {
            let (xi, yi) = (px.round() as isize, py.round() as isize);
            (-1..=1).any(|dy| {
                (-1..=1).any(|dx| {
                    let (x, y) = (xi + dx, yi + dy);
                    x >= 0 && y >= 0 && x < side as isize && y < side as isize && e.get(x as usize, y as usize) > 0.0
                })
            })
        };
        let hit = analytic.iter().filter(|p| near(**p)).count();
        assert!(hit as f64 >= 0.9 * analytic.len() as f64, "{hit}/{}", analytic.len());
    }

    #[test]
    fn finds_single_circle() {
        let img = disk_scene(128, 128, &[(50.0, 50.0, 20.0)]);
        let found = detect(&img, 10, 30);
        let top = found[0];
        assert!((top.cx - 50.0).hypot(top.cy - 50.0) <= 2.0, "{top:?}");
        assert!((top.r - 20.0).abs() <= 1.0, "{top:?}");
    }

    #[test]
    fn empty_edges_give_nothing() {
        let z = ScoreMap::zeros(32, 32);
        assert!(hough_circles(&z, (&z, &z), 3, 8, 0.3).unwrap().is_empty());
        assert!(hough_circles(&z, (&z, &z), 1, 8, 0.3).is_err());
        assert!(hough_circles(&z, (&z, &z), 9, 8, 0.3).is_err());
    }

    #[test]
    fn two_circles_ranked_by_votes() {
        let img = disk_scene(160, 100, &[(40.0, 50.0, 25.0), (120.0, 50.0, 14.0)]);
        let found = detect(&img, 10, 30);
        assert!(found.iter().any(|c| (c.cx - 40.0).hypot(c.cy - 50.0) <= 2.0 && (c.r - 25.0).abs() <= 1.0));
        assert!(found.iter().any(|c| (c.cx - 120.0).hypot(c.cy - 50.0) <= 2.0 && (c.r - 14.0).abs() <= 1.0));
        assert!(found.windows(2).all(|p| p[0].votes >= p[1].votes));
    }
}
