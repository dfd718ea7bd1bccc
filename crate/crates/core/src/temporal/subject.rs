use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::image::Image;

/// Subject bounds in feed pixels. Edges are pixel boundaries: a blob covering
/// pixel columns `a..=b` spans `[a − 0.5, b + 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectBox {
    pub rect: Rect,
    /// Component area over box area, in `(0, 1]`.
    pub confidence: f64,
}

/// Background differencing with a cached gray background.
#[derive(Debug, Clone)]
pub struct SubjectEstimator {
    width: usize,
    height: usize,
    background: Vec<f32>,
}

impl SubjectEstimator {
    pub fn new(background: &Image) -> Self {
        Self { width: background.width(), height: background.height(), background: background.gray().data().to_vec() }
    }

    pub fn estimate(&self, feed: &Image, thresh: f64, min_area: usize) -> Result<Option<SubjectBox>> {
        if feed.dims() != (self.width, self.height) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.width, self.height),
                actual: format!("{}x{}", feed.width(), feed.height()),
            });
        }
        let gray = feed.gray();
        let mask: Vec<bool> =
            gray.data().iter().zip(&self.background).map(|(&a, &b)| (a - b).abs() as f64 >= thresh).collect();
        let mask = majority3(&mask, self.width, self.height);
        Ok(largest_component(&mask, self.width, self.height)
            .filter(|c| c.area >= min_area.max(1))
            .map(|c| {
                let rect = Rect::new(c.x0 as f64 - 0.5, c.y0 as f64 - 0.5, c.x1 as f64 + 0.5, c.y1 as f64 + 0.5);
                SubjectBox { rect, confidence: c.area as f64 / rect.area() }
            }))
    }
}

/// Largest 4-connected foreground blob of `|gray(feed) − gray(background)| ≥
/// thresh` after a 3×3 median of the mask; `None` below `min_area`.
pub fn estimate_subject_bbox(feed: &Image, background: &Image, thresh: f64, min_area: usize) -> Result<Option<SubjectBox>> {
    if feed.dims() != background.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", background.width(), background.height()),
            actual: format!("{}x{}", feed.width(), feed.height()),
        });
    }
    SubjectEstimator::new(background).estimate(feed, thresh, min_area)
}

/// Binary 3×3 median (majority of 9) with clamp-to-edge borders.
fn majority3(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    // Vertical 3-sums, then horizontal.
    let mut col = vec![0u8; w * h];
    for y in 0..h {
        let (ya, yb) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            col[y * w + x] = mask[ya * w + x] as u8 + mask[y * w + x] as u8 + mask[yb * w + x] as u8;
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        let row = &col[y * w..(y + 1) * w];
        for x in 0..w {
            let s = row[x.saturating_sub(1)] + row[x] + row[(x + 1).min(w - 1)];
            out[y * w + x] = s >= 5;
        }
    }
    out
}

struct Component {
    area: usize,
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

/// Ties on area keep the component found first in scan order.
fn largest_component(mask: &[bool], w: usize, h: usize) -> Option<Component> {
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut best: Option<Component> = None;
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut c = Component { area: 0, x0: usize::MAX, y0: usize::MAX, x1: 0, y1: 0 };
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            c.area += 1;
            c.x0 = c.x0.min(x);
            c.x1 = c.x1.max(x);
            c.y0 = c.y0.min(y);
            c.y1 = c.y1.max(y);
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if best.as_ref().map_or(true, |b| c.area > b.area) {
            best = Some(c);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_blobs(bg: &Image, blobs: &[(usize, usize, usize, usize)]) -> Image {
        Image::from_fn(bg.width(), bg.height(), bg.channels(), |x, y, c| {
            if blobs.iter().any(|&(bx, by, bw, bh)| x >= bx && x < bx + bw && y >= by && y < by + bh) {
                0.95
            } else {
                bg.get(x, y, c)
            }
        })
        .unwrap()
    }

    fn bg() -> Image {
        Image::from_fn(160, 120, 3, |x, y, c| (0.2 + 0.001 * (x + y + c) as f32).min(0.5)).unwrap()
    }

    #[test]
    fn identical_frames_have_no_subject() {
        let b = bg();
        assert!(estimate_subject_bbox(&b, &b, 0.1, 10).unwrap().is_none());
    }

    #[test]
    fn square_is_recovered() {
        let b = bg();
        let f = with_blobs(&b, &[(30, 20, 40, 40)]);
        let s = estimate_subject_bbox(&f, &b, 0.1, 10).unwrap().unwrap();
        assert_eq!(s.rect, Rect::new(29.5, 19.5, 69.5, 59.5));
        // The median trims the four corner pixels.
        assert!((s.confidence - 1596.0 / 1600.0).abs() < 1e-12);
    }

    #[test]
    fn largest_blob_wins() {
        let b = bg();
        let f = with_blobs(&b, &[(5, 5, 10, 10), (60, 40, 30, 30)]);
        let s = estimate_subject_bbox(&f, &b, 0.1, 10).unwrap().unwrap();
        assert_eq!(s.rect, Rect::new(59.5, 39.5, 89.5, 69.5));
        assert!(estimate_subject_bbox(&f, &b, 0.1, 901).unwrap().is_none());
    }

    #[test]
    fn translation_consistent() {
        let b = bg();
        let a = estimate_subject_bbox(&with_blobs(&b, &[(30, 20, 25, 17)]), &b, 0.1, 10).unwrap().unwrap();
        let s = estimate_subject_bbox(&with_blobs(&b, &[(37, 29, 25, 17)]), &b, 0.1, 10).unwrap().unwrap();
        assert_eq!((s.rect.x0 - a.rect.x0, s.rect.y0 - a.rect.y0), (7.0, 9.0));
        assert_eq!((s.rect.x1 - a.rect.x1, s.rect.y1 - a.rect.y1), (7.0, 9.0));
    }

    #[test]
    fn speckle_removed_by_median() {
        let b = bg();
        let f = with_blobs(&b, &[(10, 10, 1, 1), (50, 50, 1, 1)]);
        assert!(estimate_subject_bbox(&f, &b, 0.1, 1).unwrap().is_none());
    }

    #[test]
    fn dimension_mismatch() {
        let b = bg();
        let f = Image::filled(10, 10, 3, 0.0).unwrap();
        assert!(estimate_subject_bbox(&f, &b, 0.1, 1).is_err());
    }
}
