//! The one-parameter homography family and its automatic scale.
//!
//! A single feed camera cannot tell how far the observer stands from the
//! mirror, so every point has a ray of consistent solutions. In image terms
//! the ambiguity is the apparent size of the subject. The family is
//! `H(s) = base ∘ Z(anchor, s)` with `Z` a uniform scaling about the subject
//! anchor, so the anchor lands in the same place for every `s`.

use super::homography::Homography;
use super::{check_quad, cross, Point2, Rect};
use crate::error::{Error, Result};

/// Smallest triangle area (px²) a quad corner triple may span.
pub const QUAD_EPS_AREA: f64 = 1.0;
const REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledHomography {
    pub base: Homography,
    pub anchor: Point2,
    pub s: f64,
}

impl ScaledHomography {
    pub fn new(base: Homography, anchor: Point2, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::param(format!("scale must be positive, got {s}")));
        }
        Ok(Self { base, anchor, s })
    }

    pub fn realize(&self) -> Result<Homography> {
        scaled_homography(&self.base, self.anchor, self.s)
    }
}

/// `base ∘ Z(anchor, s)`.
pub fn scaled_homography(base: &Homography, anchor: Point2, s: f64) -> Result<Homography> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::param(format!("scale must be positive, got {s}")));
    }
    if s == 1.0 {
        return Ok(*base);
    }
    base.compose(&Homography::scaling_about(anchor, s)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleBounds {
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for ScaleBounds {
    fn default() -> Self {
        Self { s_min: 0.25, s_max: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleResolution {
    pub s: f64,
    /// False when even `s_min` cannot keep the subject inside the quad.
    pub in_sight: bool,
}

/// Largest `s` in the bounds for which the four warped subject-box corners
/// stay inside the quad shrunk toward its centroid by `margin`.
///
/// Bisection to relative tolerance 1e-4 on the containment predicate, which is
/// monotone in `s` for convex quads. `anchor` is normally the box center.
pub fn resolve_scale(
    base: &Homography,
    anchor: Point2,
    subject: &Rect,
    quad: &[Point2; 4],
    margin: f64,
    bounds: ScaleBounds,
) -> Result<ScaleResolution> {
    if subject.is_empty() {
        return Err(Error::param("subject box is empty"));
    }
    if !(0.0..0.5).contains(&margin) {
        return Err(Error::param(format!("margin must lie in [0, 0.5), got {margin}")));
    }
    if !(bounds.s_min > 0.0 && bounds.s_min <= bounds.s_max && bounds.s_max.is_finite()) {
        return Err(Error::param("scale bounds must satisfy 0 < s_min <= s_max"));
    }
    check_quad(quad, QUAD_EPS_AREA).map_err(|r| Error::Degenerate(format!("degenerate quad: {r}")))?;

    let shrunk = shrink_quad(quad, margin);
    let corners = subject.corners();
    let fits = |s: f64| -> bool {
        let Ok(h) = scaled_homography(base, anchor, s) else { return false };
        corners.iter().all(|c| match h.apply(*c) {
            Ok(q) => point_in_quad(&shrunk, q),
            Err(_) => false,
        })
    };

    if fits(bounds.s_max) {
        return Ok(ScaleResolution { s: bounds.s_max, in_sight: true });
    }
    if !fits(bounds.s_min) {
        return Ok(ScaleResolution { s: bounds.s_min, in_sight: false });
    }
    let (mut lo, mut hi) = (bounds.s_min, bounds.s_max);
    while hi - lo > REL_TOL * lo {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ScaleResolution { s: lo, in_sight: true })
}

/// Moves each corner toward the vertex centroid by `margin` of its offset.
pub(crate) fn shrink_quad(quad: &[Point2; 4], margin: f64) -> [Point2; 4] {
    let cx = quad.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = quad.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let k = 1.0 - margin;
    quad.map(|p| Point2::new(cx + k * (p.x - cx), cy + k * (p.y - cy)))
}

/// Inside-or-on test for a positively oriented quad; non-convex quads fall
/// back to the crossing-number rule.
pub fn point_in_quad(quad: &[Point2; 4], p: Point2) -> bool {
    let convex = (0..4).all(|i| cross(quad[i], quad[(i + 1) % 4], quad[(i + 2) % 4]) > 0.0);
    if convex {
        return (0..4).all(|i| cross(quad[i], quad[(i + 1) % 4], p) >= 0.0);
    }
    let mut inside = false;
    for i in 0..4 {
        let a = quad[i];
        let b = quad[(i + 1) % 4];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}
