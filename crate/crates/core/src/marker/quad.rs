use std::collections::BTreeMap;

use super::{mirror_of, CornerRole, MarkerHit};
use crate::error::{Error, Result};
use crate::geometry::{check_quad, Point2, QUAD_EPS_AREA};

/// Mirror region pinned by four corners in TL, TR, BR, BL order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorQuad {
    pub mirror_id: u32,
    corners: [Point2; 4],
}

impl MirrorQuad {
    /// Enforces clockwise order and no near-collinear corner triple.
    pub fn new(mirror_id: u32, corners: [Point2; 4]) -> Result<Self> {
        check_quad(&corners, QUAD_EPS_AREA).map_err(|reason| Error::DegenerateQuad { mirror_id, reason })?;
        Ok(Self { mirror_id, corners })
    }

    pub fn corners(&self) -> &[Point2; 4] {
        &self.corners
    }

    /// Axis-aligned bounds `(x0, y0, x1, y1)` of the corners.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.corners {
            b = (b.0.min(p.x), b.1.min(p.y), b.2.max(p.x), b.3.max(p.y));
        }
        b
    }
}

/// One entry per mirror that has at least one hit, ordered by mirror id.
///
/// Corners are assigned by class role, never by geometry; when a role has
/// several hits the highest score wins.
pub fn corners_to_quad(hits: &[MarkerHit]) -> Vec<Result<MirrorQuad>> {
    let mut groups: BTreeMap<u32, [Option<MarkerHit>; 4]> = BTreeMap::new();
    for hit in hits {
        let slots = groups.entry(mirror_of(hit.class_id)).or_default();
        let role = CornerRole::from_class(hit.class_id).index().expect("corner role");
        match &slots[role] {
            Some(prev) if prev.score >= hit.score => {}
            _ => slots[role] = Some(*hit),
        }
    }
    groups
        .into_iter()
        .map(|(mirror_id, slots)| {
            let missing: Vec<CornerRole> =
                CornerRole::CORNERS.iter().zip(&slots).filter(|(_, s)| s.is_none()).map(|(r, _)| *r).collect();
            if !missing.is_empty() {
                return Err(Error::IncompleteQuad { mirror_id, missing });
            }
            let corners = [0, 1, 2, 3].map(|i| slots[i].expect("complete").center);
            MirrorQuad::new(mirror_id, corners)
        })
        .collect()
}

/// Single-marker mode: each mirror's best hit marks the center of a
/// `width × height` axis-aligned quad.
pub fn single_marker_quads(hits: &[MarkerHit], width: f64, height: f64) -> Vec<Result<MirrorQuad>> {
    if !(width > 0.0 && height > 0.0) {
        return vec![Err(Error::param(format!("single-marker quad size must be positive, got {width}x{height}")))];
    }
    let mut best: BTreeMap<u32, MarkerHit> = BTreeMap::new();
    for hit in hits {
        let e = best.entry(mirror_of(hit.class_id)).or_insert(*hit);
        if hit.score > e.score {
            *e = *hit;
        }
    }
    best.into_iter()
        .map(|(mirror_id, hit)| {
            let (hx, hy) = (width / 2.0, height / 2.0);
            let c = hit.center;
            MirrorQuad::new(
                mirror_id,
                [
                    Point2::new(c.x - hx, c.y - hy),
                    Point2::new(c.x + hx, c.y - hy),
                    Point2::new(c.x + hx, c.y + hy),
                    Point2::new(c.x - hx, c.y + hy),
                ],
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hit(class_id: u32, x: f64, y: f64) -> MarkerHit {
        MarkerHit {
            center: Point2::new(x, y),
            score: 0.9,
            class_id,
            radius: 10.0,
            corner_role: CornerRole::from_class(class_id),
        }
    }

    fn rect_hits(mirror: u32, x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<MarkerHit> {
        let b = 4 * mirror;
        vec![hit(b, x0, y0), hit(b + 1, x1, y0), hit(b + 2, x1, y1), hit(b + 3, x0, y1)]
    }

    #[test]
    fn rectangle_assembles_in_role_order() {
        let mut hits = rect_hits(0, 10.0, 20.0, 110.0, 80.0);
        hits.reverse();
        let quads = corners_to_quad(&hits);
        assert_eq!(quads.len(), 1);
        let q = quads[0].as_ref().unwrap();
        assert_eq!(q.mirror_id, 0);
        assert_eq!(q.corners()[0], Point2::new(10.0, 20.0));
        assert_eq!(q.corners()[2], Point2::new(110.0, 80.0));
        assert_eq!(q.bounds(), (10.0, 20.0, 110.0, 80.0));
    }

    #[test]
    fn eight_hits_make_two_quads() {
        let mut hits = rect_hits(1, 200.0, 20.0, 300.0, 80.0);
        hits.extend(rect_hits(0, 10.0, 20.0, 110.0, 80.0));
        let quads = corners_to_quad(&hits);
        let ids: Vec<u32> = quads.iter().map(|q| q.as_ref().unwrap().mirror_id).collect();
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn collinear_corners_are_degenerate() {
        let hits = vec![hit(0, 0.0, 0.0), hit(1, 50.0, 0.0), hit(2, 100.0, 0.0), hit(3, 10.0, 60.0)];
        assert!(matches!(corners_to_quad(&hits)[0], Err(Error::DegenerateQuad { mirror_id: 0, .. })));
    }

    #[test]
    fn missing_role_is_reported() {
        let mut hits = rect_hits(0, 10.0, 20.0, 110.0, 80.0);
        hits.remove(1);
        match &corners_to_quad(&hits)[0] {
            Err(Error::IncompleteQuad { mirror_id: 0, missing }) => assert_eq!(missing, &vec![CornerRole::TopRight]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn crossed_roles_are_rejected() {
        // TL and TR swapped: wrong orientation.
        let hits = vec![hit(0, 110.0, 20.0), hit(1, 10.0, 20.0), hit(2, 110.0, 80.0), hit(3, 10.0, 80.0)];
        assert!(corners_to_quad(&hits)[0].is_err());
    }

    #[test]
    fn best_score_wins_a_role() {
        let mut hits = rect_hits(0, 10.0, 20.0, 110.0, 80.0);
        let mut dup = hit(0, 12.0, 22.0);
        dup.score = 0.95;
        hits.push(dup);
        let q = corners_to_quad(&hits).remove(0).unwrap();
        assert_eq!(q.corners()[0], Point2::new(12.0, 22.0));
    }

    #[test]
    fn single_marker_mode() {
        let hits = vec![hit(2, 50.0, 40.0), hit(5, 200.0, 100.0)];
        let quads = single_marker_quads(&hits, 40.0, 30.0);
        assert_eq!(quads.len(), 2);
        let q = quads[0].as_ref().unwrap();
        assert_eq!(q.bounds(), (30.0, 25.0, 70.0, 55.0));
        assert_eq!(quads[1].as_ref().unwrap().mirror_id, 1);
        assert!(single_marker_quads(&hits, 0.0, 30.0)[0].is_err());
    }
}
