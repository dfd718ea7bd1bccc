//! Frame-to-frame stabilization: exponential smoothing of homographies and
//! scale, track hold-over through detection dropouts, and subject
//! localization by background differencing.

mod subject;

pub use subject::{estimate_subject_bbox, SubjectBox, SubjectEstimator};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::Homography;
use crate::marker::MirrorQuad;

/// Entrywise `(1−α)·prev + α·cur` on normalized matrices, renormalized.
/// A singular blend yields `cur`.
pub fn smooth_homography(prev: &Homography, cur: &Homography, alpha: f64) -> Result<Homography> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return Ok(*cur);
    }
    let (p, c) = (prev.matrix(), cur.matrix());
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (1.0 - alpha) * p[i][j] + alpha * c[i][j];
        }
    }
    Ok(Homography::new(m).unwrap_or(*cur))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("smoothing alpha must lie in (0, 1], got {alpha}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackConfig {
    pub alpha: f64,
    pub hold_frames: usize,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self { alpha: 0.3, hold_frames: 15 }
    }
}

/// Smoothed state of one mirror. `alive` implies
/// `frames_since_seen <= hold_frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub mirror_id: u32,
    pub smoothed_h: Homography,
    pub smoothed_s: f64,
    pub last_quad: MirrorQuad,
    pub frames_since_seen: usize,
    pub alive: bool,
}

impl TrackState {
    /// The first detection seeds the filter exactly.
    pub fn seed(quad: MirrorQuad, h: Homography, s: f64) -> Self {
        Self { mirror_id: quad.mirror_id, smoothed_h: h, smoothed_s: s, last_quad: quad, frames_since_seen: 0, alive: true }
    }

    /// Exponentially smooths the scale with the track's α.
    pub fn smooth_scale(&mut self, s: f64, alpha: f64) -> Result<()> {
        check_alpha(alpha)?;
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::param(format!("scale must be positive, got {s}")));
        }
        self.smoothed_s = if alpha == 1.0 { s } else { (1.0 - alpha) * self.smoothed_s + alpha * s };
        Ok(())
    }
}

/// One frame of tracking. A detection is `quad` together with `h_new`; the
/// scale is optional and held when absent. A dead track is re-seeded by the
/// next detection.
pub fn update_track(
    state: &TrackState,
    quad: Option<MirrorQuad>,
    h_new: Option<Homography>,
    s_new: Option<f64>,
    cfg: &TrackConfig,
) -> Result<TrackState> {
    check_alpha(cfg.alpha)?;
    match (quad, h_new) {
        (Some(q), Some(h)) => {
            if q.mirror_id != state.mirror_id {
                return Err(Error::param(format!(
                    "quad for mirror {} offered to track {}",
                    q.mirror_id, state.mirror_id
                )));
            }
            if !state.alive {
                return Ok(TrackState::seed(q, h, s_new.unwrap_or(state.smoothed_s)));
            }
            let mut next = state.clone();
            next.smoothed_h = smooth_homography(&state.smoothed_h, &h, cfg.alpha)?;
            if let Some(s) = s_new {
                next.smooth_scale(s, cfg.alpha)?;
            }
            next.last_quad = q;
            next.frames_since_seen = 0;
            Ok(next)
        }
        (None, None) => {
            let mut next = state.clone();
            next.frames_since_seen = state.frames_since_seen.saturating_add(1);
            next.alive = state.alive && next.frames_since_seen <= cfg.hold_frames;
            Ok(next)
        }
        _ => Err(Error::param("a detection needs both a quad and a homography")),
    }
}

/// Tracks keyed by mirror id; dead tracks are dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet {
    tracks: BTreeMap<u32, TrackState>,
}

impl TrackSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advances every track by one frame given this frame's detections.
    pub fn update(&mut self, detections: &[(MirrorQuad, Homography)], cfg: &TrackConfig) -> Result<()> {
        let mut seen = Vec::with_capacity(detections.len());
        for (quad, h) in detections {
            let id = quad.mirror_id;
            seen.push(id);
            let next = match self.tracks.get(&id) {
                Some(t) => update_track(t, Some(*quad), Some(*h), None, cfg)?,
                None => TrackState::seed(*quad, *h, 1.0),
            };
            self.tracks.insert(id, next);
        }
        let missing: Vec<u32> = self.tracks.keys().copied().filter(|id| !seen.contains(id)).collect();
        for id in missing {
            let next = update_track(&self.tracks[&id], None, None, None, cfg)?;
            if next.alive {
                self.tracks.insert(id, next);
            } else {
                self.tracks.remove(&id);
            }
        }
        Ok(())
    }

    pub fn get(&self, mirror_id: u32) -> Option<&TrackState> {
        self.tracks.get(&mirror_id)
    }

    pub fn get_mut(&mut self, mirror_id: u32) -> Option<&mut TrackState> {
        self.tracks.get_mut(&mirror_id)
    }

    /// Alive tracks in mirror-id order.
    pub fn iter(&self) -> impl Iterator<Item = &TrackState> {
        self.tracks.values()
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_homography, quad_to_quad, Point2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quad(dx: f64, dy: f64) -> MirrorQuad {
        MirrorQuad::new(
            0,
            [
                Point2::new(100.0 + dx, 80.0 + dy),
                Point2::new(300.0 + dx, 90.0 + dy),
                Point2::new(290.0 + dx, 250.0 + dy),
                Point2::new(110.0 + dx, 240.0 + dy),
            ],
        )
        .unwrap()
    }

    const FEED: [Point2; 4] =
        [Point2::new(0.0, 0.0), Point2::new(319.0, 0.0), Point2::new(319.0, 239.0), Point2::new(0.0, 239.0)];

    fn h_of(q: &MirrorQuad) -> Homography {
        quad_to_quad(&FEED, q.corners()).unwrap()
    }

    #[test]
    fn fixed_point_and_no_memory() {
        let a = h_of(&quad(0.0, 0.0));
        let b = h_of(&quad(5.0, -3.0));
        assert!(smooth_homography(&a, &a, 0.3).unwrap().max_abs_diff(&a) <= 1e-15);
        assert_eq!(smooth_homography(&a, &b, 1.0).unwrap(), b);
        assert!(smooth_homography(&a, &b, 0.0).is_err());
        assert!(smooth_homography(&a, &b, 1.5).is_err());
    }

    #[test]
    fn geometric_decay() {
        let alpha = 0.3;
        let target = h_of(&quad(0.0, 0.0));
        let mut cur = h_of(&quad(40.0, 25.0));
        let e0 = cur.max_abs_diff(&target);
        for k in 1..=20 {
            cur = smooth_homography(&cur, &target, alpha).unwrap();
            let expect = (1.0 - alpha as f64).powi(k) * e0;
            assert!((cur.max_abs_diff(&target) - expect).abs() <= 1e-9 * e0.max(1.0), "step {k}");
        }
    }

    #[test]
    fn singular_blend_falls_back() {
        let a = Homography::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let b = Homography::new([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(smooth_homography(&a, &b, 0.5).unwrap(), b);
    }

    #[test]
    fn first_detection_seeds_exactly() {
        let q = quad(0.0, 0.0);
        let h = h_of(&q);
        let t = TrackState::seed(q, h, 1.5);
        assert_eq!((t.smoothed_h, t.smoothed_s, t.last_quad, t.frames_since_seen, t.alive), (h, 1.5, q, 0, true));
    }

    #[test]
    fn dropouts_end_track_after_hold() {
        let cfg = TrackConfig { alpha: 0.3, hold_frames: 15 };
        let q = quad(0.0, 0.0);
        let mut t = TrackState::seed(q, h_of(&q), 1.0);
        for k in 1..=16 {
            t = update_track(&t, None, None, None, &cfg).unwrap();
            assert_eq!(t.alive, k <= 15, "after {k} dropouts");
            assert_eq!(t.smoothed_h, h_of(&q));
        }
        // A new detection on a dead track re-seeds it.
        let q2 = quad(9.0, 0.0);
        let t = update_track(&t, Some(q2), Some(h_of(&q2)), None, &cfg).unwrap();
        assert!(t.alive);
        assert_eq!(t.smoothed_h, h_of(&q2));
    }

    #[test]
    fn jitter_variance_reduced() {
        let cfg = TrackConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let q0 = quad(0.0, 0.0);
        let mut t = TrackState::seed(q0, h_of(&q0), 1.0);
        let (mut raw, mut smooth) = (Vec::new(), Vec::new());
        for _ in 0..400 {
            let c = q0.corners();
            let jit: Vec<Point2> =
                c.iter().map(|p| Point2::new(p.x + rng.gen_range(-2.0..2.0), p.y + rng.gen_range(-2.0..2.0))).collect();
            let q = MirrorQuad::new(0, [jit[0], jit[1], jit[2], jit[3]]).unwrap();
            t = update_track(&t, Some(q), Some(h_of(&q)), None, &cfg).unwrap();
            raw.push(jit[0]);
            smooth.push(apply_homography(&t.smoothed_h, FEED[0]).unwrap());
        }
        let var = |v: &[Point2]| {
            let v = &v[50..];
            let n = v.len() as f64;
            let (mx, my) = (v.iter().map(|p| p.x).sum::<f64>() / n, v.iter().map(|p| p.y).sum::<f64>() / n);
            v.iter().map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2)).sum::<f64>() / n
        };
        assert!(var(&raw) >= 3.0 * var(&smooth), "{} vs {}", var(&raw), var(&smooth));
    }

    #[test]
    fn track_set_lifecycle() {
        let cfg = TrackConfig { alpha: 0.5, hold_frames: 2 };
        let mut set = TrackSet::new();
        let q = quad(0.0, 0.0);
        set.update(&[(q, h_of(&q))], &cfg).unwrap();
        assert_eq!(set.len(), 1);
        for _ in 0..2 {
            set.update(&[], &cfg).unwrap();
            assert_eq!(set.len(), 1);
        }
        set.update(&[], &cfg).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn scale_smoothing() {
        let q = quad(0.0, 0.0);
        let mut t = TrackState::seed(q, h_of(&q), 1.0);
        t.smooth_scale(2.0, 0.25).unwrap();
        assert_eq!(t.smoothed_s, 1.25);
        assert!(t.smooth_scale(0.0, 0.25).is_err());
    }
}
