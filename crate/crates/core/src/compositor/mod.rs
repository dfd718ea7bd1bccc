//! Per-frame compositing: find the mirror quads in the scene, rectify and
//! crop the feed, resolve the scale that keeps the subject inside the quad,
//! warp the feed into the quad and blend it over the scene.
//!
//! The work splits into a tracker stage (detection, quad assembly, track
//! update) and a render stage (everything that touches the feed). The stages
//! share no mutable state, so running them on two threads gives the same
//! frames as running them back to back.

mod blend;
mod warp;

pub use blend::blend;
pub use warp::{feed_corners, quad_homography, rectify_feed, warp_into_quad};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::mpsc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{
    field_angle_window, quad_to_quad, resolve_scale, scaled_homography, CropWindow, Homography, Point2, ScaleBounds,
};
use crate::image::Image;
use crate::marker::{
    corners_to_quad, detect_markers, detect_markers_in, single_marker_quads, DetectionConfig, MarkerHit,
    MarkerTemplate, MirrorQuad, SearchWindow,
};
use crate::temporal::{SubjectBox, SubjectEstimator, TrackConfig, TrackSet, TrackState};

/// Mirrors flip handedness; windows do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Mirror,
    Window,
}

/// How detected markers become quads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadMode {
    /// Four markers pin the four corners.
    Corners,
    /// One marker marks the center of a fixed-size quad.
    Single { width: f64, height: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposeConfig {
    pub detection: DetectionConfig,
    pub marker_side: usize,
    pub mirrors: u32,
    /// Full-frame detection at least every this many frames while tracking.
    pub full_every: usize,
    /// Half-size of the tracking search window around each last corner.
    pub search_radius: usize,
    pub quad_mode: QuadMode,
    pub track: TrackConfig,
    pub margin: f64,
    pub bounds: ScaleBounds,
    pub subject_thresh: f64,
    pub subject_min_area: usize,
    pub surface_kind: SurfaceKind,
    pub feather_px: usize,
    pub fov_deg: f64,
    pub focal_px: f64,
    pub rectify: Option<Homography>,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        Self {
            detection: DetectionConfig::default(),
            marker_side: 21,
            mirrors: 1,
            full_every: 30,
            search_radius: 16,
            quad_mode: QuadMode::Corners,
            track: TrackConfig::default(),
            margin: 0.05,
            bounds: ScaleBounds::default(),
            subject_thresh: 0.1,
            subject_min_area: 100,
            surface_kind: SurfaceKind::Mirror,
            feather_px: 2,
            fov_deg: 60.0,
            focal_px: 600.0,
            rectify: None,
        }
    }
}

impl ComposeConfig {
    pub fn validate(&self) -> Result<()> {
        self.detection.validate()?;
        if self.marker_side % 2 == 0 || self.marker_side < 15 {
            return Err(Error::param(format!("marker side must be odd and >= 15, got {}", self.marker_side)));
        }
        if self.mirrors == 0 || self.full_every == 0 {
            return Err(Error::param("mirrors and full_every must be at least 1"));
        }
        if !(self.track.alpha > 0.0 && self.track.alpha <= 1.0) {
            return Err(Error::param(format!("smoothing alpha must lie in (0, 1], got {}", self.track.alpha)));
        }
        if !(0.0..0.5).contains(&self.margin) {
            return Err(Error::param(format!("margin must lie in [0, 0.5), got {}", self.margin)));
        }
        if !(self.bounds.s_min > 0.0 && self.bounds.s_min <= self.bounds.s_max && self.bounds.s_max.is_finite()) {
            return Err(Error::param("scale bounds must satisfy 0 < s_min <= s_max"));
        }
        if !(self.subject_thresh > 0.0) {
            return Err(Error::param("subject threshold must be positive"));
        }
        if let QuadMode::Single { width, height } = self.quad_mode {
            if !(width > 0.0 && height > 0.0) {
                return Err(Error::param("single-marker quad size must be positive"));
            }
        }
        field_angle_window(2, 2, self.fov_deg, self.focal_px)?;
        Ok(())
    }
}

/// Image patch with per-pixel coverage, placed at `origin` on a larger canvas.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub image: Image,
    /// Coverage in `[0, 1]`, one value per layer pixel.
    pub mask: Vec<f32>,
    pub origin: (usize, usize),
}

impl Layer {
    pub fn new(image: Image, mask: Vec<f32>, origin: (usize, usize)) -> Result<Self> {
        if mask.len() != image.width() * image.height() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} mask values", image.width() * image.height()),
                actual: mask.len().to_string(),
            });
        }
        if mask.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::param("mask values must lie in [0, 1]"));
        }
        Ok(Self { image, mask, origin })
    }

    /// One fully transparent pixel.
    pub fn transparent(channels: usize) -> Self {
        Self { image: Image::filled(1, 1, channels, 0.0).expect("valid"), mask: vec![0.0], origin: (0, 0) }
    }
}

/// Per-frame statistics. Timings are wall-clock and vary between runs.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStats {
    pub frame: usize,
    pub tracks: usize,
    pub hits: usize,
    /// Smoothed scale of the first rendered track, NaN without tracks.
    pub s: f64,
    /// Tracks or quads that failed and were skipped.
    pub failed: usize,
    pub full_detect: bool,
    pub detect_ms: f64,
    pub warp_ms: f64,
    pub total_ms: f64,
}

impl fmt::Display for FrameStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.s.is_nan() { "nan".to_string() } else { format!("{:.6}", self.s) };
        write!(
            f,
            "frame={} tracks={} s={} detect_ms={:.3} warp_ms={:.3} total_ms={:.3}",
            self.frame, self.tracks, s, self.detect_ms, self.warp_ms, self.total_ms
        )
    }
}

/// Tracker output for one frame: an immutable snapshot handed to rendering.
#[derive(Debug, Clone)]
pub struct TrackedFrame {
    pub frame: usize,
    pub hits: Vec<MarkerHit>,
    pub tracks: Vec<TrackState>,
    pub failed: usize,
    pub full_detect: bool,
    pub detect_ms: f64,
}

/// Detection, quad assembly and track smoothing.
#[derive(Debug, Clone)]
pub struct TrackerStage {
    cfg: ComposeConfig,
    bank: Vec<MarkerTemplate>,
    feed_crop: CropWindow,
    tracks: TrackSet,
    frame: usize,
    since_full: usize,
}

impl TrackerStage {
    pub fn new(cfg: ComposeConfig, bank: Vec<MarkerTemplate>, feed_dims: (usize, usize)) -> Result<Self> {
        cfg.validate()?;
        if bank.is_empty() {
            return Err(Error::param("empty template bank"));
        }
        let feed_crop = field_angle_window(feed_dims.0, feed_dims.1, cfg.fov_deg, cfg.focal_px)?;
        Ok(Self { cfg, bank, feed_crop, tracks: TrackSet::new(), frame: 0, since_full: 0 })
    }

    pub fn tracks(&self) -> &TrackSet {
        &self.tracks
    }

    pub fn process(&mut self, scene: &Image) -> Result<TrackedFrame> {
        let start = Instant::now();
        let (w, h) = scene.dims();
        let det = &self.cfg.detection;
        let mut full = self.tracks.is_empty() || self.since_full + 1 >= self.cfg.full_every;
        let mut hits = if full {
            detect_markers(scene, &self.bank, det)?
        } else {
            detect_markers_in(scene, &self.bank, det, &self.search_windows(w, h))?
        };
        let mut quads = self.assemble(&hits);
        let lost = self.tracks.iter().any(|t| !quads.iter().any(|q| matches!(q, Ok(q) if q.mirror_id == t.mirror_id)));
        if !full && lost {
            full = true;
            hits = detect_markers(scene, &self.bank, det)?;
            quads = self.assemble(&hits);
        }
        self.since_full = if full { 0 } else { self.since_full + 1 };

        let rect = feed_corners(self.feed_crop.width, self.feed_crop.height);
        let mut failed = 0;
        let mut detections = Vec::new();
        for q in quads {
            match q.and_then(|q| Ok((q, quad_to_quad(&rect, q.corners())?))) {
                Ok(d) => detections.push(d),
                Err(_) => failed += 1,
            }
        }
        self.tracks.update(&detections, &self.cfg.track)?;
        let frame = self.frame;
        self.frame += 1;
        Ok(TrackedFrame {
            frame,
            hits,
            tracks: self.tracks.iter().cloned().collect(),
            failed,
            full_detect: full,
            detect_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    fn assemble(&self, hits: &[MarkerHit]) -> Vec<Result<MirrorQuad>> {
        let quads = match self.cfg.quad_mode {
            QuadMode::Corners => corners_to_quad(hits),
            QuadMode::Single { width, height } => single_marker_quads(hits, width, height),
        };
        quads.into_iter().filter(|q| !matches!(q, Ok(q) if q.mirror_id >= self.cfg.mirrors)).collect()
    }

    fn search_windows(&self, w: usize, h: usize) -> Vec<SearchWindow> {
        let r = self.cfg.search_radius;
        let mut out = Vec::new();
        for t in self.tracks.iter() {
            match self.cfg.quad_mode {
                QuadMode::Corners => {
                    out.extend(t.last_quad.corners().iter().map(|&c| SearchWindow::around(c, r, w, h)));
                }
                QuadMode::Single { width, height } => {
                    let (x0, y0, _, _) = t.last_quad.bounds();
                    let c = Point2::new(x0 + width / 2.0, y0 + height / 2.0);
                    out.push(SearchWindow::around(c, r, w, h));
                }
            }
        }
        out
    }
}

/// Feed processing, scale resolution, warping and blending.
#[derive(Debug, Clone)]
pub struct RenderStage {
    cfg: ComposeConfig,
    feed_dims: (usize, usize),
    feed_crop: CropWindow,
    background: Option<SubjectEstimator>,
    /// Smoothed scale and last anchor per mirror.
    scale: BTreeMap<u32, (f64, Point2)>,
}

impl RenderStage {
    pub fn new(cfg: ComposeConfig, feed_dims: (usize, usize)) -> Result<Self> {
        cfg.validate()?;
        let feed_crop = field_angle_window(feed_dims.0, feed_dims.1, cfg.fov_deg, cfg.focal_px)?;
        Ok(Self { cfg, feed_dims, feed_crop, background: None, scale: BTreeMap::new() })
    }

    /// Overrides the subject background (given in raw feed coordinates).
    pub fn set_background(&mut self, background: &Image) -> Result<()> {
        let (img, _) = self.prepare_feed(background, background.channels())?;
        self.background = Some(SubjectEstimator::new(&img));
        Ok(())
    }

    /// Rectified and cropped feed in the scene's channel count, with its
    /// validity mask (`None` when fully valid).
    fn prepare_feed(&self, feed: &Image, channels: usize) -> Result<(Image, Option<Vec<f32>>)> {
        let feed = match (channels, feed.channels()) {
            (1, 3) => feed.gray(),
            (3, 1) => feed.to_rgb(),
            _ => feed.clone(),
        };
        let (img, mask) = match &self.cfg.rectify {
            Some(h) if *h != Homography::identity() => {
                let l = rectify_feed(&feed, h)?;
                (l.image, Some(l.mask))
            }
            _ => (feed, None),
        };
        if img.dims() != self.feed_dims {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{} feed", self.feed_dims.0, self.feed_dims.1),
                actual: format!("{}x{}", img.width(), img.height()),
            });
        }
        let c = self.feed_crop;
        if c.x0 == 0 && c.y0 == 0 && c.width == img.width() && c.height == img.height() {
            return Ok((img, mask));
        }
        let cropped = img.crop(c.x0, c.y0, c.width, c.height)?;
        let mask = mask.map(|m| {
            let mut out = Vec::with_capacity(c.width * c.height);
            for y in c.y0..c.y0 + c.height {
                out.extend_from_slice(&m[y * img.width() + c.x0..y * img.width() + c.x0 + c.width]);
            }
            out
        });
        Ok((cropped, mask))
    }

    pub fn render(&mut self, scene: &Image, feed: &Image, tracked: &TrackedFrame) -> Result<(Image, FrameStats)> {
        let start = Instant::now();
        let mut out = scene.clone();
        let mut failed = tracked.failed;
        let mut first_s = f64::NAN;
        self.scale.retain(|id, _| tracked.tracks.iter().any(|t| t.mirror_id == *id));

        let needs_feed = !tracked.tracks.is_empty() || self.background.is_none();
        if needs_feed {
            let (img, mask) = self.prepare_feed(feed, scene.channels())?;
            if self.background.is_none() {
                self.background = Some(SubjectEstimator::new(&img));
            }
            let subject = self
                .background
                .as_ref()
                .expect("background set")
                .estimate(&img, self.cfg.subject_thresh, self.cfg.subject_min_area)
                .unwrap_or(None);
            for track in &tracked.tracks {
                match self.render_track(&mut out, &img, mask.as_deref(), track, subject.as_ref()) {
                    Ok(s) => {
                        if first_s.is_nan() {
                            first_s = s;
                        }
                    }
                    Err(_) => failed += 1,
                }
            }
        }
        let warp_ms = start.elapsed().as_secs_f64() * 1e3;
        let stats = FrameStats {
            frame: tracked.frame,
            tracks: tracked.tracks.len(),
            hits: tracked.hits.len(),
            s: first_s,
            failed,
            full_detect: tracked.full_detect,
            detect_ms: tracked.detect_ms,
            warp_ms,
            total_ms: tracked.detect_ms + warp_ms,
        };
        Ok((out, stats))
    }

    /// Returns the smoothed scale used.
    fn render_track(
        &mut self,
        out: &mut Image,
        feed: &Image,
        mask: Option<&[f32]>,
        track: &TrackState,
        subject: Option<&SubjectBox>,
    ) -> Result<f64> {
        let rect = feed_corners(feed.width(), feed.height());
        let base_q = track.smoothed_h;
        let corners = rect.map(|p| base_q.apply(p)).into_iter().collect::<Result<Vec<_>>>()?;
        let quad = MirrorQuad::new(track.mirror_id, [corners[0], corners[1], corners[2], corners[3]])?;
        let base = match self.cfg.surface_kind {
            SurfaceKind::Mirror => base_q.compose(&Homography::horizontal_flip(feed.width() as f64))?,
            SurfaceKind::Window => base_q,
        };
        let prev = self.scale.get(&track.mirror_id).copied();
        let (s, anchor) = match subject {
            Some(sb) => {
                let anchor = sb.rect.center();
                let r = resolve_scale(&base, anchor, &sb.rect, quad.corners(), self.cfg.margin, self.cfg.bounds)?;
                let s = match prev {
                    Some((p, _)) => {
                        let a = self.cfg.track.alpha;
                        if a == 1.0 {
                            r.s
                        } else {
                            (1.0 - a) * p + a * r.s
                        }
                    }
                    None => r.s,
                };
                (s, anchor)
            }
            None => prev.unwrap_or((1.0, Point2::new((feed.width() as f64 - 1.0) / 2.0, (feed.height() as f64 - 1.0) / 2.0))),
        };
        self.scale.insert(track.mirror_id, (s, anchor));
        let h = scaled_homography(&base, anchor, s)?;
        let layer = warp::render_layer(feed, mask, &h, quad.corners(), out.dims())?;
        blend::blend_into(out, &layer, self.cfg.feather_px)?;
        Ok(s)
    }
}

/// Both stages for one scene/feed pair stream.
#[derive(Debug, Clone)]
pub struct Compositor {
    pub tracker: TrackerStage,
    pub renderer: RenderStage,
}

impl Compositor {
    pub fn new(cfg: ComposeConfig, bank: Vec<MarkerTemplate>, feed_dims: (usize, usize)) -> Result<Self> {
        Ok(Self {
            tracker: TrackerStage::new(cfg.clone(), bank, feed_dims)?,
            renderer: RenderStage::new(cfg, feed_dims)?,
        })
    }

    /// One frame, both stages back to back. With no alive tracks the scene
    /// comes back unchanged.
    pub fn compose_frame(&mut self, scene: &Image, feed: &Image) -> Result<(Image, FrameStats)> {
        let start = Instant::now();
        let tracked = self.tracker.process(scene)?;
        let (out, mut stats) = self.renderer.render(scene, feed, &tracked)?;
        stats.total_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok((out, stats))
    }

    /// Runs a whole stream. When `pipelined`, detection of frame `k + 1`
    /// overlaps rendering of frame `k` on a second thread; outputs are
    /// identical either way and reach `sink` in frame order.
    pub fn run<I, F>(&mut self, input: I, pipelined: bool, mut sink: F) -> Result<usize>
    where
        I: Iterator<Item = Result<(Image, Image)>> + Send,
        F: FnMut(Image, FrameStats) -> Result<()>,
    {
        if !pipelined {
            let mut n = 0;
            for pair in input {
                let (scene, feed) = pair?;
                let (out, stats) = self.compose_frame(&scene, &feed)?;
                sink(out, stats)?;
                n += 1;
            }
            return Ok(n);
        }
        let tracker = &mut self.tracker;
        let renderer = &mut self.renderer;
        std::thread::scope(|scope| {
            let (tx, rx) = mpsc::sync_channel::<Result<(Image, Image, TrackedFrame)>>(2);
            let producer = scope.spawn(move || {
                for pair in input {
                    let item = pair.and_then(|(scene, feed)| {
                        let tracked = tracker.process(&scene)?;
                        Ok((scene, feed, tracked))
                    });
                    let stop = item.is_err();
                    if tx.send(item).is_err() || stop {
                        break;
                    }
                }
            });
            let mut n = 0;
            let mut result = Ok(());
            for item in rx.iter() {
                let step = item.and_then(|(scene, feed, tracked)| {
                    let (out, stats) = renderer.render(&scene, &feed, &tracked)?;
                    sink(out, stats)
                });
                if let Err(e) = step {
                    result = Err(e);
                    break;
                }
                n += 1;
            }
            drop(rx);
            producer.join().expect("tracker thread panicked");
            result.map(|_| n)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{FeedParams, FeedSynth, SceneParams, SceneSynth};
    use crate::marker::procedural_bank;

    fn setup(frames: usize) -> (SceneSynth, FeedSynth, ComposeConfig) {
        let scene = SceneSynth::new(SceneParams::new(320, 240, frames, 21)).unwrap();
        let feed = FeedSynth::new(FeedParams::new(160, 120, frames, 4)).unwrap();
        let cfg = ComposeConfig { fov_deg: 90.0, focal_px: 100.0, ..Default::default() };
        (scene, feed, cfg)
    }

    #[test]
    fn stats_line_format() {
        let s = FrameStats {
            frame: 3,
            tracks: 0,
            hits: 0,
            s: f64::NAN,
            failed: 0,
            full_detect: true,
            detect_ms: 1.0,
            warp_ms: 0.25,
            total_ms: 1.5,
        };
        assert_eq!(s.to_string(), "frame=3 tracks=0 s=nan detect_ms=1.000 warp_ms=0.250 total_ms=1.500");
    }

    #[test]
    fn no_markers_leaves_scene_untouched() {
        let scene = Image::from_fn(120, 90, 3, |x, y, c| ((x * 3 + y + c) % 11) as f32 / 10.0).unwrap();
        let feed = Image::filled(80, 60, 3, 0.9).unwrap();
        let mut comp = Compositor::new(ComposeConfig::default(), procedural_bank(21, 1).unwrap(), (80, 60)).unwrap();
        for _ in 0..2 {
            let (out, stats) = comp.compose_frame(&scene, &feed).unwrap();
            assert_eq!(out, scene);
            assert_eq!(stats.tracks, 0);
            assert!(stats.s.is_nan());
        }
    }

    #[test]
    fn composes_and_keeps_outside_pixels() {
        let (scene, feed, cfg) = setup(4);
        let mut comp = Compositor::new(cfg, procedural_bank(21, 1).unwrap(), (160, 120)).unwrap();
        for k in 0..4 {
            let s = scene.frame(k).unwrap();
            let (out, stats) = comp.compose_frame(&s, &feed.frame(k)).unwrap();
            assert_eq!(stats.tracks, 1, "frame {k}");
            let quad = scene.corners(k);
            let track = comp.tracker.tracks().get(0).unwrap();
            let rect = feed_corners(160, 120);
            for (f, q) in rect.iter().zip(&quad) {
                assert!(track.smoothed_h.apply(*f).unwrap().distance(*q) <= 1.5);
            }
            // Pixels well away from the quad are untouched.
            assert_eq!(out.get(2, 2, 0), s.get(2, 2, 0));
            assert_eq!(out.get(317, 237, 2), s.get(317, 237, 2));
            let center = Point2::new(
                quad.iter().map(|p| p.x).sum::<f64>() / 4.0,
                quad.iter().map(|p| p.y).sum::<f64>() / 4.0,
            );
            assert_ne!(out.get(center.x as usize, center.y as usize, 0), s.get(center.x as usize, center.y as usize, 0));
        }
    }

    #[test]
    fn pipelined_matches_sequential() {
        let (scene, feed, cfg) = setup(6);
        let bank = procedural_bank(21, 1).unwrap();
        let run = |pipelined: bool| {
            let mut comp = Compositor::new(cfg.clone(), bank.clone(), (160, 120)).unwrap();
            let mut outs = Vec::new();
            let input = (0..6).map(|k| Ok((scene.frame(k)?, feed.frame(k))));
            comp.run(input, pipelined, |img, stats| {
                outs.push((img, stats.frame, stats.tracks, stats.s.to_bits()));
                Ok(())
            })
            .unwrap();
            outs
        };
        let a = run(false);
        let b = run(true);
        assert_eq!(a.len(), 6);
        assert_eq!(a, b);
        assert_eq!(a, run(false));
    }

    #[test]
    fn config_validation() {
        let bad = ComposeConfig { margin: 0.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ComposeConfig { fov_deg: 180.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(ComposeConfig::default().validate().is_ok());
    }
}
