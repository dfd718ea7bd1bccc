//! Seeded synthetic scene and feed generators with exact ground truth.
//!
//! All randomness comes from `ChaCha8Rng`. Per-frame noise uses stream
//! `frame + 1` of the scene seed, so any frame can be rendered on its own and
//! still match a full-sequence render bit for bit.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::ManifestRecord;
use crate::error::{Error, Result};
use crate::geometry::{quad_to_quad, Homography, Point2, Rect};
use crate::image::{gaussian_filter, Image};
use crate::marker::marker_value;

/// Quad corner trajectory: sinusoidal translation of a base quad plus a slow
/// tilt that moves the left and right edges' endpoints in opposite directions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadMotion {
    /// TL, TR, BR, BL at frame 0 before motion.
    pub base: [Point2; 4],
    pub amplitude: (f64, f64),
    /// Frames per translation cycle.
    pub period: f64,
    pub phase: f64,
    /// Tilt amplitude in pixels.
    pub tilt: f64,
    pub tilt_period: f64,
}

impl QuadMotion {
    pub fn fixed(base: [Point2; 4]) -> Self {
        Self { base, amplitude: (0.0, 0.0), period: 1.0, phase: 0.0, tilt: 0.0, tilt_period: 1.0 }
    }

    pub fn corners(&self, frame: usize) -> [Point2; 4] {
        let t = frame as f64;
        let a = TAU * t / self.period + self.phase;
        let (dx, dy) = (self.amplitude.0 * a.sin(), self.amplitude.1 * (0.7 * a).sin());
        let tilt = self.tilt * (TAU * t / self.tilt_period).sin();
        // TL/BL close in while TR/BR spread apart (and vice versa).
        let ty = [tilt, -tilt, tilt, -tilt];
        let mut out = self.base;
        for (i, p) in out.iter_mut().enumerate() {
            p.x += dx;
            p.y += dy + ty[i];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    pub blur_sigma: f64,
    pub marker_side: usize,
    /// Feed dimensions used for the manifest homography.
    pub feed_size: (usize, usize),
    pub motion: QuadMotion,
}

impl SceneParams {
    /// Seed-dependent moving quad covering roughly the middle half of the frame.
    pub fn new(width: usize, height: usize, n_frames: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_9ad);
        let (w, h) = (width as f64, height as f64);
        let k = w / 640.0;
        let mut jitter = |p: (f64, f64)| {
            Point2::new(p.0 * w + rng.gen_range(-0.04..0.04) * w, p.1 * h + rng.gen_range(-0.04..0.04) * h)
        };
        let base = [jitter((0.25, 0.25)), jitter((0.75, 0.25)), jitter((0.75, 0.75)), jitter((0.25, 0.75))];
        let motion = QuadMotion {
            base,
            amplitude: (6.0 * k, 4.0 * k),
            period: rng.gen_range(90.0..130.0),
            phase: rng.gen_range(0.0..TAU),
            tilt: 3.0 * k,
            tilt_period: rng.gen_range(140.0..200.0),
        };
        Self {
            width,
            height,
            n_frames,
            seed,
            noise_sigma: 0.01,
            blur_sigma: 0.5,
            marker_side: 21,
            feed_size: (width, height),
            motion,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.width < 64 || self.height < 64 || self.n_frames == 0 {
            return Err(Error::param("scene needs at least 64x64 pixels and one frame"));
        }
        if !(self.noise_sigma >= 0.0 && self.blur_sigma >= 0.0) {
            return Err(Error::param("noise and blur must be non-negative"));
        }
        if self.marker_side % 2 == 0 || self.marker_side < 15 {
            return Err(Error::param(format!("marker side must be odd and >= 15, got {}", self.marker_side)));
        }
        if self.feed_size.0 < 2 || self.feed_size.1 < 2 {
            return Err(Error::param("feed must be at least 2x2"));
        }
        let r = self.marker_side as f64 / 2.0 + 2.0;
        for k in 0..self.n_frames {
            for p in self.motion.corners(k) {
                if p.x < r || p.y < r || p.x > self.width as f64 - 1.0 - r || p.y > self.height as f64 - 1.0 - r {
                    return Err(Error::param(format!(
                        "marker trajectory leaves the frame at frame {k} ({:.1}, {:.1})",
                        p.x, p.y
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Frame-by-frame scene renderer.
#[derive(Debug, Clone)]
pub struct SceneSynth {
    params: SceneParams,
    background: Image,
}

impl SceneSynth {
    pub fn new(params: SceneParams) -> Result<Self> {
        params.validate()?;
        let background = render_background(&params);
        Ok(Self { params, background })
    }

    pub fn params(&self) -> &SceneParams {
        &self.params
    }

    pub fn corners(&self, frame: usize) -> [Point2; 4] {
        self.params.motion.corners(frame)
    }

    /// Maps the feed rectangle (pixel-center corners) onto the frame's quad.
    pub fn homography(&self, frame: usize) -> Result<Homography> {
        let (fw, fh) = (self.params.feed_size.0 as f64 - 1.0, self.params.feed_size.1 as f64 - 1.0);
        let feed = [Point2::new(0.0, 0.0), Point2::new(fw, 0.0), Point2::new(fw, fh), Point2::new(0.0, fh)];
        quad_to_quad(&feed, &self.corners(frame))
    }

    pub fn record(&self, frame: usize, subject: Option<Rect>) -> Result<ManifestRecord> {
        Ok(ManifestRecord {
            frame,
            mirror_id: 0,
            corners: self.corners(frame),
            homography: self.homography(frame)?,
            subject,
        })
    }

    pub fn frame(&self, frame: usize) -> Result<Image> {
        let p = &self.params;
        let (w, h) = (p.width, p.height);
        let mut data = self.background.data().to_vec();
        let radius = p.marker_side as f64 / 2.0;
        const N: usize = 8;
        for (role, c) in self.corners(frame).iter().enumerate() {
            let x0 = (c.x - radius - 1.0).floor().max(0.0) as usize;
            let y0 = (c.y - radius - 1.0).floor().max(0.0) as usize;
            let x1 = ((c.x + radius + 1.0).ceil() as usize).min(w - 1);
            let y1 = ((c.y + radius + 1.0).ceil() as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let (mut acc, mut inside) = (0.0, 0usize);
                    for j in 0..N {
                        for i in 0..N {
                            let dx = x as f64 - c.x + (i as f64 + 0.5) / N as f64 - 0.5;
                            let dy = y as f64 - c.y + (j as f64 + 0.5) / N as f64 - 0.5;
                            if let Some(v) = marker_value(role as u32, radius, dx, dy) {
                                acc += v;
                                inside += 1;
                            }
                        }
                    }
                    if inside == 0 {
                        continue;
                    }
                    let cover = inside as f64 / (N * N) as f64;
                    let mean = acc / inside as f64;
                    for ch in 0..3 {
                        let k = (y * w + x) * 3 + ch;
                        data[k] = (cover * mean + (1.0 - cover) * data[k] as f64) as f32;
                    }
                }
            }
        }
        let mut img = Image::from_vec(w, h, 3, data)?;
        if p.blur_sigma > 0.0 {
            img = gaussian_filter(&img, p.blur_sigma)?;
        }
        if p.noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            rng.set_stream(frame as u64 + 1);
            let normal = Normal::new(0.0, p.noise_sigma).expect("valid sigma");
            let noisy: Vec<f32> =
                img.data().iter().map(|&v| (v as f64 + normal.sample(&mut rng)).clamp(0.0, 1.0) as f32).collect();
            img = Image::from_vec(w, h, 3, noisy)?;
        }
        Ok(img)
    }
}

/// Smooth tinted texture plus clutter shapes kept clear of the marker paths.
fn render_background(p: &SceneParams) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let waves: Vec<(f64, f64, f64)> =
        (0..4).map(|_| (rng.gen_range(-0.04..0.04), rng.gen_range(-0.04..0.04), rng.gen_range(0.0..TAU))).collect();
    let tint: [f64; 3] = [rng.gen_range(0.9..1.1), rng.gen_range(0.9..1.1), rng.gen_range(0.9..1.1)];
    let keep_out = p.marker_side as f64 * 1.5 + p.motion.amplitude.0.max(p.motion.amplitude.1) + p.motion.tilt;
    let scale = (p.width.min(p.height) as f64 / 480.0).max(0.25);
    let mut shapes: Vec<(bool, f64, f64, f64, f64, f64)> = Vec::new();
    let mut tries = 0;
    while shapes.len() < 8 && tries < 200 {
        tries += 1;
        let disk = rng.gen_bool(0.5);
        let cx = rng.gen_range(0.0..p.width as f64);
        let cy = rng.gen_range(0.0..p.height as f64);
        let a = rng.gen_range(8.0..40.0) * scale;
        let b = rng.gen_range(8.0..40.0) * scale;
        let v = rng.gen_range(0.2..0.8);
        let reach = if disk { a } else { a.hypot(b) };
        if p.motion.base.iter().all(|c| c.distance(Point2::new(cx, cy)) > reach + keep_out) {
            shapes.push((disk, cx, cy, a, b, v));
        }
    }
    Image::from_fn(p.width, p.height, 3, |x, y, c| {
        let (fx, fy) = (x as f64, y as f64);
        let mut g = 0.5 + waves.iter().map(|&(kx, ky, ph)| 0.04 * (kx * fx + ky * fy + ph).sin()).sum::<f64>();
        for &(disk, cx, cy, a, b, v) in &shapes {
            let inside = if disk { (fx - cx).hypot(fy - cy) <= a } else { (fx - cx).abs() <= a && (fy - cy).abs() <= b };
            if inside {
                g = v;
            }
        }
        (g * tint[c]).clamp(0.0, 1.0) as f32
    })
    .expect("finite background")
}

/// Renders `params.n_frames` scene frames and their manifest records (no
/// subject boxes).
pub fn synth_scene(params: &SceneParams) -> Result<(Vec<Image>, Vec<ManifestRecord>)> {
    let synth = SceneSynth::new(params.clone())?;
    let mut frames = Vec::with_capacity(params.n_frames);
    let mut records = Vec::with_capacity(params.n_frames);
    for k in 0..params.n_frames {
        frames.push(synth.frame(k)?);
        records.push(synth.record(k, None)?);
    }
    Ok((frames, records))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedParams {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub seed: u64,
    pub subject_size: (usize, usize),
    /// Peak subject displacement from the frame center, pixels.
    pub amplitude: (f64, f64),
    pub period: f64,
}

impl FeedParams {
    pub fn new(width: usize, height: usize, n_frames: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            n_frames,
            seed,
            subject_size: (width / 5, height * 2 / 5),
            amplitude: (width as f64 / 8.0, height as f64 / 16.0),
            period: 80.0,
        }
    }
}

/// Flat background color of synthetic feeds.
pub const FEED_BACKGROUND: [f32; 3] = [0.3, 0.35, 0.4];

/// Frame-by-frame feed renderer.
#[derive(Debug, Clone)]
pub struct FeedSynth {
    params: FeedParams,
    palette: [[f32; 3]; 2],
}

impl FeedSynth {
    pub fn new(params: FeedParams) -> Result<Self> {
        let (sw, sh) = params.subject_size;
        if params.n_frames == 0 || sw == 0 || sh == 0 {
            return Err(Error::param("feed needs frames and a non-empty subject"));
        }
        let max_x = params.width as f64 - sw as f64;
        let max_y = params.height as f64 - sh as f64;
        if max_x / 2.0 < params.amplitude.0.abs().ceil() || max_y / 2.0 < params.amplitude.1.abs().ceil() {
            return Err(Error::param("subject trajectory leaves the feed frame"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0xfeed);
        // Bright colors keep every subject pixel far from the background.
        let mut color = || [rng.gen_range(0.75..1.0), rng.gen_range(0.7..1.0), rng.gen_range(0.6..0.95)];
        let palette = [color(), [0.9, 0.85, 0.2]];
        Ok(Self { params, palette })
    }

    /// Subject top-left pixel, or `None` on the subject-free frame 0.
    fn position(&self, frame: usize) -> Option<(usize, usize)> {
        if frame == 0 {
            return None;
        }
        let p = &self.params;
        let a = TAU * frame as f64 / p.period;
        let cx = (p.width - p.subject_size.0) as f64 / 2.0 + p.amplitude.0 * a.sin();
        let cy = (p.height - p.subject_size.1) as f64 / 2.0 + p.amplitude.1 * (2.0 * a).sin();
        Some((cx.round() as usize, cy.round() as usize))
    }

    /// Continuous bounds of the subject: pixel edges, not centers.
    pub fn truth(&self, frame: usize) -> Option<Rect> {
        let (x, y) = self.position(frame)?;
        let (w, h) = self.params.subject_size;
        Some(Rect::new(x as f64 - 0.5, y as f64 - 0.5, (x + w) as f64 - 0.5, (y + h) as f64 - 0.5))
    }

    pub fn frame(&self, frame: usize) -> Image {
        let p = &self.params;
        let pos = self.position(frame);
        let (sw, sh) = p.subject_size;
        Image::from_fn(p.width, p.height, 3, |x, y, c| match pos {
            Some((px, py)) if x >= px && x < px + sw && y >= py && y < py + sh => {
                let (u, v) = (x - px, y - py);
                let stripe = ((u / 6) + (v / 10)) % 2;
                self.palette[stripe][c]
            }
            _ => FEED_BACKGROUND[c],
        })
        .expect("feed colors in range")
    }
}

/// Renders the feed frames and per-frame subject truth.
pub fn synth_feed(params: &FeedParams) -> Result<(Vec<Image>, Vec<Option<Rect>>)> {
    let synth = FeedSynth::new(params.clone())?;
    Ok((0..params.n_frames).map(|k| (synth.frame(k), synth.truth(k))).unzip())
}
