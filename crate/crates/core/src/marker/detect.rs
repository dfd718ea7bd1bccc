//! NCC proposes, Harris and Hough confirm.
//!
//! Detection can be restricted to search windows (used by the tracker). Each
//! window is processed on a padded crop large enough that every value the
//! decision depends on matches the full-frame computation, so windowed and
//! full-frame detection agree up to integral-image rounding.

use super::harris::harris_response;
use super::hough::{edge_map_from_gradients, hough_circles};
use super::ncc::{ncc_fill, PreparedTemplate};
use super::{CornerRole, MarkerHit, MarkerTemplate};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::image::{gaussian_filter, gaussian_kernel, median_filter, sobel_gradients, Image, IntegralImages, ScoreMap};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    /// 0 disables the median stage.
    pub median_radius: usize,
    /// Pre-blur σ; 0 disables the Gaussian stage.
    pub sigma: f64,
    pub ncc_thresh: f64,
    pub verify_radius: f64,
    pub harris_k: f64,
    pub harris_sigma: f64,
    pub hough_r_min: usize,
    pub hough_r_max: usize,
    pub hough_vote_frac: f64,
    /// Sobel magnitude at which a pixel counts as a Hough edge.
    pub edge_thresh: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            median_radius: 1,
            sigma: 1.0,
            ncc_thresh: 0.7,
            verify_radius: 3.0,
            harris_k: 0.04,
            harris_sigma: 1.0,
            hough_r_min: 6,
            hough_r_max: 16,
            hough_vote_frac: 0.3,
            edge_thresh: 0.4,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(format!("detect sigma must be >= 0, got {}", self.sigma)));
        }
        if !self.ncc_thresh.is_finite() {
            return Err(Error::param("ncc threshold must be finite"));
        }
        if !(self.verify_radius >= 0.0 && self.verify_radius.is_finite()) {
            return Err(Error::param(format!("verify radius must be >= 0, got {}", self.verify_radius)));
        }
        if !(self.harris_k > 0.0 && self.harris_k < 0.25) {
            return Err(Error::param(format!("harris k must lie in (0, 0.25), got {}", self.harris_k)));
        }
        gaussian_kernel(self.harris_sigma)?;
        if self.hough_r_min < 2 || self.hough_r_min > self.hough_r_max {
            return Err(Error::param(format!(
                "invalid hough radius range [{}, {}]",
                self.hough_r_min, self.hough_r_max
            )));
        }
        if !(self.hough_vote_frac > 0.0) || !(self.edge_thresh > 0.0) {
            return Err(Error::param("hough vote fraction and edge threshold must be positive"));
        }
        Ok(())
    }

    fn verify_px(&self) -> usize {
        self.verify_radius.ceil() as usize
    }

    fn harris_radius(&self) -> usize {
        (3.0 * self.harris_sigma).ceil() as usize
    }

    fn preprocess_radius(&self) -> usize {
        let g = if self.sigma > 0.0 { (3.0 * self.sigma).ceil() as usize } else { 0 };
        self.median_radius + g
    }

    /// Patch radius for the Hough check: votes for every center within
    /// `verify + 1` come from edges within `r_max + verify + 2`, plus one
    /// pixel of Sobel support.
    fn hough_patch(&self) -> usize {
        self.hough_r_max + self.verify_px() + 3
    }

    /// Patch radius for the Harris check: local maxima within `verify` need
    /// exact responses at `verify + 1`.
    fn harris_patch(&self) -> usize {
        self.verify_px() + self.harris_radius() + 2
    }
}

/// Half-open rectangle of candidate centers in frame pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchWindow {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl SearchWindow {
    pub fn full(width: usize, height: usize) -> Self {
        Self { x0: 0, y0: 0, x1: width, y1: height }
    }

    /// Square of the given radius around `center`, clipped to the frame.
    pub fn around(center: Point2, radius: usize, width: usize, height: usize) -> Self {
        let cx = center.x.round().clamp(0.0, width as f64 - 1.0) as usize;
        let cy = center.y.round().clamp(0.0, height as f64 - 1.0) as usize;
        Self {
            x0: cx.saturating_sub(radius),
            y0: cy.saturating_sub(radius),
            x1: (cx + radius + 1).min(width),
            y1: (cy + radius + 1).min(height),
        }
    }

    fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }
}

/// Full-frame detection.
pub fn detect_markers(img: &Image, bank: &[MarkerTemplate], cfg: &DetectionConfig) -> Result<Vec<MarkerHit>> {
    detect_markers_in(img, bank, cfg, &[SearchWindow::full(img.width(), img.height())])
}

/// Detection restricted to candidate centers inside the given windows.
///
/// Hits are sorted by score, strongest first.
pub fn detect_markers_in(
    img: &Image,
    bank: &[MarkerTemplate],
    cfg: &DetectionConfig,
    windows: &[SearchWindow],
) -> Result<Vec<MarkerHit>> {
    if bank.is_empty() {
        return Err(Error::param("empty template bank"));
    }
    cfg.validate()?;
    let side = bank[0].side();
    if bank.iter().any(|t| t.side() != side || t.image.height() != side) {
        return Err(Error::param("all templates in a bank must share one square size"));
    }
    let (w, h) = img.dims();
    if w < side || h < side {
        return Ok(Vec::new());
    }
    let prepared = prepare_bank(bank);
    let half = side / 2;
    let pad = cfg.preprocess_radius() + (half + 1).max(cfg.hough_patch()).max(cfg.harris_patch());

    let mut crops = Vec::new();
    let mut cands: Vec<Candidate> = Vec::new();
    for win in windows {
        let win = SearchWindow { x0: win.x0, y0: win.y0, x1: win.x1.min(w), y1: win.y1.min(h) };
        if win.is_empty() {
            continue;
        }
        let cx0 = win.x0.saturating_sub(pad);
        let cy0 = win.y0.saturating_sub(pad);
        let cx1 = (win.x1 + pad).min(w);
        let cy1 = (win.y1 + pad).min(h);
        let crop = img.crop(cx0, cy0, cx1 - cx0, cy1 - cy0)?;
        let search = SearchWindow { x0: win.x0 - cx0, y0: win.y0 - cy0, x1: win.x1 - cx0, y1: win.y1 - cy0 };
        let Some(stage) = CropStage::run(&crop, &prepared, bank, cfg, search)? else {
            continue;
        };
        for c in stage.candidates(cfg.ncc_thresh) {
            cands.push(Candidate { x: c.0 + cx0, y: c.1 + cy0, score: c.2, crop: crops.len() });
        }
        crops.push((stage, cx0, cy0));
    }

    // Overlapping windows report the same peak more than once.
    cands.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
    let r2 = (half * half) as isize;
    let mut kept: Vec<Candidate> = Vec::new();
    for c in cands {
        let close = kept.iter().any(|k| {
            let (dx, dy) = (k.x as isize - c.x as isize, k.y as isize - c.y as isize);
            dx * dx + dy * dy <= r2
        });
        if !close {
            kept.push(c);
        }
    }

    let mut hits = Vec::new();
    for c in kept {
        let (stage, ox, oy) = &crops[c.crop];
        let (lx, ly) = (c.x - ox, c.y - oy);
        let Some(radius) = stage.verify(lx, ly, cfg)? else {
            continue;
        };
        let class_id = stage.class_at(lx, ly);
        let (dx, dy) = stage.subpixel(lx, ly, bank, class_id);
        hits.push(MarkerHit {
            center: Point2::new(c.x as f64 + dx, c.y as f64 + dy),
            score: c.score,
            class_id,
            radius,
            corner_role: CornerRole::from_class(class_id),
        });
    }
    Ok(hits)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    x: usize,
    y: usize,
    score: f64,
    crop: usize,
}

/// Prepared templates; an entry pointing at an earlier index means "negate
/// that map" because the two templates are exact inverses.
enum Prepared {
    Own(PreparedTemplate),
    InverseOf(usize),
}

fn prepare_bank(bank: &[MarkerTemplate]) -> Vec<Prepared> {
    let mut out: Vec<Prepared> = Vec::with_capacity(bank.len());
    let mut owned: Vec<(usize, PreparedTemplate)> = Vec::new();
    for (i, t) in bank.iter().enumerate() {
        let p = PreparedTemplate::new(&t.image);
        match owned.iter().find(|(_, o)| p.is_inverse_of(o)) {
            Some(&(j, _)) => out.push(Prepared::InverseOf(j)),
            None => {
                owned.push((i, p.clone()));
                out.push(Prepared::Own(p));
            }
        }
    }
    out
}

struct CropStage {
    pre: Image,
    /// One map per template that was computed; inverse classes read negated.
    maps: Vec<Option<ScoreMap>>,
    links: Vec<Option<usize>>,
    best: ScoreMap,
    best_class: Vec<u32>,
    search: SearchWindow,
}

impl CropStage {
    fn run(
        crop: &Image,
        prepared: &[Prepared],
        bank: &[MarkerTemplate],
        cfg: &DetectionConfig,
        search: SearchWindow,
    ) -> Result<Option<Self>> {
        let side = bank[0].side();
        let half = side / 2;
        let (w, h) = crop.dims();
        if w < side || h < side {
            return Ok(None);
        }
        let mut pre = crop.gray();
        if cfg.median_radius > 0 {
            pre = median_filter(&pre, cfg.median_radius)?;
        }
        if cfg.sigma > 0.0 {
            pre = gaussian_filter(&pre, cfg.sigma)?;
        }
        // Centers scored: the search window plus a one-pixel ring for the
        // local-max test and the subpixel fit, within the valid NCC band.
        let ax0 = search.x0.saturating_sub(1).max(half);
        let ay0 = search.y0.saturating_sub(1).max(half);
        let ax1 = (search.x1 + 1).min(w - half);
        let ay1 = (search.y1 + 1).min(h - half);
        let plane: Vec<f64> = pre.data().iter().map(|&v| v as f64).collect();
        let ii = IntegralImages::new(&pre)?;
        let mut maps = Vec::with_capacity(bank.len());
        let mut links = Vec::with_capacity(bank.len());
        for p in prepared {
            match p {
                Prepared::Own(t) => {
                    let mut m = ScoreMap::zeros(w, h);
                    m.margin = half;
                    if ax0 < ax1 && ay0 < ay1 {
                        ncc_fill(&plane, w, &ii, t, (ax0, ay0, ax1, ay1), &mut m);
                    }
                    maps.push(Some(m));
                    links.push(None);
                }
                Prepared::InverseOf(j) => {
                    maps.push(None);
                    links.push(Some(*j));
                }
            }
        }
        let mut best = ScoreMap::zeros(w, h);
        best.margin = half;
        best.data.fill(f64::NEG_INFINITY);
        let mut best_class = vec![0u32; w * h];
        for (i, t) in bank.iter().enumerate() {
            let (src, sign) = match links[i] {
                None => (maps[i].as_ref().expect("own map"), 1.0),
                Some(j) => (maps[j].as_ref().expect("own map"), -1.0),
            };
            for y in ay0..ay1 {
                for x in ax0..ax1 {
                    let k = y * w + x;
                    let v = sign * src.data[k];
                    if v > best.data[k] {
                        best.data[k] = v;
                        best_class[k] = t.class_id;
                    }
                }
            }
        }
        for v in &mut best.data {
            if *v == f64::NEG_INFINITY {
                *v = 0.0;
            }
        }
        Ok(Some(Self { pre, maps, links, best, best_class, search }))
    }

    /// Local maxima of the best-class map inside the search window.
    fn candidates(&self, thresh: f64) -> Vec<(usize, usize, f64)> {
        let half = self.best.margin;
        let (w, h) = (self.best.width, self.best.height);
        let mut out = Vec::new();
        for y in self.search.y0.max(half)..self.search.y1.min(h - half) {
            for x in self.search.x0.max(half)..self.search.x1.min(w - half) {
                let v = self.best.get(x, y);
                if v >= thresh && self.best.is_local_max(x, y) {
                    out.push((x, y, v));
                }
            }
        }
        out
    }

    fn class_at(&self, x: usize, y: usize) -> u32 {
        self.best_class[y * self.best.width + x]
    }

    fn class_value(&self, bank: &[MarkerTemplate], class_id: u32, x: usize, y: usize) -> f64 {
        let i = bank.iter().position(|t| t.class_id == class_id).expect("class from bank");
        match self.links[i] {
            None => self.maps[i].as_ref().expect("own map").get(x, y),
            Some(j) => -self.maps[j].as_ref().expect("own map").get(x, y),
        }
    }

    /// Harris and Hough confirmation; returns the confirming circle radius.
    fn verify(&self, x: usize, y: usize, cfg: &DetectionConfig) -> Result<Option<f64>> {
        let vr2 = cfg.verify_radius * cfg.verify_radius;
        let vp = cfg.verify_px() as isize;

        let (patch, px, py) = self.patch(x, y, cfg.harris_patch())?;
        let r = harris_response(&patch, cfg.harris_sigma, cfg.harris_k)?;
        let mut harris_ok = false;
        'outer: for dy in -vp..=vp {
            for dx in -vp..=vp {
                if (dx * dx + dy * dy) as f64 > vr2 {
                    continue;
                }
                let (qx, qy) = (px as isize + dx, py as isize + dy);
                if qx < 0 || qy < 0 || qx >= r.width as isize || qy >= r.height as isize {
                    continue;
                }
                let (qx, qy) = (qx as usize, qy as usize);
                if r.get(qx, qy) > 0.0 && r.is_local_max(qx, qy) {
                    harris_ok = true;
                    break 'outer;
                }
            }
        }
        if !harris_ok {
            return Ok(None);
        }

        let (patch, px, py) = self.patch(x, y, cfg.hough_patch())?;
        let (gx, gy) = sobel_gradients(&patch)?;
        let edges = edge_map_from_gradients(&gx, &gy, cfg.edge_thresh)?;
        let circles = hough_circles(&edges, (&gx, &gy), cfg.hough_r_min, cfg.hough_r_max, cfg.hough_vote_frac)?;
        Ok(circles
            .iter()
            .find(|c| {
                let (dx, dy) = (c.cx - px as f64, c.cy - py as f64);
                dx * dx + dy * dy <= vr2
            })
            .map(|c| c.r))
    }

    /// Square patch of the preprocessed crop around `(x, y)`, clipped; also
    /// returns the center's position inside the patch.
    fn patch(&self, x: usize, y: usize, radius: usize) -> Result<(Image, usize, usize)> {
        let (w, h) = self.pre.dims();
        let x0 = x.saturating_sub(radius);
        let y0 = y.saturating_sub(radius);
        let x1 = (x + radius + 1).min(w);
        let y1 = (y + radius + 1).min(h);
        Ok((self.pre.crop(x0, y0, x1 - x0, y1 - y0)?, x - x0, y - y0))
    }

    /// Quadratic fit on the winning class's 3×3 neighbourhood.
    fn subpixel(&self, x: usize, y: usize, bank: &[MarkerTemplate], class_id: u32) -> (f64, f64) {
        let (w, h) = (self.best.width, self.best.height);
        if x == 0 || y == 0 || x + 1 >= w || y + 1 >= h {
            return (0.0, 0.0);
        }
        let mut v = [[0.0f64; 3]; 3];
        for (j, row) in v.iter_mut().enumerate() {
            for (i, cell) in row.iter_mut().enumerate() {
                *cell = self.class_value(bank, class_id, x + i - 1, y + j - 1);
            }
        }
        quadratic_peak(&v).unwrap_or((0.0, 0.0))
    }
}

/// Peak offset of the least-squares quadric through `v[row][col]` (rows are
/// y = −1, 0, 1). `None` unless the fit is concave with the peak inside the
/// neighbourhood.
pub(crate) fn quadratic_peak(v: &[[f64; 3]; 3]) -> Option<(f64, f64)> {
    let col = |i: usize| v[0][i] + v[1][i] + v[2][i];
    let row = |j: usize| v[j][0] + v[j][1] + v[j][2];
    let b = (col(2) - col(0)) / 6.0;
    let c = (row(2) - row(0)) / 6.0;
    let d = (col(0) + col(2) - 2.0 * col(1)) / 6.0;
    let f = (row(0) + row(2) - 2.0 * row(1)) / 6.0;
    let e = (v[2][2] - v[0][2] - v[2][0] + v[0][0]) / 4.0;
    let det = 4.0 * d * f - e * e;
    if !(d < 0.0 && det > 0.0) {
        return None;
    }
    let ox = (-2.0 * f * b + e * c) / det;
    let oy = (-2.0 * d * c + e * b) / det;
    (ox.abs() <= 1.0 && oy.abs() <= 1.0).then_some((ox, oy))
}
