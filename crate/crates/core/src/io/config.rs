use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::compositor::{ComposeConfig, QuadMode, SurfaceKind};
use crate::error::{Error, Result};
use crate::geometry::Homography;

/// Every accepted key with its default, in documentation order.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("detect.sigma", "1.0", "Gaussian pre-blur sigma, 0 disables"),
    ("detect.median_radius", "1", "median pre-filter radius, 0 disables"),
    ("detect.ncc_thresh", "0.7", "minimum NCC score of a candidate"),
    ("detect.verify_radius", "3", "max distance of Harris/Hough evidence from the NCC peak (px)"),
    ("detect.marker_side", "21", "template side length (odd, px)"),
    ("detect.mirrors", "1", "number of mirrors in the template bank"),
    ("detect.full_every", "30", "full-frame detection period while tracking (frames)"),
    ("detect.search_radius", "16", "tracking search window half-size (px)"),
    ("detect.template_dir", "", "directory of class_<id>.ppm templates; empty uses procedural markers"),
    ("harris.k", "0.04", "Harris sensitivity"),
    ("harris.sigma", "1.0", "structure tensor window sigma"),
    ("hough.r_min", "6", "smallest circle radius (px)"),
    ("hough.r_max", "16", "largest circle radius (px)"),
    ("hough.vote_frac", "0.3", "votes needed as a fraction of circumference"),
    ("hough.edge_thresh", "0.4", "Sobel magnitude of an edge pixel"),
    ("smooth.alpha", "0.3", "exponential smoothing weight of the new value"),
    ("track.hold_frames", "15", "frames a track survives without detection"),
    ("scale.margin", "0.05", "subject margin inside the quad, fraction of quad size"),
    ("scale.s_min", "0.25", "lower scale bound"),
    ("scale.s_max", "4.0", "upper scale bound"),
    ("subject.thresh", "0.1", "background difference threshold"),
    ("subject.min_area", "100", "smallest subject blob (px)"),
    ("subject.background", "", "background image; empty uses the first feed frame"),
    ("compose.surface_kind", "mirror", "mirror (flipped) or window"),
    ("compose.feather_px", "2", "mask feather radius (px)"),
    ("compose.rectify", "", "nine feed rectification homography entries, row-major; empty is identity"),
    ("crop.fov_deg", "60", "field angle of the feed crop (degrees)"),
    ("crop.focal_px", "600", "feed focal length (px)"),
    ("quad.mode", "corners", "corners (four markers) or single (one centered marker)"),
    ("quad.single_width", "120", "quad width in single mode (px)"),
    ("quad.single_height", "90", "quad height in single mode (px)"),
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub compose: ComposeConfig,
    pub template_dir: Option<PathBuf>,
    pub background: Option<PathBuf>,
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are ignored.
/// Unknown or repeated keys are errors; missing keys keep their defaults.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut cfg = Config::default();
    let mut seen = BTreeSet::new();
    let (mut single_w, mut single_h, mut single) = (120.0, 90.0, false);
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = n + 1;
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`")))?;
        if !CONFIG_KEYS.iter().any(|(k, _, _)| *k == key) {
            return Err(Error::Config(format!("line {lineno}: unknown key `{key}`")));
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Config(format!("line {lineno}: duplicate key `{key}`")));
        }
        let c = &mut cfg.compose;
        let d = &mut c.detection;
        match key {
            "detect.sigma" => d.sigma = num(key, value)?,
            "detect.median_radius" => d.median_radius = num(key, value)?,
            "detect.ncc_thresh" => d.ncc_thresh = num(key, value)?,
            "detect.verify_radius" => d.verify_radius = num(key, value)?,
            "detect.marker_side" => c.marker_side = num(key, value)?,
            "detect.mirrors" => c.mirrors = num(key, value)?,
            "detect.full_every" => c.full_every = num(key, value)?,
            "detect.search_radius" => c.search_radius = num(key, value)?,
            "detect.template_dir" => cfg.template_dir = path(value),
            "harris.k" => d.harris_k = num(key, value)?,
            "harris.sigma" => d.harris_sigma = num(key, value)?,
            "hough.r_min" => d.hough_r_min = num(key, value)?,
            "hough.r_max" => d.hough_r_max = num(key, value)?,
            "hough.vote_frac" => d.hough_vote_frac = num(key, value)?,
            "hough.edge_thresh" => d.edge_thresh = num(key, value)?,
            "smooth.alpha" => c.track.alpha = num(key, value)?,
            "track.hold_frames" => c.track.hold_frames = num(key, value)?,
            "scale.margin" => c.margin = num(key, value)?,
            "scale.s_min" => c.bounds.s_min = num(key, value)?,
            "scale.s_max" => c.bounds.s_max = num(key, value)?,
            "subject.thresh" => c.subject_thresh = num(key, value)?,
            "subject.min_area" => c.subject_min_area = num(key, value)?,
            "subject.background" => cfg.background = path(value),
            "compose.surface_kind" => {
                c.surface_kind = match value {
                    "mirror" => SurfaceKind::Mirror,
                    "window" => SurfaceKind::Window,
                    _ => return Err(bad(key, value)),
                }
            }
            "compose.feather_px" => c.feather_px = num(key, value)?,
            "compose.rectify" => c.rectify = parse_homography(value).map_err(|_| bad(key, value))?,
            "crop.fov_deg" => c.fov_deg = num(key, value)?,
            "crop.focal_px" => c.focal_px = num(key, value)?,
            "quad.mode" => {
                single = match value {
                    "corners" => false,
                    "single" => true,
                    _ => return Err(bad(key, value)),
                }
            }
            "quad.single_width" => single_w = num(key, value)?,
            "quad.single_height" => single_h = num(key, value)?,
            _ => unreachable!("key table and match arms agree"),
        }
    }
    if single {
        cfg.compose.quad_mode = QuadMode::Single { width: single_w, height: single_h };
    }
    cfg.compose.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

/// Nine numbers separated by whitespace or commas; empty means none.
pub fn parse_homography(text: &str) -> Result<Option<Homography>> {
    let parts: Vec<&str> = text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
    if parts.is_empty() {
        return Ok(None);
    }
    if parts.len() != 9 {
        return Err(Error::Config(format!("homography needs 9 entries, got {}", parts.len())));
    }
    let mut m = [[0.0; 3]; 3];
    for (i, p) in parts.iter().enumerate() {
        m[i / 3][i % 3] = p.parse().map_err(|_| Error::Config(format!("bad homography entry `{p}`")))?;
    }
    Ok(Some(Homography::new(m)?))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("bad value `{value}` for `{key}`"))
}

fn path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}
