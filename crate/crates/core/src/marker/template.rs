use std::f64::consts::PI;
use std::path::Path;

use super::ncc::{ncc_window, PreparedTemplate};
use crate::error::{Error, Result};
use crate::image::Image;

/// Outer band of a ring class, as a fraction of the disk radius.
const RING_INNER: f64 = 0.78;
/// Sub-samples per axis for anti-aliasing.
const SUPERSAMPLE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct MarkerTemplate {
    pub class_id: u32,
    pub image: Image,
    /// Quadrant coloring parity: 0 puts black in TL/BR.
    pub phase: u8,
}

impl MarkerTemplate {
    pub fn side(&self) -> usize {
        self.image.width()
    }
}

/// Marker intensity at offset `(dx, dy)` from the center, or `None` outside
/// the disk of the given radius.
pub fn marker_value(class_id: u32, radius: f64, dx: f64, dy: f64) -> Option<f64> {
    let r = dx.hypot(dy);
    if r > radius {
        return None;
    }
    let theta = ((class_id / 4) % 4) as f64 * PI / 8.0;
    let (sn, cs) = theta.sin_cos();
    let u = cs * dx + sn * dy;
    let v = -sn * dx + cs * dy;
    let mut dark = (u < 0.0) == (v < 0.0);
    if class_id % 2 == 1 {
        dark = !dark;
    }
    if (class_id / 2) % 2 == 1 && r >= RING_INNER * radius {
        dark = !dark;
    }
    Some(if dark { 0.0 } else { 1.0 })
}

/// Renders the class template on a `side × side` gray patch with 0.5 background.
pub fn render_marker(side: usize, class_id: u32) -> Result<MarkerTemplate> {
    if side % 2 == 0 || side < 15 {
        return Err(Error::param(format!("marker side must be odd and at least 15, got {side}")));
    }
    let c = (side - 1) as f64 / 2.0;
    let radius = side as f64 / 2.0;
    let n = SUPERSAMPLE;
    let image = Image::from_fn(side, side, 1, |x, y, _| {
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                let dx = x as f64 - c + (i as f64 + 0.5) / n as f64 - 0.5;
                let dy = y as f64 - c + (j as f64 + 0.5) / n as f64 - 0.5;
                acc += marker_value(class_id, radius, dx, dy).unwrap_or(0.5);
            }
        }
        (acc / (n * n) as f64) as f32
    })?;
    Ok(MarkerTemplate { class_id, image, phase: (class_id % 2) as u8 })
}

/// Classes `0 .. 4·mirrors` at one side length.
pub fn procedural_bank(side: usize, mirrors: u32) -> Result<Vec<MarkerTemplate>> {
    if mirrors == 0 {
        return Err(Error::param("bank needs at least one mirror"));
    }
    (0..4 * mirrors).map(|c| render_marker(side, c)).collect()
}

/// Loads a square, odd-sided gray template from a PGM/PPM file.
pub fn load_template(path: &Path, class_id: u32) -> Result<MarkerTemplate> {
    let img = crate::io::read_ppm(path)?.gray();
    if img.width() != img.height() || img.width() % 2 == 0 {
        return Err(Error::param(format!(
            "{}: template must be square with odd side, got {}x{}",
            path.display(),
            img.width(),
            img.height()
        )));
    }
    Ok(MarkerTemplate { class_id, image: img, phase: (class_id % 2) as u8 })
}

/// Best-matching class for a patch the size of the templates.
///
/// Ties go to the lowest class id.
pub fn classify_marker(patch: &Image, bank: &[MarkerTemplate]) -> Result<(u32, f64)> {
    if bank.is_empty() {
        return Err(Error::param("empty template bank"));
    }
    let gray = patch.gray();
    let data: Vec<f64> = gray.data().iter().map(|&v| v as f64).collect();
    let mut best: Option<(u32, f64)> = None;
    for tpl in bank {
        if tpl.side() != gray.width() || tpl.side() != gray.height() {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0} patch", tpl.side()),
                actual: format!("{}x{}", gray.width(), gray.height()),
            });
        }
        let prep = PreparedTemplate::new(&tpl.image);
        let score = ncc_window(&data, gray.width(), 0, 0, &prep);
        best = match best {
            Some((c, s)) if s > score || (s == score && c < tpl.class_id) => Some((c, s)),
            _ => Some((tpl.class_id, score)),
        };
    }
    Ok(best.expect("non-empty bank"))
}
