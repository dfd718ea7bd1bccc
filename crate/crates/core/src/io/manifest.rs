//! Ground-truth manifest: one line per (frame, mirror),
//! `frame mirror_id x0 y0 x1 y1 x2 y2 x3 y3 h11 … h33 bx0 by0 bx1 by1`.
//! Corners are TL, TR, BR, BL in scene pixels; `h` maps feed pixels into the
//! scene; an absent subject box is written as `-1 -1 -1 -1`. Lines starting
//! with `#` are comments.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Homography, Point2, Rect};

const FIELDS: usize = 23;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub frame: usize,
    pub mirror_id: u32,
    pub corners: [Point2; 4],
    pub homography: Homography,
    pub subject: Option<Rect>,
}

impl ManifestRecord {
    pub fn to_line(&self) -> String {
        let mut parts = vec![self.frame.to_string(), self.mirror_id.to_string()];
        for p in &self.corners {
            parts.push(p.x.to_string());
            parts.push(p.y.to_string());
        }
        for row in self.homography.matrix() {
            parts.extend(row.iter().map(f64::to_string));
        }
        match self.subject {
            Some(b) => parts.extend([b.x0, b.y0, b.x1, b.y1].iter().map(f64::to_string)),
            None => parts.extend(["-1"; 4].map(String::from)),
        }
        parts.join(" ")
    }
}

pub fn format_manifest(records: &[ManifestRecord]) -> String {
    let mut s = String::from(
        "# frame mirror_id x0 y0 x1 y1 x2 y2 x3 y3 h11 h12 h13 h21 h22 h23 h31 h32 h33 bx0 by0 bx1 by1\n",
    );
    for r in records {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRecord>> {
    let mut out = Vec::new();
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        let start = line_start;
        line_start += line.len();
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut vals = Vec::with_capacity(FIELDS);
        let mut search = 0;
        for tok in line.split_ascii_whitespace() {
            let at = start + search + line[search..].find(tok).unwrap_or(0);
            search = at - start + tok.len();
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse { offset: at, message: format!("not a number: {tok:?}") })?;
            vals.push(v);
        }
        if vals.len() != FIELDS {
            return Err(Error::Parse {
                offset: start,
                message: format!("expected {FIELDS} fields, found {}", vals.len()),
            });
        }
        let int = |v: f64, what: &str| {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::Parse { offset: start, message: format!("{what} must be a non-negative integer") })
            }
        };
        let frame = int(vals[0], "frame")?;
        let mirror_id = int(vals[1], "mirror_id")? as u32;
        let corners = [0, 1, 2, 3].map(|i| Point2::new(vals[2 + 2 * i], vals[3 + 2 * i]));
        let h = &vals[10..19];
        let homography = Homography::new([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], h[8]]])
            .map_err(|e| Error::Parse { offset: start, message: e.to_string() })?;
        let b = &vals[19..23];
        let subject = if b.iter().all(|&v| v == -1.0) { None } else { Some(Rect::new(b[0], b[1], b[2], b[3])) };
        out.push(ManifestRecord { frame, mirror_id, corners, homography, subject });
    }
    Ok(out)
}

pub fn write_manifest(records: &[ManifestRecord], path: &Path) -> Result<()> {
    std::fs::write(path, format_manifest(records)).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}
