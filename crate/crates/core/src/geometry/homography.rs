use std::fmt;
use std::str::FromStr;

use super::linalg::{self, Mat3, IDENTITY};
use super::Point2;
use crate::error::{Error, Result};

const DET_EPS: f64 = 1e-12;
const W_EPS: f64 = 1e-12;
const CORNER_EPS: f64 = 1e-9;

/// Invertible 3×3 projective transform, `x' ~ H x`.
///
/// Always stored normalized: bottom-right entry 1 when `|h33| > 1e-9`,
/// otherwise unit Frobenius norm. Normalizing twice is a no-op.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Mat3,
}

impl Homography {
    /// Validates and normalizes a raw matrix.
    pub fn new(m: Mat3) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("homography entries must be finite"));
        }
        let m = normalize(m).ok_or(Error::Singular(0.0))?;
        let d = linalg::det(&m);
        if !(d.abs() > DET_EPS) {
            return Err(Error::Singular(d));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self { m: IDENTITY }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self { m: [[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]] }
    }

    /// Uniform scaling by `s` about `center`.
    pub fn scaling_about(center: Point2, s: f64) -> Result<Self> {
        Self::new([
            [s, 0.0, center.x * (1.0 - s)],
            [0.0, s, center.y * (1.0 - s)],
            [0.0, 0.0, 1.0],
        ])
    }

    /// `x ↦ width - 1 - x`: left-right flip of an image `width` pixels wide.
    pub fn horizontal_flip(width: f64) -> Self {
        Self { m: [[-1.0, 0.0, width - 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    pub fn det(&self) -> f64 {
        linalg::det(&self.m)
    }

    pub fn apply(&self, p: Point2) -> Result<Point2> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        if !(w.abs() > W_EPS) {
            return Err(Error::PointAtInfinity(w));
        }
        Ok(Point2::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        ))
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = linalg::inverse(&self.m, 0.0).ok_or(Error::Singular(self.det()))?;
        Self::new(inv)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Homography) -> Result<Self> {
        Self::new(linalg::mul(&self.m, &other.m))
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Homography) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Nine whitespace-separated decimals, row-major, three per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in &self.m {
            s.push_str(&format!("{} {} {}\n", row[0], row[1], row[2]));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut vals = [0.0; 9];
        let mut count = 0;
        let mut offset = 0;
        for tok in text.split_ascii_whitespace() {
            let at = text[offset..].find(tok).map(|i| i + offset).unwrap_or(offset);
            offset = at + tok.len();
            if count == 9 {
                return Err(Error::Parse { offset: at, message: "more than 9 numbers".into() });
            }
            vals[count] = tok.parse::<f64>().map_err(|_| Error::Parse {
                offset: at,
                message: format!("not a number: {tok:?}"),
            })?;
            count += 1;
        }
        if count != 9 {
            return Err(Error::Parse {
                offset: text.len(),
                message: format!("expected 9 numbers, found {count}"),
            });
        }
        Self::new([[vals[0], vals[1], vals[2]], [vals[3], vals[4], vals[5]], [vals[6], vals[7], vals[8]]])
    }
}

impl Default for Homography {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Display for Homography {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_text().trim_end())
    }
}

impl FromStr for Homography {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

pub(crate) fn normalize(m: Mat3) -> Option<Mat3> {
    let mut out = m;
    let scale = if m[2][2].abs() > CORNER_EPS {
        m[2][2]
    } else {
        let f = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        if f == 0.0 || !f.is_finite() {
            return None;
        }
        f
    };
    for v in out.iter_mut().flatten() {
        *v /= scale;
    }
    Some(out)
}

pub fn apply_homography(h: &Homography, p: Point2) -> Result<Point2> {
    h.apply(p)
}

pub fn invert_homography(h: &Homography) -> Result<Homography> {
    h.inverse()
}

/// `a ∘ b` (apply `b` first).
pub fn compose(a: &Homography, b: &Homography) -> Result<Homography> {
    a.compose(b)
}
