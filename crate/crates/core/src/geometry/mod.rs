//! Projective math: homographies, their estimation, the mirror-reflected
//! camera model, the one-parameter scale family and field-angle cropping.

mod camera;
mod crop;
mod dlt;
mod homography;
pub(crate) mod linalg;
mod scale;

pub use camera::{
    mirror_view_homography, reflect_camera, reflect_point, CameraPose, Intrinsics, MirrorView,
    Plane3, PlaneFrame,
};
pub use crop::{crop_field_angle, field_angle_window, CropWindow};
pub use dlt::{dlt_homography, quad_to_quad};
pub use homography::{apply_homography, compose, invert_homography, Homography};
pub use scale::{
    point_in_quad, resolve_scale, QUAD_EPS_AREA, scaled_homography, ScaleBounds, ScaleResolution,
    ScaledHomography,
};

/// A 2-D point in pixel coordinates (pixel centers at integers, y down).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        !(self.x1 > self.x0 && self.y1 > self.y0)
    }

    pub fn center(&self) -> Point2 {
        Point2::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    /// Corners in TL, TR, BR, BL order.
    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x0, self.y0),
            Point2::new(self.x1, self.y0),
            Point2::new(self.x1, self.y1),
            Point2::new(self.x0, self.y1),
        ]
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = Rect::new(
            self.x0.max(other.x0),
            self.y0.max(other.y0),
            self.x1.min(other.x1),
            self.y1.min(other.y1),
        )
        .area();
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// Twice the signed area of triangle `abc`; positive for clockwise order on
/// screen (y down), i.e. TL → TR → BR.
#[inline]
pub fn cross(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Shoelace area of a polygon; positive for TL, TR, BR, BL order.
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

/// Checks a four-corner polygon: positive orientation and no corner triple
/// with triangle area at or below `eps_area`.
pub fn check_quad(corners: &[Point2; 4], eps_area: f64) -> std::result::Result<(), String> {
    if corners.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err("non-finite corner".into());
    }
    for skip in 0..4 {
        let t: Vec<Point2> = (0..4).filter(|&i| i != skip).map(|i| corners[i]).collect();
        let area = 0.5 * cross(t[0], t[1], t[2]).abs();
        if area <= eps_area {
            return Err(format!("corner triple without corner {skip} has area {area:.3e}"));
        }
    }
    let area = signed_area(corners);
    if area <= 0.0 {
        return Err(format!("corners not in clockwise order (signed area {area:.3e})"));
    }
    Ok(())
}
