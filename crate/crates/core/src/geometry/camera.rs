//! Pinhole cameras, planar mirrors and the reflected virtual camera.
//!
//! A camera at `C` with world→camera rotation `R` and intrinsics `K` images a
//! world point `X` at `K R (X - C)`. Reflecting the camera in a mirror plane
//! gives the virtual camera that "sees" what the mirror shows; its rotation is
//! `R (I - 2nnᵀ)`, which is improper, so the camera carries a handedness flag
//! instead of silently folding the flip into any homography.

use super::homography::Homography;
use super::linalg::{self, Mat3, Vec3};
use super::Point2;
use crate::error::{Error, Result};

/// Plane `{p : n·p + d = 0}` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane3 {
    n: Vec3,
    d: f64,
}

impl Plane3 {
    /// Normalizes `normal` (and `offset` with it).
    pub fn new(normal: Vec3, offset: f64) -> Result<Self> {
        let len = linalg::norm(normal);
        if !(len > 1e-12 && len.is_finite() && offset.is_finite()) {
            return Err(Error::param("plane normal must be finite and non-zero"));
        }
        Ok(Self { n: linalg::scale(normal, 1.0 / len), d: offset / len })
    }

    /// Plane through `point` with the given normal.
    pub fn through(point: Vec3, normal: Vec3) -> Result<Self> {
        let len = linalg::norm(normal);
        if !(len > 1e-12) {
            return Err(Error::param("plane normal must be non-zero"));
        }
        let n = linalg::scale(normal, 1.0 / len);
        Ok(Self { n, d: -linalg::dot(n, point) })
    }

    pub fn normal(&self) -> Vec3 {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.d
    }

    pub fn signed_distance(&self, p: Vec3) -> f64 {
        linalg::dot(self.n, p) + self.d
    }
}

/// Zero-skew pinhole intrinsics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn matrix(&self) -> Mat3 {
        [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    center: Vec3,
    rotation: Mat3,
    intrinsics: Intrinsics,
    mirrored: bool,
}

impl CameraPose {
    /// Real (right-handed) camera. `rotation` maps world to camera axes.
    pub fn new(center: Vec3, rotation: Mat3, intrinsics: Intrinsics) -> Result<Self> {
        let pose = Self { center, rotation, intrinsics, mirrored: false };
        pose.validate()?;
        Ok(pose)
    }

    /// Camera at `center` looking at `target`, image y axis roughly along
    /// `-up`.
    pub fn look_at(center: Vec3, target: Vec3, up: Vec3, intrinsics: Intrinsics) -> Result<Self> {
        let fwd = linalg::sub(target, center);
        let fl = linalg::norm(fwd);
        if !(fl > 1e-12) {
            return Err(Error::param("look_at target coincides with center"));
        }
        let z = linalg::scale(fwd, 1.0 / fl);
        let x = linalg::cross3(z, up);
        let xl = linalg::norm(x);
        if !(xl > 1e-9) {
            return Err(Error::param("up vector parallel to viewing direction"));
        }
        let x = linalg::scale(x, 1.0 / xl);
        let y = linalg::cross3(z, x);
        Self::new(center, [x, y, z], intrinsics)
    }

    fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        let rtr = linalg::mul(&linalg::transpose(r), r);
        for (i, row) in rtr.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (v - expect).abs() > 1e-9 {
                    return Err(Error::param("rotation is not orthonormal"));
                }
            }
        }
        let want = if self.mirrored { -1.0 } else { 1.0 };
        if (linalg::det(r) - want).abs() > 1e-9 {
            return Err(Error::param("rotation determinant does not match handedness"));
        }
        let k = &self.intrinsics;
        if !(k.fx > 0.0 && k.fy > 0.0 && k.cx.is_finite() && k.cy.is_finite()) {
            return Err(Error::param("focal lengths must be positive"));
        }
        if self.center.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("camera center must be finite"));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.intrinsics
    }

    /// True for a reflected (left-handed) virtual camera.
    pub fn is_mirrored(&self) -> bool {
        self.mirrored
    }

    /// Pinhole projection; fails for points on or behind the image plane.
    pub fn project(&self, p: Vec3) -> Result<Point2> {
        let pc = linalg::mul_vec(&self.rotation, linalg::sub(p, self.center));
        if !(pc[2] > 1e-12) {
            return Err(Error::PointAtInfinity(pc[2]));
        }
        let k = &self.intrinsics;
        Ok(Point2::new(k.fx * pc[0] / pc[2] + k.cx, k.fy * pc[1] / pc[2] + k.cy))
    }

    /// `K R [e1 | e2 | o - C]`: maps plane-frame coordinates `(u, v, 1)` to
    /// homogeneous image points.
    fn plane_to_image(&self, frame: &PlaneFrame) -> Mat3 {
        let k = self.intrinsics.matrix();
        let cols = linalg::from_columns(frame.e1, frame.e2, linalg::sub(frame.origin, self.center));
        linalg::mul(&k, &linalg::mul(&self.rotation, &cols))
    }
}

/// `p − 2 (n·p + d) n`.
pub fn reflect_point(plane: &Plane3, p: Vec3) -> Vec3 {
    let dist = plane.signed_distance(p);
    linalg::sub(p, linalg::scale(plane.n, 2.0 * dist))
}

/// Virtual camera behind the mirror: center reflected, `R' = R (I − 2nnᵀ)`,
/// handedness flag toggled.
pub fn reflect_camera(cam: &CameraPose, plane: &Plane3) -> CameraPose {
    CameraPose {
        center: reflect_point(plane, cam.center),
        rotation: linalg::mul(&cam.rotation, &linalg::householder(plane.n)),
        intrinsics: cam.intrinsics,
        mirrored: !cam.mirrored,
    }
}

/// In-plane coordinate frame: `origin + u e1 + v e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFrame {
    pub origin: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl PlaneFrame {
    /// Frame with the given in-plane direction, completed by `n × e1`.
    pub fn on_plane(plane: &Plane3, origin: Vec3, direction: Vec3) -> Result<Self> {
        let n = plane.normal();
        let origin = linalg::sub(origin, linalg::scale(n, plane.signed_distance(origin)));
        let along = linalg::sub(direction, linalg::scale(n, linalg::dot(n, direction)));
        let len = linalg::norm(along);
        if !(len > 1e-12) {
            return Err(Error::param("frame direction is parallel to the plane normal"));
        }
        let e1 = linalg::scale(along, 1.0 / len);
        let e2 = linalg::cross3(n, e1);
        Ok(Self { origin, e1, e2 })
    }

    pub fn point(&self, u: f64, v: f64) -> Vec3 {
        linalg::add(self.origin, linalg::add(linalg::scale(self.e1, u), linalg::scale(self.e2, v)))
    }

    fn validate(&self, plane: &Plane3) -> Result<()> {
        let n = plane.normal();
        let ok = plane.signed_distance(self.origin).abs() < 1e-9
            && linalg::dot(self.e1, n).abs() < 1e-9
            && linalg::dot(self.e2, n).abs() < 1e-9
            && (linalg::norm(self.e1) - 1.0).abs() < 1e-9
            && (linalg::norm(self.e2) - 1.0).abs() < 1e-9
            && linalg::dot(self.e1, self.e2).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::param("plane frame must be an orthonormal basis lying in the plane"))
        }
    }
}

/// Result of [`mirror_view_homography`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorView {
    /// Maps the reflected camera's image of the mirror plane onto the real
    /// camera's image of it.
    pub homography: Homography,
    /// Left-right parity between the two views; applied downstream as a
    /// horizontal flip, never folded into `homography`.
    pub parity_flip: bool,
}

/// Plane-induced homography between the reflected virtual camera and the real
/// camera, both restricted to the mirror plane.
///
/// The chain goes image(virtual) → plane frame → image(real). For every point
/// `q` on the mirror plane, `project(cam, q) == H · project(reflect_camera(cam), q)`.
pub fn mirror_view_homography(cam: &CameraPose, mirror: &Plane3, frame: &PlaneFrame) -> Result<MirrorView> {
    if mirror.signed_distance(cam.center).abs() <= 1e-9 {
        return Err(Error::param("camera center lies on the mirror plane"));
    }
    frame.validate(mirror)?;
    let virt = reflect_camera(cam, mirror);
    let real_map = cam.plane_to_image(frame);
    let virt_map = virt.plane_to_image(frame);
    let virt_inv = linalg::inverse(&virt_map, 0.0)
        .ok_or_else(|| Error::Degenerate("mirror plane is seen edge-on".into()))?;
    let homography = Homography::new(linalg::mul(&real_map, &virt_inv))?;
    Ok(MirrorView { homography, parity_flip: virt.mirrored != cam.mirrored })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k() -> Intrinsics {
        Intrinsics { fx: 500.0, fy: 500.0, cx: 320.0, cy: 240.0 }
    }

    #[test]
    fn point_reflection() {
        let z0 = Plane3::new([0.0, 0.0, 1.0], 0.0).unwrap();
        assert_eq!(reflect_point(&z0, [0.0, 0.0, 1.0]), [0.0, 0.0, -1.0]);
        assert_eq!(reflect_point(&z0, [3.0, -2.0, 0.0]), [3.0, -2.0, 0.0]);
        let p = Plane3::new([1.0, 2.0, -0.5], 0.7).unwrap();
        let q = [0.3, -1.2, 4.0];
        let back = reflect_point(&p, reflect_point(&p, q));
        assert!(linalg::norm(linalg::sub(back, q)) < 1e-12);
    }

    #[test]
    fn camera_reflection_is_involution() {
        let cam = CameraPose::look_at([1.0, 2.0, 5.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], k()).unwrap();
        let plane = Plane3::new([0.2, -0.1, 1.0], 0.3).unwrap();
        let v = reflect_camera(&cam, &plane);
        assert!(v.is_mirrored());
        assert!((linalg::det(v.rotation()) + 1.0).abs() < 1e-12);
        let back = reflect_camera(&v, &plane);
        assert!(!back.is_mirrored());
        assert!(linalg::norm(linalg::sub(back.center(), cam.center())) < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.rotation()[i][j] - cam.rotation()[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn frontal_mirror_is_pure_parity() {
        let cam = CameraPose::look_at([0.0, 0.0, 5.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], k()).unwrap();
        let plane = Plane3::new([0.0, 0.0, 1.0], 0.0).unwrap();
        let frame = PlaneFrame { origin: [0.0; 3], e1: [1.0, 0.0, 0.0], e2: [0.0, 1.0, 0.0] };
        let view = mirror_view_homography(&cam, &plane, &frame).unwrap();
        assert!(view.parity_flip);
        assert!(view.homography.max_abs_diff(&Homography::identity()) < 1e-12);
    }

    #[test]
    fn camera_on_plane_rejected() {
        let cam = CameraPose::look_at([0.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, 0.0], k()).unwrap();
        let plane = Plane3::new([0.0, 0.0, 1.0], 0.0).unwrap();
        let frame = PlaneFrame::on_plane(&plane, [0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        assert!(mirror_view_homography(&cam, &plane, &frame).is_err());
    }

    #[test]
    fn projection_consistency_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut checked = 0;
        while checked < 100 {
            let normal = [rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4), 1.0];
            let plane = Plane3::through([0.0, 0.0, rng.gen_range(-0.5..0.5)], normal).unwrap();
            let center = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(2.0..6.0)];
            let target = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), 0.0];
            let Ok(cam) = CameraPose::look_at(center, target, [0.0, 1.0, 0.0], k()) else { continue };
            let frame = PlaneFrame::on_plane(&plane, target, [1.0, rng.gen_range(-0.5..0.5), 0.0]).unwrap();
            let view = mirror_view_homography(&cam, &plane, &frame).unwrap();
            let virt = reflect_camera(&cam, &plane);
            for _ in 0..10 {
                let q = frame.point(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
                let direct = cam.project(q).unwrap();
                let mapped = view.homography.apply(virt.project(q).unwrap()).unwrap();
                assert!(direct.distance(mapped) <= 1e-6);
            }
            checked += 1;
        }
    }
}
