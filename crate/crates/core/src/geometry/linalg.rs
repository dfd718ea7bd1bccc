//! Small fixed-size helpers for 3×3 matrices and 3-vectors.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn mul_vec(a: &Mat3, v: Vec3) -> Vec3 {
    [dot(a[0], v), dot(a[1], v), dot(a[2], v)]
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Adjugate-based inverse; `None` when `|det| <= eps`.
pub fn inverse(a: &Mat3, eps: f64) -> Option<Mat3> {
    let d = det(a);
    if !(d.abs() > eps) {
        return None;
    }
    let inv_d = 1.0 / d;
    let mut out = [[0.0; 3]; 3];
    out[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * inv_d;
    out[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv_d;
    out[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv_d;
    out[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * inv_d;
    out[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv_d;
    out[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv_d;
    out[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * inv_d;
    out[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv_d;
    out[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv_d;
    Some(out)
}

/// `I - 2 n nᵀ` for a unit normal.
pub fn householder(n: Vec3) -> Mat3 {
    let mut m = IDENTITY;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] -= 2.0 * n[i] * n[j];
        }
    }
    m
}

pub fn from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> Mat3 {
    [[c0[0], c1[0], c2[0]], [c0[1], c1[1], c2[1]], [c0[2], c1[2], c2[2]]]
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
///
/// A pivot that vanishes is replaced by `tiny` so that inverse iteration on a
/// singular matrix still produces the (huge) null-space component.
pub fn solve_in_place<const N: usize>(a: &mut [[f64; N]; N], b: &mut [f64; N], tiny: f64) {
    for col in 0..N {
        let mut piv = col;
        for r in col + 1..N {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        a.swap(col, piv);
        b.swap(col, piv);
        if a[col][col].abs() < tiny {
            a[col][col] = if a[col][col] < 0.0 { -tiny } else { tiny };
        }
        let p = a[col][col];
        for r in col + 1..N {
            let f = a[r][col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..N {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..N).rev() {
        let mut s = b[col];
        for c in col + 1..N {
            s -= a[col][c] * b[c];
        }
        b[col] = s / a[col][col];
    }
}
