//! Homography estimation from point correspondences.
//!
//! `dlt_homography` is the normalized DLT: both point sets are conditioned
//! (centroid to the origin, mean radius √2), the 2n×9 system is reduced to its
//! 9×9 normal matrix, and the null vector is found by inverse iteration.
//! `quad_to_quad` is the closed-form four-point map through the unit square,
//! an independent route used to cross-check the DLT.

use super::homography::Homography;
use super::linalg::{self, Mat3};
use super::{check_quad, Point2};
use crate::error::{Error, Result};

const MAX_ITERS: usize = 200;
const CONVERGED: f64 = 1e-14;
/// Smallest/second-smallest eigenvalue ratio above which the solution is ambiguous.
const AMBIGUOUS_RATIO: f64 = 0.99;
/// Second eigenvalue relative to the trace below which the system has rank < 8.
const RANK_TOL: f64 = 1e-12;

/// Least-squares homography `dst ~ H src` from at least four pairs.
pub fn dlt_homography(src: &[Point2], dst: &[Point2]) -> Result<Homography> {
    let n = src.len();
    if n < 4 {
        return Err(Error::param(format!("need at least 4 correspondences, got {n}")));
    }
    if dst.len() != n {
        return Err(Error::param(format!("{} source points but {} destination points", n, dst.len())));
    }
    if src.iter().chain(dst).any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::param("correspondences must be finite"));
    }
    let (src_n, t_src) = condition(src)?;
    let (dst_n, t_dst) = condition(dst)?;

    let mut ata = [[0.0f64; 9]; 9];
    for (p, q) in src_n.iter().zip(&dst_n) {
        let (x, y, u, v) = (p.x, p.y, q.x, q.y);
        let rows = [
            [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u],
            [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v],
        ];
        for r in &rows {
            for i in 0..9 {
                if r[i] == 0.0 {
                    continue;
                }
                for j in 0..9 {
                    ata[i][j] += r[i] * r[j];
                }
            }
        }
    }

    let trace: f64 = (0..9).map(|i| ata[i][i]).sum();
    let (h, lambda1) = inverse_iteration(&ata, None);
    let (_, lambda2) = inverse_iteration(&ata, Some(&h));
    if lambda2 <= RANK_TOL * trace {
        return Err(Error::Degenerate(format!(
            "correspondence system has rank < 8 (second eigenvalue {lambda2:.3e})"
        )));
    }
    if lambda1 / lambda2 > AMBIGUOUS_RATIO {
        return Err(Error::Degenerate(format!(
            "ill-conditioned correspondences (eigenvalue ratio {:.4})",
            lambda1 / lambda2
        )));
    }

    let hn: Mat3 = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], h[8]]];
    let t_dst_inv = linalg::inverse(&t_dst, 0.0).expect("conditioning transform is invertible");
    let m = linalg::mul(&t_dst_inv, &linalg::mul(&hn, &t_src));
    Homography::new(m).map_err(|e| Error::Degenerate(format!("recovered matrix unusable: {e}")))
}

/// Translate to the centroid and scale the mean radius to √2.
fn condition(pts: &[Point2]) -> Result<(Vec<Point2>, Mat3)> {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let mean_r = pts.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / n;
    if !(mean_r > 1e-12) {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean_r;
    let t = [[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]];
    let out = pts.iter().map(|p| Point2::new(s * (p.x - cx), s * (p.y - cy))).collect();
    Ok((out, t))
}

/// Inverse power iteration (shift 0) from a vector of ones.
///
/// With `deflate`, the iterate is kept orthogonal to that unit vector, which
/// yields the second-smallest eigenpair. Returns the unit eigenvector and its
/// Rayleigh quotient.
fn inverse_iteration(a: &[[f64; 9]; 9], deflate: Option<&[f64; 9]>) -> ([f64; 9], f64) {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tiny = scale * f64::EPSILON;
    let mut x = [1.0f64; 9];
    project_out(&mut x, deflate);
    normalize9(&mut x);
    for _ in 0..MAX_ITERS {
        let mut m = *a;
        let mut y = x;
        linalg::solve_in_place(&mut m, &mut y, tiny);
        project_out(&mut y, deflate);
        if !normalize9(&mut y) {
            break;
        }
        // Fix the sign so successive iterates are comparable.
        if dot9(&y, &x) < 0.0 {
            y.iter_mut().for_each(|v| *v = -*v);
        }
        let delta = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        x = y;
        if delta < CONVERGED {
            break;
        }
    }
    let mut ax = [0.0; 9];
    for i in 0..9 {
        ax[i] = dot9(&a[i], &x);
    }
    (x, dot9(&x, &ax).max(0.0))
}

fn dot9(a: &[f64; 9], b: &[f64; 9]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_out(x: &mut [f64; 9], dir: Option<&[f64; 9]>) {
    if let Some(d) = dir {
        let c = dot9(x, d);
        x.iter_mut().zip(d).for_each(|(v, dv)| *v -= c * dv);
    }
}

fn normalize9(x: &mut [f64; 9]) -> bool {
    let n = dot9(x, x).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= n);
    true
}

/// Exact homography taking the four `src` corners onto the four `dst` corners.
///
/// Both quads are mapped from the unit square in closed form and the two maps
/// are chained. Corners must be ordered consistently (TL, TR, BR, BL).
pub fn quad_to_quad(src: &[Point2; 4], dst: &[Point2; 4]) -> Result<Homography> {
    let from_src = square_to_quad(src)?;
    let from_dst = square_to_quad(dst)?;
    let src_inv = linalg::inverse(&from_src, 0.0).ok_or(Error::Singular(0.0))?;
    Homography::new(linalg::mul(&from_dst, &src_inv))
}

fn square_to_quad(q: &[Point2; 4]) -> Result<Mat3> {
    let extent = q
        .iter()
        .flat_map(|a| q.iter().map(move |b| a.distance(*b)))
        .fold(0.0, f64::max);
    let eps = 1e-12 * extent * extent;
    let mut oriented = *q;
    if super::signed_area(q) < 0.0 {
        // Mirror-ordered input is still a valid map target; test degeneracy on
        // the reversed order.
        oriented.reverse();
    }
    check_quad(&oriented, eps).map_err(|reason| Error::Degenerate(format!("degenerate quad: {reason}")))?;

    let [p0, p1, p2, p3] = *q;
    let dx1 = p1.x - p2.x;
    let dx2 = p3.x - p2.x;
    let dx3 = p0.x - p1.x + p2.x - p3.x;
    let dy1 = p1.y - p2.y;
    let dy2 = p3.y - p2.y;
    let dy3 = p0.y - p1.y + p2.y - p3.y;
    let den = dx1 * dy2 - dx2 * dy1;
    if !(den.abs() > 0.0) {
        return Err(Error::Degenerate("degenerate quad: parallel edges".into()));
    }
    let g = (dx3 * dy2 - dx2 * dy3) / den;
    let h = (dx1 * dy3 - dx3 * dy1) / den;
    Ok([
        [p1.x - p0.x + g * p1.x, p3.x - p0.x + h * p3.x, p0.x],
        [p1.y - p0.y + g * p1.y, p3.y - p0.y + h * p3.y, p0.y],
        [g, h, 1.0],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> [Point2; 4] {
        [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)]
    }

    #[test]
    fn square_to_itself_is_identity() {
        let sq = unit_square();
        let h = dlt_homography(&sq, &sq).unwrap();
        assert!(h.max_abs_diff(&Homography::identity()) < 1e-9);
    }

    #[test]
    fn translated_square() {
        let sq = unit_square();
        let moved: Vec<Point2> = sq.iter().map(|p| Point2::new(p.x + 5.0, p.y + 7.0)).collect();
        let h = dlt_homography(&sq, &moved).unwrap();
        assert!(h.max_abs_diff(&Homography::translation(5.0, 7.0)) < 1e-9);
    }

    #[test]
    fn recovers_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let truth = Homography::new([
                [1.0 + rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-5.0..5.0)],
                [rng.gen_range(-0.3..0.3), 1.0 + rng.gen_range(-0.3..0.3), rng.gen_range(-5.0..5.0)],
                [rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01), 1.0],
            ])
            .unwrap();
            let src: Vec<Point2> =
                (0..12).map(|_| Point2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0))).collect();
            let dst: Vec<Point2> = src.iter().map(|p| truth.apply(*p).unwrap()).collect();
            let h = dlt_homography(&src, &dst).unwrap();
            assert!(h.max_abs_diff(&truth) < 1e-6, "{}", h.max_abs_diff(&truth));
            for (p, q) in src.iter().zip(&dst) {
                assert!(h.apply(*p).unwrap().distance(*q) < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let sq = unit_square();
        assert!(dlt_homography(&sq[..3], &sq[..3]).is_err());
        assert!(dlt_homography(&sq, &sq[..3]).is_err());
        let line: Vec<Point2> = (0..4).map(|i| Point2::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(dlt_homography(&line, &sq), Err(Error::Degenerate(_))));
        let three_collinear =
            [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 1.0)];
        assert!(dlt_homography(&three_collinear, &sq).is_err());
        let mut nan = sq;
        nan[2].x = f64::NAN;
        assert!(dlt_homography(&nan, &sq).is_err());
    }

    #[test]
    fn quad_to_quad_basics() {
        let sq = unit_square();
        assert!(quad_to_quad(&sq, &sq).unwrap().max_abs_diff(&Homography::identity()) < 1e-12);
        let big = sq.map(|p| Point2::new(2.0 * p.x, 2.0 * p.y));
        let h = quad_to_quad(&sq, &big).unwrap();
        let diag = Homography::new([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(h.max_abs_diff(&diag) < 1e-12);
        let flat = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), Point2::new(3.0, 0.0)];
        assert!(quad_to_quad(&sq, &flat).is_err());
    }

    fn random_convex_quad(rng: &mut impl Rng) -> [Point2; 4] {
        let cx = rng.gen_range(50.0..300.0);
        let cy = rng.gen_range(50.0..300.0);
        let base = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        base.map(|(sx, sy)| {
            Point2::new(cx + sx * rng.gen_range(20.0..60.0), cy + sy * rng.gen_range(20.0..60.0))
        })
    }

    #[test]
    fn quad_to_quad_agrees_with_dlt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = random_convex_quad(&mut rng);
            let b = random_convex_quad(&mut rng);
            let h = quad_to_quad(&a, &b).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!(h.apply(*p).unwrap().distance(*q) < 1e-9);
            }
            let d = dlt_homography(&a, &b).unwrap();
            assert!(h.max_abs_diff(&d) < 1e-6);
        }
    }
}
