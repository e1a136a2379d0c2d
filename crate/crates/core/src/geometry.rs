//! Planar geometry of the leading triangle.
//!
//! The swarm's desired motion is an affine (homogeneous) map of each agent's
//! initial position: `r(t) = Q(t)·r0 + D(t)`. The three leader positions at
//! any instant determine `Q` and `D` uniquely as long as the leaders span a
//! proper triangle. This module solves that map, factors `Q` into rotation and
//! pure stretch (the stretch eigenvalues drive the collision certificate in
//! [`crate::safety`]), and computes the time-invariant barycentric weights
//! that place each follower inside the triangle.
//!
//! Everything here is closed-form: Cramer's rule for the 3x3 solves and an
//! analytic 2x2 polar decomposition. No iteration, no external linear algebra.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default threshold on the leader-basis determinant (twice the triangle
/// area, m^2) below which a configuration is treated as degenerate.
pub const AREA_EPSILON: f64 = 1e-6;

/// Determinant threshold below which a deformation Jacobian is rejected as
/// singular (or orientation-reversing, which we never allow).
pub const DET_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    /// The leader triangle used as a solve basis is (near-)collinear.
    #[error("degenerate leader basis: |basis determinant| = {det:.3e} < {epsilon:.3e}")]
    DegenerateBasis { det: f64, epsilon: f64 },
    /// The deformation Jacobian has non-positive determinant; such maps do
    /// not evolve continuously from the identity and are rejected.
    #[error("singular or orientation-reversing deformation: det(Q) = {det:.3e}")]
    SingularDeformation { det: f64 },
}

/// A point in the horizontal plane, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, treating both as 3D vectors in the plane.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Positions of the three leaders at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleConfig {
    pub p1: Point2,
    pub p2: Point2,
    pub p3: Point2,
}

impl TriangleConfig {
    pub const fn new(p1: Point2, p2: Point2, p3: Point2) -> Self {
        Self { p1, p2, p3 }
    }

    pub fn vertices(&self) -> [Point2; 3] {
        [self.p1, self.p2, self.p3]
    }

    /// The three sides as segments, in vertex order.
    pub fn sides(&self) -> [(Point2, Point2); 3] {
        [(self.p1, self.p2), (self.p2, self.p3), (self.p3, self.p1)]
    }

    /// Determinant of the edge basis `[p2-p1, p3-p1]`: twice the signed
    /// triangle area. This is also the determinant of the 3x3 barycentric
    /// system, so one scalar decides every rank test in the pipeline.
    pub fn basis_det(&self) -> f64 {
        (self.p2 - self.p1).cross(self.p3 - self.p1)
    }

    pub fn centroid(&self) -> Point2 {
        Point2::new(
            (self.p1.x + self.p2.x + self.p3.x) / 3.0,
            (self.p1.y + self.p2.y + self.p3.y) / 3.0,
        )
    }

    pub fn translated(&self, d: Point2) -> Self {
        Self::new(self.p1 + d, self.p2 + d, self.p3 + d)
    }
}

/// The planar homogeneous map `r -> Q·r + D`.
///
/// `q11..q22` form the 2x2 deformation Jacobian `Q`, `d1/d2` the rigid
/// translation in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationParams {
    pub q11: f64,
    pub q12: f64,
    pub q21: f64,
    pub q22: f64,
    pub d1: f64,
    pub d2: f64,
}

impl DeformationParams {
    pub const IDENTITY: DeformationParams = DeformationParams {
        q11: 1.0,
        q12: 0.0,
        q21: 0.0,
        q22: 1.0,
        d1: 0.0,
        d2: 0.0,
    };

    pub fn det(&self) -> f64 {
        self.q11 * self.q22 - self.q12 * self.q21
    }
}

/// Polar factorization `Q = R·U` of a deformation Jacobian.
///
/// `r_cd` is orthogonal (a proper rotation here, since we reject
/// orientation-reversing maps), `u_cd` symmetric positive definite. The
/// stretch eigenvalues satisfy `0 < lambda1 <= lambda2`; `lambda1` is the
/// minimum stretch the map applies to any direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarDecomp {
    pub r_cd: [[f64; 2]; 2],
    pub u_cd: [[f64; 2]; 2],
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Time-invariant affine coefficients expressing one follower as a
/// combination of the three leaders. They always sum to 1; for a follower
/// strictly inside the triangle all three lie in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarycentricWeights {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

/// True iff the leaders span a proper triangle: `|basis determinant| >= area_epsilon`.
pub fn triangle_rank_ok(tc: &TriangleConfig, area_epsilon: f64) -> bool {
    tc.basis_det().abs() >= area_epsilon
}

/// Solve the homogeneous map taking the leaders of `t0` onto the leaders of `tc`.
///
/// The x- and y-rows of the 6-unknown system decouple into two 3x3 solves
/// sharing the basis matrix `[[X_l, Y_l, 1]]` of initial leader positions;
/// both are solved exactly by Cramer's rule.
pub fn solve_deformation(
    t0: &TriangleConfig,
    tc: &TriangleConfig,
) -> Result<DeformationParams, GeometryError> {
    let det = t0.basis_det();
    if det.abs() < AREA_EPSILON {
        return Err(GeometryError::DegenerateBasis {
            det,
            epsilon: AREA_EPSILON,
        });
    }

    // Cramer on [[x1,y1,1],[x2,y2,1],[x3,y3,1]] * [a, b, c]^T = rhs,
    // whose determinant equals the edge-basis determinant above.
    let solve3 = |rhs: [f64; 3]| -> [f64; 3] {
        let [p1, p2, p3] = t0.vertices();
        let col = |c0: [f64; 3], c1: [f64; 3], c2: [f64; 3]| -> f64 {
            c0[0] * (c1[1] * c2[2] - c1[2] * c2[1]) - c1[0] * (c0[1] * c2[2] - c0[2] * c2[1])
                + c2[0] * (c0[1] * c1[2] - c0[2] * c1[1])
        };
        let xs = [p1.x, p2.x, p3.x];
        let ys = [p1.y, p2.y, p3.y];
        let ones = [1.0, 1.0, 1.0];
        [
            col(rhs, ys, ones) / det,
            col(xs, rhs, ones) / det,
            col(xs, ys, rhs) / det,
        ]
    };

    let [q11, q12, d1] = solve3([tc.p1.x, tc.p2.x, tc.p3.x]);
    let [q21, q22, d2] = solve3([tc.p1.y, tc.p2.y, tc.p3.y]);
    Ok(DeformationParams {
        q11,
        q12,
        q21,
        q22,
        d1,
        d2,
    })
}

/// Apply the map: `Q·r0 + D`.
pub fn apply_deformation(params: &DeformationParams, r0: Point2) -> Point2 {
    Point2::new(
        params.q11 * r0.x + params.q12 * r0.y + params.d1,
        params.q21 * r0.x + params.q22 * r0.y + params.d2,
    )
}

/// Closed-form 2x2 polar decomposition of the deformation Jacobian.
///
/// For `det(Q) > 0` the rotation factor is
/// `R = [[q11+q22, q12-q21], [q21-q12, q11+q22]] / k` with `k` the norm of
/// either column, and `U = R^T Q`, symmetrized to remove rounding skew.
/// The stretch eigenvalues come from the symmetric 2x2 eigenvalue formula in
/// its cancellation-free form.
pub fn polar_decompose(params: &DeformationParams) -> Result<PolarDecomp, GeometryError> {
    let det = params.det();
    if det <= DET_EPSILON {
        return Err(GeometryError::SingularDeformation { det });
    }

    let c = params.q11 + params.q22;
    let s = params.q21 - params.q12;
    let k = (c * c + s * s).sqrt();
    // k = 0 would need q11 = -q22 and q12 = q21, which forces det <= 0.
    let (c, s) = (c / k, s / k);
    let r_cd = [[c, -s], [s, c]];

    // U = R^T Q; enforce symmetry exactly.
    let u11 = c * params.q11 + s * params.q21;
    let u22 = -s * params.q12 + c * params.q22;
    let u12 = 0.5 * ((c * params.q12 + s * params.q22) + (-s * params.q11 + c * params.q21));
    let u_cd = [[u11, u12], [u12, u22]];

    let mid = 0.5 * (u11 + u22);
    let disc = (0.25 * (u11 - u22) * (u11 - u22) + u12 * u12).sqrt();
    let lambda1 = mid - disc;
    let lambda2 = mid + disc;

    Ok(PolarDecomp {
        r_cd,
        u_cd,
        lambda1,
        lambda2,
    })
}

/// Barycentric weights of `r0` with respect to `t0`, via signed sub-triangle
/// area ratios (equivalent to the 3x3 solve, but exact in three determinants).
pub fn barycentric_weights(
    t0: &TriangleConfig,
    r0: Point2,
) -> Result<BarycentricWeights, GeometryError> {
    let det = t0.basis_det();
    if det.abs() < AREA_EPSILON {
        return Err(GeometryError::DegenerateBasis {
            det,
            epsilon: AREA_EPSILON,
        });
    }
    let a1 = (t0.p2 - r0).cross(t0.p3 - r0) / det;
    let a2 = (t0.p3 - r0).cross(t0.p1 - r0) / det;
    let a3 = (t0.p1 - r0).cross(t0.p2 - r0) / det;
    Ok(BarycentricWeights { a1, a2, a3 })
}

/// Recombine leader positions with fixed weights: `a1·p1 + a2·p2 + a3·p3`.
pub fn follower_position(w: &BarycentricWeights, leaders: &TriangleConfig) -> Point2 {
    Point2::new(
        w.a1 * leaders.p1.x + w.a2 * leaders.p2.x + w.a3 * leaders.p3.x,
        w.a1 * leaders.p1.y + w.a2 * leaders.p2.y + w.a3 * leaders.p3.y,
    )
}

/// True iff `r` lies inside or on `t`, to within `tol` on the weights.
pub fn triangle_contains(t: &TriangleConfig, r: Point2, tol: f64) -> bool {
    match barycentric_weights(t, r) {
        Ok(w) => w.a1 >= -tol && w.a2 >= -tol && w.a3 >= -tol,
        Err(_) => false,
    }
}

/// Distance from a point to a segment.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// True iff segments `a1-a2` and `b1-b2` intersect (touching counts).
pub fn segments_intersect(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> bool {
    let d1 = (a2 - a1).cross(b1 - a1);
    let d2 = (a2 - a1).cross(b2 - a1);
    let d3 = (b2 - b1).cross(a1 - b1);
    let d4 = (b2 - b1).cross(a2 - b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on_segment = |p: Point2, q: Point2, r: Point2| -> bool {
        (q - p).cross(r - p) == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on_segment(a1, a2, b1) || on_segment(a1, a2, b2) || on_segment(b1, b2, a1) || on_segment(b1, b2, a2)
}

/// Shortest distance between two segments (0 if they intersect).
pub fn segment_segment_distance(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> f64 {
    if segments_intersect(a1, a2, b1, b2) {
        return 0.0;
    }
    point_segment_distance(a1, b1, b2)
        .min(point_segment_distance(a2, b1, b2))
        .min(point_segment_distance(b1, a1, a2))
        .min(point_segment_distance(b2, a1, a2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn unit_t0() -> TriangleConfig {
        TriangleConfig::new(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        )
    }

    /// Case-study initial triangle reused across modules.
    fn field_t0() -> TriangleConfig {
        TriangleConfig::new(
            Point2::new(5.0, 5.0),
            Point2::new(20.0, 15.0),
            Point2::new(5.0, 25.0),
        )
    }

    /// Independent 3x3 solver (Gaussian elimination with partial pivoting)
    /// used as the oracle for barycentric weights.
    #[allow(clippy::needless_range_loop)]
    fn gauss3(mut a: [[f64; 4]; 3]) -> [f64; 3] {
        for col in 0..3 {
            let pivot = (col..3)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            for row in (col + 1)..3 {
                let f = a[row][col] / a[col][col];
                for k in col..4 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
        let mut x = [0.0; 3];
        for row in (0..3).rev() {
            let mut acc = a[row][3];
            for k in (row + 1)..3 {
                acc -= a[row][k] * x[k];
            }
            x[row] = acc / a[row][row];
        }
        x
    }

    /// Independent singular-value oracle: sqrt of the eigenvalues of Q^T Q,
    /// ascending. A different algebraic route than the polar factorization.
    fn svd2_singular_values(p: &DeformationParams) -> (f64, f64) {
        let g11 = p.q11 * p.q11 + p.q21 * p.q21;
        let g12 = p.q11 * p.q12 + p.q21 * p.q22;
        let g22 = p.q12 * p.q12 + p.q22 * p.q22;
        let mid = 0.5 * (g11 + g22);
        let disc = (0.25 * (g11 - g22) * (g11 - g22) + g12 * g12).sqrt();
        (((mid - disc).max(0.0)).sqrt(), (mid + disc).sqrt())
    }

    #[test]
    fn solve_identity_map() {
        let t0 = unit_t0();
        let p = solve_deformation(&t0, &t0).unwrap();
        for (got, want) in [
            (p.q11, 1.0),
            (p.q12, 0.0),
            (p.q21, 0.0),
            (p.q22, 1.0),
            (p.d1, 0.0),
            (p.d2, 0.0),
        ] {
            assert!((got - want).abs() < TOL, "got {got}, want {want}");
        }
    }

    #[test]
    fn solve_pure_translation() {
        let t0 = unit_t0();
        let tc = t0.translated(Point2::new(1.0, 1.0));
        let p = solve_deformation(&t0, &tc).unwrap();
        assert!((p.q11 - 1.0).abs() < TOL && (p.q22 - 1.0).abs() < TOL);
        assert!(p.q12.abs() < TOL && p.q21.abs() < TOL);
        assert!((p.d1 - 1.0).abs() < TOL && (p.d2 - 1.0).abs() < TOL);
    }

    #[test]
    fn solve_axis_aligned_stretch() {
        let t0 = unit_t0();
        let tc = TriangleConfig::new(
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 3.0),
        );
        let p = solve_deformation(&t0, &tc).unwrap();
        assert!((p.q11 - 2.0).abs() < TOL && (p.q22 - 3.0).abs() < TOL);
        assert!(p.q12.abs() < TOL && p.q21.abs() < TOL);
        assert!(p.d1.abs() < TOL && p.d2.abs() < TOL);
    }

    #[test]
    fn solve_rejects_collinear_basis() {
        let t0 = TriangleConfig::new(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 2.0),
        );
        assert!(matches!(
            solve_deformation(&t0, &unit_t0()),
            Err(GeometryError::DegenerateBasis { .. })
        ));
    }

    #[test]
    fn apply_identity_and_substitution() {
        let r = apply_deformation(&DeformationParams::IDENTITY, Point2::new(3.0, 4.0));
        assert_eq!(r, Point2::new(3.0, 4.0));

        let p = DeformationParams {
            q11: 2.0,
            q12: 0.0,
            q21: 0.0,
            q22: 3.0,
            d1: 1.0,
            d2: 0.0,
        };
        let r = apply_deformation(&p, Point2::new(1.0, 1.0));
        assert!((r.x - 3.0).abs() < TOL && (r.y - 3.0).abs() < TOL);
    }

    #[test]
    fn polar_of_diagonal_stretch() {
        let p = DeformationParams {
            q11: 2.0,
            q12: 0.0,
            q21: 0.0,
            q22: 3.0,
            d1: 0.0,
            d2: 0.0,
        };
        let pd = polar_decompose(&p).unwrap();
        assert!((pd.r_cd[0][0] - 1.0).abs() < TOL && pd.r_cd[0][1].abs() < TOL);
        assert!((pd.u_cd[0][0] - 2.0).abs() < TOL && (pd.u_cd[1][1] - 3.0).abs() < TOL);
        assert!((pd.lambda1 - 2.0).abs() < TOL && (pd.lambda2 - 3.0).abs() < TOL);
    }

    #[test]
    fn polar_of_quarter_turn() {
        let p = DeformationParams {
            q11: 0.0,
            q12: -1.0,
            q21: 1.0,
            q22: 0.0,
            d1: 0.0,
            d2: 0.0,
        };
        let pd = polar_decompose(&p).unwrap();
        assert!(pd.r_cd[0][0].abs() < TOL && (pd.r_cd[1][0] - 1.0).abs() < TOL);
        assert!((pd.u_cd[0][0] - 1.0).abs() < TOL && pd.u_cd[0][1].abs() < TOL);
        assert!((pd.lambda1 - 1.0).abs() < TOL && (pd.lambda2 - 1.0).abs() < TOL);
    }

    #[test]
    fn polar_of_unit_shear_matches_svd_oracle() {
        let p = DeformationParams {
            q11: 1.0,
            q12: 1.0,
            q21: 0.0,
            q22: 1.0,
            d1: 0.0,
            d2: 0.0,
        };
        let pd = polar_decompose(&p).unwrap();
        let golden = (5.0_f64.sqrt() + 1.0) / 2.0;
        assert!((pd.lambda1 - (golden - 1.0)).abs() < TOL);
        assert!((pd.lambda2 - golden).abs() < TOL);
        let (s1, s2) = svd2_singular_values(&p);
        assert!((pd.lambda1 - s1).abs() < TOL && (pd.lambda2 - s2).abs() < TOL);
    }

    #[test]
    fn polar_rejects_reflections_and_singular() {
        let reflect = DeformationParams {
            q11: -1.0,
            q12: 0.0,
            q21: 0.0,
            q22: 1.0,
            d1: 0.0,
            d2: 0.0,
        };
        assert!(matches!(
            polar_decompose(&reflect),
            Err(GeometryError::SingularDeformation { .. })
        ));
        let squash = DeformationParams {
            q11: 1.0,
            q12: 0.0,
            q21: 0.0,
            q22: 0.0,
            d1: 0.0,
            d2: 0.0,
        };
        assert!(polar_decompose(&squash).is_err());
    }

    #[test]
    fn weights_at_vertex_and_centroid() {
        let t0 = field_t0();
        let w = barycentric_weights(&t0, t0.p1).unwrap();
        assert!((w.a1 - 1.0).abs() < TOL && w.a2.abs() < TOL && w.a3.abs() < TOL);

        let w = barycentric_weights(&t0, t0.centroid()).unwrap();
        for a in [w.a1, w.a2, w.a3] {
            assert!((a - 1.0 / 3.0).abs() < TOL);
        }
    }

    #[test]
    fn weights_match_linear_system_oracle() {
        let t0 = field_t0();
        let r0 = Point2::new(10.0, 10.0);
        let w = barycentric_weights(&t0, r0).unwrap();

        let oracle = gauss3([
            [t0.p1.x, t0.p2.x, t0.p3.x, r0.x],
            [t0.p1.y, t0.p2.y, t0.p3.y, r0.y],
            [1.0, 1.0, 1.0, 1.0],
        ]);
        assert!((w.a1 - oracle[0]).abs() < TOL);
        assert!((w.a2 - oracle[1]).abs() < TOL);
        assert!((w.a3 - oracle[2]).abs() < TOL);
        // Frozen values: (7/12, 1/3, 1/12).
        assert!((w.a1 - 7.0 / 12.0).abs() < TOL);
        assert!((w.a2 - 1.0 / 3.0).abs() < TOL);
        assert!((w.a3 - 1.0 / 12.0).abs() < TOL);

        let rec = follower_position(&w, &t0);
        assert!(rec.dist(r0) < TOL);
    }

    #[test]
    fn follower_position_trivial_weights() {
        let leaders = TriangleConfig::new(
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Point2::new(0.0, 3.0),
        );
        let w = BarycentricWeights {
            a1: 1.0,
            a2: 0.0,
            a3: 0.0,
        };
        assert_eq!(follower_position(&w, &leaders), leaders.p1);
        let w = BarycentricWeights {
            a1: 1.0 / 3.0,
            a2: 1.0 / 3.0,
            a3: 1.0 / 3.0,
        };
        let c = follower_position(&w, &leaders);
        assert!((c.x - 1.0).abs() < TOL && (c.y - 1.0).abs() < TOL);
    }

    #[test]
    fn rank_test_cases() {
        assert!(triangle_rank_ok(&unit_t0(), AREA_EPSILON));
        let collinear = TriangleConfig::new(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 2.0),
        );
        assert!(!triangle_rank_ok(&collinear, AREA_EPSILON));
        // Basis determinant 1.9e-6 sits just above a 1e-6 threshold.
        let sliver = TriangleConfig::new(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, AREA_EPSILON * 1.9),
        );
        assert!(triangle_rank_ok(&sliver, AREA_EPSILON));
    }

    #[test]
    fn segment_distance_basics() {
        let d = point_segment_distance(
            Point2::new(0.5, 1.0),
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
        );
        assert!((d - 1.0).abs() < TOL);
        // Beyond the endpoint the distance is to the endpoint itself.
        let d = point_segment_distance(
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
        );
        assert!((d - 1.0).abs() < TOL);
        let d = segment_segment_distance(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 2.0),
            Point2::new(1.0, 2.0),
        );
        assert!((d - 2.0).abs() < TOL);
        assert!(segments_intersect(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 0.0),
        ));
    }

    fn arb_point(range: f64) -> impl Strategy<Value = Point2> {
        (-range..range, -range..range).prop_map(|(x, y)| Point2::new(x, y))
    }

    fn arb_triangle() -> impl Strategy<Value = TriangleConfig> {
        // Slivers are excluded: the tolerance claims assume configurations a
        // mission would actually use, not near-collinear bases.
        (arb_point(50.0), arb_point(50.0), arb_point(50.0))
            .prop_map(|(p1, p2, p3)| TriangleConfig::new(p1, p2, p3))
            .prop_filter("non-degenerate", |t| t.basis_det().abs() > 100.0)
    }

    proptest! {
        /// The defining property of the weights: recombining leaders under any
        /// later configuration equals pushing the initial point through the
        /// solved homogeneous map.
        #[test]
        fn affine_map_commutation(t0 in arb_triangle(), tc in arb_triangle(), r0 in arb_point(50.0)) {
            let params = solve_deformation(&t0, &tc).unwrap();
            let via_map = apply_deformation(&params, r0);
            let w = barycentric_weights(&t0, r0).unwrap();
            let via_weights = follower_position(&w, &tc);
            prop_assert!(via_map.dist(via_weights) < 1e-9);
        }

        #[test]
        fn apply_matches_matrix_vector_oracle(
            q in proptest::array::uniform4(-3.0..3.0f64),
            d in proptest::array::uniform2(-10.0..10.0f64),
            r0 in arb_point(20.0),
        ) {
            let p = DeformationParams { q11: q[0], q12: q[1], q21: q[2], q22: q[3], d1: d[0], d2: d[1] };
            let got = apply_deformation(&p, r0);
            let want_x = q[0] * r0.x + q[1] * r0.y + d[0];
            let want_y = q[2] * r0.x + q[3] * r0.y + d[1];
            prop_assert!((got.x - want_x).abs() < 1e-12 && (got.y - want_y).abs() < 1e-12);
        }

        #[test]
        fn polar_round_trip(q in proptest::array::uniform4(-2.0..2.0f64)) {
            let p = DeformationParams { q11: q[0], q12: q[1], q21: q[2], q22: q[3], d1: 0.0, d2: 0.0 };
            prop_assume!(p.det() > 0.05);
            let pd = polar_decompose(&p).unwrap();

            let r = pd.r_cd;
            let u = pd.u_cd;
            // R U reconstructs Q.
            let rec = [
                [r[0][0]*u[0][0] + r[0][1]*u[1][0], r[0][0]*u[0][1] + r[0][1]*u[1][1]],
                [r[1][0]*u[0][0] + r[1][1]*u[1][0], r[1][0]*u[0][1] + r[1][1]*u[1][1]],
            ];
            prop_assert!((rec[0][0]-p.q11).abs() < 1e-9 && (rec[0][1]-p.q12).abs() < 1e-9);
            prop_assert!((rec[1][0]-p.q21).abs() < 1e-9 && (rec[1][1]-p.q22).abs() < 1e-9);
            // Orthogonality.
            prop_assert!((r[0][0]*r[0][0] + r[1][0]*r[1][0] - 1.0).abs() < 1e-9);
            prop_assert!((r[0][0]*r[0][1] + r[1][0]*r[1][1]).abs() < 1e-9);
            // Positive ascending eigenvalues matching the independent SVD oracle.
            prop_assert!(pd.lambda1 > 0.0 && pd.lambda1 <= pd.lambda2);
            let (s1, s2) = svd2_singular_values(&p);
            prop_assert!((pd.lambda1 - s1).abs() < 1e-9 && (pd.lambda2 - s2).abs() < 1e-9);
        }

        /// Translating both configurations leaves Q untouched and shifts D.
        #[test]
        fn translation_invariance(t0 in arb_triangle(), tc in arb_triangle(), shift in arb_point(30.0)) {
            let base = solve_deformation(&t0, &tc).unwrap();
            let moved = solve_deformation(&t0.translated(shift), &tc.translated(shift)).unwrap();
            prop_assert!((base.q11 - moved.q11).abs() < 1e-9);
            prop_assert!((base.q12 - moved.q12).abs() < 1e-9);
            prop_assert!((base.q21 - moved.q21).abs() < 1e-9);
            prop_assert!((base.q22 - moved.q22).abs() < 1e-9);
            // D shifts by (I - Q) * shift.
            let dx = shift.x - (base.q11 * shift.x + base.q12 * shift.y);
            let dy = shift.y - (base.q21 * shift.x + base.q22 * shift.y);
            prop_assert!((moved.d1 - base.d1 - dx).abs() < 1e-8);
            prop_assert!((moved.d2 - base.d2 - dy).abs() < 1e-8);
        }

        /// Weights computed once at t0 keep reconstructing the follower under
        /// every subsequent configuration.
        #[test]
        fn weight_time_invariance(t0 in arb_triangle(), r0 in arb_point(50.0), configs in proptest::collection::vec(arb_triangle(), 1..4)) {
            let w = barycentric_weights(&t0, r0).unwrap();
            for tc in &configs {
                let params = solve_deformation(&t0, tc).unwrap();
                let want = apply_deformation(&params, r0);
                let got = follower_position(&w, tc);
                prop_assert!(got.dist(want) < 1e-9);
            }
        }
    }
}
