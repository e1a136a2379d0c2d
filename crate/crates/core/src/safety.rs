//! Collision-avoidance certificate for the deforming formation.
//!
//! Safety reduces to one scalar per candidate configuration. From the initial
//! formation we take the minimum pairwise separation `d_s` and the minimum
//! follower-to-side distance `d_b`. With every vehicle enclosed by a ball of
//! radius `epsilon` and tracking deviations bounded by `delta`, the budget
//!
//! ```text
//! delta_max = min{ (d_s - 2 eps) / 2,  d_b - eps }
//! lambda_cd_min = (delta + eps) / (delta_max + eps)
//! ```
//!
//! certifies the whole fleet: as long as the minimum stretch `lambda1` of the
//! deformation (relative to the initial configuration) never drops below
//! `lambda_cd_min`, no two vehicles can approach closer than `2 eps` and every
//! follower stays inside the leading triangle. The planner checks the scalar
//! constraint `c = lambda_cd_min - lambda1 <= 0` at each candidate waypoint;
//! the simulator re-samples it densely along the blended trajectory.

use crate::environment::{Environment, Rect};
use crate::geometry::{
    point_segment_distance, polar_decompose, segment_segment_distance,
    solve_deformation, triangle_rank_ok, PolarDecomp, Point2, TriangleConfig, AREA_EPSILON,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack applied to the collision constraint so that exact-rigid moves
/// reconstructed through the linear solver (lambda = 1 minus rounding) are
/// not spuriously rejected when `lambda_cd_min = 1`.
pub const C_COL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SafetyError {
    #[error("agent {index} at ({x:.3}, {y:.3}) lies outside the initial leading triangle")]
    AgentOutsideTriangle { index: usize, x: f64, y: f64 },
    #[error("need at least two agents to define a separation margin")]
    TooFewAgents,
    #[error(
        "infeasible margins: d_s = {d_s:.3} m, d_b = {d_b:.3} m leave no deviation budget at epsilon = {epsilon:.3} m"
    )]
    InfeasibleMargins { d_s: f64, d_b: f64, epsilon: f64 },
    #[error("deviation bound delta = {delta:.3} m exceeds delta_max = {delta_max:.3} m")]
    DeltaExceedsMax { delta: f64, delta_max: f64 },
    #[error("deviation bound delta = {delta:.3} m is negative")]
    NegativeDelta { delta: f64 },
}

/// Scenario safety budget. Constructed through [`SafetyMargins::new`] so the
/// invariants (`d_s > 2 eps`, `d_b > eps`, `0 <= delta <= delta_max`) always hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyMargins {
    /// Vehicle enclosing-ball radius, m.
    pub epsilon: f64,
    /// Minimum initial pairwise separation, m.
    pub d_s: f64,
    /// Minimum initial follower distance to the triangle sides, m.
    pub d_b: f64,
    /// Assumed bound on tracking deviation, m.
    pub delta: f64,
    /// Largest admissible deviation bound, m.
    pub delta_max: f64,
    /// Minimum admissible stretch of the deformation.
    pub lambda_cd_min: f64,
}

impl SafetyMargins {
    pub fn new(epsilon: f64, d_s: f64, d_b: f64, delta: f64) -> Result<Self, SafetyError> {
        if delta < 0.0 {
            return Err(SafetyError::NegativeDelta { delta });
        }
        let dmax = delta_max(d_s, d_b, epsilon)?;
        let lmin = lambda_cd_min(delta, epsilon, dmax)?;
        Ok(SafetyMargins {
            epsilon,
            d_s,
            d_b,
            delta,
            delta_max: dmax,
            lambda_cd_min: lmin,
        })
    }

    /// Margins measured from an initial formation.
    pub fn from_formation(
        t0: &TriangleConfig,
        followers: &[Point2],
        epsilon: f64,
        delta: f64,
    ) -> Result<Self, SafetyError> {
        let (d_s, d_b) = initial_margins(t0, followers)?;
        Self::new(epsilon, d_s, d_b, delta)
    }
}

/// Measure `(d_s, d_b)` on the initial formation.
///
/// `followers` are the agents strictly inside (or on) the triangle; the three
/// leaders sit at its vertices. Separation `d_s` is the minimum pairwise
/// distance over leaders and followers together; the side distance `d_b` is
/// taken over followers only, since the leaders *are* the triangle.
pub fn initial_margins(
    t0: &TriangleConfig,
    followers: &[Point2],
) -> Result<(f64, f64), SafetyError> {
    if followers.len() + 3 < 2 {
        return Err(SafetyError::TooFewAgents);
    }
    for (i, f) in followers.iter().enumerate() {
        if !crate::geometry::triangle_contains(t0, *f, 1e-9) {
            return Err(SafetyError::AgentOutsideTriangle {
                index: i,
                x: f.x,
                y: f.y,
            });
        }
    }

    let mut agents: Vec<Point2> = t0.vertices().to_vec();
    agents.extend_from_slice(followers);
    if agents.len() < 2 {
        return Err(SafetyError::TooFewAgents);
    }

    let mut d_s = f64::INFINITY;
    for i in 0..agents.len() {
        for j in (i + 1)..agents.len() {
            d_s = d_s.min(agents[i].dist(agents[j]));
        }
    }

    let mut d_b = f64::INFINITY;
    for f in followers {
        for (a, b) in t0.sides() {
            d_b = d_b.min(point_segment_distance(*f, a, b));
        }
    }

    Ok((d_s, d_b))
}

/// Deviation budget `min{ (d_s - 2 eps)/2, d_b - eps }`.
pub fn delta_max(d_s: f64, d_b: f64, epsilon: f64) -> Result<f64, SafetyError> {
    let v = (0.5 * (d_s - 2.0 * epsilon)).min(d_b - epsilon);
    if v <= 0.0 {
        return Err(SafetyError::InfeasibleMargins { d_s, d_b, epsilon });
    }
    Ok(v)
}

/// Minimum admissible stretch `(delta + eps) / (delta_max + eps)`, in (0, 1].
pub fn lambda_cd_min(delta: f64, epsilon: f64, delta_max: f64) -> Result<f64, SafetyError> {
    if delta > delta_max {
        return Err(SafetyError::DeltaExceedsMax { delta, delta_max });
    }
    Ok((delta + epsilon) / (delta_max + epsilon))
}

/// The certificate scalar `lambda_cd_min - lambda1`; values `<= 0` are safe.
pub fn collision_constraint(pd: &PolarDecomp, lambda_cd_min: f64) -> f64 {
    lambda_cd_min - pd.lambda1
}

/// Exact distance between a triangle and a rectangle (0 on any overlap).
fn triangle_rect_distance(tc: &TriangleConfig, rect: &Rect) -> f64 {
    if tc.vertices().iter().any(|v| rect.contains(*v)) {
        return 0.0;
    }
    if rect
        .corners()
        .iter()
        .any(|c| crate::geometry::triangle_contains(tc, *c, 0.0))
    {
        return 0.0;
    }
    let mut d = f64::INFINITY;
    for (a, b) in tc.sides() {
        for (p, q) in rect.edges() {
            d = d.min(segment_segment_distance(a, b, p, q));
        }
    }
    d
}

/// True iff the triangle inflated outward by `inflation` stays clear of every
/// no-fly zone and remains within the motion-space bounds.
///
/// Because the certificate keeps all followers inside the triangle and
/// tracking deviations within the inflation budget, clearing the inflated
/// triangle clears every vehicle; no per-agent zone test is needed.
pub fn triangle_clear(tc: &TriangleConfig, inflation: f64, env: &Environment) -> bool {
    for v in tc.vertices() {
        if v.x - inflation < env.bounds.min.x
            || v.x + inflation > env.bounds.max.x
            || v.y - inflation < env.bounds.min.y
            || v.y + inflation > env.bounds.max.y
        {
            return false;
        }
    }
    env.nfz
        .iter()
        .all(|zone| triangle_rect_distance(tc, zone) > inflation)
}

/// The full per-waypoint admissibility test: rank, collision certificate, and
/// zone clearance (with the clearance inflated by `epsilon + delta` so the
/// tracking budget cannot push a vehicle into a zone).
pub fn valid_deformation(
    t0: &TriangleConfig,
    tc_next: &TriangleConfig,
    margins: &SafetyMargins,
    env: &Environment,
) -> bool {
    if !triangle_rank_ok(tc_next, AREA_EPSILON) {
        return false;
    }
    if !triangle_clear(tc_next, margins.epsilon + margins.delta, env) {
        return false;
    }
    let Ok(params) = solve_deformation(t0, tc_next) else {
        return false;
    };
    let Ok(pd) = polar_decompose(&params) else {
        return false;
    };
    collision_constraint(&pd, margins.lambda_cd_min) <= C_COL_TOL
}
