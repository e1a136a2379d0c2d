//! C2-continuous desired trajectories from a leader plan.
//!
//! Leaders move on straight lines between consecutive plan waypoints, blended
//! by a quintic progress function `beta` with `beta(0) = 0`, `beta(dt) = 1`
//! and vanishing first and second derivatives at both ends, so position,
//! velocity and acceleration are all continuous across waypoint junctions
//! (velocity and acceleration are zero there). Followers are fixed
//! barycentric combinations of the three leaders, so their trajectories
//! inherit the same smoothness by linearity.

use crate::geometry::{
    barycentric_weights, polar_decompose, solve_deformation, BarycentricWeights, GeometryError,
    Point2, TriangleConfig,
};
use crate::planner::LeaderPlan;
use crate::safety::collision_constraint;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("local time {tau:.6} s outside the segment [0, {dt:.6}] s")]
    OutOfSegment { tau: f64, dt: f64 },
    #[error("time {t:.6} s outside the mission horizon [0, {horizon:.6}] s")]
    OutOfHorizon { t: f64, horizon: f64 },
}

/// Quintic progress polynomial over one segment of duration `dt`:
/// `beta(tau) = sum_i coeffs[i] * tau^(5-i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticSegment {
    pub coeffs: [f64; 6],
    pub dt: f64,
}

/// Solve the boundary-condition system for one segment.
///
/// The six conditions (`beta` 0 -> 1, first and second derivatives zero at
/// both ends) admit the closed-form solution `6 s^5 - 15 s^4 + 10 s^3` in the
/// normalized time `s = tau / dt`, expanded here into monomial coefficients.
pub fn quintic_coeffs(dt: f64) -> QuinticSegment {
    debug_assert!(dt > 0.0);
    QuinticSegment {
        coeffs: [
            6.0 / dt.powi(5),
            -15.0 / dt.powi(4),
            10.0 / dt.powi(3),
            0.0,
            0.0,
            0.0,
        ],
        dt,
    }
}

impl QuinticSegment {
    /// Evaluate `(beta, beta_dot, beta_ddot)` at local time `tau`.
    pub fn beta_eval(&self, tau: f64) -> Result<(f64, f64, f64), TrajectoryError> {
        if !(0.0..=self.dt).contains(&tau) {
            return Err(TrajectoryError::OutOfSegment { tau, dt: self.dt });
        }
        let a = &self.coeffs;
        let beta = ((((a[0] * tau + a[1]) * tau + a[2]) * tau + a[3]) * tau + a[4]) * tau + a[5];
        let dbeta = (((5.0 * a[0] * tau + 4.0 * a[1]) * tau + 3.0 * a[2]) * tau + 2.0 * a[3]) * tau
            + a[4];
        let ddbeta = ((20.0 * a[0] * tau + 12.0 * a[1]) * tau + 6.0 * a[2]) * tau + 2.0 * a[3];
        Ok((beta, dbeta, ddbeta))
    }
}

/// Desired kinematic state of one agent: position at the shared altitude,
/// with planar velocity and acceleration (z rates are identically zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredState {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub acceleration: [f64; 3],
}

/// One sample of the deformation history relative to the initial
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationSample {
    pub t: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub c_col: f64,
}

/// A leader plan plus everything needed to evaluate the whole fleet's desired
/// trajectories: per-follower weights (computed once, at the initial
/// configuration) and the shared altitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmTrajectory {
    pub plan: LeaderPlan,
    pub weights: Vec<BarycentricWeights>,
    pub z_ht: f64,
    segment: QuinticSegment,
}

impl SwarmTrajectory {
    pub fn new(
        plan: LeaderPlan,
        followers0: &[Point2],
        z_ht: f64,
    ) -> Result<Self, GeometryError> {
        assert!(!plan.waypoints.is_empty(), "plan must hold at least one waypoint");
        let t0 = plan.waypoints[0];
        let weights = followers0
            .iter()
            .map(|f| barycentric_weights(&t0, *f))
            .collect::<Result<Vec<_>, _>>()?;
        let segment = quintic_coeffs(plan.dt.max(f64::MIN_POSITIVE));
        Ok(SwarmTrajectory {
            plan,
            weights,
            z_ht,
            segment,
        })
    }

    /// Leaders plus followers.
    pub fn agent_count(&self) -> usize {
        3 + self.weights.len()
    }

    pub fn horizon(&self) -> f64 {
        self.plan.horizon()
    }

    /// Segment index and local time for mission time `t`; the final instant
    /// maps onto the end of the last segment.
    fn locate(&self, t: f64) -> Result<(usize, f64), TrajectoryError> {
        let horizon = self.horizon();
        if t < 0.0 || t > horizon + 1e-9 {
            return Err(TrajectoryError::OutOfHorizon { t, horizon });
        }
        if self.plan.segments() == 0 {
            return Ok((0, 0.0));
        }
        let k = ((t / self.plan.dt).floor() as usize).min(self.plan.segments() - 1);
        Ok((k, t - self.plan.timestamp(k)))
    }

    /// Desired state of leader `l` (0-based) at mission time `t`.
    pub fn leader_desired(&self, l: usize, t: f64) -> Result<DesiredState, TrajectoryError> {
        let (k, tau) = self.locate(t)?;
        if self.plan.segments() == 0 {
            let p = self.plan.waypoints[0].vertices()[l];
            return Ok(DesiredState {
                position: [p.x, p.y, self.z_ht],
                velocity: [0.0; 3],
                acceleration: [0.0; 3],
            });
        }
        let (beta, dbeta, ddbeta) = self.segment.beta_eval(tau.min(self.segment.dt))?;
        let pc = self.plan.waypoints[k].vertices()[l];
        let pn = self.plan.waypoints[k + 1].vertices()[l];
        let delta = pn - pc;
        Ok(DesiredState {
            position: [
                (1.0 - beta) * pc.x + beta * pn.x,
                (1.0 - beta) * pc.y + beta * pn.y,
                self.z_ht,
            ],
            velocity: [dbeta * delta.x, dbeta * delta.y, 0.0],
            acceleration: [ddbeta * delta.x, ddbeta * delta.y, 0.0],
        })
    }

    /// Desired state of follower `i` (0-based into the follower list).
    pub fn follower_desired(&self, i: usize, t: f64) -> Result<DesiredState, TrajectoryError> {
        let w = self.weights[i];
        let l1 = self.leader_desired(0, t)?;
        let l2 = self.leader_desired(1, t)?;
        let l3 = self.leader_desired(2, t)?;
        let mix = |f: fn(&DesiredState) -> [f64; 3]| {
            let (a, b, c) = (f(&l1), f(&l2), f(&l3));
            [
                w.a1 * a[0] + w.a2 * b[0] + w.a3 * c[0],
                w.a1 * a[1] + w.a2 * b[1] + w.a3 * c[1],
                w.a1 * a[2] + w.a2 * b[2] + w.a3 * c[2],
            ]
        };
        Ok(DesiredState {
            position: mix(|s| s.position),
            velocity: mix(|s| s.velocity),
            acceleration: mix(|s| s.acceleration),
        })
    }

    /// Desired state of fleet member `idx`: 0..3 are leaders, the rest followers.
    pub fn agent_desired(&self, idx: usize, t: f64) -> Result<DesiredState, TrajectoryError> {
        if idx < 3 {
            self.leader_desired(idx, t)
        } else {
            self.follower_desired(idx - 3, t)
        }
    }

    /// Instantaneous leader configuration at time `t`.
    pub fn config_at(&self, t: f64) -> Result<TriangleConfig, TrajectoryError> {
        let l1 = self.leader_desired(0, t)?.position;
        let l2 = self.leader_desired(1, t)?.position;
        let l3 = self.leader_desired(2, t)?.position;
        Ok(TriangleConfig::new(
            Point2::new(l1[0], l1[1]),
            Point2::new(l2[0], l2[1]),
            Point2::new(l3[0], l3[1]),
        ))
    }

    /// Sample the stretch eigenvalues and the collision-certificate scalar of
    /// the deformation relative to the initial configuration, every
    /// `sample_dt` seconds across the horizon (endpoints included).
    pub fn deformation_series(&self, sample_dt: f64, lambda_cd_min: f64) -> Vec<DeformationSample> {
        assert!(sample_dt > 0.0);
        let t0 = self.plan.waypoints[0];
        let horizon = self.horizon();
        let steps = (horizon / sample_dt).round() as usize;
        let mut out = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            let t = (i as f64 * sample_dt).min(horizon);
            let tc = self.config_at(t).expect("sample inside horizon");
            // The initial configuration is non-degenerate, so the solve and
            // factorization cannot fail along a continuous deformation of it.
            let params = solve_deformation(&t0, &tc).expect("non-degenerate basis");
            match polar_decompose(&params) {
                Ok(pd) => out.push(DeformationSample {
                    t,
                    lambda1: pd.lambda1,
                    lambda2: pd.lambda2,
                    c_col: collision_constraint(&pd, lambda_cd_min),
                }),
                Err(_) => out.push(DeformationSample {
                    t,
                    lambda1: 0.0,
                    lambda2: 0.0,
                    c_col: lambda_cd_min,
                }),
            }
        }
        out
    }
}
