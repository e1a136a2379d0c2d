//! Cascaded tracking controller.
//!
//! The outer loop turns position/velocity error plus acceleration feedforward
//! into a fictitious acceleration demand `U`. Setpoint extraction converts
//! the gravity-compensated demand `U' = U + g e3` into a thrust magnitude and
//! the roll/pitch angles whose body vertical axis points along `U'`; the
//! extraction is the exact inverse of the thrust direction used by the
//! dynamics, so `F_d * k_b(roll_d, pitch_d, yaw)` reconstructs `U'`. Inner PD
//! loops drive the thrust and attitude double integrators to those setpoints;
//! yaw tracks its own reference independently.
//!
//! Gravity compensation matters: without it a zero demand would command zero
//! thrust and the vehicle could never hover.

use crate::dynamics::{ControlInput, QuadState, VehicleParams};
use crate::trajectory::DesiredState;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Demands shorter than this, or with non-positive vertical component, have
/// no attitude solution.
pub const THRUST_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("thrust demand ({u1:.3}, {u2:.3}, {u3:.3}) m/s^2 has no attitude solution")]
    ThrustSingularity { u1: f64, u2: f64, u3: f64 },
}

/// Controller gains. Outer loop: `gamma1` on velocity error (1/s), `gamma2`
/// on position error (1/s^2). Inner loops: PD pairs per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub gamma1: f64,
    pub gamma2: f64,
    pub k_thrust: f64,
    pub k_thrust_rate: f64,
    pub k_roll: f64,
    pub k_roll_rate: f64,
    pub k_pitch: f64,
    pub k_pitch_rate: f64,
    pub k_yaw: f64,
    pub k_yaw_rate: f64,
}

impl Default for Gains {
    /// Critically damped outer loop at 1 rad/s; inner channels critically
    /// damped at five times that.
    fn default() -> Self {
        Gains {
            gamma1: 2.0,
            gamma2: 1.0,
            k_thrust: 25.0,
            k_thrust_rate: 10.0,
            k_roll: 25.0,
            k_roll_rate: 10.0,
            k_pitch: 25.0,
            k_pitch_rate: 10.0,
            k_yaw: 25.0,
            k_yaw_rate: 10.0,
        }
    }
}

/// Thrust magnitude and attitude setpoints produced by the extraction step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoints {
    /// Desired thrust per unit mass, m/s^2. Always positive.
    pub thrust: f64,
    pub roll: f64,
    pub pitch: f64,
}

/// Yaw trajectory to track; defaults to a constant zero heading.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct YawReference {
    pub yaw: f64,
    pub rate: f64,
    pub accel: f64,
}

/// Fictitious acceleration demand:
/// `U = acc_ref + gamma1 (vel_ref - vel) + gamma2 (pos_ref - pos)`.
pub fn outer_loop(state: &QuadState, desired: &DesiredState, gains: &Gains) -> [f64; 3] {
    let mut u = [0.0; 3];
    for (axis, demand) in u.iter_mut().enumerate() {
        *demand = desired.acceleration[axis]
            + gains.gamma1 * (desired.velocity[axis] - state.vel[axis])
            + gains.gamma2 * (desired.position[axis] - state.pos[axis]);
    }
    u
}

/// Convert the demand `U` into thrust/roll/pitch setpoints at the current yaw.
///
/// Operates on `U' = U + g e3`. Roll comes from the component of `U'`
/// orthogonal to the heading, pitch from the in-heading component over the
/// vertical one; both are recovered so the thrust vector reproduces `U'`
/// exactly.
pub fn extract_setpoints(
    u: [f64; 3],
    yaw: f64,
    params: &VehicleParams,
) -> Result<Setpoints, ControlError> {
    let up = [u[0], u[1], u[2] + params.gravity];
    let norm = (up[0] * up[0] + up[1] * up[1] + up[2] * up[2]).sqrt();
    if norm < THRUST_TOL || up[2] <= THRUST_TOL {
        return Err(ControlError::ThrustSingularity {
            u1: up[0],
            u2: up[1],
            u3: up[2],
        });
    }
    let (sp, cp) = yaw.sin_cos();
    let roll = ((up[0] * sp - up[1] * cp) / norm).asin();
    let pitch = (up[0] * cp + up[1] * sp).atan2(up[2]);
    Ok(Setpoints {
        thrust: norm,
        roll,
        pitch,
    })
}

/// PD laws on the thrust, roll and pitch double integrators.
pub fn inner_loop(state: &QuadState, sp: &Setpoints, gains: &Gains) -> (f64, f64, f64) {
    (
        -gains.k_thrust_rate * state.thrust_rate + gains.k_thrust * (sp.thrust - state.thrust),
        -gains.k_roll_rate * state.roll_rate + gains.k_roll * (sp.roll - state.roll),
        -gains.k_pitch_rate * state.pitch_rate + gains.k_pitch * (sp.pitch - state.pitch),
    )
}

/// Yaw tracking law; in closed loop the error obeys
/// `e_ddot + k_rate e_dot + k e = 0`.
pub fn yaw_control(state: &QuadState, reference: &YawReference, gains: &Gains) -> f64 {
    reference.accel
        + gains.k_yaw_rate * (reference.rate - state.yaw_rate)
        + gains.k_yaw * (reference.yaw - state.yaw)
}

/// One full controller evaluation: outer loop, setpoint extraction, inner
/// loops and yaw law.
pub fn control_step(
    state: &QuadState,
    desired: &DesiredState,
    yaw_ref: &YawReference,
    gains: &Gains,
    params: &VehicleParams,
) -> Result<ControlInput, ControlError> {
    let u = outer_loop(state, desired, gains);
    let sp = extract_setpoints(u, state.yaw, params)?;
    let (u_thrust, u_roll, u_pitch) = inner_loop(state, &sp, gains);
    Ok(ControlInput {
        u_thrust,
        u_roll,
        u_pitch,
        u_yaw: yaw_control(state, yaw_ref, gains),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_step, thrust_direction};
    use proptest::prelude::*;

    const G: f64 = 9.81;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    fn static_desired(pos: [f64; 3]) -> DesiredState {
        DesiredState {
            position: pos,
            velocity: [0.0; 3],
            acceleration: [0.0; 3],
        }
    }

    #[test]
    fn outer_loop_cases() {
        let gains = Gains::default();
        let s = QuadState::hover([1.0, 2.0, 3.0], &params());
        // Perfect tracking of a static reference.
        let u = outer_loop(&s, &static_desired([1.0, 2.0, 3.0]), &gains);
        assert_eq!(u, [0.0; 3]);
        // Perfect tracking of an accelerating reference passes it through.
        let d = DesiredState {
            position: [1.0, 2.0, 3.0],
            velocity: [0.0; 3],
            acceleration: [0.4, -0.2, 0.0],
        };
        assert_eq!(outer_loop(&s, &d, &gains), [0.4, -0.2, 0.0]);
        // Pure position error scaled by gamma2.
        let mut g = gains;
        g.gamma2 = 4.0;
        let u = outer_loop(&s, &static_desired([2.0, 2.0, 3.0]), &g);
        assert_eq!(u, [4.0, 0.0, 0.0]);
    }

    #[test]
    fn outer_loop_translation_invariant() {
        let gains = Gains::default();
        let mut s = QuadState::hover([1.0, -2.0, 5.0], &params());
        s.vel = [0.3, 0.0, -0.1];
        let d = static_desired([2.0, 0.0, 5.5]);
        let base = outer_loop(&s, &d, &gains);
        let shift = [10.0, -4.0, 2.0];
        let mut s2 = s;
        let mut d2 = d;
        for (a, sh) in shift.iter().enumerate() {
            s2.pos[a] += sh;
            d2.position[a] += sh;
        }
        let moved = outer_loop(&s2, &d2, &gains);
        for a in 0..3 {
            assert!((base[a] - moved[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn hover_setpoints() {
        let sp = extract_setpoints([0.0; 3], 0.0, &params()).unwrap();
        assert!((sp.thrust - G).abs() < 1e-12);
        assert_eq!(sp.roll, 0.0);
        assert_eq!(sp.pitch, 0.0);
    }

    #[test]
    fn forward_demand_pitches() {
        let a = 2.0;
        let sp = extract_setpoints([a, 0.0, 0.0], 0.0, &params()).unwrap();
        assert!((sp.thrust - (a * a + G * G).sqrt()).abs() < 1e-12);
        assert!(sp.roll.abs() < 1e-12);
        assert!((sp.pitch - (a / G).atan()).abs() < 1e-12);
        // The resulting thrust vector reproduces the compensated demand.
        let k = thrust_direction(sp.roll, sp.pitch, 0.0);
        assert!((sp.thrust * k[0] - a).abs() < 1e-9);
        assert!((sp.thrust * k[1]).abs() < 1e-9);
        assert!((sp.thrust * k[2] - G).abs() < 1e-9);
    }

    #[test]
    fn lateral_demand_rolls() {
        let a = 2.0;
        let sp = extract_setpoints([0.0, a, 0.0], 0.0, &params()).unwrap();
        let norm = (a * a + G * G).sqrt();
        // Negative roll tilts the thrust towards +y under this attitude
        // convention (thrust y-component is -sin(roll) at zero yaw/pitch).
        assert!((sp.roll - (-(a / norm).asin())).abs() < 1e-12);
        assert!(sp.pitch.abs() < 1e-12);
        let k = thrust_direction(sp.roll, sp.pitch, 0.0);
        assert!((sp.thrust * k[1] - a).abs() < 1e-9);
        assert!((sp.thrust * k[2] - G).abs() < 1e-9);
    }

    #[test]
    fn thrust_singularity_rejected() {
        assert!(matches!(
            extract_setpoints([0.0, 0.0, -G], 0.0, &params()),
            Err(ControlError::ThrustSingularity { .. })
        ));
        assert!(extract_setpoints([1.0, 0.0, -2.0 * G], 0.0, &params()).is_err());
    }

    #[test]
    fn inner_loop_cases() {
        let gains = Gains::default();
        let s = QuadState::hover([0.0; 3], &params());
        let sp = Setpoints {
            thrust: G,
            roll: 0.0,
            pitch: 0.0,
        };
        assert_eq!(inner_loop(&s, &sp, &gains), (0.0, 0.0, 0.0));

        let mut g = gains;
        g.k_thrust = 9.0;
        let low = Setpoints {
            thrust: G + 1.0,
            roll: 0.0,
            pitch: 0.0,
        };
        let (ut, _, _) = inner_loop(&s, &low, &g);
        assert!((ut - 9.0).abs() < 1e-12);
    }

    #[test]
    fn inner_channels_critically_damped() {
        // s^2 + k_rate s + k_pos with the default pairs has a non-negative
        // discriminant, i.e. no oscillatory poles.
        let g = Gains::default();
        for (kp, kr) in [
            (g.k_thrust, g.k_thrust_rate),
            (g.k_roll, g.k_roll_rate),
            (g.k_pitch, g.k_pitch_rate),
            (g.k_yaw, g.k_yaw_rate),
        ] {
            assert!(kr * kr >= 4.0 * kp, "k_rate^2 = {} < 4 k_pos = {}", kr * kr, 4.0 * kp);
        }
    }

    #[test]
    fn yaw_law_cases() {
        let gains = Gains::default();
        let s = QuadState::hover([0.0; 3], &params());
        // At the reference with matched rates the command is the feedforward.
        let r = YawReference {
            yaw: 0.0,
            rate: 0.0,
            accel: 0.7,
        };
        assert_eq!(yaw_control(&s, &r, &gains), 0.7);

        let mut g = gains;
        g.k_yaw = 4.0;
        g.k_yaw_rate = 1.0;
        let r = YawReference {
            yaw: 0.1,
            rate: 0.0,
            accel: 0.0,
        };
        assert!((yaw_control(&s, &r, &g) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn yaw_step_overshoot_matches_second_order_theory() {
        // k_yaw = 4, k_yaw_rate = 2: omega = 2 rad/s, zeta = 0.5, predicted
        // overshoot exp(-pi zeta / sqrt(1 - zeta^2)) ~ 16.30 %.
        let gains = Gains {
            k_yaw: 4.0,
            k_yaw_rate: 2.0,
            ..Gains::default()
        };
        let p = params();
        let mut s = QuadState::hover([0.0; 3], &p);
        let reference = YawReference {
            yaw: 1.0,
            rate: 0.0,
            accel: 0.0,
        };
        let h = 1e-3;
        let mut peak: f64 = 0.0;
        for _ in 0..10_000 {
            let u = ControlInput {
                u_yaw: yaw_control(&s, &reference, &gains),
                ..Default::default()
            };
            s = integrate_step(&s, &u, h, &p).unwrap();
            peak = peak.max(s.yaw);
        }
        let zeta: f64 = 0.5;
        let predicted = 1.0 + (-std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
        assert!(
            (peak - predicted).abs() < 2e-3,
            "peak {peak:.5} vs predicted {predicted:.5}"
        );
        // And it converges.
        assert!((s.yaw - 1.0).abs() < 1e-3);
    }

    #[test]
    fn hover_control_step_is_silent() {
        let p = params();
        let s = QuadState::hover([3.0, -1.0, 10.0], &p);
        let u = control_step(
            &s,
            &static_desired([3.0, -1.0, 10.0]),
            &YawReference::default(),
            &Gains::default(),
            &p,
        )
        .unwrap();
        for v in [u.u_thrust, u.u_roll, u.u_pitch, u.u_yaw] {
            assert!(v.abs() <= 1e-12);
        }
    }

    #[test]
    fn reduced_model_error_decays_as_predicted() {
        // With the inner loop assumed perfect (acceleration equals the
        // demand), the tracking error obeys e'' + gamma1 e' + gamma2 e = 0.
        // Defaults are critically damped at 1 rad/s: e(t) = (1 + t) exp(-t).
        let gains = Gains::default();
        let mut e = 1.0;
        let mut edot = 0.0;
        let h = 1e-3;
        let deriv = |e: f64, edot: f64| (edot, -gains.gamma1 * edot - gains.gamma2 * e);
        for step in 1..=5_000 {
            let (k1e, k1v) = deriv(e, edot);
            let (k2e, k2v) = deriv(e + 0.5 * h * k1e, edot + 0.5 * h * k1v);
            let (k3e, k3v) = deriv(e + 0.5 * h * k2e, edot + 0.5 * h * k2v);
            let (k4e, k4v) = deriv(e + h * k3e, edot + h * k3v);
            e += h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
            edot += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            let t = step as f64 * h;
            let predicted = (1.0 + t) * (-t).exp();
            assert!((e - predicted).abs() < 1e-9, "t={t}: {e} vs {predicted}");
        }
    }

    #[test]
    fn step_reference_converges_without_steady_state_error() {
        let p = params();
        let gains = Gains::default();
        let mut s = QuadState::hover([0.0; 3], &p);
        let d = static_desired([0.5, 0.0, 0.0]);
        let h = 0.01;
        for _ in 0..4_000 {
            let u = control_step(&s, &d, &YawReference::default(), &gains, &p).unwrap();
            s = integrate_step(&s, &u, h, &p).unwrap();
        }
        assert!((s.pos[0] - 0.5).abs() < 1e-3, "x = {}", s.pos[0]);
        assert!(s.vel[0].abs() < 1e-3);
        assert!((s.thrust - G).abs() < 1e-3);
    }

    proptest! {
        /// Round trip: the extracted setpoints always reproduce the
        /// gravity-compensated demand through the dynamics' thrust direction.
        #[test]
        fn setpoint_extraction_round_trip(
            u1 in -5.0..5.0f64,
            u2 in -5.0..5.0f64,
            u3 in -5.0..5.0f64,
            yaw in -3.0..3.0f64,
        ) {
            let p = params();
            let up3 = u3 + p.gravity;
            prop_assume!(up3 > 0.1);
            let sp = extract_setpoints([u1, u2, u3], yaw, &p).unwrap();
            let k = thrust_direction(sp.roll, sp.pitch, yaw);
            prop_assert!((sp.thrust * k[0] - u1).abs() < 1e-9);
            prop_assert!((sp.thrust * k[1] - u2).abs() < 1e-9);
            prop_assert!((sp.thrust * k[2] - up3).abs() < 1e-9);
            prop_assert!(sp.thrust > 0.0);
            prop_assert!(sp.roll.abs() < std::f64::consts::FRAC_PI_2);
            prop_assert!(sp.pitch.abs() < std::f64::consts::FRAC_PI_2);
        }
    }
}
