//! Nonlinear vehicle model: translational dynamics driven by thrust along the
//! body vertical axis, with thrust magnitude and all three Euler angles
//! behaving as double integrators under the actuator inputs.
//!
//! The 14 states are position, velocity, thrust-per-mass, the Euler angles,
//! and the first derivatives of those last four. Mass never appears on its
//! own: all forces are normalized per unit mass.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("integration produced a non-finite state component")]
    NonFiniteState,
}

/// Gravity and optional actuator saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// m/s^2
    pub gravity: f64,
    /// Symmetric saturation bound applied to each input channel, if any.
    pub input_limit: Option<f64>,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            gravity: 9.81,
            input_limit: None,
        }
    }
}

/// Full 14-state vehicle state. Angles in radians, everything else SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadState {
    pub pos: [f64; 3],
    pub vel: [f64; 3],
    /// Thrust force per unit mass, m/s^2.
    pub thrust: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub thrust_rate: f64,
    pub roll_rate: f64,
    pub pitch_rate: f64,
    pub yaw_rate: f64,
}

impl QuadState {
    /// At rest at `pos`, thrust balancing gravity, level attitude.
    pub fn hover(pos: [f64; 3], params: &VehicleParams) -> Self {
        QuadState {
            pos,
            vel: [0.0; 3],
            thrust: params.gravity,
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
            thrust_rate: 0.0,
            roll_rate: 0.0,
            pitch_rate: 0.0,
            yaw_rate: 0.0,
        }
    }

    fn to_array(self) -> [f64; 14] {
        [
            self.pos[0],
            self.pos[1],
            self.pos[2],
            self.vel[0],
            self.vel[1],
            self.vel[2],
            self.thrust,
            self.roll,
            self.pitch,
            self.yaw,
            self.thrust_rate,
            self.roll_rate,
            self.pitch_rate,
            self.yaw_rate,
        ]
    }

    fn from_array(a: [f64; 14]) -> Self {
        QuadState {
            pos: [a[0], a[1], a[2]],
            vel: [a[3], a[4], a[5]],
            thrust: a[6],
            roll: a[7],
            pitch: a[8],
            yaw: a[9],
            thrust_rate: a[10],
            roll_rate: a[11],
            pitch_rate: a[12],
            yaw_rate: a[13],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Second derivatives commanded on the four actuator channels.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    /// m/s^4
    pub u_thrust: f64,
    /// rad/s^2
    pub u_roll: f64,
    pub u_pitch: f64,
    pub u_yaw: f64,
}

impl ControlInput {
    fn saturated(self, params: &VehicleParams) -> ControlInput {
        match params.input_limit {
            Some(l) => ControlInput {
                u_thrust: self.u_thrust.clamp(-l, l),
                u_roll: self.u_roll.clamp(-l, l),
                u_pitch: self.u_pitch.clamp(-l, l),
                u_yaw: self.u_yaw.clamp(-l, l),
            },
            None => self,
        }
    }
}

/// Ground-to-body direction cosine matrix for the roll-pitch-yaw angles.
/// Row `i` expresses body axis `i` in ground coordinates; in particular the
/// third row is the thrust direction.
pub fn rotation_matrix(roll: f64, pitch: f64, yaw: f64) -> [[f64; 3]; 3] {
    let (sf, cf) = roll.sin_cos();
    let (st, ct) = pitch.sin_cos();
    let (sp, cp) = yaw.sin_cos();
    [
        [ct * cp, ct * sp, -st],
        [sf * st * cp - cf * sp, sf * st * sp + cf * cp, sf * ct],
        [cf * st * cp + sf * sp, cf * st * sp - sf * cp, cf * ct],
    ]
}

/// Thrust direction in ground coordinates (third row of the DCM).
pub fn thrust_direction(roll: f64, pitch: f64, yaw: f64) -> [f64; 3] {
    let (sf, cf) = roll.sin_cos();
    let (st, ct) = pitch.sin_cos();
    let (sp, cp) = yaw.sin_cos();
    [cf * st * cp + sf * sp, cf * st * sp - sf * cp, cf * ct]
}

fn derivative_array(state: &[f64; 14], u: &ControlInput, params: &VehicleParams) -> [f64; 14] {
    let k = thrust_direction(state[7], state[8], state[9]);
    let ft = state[6];
    [
        state[3],
        state[4],
        state[5],
        ft * k[0],
        ft * k[1],
        ft * k[2] - params.gravity,
        state[10],
        state[11],
        state[12],
        state[13],
        u.u_thrust,
        u.u_roll,
        u.u_pitch,
        u.u_yaw,
    ]
}

/// Time derivative of the state under input `u`.
pub fn state_derivative(state: &QuadState, u: &ControlInput, params: &VehicleParams) -> QuadState {
    QuadState::from_array(derivative_array(&state.to_array(), &u.saturated(params), params))
}

/// One classical fourth-order Runge-Kutta step of length `h` with the input
/// held constant across the step.
pub fn integrate_step(
    state: &QuadState,
    u: &ControlInput,
    h: f64,
    params: &VehicleParams,
) -> Result<QuadState, DynamicsError> {
    debug_assert!(h > 0.0);
    let u = u.saturated(params);
    let y0 = state.to_array();

    let k1 = derivative_array(&y0, &u, params);
    let mut y = [0.0; 14];
    for i in 0..14 {
        y[i] = y0[i] + 0.5 * h * k1[i];
    }
    let k2 = derivative_array(&y, &u, params);
    for i in 0..14 {
        y[i] = y0[i] + 0.5 * h * k2[i];
    }
    let k3 = derivative_array(&y, &u, params);
    for i in 0..14 {
        y[i] = y0[i] + h * k3[i];
    }
    let k4 = derivative_array(&y, &u, params);

    let mut out = [0.0; 14];
    for i in 0..14 {
        out[i] = y0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let next = QuadState::from_array(out);
    if !next.is_finite() {
        return Err(DynamicsError::NonFiniteState);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 9.81;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn rotation_identity_and_yaw() {
        let r = rotation_matrix(0.0, 0.0, 0.0);
        for (i, row) in r.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-15);
            }
        }
        let r = rotation_matrix(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        assert!((r[0][0]).abs() < 1e-15 && (r[0][1] - 1.0).abs() < 1e-15 && r[0][2].abs() < 1e-15);
    }

    #[test]
    fn rotation_rows_orthonormal() {
        // A scatter of angle triples; RtR should be the identity to 1e-12.
        let angles = [
            (0.3, -0.7, 1.2),
            (-1.2, 0.4, -2.9),
            (0.01, 1.4, 3.0),
            (2.0, -1.5, 0.5),
        ];
        for (f, t, p) in angles {
            let r = rotation_matrix(f, t, p);
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12, "row {i} . row {j} = {dot}");
                }
            }
        }
    }

    #[test]
    fn hover_is_an_equilibrium() {
        let s = QuadState::hover([1.0, 2.0, 10.0], &params());
        let d = state_derivative(&s, &ControlInput::default(), &params());
        assert!(d.to_array().iter().all(|v| v.abs() < 1e-12));
        let next = integrate_step(&s, &ControlInput::default(), 0.37, &params()).unwrap();
        for (a, b) in next.to_array().iter().zip(s.to_array().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_thrust_free_fall() {
        let mut s = QuadState::hover([0.0, 0.0, 10.0], &params());
        s.thrust = 0.0;
        s.vel = [1.5, 0.0, 0.0];
        let d = state_derivative(&s, &ControlInput::default(), &params());
        assert_eq!(d.vel, [0.0, 0.0, -G]);

        // One-second ballistic drop; the linear subsystem integrates exactly.
        let next = integrate_step(&s, &ControlInput::default(), 1.0, &params()).unwrap();
        assert!((next.pos[2] - (10.0 - G / 2.0)).abs() < 1e-12);
        assert!((next.vel[2] + G).abs() < 1e-12);
        // Horizontal velocity untouched.
        assert!((next.vel[0] - 1.5).abs() < 1e-12);
        assert!((next.pos[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn small_pitch_tilts_thrust_forward() {
        let mut s = QuadState::hover([0.0; 3], &params());
        s.pitch = 0.01;
        let d = state_derivative(&s, &ControlInput::default(), &params());
        // v_x rate = thrust * sin(pitch) ~ g * pitch for small angles.
        assert!((d.vel[0] - G * s.pitch.sin()).abs() < 1e-12);
        assert!((d.vel[0] - G * 0.01).abs() < 1e-5);
        assert!(d.vel[1].abs() < 1e-15);
    }

    #[test]
    fn actuator_channels_integrate_exactly_for_constant_input() {
        // Double integrators under constant input are cubic-free: RK4 exact.
        let s = QuadState::hover([0.0; 3], &params());
        let u = ControlInput {
            u_thrust: 0.2,
            u_roll: -0.1,
            u_pitch: 0.05,
            u_yaw: 0.3,
        };
        let h = 0.25;
        let next = integrate_step(&s, &u, h, &params()).unwrap();
        assert!((next.thrust - (G + 0.5 * 0.2 * h * h)).abs() < 1e-12);
        assert!((next.roll_rate - -0.1 * h).abs() < 1e-12);
        assert!((next.pitch - 0.5 * 0.05 * h * h).abs() < 1e-12);
        assert!((next.yaw_rate - 0.3 * h).abs() < 1e-12);
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        // Rolling at constant rate makes the translational dynamics genuinely
        // nonlinear in time; compare against the closed-form solution
        // v_y(t) = F (cos wt - 1)/w, v_z(t) = (F sin wt)/w - g t.
        let omega = 0.8;
        let f_t = 2.0;
        let mut s = QuadState::hover([0.0; 3], &params());
        s.thrust = f_t;
        s.roll_rate = omega;

        let run = |h: f64| -> f64 {
            let mut state = s;
            let steps = (1.0 / h).round() as usize;
            for _ in 0..steps {
                state = integrate_step(&state, &ControlInput::default(), h, &params()).unwrap();
            }
            let t = 1.0;
            let vy = f_t * ((omega * t).cos() - 1.0) / omega;
            let vz = f_t * (omega * t).sin() / omega - G * t;
            ((state.vel[1] - vy).powi(2) + (state.vel[2] - vz).powi(2)).sqrt()
        };

        let e1 = run(0.02);
        let e2 = run(0.01);
        let ratio = e1 / e2;
        assert!(
            (10.0..24.0).contains(&ratio),
            "expected ~16x error reduction, got {ratio:.2} ({e1:.3e} -> {e2:.3e})"
        );
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let s = QuadState::hover([0.0; 3], &params());
        let u = ControlInput {
            u_thrust: f64::INFINITY,
            ..Default::default()
        };
        assert_eq!(
            integrate_step(&s, &u, 0.01, &params()),
            Err(DynamicsError::NonFiniteState)
        );
    }

    #[test]
    fn saturation_clamps_inputs() {
        let p = VehicleParams {
            gravity: G,
            input_limit: Some(1.0),
        };
        let s = QuadState::hover([0.0; 3], &p);
        let u = ControlInput {
            u_thrust: 50.0,
            ..Default::default()
        };
        let d = state_derivative(&s, &u, &p);
        assert_eq!(d.thrust_rate, 1.0);
        let next = integrate_step(&s, &u, 0.1, &p).unwrap();
        assert!((next.thrust_rate - 0.1).abs() < 1e-12); // limited to 1.0 m/s^4
    }
}
