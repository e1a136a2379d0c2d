//! Closed-loop mission execution.
//!
//! Every vehicle starts at (or, with a seeded perturbation, near) its desired
//! initial position in hover, then tracks its desired trajectory under the
//! cascaded controller and the full nonlinear dynamics. The loop is strictly
//! sequential over vehicles and steps, so a scenario and seed reproduce the
//! same log bit for bit.
//!
//! Alongside the state history the simulator records the safety quantities
//! the certificate reasons about: tracking deviations, fleet minimum pairwise
//! distance, the stretch eigenvalues and certificate scalar of the desired
//! deformation (sampled densely, not just at plan waypoints), no-fly-zone
//! hits, and accumulated human exposure.

use crate::control::{control_step, ControlError, Gains, YawReference};
use crate::dynamics::{integrate_step, QuadState, VehicleParams};
use crate::environment::Environment;
use crate::geometry::{polar_decompose, solve_deformation, Point2};
use crate::safety::{collision_constraint, SafetyMargins, C_COL_TOL};
use crate::trajectory::SwarmTrajectory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Pitch magnitude at which the run aborts; the attitude parametrization and
/// setpoint extraction are meaningless past vertical.
pub const PITCH_ABORT: f64 = std::f64::consts::FRAC_PI_2 - 1e-3;

/// Simulation schedule and reproducibility knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integration and control step, s.
    pub step: f64,
    /// Total simulated time; defaults to the plan horizon.
    pub duration: Option<f64>,
    /// Record every n-th step (the final step is always recorded).
    pub record_decimation: usize,
    pub seed: u64,
    /// Offset each initial position by a random vector of norm <= delta / 2.
    pub perturb_initial: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step: 0.01,
            duration: None,
            record_decimation: 10,
            seed: 0,
            perturb_initial: false,
        }
    }
}

/// Time series for one vehicle, sampled at the recorded instants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UavSeries {
    pub actual: Vec<[f64; 3]>,
    pub desired: Vec<[f64; 3]>,
    pub deviation: Vec<f64>,
}

/// Fleet-level metrics at one recorded instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetSample {
    pub min_pair_dist: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub c_col: f64,
    pub nfz_violation: bool,
    pub max_deviation: f64,
    /// Instantaneous sum of human-presence probability under the fleet.
    pub exposure_rate: f64,
}

/// Complete record of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimLog {
    pub times: Vec<f64>,
    pub uavs: Vec<UavSeries>,
    pub fleet: Vec<FleetSample>,
    /// Per-vehicle integral of human-presence probability over the run,
    /// accumulated at the integration rate regardless of decimation.
    pub exposure: Vec<f64>,
}

impl SimLog {
    pub fn max_deviation(&self) -> f64 {
        self.fleet.iter().map(|f| f.max_deviation).fold(0.0, f64::max)
    }

    /// Maximum deviation over samples at `t >= t_start`.
    pub fn max_deviation_after(&self, t_start: f64) -> f64 {
        self.times
            .iter()
            .zip(self.fleet.iter())
            .filter(|(t, _)| **t >= t_start)
            .map(|(_, f)| f.max_deviation)
            .fold(0.0, f64::max)
    }

    pub fn min_pair_distance(&self) -> f64 {
        self.fleet
            .iter()
            .map(|f| f.min_pair_dist)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_c_col(&self) -> f64 {
        self.fleet.iter().map(|f| f.c_col).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn any_nfz_violation(&self) -> bool {
        self.fleet.iter().any(|f| f.nfz_violation)
    }

    /// Write the log as CSV: `uavs.csv` (one row per sample per vehicle),
    /// `fleet.csv` and `exposure.csv`. Column schemas are documented in the
    /// project README; float formatting is the shortest round-trip form, so
    /// identical logs produce identical files.
    pub fn write_csv(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;

        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("uavs.csv"))?);
        writeln!(w, "t_s,uav,x_m,y_m,z_m,x_des_m,y_des_m,z_des_m,deviation_m")?;
        for (si, t) in self.times.iter().enumerate() {
            for (ui, series) in self.uavs.iter().enumerate() {
                let a = series.actual[si];
                let d = series.desired[si];
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{}",
                    t, ui, a[0], a[1], a[2], d[0], d[1], d[2], series.deviation[si]
                )?;
            }
        }

        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("fleet.csv"))?);
        writeln!(
            w,
            "t_s,min_pair_dist_m,lambda1,lambda2,c_col,nfz_violation,max_deviation_m,exposure_rate"
        )?;
        for (t, f) in self.times.iter().zip(self.fleet.iter()) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                t,
                f.min_pair_dist,
                f.lambda1,
                f.lambda2,
                f.c_col,
                f.nfz_violation as u8,
                f.max_deviation,
                f.exposure_rate
            )?;
        }

        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("exposure.csv"))?);
        writeln!(w, "uav,human_exposure_integral")?;
        for (ui, e) in self.exposure.iter().enumerate() {
            writeln!(w, "{},{}", ui, e)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimErrorKind {
    #[error("vehicle {uav} reached a non-finite state at t = {t:.3} s")]
    NonFiniteState { uav: usize, t: f64 },
    #[error("vehicle {uav} pitched to {pitch:.3} rad at t = {t:.3} s (gimbal lock)")]
    GimbalLock { uav: usize, t: f64, pitch: f64 },
    #[error("controller failed for vehicle {uav} at t = {t:.3} s: {source}")]
    ControlFailure {
        uav: usize,
        t: f64,
        source: ControlError,
    },
}

/// Abort diagnostic carrying everything recorded up to the failure.
#[derive(Debug, Error)]
#[error("simulation aborted: {kind}")]
pub struct SimFailure {
    pub kind: SimErrorKind,
    pub partial: SimLog,
}

/// Run the closed loop for the whole fleet.
///
/// On abort the error deliberately carries the partial log.
#[allow(clippy::result_large_err)]
pub fn run(
    env: &Environment,
    traj: &SwarmTrajectory,
    margins: &SafetyMargins,
    gains: &Gains,
    params: &VehicleParams,
    cfg: &SimConfig,
) -> Result<SimLog, SimFailure> {
    assert!(cfg.step > 0.0, "integration step must be positive");
    let n = traj.agent_count();
    let horizon = traj.horizon();
    let duration = cfg.duration.unwrap_or(horizon).max(0.0);
    let steps = (duration / cfg.step).round() as usize;
    let decim = cfg.record_decimation.max(1);
    let t0_config = traj.plan.waypoints[0];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut states: Vec<QuadState> = Vec::with_capacity(n);
    for idx in 0..n {
        let d = traj.agent_desired(idx, 0.0).expect("t=0 inside horizon");
        let mut s = QuadState::hover(d.position, params);
        if cfg.perturb_initial {
            // Uniform direction, radius up to half the deviation budget.
            let radius = rng.gen_range(0.0..=margins.delta / 2.0);
            let z = rng.gen_range(-1.0..=1.0f64);
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let r_xy = (1.0 - z * z).max(0.0).sqrt();
            s.pos[0] += radius * r_xy * phi.cos();
            s.pos[1] += radius * r_xy * phi.sin();
            s.pos[2] += radius * z;
        }
        states.push(s);
    }

    let mut log = SimLog {
        times: Vec::new(),
        uavs: vec![UavSeries::default(); n],
        fleet: Vec::new(),
        exposure: vec![0.0; n],
    };
    let mut last_risk: Vec<f64> = vec![0.0; n];

    let exposure_probe = |env: &Environment, p: [f64; 3], t: f64| -> f64 {
        let q = Point2::new(
            p[0].clamp(env.bounds.min.x, env.bounds.max.x),
            p[1].clamp(env.bounds.min.y, env.bounds.max.y),
        );
        env.human_probability(q, t).unwrap_or(0.0)
    };

    for step in 0..=steps {
        let t = step as f64 * cfg.step;
        let t_ref = t.min(horizon);

        // Exposure accumulates every step (trapezoidal in time).
        for (idx, state) in states.iter().enumerate() {
            let risk = exposure_probe(env, state.pos, t);
            if step > 0 {
                log.exposure[idx] += 0.5 * (risk + last_risk[idx]) * cfg.step;
            }
            last_risk[idx] = risk;
        }

        if step % decim == 0 || step == steps {
            log.times.push(t);
            let mut max_dev = 0.0f64;
            let mut exposure_rate = 0.0;
            let mut nfz_violation = false;
            for (idx, state) in states.iter().enumerate() {
                let d = traj.agent_desired(idx, t_ref).expect("inside horizon");
                let dev = ((state.pos[0] - d.position[0]).powi(2)
                    + (state.pos[1] - d.position[1]).powi(2)
                    + (state.pos[2] - d.position[2]).powi(2))
                .sqrt();
                max_dev = max_dev.max(dev);
                exposure_rate += last_risk[idx];
                nfz_violation |= env.in_nfz(Point2::new(state.pos[0], state.pos[1]));
                let series = &mut log.uavs[idx];
                series.actual.push(state.pos);
                series.desired.push(d.position);
                series.deviation.push(dev);
            }

            let mut min_pair = f64::INFINITY;
            for i in 0..n {
                for j in (i + 1)..n {
                    let (a, b) = (states[i].pos, states[j].pos);
                    let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2))
                        .sqrt();
                    min_pair = min_pair.min(d);
                }
            }

            let cfg_now = traj.config_at(t_ref).expect("inside horizon");
            let (lambda1, lambda2, c_col) = match solve_deformation(&t0_config, &cfg_now)
                .ok()
                .and_then(|p| polar_decompose(&p).ok())
            {
                Some(pd) => (
                    pd.lambda1,
                    pd.lambda2,
                    collision_constraint(&pd, margins.lambda_cd_min),
                ),
                None => (0.0, 0.0, margins.lambda_cd_min),
            };

            log.fleet.push(FleetSample {
                min_pair_dist: min_pair,
                lambda1,
                lambda2,
                c_col,
                nfz_violation,
                max_deviation: max_dev,
                exposure_rate,
            });
        }

        if step == steps {
            break;
        }

        // Advance every vehicle through one zero-order-hold control step.
        for (idx, state) in states.iter_mut().enumerate() {
            let d = traj.agent_desired(idx, t_ref).expect("inside horizon");
            let u = match control_step(state, &d, &YawReference::default(), gains, params) {
                Ok(u) => u,
                Err(e) => {
                    return Err(SimFailure {
                        kind: SimErrorKind::ControlFailure {
                            uav: idx,
                            t,
                            source: e,
                        },
                        partial: log,
                    })
                }
            };
            match integrate_step(state, &u, cfg.step, params) {
                Ok(next) => *state = next,
                Err(_) => {
                    return Err(SimFailure {
                        kind: SimErrorKind::NonFiniteState { uav: idx, t },
                        partial: log,
                    })
                }
            }
            if state.pitch.abs() >= PITCH_ABORT {
                let pitch = state.pitch;
                return Err(SimFailure {
                    kind: SimErrorKind::GimbalLock { uav: idx, t, pitch },
                    partial: log,
                });
            }
        }
    }

    Ok(log)
}

/// Post-run verdicts against the safety budget.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub max_deviation: f64,
    pub deviation_bound: f64,
    pub deviation_ok: bool,
    pub min_pair_distance: f64,
    pub required_separation: f64,
    pub separation_ok: bool,
    pub max_c_col: f64,
    pub certificate_ok: bool,
    pub nfz_violation: bool,
    pub exposure_per_uav: Vec<f64>,
}

impl std::fmt::Display for AuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = |ok: bool| if ok { "ok" } else { "VIOLATED" };
        writeln!(
            f,
            "deviation: max {:.4} m vs bound {:.4} m [{}]",
            self.max_deviation,
            self.deviation_bound,
            verdict(self.deviation_ok)
        )?;
        writeln!(
            f,
            "separation: min {:.4} m vs required {:.4} m [{}]",
            self.min_pair_distance,
            self.required_separation,
            verdict(self.separation_ok)
        )?;
        writeln!(
            f,
            "certificate: max c_col {:.3e} [{}]",
            self.max_c_col,
            verdict(self.certificate_ok)
        )?;
        writeln!(
            f,
            "no-fly zones: {}",
            if self.nfz_violation { "VIOLATED" } else { "clear" }
        )?;
        let total: f64 = self.exposure_per_uav.iter().sum();
        writeln!(f, "human exposure: {:.3} probability-seconds fleet total", total)
    }
}

/// Check a complete log against the margins it was supposed to respect.
pub fn audit(log: &SimLog, margins: &SafetyMargins) -> AuditReport {
    let max_deviation = log.max_deviation();
    let min_pair_distance = log.min_pair_distance();
    let max_c_col = log.max_c_col();
    AuditReport {
        max_deviation,
        deviation_bound: margins.delta,
        deviation_ok: max_deviation <= margins.delta,
        min_pair_distance,
        required_separation: 2.0 * margins.epsilon,
        separation_ok: min_pair_distance >= 2.0 * margins.epsilon,
        max_c_col,
        certificate_ok: max_c_col <= C_COL_TOL,
        nfz_violation: log.any_nfz_violation(),
        exposure_per_uav: log.exposure.clone(),
    }
}
