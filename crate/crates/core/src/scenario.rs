//! Scenario files: one JSON document describing the world, the mission and
//! every tunable, with units spelled out in the field names. Loading
//! validates all cross-field invariants and reports every violation at once.

use crate::control::Gains;
use crate::dynamics::VehicleParams;
use crate::environment::{Environment, Rect, RiskField, Walker};
use crate::geometry::{triangle_contains, triangle_rank_ok, Point2, TriangleConfig, AREA_EPSILON};
use crate::planner::{astar, LeaderPlan, PlannerConfig, PlannerError};
use crate::safety::{triangle_clear, SafetyMargins};
use crate::sim::{run, SimConfig, SimFailure, SimLog};
use crate::trajectory::SwarmTrajectory;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario invalid:\n{}", violations.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Validation { violations: Vec<String> },
}

fn point(p: [f64; 2]) -> Point2 {
    Point2::new(p[0], p[1])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RectFile {
    min: [f64; 2],
    max: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RiskFile {
    origin_m: [f64; 2],
    #[serde(default = "default_cell_size")]
    cell_size_m: f64,
    #[serde(default)]
    values: Option<Vec<Vec<f64>>>,
    /// Alternative to `values`: path (relative to the scenario file) of a
    /// headerless CSV raster, one row per line, southmost row first.
    #[serde(default)]
    csv_path: Option<String>,
}

fn default_cell_size() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WalkerFile {
    start_m: [f64; 2],
    end_m: [f64; 2],
    speed_mps: f64,
    #[serde(default = "default_walker_radius")]
    radius_of_influence_m: f64,
    #[serde(default = "default_walker_peak")]
    peak_probability: f64,
}

fn default_walker_radius() -> f64 {
    5.0
}

fn default_walker_peak() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EnvironmentFile {
    bounds_m: RectFile,
    #[serde(default)]
    no_fly_zones_m: Vec<RectFile>,
    #[serde(default)]
    risk: Option<RiskFile>,
    #[serde(default)]
    walkers: Vec<WalkerFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlannerFile {
    dp_x_m: f64,
    dp_y_m: f64,
    dt_s: f64,
    zeta_s: [f64; 3],
    zeta_h: [f64; 3],
    #[serde(default = "default_max_expansions")]
    max_expansions: usize,
}

fn default_max_expansions() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SimFile {
    #[serde(default = "default_step")]
    step_s: f64,
    #[serde(default)]
    duration_s: Option<f64>,
    #[serde(default = "default_decimation")]
    record_decimation: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    perturb_initial: bool,
}

fn default_step() -> f64 {
    0.01
}

fn default_decimation() -> usize {
    10
}

impl Default for SimFile {
    fn default() -> Self {
        SimFile {
            step_s: default_step(),
            duration_s: None,
            record_decimation: default_decimation(),
            seed: 0,
            perturb_initial: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    name: String,
    environment: EnvironmentFile,
    initial_triangle_m: [[f64; 2]; 3],
    goal_triangle_m: [[f64; 2]; 3],
    #[serde(default)]
    followers_m: Vec<[f64; 2]>,
    epsilon_m: f64,
    #[serde(default = "default_delta")]
    delta_m: f64,
    z_ht_m: f64,
    planner: PlannerFile,
    #[serde(default)]
    gains: Option<Gains>,
    #[serde(default)]
    input_limit: Option<f64>,
    #[serde(default)]
    sim: SimFile,
}

fn default_delta() -> f64 {
    0.1
}

/// A validated mission description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub environment: Environment,
    pub initial_triangle: TriangleConfig,
    pub goal_triangle: TriangleConfig,
    pub followers: Vec<Point2>,
    pub epsilon: f64,
    pub delta: f64,
    pub z_ht: f64,
    pub planner: PlannerConfig,
    pub gains: Gains,
    pub vehicle: VehicleParams,
    pub sim: SimConfig,
}

impl Scenario {
    /// Safety budget measured on the initial formation.
    pub fn margins(&self) -> Result<SafetyMargins, crate::safety::SafetyError> {
        SafetyMargins::from_formation(
            &self.initial_triangle,
            &self.followers,
            self.epsilon,
            self.delta,
        )
    }

    /// Plan the leading-triangle path for this scenario.
    pub fn plan(&self) -> Result<LeaderPlan, PlannerError> {
        let margins = self
            .margins()
            .expect("validated scenario has feasible margins");
        astar(
            &self.initial_triangle,
            &self.goal_triangle,
            &self.planner,
            &margins,
            &self.environment,
        )
    }

    /// Desired trajectories for the whole fleet under `plan`.
    pub fn trajectory(&self, plan: &LeaderPlan) -> SwarmTrajectory {
        SwarmTrajectory::new(plan.clone(), &self.followers, self.z_ht)
            .expect("validated scenario has a non-degenerate initial triangle")
    }

    /// Closed-loop simulation of `plan`; `seed` overrides the scenario seed.
    /// On abort the error carries the partial log.
    #[allow(clippy::result_large_err)]
    pub fn simulate(&self, plan: &LeaderPlan, seed: Option<u64>) -> Result<SimLog, SimFailure> {
        let margins = self
            .margins()
            .expect("validated scenario has feasible margins");
        let traj = self.trajectory(plan);
        let mut cfg = self.sim;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        run(
            &self.environment,
            &traj,
            &margins,
            &self.gains,
            &self.vehicle,
            &cfg,
        )
    }
}

/// Load and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ScenarioFile = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    build_scenario(file, base)
}

fn parse_csv_raster(path: &Path) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => {
                return Err(ScenarioError::Validation {
                    violations: vec![format!("risk raster {}: {e}", path.display())],
                })
            }
        }
    }
    Ok(rows)
}

fn build_scenario(file: ScenarioFile, base: &Path) -> Result<Scenario, ScenarioError> {
    let mut violations: Vec<String> = Vec::new();

    let bounds = Rect::new(point(file.environment.bounds_m.min), point(file.environment.bounds_m.max));
    if bounds.min.x >= bounds.max.x || bounds.min.y >= bounds.max.y {
        violations.push("bounds_m must have min strictly below max on both axes".into());
    }

    let nfz: Vec<Rect> = file
        .environment
        .no_fly_zones_m
        .iter()
        .map(|r| Rect::new(point(r.min), point(r.max)))
        .collect();
    for (i, z) in nfz.iter().enumerate() {
        if z.min.x >= z.max.x || z.min.y >= z.max.y {
            violations.push(format!("no-fly zone {i} has an empty extent"));
        }
        if !bounds.contains_rect(z) {
            violations.push(format!("no-fly zone {i} extends outside the bounds"));
        }
    }

    let risk = match &file.environment.risk {
        None => RiskField::uniform(&bounds, 0.0),
        Some(r) => {
            let values = match (&r.values, &r.csv_path) {
                (Some(v), None) => v.clone(),
                (None, Some(p)) => parse_csv_raster(&base.join(p))?,
                (Some(_), Some(_)) => {
                    violations.push("risk: give either inline values or csv_path, not both".into());
                    vec![vec![0.0; 2]; 2]
                }
                (None, None) => {
                    violations.push("risk: missing both values and csv_path".into());
                    vec![vec![0.0; 2]; 2]
                }
            };
            RiskField {
                origin: point(r.origin_m),
                cell_size: r.cell_size_m,
                values,
            }
        }
    };
    if risk.cell_size <= 0.0 {
        violations.push("risk cell size must be positive".into());
    }
    let width = risk.cols();
    if risk.values.iter().any(|row| row.len() != width) {
        violations.push("risk raster rows have unequal lengths".into());
    }
    if risk
        .values
        .iter()
        .flatten()
        .any(|v| !(0.0..=1.0).contains(v))
    {
        violations.push("risk raster contains values outside [0, 1]".into());
    }
    if !risk.covers(&bounds) {
        violations.push("risk raster does not cover the bounds".into());
    }

    let walkers: Vec<Walker> = file
        .environment
        .walkers
        .iter()
        .map(|w| Walker {
            start: point(w.start_m),
            end: point(w.end_m),
            speed: w.speed_mps,
            radius_of_influence: w.radius_of_influence_m,
            peak_probability: w.peak_probability,
        })
        .collect();
    for (i, w) in walkers.iter().enumerate() {
        if w.speed <= 0.0 {
            violations.push(format!("walker {i} speed must be positive"));
        }
        if !(0.0..=1.0).contains(&w.peak_probability) {
            violations.push(format!("walker {i} peak probability outside [0, 1]"));
        }
        if w.radius_of_influence < 0.0 {
            violations.push(format!("walker {i} radius of influence is negative"));
        }
    }

    let environment = Environment {
        bounds,
        nfz,
        risk,
        walkers,
    };

    let tri = |v: [[f64; 2]; 3]| TriangleConfig::new(point(v[0]), point(v[1]), point(v[2]));
    let initial_triangle = tri(file.initial_triangle_m);
    let goal_triangle = tri(file.goal_triangle_m);
    if !triangle_rank_ok(&initial_triangle, AREA_EPSILON) {
        violations.push("initial triangle is degenerate".into());
    }
    if !triangle_rank_ok(&goal_triangle, AREA_EPSILON) {
        violations.push("goal triangle is degenerate".into());
    }

    if file.epsilon_m <= 0.0 {
        violations.push("epsilon_m must be positive".into());
    }
    if file.delta_m < 0.0 {
        violations.push("delta_m must be nonnegative".into());
    }
    if !file.z_ht_m.is_finite() || file.z_ht_m < 0.0 {
        violations.push("z_ht_m must be a nonnegative altitude".into());
    }

    let followers: Vec<Point2> = file.followers_m.iter().map(|p| point(*p)).collect();
    for (i, f) in followers.iter().enumerate() {
        if !triangle_contains(&initial_triangle, *f, 1e-9) {
            violations.push(format!(
                "follower {i} at ({:.3}, {:.3}) lies outside the initial triangle",
                f.x, f.y
            ));
        }
    }

    let planner = PlannerConfig {
        dp_x: file.planner.dp_x_m,
        dp_y: file.planner.dp_y_m,
        dt: file.planner.dt_s,
        zeta_s: file.planner.zeta_s,
        zeta_h: file.planner.zeta_h,
        max_expansions: file.planner.max_expansions,
    };
    if planner.dp_x <= 0.0 || planner.dp_y <= 0.0 {
        violations.push("planner grid steps must be positive".into());
    }
    if planner.dt <= 0.0 {
        violations.push("planner dt_s must be positive".into());
    }
    if planner.zeta_s.iter().any(|z| *z < 1.0) {
        violations.push("zeta_s must be >= 1 elementwise (heuristic admissibility)".into());
    }
    if planner.zeta_h.iter().any(|z| *z < 0.0) {
        violations.push("zeta_h must be nonnegative".into());
    }
    if planner.max_expansions == 0 {
        violations.push("max_expansions must be positive".into());
    }

    // Goal must sit on the grid spanned from the initial configuration.
    if planner.dp_x > 0.0 && planner.dp_y > 0.0 {
        let iv = initial_triangle.vertices();
        let gv = goal_triangle.vertices();
        for l in 0..3 {
            let kx = (gv[l].x - iv[l].x) / planner.dp_x;
            let ky = (gv[l].y - iv[l].y) / planner.dp_y;
            if (kx - kx.round()).abs() > 1e-6 || (ky - ky.round()).abs() > 1e-6 {
                violations.push(format!(
                    "goal position of leader {} is off the planning grid",
                    l + 1
                ));
            }
        }
    }

    let gains = file.gains.unwrap_or_default();
    for (name, g) in [
        ("gamma1", gains.gamma1),
        ("gamma2", gains.gamma2),
        ("k_thrust", gains.k_thrust),
        ("k_thrust_rate", gains.k_thrust_rate),
        ("k_roll", gains.k_roll),
        ("k_roll_rate", gains.k_roll_rate),
        ("k_pitch", gains.k_pitch),
        ("k_pitch_rate", gains.k_pitch_rate),
        ("k_yaw", gains.k_yaw),
        ("k_yaw_rate", gains.k_yaw_rate),
    ] {
        if g <= 0.0 {
            violations.push(format!("gain {name} must be strictly positive"));
        }
    }

    let sim = SimConfig {
        step: file.sim.step_s,
        duration: file.sim.duration_s,
        record_decimation: file.sim.record_decimation,
        seed: file.sim.seed,
        perturb_initial: file.sim.perturb_initial,
    };
    if sim.step <= 0.0 {
        violations.push("sim step_s must be positive".into());
    }
    if sim.record_decimation == 0 {
        violations.push("record_decimation must be at least 1".into());
    }
    if let Some(d) = sim.duration {
        if d < planner.dt {
            violations.push("sim duration_s must cover at least one segment".into());
        }
    }

    // Margin feasibility and initial/goal clearance need the pieces above, so
    // only check them once the basics hold.
    if violations.is_empty() {
        match SafetyMargins::from_formation(&initial_triangle, &followers, file.epsilon_m, file.delta_m)
        {
            Err(e) => violations.push(e.to_string()),
            Ok(margins) => {
                let inflation = margins.epsilon + margins.delta;
                if !triangle_clear(&initial_triangle, inflation, &environment) {
                    violations.push("initial triangle violates zone clearance or bounds".into());
                }
                if !triangle_clear(&goal_triangle, inflation, &environment) {
                    violations.push("goal triangle violates zone clearance or bounds".into());
                }
            }
        }
    }

    if !violations.is_empty() {
        return Err(ScenarioError::Validation { violations });
    }

    Ok(Scenario {
        name: file.name,
        environment,
        initial_triangle,
        goal_triangle,
        followers,
        epsilon: file.epsilon_m,
        delta: file.delta_m,
        z_ht: file.z_ht_m,
        planner,
        gains,
        vehicle: VehicleParams {
            gravity: 9.81,
            input_limit: file.input_limit,
        },
        sim,
    })
}

/// On-disk plan format: explicit timestamps next to the leader positions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub scenario: String,
    pub dt_s: f64,
    pub total_cost: f64,
    pub expansions: usize,
    pub waypoints: Vec<PlanWaypoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanWaypoint {
    pub t_s: f64,
    pub leaders_m: [[f64; 2]; 3],
}

impl PlanFile {
    pub fn from_plan(scenario: &str, plan: &LeaderPlan) -> Self {
        PlanFile {
            scenario: scenario.into(),
            dt_s: plan.dt,
            total_cost: plan.cost,
            expansions: plan.expansions,
            waypoints: plan
                .waypoints
                .iter()
                .enumerate()
                .map(|(k, w)| PlanWaypoint {
                    t_s: plan.timestamp(k),
                    leaders_m: [[w.p1.x, w.p1.y], [w.p2.x, w.p2.y], [w.p3.x, w.p3.y]],
                })
                .collect(),
        }
    }

    pub fn into_plan(self) -> Result<LeaderPlan, ScenarioError> {
        if self.waypoints.is_empty() {
            return Err(ScenarioError::Validation {
                violations: vec!["plan file holds no waypoints".into()],
            });
        }
        Ok(LeaderPlan {
            waypoints: self
                .waypoints
                .iter()
                .map(|w| {
                    TriangleConfig::new(
                        point(w.leaders_m[0]),
                        point(w.leaders_m[1]),
                        point(w.leaders_m[2]),
                    )
                })
                .collect(),
            dt: self.dt_s,
            cost: self.total_cost,
            expansions: self.expansions,
        })
    }
}

pub fn save_plan(path: &Path, scenario: &str, plan: &LeaderPlan) -> Result<(), ScenarioError> {
    let file = PlanFile::from_plan(scenario, plan);
    let text = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, text).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_plan(path: &Path) -> Result<LeaderPlan, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: PlanFile = serde_json::from_str(&text)?;
    file.into_plan()
}
