//! Coordinated flight of a quadcopter team treated as a deforming body.
//!
//! Three leaders span a *leading triangle*; every follower is pinned to a
//! fixed barycentric position inside it. Missions run as a pipeline:
//!
//! 1. [`planner`] searches grid moves of the leading triangle, admitting only
//!    configurations that keep the fleet's collision-avoidance certificate
//!    ([`safety`]) satisfied and clear of no-fly zones, while trading travel
//!    distance against overflown human presence ([`environment`]).
//! 2. [`trajectory`] blends the waypoint sequence into C2 desired
//!    trajectories for leaders and followers via the homogeneous map of
//!    [`geometry`].
//! 3. [`sim`] flies every vehicle through its cascaded controller
//!    ([`control`]) and nonlinear dynamics ([`dynamics`]), then audits the
//!    run against the safety budget.
//!
//! [`scenario`] ties it together from a single JSON file; [`figures`] renders
//! SVG reports.

pub mod control;
pub mod dynamics;
pub mod environment;
pub mod figures;
pub mod geometry;
pub mod planner;
pub mod safety;
pub mod scenario;
pub mod sim;
pub mod trajectory;

pub use control::Gains;
pub use dynamics::{QuadState, VehicleParams};
pub use environment::Environment;
pub use geometry::{Point2, TriangleConfig};
pub use planner::{LeaderPlan, PlannerConfig};
pub use safety::SafetyMargins;
pub use scenario::{load_scenario, Scenario};
pub use sim::{audit, AuditReport, SimConfig, SimLog};
pub use trajectory::SwarmTrajectory;
