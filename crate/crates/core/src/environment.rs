//! Motion space: bounds, no-fly zones, the human-presence probability field,
//! and scripted pedestrians.
//!
//! The probability field has two faces. `human_probability(r, t)` is the
//! instantaneous likelihood used by the simulator's exposure audit: a static
//! raster sampled bilinearly plus a radial bump around each walker's current
//! position. `planning_risk(r)` is the time-invariant view the planner
//! optimizes against: the same raster, with each walker's whole corridor
//! (the swept segment) marked at its peak profile. Marking the corridor
//! keeps the search graph static while still steering plans away from where
//! a pedestrian will ever be.

use crate::geometry::{point_segment_distance, Point2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvironmentError {
    #[error("query point ({x:.3}, {y:.3}) lies outside the motion-space bounds")]
    OutOfBounds { x: f64, y: f64 },
}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }

    pub fn edges(&self) -> [(Point2, Point2); 4] {
        let c = self.corners();
        [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])]
    }
}

/// Static human-presence raster. `values[row][col]` is the probability at
/// node `origin + (col, row) * cell_size`; queries interpolate bilinearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskField {
    pub origin: Point2,
    pub cell_size: f64,
    pub values: Vec<Vec<f64>>,
}

impl RiskField {
    /// Flat field covering `bounds` with a constant value.
    pub fn uniform(bounds: &Rect, value: f64) -> Self {
        let span_x = bounds.max.x - bounds.min.x;
        let span_y = bounds.max.y - bounds.min.y;
        RiskField {
            origin: bounds.min,
            cell_size: span_x.max(span_y).max(1.0),
            values: vec![vec![value; 2]; 2],
        }
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, |r| r.len())
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    /// True iff the node lattice spans at least `bounds`.
    pub fn covers(&self, bounds: &Rect) -> bool {
        if self.rows() < 2 || self.cols() < 2 || self.cell_size <= 0.0 {
            return false;
        }
        let max_x = self.origin.x + self.cell_size * (self.cols() - 1) as f64;
        let max_y = self.origin.y + self.cell_size * (self.rows() - 1) as f64;
        self.origin.x <= bounds.min.x
            && self.origin.y <= bounds.min.y
            && max_x >= bounds.max.x - 1e-9
            && max_y >= bounds.max.y - 1e-9
    }

    /// Bilinear interpolation at `p`; the caller guarantees coverage.
    pub fn sample(&self, p: Point2) -> f64 {
        let fx = (p.x - self.origin.x) / self.cell_size;
        let fy = (p.y - self.origin.y) / self.cell_size;
        let i = (fy.floor() as isize).clamp(0, self.rows() as isize - 2) as usize;
        let j = (fx.floor() as isize).clamp(0, self.cols() as isize - 2) as usize;
        let u = (fx - j as f64).clamp(0.0, 1.0);
        let v = (fy - i as f64).clamp(0.0, 1.0);
        let v00 = self.values[i][j];
        let v01 = self.values[i][j + 1];
        let v10 = self.values[i + 1][j];
        let v11 = self.values[i + 1][j + 1];
        (1.0 - v) * ((1.0 - u) * v00 + u * v01) + v * ((1.0 - u) * v10 + u * v11)
    }
}

/// A pedestrian walking a straight path at constant speed, stopping at the end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Walker {
    pub start: Point2,
    pub end: Point2,
    /// metres per second, > 0
    pub speed: f64,
    /// Radius (m) at which the walker's presence contribution falls to zero.
    pub radius_of_influence: f64,
    pub peak_probability: f64,
}

impl Walker {
    /// Linear bump profile: `peak` at the centre, zero at the influence radius.
    fn bump(&self, distance: f64) -> f64 {
        if self.radius_of_influence <= 0.0 {
            return 0.0;
        }
        self.peak_probability * (1.0 - distance / self.radius_of_influence).max(0.0)
    }
}

/// Position of the walker at time `t >= 0`, clamped at the path end.
pub fn walker_position(w: &Walker, t: f64) -> Point2 {
    let path = w.end - w.start;
    let len = path.norm();
    if len == 0.0 {
        return w.start;
    }
    let travelled = (w.speed * t).min(len);
    w.start + path * (travelled / len)
}

/// The full motion space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub bounds: Rect,
    pub nfz: Vec<Rect>,
    pub risk: RiskField,
    pub walkers: Vec<Walker>,
}

impl Environment {
    /// Obstacle-free flat-risk space, handy in tests.
    pub fn open(bounds: Rect) -> Self {
        Environment {
            risk: RiskField::uniform(&bounds, 0.0),
            bounds,
            nfz: Vec::new(),
            walkers: Vec::new(),
        }
    }

    /// Likelihood of human presence at `r` and time `t`: static raster plus
    /// instantaneous walker bumps, clamped to [0, 1].
    pub fn human_probability(&self, r: Point2, t: f64) -> Result<f64, EnvironmentError> {
        if !self.bounds.contains(r) {
            return Err(EnvironmentError::OutOfBounds { x: r.x, y: r.y });
        }
        let mut p = self.risk.sample(r);
        for w in &self.walkers {
            p += w.bump(r.dist(walker_position(w, t)));
        }
        Ok(p.clamp(0.0, 1.0))
    }

    /// Time-invariant risk used during planning: static raster plus each
    /// walker's swept corridor at peak profile.
    pub fn planning_risk(&self, r: Point2) -> f64 {
        let mut p = self.risk.sample(r);
        for w in &self.walkers {
            p += w.bump(point_segment_distance(r, w.start, w.end));
        }
        p.clamp(0.0, 1.0)
    }

    /// True iff `r` is inside any no-fly zone (boundaries count as inside).
    pub fn in_nfz(&self, r: Point2) -> bool {
        self.nfz.iter().any(|z| z.contains(r))
    }
}
