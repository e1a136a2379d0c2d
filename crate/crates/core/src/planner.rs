//! A* search over discretized leading-triangle configurations.
//!
//! Each leader moves on a uniform grid: one step shifts leader `l` by
//! `(hx * dp_x, hy * dp_y)` with `hx, hy` in {-1, 0, 1}, so a node has up to
//! `3^6 - 1 = 728` successors (the all-zero move is excluded to avoid
//! zero-cost self-loops). A successor is admitted only if it is a valid
//! deformation of the *initial* configuration: full rank, collision
//! certificate satisfied, inflated triangle clear of zones and in bounds.
//!
//! Cost is travel distance plus a human-presence term,
//! `sum_l zeta_s[l] * |move_l| + sum_l zeta_h[l] * |risk(next_l) - risk(cur_l)|`,
//! with risk taken from the planner's time-invariant view of the environment.
//! The heuristic is the root-sum-square of leader distances to their goals,
//! which underestimates remaining travel cost whenever `zeta_s >= 1`
//! elementwise (the L2 norm of the six-dimensional stacked displacement never
//! exceeds the sum of per-leader move lengths), and the risk term only adds
//! nonnegative cost, so A* stays optimal. The same bound between consecutive
//! nodes makes the heuristic consistent.
//!
//! Nodes are keyed by quantized configuration only (not time): the graph is
//! finite and plans are time-extended afterwards by the trajectory layer.
//! Determinism: ties in `f` break on smaller `h`, then lexicographic grid key.

use crate::environment::Environment;
use crate::geometry::{Point2, TriangleConfig};
use crate::safety::{valid_deformation, SafetyMargins};
use serde::{Deserialize, Serialize};
use std::collections::{BinaryHeap, HashMap};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("open set exhausted after {explored} expansions without reaching the goal")]
    NoPath { explored: usize },
    #[error("expansion budget of {max_expansions} exceeded")]
    BudgetExceeded { max_expansions: usize },
    #[error("goal position of leader {leader} is not a whole number of grid steps from its initial position (offset {offset:.6} m, step {step:.6} m)")]
    GoalOffGrid { leader: usize, offset: f64, step: f64 },
}

/// Search discretization and cost weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Grid steps, m.
    pub dp_x: f64,
    pub dp_y: f64,
    /// Segment duration assigned to each move, s.
    pub dt: f64,
    /// Per-leader travel weights; must be >= 1 elementwise for optimality.
    pub zeta_s: [f64; 3],
    /// Per-leader risk weights, >= 0.
    pub zeta_h: [f64; 3],
    pub max_expansions: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            dp_x: 5.0,
            dp_y: 5.0,
            dt: 15.0,
            zeta_s: [1.0; 3],
            zeta_h: [0.0; 3],
            max_expansions: 1_000_000,
        }
    }
}

/// One search node: a triangle configuration at a discrete time index.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanNode {
    pub config: TriangleConfig,
    pub time_index: usize,
    /// Cost from the start; filled in by the search.
    pub g: f64,
    /// Heuristic to the goal; zero until a goal is known.
    pub h: f64,
}

impl PlanNode {
    pub fn start(config: TriangleConfig) -> Self {
        PlanNode {
            config,
            time_index: 0,
            g: 0.0,
            h: 0.0,
        }
    }
}

/// The planned sequence of leading-triangle waypoints, `dt` apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderPlan {
    pub waypoints: Vec<TriangleConfig>,
    pub dt: f64,
    pub cost: f64,
    pub expansions: usize,
}

impl LeaderPlan {
    pub fn segments(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    /// Mission horizon in seconds.
    pub fn horizon(&self) -> f64 {
        self.segments() as f64 * self.dt
    }

    pub fn timestamp(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Grid key of a configuration relative to the initial one: six step counts.
type GridKey = [i32; 6];

fn key_offsets(initial: &TriangleConfig, config: &TriangleConfig, pcfg: &PlannerConfig) -> [f64; 6] {
    let iv = initial.vertices();
    let cv = config.vertices();
    let mut out = [0.0; 6];
    for l in 0..3 {
        out[2 * l] = (cv[l].x - iv[l].x) / pcfg.dp_x;
        out[2 * l + 1] = (cv[l].y - iv[l].y) / pcfg.dp_y;
    }
    out
}

fn config_for_key(initial: &TriangleConfig, key: GridKey, pcfg: &PlannerConfig) -> TriangleConfig {
    let iv = initial.vertices();
    let p = |l: usize| {
        Point2::new(
            iv[l].x + key[2 * l] as f64 * pcfg.dp_x,
            iv[l].y + key[2 * l + 1] as f64 * pcfg.dp_y,
        )
    };
    TriangleConfig::new(p(0), p(1), p(2))
}

/// Root-sum-square of leader distances to the goal configuration.
pub fn heuristic(config: &TriangleConfig, goal: &TriangleConfig) -> f64 {
    let c = config.vertices();
    let g = goal.vertices();
    (0..3).map(|l| {
        let d = c[l] - g[l];
        d.dot(d)
    }).sum::<f64>().sqrt()
}

/// Transition cost between consecutive nodes: weighted travel plus weighted
/// absolute change in planning risk at each leader.
pub fn stage_cost(
    current: &PlanNode,
    next: &PlanNode,
    pcfg: &PlannerConfig,
    env: &Environment,
) -> f64 {
    let c = current.config.vertices();
    let n = next.config.vertices();
    let mut cost = 0.0;
    for l in 0..3 {
        cost += pcfg.zeta_s[l] * c[l].dist(n[l]);
        if pcfg.zeta_h[l] > 0.0 {
            let dr = env.planning_risk(n[l]) - env.planning_risk(c[l]);
            cost += pcfg.zeta_h[l] * dr.abs();
        }
    }
    cost
}

/// Enumerate the valid successor configurations of `node`.
///
/// `t0` is the mission's initial configuration the deformation certificate is
/// measured against. Successors carry `g = node.g + stage_cost` and the next
/// time index; `h` is left zero.
pub fn successors(
    node: &PlanNode,
    t0: &TriangleConfig,
    pcfg: &PlannerConfig,
    margins: &SafetyMargins,
    env: &Environment,
) -> Vec<PlanNode> {
    let mut out = Vec::new();
    let v = node.config.vertices();
    for m in 0..729usize {
        if m == 364 {
            continue; // the all-zero move
        }
        let digits = move_digits(m);
        let cand = TriangleConfig::new(
            Point2::new(v[0].x + digits[0] as f64 * pcfg.dp_x, v[0].y + digits[1] as f64 * pcfg.dp_y),
            Point2::new(v[1].x + digits[2] as f64 * pcfg.dp_x, v[1].y + digits[3] as f64 * pcfg.dp_y),
            Point2::new(v[2].x + digits[4] as f64 * pcfg.dp_x, v[2].y + digits[5] as f64 * pcfg.dp_y),
        );
        if !valid_deformation(t0, &cand, margins, env) {
            continue;
        }
        let mut succ = PlanNode {
            config: cand,
            time_index: node.time_index + 1,
            g: 0.0,
            h: 0.0,
        };
        succ.g = node.g + stage_cost(node, &succ, pcfg, env);
        out.push(succ);
    }
    out
}

/// Heap entry ordered for a min-heap via `Reverse`: smaller `f` first, ties on
/// smaller `h`, then lexicographic grid key.
#[derive(Debug)]
struct OpenEntry {
    f: f64,
    h: f64,
    key: GridKey,
    g: f64,
    time_index: usize,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.f
            .total_cmp(&other.f)
            .then_with(|| self.h.total_cmp(&other.h))
            .then_with(|| self.key.cmp(&other.key))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Enumerate the six move digits of combination `m` (base-3, -1/0/+1).
fn move_digits(m: usize) -> [i32; 6] {
    let mut digits = [0i32; 6];
    let mut rest = m;
    for d in digits.iter_mut().rev() {
        *d = (rest % 3) as i32 - 1;
        rest /= 3;
    }
    digits
}

/// A* over the configuration grid.
///
/// Returns the cost-minimal plan from `initial` to `goal`, both of which must
/// themselves be valid configurations with `goal` on the grid spanned from
/// `initial`. Identical inputs always produce identical plans.
///
/// Among cost-equal optimal plans the returned one carries the longest
/// possible rigid lead-in: the formation translates as one body (stretch
/// eigenvalues pinned at 1, maximal certificate margin) until deformation is
/// actually needed to finish at minimum cost. The lead-in is found after the
/// search by matching rigid-translation prefixes against exact
/// remaining-cost-to-goal values from a bounded reverse sweep; total plan
/// cost is untouched.
pub fn astar(
    initial: &TriangleConfig,
    goal: &TriangleConfig,
    pcfg: &PlannerConfig,
    margins: &SafetyMargins,
    env: &Environment,
) -> Result<LeaderPlan, PlannerError> {
    // Goal must sit on whole grid steps from the initial configuration.
    let offsets = key_offsets(initial, goal, pcfg);
    let mut goal_key = [0i32; 6];
    for (i, &o) in offsets.iter().enumerate() {
        let k = o.round();
        if (o - k).abs() > 1e-6 {
            let step = if i % 2 == 0 { pcfg.dp_x } else { pcfg.dp_y };
            return Err(PlannerError::GoalOffGrid {
                leader: i / 2 + 1,
                offset: o * step,
                step,
            });
        }
        goal_key[i] = k as i32;
    }

    if goal_key == [0; 6] {
        return Ok(LeaderPlan {
            waypoints: vec![*initial],
            dt: pcfg.dt,
            cost: 0.0,
            expansions: 0,
        });
    }

    let goal_snapped = config_for_key(initial, goal_key, pcfg);
    if !valid_deformation(initial, &goal_snapped, margins, env) {
        return Err(PlannerError::NoPath { explored: 0 });
    }

    // Validity depends only on the candidate configuration, so it is cached
    // per grid key; successor enumeration then costs one lookup per neighbor.
    let mut validity: HashMap<GridKey, bool> = HashMap::new();
    let mut g_map: HashMap<GridKey, f64> = HashMap::new();
    let mut parents: HashMap<GridKey, GridKey> = HashMap::new();
    let mut open: BinaryHeap<std::cmp::Reverse<OpenEntry>> = BinaryHeap::new();

    let start_key = [0i32; 6];
    g_map.insert(start_key, 0.0);
    open.push(std::cmp::Reverse(OpenEntry {
        f: heuristic(initial, &goal_snapped),
        h: heuristic(initial, &goal_snapped),
        key: start_key,
        g: 0.0,
        time_index: 0,
    }));

    let mut expansions = 0usize;
    let mut raw: Option<LeaderPlan> = None;
    while let Some(std::cmp::Reverse(entry)) = open.pop() {
        if g_map.get(&entry.key).is_none_or(|&g| entry.g > g + 1e-12) {
            continue; // stale heap entry
        }
        if entry.key == goal_key {
            let mut keys = vec![entry.key];
            let mut cur = entry.key;
            while let Some(&p) = parents.get(&cur) {
                keys.push(p);
                cur = p;
            }
            keys.reverse();
            let waypoints = keys
                .into_iter()
                .map(|k| config_for_key(initial, k, pcfg))
                .collect();
            raw = Some(LeaderPlan {
                waypoints,
                dt: pcfg.dt,
                cost: entry.g,
                expansions,
            });
            break;
        }

        expansions += 1;
        if expansions > pcfg.max_expansions {
            return Err(PlannerError::BudgetExceeded {
                max_expansions: pcfg.max_expansions,
            });
        }

        let cur_config = config_for_key(initial, entry.key, pcfg);
        let cur_node = PlanNode {
            config: cur_config,
            time_index: entry.time_index,
            g: entry.g,
            h: entry.h,
        };

        for m in 0..729usize {
            if m == 364 {
                continue;
            }
            let digits = move_digits(m);
            let mut key = entry.key;
            for (k, d) in key.iter_mut().zip(digits.iter()) {
                *k += d;
            }
            let cand_config = config_for_key(initial, key, pcfg);
            let ok = *validity
                .entry(key)
                .or_insert_with(|| valid_deformation(initial, &cand_config, margins, env));
            if !ok {
                continue;
            }
            let succ = PlanNode {
                config: cand_config,
                time_index: entry.time_index + 1,
                g: 0.0,
                h: 0.0,
            };
            let tentative = entry.g + stage_cost(&cur_node, &succ, pcfg, env);
            if g_map.get(&key).is_none_or(|&g| tentative < g - 1e-12) {
                g_map.insert(key, tentative);
                parents.insert(key, entry.key);
                let h = heuristic(&cand_config, &goal_snapped);
                open.push(std::cmp::Reverse(OpenEntry {
                    f: tentative + h,
                    h,
                    key,
                    g: tentative,
                    time_index: entry.time_index + 1,
                }));
            }
        }
    }

    match raw {
        Some(plan) => Ok(extend_rigid_prefix(
            plan,
            initial,
            goal_key,
            pcfg,
            margins,
            env,
            &mut validity,
        )),
        None => Err(PlannerError::NoPath {
            explored: expansions,
        }),
    }
}

/// Rework a cost-optimal plan so it starts with the longest rigid translation
/// prefix that still completes at exactly the original cost.
///
/// Forward sweep: Dijkstra over pure-translation configurations (a small 2D
/// offset lattice). Reverse sweep: Dijkstra from the goal over the full
/// configuration graph (edge costs are symmetric), bounded by the optimal
/// cost and an exploration cap. Any offset whose rigid-path cost plus exact
/// remaining cost equals the optimum can start the plan; take the one with
/// the most rigid steps. Falls back to the unmodified plan whenever no such
/// prefix exists or the cap is hit.
fn extend_rigid_prefix(
    raw: LeaderPlan,
    initial: &TriangleConfig,
    goal_key: GridKey,
    pcfg: &PlannerConfig,
    margins: &SafetyMargins,
    env: &Environment,
    validity: &mut HashMap<GridKey, bool>,
) -> LeaderPlan {
    if raw.segments() == 0 {
        return raw;
    }
    let c_star = raw.cost;
    let tol = 1e-9;

    let mut check = |key: GridKey| -> bool {
        let cfg = config_for_key(initial, key, pcfg);
        *validity
            .entry(key)
            .or_insert_with(|| valid_deformation(initial, &cfg, margins, env))
    };

    // Forward Dijkstra over rigid translations: offsets (i, j) stand for the
    // whole triangle shifted by (i dp_x, j dp_y).
    let offset_key = |i: i32, j: i32| -> GridKey { [i, j, i, j, i, j] };
    let node_for = |key: GridKey| PlanNode {
        config: config_for_key(initial, key, pcfg),
        time_index: 0,
        g: 0.0,
        h: 0.0,
    };
    let mut rigid_g: HashMap<(i32, i32), (f64, usize)> = HashMap::new();
    let mut rigid_parent: HashMap<(i32, i32), (i32, i32)> = HashMap::new();
    let mut heap: BinaryHeap<std::cmp::Reverse<OpenEntry>> = BinaryHeap::new();
    rigid_g.insert((0, 0), (0.0, 0));
    heap.push(std::cmp::Reverse(OpenEntry {
        f: 0.0,
        h: 0.0,
        key: offset_key(0, 0),
        g: 0.0,
        time_index: 0,
    }));
    while let Some(std::cmp::Reverse(entry)) = heap.pop() {
        let at = (entry.key[0], entry.key[1]);
        let (g_at, steps_at) = rigid_g[&at];
        if entry.g > g_at + 1e-12 {
            continue;
        }
        for dj in [-1i32, 0, 1] {
            for di in [-1i32, 0, 1] {
                if di == 0 && dj == 0 {
                    continue;
                }
                let to = (at.0 + di, at.1 + dj);
                let to_key = offset_key(to.0, to.1);
                if !check(to_key) {
                    continue;
                }
                let cost = stage_cost(
                    &node_for(offset_key(at.0, at.1)),
                    &node_for(to_key),
                    pcfg,
                    env,
                );
                let tentative = g_at + cost;
                if tentative > c_star + tol {
                    continue;
                }
                if rigid_g.get(&to).is_none_or(|&(g, _)| tentative < g - 1e-12) {
                    rigid_g.insert(to, (tentative, steps_at + 1));
                    rigid_parent.insert(to, at);
                    heap.push(std::cmp::Reverse(OpenEntry {
                        f: tentative,
                        h: 0.0,
                        key: to_key,
                        g: tentative,
                        time_index: steps_at + 1,
                    }));
                }
            }
        }
    }

    // Reverse Dijkstra from the goal, exact distances-to-goal, capped so the
    // refinement can never dominate the search itself.
    let cap = raw.expansions.saturating_mul(8).max(4_000);
    let mut dist: HashMap<GridKey, f64> = HashMap::new();
    let mut toward_goal: HashMap<GridKey, GridKey> = HashMap::new();
    let mut heap: BinaryHeap<std::cmp::Reverse<OpenEntry>> = BinaryHeap::new();
    dist.insert(goal_key, 0.0);
    heap.push(std::cmp::Reverse(OpenEntry {
        f: 0.0,
        h: 0.0,
        key: goal_key,
        g: 0.0,
        time_index: 0,
    }));
    let mut settled = 0usize;
    while let Some(std::cmp::Reverse(entry)) = heap.pop() {
        if dist.get(&entry.key).is_none_or(|&d| entry.g > d + 1e-12) {
            continue;
        }
        settled += 1;
        if settled > cap {
            return raw;
        }
        let cur = node_for(entry.key);
        for m in 0..729usize {
            if m == 364 {
                continue;
            }
            let digits = move_digits(m);
            let mut key = entry.key;
            for (k, d) in key.iter_mut().zip(digits.iter()) {
                *k += d;
            }
            if !check(key) {
                continue;
            }
            let nb = node_for(key);
            let tentative = entry.g + stage_cost(&nb, &cur, pcfg, env);
            // Sound prune: a prefix pivot X costs at least heuristic(X, start)
            // to reach rigidly, so nodes with tentative + heuristic(n, start)
            // beyond the optimum cannot lie on any exact-cost tail.
            if tentative + heuristic(&nb.config, initial) > c_star + tol {
                continue;
            }
            if dist.get(&key).is_none_or(|&d| tentative < d - 1e-12) {
                dist.insert(key, tentative);
                toward_goal.insert(key, entry.key);
                heap.push(std::cmp::Reverse(OpenEntry {
                    f: tentative,
                    h: 0.0,
                    key,
                    g: tentative,
                    time_index: 0,
                }));
            }
        }
    }

    // Longest rigid prefix whose total still hits the optimum; ties resolve
    // to the lexicographically smallest offset.
    let mut best: Option<(usize, (i32, i32))> = None;
    for (&off, &(g_r, steps)) in rigid_g.iter() {
        if steps == 0 {
            continue;
        }
        let Some(&d) = dist.get(&offset_key(off.0, off.1)) else {
            continue;
        };
        if (g_r + d - c_star).abs() <= tol {
            let cand = (steps, off);
            best = match best {
                None => Some(cand),
                Some((s, o)) => {
                    if steps > s || (steps == s && off < o) {
                        Some(cand)
                    } else {
                        Some((s, o))
                    }
                }
            };
        }
    }
    let Some((_, off)) = best else {
        return raw;
    };

    // Stitch: rigid chain to the pivot offset, then the exact-cost tail.
    let mut prefix = vec![off];
    let mut cur = off;
    while let Some(&p) = rigid_parent.get(&cur) {
        prefix.push(p);
        cur = p;
    }
    prefix.reverse();
    let mut keys: Vec<GridKey> = prefix
        .into_iter()
        .map(|(i, j)| offset_key(i, j))
        .collect();
    let mut cur = *keys.last().expect("prefix holds the start");
    while cur != goal_key {
        let Some(&next) = toward_goal.get(&cur) else {
            return raw; // tail not settled; keep the original plan
        };
        keys.push(next);
        cur = next;
    }

    LeaderPlan {
        waypoints: keys
            .into_iter()
            .map(|k| config_for_key(initial, k, pcfg))
            .collect(),
        dt: pcfg.dt,
        cost: c_star,
        expansions: raw.expansions + settled,
    }
}
