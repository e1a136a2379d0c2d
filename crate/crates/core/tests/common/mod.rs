//! Shared helpers for the integration suites: an independent uniform-cost
//! search oracle and deterministic random-world generators.

use rand::Rng;
use std::collections::{BinaryHeap, HashMap};
use triswarm_core::environment::Environment;
use triswarm_core::geometry::{Point2, TriangleConfig};
use triswarm_core::planner::{stage_cost, successors, PlanNode, PlannerConfig};
use triswarm_core::safety::SafetyMargins;

/// Quantized configuration key for the oracle's maps.
pub fn grid_key(initial: &TriangleConfig, config: &TriangleConfig, pcfg: &PlannerConfig) -> [i64; 6] {
    let iv = initial.vertices();
    let cv = config.vertices();
    let mut k = [0i64; 6];
    for l in 0..3 {
        k[2 * l] = ((cv[l].x - iv[l].x) / pcfg.dp_x).round() as i64;
        k[2 * l + 1] = ((cv[l].y - iv[l].y) / pcfg.dp_y).round() as i64;
    }
    k
}

#[derive(PartialEq)]
struct QueueItem {
    cost: f64,
    key: [i64; 6],
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.key.cmp(&other.key))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Exhaustive uniform-cost (Dijkstra) sweep over the whole reachable
/// configuration graph, built on the module's own successor rule. Returns the
/// optimal cost to the goal (if reachable) and the number of distinct
/// reachable configurations.
pub fn dijkstra_oracle(
    initial: &TriangleConfig,
    goal: &TriangleConfig,
    pcfg: &PlannerConfig,
    margins: &SafetyMargins,
    env: &Environment,
) -> (Option<f64>, usize) {
    let goal_key = grid_key(initial, goal, pcfg);
    let mut dist: HashMap<[i64; 6], f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let start_key = grid_key(initial, initial, pcfg);
    dist.insert(start_key, 0.0);
    heap.push(std::cmp::Reverse(QueueItem {
        cost: 0.0,
        key: start_key,
    }));
    let mut settled: HashMap<[i64; 6], f64> = HashMap::new();
    let mut configs: HashMap<[i64; 6], TriangleConfig> = HashMap::new();
    configs.insert(start_key, *initial);

    while let Some(std::cmp::Reverse(item)) = heap.pop() {
        if settled.contains_key(&item.key) {
            continue;
        }
        if dist.get(&item.key).is_none_or(|&d| item.cost > d + 1e-12) {
            continue;
        }
        settled.insert(item.key, item.cost);
        let config = configs[&item.key];
        let node = PlanNode {
            config,
            time_index: 0,
            g: item.cost,
            h: 0.0,
        };
        for succ in successors(&node, initial, pcfg, margins, env) {
            let key = grid_key(initial, &succ.config, pcfg);
            let cost = item.cost + stage_cost(&node, &succ, pcfg, env);
            if dist.get(&key).is_none_or(|&d| cost < d - 1e-12) {
                dist.insert(key, cost);
                configs.insert(key, succ.config);
                heap.push(std::cmp::Reverse(QueueItem { cost, key }));
            }
        }
    }

    (settled.get(&goal_key).copied(), settled.len())
}

/// Deterministic non-degenerate triangle with sides of order `scale`.
pub fn random_triangle<R: Rng>(rng: &mut R, scale: f64) -> TriangleConfig {
    loop {
        let p = |rng: &mut R| {
            Point2::new(
                rng.gen_range(-scale..scale),
                rng.gen_range(-scale..scale),
            )
        };
        let t = TriangleConfig::new(p(rng), p(rng), p(rng));
        if t.basis_det().abs() > 0.3 * scale * scale {
            return t;
        }
    }
}

/// Interior lattice of barycentric points: all weights multiples of 1/m,
/// strictly positive. `m = 7` gives 15 followers.
pub fn follower_lattice(t0: &TriangleConfig, m: usize) -> Vec<Point2> {
    let mut out = Vec::new();
    for i in 1..m {
        for j in 1..(m - i) {
            let k = m - i - j;
            if k < 1 {
                continue;
            }
            let (a, b, c) = (i as f64 / m as f64, j as f64 / m as f64, k as f64 / m as f64);
            out.push(Point2::new(
                a * t0.p1.x + b * t0.p2.x + c * t0.p3.x,
                a * t0.p1.y + b * t0.p2.y + c * t0.p3.y,
            ));
        }
    }
    out
}
