//! Static SVG report figures: leader paths over the risk field, stretch
//! eigenvalues against time, and fleet snapshots. Everything is plain
//! hand-assembled SVG so reports stay dependency-free and diffable.

use crate::environment::Environment;
use crate::geometry::{Point2, TriangleConfig};
use crate::planner::LeaderPlan;
use crate::sim::SimLog;
use crate::trajectory::DeformationSample;
use std::fmt::Write;

const SCALE: f64 = 12.0; // px per metre
const MARGIN: f64 = 24.0; // px

struct WorldFrame {
    min: Point2,
    max: Point2,
}

impl WorldFrame {
    fn of(env: &Environment) -> Self {
        WorldFrame {
            min: env.bounds.min,
            max: env.bounds.max,
        }
    }

    fn x(&self, wx: f64) -> f64 {
        MARGIN + (wx - self.min.x) * SCALE
    }

    /// SVG y grows downwards; world y grows upwards.
    fn y(&self, wy: f64) -> f64 {
        MARGIN + (self.max.y - wy) * SCALE
    }

    fn width(&self) -> f64 {
        (self.max.x - self.min.x) * SCALE + 2.0 * MARGIN
    }

    fn height(&self) -> f64 {
        (self.max.y - self.min.y) * SCALE + 2.0 * MARGIN
    }
}

fn svg_open(out: &mut String, w: f64, h: f64) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" \
         viewBox=\"0 0 {w:.1} {h:.1}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
}

fn draw_risk(out: &mut String, env: &Environment, frame: &WorldFrame) {
    let risk = &env.risk;
    for i in 0..risk.rows().saturating_sub(1) {
        for j in 0..risk.cols().saturating_sub(1) {
            let v = 0.25
                * (risk.values[i][j]
                    + risk.values[i][j + 1]
                    + risk.values[i + 1][j]
                    + risk.values[i + 1][j + 1]);
            if v < 0.01 {
                continue;
            }
            let x0 = risk.origin.x + j as f64 * risk.cell_size;
            let y0 = risk.origin.y + i as f64 * risk.cell_size;
            let x0c = x0.max(frame.min.x);
            let y0c = y0.max(frame.min.y);
            let x1c = (x0 + risk.cell_size).min(frame.max.x);
            let y1c = (y0 + risk.cell_size).min(frame.max.y);
            if x1c <= x0c || y1c <= y0c {
                continue;
            }
            let _ = writeln!(
                out,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" \
                 fill=\"#c06000\" fill-opacity=\"{:.3}\"/>",
                frame.x(x0c),
                frame.y(y1c),
                (x1c - x0c) * SCALE,
                (y1c - y0c) * SCALE,
                0.55 * v
            );
        }
    }
    // Corridors a walker will sweep.
    for w in &env.walkers {
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#c06000\" \
             stroke-opacity=\"0.35\" stroke-width=\"{:.1}\" stroke-linecap=\"round\"/>",
            frame.x(w.start.x),
            frame.y(w.start.y),
            frame.x(w.end.x),
            frame.y(w.end.y),
            2.0 * w.radius_of_influence * SCALE
        );
    }
}

fn draw_world(out: &mut String, env: &Environment, frame: &WorldFrame) {
    draw_risk(out, env, frame);
    for z in &env.nfz {
        let _ = writeln!(
            out,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"#d03030\" \
             fill-opacity=\"0.8\" stroke=\"#801010\"/>",
            frame.x(z.min.x),
            frame.y(z.max.y),
            (z.max.x - z.min.x) * SCALE,
            (z.max.y - z.min.y) * SCALE
        );
    }
    let _ = writeln!(
        out,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
         stroke=\"#404040\"/>",
        frame.x(frame.min.x),
        frame.y(frame.max.y),
        (frame.max.x - frame.min.x) * SCALE,
        (frame.max.y - frame.min.y) * SCALE
    );
}

fn draw_triangle(out: &mut String, t: &TriangleConfig, frame: &WorldFrame, stroke: &str) {
    let _ = writeln!(
        out,
        "<polygon points=\"{:.1},{:.1} {:.1},{:.1} {:.1},{:.1}\" fill=\"none\" \
         stroke=\"{stroke}\" stroke-width=\"1.5\"/>",
        frame.x(t.p1.x),
        frame.y(t.p1.y),
        frame.x(t.p2.x),
        frame.y(t.p2.y),
        frame.x(t.p3.x),
        frame.y(t.p3.y)
    );
}

const LEADER_COLORS: [&str; 3] = ["#1060c0", "#108040", "#8040a0"];

/// Leader paths over the risk field, with the initial and goal triangles and
/// the initial follower formation.
pub fn plan_figure_svg(env: &Environment, plan: &LeaderPlan, followers0: &[Point2]) -> String {
    let frame = WorldFrame::of(env);
    let mut out = String::new();
    svg_open(&mut out, frame.width(), frame.height());
    draw_world(&mut out, env, &frame);

    if let (Some(first), Some(last)) = (plan.waypoints.first(), plan.waypoints.last()) {
        draw_triangle(&mut out, first, &frame, "#202020");
        draw_triangle(&mut out, last, &frame, "#1060c0");
    }
    for (l, color) in LEADER_COLORS.iter().enumerate() {
        let mut pts = String::new();
        for w in &plan.waypoints {
            let p = w.vertices()[l];
            let _ = write!(pts, "{:.1},{:.1} ", frame.x(p.x), frame.y(p.y));
        }
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
            pts.trim_end(),
        );
    }
    for f in followers0 {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"#202020\"/>",
            frame.x(f.x),
            frame.y(f.y)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Stretch eigenvalues against time, with the admissible floor drawn in.
pub fn eigenvalue_plot_svg(series: &[DeformationSample], lambda_cd_min: f64) -> String {
    let w = 640.0;
    let h = 360.0;
    let ml = 50.0;
    let mb = 40.0;
    let mt = 16.0;
    let mr = 16.0;
    let mut out = String::new();
    svg_open(&mut out, w, h);

    let t_max = series.last().map_or(1.0, |s| s.t).max(1e-9);
    let y_max = series
        .iter()
        .map(|s| s.lambda2)
        .fold(1.0f64, f64::max)
        .max(lambda_cd_min)
        * 1.15;
    let px = |t: f64| ml + (t / t_max) * (w - ml - mr);
    let py = |v: f64| h - mb - (v / y_max) * (h - mb - mt);

    // Axes and reference lines.
    let _ = writeln!(
        out,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#404040\"/>",
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(
        out,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"#404040\"/>",
        h - mb
    );
    for (v, label, color) in [
        (1.0, "1", "#b0b0b0"),
        (lambda_cd_min, "min", "#d03030"),
    ] {
        let _ = write!(
            out,
            "<line x1=\"{ml}\" y1=\"{0:.1}\" x2=\"{1}\" y2=\"{0:.1}\" stroke=\"{color}\" \
             stroke-dasharray=\"5,4\"/>\n<text x=\"{2}\" y=\"{3:.1}\" font-size=\"11\" \
             fill=\"{color}\">{label}</text>\n",
            py(v),
            w - mr,
            6.0,
            py(v) + 4.0
        );
    }
    // Time ticks every quarter.
    for q in 0..=4 {
        let t = t_max * q as f64 / 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"#404040\" \
             text-anchor=\"middle\">{t:.0}</text>",
            px(t),
            h - mb + 16.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"#404040\" \
         text-anchor=\"middle\">time (s)</text>",
        (ml + w - mr) / 2.0,
        h - 8.0
    );

    for (pick, color, label) in [
        (0usize, "#1060c0", "lambda1"),
        (1usize, "#108040", "lambda2"),
    ] {
        let mut pts = String::new();
        for s in series {
            let v = if pick == 0 { s.lambda1 } else { s.lambda2 };
            let _ = write!(pts, "{:.1},{:.1} ", px(s.t), py(v));
        }
        let _ = write!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{color}\">{label}</text>\n",
            pts.trim_end(),
            w - mr - 70.0,
            mt + 14.0 * (pick as f64 + 1.0)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Fleet snapshot at the log sample closest to `t`: current triangle, every
/// vehicle, and any walkers at their scheduled positions.
pub fn snapshot_svg(env: &Environment, log: &SimLog, t: f64) -> String {
    let frame = WorldFrame::of(env);
    let mut out = String::new();
    svg_open(&mut out, frame.width(), frame.height());
    draw_world(&mut out, env, &frame);

    let idx = log
        .times
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (adiff(**a, t)).total_cmp(&adiff(**b, t)))
        .map(|(i, _)| i)
        .unwrap_or(0);

    if log.uavs.len() >= 3 {
        let v = |l: usize| {
            let p = log.uavs[l].actual[idx];
            Point2::new(p[0], p[1])
        };
        draw_triangle(&mut out, &TriangleConfig::new(v(0), v(1), v(2)), &frame, "#202020");
    }
    for (ui, series) in log.uavs.iter().enumerate() {
        let p = series.actual[idx];
        let color = if ui < 3 { LEADER_COLORS[ui] } else { "#202020" };
        let r = if ui < 3 { 3.5 } else { 2.5 };
        let _ = writeln!(
            out,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"{r}\" fill=\"{color}\"/>",
            frame.x(p[0]),
            frame.y(p[1])
        );
    }
    for w in &env.walkers {
        let p = crate::environment::walker_position(w, t);
        let _ = writeln!(
            out,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"#d03030\" stroke=\"#801010\"/>",
            frame.x(p.x),
            frame.y(p.y)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"#202020\">t = {t:.0} s</text>",
        MARGIN + 4.0,
        MARGIN - 8.0
    );
    out.push_str("</svg>\n");
    out
}

fn adiff(a: f64, b: f64) -> f64 {
    (a - b).abs()
}
