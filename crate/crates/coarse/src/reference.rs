//! Slow, enumeration-based reference implementations.
//!
//! Everything here quantifies over explicitly enumerated objects (geodesics,
//! polygonal lines) and is used to cross-check the reachability- and
//! DP-based fast paths on small graphs. None of these functions share code
//! with the implementations they check.

use crate::graph::{Ball, MetricGraph};
use crate::path::EdgePath;
use crate::system::PathSystem;
use crate::Vertex;

/// All geodesics from `x` to `y` in lexicographic order (by vertex-index
/// sequence), up to `cap`. The boolean reports completeness.
pub fn enumerate_geodesics(g: &MetricGraph, x: Vertex, y: Vertex, cap: usize) -> (Vec<EdgePath>, bool) {
    let dist_to_y = g.bfs_row(y.0);
    let mut out = Vec::new();
    let mut stack = vec![x];
    let mut complete = true;
    enumerate_rec(g, &dist_to_y, y, &mut stack, &mut out, cap, &mut complete);
    (out, complete)
}

fn enumerate_rec(
    g: &MetricGraph,
    dist_to_y: &[u32],
    y: Vertex,
    stack: &mut Vec<Vertex>,
    out: &mut Vec<EdgePath>,
    cap: usize,
    complete: &mut bool,
) {
    if out.len() >= cap {
        *complete = false;
        return;
    }
    let cur = *stack.last().unwrap();
    if cur == y {
        out.push(EdgePath::from_vertices_unchecked(stack.clone()));
        return;
    }
    let d = dist_to_y[cur.idx()];
    for &w in g.neighbors(cur) {
        if dist_to_y[w as usize] + 1 == d {
            stack.push(Vertex(w));
            enumerate_rec(g, dist_to_y, y, stack, out, cap, complete);
            stack.pop();
        }
    }
}

/// Minimum length of a special path from `x` to `y` avoiding the ball,
/// by complete enumeration. `None` when no avoiding path exists.
pub fn brute_min_leg_avoiding(
    g: &MetricGraph,
    ps: &PathSystem,
    x: Vertex,
    y: Vertex,
    ball: &Ball,
) -> Option<u32> {
    let center_row = g.bfs_row(ball.center.0);
    let (paths, complete) = ps.special_paths(g, x, y, BRUTE_PATH_CAP).ok()?;
    assert!(complete, "brute-force oracle requires complete enumeration");
    paths
        .into_iter()
        .filter(|p| p.vertices().iter().all(|v| !ball.contains_distance(center_row[v.idx()])))
        .map(|p| p.len())
        .min()
}

/// Maximum, over explicitly enumerated polygonal lines with at most
/// `max_legs` legs from `from` to `to`, of the line's distance to `center`.
/// This is the brute-force neck oracle: `h` is `(r; n)`-midthin iff `r` is
/// at least the returned value (computed for `from = h⁺`, `to = h⁻`,
/// `center = midpoint`).
pub fn brute_max_line_clearance(
    g: &MetricGraph,
    ps: &PathSystem,
    from: Vertex,
    to: Vertex,
    max_legs: u32,
    center: Vertex,
) -> u32 {
    let center_row = g.bfs_row(center.0);
    let start_clear = center_row[from.idx()];
    if from == to {
        return start_clear; // the trivial line
    }
    let mut best = 0u32;
    line_rec(g, ps, from, to, max_legs, &center_row, start_clear, &mut best);
    best
}

fn line_rec(
    g: &MetricGraph,
    ps: &PathSystem,
    cur: Vertex,
    to: Vertex,
    legs_left: u32,
    center_row: &[u32],
    clearance: u32,
    best: &mut u32,
) {
    if clearance <= *best {
        return; // cannot improve the max of minima
    }
    if legs_left == 0 {
        return;
    }
    for v in g.vertices() {
        if v == cur {
            continue;
        }
        let (paths, complete) = ps.special_paths(g, cur, v, BRUTE_PATH_CAP).expect("valid vertices");
        assert!(complete, "brute-force oracle requires complete enumeration");
        for p in paths {
            let c = clearance.min(p.clearance(center_row));
            if v == to {
                if c > *best {
                    *best = c;
                }
            } else {
                line_rec(g, ps, v, to, legs_left - 1, center_row, c, best);
            }
        }
    }
}

/// Minimum total length over explicitly enumerated polygonal lines with at
/// most `max_legs` legs from `from` to `to` whose every vertex avoids the
/// ball. Cross-checks the hop-bounded DP.
pub fn brute_min_line_length_avoiding(
    g: &MetricGraph,
    ps: &PathSystem,
    from: Vertex,
    to: Vertex,
    max_legs: u32,
    ball: &Ball,
) -> Option<u32> {
    let center_row = g.bfs_row(ball.center.0);
    if ball.contains_distance(center_row[from.idx()]) || ball.contains_distance(center_row[to.idx()]) {
        return None;
    }
    if from == to {
        return Some(0); // the trivial line
    }
    let mut best: Option<u32> = None;
    min_len_rec(g, ps, from, to, max_legs, &center_row, ball, 0, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn min_len_rec(
    g: &MetricGraph,
    ps: &PathSystem,
    cur: Vertex,
    to: Vertex,
    legs_left: u32,
    center_row: &[u32],
    ball: &Ball,
    acc: u32,
    best: &mut Option<u32>,
) {
    if let Some(b) = *best {
        if acc >= b {
            return;
        }
    }
    if legs_left == 0 {
        return;
    }
    for v in g.vertices() {
        if v == cur || ball.contains_distance(center_row[v.idx()]) {
            continue;
        }
        let (paths, complete) = ps.special_paths(g, cur, v, BRUTE_PATH_CAP).expect("valid vertices");
        assert!(complete, "brute-force oracle requires complete enumeration");
        for p in paths {
            if p.vertices().iter().any(|w| ball.contains_distance(center_row[w.idx()])) {
                continue;
            }
            let len = acc + p.len();
            if v == to {
                if best.map_or(true, |b| len < b) {
                    *best = Some(len);
                }
            } else {
                min_len_rec(g, ps, v, to, legs_left - 1, center_row, ball, len, best);
            }
        }
    }
}

const BRUTE_PATH_CAP: usize = 100_000;
