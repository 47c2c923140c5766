//! Shared search engine for "exists a polygonal line" questions.
//!
//! Every ball-avoiding line search in the crate runs through this module:
//! state is a (vertex, hops-used) pair and a transition is a feasible leg of
//! the path system, so correctness is centralized and cross-checked against
//! brute-force line enumeration on small graphs.
//!
//! Two observations keep the searches fast:
//! - a leg to the *target* can be tested in O(1) after one punctured BFS
//!   rooted at the target (for geodesic kinds), so the common shallow
//!   searches terminate after expanding very few vertices;
//! - on forests with unique special paths, a multi-leg line exists iff the
//!   single special path does (every walk between two tree vertices passes
//!   through their geodesic), collapsing the search to one clearance check.

use crate::graph::{Ball, MetricGraph, UNREACHED};
use crate::path::{EdgePath, PolygonalLine};
use crate::system::{LegFeasibility, PathSystem, SystemKind};
use crate::Vertex;

pub(crate) struct AvoidQuery<'a> {
    pub g: &'a MetricGraph,
    pub ps: &'a PathSystem,
    pub ball: Ball,
    pub center_row: &'a [u32],
}

impl<'a> AvoidQuery<'a> {
    pub fn new(g: &'a MetricGraph, ps: &'a PathSystem, ball: Ball, center_row: &'a [u32]) -> Self {
        AvoidQuery { g, ps, ball, center_row }
    }

    #[inline]
    fn in_ball(&self, v: u32) -> bool {
        self.ball.contains_distance(self.center_row[v as usize])
    }

    fn geodesic_legs(&self) -> bool {
        matches!(
            self.ps.kind(),
            SystemKind::AllGeodesics | SystemKind::MedianMonotone | SystemKind::TreeGeodesics
        )
    }

    /// Does a polygonal line with at most `max_legs` legs, each a special
    /// path avoiding the ball, join `from` and `to`?
    pub fn reachable(&self, from: Vertex, to: Vertex, max_legs: u32) -> bool {
        if self.in_ball(from.0) || self.in_ball(to.0) {
            return false;
        }
        if from == to {
            return true;
        }
        if max_legs == 0 {
            return false;
        }
        if self.ps.unique_paths(self.g) && self.g.edge_count() + 1 == self.g.vertex_count() {
            // forest: any line contains the unique geodesic
            return matches!(
                self.ps.min_leg_avoiding_with_row(self.g, from, to, &self.ball, self.center_row),
                LegFeasibility::Feasible(_)
            );
        }

        if self.geodesic_legs() {
            self.reachable_geodesic(from, to, max_legs)
        } else {
            self.reachable_generic(from, to, max_legs)
        }
    }

    fn reachable_geodesic(&self, from: Vertex, to: Vertex, max_legs: u32) -> bool {
        let n = self.g.vertex_count();
        let true_to = self.g.bfs_row(to.0);
        let punct_to = self.g.punctured_bfs(to.0, |v| self.in_ball(v));
        let leg_to = |v: u32| punct_to[v as usize] != UNREACHED && punct_to[v as usize] == true_to[v as usize];
        if leg_to(from.0) {
            return true;
        }
        if max_legs == 1 {
            return false;
        }
        let mut reached = vec![false; n];
        reached[from.idx()] = true;
        let mut frontier = vec![from.0];
        for hop in 1..max_legs {
            // expand far-from-ball vertices first; a detour leg usually exists there
            frontier.sort_unstable_by(|&a, &b| {
                self.center_row[b as usize]
                    .cmp(&self.center_row[a as usize])
                    .then(a.cmp(&b))
            });
            let mut next = Vec::new();
            for &u in &frontier {
                let true_u = self.g.bfs_row(u);
                let punct_u = self.g.punctured_bfs(u, |v| self.in_ball(v));
                for v in 0..n as u32 {
                    if reached[v as usize] || punct_u[v as usize] == UNREACHED {
                        continue;
                    }
                    if punct_u[v as usize] == true_u[v as usize] {
                        if hop < max_legs && leg_to(v) {
                            return true; // hop legs to v, one more to the target
                        }
                        reached[v as usize] = true;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            frontier = next;
        }
        false
    }

    fn reachable_generic(&self, from: Vertex, to: Vertex, max_legs: u32) -> bool {
        let n = self.g.vertex_count();
        let feasible = |u: Vertex, v: Vertex| {
            matches!(
                self.ps.min_leg_avoiding_with_row(self.g, u, v, &self.ball, self.center_row),
                LegFeasibility::Feasible(_)
            )
        };
        if feasible(from, to) {
            return true;
        }
        let mut reached = vec![false; n];
        reached[from.idx()] = true;
        let mut frontier = vec![from];
        for _hop in 1..max_legs {
            let mut next = Vec::new();
            for &u in &frontier {
                for v in 0..n as u32 {
                    let v = Vertex(v);
                    if reached[v.idx()] || self.in_ball(v.0) {
                        continue;
                    }
                    if feasible(u, v) {
                        if feasible(v, to) {
                            return true;
                        }
                        reached[v.idx()] = true;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            frontier = next;
        }
        false
    }

    /// Minimum total length of a line with at most `max_legs` ball-avoiding
    /// legs from `from` to `to`, with the hop sequence realizing it.
    pub fn min_length_line(&self, from: Vertex, to: Vertex, max_legs: u32) -> Option<(u32, Vec<Vertex>)> {
        if self.in_ball(from.0) || self.in_ball(to.0) {
            return None;
        }
        if from == to {
            return Some((0, vec![from]));
        }
        if max_legs == 0 {
            return None;
        }
        let n = self.g.vertex_count();
        let legs = max_legs as usize;
        const INF: u32 = u32::MAX;
        // dist[h][v]: min total length reaching v with at most h legs
        let mut dist = vec![vec![INF; n]; legs + 1];
        let mut parent = vec![vec![u32::MAX; n]; legs + 1];
        dist[0][from.idx()] = 0;
        let geodesic = self.geodesic_legs();
        for h in 1..=legs {
            let (lo, hi) = dist.split_at_mut(h);
            hi[0].copy_from_slice(&lo[h - 1]);
            for u in 0..n as u32 {
                let du = lo[h - 1][u as usize];
                if du == INF {
                    continue;
                }
                if stale_at_layer(lo, h - 1, u as usize) {
                    continue; // value at h-1 not new; expanded at an earlier layer
                }
                if geodesic {
                    let true_u = self.g.bfs_row(u);
                    let punct_u = self.g.punctured_bfs(u, |v| self.in_ball(v));
                    for v in 0..n {
                        if punct_u[v] != UNREACHED && punct_u[v] == true_u[v] {
                            let cand = du.saturating_add(true_u[v]);
                            if cand < hi[0][v] {
                                hi[0][v] = cand;
                                parent[h][v] = u;
                            }
                        }
                    }
                } else {
                    for v in 0..n as u32 {
                        if self.in_ball(v) {
                            continue;
                        }
                        if let LegFeasibility::Feasible(l) =
                            self.ps.min_leg_avoiding_with_row(self.g, Vertex(u), Vertex(v), &self.ball, self.center_row)
                        {
                            let cand = du.saturating_add(l);
                            if cand < hi[0][v as usize] {
                                hi[0][v as usize] = cand;
                                parent[h][v as usize] = u;
                            }
                        }
                    }
                }
            }
        }
        // copy-forward makes dist[h] monotone in h, so the last layer holds
        // the optimum
        let best = dist[legs][to.idx()];
        if best == INF {
            return None;
        }
        let mut hops = vec![to];
        let mut h = legs;
        let mut cur = to.0;
        while cur != from.0 {
            // find the layer whose relaxation set cur's final value
            while h > 0 && dist[h - 1][cur as usize] == dist[h][cur as usize] {
                h -= 1;
            }
            debug_assert!(h > 0, "broken parent chain");
            let p = parent[h][cur as usize];
            debug_assert_ne!(p, u32::MAX, "broken parent chain");
            hops.push(Vertex(p));
            cur = p;
            h -= 1;
        }
        hops.reverse();
        Some((best, hops))
    }

    /// Materializes a hop sequence into a polygonal line of ball-avoiding
    /// special-path legs.
    pub fn line_from_hops(&self, hops: &[Vertex]) -> Option<PolygonalLine> {
        if hops.len() == 1 {
            return PolygonalLine::new(vec![EdgePath::trivial(hops[0])], self.ps.tag()).ok();
        }
        let mut legs = Vec::new();
        for w in hops.windows(2) {
            legs.push(self.ps.leg_path_avoiding(self.g, w[0], w[1], &self.ball, self.center_row)?);
        }
        PolygonalLine::new(legs, self.ps.tag()).ok()
    }
}

fn stale_at_layer(dist: &[Vec<u32>], h: usize, v: usize) -> bool {
    h >= 1 && dist[h - 1][v] == dist[h][v]
}
