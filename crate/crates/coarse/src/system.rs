//! Path systems: providers of special paths between vertex pairs.
//!
//! A path system hands out uniform quasi-geodesics ("special paths")
//! between vertices, is closed under subsegments, contains the trivial
//! path at every vertex, and (usually) is closed under inversion. Five
//! kinds are provided:
//!
//! - `AllGeodesics` — every geodesic of the host graph;
//! - `TreeGeodesics` — the unique geodesics of a tree, doubling as a
//!   0-bounded geodesic combing;
//! - `MedianMonotone` — all geodesics on a median graph, with the
//!   2-bounded replacement property;
//! - `StaircaseZ2` — the combing of the square lattice whose lines descend
//!   toward the x-axis, run horizontally, and finish vertically;
//! - `StoredSet` — an explicit, closure-complete list of paths (also the
//!   output form of push-forwards).

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Ball, MetricGraph};
use crate::path::{hausdorff, lex_min_geodesic, rectify, EdgePath};
use crate::{Rat, Vertex};

/// Quasi-geodesic constants of a system plus the linear gauge
/// `D(r) = c_p·r + c_p` dominating length/diameter/endpoint-distance
/// ratios of its paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSystemConfig {
    pub lambda0: Rat,
    pub kappa0: Rat,
    pub c_p: Rat,
    pub undirected: bool,
}

impl PathSystemConfig {
    pub fn geodesic() -> Self {
        PathSystemConfig {
            lambda0: Rat::from_integer(1),
            kappa0: Rat::from_integer(0),
            c_p: Rat::from_integer(1),
            undirected: true,
        }
    }

    /// The linear bound `D(r) = c_p·r + c_p`.
    pub fn d_p(&self, r: Rat) -> Rat {
        self.c_p * r + self.c_p
    }
}

#[derive(Clone, Debug)]
pub enum SystemKind {
    AllGeodesics,
    TreeGeodesics,
    MedianMonotone,
    StaircaseZ2(StaircaseZ2),
    StoredSet(StoredSet),
}

/// Outcome of a single-leg feasibility query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LegFeasibility {
    /// Minimum length of a special path between the endpoints avoiding the
    /// ball.
    Feasible(u32),
    Infeasible,
    /// An endpoint lies inside the ball, so every leg trivially meets it.
    EndpointInBall,
}

impl LegFeasibility {
    pub fn length(self) -> Option<u32> {
        match self {
            LegFeasibility::Feasible(l) => Some(l),
            _ => None,
        }
    }
}

/// A provider of special paths between vertex pairs.
#[derive(Clone, Debug)]
pub struct PathSystem {
    config: PathSystemConfig,
    kind: SystemKind,
    from_push_forward: bool,
}

impl PathSystem {
    pub fn all_geodesics() -> Self {
        PathSystem { config: PathSystemConfig::geodesic(), kind: SystemKind::AllGeodesics, from_push_forward: false }
    }

    pub fn tree_geodesics() -> Self {
        PathSystem { config: PathSystemConfig::geodesic(), kind: SystemKind::TreeGeodesics, from_push_forward: false }
    }

    pub fn median_monotone() -> Self {
        PathSystem { config: PathSystemConfig::geodesic(), kind: SystemKind::MedianMonotone, from_push_forward: false }
    }

    /// Staircase combing on a graph whose vertices carry 2-coordinate labels.
    pub fn staircase_z2(g: &MetricGraph) -> Result<Self> {
        let table = StaircaseZ2::from_graph(g)?;
        Ok(PathSystem {
            config: PathSystemConfig::geodesic(),
            kind: SystemKind::StaircaseZ2(table),
            from_push_forward: false,
        })
    }

    pub fn stored(set: StoredSet, config: PathSystemConfig) -> Self {
        PathSystem { config, kind: SystemKind::StoredSet(set), from_push_forward: false }
    }

    pub fn config(&self) -> &PathSystemConfig {
        &self.config
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        if self.from_push_forward {
            return "PushForward";
        }
        match self.kind {
            SystemKind::AllGeodesics => "AllGeodesics",
            SystemKind::TreeGeodesics => "TreeGeodesics",
            SystemKind::MedianMonotone => "MedianMonotone",
            SystemKind::StaircaseZ2(_) => "StaircaseCombingZ2",
            SystemKind::StoredSet(_) => "StoredSet",
        }
    }

    /// True when every vertex pair is joined by exactly one special path,
    /// which makes per-pair memoization of path predicates sound.
    pub fn unique_paths(&self, g: &MetricGraph) -> bool {
        match self.kind {
            SystemKind::TreeGeodesics => true,
            SystemKind::AllGeodesics | SystemKind::MedianMonotone => {
                g.edge_count() + 1 == g.vertex_count()
            }
            _ => false,
        }
    }

    /// Boundedness constant of the combing realized by this kind, if any.
    pub fn combing_bound(&self) -> Option<Rat> {
        match self.kind {
            SystemKind::TreeGeodesics => Some(Rat::from_integer(0)),
            SystemKind::StaircaseZ2(_) => Some(Rat::from_integer(1)),
            _ => None,
        }
    }

    /// Declared Hausdorff bound for [`Self::bounded_replacement`].
    pub fn replacement_bound(&self) -> Option<Rat> {
        match self.kind {
            SystemKind::TreeGeodesics => Some(Rat::from_integer(1)),
            SystemKind::AllGeodesics | SystemKind::MedianMonotone => Some(Rat::from_integer(2)),
            SystemKind::StaircaseZ2(_) => Some(Rat::from_integer(3)),
            SystemKind::StoredSet(_) => None,
        }
    }

    /// Special paths from `x` to `y`, enumerated deterministically up to
    /// `cap`. The boolean reports whether the enumeration is complete.
    pub fn special_paths(&self, g: &MetricGraph, x: Vertex, y: Vertex, cap: usize) -> Result<(Vec<EdgePath>, bool)> {
        for v in [x, y] {
            if v.idx() >= g.vertex_count() {
                return Err(Error::InvalidVertex { vertex: v.0, count: g.vertex_count() });
            }
        }
        match &self.kind {
            SystemKind::AllGeodesics | SystemKind::MedianMonotone => {
                Ok(crate::reference::enumerate_geodesics(g, x, y, cap))
            }
            SystemKind::TreeGeodesics => Ok((vec![lex_min_geodesic(g, x, y)?], true)),
            SystemKind::StaircaseZ2(t) => {
                let mut out = t.leg_candidates(g, x, y)?;
                out.truncate(cap);
                Ok((out, true))
            }
            SystemKind::StoredSet(s) => Ok((s.paths_between(x, y), true)),
        }
    }

    /// The combing line from `x` to `y`, for combing-backed kinds.
    pub fn combing_line(&self, g: &MetricGraph, x: Vertex, y: Vertex) -> Result<EdgePath> {
        match &self.kind {
            SystemKind::TreeGeodesics => lex_min_geodesic(g, x, y),
            SystemKind::StaircaseZ2(t) => t.combing_line(g, x, y),
            _ => Err(Error::UnsupportedKind { op: "combing_line", kind: self.kind_name() }),
        }
    }

    /// Minimum length of a special path from `x` to `y` avoiding the closed
    /// ball, or infeasibility. `center_row` must be the distance row of the
    /// ball center.
    pub fn min_leg_avoiding_with_row(
        &self,
        g: &MetricGraph,
        x: Vertex,
        y: Vertex,
        ball: &Ball,
        center_row: &[u32],
    ) -> LegFeasibility {
        if ball.contains_distance(center_row[x.idx()]) || ball.contains_distance(center_row[y.idx()]) {
            return LegFeasibility::EndpointInBall;
        }
        match &self.kind {
            SystemKind::AllGeodesics | SystemKind::MedianMonotone | SystemKind::TreeGeodesics => {
                let d = g.bfs_row(x.0)[y.idx()];
                let punct = g.punctured_bfs(x.0, |v| ball.contains_distance(center_row[v as usize]));
                let pd = punct[y.idx()];
                if matches!(self.kind, SystemKind::TreeGeodesics) {
                    // unique paths: reachable iff the geodesic avoids the ball
                    if pd == crate::graph::UNREACHED {
                        LegFeasibility::Infeasible
                    } else {
                        debug_assert_eq!(pd, d);
                        LegFeasibility::Feasible(d)
                    }
                } else if pd == d {
                    LegFeasibility::Feasible(d)
                } else {
                    LegFeasibility::Infeasible
                }
            }
            SystemKind::StaircaseZ2(t) => {
                let cands = match t.leg_candidates(g, x, y) {
                    Ok(c) => c,
                    Err(_) => return LegFeasibility::Infeasible,
                };
                for c in cands {
                    if c.vertices().iter().all(|v| !ball.contains_distance(center_row[v.idx()])) {
                        return LegFeasibility::Feasible(c.len());
                    }
                }
                LegFeasibility::Infeasible
            }
            SystemKind::StoredSet(s) => {
                let mut best = None;
                for p in s.paths_between(x, y) {
                    if p.vertices().iter().all(|v| !ball.contains_distance(center_row[v.idx()])) {
                        best = Some(best.map_or(p.len(), |b: u32| b.min(p.len())));
                    }
                }
                match best {
                    Some(l) => LegFeasibility::Feasible(l),
                    None => LegFeasibility::Infeasible,
                }
            }
        }
    }

    pub fn min_leg_avoiding(&self, g: &MetricGraph, x: Vertex, y: Vertex, ball: &Ball) -> Result<LegFeasibility> {
        let center_row = g.distance_map(ball.center)?;
        Ok(self.min_leg_avoiding_with_row(g, x, y, ball, &center_row))
    }

    /// A minimum-length special path from `x` to `y` avoiding the ball;
    /// `None` when infeasible. For geodesic kinds this is the lex-min
    /// geodesic of the punctured graph.
    pub fn leg_path_avoiding(
        &self,
        g: &MetricGraph,
        x: Vertex,
        y: Vertex,
        ball: &Ball,
        center_row: &[u32],
    ) -> Option<EdgePath> {
        match self.min_leg_avoiding_with_row(g, x, y, ball, center_row) {
            LegFeasibility::Feasible(_) => {}
            _ => return None,
        }
        match &self.kind {
            SystemKind::AllGeodesics | SystemKind::MedianMonotone | SystemKind::TreeGeodesics => {
                let punct_from_y = g.punctured_bfs(y.0, |v| ball.contains_distance(center_row[v as usize]));
                let mut cur = x;
                let mut out = vec![x];
                while cur != y {
                    let d = punct_from_y[cur.idx()];
                    let next = g
                        .neighbors(cur)
                        .iter()
                        .copied()
                        .find(|&w| punct_from_y[w as usize] != crate::graph::UNREACHED && punct_from_y[w as usize] + 1 == d)
                        .expect("feasible leg has a descent");
                    cur = Vertex(next);
                    out.push(cur);
                }
                Some(EdgePath::from_vertices_unchecked(out))
            }
            SystemKind::StaircaseZ2(t) => t
                .leg_candidates(g, x, y)
                .ok()?
                .into_iter()
                .find(|c| c.vertices().iter().all(|v| !ball.contains_distance(center_row[v.idx()]))),
            SystemKind::StoredSet(s) => {
                let mut best: Option<EdgePath> = None;
                for p in s.paths_between(x, y) {
                    if p.vertices().iter().all(|v| !ball.contains_distance(center_row[v.idx()])) {
                        let better = best.as_ref().map_or(true, |b| p.len() < b.len());
                        if better {
                            best = Some(p);
                        }
                    }
                }
                best
            }
        }
    }

    /// Membership of a path in the system's consistent closure.
    pub fn is_member(&self, g: &MetricGraph, p: &EdgePath) -> bool {
        if p.is_trivial() {
            return true;
        }
        match &self.kind {
            SystemKind::AllGeodesics | SystemKind::MedianMonotone | SystemKind::TreeGeodesics => {
                g.bfs_row(p.start().0)[p.end().idx()] == p.len()
            }
            SystemKind::StaircaseZ2(t) => t
                .leg_candidates(g, p.start(), p.end())
                .map(|cs| cs.iter().any(|c| c == p))
                .unwrap_or(false),
            SystemKind::StoredSet(s) => s.contains(p),
        }
    }

    /// Replaces `h` by a special path from `h⁻` to `y2` (where
    /// `d(h⁺, y2) ≤ 1`) at Hausdorff distance at most the kind's declared
    /// bound. The bound is measured and asserted, never assumed.
    pub fn bounded_replacement(&self, g: &MetricGraph, h: &EdgePath, y2: Vertex) -> Result<EdgePath> {
        if y2.idx() >= g.vertex_count() {
            return Err(Error::InvalidVertex { vertex: y2.0, count: g.vertex_count() });
        }
        if g.bfs_row(h.end().0)[y2.idx()] > 1 {
            return Err(Error::InvalidInstance(format!(
                "bounded_replacement requires d(h+, y2) <= 1, got {}",
                g.bfs_row(h.end().0)[y2.idx()]
            )));
        }
        if y2 == h.end() {
            return Ok(h.clone());
        }
        let bound = self
            .replacement_bound()
            .ok_or(Error::UnsupportedKind { op: "bounded_replacement", kind: self.kind_name() })?;
        let candidate = match &self.kind {
            SystemKind::TreeGeodesics => lex_min_geodesic(g, h.start(), y2)?,
            SystemKind::AllGeodesics | SystemKind::MedianMonotone => {
                // geodesic toward y2 hugging the old path: at every step take
                // the descending neighbor closest to h (then smallest index);
                // on median graphs this realizes the 2-bounded replacement
                let dist_to_y2 = g.bfs_row(y2.0);
                let near_h = multi_source_distances(g, h.vertices());
                let mut cur = h.start();
                let mut verts = vec![cur];
                while cur != y2 {
                    let d = dist_to_y2[cur.idx()];
                    let next = g
                        .neighbors(cur)
                        .iter()
                        .copied()
                        .filter(|&w| dist_to_y2[w as usize] + 1 == d)
                        .min_by_key(|&w| (near_h[w as usize], w))
                        .expect("connected graph has a descent");
                    cur = Vertex(next);
                    verts.push(cur);
                }
                let greedy = EdgePath::from_vertices_unchecked(verts);
                if Rat::from_integer(hausdorff(g, h, &greedy) as i64) <= bound {
                    greedy
                } else {
                    // rare: fall back to enumeration in lexicographic order
                    let (cands, _) = crate::reference::enumerate_geodesics(g, h.start(), y2, REPLACEMENT_ENUM_CAP);
                    cands
                        .into_iter()
                        .find(|c| Rat::from_integer(hausdorff(g, h, c) as i64) <= bound)
                        .unwrap_or(greedy)
                }
            }
            SystemKind::StaircaseZ2(t) => t.combing_line(g, h.start(), y2)?,
            SystemKind::StoredSet(_) => unreachable!("no declared bound"),
        };
        let measured = Rat::from_integer(hausdorff(g, h, &candidate) as i64);
        if measured > bound {
            return Err(Error::HausdorffBound { measured, bound });
        }
        Ok(candidate)
    }

    /// Invariant checks: trivial-path presence, subsegment and inversion
    /// closure (stored sets), and the improved quasi-geodesic inequality on
    /// sampled paths.
    pub fn validate(&self, g: &MetricGraph, seed: u64, sample_pairs: usize) -> ValidationReport {
        let mut failures = Vec::new();
        if let SystemKind::StoredSet(s) = &self.kind {
            for v in g.vertices() {
                if s.paths_between(v, v).is_empty() {
                    failures.push(format!("missing trivial path at {v}"));
                    break;
                }
            }
            if let Err(Error::ClosureViolation(w)) = s.check_closure() {
                failures.push(format!("subsegment closure violated: {w:?}"));
            }
            if self.config.undirected {
                if let Some(p) = s.missing_inverse() {
                    failures.push(format!("inversion closure violated for {:?}", p.vertices()));
                }
            }
            for (x, y) in s.covered_pairs() {
                if s.paths_between(x, y).is_empty() {
                    failures.push(format!("no stored path for covered pair ({x}, {y})"));
                }
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = g.vertex_count() as u32;
        let mut measured_lambda = Rat::from_integer(0);
        let mut checked = 0usize;
        while checked < sample_pairs {
            let x = Vertex(rng.gen_range(0..n));
            let y = Vertex(rng.gen_range(0..n));
            let Ok((paths, _)) = self.special_paths(g, x, y, 8) else { break };
            for p in paths {
                checked += 1;
                // improved quasi-geodesic inequality over all subpath windows
                let verts = p.vertices();
                for i in 0..verts.len() {
                    let row = g.bfs_row(verts[i].0);
                    for j in (i + 1)..verts.len() {
                        let sub_len = Rat::from_integer((j - i) as i64);
                        let d = Rat::from_integer(row[verts[j].idx()] as i64);
                        if sub_len > self.config.lambda0 * d + self.config.kappa0 {
                            failures.push(format!(
                                "quasi-geodesic inequality violated on window [{i}, {j}] of a path {x}->{y}"
                            ));
                        }
                        if !d.is_zero() {
                            measured_lambda = measured_lambda.max((sub_len - self.config.kappa0) / d);
                        }
                    }
                }
                // D_P domination of the four path quantities
                let d_ends = Rat::from_integer(g.bfs_row(p.start().0)[p.end().idx()] as i64);
                let len = Rat::from_integer(p.len() as i64);
                if self.config.d_p(d_ends.min(len)) < d_ends.max(len) {
                    failures.push(format!("D_P does not dominate path {x}->{y}"));
                }
            }
        }
        ValidationReport { passed: failures.is_empty(), failures, measured_lambda, paths_checked: checked }
    }

    /// Materializes the system over all vertex pairs into a stored set,
    /// capped per pair; used for cross-validation.
    pub fn materialize(&self, g: &MetricGraph, per_pair_cap: usize) -> Result<StoredSet> {
        let mut paths = Vec::new();
        for x in g.vertices() {
            for y in g.vertices() {
                let (ps, _) = self.special_paths(g, x, y, per_pair_cap)?;
                paths.extend(ps);
            }
        }
        Ok(StoredSet::with_closure(paths, self.config.undirected))
    }

    pub fn tag(&self) -> String {
        self.kind_name().to_string()
    }
}

use num_traits::Zero;

const REPLACEMENT_ENUM_CAP: usize = 4096;

fn multi_source_distances(g: &MetricGraph, sources: &[Vertex]) -> Vec<u32> {
    use std::collections::VecDeque;
    let mut dist = vec![u32::MAX; g.vertex_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s.idx()] != 0 {
            dist[s.idx()] = 0;
            queue.push_back(s.0);
        }
    }
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for &v in g.neighbors(Vertex(u)) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub passed: bool,
    pub failures: Vec<String>,
    pub measured_lambda: Rat,
    pub paths_checked: usize,
}

// ---------------------------------------------------------------------------
// Staircase combing on Z^2
// ---------------------------------------------------------------------------

/// Combing of a box in the square lattice: from `a`, descend vertically as
/// close to the x-axis as the target allows, run horizontally, finish
/// vertically. The row is `z = sgn(y_a) · max(0, sgn(y_a) · y_b)`, with
/// `sgn(0) = 0` so points on the axis comb along the axis.
#[derive(Clone, Debug)]
pub struct StaircaseZ2 {
    coords: Vec<(i64, i64)>,
    index: HashMap<(i64, i64), u32>,
}

impl StaircaseZ2 {
    fn from_graph(g: &MetricGraph) -> Result<Self> {
        let mut coords = Vec::with_capacity(g.vertex_count());
        let mut index = HashMap::new();
        for v in g.vertices() {
            let c = g
                .coords(v)
                .ok_or_else(|| Error::Generation(format!("staircase system requires coordinate labels; {v} has none")))?;
            if c.len() != 2 {
                return Err(Error::Generation("staircase system requires 2d coordinates".into()));
            }
            coords.push((c[0], c[1]));
            index.insert((c[0], c[1]), v.0);
        }
        Ok(StaircaseZ2 { coords, index })
    }

    pub fn coord(&self, v: Vertex) -> (i64, i64) {
        self.coords[v.idx()]
    }

    fn vertex(&self, c: (i64, i64)) -> Result<Vertex> {
        self.index
            .get(&c)
            .map(|&i| Vertex(i))
            .ok_or_else(|| Error::Generation(format!("coordinate {c:?} outside the box")))
    }

    /// The combing line row for endpoints `a`, `b`.
    pub fn comb_row(a: (i64, i64), b: (i64, i64)) -> i64 {
        let s = a.1.signum();
        s * 0.max(s * b.1)
    }

    /// The combing line from `x` to `y`.
    pub fn combing_line(&self, g: &MetricGraph, x: Vertex, y: Vertex) -> Result<EdgePath> {
        let a = self.coord(x);
        let b = self.coord(y);
        let z = Self::comb_row(a, b);
        self.build(g, &[a, (a.0, z), (b.0, z), b])
    }

    fn build(&self, _g: &MetricGraph, corners: &[(i64, i64)]) -> Result<EdgePath> {
        let mut verts = vec![self.vertex(corners[0])?];
        for w in corners.windows(2) {
            let (from, to) = (w[0], w[1]);
            debug_assert!(from.0 == to.0 || from.1 == to.1);
            let steps = (to.0 - from.0).abs() + (to.1 - from.1).abs();
            let dir = ((to.0 - from.0).signum(), (to.1 - from.1).signum());
            let mut cur = from;
            for _ in 0..steps {
                cur = (cur.0 + dir.0, cur.1 + dir.1);
                verts.push(self.vertex(cur)?);
            }
        }
        Ok(EdgePath::from_vertices_unchecked(verts))
    }

    /// All paths of the consistent-plus-directional closure joining `u` and
    /// `v`. These fall into at most four explicit shapes, each an L¹
    /// geodesic: a straight segment, a corner at `(u₁, v₂)`, a corner at
    /// `(v₁, u₂)`, and a double corner through the x-axis.
    pub fn leg_candidates(&self, g: &MetricGraph, uv: Vertex, vv: Vertex) -> Result<Vec<EdgePath>> {
        let u = self.coord(uv);
        let v = self.coord(vv);
        let mut out = Vec::new();
        if u.0 == v.0 || u.1 == v.1 {
            out.push(self.build(g, &[u, v])?);
            return Ok(out); // corner shapes degenerate to the segment
        }
        // vertical-then-horizontal: the comb row seen from u is v₂ exactly
        // when the endpoints sit on the same side of the axis (or v is on it)
        if v.1 == 0 || (v.1 > 0 && u.1 > 0) || (v.1 < 0 && u.1 < 0) {
            out.push(self.build(g, &[u, (u.0, v.1), v])?);
        }
        // horizontal-then-vertical: inverses of the above
        if u.1 == 0 || (u.1 > 0 && v.1 > 0) || (u.1 < 0 && v.1 < 0) {
            out.push(self.build(g, &[u, (v.0, u.1), v])?);
        }
        // through the axis, only when the endpoints straddle it
        if u.1 * v.1 < 0 {
            out.push(self.build(g, &[u, (u.0, 0), (v.0, 0), v])?);
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Stored sets
// ---------------------------------------------------------------------------

/// Explicit path set, closed under subsegments (and inversion when the
/// owning config is undirected).
#[derive(Clone, Debug, Default)]
pub struct StoredSet {
    paths: Vec<EdgePath>,
    by_pair: HashMap<(u32, u32), Vec<u32>>,
}

impl StoredSet {
    /// Builds a stored set from generator paths, adding every subsegment
    /// (and inverses when `undirected`).
    pub fn with_closure(generators: Vec<EdgePath>, undirected: bool) -> Self {
        let mut seen: HashMap<Vec<Vertex>, ()> = HashMap::new();
        let mut paths = Vec::new();
        let mut push = |p: EdgePath, paths: &mut Vec<EdgePath>| {
            if seen.insert(p.vertices().to_vec(), ()).is_none() {
                paths.push(p);
            }
        };
        for gp in generators {
            let verts = gp.vertices();
            for i in 0..verts.len() {
                for j in i..verts.len() {
                    let sub = gp.window(i as u32, j as u32);
                    if undirected {
                        push(sub.inverse(), &mut paths);
                    }
                    push(sub, &mut paths);
                }
            }
        }
        paths.sort_by(|a, b| a.vertices().cmp(b.vertices()));
        let mut by_pair: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for (i, p) in paths.iter().enumerate() {
            by_pair.entry((p.start().0, p.end().0)).or_default().push(i as u32);
        }
        StoredSet { paths, by_pair }
    }

    /// Loads an explicit list without closure completion, for the JSON
    /// loader which must *fail* on closure gaps rather than repair them.
    pub fn from_explicit(paths: Vec<EdgePath>) -> Result<Self> {
        let mut sorted = paths;
        sorted.sort_by(|a, b| a.vertices().cmp(b.vertices()));
        sorted.dedup();
        let mut by_pair: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for (i, p) in sorted.iter().enumerate() {
            by_pair.entry((p.start().0, p.end().0)).or_default().push(i as u32);
        }
        let set = StoredSet { paths: sorted, by_pair };
        set.check_closure()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[EdgePath] {
        &self.paths
    }

    pub fn contains(&self, p: &EdgePath) -> bool {
        self.by_pair
            .get(&(p.start().0, p.end().0))
            .map(|idxs| idxs.iter().any(|&i| &self.paths[i as usize] == p))
            .unwrap_or(false)
    }

    pub fn paths_between(&self, x: Vertex, y: Vertex) -> Vec<EdgePath> {
        if x == y {
            return vec![EdgePath::trivial(x)];
        }
        self.by_pair
            .get(&(x.0, y.0))
            .map(|idxs| idxs.iter().map(|&i| self.paths[i as usize].clone()).collect())
            .unwrap_or_default()
    }

    /// Endpoint pairs covered by at least one stored path.
    pub fn covered_pairs(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.by_pair.keys().map(|&(a, b)| (Vertex(a), Vertex(b)))
    }

    /// Verifies subsegment closure, returning the first missing window.
    pub fn check_closure(&self) -> Result<()> {
        for p in &self.paths {
            let n = p.vertices().len() as u32;
            for i in 0..n {
                for j in i..n {
                    let sub = p.window(i, j);
                    if sub.len() > 0 && !self.contains(&sub) {
                        return Err(Error::ClosureViolation(sub.vertices().iter().map(|v| v.0).collect()));
                    }
                }
            }
        }
        Ok(())
    }

    fn missing_inverse(&self) -> Option<&EdgePath> {
        self.paths.iter().find(|p| !self.contains(&p.inverse()))
    }
}

/// JSON form of a stored system: `{"config": {...}, "paths": [[v...],...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoredSetJson {
    pub config: PathSystemConfig,
    pub paths: Vec<Vec<u32>>,
}

impl StoredSetJson {
    pub fn from_system(ps: &PathSystem) -> Result<Self> {
        match ps.kind() {
            SystemKind::StoredSet(s) => Ok(StoredSetJson {
                config: ps.config().clone(),
                paths: s.paths.iter().map(|p| p.vertices().iter().map(|v| v.0).collect()).collect(),
            }),
            _ => Err(Error::UnsupportedKind { op: "serialize", kind: ps.kind_name() }),
        }
    }

    /// Validates paths against the graph and enforces closure, failing with
    /// the first missing subsegment.
    pub fn into_system(self, g: &MetricGraph) -> Result<PathSystem> {
        let mut paths = Vec::with_capacity(self.paths.len());
        for vs in self.paths {
            paths.push(EdgePath::new(g, vs.into_iter().map(Vertex).collect())?);
        }
        let set = StoredSet::from_explicit(paths)?;
        Ok(PathSystem::stored(set, self.config))
    }
}

// ---------------------------------------------------------------------------
// Push-forward
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct PushForwardOptions {
    /// Per-pair cap when materializing an implicit source system.
    pub source_cap: usize,
    /// Cap on end-geodesic attachment points per endpoint (the definition
    /// attaches to all target vertices within `C`; the cap is ours and is
    /// reported).
    pub attach_cap: usize,
    pub qi_sample_pairs: usize,
    pub seed: u64,
}

impl Default for PushForwardOptions {
    fn default() -> Self {
        PushForwardOptions { source_cap: 4, attach_cap: 4, qi_sample_pairs: 200, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct PushForwardOutcome {
    pub system: PathSystem,
    pub attachments_capped: bool,
    pub source_paths_used: usize,
}

/// The C-push-forward of a path system along a vertex map `f`.
///
/// Validates that `f` is a C-quasi-isometry on sampled pairs, rectifies the
/// image of every materialized source path, attaches end geodesics to all
/// target vertices within `C` of the endpoint images (capped), and closes
/// under subsegments and, for undirected sources, inversion.
pub fn push_forward(
    f: &[Vertex],
    c: Rat,
    source_g: &MetricGraph,
    source_ps: &PathSystem,
    target_g: &MetricGraph,
    opts: &PushForwardOptions,
) -> Result<PushForwardOutcome> {
    if f.len() != source_g.vertex_count() {
        return Err(Error::InvalidInstance(format!(
            "map defined on {} vertices, source has {}",
            f.len(),
            source_g.vertex_count()
        )));
    }
    for &img in f {
        if img.idx() >= target_g.vertex_count() {
            return Err(Error::InvalidVertex { vertex: img.0, count: target_g.vertex_count() });
        }
    }
    // sampled quasi-isometry validation
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let n = source_g.vertex_count() as u32;
    for _ in 0..opts.qi_sample_pairs {
        let x = Vertex(rng.gen_range(0..n));
        let y = Vertex(rng.gen_range(0..n));
        let d_src = source_g.bfs_row(x.0)[y.idx()];
        let d_img = target_g.bfs_row(f[x.idx()].0)[f[y.idx()].idx()];
        let ds = Rat::from_integer(d_src as i64);
        let di = Rat::from_integer(d_img as i64);
        if di > c * ds + c || di < ds / c - c {
            return Err(Error::NotQuasiIsometry { c, x, y, d_src, d_img });
        }
    }

    let source_set = source_ps.materialize(source_g, opts.source_cap)?;
    let mut generators = Vec::new();
    let mut capped = false;
    for h in source_set.paths() {
        let image: Vec<Vertex> = h.vertices().iter().map(|v| f[v.idx()]).collect();
        let rectified = rectify(target_g, &image)?;
        let start_row = target_g.bfs_row(rectified.start().0);
        let end_row = target_g.bfs_row(rectified.end().0);
        let mut starts: Vec<Vertex> = target_g.vertices().filter(|v| Rat::from_integer(start_row[v.idx()] as i64) <= c).collect();
        let mut ends: Vec<Vertex> = target_g.vertices().filter(|v| Rat::from_integer(end_row[v.idx()] as i64) <= c).collect();
        if starts.len() > opts.attach_cap || ends.len() > opts.attach_cap {
            capped = true;
            starts.truncate(opts.attach_cap);
            ends.truncate(opts.attach_cap);
        }
        for &s in &starts {
            for &e in &ends {
                let pre = lex_min_geodesic(target_g, s, rectified.start())?;
                let post = lex_min_geodesic(target_g, rectified.end(), e)?;
                generators.push(pre.concat(&rectified)?.concat(&post)?);
            }
        }
    }
    let undirected = source_ps.config().undirected;
    let set = StoredSet::with_closure(generators, undirected);
    // quasi-geodesic constants of the push-forward depend only on the source
    // constants and C; a safe affine bound is used here
    let cfg = PathSystemConfig {
        lambda0: source_ps.config().lambda0 * c * c + c,
        kappa0: source_ps.config().kappa0 * c + Rat::from_integer(4) * c + Rat::from_integer(2),
        c_p: source_ps.config().c_p * c * c + Rat::from_integer(4) * c + Rat::from_integer(2),
        undirected,
    };
    let mut system = PathSystem::stored(set, cfg);
    system.from_push_forward = true;
    Ok(PushForwardOutcome { system, attachments_capped: capped, source_paths_used: source_set.len() })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::Label;
    use crate::rat;

    fn grid(w: usize, h: usize) -> MetricGraph {
        let idx = |x: usize, y: usize| (x * h + y) as u32;
        let mut edges = Vec::new();
        let mut labels = Vec::new();
        for x in 0..w {
            for y in 0..h {
                labels.push(Label::Coords(vec![x as i64, y as i64]));
                if x + 1 < w {
                    edges.push((idx(x, y), idx(x + 1, y)));
                }
                if y + 1 < h {
                    edges.push((idx(x, y), idx(x, y + 1)));
                }
            }
        }
        MetricGraph::from_edges(w * h, &edges).unwrap().with_labels(labels)
    }

    /// Box [-n, n]^2 with coordinate labels.
    pub(crate) fn staircase_box(n: i64) -> (MetricGraph, PathSystem) {
        let side = (2 * n + 1) as usize;
        let idx = |x: i64, y: i64| ((x + n) as usize * side + (y + n) as usize) as u32;
        let mut edges = Vec::new();
        let mut labels = Vec::new();
        for x in -n..=n {
            for y in -n..=n {
                labels.push(Label::Coords(vec![x, y]));
                if x + 1 <= n {
                    edges.push((idx(x, y), idx(x + 1, y)));
                }
                if y + 1 <= n {
                    edges.push((idx(x, y), idx(x, y + 1)));
                }
            }
        }
        let g = MetricGraph::from_edges(side * side, &edges).unwrap().with_labels(labels);
        let ps = PathSystem::staircase_z2(&g).unwrap();
        (g, ps)
    }

    fn tree_graph() -> MetricGraph {
        // binary tree of depth 3
        let mut edges = Vec::new();
        for i in 1..15u32 {
            edges.push((i, (i - 1) / 2));
        }
        MetricGraph::from_edges(15, &edges).unwrap()
    }

    #[test]
    fn all_geodesics_on_tree_unique() {
        let g = tree_graph();
        let ps = PathSystem::all_geodesics();
        let (paths, complete) = ps.special_paths(&g, Vertex(7), Vertex(14), 10).unwrap();
        assert_eq!(paths.len(), 1);
        assert!(complete);
        assert!(ps.unique_paths(&g));
    }

    #[test]
    fn grid_geodesic_count() {
        let g = grid(3, 3);
        let ps = PathSystem::all_geodesics();
        let a = g.vertex_at(&[0, 0]).unwrap();
        let b = g.vertex_at(&[2, 2]).unwrap();
        let (paths, complete) = ps.special_paths(&g, a, b, 100).unwrap();
        assert_eq!(paths.len(), 6); // C(4,2) monotone lattice paths
        assert!(complete);
    }

    #[test]
    fn trivial_special_path() {
        let g = grid(3, 3);
        let ps = PathSystem::all_geodesics();
        let (paths, _) = ps.special_paths(&g, Vertex(4), Vertex(4), 1).unwrap();
        assert_eq!(paths.len(), 1);
        assert!(paths[0].is_trivial());
    }

    #[test]
    fn min_leg_empty_ball_is_distance() {
        let g = grid(4, 4);
        let ps = PathSystem::all_geodesics();
        let ball = Ball::empty(Vertex(5));
        let r = ps.min_leg_avoiding(&g, Vertex(0), Vertex(15), &ball).unwrap();
        assert_eq!(r, LegFeasibility::Feasible(6));
    }

    #[test]
    fn min_leg_tree_separation() {
        let g = tree_graph();
        let ps = PathSystem::all_geodesics();
        // ball on the root separates the two depth-1 subtrees
        let ball = Ball::new(Vertex(0), rat(0, 1));
        let r = ps.min_leg_avoiding(&g, Vertex(1), Vertex(2), &ball).unwrap();
        assert_eq!(r, LegFeasibility::Infeasible);
    }

    #[test]
    fn min_leg_grid_straight_blocked() {
        let g = grid(9, 9);
        let ps = PathSystem::all_geodesics();
        let x = g.vertex_at(&[0, 4]).unwrap();
        let y = g.vertex_at(&[8, 4]).unwrap();
        let ball = Ball::new(g.vertex_at(&[4, 4]).unwrap(), rat(0, 1));
        // all geodesics are straight along the row; punctured distance is 10 != 8
        let r = ps.min_leg_avoiding(&g, x, y, &ball).unwrap();
        assert_eq!(r, LegFeasibility::Infeasible);
    }

    #[test]
    fn min_leg_endpoint_in_ball_flagged() {
        let g = grid(3, 3);
        let ps = PathSystem::all_geodesics();
        let ball = Ball::new(Vertex(0), rat(1, 1));
        let r = ps.min_leg_avoiding(&g, Vertex(1), Vertex(8), &ball).unwrap();
        assert_eq!(r, LegFeasibility::EndpointInBall);
    }

    #[test]
    fn staircase_combing_formula() {
        let (g, ps) = staircase_box(6);
        let SystemKind::StaircaseZ2(t) = ps.kind() else { panic!() };
        // sign conventions of the comb row
        assert_eq!(StaircaseZ2::comb_row((0, 5), (4, 3)), 3);
        assert_eq!(StaircaseZ2::comb_row((0, 5), (4, -3)), 0);
        assert_eq!(StaircaseZ2::comb_row((0, -5), (4, -2)), -2);
        assert_eq!(StaircaseZ2::comb_row((0, -5), (4, 2)), 0);
        assert_eq!(StaircaseZ2::comb_row((0, 0), (4, 3)), 0);
        // a combing line is an L1 geodesic through the comb row
        let a = g.vertex_at(&[-2, 5]).unwrap();
        let b = g.vertex_at(&[3, -4]).unwrap();
        let line = t.combing_line(&g, a, b).unwrap();
        assert_eq!(line.len(), 5 + 9);
        assert!(line.contains(g.vertex_at(&[-2, 0]).unwrap()));
        assert!(line.contains(g.vertex_at(&[3, 0]).unwrap()));
    }

    #[test]
    fn staircase_legs_are_closure_members() {
        let (g, ps) = staircase_box(4);
        let SystemKind::StaircaseZ2(t) = ps.kind() else { panic!() };
        let u = g.vertex_at(&[-2, 3]).unwrap();
        let v = g.vertex_at(&[2, 1]).unwrap();
        let legs = t.leg_candidates(&g, u, v).unwrap();
        // same-side pair: the combing line itself (corner at (u1, v2)) and
        // the inverse of the reverse combing line (corner at (v1, u2))
        assert_eq!(legs.len(), 2);
        assert!(legs[0].contains(g.vertex_at(&[-2, 1]).unwrap()));
        assert!(legs[1].contains(g.vertex_at(&[2, 3]).unwrap()));
        for leg in &legs {
            assert_eq!(leg.len(), 4 + 2);
            assert!(ps.is_member(&g, leg));
        }
        // straddling pair gets the through-axis candidate as well
        let w = g.vertex_at(&[2, -3]).unwrap();
        let legs = t.leg_candidates(&g, u, w).unwrap();
        assert!(legs.iter().any(|l| l.contains(g.vertex_at(&[0, 0]).unwrap()) || l.contains(g.vertex_at(&[-2, 0]).unwrap())));
        for leg in &legs {
            assert_eq!(leg.len(), 4 + 6); // every candidate is a geodesic
        }
    }

    #[test]
    fn staircase_closure_matches_materialization() {
        // the four-shape characterization of closure members must coincide
        // with the brute-force set of subsegments of combing lines and
        // inverses, on every pair of a small box
        let (g, ps) = staircase_box(3);
        let SystemKind::StaircaseZ2(t) = ps.kind() else { panic!() };
        use std::collections::HashSet;
        let mut materialized: HashSet<Vec<Vertex>> = HashSet::new();
        for a in g.vertices() {
            for b in g.vertices() {
                let line = t.combing_line(&g, a, b).unwrap();
                let verts = line.vertices();
                for i in 0..verts.len() {
                    for j in i..verts.len() {
                        let sub = line.window(i as u32, j as u32);
                        materialized.insert(sub.vertices().to_vec());
                        materialized.insert(sub.inverse().vertices().to_vec());
                    }
                }
            }
        }
        for u in g.vertices() {
            for v in g.vertices() {
                if u == v {
                    continue;
                }
                let candidates = t.leg_candidates(&g, u, v).unwrap();
                // every candidate is a genuine closure member
                for c in &candidates {
                    assert!(
                        materialized.contains(c.vertices()),
                        "claimed candidate {:?} is not a combing subsegment",
                        c.vertices()
                    );
                }
                // and every closure member between u and v is a candidate
                let cand_set: HashSet<&[Vertex]> = candidates.iter().map(|c| c.vertices()).collect();
                for m in &materialized {
                    if m.first() == Some(&u) && m.last() == Some(&v) {
                        assert!(
                            cand_set.contains(m.as_slice()),
                            "combing subsegment {m:?} missing from the candidates"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn staircase_quasi_geodesic_validation() {
        let (g, ps) = staircase_box(5);
        let rep = ps.validate(&g, 3, 60);
        assert!(rep.passed, "{:?}", rep.failures);
        assert!(rep.measured_lambda <= rat(3, 1));
    }

    #[test]
    fn bounded_replacement_identity_and_tree() {
        let g = tree_graph();
        let ps = PathSystem::tree_geodesics();
        let h = lex_min_geodesic(&g, Vertex(7), Vertex(3)).unwrap();
        assert_eq!(ps.bounded_replacement(&g, &h, h.end()).unwrap(), h);
        // extend by one edge toward a child of 3
        let h2 = ps.bounded_replacement(&g, &h, Vertex(8)).unwrap();
        assert_eq!(h2.end(), Vertex(8));
        assert!(hausdorff(&g, &h, &h2) <= 1);
    }

    #[test]
    fn bounded_replacement_grid_median() {
        let g = grid(4, 4);
        let ps = PathSystem::median_monotone();
        let h = lex_min_geodesic(&g, g.vertex_at(&[0, 0]).unwrap(), g.vertex_at(&[3, 3]).unwrap()).unwrap();
        let y2 = g.vertex_at(&[3, 2]).unwrap();
        let h2 = ps.bounded_replacement(&g, &h, y2).unwrap();
        assert_eq!(h2.end(), y2);
        assert!(hausdorff(&g, &h, &h2) <= 2);
    }

    #[test]
    fn stored_set_closure_enforced() {
        let g = grid(3, 3);
        let p = lex_min_geodesic(&g, Vertex(0), Vertex(8)).unwrap();
        // explicit load without subsegments must fail
        assert!(StoredSet::from_explicit(vec![p.clone()]).is_err());
        let set = StoredSet::with_closure(vec![p.clone()], true);
        assert!(set.check_closure().is_ok());
        assert!(set.contains(&p.inverse()));
        let ps = PathSystem::stored(set, PathSystemConfig::geodesic());
        assert!(ps.is_member(&g, &p.window(1, 3)));
    }

    #[test]
    fn stored_set_json_roundtrip() {
        let g = grid(3, 3);
        let p = lex_min_geodesic(&g, Vertex(0), Vertex(8)).unwrap();
        let set = StoredSet::with_closure(vec![p], true);
        let ps = PathSystem::stored(set, PathSystemConfig::geodesic());
        let json = serde_json::to_string(&StoredSetJson::from_system(&ps).unwrap()).unwrap();
        let back: StoredSetJson = serde_json::from_str(&json).unwrap();
        let ps2 = back.into_system(&g).unwrap();
        assert_eq!(
            serde_json::to_string(&StoredSetJson::from_system(&ps2).unwrap()).unwrap(),
            json
        );
    }

    #[test]
    fn push_forward_identity_keeps_geodesics() {
        let g = grid(3, 3);
        let ps = PathSystem::all_geodesics();
        let f: Vec<Vertex> = g.vertices().collect();
        let out = push_forward(&f, rat(0, 1) + rat(1, 1), &g, &ps, &g, &PushForwardOptions::default()).unwrap();
        // with C = 1 the attachments stay within distance 1; the rectified
        // geodesics themselves must be present
        let p = lex_min_geodesic(&g, Vertex(0), Vertex(8)).unwrap();
        assert!(out.system.is_member(&g, &p));
        assert!(out.system.config().undirected);
    }

    #[test]
    fn push_forward_rejects_collapse() {
        // collapsing the y-coordinate of a grid is not a quasi-isometry for
        // small C: distances contract unboundedly
        let g = grid(7, 7);
        let target = grid(7, 7);
        let f: Vec<Vertex> = g
            .vertices()
            .map(|v| {
                let c = g.coords(v).unwrap();
                target.vertex_at(&[c[0], 0]).unwrap()
            })
            .collect();
        let err = push_forward(&f, rat(1, 1), &g, &PathSystem::all_geodesics(), &target, &PushForwardOptions::default());
        assert!(matches!(err, Err(Error::NotQuasiIsometry { .. })));
    }

    #[test]
    fn push_forward_halving_hausdorff() {
        // grid (2n+1)^2 -> (n+1)^2 by halving coordinates, C = 2
        let n = 3i64;
        let src = grid((2 * n + 1) as usize, (2 * n + 1) as usize);
        let tgt = grid((n + 1) as usize, (n + 1) as usize);
        let f: Vec<Vertex> = src
            .vertices()
            .map(|v| {
                let c = src.coords(v).unwrap();
                tgt.vertex_at(&[c[0] / 2, c[1] / 2]).unwrap()
            })
            .collect();
        let opts = PushForwardOptions { source_cap: 2, attach_cap: 2, qi_sample_pairs: 300, seed: 5 };
        let out = push_forward(&f, rat(2, 1), &src, &PathSystem::all_geodesics(), &tgt, &opts).unwrap();
        // every image of a source path is Hausdorff-close to a pushed path
        let (paths, _) = PathSystem::all_geodesics().special_paths(&src, Vertex(0), Vertex((src.vertex_count() - 1) as u32), 1).unwrap();
        let image: Vec<Vertex> = paths[0].vertices().iter().map(|v| f[v.idx()]).collect();
        let rectified = rectify(&tgt, &image).unwrap();
        let best = out
            .system
            .special_paths(&tgt, rectified.start(), rectified.end(), 64)
            .unwrap()
            .0
            .into_iter()
            .map(|p| hausdorff(&tgt, &rectified, &p))
            .min()
            .unwrap();
        assert!(best <= 4, "pushed path should be Hausdorff-close, got {best}");
    }

    #[test]
    fn validate_all_geodesics_passes() {
        let g = grid(4, 4);
        let rep = PathSystem::all_geodesics().validate(&g, 1, 40);
        assert!(rep.passed);
        assert_eq!(rep.measured_lambda, rat(1, 1));
    }

    #[test]
    fn validate_stored_set_missing_subsegment_fails() {
        let g = grid(3, 3);
        let p = lex_min_geodesic(&g, Vertex(0), Vertex(8)).unwrap();
        let mut paths: Vec<EdgePath> = Vec::new();
        let verts = p.vertices();
        for i in 0..verts.len() {
            for j in i..verts.len() {
                paths.push(p.window(i as u32, j as u32));
            }
        }
        // drop one interior window to break closure
        paths.retain(|q| q.len() != 2 || q.start() != Vertex(0));
        let mut sorted = paths;
        sorted.sort_by(|a, b| a.vertices().cmp(b.vertices()));
        let mut by_pair: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for (i, p) in sorted.iter().enumerate() {
            by_pair.entry((p.start().0, p.end().0)).or_default().push(i as u32);
        }
        let set = StoredSet { paths: sorted, by_pair };
        let ps = PathSystem::stored(set, PathSystemConfig::geodesic());
        let rep = ps.validate(&g, 1, 0);
        assert!(!rep.passed);
    }
}
