//! Finite graph substrate: distances, punctured distances, hyperbolicity
//! measurement, medians.
//!
//! All graphs are simple, undirected, connected, with unit edge lengths.
//! Distances are exact BFS distances. Balls are *closed*: a vertex `v`
//! belongs to `B(c, r)` iff `d(v, c) <= r`, with `r` an exact rational.
//! Paths are evaluated on vertices only: a path avoids a ball iff none of
//! its vertices lies in the closed ball.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use num_traits::Signed;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Rat, Vertex};

/// Optional per-vertex tag: lattice coordinates or a group normal form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Coords(Vec<i64>),
    Word(String),
}

/// Finite simple connected graph with unit edge lengths.
///
/// Immutable after construction; all queries are read-only and shareable
/// among parallel workers.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    adj: Vec<Vec<u32>>,
    labels: Option<Vec<Label>>,
}

impl MetricGraph {
    /// Builds a graph from an edge list, validating simplicity and
    /// connectivity.
    pub fn from_edges(vertex_count: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let n = vertex_count;
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n {
                return Err(Error::InvalidVertex { vertex: u, count: n });
            }
            if v as usize >= n {
                return Err(Error::InvalidVertex { vertex: v, count: n });
            }
            if u == v {
                return Err(Error::BadEdge(u, v));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for (u, nbrs) in adj.iter_mut().enumerate() {
            nbrs.sort_unstable();
            if nbrs.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::BadEdge(u as u32, nbrs[0]));
            }
        }
        let g = MetricGraph { adj, labels: None };
        if n > 0 {
            let d = g.bfs_row(0);
            if let Some(v) = d.iter().position(|&x| x == UNREACHED) {
                return Err(Error::Disconnected(v as u32));
            }
        }
        Ok(g)
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Self {
        assert_eq!(labels.len(), self.vertex_count());
        self.labels = Some(labels);
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.adj.len() as u32).map(Vertex)
    }

    pub fn neighbors(&self, v: Vertex) -> &[u32] {
        &self.adj[v.idx()]
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adj
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adj[u.idx()].binary_search(&v.0).is_ok()
    }

    pub fn label(&self, v: Vertex) -> Option<&Label> {
        self.labels.as_ref().map(|l| &l[v.idx()])
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    /// Coordinates of `v` if it carries a `Coords` label.
    pub fn coords(&self, v: Vertex) -> Option<&[i64]> {
        match self.label(v) {
            Some(Label::Coords(c)) => Some(c),
            _ => None,
        }
    }

    /// Finds the vertex carrying the given coordinate label.
    pub fn vertex_at(&self, coords: &[i64]) -> Option<Vertex> {
        let labels = self.labels.as_ref()?;
        labels.iter().position(|l| matches!(l, Label::Coords(c) if c == coords)).map(|i| Vertex(i as u32))
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v.idx() >= self.vertex_count() {
            return Err(Error::InvalidVertex { vertex: v.0, count: self.vertex_count() });
        }
        Ok(())
    }

    /// Exact distances from `src` to every vertex.
    pub fn distance_map(&self, src: Vertex) -> Result<Vec<u32>> {
        self.check_vertex(src)?;
        Ok(self.bfs_row(src.0))
    }

    pub fn distance(&self, u: Vertex, v: Vertex) -> Result<u32> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        Ok(self.bfs_row(u.0)[v.idx()])
    }

    /// Unchecked distance row; the source must be a valid vertex.
    pub fn bfs_row(&self, src: u32) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.adj.len()];
        let mut queue = VecDeque::new();
        dist[src as usize] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &v in &self.adj[u as usize] {
                if dist[v as usize] == UNREACHED {
                    dist[v as usize] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Distances in the vertex-induced subgraph on the complement of the
    /// ball. `None` marks unreachable vertices. A ball of negative radius
    /// is empty, so the result agrees with [`Self::distance_map`].
    pub fn punctured_distance_map(&self, src: Vertex, ball: &Ball) -> Result<Vec<Option<u32>>> {
        self.check_vertex(src)?;
        self.check_vertex(ball.center)?;
        let center_row = self.bfs_row(ball.center.0);
        let d_src = center_row[src.idx()];
        if ball.contains_distance(d_src) {
            return Err(Error::SourceInsideBall { src, dist: d_src, radius: ball.radius });
        }
        let row = self.punctured_bfs(src.0, |v| ball.contains_distance(center_row[v as usize]));
        Ok(row.into_iter().map(|d| if d == UNREACHED { None } else { Some(d) }).collect())
    }

    /// BFS avoiding every vertex for which `forbidden` holds. The source is
    /// assumed admissible.
    pub(crate) fn punctured_bfs(&self, src: u32, forbidden: impl Fn(u32) -> bool) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.adj.len()];
        let mut queue = VecDeque::new();
        dist[src as usize] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &v in &self.adj[u as usize] {
                if dist[v as usize] == UNREACHED && !forbidden(v) {
                    dist[v as usize] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// All-pairs distance matrix, row-major. Only sensible for small graphs.
    pub fn all_pairs(&self) -> Vec<Vec<u32>> {
        (0..self.adj.len() as u32).map(|v| self.bfs_row(v)).collect()
    }

    pub fn diameter(&self) -> u32 {
        let mut best = 0;
        for v in 0..self.adj.len() as u32 {
            let row = self.bfs_row(v);
            best = best.max(row.into_iter().max().unwrap_or(0));
        }
        best
    }

    /// The unique median of a triple in a median graph: the single vertex in
    /// `I(x,y) ∩ I(x,z) ∩ I(y,z)`.
    pub fn median(&self, x: Vertex, y: Vertex, z: Vertex) -> Result<Vertex> {
        for v in [x, y, z] {
            self.check_vertex(v)?;
        }
        let dx = self.bfs_row(x.0);
        let dy = self.bfs_row(y.0);
        let dz = self.bfs_row(z.0);
        let (dxy, dxz, dyz) = (dx[y.idx()], dx[z.idx()], dy[z.idx()]);
        let mut found = None;
        let mut count = 0usize;
        for v in 0..self.adj.len() {
            if dx[v] + dy[v] == dxy && dx[v] + dz[v] == dxz && dy[v] + dz[v] == dyz {
                count += 1;
                if found.is_none() {
                    found = Some(Vertex(v as u32));
                }
            }
        }
        match (found, count) {
            (Some(m), 1) => Ok(m),
            _ => Err(Error::NotMedian(x, y, z, count)),
        }
    }

    /// Checks the unique-median property, exhaustively for small graphs and
    /// on a seeded sample of triples above the threshold.
    pub fn is_median_graph(&self, seed: u64) -> MedianReport {
        let n = self.vertex_count();
        if n <= MEDIAN_EXHAUSTIVE_LIMIT {
            let rows = self.all_pairs();
            for x in 0..n {
                for y in x..n {
                    for z in y..n {
                        if let Some(w) = median_defect(&rows, x, y, z) {
                            return MedianReport { is_median: false, witness: Some(w), exhaustive: true, triples: 0 };
                        }
                    }
                }
            }
            MedianReport { is_median: true, witness: None, exhaustive: true, triples: 0 }
        } else {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let triples = MEDIAN_SAMPLE_TRIPLES;
            for _ in 0..triples {
                let x = rng.gen_range(0..n);
                let y = rng.gen_range(0..n);
                let z = rng.gen_range(0..n);
                let rows = [self.bfs_row(x as u32), self.bfs_row(y as u32), self.bfs_row(z as u32)];
                if let Some(w) = median_defect_rows(&rows, x, y, z) {
                    return MedianReport { is_median: false, witness: Some(w), exhaustive: false, triples };
                }
            }
            MedianReport { is_median: true, witness: None, exhaustive: false, triples }
        }
    }

    /// Measured four-point hyperbolicity defect. Exhaustive mode is exact;
    /// sampled mode is a lower bound and flagged as such.
    pub fn four_point_delta(&self, spec: &SampleSpec) -> Result<DeltaReport> {
        four_point_delta_adj(self.adjacency(), spec)
    }

    /// Number of vertices within distance `k` of `x`, flagged when the ball
    /// is truncated by the instance boundary.
    pub fn growth(&self, x: Vertex, k: u32) -> Result<GrowthReport> {
        self.check_vertex(x)?;
        let row = self.bfs_row(x.0);
        let count = row.iter().filter(|&&d| d <= k).count();
        let ecc = row.iter().copied().max().unwrap_or(0);
        Ok(GrowthReport { count, truncated: k > ecc })
    }

    /// Vertex-min growth function `S(k) = min_x |B(x, k)|`.
    pub fn growth_min(&self, k: u32) -> usize {
        (0..self.adj.len() as u32)
            .map(|v| self.bfs_row(v).iter().filter(|&&d| d <= k).count())
            .min()
            .unwrap_or(0)
    }

    /// Checks that a vertex permutation preserves adjacency.
    pub fn is_automorphism(&self, perm: &[u32]) -> bool {
        if perm.len() != self.vertex_count() {
            return false;
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p as usize >= perm.len() || seen[p as usize] {
                return false;
            }
            seen[p as usize] = true;
        }
        for u in 0..self.adj.len() {
            for &v in &self.adj[u] {
                let (pu, pv) = (perm[u], perm[v as usize]);
                if !self.has_edge(Vertex(pu), Vertex(pv)) {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson::from_graph(self)
    }

    /// DOT rendering for visualization.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = format!("graph {name} {{\n");
        for v in 0..self.adj.len() {
            match self.label(Vertex(v as u32)) {
                Some(Label::Coords(c)) => {
                    out.push_str(&format!("  {v} [label=\"{c:?}\"];\n"));
                }
                Some(Label::Word(w)) => {
                    out.push_str(&format!("  {v} [label=\"{w}\"];\n"));
                }
                None => out.push_str(&format!("  {v};\n")),
            }
        }
        for u in 0..self.adj.len() {
            for &v in &self.adj[u] {
                if (u as u32) < v {
                    out.push_str(&format!("  {u} -- {v};\n"));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) const UNREACHED: u32 = u32::MAX;

const MEDIAN_EXHAUSTIVE_LIMIT: usize = 300;
const MEDIAN_SAMPLE_TRIPLES: u64 = 20_000;
const DELTA_EXHAUSTIVE_LIMIT: usize = 200;
/// Deterministic prefix block scanned in full by sampled four-point mode.
const DELTA_PREFIX_BLOCK: usize = 170;

fn median_defect(rows: &[Vec<u32>], x: usize, y: usize, z: usize) -> Option<(Vertex, Vertex, Vertex)> {
    let rs = [&rows[x], &rows[y], &rows[z]];
    median_defect_inner(rs, x, y, z)
}

fn median_defect_rows(rows: &[Vec<u32>; 3], x: usize, y: usize, z: usize) -> Option<(Vertex, Vertex, Vertex)> {
    median_defect_inner([&rows[0], &rows[1], &rows[2]], x, y, z)
}

fn median_defect_inner(rs: [&Vec<u32>; 3], x: usize, y: usize, z: usize) -> Option<(Vertex, Vertex, Vertex)> {
    let dxy = rs[0][y];
    let dxz = rs[0][z];
    let dyz = rs[1][z];
    let mut count = 0usize;
    for v in 0..rs[0].len() {
        if rs[0][v] + rs[1][v] == dxy && rs[0][v] + rs[2][v] == dxz && rs[1][v] + rs[2][v] == dyz {
            count += 1;
            if count > 1 {
                break;
            }
        }
    }
    if count == 1 {
        None
    } else {
        Some((Vertex(x as u32), Vertex(y as u32), Vertex(z as u32)))
    }
}

/// Closed ball `B(center, radius)`; radii are exact rationals, and negative
/// radii denote the empty ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vertex,
    pub radius: Rat,
}

impl Ball {
    pub fn new(center: Vertex, radius: Rat) -> Self {
        Ball { center, radius }
    }

    pub fn empty(center: Vertex) -> Self {
        Ball { center, radius: Rat::from_integer(-1) }
    }

    pub fn is_empty(&self) -> bool {
        self.radius.is_negative()
    }

    #[inline]
    pub fn contains_distance(&self, d: u32) -> bool {
        Rat::from_integer(d as i64) <= self.radius
    }
}

/// Sampling strategy for quadruple scans.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SampleSpec {
    /// Scan every quadruple. Exact. Limited to the default vertex-count
    /// threshold.
    Exhaustive,
    /// Exhaustive scan with a caller-supplied vertex-count threshold, for
    /// configurations that override the default.
    ExhaustiveUpTo(usize),
    /// Scan all quadruples within a vertex subset: a deterministic prefix
    /// block plus seeded random vertices up to `subset` in total. Reported
    /// as a lower bound.
    Sampled { seed: u64, subset: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaReport {
    pub delta: Rat,
    /// Exact value (exhaustive) as opposed to a sampled lower bound.
    pub exact: bool,
    pub vertices_used: usize,
}

#[derive(Clone, Debug)]
pub struct MedianReport {
    pub is_median: bool,
    pub witness: Option<(Vertex, Vertex, Vertex)>,
    pub exhaustive: bool,
    pub triples: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct GrowthReport {
    pub count: usize,
    pub truncated: bool,
}

/// Four-point delta over an arbitrary adjacency structure (used for both
/// base graphs and contraction spaces).
pub fn four_point_delta_adj(adj: &[Vec<u32>], spec: &SampleSpec) -> Result<DeltaReport> {
    let n = adj.len();
    if n == 0 {
        return Err(Error::BadSampleSpec("empty graph".into()));
    }
    let chosen: Vec<u32> = match spec {
        SampleSpec::Exhaustive | SampleSpec::ExhaustiveUpTo(_) => {
            let limit = match spec {
                SampleSpec::ExhaustiveUpTo(l) => *l,
                _ => DELTA_EXHAUSTIVE_LIMIT,
            };
            if n > limit {
                return Err(Error::BadSampleSpec(format!(
                    "exhaustive four-point scan limited to {limit} vertices, got {n}"
                )));
            }
            (0..n as u32).collect()
        }
        SampleSpec::Sampled { seed, subset } => {
            let mut picked: Vec<u32> = (0..n.min(DELTA_PREFIX_BLOCK) as u32).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let mut in_set = vec![false; n];
            for &v in &picked {
                in_set[v as usize] = true;
            }
            while picked.len() < (*subset).min(n) {
                let v = rng.gen_range(0..n);
                if !in_set[v] {
                    in_set[v] = true;
                    picked.push(v as u32);
                }
            }
            picked
        }
    };
    // Distance matrix restricted to the chosen subset.
    let rows: Vec<Vec<u32>> = chosen.iter().map(|&v| bfs_adj(adj, v)).collect();
    let m = chosen.len();
    let d = |i: usize, j: usize| rows[i][chosen[j] as usize];
    let mut best: u32 = 0; // defect doubled, to stay integral
    for w in 0..m {
        for x in (w + 1)..m {
            let dwx = d(w, x);
            for y in (x + 1)..m {
                let (dwy, dxy) = (d(w, y), d(x, y));
                for z in (y + 1)..m {
                    let s1 = dwx + d(y, z);
                    let s2 = dwy + d(x, z);
                    let s3 = d(w, z) + dxy;
                    let (hi, mid) = top_two(s1, s2, s3);
                    if hi - mid > best {
                        best = hi - mid;
                    }
                }
            }
        }
    }
    Ok(DeltaReport {
        delta: Rat::new(best as i64, 2),
        exact: !matches!(spec, SampleSpec::Sampled { .. }),
        vertices_used: m,
    })
}

#[inline]
fn top_two(a: u32, b: u32, c: u32) -> (u32, u32) {
    let (hi, rest) = if a >= b { (a, (b, c)) } else { (b, (a, c)) };
    if rest.0 >= rest.1 {
        if hi >= rest.0 { (hi, rest.0) } else { (rest.0, hi) }
    } else if hi >= rest.1 {
        (hi, rest.1)
    } else {
        (rest.1, hi)
    }
}

pub(crate) fn bfs_adj(adj: &[Vec<u32>], src: u32) -> Vec<u32> {
    let mut dist = vec![UNREACHED; adj.len()];
    let mut queue = VecDeque::new();
    dist[src as usize] = 0;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for &v in &adj[u as usize] {
            if dist[v as usize] == UNREACHED {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// JSON schema for graphs: `{"vertices": N, "edges": [[u,v],...], "labels": {...}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: usize,
    pub edges: Vec<(u32, u32)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, Label>>,
}

impl GraphJson {
    pub fn from_graph(g: &MetricGraph) -> Self {
        let mut edges = Vec::new();
        for u in 0..g.vertex_count() {
            for &v in g.neighbors(Vertex(u as u32)) {
                if (u as u32) < v {
                    edges.push((u as u32, v));
                }
            }
        }
        let labels = g.labels().map(|ls| {
            ls.iter().enumerate().map(|(i, l)| (i.to_string(), l.clone())).collect()
        });
        GraphJson { vertices: g.vertex_count(), edges, labels }
    }

    pub fn into_graph(self) -> Result<MetricGraph> {
        let g = MetricGraph::from_edges(self.vertices, &self.edges)?;
        match self.labels {
            Some(map) => {
                let mut labels = vec![Label::Word(String::new()); self.vertices];
                for (k, v) in map {
                    let idx: usize = k.parse().map_err(|_| Error::Generation(format!("bad label key {k}")))?;
                    if idx >= self.vertices {
                        return Err(Error::InvalidVertex { vertex: idx as u32, count: self.vertices });
                    }
                    labels[idx] = v;
                }
                Ok(g.with_labels(labels))
            }
            None => Ok(g),
        }
    }
}
