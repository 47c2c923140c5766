//! Edge paths, polygonal lines, and the path calculus: midpoints,
//! subsegments, prefixes/suffixes, inverses, rectification.
//!
//! Paths are unit-speed vertex sequences along edges, so the domain length
//! `|p|` and the path length `‖p‖` coincide and equal `vertex count - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::Vertex;

/// A path through consecutive adjacent vertices of a host graph.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct EdgePath {
    vertices: Vec<Vertex>,
}

impl EdgePath {
    /// Validates adjacency of consecutive vertices against the host graph.
    pub fn new(g: &MetricGraph, vertices: Vec<Vertex>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyPath);
        }
        for v in &vertices {
            if v.idx() >= g.vertex_count() {
                return Err(Error::InvalidVertex { vertex: v.0, count: g.vertex_count() });
            }
        }
        for w in vertices.windows(2) {
            if !g.has_edge(w[0], w[1]) {
                return Err(Error::NotAPath(w[0], w[1]));
            }
        }
        Ok(EdgePath { vertices })
    }

    pub fn trivial(v: Vertex) -> Self {
        EdgePath { vertices: vec![v] }
    }

    /// Unchecked constructor for paths produced by internal algorithms.
    pub(crate) fn from_vertices_unchecked(vertices: Vec<Vertex>) -> Self {
        debug_assert!(!vertices.is_empty());
        EdgePath { vertices }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Domain length `|p|` = path length `‖p‖` (unit edges).
    pub fn len(&self) -> u32 {
        (self.vertices.len() - 1) as u32
    }

    pub fn is_trivial(&self) -> bool {
        self.vertices.len() == 1
    }

    /// First vertex, `p⁻`.
    pub fn start(&self) -> Vertex {
        self.vertices[0]
    }

    /// Last vertex, `p⁺`.
    pub fn end(&self) -> Vertex {
        *self.vertices.last().unwrap()
    }

    pub fn vertex_at(&self, t: u32) -> Vertex {
        self.vertices[t as usize]
    }

    pub fn inverse(&self) -> EdgePath {
        let mut v = self.vertices.clone();
        v.reverse();
        EdgePath { vertices: v }
    }

    /// The vertex at parameter `⌊|p|/2⌋`. The continuous midpoint is rounded
    /// to the earlier vertex; midthin radii consequently carry ±1/2 slack.
    pub fn midpoint(&self) -> Vertex {
        self.vertices[(self.len() / 2) as usize]
    }

    /// Maximal subpath from the first occurrence of `u` to the last
    /// occurrence of `v`. Errors if `u`, `v` do not occur in that order.
    pub fn subsegment_between(&self, u: Vertex, v: Vertex) -> Result<EdgePath> {
        let first_u = self
            .vertices
            .iter()
            .position(|&w| w == u)
            .ok_or(Error::NotOnPath { vertex: u })?;
        let last_v = self
            .vertices
            .iter()
            .rposition(|&w| w == v)
            .ok_or(Error::NotOnPath { vertex: v })?;
        if first_u > last_v {
            return Err(Error::NotOnPath { vertex: v });
        }
        Ok(EdgePath { vertices: self.vertices[first_u..=last_v].to_vec() })
    }

    /// Index window `[i, j]` as a subpath.
    pub fn window(&self, i: u32, j: u32) -> EdgePath {
        EdgePath { vertices: self.vertices[i as usize..=j as usize].to_vec() }
    }

    /// Prefix up to the first occurrence of `x`.
    pub fn prefix(&self, x: Vertex) -> Result<EdgePath> {
        let i = self
            .vertices
            .iter()
            .position(|&w| w == x)
            .ok_or(Error::NotOnPath { vertex: x })?;
        Ok(EdgePath { vertices: self.vertices[..=i].to_vec() })
    }

    /// Suffix from the last occurrence of `x`.
    pub fn suffix(&self, x: Vertex) -> Result<EdgePath> {
        let i = self
            .vertices
            .iter()
            .rposition(|&w| w == x)
            .ok_or(Error::NotOnPath { vertex: x })?;
        Ok(EdgePath { vertices: self.vertices[i..].to_vec() })
    }

    /// Concatenation; the endpoint of `self` must equal the start of `other`.
    pub fn concat(&self, other: &EdgePath) -> Result<EdgePath> {
        if self.end() != other.start() {
            return Err(Error::NotAPath(self.end(), other.start()));
        }
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices[1..]);
        Ok(EdgePath { vertices: v })
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.contains(&v)
    }

    /// Minimum distance from the path's vertex set to `v`, given a distance
    /// row for `v`.
    pub fn clearance(&self, dist_row: &[u32]) -> u32 {
        self.vertices.iter().map(|w| dist_row[w.idx()]).min().unwrap()
    }
}

/// Concatenation of special-path legs with matching endpoints, tagged by
/// the system the legs came from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolygonalLine {
    pub legs: Vec<EdgePath>,
    pub system_tag: String,
}

impl PolygonalLine {
    pub fn new(legs: Vec<EdgePath>, system_tag: impl Into<String>) -> Result<Self> {
        if legs.is_empty() {
            return Err(Error::EmptyPath);
        }
        for w in legs.windows(2) {
            if w[0].end() != w[1].start() {
                return Err(Error::NotAPath(w[0].end(), w[1].start()));
            }
        }
        Ok(PolygonalLine { legs, system_tag: system_tag.into() })
    }

    pub fn start(&self) -> Vertex {
        self.legs[0].start()
    }

    pub fn end(&self) -> Vertex {
        self.legs.last().unwrap().end()
    }

    pub fn leg_count(&self) -> usize {
        self.legs.len()
    }

    /// Total length `‖line‖ = Σ ‖leg‖`.
    pub fn total_len(&self) -> u32 {
        self.legs.iter().map(|l| l.len()).sum()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.legs
            .iter()
            .enumerate()
            .flat_map(|(i, leg)| {
                let skip = usize::from(i > 0);
                leg.vertices().iter().skip(skip).copied()
            })
    }

    pub fn clearance(&self, dist_row: &[u32]) -> u32 {
        self.vertices().map(|w| dist_row[w.idx()]).min().unwrap()
    }

    /// Flattens the legs into a single edge path.
    pub fn flatten(&self) -> EdgePath {
        EdgePath::from_vertices_unchecked(self.vertices().collect())
    }
}

/// Concatenation of chosen geodesics between consecutive points; the chosen
/// geodesic is the lexicographically smallest shortest path by vertex index,
/// so runs are reproducible.
pub fn rectify(g: &MetricGraph, points: &[Vertex]) -> Result<EdgePath> {
    if points.is_empty() {
        return Err(Error::EmptyPath);
    }
    let mut out = vec![points[0]];
    for w in points.windows(2) {
        let leg = lex_min_geodesic(g, w[0], w[1])?;
        out.extend_from_slice(&leg.vertices()[1..]);
    }
    Ok(EdgePath::from_vertices_unchecked(out))
}

/// Lexicographically smallest geodesic from `u` to `v`: at each step walk to
/// the smallest-index neighbor that decreases the distance to the target.
pub fn lex_min_geodesic(g: &MetricGraph, u: Vertex, v: Vertex) -> Result<EdgePath> {
    let dist_to_v = g.distance_map(v)?;
    if u.idx() >= g.vertex_count() {
        return Err(Error::InvalidVertex { vertex: u.0, count: g.vertex_count() });
    }
    let mut cur = u;
    let mut out = vec![u];
    while cur != v {
        let d = dist_to_v[cur.idx()];
        // neighbor lists are sorted, so the first descent is the lex-min one
        let next = g
            .neighbors(cur)
            .iter()
            .copied()
            .find(|&w| dist_to_v[w as usize] + 1 == d)
            .expect("connected graph has a descent toward the target");
        cur = Vertex(next);
        out.push(cur);
    }
    Ok(EdgePath::from_vertices_unchecked(out))
}

/// Exact Hausdorff distance between the vertex sets of two paths, measured
/// in the host graph.
pub fn hausdorff(g: &MetricGraph, a: &EdgePath, b: &EdgePath) -> u32 {
    let mut best = 0u32;
    for &x in a.vertices() {
        let row = g.bfs_row(x.0);
        let d = b.vertices().iter().map(|y| row[y.idx()]).min().unwrap();
        best = best.max(d);
    }
    for &y in b.vertices() {
        let row = g.bfs_row(y.0);
        let d = a.vertices().iter().map(|x| row[x.idx()]).min().unwrap();
        best = best.max(d);
    }
    best
}
