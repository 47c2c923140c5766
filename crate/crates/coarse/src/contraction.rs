//! Midthin and anti-contracting detection, and the generalized contraction
//! space: the base graph with an extra edge for every anti-contracting
//! vertex pair, together with its metric, diameter and measured
//! hyperbolicity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::AvoidQuery;
use crate::error::{Error, Result};
use crate::graph::{four_point_delta_adj, Ball, DeltaReport, MetricGraph, SampleSpec};
use crate::path::EdgePath;
use crate::system::{PathSystem, PathSystemConfig};
use crate::{Rat, Vertex};

/// Nondecreasing contraction gauge: step values on `[r_i, r_{i+1})` plus an
/// affine tail `a·r + b` from `tail_from` on. The representation is always
/// full (no infinities).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionGauge {
    /// `(r_i, value)` with increasing `r_i`, the first at 0; constant
    /// between breakpoints. May be empty when the tail starts at 0.
    pub steps: Vec<(Rat, Rat)>,
    pub tail_from: Rat,
    /// Affine tail `(slope, intercept)`.
    pub tail: (Rat, Rat),
}

impl ContractionGauge {
    pub fn affine(slope: Rat, intercept: Rat) -> Self {
        ContractionGauge { steps: Vec::new(), tail_from: Rat::from_integer(0), tail: (slope, intercept) }
    }

    /// Validates monotonicity and representation well-formedness.
    pub fn check(&self) -> Result<()> {
        let zero = Rat::from_integer(0);
        if !self.steps.is_empty() {
            if self.steps[0].0 != zero {
                return Err(Error::NotAllowed("gauge steps must start at r = 0".into()));
            }
            for w in self.steps.windows(2) {
                if w[1].0 <= w[0].0 || w[1].1 < w[0].1 {
                    return Err(Error::NotAllowed("gauge steps must be increasing and nondecreasing".into()));
                }
            }
            let last = self.steps.last().unwrap();
            if self.tail_from < last.0 {
                return Err(Error::NotAllowed("tail must start after the last step".into()));
            }
            let tail_start_value = self.tail.0 * self.tail_from + self.tail.1;
            if tail_start_value < last.1 {
                return Err(Error::NotAllowed("gauge decreases at the tail junction".into()));
            }
        } else if self.tail_from != zero {
            return Err(Error::NotAllowed("stepless gauge must have its tail start at 0".into()));
        }
        if self.tail.0 < zero {
            return Err(Error::NotAllowed("tail slope must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn eval(&self, r: Rat) -> Rat {
        if r >= self.tail_from {
            return self.tail.0 * r + self.tail.1;
        }
        let mut value = self.steps[0].1;
        for &(ri, vi) in &self.steps {
            if ri <= r {
                value = vi;
            } else {
                break;
            }
        }
        value
    }

    /// Closed-ball radius `ρ` such that a path of length `len` with midpoint
    /// `m` is midthin iff no admissible polygonal line avoids `B(m, ρ)`.
    /// `None` when `len < K(0)`, in which case the path cannot be midthin.
    ///
    /// When the supremum of `{r : K(r) <= len}` is not attained (a step
    /// jump), the radius is shrunk to the largest integer clearance below
    /// it; clearances are integers, so the test stays exact.
    pub fn midthin_ball_radius(&self, len: u32) -> Option<Rat> {
        let len = Rat::from_integer(len as i64);
        let zero = Rat::from_integer(0);
        // tail region first
        if self.tail.0 > zero {
            let rho = (len - self.tail.1) / self.tail.0;
            if rho >= self.tail_from {
                return Some(rho); // attained: K(rho) = len
            }
        } else if self.tail.1 <= len {
            // constant tail at or below len: unbounded sup; every neck size
            // qualifies, so use a radius beyond any realizable clearance
            return Some(Rat::from_integer(i64::MAX / 4));
        }
        // scan step pieces from the right
        for (i, &(ri, vi)) in self.steps.iter().enumerate().rev() {
            if vi <= len {
                let sup = if i + 1 < self.steps.len() { self.steps[i + 1].0 } else { self.tail_from };
                if sup == ri {
                    // degenerate piece
                    return Some(ri);
                }
                // sup not attained: clearance >= sup <=> clearance >= ceil(sup)
                let ceil = sup.ceil();
                return Some(ceil - Rat::from_integer(1));
            }
        }
        None
    }

    /// Smallest integer path length that can be midthin, `⌈K(0)⌉`.
    pub fn min_midthin_len(&self) -> u32 {
        let k0 = self.eval(Rat::from_integer(0));
        let c = k0.ceil().to_integer();
        c.max(1) as u32
    }
}

/// `(K, n)` with the path system supplied per call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionTriple {
    pub gauge: ContractionGauge,
    pub n: u32,
}

impl ContractionTriple {
    /// The tightest affine gauge meeting the three allowed-ness thresholds
    /// for the system's linear bound `D(r) = c·r + c`, plus one, with
    /// `n = 7`. For geodesic systems (`c = 1`) this is `K(r) = 9r + 4`.
    pub fn validator_default(cfg: &PathSystemConfig) -> Self {
        let c = cfg.c_p;
        let one = Rat::from_integer(1);
        let four = Rat::from_integer(4);
        // thresholds: K > 2c, K > 2c·r + 2c, K > (3c + 6c²)·r + c² + c
        let slope = (Rat::from_integer(3) * c + Rat::from_integer(6) * c * c).max(four);
        let intercept = ((c + one) * (c + one)).max(four);
        ContractionTriple { gauge: ContractionGauge::affine(slope, intercept), n: 7 }
    }

    /// Checks the explicit allowed-ness thresholds: `n ≥ 7`, the gauge full
    /// and nondecreasing, and `K(r)` strictly above `D(1)`, `2·D(r)` and
    /// `D(3r + D(6r))` for all `r ≥ 0`.
    pub fn ensure_allowed(&self, cfg: &PathSystemConfig) -> Result<()> {
        self.gauge.check()?;
        if self.n < 7 {
            return Err(Error::NotAllowed(format!("n = {} < 7", self.n)));
        }
        let c = cfg.c_p;
        let zero = Rat::from_integer(0);
        let bounds: [(Rat, Rat, &str); 3] = [
            (zero, Rat::from_integer(2) * c, "K(r) > D(1)"),
            (Rat::from_integer(2) * c, Rat::from_integer(2) * c, "K(r) > 2 D(r)"),
            (
                Rat::from_integer(3) * c + Rat::from_integer(6) * c * c,
                c * c + c,
                "K(r) > D(3r + D(6r))",
            ),
        ];
        for (beta, gamma, name) in bounds {
            self.check_dominates(beta, gamma).map_err(|_| {
                Error::NotAllowed(format!("gauge fails {name} (bound {beta}·r + {gamma})"))
            })?;
        }
        Ok(())
    }

    /// `K(r) > beta·r + gamma` for all `r >= 0`.
    fn check_dominates(&self, beta: Rat, gamma: Rat) -> Result<()> {
        let fail = || Err(Error::NotAllowed(String::new()));
        let g = &self.gauge;
        for (i, &(ri, vi)) in g.steps.iter().enumerate() {
            let sup_r = if i + 1 < g.steps.len() { g.steps[i + 1].0 } else { g.tail_from };
            // constant piece on [ri, sup_r): need vi > beta·r + gamma on it
            let piece_sup = beta * sup_r + gamma;
            if beta > Rat::from_integer(0) {
                if vi < piece_sup {
                    return fail();
                }
                if vi == piece_sup && sup_r == ri {
                    return fail();
                }
            } else if vi <= beta * ri + gamma {
                return fail();
            }
        }
        // tail: a·r + b > beta·r + gamma for all r >= tail_from
        let (a, b) = g.tail;
        if a < beta {
            return fail();
        }
        let at_start = a * g.tail_from + b;
        let bound_at_start = beta * g.tail_from + gamma;
        if a == beta {
            if b <= gamma {
                return fail();
            }
        } else if at_start <= bound_at_start {
            return fail();
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MidthinReport {
    pub midthin: bool,
    /// The exact neck radius `r*`: the path is `(r; n)`-midthin iff `r ≥ r*`.
    pub neck: u32,
}

#[derive(Clone, Debug)]
pub struct AntiReport {
    pub anti: bool,
    /// A midthin subsegment, when the verdict is negative.
    pub witness: Option<EdgePath>,
}

fn ensure_member(g: &MetricGraph, ps: &PathSystem, h: &EdgePath) -> Result<()> {
    if !ps.is_member(g, h) {
        return Err(Error::NotInSystem(format!(
            "path {:?} is not a member of {}",
            h.vertices().iter().map(|v| v.0).collect::<Vec<_>>(),
            ps.kind_name()
        )));
    }
    Ok(())
}

/// Exact neck radius of `h` against `(n, P)`-polygonal lines: the largest
/// clearance from the midpoint achievable by a line from `h⁺` to `h⁻`.
///
/// Clearance is always attained at a vertex, so the scan runs over realized
/// distances from the midpoint, driven by the ball-avoiding reachability
/// engine; feasibility is monotone in the clearance, so a binary search
/// over realized values is exact.
pub fn neck_radius(g: &MetricGraph, ps: &PathSystem, h: &EdgePath, n: u32) -> Result<u32> {
    ensure_member(g, ps, h)?;
    let m = h.midpoint();
    let center_row = g.distance_map(m)?;
    let mut values: Vec<u32> = center_row.iter().copied().collect();
    values.sort_unstable();
    values.dedup();
    // feasible(c): some line clears >= c, i.e. avoids B(m, c-1)
    let feasible = |c: u32| -> bool {
        let ball = Ball::new(m, Rat::from_integer(c as i64 - 1));
        AvoidQuery::new(g, ps, ball, &center_row).reachable(h.end(), h.start(), n)
    };
    debug_assert!(feasible(0), "a path system always joins the endpoints");
    let (mut lo, mut hi) = (0usize, values.len() - 1);
    // invariant: feasible(values[lo]); maximize
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if feasible(values[mid]) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(values[lo])
}

/// Midthin verdict with the neck-radius witness: `h` is midthin iff
/// `|h| ≥ K(r*)`, which by monotonicity of `K` it suffices to check at `r*`.
pub fn is_midthin(g: &MetricGraph, ps: &PathSystem, triple: &ContractionTriple, h: &EdgePath) -> Result<MidthinReport> {
    triple.ensure_allowed(ps.config())?;
    let neck = neck_radius(g, ps, h, triple.n)?;
    let midthin = Rat::from_integer(h.len() as i64) >= triple.gauge.eval(Rat::from_integer(neck as i64));
    Ok(MidthinReport { midthin, neck })
}

/// Decision-only midthin test: one reachability query at the gauge-inverse
/// ball radius instead of the full neck scan.
fn midthin_fast(g: &MetricGraph, ps: &PathSystem, triple: &ContractionTriple, h: &EdgePath, center_row: &[u32]) -> bool {
    let Some(rho) = triple.gauge.midthin_ball_radius(h.len()) else {
        return false;
    };
    let ball = Ball::new(h.midpoint(), rho);
    !AvoidQuery::new(g, ps, ball, center_row).reachable(h.end(), h.start(), triple.n)
}

/// Anti-contracting test: no subsegment of `h` is midthin. The scan covers
/// all index windows, shortest first, and returns the first midthin window
/// as witness.
pub fn is_anti_contracting(
    g: &MetricGraph,
    ps: &PathSystem,
    triple: &ContractionTriple,
    h: &EdgePath,
) -> Result<AntiReport> {
    triple.ensure_allowed(ps.config())?;
    ensure_member(g, ps, h)?;
    let min_len = triple.gauge.min_midthin_len();
    let total = h.len();
    for len in min_len..=total {
        for i in 0..=(total - len) {
            let w = h.window(i, i + len);
            let center_row = g.bfs_row(w.midpoint().0);
            if midthin_fast(g, ps, triple, &w, &center_row) {
                return Ok(AntiReport { anti: false, witness: Some(w) });
            }
        }
    }
    Ok(AntiReport { anti: true, witness: None })
}

/// Pair scope of the contraction-space construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum PairScope {
    /// Every vertex pair is decided; requires complete special-path
    /// enumeration per pair.
    All,
    /// Seeded random subset of pairs; undecided pairs get no extra edge,
    /// which over-approximates the derived metric. Flagged in the summary.
    Sampled { seed: u64, pairs: usize },
}

/// Per-pair special-path enumeration cap for the existential scan.
const PAIR_PATH_CAP: usize = 64;

/// Decision counts of a sampled-scope construction.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SampledStats {
    /// Sampled pairs at distance at least 2 that were decided.
    pub decided: usize,
    pub anti_contracting: usize,
}

/// The contraction space: base graph plus an edge for every
/// anti-contracting pair.
#[derive(Clone, Debug)]
pub struct ContractionSpace {
    base: MetricGraph,
    hat: MetricGraph,
    extra: Vec<(u32, u32)>,
    pub exhaustive: bool,
    pub sampled_stats: Option<SampledStats>,
    pub triple: ContractionTriple,
}

impl ContractionSpace {
    pub fn base(&self) -> &MetricGraph {
        &self.base
    }

    /// The augmented graph.
    pub fn hat(&self) -> &MetricGraph {
        &self.hat
    }

    pub fn extra_edges(&self) -> &[(u32, u32)] {
        &self.extra
    }

    pub fn dhat_row(&self, v: Vertex) -> Vec<u32> {
        self.hat.bfs_row(v.0)
    }

    pub fn dhat(&self, u: Vertex, v: Vertex) -> u32 {
        self.hat.bfs_row(u.0)[v.idx()]
    }

    /// Diameter of the vertex set under the derived metric.
    pub fn diameter(&self) -> u32 {
        (0..self.hat.vertex_count() as u32)
            .into_par_iter()
            .map(|v| self.hat.bfs_row(v).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn delta_hat(&self, spec: &SampleSpec) -> Result<DeltaReport> {
        four_point_delta_adj(self.hat.adjacency(), spec)
    }

    pub fn summary(&self, delta_spec: &SampleSpec) -> Result<SpaceSummary> {
        let delta = self.delta_hat(delta_spec)?;
        Ok(SpaceSummary {
            vertices: self.hat.vertex_count(),
            diameter: self.diameter(),
            delta_hat: delta.delta,
            delta_exact: delta.exact,
            base_edges: self.base.edge_count(),
            anti_contracting_edges: self.extra.len(),
            exhaustive_pairs: self.exhaustive,
        })
    }

    pub fn to_json(&self, delta_spec: &SampleSpec) -> Result<SpaceJson> {
        let mut edges: Vec<SpaceEdge> = Vec::new();
        for u in 0..self.base.vertex_count() {
            for &v in self.base.neighbors(Vertex(u as u32)) {
                if (u as u32) < v {
                    edges.push(SpaceEdge { u: u as u32, v, anti_contracting: false });
                }
            }
        }
        for &(u, v) in &self.extra {
            edges.push(SpaceEdge { u, v, anti_contracting: true });
        }
        Ok(SpaceJson { vertices: self.base.vertex_count(), edges, summary: self.summary(delta_spec)? })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceEdge {
    pub u: u32,
    pub v: u32,
    pub anti_contracting: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceJson {
    pub vertices: usize,
    pub edges: Vec<SpaceEdge>,
    pub summary: SpaceSummary,
}

impl SpaceJson {
    /// Rebuilds the space from its serialized form (metric data only; the
    /// triple is not revalidated here).
    pub fn into_space(self, triple: ContractionTriple) -> Result<ContractionSpace> {
        let base_edges: Vec<(u32, u32)> = self
            .edges
            .iter()
            .filter(|e| !e.anti_contracting)
            .map(|e| (e.u, e.v))
            .collect();
        let extra: Vec<(u32, u32)> = self
            .edges
            .iter()
            .filter(|e| e.anti_contracting)
            .map(|e| (e.u, e.v))
            .collect();
        let base = MetricGraph::from_edges(self.vertices, &base_edges)?;
        let mut all = base_edges;
        all.extend(extra.iter().copied());
        let hat = MetricGraph::from_edges(self.vertices, &all)?;
        Ok(ContractionSpace {
            base,
            hat,
            extra,
            exhaustive: self.summary.exhaustive_pairs,
            sampled_stats: None,
            triple,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub vertices: usize,
    pub diameter: u32,
    pub delta_hat: Rat,
    pub delta_exact: bool,
    pub base_edges: usize,
    pub anti_contracting_edges: usize,
    pub exhaustive_pairs: bool,
}

/// Builds the contraction space: an extra edge joins `(x, y)` iff *some*
/// special path between them is anti-contracting (in either orientation,
/// so the edge set is symmetric despite midpoint rounding).
///
/// On forests with unique special paths every polygonal line between two
/// vertices contains their geodesic, hence every window of length at least
/// `⌈K(0)⌉` is midthin; anti-contraction degenerates to a distance
/// threshold and the construction runs in near-linear time per vertex.
pub fn build_contraction_space(
    g: &MetricGraph,
    ps: &PathSystem,
    triple: &ContractionTriple,
    scope: &PairScope,
) -> Result<ContractionSpace> {
    triple.ensure_allowed(ps.config())?;
    let n = g.vertex_count();
    let forest = ps.unique_paths(g) && g.edge_count() + 1 == n;
    let mut sampled_stats = None;
    let extra: Vec<(u32, u32)> = match scope {
        PairScope::All if forest => {
            let max_d = triple.gauge.min_midthin_len() - 1;
            (0..n as u32)
                .into_par_iter()
                .flat_map_iter(|x| {
                    let row = g.bfs_row(x);
                    (x + 1..n as u32)
                        .filter(move |&y| {
                            let d = row[y as usize];
                            d >= 2 && d <= max_d
                        })
                        .map(move |y| (x, y))
                })
                .collect()
        }
        PairScope::All => {
            let results: Result<Vec<Vec<(u32, u32)>>> = (0..n as u32)
                .into_par_iter()
                .map(|x| {
                    let row = g.bfs_row(x);
                    let mut edges = Vec::new();
                    for y in x + 1..n as u32 {
                        if row[y as usize] < 2 {
                            continue;
                        }
                        if pair_is_anti(g, ps, triple, Vertex(x), Vertex(y))? {
                            edges.push((x, y));
                        }
                    }
                    Ok(edges)
                })
                .collect();
            results?.into_iter().flatten().collect()
        }
        PairScope::Sampled { seed, pairs } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let mut chosen = std::collections::BTreeSet::new();
            while chosen.len() < *pairs {
                let x = rng.gen_range(0..n as u32);
                let y = rng.gen_range(0..n as u32);
                if x != y {
                    chosen.insert((x.min(y), x.max(y)));
                }
            }
            let chosen: Vec<(u32, u32)> = chosen.into_iter().collect();
            let results: Result<Vec<Option<(u32, u32, bool)>>> = chosen
                .into_par_iter()
                .map(|(x, y)| {
                    if g.bfs_row(x)[y as usize] < 2 {
                        return Ok(None);
                    }
                    Ok(Some((x, y, pair_is_anti(g, ps, triple, Vertex(x), Vertex(y))?)))
                })
                .collect();
            let decisions: Vec<(u32, u32, bool)> = results?.into_iter().flatten().collect();
            let anti: Vec<(u32, u32)> = decisions.iter().filter(|d| d.2).map(|d| (d.0, d.1)).collect();
            sampled_stats = Some(SampledStats { decided: decisions.len(), anti_contracting: anti.len() });
            anti
        }
    };
    let mut all_edges: Vec<(u32, u32)> = Vec::with_capacity(g.edge_count() + extra.len());
    for u in 0..n {
        for &v in g.neighbors(Vertex(u as u32)) {
            if (u as u32) < v {
                all_edges.push((u as u32, v));
            }
        }
    }
    all_edges.extend(extra.iter().copied());
    let hat = MetricGraph::from_edges(n, &all_edges)?;
    Ok(ContractionSpace {
        base: g.clone(),
        hat,
        extra,
        exhaustive: matches!(scope, PairScope::All),
        sampled_stats,
        triple: triple.clone(),
    })
}

/// Existential pair check: some special path between the endpoints, in
/// either orientation, is anti-contracting. Errors when the enumeration is
/// incomplete and no anti-contracting path was found, since a negative
/// answer would then be unsound.
fn pair_is_anti(g: &MetricGraph, ps: &PathSystem, triple: &ContractionTriple, x: Vertex, y: Vertex) -> Result<bool> {
    let (paths, complete) = ps.special_paths(g, x, y, PAIR_PATH_CAP)?;
    for p in &paths {
        if path_is_anti(g, ps, triple, p) || path_is_anti(g, ps, triple, &p.inverse()) {
            return Ok(true);
        }
    }
    if !complete {
        return Err(Error::IncompleteEnumeration(x, y));
    }
    Ok(false)
}

fn path_is_anti(g: &MetricGraph, ps: &PathSystem, triple: &ContractionTriple, h: &EdgePath) -> bool {
    let min_len = triple.gauge.min_midthin_len();
    let total = h.len();
    if total < min_len {
        return true;
    }
    for len in min_len..=total {
        for i in 0..=(total - len) {
            let w = h.window(i, i + len);
            let center_row = g.bfs_row(w.midpoint().0);
            if midthin_fast(g, ps, triple, &w, &center_row) {
                return false;
            }
        }
    }
    true
}

/// Best `Q` for which the image parametrization of a path is a parametrized
/// `Q`-quasi-geodesic in the contraction space:
/// `|t-s|/Q - Q ≤ d̂(h(s), h(t)) ≤ Q·|t-s| + Q` for all index pairs.
#[derive(Clone, Debug)]
pub struct QgReport {
    /// `(domain distance, derived distance)` over all index pairs.
    pairs: Vec<(u32, u32)>,
    pub min_q: f64,
    /// Index pair forcing the largest `Q`.
    pub binding: (u32, u32),
}

impl QgReport {
    /// Exact test: does `q` satisfy both inequalities on every pair?
    pub fn admits(&self, q: Rat) -> bool {
        if q < Rat::from_integer(1) {
            return false;
        }
        self.pairs.iter().all(|&(len, dh)| {
            let len = Rat::from_integer(len as i64);
            let dh = Rat::from_integer(dh as i64);
            len <= q * dh + q * q && dh <= q * len + q
        })
    }
}

pub fn image_quasi_geodesic_constant(space: &ContractionSpace, h: &EdgePath) -> QgReport {
    let verts = h.vertices();
    let mut rows: std::collections::HashMap<u32, Vec<u32>> = std::collections::HashMap::new();
    for v in verts {
        rows.entry(v.0).or_insert_with(|| space.hat.bfs_row(v.0));
    }
    let mut pairs = Vec::new();
    let mut min_q = 1.0f64;
    let mut binding = (0u32, 0u32);
    for s in 0..verts.len() {
        for t in (s + 1)..verts.len() {
            let len = (t - s) as u32;
            let dh = rows[&verts[s].0][verts[t].idx()];
            pairs.push((len, dh));
            // lower side: Q^2 + dh·Q - len >= 0
            let q_low = (-(dh as f64) + ((dh as f64).powi(2) + 4.0 * len as f64).sqrt()) / 2.0;
            // upper side: Q >= dh / (len + 1)
            let q_up = dh as f64 / (len as f64 + 1.0);
            let q = q_low.max(q_up);
            if q > min_q {
                min_q = q;
                binding = (s as u32, t as u32);
            }
        }
    }
    QgReport { pairs, min_q, binding }
}

/// Diameter bound `Δ(δ, ρ) = 4δ + 4ρ + 3` of the weak diameter dichotomy.
pub fn weak_dichotomy_bound(delta: Rat, rho: Rat) -> Rat {
    Rat::from_integer(4) * delta + Rat::from_integer(4) * rho + Rat::from_integer(3)
}
