//! Curvature detectors for individual paths: proportional thinness and the
//! weakly-polygonally-Morse window scan, contraction with respect to a path
//! system, strong (closest-point) contraction, projection points with the
//! almost-orthogonality search, and a brute-force Morse-gauge oracle over
//! length-budgeted paths.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::engine::AvoidQuery;
use crate::error::{Error, Result};
use crate::graph::{Ball, MetricGraph};
use crate::path::{EdgePath, PolygonalLine};
use crate::system::{LegFeasibility, PathSystem};
use crate::{Rat, Vertex};

/// Parameters of the thinness definitions.
///
/// `epsilon` must lie in (0, 1); at 1/2 and above the test is vacuous for
/// geodesics. `min_window` is the window threshold R; `scale` the optional
/// locality bound L.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThinnessParams {
    pub epsilon: Rat,
    pub length_factor: Rat,
    pub legs: u32,
    pub min_window: Rat,
    pub scale: Option<Rat>,
}

impl ThinnessParams {
    pub fn new(epsilon: Rat, length_factor: Rat, legs: u32, min_window: Rat) -> Result<Self> {
        if epsilon <= Rat::zero() || epsilon >= Rat::from_integer(1) {
            return Err(Error::InvalidInstance(format!("epsilon must be in (0,1), got {epsilon}")));
        }
        if length_factor < Rat::from_integer(1) || legs == 0 {
            return Err(Error::InvalidInstance("need length factor >= 1 and at least one leg".into()));
        }
        Ok(ThinnessParams { epsilon, length_factor, legs, min_window, scale: None })
    }

    pub fn with_scale(mut self, scale: Rat) -> Self {
        self.scale = Some(scale);
        self
    }
}

/// Replayable violation record: a polygonal line within the length budget
/// whose distance to `violated_vertex` exceeds the allowed radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThinnessWitness {
    pub window: Vec<u32>,
    pub line: PolygonalLine,
    pub violated_vertex: u32,
    pub ball_radius: Rat,
    pub length_bound: Rat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MorseReport {
    pub verdict: bool,
    pub witness: Option<ThinnessWitness>,
}

/// Proportional thinness: no `(n, P)`-polygonal line from `γ⁺` to `γ⁻` of
/// length at most `A·d(γ⁻, γ⁺)` avoids the closed ball `B(z, ε·d)` around
/// any vertex `z` of `γ`. Decided per `z` by the hop- and length-bounded
/// minimum search of the shared engine.
pub fn proportionally_thin(g: &MetricGraph, ps: &PathSystem, params: &ThinnessParams, gamma: &EdgePath) -> Result<MorseReport> {
    let d = g.distance(gamma.start(), gamma.end())?;
    let radius = params.epsilon * Rat::from_integer(d as i64);
    let length_bound = params.length_factor * Rat::from_integer(d as i64);
    let mut seen = std::collections::HashSet::new();
    for &z in gamma.vertices() {
        if !seen.insert(z) {
            continue;
        }
        let ball = Ball::new(z, radius);
        let center_row = g.bfs_row(z.0);
        if ball.contains_distance(center_row[gamma.start().idx()])
            || ball.contains_distance(center_row[gamma.end().idx()])
        {
            continue; // every line meets the ball through an endpoint
        }
        let q = AvoidQuery::new(g, ps, ball, &center_row);
        if let Some((len, hops)) = q.min_length_line(gamma.end(), gamma.start(), params.legs) {
            if Rat::from_integer(len as i64) <= length_bound {
                let line = q
                    .line_from_hops(&hops)
                    .ok_or_else(|| Error::SearchExhausted("witness line reconstruction".into()))?;
                return Ok(MorseReport {
                    verdict: false,
                    witness: Some(ThinnessWitness {
                        window: gamma.vertices().iter().map(|v| v.0).collect(),
                        line,
                        violated_vertex: z.0,
                        ball_radius: radius,
                        length_bound,
                    }),
                });
            }
        }
    }
    Ok(MorseReport { verdict: true, witness: None })
}

/// Weak polygonal Morseness: every subsegment with `|γ'| ≥ R` (and
/// `|γ'| ≤ L` when a scale is set) is proportionally thin. The witness is
/// the first failing window in (start, end) order.
pub fn weakly_polygonally_morse(g: &MetricGraph, ps: &PathSystem, params: &ThinnessParams, gamma: &EdgePath) -> Result<MorseReport> {
    let total = gamma.len();
    for i in 0..=total {
        for j in (i + 1)..=total {
            let len = Rat::from_integer((j - i) as i64);
            if len < params.min_window {
                continue;
            }
            if let Some(scale) = params.scale {
                if len > scale {
                    continue;
                }
            }
            let w = gamma.window(i, j);
            let rep = proportionally_thin(g, ps, params, &w)?;
            if !rep.verdict {
                return Ok(rep);
            }
        }
    }
    Ok(MorseReport { verdict: true, witness: None })
}

/// Re-verifies a serialized thinness witness against the system: leg
/// membership, endpoints, length budget, and ball avoidance.
pub fn verify_thinness_witness(g: &MetricGraph, ps: &PathSystem, w: &ThinnessWitness) -> Result<()> {
    let gamma: Vec<Vertex> = w.window.iter().map(|&v| Vertex(v)).collect();
    let (first, last) = (gamma[0], *gamma.last().unwrap());
    if w.line.start() != last || w.line.end() != first {
        return Err(Error::InvalidInstance("witness line endpoints do not match the window".into()));
    }
    for leg in &w.line.legs {
        EdgePath::new(g, leg.vertices().to_vec())?;
        if !ps.is_member(g, leg) {
            return Err(Error::NotInSystem("witness leg not in the system closure".into()));
        }
    }
    if Rat::from_integer(w.line.total_len() as i64) > w.length_bound {
        return Err(Error::InvalidInstance("witness line exceeds the length budget".into()));
    }
    let row = g.bfs_row(w.violated_vertex);
    let ball = Ball::new(Vertex(w.violated_vertex), w.ball_radius);
    if w.line.vertices().any(|v| ball.contains_distance(row[v.idx()])) {
        return Err(Error::InvalidInstance("witness line does not avoid the ball".into()));
    }
    Ok(())
}

/// Projection choice for the contraction check.
#[derive(Clone, Debug)]
pub enum ProjectionSpec {
    /// Closest vertex of the path, ties broken by smallest vertex index.
    ClosestPoint,
    /// Caller-supplied projection, one path vertex per graph vertex.
    Supplied(Vec<Vertex>),
}

#[derive(Clone, Debug)]
pub struct ContractingReport {
    pub verdict: bool,
    /// Pair whose special path dodges a projection ball.
    pub witness: Option<(Vertex, Vertex)>,
    pub pairs_scanned: usize,
    pub exhaustive: bool,
}

const CONTRACTING_EXHAUSTIVE_LIMIT: usize = 400;
const CONTRACTING_SAMPLES: usize = 30_000;

fn closest_point_projection(g: &MetricGraph, gamma: &EdgePath) -> (Vec<Vertex>, Vec<Vec<u32>>) {
    let mut verts: Vec<Vertex> = gamma.vertices().to_vec();
    verts.sort_unstable();
    verts.dedup();
    let rows: Vec<Vec<u32>> = verts.iter().map(|v| g.bfs_row(v.0)).collect();
    let mut proj = Vec::with_capacity(g.vertex_count());
    for x in 0..g.vertex_count() {
        let mut best = verts[0];
        let mut best_d = rows[0][x];
        for (i, &v) in verts.iter().enumerate().skip(1) {
            let d = rows[i][x];
            if d < best_d || (d == best_d && v < best) {
                best = v;
                best_d = d;
            }
        }
        proj.push(best);
    }
    (proj, rows)
}

/// P-contraction with constant `C`: (1) points of `γ` project within `C`;
/// (2) whenever projections are `C`-separated, every special path between
/// the points meets both projection balls `B(π(·), C)`. Pairs are scanned
/// exhaustively up to a size limit and on a seeded sample above it.
pub fn p_contracting_check(
    g: &MetricGraph,
    ps: &PathSystem,
    gamma: &EdgePath,
    c: Rat,
    projection: &ProjectionSpec,
    seed: u64,
) -> Result<ContractingReport> {
    let proj: Vec<Vertex> = match projection {
        ProjectionSpec::ClosestPoint => closest_point_projection(g, gamma).0,
        ProjectionSpec::Supplied(p) => {
            if p.len() != g.vertex_count() {
                return Err(Error::InvalidInstance("projection must cover every vertex".into()));
            }
            p.clone()
        }
    };
    // condition (1) on the path's own vertices
    for &x in gamma.vertices() {
        let d = g.bfs_row(x.0)[proj[x.idx()].idx()];
        if Rat::from_integer(d as i64) > c {
            return Ok(ContractingReport { verdict: false, witness: Some((x, proj[x.idx()])), pairs_scanned: 0, exhaustive: true });
        }
    }
    let n = g.vertex_count();
    let exhaustive = n <= CONTRACTING_EXHAUSTIVE_LIMIT;
    let sources: Vec<u32> = if exhaustive {
        (0..n as u32).collect()
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..CONTRACTING_SAMPLES / n.max(1)).map(|_| rng.gen_range(0..n as u32)).collect()
    };
    let mut scanned = 0usize;
    for &x in &sources {
        let px = proj[x as usize];
        let ball = Ball::new(px, c);
        let center_row = g.bfs_row(px.0);
        if ball.contains_distance(center_row[x as usize]) {
            continue; // x itself is C-close to its projection ball
        }
        // one punctured scan answers "some special path x -> y avoids
        // B(π(x), C)" for every y at once (geodesic kinds); other kinds
        // fall back to the per-pair leg query
        let proj_row = g.bfs_row(px.0);
        for y in 0..n as u32 {
            if y == x {
                continue;
            }
            let py = proj[y as usize];
            let sep = proj_row[py.idx()];
            if Rat::from_integer(sep as i64) < c {
                continue;
            }
            scanned += 1;
            if let LegFeasibility::Feasible(_) =
                ps.min_leg_avoiding_with_row(g, Vertex(x), Vertex(y), &ball, &center_row)
            {
                return Ok(ContractingReport {
                    verdict: false,
                    witness: Some((Vertex(x), Vertex(y))),
                    pairs_scanned: scanned,
                    exhaustive,
                });
            }
        }
    }
    Ok(ContractingReport { verdict: true, witness: None, pairs_scanned: scanned, exhaustive })
}

/// Search mode: the minimal integer `C` making the contraction check pass
/// with the closest-point projection.
pub fn p_contracting_minimal(g: &MetricGraph, ps: &PathSystem, gamma: &EdgePath, seed: u64) -> Result<u32> {
    let diam = g.diameter();
    let ok = |c: u32| -> Result<bool> {
        Ok(p_contracting_check(g, ps, gamma, Rat::from_integer(c as i64), &ProjectionSpec::ClosestPoint, seed)?.verdict)
    };
    // the verdict is monotone in C: larger constants only weaken both sides
    let (mut lo, mut hi) = (0u32, diam + 1);
    debug_assert!(ok(hi)?, "vacuous at C > diameter");
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Minimal `C` such that every ball disjoint from `γ` has closest-point
/// projection of diameter at most `C`. Only the maximal ball per center
/// matters (radius `d(center, γ) - 1`), by monotonicity.
pub fn strong_contraction_constant(g: &MetricGraph, gamma: &EdgePath) -> u32 {
    let mut verts: Vec<Vertex> = gamma.vertices().to_vec();
    verts.sort_unstable();
    verts.dedup();
    let rows: Vec<Vec<u32>> = verts.iter().map(|v| g.bfs_row(v.0)).collect();
    let dist_to_gamma = |x: usize| rows.iter().map(|r| r[x]).min().unwrap();
    let mut best = 0u32;
    for center in 0..g.vertex_count() {
        let dv = dist_to_gamma(center);
        if dv == 0 {
            continue;
        }
        let radius = dv - 1;
        let center_row = g.bfs_row(center as u32);
        // gather all nearest path vertices over the ball
        let mut projected: Vec<usize> = Vec::new();
        for u in 0..g.vertex_count() {
            if center_row[u] > radius {
                continue;
            }
            let du = dist_to_gamma(u);
            for (i, r) in rows.iter().enumerate() {
                if r[u] == du {
                    projected.push(i);
                }
            }
        }
        projected.sort_unstable();
        projected.dedup();
        for (a, &i) in projected.iter().enumerate() {
            for &j in &projected[a + 1..] {
                best = best.max(rows[i][verts[j].idx()]);
            }
        }
    }
    best
}

/// `R`-upper projection point of `h` onto `γ` (first vertex of `h` within
/// `R` of `γ`) and the corresponding lower points (vertices of `γ` within
/// `R` of the upper point).
pub fn projection_points(g: &MetricGraph, h: &EdgePath, gamma: &EdgePath, r: Rat) -> Result<(Vertex, Vec<Vertex>)> {
    if !gamma.contains(h.end()) {
        return Err(Error::InvalidInstance("h+ must lie on gamma".into()));
    }
    let mut verts: Vec<Vertex> = gamma.vertices().to_vec();
    verts.sort_unstable();
    verts.dedup();
    let rows: Vec<Vec<u32>> = verts.iter().map(|v| g.bfs_row(v.0)).collect();
    let upper = h
        .vertices()
        .iter()
        .copied()
        .find(|v| {
            let d = rows.iter().map(|r| r[v.idx()]).min().unwrap();
            Rat::from_integer(d as i64) <= r
        })
        .ok_or(Error::InvalidInstance("no vertex of h within R of gamma".into()))?;
    let upper_row = g.bfs_row(upper.0);
    let mut lowers: Vec<Vertex> = gamma
        .vertices()
        .iter()
        .copied()
        .filter(|v| Rat::from_integer(upper_row[v.idx()] as i64) <= r)
        .collect();
    lowers.sort_unstable();
    lowers.dedup();
    Ok((upper, lowers))
}

#[derive(Clone, Debug)]
pub struct OrthogonalSearch {
    pub path: EdgePath,
    /// Index on `γ` at which the candidate was found.
    pub target_index: u32,
    /// Leaning pattern of the scan, for diagnostics.
    pub trace: String,
}

/// Finds a special path from `x` to `γ` that is `C`-almost `R`-orthogonal:
/// its lower projection point `γ(s)` satisfies
/// `d(γ(s), h⁺) ≤ d(h⁻, h⁺)/C + 4·D(R+1)`.
///
/// The scan classifies the candidate path to each `γ(i)` as left or right
/// leaning by its lower projection parameter and returns at a leaning
/// switch or at an extreme.
pub fn find_almost_orthogonal(
    g: &MetricGraph,
    ps: &PathSystem,
    x: Vertex,
    gamma: &EdgePath,
    r: Rat,
    c: Rat,
) -> Result<OrthogonalSearch> {
    if gamma.contains(x) {
        let idx = gamma.vertices().iter().position(|&v| v == x).unwrap() as u32;
        return Ok(OrthogonalSearch { path: EdgePath::trivial(x), target_index: idx, trace: "on-gamma".into() });
    }
    let dp_bound = ps.config().d_p(r + Rat::from_integer(1)) * Rat::from_integer(4);
    let n = gamma.vertices().len();
    let mut candidates: Vec<(EdgePath, u32, u32)> = Vec::new(); // (path, i, lower param)
    let mut leanings: Vec<bool> = Vec::new(); // true = left
    for i in 0..n {
        let target = gamma.vertex_at(i as u32);
        let (paths, _) = ps.special_paths(g, x, target, 1)?;
        let h = paths.into_iter().next().ok_or_else(|| Error::SearchExhausted("no special path to gamma".into()))?;
        let (upper, lowers) = projection_points(g, &h, gamma, r)?;
        let _ = upper;
        let s = gamma
            .vertices()
            .iter()
            .position(|v| lowers.contains(v))
            .expect("lower points lie on gamma") as u32;
        leanings.push(s as usize <= i);
        candidates.push((h, i as u32, s));
    }
    let trace: String = leanings.iter().map(|&l| if l { 'L' } else { 'R' }).collect();
    let is_orthogonal = |h: &EdgePath, s: u32| -> bool {
        let lower = gamma.vertex_at(s);
        let d_lower = Rat::from_integer(g.bfs_row(lower.0)[h.end().idx()] as i64);
        let d_ends = Rat::from_integer(g.bfs_row(h.start().0)[h.end().idx()] as i64);
        d_lower <= d_ends / c + dp_bound
    };
    // leaning switches first, then the extremes
    let mut order: Vec<usize> = Vec::new();
    for i in 0..n.saturating_sub(1) {
        if leanings[i] != leanings[i + 1] {
            order.push(i);
            order.push(i + 1);
        }
    }
    order.push(0);
    order.push(n - 1);
    for idx in order {
        let (h, i, s) = &candidates[idx];
        if is_orthogonal(h, *s) {
            return Ok(OrthogonalSearch { path: h.clone(), target_index: *i, trace });
        }
    }
    Err(Error::SearchExhausted(format!("no almost-orthogonal candidate; leanings {trace}")))
}

/// Brute-force Morse oracle over length-budgeted paths: the largest
/// excursion `max_z d(z, γ[s,t])` over endpoint pairs on `γ` and vertices
/// `z` reachable within budget `Q·d(γ(s), γ(t)) + q`.
///
/// Every improved `(Q, q)`-quasi-geodesic is length-budgeted, so this
/// over-approximates the true Morse gauge; reports state it as an upper
/// bound oracle.
pub fn morse_gauge_oracle(g: &MetricGraph, gamma: &EdgePath, q_mul: Rat, q_add: Rat) -> Rat {
    let verts = gamma.vertices();
    let rows: Vec<Vec<u32>> = verts.iter().map(|v| g.bfs_row(v.0)).collect();
    let mut best = 0u32;
    for s in 0..verts.len() {
        for t in (s + 1)..verts.len() {
            let d = rows[s][verts[t].idx()];
            let budget = q_mul * Rat::from_integer(d as i64) + q_add;
            // distance to the subsegment vertex set
            for w in 0..g.vertex_count() {
                let through = rows[s][w] + rows[t][w];
                if Rat::from_integer(through as i64) > budget {
                    continue;
                }
                let d_to_window = (s..=t).map(|k| rows[k][w]).min().unwrap();
                best = best.max(d_to_window);
            }
        }
    }
    Rat::from_integer(best as i64)
}
