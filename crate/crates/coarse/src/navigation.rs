//! Navigability searches and the constructive avoidance algorithms, plus
//! divergence.
//!
//! `navigate_search` answers the navigability question directly through the
//! shared hop-bounded DP. `slides_navigate` implements the constructive
//! route: calibrate each leg into the annulus around the forbidden ball by
//! central and side slides, then stitch the calibrated points with
//! avoidance certificates (`median_avoid` with C = 28, k = 3 on median
//! graphs; `combing_avoid` with C = 100(κ₀+1) for bounded geodesic
//! combings; a DP fallback otherwise).

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::engine::AvoidQuery;
use crate::error::{Error, Result};
use crate::graph::{Ball, MetricGraph};
use crate::path::{EdgePath, PolygonalLine};
use crate::system::PathSystem;
use crate::{Rat, Vertex};

/// A navigability problem: a polygonal line `alpha` that stays at distance
/// at least `r` from `m` while its endpoints are within `2r`.
#[derive(Clone, Debug)]
pub struct NavigabilityInstance {
    pub m: Vertex,
    pub r: Rat,
    pub alpha: PolygonalLine,
}

impl NavigabilityInstance {
    pub fn new(g: &MetricGraph, m: Vertex, r: Rat, alpha: PolygonalLine) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::InvalidInstance("negative radius".into()));
        }
        let row = g.distance_map(m)?;
        let clear = alpha.clearance(&row);
        if Rat::from_integer(clear as i64) < r {
            return Err(Error::InvalidInstance(format!("line comes {clear} close to m, needs >= {r}")));
        }
        let two_r = r + r;
        for endpoint in [alpha.start(), alpha.end()] {
            if Rat::from_integer(row[endpoint.idx()] as i64) > two_r {
                return Err(Error::InvalidInstance(format!("endpoint {endpoint} farther than 2R from m")));
            }
        }
        Ok(NavigabilityInstance { m, r, alpha })
    }
}

/// Exhaustion certificate of a failed navigation search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InfeasibleCertificate {
    /// Minimum length over all hop counts within budget, when reachable.
    pub min_length_found: Option<u32>,
    pub hop_budget: u32,
    pub length_bound: Rat,
    pub ball_radius: Rat,
}

#[derive(Clone, Debug)]
pub enum NavigateOutcome {
    Line(PolygonalLine),
    Infeasible(InfeasibleCertificate),
}

/// Searches for a `(k·n, closure)`-polygonal line with the endpoints of
/// `alpha`, total length at most `C·n·R`, avoiding `B(m, R/C)`.
///
/// The navigability guarantee of the underlying theory assumes `R ≥ C`;
/// the search itself is well-defined for any instance and is run as posed.
pub fn navigate_search(
    g: &MetricGraph,
    ps: &PathSystem,
    inst: &NavigabilityInstance,
    c: Rat,
    k: u32,
) -> Result<NavigateOutcome> {
    if c < Rat::from_integer(1) || k == 0 {
        return Err(Error::InvalidInstance("need C >= 1 and k >= 1".into()));
    }
    let n = inst.alpha.leg_count() as u32;
    let ball_radius = inst.r / c;
    let length_bound = c * Rat::from_integer(n as i64) * inst.r;
    let ball = Ball::new(inst.m, ball_radius);
    let center_row = g.bfs_row(inst.m.0);
    let q = AvoidQuery::new(g, ps, ball, &center_row);
    let budget = k * n;
    match q.min_length_line(inst.alpha.start(), inst.alpha.end(), budget) {
        Some((len, hops)) if Rat::from_integer(len as i64) <= length_bound => {
            let line = q
                .line_from_hops(&hops)
                .ok_or_else(|| Error::SearchExhausted("line reconstruction".into()))?;
            verify_navigation(g, ps, &line, &ball, budget, length_bound)?;
            Ok(NavigateOutcome::Line(line))
        }
        other => Ok(NavigateOutcome::Infeasible(InfeasibleCertificate {
            min_length_found: other.map(|(l, _)| l),
            hop_budget: budget,
            length_bound,
            ball_radius,
        })),
    }
}

/// Independent verifier for navigation outputs: leg membership in the
/// system closure, hop budget, total length, and ball avoidance. Kept
/// separate from the DP that produced the line.
pub fn verify_navigation(
    g: &MetricGraph,
    ps: &PathSystem,
    line: &PolygonalLine,
    ball: &Ball,
    max_legs: u32,
    length_bound: Rat,
) -> Result<()> {
    if line.leg_count() as u32 > max_legs {
        return Err(Error::PostconditionFailed(format!(
            "{} legs exceed the budget {max_legs}",
            line.leg_count()
        )));
    }
    for leg in &line.legs {
        EdgePath::new(g, leg.vertices().to_vec())?;
        if !ps.is_member(g, leg) {
            return Err(Error::PostconditionFailed("leg not in the system closure".into()));
        }
    }
    if Rat::from_integer(line.total_len() as i64) > length_bound {
        return Err(Error::PostconditionFailed(format!(
            "length {} exceeds bound {length_bound}",
            line.total_len()
        )));
    }
    let row = g.bfs_row(ball.center.0);
    if line.vertices().any(|v| ball.contains_distance(row[v.idx()])) {
        return Err(Error::PostconditionFailed("line meets the forbidden ball".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Avoidance subroutines
// ---------------------------------------------------------------------------

/// Median-graph avoidance with the constants C = 28, k = 3: a polygonal
/// line from `z1` to `z2` with at most 3 legs, length at most `28R`,
/// staying `R`-clear of `m`.
///
/// `h1`, `h2` are geodesics from `z1`, `z2` to the common point `y` with
/// clearance at least `R`; when absent, geodesics are picked and validated.
/// The length and clearance postconditions are theorem-backed and asserted.
#[allow(clippy::too_many_arguments)]
pub fn median_avoid(
    g: &MetricGraph,
    z1: Vertex,
    z2: Vertex,
    y: Vertex,
    m: Vertex,
    r: Rat,
    h1: Option<EdgePath>,
    h2: Option<EdgePath>,
) -> Result<PolygonalLine> {
    if r < Rat::from_integer(14) {
        return Err(Error::InvalidInstance(format!("median avoidance needs R >= 14, got {r}")));
    }
    let m_row = g.distance_map(m)?;
    let four_r = Rat::from_integer(4) * r;
    for z in [z1, z2] {
        if Rat::from_integer(m_row[z.idx()] as i64) > four_r {
            return Err(Error::InvalidInstance(format!("d(m, {z}) > 4R")));
        }
    }
    let h1 = resolve_clear_geodesic(g, z1, y, r, &m_row, h1)?;
    let h2 = resolve_clear_geodesic(g, z2, y, r, &m_row, h2)?;
    if z1 == z2 {
        let line = PolygonalLine::new(vec![EdgePath::trivial(z1)], "median_avoid")?;
        return assert_avoidance(g, line, &m_row, r, Rat::from_integer(28) * r);
    }
    let five_r = Rat::from_integer(5) * r;
    let (d1, d2) = (
        Rat::from_integer(g.bfs_row(y.0)[z1.idx()] as i64),
        Rat::from_integer(g.bfs_row(y.0)[z2.idx()] as i64),
    );
    let line = if d1 <= five_r || d2 <= five_r {
        // short case: concatenate; each side is at most 13R long
        let thirteen_r = Rat::from_integer(13) * r;
        if d1 > thirteen_r || d2 > thirteen_r {
            return Err(Error::PostconditionFailed("short-case side exceeds 13R".into()));
        }
        PolygonalLine::new(vec![h1, h2.inverse()], "median_avoid")?
    } else {
        // place x_i on h_i at distance 5R from z_i, connect through the
        // median of (x1, x2, y)
        let t = five_r.ceil().to_integer() as u32;
        let x1 = h1.vertex_at(t);
        let x2 = h2.vertex_at(t);
        let u = g.median(x1, x2, y)?;
        let g1 = crate::path::lex_min_geodesic(g, x1, u)?;
        let g2 = crate::path::lex_min_geodesic(g, u, x2)?;
        let gamma = g1.concat(&g2)?;
        debug_assert_eq!(gamma.len(), g.bfs_row(x1.0)[x2.idx()], "median lies on an (x1, x2) geodesic");
        let leg1 = h1.window(0, t);
        let leg3 = h2.window(0, t).inverse();
        PolygonalLine::new(vec![leg1, gamma, leg3], "median_avoid")?
    };
    assert_avoidance(g, line, &m_row, r, Rat::from_integer(28) * r)
}

/// Combing avoidance with C = 100(κ₀ + 1): a polygonal line from `z1` to
/// `z2` with at most 5 legs, length at most `C·R`, staying `R`-clear of
/// `m`, built from combing lines toward the common point `y`.
///
/// `enforce_scale` additionally requires `R ≥ 50(κ₀+1)`, the scale at
/// which the avoidance theorem is stated; desk-scale experiments run with
/// the check off and rely on the runtime assertions instead.
#[allow(clippy::too_many_arguments)]
pub fn combing_avoid(
    g: &MetricGraph,
    ps: &PathSystem,
    z1: Vertex,
    z2: Vertex,
    y: Vertex,
    m: Vertex,
    r: Rat,
    enforce_scale: bool,
) -> Result<PolygonalLine> {
    let kappa = ps
        .combing_bound()
        .ok_or(Error::UnsupportedKind { op: "combing_avoid", kind: ps.kind_name() })?;
    let c = Rat::from_integer(100) * (kappa + Rat::from_integer(1));
    if enforce_scale && r < c / Rat::from_integer(2) {
        return Err(Error::InvalidInstance(format!("combing avoidance stated for R >= {}", c / Rat::from_integer(2))));
    }
    if r < Rat::from_integer(1) {
        return Err(Error::InvalidInstance("need R >= 1".into()));
    }
    let m_row = g.distance_map(m)?;
    let four_r = Rat::from_integer(4) * r;
    for z in [z1, z2] {
        if Rat::from_integer(m_row[z.idx()] as i64) > four_r {
            return Err(Error::InvalidInstance(format!("d(m, {z}) > 4R")));
        }
    }
    let h1 = ps.combing_line(g, z1, y)?;
    let h2 = ps.combing_line(g, z2, y)?;
    for h in [&h1, &h2] {
        if Rat::from_integer(h.clearance(&m_row) as i64) < r {
            return Err(Error::InvalidInstance("combing line comes closer than R to m".into()));
        }
    }
    if z1 == z2 {
        let line = PolygonalLine::new(vec![EdgePath::trivial(z1)], "combing_avoid")?;
        return assert_avoidance(g, line, &m_row, r, c * r);
    }
    let short_bound = (Rat::from_integer(20) * kappa + Rat::from_integer(5)) * r;
    let (d1, d2) = (
        Rat::from_integer(g.bfs_row(y.0)[z1.idx()] as i64),
        Rat::from_integer(g.bfs_row(y.0)[z2.idx()] as i64),
    );
    let line = if d1 <= short_bound || d2 <= short_bound {
        PolygonalLine::new(vec![h1, h2.inverse()], "combing_avoid")?
    } else {
        let t = (Rat::from_integer(5) * r).ceil().to_integer() as u32;
        let x1 = h1.vertex_at(t);
        let x2 = h2.vertex_at(t);
        let alpha1 = ps.combing_line(g, y, x1)?;
        let alpha2 = ps.combing_line(g, y, x2)?;
        let back = (Rat::from_integer(20) * kappa * r).ceil().to_integer() as u32;
        let u1 = alpha1.vertex_at(alpha1.len().saturating_sub(back));
        let u2 = alpha2.vertex_at(alpha2.len().saturating_sub(back));
        let (mid, _) = ps.special_paths(g, u1, u2, 1)?;
        let mid = mid.into_iter().next().ok_or_else(|| Error::SearchExhausted("no special path u1 -> u2".into()))?;
        let seg1 = alpha1.subsegment_between(u1, x1)?.inverse(); // x1 -> u1
        let seg2 = alpha2.subsegment_between(u2, x2)?; // u2 -> x2
        PolygonalLine::new(
            vec![h1.window(0, t), seg1, mid, seg2, h2.window(0, t).inverse()],
            "combing_avoid",
        )?
    };
    assert_avoidance(g, line, &m_row, r, c * r)
}

fn resolve_clear_geodesic(
    g: &MetricGraph,
    z: Vertex,
    y: Vertex,
    r: Rat,
    m_row: &[u32],
    supplied: Option<EdgePath>,
) -> Result<EdgePath> {
    if let Some(h) = supplied {
        if h.start() != z || h.end() != y {
            return Err(Error::InvalidInstance("supplied geodesic endpoints do not match".into()));
        }
        if h.len() != g.bfs_row(z.0)[y.idx()] {
            return Err(Error::InvalidInstance("supplied path is not a geodesic".into()));
        }
        if Rat::from_integer(h.clearance(m_row) as i64) < r {
            return Err(Error::InvalidInstance("supplied geodesic comes closer than R to m".into()));
        }
        return Ok(h);
    }
    let (candidates, _) = crate::reference::enumerate_geodesics(g, z, y, PICK_GEODESIC_CAP);
    candidates
        .into_iter()
        .find(|h| Rat::from_integer(h.clearance(m_row) as i64) >= r)
        .ok_or_else(|| Error::InvalidInstance(format!("no geodesic {z} -> {y} stays R-clear of m")))
}

const PICK_GEODESIC_CAP: usize = 256;

fn assert_avoidance(g: &MetricGraph, line: PolygonalLine, m_row: &[u32], r: Rat, length_bound: Rat) -> Result<PolygonalLine> {
    let _ = g;
    let clearance = Rat::from_integer(line.clearance(m_row) as i64);
    if clearance < r {
        return Err(Error::PostconditionFailed(format!(
            "avoidance clearance {clearance} below R = {r}"
        )));
    }
    if Rat::from_integer(line.total_len() as i64) > length_bound {
        return Err(Error::PostconditionFailed(format!(
            "avoidance length {} above the bound {length_bound}",
            line.total_len()
        )));
    }
    Ok(line)
}

// ---------------------------------------------------------------------------
// Slide navigation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub enum AvoidSubroutine {
    Median,
    Combing,
    /// Direct DP search between consecutive calibrated points, with the
    /// given constants.
    DpFallback { c_num: i64, k: u32 },
}

#[derive(Clone, Debug)]
pub struct SlidesOutcome {
    pub line: PolygonalLine,
    /// One entry per leg and stitch, recording the slide counts and the
    /// subroutine used.
    pub stages: Vec<String>,
    pub central_slides: u32,
    pub side_slides: u32,
    /// Measured ratio `‖p‖ / (n·R)`.
    pub measured_c: Rat,
    /// Measured clearance of the output from `m`.
    pub measured_clearance: u32,
}

/// The constructive navigability procedure: per leg, calibrate both halves
/// into the annulus `(R - κ, R]` around `m` by central then side slides
/// (κ is the system's replacement bound), then stitch consecutive
/// calibrated points with avoidance certificates. Escalates to the DP
/// fallback when a subroutine rejects an instance.
pub fn slides_navigate(
    g: &MetricGraph,
    ps: &PathSystem,
    inst: &NavigabilityInstance,
    subroutine: AvoidSubroutine,
) -> Result<SlidesOutcome> {
    let kappa = ps
        .replacement_bound()
        .ok_or(Error::UnsupportedKind { op: "slides_navigate", kind: ps.kind_name() })?;
    let r = inst.r;
    if r <= kappa {
        return Err(Error::InvalidInstance(format!("slides need R > kappa = {kappa}")));
    }
    let m_row = g.distance_map(inst.m)?;
    let dist_m = |v: Vertex| Rat::from_integer(m_row[v.idx()] as i64);
    let mut stages = Vec::new();
    let mut central = 0u32;
    let mut side = 0u32;

    // calibrate each leg into the annulus
    let mut calibrated: Vec<EdgePath> = Vec::new();
    for (li, leg) in inst.alpha.legs.iter().enumerate() {
        let mut beta = leg.clone();
        let mut gamma = EdgePath::trivial(leg.end());
        let clear = |p: &EdgePath| Rat::from_integer(p.clearance(&m_row) as i64);
        let mut leg_central = 0u32;
        // central slide: walk the junction one unit toward m, replacing
        // both halves through bounded replacement
        while clear(&beta) > r && clear(&gamma) > r {
            let junction = beta.end();
            let toward = crate::path::lex_min_geodesic(g, junction, inst.m)?;
            if toward.len() == 0 {
                break;
            }
            let x = toward.vertex_at(1);
            let new_beta = ps.bounded_replacement(g, &beta, x)?;
            let new_gamma = ps.bounded_replacement(g, &gamma.inverse(), x)?.inverse();
            if dist_m(x) >= dist_m(junction) {
                return Err(Error::PostconditionFailed("central slide failed to descend".into()));
            }
            beta = new_beta;
            gamma = new_gamma;
            leg_central += 1;
        }
        // side slide along the half that reached the annulus
        let mut leg_side = 0u32;
        let (mut near, mut far, swapped) = if clear(&beta) <= r {
            (beta, gamma, false)
        } else {
            (gamma.inverse(), beta.inverse(), true)
        };
        while Rat::from_integer(far.clearance(&m_row) as i64) > r {
            let t = (0..=near.len())
                .find(|&i| dist_m(near.vertex_at(i)) <= r)
                .expect("near half meets the annulus");
            let end_row = g.bfs_row(near.end().0);
            let s = (t..=near.len())
                .find(|&i| end_row[near.vertex_at(i).idx()] <= 1)
                .unwrap();
            let x = near.vertex_at(s);
            let new_far = ps.bounded_replacement(g, &far.inverse(), x)?.inverse();
            let finished = s == t;
            let shrunk = s < near.len();
            near = near.window(0, s);
            far = new_far;
            leg_side += 1;
            if !finished && !shrunk {
                return Err(Error::PostconditionFailed("side slide failed to advance".into()));
            }
            if finished {
                break;
            }
        }
        let (beta, gamma) = if swapped { (far.inverse(), near.inverse()) } else { (near, far) };
        // annulus invariants, maintained by the Hausdorff bounds
        for (name, p) in [("beta", &beta), ("gamma", &gamma)] {
            let cl = Rat::from_integer(p.clearance(&m_row) as i64);
            if cl > r {
                return Err(Error::PostconditionFailed(format!("{name} missed the annulus")));
            }
            if cl < r - kappa {
                return Err(Error::PostconditionFailed(format!("{name} slid deeper than R - kappa")));
            }
        }
        stages.push(format!("leg {li}: {leg_central} central, {leg_side} side slides"));
        central += leg_central;
        side += leg_side;
        calibrated.push(beta);
        calibrated.push(gamma);
    }

    // calibrated points: one per calibrated half-leg, with the line's own
    // endpoints at the two ends and annulus vertices between
    let r_prime = r - kappa;
    let pick_annulus = |p: &EdgePath| -> Vertex {
        p.vertices()
            .iter()
            .copied()
            .find(|&v| {
                let d = dist_m(v);
                d >= r_prime && d <= r
            })
            .expect("calibrated leg meets the annulus")
    };
    let count = calibrated.len();
    let mut points: Vec<Vertex> = Vec::with_capacity(count);
    for (j, p) in calibrated.iter().enumerate() {
        if j == 0 {
            points.push(inst.alpha.start());
        } else if j == count - 1 {
            points.push(inst.alpha.end());
        } else {
            points.push(pick_annulus(p));
        }
    }

    // stitch consecutive points with avoidance certificates; the common
    // endpoint for the pair (z_j, z_{j+1}) is the junction of their legs,
    // reached along the calibrated halves themselves
    let mut legs: Vec<EdgePath> = Vec::new();
    for j in 0..points.len() - 1 {
        let (za, zb) = (points[j], points[j + 1]);
        if za == zb {
            continue;
        }
        debug_assert_eq!(calibrated[j].end(), calibrated[j + 1].start(), "halves share junctions");
        let y = calibrated[j].end();
        let h1 = calibrated[j].suffix(za).ok();
        let h2 = calibrated[j + 1].prefix(zb).map(|p| p.inverse()).ok();
        let piece = match subroutine {
            AvoidSubroutine::Median => {
                match median_avoid(g, za, zb, y, inst.m, r_prime, h1, h2) {
                    Ok(line) => line,
                    Err(e) => {
                        stages.push(format!("stitch {j}: median escalated ({e})"));
                        dp_stitch(g, ps, za, zb, inst.m, r_prime, &m_row)?
                    }
                }
            }
            AvoidSubroutine::Combing => match combing_avoid(g, ps, za, zb, y, inst.m, r_prime, false) {
                Ok(line) => line,
                Err(e) => {
                    stages.push(format!("stitch {j}: combing escalated ({e})"));
                    dp_stitch(g, ps, za, zb, inst.m, r_prime, &m_row)?
                }
            },
            AvoidSubroutine::DpFallback { .. } => dp_stitch(g, ps, za, zb, inst.m, r_prime, &m_row)?,
        };
        legs.extend(piece.legs);
    }
    if legs.is_empty() {
        legs.push(EdgePath::trivial(inst.alpha.start()));
    }
    let line = PolygonalLine::new(legs, ps.tag())?;
    let measured_clearance = line.clearance(&m_row);
    let n = inst.alpha.leg_count() as i64;
    let measured_c = if (Rat::from_integer(n) * r).is_zero() {
        Rat::zero()
    } else {
        Rat::from_integer(line.total_len() as i64) / (Rat::from_integer(n) * r)
    };
    Ok(SlidesOutcome { line, stages, central_slides: central, side_slides: side, measured_c, measured_clearance })
}

fn dp_stitch(
    g: &MetricGraph,
    ps: &PathSystem,
    za: Vertex,
    zb: Vertex,
    m: Vertex,
    r_prime: Rat,
    m_row: &[u32],
) -> Result<PolygonalLine> {
    // fallback clearance target: a quarter of the annulus radius
    let ball = Ball::new(m, r_prime / Rat::from_integer(4));
    let q = AvoidQuery::new(g, ps, ball, m_row);
    let (_, hops) = q
        .min_length_line(za, zb, DP_STITCH_LEGS)
        .ok_or_else(|| Error::SearchExhausted(format!("no stitch line {za} -> {zb}")))?;
    q.line_from_hops(&hops)
        .ok_or_else(|| Error::SearchExhausted("stitch reconstruction".into()))
}

const DP_STITCH_LEGS: u32 = 6;

// ---------------------------------------------------------------------------
// Divergence
// ---------------------------------------------------------------------------

/// Length of a shortest path from `a` to `b` whose vertices keep distance
/// at least `δ·d(c, {a,b}) - ε` from `c`; `None` when no such path exists.
pub fn divergence_point(
    g: &MetricGraph,
    a: Vertex,
    b: Vertex,
    c: Vertex,
    delta: Rat,
    epsilon: Rat,
) -> Result<Option<u32>> {
    if a == b {
        return Err(Error::InvalidInstance("divergence needs a != b".into()));
    }
    let c_row = g.distance_map(c)?;
    let m = c_row[a.idx()].min(c_row[b.idx()]);
    let threshold = delta * Rat::from_integer(m as i64) - epsilon;
    if threshold <= Rat::zero() {
        return Ok(Some(g.bfs_row(a.0)[b.idx()]));
    }
    // exclude vertices with d(v, c) < threshold;
    // closed-ball radius: the largest value strictly below the threshold
    let radius = if threshold.is_integer() { threshold - Rat::from_integer(1) } else { threshold.floor() };
    let ball = Ball::new(c, radius);
    debug_assert!(!ball.contains_distance(c_row[a.idx()]));
    let punct = g.punctured_bfs(a.0, |v| ball.contains_distance(c_row[v as usize]));
    Ok(if punct[b.idx()] == crate::graph::UNREACHED { None } else { Some(punct[b.idx()]) })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceEntry {
    pub n: u32,
    pub delta: Rat,
    pub epsilon: Rat,
    /// `None` encodes an infinite entry (some admissible triple disconnects).
    pub value: Option<u32>,
    pub is_lower_bound: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceProfile {
    pub entries: Vec<DivergenceEntry>,
    /// All entries finite over the tested range.
    pub all_finite: bool,
    /// `sup value/n` over the entries, when all are finite.
    pub sup_ratio: Option<Rat>,
    pub exhaustive: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ProfileMode {
    Exhaustive,
    Sampled { seed: u64, triples: usize },
}

const PROFILE_EXHAUSTIVE_LIMIT: usize = 200;
/// Sampled mode also scans all triples among this BFS-order prefix, which
/// pins down disconnection witnesses deterministically.
const PROFILE_PREFIX: usize = 24;

/// Supremum of the divergence over triples with `d(a,b) ≤ n`, per requested
/// `n`. Exhaustive under the size limit; sampled above it, flagged as a
/// lower bound, with the tested values nondecreasing in `n` by cumulative
/// aggregation.
pub fn divergence_profile(
    g: &MetricGraph,
    n_values: &[u32],
    delta: Rat,
    epsilon: Rat,
    mode: &ProfileMode,
) -> Result<DivergenceProfile> {
    let n = g.vertex_count();
    let exhaustive = match mode {
        ProfileMode::Exhaustive => {
            if n > PROFILE_EXHAUSTIVE_LIMIT {
                return Err(Error::BadSampleSpec(format!(
                    "exhaustive divergence limited to {PROFILE_EXHAUSTIVE_LIMIT} vertices, got {n}"
                )));
            }
            true
        }
        ProfileMode::Sampled { .. } => false,
    };
    let max_n = n_values.iter().copied().max().unwrap_or(0);
    // per pair distance d(a,b), the worst divergence value; None = infinite
    let mut agg: Vec<Option<u32>> = vec![Some(0); (max_n + 1) as usize];
    fn bump(agg: &mut [Option<u32>], d_ab: u32, value: Option<u32>) {
        let Some(slot) = agg.get_mut(d_ab as usize) else { return };
        match (slot.as_mut(), value) {
            (None, _) => {}
            (_, None) => *slot = None,
            (Some(cur), Some(v)) => {
                if v > *cur {
                    *slot = Some(v);
                }
            }
        }
    }
    // one punctured scan from `a` covers every b with d(c,b) >= d(c,a),
    // since the ball radius depends only on the nearer endpoint; pairs with
    // the roles reversed are covered when the loop reaches them
    let scan_from = |c_row: &[u32], a: u32, targets: Option<&[u32]>, agg: &mut [Option<u32>]| {
        let m = c_row[a as usize];
        let threshold = delta * Rat::from_integer(m as i64) - epsilon;
        let a_row = g.bfs_row(a);
        let punct: Option<Vec<u32>> = if threshold > Rat::zero() {
            let radius = if threshold.is_integer() { threshold - Rat::from_integer(1) } else { threshold.floor() };
            Some(g.punctured_bfs(a, |v| Rat::from_integer(c_row[v as usize] as i64) <= radius))
        } else {
            None
        };
        let handle = |b: u32, agg: &mut [Option<u32>]| {
            if b == a || c_row[b as usize] < m {
                return;
            }
            let d_ab = a_row[b as usize];
            if d_ab > max_n {
                return;
            }
            let value = match &punct {
                None => Some(d_ab),
                Some(p) => {
                    if p[b as usize] == crate::graph::UNREACHED {
                        None
                    } else {
                        Some(p[b as usize])
                    }
                }
            };
            bump(agg, d_ab, value);
        };
        match targets {
            Some(ts) => {
                for &b in ts {
                    handle(b, agg);
                }
            }
            None => {
                for b in 0..g.vertex_count() as u32 {
                    handle(b, agg);
                }
            }
        }
    };
    match mode {
        ProfileMode::Exhaustive => {
            for c in 0..n as u32 {
                let c_row = g.bfs_row(c);
                for a in 0..n as u32 {
                    scan_from(&c_row, a, None, &mut agg);
                }
            }
        }
        ProfileMode::Sampled { seed, triples } => {
            use rand::{Rng, SeedableRng};
            let prefix: Vec<u32> = (0..n.min(PROFILE_PREFIX) as u32).collect();
            for &c in &prefix {
                let c_row = g.bfs_row(c);
                for &a in &prefix {
                    scan_from(&c_row, a, Some(&prefix), &mut agg);
                }
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            for _ in 0..*triples {
                let a = rng.gen_range(0..n as u32);
                let b = rng.gen_range(0..n as u32);
                let c = rng.gen_range(0..n as u32);
                if a != b {
                    let d_ab = g.bfs_row(a)[b as usize];
                    if d_ab <= max_n {
                        let v = divergence_point(g, Vertex(a), Vertex(b), Vertex(c), delta, epsilon)?;
                        bump(&mut agg, d_ab, v);
                    }
                }
            }
        }
    }
    // cumulative max over d(a,b) <= n
    let mut entries = Vec::with_capacity(n_values.len());
    let mut sup_ratio: Option<Rat> = Some(Rat::zero());
    let mut all_finite = true;
    let mut running: Option<u32> = Some(0);
    let mut cum: Vec<Option<u32>> = Vec::with_capacity(agg.len());
    for slot in &agg {
        running = match (running, slot) {
            (None, _) | (_, None) => None,
            (Some(a), Some(b)) => Some(a.max(*b)),
        };
        cum.push(running);
    }
    for &nv in n_values {
        let value = cum.get(nv as usize).copied().unwrap_or(running);
        if let Some(v) = value {
            if nv > 0 {
                let ratio = Rat::new(v as i64, nv as i64);
                sup_ratio = sup_ratio.map(|s| s.max(ratio));
            }
        } else {
            all_finite = false;
            sup_ratio = None;
        }
        entries.push(DivergenceEntry { n: nv, delta, epsilon, value, is_lower_bound: !exhaustive });
    }
    Ok(DivergenceProfile { entries, all_finite, sup_ratio, exhaustive })
}
