//! Deterministic generators for the example families: lattice grids, balls
//! of free groups, trees, cycles, right-angled Coxeter and surface group
//! balls, products, and the staircase-combing box.
//!
//! Cayley balls are built by BFS over normal forms. Every ball family
//! records its truncation radius and an inner-safe radius (half), since
//! boundary effects can change anti-contraction verdicts near the rim.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Label, MetricGraph};
use crate::system::PathSystem;
use crate::Vertex;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Product of paths with `dims[i]` vertices per side.
    GridZd { dims: Vec<u32> },
    FreeGroupBall { rank: u32, radius: u32 },
    /// Balanced rooted tree.
    Tree { arity: u32, depth: u32 },
    Cycle { n: u32 },
    /// Right-angled Coxeter group on the 4-cycle defining graph
    /// (generators a, b, c, d; adjacent pairs commute).
    RacgBall { radius: u32 },
    /// Genus-2 surface group, standard one-relator presentation, reduced by
    /// Dehn's algorithm.
    SurfaceGroupBall { radius: u32 },
    Product { left: Box<FamilySpec>, right: Box<FamilySpec> },
    /// Box `[-half_width, half_width]²` with the staircase combing system.
    StaircaseZ2 { half_width: u32 },
}

impl FamilySpec {
    pub fn name(&self) -> String {
        match self {
            FamilySpec::GridZd { dims } => format!("grid_zd{dims:?}"),
            FamilySpec::FreeGroupBall { rank, radius } => format!("free_group_ball(F{rank}, r={radius})"),
            FamilySpec::Tree { arity, depth } => format!("tree(arity={arity}, depth={depth})"),
            FamilySpec::Cycle { n } => format!("cycle({n})"),
            FamilySpec::RacgBall { radius } => format!("racg_ball(4-cycle, r={radius})"),
            FamilySpec::SurfaceGroupBall { radius } => format!("surface_group_ball(genus 2, r={radius})"),
            FamilySpec::Product { left, right } => format!("product({}, {})", left.name(), right.name()),
            FamilySpec::StaircaseZ2 { half_width } => format!("staircase_z2([-{half_width}, {half_width}]^2)"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub family: String,
    pub vertices: usize,
    /// Ball families: the generation radius.
    pub truncation_radius: Option<u32>,
    /// Half the truncation radius; conclusions drawn inside it are safe
    /// from boundary effects.
    pub inner_safe_radius: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: MetricGraph,
    pub system: PathSystem,
    pub meta: InstanceMeta,
}

/// Deterministic generation; the same spec always yields the same instance.
pub fn generate(spec: &FamilySpec) -> Result<Instance> {
    let (graph, system, truncation) = match spec {
        FamilySpec::GridZd { dims } => {
            if dims.is_empty() || dims.iter().any(|&d| d == 0 || d > 301) {
                return Err(Error::Generation("grid dims must be within 1..=301".into()));
            }
            (grid_graph(dims)?, PathSystem::all_geodesics(), None)
        }
        FamilySpec::FreeGroupBall { rank, radius } => {
            if !(1..=3).contains(rank) || *radius > 9 {
                return Err(Error::Generation("free group ball: rank 1..=3, radius <= 9".into()));
            }
            (free_group_ball(*rank, *radius)?, PathSystem::tree_geodesics(), Some(*radius))
        }
        FamilySpec::Tree { arity, depth } => {
            if *arity == 0 || *depth > 12 || (*arity as u64).pow(*depth) > 200_000 {
                return Err(Error::Generation("tree too large".into()));
            }
            (balanced_tree(*arity, *depth)?, PathSystem::tree_geodesics(), None)
        }
        FamilySpec::Cycle { n } => {
            if *n < 3 || *n > 100_000 {
                return Err(Error::Generation("cycle size must be 3..=100000".into()));
            }
            let edges: Vec<(u32, u32)> = (0..*n).map(|i| (i, (i + 1) % n)).collect();
            (MetricGraph::from_edges(*n as usize, &edges)?, PathSystem::all_geodesics(), None)
        }
        FamilySpec::RacgBall { radius } => {
            if *radius > 6 {
                return Err(Error::Generation("racg ball radius <= 6".into()));
            }
            (racg_ball(*radius)?, PathSystem::all_geodesics(), Some(*radius))
        }
        FamilySpec::SurfaceGroupBall { radius } => {
            if *radius > 6 {
                return Err(Error::Generation("surface ball radius <= 6".into()));
            }
            (surface_ball(*radius)?, PathSystem::all_geodesics(), Some(*radius))
        }
        FamilySpec::Product { left, right } => {
            let a = generate(left)?;
            let b = generate(right)?;
            (cartesian_product(&a.graph, &b.graph)?, PathSystem::all_geodesics(), None)
        }
        FamilySpec::StaircaseZ2 { half_width } => {
            if *half_width == 0 || *half_width > 150 {
                return Err(Error::Generation("staircase half width must be 1..=150".into()));
            }
            let g = staircase_box(*half_width as i64)?;
            let ps = PathSystem::staircase_z2(&g)?;
            (g, ps, None)
        }
    };
    let meta = InstanceMeta {
        family: spec.name(),
        vertices: graph.vertex_count(),
        truncation_radius: truncation,
        inner_safe_radius: truncation.map(|r| r / 2),
    };
    Ok(Instance { graph, system, meta })
}

fn grid_graph(dims: &[u32]) -> Result<MetricGraph> {
    let n: u64 = dims.iter().map(|&d| d as u64).product();
    if n > 200_000 {
        return Err(Error::Generation("grid too large".into()));
    }
    let n = n as usize;
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1] as usize;
    }
    let coords = |mut idx: usize| -> Vec<i64> {
        let mut c = Vec::with_capacity(dims.len());
        for &s in &strides {
            c.push((idx / s) as i64);
            idx %= s;
        }
        c
    };
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for idx in 0..n {
        let c = coords(idx);
        labels.push(Label::Coords(c.clone()));
        for (axis, &s) in strides.iter().enumerate() {
            if c[axis] + 1 < dims[axis] as i64 {
                edges.push((idx as u32, (idx + s) as u32));
            }
        }
    }
    Ok(MetricGraph::from_edges(n, &edges)?.with_labels(labels))
}

fn staircase_box(half: i64) -> Result<MetricGraph> {
    let side = (2 * half + 1) as usize;
    let idx = |x: i64, y: i64| ((x + half) as usize * side + (y + half) as usize) as u32;
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for x in -half..=half {
        for y in -half..=half {
            labels.push(Label::Coords(vec![x, y]));
            if x < half {
                edges.push((idx(x, y), idx(x + 1, y)));
            }
            if y < half {
                edges.push((idx(x, y), idx(x, y + 1)));
            }
        }
    }
    Ok(MetricGraph::from_edges(side * side, &edges)?.with_labels(labels))
}

fn balanced_tree(arity: u32, depth: u32) -> Result<MetricGraph> {
    let mut edges = Vec::new();
    let mut labels = vec![Label::Word(String::new())];
    let mut frontier = vec![0u32];
    let mut next_id = 1u32;
    for _ in 0..depth {
        let mut next = Vec::new();
        for &p in &frontier {
            for child in 0..arity {
                edges.push((p, next_id));
                let Label::Word(pw) = &labels[p as usize] else { unreachable!() };
                labels.push(Label::Word(format!("{pw}{child}")));
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    Ok(MetricGraph::from_edges(next_id as usize, &edges)?.with_labels(labels))
}

fn cartesian_product(a: &MetricGraph, b: &MetricGraph) -> Result<MetricGraph> {
    let (na, nb) = (a.vertex_count(), b.vertex_count());
    if na.saturating_mul(nb) > 200_000 {
        return Err(Error::Generation("product too large".into()));
    }
    let idx = |i: usize, j: usize| (i * nb + j) as u32;
    let mut edges = Vec::new();
    for i in 0..na {
        for j in 0..nb {
            for &i2 in a.neighbors(Vertex(i as u32)) {
                if (i2 as usize) > i {
                    edges.push((idx(i, j), idx(i2 as usize, j)));
                }
            }
            for &j2 in b.neighbors(Vertex(j as u32)) {
                if (j2 as usize) > j {
                    edges.push((idx(i, j), idx(i, j2 as usize)));
                }
            }
        }
    }
    MetricGraph::from_edges(na * nb, &edges)
}

// ---------------------------------------------------------------------------
// Free groups
// ---------------------------------------------------------------------------

/// Letters are encoded as `0..2k` with `l ^ 1` the inverse of `l`.
fn letter_char(l: u8) -> char {
    let base = b"aAbBcCdD";
    base[l as usize] as char
}

fn word_string(w: &[u8]) -> String {
    w.iter().map(|&l| letter_char(l)).collect()
}

fn free_group_ball(rank: u32, radius: u32) -> Result<MetricGraph> {
    use std::collections::HashMap;
    let letters: Vec<u8> = (0..2 * rank as u8).collect();
    let mut ids: HashMap<Vec<u8>, u32> = HashMap::new();
    let mut words: Vec<Vec<u8>> = vec![Vec::new()];
    ids.insert(Vec::new(), 0);
    let mut edges = Vec::new();
    let mut frontier = vec![0u32];
    for _ in 0..radius {
        let mut next = Vec::new();
        for &v in &frontier {
            let w = words[v as usize].clone();
            for &l in &letters {
                if w.last() == Some(&(l ^ 1)) {
                    continue; // reduction: would walk back
                }
                let mut w2 = w.clone();
                w2.push(l);
                let id = *ids.entry(w2.clone()).or_insert_with(|| {
                    words.push(w2);
                    next.push(words.len() as u32 - 1);
                    words.len() as u32 - 1
                });
                if id > v {
                    edges.push((v, id));
                }
            }
        }
        frontier = next;
    }
    let labels = words.iter().map(|w| Label::Word(word_string(w))).collect();
    Ok(MetricGraph::from_edges(words.len(), &edges)?.with_labels(labels))
}

// ---------------------------------------------------------------------------
// Right-angled Coxeter group on the 4-cycle
// ---------------------------------------------------------------------------

/// Generators 0..4 standing for a, b, c, d; the defining 4-cycle is
/// a-b-c-d-a, so cyclically adjacent generators commute and the diagonals
/// (a, c), (b, d) do not.
fn racg_commutes(x: u8, y: u8) -> bool {
    let diff = (x as i8 - y as i8).rem_euclid(4);
    diff == 1 || diff == 3
}

/// Shortlex normal form maintenance: multiplying a normal form by a
/// generator either deletes a matching letter that can be swept to the end,
/// or inserts the letter at its sorted position among commuting letters.
pub(crate) fn racg_multiply(nf: &[u8], g: u8) -> Vec<u8> {
    // deletion condition: rightmost g that commutes past everything after it
    for i in (0..nf.len()).rev() {
        if nf[i] == g {
            if nf[i + 1..].iter().all(|&x| racg_commutes(x, g)) {
                let mut out = nf.to_vec();
                out.remove(i);
                return out;
            }
            break; // a g that cannot be swept blocks earlier ones too
        }
        if !racg_commutes(nf[i], g) {
            break;
        }
    }
    // insertion: g may slide anywhere within the maximal suffix of letters
    // commuting with it; the shortlex position is before the first larger
    // letter of that suffix
    let mut out = nf.to_vec();
    let mut suffix_start = out.len();
    while suffix_start > 0 && racg_commutes(out[suffix_start - 1], g) {
        suffix_start -= 1;
    }
    let mut pos = suffix_start;
    while pos < out.len() && out[pos] < g {
        pos += 1;
    }
    out.insert(pos, g);
    out
}

fn racg_ball(radius: u32) -> Result<MetricGraph> {
    use std::collections::HashMap;
    let mut ids: HashMap<Vec<u8>, u32> = HashMap::new();
    let mut words: Vec<Vec<u8>> = vec![Vec::new()];
    ids.insert(Vec::new(), 0);
    let mut edges = Vec::new();
    let mut frontier = vec![0u32];
    for _ in 0..radius {
        let mut next = Vec::new();
        for &v in &frontier {
            let w = words[v as usize].clone();
            for g in 0..4u8 {
                let w2 = racg_multiply(&w, g);
                if w2.len() < w.len() {
                    continue; // edge already recorded from the shorter side
                }
                let id = *ids.entry(w2.clone()).or_insert_with(|| {
                    words.push(w2);
                    next.push(words.len() as u32 - 1);
                    words.len() as u32 - 1
                });
                let e = (v.min(id), v.max(id));
                edges.push(e);
            }
        }
        frontier = next;
    }
    edges.sort_unstable();
    edges.dedup();
    let labels = words
        .iter()
        .map(|w| Label::Word(w.iter().map(|&l| (b'a' + l) as char).collect()))
        .collect();
    Ok(MetricGraph::from_edges(words.len(), &edges)?.with_labels(labels))
}

// ---------------------------------------------------------------------------
// Genus-2 surface group via Dehn's algorithm
// ---------------------------------------------------------------------------

/// Relator [a,b][c,d] over letters 0..8 (inverse = l ^ 1).
const SURFACE_RELATOR: [u8; 8] = [0, 2, 1, 3, 4, 6, 5, 7];

fn free_reduce(w: &mut Vec<u8>) {
    let mut out: Vec<u8> = Vec::with_capacity(w.len());
    for &l in w.iter() {
        if out.last() == Some(&(l ^ 1)) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    *w = out;
}

fn invert_word(w: &[u8]) -> Vec<u8> {
    w.iter().rev().map(|&l| l ^ 1).collect()
}

fn relator_rotations() -> Vec<Vec<u8>> {
    let mut rots = Vec::new();
    let r: Vec<u8> = SURFACE_RELATOR.to_vec();
    let ri = invert_word(&r);
    for base in [r, ri] {
        for s in 0..base.len() {
            let mut rot = base[s..].to_vec();
            rot.extend_from_slice(&base[..s]);
            rots.push(rot);
        }
    }
    rots
}

/// Dehn reduction: freely reduce, then repeatedly replace any subword
/// matching more than half of a relator rotation by the inverse of the
/// complement. The presentation satisfies the small-cancellation condition
/// that makes this terminate on a geodesic word, and on the empty word iff
/// the element is trivial.
pub(crate) fn dehn_reduce(word: &[u8], rotations: &[Vec<u8>]) -> Vec<u8> {
    let mut w = word.to_vec();
    free_reduce(&mut w);
    'outer: loop {
        for rot in rotations {
            for start in 0..w.len() {
                let mut m = 0usize;
                while m < rot.len() && start + m < w.len() && w[start + m] == rot[m] {
                    m += 1;
                }
                if m > rot.len() / 2 {
                    // w[start..start+m] = rot[..m]; replace by inverse of the tail
                    let replacement = invert_word(&rot[m..]);
                    let mut out = w[..start].to_vec();
                    out.extend_from_slice(&replacement);
                    out.extend_from_slice(&w[start + m..]);
                    free_reduce(&mut out);
                    w = out;
                    continue 'outer;
                }
            }
        }
        return w;
    }
}

fn abelianization(w: &[u8]) -> [i32; 4] {
    let mut ab = [0i32; 4];
    for &l in w {
        let gen = (l / 2) as usize;
        ab[gen] += if l % 2 == 0 { 1 } else { -1 };
    }
    ab
}

fn surface_ball(radius: u32) -> Result<MetricGraph> {
    use std::collections::HashMap;
    let rotations = relator_rotations();
    let equal = |a: &[u8], b: &[u8]| -> bool {
        let mut prod = a.to_vec();
        prod.extend(invert_word(b));
        dehn_reduce(&prod, &rotations).is_empty()
    };
    // buckets keyed by (geodesic length, abelianization) keep the pairwise
    // equality checks tiny
    let mut buckets: HashMap<(usize, [i32; 4]), Vec<u32>> = HashMap::new();
    let mut words: Vec<Vec<u8>> = vec![Vec::new()];
    buckets.insert((0, [0; 4]), vec![0]);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut frontier = vec![0u32];
    for _ in 0..radius {
        let mut next = Vec::new();
        for &v in &frontier {
            let w = words[v as usize].clone();
            for l in 0..8u8 {
                let mut w2 = w.clone();
                w2.push(l);
                let w2 = dehn_reduce(&w2, &rotations);
                if w2.len() < w.len() {
                    continue; // walks back toward the identity
                }
                debug_assert_eq!(w2.len(), w.len() + 1, "bipartite Cayley graph");
                let key = (w2.len(), abelianization(&w2));
                let bucket = buckets.entry(key).or_default();
                let found = bucket.iter().copied().find(|&id| equal(&words[id as usize], &w2));
                let id = match found {
                    Some(id) => id,
                    None => {
                        words.push(w2);
                        let id = words.len() as u32 - 1;
                        bucket.push(id);
                        next.push(id);
                        id
                    }
                };
                edges.push((v.min(id), v.max(id)));
            }
        }
        frontier = next;
    }
    edges.sort_unstable();
    edges.dedup();
    let labels = words.iter().map(|w| Label::Word(word_string(w))).collect();
    Ok(MetricGraph::from_edges(words.len(), &edges)?.with_labels(labels))
}

// ---------------------------------------------------------------------------
// Automorphisms
// ---------------------------------------------------------------------------

/// Verified automorphism generators preserving the family's default path
/// system. Candidates failing the exhaustive adjacency check are dropped.
pub fn automorphisms(spec: &FamilySpec, g: &MetricGraph) -> Result<Vec<Vec<u32>>> {
    let candidates: Vec<Vec<u32>> = match spec {
        FamilySpec::GridZd { dims } if dims.len() == 2 => {
            let (w, h) = (dims[0] as i64, dims[1] as i64);
            let mut maps: Vec<Box<dyn Fn(i64, i64) -> (i64, i64)>> = vec![
                Box::new(move |x, y| (w - 1 - x, y)),
                Box::new(move |x, y| (x, h - 1 - y)),
            ];
            if w == h {
                maps.push(Box::new(move |x, y| (y, x)));
                maps.push(Box::new(move |x, y| (h - 1 - y, x))); // rotation
            }
            maps.iter()
                .map(|f| {
                    g.vertices()
                        .map(|v| {
                            let c = g.coords(v).unwrap();
                            let (x2, y2) = f(c[0], c[1]);
                            g.vertex_at(&[x2, y2]).unwrap().0
                        })
                        .collect()
                })
                .collect()
        }
        FamilySpec::StaircaseZ2 { .. } => {
            // only the reflections fixing the x-axis direction-setup
            // preserve the combing
            let maps: Vec<Box<dyn Fn(i64, i64) -> (i64, i64)>> =
                vec![Box::new(|x, y| (-x, y)), Box::new(|x, y| (x, -y))];
            maps.iter()
                .map(|f| {
                    g.vertices()
                        .map(|v| {
                            let c = g.coords(v).unwrap();
                            let (x2, y2) = f(c[0], c[1]);
                            g.vertex_at(&[x2, y2]).unwrap().0
                        })
                        .collect()
                })
                .collect()
        }
        FamilySpec::Cycle { n } => {
            let n = *n;
            let rotation: Vec<u32> = (0..n).map(|i| (i + 1) % n).collect();
            let reflection: Vec<u32> = (0..n).map(|i| (n - i) % n).collect();
            vec![rotation, reflection]
        }
        FamilySpec::FreeGroupBall { rank: 2, .. } => {
            // letter permutations pi with pi(x^-1) = pi(x)^-1: 8 of them
            let perms: Vec<[u8; 4]> = vec![
                [1, 0, 2, 3], // a <-> A
                [0, 1, 3, 2], // b <-> B
                [2, 3, 0, 1], // a <-> b, A <-> B
            ];
            perms
                .iter()
                .map(|p| {
                    g.vertices()
                        .map(|v| {
                            let Some(Label::Word(wstr)) = g.label(v) else { panic!("word labels") };
                            let mapped: String = wstr
                                .chars()
                                .map(|ch| {
                                    let l = b"aAbB".iter().position(|&c| c as char == ch).unwrap();
                                    letter_char(p[l])
                                })
                                .collect();
                            g.vertices()
                                .find(|&u| matches!(g.label(u), Some(Label::Word(s)) if *s == mapped))
                                .unwrap()
                                .0
                        })
                        .collect()
                })
                .collect()
        }
        FamilySpec::Tree { arity, depth } => {
            // permute the root subtrees by swapping child digits 0 and 1
            if *arity < 2 || *depth == 0 {
                vec![]
            } else {
                let swap = |w: &str| -> String {
                    w.chars()
                        .enumerate()
                        .map(|(i, c)| if i == 0 && c == '0' { '1' } else if i == 0 && c == '1' { '0' } else { c })
                        .collect()
                };
                vec![g
                    .vertices()
                    .map(|v| {
                        let Some(Label::Word(wstr)) = g.label(v) else { panic!("word labels") };
                        let mapped = swap(wstr);
                        g.vertices()
                            .find(|&u| matches!(g.label(u), Some(Label::Word(s)) if *s == mapped))
                            .unwrap()
                            .0
                    })
                    .collect()]
            }
        }
        _ => {
            return Err(Error::UnsupportedKind { op: "automorphisms", kind: "family" });
        }
    };
    Ok(candidates.into_iter().filter(|p| g.is_automorphism(p)).collect())
}
