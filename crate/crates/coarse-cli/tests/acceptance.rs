//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `--nocapture`). Expected values are exact closed
//! forms, theorem constants, or frozen outputs of the independent
//! enumeration oracles in `coarse::reference`.

use coarse::contraction::{
    build_contraction_space, image_quasi_geodesic_constant, is_anti_contracting, neck_radius,
    ContractionSpace, ContractionTriple, PairScope,
};
use coarse::graph::{Ball, MetricGraph};
use coarse::instances::{generate, FamilySpec};
use coarse::morse::{p_contracting_minimal, proportionally_thin, strong_contraction_constant, ThinnessParams};
use coarse::navigation::{combing_avoid, median_avoid};
use coarse::path::{lex_min_geodesic, EdgePath, PolygonalLine};
use coarse::system::{LegFeasibility, PathSystem};
use coarse::{rat, Rat, Vertex};
use coarse_cli::experiment::{run_dichotomy_experiment, DichotomyReport, ExperimentConfig};
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(criterion: u32, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

static DESK_REPORT: Lazy<DichotomyReport> = Lazy::new(|| {
    run_dichotomy_experiment(&ExperimentConfig::desk(0)).expect("desk experiment")
});

static F2_SPACES: Lazy<Vec<(u32, MetricGraph, ContractionSpace)>> = Lazy::new(|| {
    (4..=8)
        .map(|radius| {
            let inst = generate(&FamilySpec::FreeGroupBall { rank: 2, radius }).unwrap();
            let ps = PathSystem::all_geodesics();
            let triple = ContractionTriple::validator_default(ps.config());
            let space = build_contraction_space(&inst.graph, &ps, &triple, &PairScope::All).unwrap();
            (radius, inst.graph, space)
        })
        .collect()
});

/// Criterion 1: the staircase-combing box reproduces the two-versus-three
/// polygonal-leg signature of the x-axis segment, with the rectangle
/// witness at clearance exactly 5.
#[test]
fn criterion_1_staircase_signature() {
    let inst = generate(&FamilySpec::StaircaseZ2 { half_width: 12 }).unwrap();
    let (g, ps) = (&inst.graph, &inst.system);
    let a = g.vertex_at(&[0, 0]).unwrap();
    let b = g.vertex_at(&[10, 0]).unwrap();
    let axis = lex_min_geodesic(g, a, b).unwrap();
    assert_eq!(axis.len(), 10);

    let two = ThinnessParams::new(rat(1, 4), rat(10, 1), 2, rat(1, 1)).unwrap();
    let rep2 = proportionally_thin(g, ps, &two, &axis).unwrap();

    let three = ThinnessParams::new(rat(1, 4), rat(3, 1), 3, rat(1, 1)).unwrap();
    let rep3 = proportionally_thin(g, ps, &three, &axis).unwrap();

    // the rectangle through row 10, exactly at the length budget 3·d, with
    // clearance to the midpoint exactly 5 = d/2
    let corner_a = g.vertex_at(&[10, 10]).unwrap();
    let corner_b = g.vertex_at(&[0, 10]).unwrap();
    let legs = vec![
        lex_min_geodesic(g, b, corner_a).unwrap(),
        coarse::path::rectify(g, &[corner_a, corner_b]).unwrap(),
        lex_min_geodesic(g, corner_b, a).unwrap(),
    ];
    for leg in &legs {
        assert!(ps.is_member(g, leg), "rectangle legs are combing subsegments");
    }
    let rect = PolygonalLine::new(legs, ps.tag()).unwrap();
    let mid_row = g.bfs_row(g.vertex_at(&[5, 0]).unwrap().0);
    let clearance = rect.clearance(&mid_row);
    let pass = rep2.verdict
        && !rep3.verdict
        && rect.total_len() == 30
        && clearance == 5
        && rep3.witness.is_some();
    verdict(
        1,
        pass,
        &format!(
            "2-leg thin: {}, 3-leg thin: {}, rectangle length {} clearance {clearance}",
            rep2.verdict,
            rep3.verdict,
            rect.total_len()
        ),
    );
}

/// Criterion 2: median avoidance constants C = 28, k = 3 on the 141x141
/// grid over 200 seeded valid instances. Zero assertion failures.
#[test]
fn criterion_2_median_avoidance() {
    let inst = generate(&FamilySpec::GridZd { dims: vec![141, 141] }).unwrap();
    let g = &inst.graph;
    let side = 141i64;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let r = rat(14, 1);
    let mut done = 0u32;
    let mut attempts = 0u32;
    while done < 200 {
        attempts += 1;
        assert!(attempts < 4000, "valid instances must be plentiful");
        let m = g.vertex_at(&[rng.gen_range(0..side), rng.gen_range(0..side)]).unwrap();
        let mc = g.coords(m).unwrap().to_vec();
        let sample_near = |rng: &mut ChaCha8Rng| {
            let dx = rng.gen_range(-56i64..=56);
            let dy = rng.gen_range(-(56 - dx.abs())..=(56 - dx.abs()));
            g.vertex_at(&[(mc[0] + dx).clamp(0, side - 1), (mc[1] + dy).clamp(0, side - 1)])
                .unwrap()
        };
        let z1 = sample_near(&mut rng);
        let z2 = sample_near(&mut rng);
        let y = g.vertex_at(&[rng.gen_range(0..side), rng.gen_range(0..side)]).unwrap();
        match median_avoid(g, z1, z2, y, m, r, None, None) {
            Ok(line) => {
                let row = g.bfs_row(m.0);
                assert!(line.leg_count() <= 3, "instance {done}: more than 3 legs");
                assert!(line.total_len() <= 28 * 14, "instance {done}: length {}", line.total_len());
                assert!(line.clearance(&row) >= 14, "instance {done}: clearance");
                done += 1;
            }
            Err(coarse::Error::InvalidInstance(_)) => continue, // resample
            Err(e) => panic!("internal failure on a valid instance: {e}"),
        }
    }
    verdict(2, true, &format!("200 instances in {attempts} attempts, all within 3 legs, 28R length, R clearance"));
}

/// Criterion 3: combing avoidance on free-group balls (κ₀ = 0), 200 seeded
/// valid instances with length at most 100R and clearance R. Zero failures.
#[test]
fn criterion_3_combing_avoidance() {
    let inst = generate(&FamilySpec::FreeGroupBall { rank: 2, radius: 7 }).unwrap();
    let g = &inst.graph;
    let ps = PathSystem::tree_geodesics();
    let n = g.vertex_count() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut done = 0u32;
    let mut attempts = 0u32;
    while done < 200 {
        attempts += 1;
        assert!(attempts < 20000, "valid instances must be plentiful");
        let r = Rat::from_integer(rng.gen_range(1..=3));
        let m = Vertex(rng.gen_range(0..n));
        // z candidates must lie within 4R of m for the instance to be valid
        let m_row = g.bfs_row(m.0);
        let near: Vec<u32> = (0..n)
            .filter(|&v| Rat::from_integer(m_row[v as usize] as i64) <= rat(4, 1) * r)
            .collect();
        let z1 = Vertex(near[rng.gen_range(0..near.len())]);
        let z2 = Vertex(near[rng.gen_range(0..near.len())]);
        let y = Vertex(rng.gen_range(0..n));
        match combing_avoid(g, &ps, z1, z2, y, m, r, false) {
            Ok(line) => {
                let row = g.bfs_row(m.0);
                assert!(line.leg_count() <= 5, "instance {done}: more than 5 legs");
                assert!(Rat::from_integer(line.total_len() as i64) <= rat(100, 1) * r, "instance {done}: length");
                assert!(Rat::from_integer(line.clearance(&row) as i64) >= r, "instance {done}: clearance");
                done += 1;
            }
            Err(coarse::Error::InvalidInstance(_)) => continue,
            Err(e) => panic!("internal failure on a valid instance: {e}"),
        }
    }
    verdict(3, true, &format!("200 instances in {attempts} attempts, all within 5 legs, 100R length, R clearance"));
}

/// Criterion 4: the dichotomy table. Grids collapse to derived diameter 1
/// with linear divergence (sup value/n ≤ 8, exhaustive at size 7); the
/// free-group family has derived diameter exactly ⌈2·radius/3⌉ and
/// infinite divergence entries from n = 2 on.
#[test]
fn criterion_4_dichotomy_table() {
    let report = &*DESK_REPORT;
    let grid = report.rows.iter().find(|r| r.label == "grid").unwrap();
    let mut detail = String::new();
    let mut pass = true;
    for inst in &grid.instances {
        if inst.dhat_diameter != 1 {
            pass = false;
            detail.push_str(&format!("{} diameter {} != 1; ", inst.spec, inst.dhat_diameter));
        }
        let sup = inst.divergence_sup_ratio.unwrap_or_else(|| rat(1000, 1));
        if sup > rat(8, 1) || !inst.divergence_exhaustive {
            pass = false;
            detail.push_str(&format!("{} divergence sup {sup}; ", inst.spec));
        }
    }
    let free = report.rows.iter().find(|r| r.label == "free_group").unwrap();
    for (inst, radius) in free.instances.iter().zip(4u32..) {
        let expected = (2 * radius).div_ceil(3);
        if inst.dhat_diameter != expected {
            pass = false;
            detail.push_str(&format!("{} diameter {} != {expected}; ", inst.spec, inst.dhat_diameter));
        }
        if inst.divergence_infinite_from != Some(2) {
            pass = false;
            detail.push_str(&format!(
                "{} infinite divergence from {:?}, expected n = 2; ",
                inst.spec, inst.divergence_infinite_from
            ));
        }
    }
    if !report.deviations.is_empty() {
        pass = false;
        detail.push_str(&format!("deviations: {:?}", report.deviations));
    }
    verdict(
        4,
        pass,
        if detail.is_empty() {
            "grid diameters 1 with linear divergence; free-group diameters ceil(2r/3) with infinite divergence from n=2"
        } else {
            detail.as_str()
        },
    );
}

/// Criterion 5: hyperbolicity stability — the measured four-point delta of
/// the derived space is constant across free-group radii 4..8 (tolerance
/// 0), and at most 1 on the collapsed grids.
#[test]
fn criterion_5_hyperbolicity_stability() {
    let report = &*DESK_REPORT;
    let free = report.rows.iter().find(|r| r.label == "free_group").unwrap();
    let deltas: Vec<Rat> = free.instances.iter().map(|i| i.delta_hat).collect();
    let constant = deltas.windows(2).all(|w| w[0] == w[1]);
    let grid = report.rows.iter().find(|r| r.label == "grid").unwrap();
    let grid_ok = grid.instances.iter().all(|i| i.delta_hat <= rat(1, 1) && i.delta_exact);
    verdict(
        5,
        constant && grid_ok,
        &format!("free-group deltas {deltas:?} constant: {constant}; grid deltas all ≤ 1: {grid_ok}"),
    );
}

/// Criterion 6: strong-contraction upgrade — wherever the contraction
/// check passes with minimal constant C, the closest-point projection
/// constant is at most 14C + 2. Fifty geodesics across trees, grids and
/// free-group balls, zero violations.
#[test]
fn criterion_6_strong_contraction_upgrade() {
    let corpus: Vec<(MetricGraph, PathSystem)> = vec![
        (generate(&FamilySpec::Tree { arity: 2, depth: 5 }).unwrap().graph, PathSystem::all_geodesics()),
        (generate(&FamilySpec::Tree { arity: 3, depth: 4 }).unwrap().graph, PathSystem::all_geodesics()),
        (generate(&FamilySpec::GridZd { dims: vec![7, 7] }).unwrap().graph, PathSystem::all_geodesics()),
        (generate(&FamilySpec::GridZd { dims: vec![9, 9] }).unwrap().graph, PathSystem::all_geodesics()),
        (generate(&FamilySpec::FreeGroupBall { rank: 2, radius: 4 }).unwrap().graph, PathSystem::all_geodesics()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut checked = 0;
    let mut max_gap = rat(-1000, 1);
    for (g, ps) in &corpus {
        let n = g.vertex_count() as u32;
        for _ in 0..10 {
            let (a, b) = (Vertex(rng.gen_range(0..n)), Vertex(rng.gen_range(0..n)));
            let gamma = lex_min_geodesic(g, a, b).unwrap();
            let c = p_contracting_minimal(g, ps, &gamma, 7).unwrap();
            let s = strong_contraction_constant(g, &gamma);
            let bound = 14 * c + 2;
            assert!(
                s <= bound,
                "geodesic {a}->{b} on {} vertices: strong constant {s} > 14·{c}+2",
                g.vertex_count()
            );
            max_gap = max_gap.max(rat(s as i64, 1) - rat(bound as i64, 1));
            checked += 1;
        }
    }
    verdict(6, checked == 50, &format!("{checked} geodesics, all with strong constant ≤ 14C+2 (max slack used {max_gap})"));
}

/// Criterion 7: quasi-geodesic-image equivalence at desk scale. On
/// free-group balls every geodesic's image admits Q = 4 (verified through
/// the exact derived-metric identity d̂ = ⌈d/3⌉ on all pairs plus the
/// generic scanner on sampled geodesics). On grids the image of a long
/// geodesic in the collapsed space fails every Q ≤ 4; with the two-sided
/// parametrized definition this holds exactly for lengths above
/// Q + Q² = 20, and the measured constant at length 10 is printed for the
/// record.
#[test]
fn criterion_7_image_quasi_geodesic() {
    let mut pass = true;
    let mut detail = String::new();
    for (radius, g, space) in F2_SPACES.iter() {
        // exact identity on every pair
        use rayon::prelude::*;
        let ok = (0..g.vertex_count() as u32).into_par_iter().all(|u| {
            let base = g.bfs_row(u);
            let hat = space.hat().bfs_row(u);
            (0..g.vertex_count()).all(|v| hat[v] == base[v].div_ceil(3))
        });
        if !ok {
            pass = false;
            detail.push_str(&format!("radius {radius}: derived metric deviates from ceil(d/3); "));
            continue;
        }
        // with d̂ = ceil(d/3), the per-geodesic constraint set depends only
        // on the length, so the exhaustive check reduces to one per length
        let diam = 2 * radius;
        for len in 1..=diam {
            let q = rat(4, 1);
            for l in 0..=len {
                let dh = Rat::from_integer(l.div_ceil(3) as i64);
                let lr = Rat::from_integer(l as i64);
                if lr > q * dh + q * q || dh > q * lr + q {
                    pass = false;
                    detail.push_str(&format!("radius {radius}: length {len} violates Q=4 at sub-length {l}; "));
                }
            }
        }
        // the generic scanner agrees on sampled geodesics
        let mut rng = ChaCha8Rng::seed_from_u64(45 + *radius as u64);
        let n = g.vertex_count() as u32;
        for _ in 0..15 {
            let (a, b) = (Vertex(rng.gen_range(0..n)), Vertex(rng.gen_range(0..n)));
            let gamma = lex_min_geodesic(g, a, b).unwrap();
            let rep = image_quasi_geodesic_constant(space, &gamma);
            if !rep.admits(rat(4, 1)) {
                pass = false;
                detail.push_str(&format!("radius {radius}: sampled geodesic fails Q = 4 (min_q {}); ", rep.min_q));
            }
        }
    }
    // grid side: complete space, so images of long geodesics violate the
    // lower quasi-geodesic bound; exact threshold for Q = 4 is length 21
    let g = generate(&FamilySpec::GridZd { dims: vec![13, 13] }).unwrap().graph;
    let ps = PathSystem::all_geodesics();
    let triple = ContractionTriple::validator_default(ps.config());
    let space = build_contraction_space(&g, &ps, &triple, &PairScope::All).unwrap();
    let corner = |x: i64, y: i64| g.vertex_at(&[x, y]).unwrap();
    for (a, b, len) in [
        (corner(0, 0), corner(12, 9), 21u32),
        (corner(0, 0), corner(12, 10), 22),
        (corner(0, 0), corner(12, 12), 24),
    ] {
        let gamma = lex_min_geodesic(&g, a, b).unwrap();
        assert_eq!(gamma.len(), len);
        let rep = image_quasi_geodesic_constant(&space, &gamma);
        if rep.admits(rat(4, 1)) {
            pass = false;
            detail.push_str(&format!("grid geodesic of length {len} admits Q = 4; "));
        }
    }
    // record the short-length behavior visibly: below length 21 the
    // two-sided definition still admits Q = 4
    let gamma10 = lex_min_geodesic(&g, corner(0, 0), corner(10, 0)).unwrap();
    let rep10 = image_quasi_geodesic_constant(&space, &gamma10);
    println!(
        "criterion 7 note: length-10 grid geodesic has minimal Q ≈ {:.3} under \
         |t-s|/Q - Q ≤ d̂ ≤ Q|t-s| + Q; failure of Q ≤ 4 starts at length 21",
        rep10.min_q
    );
    verdict(
        7,
        pass,
        if detail.is_empty() {
            "free-group images admit Q = 4 on every pair; grid images of length ≥ 21 fail every Q ≤ 4"
        } else {
            detail.as_str()
        },
    );
}

/// Criterion 8: oracle equivalence on the small-graph corpus — the
/// reachability-based neck radius equals the explicit polygonal-line
/// enumeration for n in 1..4, and single-leg feasibility equals the
/// enumeration minimum. Exact and exhaustive.
#[test]
fn criterion_8_oracle_equivalence() {
    let corpus: Vec<(&str, MetricGraph)> = vec![
        ("path6", MetricGraph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap()),
        ("cycle5", MetricGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap()),
        ("cycle8", generate(&FamilySpec::Cycle { n: 8 }).unwrap().graph),
        ("star", MetricGraph::from_edges(7, &[(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)]).unwrap()),
        ("theta", MetricGraph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (0, 4), (4, 3), (0, 5), (5, 3)]).unwrap()),
        ("k4", MetricGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()),
        ("grid3x3", generate(&FamilySpec::GridZd { dims: vec![3, 3] }).unwrap().graph),
        (
            "petersen",
            MetricGraph::from_edges(
                10,
                &[
                    (0, 1), (1, 2), (2, 3), (3, 4), (4, 0),
                    (5, 7), (7, 9), (9, 6), (6, 8), (8, 5),
                    (0, 5), (1, 6), (2, 7), (3, 8), (4, 9),
                ],
            )
            .unwrap(),
        ),
    ];
    let ps = PathSystem::all_geodesics();
    let mut necks_checked = 0u32;
    let mut legs_checked = 0u32;
    for (name, g) in &corpus {
        let n_verts = g.vertex_count() as u32;
        for x in 0..n_verts {
            for y in 0..n_verts {
                if x == y {
                    continue;
                }
                let (paths, complete) = ps.special_paths(g, Vertex(x), Vertex(y), 10_000).unwrap();
                assert!(complete);
                for h in &paths {
                    for legs in 1..=4u32 {
                        let fast = neck_radius(g, &ps, h, legs).unwrap();
                        let brute = coarse::reference::brute_max_line_clearance(
                            g,
                            &ps,
                            h.end(),
                            h.start(),
                            legs,
                            h.midpoint(),
                        );
                        assert_eq!(fast, brute, "{name}: neck of {:?} with {legs} legs", h.vertices());
                        necks_checked += 1;
                    }
                }
                for center in 0..n_verts {
                    for radius in [rat(0, 1), rat(1, 1)] {
                        let ball = Ball::new(Vertex(center), radius);
                        let fast = ps.min_leg_avoiding(g, Vertex(x), Vertex(y), &ball).unwrap();
                        let brute = coarse::reference::brute_min_leg_avoiding(g, &ps, Vertex(x), Vertex(y), &ball);
                        match fast {
                            LegFeasibility::Feasible(l) => assert_eq!(brute, Some(l), "{name}"),
                            _ => assert_eq!(brute, None, "{name}"),
                        }
                        legs_checked += 1;
                    }
                }
            }
        }
    }
    verdict(8, true, &format!("{necks_checked} neck values and {legs_checked} leg queries match enumeration exactly"));
}

/// Criterion 9: the cross-module invariant suite.
#[test]
fn criterion_9_invariant_suite() {
    let mut notes = Vec::new();

    // 1-Lipschitz inclusion and clique property on an exhaustive space
    let (_, f2g, f2space) = &F2_SPACES[0];
    for u in 0..f2g.vertex_count() as u32 {
        let base = f2g.bfs_row(u);
        let hat = f2space.hat().bfs_row(u);
        for v in 0..f2g.vertex_count() {
            assert!(hat[v] <= base[v], "derived metric must not exceed the base metric");
        }
    }
    notes.push("1-Lipschitz".to_string());

    let gridg = generate(&FamilySpec::GridZd { dims: vec![9, 9] }).unwrap().graph;
    let ps = PathSystem::all_geodesics();
    let triple = ContractionTriple::validator_default(ps.config());
    let gridspace = build_contraction_space(&gridg, &ps, &triple, &PairScope::All).unwrap();
    let h = lex_min_geodesic(&gridg, Vertex(0), Vertex(80)).unwrap();
    let anti = is_anti_contracting(&gridg, &ps, &triple, &h).unwrap();
    assert!(anti.anti);
    let verts = h.vertices();
    for &u in verts {
        let row = gridspace.dhat_row(u);
        assert!(verts.iter().all(|v| row[v.idx()] <= 1), "anti-contracting vertex sets are cliques");
        assert!(verts.iter().all(|v| row[v.idx()] <= 3), "derived diameter of anti paths ≤ 3");
    }
    // subsegment closure of anti-contraction
    for i in (0..h.len()).step_by(4) {
        for j in ((i + 2)..=h.len()).step_by(5) {
            assert!(is_anti_contracting(&gridg, &ps, &triple, &h.window(i, j)).unwrap().anti);
        }
    }
    notes.push("clique + subsegment closure".to_string());

    // neck radius monotone in the leg budget
    let c8 = generate(&FamilySpec::Cycle { n: 8 }).unwrap().graph;
    let arc = EdgePath::new(&c8, (0..5).map(Vertex).collect()).unwrap();
    let mut prev = 0;
    for n in 1..=7 {
        let r = neck_radius(&c8, &ps, &arc, n).unwrap();
        assert!(r >= prev, "neck radius must be nondecreasing in the leg budget");
        prev = r;
    }
    notes.push("neck monotone in n".to_string());

    // midthin monotone in r: the verdict at the neck radius propagates
    let m_rep = coarse::contraction::is_midthin(&f2g.clone(), &ps, &triple, &{
        let row = f2g.bfs_row(0);
        let a = (0..f2g.vertex_count() as u32).find(|&v| row[v as usize] == 4).unwrap();
        let arow = f2g.bfs_row(a);
        let b = (0..f2g.vertex_count() as u32).find(|&v| arow[v as usize] == 8).unwrap();
        lex_min_geodesic(&f2g, Vertex(a), Vertex(b)).unwrap()
    })
    .unwrap();
    assert!(m_rep.midthin && m_rep.neck == 0);
    notes.push("midthin at neck".to_string());

    // equivariance: grid symmetries and free-group letter permutations act
    // by isometries of the derived metric
    let spec5 = FamilySpec::GridZd { dims: vec![5, 5] };
    let g5 = generate(&spec5).unwrap().graph;
    let space5 = build_contraction_space(&g5, &ps, &triple, &PairScope::All).unwrap();
    for sigma in coarse::instances::automorphisms(&spec5, &g5).unwrap() {
        for u in 0..g5.vertex_count() {
            let row = space5.dhat_row(Vertex(u as u32));
            let row_s = space5.dhat_row(Vertex(sigma[u]));
            for v in 0..g5.vertex_count() {
                assert_eq!(row[v], row_s[sigma[v] as usize], "grid symmetry must preserve the derived metric");
            }
        }
    }
    let fspec = FamilySpec::FreeGroupBall { rank: 2, radius: 4 };
    for sigma in coarse::instances::automorphisms(&fspec, f2g).unwrap() {
        for u in (0..f2g.vertex_count()).step_by(7) {
            let row = f2space.dhat_row(Vertex(u as u32));
            let row_s = f2space.dhat_row(Vertex(sigma[u]));
            for v in 0..f2g.vertex_count() {
                assert_eq!(row[v], row_s[sigma[v] as usize], "letter permutation must preserve the derived metric");
            }
        }
    }
    notes.push("equivariance".to_string());

    // divergence monotone in delta and epsilon
    let g7 = generate(&FamilySpec::GridZd { dims: vec![7, 7] }).unwrap().graph;
    let (a, b, c) = (
        g7.vertex_at(&[0, 3]).unwrap(),
        g7.vertex_at(&[6, 3]).unwrap(),
        g7.vertex_at(&[3, 3]).unwrap(),
    );
    let base = coarse::navigation::divergence_point(&g7, a, b, c, rat(1, 2), rat(0, 1)).unwrap();
    assert!(coarse::navigation::divergence_point(&g7, a, b, c, rat(1, 2), rat(1, 1)).unwrap() <= base);
    assert!(coarse::navigation::divergence_point(&g7, a, b, c, rat(3, 4), rat(0, 1)).unwrap() >= base);
    notes.push("divergence monotone".to_string());

    // special-path images stay Hausdorff-close to derived geodesics; the
    // constant is recorded at radius 4 and must not grow at radius 5
    let delta_prime_4 = image_vs_geodesic_hausdorff(&F2_SPACES[0].1, &F2_SPACES[0].2, 30, 46);
    let delta_prime_5 = image_vs_geodesic_hausdorff(&F2_SPACES[1].1, &F2_SPACES[1].2, 30, 47);
    assert!(
        delta_prime_5 <= delta_prime_4.max(1),
        "recorded image-geodesic Hausdorff constant grew: {delta_prime_4} -> {delta_prime_5}"
    );
    notes.push(format!("image-vs-geodesic Hausdorff δ' = {delta_prime_4}"));

    // Morse-oracle consistency: instances passing the polygonal detector
    // show small oracle values, failing ones show large values (threshold
    // recorded at 2)
    let thin = ThinnessParams::new(rat(1, 4), rat(4, 1), 3, rat(4, 1)).unwrap();
    let tree_gamma = {
        let row = f2g.bfs_row(0);
        let a = (0..f2g.vertex_count() as u32).find(|&v| row[v as usize] == 4).unwrap();
        let arow = f2g.bfs_row(a);
        let b = (0..f2g.vertex_count() as u32).find(|&v| arow[v as usize] == 8).unwrap();
        lex_min_geodesic(&f2g, Vertex(a), Vertex(b)).unwrap()
    };
    let grid_gamma = lex_min_geodesic(&gridg, gridg.vertex_at(&[0, 0]).unwrap(), gridg.vertex_at(&[8, 0]).unwrap()).unwrap();
    let threshold = rat(2, 1);
    let cases = [(f2g, &tree_gamma, true), (&gridg, &grid_gamma, false)];
    for (g, gamma, expect_wpm) in cases {
        let wpm = coarse::morse::weakly_polygonally_morse(g, &ps, &thin, gamma).unwrap().verdict;
        let oracle = coarse::morse::morse_gauge_oracle(g, gamma, rat(3, 1), rat(0, 1));
        assert_eq!(wpm, expect_wpm);
        if oracle <= threshold {
            assert!(wpm, "small oracle value must imply the polygonal verdict");
        }
        if !wpm {
            assert!(oracle > threshold, "every detector failure must exhibit a large oracle value");
        }
    }
    notes.push("oracle consistency".to_string());

    // 3-to-n consistency: a pass at n = 3 with tight parameters admits a
    // pass at n = 7 at some logged parameter point
    let three = ThinnessParams::new(rat(1, 4), rat(4, 1), 3, rat(4, 1)).unwrap();
    if coarse::morse::weakly_polygonally_morse(&f2g, &ps, &three, &tree_gamma).unwrap().verdict {
        let search: Vec<(Rat, Rat)> = vec![(rat(1, 4), rat(4, 1)), (rat(1, 3), rat(3, 1)), (rat(2, 5), rat(2, 1))];
        let found = search.iter().any(|&(eps, af)| {
            let p = ThinnessParams::new(eps, af, 7, rat(4, 1)).unwrap();
            coarse::morse::weakly_polygonally_morse(&f2g, &ps, &p, &tree_gamma).unwrap().verdict
        });
        assert!(found, "n = 3 pass must relax to an n = 7 pass at some searched point");
        notes.push("3-to-n".to_string());
    }

    // reproducibility: identical config and seed give byte-identical reports
    let mut cfg = ExperimentConfig::desk(0);
    cfg.families = vec![coarse_cli::experiment::FamilyConfig {
        label: "small".into(),
        members: vec![FamilySpec::GridZd { dims: vec![5, 5] }, FamilySpec::FreeGroupBall { rank: 2, radius: 3 }],
        sampled_pairs: None,
    }];
    let r1 = serde_json::to_string(&run_dichotomy_experiment(&cfg).unwrap()).unwrap();
    let r2 = serde_json::to_string(&run_dichotomy_experiment(&cfg).unwrap()).unwrap();
    assert_eq!(r1, r2, "reports must be byte-identical for a fixed config");
    notes.push("byte-identical reports".to_string());

    verdict(9, true, &notes.join(", "));
}

/// Max Hausdorff distance, in the derived metric, between sampled special
/// paths and derived-space geodesics joining the same endpoints.
fn image_vs_geodesic_hausdorff(g: &MetricGraph, space: &ContractionSpace, samples: u32, seed: u64) -> u32 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.vertex_count() as u32;
    let mut worst = 0u32;
    for _ in 0..samples {
        let (a, b) = (Vertex(rng.gen_range(0..n)), Vertex(rng.gen_range(0..n)));
        if a == b {
            continue;
        }
        let h = lex_min_geodesic(g, a, b).unwrap();
        // a derived-metric geodesic via parent pointers in the hat graph
        let hat = space.hat();
        let row_b = hat.bfs_row(b.0);
        let mut cur = a;
        let mut geo = vec![a];
        while cur != b {
            let d = row_b[cur.idx()];
            let next = hat
                .neighbors(cur)
                .iter()
                .copied()
                .find(|&w| row_b[w as usize] + 1 == d)
                .unwrap();
            cur = Vertex(next);
            geo.push(cur);
        }
        // Hausdorff in the derived metric between the two vertex sets
        let mut dirmax = 0u32;
        for &u in h.vertices() {
            let row = hat.bfs_row(u.0);
            dirmax = dirmax.max(geo.iter().map(|v| row[v.idx()]).min().unwrap());
        }
        for &u in &geo {
            let row = hat.bfs_row(u.0);
            dirmax = dirmax.max(h.vertices().iter().map(|v| row[v.idx()]).min().unwrap());
        }
        worst = worst.max(dirmax);
    }
    worst
}
