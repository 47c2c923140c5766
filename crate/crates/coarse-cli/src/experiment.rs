//! Dichotomy experiment: per instance family, build the contraction space,
//! measure its diameter and hyperbolicity, profile divergence, and test the
//! diameter-realizing geodesic for weak polygonal Morseness; then check the
//! paired prediction (complete space with linear divergence, or growing
//! space with infinite divergence and detected negative-curvature
//! directions), flagging every deviation loudly.

use coarse::contraction::{build_contraction_space, ContractionTriple, PairScope};
use coarse::graph::SampleSpec;
use coarse::instances::{generate, FamilySpec};
use coarse::morse::{morse_gauge_oracle, proportionally_thin, weakly_polygonally_morse, ThinnessParams};
use coarse::navigation::{divergence_profile, ProfileMode};
use coarse::path::lex_min_geodesic;
use coarse::Rat;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub families: Vec<FamilyConfig>,
    pub triple: TripleConfig,
    pub thinness: ThinnessConfig,
    pub divergence: DivergenceConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub label: String,
    pub members: Vec<FamilySpec>,
    /// Contraction-space pair scope: exhaustive when feasible, sampled
    /// (with this many pairs) otherwise.
    pub sampled_pairs: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum TripleConfig {
    /// Derive the tightest allowed gauge from the system constants.
    ValidatorDefault,
    Explicit(ContractionTriple),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThinnessConfig {
    pub epsilon: Rat,
    pub length_factor: Rat,
    pub legs: u32,
    pub min_window: Rat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DivergenceConfig {
    pub delta: Rat,
    pub epsilon: Rat,
    /// Cap on the tested n range (defaults to the instance diameter).
    pub max_n: Option<u32>,
    pub sampled_triples: usize,
}

impl ExperimentConfig {
    /// The desk-scale configuration: grids 7..13, free-group balls of radius
    /// 4..8, and the staircase box, with the validator-default triple.
    pub fn desk(seed: u64) -> Self {
        ExperimentConfig {
            families: vec![
                FamilyConfig {
                    label: "grid".into(),
                    members: (7..=13).map(|s| FamilySpec::GridZd { dims: vec![s, s] }).collect(),
                    sampled_pairs: None,
                },
                FamilyConfig {
                    label: "free_group".into(),
                    members: (4..=8).map(|r| FamilySpec::FreeGroupBall { rank: 2, radius: r }).collect(),
                    sampled_pairs: None,
                },
                FamilyConfig {
                    label: "staircase".into(),
                    members: vec![FamilySpec::StaircaseZ2 { half_width: 12 }],
                    sampled_pairs: Some(300),
                },
            ],
            triple: TripleConfig::ValidatorDefault,
            thinness: ThinnessConfig {
                epsilon: Rat::new(1, 4),
                length_factor: Rat::from_integer(4),
                legs: 3,
                min_window: Rat::from_integer(4),
            },
            divergence: DivergenceConfig {
                delta: Rat::new(1, 2),
                epsilon: Rat::from_integer(0),
                max_n: None,
                sampled_triples: 2000,
            },
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceRow {
    pub spec: String,
    pub vertices: usize,
    pub base_diameter: u32,
    pub dhat_diameter: u32,
    pub space_exhaustive: bool,
    /// Sampled scope: (decided pairs, anti-contracting among them).
    pub sampled_pairs_decided: Option<(usize, usize)>,
    pub delta_hat: Rat,
    pub delta_exact: bool,
    pub anti_edges: usize,
    pub divergence_all_finite: bool,
    pub divergence_sup_ratio: Option<Rat>,
    pub divergence_exhaustive: bool,
    /// Smallest tested n whose divergence entry is infinite.
    pub divergence_infinite_from: Option<u32>,
    pub wpm_on_diameter_geodesic: bool,
    pub morse_oracle_value: Rat,
    pub staircase_signature: Option<StaircaseSignature>,
}

/// The staircase combing's signature behavior on the x-axis segment:
/// thin against 2-leg lines in the strongest sense, not thin against
/// 3-leg rectangles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StaircaseSignature {
    pub two_leg_thin: bool,
    pub three_leg_thin: bool,
    pub axis_len: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyRow {
    pub label: String,
    pub instances: Vec<InstanceRow>,
    pub diameter_class: DiameterClass,
    pub divergence_class: DivergenceClass,
    pub prediction_ok: bool,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiameterClass {
    /// Every instance collapses to derived diameter 1.
    Complete,
    /// Derived diameter grows across the size range.
    Growing,
    Bounded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivergenceClass {
    Linear,
    Infinite,
    Superlinear,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub rows: Vec<FamilyRow>,
    pub deviations: Vec<String>,
    pub config: ExperimentConfig,
}

impl DichotomyReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str("family | instances | diameter | divergence | prediction\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{} | {} | {:?} | {:?} | {}\n",
                row.label,
                row.instances.len(),
                row.diameter_class,
                row.divergence_class,
                if row.prediction_ok { "ok" } else { "DEVIATION" }
            ));
        }
        out
    }
}

/// Linear-divergence acceptance threshold on `sup value/n`.
const LINEAR_RATIO_BOUND: (i64, i64) = (8, 1);

pub fn run_dichotomy_experiment(cfg: &ExperimentConfig) -> anyhow::Result<DichotomyReport> {
    let mut rows = Vec::new();
    let mut deviations = Vec::new();
    for fam in &cfg.families {
        let mut instances = Vec::new();
        let mut notes = Vec::new();
        for spec in &fam.members {
            instances.push(run_instance(cfg, fam, spec)?);
        }
        // diameter class across the size range; exhaustive instances show
        // their derived diameter directly, sampled ones count as complete
        // when every decided pair was anti-contracting
        let complete_evidence = |i: &InstanceRow| {
            if i.space_exhaustive {
                i.dhat_diameter <= 1
            } else {
                i.sampled_pairs_decided.map_or(false, |(d, a)| d > 0 && d == a)
            }
        };
        let diameter_class = if instances.iter().all(complete_evidence) {
            if instances.iter().any(|i| !i.space_exhaustive) {
                notes.push("completeness of a sampled space is evidence, not proof".into());
            }
            DiameterClass::Complete
        } else {
            let diams: Vec<u32> = instances.iter().map(|i| i.dhat_diameter).collect();
            if diams.windows(2).all(|w| w[0] <= w[1]) && diams.last() > diams.first() {
                DiameterClass::Growing
            } else {
                DiameterClass::Bounded
            }
        };
        let linear_bound = Rat::new(LINEAR_RATIO_BOUND.0, LINEAR_RATIO_BOUND.1);
        let divergence_class = if instances.iter().any(|i| !i.divergence_all_finite) {
            DivergenceClass::Infinite
        } else if instances
            .iter()
            .all(|i| i.divergence_sup_ratio.map_or(false, |r| r <= linear_bound))
        {
            DivergenceClass::Linear
        } else {
            DivergenceClass::Superlinear
        };
        // paired prediction: flat side collapses and diverges linearly; the
        // hyperbolic side grows and diverges at least superlinearly, with
        // negative-curvature directions visible on diameter geodesics
        let prediction_ok = match (&diameter_class, &divergence_class) {
            (DiameterClass::Complete, DivergenceClass::Linear) => true,
            (DiameterClass::Growing, DivergenceClass::Infinite | DivergenceClass::Superlinear) => {
                let wpm_all = instances.iter().all(|i| i.wpm_on_diameter_geodesic);
                if !wpm_all {
                    notes.push("growing family with a diameter geodesic failing the Morse detector".into());
                }
                wpm_all
            }
            _ => false,
        };
        if !prediction_ok {
            deviations.push(format!(
                "family {}: diameter {:?} paired with divergence {:?}",
                fam.label, diameter_class, divergence_class
            ));
        }
        rows.push(FamilyRow {
            label: fam.label.clone(),
            instances,
            diameter_class,
            divergence_class,
            prediction_ok,
            notes,
        });
    }
    Ok(DichotomyReport { rows, deviations, config: cfg.clone() })
}

fn run_instance(cfg: &ExperimentConfig, fam: &FamilyConfig, spec: &FamilySpec) -> anyhow::Result<InstanceRow> {
    let inst = generate(spec)?;
    let g = &inst.graph;
    let ps = &inst.system;
    let triple = match &cfg.triple {
        TripleConfig::ValidatorDefault => ContractionTriple::validator_default(ps.config()),
        TripleConfig::Explicit(t) => t.clone(),
    };
    let scope = match fam.sampled_pairs {
        Some(pairs) => PairScope::Sampled { seed: cfg.seed, pairs },
        None => PairScope::All,
    };
    let space = build_contraction_space(g, ps, &triple, &scope)?;
    let delta_spec = if space.hat().vertex_count() <= 200 {
        SampleSpec::Exhaustive
    } else {
        SampleSpec::Sampled { seed: cfg.seed, subset: 200 }
    };
    let delta = space.delta_hat(&delta_spec)?;
    let dhat_diameter = space.diameter();

    let base_diameter = g.diameter();
    // ball instances restrict divergence conclusions to the inner half
    // radius, where truncation cannot bend detours
    let safe_cap = inst.meta.inner_safe_radius.unwrap_or(base_diameter).max(2);
    let max_n = cfg.divergence.max_n.unwrap_or(base_diameter).min(base_diameter).min(safe_cap);
    let n_values: Vec<u32> = (1..=max_n.max(1)).collect();
    let mode = if g.vertex_count() <= 200 {
        ProfileMode::Exhaustive
    } else {
        ProfileMode::Sampled { seed: cfg.seed, triples: cfg.divergence.sampled_triples }
    };
    let profile = divergence_profile(g, &n_values, cfg.divergence.delta, cfg.divergence.epsilon, &mode)?;

    // diameter-realizing geodesic, deterministically the first found
    let gamma = {
        let mut found = None;
        'outer: for u in g.vertices() {
            let row = g.bfs_row(u.0);
            for v in g.vertices() {
                if row[v.idx()] == base_diameter {
                    found = Some((u, v));
                    break 'outer;
                }
            }
        }
        let (u, v) = found.expect("diameter realized");
        lex_min_geodesic(g, u, v)?
    };
    let thin = ThinnessParams::new(
        cfg.thinness.epsilon,
        cfg.thinness.length_factor,
        cfg.thinness.legs,
        cfg.thinness.min_window,
    )?;
    let wpm = weakly_polygonally_morse(g, ps, &thin, &gamma)?.verdict;
    let oracle = morse_gauge_oracle(g, &gamma, Rat::from_integer(3), Rat::from_integer(0));

    // the staircase family carries its combing signature on the x-axis
    let staircase_signature = if let FamilySpec::StaircaseZ2 { half_width } = spec {
        let len = 10.min(half_width.saturating_sub(2)) as i64;
        let a = g.vertex_at(&[0, 0]).unwrap();
        let b = g.vertex_at(&[len, 0]).unwrap();
        let axis = lex_min_geodesic(g, a, b)?;
        let two = ThinnessParams::new(Rat::new(1, 4), Rat::from_integer(10), 2, Rat::from_integer(1))?;
        let three = ThinnessParams::new(Rat::new(1, 4), Rat::from_integer(3), 3, Rat::from_integer(1))?;
        Some(StaircaseSignature {
            two_leg_thin: proportionally_thin(g, ps, &two, &axis)?.verdict,
            three_leg_thin: proportionally_thin(g, ps, &three, &axis)?.verdict,
            axis_len: axis.len(),
        })
    } else {
        None
    };

    Ok(InstanceRow {
        spec: spec.name(),
        vertices: g.vertex_count(),
        base_diameter,
        dhat_diameter,
        space_exhaustive: space.exhaustive,
        sampled_pairs_decided: space.sampled_stats.map(|s| (s.decided, s.anti_contracting)),
        delta_hat: delta.delta,
        delta_exact: delta.exact,
        anti_edges: space.extra_edges().len(),
        divergence_all_finite: profile.all_finite,
        divergence_sup_ratio: profile.sup_ratio,
        divergence_exhaustive: profile.exhaustive,
        divergence_infinite_from: profile.entries.iter().find(|e| e.value.is_none()).map(|e| e.n),
        wpm_on_diameter_geodesic: wpm,
        morse_oracle_value: oracle,
        staircase_signature,
    })
}
