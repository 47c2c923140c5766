//! Experiment harness over the `coarse` toolkit: dichotomy runs across
//! instance families, export helpers, and shared parsing for the CLI.

pub mod experiment;

use coarse::Rat;

/// Parses "3", "-2", or "3/4" into an exact rational.
pub fn parse_rat(s: &str) -> anyhow::Result<Rat> {
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse()?;
        let d: i64 = d.trim().parse()?;
        anyhow::ensure!(d != 0, "zero denominator");
        Ok(Rat::new(n, d))
    } else {
        Ok(Rat::from_integer(s.trim().parse::<i64>()?))
    }
}

/// Parses a family preset such as `grid:7x7`, `free:2,5`, `cycle:8`,
/// `tree:2,4`, `racg:3`, `surface:3`, `staircase:12`.
pub fn parse_family(s: &str) -> anyhow::Result<coarse::instances::FamilySpec> {
    use coarse::instances::FamilySpec;
    let (kind, rest) = s.split_once(':').ok_or_else(|| anyhow::anyhow!("expected kind:params, got {s}"))?;
    let spec = match kind {
        "grid" => {
            let dims: Result<Vec<u32>, _> = rest.split('x').map(|p| p.trim().parse()).collect();
            FamilySpec::GridZd { dims: dims? }
        }
        "free" => {
            let (rank, radius) = rest.split_once(',').ok_or_else(|| anyhow::anyhow!("free:rank,radius"))?;
            FamilySpec::FreeGroupBall { rank: rank.trim().parse()?, radius: radius.trim().parse()? }
        }
        "tree" => {
            let (arity, depth) = rest.split_once(',').ok_or_else(|| anyhow::anyhow!("tree:arity,depth"))?;
            FamilySpec::Tree { arity: arity.trim().parse()?, depth: depth.trim().parse()? }
        }
        "cycle" => FamilySpec::Cycle { n: rest.trim().parse()? },
        "racg" => FamilySpec::RacgBall { radius: rest.trim().parse()? },
        "surface" => FamilySpec::SurfaceGroupBall { radius: rest.trim().parse()? },
        "staircase" => FamilySpec::StaircaseZ2 { half_width: rest.trim().parse()? },
        other => anyhow::bail!("unknown family kind {other}"),
    };
    Ok(spec)
}

/// Parses a vertex list "0,4,8".
pub fn parse_path(s: &str) -> anyhow::Result<Vec<coarse::Vertex>> {
    s.split(',')
        .map(|p| Ok(coarse::Vertex(p.trim().parse::<u32>()?)))
        .collect()
}

/// CSV emission for divergence profiles:
/// `family,instance_size,n,delta,epsilon,value,is_lower_bound`.
pub fn divergence_csv(family: &str, instance_size: usize, profile: &coarse::navigation::DivergenceProfile) -> String {
    let mut out = String::from("family,instance_size,n,delta,epsilon,value,is_lower_bound\n");
    for e in &profile.entries {
        let value = match e.value {
            Some(v) => v.to_string(),
            None => "inf".to_string(),
        };
        out.push_str(&format!(
            "{family},{instance_size},{},{},{},{value},{}\n",
            e.n, e.delta, e.epsilon, e.is_lower_bound
        ));
    }
    out
}
