//! Coarse-geometry toolkit for finite metric graphs.
//!
//! The crate works with unweighted, undirected, connected graphs and the
//! structures one builds on top of them to probe coarse negative curvature:
//!
//! - [`graph`]: the graph substrate — distances, punctured distances,
//!   four-point hyperbolicity, medians.
//! - [`path`]: edge paths, polygonal lines and the path calculus
//!   (midpoints, subsegments, rectification).
//! - [`system`]: path systems — providers of "special paths" between vertex
//!   pairs, with ball-avoiding feasibility and bounded replacement.
//! - [`contraction`]: midthin / anti-contracting detection and the derived
//!   contraction space with its metric.
//! - [`morse`]: thinness and contraction detectors for individual paths,
//!   projection points, and a brute-force Morse oracle.
//! - [`navigation`]: ball-avoiding navigation searches, slide algorithms,
//!   median and combing avoidance, divergence.
//! - [`instances`]: deterministic generators for the example families
//!   (grids, trees, free-group balls, Coxeter and surface group balls,
//!   the staircase combing on a box in the square lattice).
//! - [`reference`]: slow enumeration-based reference implementations used
//!   to cross-check the fast paths in tests.

pub mod contraction;
pub mod error;
pub mod graph;
pub mod instances;
pub mod morse;
pub mod navigation;
pub mod path;
pub mod reference;
pub mod system;

pub(crate) mod engine;

pub use error::Error;

/// Exact rational scalar used for ball radii, thresholds and measured
/// constants. Graph distances are integers, so `i64` ratios never overflow
/// at the instance sizes this crate targets.
pub type Rat = num_rational::Ratio<i64>;

/// Vertex handle into a [`graph::MetricGraph`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Vertex(pub u32);

impl Vertex {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for Vertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl From<u32> for Vertex {
    fn from(v: u32) -> Self {
        Vertex(v)
    }
}

/// Convenience constructor for exact rationals.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}
