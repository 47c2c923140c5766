use crate::{Rat, Vertex};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("vertex {vertex} out of range (graph has {count} vertices)")]
    InvalidVertex { vertex: u32, count: usize },

    #[error("graph is not simple/undirected: offending edge ({0}, {1})")]
    BadEdge(u32, u32),

    #[error("graph is disconnected: vertex {0} unreachable from vertex 0")]
    Disconnected(u32),

    #[error("source {src} lies inside the ball (distance {dist} <= radius {radius})")]
    SourceInsideBall { src: Vertex, dist: u32, radius: Rat },

    #[error("vertex sequence is not a path: {0} and {1} are not adjacent")]
    NotAPath(Vertex, Vertex),

    #[error("empty vertex sequence")]
    EmptyPath,

    #[error("{vertex} does not occur on the path (or not in the required order)")]
    NotOnPath { vertex: Vertex },

    #[error("graph is not median: triple ({0}, {1}, {2}) has {3} medians")]
    NotMedian(Vertex, Vertex, Vertex, usize),

    #[error("operation `{op}` is not supported by path-system kind {kind}")]
    UnsupportedKind { op: &'static str, kind: &'static str },

    #[error("replacement Hausdorff bound violated: measured {measured} > declared {bound}")]
    HausdorffBound { measured: Rat, bound: Rat },

    #[error("path is not a member of the path system: {0}")]
    NotInSystem(String),

    #[error("stored path system violates subsegment closure: missing {0:?}")]
    ClosureViolation(Vec<u32>),

    #[error("map is not a {c}-quasi-isometry: witness pair ({x}, {y}), d_src={d_src}, d_img={d_img}")]
    NotQuasiIsometry { c: Rat, x: Vertex, y: Vertex, d_src: u32, d_img: u32 },

    #[error("special-path enumeration for pair ({0}, {1}) hit the cap and is incomplete; exhaustive scope requires completeness")]
    IncompleteEnumeration(Vertex, Vertex),

    #[error("contraction triple is not allowed: {0}")]
    NotAllowed(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("postcondition failed (theorem-backed assertion): {0}")]
    PostconditionFailed(String),

    #[error("search exhausted without a certified result: {0}")]
    SearchExhausted(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("invalid sampling spec: {0}")]
    BadSampleSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
