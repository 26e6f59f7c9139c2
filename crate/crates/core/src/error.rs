use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arcs do not close up: gap {gap:.3e} after arc {arc}")]
    NotClosed { arc: usize, gap: f64 },
    #[error("boundary self-intersects near ({x:.6}, {y:.6})")]
    SelfIntersection { x: f64, y: f64 },
    #[error("cusp (zero angle) at ({x:.6}, {y:.6})")]
    Cusp { x: f64, y: f64 },
    #[error("point ({x:.6}, {y:.6}) is not a vertex of the polygon")]
    NotAVertex { x: f64, y: f64 },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("mesh budget exceeded: {nodes} nodes > cap {cap}")]
    BudgetExceeded { nodes: usize, cap: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("unknown boundary tag {0}")]
    UnknownBoundaryTag(i64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("factorization breakdown: {0}")]
    Breakdown(String),
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("sector count unstable under radius doubling: {at_r} below threshold at R, {at_2r} at 2R")]
    UnstableCount { at_r: usize, at_2r: usize },
    #[error("ambiguous clustering: {0}")]
    AmbiguousClusters(String),

    #[error("cutoff supports overlap: {0}")]
    OverlappingSupports(String),
    #[error("cutoff support leaves the tangent wedge: {0}")]
    SupportOutsideWedge(String),
    #[error("family is numerically dependent (beta_min = {beta_min:.3e})")]
    SingularGramian { beta_min: f64 },
    #[error("rank deficient family")]
    RankDeficient,

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
