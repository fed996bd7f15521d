use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed triangulation document: {0}")]
    Malformed(String),

    #[error("triangulation has no tetrahedra")]
    Empty,

    #[error("tet {tet}: {kind} index {index} out of range (expected < {bound})")]
    IndexOutOfRange {
        tet: usize,
        kind: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("duplicate tet id {0}")]
    DuplicateTetId(usize),

    #[error("number of edges ({edges}) differs from number of tetrahedra ({tets})")]
    EdgeCountMismatch { edges: usize, tets: usize },

    #[error("edge {0} is not referenced by any tetrahedron")]
    UnusedEdge(usize),

    #[error("cusp {0} is not referenced by any ideal vertex")]
    UnusedCusp(usize),

    #[error("edge {edge}: slot occurrences disagree on end cusps ({first:?} vs {other:?})")]
    InconsistentEdgeEnds {
        edge: usize,
        first: (usize, usize),
        other: (usize, usize),
    },

    #[error("cusp matrix has rank {rank}, expected {cusps}")]
    RankDeficient { rank: usize, cusps: usize },

    #[error("length vector has {got} entries, triangulation has {expected} edges")]
    LengthMismatch { got: usize, expected: usize },

    #[error("pair-sum exponent {0} exceeds the supported bound of 300")]
    PairSumOverflow(f64),

    #[error("tet {tet} is degenerate; its Jacobian is undefined")]
    DegenerateTet { tet: usize },

    #[error("non-finite state after {steps} steps")]
    NonFinite { steps: usize },

    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
