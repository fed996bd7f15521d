//! Extended combinatorial Ricci flow on ideally triangulated cusped 3-manifolds.
//!
//! A decorated hyperbolic polyhedral metric assigns a signed length to every
//! edge class of an ideal triangulation. Each tetrahedron turns its six
//! lengths into dihedral angles through a Euclidean triangle built from the
//! three opposite-pair sums; when that triangle collapses the angles are
//! extended by the constants `π`/`0`. Summing angles around edges gives the
//! curvature `K̃`, and the flow `dl/dt = K̃` descends a convex energy whose
//! minimum (if one exists) is the complete hyperbolic structure.
//!
//! Module map:
//! - [`triangulation`]: gluing data, incidence matrix `G`, cusp matrix `C`, gauge projection.
//! - [`tetra`]: single-tetrahedron geometry and the Lobachevsky function.
//! - [`assembly`]: curvature, Laplacian `Λ = -G J Gᵀ`, energy and volume.
//! - [`flow`]: Euler, RK4, Newton-hybrid and Calabi integrators with tracing.
//! - [`io`]: trace and result documents used by the command line tool.

pub mod assembly;
pub mod error;
pub mod flow;
pub mod io;
pub mod linalg;
pub mod tetra;
pub mod triangulation;

pub use assembly::{CurvatureState, EdgeLengths};
pub use error::{Error, Result};
pub use flow::{FlowConfig, FlowResult, FlowTrace, Scheme};
pub use tetra::{DihedralAngles, OppositePair, RegionClass, TetMetric};
pub use triangulation::{CuspMatrix, CuspedTriangulation, IncidenceMatrix, Tet};
