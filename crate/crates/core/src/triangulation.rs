//! Combinatorial gluing data for ideal triangulations of cusped 3-manifolds.
//!
//! Every tetrahedron lists its six edges in the slot order
//! `12, 13, 14, 34, 24, 23` (slot `i` and slot `i + 3` are opposite edges)
//! and the cusp at each of its four ideal vertices. From this we derive the
//! incidence matrix `G` (edge classes × tet edge-slots) and the cusp relation
//! matrix `C` (cusps × edge classes), whose row space `Im(Cᵀ)` is the
//! decoration gauge.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assembly::EdgeLengths;
use crate::error::{Error, Result};
use crate::linalg;

/// Vertex pairs (0-based) spanned by each edge slot.
pub const SLOT_VERTICES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (2, 3), (1, 3), (1, 2)];

/// Conventional labels of the edge slots.
pub const SLOT_LABELS: [&str; 6] = ["12", "13", "14", "34", "24", "23"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tet {
    pub id: usize,
    /// Global edge index for slots `12, 13, 14, 34, 24, 23`.
    pub edge_slots: [usize; 6],
    /// Global cusp index for ideal vertices `1, 2, 3, 4`.
    pub cusp_slots: [usize; 4],
}

impl Tet {
    /// Unordered pair of cusps at the two ends of an edge slot.
    pub fn slot_ends(&self, slot: usize) -> (usize, usize) {
        let (a, b) = SLOT_VERTICES[slot];
        let (ca, cb) = (self.cusp_slots[a], self.cusp_slots[b]);
        (ca.min(cb), ca.max(cb))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuspedTriangulation {
    pub num_edges: usize,
    pub num_cusps: usize,
    pub tets: Vec<Tet>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTet {
    id: Option<usize>,
    edges: [usize; 6],
    cusps: [usize; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTriangulation {
    num_edges: usize,
    num_cusps: usize,
    tets: Vec<RawTet>,
}

#[derive(Serialize)]
struct RawTetOut<'a> {
    id: usize,
    edges: &'a [usize; 6],
    cusps: &'a [usize; 4],
}

#[derive(Serialize)]
struct RawTriangulationOut<'a> {
    num_edges: usize,
    num_cusps: usize,
    tets: Vec<RawTetOut<'a>>,
}

/// Parse a triangulation document.
///
/// The document is JSON with fields `num_edges`, `num_cusps` and `tets`, each
/// tet carrying `edges` (six global edge indices in slot order), `cusps` (four
/// global cusp indices) and an optional `id` defaulting to its position.
/// Only structural checks happen here; see [`CuspedTriangulation::validate`].
pub fn parse_triangulation(text: &str) -> Result<CuspedTriangulation> {
    let raw: RawTriangulation =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    if raw.tets.is_empty() {
        return Err(Error::Empty);
    }
    let mut seen = HashSet::new();
    let mut tets = Vec::with_capacity(raw.tets.len());
    for (pos, t) in raw.tets.into_iter().enumerate() {
        let id = t.id.unwrap_or(pos);
        if !seen.insert(id) {
            return Err(Error::DuplicateTetId(id));
        }
        for &e in &t.edges {
            if e >= raw.num_edges {
                return Err(Error::IndexOutOfRange {
                    tet: pos,
                    kind: "edge",
                    index: e,
                    bound: raw.num_edges,
                });
            }
        }
        for &c in &t.cusps {
            if c >= raw.num_cusps {
                return Err(Error::IndexOutOfRange {
                    tet: pos,
                    kind: "cusp",
                    index: c,
                    bound: raw.num_cusps,
                });
            }
        }
        tets.push(Tet {
            id,
            edge_slots: t.edges,
            cusp_slots: t.cusps,
        });
    }
    Ok(CuspedTriangulation {
        num_edges: raw.num_edges,
        num_cusps: raw.num_cusps,
        tets,
    })
}

impl CuspedTriangulation {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        parse_triangulation(&text)
    }

    /// Parse and validate in one go.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let t = Self::from_path(path)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        let out = RawTriangulationOut {
            num_edges: self.num_edges,
            num_cusps: self.num_cusps,
            tets: self
                .tets
                .iter()
                .map(|t| RawTetOut {
                    id: t.id,
                    edges: &t.edge_slots,
                    cusps: &t.cusp_slots,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&out).expect("plain data serializes")
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    /// Number of tet edge-slots identified with each edge class.
    pub fn edge_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_edges];
        for t in &self.tets {
            for &e in &t.edge_slots {
                deg[e] += 1;
            }
        }
        deg
    }

    /// Full structural validation: edge/tet count, coverage of every edge and
    /// cusp, consistent edge ends, and `rank(C) = s`.
    pub fn validate(&self) -> Result<()> {
        if self.tets.is_empty() {
            return Err(Error::Empty);
        }
        if self.num_edges != self.num_tets() {
            return Err(Error::EdgeCountMismatch {
                edges: self.num_edges,
                tets: self.num_tets(),
            });
        }
        if let Some(e) = self.edge_degrees().iter().position(|&d| d == 0) {
            return Err(Error::UnusedEdge(e));
        }
        let mut cusp_used = vec![false; self.num_cusps];
        for t in &self.tets {
            for &c in &t.cusp_slots {
                cusp_used[c] = true;
            }
        }
        if let Some(c) = cusp_used.iter().position(|&u| !u) {
            return Err(Error::UnusedCusp(c));
        }
        let c = self.cusp_matrix()?;
        let rank = c.rank();
        if rank != self.num_cusps {
            return Err(Error::RankDeficient {
                rank,
                cusps: self.num_cusps,
            });
        }
        Ok(())
    }

    /// The `N × 6T` incidence matrix: column `6j + n` holds a single 1 in the
    /// row of the edge class occupying slot `n` of tet `j`.
    pub fn incidence(&self) -> IncidenceMatrix {
        let mut g = DMatrix::zeros(self.num_edges, 6 * self.num_tets());
        for (j, t) in self.tets.iter().enumerate() {
            for (n, &e) in t.edge_slots.iter().enumerate() {
                g[(e, 6 * j + n)] = 1.0;
            }
        }
        IncidenceMatrix(g)
    }

    /// The `s × N` cusp relation matrix counting the ends of each edge class
    /// at each cusp. Fails if two occurrences of one edge class disagree on
    /// their end cusps.
    pub fn cusp_matrix(&self) -> Result<CuspMatrix> {
        let mut ends: Vec<Option<(usize, usize)>> = vec![None; self.num_edges];
        for t in &self.tets {
            for (slot, &e) in t.edge_slots.iter().enumerate() {
                let pair = t.slot_ends(slot);
                match ends[e] {
                    None => ends[e] = Some(pair),
                    Some(first) if first != pair => {
                        return Err(Error::InconsistentEdgeEnds {
                            edge: e,
                            first,
                            other: pair,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        let mut c = DMatrix::zeros(self.num_cusps, self.num_edges);
        for (e, pair) in ends.iter().enumerate() {
            if let Some((p, q)) = *pair {
                c[(p, e)] += 1.0;
                c[(q, e)] += 1.0;
            }
        }
        Ok(CuspMatrix(c))
    }
}

/// `N × 6T` 0/1 matrix mapping tet edge-slots to global edges.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix(pub DMatrix<f64>);

impl IncidenceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `s × N` matrix of edge-end counts per cusp.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspMatrix(pub DMatrix<f64>);

impl CuspMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn num_cusps(&self) -> usize {
        self.0.nrows()
    }

    pub fn rank(&self) -> usize {
        linalg::numerical_rank(&self.0)
    }

    /// `C l`, the per-cusp sums of incident lengths (loops counted twice).
    pub fn apply(&self, l: &EdgeLengths) -> DVector<f64> {
        &self.0 * &l.0
    }

    /// Orthonormal basis of `Ker(C)`, one column per direction.
    pub fn kernel_basis(&self) -> DMatrix<f64> {
        linalg::kernel_basis(&self.0)
    }

    /// Distance from `v` to the gauge directions `Im(Cᵀ)`.
    pub fn gauge_residual(&self, v: &DVector<f64>) -> f64 {
        linalg::residual_against_columns(&self.0.transpose(), v)
    }

    /// Remove the decoration component: `l - Cᵀx` with `(C Cᵀ) x = C l`.
    pub fn gauge_project(&self, l: &EdgeLengths) -> Result<EdgeLengths> {
        if l.len() != self.0.ncols() {
            return Err(Error::LengthMismatch {
                got: l.len(),
                expected: self.0.ncols(),
            });
        }
        let rank = self.rank();
        if rank < self.num_cusps() {
            return Err(Error::RankDeficient {
                rank,
                cusps: self.num_cusps(),
            });
        }
        let cct = &self.0 * self.0.transpose();
        let chol = cct.cholesky().ok_or(Error::RankDeficient {
            rank,
            cusps: self.num_cusps(),
        })?;
        let x = chol.solve(&self.apply(l));
        Ok(EdgeLengths(&l.0 - self.0.transpose() * x))
    }
}
