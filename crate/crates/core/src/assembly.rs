//! Manifold-level quantities assembled from per-tetrahedron geometry.
//!
//! For an edge class `i`, the extended curvature is
//! `K̃_i = 2π - Σ α̃` over every tet edge-slot glued to `i`. The energy
//! `F̃ = Σ cov_σ - 2π Σ l_i` is C¹ and convex on `ℝᴺ` with `∇F̃ = -K̃`, and at
//! nondegenerate metrics the curvature Jacobian is `Λ = -G J Gᵀ`.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tetra::{self, RegionClass, TetMetric};
use crate::triangulation::{CuspMatrix, CuspedTriangulation};

/// A decorated metric: one signed length per edge class.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLengths(pub DVector<f64>);

impl EdgeLengths {
    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<Vec<f64>> for EdgeLengths {
    fn from(v: Vec<f64>) -> Self {
        Self(DVector::from_vec(v))
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureState {
    /// Extended curvature per edge class.
    pub k: DVector<f64>,
    /// `Λ`, present only when every tetrahedron is nondegenerate.
    pub laplacian: Option<DMatrix<f64>>,
    pub total_volume: f64,
    pub energy: f64,
    pub classes: Vec<RegionClass>,
    /// Indices of tetrahedra that are not nondegenerate (boundary included).
    pub degenerate_tets: Vec<usize>,
}

impl CurvatureState {
    pub fn knorm_inf(&self) -> f64 {
        self.k.amax()
    }

    pub fn knorm_2(&self) -> f64 {
        self.k.norm()
    }

    pub fn all_nondegenerate(&self) -> bool {
        self.degenerate_tets.is_empty()
    }
}

fn check_len(t: &CuspedTriangulation, l: &EdgeLengths) -> Result<()> {
    if l.len() != t.num_edges {
        return Err(Error::LengthMismatch {
            got: l.len(),
            expected: t.num_edges,
        });
    }
    Ok(())
}

/// Six lengths of tet `j` gathered from the global metric.
pub fn tet_metric(t: &CuspedTriangulation, l: &EdgeLengths, j: usize) -> TetMetric {
    TetMetric(t.tets[j].edge_slots.map(|e| l.0[e]))
}

/// Extended curvature, total volume, energy and degeneracy at `l`.
///
/// Tetrahedra are visited in index order so results are reproducible bit for
/// bit.
pub fn curvature(t: &CuspedTriangulation, l: &EdgeLengths) -> Result<CurvatureState> {
    check_len(t, l)?;
    let mut k = DVector::from_element(t.num_edges, 2.0 * PI);
    let mut total_volume = 0.0;
    let mut covolume = 0.0;
    let mut classes = Vec::with_capacity(t.num_tets());
    let mut degenerate_tets = Vec::new();
    for (j, tet) in t.tets.iter().enumerate() {
        let m = tet_metric(t, l, j);
        let (class, angles) = tetra::classify_and_angles(&m);
        for (slot, &e) in tet.edge_slots.iter().enumerate() {
            k[e] -= angles.0[slot];
        }
        let (vol, cov) = tetra::volume_and_covolume(&m, &angles);
        total_volume += vol;
        covolume += cov;
        if !class.is_nondegenerate() {
            degenerate_tets.push(j);
        }
        classes.push(class);
    }
    let energy = covolume - 2.0 * PI * l.0.sum();
    Ok(CurvatureState {
        k,
        laplacian: None,
        total_volume,
        energy,
        classes,
        degenerate_tets,
    })
}

/// [`curvature`] plus `Λ` when it is defined.
pub fn curvature_with_laplacian(t: &CuspedTriangulation, l: &EdgeLengths) -> Result<CurvatureState> {
    let mut state = curvature(t, l)?;
    if state.all_nondegenerate() {
        state.laplacian = Some(laplacian(t, l)?);
    }
    Ok(state)
}

/// `Λ = ∂K/∂l = -G J Gᵀ`, accumulated slot by slot without materializing `G`.
pub fn laplacian(t: &CuspedTriangulation, l: &EdgeLengths) -> Result<DMatrix<f64>> {
    check_len(t, l)?;
    let n = t.num_edges;
    let mut lap = DMatrix::zeros(n, n);
    for (j, tet) in t.tets.iter().enumerate() {
        let jac = tet_jacobian_at(t, l, j)?;
        for (s, &es) in tet.edge_slots.iter().enumerate() {
            for (r, &er) in tet.edge_slots.iter().enumerate() {
                lap[(es, er)] -= jac[(s, r)];
            }
        }
    }
    Ok(lap)
}

/// `Λ` from the explicit product `-G · diag(J_1, …, J_T) · Gᵀ`.
pub fn laplacian_via_incidence(t: &CuspedTriangulation, l: &EdgeLengths) -> Result<DMatrix<f64>> {
    check_len(t, l)?;
    let g = t.incidence();
    let nt = t.num_tets();
    let mut block = DMatrix::zeros(6 * nt, 6 * nt);
    for j in 0..nt {
        let jac = tet_jacobian_at(t, l, j)?;
        block.view_mut((6 * j, 6 * j), (6, 6)).copy_from(&jac);
    }
    Ok(-(g.matrix() * block * g.matrix().transpose()))
}

fn tet_jacobian_at(t: &CuspedTriangulation, l: &EdgeLengths, j: usize) -> Result<nalgebra::Matrix6<f64>> {
    tetra::tet_jacobian(&tet_metric(t, l, j)).map_err(|e| match e {
        Error::DegenerateTet { .. } => Error::DegenerateTet { tet: j },
        other => other,
    })
}

pub fn energy(t: &CuspedTriangulation, l: &EdgeLengths) -> Result<f64> {
    Ok(curvature(t, l)?.energy)
}

#[derive(Debug, Clone)]
pub struct GradientCheck {
    /// Central differences of `F̃`.
    pub finite_difference: DVector<f64>,
    /// `-K̃`, the analytic gradient.
    pub analytic: DVector<f64>,
    /// `‖fd - (-K̃)‖_∞ / max(‖K̃‖_∞, 1)`.
    pub max_rel_err: f64,
}

/// Compare central differences of the energy with `-K̃`.
pub fn energy_gradient_check(t: &CuspedTriangulation, l: &EdgeLengths, step: f64) -> Result<GradientCheck> {
    let state = curvature(t, l)?;
    let mut fd = DVector::zeros(l.len());
    for i in 0..l.len() {
        let mut plus = l.clone();
        let mut minus = l.clone();
        plus.0[i] += step;
        minus.0[i] -= step;
        fd[i] = (energy(t, &plus)? - energy(t, &minus)?) / (2.0 * step);
    }
    let analytic = -&state.k;
    let err = (&fd - &analytic).amax() / state.k.amax().max(1.0);
    Ok(GradientCheck {
        finite_difference: fd,
        analytic,
        max_rel_err: err,
    })
}

/// Spectral summary of `Λ` used by reports and tests.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LaplacianSummary {
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues of `Pᵀ Λ P` for an orthonormal basis `P` of `Ker(C)`.
    pub kernel_restricted_eigenvalues: Vec<f64>,
    pub asymmetry: f64,
    /// `‖Λ Cᵀ‖_∞` (max entry).
    pub gauge_residual: f64,
}

pub fn laplacian_summary(lap: &DMatrix<f64>, c: &CuspMatrix) -> LaplacianSummary {
    let p = c.kernel_basis();
    let restricted = p.transpose() * lap * &p;
    let sym = 0.5 * (restricted.clone() + restricted.transpose());
    LaplacianSummary {
        eigenvalues: linalg::sym_eigenvalues(lap),
        kernel_restricted_eigenvalues: linalg::sym_eigenvalues(&sym),
        asymmetry: (lap - lap.transpose()).amax(),
        gauge_residual: (lap * c.matrix().transpose()).amax(),
    }
}

/// Residual of `a - b` against the decoration gauge `Im(Cᵀ)`; near zero iff
/// the two metrics describe the same hyperbolic structure.
pub fn metric_class_distance(c: &CuspMatrix, a: &EdgeLengths, b: &EdgeLengths) -> f64 {
    c.gauge_residual(&(&a.0 - &b.0))
}
