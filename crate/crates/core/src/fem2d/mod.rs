//! Plane-strain continuum discretization with bilinear quadrilaterals.

mod element;
mod mesh;

pub use element::{add_btdb, b_matrix, gauss_points, jacobian, plane_block, shape, BMatrix, Mat3};
pub use mesh::{Mesh2D, MeshError, PlateMeshSpec, MESH_SCHEMA_VERSION};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constitutive::{
    algorithmic_dissipation, elastic_moduli, return_map, stored_energy, InternalState,
    MaterialError, MaterialParams, ReturnMapOptions,
};
use crate::linalg::ProfileMatrix;
use crate::model::{Dissipation, Evaluation, ModelError, StructuralModel};
use crate::scalar::Scalar;
use crate::tensor::{Mat6, SymTensor};

/// Global numbering of the free displacement components (two per node).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DofMap {
    node_dofs: Vec<[Option<usize>; 2]>,
    constrained: Vec<(usize, usize)>,
    n_free: usize,
}

impl DofMap {
    /// Both components of every node in `fixed` are constrained to zero.
    pub fn new(n_nodes: usize, fixed: &[usize]) -> Self {
        let mut is_fixed = vec![false; n_nodes];
        for &n in fixed {
            is_fixed[n] = true;
        }
        let mut next = 0;
        let mut constrained = vec![];
        let node_dofs = (0..n_nodes)
            .map(|n| {
                if is_fixed[n] {
                    constrained.push((n, 0));
                    constrained.push((n, 1));
                    [None, None]
                } else {
                    next += 2;
                    [Some(next - 2), Some(next - 1)]
                }
            })
            .collect();
        Self { node_dofs, constrained, n_free: next }
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_constrained(&self) -> usize {
        self.constrained.len()
    }

    pub fn constrained(&self) -> &[(usize, usize)] {
        &self.constrained
    }

    pub fn dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.node_dofs[node][comp]
    }

    pub fn element_dofs(&self, conn: &[usize; 4]) -> [Option<usize>; 8] {
        std::array::from_fn(|k| self.node_dofs[conn[k / 2]][k % 2])
    }

    fn free_dofs(&self, conn: &[usize; 4]) -> Vec<usize> {
        self.element_dofs(conn).into_iter().flatten().collect()
    }
}

/// Geometry of one integration point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadPoint<T> {
    pub element: usize,
    pub gauss: usize,
    /// Quadrature weight times Jacobian determinant.
    pub wdet: T,
    pub b: BMatrix<T>,
}

/// Internal variables and last converged stress at one integration point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MaterialPoint<T> {
    pub state: InternalState<T>,
    pub stress: SymTensor<T>,
    pub alg_dissipation: T,
}

impl<T: Scalar> MaterialPoint<T> {
    pub fn virgin() -> Self {
        Self { state: InternalState::virgin(), stress: SymTensor::zero(), alg_dissipation: T::zero() }
    }
}

/// Integration point geometry together with its material state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadPointState<T> {
    pub point: QuadPoint<T>,
    pub material: MaterialPoint<T>,
}

pub fn quad_points<T: Scalar>(mesh: &Mesh2D<T>) -> Vec<QuadPoint<T>> {
    let mut out = Vec::with_capacity(4 * mesh.elements.len());
    for e in 0..mesh.elements.len() {
        let xy = mesh.element_coords(e);
        for (g, (xi, eta, w)) in gauss_points::<T>().into_iter().enumerate() {
            let (det, grads) = jacobian(&xy, xi, eta);
            out.push(QuadPoint { element: e, gauss: g, wdet: w * det, b: b_matrix(&grads) });
        }
    }
    out
}

fn empty_matrix<T: Scalar>(mesh: &Mesh2D<T>, dofs: &DofMap) -> ProfileMatrix<T> {
    ProfileMatrix::from_groups(dofs.n_free(), mesh.elements.iter().map(|c| dofs.free_dofs(c)))
}

fn scatter_matrix<T: Scalar>(k: &mut ProfileMatrix<T>, dofs: &[Option<usize>; 8], ke: &[[T; 8]; 8]) {
    for (i, di) in dofs.iter().enumerate() {
        let Some(gi) = *di else { continue };
        for (j, dj) in dofs.iter().enumerate() {
            if let Some(gj) = *dj {
                k.add(gi, gj, ke[i][j]);
            }
        }
    }
}

/// `K = Σ ∫ Bᵀ D B` with one set of in-plane moduli per integration point
/// (`points` and `moduli` indexed alike, four points per element).
pub fn assemble_stiffness<T: Scalar>(
    mesh: &Mesh2D<T>,
    dofs: &DofMap,
    points: &[QuadPoint<T>],
    moduli: &[Mat3<T>],
) -> ProfileMatrix<T> {
    let blocks: Vec<[[T; 8]; 8]> = points
        .par_chunks(4)
        .zip(moduli.par_chunks(4))
        .map(|(pts, ds)| {
            let mut ke = [[T::zero(); 8]; 8];
            for (p, d) in pts.iter().zip(ds) {
                add_btdb(&mut ke, &p.b, d, p.wdet);
            }
            ke
        })
        .collect();
    let mut k = empty_matrix(mesh, dofs);
    for (pts, ke) in points.chunks(4).zip(&blocks) {
        scatter_matrix(&mut k, &dofs.element_dofs(&mesh.elements[pts[0].element]), ke);
    }
    k
}

/// `f = Σ ∫ Bᵀ σ` from in-plane stresses `(σ_xx, σ_yy, σ_xy)` per point.
pub fn assemble_internal_force<T: Scalar>(
    mesh: &Mesh2D<T>,
    dofs: &DofMap,
    points: &[QuadPoint<T>],
    stresses: &[[T; 3]],
) -> Vec<T> {
    let mut f = vec![T::zero(); dofs.n_free()];
    for (p, s) in points.iter().zip(stresses) {
        let ed = dofs.element_dofs(&mesh.elements[p.element]);
        for (i, d) in ed.iter().enumerate() {
            if let Some(g) = *d {
                f[g] += p.wdet * (0..3).map(|k| p.b[k][i] * s[k]).sum::<T>();
            }
        }
    }
    f
}

/// Uniform traction (force per unit length and unit thickness) on a named
/// edge set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTraction<T> {
    pub set: String,
    pub traction: [T; 2],
}

/// Consistent nodal forces of edge tractions and a uniform body force.
/// Loads on constrained components are dropped.
pub fn assemble_external_force<T: Scalar>(
    mesh: &Mesh2D<T>,
    dofs: &DofMap,
    tractions: &[EdgeTraction<T>],
    body: Option<[T; 2]>,
) -> Result<Vec<T>, MeshError> {
    let mut f = vec![T::zero(); dofs.n_free()];
    let half = T::lit(0.5);
    for t in tractions {
        for &[a, b] in mesh.edge_set(&t.set)? {
            let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
            let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
            for n in [a, b] {
                for c in 0..2 {
                    if let Some(g) = dofs.dof(n, c) {
                        f[g] += half * len * t.traction[c];
                    }
                }
            }
        }
    }
    if let Some(bf) = body {
        for e in 0..mesh.elements.len() {
            let xy = mesh.element_coords(e);
            let conn = mesh.elements[e];
            for (xi, eta, w) in gauss_points::<T>() {
                let (det, _) = jacobian(&xy, xi, eta);
                let n = shape(xi, eta);
                for a in 0..4 {
                    for c in 0..2 {
                        if let Some(g) = dofs.dof(conn[a], c) {
                            f[g] += w * det * n[a] * bf[c];
                        }
                    }
                }
            }
        }
    }
    Ok(f)
}

/// Total length of an edge set.
pub fn edge_length<T: Scalar>(mesh: &Mesh2D<T>, set: &str) -> Result<T, MeshError> {
    Ok(mesh
        .edge_set(set)?
        .iter()
        .map(|&[a, b]| {
            let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
            (pb[0] - pa[0]).hypot(pb[1] - pa[1])
        })
        .sum())
}

/// Plane-strain solid with the ratcheting plasticity model at every point.
#[derive(Debug, Clone)]
pub struct PlateModel<T: Scalar> {
    pub mesh: Mesh2D<T>,
    pub dofs: DofMap,
    pub points: Vec<QuadPoint<T>>,
    pub material: MaterialParams<T>,
    pub options: ReturnMapOptions,
    d_elastic: Mat6<T>,
    pattern: Vec<T>,
    stiffness: ProfileMatrix<T>,
}

impl<T: Scalar> PlateModel<T> {
    /// `fixed_set` names the node set clamped in both directions; `load`
    /// is the external load at unit amplitude.
    pub fn new(
        mesh: Mesh2D<T>,
        fixed_set: &str,
        material: MaterialParams<T>,
        options: ReturnMapOptions,
        load: &[EdgeTraction<T>],
    ) -> Result<Self, PlateError> {
        mesh.validate()?;
        material.validate()?;
        let dofs = DofMap::new(mesh.n_nodes(), mesh.node_set(fixed_set)?);
        let points = quad_points(&mesh);
        let d_elastic = elastic_moduli(&material)?;
        let d3 = plane_block(&d_elastic);
        let stiffness = assemble_stiffness(&mesh, &dofs, &points, &vec![d3; points.len()]);
        let pattern = assemble_external_force(&mesh, &dofs, load, None)?;
        Ok(Self { mesh, dofs, points, material, options, d_elastic, pattern, stiffness })
    }

    fn element_displacements(&self, e: usize, u: &[T]) -> [T; 8] {
        self.dofs.element_dofs(&self.mesh.elements[e]).map(|d| d.map_or(T::zero(), |g| u[g]))
    }

    /// Strain at point `p` for the global displacement `u`.
    pub fn strain(&self, p: &QuadPoint<T>, u: &[T]) -> SymTensor<T> {
        let ue = self.element_displacements(p.element, u);
        let v: [T; 3] = std::array::from_fn(|r| (0..8).map(|c| p.b[r][c] * ue[c]).sum());
        SymTensor::from_plane_strain(v[0], v[1], v[2])
    }

    /// `(u_x, u_y)` of a node; zero on constrained components.
    pub fn node_displacement(&self, u: &[T], node: usize) -> [T; 2] {
        std::array::from_fn(|c| self.dofs.dof(node, c).map_or(T::zero(), |g| u[g]))
    }

    pub fn point_states(&self, materials: &[MaterialPoint<T>]) -> Vec<QuadPointState<T>> {
        self.points.iter().zip(materials).map(|(p, m)| QuadPointState { point: *p, material: *m }).collect()
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PlateError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Material(#[from] MaterialError),
}

type ElementResult<T> = Result<([MaterialPoint<T>; 4], [T; 8], Option<[[T; 8]; 8]>), ModelError>;

impl<T: Scalar> StructuralModel<T> for PlateModel<T> {
    type Point = MaterialPoint<T>;

    fn n_dofs(&self) -> usize {
        self.dofs.n_free()
    }

    fn n_points(&self) -> usize {
        self.points.len()
    }

    fn initial_points(&self) -> Vec<MaterialPoint<T>> {
        vec![MaterialPoint::virgin(); self.points.len()]
    }

    fn elastic_stiffness(&self) -> ProfileMatrix<T> {
        self.stiffness.clone()
    }

    fn load_pattern(&self) -> &[T] {
        &self.pattern
    }

    fn evaluate(
        &self,
        u: &[T],
        prev: &[MaterialPoint<T>],
        want_tangent: bool,
    ) -> Result<Evaluation<T, MaterialPoint<T>>, ModelError> {
        if u.len() != self.n_dofs() {
            return Err(ModelError::Dimension { expected: self.n_dofs(), got: u.len() });
        }
        let results: Vec<ElementResult<T>> = self
            .points
            .par_chunks(4)
            .zip(prev.par_chunks(4))
            .map(|(pts, old)| {
                let mut new = [MaterialPoint::virgin(); 4];
                let mut fe = [T::zero(); 8];
                let mut ke = want_tangent.then(|| [[T::zero(); 8]; 8]);
                for (k, (p, o)) in pts.iter().zip(old).enumerate() {
                    let eps = self.strain(p, u);
                    let r = return_map(&eps, &o.state, &self.material, &self.options).map_err(|source| {
                        ModelError::Material { point: 4 * p.element + p.gauss, source }
                    })?;
                    let s = [r.sigma.c[0], r.sigma.c[1], r.sigma.c[3]];
                    for (i, f) in fe.iter_mut().enumerate() {
                        *f += p.wdet * (0..3).map(|q| p.b[q][i] * s[q]).sum::<T>();
                    }
                    if let Some(ke) = ke.as_mut() {
                        add_btdb(ke, &p.b, &plane_block(&r.d_tan), p.wdet);
                    }
                    let alg = algorithmic_dissipation(&o.stress, &r.sigma, &o.state, &r.new_state, &self.material);
                    new[k] = MaterialPoint { state: r.new_state, stress: r.sigma, alg_dissipation: o.alg_dissipation + alg };
                }
                Ok((new, fe, ke))
            })
            .collect();
        let mut f = vec![T::zero(); self.n_dofs()];
        let mut points = Vec::with_capacity(self.points.len());
        let mut k = want_tangent.then(|| self.stiffness.zero_like());
        for (e, res) in results.into_iter().enumerate() {
            let (new, fe, ke) = res?;
            let ed = self.dofs.element_dofs(&self.mesh.elements[e]);
            for (i, d) in ed.iter().enumerate() {
                if let Some(g) = *d {
                    f[g] += fe[i];
                }
            }
            if let (Some(k), Some(ke)) = (k.as_mut(), ke.as_ref()) {
                scatter_matrix(k, &ed, ke);
            }
            points.extend_from_slice(&new);
        }
        Ok(Evaluation { internal_force: f, points, tangent: k })
    }

    fn inelastic_force(&self, materials: &[MaterialPoint<T>]) -> Vec<T> {
        let mut f = vec![T::zero(); self.n_dofs()];
        for (p, m) in self.points.iter().zip(materials) {
            let a = m.state.inelastic_strain().to_voigt_strain();
            let s6: [T; 6] = std::array::from_fn(|i| (0..6).map(|j| self.d_elastic[i][j] * a[j]).sum());
            let s = [s6[0], s6[1], s6[3]];
            let ed = self.dofs.element_dofs(&self.mesh.elements[p.element]);
            for (i, d) in ed.iter().enumerate() {
                if let Some(g) = *d {
                    f[g] += p.wdet * (0..3).map(|q| p.b[q][i] * s[q]).sum::<T>();
                }
            }
        }
        f
    }

    fn stored_energy(&self, u: &[T], materials: &[MaterialPoint<T>]) -> T {
        self.points
            .iter()
            .zip(materials)
            .map(|(p, m)| p.wdet * stored_energy(&self.strain(p, u), &m.state, &self.material))
            .sum()
    }

    fn dissipation(&self, materials: &[MaterialPoint<T>]) -> Dissipation<T> {
        let mut d = Dissipation::default();
        for (p, m) in self.points.iter().zip(materials) {
            d.physical += p.wdet * m.state.dissipation_cum;
            d.algorithmic += p.wdet * m.alg_dissipation;
        }
        d
    }

    fn plastic_measure(&self, materials: &[MaterialPoint<T>]) -> T {
        self.points.iter().zip(materials).map(|(p, m)| p.wdet * m.state.lambda_cum).sum()
    }
}
