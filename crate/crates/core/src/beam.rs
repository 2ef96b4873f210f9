//! Euler–Bernoulli beam on elastoplastic Winkler springs.
//!
//! Nodes run from the loaded head (depth 0) downwards; each node carries a
//! deflection `w` and a rotation `θ = dw/dx`, in that order. Springs sit at
//! every node except the head, each standing for one element length of soil.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{
    spring_algorithmic_dissipation, spring_return_map, spring_stored_energy, MaterialError,
    MaterialParams, SpringState,
};
use crate::linalg::ProfileMatrix;
use crate::model::{Dissipation, Evaluation, ModelError, StructuralModel};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("beam needs at least one element of positive length")]
    ZeroLength,
    #[error("invalid section: {0}")]
    Section(&'static str),
    #[error("soil layers must partition [0, {length}] without gaps or overlaps")]
    Layers { length: f64 },
    #[error(transparent)]
    Material(#[from] MaterialError),
}

/// Hollow circular section. With lengths in m and `e` in kN/m², forces
/// come out in kN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSection<T> {
    pub e: T,
    pub r_outer: T,
    pub r_inner: T,
    pub length: T,
    pub n_elements: usize,
}

impl<T: Scalar> BeamSection<T> {
    pub fn validate(&self) -> Result<(), BeamError> {
        if self.n_elements == 0 || !(self.length > T::zero()) {
            return Err(BeamError::ZeroLength);
        }
        if !(self.e > T::zero()) {
            return Err(BeamError::Section("E must be positive"));
        }
        if !(self.r_outer > self.r_inner && self.r_inner >= T::zero()) {
            return Err(BeamError::Section("need 0 <= r_inner < r_outer"));
        }
        Ok(())
    }

    /// `I = π(r_o⁴ − r_i⁴)/4`
    pub fn second_moment(&self) -> T {
        T::lit(std::f64::consts::FRAC_PI_4) * (self.r_outer.powi(4) - self.r_inner.powi(4))
    }

    pub fn bending_stiffness(&self) -> T {
        self.e * self.second_moment()
    }

    pub fn element_length(&self) -> T {
        self.length / T::lit(self.n_elements as f64)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_elements + 1
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_nodes()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoilLayer<T> {
    pub top: T,
    pub bottom: T,
    /// Per unit depth: `e` is a subgrade modulus (force per deflection per
    /// depth), `sigma_p` a yield force per depth.
    pub material: MaterialParams<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoilLayerTable<T> {
    pub layers: Vec<SoilLayer<T>>,
}

impl<T: Scalar> SoilLayerTable<T> {
    pub fn validate(&self, length: T) -> Result<(), BeamError> {
        let bad = || BeamError::Layers { length: length.as_f64() };
        let tol = T::lit(1e-9) * length;
        let mut at = T::zero();
        for l in &self.layers {
            if (l.top - at).abs() > tol || !(l.bottom > l.top) {
                return Err(bad());
            }
            let m = MaterialParams { nu: T::zero(), ..l.material };
            m.validate()?;
            at = l.bottom;
        }
        if self.layers.is_empty() || (at - length).abs() > tol {
            return Err(bad());
        }
        Ok(())
    }

    /// Layer containing `depth`; interfaces belong to the deeper layer.
    pub fn at(&self, depth: T) -> &MaterialParams<T> {
        let layer = self.layers.iter().find(|l| depth < l.bottom);
        &layer.unwrap_or_else(|| self.layers.last().expect("validated table")).material
    }
}

/// Hermite beam element stiffness for `(w1, θ1, w2, θ2)`.
pub fn element_stiffness<T: Scalar>(ei: T, l: T) -> [[T; 4]; 4] {
    let c = ei / (l * l * l);
    let (a, b, d, e) = (T::lit(12.0), T::lit(6.0) * l, T::lit(4.0) * l * l, T::lit(2.0) * l * l);
    [[a, b, -a, b], [b, d, -b, e], [-a, -b, a, -b], [b, e, -b, d]].map(|r| r.map(|v| c * v))
}

/// Unconstrained bending stiffness of the whole beam.
pub fn beam_stiffness<T: Scalar>(section: &BeamSection<T>) -> Result<ProfileMatrix<T>, BeamError> {
    section.validate()?;
    let n = section.n_elements;
    let mut k = ProfileMatrix::from_groups(section.n_dofs(), (0..n).map(|e| [2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3]));
    let ke = element_stiffness(section.bending_stiffness(), section.element_length());
    for e in 0..n {
        for i in 0..4 {
            for j in 0..4 {
                k.add(2 * e + i, 2 * e + j, ke[i][j]);
            }
        }
    }
    Ok(k)
}

/// Deflection, bending moment `EI w''` and shear `EI w'''` at a depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionForces<T> {
    pub depth: T,
    pub deflection: T,
    pub moment: T,
    pub shear: T,
}

pub fn section_forces<T: Scalar>(section: &BeamSection<T>, u: &[T], depth: T) -> SectionForces<T> {
    let l = section.element_length();
    let n = section.n_elements;
    let e = ((depth / l).floor().to_usize().unwrap_or(0)).min(n - 1);
    let xi = depth / l - T::lit(e as f64);
    let [w1, t1, w2, t2] = [u[2 * e], u[2 * e + 1], u[2 * e + 2], u[2 * e + 3]];
    let (one, two, three, six, twelve) = (T::one(), T::two(), T::lit(3.0), T::lit(6.0), T::lit(12.0));
    let x2 = xi * xi;
    let x3 = x2 * xi;
    let w = (one - three * x2 + two * x3) * w1
        + l * (xi - two * x2 + x3) * t1
        + (three * x2 - two * x3) * w2
        + l * (x3 - x2) * t2;
    let d2 = ((twelve * xi - six) * w1 + l * (six * xi - T::lit(4.0)) * t1 + (six - twelve * xi) * w2
        + l * (six * xi - two) * t2)
        / (l * l);
    let d3 = (twelve * w1 + six * l * t1 - twelve * w2 + six * l * t2) / (l * l * l);
    let ei = section.bending_stiffness();
    SectionForces { depth, deflection: w, moment: ei * d2, shear: ei * d3 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringSite<T> {
    pub node: usize,
    pub depth: T,
    pub tributary: T,
    pub material: MaterialParams<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpringPoint<T> {
    pub state: SpringState<T>,
    /// Soil reaction per unit depth.
    pub stress: T,
    pub alg_dissipation: T,
}

/// Beam on nodal elastoplastic springs, loaded laterally at the head.
#[derive(Debug, Clone)]
pub struct WinklerModel<T: Scalar> {
    pub section: BeamSection<T>,
    pub layers: SoilLayerTable<T>,
    pub springs: Vec<SpringSite<T>>,
    beam: ProfileMatrix<T>,
    stiffness: ProfileMatrix<T>,
    pattern: Vec<T>,
}

impl<T: Scalar> WinklerModel<T> {
    pub fn new(section: BeamSection<T>, layers: SoilLayerTable<T>) -> Result<Self, BeamError> {
        section.validate()?;
        layers.validate(section.length)?;
        let l = section.element_length();
        let springs: Vec<SpringSite<T>> = (1..section.n_nodes())
            .map(|node| {
                let depth = l * T::lit(node as f64);
                SpringSite { node, depth, tributary: l, material: *layers.at(depth) }
            })
            .collect();
        let beam = beam_stiffness(&section)?;
        let mut stiffness = beam.clone();
        for s in &springs {
            stiffness.add(2 * s.node, 2 * s.node, s.tributary * s.material.e);
        }
        let mut pattern = vec![T::zero(); section.n_dofs()];
        pattern[0] = T::one();
        Ok(Self { section, layers, springs, beam, stiffness, pattern })
    }

    pub fn head_deflection(&self, u: &[T]) -> T {
        u[0]
    }

    pub fn profile(&self, u: &[T], depths: &[T]) -> Vec<SectionForces<T>> {
        depths.iter().map(|&d| section_forces(&self.section, u, d)).collect()
    }

    /// Spring reactions (force, not per depth) on every dof, with updated
    /// spring states. Stresses are soil reactions per unit depth.
    pub fn spring_forces(&self, u: &[T], prev: &[SpringPoint<T>]) -> Result<(Vec<T>, Vec<SpringPoint<T>>), ModelError> {
        let mut f = vec![T::zero(); self.section.n_dofs()];
        let mut out = Vec::with_capacity(self.springs.len());
        for (i, (s, o)) in self.springs.iter().zip(prev).enumerate() {
            let r = spring_return_map(u[2 * s.node], &o.state, &s.material)
                .map_err(|source| ModelError::Material { point: i, source })?;
            f[2 * s.node] += s.tributary * r.stress;
            let alg = spring_algorithmic_dissipation(o.stress, r.stress, &o.state, &r.new_state, &s.material);
            out.push(SpringPoint { state: r.new_state, stress: r.stress, alg_dissipation: o.alg_dissipation + alg });
        }
        Ok((f, out))
    }
}

impl<T: Scalar> StructuralModel<T> for WinklerModel<T> {
    type Point = SpringPoint<T>;

    fn n_dofs(&self) -> usize {
        self.section.n_dofs()
    }

    fn n_points(&self) -> usize {
        self.springs.len()
    }

    fn initial_points(&self) -> Vec<SpringPoint<T>> {
        vec![SpringPoint::default(); self.springs.len()]
    }

    fn elastic_stiffness(&self) -> ProfileMatrix<T> {
        self.stiffness.clone()
    }

    fn load_pattern(&self) -> &[T] {
        &self.pattern
    }

    fn evaluate(&self, u: &[T], prev: &[SpringPoint<T>], want_tangent: bool) -> Result<Evaluation<T, SpringPoint<T>>, ModelError> {
        if u.len() != self.n_dofs() {
            return Err(ModelError::Dimension { expected: self.n_dofs(), got: u.len() });
        }
        let mut f = self.beam.mul_vec(u);
        let mut points = Vec::with_capacity(self.springs.len());
        let mut k = want_tangent.then(|| self.beam.clone());
        for (i, (s, o)) in self.springs.iter().zip(prev).enumerate() {
            let r = spring_return_map(u[2 * s.node], &o.state, &s.material)
                .map_err(|source| ModelError::Material { point: i, source })?;
            f[2 * s.node] += s.tributary * r.stress;
            if let Some(k) = k.as_mut() {
                k.add(2 * s.node, 2 * s.node, s.tributary * r.tangent);
            }
            let alg = spring_algorithmic_dissipation(o.stress, r.stress, &o.state, &r.new_state, &s.material);
            points.push(SpringPoint { state: r.new_state, stress: r.stress, alg_dissipation: o.alg_dissipation + alg });
        }
        Ok(Evaluation { internal_force: f, points, tangent: k })
    }

    fn inelastic_force(&self, points: &[SpringPoint<T>]) -> Vec<T> {
        let mut f = vec![T::zero(); self.n_dofs()];
        for (s, p) in self.springs.iter().zip(points) {
            f[2 * s.node] += s.tributary * s.material.e * (p.state.eps_p + p.state.eps_r);
        }
        f
    }

    fn stored_energy(&self, u: &[T], points: &[SpringPoint<T>]) -> T {
        let ku = self.beam.mul_vec(u);
        let beam: T = u.iter().zip(&ku).map(|(&a, &b)| a * b).sum::<T>() * T::lit(0.5);
        beam + self
            .springs
            .iter()
            .zip(points)
            .map(|(s, p)| s.tributary * spring_stored_energy(u[2 * s.node], &p.state, &s.material))
            .sum::<T>()
    }

    fn dissipation(&self, points: &[SpringPoint<T>]) -> Dissipation<T> {
        let mut d = Dissipation::default();
        for (s, p) in self.springs.iter().zip(points) {
            d.physical += s.tributary * p.state.dissipation_cum;
            d.algorithmic += s.tributary * p.alg_dissipation;
        }
        d
    }

    fn plastic_measure(&self, points: &[SpringPoint<T>]) -> T {
        self.springs.iter().zip(points).map(|(s, p)| s.tributary * p.state.lambda_cum).sum()
    }

    /// `½ Δuᵀ K_beam Δu`
    fn linear_step_dissipation(&self, du: &[T]) -> T {
        let kd = self.beam.mul_vec(du);
        T::lit(0.5) * du.iter().zip(&kd).map(|(&a, &b)| a * b).sum::<T>()
    }
}
