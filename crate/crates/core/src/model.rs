//! Interface shared by the continuum and beam discretizations.
//!
//! Both models are linear in the displacements apart from the inelastic
//! strains, so the internal force splits as `f_int = K u − f_in(a)` with the
//! constant elastic stiffness `K` and the inelastic force
//! `f_in = ∫ Bᵀ D (ε^p + ε^r)`. The PGD solver relies on that split.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::constitutive::MaterialError;
use crate::linalg::{LinalgError, ProfileMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("material point {point}: {source}")]
    Material { point: usize, source: MaterialError },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("vector of length {got} where {expected} was expected")]
    Dimension { expected: usize, got: usize },
}

/// Result of evaluating all material points for one displacement vector.
#[derive(Debug, Clone)]
pub struct Evaluation<T, P> {
    pub internal_force: Vec<T>,
    pub points: Vec<P>,
    pub tangent: Option<ProfileMatrix<T>>,
}

/// Cumulative dissipation split into the physical part and the numerical
/// part introduced by the implicit time integration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dissipation<T> {
    pub physical: T,
    pub algorithmic: T,
}

pub trait StructuralModel<T: Scalar>: Send + Sync {
    type Point: Clone + Send + Sync + std::fmt::Debug + Serialize + DeserializeOwned;

    /// Number of free degrees of freedom.
    fn n_dofs(&self) -> usize;
    fn n_points(&self) -> usize;
    fn initial_points(&self) -> Vec<Self::Point>;
    fn elastic_stiffness(&self) -> ProfileMatrix<T>;
    /// External force for a unit load amplitude.
    fn load_pattern(&self) -> &[T];
    fn evaluate(
        &self,
        u: &[T],
        prev: &[Self::Point],
        want_tangent: bool,
    ) -> Result<Evaluation<T, Self::Point>, ModelError>;
    fn inelastic_force(&self, points: &[Self::Point]) -> Vec<T>;
    fn stored_energy(&self, u: &[T], points: &[Self::Point]) -> T;
    fn dissipation(&self, points: &[Self::Point]) -> Dissipation<T>;
    /// Accumulated plastic multiplier summed over the points (weighted).
    fn plastic_measure(&self, points: &[Self::Point]) -> T;
    /// Numerical dissipation of a backward-Euler step in linear members
    /// that carry no material points.
    fn linear_step_dissipation(&self, _du: &[T]) -> T {
        T::zero()
    }
}
