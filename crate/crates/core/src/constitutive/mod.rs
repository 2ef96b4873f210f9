//! Kinematic–isotropic hardening plasticity with a ratcheting strain.
//!
//! The internal variables are the plastic strain `ε^p`, the isotropic
//! hardening variable `κ` and the ratcheting strain `ε^r`. Stress is
//! `σ = C : (ε − ε^p − ε^r)`, the yield function is
//! `f = ‖dev(σ − H_kin ε^p)‖ − √(2/3)(σ_p + H_iso κ)` and the flow follows
//! the non-associative potential `g = f + β‖dev σ‖`.

mod solid;
mod spring;

pub use solid::{
    algorithmic_dissipation, consistent_tangent, dissipation_increment, elastic_moduli,
    return_map, stored_energy, LocalSolution, RatchetDirection, ReturnMapOptions, StressResult,
};
pub use spring::{
    spring_algorithmic_dissipation, spring_return_map, spring_stored_energy, SpringResult,
    SpringState,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::tensor::SymTensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("invalid material parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("non-finite strain input")]
    NonFinite,
    #[error("local return-map iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams<T> {
    /// Young's modulus.
    pub e: T,
    /// Poisson ratio (ignored by the one-dimensional spring model).
    pub nu: T,
    /// Initial yield strength `σ_p`.
    pub sigma_p: T,
    pub h_iso: T,
    pub h_kin: T,
    /// Ratcheting constant, `0 ≤ β ≤ 1`.
    pub beta: T,
}

impl<T: Scalar> MaterialParams<T> {
    pub fn validate(&self) -> Result<(), MaterialError> {
        let bad = |name, v: T| Err(MaterialError::InvalidParameter { name, value: v.as_f64() });
        if !(self.e > T::zero()) {
            return bad("E", self.e);
        }
        if !(self.nu > -T::one() && self.nu < T::lit(0.5)) {
            return bad("nu", self.nu);
        }
        if !(self.sigma_p > T::zero()) {
            return bad("sigma_p", self.sigma_p);
        }
        if !(self.h_iso >= T::zero()) {
            return bad("H_iso", self.h_iso);
        }
        if !(self.h_kin >= T::zero()) {
            return bad("H_kin", self.h_kin);
        }
        if !(self.beta >= T::zero() && self.beta <= T::one()) {
            return bad("beta", self.beta);
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> T {
        self.e / (T::two() * (T::one() + self.nu))
    }

    pub fn bulk_modulus(&self) -> T {
        self.e / (T::lit(3.0) * (T::one() - T::two() * self.nu))
    }

    pub fn cast<U: Scalar>(&self) -> MaterialParams<U> {
        let c = |v: T| U::lit(v.as_f64());
        MaterialParams {
            e: c(self.e),
            nu: c(self.nu),
            sigma_p: c(self.sigma_p),
            h_iso: c(self.h_iso),
            h_kin: c(self.h_kin),
            beta: c(self.beta),
        }
    }
}

/// Internal variables at one material point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InternalState<T> {
    pub eps_p: SymTensor<T>,
    pub kappa: T,
    pub eps_r: SymTensor<T>,
    /// Accumulated plastic multiplier.
    pub lambda_cum: T,
    /// Accumulated (physical) dissipation per unit volume.
    pub dissipation_cum: T,
}

impl<T: Scalar> InternalState<T> {
    pub fn virgin() -> Self {
        Self {
            eps_p: SymTensor::zero(),
            kappa: T::zero(),
            eps_r: SymTensor::zero(),
            lambda_cum: T::zero(),
            dissipation_cum: T::zero(),
        }
    }

    /// `ε^p + ε^r`, the strain removed from the elastic part.
    pub fn inelastic_strain(&self) -> SymTensor<T> {
        self.eps_p + self.eps_r
    }
}
