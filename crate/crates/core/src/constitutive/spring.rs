//! Scalar specialization for Winkler springs.
//!
//! `σ = E(ε − ε^p − ε^r)`, `f = |σ − H_kin ε^p| − (σ_p + H_iso κ)`,
//! `Δε^p = Δλ sign(ξ)`, `Δκ = Δλ`, `Δε^r = βΔλ sign(σ)`.

use serde::{Deserialize, Serialize};

use super::{MaterialError, MaterialParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpringState<T> {
    pub eps_p: T,
    pub kappa: T,
    pub eps_r: T,
    pub lambda_cum: T,
    pub dissipation_cum: T,
}

impl<T: Scalar> SpringState<T> {
    pub fn virgin() -> Self {
        Self {
            eps_p: T::zero(),
            kappa: T::zero(),
            eps_r: T::zero(),
            lambda_cum: T::zero(),
            dissipation_cum: T::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringResult<T> {
    pub stress: T,
    pub new_state: SpringState<T>,
    pub tangent: T,
    pub plastic_active: bool,
    pub delta_lambda: T,
}

fn sign<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        -T::one()
    }
}

pub fn spring_return_map<T: Scalar>(
    strain: T,
    old: &SpringState<T>,
    p: &MaterialParams<T>,
) -> Result<SpringResult<T>, MaterialError> {
    if !strain.is_finite() {
        return Err(MaterialError::NonFinite);
    }
    let e = p.e;
    let h = p.h_kin;
    let sigma_tr = e * (strain - old.eps_p - old.eps_r);
    let xi_tr = sigma_tr - h * old.eps_p;
    let radius = p.sigma_p + p.h_iso * old.kappa;
    let f_tr = xi_tr.abs() - radius;
    if !(f_tr > T::lit(1e-10) * p.sigma_p) {
        return Ok(SpringResult {
            stress: sigma_tr,
            new_state: *old,
            tangent: e,
            plastic_active: false,
            delta_lambda: T::zero(),
        });
    }
    let n = sign(xi_tr);

    // closed form for a fixed ratchet sign r; accept the first consistent one
    let mut candidates = vec![];
    if p.beta > T::zero() {
        let r0 = sign(sigma_tr);
        candidates.push(r0);
        candidates.push(-r0);
    } else {
        candidates.push(T::zero());
    }
    let mut chosen = None;
    for &r in &candidates {
        let den = e + h + p.h_iso + e * p.beta * r * n;
        let dl = f_tr / den;
        let sigma = sigma_tr - e * dl * (n + p.beta * r);
        let consistent = r == T::zero() || sign(sigma) == r || sigma == T::zero();
        if dl >= T::zero() && consistent {
            let tangent = e * (T::one() - e * (T::one() + p.beta * r * n) / den);
            chosen = Some((r, dl, sigma, tangent));
            break;
        }
    }
    let (r, dl, sigma, tangent) = match chosen {
        Some(c) => c,
        None => {
            // the stress lands on zero: ratchet direction taken from the
            // subdifferential of |σ| at the origin
            let hh = h + p.h_iso;
            let dl = if hh > T::zero() { (f_tr - n * sigma_tr) / hh } else { T::zero() };
            let r = if dl > T::zero() && p.beta > T::zero() {
                ((sigma_tr / (e * dl) - n) / p.beta).max(-T::one()).min(T::one())
            } else {
                T::zero()
            };
            (r, dl, T::zero(), T::zero())
        }
    };

    let mut new_state = *old;
    new_state.eps_p += dl * n;
    new_state.kappa += dl;
    new_state.eps_r += p.beta * dl * r;
    new_state.lambda_cum += dl;
    new_state.dissipation_cum += (p.sigma_p + p.beta * sigma.abs()) * dl;
    Ok(SpringResult { stress: sigma, new_state, tangent, plastic_active: true, delta_lambda: dl })
}

/// `½E(ε − ε^p − ε^r)² + ½H_kin (ε^p)² + ½H_iso κ²`
pub fn spring_stored_energy<T: Scalar>(strain: T, s: &SpringState<T>, p: &MaterialParams<T>) -> T {
    let ee = strain - s.eps_p - s.eps_r;
    T::lit(0.5) * (p.e * ee * ee + p.h_kin * s.eps_p * s.eps_p + p.h_iso * s.kappa * s.kappa)
}

/// Numerical dissipation of one backward-Euler spring step.
pub fn spring_algorithmic_dissipation<T: Scalar>(
    stress_old: T,
    stress_new: T,
    old: &SpringState<T>,
    new: &SpringState<T>,
    p: &MaterialParams<T>,
) -> T {
    let ds = stress_new - stress_old;
    let dp = new.eps_p - old.eps_p;
    let dk = new.kappa - old.kappa;
    T::lit(0.5) * (ds * ds / p.e + p.h_kin * dp * dp + p.h_iso * dk * dk)
}
