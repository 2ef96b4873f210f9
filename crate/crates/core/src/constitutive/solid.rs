//! Three-dimensional return mapping (plane strain uses it with `ε_33 = 0`).
//!
//! The local problem is solved in Mandel components, where tensor
//! contractions are plain dot products. Unknowns are the end-of-step
//! stress deviator `S` and the multiplier increment `Δλ`:
//!
//! ```text
//! R_S = S − S_trial + 2G Δλ (â + β ŝ) = 0,   â = A/‖A‖,  A = S − H_kin ε^p_old
//! R_f = ‖A‖ − H_kin Δλ − √(2/3)(σ_p + H_iso (κ_old + √(2/3) Δλ)) = 0
//! ```
//!
//! with `ŝ = S/‖S‖` (fully implicit) or the trial direction (frozen variant).

use serde::{Deserialize, Serialize};

use super::{InternalState, MaterialError, MaterialParams};
use crate::linalg::SmallLu;
use crate::scalar::Scalar;
use crate::tensor::{
    deviatoric_projector, mandel_to_voigt_moduli, mat6_zero, vec6_norm, Mat6, SymTensor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatchetDirection {
    /// `ŝ` evaluated at the end-of-step stress.
    #[default]
    Implicit,
    /// `ŝ` frozen at the elastic trial stress (debugging aid).
    FrozenTrial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReturnMapOptions {
    pub ratchet_direction: RatchetDirection,
    /// Local tolerance relative to `σ_p`.
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for ReturnMapOptions {
    fn default() -> Self {
        Self { ratchet_direction: RatchetDirection::Implicit, rel_tol: 1e-10, max_iters: 50 }
    }
}

/// Converged local solution of a plastic step, kept for the tangent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSolution<T> {
    s_dev: [T; 6],
    back: [T; 6],
    s_trial: [T; 6],
    delta_lambda: T,
    ratchet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressResult<T> {
    pub sigma: SymTensor<T>,
    pub new_state: InternalState<T>,
    /// Tangent moduli in engineering Voigt form (`dσ / dγ`).
    pub d_tan: Mat6<T>,
    pub plastic_active: bool,
    pub delta_lambda: T,
    pub local: Option<LocalSolution<T>>,
}

/// Isotropic elasticity in engineering Voigt form.
pub fn elastic_moduli<T: Scalar>(p: &MaterialParams<T>) -> Result<Mat6<T>, MaterialError> {
    if !(p.nu > -T::one() && p.nu < T::lit(0.5)) {
        return Err(MaterialError::InvalidParameter { name: "nu", value: p.nu.as_f64() });
    }
    if !(p.e > T::zero()) {
        return Err(MaterialError::InvalidParameter { name: "E", value: p.e.as_f64() });
    }
    Ok(elastic_moduli_unchecked(p))
}

fn elastic_moduli_unchecked<T: Scalar>(p: &MaterialParams<T>) -> Mat6<T> {
    let (e, nu) = (p.e, p.nu);
    let one = T::one();
    let lam = e * nu / ((one + nu) * (one - T::two() * nu));
    let mu = e / (T::two() * (one + nu));
    let mut d = mat6_zero();
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = lam;
        }
        d[i][i] = lam + T::two() * mu;
        d[i + 3][i + 3] = mu;
    }
    d
}

fn yield_radius<T: Scalar>(p: &MaterialParams<T>, kappa: T) -> T {
    T::lit((2.0f64 / 3.0).sqrt()) * (p.sigma_p + p.h_iso * kappa)
}

fn scaled<T: Scalar>(v: &[T; 6], s: T) -> [T; 6] {
    let mut o = *v;
    o.iter_mut().for_each(|x| *x *= s);
    o
}

/// Stress, updated internal variables and consistent tangent for the total
/// strain `eps_new`, starting from the converged state `state_old`.
pub fn return_map<T: Scalar>(
    eps_new: &SymTensor<T>,
    state_old: &InternalState<T>,
    p: &MaterialParams<T>,
    opts: &ReturnMapOptions,
) -> Result<StressResult<T>, MaterialError> {
    if !eps_new.is_finite() {
        return Err(MaterialError::NonFinite);
    }
    let g2 = T::two() * p.shear_modulus();
    let kb = p.bulk_modulus();
    let h = p.h_kin;
    let sq23 = T::lit((2.0f64 / 3.0).sqrt());

    let elastic = *eps_new - state_old.inelastic_strain();
    let s_trial = elastic.deviator().to_mandel().map(|v| g2 * v);
    let pressure = kb * eps_new.trace();
    let back = state_old.eps_p.to_mandel().map(|v| h * v);
    let a_trial: [T; 6] = std::array::from_fn(|i| s_trial[i] - back[i]);
    let radius = yield_radius(p, state_old.kappa);
    let f_trial = vec6_norm(&a_trial) - radius;
    let tol = T::lit(opts.rel_tol) * p.sigma_p;

    if !(f_trial > tol) {
        let mut sigma = elastic.deviator().scale(g2);
        for k in 0..3 {
            sigma.c[k] += pressure;
        }
        return Ok(StressResult {
            sigma,
            new_state: *state_old,
            d_tan: elastic_moduli_unchecked(p),
            plastic_active: false,
            delta_lambda: T::zero(),
            local: None,
        });
    }

    let s_trial_norm = vec6_norm(&s_trial);
    let tiny = T::lit(1e-12) * p.sigma_p.max(s_trial_norm);
    let mut ratchet = p.beta > T::zero() && s_trial_norm > tiny;
    let frozen = opts.ratchet_direction == RatchetDirection::FrozenTrial;
    let s_hat_trial = if s_trial_norm > T::zero() {
        scaled(&s_trial, T::one() / s_trial_norm)
    } else {
        [T::zero(); 6]
    };

    // β = 0 closed form as the starting point
    let denom0 = g2 + h + T::lit(2.0 / 3.0) * p.h_iso;
    let a_hat0 = scaled(&a_trial, T::one() / vec6_norm(&a_trial));
    let start = || {
        let dl = f_trial / denom0;
        let s: [T; 6] = std::array::from_fn(|i| s_trial[i] - g2 * dl * a_hat0[i]);
        (s, dl)
    };
    let (mut s, mut dl) = start();

    let residual = |s: &[T; 6], dl: T, ratchet: bool| -> ([T; 6], T, [T; 6], T, [T; 6], T) {
        let a: [T; 6] = std::array::from_fn(|i| s[i] - back[i]);
        let an = vec6_norm(&a);
        let a_hat = scaled(&a, T::one() / an);
        let sn = vec6_norm(s);
        let s_hat = if !ratchet {
            [T::zero(); 6]
        } else if frozen {
            s_hat_trial
        } else {
            scaled(s, T::one() / sn)
        };
        let rs: [T; 6] =
            std::array::from_fn(|i| s[i] - s_trial[i] + g2 * dl * (a_hat[i] + p.beta * s_hat[i]));
        let rf = an - h * dl - sq23 * (p.sigma_p + p.h_iso * (state_old.kappa + sq23 * dl));
        (rs, rf, a_hat, an, s_hat, sn)
    };

    let jacobian = |dl: T, a_hat: &[T; 6], an: T, s_hat: &[T; 6], sn: T, ratchet: bool| {
        let mut j = [[T::zero(); 7]; 7];
        for r in 0..6 {
            for c in 0..6 {
                let id = if r == c { T::one() } else { T::zero() };
                let mut v = id + g2 * dl * (id - a_hat[r] * a_hat[c]) / an;
                if ratchet && !frozen {
                    v += g2 * dl * p.beta * (id - s_hat[r] * s_hat[c]) / sn;
                }
                j[r][c] = v;
            }
            j[r][6] = g2 * (a_hat[r] + p.beta * s_hat[r]);
            j[6][r] = a_hat[r];
        }
        j[6][6] = -h - T::lit(2.0 / 3.0) * p.h_iso;
        j
    };

    let res_norm = |rs: &[T; 6], rf: T| vec6_norm(rs).max(rf.abs());

    let mut iters = 0;
    let (mut rs, mut rf, mut a_hat, mut an, mut s_hat, mut sn) = residual(&s, dl, ratchet);
    loop {
        let rn = res_norm(&rs, rf);
        if rn <= tol {
            break;
        }
        if iters >= opts.max_iters || !rn.is_finite() {
            return Err(MaterialError::NoConvergence { iterations: iters, residual: rn.as_f64() });
        }
        iters += 1;
        let jac = jacobian(dl, &a_hat, an, &s_hat, sn, ratchet);
        let lu = SmallLu::new(jac).map_err(|_| MaterialError::NoConvergence {
            iterations: iters,
            residual: rn.as_f64(),
        })?;
        let rhs: [T; 7] = std::array::from_fn(|i| if i < 6 { -rs[i] } else { -rf });
        let dx = lu.solve(&rhs);
        // backtracking on the residual norm
        let mut step = T::one();
        loop {
            let s_try: [T; 6] = std::array::from_fn(|i| s[i] + step * dx[i]);
            let dl_try = dl + step * dx[6];
            let trial = residual(&s_try, dl_try, ratchet);
            let ok = dl_try >= T::zero() && trial.3 > h * dl_try && trial.0.iter().all(|v| v.is_finite());
            if ok && (res_norm(&trial.0, trial.1) < rn || step < T::lit(1e-3)) {
                s = s_try;
                dl = dl_try;
                (rs, rf, a_hat, an, s_hat, sn) = trial;
                break;
            }
            step *= T::lit(0.5);
            if step < T::lit(1e-4) {
                s = s_try;
                dl = dl_try;
                (rs, rf, a_hat, an, s_hat, sn) = residual(&s, dl, ratchet);
                break;
            }
        }
        if ratchet && !frozen && sn <= tiny {
            // ∂‖·‖ at the origin contains zero: drop the ratcheting flow
            ratchet = false;
            (s, dl) = start();
            (rs, rf, a_hat, an, s_hat, sn) = residual(&s, dl, ratchet);
        }
    }

    let local = LocalSolution { s_dev: s, back, s_trial, delta_lambda: dl, ratchet };
    let mut sigma = SymTensor::from_mandel(&s);
    for k in 0..3 {
        sigma.c[k] += pressure;
    }
    let d_eps_p = SymTensor::from_mandel(&scaled(&a_hat, dl));
    let d_eps_r = SymTensor::from_mandel(&scaled(&s_hat, p.beta * dl));
    let mut new_state = *state_old;
    new_state.eps_p += d_eps_p;
    new_state.eps_r += d_eps_r;
    new_state.kappa += sq23 * dl;
    new_state.lambda_cum += dl;
    // σ:Δε^r = βΔλ S·ŝ; equals β‖S‖Δλ for the implicit direction
    let s_dot: T = s.iter().zip(&s_hat).map(|(&x, &y)| x * y).sum();
    new_state.dissipation_cum += (sq23 * p.sigma_p + p.beta * s_dot) * dl;

    Ok(StressResult {
        sigma,
        new_state,
        d_tan: consistent_tangent(p, opts, Some(&local)),
        plastic_active: true,
        delta_lambda: dl,
        local: Some(local),
    })
}

/// Exact linearization `dσ/dε` of the return map at a converged solution,
/// in engineering Voigt form. `None` (an elastic step) gives the elastic
/// moduli.
pub fn consistent_tangent<T: Scalar>(
    p: &MaterialParams<T>,
    opts: &ReturnMapOptions,
    local: Option<&LocalSolution<T>>,
) -> Mat6<T> {
    let Some(loc) = local else {
        return elastic_moduli_unchecked(p);
    };
    let g2 = T::two() * p.shear_modulus();
    let kb = p.bulk_modulus();
    let h = p.h_kin;
    let frozen = opts.ratchet_direction == RatchetDirection::FrozenTrial;
    let dl = loc.delta_lambda;
    let a: [T; 6] = std::array::from_fn(|i| loc.s_dev[i] - loc.back[i]);
    let an = vec6_norm(&a);
    let a_hat = scaled(&a, T::one() / an);
    let sn = vec6_norm(&loc.s_dev);
    let s_hat = if loc.ratchet { scaled(&loc.s_dev, T::one() / sn) } else { [T::zero(); 6] };
    let stn = vec6_norm(&loc.s_trial);
    let st_hat = scaled(&loc.s_trial, T::one() / stn);

    let mut j = [[T::zero(); 7]; 7];
    for r in 0..6 {
        for c in 0..6 {
            let id = if r == c { T::one() } else { T::zero() };
            let mut v = id + g2 * dl * (id - a_hat[r] * a_hat[c]) / an;
            if loc.ratchet && !frozen {
                v += g2 * dl * p.beta * (id - s_hat[r] * s_hat[c]) / sn;
            }
            j[r][c] = v;
        }
        let dir = if loc.ratchet && frozen { st_hat[r] } else { s_hat[r] };
        j[r][6] = g2 * (a_hat[r] + p.beta * if loc.ratchet { dir } else { T::zero() });
        j[6][r] = a_hat[r];
    }
    j[6][6] = -h - T::lit(2.0 / 3.0) * p.h_iso;
    let lu = SmallLu::new(j).expect("local Jacobian singular at a converged point");

    let pdev: Mat6<T> = deviatoric_projector();
    // d S_trial / dε = 2G P_dev; with a frozen ratchet direction the trial
    // direction also moves with ε.
    let mut dm = mat6_zero();
    for c in 0..6 {
        let mut rhs = [T::zero(); 7];
        for r in 0..6 {
            rhs[r] = g2 * pdev[r][c];
        }
        if loc.ratchet && frozen {
            // −2GΔλβ dŝ_trial/dε
            for r in 0..6 {
                let mut dshat = T::zero();
                for k in 0..6 {
                    let id = if r == k { T::one() } else { T::zero() };
                    dshat += (id - st_hat[r] * st_hat[k]) / stn * g2 * pdev[k][c];
                }
                rhs[r] -= g2 * dl * p.beta * dshat;
            }
        }
        let x = lu.solve(&rhs);
        for r in 0..6 {
            dm[r][c] = x[r];
        }
    }
    for r in 0..3 {
        for c in 0..3 {
            dm[r][c] += kb;
        }
    }
    mandel_to_voigt_moduli(&dm)
}

/// Dissipation `σ:(Δε^p + Δε^r) − H_kin ε^p:Δε^p − H_iso κ Δκ` of one
/// backward-Euler step, with end-of-step stress and internal variables.
/// For a converged step this equals `(√(2/3)σ_p + β‖dev σ‖) Δλ`.
pub fn dissipation_increment<T: Scalar>(
    state_old: &InternalState<T>,
    state_new: &InternalState<T>,
    sigma: &SymTensor<T>,
    p: &MaterialParams<T>,
) -> T {
    let d_p = state_new.eps_p - state_old.eps_p;
    let d_r = state_new.eps_r - state_old.eps_r;
    let d_k = state_new.kappa - state_old.kappa;
    sigma.contract(&(d_p + d_r))
        - p.h_kin * state_new.eps_p.contract(&d_p)
        - p.h_iso * state_new.kappa * d_k
}

/// Free energy density `ψ(ε, ε^p, κ, ε^r)`.
pub fn stored_energy<T: Scalar>(eps: &SymTensor<T>, state: &InternalState<T>, p: &MaterialParams<T>) -> T {
    let ee = *eps - state.inelastic_strain();
    let g = p.shear_modulus();
    let kb = p.bulk_modulus();
    let dev = ee.deviator();
    let half = T::lit(0.5);
    g * dev.contract(&dev)
        + half * kb * ee.trace() * ee.trace()
        + half * p.h_kin * state.eps_p.contract(&state.eps_p)
        + half * p.h_iso * state.kappa * state.kappa
}

/// Numerical dissipation of one backward-Euler step,
/// `½Δσ:C⁻¹:Δσ + ½H_kin Δε^p:Δε^p + ½H_iso Δκ²`. Together with the
/// physical dissipation it closes the discrete energy balance exactly.
pub fn algorithmic_dissipation<T: Scalar>(
    sigma_old: &SymTensor<T>,
    sigma_new: &SymTensor<T>,
    state_old: &InternalState<T>,
    state_new: &InternalState<T>,
    p: &MaterialParams<T>,
) -> T {
    let ds = *sigma_new - *sigma_old;
    let dev = ds.deviator();
    let tr = ds.trace();
    let d_p = state_new.eps_p - state_old.eps_p;
    let d_k = state_new.kappa - state_old.kappa;
    let half = T::lit(0.5);
    half * dev.contract(&dev) / (T::two() * p.shear_modulus())
        + half * tr * tr / (T::lit(9.0) * p.bulk_modulus())
        + half * p.h_kin * d_p.contract(&d_p)
        + half * p.h_iso * d_k * d_k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{mat6_mul_vec, voigt_to_mandel_moduli};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plate() -> MaterialParams<f64> {
        MaterialParams { e: 205.0, nu: 0.3, sigma_p: 100.0, h_iso: 1140.0, h_kin: 21640.0, beta: 0.4 }
    }

    fn random_tensor(rng: &mut ChaCha8Rng, scale: f64) -> SymTensor<f64> {
        SymTensor::new(std::array::from_fn(|_| rng.gen_range(-scale..scale)))
    }

    /// Strain magnitude that reaches first yield along `d` from the virgin state.
    fn yield_scale(d: &SymTensor<f64>, p: &MaterialParams<f64>) -> f64 {
        (2.0f64 / 3.0).sqrt() * p.sigma_p / (2.0 * p.shear_modulus() * d.deviator().frobenius_norm())
    }

    /// Random walks of a few steps, each comparable to the yield strain.
    fn random_walk(rng: &mut ChaCha8Rng, p: &MaterialParams<f64>, steps: usize) -> Vec<SymTensor<f64>> {
        let mut eps = SymTensor::zero();
        let mut out = vec![];
        for _ in 0..steps {
            let d = random_tensor(rng, 1.0);
            eps += d.scale(yield_scale(&d, p) * rng.gen_range(0.2..2.5));
            out.push(eps);
        }
        out
    }

    #[test]
    fn zero_strain_on_virgin_state() {
        let r = return_map(&SymTensor::zero(), &InternalState::virgin(), &plate(), &Default::default()).unwrap();
        assert_eq!(r.sigma, SymTensor::zero());
        assert!(!r.plastic_active);
        assert_eq!(r.new_state, InternalState::virgin());
        assert_eq!(r.d_tan, elastic_moduli(&plate()).unwrap());
    }

    #[test]
    fn elastic_moduli_examples() {
        let d = elastic_moduli(&plate()).unwrap();
        assert!((d[0][0] - 205.0 * 0.7 / (1.3 * 0.4)).abs() < 1e-12);
        assert!((d[0][0] - 275.96).abs() < 5e-3);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
        let d0 = elastic_moduli(&MaterialParams { nu: 0.0, ..plate() }).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = match (i == j, i < 3) {
                    (true, true) => 205.0,
                    (true, false) => 102.5,
                    _ => 0.0,
                };
                assert_eq!(d0[i][j], expect);
            }
        }
        for nu in [0.5, -1.0, 0.7, f64::NAN] {
            assert!(elastic_moduli(&MaterialParams { nu, ..plate() }).is_err());
        }
    }

    #[test]
    fn rejects_nan_strain() {
        let eps = SymTensor::new([f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let r = return_map(&eps, &InternalState::virgin(), &plate(), &Default::default());
        assert_eq!(r.unwrap_err(), MaterialError::NonFinite);
    }

    #[test]
    fn uniaxial_ramp_stays_on_yield_surface() {
        let p = plate();
        let d = SymTensor::diag(1.0, 0.0, 0.0);
        let eps = d.scale(2.0 * yield_scale(&d, &p));
        let r = return_map(&eps, &InternalState::virgin(), &p, &Default::default()).unwrap();
        assert!(r.plastic_active);
        let a = r.sigma.deviator() - r.new_state.eps_p.scale(p.h_kin);
        let radius = (2.0f64 / 3.0).sqrt() * (p.sigma_p + p.h_iso * r.new_state.kappa);
        assert!((a.frobenius_norm() - radius).abs() <= 1e-8 * p.sigma_p);
    }

    /// Textbook combined-hardening radial return, written out independently.
    fn radial_return(eps: &SymTensor<f64>, st: &InternalState<f64>, p: &MaterialParams<f64>) -> (SymTensor<f64>, InternalState<f64>) {
        let g = p.shear_modulus();
        let k = p.bulk_modulus();
        let ee = *eps - st.eps_p;
        let s_tr = ee.deviator().scale(2.0 * g);
        let xi = s_tr - st.eps_p.scale(p.h_kin);
        let r = (2.0f64 / 3.0).sqrt() * (p.sigma_p + p.h_iso * st.kappa);
        let f = xi.frobenius_norm() - r;
        let mut out = *st;
        let mut s = s_tr;
        if f > 0.0 {
            let n = xi.scale(1.0 / xi.frobenius_norm());
            let dg = f / (2.0 * g + p.h_kin + 2.0 / 3.0 * p.h_iso);
            s = s_tr - n.scale(2.0 * g * dg);
            out.eps_p += n.scale(dg);
            out.kappa += (2.0f64 / 3.0).sqrt() * dg;
        }
        (s + SymTensor::identity().scale(k * eps.trace()), out)
    }

    #[test]
    fn zero_beta_matches_classical_radial_return() {
        let p = MaterialParams { beta: 0.0, ..plate() };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut a = InternalState::virgin();
            let mut b = InternalState::virgin();
            for eps in random_walk(&mut rng, &p, 4) {
                let r = return_map(&eps, &a, &p, &Default::default()).unwrap();
                let (sig, st) = radial_return(&eps, &b, &p);
                let err = (r.sigma - sig).frobenius_norm() / sig.frobenius_norm().max(1e-12);
                assert!(err <= 1e-10, "relative stress error {err}");
                assert_eq!(r.new_state.eps_r, SymTensor::zero());
                a = r.new_state;
                b = st;
            }
        }
    }

    #[test]
    fn invariants_on_random_paths() {
        let p = plate();
        let sq23 = (2.0f64 / 3.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dir in [RatchetDirection::Implicit, RatchetDirection::FrozenTrial] {
            let opts = ReturnMapOptions { ratchet_direction: dir, ..Default::default() };
            for _ in 0..50 {
                let mut st = InternalState::virgin();
                for eps in random_walk(&mut rng, &p, 5) {
                    let r = return_map(&eps, &st, &p, &opts).unwrap();
                    let n = r.new_state;
                    let a = r.sigma.deviator() - n.eps_p.scale(p.h_kin);
                    let f = a.frobenius_norm() - sq23 * (p.sigma_p + p.h_iso * n.kappa);
                    assert!(f <= 1e-8 * p.sigma_p);
                    let dp = n.eps_p - st.eps_p;
                    let dr = n.eps_r - st.eps_r;
                    assert!(dp.trace().abs() <= 1e-10 && dr.trace().abs() <= 1e-10);
                    assert!(n.kappa >= st.kappa);
                    assert!((n.kappa - st.kappa - sq23 * dp.frobenius_norm()).abs() <= 1e-10);
                    if r.plastic_active {
                        let ratio = dr.frobenius_norm() / dp.frobenius_norm();
                        assert!((ratio - p.beta).abs() <= 1e-8, "ratio {ratio}");
                    }
                    let phi = dissipation_increment(&st, &n, &r.sigma, &p);
                    let recorded = n.dissipation_cum - st.dissipation_cum;
                    assert!(recorded >= 0.0);
                    if dir == RatchetDirection::Implicit {
                        assert!((phi - recorded).abs() <= 1e-9 * recorded.max(1e-9), "{phi} vs {recorded}");
                    }
                    st = n;
                }
            }
        }
    }

    /// Central differences of the returned inelastic strain; the stress
    /// derivative is `D − D ∂(ε^p + ε^r)/∂ε`, which keeps the roundoff of the
    /// differenced quantity small compared with differencing `σ` itself.
    fn fd_tangent(eps: &SymTensor<f64>, st: &InternalState<f64>, p: &MaterialParams<f64>, opts: &ReturnMapOptions) -> Mat6<f64> {
        let h = 1e-7;
        let de = elastic_moduli(p).unwrap();
        let mut d = de;
        for j in 0..6 {
            let mut v = eps.to_voigt_strain();
            v[j] += h;
            let ap = return_map(&SymTensor::from_voigt_strain(&v), st, p, opts).unwrap().new_state.inelastic_strain();
            v[j] -= 2.0 * h;
            let am = return_map(&SymTensor::from_voigt_strain(&v), st, p, opts).unwrap().new_state.inelastic_strain();
            let da = (ap - am).scale(1.0 / (2.0 * h)).to_voigt_strain();
            let dsig = mat6_mul_vec(&de, &da);
            for i in 0..6 {
                d[i][j] -= dsig[i];
            }
        }
        d
    }

    fn max_rel_diff(a: &Mat6<f64>, b: &Mat6<f64>, floor: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..6 {
            for j in 0..6 {
                if b[i][j].abs() >= floor {
                    worst = worst.max((a[i][j] - b[i][j]).abs() / b[i][j].abs());
                }
            }
        }
        worst
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let p = plate();
        let floor = 1e-6 * 275.96;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dir in [RatchetDirection::Implicit, RatchetDirection::FrozenTrial] {
            let opts = ReturnMapOptions { ratchet_direction: dir, rel_tol: 1e-13, ..Default::default() };
            let mut checked = 0;
            while checked < 10 {
                let path = random_walk(&mut rng, &p, 3);
                let mut st = InternalState::virgin();
                for eps in &path[..2] {
                    st = return_map(eps, &st, &p, &opts).unwrap().new_state;
                }
                let r = return_map(&path[2], &st, &p, &opts).unwrap();
                if !r.plastic_active {
                    continue;
                }
                let fd = fd_tangent(&path[2], &st, &p, &opts);
                let err = max_rel_diff(&r.d_tan, &fd, floor);
                assert!(err <= 1e-4, "{dir:?}: {err}");
                checked += 1;
            }
        }
    }

    #[test]
    fn perfect_plasticity_tangent_is_radial_return_form() {
        let p = MaterialParams { h_iso: 0.0, h_kin: 0.0, beta: 0.0, ..plate() };
        let eps = SymTensor::new([0.9, -0.3, 0.15, 0.3, 0.0, -0.15]);
        let r = return_map(&eps, &InternalState::virgin(), &p, &Default::default()).unwrap();
        assert!(r.plastic_active);
        let g2 = 2.0 * p.shear_modulus();
        let s_tr = eps.deviator().scale(g2);
        let n = s_tr.scale(1.0 / s_tr.frobenius_norm()).to_mandel();
        let theta = 1.0 - g2 * r.delta_lambda / s_tr.frobenius_norm();
        let pdev: Mat6<f64> = deviatoric_projector();
        let mut expect = mat6_zero();
        for i in 0..6 {
            for j in 0..6 {
                let vol = if i < 3 && j < 3 { p.bulk_modulus() } else { 0.0 };
                expect[i][j] = vol + g2 * theta * (pdev[i][j] - n[i] * n[j]);
            }
        }
        let got = voigt_to_mandel_moduli(&r.d_tan);
        for i in 0..6 {
            for j in 0..6 {
                assert!((got[i][j] - expect[i][j]).abs() <= 1e-10 * 275.96, "{i}{j}");
            }
        }
        // flow direction is a null direction of the tangent
        let dn = mat6_mul_vec(&got, &n);
        assert!(vec6_norm(&dn) <= 1e-9 * 275.96);
    }

    #[test]
    fn discrete_energy_balance_per_step() {
        let p = plate();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut st = InternalState::virgin();
        let mut eps_old = SymTensor::zero();
        let mut sig_old = SymTensor::zero();
        for eps in random_walk(&mut rng, &p, 30) {
            let r = return_map(&eps, &st, &p, &Default::default()).unwrap();
            let work = r.sigma.contract(&(eps - eps_old));
            let dpsi = stored_energy(&eps, &r.new_state, &p) - stored_energy(&eps_old, &st, &p);
            let dphys = r.new_state.dissipation_cum - st.dissipation_cum;
            let dalg = algorithmic_dissipation(&sig_old, &r.sigma, &st, &r.new_state, &p);
            assert!(dalg >= 0.0);
            let scale = work.abs().max(dpsi.abs()).max(1e-12);
            assert!((work - dpsi - dphys - dalg).abs() <= 1e-8 * scale);
            st = r.new_state;
            eps_old = eps;
            sig_old = r.sigma;
        }
    }

    #[test]
    fn single_precision_return_map() {
        let p = plate().cast::<f32>();
        let eps = SymTensor::<f32>::diag(1.5, 0.0, 0.0);
        let r = return_map(&eps, &InternalState::virgin(), &p, &ReturnMapOptions { rel_tol: 1e-5, ..Default::default() }).unwrap();
        let r64 = return_map(&SymTensor::diag(1.5, 0.0, 0.0), &InternalState::virgin(), &plate(), &Default::default()).unwrap();
        assert!(r.plastic_active);
        assert!((r.sigma.c[0] as f64 - r64.sigma.c[0]).abs() < 1e-3 * r64.sigma.c[0]);
    }
}
