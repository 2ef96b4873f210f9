//! Brute-force explicit integration of the rate equations.
//!
//! Works directly on plain tensor components (no Mandel scaling) and uses
//! explicit midpoint substeps with an exact split at the elastic/plastic
//! transition. Nothing here calls the library's return map.

use mtpgd::constitutive::MaterialParams;
use mtpgd::tensor::SymTensor;

type T6 = SymTensor<f64>;

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleState {
    pub eps: T6,
    pub eps_p: T6,
    pub eps_r: T6,
    pub kappa: f64,
    pub lambda: f64,
    pub dissipation: f64,
}

fn sq23() -> f64 {
    (2.0f64 / 3.0).sqrt()
}

pub fn stress(s: &OracleState, p: &MaterialParams<f64>) -> T6 {
    let g = p.e / (2.0 * (1.0 + p.nu));
    let k = p.e / (3.0 * (1.0 - 2.0 * p.nu));
    let ee = s.eps - s.eps_p - s.eps_r;
    let mut sig = ee.deviator().scale(2.0 * g);
    let pr = k * ee.trace();
    for i in 0..3 {
        sig.c[i] += pr;
    }
    sig
}

fn relative(s: &OracleState, p: &MaterialParams<f64>) -> (T6, f64) {
    let a = stress(s, p).deviator() - s.eps_p.scale(p.h_kin);
    let radius = sq23() * (p.sigma_p + p.h_iso * s.kappa);
    (a, radius)
}

/// Plastic rates per unit strain increment `de` (returns the state increment).
fn plastic_rate(s: &OracleState, de: &T6, p: &MaterialParams<f64>) -> Option<OracleState> {
    let g2 = p.e / (1.0 + p.nu);
    let (a, _) = relative(s, p);
    let an = a.frobenius_norm();
    if an == 0.0 {
        return None;
    }
    let a_hat = a.scale(1.0 / an);
    let sdev = stress(s, p).deviator();
    let sn = sdev.frobenius_norm();
    let s_hat = if sn > 1e-12 * p.sigma_p { sdev.scale(1.0 / sn) } else { T6::zero() };
    let load = g2 * a_hat.contract(&de.deviator());
    let den = g2 * (1.0 + p.beta * a_hat.contract(&s_hat)) + p.h_kin + 2.0 / 3.0 * p.h_iso;
    let dl = load / den;
    if dl <= 0.0 {
        return None;
    }
    let sig = stress(s, p);
    let dp = a_hat.scale(dl);
    let dr = s_hat.scale(p.beta * dl);
    let dk = sq23() * dl;
    let diss = sig.contract(&(dp + dr)) - p.h_kin * s.eps_p.contract(&dp) - p.h_iso * s.kappa * dk;
    Some(OracleState { eps: *de, eps_p: dp, eps_r: dr, kappa: dk, lambda: dl, dissipation: diss })
}

fn add(s: &OracleState, d: &OracleState, f: f64) -> OracleState {
    OracleState {
        eps: s.eps + d.eps.scale(f),
        eps_p: s.eps_p + d.eps_p.scale(f),
        eps_r: s.eps_r + d.eps_r.scale(f),
        kappa: s.kappa + f * d.kappa,
        lambda: s.lambda + f * d.lambda,
        dissipation: s.dissipation + f * d.dissipation,
    }
}

fn elastic(s: &OracleState, de: &T6) -> OracleState {
    OracleState { eps: s.eps + *de, ..*s }
}

/// Fraction `α ∈ [0, 1]` of an elastic increment that brings `‖A‖` to the
/// yield radius.
fn crossing(s: &OracleState, de: &T6, p: &MaterialParams<f64>) -> f64 {
    let g2 = p.e / (1.0 + p.nu);
    let (a, r) = relative(s, p);
    let da = de.deviator().scale(g2);
    let qa = da.contract(&da);
    let qb = 2.0 * a.contract(&da);
    let qc = a.contract(&a) - r * r;
    if qa == 0.0 {
        return 1.0;
    }
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    ((-qb + disc.sqrt()) / (2.0 * qa)).clamp(0.0, 1.0)
}

fn midpoint(s: &OracleState, de: &T6, p: &MaterialParams<f64>) -> OracleState {
    let half = de.scale(0.5);
    let Some(k1) = plastic_rate(s, &half, p) else {
        return elastic(s, de);
    };
    let mid = add(s, &k1, 1.0);
    match plastic_rate(&mid, de, p) {
        Some(k2) => add(s, &k2, 1.0),
        None => add(s, &plastic_rate(s, de, p).unwrap(), 1.0),
    }
}

fn substep(s: &OracleState, de: &T6, p: &MaterialParams<f64>) -> OracleState {
    let g2 = p.e / (1.0 + p.nu);
    let (a, r) = relative(s, p);
    let a_end = a + de.deviator().scale(g2);
    if a_end.frobenius_norm() <= r {
        return elastic(s, de);
    }
    if a.frobenius_norm() < r {
        let alpha = crossing(s, de, p);
        let s1 = elastic(s, &de.scale(alpha));
        return midpoint(&s1, &de.scale(1.0 - alpha), p);
    }
    midpoint(s, de, p)
}

/// Integrates a straight strain path from `start.eps` to `eps_end` with
/// `n` equal substeps.
pub fn integrate(start: &OracleState, eps_end: &T6, p: &MaterialParams<f64>, n: usize) -> OracleState {
    let de = (*eps_end - start.eps).scale(1.0 / n as f64);
    let mut s = *start;
    for _ in 0..n {
        s = substep(&s, &de, p);
    }
    s
}

/// Scalar spring version: `σ = E(ε − ε^p − ε^r)`, `|σ − Hε^p| ≤ σ_p + H_iso κ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpringOracle {
    pub eps: f64,
    pub eps_p: f64,
    pub eps_r: f64,
    pub kappa: f64,
}

impl SpringOracle {
    pub fn stress(&self, p: &MaterialParams<f64>) -> f64 {
        p.e * (self.eps - self.eps_p - self.eps_r)
    }

    pub fn integrate(&mut self, eps_end: f64, p: &MaterialParams<f64>, n: usize) {
        let de = (eps_end - self.eps) / n as f64;
        for _ in 0..n {
            let sig = self.stress(p);
            let xi = sig - p.h_kin * self.eps_p;
            let r = p.sigma_p + p.h_iso * self.kappa;
            let xi_end = xi + p.e * de;
            if xi_end.abs() <= r {
                self.eps += de;
                continue;
            }
            let alpha = if xi.abs() < r { ((xi_end.signum() * r - xi) / (p.e * de)).clamp(0.0, 1.0) } else { 0.0 };
            self.eps += alpha * de;
            let rest = (1.0 - alpha) * de;
            let sig = self.stress(p);
            let n_dir = (sig - p.h_kin * self.eps_p).signum();
            let rs = if sig == 0.0 { 0.0 } else { sig.signum() };
            let dl = p.e * n_dir * rest / (p.e * (1.0 + p.beta * rs * n_dir) + p.h_kin + p.h_iso);
            if dl <= 0.0 {
                self.eps += rest;
                continue;
            }
            self.eps += rest;
            self.eps_p += dl * n_dir;
            self.eps_r += p.beta * dl * rs;
            self.kappa += dl;
        }
    }
}
