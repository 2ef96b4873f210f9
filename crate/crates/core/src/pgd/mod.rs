//! Multi-temporal proper generalized decomposition.
//!
//! The displacement at small-time node `h` of cycle `𝔫 = (n_1 … n_S)` is
//! `u_{h𝔫} = Σ_i ζ_i φ̂^(i)_h Π_j ϑ̂^(j)(i)_{n_j}`. Modes are found one at a
//! time by alternating linear solves for `φ` (one per `h`, sharing the
//! factorized elastic stiffness) and scalar solves for each `ϑ^(j)`, with the
//! plastic and ratcheting strain histories frozen. Between fixed points the
//! histories are re-integrated from the reconstructed displacements.

mod driver;
mod history;
mod updates;

pub use driver::{enrich_mode, solve, ModeLog, PgdContext, PgdRun};
pub use history::{initial_guess, sweep_internal_histories, InternalHistory, Seed};
pub use updates::{large_time_update, residual_energy, small_time_update, Forcing};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::incremental::SolverError;
use crate::linalg::{cholesky_solve, LinalgError, ProfileMatrix};
use crate::model::ModelError;
use crate::scalar::{dot, Scalar};
use crate::time::{TimeGrid, TimeGridError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PgdError {
    #[error("vanishing temporal amplitude")]
    VanishingTemporalAmplitude,
    #[error("mode energy vanished")]
    ModeEnergyVanished,
    #[error("redundant mode")]
    RedundantMode,
    #[error("mode {mode}: fixed point stagnated; corrections {corrections:?}")]
    Stagnation { mode: usize, corrections: Vec<f64> },
    #[error("mode {mode} has an identically zero large-time function")]
    ZeroTheta { mode: usize },
    #[error("history sweep failed at step {step}: {source}")]
    Sweep { step: usize, source: ModelError },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Grid(#[from] TimeGridError),
    #[error("{0}")]
    Setup(String),
}

impl From<LinalgError> for PgdError {
    fn from(e: LinalgError) -> Self {
        PgdError::Model(e.into())
    }
}

/// When the internal-variable histories are re-integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HistoryCoupling {
    /// After each converged fixed point (then the outer loop repeats).
    #[default]
    BetweenFixedPoints,
    /// After every alternating sweep.
    EverySweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PgdSettings {
    pub max_modes: usize,
    /// Relative correction norm ending the alternating sweeps.
    pub fixed_point_tol: f64,
    pub max_sweeps: usize,
    /// Sweeps without a new smallest correction before giving up.
    pub stagnation_window: usize,
    /// Relative change of the reconstructed history ending the outer loop.
    pub outer_tol: f64,
    pub max_outer: usize,
    /// A new mode with `ζ_m / ζ_1` below this ends the enrichment.
    pub zeta_ratio_tol: f64,
    /// Relative pivot threshold of the coefficient system.
    pub gram_tol: f64,
    pub coupling: HistoryCoupling,
}

impl Default for PgdSettings {
    fn default() -> Self {
        Self {
            max_modes: 3,
            fixed_point_tol: 1e-6,
            max_sweeps: 200,
            stagnation_window: 10,
            outer_tol: 1e-4,
            max_outer: 50,
            zeta_ratio_tol: 1e-8,
            gram_tol: 1e-10,
            coupling: HistoryCoupling::BetweenFixedPoints,
        }
    }
}

impl PgdSettings {
    pub fn validate(&self) -> Result<(), PgdError> {
        let positive = [self.fixed_point_tol, self.outer_tol, self.zeta_ratio_tol, self.gram_tol];
        if positive.iter().any(|v| !(*v > 0.0)) || self.max_sweeps == 0 || self.max_outer == 0 || self.max_modes == 0 {
            return Err(PgdError::Setup("PGD tolerances and iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// One separated term `ζ φ̂_h Π_j ϑ̂^(j)_{n_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode<T> {
    /// `N_τ` nodal vectors.
    pub phi: Vec<Vec<T>>,
    /// One function per large-time scale, `theta[j].len() == N_j`.
    pub theta: Vec<Vec<T>>,
    pub zeta: T,
}

impl<T: Scalar> Mode<T> {
    /// `Π_j ϑ^(j)_{n_j}` for 0-based indices.
    pub fn product(&self, multi: &[usize]) -> T {
        self.theta.iter().zip(multi).map(|(t, &n)| t[n]).fold(T::one(), |a, b| a * b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition<T> {
    pub grid: TimeGrid,
    pub n_dofs: usize,
    pub modes: Vec<Mode<T>>,
}

impl<T: Scalar> Decomposition<T> {
    pub fn new(grid: TimeGrid, n_dofs: usize) -> Self {
        Self { grid, n_dofs, modes: Vec::new() }
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Decomposition restricted to its first `m` modes.
    pub fn truncated(&self, m: usize) -> Self {
        Self { grid: self.grid.clone(), n_dofs: self.n_dofs, modes: self.modes[..m.min(self.modes.len())].to_vec() }
    }

    pub fn zetas(&self) -> Vec<T> {
        self.modes.iter().map(|m| m.zeta).collect()
    }

    /// Displacement at small-time node `h` of cycle `c` (both 0-based).
    pub fn slot(&self, h: usize, c: usize) -> Vec<T> {
        let multi = self.grid.multi_index(c);
        let mut u = vec![T::zero(); self.n_dofs];
        for m in &self.modes {
            let a = m.zeta * m.product(&multi);
            for (ui, &p) in u.iter_mut().zip(&m.phi[h]) {
                *ui += a * p;
            }
        }
        u
    }

    /// Displacement at a 0-based global step; shared cycle boundaries are
    /// read from the following cycle.
    pub fn step(&self, n: usize) -> Vec<T> {
        let (c, h) = self.grid.owner(n);
        self.slot(h, c)
    }

    pub fn reconstruct(&self, steps: &[usize]) -> Vec<Vec<T>> {
        steps.iter().map(|&n| self.step(n)).collect()
    }

    pub fn reconstruct_all(&self) -> Vec<Vec<T>> {
        (0..self.grid.n_steps()).map(|n| self.step(n)).collect()
    }

    /// `sqrt(Σ_n ‖u_n − r_n‖² / Σ_n ‖r_n‖²)` over the block steps.
    pub fn relative_l2(&self, reference: &[Vec<T>]) -> f64 {
        assert_eq!(reference.len(), self.grid.n_steps(), "reference must cover every block step");
        let (mut diff, mut total) = (0.0, 0.0);
        for (n, r) in reference.iter().enumerate() {
            for (a, b) in self.step(n).iter().zip(r) {
                let (a, b) = (a.as_f64(), b.as_f64());
                diff += (a - b) * (a - b);
                total += b * b;
            }
        }
        (diff / total).sqrt()
    }

    /// Mean over cycle boundaries of `‖u(N_τ, c) − u(1, c+1)‖`.
    pub fn mean_boundary_jump(&self) -> T {
        let nc = self.grid.n_cycles();
        if nc < 2 {
            return T::zero();
        }
        let last = self.grid.n_tau - 1;
        let mut total = T::zero();
        for c in 0..nc - 1 {
            let a = self.slot(last, c);
            let b = self.slot(0, c + 1);
            total += a.iter().zip(&b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt();
        }
        total / T::lit((nc - 1) as f64)
    }
}

/// `sqrt(Σ_h w_h φ_hᵀφ_h)`
pub fn space_time_norm<T: Scalar>(phi: &[Vec<T>], weights: &[f64]) -> T {
    phi.iter().zip(weights).map(|(p, &w)| T::lit(w) * dot(p, p)).sum::<T>().sqrt()
}

fn largest_entry_sign<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let mut best = T::zero();
    for v in values {
        if v.abs() > best.abs() {
            best = v;
        }
    }
    if best < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

/// Splits `φ Π ϑ^(j)` into unit-norm factors and their magnitude. The
/// largest entries of `φ̂` and of `ϑ̂^(j)`, `j ≥ 2`, are made positive; the
/// remaining sign stays in `ϑ̂^(1)`.
pub fn normalize_mode<T: Scalar>(
    phi: &[Vec<T>],
    theta: &[Vec<T>],
    weights: &[f64],
    mode: usize,
) -> Result<(Vec<Vec<T>>, Vec<Vec<T>>, T), PgdError> {
    let np = space_time_norm(phi, weights);
    if !(np > T::zero()) {
        return Err(PgdError::ModeEnergyVanished);
    }
    let mut scale = np;
    let mut sign = largest_entry_sign(phi.iter().flatten().copied());
    let phi_hat: Vec<Vec<T>> = phi.iter().map(|p| p.iter().map(|&v| v * sign / np).collect()).collect();
    let mut theta_hat = Vec::with_capacity(theta.len());
    for (j, t) in theta.iter().enumerate() {
        let nt = t.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(nt > T::zero()) {
            return Err(PgdError::ZeroTheta { mode });
        }
        scale *= nt;
        let s = if j == 0 { T::one() } else { largest_entry_sign(t.iter().copied()) };
        sign *= s;
        theta_hat.push(t.iter().map(|&v| v * s / nt).collect::<Vec<T>>());
    }
    // φ̂ and ϑ̂^(j≥2) were flipped by `sign` in total; undo it on ϑ̂^(1)
    for v in &mut theta_hat[0] {
        *v *= sign;
    }
    Ok((phi_hat, theta_hat, scale))
}

/// `K φ_h` for every `h`.
pub fn stiffness_times<T: Scalar>(k: &ProfileMatrix<T>, phi: &[Vec<T>]) -> Vec<Vec<T>> {
    phi.iter().map(|p| k.mul_vec(p)).collect()
}

/// Galerkin system for all `ζ` with normalized modes and frozen histories.
/// Returns the residual norm of the solved system. Negative coefficients
/// are made positive by flipping `ϑ̂^(1)`.
pub fn update_coefficients<T: Scalar>(
    decomp: &mut Decomposition<T>,
    k: &ProfileMatrix<T>,
    forcing: &Forcing<'_, T>,
    gram_tol: f64,
) -> Result<T, PgdError> {
    let m = decomp.modes.len();
    let w = decomp.grid.weights().to_vec();
    let kphi: Vec<Vec<Vec<T>>> = decomp.modes.iter().map(|md| stiffness_times(k, &md.phi)).collect();
    let mut a = vec![vec![T::zero(); m]; m];
    for l in 0..m {
        for q in 0..m {
            let space: T = (0..w.len()).map(|h| T::lit(w[h]) * dot(&decomp.modes[l].phi[h], &kphi[q][h])).sum();
            let time: T = decomp.modes[l]
                .theta
                .iter()
                .zip(&decomp.modes[q].theta)
                .map(|(x, y)| dot(x, y))
                .fold(T::one(), |p, v| p * v);
            a[l][q] = space * time;
        }
    }
    // symmetrize against roundoff before the Cholesky test
    for l in 0..m {
        for q in 0..l {
            let s = T::lit(0.5) * (a[l][q] + a[q][l]);
            a[l][q] = s;
            a[q][l] = s;
        }
    }
    let nc = decomp.grid.n_cycles();
    let multis: Vec<Vec<usize>> = (0..nc).map(|c| decomp.grid.multi_index(c)).collect();
    let b: Vec<T> = (0..m)
        .map(|l| {
            let md = &decomp.modes[l];
            let mut s = T::zero();
            for (h, &wh) in w.iter().enumerate() {
                for (c, multi) in multis.iter().enumerate() {
                    s += T::lit(wh) * md.product(multi) * forcing.dot(&md.phi[h], h, c);
                }
            }
            s
        })
        .collect();
    let zeta = cholesky_solve(&a, &b, T::lit(gram_tol)).map_err(|_| PgdError::RedundantMode)?;
    let mut res = T::zero();
    for l in 0..m {
        let r: T = (0..m).map(|q| a[l][q] * zeta[q]).sum::<T>() - b[l];
        res += r * r;
    }
    for (md, z) in decomp.modes.iter_mut().zip(zeta) {
        if z < T::zero() {
            for v in &mut md.theta[0] {
                *v = -*v;
            }
            md.zeta = -z;
        } else {
            md.zeta = z;
        }
    }
    Ok(res.sqrt())
}
