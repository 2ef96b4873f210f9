//! Alternating updates of one mode with frozen internal-variable histories.

use rayon::prelude::*;

use super::{Mode, PgdError};
use crate::linalg::{ProfileLu, ProfileMatrix};
use crate::scalar::{dot, Scalar};
use crate::time::{LoadProgram, TimeGrid};

/// Right-hand side `g_{h𝔫} = f_ext,h𝔫 + f_in,n` of the decoupled
/// equations, where `f_in` is the inelastic force of the frozen history at
/// the global step of `(h, 𝔫)`.
pub struct Forcing<'a, T> {
    pub grid: &'a TimeGrid,
    pub pattern: &'a [T],
    /// Inelastic force per global step.
    pub inelastic: &'a [Vec<T>],
    amps: Vec<T>,
}

impl<'a, T: Scalar> Forcing<'a, T> {
    pub fn new(grid: &'a TimeGrid, pattern: &'a [T], program: &LoadProgram, inelastic: &'a [Vec<T>]) -> Self {
        let mut amps = Vec::with_capacity(grid.n_tau * grid.n_cycles());
        for c in 0..grid.n_cycles() {
            let f = program.cycle_factor(grid, c);
            for &tau in grid.tau() {
                amps.push(T::lit(program.shape.value(tau / grid.period) * f));
            }
        }
        Self { grid, pattern, inelastic, amps }
    }

    pub fn amplitude(&self, h: usize, c: usize) -> T {
        self.amps[c * self.grid.n_tau + h]
    }

    fn history(&self, h: usize, c: usize) -> &[T] {
        &self.inelastic[self.grid.step(c, h)]
    }

    /// `vᵀ g_{hc}`
    pub fn dot(&self, v: &[T], h: usize, c: usize) -> T {
        self.amplitude(h, c) * dot(v, self.pattern) + dot(v, self.history(h, c))
    }

    /// `out += α g_{hc}`
    pub fn accumulate(&self, alpha: T, h: usize, c: usize, out: &mut [T]) {
        let a = alpha * self.amplitude(h, c);
        for ((o, &p), &f) in out.iter_mut().zip(self.pattern).zip(self.history(h, c)) {
            *o += a * p + alpha * f;
        }
    }

    pub fn g(&self, h: usize, c: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.pattern.len()];
        self.accumulate(T::one(), h, c, &mut out);
        out
    }
}

fn products<T: Scalar>(grid: &TimeGrid, theta: &[Vec<T>]) -> Vec<T> {
    (0..grid.n_cycles())
        .map(|c| grid.multi_index(c).iter().zip(theta).map(|(&n, t)| t[n]).fold(T::one(), |a, b| a * b))
        .collect()
}

fn sq_norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v)
}

/// Solves the small-time equations for `φ_h` at every `h` with the
/// large-time functions `theta` of the new mode frozen:
/// `S K φ_h = Σ_𝔫 P(𝔫) g_{h𝔫} − K Σ_i ζ_i φ̂^(i)_h c_i`, with
/// `P = Π_j ϑ^(j)`, `S = Σ P²` and `c_i = Σ P P_i`.
pub fn small_time_update<T: Scalar>(
    grid: &TimeGrid,
    lu: &ProfileLu<T>,
    forcing: &Forcing<'_, T>,
    prior: &[Mode<T>],
    theta: &[Vec<T>],
) -> Result<Vec<Vec<T>>, PgdError> {
    let s: T = theta.iter().map(|t| sq_norm(t)).fold(T::one(), |a, b| a * b);
    if !(s > T::zero()) {
        return Err(PgdError::VanishingTemporalAmplitude);
    }
    let p = products(grid, theta);
    let coupling: Vec<T> = prior
        .iter()
        .map(|m| m.zeta * theta.iter().zip(&m.theta).map(|(a, b)| dot(a, b)).fold(T::one(), |x, y| x * y) / s)
        .collect();
    let n_d = forcing.pattern.len();
    let phi = (0..grid.n_tau)
        .into_par_iter()
        .map(|h| {
            let mut rhs = vec![T::zero(); n_d];
            for (c, &pc) in p.iter().enumerate() {
                if pc != T::zero() {
                    forcing.accumulate(pc / s, h, c, &mut rhs);
                }
            }
            let mut x = lu.solve(&rhs);
            for (m, &ci) in prior.iter().zip(&coupling) {
                for (xi, &v) in x.iter_mut().zip(&m.phi[h]) {
                    *xi -= ci * v;
                }
            }
            x
        })
        .collect();
    Ok(phi)
}

/// Solves the large-time equations of scale `j` for every `n_j` with `φ`
/// and the other scales frozen, overwriting `theta[j]`.
pub fn large_time_update<T: Scalar>(
    grid: &TimeGrid,
    k: &ProfileMatrix<T>,
    forcing: &Forcing<'_, T>,
    prior: &[Mode<T>],
    phi: &[Vec<T>],
    theta: &mut [Vec<T>],
    j: usize,
) -> Result<(), PgdError> {
    let w = grid.weights();
    let kphi: Vec<Vec<T>> = phi.par_iter().map(|p| k.mul_vec(p)).collect();
    let energy: T = (0..grid.n_tau).map(|h| T::lit(w[h]) * dot(&phi[h], &kphi[h])).sum();
    let others: T = theta.iter().enumerate().filter(|(l, _)| *l != j).map(|(_, t)| sq_norm(t)).fold(T::one(), |a, b| a * b);
    let den = energy * others;
    if !(den > T::zero()) {
        return Err(PgdError::ModeEnergyVanished);
    }
    // Σ_h w_h φ_hᵀ K φ̂^(i)_h per prior mode
    let cross: Vec<T> = prior
        .iter()
        .map(|m| (0..grid.n_tau).map(|h| T::lit(w[h]) * dot(&kphi[h], &m.phi[h])).sum())
        .collect();
    let nc = grid.n_cycles();
    let multis: Vec<Vec<usize>> = (0..nc).map(|c| grid.multi_index(c)).collect();
    // B(c) = Σ_h w_h φ_hᵀ g_hc − Σ_i ζ_i P_i(c) cross_i
    let b: Vec<T> = multis
        .par_iter()
        .enumerate()
        .map(|(c, multi)| {
            let mut s: T = (0..grid.n_tau).map(|h| T::lit(w[h]) * forcing.dot(&phi[h], h, c)).sum();
            for (m, &x) in prior.iter().zip(&cross) {
                s -= m.zeta * m.product(multi) * x;
            }
            s
        })
        .collect();
    let mut num = vec![T::zero(); grid.scales[j]];
    for (multi, &bc) in multis.iter().zip(&b) {
        let q: T = theta.iter().enumerate().filter(|(l, _)| *l != j).map(|(l, t)| t[multi[l]]).fold(T::one(), |a, b| a * b);
        num[multi[j]] += q * bc;
    }
    theta[j] = num.into_iter().map(|v| v / den).collect();
    Ok(())
}

/// `Σ_h w_h Σ_𝔫 r_{h𝔫}ᵀ K⁻¹ r_{h𝔫}` with `r = g − K u` for the given
/// modes; the quantity the alternating updates decrease.
pub fn residual_energy<T: Scalar>(
    grid: &TimeGrid,
    k: &ProfileMatrix<T>,
    lu: &ProfileLu<T>,
    forcing: &Forcing<'_, T>,
    modes: &[Mode<T>],
) -> T {
    let w = grid.weights();
    (0..grid.n_cycles())
        .into_par_iter()
        .map(|c| {
            let multi = grid.multi_index(c);
            let mut total = T::zero();
            for h in 0..grid.n_tau {
                let mut u = vec![T::zero(); forcing.pattern.len()];
                for m in modes {
                    let a = m.zeta * m.product(&multi);
                    for (ui, &p) in u.iter_mut().zip(&m.phi[h]) {
                        *ui += a * p;
                    }
                }
                let g = forcing.g(h, c);
                let ku = k.mul_vec(&u);
                let r: Vec<T> = g.iter().zip(&ku).map(|(&a, &b)| a - b).collect();
                let kinv_g = lu.solve(&g);
                let v: Vec<T> = kinv_g.iter().zip(&u).map(|(&a, &b)| a - b).collect();
                total += T::lit(w[h]) * dot(&r, &v);
            }
            total
        })
        .sum()
}
