use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::history::{sweep_internal_histories, InternalHistory, Seed};
use super::updates::{large_time_update, small_time_update, Forcing};
use super::{normalize_mode, space_time_norm, update_coefficients, Decomposition, HistoryCoupling, Mode, PgdError, PgdSettings};
use crate::linalg::{ProfileLu, ProfileMatrix};
use crate::model::StructuralModel;
use crate::scalar::{dot, Scalar};
use crate::time::{LoadProgram, TimeGrid};

/// Convergence record of one mode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeLog {
    pub mode: usize,
    /// Alternating sweeps of every outer iteration.
    pub sweeps: Vec<usize>,
    /// Last relative correction of every outer iteration.
    pub corrections: Vec<f64>,
    /// Relative change of the reconstructed history per outer iteration.
    pub history_changes: Vec<f64>,
    pub outer_converged: bool,
    pub zeta: f64,
    pub seconds: f64,
}

/// Fixed data of one decomposition run.
pub struct PgdContext<'a, T: Scalar, M: StructuralModel<T>> {
    pub model: &'a M,
    pub grid: &'a TimeGrid,
    pub program: &'a LoadProgram,
    pub settings: &'a PgdSettings,
    pub k: ProfileMatrix<T>,
    pub lu: ProfileLu<T>,
}

impl<'a, T: Scalar, M: StructuralModel<T>> PgdContext<'a, T, M> {
    pub fn new(model: &'a M, grid: &'a TimeGrid, program: &'a LoadProgram, settings: &'a PgdSettings) -> Result<Self, PgdError> {
        settings.validate()?;
        program.validate(grid)?;
        let k = model.elastic_stiffness();
        let lu = k.clone().factor()?;
        Ok(Self { model, grid, program, settings, k, lu })
    }

    pub fn forcing<'b>(&'b self, inelastic: &'b [Vec<T>]) -> Forcing<'b, T> {
        Forcing::new(self.grid, self.model.load_pattern(), self.program, inelastic)
    }
}

/// `⟨φ⊗ϑ, ψ⊗χ⟩` in the trapezoidal-in-τ, Euclidean-in-𝔫 product.
fn separated_inner<T: Scalar>(w: &[f64], phi: &[Vec<T>], theta: &[Vec<T>], psi: &[Vec<T>], chi: &[Vec<T>]) -> T {
    let space: T = phi.iter().zip(psi).zip(w).map(|((a, b), &wh)| T::lit(wh) * dot(a, b)).sum();
    theta.iter().zip(chi).map(|(a, b)| dot(a, b)).fold(space, |p, v| p * v)
}

fn relative_correction<T: Scalar>(w: &[f64], new: (&[Vec<T>], &[Vec<T>]), old: (&[Vec<T>], &[Vec<T>])) -> f64 {
    let nn = separated_inner(w, new.0, new.1, new.0, new.1).as_f64();
    let oo = separated_inner(w, old.0, old.1, old.0, old.1).as_f64();
    let no = separated_inner(w, new.0, new.1, old.0, old.1).as_f64();
    if nn <= 0.0 {
        return if oo <= 0.0 { 0.0 } else { 1.0 };
    }
    ((nn + oo - 2.0 * no).max(0.0) / nn).sqrt()
}

/// One alternating sweep: `φ` for the current `ϑ`, then every `ϑ^(j)` in
/// turn. Each `ϑ^(j)` is rescaled to unit norm with `φ` carrying the
/// magnitude.
fn sweep<T: Scalar, M: StructuralModel<T>>(
    ctx: &PgdContext<'_, T, M>,
    forcing: &Forcing<'_, T>,
    prior: &[Mode<T>],
    phi: &mut Vec<Vec<T>>,
    theta: &mut [Vec<T>],
) -> Result<(), PgdError> {
    *phi = small_time_update(ctx.grid, &ctx.lu, forcing, prior, theta)?;
    for j in 0..theta.len() {
        large_time_update(ctx.grid, &ctx.k, forcing, prior, phi, theta, j)?;
        let nt = dot(&theta[j], &theta[j]).sqrt();
        if !(nt > T::zero()) {
            return Err(PgdError::VanishingTemporalAmplitude);
        }
        theta[j].iter_mut().for_each(|v| *v /= nt);
        phi.iter_mut().flatten().for_each(|v| *v *= nt);
    }
    Ok(())
}

/// Alternating sweeps until the relative correction drops below the
/// tolerance. Returns the number of sweeps and the last correction.
fn fixed_point<T: Scalar, M: StructuralModel<T>>(
    ctx: &PgdContext<'_, T, M>,
    forcing: &Forcing<'_, T>,
    prior: &[Mode<T>],
    phi: &mut Vec<Vec<T>>,
    theta: &mut [Vec<T>],
    mode: usize,
    limit: usize,
) -> Result<(usize, f64), PgdError> {
    let s = ctx.settings;
    let w = ctx.grid.weights();
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for k in 1..=limit {
        let (old_phi, old_theta) = (phi.clone(), theta.to_vec());
        sweep(ctx, forcing, prior, phi, theta)?;
        let corr = relative_correction(w, (phi, theta), (&old_phi, &old_theta));
        history.push(corr);
        if corr < s.fixed_point_tol || k == limit && limit < s.max_sweeps {
            return Ok((k, corr));
        }
        if corr < best {
            best = corr;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= s.stagnation_window || k == s.max_sweeps {
            return Err(PgdError::Stagnation { mode, corrections: history });
        }
    }
    Ok((limit, history.last().copied().unwrap_or(0.0)))
}

fn history_change<T: Scalar>(new: &Decomposition<T>, old: &Decomposition<T>) -> f64 {
    let (mut diff, mut total) = (0.0, 0.0);
    for n in 0..new.grid.n_steps() {
        let a = new.step(n);
        let b = old.step(n);
        for (x, y) in a.iter().zip(&b) {
            let (x, y) = (x.as_f64(), y.as_f64());
            diff += (x - y) * (x - y);
            total += x * x;
        }
    }
    if total == 0.0 {
        return if diff == 0.0 { 0.0 } else { 1.0 };
    }
    (diff / total).sqrt()
}

/// Adds one mode to `decomp`, alternating between fixed points with frozen
/// histories and re-integration of `history` along the reconstruction.
/// `phi`/`theta` are the starting functions of the new mode.
pub fn enrich_mode<T: Scalar, M: StructuralModel<T>>(
    ctx: &PgdContext<'_, T, M>,
    decomp: &mut Decomposition<T>,
    history: &mut InternalHistory<T, M::Point>,
    mut phi: Vec<Vec<T>>,
    mut theta: Vec<Vec<T>>,
) -> Result<ModeLog, PgdError> {
    let s = ctx.settings;
    let start = Instant::now();
    let index = decomp.n_modes();
    let mut log = ModeLog { mode: index + 1, ..ModeLog::default() };
    let mut previous = decomp.clone();
    let limit = match s.coupling {
        HistoryCoupling::BetweenFixedPoints => s.max_sweeps,
        HistoryCoupling::EverySweep => 1,
    };
    for outer in 0..s.max_outer {
        let prior = decomp.modes[..index].to_vec();
        let forcing = ctx.forcing(&history.inelastic);
        let (sweeps, corr) = fixed_point(ctx, &forcing, &prior, &mut phi, &mut theta, index + 1, limit)?;
        log.sweeps.push(sweeps);
        log.corrections.push(corr);
        let (phi_hat, theta_hat, scale) = normalize_mode(&phi, &theta, ctx.grid.weights(), index + 1)?;
        let mode = Mode { phi: phi_hat, theta: theta_hat, zeta: scale };
        decomp.modes.truncate(index);
        decomp.modes.push(mode);
        update_coefficients(decomp, &ctx.k, &forcing, s.gram_tol)?;
        drop(forcing);
        *history = sweep_internal_histories(ctx.model, decomp, &history.start_points)?;
        let change = history_change(decomp, &previous);
        log.history_changes.push(change);
        previous = decomp.clone();
        // restart from the coefficient-scaled mode
        let m = &decomp.modes[index];
        phi = m.phi.iter().map(|p| p.iter().map(|&v| v * m.zeta).collect()).collect();
        theta = m.theta.clone();
        let swept_out = s.coupling == HistoryCoupling::BetweenFixedPoints || corr < s.fixed_point_tol;
        if outer > 0 && change < s.outer_tol && swept_out {
            log.outer_converged = true;
            break;
        }
    }
    log.zeta = decomp.modes[index].zeta.as_f64();
    log.seconds = start.elapsed().as_secs_f64();
    Ok(log)
}

/// Result of a full decomposition run.
#[derive(Debug, Clone)]
pub struct PgdRun<T, P> {
    pub decomposition: Decomposition<T>,
    /// Decomposition after each accepted mode.
    pub snapshots: Vec<Decomposition<T>>,
    pub history: InternalHistory<T, P>,
    pub logs: Vec<ModeLog>,
    pub stop_reason: String,
}

/// Builds the decomposition mode by mode from `seed`.
pub fn solve<T: Scalar, M: StructuralModel<T>>(
    model: &M,
    grid: &TimeGrid,
    program: &LoadProgram,
    seed: &Seed<T, M::Point>,
    settings: &PgdSettings,
) -> Result<PgdRun<T, M::Point>, PgdError> {
    let ctx = PgdContext::new(model, grid, program, settings)?;
    let n_d = model.n_dofs();
    if seed.trace.len() != grid.n_tau || seed.inelastic.len() != grid.n_steps() {
        return Err(PgdError::Setup("seed does not match the time grid".into()));
    }
    let mut decomp = Decomposition::new(grid.clone(), n_d);
    let mut history = InternalHistory {
        inelastic: seed.inelastic.clone(),
        dissipation: vec![T::zero(); grid.n_steps()],
        plastic_measure: vec![T::zero(); grid.n_steps()],
        start_points: seed.points0.clone(),
        final_points: seed.points0.clone(),
    };
    let ones: Vec<Vec<T>> = grid.scales.iter().map(|&s| vec![T::one(); s]).collect();
    let mut snapshots = Vec::new();
    let mut logs = Vec::new();
    let mut stop_reason = format!("reached {} modes", settings.max_modes);
    for index in 0..settings.max_modes {
        let phi = if index == 0 {
            seed.trace.clone()
        } else {
            let forcing = ctx.forcing(&history.inelastic);
            match small_time_update(grid, &ctx.lu, &forcing, &decomp.modes, &ones) {
                Ok(p) => p,
                Err(e) => {
                    stop_reason = format!("mode {}: {e}", index + 1);
                    break;
                }
            }
        };
        if index > 0 && space_time_norm(&phi, grid.weights()) == T::zero() {
            stop_reason = format!("mode {}: residual vanished", index + 1);
            break;
        }
        let backup = (decomp.clone(), history.clone());
        match enrich_mode(&ctx, &mut decomp, &mut history, phi, ones.clone()) {
            Ok(log) => logs.push(log),
            Err(e @ (PgdError::RedundantMode | PgdError::ModeEnergyVanished | PgdError::VanishingTemporalAmplitude | PgdError::ZeroTheta { .. }))
                if index > 0 =>
            {
                (decomp, history) = backup;
                stop_reason = format!("mode {}: {e}", index + 1);
                break;
            }
            Err(e) => return Err(e),
        }
        if index > 0 {
            let ratio = (decomp.modes[index].zeta / decomp.modes[0].zeta).as_f64();
            if ratio < settings.zeta_ratio_tol {
                // a negligible mode is discarded
                (decomp, history) = backup;
                logs.pop();
                stop_reason = format!("mode {}: ζ ratio {ratio:.3e} below tolerance", index + 1);
                break;
            }
        }
        snapshots.push(decomp.clone());
    }
    Ok(PgdRun { decomposition: decomp, snapshots, history, logs, stop_reason })
}
