//! Internal-variable histories of the decomposed block.

use serde::{Deserialize, Serialize};

use super::{Decomposition, PgdError};
use crate::incremental::{HistoryRecord, IncrementalSolver, SolverSettings};
use crate::model::StructuralModel;
use crate::scalar::Scalar;
use crate::time::{LoadProgram, TimeGrid};

/// Inelastic forces and dissipation along the block, one entry per global
/// step (step 0 is the starting state).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize, P: Serialize", deserialize = "T: Scalar, P: serde::de::DeserializeOwned"))]
pub struct InternalHistory<T, P> {
    pub inelastic: Vec<Vec<T>>,
    /// Physical dissipation of each step; zero at step 0.
    pub dissipation: Vec<T>,
    /// Cumulative plastic measure.
    pub plastic_measure: Vec<T>,
    pub start_points: Vec<P>,
    pub final_points: Vec<P>,
}

impl<T: Scalar, P> InternalHistory<T, P> {
    pub fn n_steps(&self) -> usize {
        self.inelastic.len()
    }

    pub fn total_dissipation(&self) -> T {
        self.dissipation.iter().copied().sum()
    }
}

/// Integrates the constitutive laws step by step along the displacements
/// of `decomp`, starting from `start_points`. The displacement of step 0 is
/// not used: the starting state is taken as given.
pub fn sweep_internal_histories<T: Scalar, M: StructuralModel<T>>(
    model: &M,
    decomp: &Decomposition<T>,
    start_points: &[M::Point],
) -> Result<InternalHistory<T, M::Point>, PgdError> {
    let n_t = decomp.grid.n_steps();
    let mut inelastic = Vec::with_capacity(n_t);
    let mut dissipation = Vec::with_capacity(n_t);
    let mut plastic = Vec::with_capacity(n_t);
    inelastic.push(model.inelastic_force(start_points));
    dissipation.push(T::zero());
    plastic.push(model.plastic_measure(start_points));
    let mut prev_d = model.dissipation(start_points).physical;
    let mut points = start_points.to_vec();
    for n in 1..n_t {
        let u = decomp.step(n);
        let ev = model.evaluate(&u, &points, false).map_err(|source| PgdError::Sweep { step: n, source })?;
        points = ev.points;
        let d = model.dissipation(&points).physical;
        dissipation.push(d - prev_d);
        prev_d = d;
        plastic.push(model.plastic_measure(&points));
        inelastic.push(model.inelastic_force(&points));
    }
    Ok(InternalHistory { inelastic, dissipation, plastic_measure: plastic, start_points: start_points.to_vec(), final_points: points })
}

/// Starting point of the decomposition: the state after the step-by-step
/// warm-up cycles, the displacement trace of the last warm-up cycle and a
/// periodically extrapolated inelastic-force history for the block.
#[derive(Debug, Clone)]
pub struct Seed<T, P> {
    pub u0: Vec<T>,
    pub points0: Vec<P>,
    /// `N_τ` displacements.
    pub trace: Vec<Vec<T>>,
    /// Initial guess of `f_in` per block step.
    pub inelastic: Vec<Vec<T>>,
    pub warmup: Option<HistoryRecord<T, P>>,
}

/// Runs `warmup_cycles` plain cycles step by step and builds the seed.
/// Without warm-up the trace is the elastic response of one cycle and the
/// inelastic force is zero throughout.
pub fn initial_guess<T: Scalar, M: StructuralModel<T>>(
    model: &M,
    solver: &SolverSettings,
    program: &LoadProgram,
    grid: &TimeGrid,
    warmup_cycles: usize,
) -> Result<Seed<T, M::Point>, PgdError> {
    let m = grid.steps_per_cycle();
    let n_t = grid.n_steps();
    let n_d = model.n_dofs();
    let pattern = model.load_pattern();
    if warmup_cycles == 0 {
        let lu = model.elastic_stiffness().factor()?;
        let trace = (0..grid.n_tau)
            .map(|h| {
                let a = T::lit(program.shape.value(grid.tau()[h] / grid.period));
                lu.solve(&pattern.iter().map(|&p| a * p).collect::<Vec<T>>())
            })
            .collect::<Vec<_>>();
        let points0 = model.initial_points();
        let f0 = model.inelastic_force(&points0);
        let a0 = T::lit(program.shape.value(0.0));
        if a0 != T::zero() {
            return Err(PgdError::Setup("a block starting from rest needs a load that starts at zero".into()));
        }
        return Ok(Seed { u0: vec![T::zero(); n_d], points0, trace, inelastic: vec![f0; n_t], warmup: None });
    }
    let mut settings = solver.clone();
    settings.state_ring = settings.state_ring.max(grid.n_tau);
    let inc = IncrementalSolver::new(model, settings)?;
    let amps: Vec<T> = program.plain_amplitudes(grid.n_tau, warmup_cycles).into_iter().map(T::lit).collect();
    let rec = inc.run_history(&amps, m)?;
    let last = rec.n_steps() - 1;
    let trace = rec.displacements[last - m..=last].to_vec();
    let ring: Vec<Vec<T>> = rec
        .recent_states
        .iter()
        .skip(rec.recent_states.len() - grid.n_tau)
        .map(|(_, p)| model.inelastic_force(p))
        .collect();
    let f_end = &ring[m];
    let drift: Vec<T> = f_end.iter().zip(&ring[0]).map(|(&a, &b)| a - b).collect();
    let inelastic = (0..n_t)
        .map(|n| {
            let (c, h) = if n + 1 == n_t && n > 0 { (n / m - 1, m) } else { (n / m, n % m) };
            let c = T::lit(c as f64);
            (0..n_d).map(|i| f_end[i] + c * drift[i] + ring[h][i] - ring[0][i]).collect()
        })
        .collect();
    Ok(Seed { u0: rec.displacements[last].clone(), points0: rec.final_states().to_vec(), trace, inelastic, warmup: Some(rec) })
}
