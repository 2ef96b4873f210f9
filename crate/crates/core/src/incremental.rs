//! Step-by-step Newton–Raphson solution of the incremental problem.
//!
//! The reference solution every reduced run is judged against, and the
//! source of the PGD starting cycles.

use std::collections::VecDeque;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::ProfileLu;
use crate::model::{ModelError, StructuralModel};
use crate::scalar::{dot, norm, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TangentMode {
    #[default]
    Consistent,
    ConstantElastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Residual tolerance relative to the external force.
    pub newton_tol: f64,
    /// Fraction of the peak external force used as the reference when the
    /// current load is smaller (unloaded steps).
    pub floor_fraction: f64,
    pub max_newton_iters: usize,
    pub line_search: bool,
    pub tangent: TangentMode,
    /// Maximum depth of load-increment halving after a failed step.
    pub max_bisections: usize,
    /// Number of most recent steps whose point states are kept.
    pub state_ring: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            newton_tol: 1e-8,
            floor_fraction: 1e-2,
            max_newton_iters: 25,
            line_search: false,
            tangent: TangentMode::Consistent,
            max_bisections: 6,
            state_ring: 0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.newton_tol > 0.0) || !(self.floor_fraction > 0.0) || self.max_newton_iters == 0 {
            return Err(SolverError::Settings);
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Newton iteration diverged; residual trace {residuals:?}")]
    Divergence { residuals: Vec<f64> },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<SolverError> },
    #[error("invalid solver settings")]
    Settings,
    #[error("load program needs at least one step")]
    EmptyProgram,
}

/// Convergence record of one load step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepInfo {
    pub iterations: usize,
    pub bisections: usize,
    /// Residual norms of the last Newton solve.
    pub residuals: Vec<f64>,
}

/// Converged state after one step.
#[derive(Debug, Clone)]
pub struct StepOutcome<T, P> {
    pub u: Vec<T>,
    pub points: Vec<P>,
    /// `Σ f_ext · Δu` over the (sub)steps taken.
    pub work: T,
    /// Numerical dissipation in linear members over the (sub)steps.
    pub linear_dissipation: T,
    pub info: StepInfo,
}

/// Full time history produced by a step-by-step run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize, P: Serialize", deserialize = "T: Scalar, P: serde::de::DeserializeOwned"))]
pub struct HistoryRecord<T, P> {
    pub n_dofs: usize,
    pub steps_per_cycle: usize,
    pub displacements: Vec<Vec<T>>,
    pub load_factors: Vec<T>,
    pub external_work: Vec<T>,
    pub stored_energy: Vec<T>,
    pub dissipation_physical: Vec<T>,
    pub dissipation_algorithmic: Vec<T>,
    pub plastic_measure: Vec<T>,
    pub iterations: Vec<u32>,
    pub bisections: Vec<u32>,
    /// Point states at every cycle boundary (steps `0, m, 2m, …`).
    pub boundary_states: Vec<Vec<P>>,
    /// `(step, states)` for the most recent steps.
    pub recent_states: VecDeque<(usize, Vec<P>)>,
}

impl<T: Scalar, P: Clone> HistoryRecord<T, P> {
    pub fn n_steps(&self) -> usize {
        self.displacements.len()
    }

    pub fn n_cycles(&self) -> usize {
        (self.n_steps() - 1) / self.steps_per_cycle
    }

    pub fn final_states(&self) -> &[P] {
        &self.recent_states.back().expect("history holds at least one state").1
    }

    /// `W − ψ − D_phys − D_alg` at a step.
    pub fn energy_residual(&self, step: usize) -> T {
        self.external_work[step]
            - self.stored_energy[step]
            - self.dissipation_physical[step]
            - self.dissipation_algorithmic[step]
    }

    /// Largest energy residual at a cycle boundary relative to the work
    /// input of that cycle.
    pub fn worst_cycle_energy_error(&self) -> f64 {
        let m = self.steps_per_cycle;
        (1..=self.n_cycles())
            .map(|c| {
                let (a, b) = ((c - 1) * m, c * m);
                let mut input = T::zero();
                for n in a + 1..=b {
                    input += (self.external_work[n] - self.external_work[n - 1]).abs();
                }
                let drift = (self.energy_residual(b) - self.energy_residual(a)).abs();
                (drift / input.max(T::min_positive_value())).as_f64()
            })
            .fold(0.0, f64::max)
    }
}

/// Newton solver bound to one structural model.
pub struct IncrementalSolver<'a, T: Scalar, M: StructuralModel<T>> {
    pub model: &'a M,
    pub settings: SolverSettings,
    elastic: OnceLock<Result<ProfileLu<T>, SolverError>>,
    k_max: OnceLock<T>,
}

impl<'a, T: Scalar, M: StructuralModel<T>> IncrementalSolver<'a, T, M> {
    pub fn new(model: &'a M, settings: SolverSettings) -> Result<Self, SolverError> {
        settings.validate()?;
        Ok(Self { model, settings, elastic: OnceLock::new(), k_max: OnceLock::new() })
    }

    fn elastic_lu(&self) -> Result<&ProfileLu<T>, SolverError> {
        self.elastic
            .get_or_init(|| self.model.elastic_stiffness().factor().map_err(|e| SolverError::Model(e.into())))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn residual(&self, u: &[T], prev: &[M::Point], f_ext: &[T], tangent: bool) -> Result<(Vec<T>, crate::model::Evaluation<T, M::Point>), SolverError> {
        let ev = self.model.evaluate(u, prev, tangent)?;
        let r = f_ext.iter().zip(&ev.internal_force).map(|(&a, &b)| a - b).collect();
        Ok((r, ev))
    }

    /// One Newton solve from `(u_prev, prev)` to equilibrium with `f_ext`.
    /// `force_scale` is the peak external force norm of the program.
    pub fn solve_step(
        &self,
        u_prev: &[T],
        prev: &[M::Point],
        f_ext: &[T],
        force_scale: T,
    ) -> Result<StepOutcome<T, M::Point>, SolverError> {
        let s = &self.settings;
        let consistent = s.tangent == TangentMode::Consistent;
        let reference = norm(f_ext).max(T::lit(s.floor_fraction) * force_scale);
        let rel_tol = T::lit(s.newton_tol) * reference;
        // residuals of stiff members bottom out at roundoff of K u
        let k_max = *self.k_max.get_or_init(|| self.model.elastic_stiffness().max_abs());
        let roundoff = |u: &[T]| T::lit(16.0) * T::epsilon() * k_max * u.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut u = u_prev.to_vec();
        let mut residuals = Vec::new();
        let (mut r, mut ev) = self.residual(&u, prev, f_ext, consistent)?;
        for it in 0..=s.max_newton_iters {
            let rn = norm(&r);
            residuals.push(rn.as_f64());
            // an exactly balanced trial state is accepted even with tol = 0
            if rn <= rel_tol.max(roundoff(&u)) || rn == T::zero() {
                let du: Vec<T> = u.iter().zip(u_prev).map(|(&a, &b)| a - b).collect();
                return Ok(StepOutcome {
                    work: dot(f_ext, &du),
                    linear_dissipation: self.model.linear_step_dissipation(&du),
                    u,
                    points: ev.points,
                    info: StepInfo { iterations: it, bisections: 0, residuals },
                });
            }
            if !rn.is_finite() || it == s.max_newton_iters {
                break;
            }
            let du = match ev.tangent.take() {
                Some(k) => match k.factor() {
                    Ok(lu) => lu.solve(&r),
                    Err(_) => break,
                },
                None => self.elastic_lu()?.solve(&r),
            };
            let mut alpha = T::one();
            loop {
                let trial: Vec<T> = u.iter().zip(&du).map(|(&a, &d)| a + alpha * d).collect();
                let next = match self.residual(&trial, prev, f_ext, consistent) {
                    Ok(x) => x,
                    Err(SolverError::Model(ModelError::Material { .. })) if s.line_search && alpha > T::lit(0.04) => {
                        alpha *= T::lit(0.5);
                        continue;
                    }
                    Err(SolverError::Model(ModelError::Material { .. })) => {
                        return Err(SolverError::Divergence { residuals });
                    }
                    Err(e) => return Err(e),
                };
                if s.line_search && norm(&next.0) > rn && alpha > T::lit(0.04) {
                    alpha *= T::lit(0.5);
                    continue;
                }
                u = trial;
                (r, ev) = next;
                break;
            }
        }
        Err(SolverError::Divergence { residuals })
    }

    /// [`solve_step`](Self::solve_step) with recursive halving of the load
    /// increment when Newton fails.
    pub fn solve_increment(
        &self,
        u_prev: &[T],
        prev: &[M::Point],
        f_prev: &[T],
        f_ext: &[T],
        force_scale: T,
    ) -> Result<StepOutcome<T, M::Point>, SolverError> {
        self.bisect(u_prev, prev, f_prev, f_ext, force_scale, 0)
    }

    fn bisect(
        &self,
        u_prev: &[T],
        prev: &[M::Point],
        f_prev: &[T],
        f_ext: &[T],
        force_scale: T,
        depth: usize,
    ) -> Result<StepOutcome<T, M::Point>, SolverError> {
        match self.solve_step(u_prev, prev, f_ext, force_scale) {
            Err(SolverError::Divergence { .. }) if depth < self.settings.max_bisections => {
                let mid: Vec<T> = f_prev.iter().zip(f_ext).map(|(&a, &b)| T::lit(0.5) * (a + b)).collect();
                let first = self.bisect(u_prev, prev, f_prev, &mid, force_scale, depth + 1)?;
                let second = self.bisect(&first.u, &first.points, &mid, f_ext, force_scale, depth + 1)?;
                Ok(StepOutcome {
                    work: first.work + second.work,
                    linear_dissipation: first.linear_dissipation + second.linear_dissipation,
                    info: StepInfo {
                        iterations: first.info.iterations + second.info.iterations,
                        bisections: 1 + first.info.bisections + second.info.bisections,
                        residuals: second.info.residuals,
                    },
                    u: second.u,
                    points: second.points,
                })
            }
            other => other,
        }
    }

    /// Runs the load program `amplitudes` (one value per step, the first
    /// being the starting state) from rest in the virgin state.
    pub fn run_history(&self, amplitudes: &[T], steps_per_cycle: usize) -> Result<HistoryRecord<T, M::Point>, SolverError> {
        let u0 = vec![T::zero(); self.model.n_dofs()];
        self.run_inner(&u0, self.model.initial_points(), amplitudes, steps_per_cycle, true)
    }

    /// Continues from a converged state `(u0, points0)` that is in
    /// equilibrium with `amplitudes[0]`.
    pub fn run_from(
        &self,
        u0: &[T],
        points0: Vec<M::Point>,
        amplitudes: &[T],
        steps_per_cycle: usize,
    ) -> Result<HistoryRecord<T, M::Point>, SolverError> {
        self.run_inner(u0, points0, amplitudes, steps_per_cycle, false)
    }

    fn run_inner(
        &self,
        u0: &[T],
        points0: Vec<M::Point>,
        amplitudes: &[T],
        steps_per_cycle: usize,
        preload: bool,
    ) -> Result<HistoryRecord<T, M::Point>, SolverError> {
        if amplitudes.is_empty() || steps_per_cycle == 0 {
            return Err(SolverError::EmptyProgram);
        }
        let model = self.model;
        let pattern = model.load_pattern();
        let peak = amplitudes.iter().fold(T::zero(), |m, a| m.max(a.abs())) * norm(pattern);
        let force = |a: T| pattern.iter().map(|&p| a * p).collect::<Vec<T>>();
        let n = amplitudes.len();
        let mut work0 = T::zero();
        let mut linear_dissipation = T::zero();
        let (u0, points0) = if preload && amplitudes[0] != T::zero() {
            // bring the structure from rest to the first amplitude
            let zero = vec![T::zero(); pattern.len()];
            let out = self
                .solve_increment(u0, &points0, &zero, &force(amplitudes[0]), peak)
                .map_err(|e| SolverError::Step { step: 0, source: Box::new(e) })?;
            work0 = out.work;
            linear_dissipation = out.linear_dissipation;
            (out.u, out.points)
        } else {
            (u0.to_vec(), points0)
        };
        let u0 = &u0[..];
        let d0 = model.dissipation(&points0);
        let mut rec = HistoryRecord {
            n_dofs: model.n_dofs(),
            steps_per_cycle,
            displacements: Vec::with_capacity(n),
            load_factors: amplitudes.to_vec(),
            external_work: Vec::with_capacity(n),
            stored_energy: Vec::with_capacity(n),
            dissipation_physical: Vec::with_capacity(n),
            dissipation_algorithmic: Vec::with_capacity(n),
            plastic_measure: Vec::with_capacity(n),
            iterations: Vec::with_capacity(n),
            bisections: Vec::with_capacity(n),
            boundary_states: vec![points0.clone()],
            recent_states: VecDeque::new(),
        };
        // energies are counted from the starting state
        let psi0 = model.stored_energy(u0, &points0);
        rec.displacements.push(u0.to_vec());
        if preload {
            rec.external_work.push(work0);
        } else {
            rec.external_work.push(psi0 + d0.physical + d0.algorithmic + linear_dissipation);
        }
        rec.stored_energy.push(psi0);
        rec.dissipation_physical.push(d0.physical);
        rec.dissipation_algorithmic.push(d0.algorithmic + linear_dissipation);
        rec.plastic_measure.push(model.plastic_measure(&points0));
        rec.iterations.push(0);
        rec.bisections.push(0);
        let ring = self.settings.state_ring.max(1);
        rec.recent_states.push_back((0, points0.clone()));

        let mut points = points0;
        for step in 1..n {
            let f_prev = force(amplitudes[step - 1]);
            let f = force(amplitudes[step]);
            let u_prev = &rec.displacements[step - 1];
            let out = self
                .solve_increment(u_prev, &points, &f_prev, &f, peak)
                .map_err(|e| SolverError::Step { step, source: Box::new(e) })?;
            linear_dissipation += out.linear_dissipation;
            let d = model.dissipation(&out.points);
            rec.external_work.push(rec.external_work[step - 1] + out.work);
            rec.stored_energy.push(model.stored_energy(&out.u, &out.points));
            rec.dissipation_physical.push(d.physical);
            rec.dissipation_algorithmic.push(d.algorithmic + linear_dissipation);
            rec.plastic_measure.push(model.plastic_measure(&out.points));
            rec.iterations.push(out.info.iterations as u32);
            rec.bisections.push(out.info.bisections as u32);
            rec.displacements.push(out.u);
            points = out.points;
            if step % steps_per_cycle == 0 {
                rec.boundary_states.push(points.clone());
            }
            if rec.recent_states.len() == ring {
                rec.recent_states.pop_front();
            }
            rec.recent_states.push_back((step, points.clone()));
        }
        Ok(rec)
    }
}
