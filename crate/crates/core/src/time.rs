//! Multi-scale time grid and cyclic load programs.
//!
//! One cycle holds `N_τ` small-time nodes on `[0, T]`; cycles are counted by
//! `S` large-time indices `n_1 … n_S` with `n_1` running fastest. The global
//! step of `(h, n_1 … n_S)` (all 1-based) is
//! `n = (N_τ − 1)[(n_1 − 1) + (n_2 − 1)N_1 + …] + h`, so the last node of one
//! cycle and the first node of the next share a step. That shared step is
//! owned by the first node of the following cycle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeGridError {
    #[error("need at least two small-time nodes, got {0}")]
    TooFewNodes(usize),
    #[error("large-time scale sizes must be at least 1")]
    EmptyScale,
    #[error("period must be positive")]
    Period,
    #[error("index out of range: h = {h}, n = {n:?}")]
    OutOfRange { h: usize, n: Vec<usize> },
    #[error("load shape needs breakpoints from 0 to 1 with increasing abscissae")]
    Shape,
    #[error("cycle factors must provide one list per scale with matching lengths")]
    Factors,
    #[error("separable cycle factors need a shape that vanishes at both cycle ends")]
    Periodicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub n_tau: usize,
    pub period: f64,
    pub scales: Vec<usize>,
    tau: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    pub fn new(n_tau: usize, scales: Vec<usize>, period: f64) -> Result<Self, TimeGridError> {
        if n_tau < 2 {
            return Err(TimeGridError::TooFewNodes(n_tau));
        }
        if scales.is_empty() || scales.contains(&0) {
            return Err(TimeGridError::EmptyScale);
        }
        if !(period > 0.0) {
            return Err(TimeGridError::Period);
        }
        let dt = period / (n_tau - 1) as f64;
        let tau: Vec<f64> = (0..n_tau).map(|h| if h + 1 == n_tau { period } else { h as f64 * dt }).collect();
        // trapezoidal weights
        let weights = (0..n_tau).map(|h| if h == 0 || h + 1 == n_tau { 0.5 * dt } else { dt }).collect();
        Ok(Self { n_tau, period, scales, tau, weights })
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn n_cycles(&self) -> usize {
        self.scales.iter().product()
    }

    pub fn steps_per_cycle(&self) -> usize {
        self.n_tau - 1
    }

    /// `N_t = (N_τ − 1) N_cyc + 1`
    pub fn n_steps(&self) -> usize {
        self.steps_per_cycle() * self.n_cycles() + 1
    }

    /// Pseudo-time and 1-based step number of `(h, n_1 … n_S)`, all 1-based.
    pub fn time_index(&self, h: usize, n: &[usize]) -> Result<(f64, usize), TimeGridError> {
        let bad = || TimeGridError::OutOfRange { h, n: n.to_vec() };
        if h == 0 || h > self.n_tau || n.len() != self.scales.len() {
            return Err(bad());
        }
        if n.iter().zip(&self.scales).any(|(&v, &s)| v == 0 || v > s) {
            return Err(bad());
        }
        let c = self.cycle_of(&n.iter().map(|v| v - 1).collect::<Vec<_>>());
        Ok((c as f64 * self.period + self.tau[h - 1], self.steps_per_cycle() * c + h))
    }

    /// 0-based cycle number of 0-based large-time indices.
    pub fn cycle_of(&self, n0: &[usize]) -> usize {
        let mut c = 0;
        let mut stride = 1;
        for (&v, &s) in n0.iter().zip(&self.scales) {
            c += v * stride;
            stride *= s;
        }
        c
    }

    /// 0-based large-time indices of a 0-based cycle number.
    pub fn multi_index(&self, mut c: usize) -> Vec<usize> {
        self.scales
            .iter()
            .map(|&s| {
                let v = c % s;
                c /= s;
                v
            })
            .collect()
    }

    /// 0-based step of 0-based `(cycle, h)`.
    pub fn step(&self, cycle: usize, h0: usize) -> usize {
        self.steps_per_cycle() * cycle + h0
    }

    /// Owning `(cycle, h)` (0-based) of a 0-based step. Shared cycle
    /// boundaries belong to the following cycle, except the final step.
    pub fn owner(&self, step: usize) -> (usize, usize) {
        let m = self.steps_per_cycle();
        if step + 1 == self.n_steps() {
            (self.n_cycles() - 1, m)
        } else {
            (step / m, step % m)
        }
    }
}

/// Number of unknowns of the step-by-step solution and of an `M`-mode
/// decomposition: `N_d (N_τ − 1) Π N_j` and `M N_d N_τ + M Σ N_j`.
pub fn dof_counts(grid: &TimeGrid, n_d: u64, modes: u64) -> (u64, u64) {
    let cycles: u64 = grid.scales.iter().map(|&s| s as u64).product();
    let sum: u64 = grid.scales.iter().map(|&s| s as u64).sum();
    let inc = n_d * (grid.n_tau as u64 - 1) * cycles;
    (inc, modes * n_d * grid.n_tau as u64 + modes * sum)
}

/// Piecewise-linear amplitude over one cycle; abscissae are fractions of
/// the period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadShape {
    pub points: Vec<(f64, f64)>,
}

impl LoadShape {
    pub fn validate(&self) -> Result<(), TimeGridError> {
        let p = &self.points;
        if p.len() < 2 || p[0].0 != 0.0 || p[p.len() - 1].0 != 1.0 || p.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(TimeGridError::Shape);
        }
        Ok(())
    }

    pub fn value(&self, frac: f64) -> f64 {
        let p = &self.points;
        let i = p.partition_point(|q| q.0 <= frac).clamp(1, p.len() - 1);
        let (a, b) = (p[i - 1], p[i]);
        a.1 + (b.1 - a.1) * (frac - a.0) / (b.0 - a.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(p.1.abs()))
    }

    pub fn is_periodic(&self) -> bool {
        self.points[0].1 == self.points[self.points.len() - 1].1
    }
}

/// Load amplitude for every step: a per-cycle shape, optionally scaled per
/// cycle by a product of per-scale factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProgram {
    pub shape: LoadShape,
    /// One list of `N_j` factors per large-time scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_factors: Option<Vec<Vec<f64>>>,
}

impl LoadProgram {
    pub fn constant(shape: LoadShape) -> Self {
        Self { shape, cycle_factors: None }
    }

    pub fn validate(&self, grid: &TimeGrid) -> Result<(), TimeGridError> {
        self.shape.validate()?;
        if let Some(f) = &self.cycle_factors {
            if f.len() != grid.n_scales() || f.iter().zip(&grid.scales).any(|(v, &s)| v.len() != s) {
                return Err(TimeGridError::Factors);
            }
            let p = &self.shape.points;
            if p[0].1 != 0.0 || p[p.len() - 1].1 != 0.0 {
                return Err(TimeGridError::Periodicity);
            }
        }
        Ok(())
    }

    pub fn cycle_factor(&self, grid: &TimeGrid, cycle: usize) -> f64 {
        match &self.cycle_factors {
            None => 1.0,
            Some(f) => grid.multi_index(cycle).iter().zip(f).map(|(&n, fj)| fj[n]).product(),
        }
    }

    /// Amplitude at every step of `grid` (length `N_t`).
    pub fn amplitudes(&self, grid: &TimeGrid) -> Vec<f64> {
        (0..grid.n_steps())
            .map(|n| {
                let (c, h) = grid.owner(n);
                self.shape.value(grid.tau()[h] / grid.period) * self.cycle_factor(grid, c)
            })
            .collect()
    }

    /// Warm-up cycles followed by the block of `grid`, as one step-by-step
    /// program (block step `n` is step `warmup (N_τ − 1) + n`).
    pub fn with_warmup(&self, grid: &TimeGrid, warmup: usize) -> Vec<f64> {
        if warmup == 0 {
            return self.amplitudes(grid);
        }
        let mut a = self.plain_amplitudes(grid.n_tau, warmup);
        a.extend(self.amplitudes(grid).into_iter().skip(1));
        a
    }

    /// Amplitudes of `cycles` plain cycles (no factors), for step-by-step
    /// phases outside the decomposed block.
    pub fn plain_amplitudes(&self, n_tau: usize, cycles: usize) -> Vec<f64> {
        let m = n_tau - 1;
        (0..=m * cycles)
            .map(|n| {
                let h = if n > 0 && n % m == 0 { m } else { n % m };
                self.shape.value(h as f64 / m as f64)
            })
            .collect()
    }
}
