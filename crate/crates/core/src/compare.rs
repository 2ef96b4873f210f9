//! Error reports between a reference history and a candidate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("histories differ in shape: {a_steps}×{a_dofs} vs {b_steps}×{b_dofs}")]
    Shape { a_steps: usize, a_dofs: usize, b_steps: usize, b_dofs: usize },
    #[error("selected dof {0} out of range")]
    Selection(usize),
    #[error("steps per cycle must divide the number of steps minus one")]
    Cycles,
}

/// Subset of the displacement vector entering the global measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    #[default]
    All,
    Dofs(Vec<usize>),
}

/// A derived scalar field compared separately (deflection, shear, …).
pub struct Quantity<'a> {
    pub name: &'a str,
    pub extract: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// `‖B − A‖ / ‖A‖` over all steps.
    pub relative_l2: f64,
    /// Largest `|B − A|` over steps and selected entries.
    pub max_pointwise: f64,
    /// Relative L2 error of every cycle.
    pub cycle_errors: Vec<f64>,
    /// `‖B − A‖` at the end of every cycle.
    pub cycle_end_jumps: Vec<f64>,
    pub quantities: BTreeMap<String, f64>,
}

fn ratio(diff: f64, total: f64) -> f64 {
    if total > 0.0 {
        (diff / total).sqrt()
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Compares candidate `b` against reference `a`, both one row per step.
pub fn compare(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    steps_per_cycle: usize,
    selection: &Selection,
    quantities: &[Quantity<'_>],
) -> Result<CompareReport, CompareError> {
    let dofs = |h: &[Vec<f64>]| h.first().map_or(0, Vec::len);
    if a.len() != b.len() || dofs(a) != dofs(b) || a.iter().chain(b).any(|r| r.len() != dofs(a)) {
        return Err(CompareError::Shape { a_steps: a.len(), a_dofs: dofs(a), b_steps: b.len(), b_dofs: dofs(b) });
    }
    if steps_per_cycle == 0 || a.is_empty() || !(a.len() - 1).is_multiple_of(steps_per_cycle) {
        return Err(CompareError::Cycles);
    }
    let idx: Vec<usize> = match selection {
        Selection::All => (0..dofs(a)).collect(),
        Selection::Dofs(d) => {
            if let Some(&bad) = d.iter().find(|&&i| i >= dofs(a)) {
                return Err(CompareError::Selection(bad));
            }
            d.clone()
        }
    };
    let step_sums: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .map(|(ra, rb)| idx.iter().fold((0.0, 0.0), |(d, t), &i| (d + (rb[i] - ra[i]).powi(2), t + ra[i] * ra[i])))
        .collect();
    let (diff, total) = step_sums.iter().fold((0.0, 0.0), |(d, t), s| (d + s.0, t + s.1));
    let max_pointwise = a
        .iter()
        .zip(b)
        .flat_map(|(ra, rb)| idx.iter().map(move |&i| (rb[i] - ra[i]).abs()))
        .fold(0.0, f64::max);
    let m = steps_per_cycle;
    let n_cycles = (a.len() - 1) / m;
    let cycle_errors = (0..n_cycles)
        .map(|c| {
            let (d, t) = step_sums[c * m..=(c + 1) * m].iter().fold((0.0, 0.0), |(d, t), s| (d + s.0, t + s.1));
            ratio(d, t)
        })
        .collect();
    let cycle_end_jumps = (1..=n_cycles).map(|c| step_sums[c * m].0.sqrt()).collect();
    let quantities = quantities
        .iter()
        .map(|q| {
            let (mut d, mut t) = (0.0, 0.0);
            for (ra, rb) in a.iter().zip(b) {
                let (qa, qb) = ((q.extract)(ra), (q.extract)(rb));
                for (x, y) in qa.iter().zip(&qb) {
                    d += (y - x) * (y - x);
                    t += x * x;
                }
            }
            (q.name.to_string(), ratio(d, t))
        })
        .collect();
    Ok(CompareReport { relative_l2: ratio(diff, total), max_pointwise, cycle_errors, cycle_end_jumps, quantities })
}
