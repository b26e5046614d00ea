//! Grid search for the starting transverse field.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Schedule;
use crate::pimc::{sqa_anneal, PimcParams, TimeBoundary};
use crate::rng;
use crate::stats;
use crate::{Error, Result, SpinGlassInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gamma0Search {
    pub beta: f64,
    pub slices: usize,
    pub sweeps: usize,
    /// Anneals per instance and candidate.
    pub repetitions: usize,
    pub time_boundary: TimeBoundary,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma0Row {
    pub gamma0: f64,
    pub median_residual_per_spin: f64,
    pub q25: f64,
    pub q75: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gamma0Selection {
    pub best: f64,
    pub table: Vec<Gamma0Row>,
}

/// Picks the `Gamma0` with the lowest median per-spin residual energy at a
/// fixed sweep budget. `schedule_for(gamma0, sweeps)` builds the schedule of
/// each candidate; ties go to the smaller `Gamma0`.
pub fn optimize_gamma0<F>(
    instances: &[SpinGlassInstance],
    ground_energies: &[f64],
    grid: &[f64],
    search: &Gamma0Search,
    schedule_for: F,
) -> Result<Gamma0Selection>
where
    F: Fn(f64, usize) -> Result<Schedule> + Sync,
{
    if grid.is_empty() {
        return Err(Error::param("gamma0 grid is empty"));
    }
    if instances.is_empty() || instances.len() != ground_energies.len() {
        return Err(Error::param("need one ground energy per instance and at least one instance"));
    }
    if search.repetitions == 0 {
        return Err(Error::param("repetitions must be >= 1"));
    }
    let mut table = Vec::with_capacity(grid.len());
    for (gi, &gamma0) in grid.iter().enumerate() {
        let schedule = schedule_for(gamma0, search.sweeps)?;
        let jobs: Vec<(usize, usize)> = (0..instances.len())
            .flat_map(|i| (0..search.repetitions).map(move |r| (i, r)))
            .collect();
        let residuals: Vec<f64> = jobs
            .par_iter()
            .map(|&(i, r)| {
                let idx = ((gi * instances.len() + i) * search.repetitions + r) as u64;
                let mut p = PimcParams::new(schedule.clone(), search.beta, search.slices, rng::mix(search.seed, idx));
                p.time_boundary = search.time_boundary;
                let out = sqa_anneal(&instances[i], &p)?;
                Ok((out.energy - ground_energies[i]) / instances[i].num_spins() as f64)
            })
            .collect::<Result<_>>()?;
        table.push(Gamma0Row {
            gamma0,
            median_residual_per_spin: stats::median(&residuals),
            q25: stats::quantile(&residuals, 0.25),
            q75: stats::quantile(&residuals, 0.75),
            runs: residuals.len(),
        });
    }
    let best = table
        .iter()
        .min_by(|a, b| {
            a.median_residual_per_spin
                .total_cmp(&b.median_residual_per_spin)
                .then(a.gamma0.total_cmp(&b.gamma0))
        })
        .map(|r| r.gamma0)
        .expect("grid is non-empty");
    Ok(Gamma0Selection { best, table })
}
