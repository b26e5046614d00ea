//! Single-spin-flip Metropolis annealing.
//!
//! A sweep proposes one flip per site in index order. Energy is tracked
//! incrementally from the flip deltas.

use serde::{Deserialize, Serialize};

use crate::rng::{self, Rng};
use crate::schedule::{Schedule, ScheduleKind};
use crate::stats::{self, DEFAULT_BATCHES};
use crate::{Error, Result, SpinConfiguration, SpinGlassInstance};

#[derive(Debug, Clone, PartialEq)]
pub struct CaRunParams {
    pub schedule: Schedule,
    pub sweeps: usize,
    pub seed: u64,
    /// Sweeps per measurement window; 0 disables measurement.
    pub measure_every: usize,
}

impl CaRunParams {
    pub fn new(schedule: Schedule, seed: u64) -> Self {
        CaRunParams {
            sweeps: schedule.len(),
            schedule,
            seed,
            measure_every: 0,
        }
    }

    fn validate(&self) -> Result<Vec<f64>> {
        if self.sweeps == 0 {
            return Err(Error::param("sweeps must be >= 1"));
        }
        if self.schedule.kind() != ScheduleKind::ClassicalBeta {
            return Err(Error::InvalidSchedule(format!(
                "classical annealing needs a beta schedule, got {}",
                self.schedule.kind()
            )));
        }
        if self.schedule.len() != self.sweeps {
            return Err(Error::LengthMismatch {
                expected: self.sweeps,
                got: self.schedule.len(),
            });
        }
        Ok(self.schedule.betas().expect("classical schedule has betas"))
    }
}

/// Energy samples aggregated over one measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPoint {
    /// Mean beta over the window.
    pub beta: f64,
    pub mean: f64,
    /// `<E^2> - <E>^2` over the window.
    pub variance: f64,
    pub count: usize,
    /// Batch-means error of `mean`.
    pub stderr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyStatistics {
    pub points: Vec<EnergyPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaOutcome {
    pub config: SpinConfiguration,
    pub energy: f64,
    pub stats: EnergyStatistics,
}

/// Fixed-beta equilibrium estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumEnergy {
    pub beta: f64,
    pub mean_energy: f64,
    pub mean_stderr: f64,
    /// `<E^2> - <E>^2`.
    pub variance: f64,
    pub variance_stderr: f64,
    pub samples: usize,
}

/// Metropolis test for an energy change `delta` at inverse temperature `beta`.
#[inline]
pub fn metropolis_accept<R: rand::Rng + ?Sized>(delta: f64, beta: f64, rng: &mut R) -> bool {
    delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp()
}

/// Metropolis chain state with the energy tracked incrementally.
pub struct MetropolisChain<'a> {
    inst: &'a SpinGlassInstance,
    spins: Vec<i8>,
    energy: f64,
}

impl<'a> MetropolisChain<'a> {
    pub fn random(inst: &'a SpinGlassInstance, rng: &mut Rng) -> Self {
        let spins = SpinConfiguration::random(inst.num_spins(), rng).spins().to_vec();
        let energy = inst.energy_of(&spins);
        MetropolisChain { inst, spins, energy }
    }

    pub fn sweep(&mut self, beta: f64, rng: &mut Rng) {
        let inst = self.inst;
        for i in 0..self.spins.len() {
            let delta = inst.flip_delta(&self.spins, i);
            if metropolis_accept(delta, beta, rng) {
                self.spins[i] = -self.spins[i];
                self.energy += delta;
            }
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// Energy recomputed from scratch.
    pub fn recomputed_energy(&self) -> f64 {
        self.inst.energy_of(&self.spins)
    }

    fn resync(&mut self) {
        self.energy = self.recomputed_energy();
    }
}

fn window_point(betas: &[f64], energies: &[f64]) -> EnergyPoint {
    let batches = DEFAULT_BATCHES.min(energies.len());
    let stderr = if batches >= 2 {
        stats::batch_means(energies, batches).map(|e| e.stderr).unwrap_or(0.0)
    } else {
        0.0
    };
    EnergyPoint {
        beta: stats::mean(betas),
        mean: stats::mean(energies),
        variance: stats::fluctuation(energies),
        count: energies.len(),
        stderr,
    }
}

/// Runs one anneal from a random start and returns the final state.
pub fn ca_anneal(inst: &SpinGlassInstance, params: &CaRunParams) -> Result<CaOutcome> {
    let betas = params.validate()?;
    let mut rng = rng::stream(params.seed, 0);
    let mut chain = MetropolisChain::random(inst, &mut rng);
    let mut stats = EnergyStatistics::default();
    let (mut wb, mut we) = (Vec::new(), Vec::new());
    for (k, &beta) in betas.iter().enumerate() {
        chain.sweep(beta, &mut rng);
        if params.measure_every > 0 {
            wb.push(beta);
            we.push(chain.energy());
            if wb.len() == params.measure_every || k + 1 == betas.len() {
                stats.points.push(window_point(&wb, &we));
                wb.clear();
                we.clear();
            }
        }
    }
    chain.resync();
    Ok(CaOutcome {
        config: SpinConfiguration::new(chain.spins).expect("spins stay +-1"),
        energy: chain.energy,
        stats,
    })
}

fn check_sampling(warmup: usize, measure: usize) -> Result<()> {
    if warmup < 1 {
        return Err(Error::param("warmup must be >= 1 sweep"));
    }
    if measure < 2 * DEFAULT_BATCHES {
        return Err(Error::param(format!(
            "measurement needs at least {} sweeps for batch errors",
            2 * DEFAULT_BATCHES
        )));
    }
    Ok(())
}

fn equilibrium_from(chain: &mut MetropolisChain, beta: f64, warmup: usize, measure: usize, rng: &mut Rng) -> Result<EquilibriumEnergy> {
    for _ in 0..warmup {
        chain.sweep(beta, rng);
    }
    let mut energies = Vec::with_capacity(measure);
    for _ in 0..measure {
        chain.sweep(beta, rng);
        energies.push(chain.energy());
    }
    chain.resync();
    let m = stats::batch_means(&energies, DEFAULT_BATCHES)?;
    let v = stats::batch_jackknife(&energies, DEFAULT_BATCHES, stats::fluctuation)?;
    Ok(EquilibriumEnergy {
        beta,
        mean_energy: m.mean,
        mean_stderr: m.stderr,
        variance: v.mean,
        variance_stderr: v.stderr,
        samples: measure,
    })
}

/// Fixed-beta sampling with batch-means errors on `<E>` and a batch jackknife
/// on the variance.
pub fn ca_equilibrium_measure(
    inst: &SpinGlassInstance,
    beta: f64,
    warmup: usize,
    measure: usize,
    seed: u64,
) -> Result<EquilibriumEnergy> {
    check_sampling(warmup, measure)?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::param(format!("beta must be finite and >= 0, got {beta}")));
    }
    let mut rng = rng::stream(seed, 0);
    let mut chain = MetropolisChain::random(inst, &mut rng);
    equilibrium_from(&mut chain, beta, warmup, measure, &mut rng)
}

/// Equilibrium estimates along an increasing beta grid, carrying the
/// configuration from one point to the next.
pub fn ca_equilibrium_scan(
    inst: &SpinGlassInstance,
    betas: &[f64],
    warmup: usize,
    measure: usize,
    seed: u64,
) -> Result<Vec<EquilibriumEnergy>> {
    check_sampling(warmup, measure)?;
    if betas.windows(2).any(|w| w[1] <= w[0]) || betas.iter().any(|b| !(*b >= 0.0)) {
        return Err(Error::param("beta grid must be non-negative and strictly increasing"));
    }
    let mut rng = rng::stream(seed, 0);
    let mut chain = MetropolisChain::random(inst, &mut rng);
    betas
        .iter()
        .map(|&b| equilibrium_from(&mut chain, b, warmup, measure, &mut rng))
        .collect()
}
