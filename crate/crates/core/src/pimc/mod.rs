//! Discrete-time path-integral Monte Carlo for the transverse-field Ising model
//! and simulated quantum annealing built on it.
//!
//! `H = a H_P - Gamma sum_i sigma^x_i` is split into `M` slices with
//! `tau = beta / M`. Slice `k` carries a copy of the classical spins and
//! neighbouring slices of the same site are coupled with strength
//! `K = -1/2 ln tanh(tau Gamma)`. Updates are Swendsen-Wang clusters built
//! along the imaginary-time line of one site, flipped with a heat-bath test
//! on the spatial action.

mod chain;
mod measure;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng;
use crate::schedule::{Schedule, ScheduleKind};
use crate::{Error, Result, SpinConfiguration, SpinGlassInstance};

pub use chain::PimcChain;
pub use measure::{
    sqa_equilibrium_measure, sqa_general_measure, trotter_convergence_scan, EquilibriumParams,
    GeneralCurvaturePoint, PimcSamples, QuantumStiffnessPoint, TrotterRow, sample_chain,
};

/// Production Trotter number.
pub const DEFAULT_SLICES: usize = 1024;

/// Boundary condition along imaginary time.
///
/// `Periodic` samples the thermal trace. `Open` leaves the first and last
/// slices free, which samples `<+|exp(-beta H)|+>` instead; its expectation
/// values are those of the projected path, not the thermal ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeBoundary {
    #[default]
    Open,
    Periodic,
}

impl fmt::Display for TimeBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeBoundary::Open => "open",
            TimeBoundary::Periodic => "periodic",
        })
    }
}

impl FromStr for TimeBoundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(TimeBoundary::Open),
            "periodic" => Ok(TimeBoundary::Periodic),
            _ => Err(Error::param(format!("unknown time boundary '{s}'"))),
        }
    }
}

/// How the annealed path is turned into one classical answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Lowest-energy slice.
    #[default]
    BestSlice,
    /// A uniformly chosen slice.
    RandomSlice,
}

impl FromStr for Readout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best_slice" | "best" => Ok(Readout::BestSlice),
            "random_slice" | "random" => Ok(Readout::RandomSlice),
            _ => Err(Error::param(format!("unknown readout '{s}'"))),
        }
    }
}

/// Imaginary-time coupling `K = -1/2 ln tanh(tau Gamma)`.
pub fn time_coupling(tau: f64, gamma: f64) -> f64 {
    -0.5 * (tau * gamma).tanh().ln()
}

/// `M` slices of `N` spins, stored line by line: `spins[i * M + k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathConfiguration {
    sites: usize,
    slices: usize,
    spins: Vec<i8>,
}

impl PathConfiguration {
    pub fn new(sites: usize, slices: usize, spins: Vec<i8>) -> Result<Self> {
        if spins.len() != sites * slices {
            return Err(Error::LengthMismatch {
                expected: sites * slices,
                got: spins.len(),
            });
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::param("path spins must be +1 or -1"));
        }
        Ok(PathConfiguration { sites, slices, spins })
    }

    /// Every slice equal to `config`.
    pub fn replicated(config: &SpinConfiguration, slices: usize) -> Self {
        let spins = config
            .spins()
            .iter()
            .flat_map(|&s| std::iter::repeat(s).take(slices))
            .collect();
        PathConfiguration {
            sites: config.len(),
            slices,
            spins,
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn get(&self, site: usize, slice: usize) -> i8 {
        self.spins[site * self.slices + slice]
    }

    pub fn line(&self, site: usize) -> &[i8] {
        &self.spins[site * self.slices..(site + 1) * self.slices]
    }

    pub fn slice(&self, k: usize) -> SpinConfiguration {
        SpinConfiguration::new((0..self.sites).map(|i| self.get(i, k)).collect())
            .expect("path spins are +-1")
    }

    pub fn flip_line(&mut self, site: usize) {
        let m = self.slices;
        self.spins[site * m..(site + 1) * m]
            .iter_mut()
            .for_each(|s| *s = -*s);
    }

    pub(crate) fn raw(&self) -> &[i8] {
        &self.spins
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [i8] {
        &mut self.spins
    }
}

/// Number of time links per site.
pub fn time_links(slices: usize, boundary: TimeBoundary) -> usize {
    match boundary {
        TimeBoundary::Periodic => slices,
        TimeBoundary::Open => slices - 1,
    }
}

/// Pieces of the path action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAction {
    /// `tau * a * sum_k H_P(slice k)`.
    pub spatial: f64,
    /// `-K * sum_links s s'`.
    pub time: f64,
}

/// Action of a path, evaluated from scratch.
pub fn path_action(
    inst: &SpinGlassInstance,
    path: &PathConfiguration,
    beta: f64,
    gamma: f64,
    problem_scale: f64,
    boundary: TimeBoundary,
) -> PathAction {
    let m = path.slices();
    let tau = beta / m as f64;
    let spatial: f64 = (0..m).map(|k| inst.energy_of(path.slice(k).spins())).sum();
    let mut links = 0i64;
    for i in 0..path.sites() {
        let line = path.line(i);
        links += line.windows(2).map(|w| (w[0] * w[1]) as i64).sum::<i64>();
        if boundary == TimeBoundary::Periodic {
            links += (line[m - 1] * line[0]) as i64;
        }
    }
    PathAction {
        spatial: tau * problem_scale * spatial,
        time: -time_coupling(tau, gamma) * links as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PimcParams {
    pub slices: usize,
    /// Used by transverse-field schedules; hybrid schedules carry their own beta.
    pub beta: f64,
    pub time_boundary: TimeBoundary,
    pub schedule: Schedule,
    pub sweeps: usize,
    pub seed: u64,
    pub readout: Readout,
    /// Record a diagnostic every this many sweeps; 0 disables.
    pub record_every: usize,
}

impl PimcParams {
    pub fn new(schedule: Schedule, beta: f64, slices: usize, seed: u64) -> Self {
        PimcParams {
            slices,
            beta,
            time_boundary: TimeBoundary::default(),
            sweeps: schedule.len(),
            schedule,
            seed,
            readout: Readout::default(),
            record_every: 0,
        }
    }

    /// Per-sweep `(beta, gamma)` after validation.
    fn controls(&self) -> Result<Vec<(f64, f64)>> {
        if self.slices < 2 {
            return Err(Error::param(format!("need M >= 2 slices, got {}", self.slices)));
        }
        if self.sweeps == 0 {
            return Err(Error::param("sweeps must be >= 1"));
        }
        if self.schedule.len() != self.sweeps {
            return Err(Error::LengthMismatch {
                expected: self.sweeps,
                got: self.schedule.len(),
            });
        }
        let gammas = self.schedule.gammas().ok_or_else(|| {
            Error::InvalidSchedule(format!(
                "quantum annealing needs a transverse-field schedule, got {}",
                self.schedule.kind()
            ))
        })?;
        if gammas.last() != Some(&0.0) {
            return Err(Error::InvalidSchedule("schedule must end at gamma = 0".into()));
        }
        let betas = match self.schedule.kind() {
            ScheduleKind::Hybrid => self.schedule.betas().unwrap(),
            _ => vec![self.beta; gammas.len()],
        };
        if betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::param("beta must be positive and finite"));
        }
        Ok(betas.into_iter().zip(gammas).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepDiagnostic {
    pub sweep: usize,
    pub beta: f64,
    pub gamma: f64,
    /// Mean classical energy over slices.
    pub mean_slice_energy: f64,
    /// Path estimator of `<sigma^x>`; absent at zero field.
    pub sigma_x: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqaOutcome {
    pub config: SpinConfiguration,
    pub energy: f64,
    pub slice: usize,
    pub diagnostics: Vec<SweepDiagnostic>,
}

/// One simulated quantum anneal from a random path.
pub fn sqa_anneal(inst: &SpinGlassInstance, params: &PimcParams) -> Result<SqaOutcome> {
    let controls = params.controls()?;
    let mut rng = rng::stream(params.seed, 0);
    let mut chain = PimcChain::random(inst, params.slices, params.time_boundary, &mut rng);
    let mut diagnostics = Vec::new();
    for (k, &(beta, gamma)) in controls.iter().enumerate() {
        chain.sweep(beta, gamma, 1.0, &mut rng);
        if params.record_every > 0 && (k + 1) % params.record_every == 0 {
            let tau = beta / params.slices as f64;
            diagnostics.push(SweepDiagnostic {
                sweep: k,
                beta,
                gamma,
                mean_slice_energy: chain.spatial_energy() / params.slices as f64,
                sigma_x: (gamma > 0.0).then(|| chain.sigma_x(tau * gamma)),
            });
        }
    }
    let (slice, energy) = match params.readout {
        Readout::BestSlice => chain.best_slice(),
        Readout::RandomSlice => {
            use rand::Rng as _;
            let k = rng::stream(params.seed, 1).gen_range(0..params.slices);
            (k, chain.slice_energy(k))
        }
    };
    Ok(SqaOutcome {
        config: chain.path().slice(slice),
        energy,
        slice,
        diagnostics,
    })
}
