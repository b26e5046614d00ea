//! Fixed-field sampling: the `<sigma^x>` estimator, the fixed-problem
//! stiffness `C_q = beta Gamma (1 - <sigma^x>^2)`, and the curvature
//! `d^2 ln Z / ds^2` of the interpolating Hamiltonian.

use serde::{Deserialize, Serialize};

use super::{PimcChain, TimeBoundary};
use crate::oracle::{exact_open_path_sigma_x, exact_quantum_expectations, trotter_sigma_x};
use crate::rng::{self, Rng};
use crate::stats::{self, DEFAULT_BATCHES};
use crate::{Error, Result, SpinGlassInstance};

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumParams {
    pub beta: f64,
    pub gamma: f64,
    pub slices: usize,
    pub time_boundary: TimeBoundary,
    /// Factor `a` in front of `H_P`.
    pub problem_scale: f64,
    pub warmup: usize,
    pub measure: usize,
    pub seed: u64,
}

impl EquilibriumParams {
    /// Thermal sampling (periodic imaginary time) at problem scale 1.
    pub fn new(beta: f64, gamma: f64, slices: usize, seed: u64) -> Self {
        EquilibriumParams {
            beta,
            gamma,
            slices,
            time_boundary: TimeBoundary::Periodic,
            problem_scale: 1.0,
            warmup: 1000,
            measure: 10_000,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            errs.push(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            errs.push(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.slices < 2 {
            errs.push(format!("need M >= 2 slices, got {}", self.slices));
        }
        if !(self.problem_scale >= 0.0) {
            errs.push("problem scale must be >= 0".into());
        }
        if self.warmup < 1 {
            errs.push("warmup must be >= 1".into());
        }
        if self.measure < 2 * DEFAULT_BATCHES {
            errs.push(format!("measure must be >= {}", 2 * DEFAULT_BATCHES));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::param(errs.join("; ")))
        }
    }
}

/// Per-sweep observables of an equilibrium run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PimcSamples {
    pub sigma_x: Vec<f64>,
    /// `sum_k H_P(slice k)`.
    pub spatial: Vec<f64>,
    /// `sum_links s s'`.
    pub link_sum: Vec<f64>,
    /// Links per path (`N M` periodic, `N (M - 1)` open).
    pub links: usize,
}

impl PimcSamples {
    pub fn sigma_x(&self) -> Result<stats::Estimate> {
        stats::batch_means(&self.sigma_x, DEFAULT_BATCHES)
    }

    /// `d^2 ln Z / ds^2` for `s H_P - (1 - s) Gamma0 sum sigma^x`, with error.
    pub fn curvature(&self, beta: f64, gamma0: f64, s: f64, slices: usize) -> Result<stats::Estimate> {
        let tau = beta / slices as f64;
        let a2 = 2.0 * tau * (1.0 - s) * gamma0;
        let da = -tau * gamma0;
        let (sh, ch) = (a2.sinh(), a2.cosh());
        let links = self.links as f64;
        let first: Vec<f64> = self
            .spatial
            .iter()
            .zip(&self.link_sum)
            .map(|(&e, &l)| -tau * e + da * (links * ch / sh - l / sh))
            .collect();
        let second: Vec<f64> = self
            .link_sum
            .iter()
            .map(|&l| da * da * (-2.0 * links + 2.0 * ch * l) / (sh * sh))
            .collect();
        stats::batch_jackknife_pair(&first, &second, DEFAULT_BATCHES, |f1, f2| {
            stats::mean(f2) + stats::fluctuation(f1)
        })
    }
}

/// Runs `warmup` then `measure` sweeps at fixed parameters, recording one
/// sample per sweep.
pub fn sample_chain(
    chain: &mut PimcChain,
    beta: f64,
    gamma: f64,
    problem_scale: f64,
    warmup: usize,
    measure: usize,
    rng: &mut Rng,
) -> PimcSamples {
    let a = beta / chain.slices() as f64 * gamma;
    for _ in 0..warmup {
        chain.sweep(beta, gamma, problem_scale, rng);
    }
    let mut out = PimcSamples {
        links: chain.total_links(),
        ..Default::default()
    };
    for _ in 0..measure {
        chain.sweep(beta, gamma, problem_scale, rng);
        out.sigma_x.push(chain.sigma_x(a));
        out.spatial.push(chain.spatial_energy());
        out.link_sum.push(chain.link_sum());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumStiffnessPoint {
    pub gamma: f64,
    /// Site- and link-averaged `<sigma^x>`.
    pub sigma_x: f64,
    pub stderr: f64,
    /// `beta Gamma (1 - <sigma^x>^2)`.
    pub c_q: f64,
    pub samples: usize,
}

impl QuantumStiffnessPoint {
    pub(crate) fn from_samples(beta: f64, gamma: f64, samples: &PimcSamples) -> Result<Self> {
        let est = samples.sigma_x()?;
        Ok(QuantumStiffnessPoint {
            gamma,
            sigma_x: est.mean,
            stderr: est.stderr,
            c_q: (beta * gamma * (1.0 - est.mean * est.mean)).max(0.0),
            samples: samples.sigma_x.len(),
        })
    }
}

pub fn sqa_equilibrium_measure(
    inst: &SpinGlassInstance,
    params: &EquilibriumParams,
) -> Result<QuantumStiffnessPoint> {
    params.validate()?;
    let mut rng = rng::stream(params.seed, 0);
    let mut chain = PimcChain::random(inst, params.slices, params.time_boundary, &mut rng);
    let samples = sample_chain(
        &mut chain,
        params.beta,
        params.gamma,
        params.problem_scale,
        params.warmup,
        params.measure,
        &mut rng,
    );
    QuantumStiffnessPoint::from_samples(params.beta, params.gamma, &samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralCurvaturePoint {
    pub s: f64,
    pub sigma_x: f64,
    pub curvature: f64,
    pub curvature_stderr: f64,
}

/// Samples `s H_P - (1 - s) Gamma0 sum sigma^x` at `0 <= s < 1`; the gamma
/// and problem scale in `params` are replaced.
pub fn sqa_general_measure(
    inst: &SpinGlassInstance,
    s: f64,
    gamma0: f64,
    params: &EquilibriumParams,
) -> Result<GeneralCurvaturePoint> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::param(format!("s must lie in [0, 1), got {s}")));
    }
    let p = EquilibriumParams {
        gamma: (1.0 - s) * gamma0,
        problem_scale: s,
        ..params.clone()
    };
    p.validate()?;
    let mut rng = rng::stream(p.seed, 0);
    let mut chain = PimcChain::random(inst, p.slices, p.time_boundary, &mut rng);
    let samples = sample_chain(&mut chain, p.beta, p.gamma, s, p.warmup, p.measure, &mut rng);
    let c = samples.curvature(p.beta, gamma0, s, p.slices)?;
    Ok(GeneralCurvaturePoint {
        s,
        sigma_x: samples.sigma_x()?.mean,
        curvature: c.mean,
        curvature_stderr: c.stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrotterRow {
    pub slices: usize,
    pub sigma_x: f64,
    pub stderr: f64,
    /// Exact value of the discretised estimator at this `M`.
    pub discretized: f64,
    /// Continuum (`M -> infinity`) value for the chosen time boundary.
    pub oracle: f64,
    /// `|sigma_x - oracle|`.
    pub deviation: f64,
}

/// Samples `<sigma^x>` at each Trotter number and compares with the exact
/// continuum and discretised values. `template` supplies everything but `M`.
pub fn trotter_convergence_scan(
    inst: &SpinGlassInstance,
    template: &EquilibriumParams,
    slices: &[usize],
) -> Result<Vec<TrotterRow>> {
    let (beta, gamma) = (template.beta, template.gamma);
    let oracle = match template.time_boundary {
        TimeBoundary::Periodic => exact_quantum_expectations(inst, beta, &[gamma])?.table[0].sigma_x,
        TimeBoundary::Open => exact_open_path_sigma_x(inst, beta, gamma)?,
    };
    slices
        .iter()
        .map(|&m| {
            let p = EquilibriumParams {
                slices: m,
                seed: rng::mix(template.seed, m as u64),
                ..template.clone()
            };
            let point = sqa_equilibrium_measure(inst, &p)?;
            Ok(TrotterRow {
                slices: m,
                sigma_x: point.sigma_x,
                stderr: point.stderr,
                discretized: trotter_sigma_x(inst, beta, gamma, m, template.time_boundary)?,
                oracle,
                deviation: (point.sigma_x - oracle).abs(),
            })
        })
        .collect()
}
