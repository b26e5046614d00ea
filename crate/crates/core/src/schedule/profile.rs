//! Ensemble-averaged fluctuation profiles that set the local step size of an
//! adaptive schedule.
//!
//! CSV layout, with the metadata comment optional for classical profiles:
//!
//! ```text
//! # profile quantum beta=16 gamma0=1.5 denominator=simple
//! control,denominator,stderr,n
//! 0.0,0.01,0.001,100
//! ```

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::ca_equilibrium_scan;
use crate::pimc::{sample_chain, PimcChain, TimeBoundary};
use crate::rng;
use crate::stats;
use crate::{Error, Result, SpinGlassInstance};

/// Which quantum fluctuation sets the step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// `beta Gamma0 sqrt(1 - <sigma^x>^2)` for `H_P - Gamma(s) sum sigma^x`.
    #[default]
    Simple,
    /// `sqrt(d^2 ln Z / ds^2)` for `s H_P - (1 - s) Gamma0 sum sigma^x`.
    General,
}

impl std::str::FromStr for Denominator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Denominator::Simple),
            "general" => Ok(Denominator::General),
            _ => Err(Error::param(format!("unknown denominator '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileKind {
    /// Control is beta; the denominator is the energy variance.
    Classical,
    /// Control is `s`, with `Gamma = (1 - s) Gamma0`.
    Quantum {
        beta: f64,
        gamma0: f64,
        denominator: Denominator,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationProfile {
    kind: ProfileKind,
    grid: Vec<f64>,
    values: Vec<f64>,
    stderr: Vec<f64>,
    counts: Vec<usize>,
}

impl FluctuationProfile {
    pub fn new(
        kind: ProfileKind,
        grid: Vec<f64>,
        values: Vec<f64>,
        stderr: Vec<f64>,
        counts: Vec<usize>,
    ) -> Result<Self> {
        let n = grid.len();
        if n == 0 {
            return Err(Error::param("profile grid is empty"));
        }
        for len in [values.len(), stderr.len(), counts.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, got: len });
            }
        }
        if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("profile grid must be finite and strictly increasing"));
        }
        if values.iter().chain(&stderr).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("profile values and errors must be finite and >= 0"));
        }
        Ok(FluctuationProfile { kind, grid, values, stderr, counts })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stderr(&self) -> &[f64] {
        &self.stderr
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Value and error at an exact grid point.
    pub fn at(&self, control: f64) -> Option<(f64, f64)> {
        let k = self.grid.iter().position(|&g| g == control)?;
        Some((self.values[k], self.stderr[k]))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.kind {
            ProfileKind::Classical => out.push_str("# profile classical\n"),
            ProfileKind::Quantum { beta, gamma0, denominator } => {
                let d = match denominator {
                    Denominator::Simple => "simple",
                    Denominator::General => "general",
                };
                let _ = writeln!(out, "# profile quantum beta={beta:?} gamma0={gamma0:?} denominator={d}");
            }
        }
        out.push_str("control,denominator,stderr,n\n");
        for k in 0..self.grid.len() {
            let _ = writeln!(
                out,
                "{:?},{:?},{:?},{}",
                self.grid[k], self.values[k], self.stderr[k], self.counts[k]
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut kind = ProfileKind::Classical;
        let mut header = false;
        let (mut grid, mut values, mut stderr, mut counts) = (vec![], vec![], vec![], vec![]);
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| Error::Parse { line: k + 1, msg };
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let tok: Vec<&str> = meta.split_whitespace().collect();
                if tok.first() == Some(&"profile") && tok.get(1) == Some(&"quantum") {
                    let (mut beta, mut gamma0, mut den) = (None, None, Denominator::Simple);
                    for kv in &tok[2..] {
                        let (key, val) = kv
                            .split_once('=')
                            .ok_or_else(|| err(format!("bad metadata '{kv}'")))?;
                        let num = || val.parse::<f64>().map_err(|_| err(format!("bad number '{val}'")));
                        match key {
                            "beta" => beta = Some(num()?),
                            "gamma0" => gamma0 = Some(num()?),
                            "denominator" => den = val.parse().map_err(|e: Error| err(e.to_string()))?,
                            _ => return Err(err(format!("unknown metadata key '{key}'"))),
                        }
                    }
                    kind = ProfileKind::Quantum {
                        beta: beta.ok_or_else(|| err("missing beta".into()))?,
                        gamma0: gamma0.ok_or_else(|| err("missing gamma0".into()))?,
                        denominator: den,
                    };
                }
                continue;
            }
            if !header {
                if line != "control,denominator,stderr,n" {
                    return Err(err(format!("expected profile header, got '{line}'")));
                }
                header = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(err(format!("expected 4 columns, got {}", cols.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number '{s}'")));
            grid.push(num(cols[0])?);
            values.push(num(cols[1])?);
            stderr.push(num(cols[2])?);
            counts.push(cols[3].parse().map_err(|_| err(format!("bad count '{}'", cols[3])))?);
        }
        FluctuationProfile::new(kind, grid, values, stderr, counts)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Ensemble mean per grid point. A single instance keeps its own Monte Carlo
/// error; larger ensembles use the spread across instances.
fn aggregate(per_instance: &[Vec<(f64, f64)>], points: usize) -> (Vec<f64>, Vec<f64>) {
    let n = per_instance.len();
    let mut values = Vec::with_capacity(points);
    let mut errors = Vec::with_capacity(points);
    for k in 0..points {
        let xs: Vec<f64> = per_instance.iter().map(|r| r[k].0).collect();
        values.push(stats::mean(&xs));
        errors.push(if n == 1 { per_instance[0][k].1 } else { stats::standard_error(&xs) });
    }
    (values, errors)
}

fn check_inputs(instances: &[SpinGlassInstance], grid: &[f64]) -> Result<()> {
    if instances.is_empty() {
        return Err(Error::param("profile needs at least one instance"));
    }
    if grid.is_empty() {
        return Err(Error::param("profile grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("profile grid must be strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSampling {
    pub warmup: usize,
    pub measure: usize,
    pub seed: u64,
}

/// `sigma(beta) = <E^2> - <E>^2` on an increasing beta grid, averaged over the
/// ensemble. Each instance walks the grid in order with one chain.
pub fn measure_classical_profile(
    instances: &[SpinGlassInstance],
    grid: &[f64],
    sampling: &ClassicalSampling,
) -> Result<FluctuationProfile> {
    check_inputs(instances, grid)?;
    let per: Vec<Vec<(f64, f64)>> = instances
        .par_iter()
        .enumerate()
        .map(|(idx, inst)| {
            let seed = rng::mix(sampling.seed, idx as u64);
            let scan = ca_equilibrium_scan(inst, grid, sampling.warmup, sampling.measure, seed)?;
            Ok(scan.iter().map(|p| (p.variance, p.variance_stderr)).collect())
        })
        .collect::<Result<_>>()?;
    let (values, errors) = aggregate(&per, grid.len());
    FluctuationProfile::new(
        ProfileKind::Classical,
        grid.to_vec(),
        values,
        errors,
        vec![instances.len(); grid.len()],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumSampling {
    pub beta: f64,
    pub gamma0: f64,
    pub slices: usize,
    /// Periodic by default: the profile is a thermal quantity.
    pub time_boundary: TimeBoundary,
    pub denominator: Denominator,
    pub warmup: usize,
    pub measure: usize,
    pub seed: u64,
}

impl QuantumSampling {
    pub fn new(beta: f64, gamma0: f64, slices: usize, seed: u64) -> Self {
        QuantumSampling {
            beta,
            gamma0,
            slices,
            time_boundary: TimeBoundary::Periodic,
            denominator: Denominator::Simple,
            warmup: 500,
            measure: 2000,
            seed,
        }
    }
}

fn quantum_point(
    chain: &mut PimcChain,
    s: f64,
    q: &QuantumSampling,
    rng: &mut rng::Rng,
) -> Result<(f64, f64)> {
    let gamma = (1.0 - s) * q.gamma0;
    match q.denominator {
        Denominator::Simple => {
            let samples = sample_chain(chain, q.beta, gamma, 1.0, q.warmup, q.measure, rng);
            let est = samples.sigma_x()?;
            let x = est.mean.clamp(0.0, 1.0);
            let root = (1.0 - x * x).sqrt();
            let d = q.beta * q.gamma0 * root;
            // first-order propagation, capped where the root vanishes
            let err = if root > 0.0 {
                q.beta * q.gamma0 * x / root * est.stderr
            } else {
                q.beta * q.gamma0 * (2.0 * est.stderr).sqrt()
            };
            Ok((d, err))
        }
        Denominator::General => {
            let samples = sample_chain(chain, q.beta, gamma, s, q.warmup, q.measure, rng);
            let c = samples.curvature(q.beta, q.gamma0, s, q.slices)?;
            let d = c.mean.max(0.0).sqrt();
            let err = if d > 0.0 { c.stderr / (2.0 * d) } else { c.stderr.sqrt() };
            Ok((d, err))
        }
    }
}

/// Quantum denominator on an increasing `s` grid in `[0, 1)`, averaged over
/// the ensemble. Each instance walks the grid with one path.
pub fn measure_quantum_profile(
    instances: &[SpinGlassInstance],
    grid: &[f64],
    sampling: &QuantumSampling,
) -> Result<FluctuationProfile> {
    check_inputs(instances, grid)?;
    if grid.iter().any(|s| !(0.0..1.0).contains(s)) {
        return Err(Error::param("quantum profile grid must lie in [0, 1)"));
    }
    if !(sampling.beta > 0.0 && sampling.gamma0 > 0.0) || sampling.slices < 2 {
        return Err(Error::param("need beta > 0, gamma0 > 0 and M >= 2"));
    }
    if sampling.warmup < 1 || sampling.measure < 2 * stats::DEFAULT_BATCHES {
        return Err(Error::param(format!(
            "need warmup >= 1 and measure >= {}",
            2 * stats::DEFAULT_BATCHES
        )));
    }
    let per: Vec<Vec<(f64, f64)>> = instances
        .par_iter()
        .enumerate()
        .map(|(idx, inst)| {
            let mut rng = rng::stream(rng::mix(sampling.seed, idx as u64), 0);
            let mut chain = PimcChain::random(inst, sampling.slices, sampling.time_boundary, &mut rng);
            grid.iter()
                .map(|&s| quantum_point(&mut chain, s, sampling, &mut rng))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let (values, errors) = aggregate(&per, grid.len());
    FluctuationProfile::new(
        ProfileKind::Quantum {
            beta: sampling.beta,
            gamma0: sampling.gamma0,
            denominator: sampling.denominator,
        },
        grid.to_vec(),
        values,
        errors,
        vec![instances.len(); grid.len()],
    )
}
