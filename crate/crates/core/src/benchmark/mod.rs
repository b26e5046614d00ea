//! Benchmark campaigns: many anneals over an instance ensemble, reduced to
//! residual-energy curves and time-to-solution estimates.

mod emit;
mod tts;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{ca_anneal, CaRunParams};
use crate::oracle::GroundStateRegistry;
use crate::pimc::{sqa_anneal, PimcParams, Readout, TimeBoundary};
use crate::rng;
use crate::schedule::{
    build_adaptive_schedule, exponential_schedule, hybrid_schedule, linear_schedule,
    FluctuationProfile, ProfileKind, Schedule, ScheduleKind,
};
use crate::{Error, Result, SpinGlassInstance};

pub use emit::{
    emit_results, parse_records, write_records, OutputPaths, CURVE_HEADER, EFFORT_HEADER,
    FIT_HEADER, TTS_HEADER,
};
pub use tts::{
    curves, estimate_success_probability, repetitions_needed, scaling_fit, scaling_fits,
    summarize, tts_optimize, Abscissa, CurvePoint, Repetitions, ScalingFit, ScalingInput,
    SuccessEstimate, TtsOptimum, TtsPoint, TtsSummary, BOOTSTRAP_SAMPLES,
};

/// Version of the record and table layouts written by [`emit_results`].
pub const SCHEMA_VERSION: u32 = 1;
/// Records below `E0` by more than this abort the campaign.
pub const GROUND_STATE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CA")]
    Ca,
    #[serde(rename = "SQA")]
    Sqa,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ca => "CA",
            Method::Sqa => "SQA",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ca" => Ok(Method::Ca),
            "sqa" => Ok(Method::Sqa),
            _ => Err(Error::param(format!("unknown method '{s}' (expected ca or sqa)"))),
        }
    }
}

/// Recipe for a schedule of any length.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    /// Beta for CA, gamma for SQA.
    Linear { start: f64, end: f64 },
    Exponential { start: f64, end: f64 },
    /// SQA only: beta and gamma both linear, gamma ending at 0.
    Hybrid { beta: (f64, f64), gamma0: f64 },
    /// Control runs from `start` to `end` (beta, or `s` for quantum profiles).
    Adaptive { profile: FluctuationProfile, start: f64, end: f64 },
}

impl ScheduleSpec {
    pub fn build(&self, method: Method, sweeps: usize) -> Result<Schedule> {
        let kind = match method {
            Method::Ca => ScheduleKind::ClassicalBeta,
            Method::Sqa => ScheduleKind::QuantumGamma,
        };
        match self {
            ScheduleSpec::Linear { start, end } => linear_schedule(kind, *start, *end, sweeps),
            ScheduleSpec::Exponential { start, end } => {
                exponential_schedule(kind, *start, *end, sweeps)
            }
            ScheduleSpec::Hybrid { beta, gamma0 } => {
                if method != Method::Sqa {
                    return Err(Error::InvalidSchedule("hybrid schedules are for SQA".into()));
                }
                hybrid_schedule(*beta, (*gamma0, 0.0), sweeps)
            }
            ScheduleSpec::Adaptive { profile, start, end } => {
                let ok = matches!(
                    (method, profile.kind()),
                    (Method::Ca, ProfileKind::Classical) | (Method::Sqa, ProfileKind::Quantum { .. })
                );
                if !ok {
                    return Err(Error::InvalidSchedule(format!(
                        "{method} cannot use a {:?} profile",
                        profile.kind()
                    )));
                }
                build_adaptive_schedule(profile, sweeps, *start, *end)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ScheduleSpec::Linear { start, end } => format!("linear({start}->{end})"),
            ScheduleSpec::Exponential { start, end } => format!("exponential({start}->{end})"),
            ScheduleSpec::Hybrid { beta, gamma0 } => {
                format!("hybrid(beta {}->{}, gamma {gamma0}->0)", beta.0, beta.1)
            }
            ScheduleSpec::Adaptive { profile, start, end } => match profile.kind() {
                ProfileKind::Classical => format!("adaptive(beta {start}->{end})"),
                ProfileKind::Quantum { gamma0, .. } => {
                    format!("adaptive(s {start}->{end}, gamma0 {gamma0})")
                }
            },
        }
    }
}

/// One annealer configuration in a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    /// Name used in tables, e.g. `"SQA-adaptive-g7"`.
    pub label: String,
    pub method: Method,
    pub schedule: ScheduleSpec,
    /// SQA temperature for transverse-field schedules.
    pub beta: f64,
    pub slices: usize,
    pub time_boundary: TimeBoundary,
    pub readout: Readout,
}

impl Variant {
    pub fn classical(label: impl Into<String>, schedule: ScheduleSpec) -> Self {
        Variant {
            label: label.into(),
            method: Method::Ca,
            schedule,
            beta: 0.0,
            slices: 0,
            time_boundary: TimeBoundary::default(),
            readout: Readout::default(),
        }
    }

    pub fn quantum(label: impl Into<String>, schedule: ScheduleSpec, beta: f64, slices: usize) -> Self {
        Variant {
            label: label.into(),
            method: Method::Sqa,
            schedule,
            beta,
            slices,
            time_boundary: TimeBoundary::default(),
            readout: Readout::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub variants: Vec<Variant>,
    /// Sweep budgets `t_a`.
    pub sweeps: Vec<usize>,
    /// Anneals per (instance, variant, budget).
    pub repetitions: usize,
    /// Absolute tolerance on `E - E0` for a success.
    pub success_tolerance: f64,
    /// Extra tolerance relative to `|E0|`.
    pub relative_tolerance: f64,
    /// Target probability `s` in the repetition count.
    pub target_probability: f64,
    pub master_seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl CampaignConfig {
    pub fn new(variants: Vec<Variant>, sweeps: Vec<usize>, repetitions: usize, master_seed: u64) -> Self {
        CampaignConfig {
            variants,
            sweeps,
            repetitions,
            success_tolerance: 1e-9,
            relative_tolerance: 0.0,
            target_probability: 0.9,
            master_seed,
            workers: 0,
        }
    }

    /// Every problem with the configuration, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.variants.is_empty() {
            errs.push("no variants".to_string());
        }
        if self.sweeps.is_empty() || self.sweeps.contains(&0) {
            errs.push("sweep grid must be non-empty and positive".into());
        }
        if self.repetitions == 0 {
            errs.push("repetitions must be >= 1".into());
        }
        if !(self.target_probability > 0.0 && self.target_probability < 1.0) {
            errs.push(format!("target probability must lie in (0, 1), got {}", self.target_probability));
        }
        if !(self.success_tolerance >= 0.0) || !(self.relative_tolerance >= 0.0) {
            errs.push("tolerances must be >= 0".into());
        }
        let mut labels = std::collections::HashSet::new();
        for v in &self.variants {
            if !labels.insert(&v.label) {
                errs.push(format!("duplicate variant label '{}'", v.label));
            }
            if v.label.contains(',') || v.label.is_empty() {
                errs.push(format!("variant label '{}' must be non-empty without commas", v.label));
            }
            if v.method == Method::Sqa && (v.slices < 2 || !(v.beta > 0.0)) {
                if !matches!(v.schedule, ScheduleSpec::Hybrid { .. }) || v.slices < 2 {
                    errs.push(format!("variant '{}': SQA needs M >= 2 and beta > 0", v.label));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::param(errs.join("; ")))
        }
    }

    /// Number of anneals for `instances` instances.
    pub fn planned_runs(&self, instances: usize) -> usize {
        instances * self.variants.len() * self.sweeps.len() * self.repetitions
    }
}

/// One anneal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub schema: u32,
    /// Position in the campaign matrix; the run seed derives from it.
    pub index: u64,
    pub instance: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub method: Method,
    pub variant: String,
    pub schedule: String,
    pub sweeps: usize,
    pub seed: u64,
    pub energy: f64,
    pub e0: f64,
    pub residual: f64,
    pub residual_per_spin: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub records: Vec<BenchmarkRecord>,
    /// Instances skipped for lack of a ground-state energy, with the reason.
    pub omitted: Vec<(String, String)>,
}

struct Job {
    index: u64,
    instance: usize,
    variant: usize,
    budget: usize,
}

/// Runs every (instance, variant, budget, repetition) combination. Instances
/// without a known ground-state energy are skipped and reported.
pub fn run_campaign(
    instances: &[SpinGlassInstance],
    ground: &GroundStateRegistry,
    config: &CampaignConfig,
) -> Result<CampaignResult> {
    config.validate()?;
    let mut omitted = Vec::new();
    let mut e0 = vec![None; instances.len()];
    for (k, inst) in instances.iter().enumerate() {
        match ground.get(inst.id()) {
            Ok(e) => e0[k] = Some(e),
            Err(err) => {
                log::warn!("skipping {}: {err}", inst.id());
                omitted.push((inst.id().to_string(), err.to_string()));
            }
        }
    }
    let schedules: Vec<Vec<Schedule>> = config
        .variants
        .iter()
        .map(|v| config.sweeps.iter().map(|&t| v.schedule.build(v.method, t)).collect())
        .collect::<Result<_>>()?;

    let reps = config.repetitions;
    let per_instance = config.variants.len() * config.sweeps.len() * reps;
    let mut jobs = Vec::new();
    for (i, known) in e0.iter().enumerate() {
        if known.is_none() {
            continue;
        }
        for v in 0..config.variants.len() {
            for b in 0..config.sweeps.len() {
                for r in 0..reps {
                    let index = (i * per_instance + (v * config.sweeps.len() + b) * reps + r) as u64;
                    jobs.push(Job { index, instance: i, variant: v, budget: b });
                }
            }
        }
    }
    log::info!("campaign: {} anneals", jobs.len());

    let run = |job: &Job| -> Result<BenchmarkRecord> {
        let inst = &instances[job.instance];
        let variant = &config.variants[job.variant];
        let schedule = schedules[job.variant][job.budget].clone();
        let seed = rng::mix(config.master_seed, job.index);
        let energy = match variant.method {
            Method::Ca => ca_anneal(inst, &CaRunParams::new(schedule, seed))?.energy,
            Method::Sqa => {
                let mut p = PimcParams::new(schedule, variant.beta, variant.slices, seed);
                p.time_boundary = variant.time_boundary;
                p.readout = variant.readout;
                sqa_anneal(inst, &p)?.energy
            }
        };
        let ground = e0[job.instance].expect("only known instances are scheduled");
        if energy < ground - GROUND_STATE_SLACK {
            return Err(Error::GroundStateIntegrity {
                id: inst.id().to_string(),
                energy,
                e0: ground,
            });
        }
        let residual = energy - ground;
        let tol = config.success_tolerance + config.relative_tolerance * ground.abs();
        Ok(BenchmarkRecord {
            schema: SCHEMA_VERSION,
            index: job.index,
            instance: inst.id().to_string(),
            n: inst.num_spins(),
            method: variant.method,
            variant: variant.label.clone(),
            schedule: variant.schedule.describe(),
            sweeps: config.sweeps[job.budget],
            seed,
            energy,
            e0: ground,
            residual,
            residual_per_spin: residual / inst.num_spins() as f64,
            success: residual <= tol,
        })
    };
    let collect = || jobs.par_iter().map(run).collect::<Result<Vec<_>>>();
    let records = if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?
            .install(collect)?
    } else {
        collect()?
    };
    Ok(CampaignResult { records, omitted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_ferromagnet, generate_spin_glass, Boundary, LatticeSpec};
    use crate::oracle::brute_force_ground_state;

    fn registry(insts: &[SpinGlassInstance]) -> GroundStateRegistry {
        let mut reg = GroundStateRegistry::new();
        for i in insts {
            reg.insert(i.id(), brute_force_ground_state(i).unwrap().energy).unwrap();
        }
        reg
    }

    fn ca_linear() -> Variant {
        Variant::classical("CA-linear", ScheduleSpec::Linear { start: 0.1, end: 5.0 })
    }

    #[test]
    fn one_record_per_budget() {
        let inst = generate_spin_glass(LatticeSpec::cubic(2, Boundary::Open).unwrap(), 1);
        let reg = registry(std::slice::from_ref(&inst));
        let cfg = CampaignConfig::new(vec![ca_linear()], vec![10, 20, 40], 1, 5);
        let res = run_campaign(std::slice::from_ref(&inst), &reg, &cfg).unwrap();
        assert_eq!(res.records.len(), 3);
        assert_eq!(cfg.planned_runs(1), 3);
        assert!(res.records.iter().all(|r| r.residual >= 0.0 && r.schema == SCHEMA_VERSION));
    }

    #[test]
    fn missing_ground_truth_is_reported_not_fatal() {
        let lat = LatticeSpec::cubic(2, Boundary::Open).unwrap();
        let a = generate_spin_glass(lat, 1).with_id("a");
        let b = generate_spin_glass(lat, 2).with_id("b");
        let reg = registry(std::slice::from_ref(&a));
        let cfg = CampaignConfig::new(vec![ca_linear()], vec![10], 2, 5);
        let res = run_campaign(&[a, b], &reg, &cfg).unwrap();
        assert_eq!(res.records.len(), 2);
        assert_eq!(res.omitted.len(), 1);
        assert_eq!(res.omitted[0].0, "b");
    }

    #[test]
    fn wrong_ground_truth_aborts() {
        let inst = generate_spin_glass(LatticeSpec::cubic(2, Boundary::Open).unwrap(), 1);
        let mut reg = GroundStateRegistry::new();
        let e0 = brute_force_ground_state(&inst).unwrap().energy;
        reg.insert(inst.id(), e0 + 1.0).unwrap();
        let cfg = CampaignConfig::new(vec![ca_linear()], vec![2000], 4, 5);
        assert!(matches!(
            run_campaign(&[inst], &reg, &cfg),
            Err(Error::GroundStateIntegrity { .. })
        ));
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let lat = LatticeSpec::cubic(3, Boundary::Periodic).unwrap();
        let insts: Vec<_> = (0..2).map(|k| generate_spin_glass(lat, k)).collect();
        let mut reg = GroundStateRegistry::new();
        for i in &insts {
            reg.insert(i.id(), -1e3).unwrap();
        }
        let sqa = Variant::quantum("SQA-linear", ScheduleSpec::Linear { start: 1.5, end: 0.0 }, 8.0, 8);
        let mut cfg = CampaignConfig::new(vec![ca_linear(), sqa], vec![20, 40], 2, 11);
        cfg.workers = 1;
        let a = run_campaign(&insts, &reg, &cfg).unwrap();
        cfg.workers = 3;
        let b = run_campaign(&insts, &reg, &cfg).unwrap();
        assert_eq!(write_records(&a.records), write_records(&b.records));
    }

    #[test]
    fn easy_ensemble_always_succeeds() {
        // Ferromagnets with a uniform field: all-up is separated from
        // all-down by 2hN, far more than freeze-out can overcome.
        let lat = LatticeSpec::cubic(2, Boundary::Open).unwrap();
        let insts: Vec<_> = (0..3)
            .map(|k| {
                let fm = generate_ferromagnet(lat, 0, 0.5).unwrap();
                SpinGlassInstance::new(lat, fm.bonds().to_vec(), vec![0.5; 8], format!("fm{k}"), k)
                    .unwrap()
            })
            .collect();
        let reg = registry(&insts);
        let sqa = Variant::quantum("SQA", ScheduleSpec::Linear { start: 2.0, end: 0.0 }, 8.0, 16);
        let cfg = CampaignConfig::new(
            vec![Variant::classical("CA", ScheduleSpec::Linear { start: 0.1, end: 5.0 }), sqa],
            vec![1000],
            10,
            1,
        );
        let res = run_campaign(&insts, &reg, &cfg).unwrap();
        assert_eq!(res.records.len(), 60);
        assert!(res.records.iter().all(|r| r.success), "{:?}", res.records);
        let residuals: Vec<f64> = res.records.iter().map(|r| r.residual).collect();
        assert_eq!(crate::stats::median(&residuals), 0.0);
    }

    #[test]
    fn validation_lists_all_problems() {
        let mut cfg = CampaignConfig::new(vec![], vec![], 0, 1);
        cfg.target_probability = 1.5;
        match cfg.validate() {
            Err(Error::InvalidParameter(msg)) => assert_eq!(msg.matches(';').count(), 3),
            other => panic!("{other:?}"),
        }
    }
}
