//! Subcommand implementations. Each one resolves its settings first, so a
//! bad config fails before any work starts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use annealab::benchmark::{
    emit_results, run_campaign, Abscissa, CampaignConfig, Method, OutputPaths, ScheduleSpec,
    TtsSummary, Variant,
};
use annealab::classical::{ca_anneal, CaRunParams};
use annealab::instance::{
    generate_ferromagnet, generate_spin_glass_indexed, load_instance, save_instance,
};
use annealab::oracle::{exact_ground_state, import_ground_states, GroundStateRegistry};
use annealab::pimc::{sqa_anneal, PimcParams, Readout, TimeBoundary, DEFAULT_SLICES};
use annealab::schedule::{
    build_adaptive_schedule, exponential_schedule, hybrid_schedule, linear_schedule,
    measure_classical_profile, measure_quantum_profile, ClassicalSampling, Denominator,
    FluctuationProfile, ProfileKind, QuantumSampling, Schedule, ScheduleKind,
};
use annealab::{Boundary, LatticeSpec, SpinGlassInstance};
use serde::Serialize;

use crate::config::{
    AnnealArgs, CampaignArgs, GenerateArgs, GroundstateArgs, Problems, ProfileArgs, ScheduleArgs,
};

/// Missing ground-state energies; maps to its own exit code.
#[derive(Debug)]
pub struct MissingGroundTruth(pub Vec<String>);

impl std::fmt::Display for MissingGroundTruth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "no ground-state energy for: {}", self.0.join(", "))
    }
}

impl std::error::Error for MissingGroundTruth {}

/// Settings shared by every subcommand.
pub struct Global {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

impl Global {
    fn output(&self, explicit: Option<PathBuf>, default: &str) -> PathBuf {
        match explicit {
            Some(p) if p.is_absolute() => p,
            Some(p) => self.out_dir.join(p),
            None => self.out_dir.join(default),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Instance files named directly plus the `*.txt` files of a directory.
fn instance_paths(
    p: &mut Problems,
    files: &Option<Vec<PathBuf>>,
    dir: &Option<PathBuf>,
    key: &str,
) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for f in files.iter().flatten() {
        p.existing(f, &format!("{key}.instances"));
        out.push(f.clone());
    }
    if let Some(d) = dir {
        match fs::read_dir(d) {
            Ok(entries) => {
                let mut found: Vec<PathBuf> = entries
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                    .collect();
                found.sort();
                out.extend(found);
            }
            Err(e) => p.push(format!("`{key}.instance_dir`: {}: {e}", d.display())),
        }
    }
    out
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<SpinGlassInstance>> {
    paths
        .iter()
        .map(|p| load_instance(p).with_context(|| format!("loading instance {}", p.display())))
        .collect()
}

fn lattice(p: &mut Problems, dims: Option<&[usize]>, boundary: Option<&str>, key: &str) -> Option<LatticeSpec> {
    let boundary: Option<Boundary> = p.parse(boundary.or(Some("periodic")), &format!("{key}.boundary"));
    let dims = p.require(dims, &format!("{key}.dims"))?;
    if dims.len() != 3 {
        p.push(format!("`{key}.dims` needs 3 values, got {}", dims.len()));
        return None;
    }
    match LatticeSpec::new([dims[0], dims[1], dims[2]], boundary?) {
        Ok(l) => Some(l),
        Err(e) => {
            p.push(format!("`{key}`: {e}"));
            None
        }
    }
}

pub fn generate(args: GenerateArgs, g: &Global) -> Result<()> {
    let mut p = Problems::default();
    let lat = lattice(&mut p, args.dims.as_deref(), args.boundary.as_deref(), "generate");
    let kind = args.kind.as_deref().unwrap_or("spin_glass");
    let ferro = match kind {
        "spin_glass" => false,
        "ferromagnet" => true,
        other => {
            p.push(format!("`generate.kind`: unknown kind '{other}'"));
            false
        }
    };
    let seed = if ferro { args.seed.or(g.seed) } else { p.require(args.seed.or(g.seed), "generate.seed") };
    let count = args.count.unwrap_or(1);
    if count == 0 {
        p.push("`generate.count` must be >= 1");
    }
    p.finish()?;
    let lat = lat.expect("validated");
    let dir = g.output(args.out, "instances");
    let instances: Vec<SpinGlassInstance> = if ferro {
        let site = args.field_site.unwrap_or(0);
        vec![generate_ferromagnet(lat, site, args.field.unwrap_or(0.0))?]
    } else {
        let seed = seed.expect("validated");
        (0..count as u64).map(|i| generate_spin_glass_indexed(lat, seed, i)).collect()
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for inst in &instances {
        let path = dir.join(format!("{}.txt", inst.id()));
        save_instance(inst, &path)?;
        println!("{}", path.display());
    }
    log::info!("wrote {} instances to {}", instances.len(), dir.display());
    Ok(())
}

pub fn groundstate(args: GroundstateArgs, g: &Global) -> Result<()> {
    let mut p = Problems::default();
    let paths = instance_paths(&mut p, &args.instances, &args.instance_dir, "groundstate");
    if paths.is_empty() && args.import.is_none() {
        p.push("`groundstate` needs instances or an import file");
    }
    if let Some(i) = &args.import {
        p.existing(i, "groundstate.import");
    }
    p.finish()?;
    let mut registry = match &args.import {
        Some(path) => import_ground_states(path)?,
        None => GroundStateRegistry::new(),
    };
    let mut missing = Vec::new();
    for inst in load_all(&paths)? {
        if registry.contains(inst.id()) {
            continue;
        }
        match exact_ground_state(&inst) {
            Ok(gs) => {
                log::info!("{}: E0 = {} ({:?})", inst.id(), gs.energy, gs.method);
                registry.insert(inst.id(), gs.energy)?;
            }
            Err(e) => {
                log::error!("{}: {e}", inst.id());
                missing.push(inst.id().to_string());
            }
        }
    }
    let out = g.output(args.out, "ground_states.txt");
    write_file(&out, &registry.to_text())?;
    println!("{}", out.display());
    if missing.is_empty() {
        Ok(())
    } else {
        Err(MissingGroundTruth(missing).into())
    }
}

fn grid(p: &mut Problems, args: &ProfileArgs, default: (f64, f64)) -> Vec<f64> {
    if let Some(g) = &args.grid {
        return g.clone();
    }
    let start = args.grid_start.unwrap_or(default.0);
    let end = args.grid_end.unwrap_or(default.1);
    let n = args.grid_points.unwrap_or(20);
    if n < 2 {
        p.push("`profile.grid_points` must be >= 2");
        return Vec::new();
    }
    (0..n).map(|k| start + (end - start) * k as f64 / (n - 1) as f64).collect()
}

pub fn profile(args: ProfileArgs, g: &Global) -> Result<()> {
    let mut p = Problems::default();
    let paths = instance_paths(&mut p, &args.instances, &args.instance_dir, "profile");
    if paths.is_empty() {
        p.push("`profile` needs at least one instance");
    }
    let seed = p.require(args.seed.or(g.seed), "profile.seed");
    let quantum = match args.kind.as_deref().unwrap_or("classical") {
        "classical" => false,
        "quantum" => true,
        other => {
            p.push(format!("`profile.kind`: unknown kind '{other}'"));
            false
        }
    };
    let grid = grid(&mut p, &args, if quantum { (0.0, 0.95) } else { (0.1, 5.0) });
    let warmup = args.warmup.unwrap_or(500);
    let measure = args.measure.unwrap_or(2000);
    let quantum_cfg = if quantum {
        let beta = p.require(args.beta, "profile.beta");
        let gamma0 = p.require(args.gamma0, "profile.gamma0");
        let tb: Option<TimeBoundary> = p.parse(Some(args.time_boundary.as_deref().unwrap_or("periodic")), "profile.time_boundary");
        let den: Option<Denominator> = p.parse(Some(args.denominator.as_deref().unwrap_or("simple")), "profile.denominator");
        match (beta, gamma0, tb, den, seed) {
            (Some(b), Some(g0), Some(tb), Some(den), Some(seed)) => {
                let mut q = QuantumSampling::new(b, g0, args.slices.unwrap_or(64), seed);
                q.time_boundary = tb;
                q.denominator = den;
                q.warmup = warmup;
                q.measure = measure;
                Some(q)
            }
            _ => None,
        }
    } else {
        None
    };
    p.finish()?;
    let instances = load_all(&paths)?;
    let profile = match quantum_cfg {
        Some(q) => measure_quantum_profile(&instances, &grid, &q)?,
        None => measure_classical_profile(
            &instances,
            &grid,
            &ClassicalSampling { warmup, measure, seed: seed.expect("validated") },
        )?,
    };
    let out = g.output(args.out, "profile.csv");
    write_file(&out, &profile.to_csv())?;
    println!("{}", out.display());
    Ok(())
}

pub fn schedule(args: ScheduleArgs, g: &Global) -> Result<()> {
    let mut p = Problems::default();
    let shape = args.shape.clone().unwrap_or_else(|| "linear".into());
    let sweeps = p.require(args.sweeps, "schedule.sweeps");
    let kind: Option<ScheduleKind> = p.parse(Some(args.kind.as_deref().unwrap_or("classical")), "schedule.kind");
    let profile = match (&shape[..], &args.profile) {
        ("adaptive", Some(path)) => {
            p.existing(path, "schedule.profile");
            Some(path.clone())
        }
        ("adaptive", None) => {
            p.push("adaptive schedules need `schedule.profile`");
            None
        }
        _ => None,
    };
    if !["linear", "exponential", "hybrid", "adaptive"].contains(&&shape[..]) {
        p.push(format!("`schedule.shape`: unknown shape '{shape}'"));
    }
    let needs_range = matches!(&shape[..], "linear" | "exponential" | "hybrid");
    if needs_range {
        p.require(args.start, "schedule.start");
        p.require(args.end, "schedule.end");
    }
    if shape == "hybrid" {
        p.require(args.gamma0, "schedule.gamma0");
    }
    p.finish()?;
    let sweeps = sweeps.expect("validated");
    let sched = match &shape[..] {
        "linear" => linear_schedule(kind.expect("validated"), args.start.unwrap(), args.end.unwrap(), sweeps)?,
        "exponential" => exponential_schedule(kind.expect("validated"), args.start.unwrap(), args.end.unwrap(), sweeps)?,
        "hybrid" => hybrid_schedule((args.start.unwrap(), args.end.unwrap()), (args.gamma0.unwrap(), 0.0), sweeps)?,
        _ => {
            let prof = FluctuationProfile::load(profile.expect("validated"))?;
            let (start, end) = match prof.kind() {
                ProfileKind::Classical => (
                    args.start.unwrap_or(prof.grid()[0]),
                    args.end.unwrap_or(*prof.grid().last().expect("non-empty grid")),
                ),
                ProfileKind::Quantum { .. } => (args.start.unwrap_or(0.0), args.end.unwrap_or(1.0)),
            };
            build_adaptive_schedule(&prof, sweeps, start, end)?
        }
    };
    let out = g.output(args.out, "schedule.csv");
    write_file(&out, &sched.to_csv())?;
    println!("{}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct AnnealReport {
    instance: String,
    #[serde(rename = "N")]
    n: usize,
    method: Method,
    schedule: String,
    sweeps: usize,
    seed: u64,
    energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    e0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slice: Option<usize>,
    config: String,
}

pub fn anneal(args: AnnealArgs, g: &Global) -> Result<()> {
    let mut p = Problems::default();
    let method = p.require(args.method.as_deref(), "anneal.method");
    let method: Option<Method> = p.parse(method, "anneal.method");
    let seed = p.require(args.seed.or(g.seed), "anneal.seed");
    if let Some(s) = p.require(args.schedule.as_ref(), "anneal.schedule") {
        p.existing(s, "anneal.schedule");
    }
    if let Some(i) = p.require(args.instance.as_ref(), "anneal.instance") {
        p.existing(i, "anneal.instance");
    }
    if let Some(r) = &args.ground_states {
        p.existing(r, "anneal.ground_states");
    }
    let tb: Option<TimeBoundary> = p.parse(Some(args.time_boundary.as_deref().unwrap_or("open")), "anneal.time_boundary");
    let readout: Option<Readout> = p.parse(Some(args.readout.as_deref().unwrap_or("best_slice")), "anneal.readout");
    if method == Some(Method::Sqa) {
        p.require(args.beta, "anneal.beta");
    }
    p.finish()?;
    let (method, seed) = (method.expect("validated"), seed.expect("validated"));
    let inst = load_instance(args.instance.as_ref().expect("validated"))?;
    let schedule_path = args.schedule.as_ref().expect("validated");
    let sched = Schedule::load(schedule_path)?;
    let sweeps = sched.len();
    let (config, energy, slice) = match method {
        Method::Ca => {
            let out = ca_anneal(&inst, &CaRunParams::new(sched, seed))?;
            (out.config, out.energy, None)
        }
        Method::Sqa => {
            let mut params = PimcParams::new(
                sched,
                args.beta.expect("validated"),
                args.slices.unwrap_or(DEFAULT_SLICES),
                seed,
            );
            params.time_boundary = tb.expect("validated");
            params.readout = readout.expect("validated");
            let out = sqa_anneal(&inst, &params)?;
            (out.config, out.energy, Some(out.slice))
        }
    };
    let e0 = match &args.ground_states {
        Some(path) => Some(import_ground_states(path)?.get(inst.id())?),
        None => None,
    };
    let report = AnnealReport {
        instance: inst.id().to_string(),
        n: inst.num_spins(),
        method,
        schedule: schedule_path.display().to_string(),
        sweeps,
        seed,
        energy,
        e0,
        residual: e0.map(|e| energy - e),
        slice,
        config: config.to_sign_string(),
    };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match args.out {
        Some(path) => write_file(&g.output(Some(path), ""), &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn variants(p: &mut Problems, args: &CampaignArgs) -> Vec<Variant> {
    if args.variants.is_empty() {
        p.push("`campaign.variants` is empty; add [[campaign.variants]] tables to the config file");
    }
    let mut out = Vec::new();
    for (k, v) in args.variants.iter().enumerate() {
        let key = |f: &str| format!("campaign.variants[{k}].{f}");
        let before = p.len();
        let method = p.require(v.method.as_deref(), &key("method"));
        let method: Option<Method> = p.parse(method, &key("method"));
        let shape = v.schedule.as_deref().unwrap_or("linear");
        let schedule = match shape {
            "linear" | "exponential" => {
                let start = p.require(v.start, &key("start"));
                let end = p.require(v.end, &key("end"));
                start.zip(end).map(|(start, end)| {
                    if shape == "linear" {
                        ScheduleSpec::Linear { start, end }
                    } else {
                        ScheduleSpec::Exponential { start, end }
                    }
                })
            }
            "hybrid" => {
                let b0 = p.require(v.beta_start, &key("beta_start"));
                let b1 = p.require(v.beta_end, &key("beta_end"));
                let g0 = p.require(v.gamma0, &key("gamma0"));
                match (b0, b1, g0) {
                    (Some(b0), Some(b1), Some(g0)) => Some(ScheduleSpec::Hybrid { beta: (b0, b1), gamma0: g0 }),
                    _ => None,
                }
            }
            "adaptive" => match p.require(v.profile.as_ref(), &key("profile")) {
                Some(path) if path.exists() => match FluctuationProfile::load(path) {
                    Ok(profile) => {
                        let (start, end) = match profile.kind() {
                            ProfileKind::Classical => (
                                v.start.unwrap_or(profile.grid()[0]),
                                v.end.unwrap_or(*profile.grid().last().expect("non-empty")),
                            ),
                            ProfileKind::Quantum { .. } => (v.start.unwrap_or(0.0), v.end.unwrap_or(1.0)),
                        };
                        Some(ScheduleSpec::Adaptive { profile, start, end })
                    }
                    Err(e) => {
                        p.push(format!("`{}`: {e}", key("profile")));
                        None
                    }
                },
                Some(path) => {
                    p.push(format!("`{}`: {} does not exist", key("profile"), path.display()));
                    None
                }
                None => None,
            },
            other => {
                p.push(format!("`{}`: unknown schedule '{other}'", key("schedule")));
                None
            }
        };
        let tb: Option<TimeBoundary> = p.parse(Some(v.time_boundary.as_deref().unwrap_or("open")), &key("time_boundary"));
        let readout: Option<Readout> = p.parse(Some(v.readout.as_deref().unwrap_or("best_slice")), &key("readout"));
        if method == Some(Method::Sqa) {
            p.require(v.beta, &key("beta"));
        }
        if p.len() != before {
            continue;
        }
        let (method, schedule) = (method.expect("checked"), schedule.expect("checked"));
        let label = v.label.clone().unwrap_or_else(|| format!("{method}-{shape}"));
        let variant = match method {
            Method::Ca => Variant::classical(label, schedule),
            Method::Sqa => {
                let mut q = Variant::quantum(label, schedule, v.beta.expect("checked"), v.slices.unwrap_or(DEFAULT_SLICES));
                q.time_boundary = tb.expect("checked");
                q.readout = readout.expect("checked");
                q
            }
        };
        out.push(variant);
    }
    let mut labels: Vec<&str> = out.iter().map(|v| v.label.as_str()).collect();
    labels.sort();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        p.push("campaign variant labels must be unique");
    }
    out
}

pub fn campaign(args: CampaignArgs, g: &Global, workers: usize) -> Result<()> {
    let mut p = Problems::default();
    let paths = instance_paths(&mut p, &args.instances, &args.instance_dir, "campaign");
    let mut ensembles = Vec::new();
    for (k, e) in args.ensembles.iter().enumerate() {
        if let Some(l) = lattice(&mut p, Some(&e.dims), Some(&e.boundary), &format!("campaign.ensembles[{k}]")) {
            ensembles.push((l, e.seed, e.count));
        }
    }
    if paths.is_empty() && ensembles.is_empty() {
        p.push("`campaign` needs instances, an instance_dir or ensembles");
    }
    if let Some(r) = &args.ground_states {
        p.existing(r, "campaign.ground_states");
    } else if !args.exact {
        p.push("`campaign` needs `ground_states` or `exact = true`");
    }
    let seed = p.require(args.seed.or(g.seed), "campaign.seed");
    let abscissa: Option<Abscissa> = p.parse(Some(args.abscissa.as_deref().unwrap_or("sqrt_n")), "campaign.abscissa");
    let variants = variants(&mut p, &args);
    let mut config = CampaignConfig::new(
        variants,
        args.sweeps.clone().unwrap_or_default(),
        args.repetitions.unwrap_or(1),
        seed.unwrap_or(0),
    );
    if let Some(t) = args.target {
        config.target_probability = t;
    }
    if let Some(t) = args.success_tolerance {
        config.success_tolerance = t;
    }
    if let Some(t) = args.relative_tolerance {
        config.relative_tolerance = t;
    }
    config.workers = workers;
    if let Err(e) = config.validate() {
        p.push(e.to_string());
    }
    p.finish()?;

    let generated: usize = ensembles.iter().map(|e| e.2).sum();
    let total_instances = paths.len() + generated;
    let runs = config.planned_runs(total_instances);
    println!(
        "planned runs: {total_instances} instances x {} variants x {} budgets x {} repetitions = {runs}",
        config.variants.len(),
        config.sweeps.len(),
        config.repetitions
    );
    if args.dry_run {
        return Ok(());
    }

    let mut instances = load_all(&paths)?;
    for (lat, seed, count) in ensembles {
        instances.extend((0..count as u64).map(|i| generate_spin_glass_indexed(lat, seed, i)));
    }
    let mut registry = match &args.ground_states {
        Some(path) => import_ground_states(path)?,
        None => GroundStateRegistry::new(),
    };
    if args.exact {
        for inst in &instances {
            if registry.contains(inst.id()) {
                continue;
            }
            match exact_ground_state(inst) {
                Ok(gs) => registry.insert(inst.id(), gs.energy)?,
                Err(e) => log::warn!("{}: no exact ground state ({e})", inst.id()),
            }
        }
    }
    let result = run_campaign(&instances, &registry, &config)?;
    let summary = TtsSummary::from_records(
        &result.records,
        config.target_probability,
        abscissa.expect("validated"),
        seed.expect("validated"),
    )?;
    let dir = match args.out {
        Some(o) => g.output(Some(o), ""),
        None => g.out_dir.clone(),
    };
    let out = OutputPaths::in_dir(&dir);
    emit_results(&result.records, &summary, &out)?;
    if args.exact || args.ground_states.is_some() {
        write_file(&dir.join("ground_states.txt"), &registry.to_text())?;
    }
    for (variant, _, fit) in &summary.fits {
        match fit {
            Some(f) => log::info!("{variant}: slope {:.4} [{:.4}, {:.4}]", f.slope, f.ci_lo, f.ci_hi),
            None => log::info!("{variant}: no scaling fit"),
        }
    }
    println!("{}", dir.display());
    if result.omitted.is_empty() {
        Ok(())
    } else {
        Err(MissingGroundTruth(result.omitted.into_iter().map(|o| o.0).collect()).into())
    }
}
