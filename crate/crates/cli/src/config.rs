//! Config file loading and flag overlay.
//!
//! The TOML file has global keys (`seed`, `workers`, `out_dir`, `log`) and
//! one table per subcommand whose keys match the long flags with `_` for
//! `-`. A flag given on the command line wins over the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::Deserialize;

/// Validation failure listing every problem found.
#[derive(Debug)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration")?;
        for p in &self.0 {
            write!(f, "\n  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Collects problems while resolving a config.
#[derive(Default)]
pub struct Problems(Vec<String>);

impl Problems {
    pub fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    pub fn require<T>(&mut self, value: Option<T>, key: &str) -> Option<T> {
        if value.is_none() {
            self.push(format!("missing required setting `{key}`"));
        }
        value
    }

    pub fn parse<T>(&mut self, value: Option<&str>, key: &str) -> Option<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let v = value?;
        match v.parse() {
            Ok(x) => Some(x),
            Err(e) => {
                self.push(format!("`{key}`: {e}"));
                None
            }
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn existing(&mut self, path: &Path, key: &str) {
        if !path.exists() {
            self.push(format!("`{key}`: {} does not exist", path.display()));
        }
    }

    pub fn finish(self) -> Result<(), ConfigError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(self.0))
        }
    }
}

/// Fills every `None` in `$flags` from `$file`.
macro_rules! overlay {
    ($flags:expr, $file:expr; $($f:ident),* $(,)?) => {
        $( if $flags.$f.is_none() { $flags.$f = $file.$f.clone(); } )*
    };
}

fn rebase(p: &mut Option<PathBuf>, base: &Path) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

fn rebase_all(ps: &mut Option<Vec<PathBuf>>, base: &Path) {
    for p in ps.iter_mut().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateArgs {
    /// Lattice dimensions Lx Ly Lz.
    #[arg(long, num_args = 3, value_names = ["LX", "LY", "LZ"])]
    pub dims: Option<Vec<usize>>,
    /// periodic or open.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Number of instances.
    #[arg(long)]
    pub count: Option<usize>,
    /// Ensemble seed (required for spin glasses).
    #[arg(long)]
    pub seed: Option<u64>,
    /// spin_glass (default) or ferromagnet.
    #[arg(long)]
    pub kind: Option<String>,
    /// Ferromagnet field strength.
    #[arg(long)]
    pub field: Option<f64>,
    /// Ferromagnet field site.
    #[arg(long)]
    pub field_site: Option<usize>,
    /// Output directory for instance files [default: <out-dir>/instances].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundstateArgs {
    /// Instance files.
    #[arg(long, num_args = 1..)]
    pub instances: Option<Vec<PathBuf>>,
    /// Directory whose *.txt files are instances.
    #[arg(long)]
    pub instance_dir: Option<PathBuf>,
    /// Registry of known ground-state energies to merge in.
    #[arg(long)]
    pub import: Option<PathBuf>,
    /// Output registry [default: <out-dir>/ground_states.txt].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileArgs {
    /// classical (beta grid) or quantum (s grid).
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long, num_args = 1..)]
    pub instances: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub instance_dir: Option<PathBuf>,
    /// Explicit control grid; overrides start/end/points.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_start: Option<f64>,
    #[arg(long)]
    pub grid_end: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Quantum: inverse temperature.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Quantum: initial transverse field.
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Quantum: Trotter slices.
    #[arg(long)]
    pub slices: Option<usize>,
    /// Quantum: open or periodic [default: periodic].
    #[arg(long)]
    pub time_boundary: Option<String>,
    /// Quantum: simple or general [default: simple].
    #[arg(long)]
    pub denominator: Option<String>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub measure: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV [default: <out-dir>/profile.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleArgs {
    /// linear, exponential, hybrid or adaptive.
    #[arg(long)]
    pub shape: Option<String>,
    /// classical or quantum (ignored for hybrid and adaptive).
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub start: Option<f64>,
    #[arg(long)]
    pub end: Option<f64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Hybrid: initial transverse field.
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Adaptive: profile CSV.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Output CSV [default: <out-dir>/schedule.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealArgs {
    /// ca or sqa.
    #[arg(long)]
    pub method: Option<String>,
    /// Schedule CSV.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Instance file.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// SQA: inverse temperature.
    #[arg(long)]
    pub beta: Option<f64>,
    /// SQA: Trotter slices.
    #[arg(long)]
    pub slices: Option<usize>,
    /// SQA: open or periodic [default: open].
    #[arg(long)]
    pub time_boundary: Option<String>,
    /// SQA: best_slice or random_slice.
    #[arg(long)]
    pub readout: Option<String>,
    /// Registry used to add the residual energy to the report.
    #[arg(long)]
    pub ground_states: Option<PathBuf>,
    /// Report file [default: standard output].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// An ensemble generated on the fly by `campaign`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub dims: Vec<usize>,
    pub boundary: String,
    pub count: usize,
    pub seed: u64,
}

/// One campaign variant.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantConfig {
    pub label: Option<String>,
    pub method: Option<String>,
    /// linear, exponential, hybrid or adaptive.
    pub schedule: Option<String>,
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub beta: Option<f64>,
    pub beta_start: Option<f64>,
    pub beta_end: Option<f64>,
    pub gamma0: Option<f64>,
    pub slices: Option<usize>,
    pub profile: Option<PathBuf>,
    pub time_boundary: Option<String>,
    pub readout: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignArgs {
    #[arg(long, num_args = 1..)]
    pub instances: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub instance_dir: Option<PathBuf>,
    /// Registry of ground-state energies.
    #[arg(long)]
    pub ground_states: Option<PathBuf>,
    /// Compute missing ground states exactly where feasible.
    #[arg(long)]
    pub exact: bool,
    /// Sweep budgets t_a.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub sweeps: Option<Vec<usize>>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Target success probability [default: 0.9].
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub success_tolerance: Option<f64>,
    #[arg(long)]
    pub relative_tolerance: Option<f64>,
    /// sqrt_n, n or l [default: sqrt_n].
    #[arg(long)]
    pub abscissa: Option<String>,
    /// Print the run matrix and exit without writing anything.
    #[arg(long)]
    pub dry_run: bool,
    /// Output directory [default: <out-dir>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(skip)]
    pub ensembles: Vec<EnsembleConfig>,
    #[arg(skip)]
    pub variants: Vec<VariantConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub log: Option<String>,
    pub generate: GenerateArgs,
    pub groundstate: GroundstateArgs,
    pub profile: ProfileArgs,
    pub schedule: ScheduleArgs,
    pub anneal: AnnealArgs,
    pub campaign: CampaignArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(vec![format!("{}: {e}", path.display())]))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| ConfigError(vec![format!("{}: {e}", path.display())]))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        cfg.rebase(&base);
        Ok(cfg)
    }

    /// Makes relative paths in the file relative to the file's directory.
    fn rebase(&mut self, base: &Path) {
        rebase(&mut self.out_dir, base);
        rebase(&mut self.generate.out, base);
        rebase_all(&mut self.groundstate.instances, base);
        rebase(&mut self.groundstate.instance_dir, base);
        rebase(&mut self.groundstate.import, base);
        rebase(&mut self.groundstate.out, base);
        rebase_all(&mut self.profile.instances, base);
        rebase(&mut self.profile.instance_dir, base);
        rebase(&mut self.profile.out, base);
        rebase(&mut self.schedule.profile, base);
        rebase(&mut self.schedule.out, base);
        rebase(&mut self.anneal.schedule, base);
        rebase(&mut self.anneal.instance, base);
        rebase(&mut self.anneal.ground_states, base);
        rebase(&mut self.anneal.out, base);
        rebase_all(&mut self.campaign.instances, base);
        rebase(&mut self.campaign.instance_dir, base);
        rebase(&mut self.campaign.ground_states, base);
        rebase(&mut self.campaign.out, base);
        for v in &mut self.campaign.variants {
            rebase(&mut v.profile, base);
        }
    }
}

impl GenerateArgs {
    pub fn overlay(&mut self, file: &Self) {
        overlay!(self, file; dims, boundary, count, seed, kind, field, field_site, out);
    }
}

impl GroundstateArgs {
    pub fn overlay(&mut self, file: &Self) {
        overlay!(self, file; instances, instance_dir, import, out);
    }
}

impl ProfileArgs {
    pub fn overlay(&mut self, file: &Self) {
        overlay!(self, file; kind, instances, instance_dir, grid, grid_start, grid_end, grid_points,
            beta, gamma0, slices, time_boundary, denominator, warmup, measure, seed, out);
    }
}

impl ScheduleArgs {
    pub fn overlay(&mut self, file: &Self) {
        overlay!(self, file; shape, kind, start, end, sweeps, gamma0, profile, out);
    }
}

impl AnnealArgs {
    pub fn overlay(&mut self, file: &Self) {
        overlay!(self, file; method, schedule, instance, seed, beta, slices, time_boundary, readout,
            ground_states, out);
    }
}

impl CampaignArgs {
    pub fn overlay(&mut self, file: &Self) {
        overlay!(self, file; instances, instance_dir, ground_states, sweeps, repetitions, seed,
            target, success_tolerance, relative_tolerance, abscissa, out);
        self.exact |= file.exact;
        self.dry_run |= file.dry_run;
        self.ensembles = file.ensembles.clone();
        self.variants = file.variants.clone();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<FileConfig>("[campaign]\nsweeps = [10]\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn flags_win_over_file() {
        let file: FileConfig = toml::from_str("[anneal]\nseed = 1\nmethod = \"ca\"\n").unwrap();
        let mut flags = AnnealArgs { seed: Some(9), ..Default::default() };
        flags.overlay(&file.anneal);
        assert_eq!(flags.seed, Some(9));
        assert_eq!(flags.method.as_deref(), Some("ca"));
    }

    #[test]
    fn problems_are_all_kept() {
        let mut p = Problems::default();
        p.require::<u64>(None, "seed");
        let _: Option<f64> = p.parse(Some("x"), "beta");
        let err = p.finish().unwrap_err();
        assert_eq!(err.0.len(), 2);
        assert!(err.to_string().contains("seed") && err.to_string().contains("beta"));
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[anneal]\ninstance = \"i.txt\"\n").unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!(cfg.anneal.instance.unwrap(), dir.path().join("i.txt"));
    }
}
