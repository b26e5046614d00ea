//! Record and table output.
//!
//! Records are JSON lines. Tables are CSV; their `method` column holds the
//! variant label.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::tts::{curves, TtsSummary};
use super::BenchmarkRecord;
use crate::{Error, Result};

pub const CURVE_HEADER: &str = "method,N,t_a,median_Eres_per_spin,q25,q75";
pub const TTS_HEADER: &str = "method,N,t_a,successes,trials,p,p_lo,p_hi,R,R_int,median_effort";
pub const EFFORT_HEADER: &str = "method,N,t_a_opt,interior,instance,effort";
pub const FIT_HEADER: &str = "method,abscissa,slope,intercept,ci_lo,ci_hi,sizes";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub records: PathBuf,
    pub curves: PathBuf,
    pub tts: PathBuf,
    pub efforts: PathBuf,
    pub fits: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let d = dir.as_ref();
        OutputPaths {
            records: d.join("records.jsonl"),
            curves: d.join("curves.csv"),
            tts: d.join("tts.csv"),
            efforts: d.join("efforts.csv"),
            fits: d.join("fits.csv"),
        }
    }

    pub fn all(&self) -> [&Path; 5] {
        [&self.records, &self.curves, &self.tts, &self.efforts, &self.fits]
    }
}

/// One JSON object per line.
pub fn write_records(records: &[BenchmarkRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records always serialise"));
        out.push('\n');
    }
    out
}

/// Inverse of [`write_records`]; blank lines are skipped.
pub fn parse_records(text: &str) -> Result<Vec<BenchmarkRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: k + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn curve_table(records: &[BenchmarkRecord]) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for c in curves(records) {
        let _ = writeln!(s, "{},{},{},{},{},{}", c.variant, c.n, c.sweeps, num(c.median), num(c.q25), num(c.q75));
    }
    s
}

fn tts_table(summary: &TtsSummary) -> String {
    let mut s = format!("{TTS_HEADER}\n");
    for p in &summary.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.variant,
            p.n,
            p.sweeps,
            p.success.successes,
            p.success.trials,
            num(p.success.p),
            num(p.success.lo),
            num(p.success.hi),
            num(p.repetitions.r),
            p.repetitions.r_int.map(|r| r.to_string()).unwrap_or_default(),
            num(p.median_effort),
        );
    }
    s
}

fn effort_table(summary: &TtsSummary) -> String {
    let mut s = format!("{EFFORT_HEADER}\n");
    for o in &summary.optima {
        for (k, e) in o.instance_efforts.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{},{},{}", o.variant, o.n, o.sweeps, o.interior, k, num(*e));
        }
    }
    s
}

fn fit_table(summary: &TtsSummary) -> String {
    let mut s = format!("{FIT_HEADER}\n");
    let abscissa = match summary.abscissa {
        super::Abscissa::SqrtN => "sqrt_N",
        super::Abscissa::N => "N",
        super::Abscissa::L => "L",
    };
    for (variant, _, fit) in &summary.fits {
        if let Some(f) = fit {
            let _ = writeln!(
                s,
                "{variant},{abscissa},{},{},{},{},{}",
                num(f.slope),
                num(f.intercept),
                num(f.ci_lo),
                num(f.ci_hi),
                f.sizes
            );
        }
    }
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the record stream and every table. An empty campaign still yields
/// files carrying their headers.
pub fn emit_results(records: &[BenchmarkRecord], summary: &TtsSummary, paths: &OutputPaths) -> Result<()> {
    write(&paths.records, &write_records(records))?;
    write(&paths.curves, &curve_table(records))?;
    write(&paths.tts, &tts_table(summary))?;
    write(&paths.efforts, &effort_table(summary))?;
    write(&paths.fits, &fit_table(summary))
}
