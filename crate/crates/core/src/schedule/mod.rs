//! Annealing schedules: per-sweep values of the inverse temperature and/or the
//! transverse field, plus constructors and the CSV file format.
//!
//! ```text
//! sweep,beta,gamma
//! 0,0.1,
//! 1,0.2,
//! ```
//!
//! A column is left empty where the schedule does not control it.

mod adaptive;
mod gamma0;
mod profile;

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use adaptive::{adaptive_controls, build_adaptive_schedule, AdaptiveControls, FLOOR_FRACTION};
pub use gamma0::{optimize_gamma0, Gamma0Row, Gamma0Search, Gamma0Selection};
pub use profile::{
    measure_classical_profile, measure_quantum_profile, ClassicalSampling, Denominator,
    FluctuationProfile, ProfileKind, QuantumSampling,
};

/// Floor added to both endpoints of an exponential schedule that touches zero.
pub const EXPONENTIAL_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Inverse temperature only (classical annealing).
    ClassicalBeta,
    /// Transverse field only, at a fixed inverse temperature.
    QuantumGamma,
    /// Inverse temperature and transverse field together.
    Hybrid,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::ClassicalBeta => "classical_beta",
            ScheduleKind::QuantumGamma => "quantum_gamma",
            ScheduleKind::Hybrid => "hybrid",
        })
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical_beta" | "classical" | "beta" => Ok(ScheduleKind::ClassicalBeta),
            "quantum_gamma" | "quantum" | "gamma" => Ok(ScheduleKind::QuantumGamma),
            "hybrid" => Ok(ScheduleKind::Hybrid),
            _ => Err(Error::param(format!("unknown schedule kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
}

/// One control value per sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    kind: ScheduleKind,
    points: Vec<SchedulePoint>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidSchedule(msg.into())
}

fn check_monotone(values: &[f64], increasing: bool, name: &str) -> Result<()> {
    for (k, w) in values.windows(2).enumerate() {
        let ok = if increasing { w[1] >= w[0] } else { w[1] <= w[0] };
        if !ok {
            let dir = if increasing { "non-decreasing" } else { "non-increasing" };
            return Err(bad(format!("{name} must be {dir}: step {k} goes {} -> {}", w[0], w[1])));
        }
    }
    Ok(())
}

impl Schedule {
    /// Validates presence, sign and monotonicity of the controls for the kind.
    pub fn new(kind: ScheduleKind, points: Vec<SchedulePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(bad("schedule has no points"));
        }
        let (want_beta, want_gamma) = match kind {
            ScheduleKind::ClassicalBeta => (true, false),
            ScheduleKind::QuantumGamma => (false, true),
            ScheduleKind::Hybrid => (true, true),
        };
        for (k, p) in points.iter().enumerate() {
            if p.beta.is_some() != want_beta || p.gamma.is_some() != want_gamma {
                return Err(bad(format!("point {k} does not match a {kind} schedule")));
            }
            for v in [p.beta, p.gamma].into_iter().flatten() {
                if !v.is_finite() || v < 0.0 {
                    return Err(bad(format!("point {k}: control value {v} must be finite and >= 0")));
                }
            }
        }
        let sched = Schedule { kind, points };
        if want_beta {
            check_monotone(&sched.betas().unwrap(), true, "beta")?;
        }
        if want_gamma {
            let g = sched.gammas().unwrap();
            check_monotone(&g, false, "gamma")?;
            if *g.last().unwrap() != 0.0 {
                return Err(bad(format!("gamma must end at 0, ends at {}", g.last().unwrap())));
            }
        }
        Ok(sched)
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        let pts = betas.into_iter().map(|b| SchedulePoint { beta: Some(b), gamma: None });
        Schedule::new(ScheduleKind::ClassicalBeta, pts.collect())
    }

    pub fn from_gammas(gammas: Vec<f64>) -> Result<Self> {
        let pts = gammas.into_iter().map(|g| SchedulePoint { beta: None, gamma: Some(g) });
        Schedule::new(ScheduleKind::QuantumGamma, pts.collect())
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn points(&self) -> &[SchedulePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn betas(&self) -> Option<Vec<f64>> {
        self.points.iter().map(|p| p.beta).collect()
    }

    pub fn gammas(&self) -> Option<Vec<f64>> {
        self.points.iter().map(|p| p.gamma).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep,beta,gamma\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for (k, p) in self.points.iter().enumerate() {
            let _ = writeln!(out, "{k},{},{}", opt(p.beta), opt(p.gamma));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let err = |line: usize, msg: String| Error::Parse { line: line + 1, msg };
        match lines.next() {
            Some((_, h)) if h.trim() == "sweep,beta,gamma" => {}
            Some((k, h)) => return Err(err(k, format!("expected header 'sweep,beta,gamma', got '{h}'"))),
            None => return Err(err(0, "empty schedule file".into())),
        }
        let mut points = Vec::new();
        for (k, line) in lines {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(err(k, format!("expected 3 columns, got {}", cols.len())));
            }
            let sweep: usize = cols[0]
                .parse()
                .map_err(|_| err(k, format!("bad sweep index '{}'", cols[0])))?;
            if sweep != points.len() {
                return Err(err(k, format!("sweep {sweep} out of order")));
            }
            let opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| err(k, format!("bad number '{s}'")))
                }
            };
            points.push(SchedulePoint { beta: opt(cols[1])?, gamma: opt(cols[2])? });
        }
        let first = points.first().ok_or_else(|| err(1, "schedule has no points".into()))?;
        let kind = match (first.beta.is_some(), first.gamma.is_some()) {
            (true, false) => ScheduleKind::ClassicalBeta,
            (false, true) => ScheduleKind::QuantumGamma,
            (true, true) => ScheduleKind::Hybrid,
            (false, false) => return Err(err(1, "first point has no control values".into())),
        };
        Schedule::new(kind, points)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Schedule::from_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

fn check_direction(kind: ScheduleKind, start: f64, end: f64) -> Result<()> {
    match kind {
        ScheduleKind::ClassicalBeta if end < start => {
            Err(bad(format!("beta must not decrease ({start} -> {end})")))
        }
        ScheduleKind::QuantumGamma if end > start => {
            Err(bad(format!("gamma must not increase ({start} -> {end})")))
        }
        ScheduleKind::Hybrid => Err(bad("use hybrid_schedule for hybrid schedules")),
        _ => Ok(()),
    }
}

fn single(kind: ScheduleKind, values: Vec<f64>) -> Result<Schedule> {
    match kind {
        ScheduleKind::ClassicalBeta => Schedule::from_betas(values),
        _ => Schedule::from_gammas(values),
    }
}

fn linear_values(start: f64, end: f64, steps: usize) -> Vec<f64> {
    let last = (steps - 1) as f64;
    let mut v: Vec<f64> = (0..steps)
        .map(|k| start + (end - start) * (k as f64 / last))
        .collect();
    v[steps - 1] = end;
    v
}

/// Equally spaced controls from `start` to `end` inclusive.
pub fn linear_schedule(kind: ScheduleKind, start: f64, end: f64, steps: usize) -> Result<Schedule> {
    if steps < 2 {
        return Err(bad(format!("need at least 2 sweeps, got {steps}")));
    }
    check_direction(kind, start, end)?;
    single(kind, linear_values(start, end, steps))
}

/// Geometric interpolation. If an endpoint is zero, both endpoints are lifted
/// by [`EXPONENTIAL_FLOOR`], interpolated, and shifted back.
pub fn exponential_schedule(
    kind: ScheduleKind,
    start: f64,
    end: f64,
    steps: usize,
) -> Result<Schedule> {
    if steps < 2 {
        return Err(bad(format!("need at least 2 sweeps, got {steps}")));
    }
    check_direction(kind, start, end)?;
    if start < 0.0 || end < 0.0 {
        return Err(bad("exponential schedules need non-negative endpoints"));
    }
    let shift = if start == 0.0 || end == 0.0 { EXPONENTIAL_FLOOR } else { 0.0 };
    let (a, b) = (start + shift, end + shift);
    let last = (steps - 1) as f64;
    let mut v: Vec<f64> = (0..steps)
        .map(|k| (a * (b / a).powf(k as f64 / last) - shift).max(0.0))
        .collect();
    v[0] = start;
    v[steps - 1] = end;
    single(kind, v)
}

/// Linear in both beta and gamma.
pub fn hybrid_schedule(
    beta: (f64, f64),
    gamma: (f64, f64),
    steps: usize,
) -> Result<Schedule> {
    if steps < 2 {
        return Err(bad(format!(
            "a hybrid schedule needs at least 2 sweeps to reach both endpoints, got {steps}"
        )));
    }
    check_direction(ScheduleKind::ClassicalBeta, beta.0, beta.1)?;
    check_direction(ScheduleKind::QuantumGamma, gamma.0, gamma.1)?;
    let b = linear_values(beta.0, beta.1, steps);
    let g = linear_values(gamma.0, gamma.1, steps);
    let pts = b
        .into_iter()
        .zip(g)
        .map(|(b, g)| SchedulePoint { beta: Some(b), gamma: Some(g) })
        .collect();
    Schedule::new(ScheduleKind::Hybrid, pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_examples() {
        let s = linear_schedule(ScheduleKind::ClassicalBeta, 1.0, 3.0, 3).unwrap();
        assert_eq!(s.betas().unwrap(), vec![1.0, 2.0, 3.0]);
        let q = linear_schedule(ScheduleKind::QuantumGamma, 1.5, 0.0, 4).unwrap();
        assert_eq!(q.gammas().unwrap(), vec![1.5, 1.0, 0.5, 0.0]);
        assert!(linear_schedule(ScheduleKind::QuantumGamma, 0.0, 1.5, 4).is_err());
        assert!(linear_schedule(ScheduleKind::ClassicalBeta, 3.0, 1.0, 4).is_err());
        assert!(linear_schedule(ScheduleKind::ClassicalBeta, 1.0, 3.0, 1).is_err());
    }

    #[test]
    fn quantum_schedule_must_end_at_zero() {
        assert!(linear_schedule(ScheduleKind::QuantumGamma, 1.5, 0.5, 4).is_err());
        assert!(Schedule::from_gammas(vec![1.0, 0.2]).is_err());
    }

    #[test]
    fn exponential_examples() {
        let s = exponential_schedule(ScheduleKind::ClassicalBeta, 1.0, 4.0, 3).unwrap();
        let b = s.betas().unwrap();
        assert_eq!(b[0], 1.0);
        assert!((b[1] - 2.0).abs() < 1e-15);
        assert_eq!(b[2], 4.0);

        let two = exponential_schedule(ScheduleKind::ClassicalBeta, 0.3, 7.0, 2).unwrap();
        assert_eq!(two.betas().unwrap(), vec![0.3, 7.0]);

        let q = exponential_schedule(ScheduleKind::QuantumGamma, 1.5, 0.0, 50).unwrap();
        let g = q.gammas().unwrap();
        assert_eq!((g[0], g[49]), (1.5, 0.0));
        // shifted geometric: successive ratios of (g + floor) are constant
        let r1 = (g[11] + EXPONENTIAL_FLOOR) / (g[10] + EXPONENTIAL_FLOOR);
        let r2 = (g[31] + EXPONENTIAL_FLOOR) / (g[30] + EXPONENTIAL_FLOOR);
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn hybrid_examples() {
        let h = hybrid_schedule((4.0, 16.0), (1.5, 0.0), 3).unwrap();
        assert_eq!(h.betas().unwrap(), vec![4.0, 10.0, 16.0]);
        assert_eq!(h.gammas().unwrap(), vec![1.5, 0.75, 0.0]);
        let flat = hybrid_schedule((8.0, 8.0), (1.5, 0.0), 5).unwrap();
        assert!(flat.betas().unwrap().iter().all(|&b| b == 8.0));
        assert!(hybrid_schedule((4.0, 16.0), (1.5, 0.0), 1).is_err());
        assert!(hybrid_schedule((16.0, 4.0), (1.5, 0.0), 3).is_err());
    }

    #[test]
    fn csv_round_trip() {
        for s in [
            linear_schedule(ScheduleKind::ClassicalBeta, 0.1, 5.0, 7).unwrap(),
            exponential_schedule(ScheduleKind::QuantumGamma, 1.5, 0.0, 9).unwrap(),
            hybrid_schedule((4.0, 16.0), (1.5, 0.0), 5).unwrap(),
        ] {
            assert_eq!(Schedule::from_csv(&s.to_csv()).unwrap(), s);
        }
        assert!(Schedule::from_csv("sweep,beta\n0,1\n").is_err());
        assert!(matches!(
            Schedule::from_csv("sweep,beta,gamma\n0,1.0,\n2,2.0,\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
