//! Success probabilities, repetition counts, time to solution and scaling fits.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{BenchmarkRecord, Method};
use crate::rng;
use crate::stats;
use crate::{Error, Result};

/// Bootstrap replicates for scaling-fit intervals.
pub const BOOTSTRAP_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Repetitions {
    /// `ln(1 - s) / ln(1 - p)`; infinite when `p = 0`.
    pub r: f64,
    /// `ceil(r)`, at least 1; `None` when `p = 0`.
    pub r_int: Option<u64>,
}

/// Independent repetitions needed to succeed at least once with probability
/// `target`, given per-run success probability `p`.
pub fn repetitions_needed(p: f64, target: f64) -> Result<Repetitions> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("success probability {p} outside [0, 1]")));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::param(format!("target probability {target} outside (0, 1)")));
    }
    if p == 0.0 {
        return Ok(Repetitions { r: f64::INFINITY, r_int: None });
    }
    if p == 1.0 {
        return Ok(Repetitions { r: 1.0, r_int: Some(1) });
    }
    let r = (1.0 - target).ln() / (1.0 - p).ln();
    Ok(Repetitions { r, r_int: Some((r.ceil() as u64).max(1)) })
}

/// Sweeps spent to reach the target probability: `t_a * max(1, R)`.
fn effort(sweeps: usize, p: f64, target: f64) -> f64 {
    let r = repetitions_needed(p, target).expect("validated inputs").r;
    sweeps as f64 * r.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p: f64,
    /// Wilson 95% interval.
    pub lo: f64,
    pub hi: f64,
}

pub fn estimate_success_probability(records: &[BenchmarkRecord]) -> Result<SuccessEstimate> {
    if records.is_empty() {
        return Err(Error::param("success probability needs at least one record"));
    }
    let trials = records.len() as u64;
    let successes = records.iter().filter(|r| r.success).count() as u64;
    let (lo, hi) = stats::wilson_interval(successes, trials);
    Ok(SuccessEstimate {
        successes,
        trials,
        p: successes as f64 / trials as f64,
        lo,
        hi,
    })
}

/// Statistics for one (variant, N, t_a) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsPoint {
    pub variant: String,
    pub method: Method,
    #[serde(rename = "N")]
    pub n: usize,
    pub sweeps: usize,
    /// Pooled over instances and repetitions.
    pub success: SuccessEstimate,
    pub repetitions: Repetitions,
    /// Median over instances of the per-instance effort.
    pub median_effort: f64,
    /// Per-instance efforts, in instance-id order.
    pub instance_efforts: Vec<f64>,
}

/// Best budget for one (variant, N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsOptimum {
    pub variant: String,
    pub method: Method,
    #[serde(rename = "N")]
    pub n: usize,
    pub sweeps: usize,
    pub effort: f64,
    /// False when the minimum sits on the edge of the budget grid.
    pub interior: bool,
    pub instance_efforts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    #[default]
    SqrtN,
    N,
    L,
}

impl Abscissa {
    pub fn value(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Abscissa::SqrtN => n.sqrt(),
            Abscissa::N => n,
            Abscissa::L => n.cbrt().round(),
        }
    }
}

impl std::str::FromStr for Abscissa {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt_n" | "sqrtN" => Ok(Abscissa::SqrtN),
            "n" | "N" => Ok(Abscissa::N),
            "l" | "L" => Ok(Abscissa::L),
            _ => Err(Error::param(format!("unknown abscissa '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingInput {
    pub x: f64,
    /// Per-instance efforts; the fit uses their median.
    pub efforts: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Slope of `log10(effort)` against the abscissa.
    pub slope: f64,
    pub intercept: f64,
    /// Bootstrap 95% interval over instances.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub sizes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsSummary {
    pub target_probability: f64,
    pub abscissa: Abscissa,
    pub points: Vec<TtsPoint>,
    pub optima: Vec<TtsOptimum>,
    /// Per variant; `None` when the fit was not possible.
    pub fits: Vec<(String, Method, Option<ScalingFit>)>,
}

/// One row of the residual-energy curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub variant: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub sweeps: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

type CellKey = (String, usize, usize);

fn cells(records: &[BenchmarkRecord]) -> BTreeMap<CellKey, Vec<&BenchmarkRecord>> {
    let mut m: BTreeMap<CellKey, Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in records {
        m.entry((r.variant.clone(), r.n, r.sweeps)).or_default().push(r);
    }
    m
}

/// Median and quartiles of the per-spin residual energy, over instances and
/// repetitions, per (variant, N, t_a).
pub fn curves(records: &[BenchmarkRecord]) -> Vec<CurvePoint> {
    cells(records)
        .into_iter()
        .map(|((variant, n, sweeps), rs)| {
            let mut v: Vec<f64> = rs.iter().map(|r| r.residual_per_spin).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            CurvePoint {
                variant,
                n,
                sweeps,
                median: stats::quantile_sorted(&v, 0.5),
                q25: stats::quantile_sorted(&v, 0.25),
                q75: stats::quantile_sorted(&v, 0.75),
            }
        })
        .collect()
}

/// Picks the budget with the lowest median effort. Fewer than 2 budgets is
/// an error; a minimum on the grid edge is logged and flagged.
pub fn tts_optimize(points: &[TtsPoint]) -> Result<TtsOptimum> {
    if points.len() < 2 {
        return Err(Error::param("time-to-solution optimisation needs at least 2 budgets"));
    }
    let mut sorted: Vec<&TtsPoint> = points.iter().collect();
    sorted.sort_by_key(|p| p.sweeps);
    let (k, best) = sorted
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.median_effort.total_cmp(&b.1.median_effort).then(a.0.cmp(&b.0)))
        .expect("non-empty");
    let interior = k > 0 && k + 1 < sorted.len();
    if !interior {
        log::warn!(
            "{} N={}: effort minimum at the edge of the budget grid (t_a = {}); widen the grid",
            best.variant,
            best.n,
            best.sweeps
        );
    }
    Ok(TtsOptimum {
        variant: best.variant.clone(),
        method: best.method,
        n: best.n,
        sweeps: best.sweeps,
        effort: best.median_effort,
        interior,
        instance_efforts: best.instance_efforts.clone(),
    })
}

fn fit_medians(inputs: &[(f64, f64)]) -> Option<(f64, f64)> {
    let xs: Vec<f64> = inputs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = inputs.iter().map(|p| p.1.log10()).collect();
    stats::linear_fit(&xs, &ys)
}

/// Least-squares slope of `log10(median effort)` against `x`, with a
/// percentile bootstrap over instances at each size.
pub fn scaling_fit(inputs: &[ScalingInput], samples: usize, seed: u64) -> Result<ScalingFit> {
    if inputs.len() < 3 {
        return Err(Error::param(format!("scaling fit needs >= 3 sizes, got {}", inputs.len())));
    }
    let mut xs: Vec<f64> = inputs.iter().map(|p| p.x).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::param("scaling fit needs at least 2 distinct sizes"));
    }
    let medians: Vec<(f64, f64)> = inputs
        .iter()
        .map(|p| (p.x, stats::median(&p.efforts)))
        .collect();
    if medians.iter().any(|m| !(m.1.is_finite() && m.1 > 0.0)) {
        return Err(Error::param(
            "scaling fit needs finite positive median efforts at every size",
        ));
    }
    let (slope, intercept) = fit_medians(&medians).expect("distinct abscissas");
    let mut rng = rng::stream(seed, 0);
    let mut slopes = Vec::with_capacity(samples);
    let mut buf = Vec::new();
    for _ in 0..samples {
        let resampled: Vec<(f64, f64)> = inputs
            .iter()
            .map(|p| {
                buf.clear();
                buf.extend((0..p.efforts.len()).map(|_| p.efforts[rng.gen_range(0..p.efforts.len())]));
                (p.x, stats::median(&buf))
            })
            .collect();
        if resampled.iter().all(|m| m.1.is_finite() && m.1 > 0.0) {
            if let Some((s, _)) = fit_medians(&resampled) {
                slopes.push(s);
            }
        }
    }
    let (ci_lo, ci_hi) = if slopes.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (stats::quantile(&slopes, 0.025), stats::quantile(&slopes, 0.975))
    };
    Ok(ScalingFit {
        slope,
        intercept,
        ci_lo,
        ci_hi,
        sizes: inputs.len(),
    })
}

/// Per-cell success and effort statistics. Instance efforts use the success
/// fraction over that instance's repetitions.
pub fn summarize(records: &[BenchmarkRecord], target: f64) -> Result<Vec<TtsPoint>> {
    repetitions_needed(0.5, target)?;
    cells(records)
        .into_iter()
        .map(|((variant, n, sweeps), rs)| {
            let mut by_instance: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
            for r in &rs {
                let e = by_instance.entry(r.instance.as_str()).or_default();
                e.0 += r.success as u64;
                e.1 += 1;
            }
            let instance_efforts: Vec<f64> = by_instance
                .values()
                .map(|&(s, t)| effort(sweeps, s as f64 / t as f64, target))
                .collect();
            let owned: Vec<BenchmarkRecord> = rs.iter().map(|r| (*r).clone()).collect();
            let success = estimate_success_probability(&owned)?;
            Ok(TtsPoint {
                method: rs[0].method,
                variant,
                n,
                sweeps,
                repetitions: repetitions_needed(success.p, target)?,
                success,
                median_effort: stats::median(&instance_efforts),
                instance_efforts,
            })
        })
        .collect()
}

/// Fits every variant that has at least 3 sizes with finite optimal effort.
pub fn scaling_fits(
    optima: &[TtsOptimum],
    abscissa: Abscissa,
    seed: u64,
) -> Vec<(String, Method, Option<ScalingFit>)> {
    let mut by_variant: BTreeMap<(String, Method), Vec<&TtsOptimum>> = BTreeMap::new();
    for o in optima {
        by_variant.entry((o.variant.clone(), o.method)).or_default().push(o);
    }
    by_variant
        .into_iter()
        .enumerate()
        .map(|(k, ((variant, method), os))| {
            let inputs: Vec<ScalingInput> = os
                .iter()
                .map(|o| ScalingInput {
                    x: abscissa.value(o.n),
                    efforts: o.instance_efforts.clone(),
                })
                .collect();
            let fit = match scaling_fit(&inputs, BOOTSTRAP_SAMPLES, rng::mix(seed, k as u64)) {
                Ok(f) => Some(f),
                Err(e) => {
                    log::warn!("{variant}: no scaling fit ({e})");
                    None
                }
            };
            (variant, method, fit)
        })
        .collect()
}

impl TtsSummary {
    /// Full reduction: cell statistics, best budget per (variant, N), and a
    /// scaling fit per variant.
    pub fn from_records(
        records: &[BenchmarkRecord],
        target: f64,
        abscissa: Abscissa,
        seed: u64,
    ) -> Result<Self> {
        let points = summarize(records, target)?;
        let mut groups: BTreeMap<(String, usize), Vec<TtsPoint>> = BTreeMap::new();
        for p in &points {
            groups.entry((p.variant.clone(), p.n)).or_default().push(p.clone());
        }
        let mut optima = Vec::new();
        for ((variant, n), ps) in groups {
            match tts_optimize(&ps) {
                Ok(o) => optima.push(o),
                Err(e) => log::warn!("{variant} N={n}: {e}"),
            }
        }
        let fits = scaling_fits(&optima, abscissa, seed);
        Ok(TtsSummary {
            target_probability: target,
            abscissa,
            points,
            optima,
            fits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(variant: &str, instance: &str, n: usize, sweeps: usize, success: bool) -> BenchmarkRecord {
        BenchmarkRecord {
            schema: 1,
            index: 0,
            instance: instance.into(),
            n,
            method: Method::Ca,
            variant: variant.into(),
            schedule: "linear(0.1->5)".into(),
            sweeps,
            seed: 0,
            energy: if success { -1.0 } else { -0.5 },
            e0: -1.0,
            residual: if success { 0.0 } else { 0.5 },
            residual_per_spin: if success { 0.0 } else { 0.5 / n as f64 },
            success,
        }
    }

    #[test]
    fn repetition_examples() {
        assert_eq!(repetitions_needed(0.9, 0.9).unwrap().r, 1.0);
        let r = repetitions_needed(0.5, 0.9).unwrap();
        assert!((r.r - 0.1f64.ln() / 0.5f64.ln()).abs() < 1e-15);
        assert!((r.r - 3.3219).abs() < 1e-4);
        assert_eq!(r.r_int, Some(4));
        assert_eq!(repetitions_needed(1.0, 0.9).unwrap(), Repetitions { r: 1.0, r_int: Some(1) });
        let zero = repetitions_needed(0.0, 0.9).unwrap();
        assert!(zero.r.is_infinite() && zero.r_int.is_none());
        assert!(repetitions_needed(0.5, 1.0).is_err());
        assert!(repetitions_needed(-0.1, 0.5).is_err());
    }

    #[test]
    fn repetitions_monotone() {
        let ps = [0.01, 0.1, 0.3, 0.5, 0.8, 0.95];
        for w in ps.windows(2) {
            assert!(repetitions_needed(w[1], 0.9).unwrap().r < repetitions_needed(w[0], 0.9).unwrap().r);
        }
        for s in [0.5, 0.9, 0.99] {
            let lower = repetitions_needed(0.3, s - 0.1).unwrap().r;
            assert!(repetitions_needed(0.3, s).unwrap().r > lower);
        }
        for p in ps {
            let r = repetitions_needed(p, 0.9).unwrap().r;
            assert_eq!(r >= 1.0, p <= 0.9, "p = {p}");
        }
    }

    #[test]
    fn wilson_examples() {
        let mk = |s: usize| -> Vec<BenchmarkRecord> {
            (0..100).map(|k| record("v", "i", 8, 10, k < s)).collect()
        };
        let none = estimate_success_probability(&mk(0)).unwrap();
        assert_eq!(none.p, 0.0);
        assert!((none.hi - 0.0370).abs() < 5e-4, "{}", none.hi);
        let half = estimate_success_probability(&mk(50)).unwrap();
        assert!((half.lo - 0.404).abs() < 1e-3 && (half.hi - 0.596).abs() < 1e-3);
        let all = estimate_success_probability(&mk(100)).unwrap();
        assert_eq!(all.p, 1.0);
        assert!((all.lo - 0.963).abs() < 1e-3);
    }

    fn point(sweeps: usize, effort: f64) -> TtsPoint {
        TtsPoint {
            variant: "v".into(),
            method: Method::Ca,
            n: 8,
            sweeps,
            success: SuccessEstimate { successes: 1, trials: 2, p: 0.5, lo: 0.0, hi: 1.0 },
            repetitions: Repetitions { r: 1.0, r_int: Some(1) },
            median_effort: effort,
            instance_efforts: vec![effort],
        }
    }

    #[test]
    fn optimum_interior_and_edge() {
        let convex = [point(10, 50.0), point(20, 30.0), point(40, 45.0)];
        let o = tts_optimize(&convex).unwrap();
        assert_eq!((o.sweeps, o.interior), (20, true));
        let falling = [point(10, 50.0), point(20, 30.0), point(40, 25.0)];
        let o = tts_optimize(&falling).unwrap();
        assert_eq!((o.sweeps, o.interior), (40, false));
        assert!(tts_optimize(&falling[..1]).is_err());
    }

    #[test]
    fn synthetic_slope_is_recovered() {
        let inputs: Vec<ScalingInput> = [8.0f64, 27.0, 64.0, 125.0]
            .iter()
            .map(|&n| {
                let x = n.sqrt();
                ScalingInput { x, efforts: vec![10f64.powf(0.65 * x); 5] }
            })
            .collect();
        let f = scaling_fit(&inputs, 200, 1).unwrap();
        assert!((f.slope - 0.65).abs() < 1e-12);
        assert!(f.ci_lo <= f.slope && f.slope <= f.ci_hi);

        let flat: Vec<ScalingInput> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&x| ScalingInput { x, efforts: vec![100.0, 120.0, 80.0] })
            .collect();
        let f = scaling_fit(&flat, 200, 1).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert!(f.ci_lo <= 0.0 && 0.0 <= f.ci_hi);
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        let same_x: Vec<ScalingInput> = (0..3).map(|_| ScalingInput { x: 2.0, efforts: vec![1.0] }).collect();
        assert!(scaling_fit(&same_x, 10, 1).is_err());
        let inf: Vec<ScalingInput> = (0..3)
            .map(|k| ScalingInput { x: k as f64, efforts: vec![f64::INFINITY] })
            .collect();
        assert!(scaling_fit(&inf, 10, 1).is_err());
        assert!(scaling_fit(&same_x[..2], 10, 1).is_err());
    }

    #[test]
    fn summary_uses_instance_medians() {
        let mut recs = Vec::new();
        // instance a: 1/2 success at t=10, instance b: 2/2, instance c: 0/2
        for (inst, s) in [("a", [true, false]), ("b", [true, true]), ("c", [false, false])] {
            for ok in s {
                recs.push(record("v", inst, 8, 10, ok));
            }
        }
        let pts = summarize(&recs, 0.9).unwrap();
        assert_eq!(pts.len(), 1);
        let p = &pts[0];
        assert_eq!((p.success.successes, p.success.trials), (3, 6));
        // efforts: a -> 10 * 3.32, b -> 10, c -> inf; median is a's
        assert!((p.median_effort - 10.0 * 0.1f64.ln() / 0.5f64.ln()).abs() < 1e-9);
        let c = curves(&recs);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].median, 0.5 / 8.0 * 0.5);
    }
}
