//! Schedules that step inversely to a measured fluctuation denominator:
//! `c_{k+1} = c_k + lambda / D(c_k)`, with `lambda` fixed by requiring that
//! exactly `T` points run from `start` to `end`.

use super::{FluctuationProfile, ProfileKind, Schedule};
use crate::{Error, Result};

/// `D` is floored at this fraction of its maximum so that flat-zero stretches
/// of a measured profile still advance. The floor scales with the profile, so
/// it does not break scale invariance.
pub const FLOOR_FRACTION: f64 = 1e-6;

const MAX_BISECTIONS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveControls {
    /// Control values (beta, or s for quantum profiles), length `T`.
    pub controls: Vec<f64>,
    pub lambda: f64,
}

struct Interp<'a> {
    grid: &'a [f64],
    values: &'a [f64],
    floor: f64,
}

impl Interp<'_> {
    /// Piecewise linear on the grid, flat outside it.
    fn at(&self, c: f64) -> f64 {
        let (g, v) = (self.grid, self.values);
        let d = if c <= g[0] {
            v[0]
        } else if c >= g[g.len() - 1] {
            v[v.len() - 1]
        } else {
            let k = g.partition_point(|&x| x <= c);
            let t = (c - g[k - 1]) / (g[k] - g[k - 1]);
            v[k - 1] + t * (v[k] - v[k - 1])
        };
        d.max(self.floor)
    }
}

fn walk(d: &Interp, lambda: f64, start: f64, steps: usize, out: &mut Vec<f64>) -> f64 {
    out.clear();
    let mut c = start;
    out.push(c);
    for _ in 1..steps {
        c += lambda / d.at(c);
        out.push(c);
    }
    c
}

/// Controls and `lambda` of the adaptive rule; see [`build_adaptive_schedule`].
pub fn adaptive_controls(
    profile: &FluctuationProfile,
    steps: usize,
    start: f64,
    end: f64,
) -> Result<AdaptiveControls> {
    if steps < 2 {
        return Err(Error::InvalidSchedule(format!("need at least 2 sweeps, got {steps}")));
    }
    if !(start.is_finite() && end.is_finite()) || end < start {
        return Err(Error::InvalidSchedule(format!(
            "adaptive schedules run forward in the control: {start} -> {end}"
        )));
    }
    let max = profile.values().iter().copied().fold(0.0f64, f64::max);
    if !(max > 0.0) {
        return Err(Error::InvalidSchedule(
            "profile is zero everywhere, no step size can be normalised".into(),
        ));
    }
    if start < profile.grid()[0] || end > *profile.grid().last().unwrap() {
        log::debug!("adaptive schedule extends past the profile grid; using flat extrapolation");
    }
    let d = Interp {
        grid: profile.grid(),
        values: profile.values(),
        floor: FLOOR_FRACTION * max,
    };
    if end == start {
        return Ok(AdaptiveControls {
            controls: vec![start; steps],
            lambda: 0.0,
        });
    }
    // lambda = 0 stays at start; lambda = hi reaches end on the first step.
    let mut lo = 0.0;
    let mut hi = (end - start) * max;
    let mut buf = Vec::with_capacity(steps);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if walk(&d, mid, start, steps, &mut buf) < end {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // lo never overshoots, so only the final point moves.
    walk(&d, lo, start, steps, &mut buf);
    for c in buf.iter_mut() {
        *c = c.min(end);
    }
    buf[steps - 1] = end;
    Ok(AdaptiveControls {
        controls: buf,
        lambda: lo,
    })
}

/// Adaptive schedule of length `steps` from `start` to `end` in the profile's
/// control variable. For quantum profiles the control is `s` and the points
/// are stored as `Gamma = (1 - s) Gamma0`, so `end` must be 1.
pub fn build_adaptive_schedule(
    profile: &FluctuationProfile,
    steps: usize,
    start: f64,
    end: f64,
) -> Result<Schedule> {
    let AdaptiveControls { controls, .. } = adaptive_controls(profile, steps, start, end)?;
    match profile.kind() {
        ProfileKind::Classical => Schedule::from_betas(controls),
        ProfileKind::Quantum { gamma0, .. } => {
            if start < 0.0 || end > 1.0 {
                return Err(Error::InvalidSchedule(format!(
                    "s must stay in [0, 1], got {start} -> {end}"
                )));
            }
            Schedule::from_gammas(controls.iter().map(|s| ((1.0 - s) * gamma0).max(0.0)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{linear_schedule, Denominator, ScheduleKind};
    use proptest::prelude::*;

    fn classical(grid: Vec<f64>, values: Vec<f64>) -> FluctuationProfile {
        let n = grid.len();
        FluctuationProfile::new(ProfileKind::Classical, grid, values, vec![0.0; n], vec![1; n])
            .unwrap()
    }

    #[test]
    fn constant_profile_is_linear() {
        let p = classical(vec![0.0, 1.0, 5.0], vec![2.5; 3]);
        let a = build_adaptive_schedule(&p, 101, 0.1, 5.0).unwrap().betas().unwrap();
        let l = linear_schedule(ScheduleKind::ClassicalBeta, 0.1, 5.0, 101).unwrap().betas().unwrap();
        for (x, y) in a.iter().zip(&l) {
            assert!((x - y).abs() < 1e-12, "{x} {y}");
        }
    }

    #[test]
    fn peaked_profile_slows_at_the_peak() {
        let grid: Vec<f64> = (0..41).map(|k| k as f64 * 0.25).collect();
        let vals: Vec<f64> = grid.iter().map(|b| 0.1 + (-(b - 4.0_f64).powi(2)).exp()).collect();
        let c = adaptive_controls(&classical(grid, vals), 200, 0.0, 10.0).unwrap().controls;
        let step = |b: f64| {
            let k = c.iter().position(|&x| x >= b).unwrap();
            c[k + 1] - c[k]
        };
        assert!(step(4.0) < step(9.0) / 5.0);
    }

    #[test]
    fn quantum_profile_ends_at_zero_field() {
        let p = FluctuationProfile::new(
            ProfileKind::Quantum { beta: 16.0, gamma0: 7.0, denominator: Denominator::Simple },
            vec![0.0, 0.5, 0.9],
            vec![0.1, 1.0, 3.0],
            vec![0.0; 3],
            vec![10; 3],
        )
        .unwrap();
        let s = build_adaptive_schedule(&p, 50, 0.0, 1.0).unwrap();
        let g = s.gammas().unwrap();
        assert_eq!((g[0], g[49]), (7.0, 0.0));
        // fast at the start, slow at the end
        assert!(g[0] - g[1] > g[47] - g[48]);
        assert!(build_adaptive_schedule(&p, 50, 0.0, 0.8).is_err());
    }

    #[test]
    fn zero_profile_is_rejected() {
        let p = classical(vec![0.0, 1.0], vec![0.0, 0.0]);
        assert!(matches!(
            build_adaptive_schedule(&p, 10, 0.0, 1.0),
            Err(Error::InvalidSchedule(_))
        ));
    }

    #[test]
    fn partial_zero_profile_still_reaches_end() {
        let p = classical(vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 4.0]);
        let c = adaptive_controls(&p, 20, 0.0, 2.0).unwrap().controls;
        assert_eq!(c[19], 2.0);
        assert!(c.windows(2).all(|w| w[1] >= w[0]));
    }

    fn arb_profile() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..12).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.01f64..1.0, n),
                proptest::collection::vec(0.0f64..10.0, n),
            )
                .prop_map(|(gaps, vals)| {
                    let mut g = Vec::with_capacity(gaps.len());
                    let mut x = 0.0;
                    for d in gaps {
                        g.push(x);
                        x += d;
                    }
                    (g, vals)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn endpoints_monotone_and_normalised(
            (grid, mut vals) in arb_profile(),
            steps in 2usize..300,
            a in 0.0f64..1.0,
            span in 0.01f64..3.0,
            scale in 0.01f64..100.0,
        ) {
            vals[0] += 0.5;
            let p = classical(grid.clone(), vals.clone());
            let out = adaptive_controls(&p, steps, a, a + span).unwrap();
            let c = &out.controls;
            prop_assert_eq!(c.len(), steps);
            prop_assert_eq!(c[0], a);
            prop_assert_eq!(c[steps - 1], a + span);
            prop_assert!(c.windows(2).all(|w| w[1] >= w[0]));

            let max = vals.iter().copied().fold(0.0f64, f64::max);
            let d = Interp { grid: &grid, values: &vals, floor: FLOOR_FRACTION * max };
            let total: f64 = c[..steps - 1].iter().map(|&x| out.lambda / d.at(x)).sum();
            prop_assert!((total - span).abs() <= 1e-6 * span);

            let scaled = classical(grid, vals.iter().map(|v| v * scale).collect());
            let c2 = adaptive_controls(&scaled, steps, a, a + span).unwrap().controls;
            for (x, y) in c.iter().zip(&c2) {
                prop_assert!((x - y).abs() <= 1e-6 * span);
            }
        }
    }
}
