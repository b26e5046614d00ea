//! Exhaustive enumeration over all `2^N` classical configurations.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, SpinConfiguration, SpinGlassInstance};

pub const BRUTE_FORCE_BOUND: usize = 30;
pub const THERMAL_BOUND: usize = 24;

/// Resynchronise the incrementally tracked energy this often.
const RESYNC: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceGroundState {
    pub energy: f64,
    pub degeneracy: u64,
    pub config: SpinConfiguration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalPoint {
    pub beta: f64,
    pub mean_energy: f64,
    /// `<E^2> - <E>^2`, which equals `-d<E>/dbeta`.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactClassicalSummary {
    pub ground_energy: f64,
    pub ground_degeneracy: u64,
    pub table: Vec<ThermalPoint>,
}

fn energy_tol(e: f64) -> f64 {
    1e-9 * e.abs().max(1.0)
}

/// Walks the reflected Gray code, calling `visit(bits, energy)` for every
/// configuration. Bit `i` set means spin `i` is up.
fn gray_walk<F: FnMut(u64, f64)>(inst: &SpinGlassInstance, mut visit: F) {
    let n = inst.num_spins();
    let mut spins = vec![-1i8; n];
    let mut local: Vec<f64> = (0..n).map(|i| inst.local_field(&spins, i)).collect();
    let mut energy = inst.energy_of(&spins);
    let mut bits = 0u64;
    visit(bits, energy);
    let adj = inst.adjacency();
    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        energy += 2.0 * spins[i] as f64 * local[i];
        spins[i] = -spins[i];
        bits ^= 1 << i;
        let s = 2.0 * spins[i] as f64;
        for &(j, c) in adj.neighbors(i) {
            local[j as usize] += c * s;
        }
        if k % RESYNC == 0 {
            energy = inst.energy_of(&spins);
            for (j, l) in local.iter_mut().enumerate() {
                *l = inst.local_field(&spins, j);
            }
        }
        visit(bits, energy);
    }
}

pub fn brute_force_ground_state(inst: &SpinGlassInstance) -> Result<BruteForceGroundState> {
    brute_force_ground_state_bounded(inst, BRUTE_FORCE_BOUND)
}

/// Exact minimum over all `2^N` configurations, with degeneracy counted at a
/// relative tolerance of `1e-9`.
pub fn brute_force_ground_state_bounded(
    inst: &SpinGlassInstance,
    bound: usize,
) -> Result<BruteForceGroundState> {
    let n = inst.num_spins();
    if n > bound || n > 62 {
        return Err(Error::TooLarge {
            what: "brute-force ground state",
            n,
            bound,
        });
    }
    let mut best = f64::INFINITY;
    let mut best_bits = 0u64;
    let mut count = 0u64;
    gray_walk(inst, |bits, e| {
        // Candidates are re-evaluated from scratch so the result does not
        // depend on accumulated rounding in the walk.
        if e <= best + 1e-6 * best.abs().max(1.0) {
            let exact = inst.energy_of(SpinConfiguration::from_bits(bits, n).spins());
            let tol = energy_tol(exact.min(best));
            if exact < best - tol {
                best = exact;
                best_bits = bits;
                count = 1;
            } else if (exact - best).abs() <= tol {
                count += 1;
            }
        }
    });
    Ok(BruteForceGroundState {
        energy: best,
        degeneracy: count,
        config: SpinConfiguration::from_bits(best_bits, n),
    })
}

/// Energies of all configurations, indexed by the configuration bits.
pub fn enumerate_energies(inst: &SpinGlassInstance, bound: usize) -> Result<Vec<f64>> {
    let n = inst.num_spins();
    if n > bound || n > 40 {
        return Err(Error::TooLarge {
            what: "exact enumeration",
            n,
            bound,
        });
    }
    let mut energies = vec![0.0; 1usize << n];
    gray_walk(inst, |bits, e| energies[bits as usize] = e);
    Ok(energies)
}

pub fn exact_classical_thermal(
    inst: &SpinGlassInstance,
    betas: &[f64],
) -> Result<ExactClassicalSummary> {
    exact_classical_thermal_bounded(inst, betas, THERMAL_BOUND)
}

pub fn exact_classical_thermal_bounded(
    inst: &SpinGlassInstance,
    betas: &[f64],
    bound: usize,
) -> Result<ExactClassicalSummary> {
    if let Some(b) = betas.iter().find(|b| !b.is_finite() || **b < 0.0) {
        return Err(Error::param(format!("inverse temperature {b} must be finite and >= 0")));
    }
    let energies = enumerate_energies(inst, bound)?;
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = energy_tol(e0);
    let degeneracy = energies.iter().filter(|&&e| (e - e0).abs() <= tol).count() as u64;
    let table = betas
        .iter()
        .map(|&beta| thermal_point(&energies, e0, beta))
        .collect();
    Ok(ExactClassicalSummary {
        ground_energy: e0,
        ground_degeneracy: degeneracy,
        table,
    })
}

fn thermal_point(energies: &[f64], e0: f64, beta: f64) -> ThermalPoint {
    let mut z = 0.0;
    let mut s1 = 0.0;
    for &e in energies {
        let w = (-beta * (e - e0)).exp();
        z += w;
        s1 += w * (e - e0);
    }
    let shifted_mean = s1 / z;
    let mut s2 = 0.0;
    for &e in energies {
        let w = (-beta * (e - e0)).exp();
        let d = e - e0 - shifted_mean;
        s2 += w * d * d;
    }
    ThermalPoint {
        beta,
        mean_energy: e0 + shifted_mean,
        variance: s2 / z,
    }
}
