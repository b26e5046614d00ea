//! Dense exact diagonalization of the transverse-field Ising Hamiltonian
//!
//! `H = a H_P - Gamma sum_i sigma^x_i`,
//!
//! with `H_P` the classical instance energy written in the `sigma^z` basis and
//! `a` a problem scale (1 for the fixed-problem schedule, `s` for the
//! interpolating one). Basis state `b` has spin `i` up iff bit `i` is set.
//!
//! The driver carries a negative sign, so `<sigma^x>` is positive for
//! `Gamma > 0`. The path-integral engine uses the same convention.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::enumerate::enumerate_energies;
use crate::{Error, Result, SpinGlassInstance};

pub const QUANTUM_BOUND: usize = 12;

/// Thermal expectations at one transverse field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumPoint {
    pub gamma: f64,
    /// Site-averaged `<sigma^x>`.
    pub sigma_x: f64,
    /// `<H_P>`.
    pub problem_energy: f64,
    /// `<(H_P - H_D)^2> - <H_P - H_D>^2` with `H_D = -Gamma sum sigma^x`.
    pub variance_problem_minus_driver: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactQuantumSummary {
    pub beta: f64,
    pub table: Vec<QuantumPoint>,
}

/// Spectrum of the interpolating Hamiltonian `s H_P - (1 - s) Gamma0 sum sigma^x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralPoint {
    pub s: f64,
    pub sigma_x: f64,
    /// `d^2 ln Z / ds^2`.
    pub curvature: f64,
    /// `<(H_P - H_D)^2> - <H_P - H_D>^2` with `H_D = -Gamma0 sum sigma^x`.
    pub variance_problem_minus_driver: f64,
}

/// Diagonalized Hamiltonian together with the classical diagonal.
pub(crate) struct Spectrum {
    pub n: usize,
    pub diag: Vec<f64>,
    /// Smallest eigenvalue.
    pub ground: f64,
    /// Eigenvalues, shifted so that the smallest is zero.
    pub shifted: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub(crate) fn check_quantum_size(inst: &SpinGlassInstance, bound: usize) -> Result<()> {
    let n = inst.num_spins();
    if n > bound || n > 16 {
        return Err(Error::TooLarge {
            what: "exact diagonalization",
            n,
            bound,
        });
    }
    Ok(())
}

/// `(sum_i sigma^x_i) v`.
pub(crate) fn apply_driver(n: usize, v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (b, o) in out.iter_mut().enumerate() {
        for i in 0..n {
            *o += v[b ^ (1 << i)];
        }
    }
}

pub(crate) fn diagonalize(
    inst: &SpinGlassInstance,
    problem_scale: f64,
    gamma: f64,
) -> Result<Spectrum> {
    let n = inst.num_spins();
    let diag = enumerate_energies(inst, 16)?;
    let d = diag.len();
    let mut h = DMatrix::<f64>::zeros(d, d);
    for b in 0..d {
        h[(b, b)] = problem_scale * diag[b];
        for i in 0..n {
            h[(b, b ^ (1 << i))] = -gamma;
        }
    }
    let eig = SymmetricEigen::new(h);
    let emin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Spectrum {
        n,
        diag,
        ground: emin,
        shifted: eig.eigenvalues.iter().map(|e| e - emin).collect(),
        vectors: eig.eigenvectors,
    })
}

impl Spectrum {
    fn weights(&self, beta: f64) -> (Vec<f64>, f64) {
        let w: Vec<f64> = self.shifted.iter().map(|e| (-beta * e).exp()).collect();
        let z = w.iter().sum();
        (w, z)
    }

    /// Per-eigenstate `<n|O|n>` and `<n|O^2|n>` for `O = a H_P + c D`.
    fn moments(&self, a: f64, c: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let d = self.diag.len();
        let mut dv = vec![0.0; d];
        let mut sx = Vec::with_capacity(d);
        let mut first = Vec::with_capacity(d);
        let mut second = Vec::with_capacity(d);
        for col in self.vectors.column_iter() {
            let v = col.as_slice();
            apply_driver(self.n, v, &mut dv);
            let mut x = 0.0;
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for b in 0..d {
                let ov = a * self.diag[b] * v[b] + c * dv[b];
                x += v[b] * dv[b];
                m1 += v[b] * ov;
                m2 += ov * ov;
            }
            sx.push(x / self.n as f64);
            first.push(m1);
            second.push(m2);
        }
        (sx, first, second)
    }

    fn thermal(&self, w: &[f64], z: f64, per_state: &[f64]) -> f64 {
        w.iter().zip(per_state).map(|(w, x)| w * x).sum::<f64>() / z
    }
}

pub fn exact_quantum_expectations(
    inst: &SpinGlassInstance,
    beta: f64,
    gammas: &[f64],
) -> Result<ExactQuantumSummary> {
    exact_quantum_expectations_bounded(inst, beta, gammas, QUANTUM_BOUND)
}

pub fn exact_quantum_expectations_bounded(
    inst: &SpinGlassInstance,
    beta: f64,
    gammas: &[f64],
    bound: usize,
) -> Result<ExactQuantumSummary> {
    check_quantum_size(inst, bound)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    let mut table = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::param(format!("gamma must be >= 0, got {gamma}")));
        }
        let spec = diagonalize(inst, 1.0, gamma)?;
        let (w, z) = spec.weights(beta);
        let (sx, hp, _) = spec.moments(1.0, 0.0);
        // H_P - H_D = H_P + Gamma D
        let (_, m1, m2) = spec.moments(1.0, gamma);
        let mean = spec.thermal(&w, z, &m1);
        let var = (spec.thermal(&w, z, &m2) - mean * mean).max(0.0);
        table.push(QuantumPoint {
            gamma,
            sigma_x: spec.thermal(&w, z, &sx),
            problem_energy: spec.thermal(&w, z, &hp),
            variance_problem_minus_driver: var,
        });
    }
    Ok(ExactQuantumSummary { beta, table })
}

/// `(1 - exp(-x)) / x`, continuous at zero.
fn psi(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// `int_0^beta exp(-(beta - t) e_m - t e_n) dt` for non-negative shifted energies.
fn duhamel(beta: f64, em: f64, en: f64) -> f64 {
    let (lo, hi) = if em <= en { (em, en) } else { (en, em) };
    (-beta * lo).exp() * beta * psi(beta * (hi - lo))
}

/// Matrix elements `<m|O|n>` in the eigenbasis for `O = a H_P + c D`.
fn eigenbasis_matrix(spec: &Spectrum, a: f64, c: f64) -> DMatrix<f64> {
    let d = spec.diag.len();
    let mut ov = DMatrix::<f64>::zeros(d, d);
    let mut dv = vec![0.0; d];
    for (k, col) in spec.vectors.column_iter().enumerate() {
        let v = col.as_slice();
        apply_driver(spec.n, v, &mut dv);
        for b in 0..d {
            ov[(b, k)] = a * spec.diag[b] * v[b] + c * dv[b];
        }
    }
    spec.vectors.transpose() * ov
}

/// Exact `<sigma^x>`, `d^2 ln Z/ds^2` and `var(H_P - H_D)` for the
/// interpolating Hamiltonian `s H_P - (1 - s) Gamma0 sum sigma^x`.
pub fn exact_general_curvature(
    inst: &SpinGlassInstance,
    beta: f64,
    gamma0: f64,
    s_values: &[f64],
) -> Result<Vec<GeneralPoint>> {
    check_quantum_size(inst, QUANTUM_BOUND)?;
    let mut out = Vec::with_capacity(s_values.len());
    for &s in s_values {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::param(format!("s must lie in [0, 1], got {s}")));
        }
        let spec = diagonalize(inst, s, (1.0 - s) * gamma0)?;
        let (w, z) = spec.weights(beta);
        let (sx, m1, m2) = spec.moments(1.0, gamma0);
        let mean = spec.thermal(&w, z, &m1);
        let var = (spec.thermal(&w, z, &m2) - mean * mean).max(0.0);
        let a = eigenbasis_matrix(&spec, 1.0, gamma0);
        let d = spec.shifted.len();
        let mut s2 = 0.0;
        for m in 0..d {
            for n in 0..d {
                let amn = a[(m, n)];
                s2 += amn * amn * duhamel(beta, spec.shifted[m], spec.shifted[n]);
            }
        }
        out.push(GeneralPoint {
            s,
            sigma_x: spec.thermal(&w, z, &sx),
            curvature: beta * s2 / z - beta * beta * mean * mean,
            variance_problem_minus_driver: var,
        });
    }
    Ok(out)
}

/// `ln Z` of `a H_P - Gamma sum sigma^x`, used for finite-difference checks.
pub fn exact_log_partition(
    inst: &SpinGlassInstance,
    beta: f64,
    problem_scale: f64,
    gamma: f64,
) -> Result<f64> {
    check_quantum_size(inst, QUANTUM_BOUND)?;
    let spec = diagonalize(inst, problem_scale, gamma)?;
    let (_, z) = spec.weights(beta);
    Ok(z.ln() - beta * spec.ground)
}

/// Continuum value of the site-averaged `sigma^x` estimator on a path with
/// open ends in imaginary time:
///
/// `(1/beta) int_0^beta <+|e^{-(beta-t)H} X e^{-tH}|+> dt / <+|e^{-beta H}|+>`
///
/// where `|+>` is the uniform superposition. This is what open-boundary path
/// integral sampling converges to; it is not the thermal trace.
pub fn exact_open_path_sigma_x(
    inst: &SpinGlassInstance,
    beta: f64,
    gamma: f64,
) -> Result<f64> {
    check_quantum_size(inst, QUANTUM_BOUND)?;
    let spec = diagonalize(inst, 1.0, gamma)?;
    let d = spec.diag.len();
    let plus = DVector::from_element(d, 1.0 / (d as f64).sqrt());
    let c = spec.vectors.transpose() * plus;
    let x = eigenbasis_matrix(&spec, 0.0, 1.0 / spec.n as f64);
    let mut num = 0.0;
    for m in 0..d {
        for n in 0..d {
            num += c[m] * x[(m, n)] * c[n] * duhamel(beta, spec.shifted[m], spec.shifted[n]);
        }
    }
    let den: f64 = (0..d)
        .map(|n| c[n] * c[n] * (-beta * spec.shifted[n]).exp())
        .sum();
    Ok(num / (beta * den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_spin_glass, single_spin, Boundary, LatticeSpec};

    #[test]
    fn free_spin_is_tanh() {
        let t = exact_quantum_expectations(&single_spin(0.0), 2.0, &[0.5, 1.0]).unwrap();
        assert!((t.table[0].sigma_x - 1f64.tanh()).abs() < 1e-13);
        assert!((t.table[1].sigma_x - 2f64.tanh()).abs() < 1e-13);
    }

    #[test]
    fn spin_in_field_matches_two_level_formula() {
        let (h, g, beta) = (1.0f64, 1.0f64, 2.0f64);
        let t = exact_quantum_expectations(&single_spin(h), beta, &[g]).unwrap();
        let r = (h * h + g * g).sqrt();
        let expect = g / r * (beta * r).tanh();
        assert!((t.table[0].sigma_x - expect).abs() < 1e-13);
        // <H_P> = -h <sigma^z> = -h (h / r) tanh(beta r)
        assert!((t.table[0].problem_energy + h * h / r * (beta * r).tanh()).abs() < 1e-13);
    }

    #[test]
    fn sigma_x_limits_and_monotonicity() {
        let inst = generate_spin_glass(LatticeSpec::new([2, 2, 1], Boundary::Open).unwrap(), 3);
        let gammas: Vec<f64> = (0..30).map(|k| 0.01 * 1.4f64.powi(k)).collect();
        let t = exact_quantum_expectations(&inst, 2.0, &gammas).unwrap();
        for w in t.table.windows(2) {
            assert!(w[1].sigma_x > w[0].sigma_x);
        }
        assert!(t.table[0].sigma_x < 0.05);
        assert!(t.table.last().unwrap().sigma_x > 0.999);
        assert!(t.table.iter().all(|p| p.sigma_x > 0.0 && p.sigma_x < 1.0));
    }

    #[test]
    fn curvature_matches_finite_difference_of_log_z() {
        let inst = generate_spin_glass(LatticeSpec::new([2, 2, 1], Boundary::Open).unwrap(), 4);
        let (beta, g0, s, h) = (1.5, 2.0, 0.4, 1e-3);
        let lnz = |s: f64| exact_log_partition(&inst, beta, s, (1.0 - s) * g0).unwrap();
        let fd = (lnz(s + h) - 2.0 * lnz(s) + lnz(s - h)) / (h * h);
        let exact = exact_general_curvature(&inst, beta, g0, &[s]).unwrap()[0].curvature;
        assert!((fd - exact).abs() < 1e-4 * exact.abs().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn open_path_free_spin_is_fully_polarised() {
        let v = exact_open_path_sigma_x(&single_spin(0.0), 2.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // A field makes the open-path value differ from the thermal one.
        let open = exact_open_path_sigma_x(&single_spin(1.0), 2.0, 1.0).unwrap();
        let thermal = exact_quantum_expectations(&single_spin(1.0), 2.0, &[1.0]).unwrap();
        assert!((open - thermal.table[0].sigma_x).abs() > 1e-3);
    }

    #[test]
    fn size_bound() {
        let inst = generate_spin_glass(LatticeSpec::new([2, 2, 2], Boundary::Open).unwrap(), 1);
        assert!(exact_quantum_expectations_bounded(&inst, 1.0, &[1.0], 7).is_err());
    }
}
