//! Exact expectation of the path-integral `sigma^x` estimator at finite
//! Trotter number `M`, computed with transfer matrices instead of sampling.
//!
//! With `P = exp(-tau a H_P)` (diagonal) and `E = exp(tau Gamma sum sigma^x)`,
//! the periodic path weight is `tr (P E)^M` and the open one is
//! `<1| P (E P)^{M-1} |1>`. Inserting `sigma^x` on a time link gives the
//! estimator `tanh(tau Gamma)^{s s'}`, so these values are exactly what an
//! unbiased sampler of the discretised action converges to. Their distance
//! from the continuum oracle is the pure discretisation error.

use nalgebra::{DMatrix, SymmetricEigen};

use super::enumerate::enumerate_energies;
use super::quantum::{apply_driver, check_quantum_size, QUANTUM_BOUND};
use crate::pimc::TimeBoundary;
use crate::{Error, Result, SpinGlassInstance};

/// `exp(c sum_i sigma^x_i) v` in place, one site at a time.
fn apply_driver_exp(n: usize, cosh: f64, sinh: f64, v: &mut [f64]) {
    for i in 0..n {
        let bit = 1usize << i;
        for b in 0..v.len() {
            if b & bit == 0 {
                let (x, y) = (v[b], v[b | bit]);
                v[b] = cosh * x + sinh * y;
                v[b | bit] = sinh * x + cosh * y;
            }
        }
    }
}

fn normalise(v: &mut [f64]) {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact discretised `<sigma^x>` (site average) for `M` slices at inverse
/// temperature `beta`, transverse field `gamma > 0`, problem scale 1.
pub fn trotter_sigma_x(
    inst: &SpinGlassInstance,
    beta: f64,
    gamma: f64,
    slices: usize,
    boundary: TimeBoundary,
) -> Result<f64> {
    check_quantum_size(inst, QUANTUM_BOUND)?;
    if slices < 2 || !(beta > 0.0) || !(gamma > 0.0) {
        return Err(Error::param("need M >= 2, beta > 0 and gamma > 0"));
    }
    let n = inst.num_spins();
    let tau = beta / slices as f64;
    let a = tau * gamma;
    let energies = enumerate_energies(inst, 16)?;
    let emin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let p: Vec<f64> = energies.iter().map(|e| (-tau * (e - emin)).exp()).collect();
    match boundary {
        TimeBoundary::Periodic => periodic(n, &p, a, slices),
        TimeBoundary::Open => Ok(open(n, &p, a, slices)),
    }
}

fn periodic(n: usize, p: &[f64], a: f64, slices: usize) -> Result<f64> {
    // T = E^{1/2} P E^{1/2} is symmetric and tr(X (PE)^M) = tr(X T^M)
    // because X commutes with E.
    let d = p.len();
    let (ch, sh) = ((0.5 * a).cosh(), (0.5 * a).sinh());
    let mut half = DMatrix::<f64>::zeros(d, d);
    for b in 0..d {
        for c in 0..d {
            let flips = (b ^ c).count_ones() as i32;
            half[(b, c)] = ch.powi(n as i32 - flips) * sh.powi(flips);
        }
    }
    let mut t = half.clone();
    for (c, mut col) in t.column_iter_mut().enumerate() {
        col *= p[c];
    }
    let t = t * &half;
    let eig = SymmetricEigen::new(t);
    let lmax = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let mut dv = vec![0.0; d];
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, col) in eig.eigenvectors.column_iter().enumerate() {
        let w = (eig.eigenvalues[k].max(0.0) / lmax).powi(slices as i32);
        if w == 0.0 {
            continue;
        }
        apply_driver(n, col.as_slice(), &mut dv);
        num += w * dot(col.as_slice(), &dv) / n as f64;
        den += w;
    }
    Ok(num / den)
}

fn open(n: usize, p: &[f64], a: f64, slices: usize) -> f64 {
    // Path: P_1 E P_2 E ... E P_M between all-ones vectors. Link j sits
    // between slices j and j+1; left[j] covers slices 1..=j, right[j] covers
    // slices j+1..=M.
    let d = p.len();
    let (ch, sh) = (a.cosh(), a.sinh());
    let mut right = vec![vec![0.0; d]; slices];
    let mut v: Vec<f64> = p.to_vec();
    normalise(&mut v);
    right[slices - 1] = v.clone();
    for j in (1..slices - 1).rev() {
        apply_driver_exp(n, ch, sh, &mut v);
        v.iter_mut().zip(p).for_each(|(x, w)| *x *= w);
        normalise(&mut v);
        right[j] = v.clone();
    }
    let mut left: Vec<f64> = p.to_vec();
    normalise(&mut left);
    let mut er = vec![0.0; d];
    let mut xer = vec![0.0; d];
    let mut total = 0.0;
    for j in 1..slices {
        er.copy_from_slice(&right[j]);
        apply_driver_exp(n, ch, sh, &mut er);
        apply_driver(n, &er, &mut xer);
        total += dot(&left, &xer) / (n as f64 * dot(&left, &er));
        apply_driver_exp(n, ch, sh, &mut left);
        left.iter_mut().zip(p).for_each(|(x, w)| *x *= w);
        normalise(&mut left);
    }
    total / (slices - 1) as f64
}
