//! Reference computations written independently of the library: plain
//! sums over the bond list, exhaustive enumeration, and a dense matrix
//! exponential by scaling and squaring.

#![allow(dead_code)]

use annealab::SpinGlassInstance;

pub fn energy(inst: &SpinGlassInstance, spins: &[i8]) -> f64 {
    let mut e = 0.0;
    for b in inst.bonds() {
        e -= b.coupling * (spins[b.i] * spins[b.j]) as f64;
    }
    for (h, &s) in inst.fields().iter().zip(spins) {
        e -= h * s as f64;
    }
    e
}

pub fn spins_of(bits: usize, n: usize) -> Vec<i8> {
    (0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect()
}

pub fn all_energies(inst: &SpinGlassInstance) -> Vec<f64> {
    let n = inst.num_spins();
    (0..1usize << n).map(|b| energy(inst, &spins_of(b, n))).collect()
}

/// (E0, degeneracy within 1e-9).
pub fn ground_state(inst: &SpinGlassInstance) -> (f64, usize) {
    let es = all_energies(inst);
    let e0 = es.iter().cloned().fold(f64::INFINITY, f64::min);
    (e0, es.iter().filter(|&&e| e - e0 < 1e-9).count())
}

/// (<E>, <E^2> - <E>^2) at inverse temperature `beta`.
pub fn thermal(inst: &SpinGlassInstance, beta: f64) -> (f64, f64) {
    let es = all_energies(inst);
    let e0 = es.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for e in es {
        let w = (-beta * (e - e0)).exp();
        z += w;
        m1 += w * e;
        m2 += w * e * e;
    }
    let mean = m1 / z;
    (mean, m2 / z - mean * mean)
}

type Mat = Vec<Vec<f64>>;

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// `exp(a)` by Taylor series on `a / 2^k` followed by `k` squarings.
fn expm(a: &Mat) -> Mat {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let k = (norm / 0.25).log2().ceil().max(0.0) as i32;
    let scale = 0.5f64.powi(k);
    let s: Mat = a.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let mut result: Mat = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut term = result.clone();
    for m in 1..=24 {
        term = matmul(&term, &s);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= m as f64;
            }
        }
        for (r, t) in result.iter_mut().zip(&term) {
            for (x, y) in r.iter_mut().zip(t) {
                *x += y;
            }
        }
    }
    for _ in 0..k {
        result = matmul(&result, &result);
    }
    result
}

pub struct QuantumReference {
    pub sigma_x: f64,
    pub problem_energy: f64,
}

/// Thermal averages for `H = H_P - gamma sum_i sigma^x_i`.
pub fn quantum(inst: &SpinGlassInstance, beta: f64, gamma: f64) -> QuantumReference {
    let n = inst.num_spins();
    let dim = 1usize << n;
    let diag = all_energies(inst);
    let shift = diag.iter().cloned().fold(f64::INFINITY, f64::min) - gamma * n as f64;
    let mut a = vec![vec![0.0; dim]; dim];
    for s in 0..dim {
        a[s][s] = -beta * (diag[s] - shift);
        for i in 0..n {
            a[s][s ^ (1 << i)] += beta * gamma;
        }
    }
    let rho = expm(&a);
    let z: f64 = (0..dim).map(|s| rho[s][s]).sum();
    let hp: f64 = (0..dim).map(|s| rho[s][s] * diag[s]).sum();
    let mut sx = 0.0;
    for s in 0..dim {
        for i in 0..n {
            sx += rho[s ^ (1 << i)][s];
        }
    }
    QuantumReference {
        sigma_x: sx / (n as f64 * z),
        problem_energy: hp / z,
    }
}
