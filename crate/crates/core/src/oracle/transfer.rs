//! Exact ground states by a min-plus transfer over lattice layers.
//!
//! The lattice is cut into layers perpendicular to its longest axis. A layer
//! of `m` sites has `2^m` states, and bonds between consecutive layers join
//! sites at the same in-layer position, so the minimisation over one layer
//! factorises site by site (a butterfly, like a fast Walsh transform with
//! `min` in place of `+`). Cost is `O(layers * m * 2^m)` with open boundaries.
//! A periodic layer axis closes the chain into a loop, which costs another
//! factor `2^m` for the state of the first layer.

use super::enumerate::{brute_force_ground_state, BRUTE_FORCE_BOUND};
use crate::{Boundary, Error, Result, SpinConfiguration, SpinGlassInstance};

/// Refuse transfer runs above this many elementary min operations.
pub const TRANSFER_COST_BOUND: f64 = 2e11;
/// Widest layer the solver accepts (one `2^m` vector of f64 is 1 GiB at 27).
pub const MAX_LAYER_WIDTH: usize = 27;
/// Stored layer vectors for reconstructing a minimiser must fit in this.
const RECONSTRUCT_BYTES: f64 = 512.0 * 1024.0 * 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundStateMethod {
    BruteForce,
    Transfer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactGroundState {
    pub energy: f64,
    /// A minimiser, when it was cheap enough to reconstruct.
    pub config: Option<SpinConfiguration>,
    pub method: GroundStateMethod,
}

struct Layer {
    sites: Vec<usize>,
    /// In-layer bonds as `(p, q, J)` with positions `p > q`.
    bonds: Vec<(usize, usize, f64)>,
    fields: Vec<f64>,
    /// Couplings to the next layer by position (wrapping for periodic).
    up: Vec<f64>,
}

struct Layering {
    layers: Vec<Layer>,
    width: usize,
    periodic: bool,
}

impl Layering {
    fn new(inst: &SpinGlassInstance) -> Self {
        let lat = inst.lattice();
        let dims = lat.dims();
        let axis = (0..3).max_by_key(|&a| (dims[a], a)).unwrap();
        let count = dims[axis];
        let n = inst.num_spins();
        let width = n / count;
        let mut layers: Vec<Layer> = (0..count)
            .map(|_| Layer {
                sites: Vec::with_capacity(width),
                bonds: Vec::new(),
                fields: vec![0.0; width],
                up: vec![0.0; width],
            })
            .collect();
        let mut layer_of = vec![0; n];
        let mut pos = vec![0; n];
        for i in 0..n {
            let l = lat.coords(i)[axis];
            layer_of[i] = l;
            pos[i] = layers[l].sites.len();
            layers[l].sites.push(i);
        }
        for (i, &h) in inst.fields().iter().enumerate() {
            layers[layer_of[i]].fields[pos[i]] = h;
        }
        for b in inst.bonds() {
            let (li, lj) = (layer_of[b.i], layer_of[b.j]);
            if li == lj {
                let (p, q) = (pos[b.i].max(pos[b.j]), pos[b.i].min(pos[b.j]));
                layers[li].bonds.push((p, q, b.coupling));
            } else {
                debug_assert_eq!(pos[b.i], pos[b.j]);
                let lower = if (li + 1) % count == lj { li } else { lj };
                layers[lower].up[pos[b.i]] += b.coupling;
            }
        }
        Layering {
            layers,
            width,
            periodic: lat.boundary() == Boundary::Periodic && count > 2,
        }
    }

    fn cost(&self) -> f64 {
        let states = (self.width as f64).exp2();
        let chain = self.layers.len() as f64 * self.width.max(1) as f64 * states;
        if self.periodic {
            chain * states
        } else {
            chain
        }
    }
}

/// In-layer energy of every state; bit `p` set means the spin at position `p` is up.
fn intra_energies(layer: &Layer, width: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(1 << width, 0.0);
    let mut neigh: Vec<Vec<(usize, f64)>> = vec![Vec::new(); width];
    for &(p, q, j) in &layer.bonds {
        neigh[p].push((q, j));
        neigh[q].push((p, j));
    }
    out[0] = -layer.bonds.iter().map(|b| b.2).sum::<f64>() + layer.fields.iter().sum::<f64>();
    for x in 1usize..out.len() {
        let p = usize::BITS as usize - 1 - x.leading_zeros() as usize;
        let prev = x ^ (1 << p);
        let mut local = layer.fields[p];
        for &(q, j) in &neigh[p] {
            local += if prev >> q & 1 == 1 { j } else { -j };
        }
        out[x] = out[prev] - 2.0 * local;
    }
}

/// `v(y) <- min_x [v(x) - sum_p J_p s_p(x) s_p(y)]`, in place.
fn transfer(v: &mut [f64], couplings: &[f64]) {
    for (p, &j) in couplings.iter().enumerate() {
        let bit = 1usize << p;
        for x in 0..v.len() {
            if x & bit == 0 {
                let (a, c) = (v[x], v[x | bit]);
                v[x] = (a - j).min(c + j);
                v[x | bit] = (a + j).min(c - j);
            }
        }
    }
}

/// Inter-layer energy as a function of `x xor y`.
fn xor_weights(couplings: &[f64], width: usize) -> Vec<f64> {
    let mut w = vec![0.0; 1 << width];
    w[0] = -couplings.iter().sum::<f64>();
    for z in 1usize..w.len() {
        let p = z.trailing_zeros() as usize;
        w[z] = w[z ^ (1 << p)] + 2.0 * couplings[p];
    }
    w
}

fn argmin(v: impl Iterator<Item = f64>) -> (usize, f64) {
    v.enumerate()
        .fold((0, f64::INFINITY), |best, (k, e)| if e < best.1 { (k, e) } else { best })
}

fn pair_energy(x: usize, y: usize, couplings: &[f64]) -> f64 {
    couplings
        .iter()
        .enumerate()
        .map(|(p, &j)| if (x ^ y) >> p & 1 == 0 { -j } else { j })
        .sum()
}

/// Walks back through stored layer vectors from the state of the last one.
fn backtrack(stored: &[Vec<f64>], layering: &Layering, first: usize, last: usize) -> Vec<usize> {
    let mut states = vec![0; stored.len()];
    states[stored.len() - 1] = last;
    for l in (first..stored.len() - 1).rev() {
        let y = states[l + 1];
        let up = &layering.layers[l].up;
        states[l] = argmin(stored[l].iter().enumerate().map(|(x, f)| f + pair_energy(x, y, up))).0;
    }
    states
}

fn assemble(layering: &Layering, states: &[usize], n: usize) -> SpinConfiguration {
    let mut spins = vec![-1i8; n];
    for (layer, &x) in layering.layers.iter().zip(states) {
        for (p, &i) in layer.sites.iter().enumerate() {
            if x >> p & 1 == 1 {
                spins[i] = 1;
            }
        }
    }
    SpinConfiguration::new(spins).expect("spins are +-1")
}

fn solve_open(layering: &Layering, n: usize, keep: bool) -> (f64, Option<SpinConfiguration>) {
    let w = layering.width;
    let mut scratch = Vec::new();
    let mut f = Vec::new();
    intra_energies(&layering.layers[0], w, &mut f);
    let mut stored = Vec::new();
    for l in 1..layering.layers.len() {
        if keep {
            stored.push(f.clone());
        }
        transfer(&mut f, &layering.layers[l - 1].up);
        intra_energies(&layering.layers[l], w, &mut scratch);
        f.iter_mut().zip(&scratch).for_each(|(a, b)| *a += b);
    }
    let (last, e0) = argmin(f.iter().copied());
    if !keep {
        return (e0, None);
    }
    stored.push(f);
    let states = backtrack(&stored, layering, 0, last);
    (e0, Some(assemble(layering, &states, n)))
}

fn solve_periodic(
    layering: &Layering,
    n: usize,
    symmetric: bool,
    keep: bool,
) -> (f64, Option<SpinConfiguration>) {
    let w = layering.width;
    let count = layering.layers.len();
    let intra: Vec<Vec<f64>> = layering
        .layers
        .iter()
        .map(|l| {
            let mut v = Vec::new();
            intra_energies(l, w, &mut v);
            v
        })
        .collect();
    let first = xor_weights(&layering.layers[0].up, w);
    let wrap = xor_weights(&layering.layers[count - 1].up, w);

    // Layers 1..count for a fixed first-layer state, returning every vector
    // when asked.
    let chain = |x0: usize, keep: bool, f: &mut Vec<f64>, stored: &mut Vec<Vec<f64>>| {
        f.clear();
        f.extend((0..1usize << w).map(|y| intra[0][x0] + first[x0 ^ y] + intra[1][y]));
        for l in 2..count {
            if keep {
                stored.push(f.clone());
            }
            transfer(f, &layering.layers[l - 1].up);
            f.iter_mut().zip(&intra[l]).for_each(|(a, b)| *a += b);
        }
        argmin(f.iter().enumerate().map(|(y, v)| v + wrap[x0 ^ y]))
    };

    // With no fields a global flip maps ground states to ground states, so
    // the top spin of the first layer can be fixed.
    let range = if symmetric && w > 0 { 1usize << (w - 1) } else { 1usize << w };
    let mut f = Vec::with_capacity(1 << w);
    let mut unused = Vec::new();
    let mut best = (0usize, f64::INFINITY);
    for x0 in 0..range {
        let (_, e) = chain(x0, false, &mut f, &mut unused);
        if e < best.1 {
            best = (x0, e);
        }
    }
    if !keep {
        return (best.1, None);
    }
    let mut stored = vec![Vec::new()];
    let (last, _) = chain(best.0, true, &mut f, &mut stored);
    stored.push(f);
    let mut states = backtrack(&stored, layering, 1, last);
    states[0] = best.0;
    (best.1, Some(assemble(layering, &states, n)))
}

/// Exact ground-state energy by the layered transfer, with a minimiser when
/// the per-layer vectors fit in memory.
pub fn transfer_ground_state(inst: &SpinGlassInstance) -> Result<ExactGroundState> {
    let n = inst.num_spins();
    let layering = Layering::new(inst);
    if layering.width > MAX_LAYER_WIDTH || layering.cost() > TRANSFER_COST_BOUND {
        return Err(Error::TooLarge {
            what: "transfer-matrix ground state",
            n,
            bound: BRUTE_FORCE_BOUND,
        });
    }
    let bytes = 8.0 * (layering.width as f64).exp2() * layering.layers.len() as f64;
    let keep = bytes <= RECONSTRUCT_BYTES;
    let (energy, config) = if layering.periodic {
        solve_periodic(&layering, n, !inst.has_fields(), keep)
    } else {
        solve_open(&layering, n, keep)
    };
    Ok(ExactGroundState {
        energy,
        config,
        method: GroundStateMethod::Transfer,
    })
}

/// Exact ground state by whichever of enumeration and transfer is cheaper.
pub fn exact_ground_state(inst: &SpinGlassInstance) -> Result<ExactGroundState> {
    let n = inst.num_spins();
    let enumeration = (n as f64).exp2();
    let layering = Layering::new(inst);
    if n <= BRUTE_FORCE_BOUND && enumeration <= layering.cost() {
        let gs = brute_force_ground_state(inst)?;
        return Ok(ExactGroundState {
            energy: gs.energy,
            config: Some(gs.config),
            method: GroundStateMethod::BruteForce,
        });
    }
    transfer_ground_state(inst)
}

pub fn exact_ground_energy(inst: &SpinGlassInstance) -> Result<f64> {
    exact_ground_state(inst).map(|g| g.energy)
}
