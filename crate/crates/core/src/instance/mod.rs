//! Ising spin-glass instances on simple cubic lattices.
//!
//! The energy of a configuration `s` is
//! `E(s) = -sum_{bonds} J_ij s_i s_j - sum_i h_i s_i` (units with `k_B = 1`).

mod io;
mod lattice;

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use io::{load_instance, parse_instance, save_instance, write_instance};
pub use lattice::{Boundary, LatticeSpec};

use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

/// Compressed neighbour lists: for each site the `(neighbour, J)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    entries: Vec<(u32, f64)>,
}

impl Adjacency {
    fn build(n: usize, bonds: &[Bond]) -> Self {
        let mut degree = vec![0usize; n];
        for b in bonds {
            degree[b.i] += 1;
            degree[b.j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut entries = vec![(0u32, 0.0); offsets[n]];
        for b in bonds {
            entries[fill[b.i]] = (b.j as u32, b.coupling);
            fill[b.i] += 1;
            entries[fill[b.j]] = (b.i as u32, b.coupling);
            fill[b.j] += 1;
        }
        Adjacency { offsets, entries }
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// An immutable spin-glass problem.
#[derive(Debug, Clone)]
pub struct SpinGlassInstance {
    lattice: LatticeSpec,
    bonds: Vec<Bond>,
    fields: Vec<f64>,
    id: String,
    seed: u64,
    adjacency: Adjacency,
}

impl PartialEq for SpinGlassInstance {
    fn eq(&self, other: &Self) -> bool {
        self.lattice == other.lattice
            && self.id == other.id
            && self.seed == other.seed
            && self.fields.len() == other.fields.len()
            && self
                .fields
                .iter()
                .zip(&other.fields)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.bonds.len() == other.bonds.len()
            && self.bonds.iter().zip(&other.bonds).all(|(a, b)| {
                a.i == b.i && a.j == b.j && a.coupling.to_bits() == b.coupling.to_bits()
            })
    }
}

impl SpinGlassInstance {
    /// Validates that bonds are nearest-neighbour pairs with
    /// `i < j`, without duplicates, and that there is one field per site.
    /// Bonds are stored sorted by `(i, j)`.
    pub fn new(
        lattice: LatticeSpec,
        mut bonds: Vec<Bond>,
        fields: Vec<f64>,
        id: impl Into<String>,
        seed: u64,
    ) -> Result<Self> {
        let n = lattice.num_sites();
        if fields.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: fields.len(),
            });
        }
        let mut seen = HashSet::with_capacity(bonds.len());
        for b in &bonds {
            if b.i >= b.j {
                return Err(Error::InvalidInstance(format!(
                    "bond ({}, {}) must have i < j",
                    b.i, b.j
                )));
            }
            if b.j >= n {
                return Err(Error::InvalidInstance(format!(
                    "bond ({}, {}) references a site outside 0..{n}",
                    b.i, b.j
                )));
            }
            if !lattice.are_neighbors(b.i, b.j) {
                return Err(Error::InvalidInstance(format!(
                    "bond ({}, {}) is not a nearest-neighbour pair",
                    b.i, b.j
                )));
            }
            if !seen.insert((b.i, b.j)) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate bond ({}, {})",
                    b.i, b.j
                )));
            }
            if !b.coupling.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "bond ({}, {}) has non-finite coupling",
                    b.i, b.j
                )));
            }
        }
        if fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidInstance("non-finite local field".into()));
        }
        bonds.sort_by_key(|b| (b.i, b.j));
        let adjacency = Adjacency::build(n, &bonds);
        Ok(SpinGlassInstance {
            lattice,
            bonds,
            fields,
            id: id.into(),
            seed,
            adjacency,
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_spins(&self) -> usize {
        self.fields.len()
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&h| h != 0.0)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Local field `h_i + sum_j J_ij s_j` felt by spin `i`.
    #[inline]
    pub fn local_field(&self, spins: &[i8], i: usize) -> f64 {
        let mut f = self.fields[i];
        for &(j, c) in self.adjacency.neighbors(i) {
            f += c * spins[j as usize] as f64;
        }
        f
    }

    /// Energy change from flipping spin `i`: `2 s_i (h_i + sum_j J_ij s_j)`.
    #[inline]
    pub fn flip_delta(&self, spins: &[i8], i: usize) -> f64 {
        2.0 * spins[i] as f64 * self.local_field(spins, i)
    }

    /// Energy of a raw spin slice; the caller guarantees length and values.
    pub fn energy_of(&self, spins: &[i8]) -> f64 {
        let mut e = 0.0;
        for b in &self.bonds {
            e -= b.coupling * (spins[b.i] * spins[b.j]) as f64;
        }
        for (h, &s) in self.fields.iter().zip(spins) {
            e -= h * s as f64;
        }
        e
    }

    pub fn energy(&self, config: &SpinConfiguration) -> Result<f64> {
        if config.len() != self.num_spins() {
            return Err(Error::LengthMismatch {
                expected: self.num_spins(),
                got: config.len(),
            });
        }
        Ok(self.energy_of(config.spins()))
    }
}

/// Assignment of `+1` / `-1` to every site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfiguration(Vec<i8>);

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::param(format!(
                "spin {pos} has value {}, expected +1 or -1",
                spins[pos]
            )));
        }
        Ok(SpinConfiguration(spins))
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfiguration(vec![1; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        SpinConfiguration((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect())
    }

    /// Bit `i` of `bits` set means spin `i` is up.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        SpinConfiguration((0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flipped(&self) -> Self {
        SpinConfiguration(self.0.iter().map(|s| -s).collect())
    }

    /// Compact `+`/`-` string.
    pub fn to_sign_string(&self) -> String {
        self.0.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
    }
}

impl TryFrom<Vec<i8>> for SpinConfiguration {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        SpinConfiguration::new(v)
    }
}

impl From<SpinConfiguration> for Vec<i8> {
    fn from(c: SpinConfiguration) -> Self {
        c.0
    }
}

/// Spin glass with couplings drawn i.i.d. uniform on `[-1, 1]` and no fields.
pub fn generate_spin_glass(lattice: LatticeSpec, seed: u64) -> SpinGlassInstance {
    generate_spin_glass_indexed(lattice, seed, 0)
}

/// Member `index` of the ensemble keyed by `seed`. Each member uses its own
/// random stream so ensembles can be extended without changing earlier members.
pub fn generate_spin_glass_indexed(
    lattice: LatticeSpec,
    seed: u64,
    index: u64,
) -> SpinGlassInstance {
    let mut rng = rng::stream(seed, index);
    let bonds = lattice
        .bond_pairs()
        .into_iter()
        .map(|(i, j)| Bond {
            i,
            j,
            coupling: rng.gen_range(-1.0..=1.0),
        })
        .collect();
    let id = format!("sg_{}_s{seed}_i{index}", lattice.label());
    SpinGlassInstance::new(lattice, bonds, vec![0.0; lattice.num_sites()], id, seed)
        .expect("generated lattice bonds are valid")
}

/// Ferromagnet (all `J = 1`) with a single symmetry-breaking field.
pub fn generate_ferromagnet(
    lattice: LatticeSpec,
    field_site: usize,
    field_strength: f64,
) -> Result<SpinGlassInstance> {
    let n = lattice.num_sites();
    if field_site >= n {
        return Err(Error::param(format!(
            "field site {field_site} outside 0..{n}"
        )));
    }
    let bonds = lattice
        .bond_pairs()
        .into_iter()
        .map(|(i, j)| Bond { i, j, coupling: 1.0 })
        .collect();
    let mut fields = vec![0.0; n];
    fields[field_site] = field_strength;
    let id = format!("fm_{}_h{field_site}_{field_strength}", lattice.label());
    SpinGlassInstance::new(lattice, bonds, fields, id, 0)
}

/// A lone spin in a longitudinal field. Useful as an analytic test case.
pub fn single_spin(field: f64) -> SpinGlassInstance {
    let lattice = LatticeSpec::new([1, 1, 1], Boundary::Open).expect("1x1x1 open is valid");
    SpinGlassInstance::new(lattice, vec![], vec![field], format!("spin_h{field}"), 0)
        .expect("single spin is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn open(l: [usize; 3]) -> LatticeSpec {
        LatticeSpec::new(l, Boundary::Open).unwrap()
    }

    /// Independent energy: loop over every ordered pair of sites and look up
    /// the coupling in a dense matrix.
    fn dense_energy(inst: &SpinGlassInstance, s: &[i8]) -> f64 {
        let n = inst.num_spins();
        let mut jmat = vec![0.0; n * n];
        for b in inst.bonds() {
            jmat[b.i * n + b.j] = b.coupling;
        }
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..n {
                e -= jmat[i * n + j] * s[i] as f64 * s[j] as f64;
            }
            e -= inst.fields()[i] * s[i] as f64;
        }
        e
    }

    #[test]
    fn generation_examples() {
        let a = generate_spin_glass(open([2, 2, 2]), 1);
        assert_eq!(a.num_spins(), 8);
        assert_eq!(a.bonds().len(), 12);
        assert!(a.fields().iter().all(|&h| h == 0.0));
        let p = LatticeSpec::cubic(4, Boundary::Periodic).unwrap();
        let b = generate_spin_glass(p, 7);
        assert_eq!(b.num_spins(), 64);
        assert_eq!(b.bonds().len(), 192);
        assert!(b.bonds().iter().all(|b| (-1.0..=1.0).contains(&b.coupling)));
    }

    #[test]
    fn generation_is_reproducible() {
        let p = LatticeSpec::cubic(4, Boundary::Periodic).unwrap();
        assert_eq!(generate_spin_glass(p, 7), generate_spin_glass(p, 7));
        assert_ne!(
            generate_spin_glass(p, 7).bonds()[0].coupling,
            generate_spin_glass(p, 8).bonds()[0].coupling
        );
    }

    #[test]
    fn ferromagnet_energies() {
        let fm = generate_ferromagnet(open([2, 2, 2]), 0, 0.5).unwrap();
        assert_eq!(fm.energy(&SpinConfiguration::all_up(8)).unwrap(), -12.5);
        assert_eq!(
            fm.energy(&SpinConfiguration::all_up(8).flipped()).unwrap(),
            -11.5
        );
        let fm0 = generate_ferromagnet(open([2, 2, 2]), 0, 0.0).unwrap();
        assert_eq!(fm0.energy(&SpinConfiguration::all_up(8)).unwrap(), -12.0);
        let p3 = LatticeSpec::cubic(3, Boundary::Periodic).unwrap();
        let fm3 = generate_ferromagnet(p3, 13, 1.0).unwrap();
        assert_eq!(fm3.energy(&SpinConfiguration::all_up(27)).unwrap(), -82.0);
        assert!(generate_ferromagnet(open([2, 2, 2]), 8, 1.0).is_err());
    }

    #[test]
    fn energy_rejects_length_mismatch() {
        let fm = generate_ferromagnet(open([2, 2, 2]), 0, 0.5).unwrap();
        assert!(matches!(
            fm.energy(&SpinConfiguration::all_up(7)),
            Err(Error::LengthMismatch { expected: 8, got: 7 })
        ));
    }

    #[test]
    fn invalid_instances_are_rejected() {
        let l = open([2, 2, 2]);
        let dup = vec![
            Bond { i: 0, j: 1, coupling: 1.0 },
            Bond { i: 0, j: 1, coupling: 0.5 },
        ];
        assert!(SpinGlassInstance::new(l, dup, vec![0.0; 8], "x", 0).is_err());
        let far = vec![Bond { i: 0, j: 7, coupling: 1.0 }];
        assert!(SpinGlassInstance::new(l, far, vec![0.0; 8], "x", 0).is_err());
        let rev = vec![Bond { i: 1, j: 0, coupling: 1.0 }];
        assert!(SpinGlassInstance::new(l, rev, vec![0.0; 8], "x", 0).is_err());
    }

    #[test]
    fn spin_configuration_validates_values() {
        assert!(SpinConfiguration::new(vec![1, -1, 0]).is_err());
        let c = SpinConfiguration::from_bits(0b101, 3);
        assert_eq!(c.spins(), &[1, -1, 1]);
    }

    proptest! {
        #[test]
        fn energy_matches_dense_recomputation(seed in 0u64..1000, bits in any::<u64>()) {
            let p = LatticeSpec::cubic(3, Boundary::Periodic).unwrap();
            let inst = generate_spin_glass(p, seed);
            let c = SpinConfiguration::from_bits(bits, 27);
            let e = inst.energy(&c).unwrap();
            prop_assert!((e - dense_energy(&inst, c.spins())).abs() < 1e-12);
        }

        #[test]
        fn energy_is_flip_symmetric_without_fields(seed in 0u64..1000, bits in any::<u64>()) {
            let inst = generate_spin_glass(open([3, 2, 4]), seed);
            let c = SpinConfiguration::from_bits(bits, 24);
            let a = inst.energy(&c).unwrap();
            let b = inst.energy(&c.flipped()).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn single_flip_delta_matches_recomputation(seed in 0u64..1000, bits in any::<u64>(), site in 0usize..27, h in -2.0f64..2.0) {
            let p = LatticeSpec::cubic(3, Boundary::Periodic).unwrap();
            let base = generate_spin_glass(p, seed);
            let mut fields = vec![0.0; 27];
            fields[site] = h;
            let inst = SpinGlassInstance::new(p, base.bonds().to_vec(), fields, "t", 0).unwrap();
            let c = SpinConfiguration::from_bits(bits, 27);
            let mut flipped = c.spins().to_vec();
            flipped[site] = -flipped[site];
            let delta = inst.energy_of(&flipped) - inst.energy_of(c.spins());
            prop_assert!((delta - inst.flip_delta(c.spins(), site)).abs() < 1e-12);
        }
    }
}
