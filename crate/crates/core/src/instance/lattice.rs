use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

impl Default for Boundary {
    fn default() -> Self {
        Boundary::Periodic
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            other => Err(Error::InvalidLattice(format!(
                "unknown boundary '{other}', expected 'periodic' or 'open'"
            ))),
        }
    }
}

/// Simple cubic lattice of `lx * ly * lz` sites.
///
/// Sites are indexed row-major, `i = x + lx * (y + ly * z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    dims: [usize; 3],
    boundary: Boundary,
}

impl LatticeSpec {
    /// Periodic lattices need every extent to be at least 3, otherwise the
    /// wrap-around bond would duplicate a bond between the same pair.
    pub fn new(dims: [usize; 3], boundary: Boundary) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidLattice(format!(
                "all extents must be >= 1, got {dims:?}"
            )));
        }
        if boundary == Boundary::Periodic && dims.iter().any(|&d| d < 3) {
            return Err(Error::InvalidLattice(format!(
                "periodic boundaries need every extent >= 3 (got {dims:?}); \
                 smaller extents would create duplicate bonds, use open boundaries"
            )));
        }
        Ok(LatticeSpec { dims, boundary })
    }

    pub fn cubic(l: usize, boundary: Boundary) -> Result<Self> {
        Self::new([l, l, l], boundary)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_sites(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn expected_bonds(&self) -> usize {
        let [lx, ly, lz] = self.dims;
        let n = self.num_sites();
        match self.boundary {
            Boundary::Periodic => 3 * n,
            Boundary::Open => 3 * n - (ly * lz + lx * lz + lx * ly),
        }
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn coords(&self, i: usize) -> [usize; 3] {
        let [lx, ly, _] = self.dims;
        [i % lx, (i / lx) % ly, i / (lx * ly)]
    }

    /// Neighbour of site `i` one step in the positive direction of `axis`, if
    /// it exists under the boundary conditions.
    pub fn forward_neighbor(&self, i: usize, axis: usize) -> Option<usize> {
        let mut c = self.coords(i);
        let l = self.dims[axis];
        if c[axis] + 1 < l {
            c[axis] += 1;
        } else if self.boundary == Boundary::Periodic {
            c[axis] = 0;
        } else {
            return None;
        }
        Some(self.index(c[0], c[1], c[2]))
    }

    /// All nearest-neighbour pairs `(i, j)` with `i < j`, sorted.
    pub fn bond_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::with_capacity(self.expected_bonds());
        for i in 0..self.num_sites() {
            for axis in 0..3 {
                if let Some(j) = self.forward_neighbor(i, axis) {
                    pairs.push((i.min(j), i.max(j)));
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }

    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        (0..3).any(|axis| {
            self.forward_neighbor(i, axis) == Some(j) || self.forward_neighbor(j, axis) == Some(i)
        })
    }

    pub fn label(&self) -> String {
        let [lx, ly, lz] = self.dims;
        format!("{lx}x{ly}x{lz}_{}", self.boundary)
    }
}
