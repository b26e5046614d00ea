use rand::Rng as _;

use super::{time_links, PathConfiguration, TimeBoundary};
use crate::rng::Rng;
use crate::{SpinConfiguration, SpinGlassInstance};

/// A path with incrementally tracked spatial energy and time-link alignment.
pub struct PimcChain<'a> {
    inst: &'a SpinGlassInstance,
    path: PathConfiguration,
    boundary: TimeBoundary,
    /// `sum_k H_P(slice k)`.
    spatial: f64,
    /// Number of aligned time links.
    aligned: usize,
    hloc: Vec<f64>,
    starts: Vec<usize>,
}

fn line_aligned(line: &[i8], boundary: TimeBoundary) -> usize {
    let inner = line.windows(2).filter(|w| w[0] == w[1]).count();
    let wrap = boundary == TimeBoundary::Periodic && line[0] == line[line.len() - 1];
    inner + wrap as usize
}

impl<'a> PimcChain<'a> {
    pub fn new(
        inst: &'a SpinGlassInstance,
        path: PathConfiguration,
        boundary: TimeBoundary,
    ) -> Self {
        let m = path.slices();
        let mut chain = PimcChain {
            inst,
            path,
            boundary,
            spatial: 0.0,
            aligned: 0,
            hloc: vec![0.0; m],
            starts: Vec::with_capacity(m),
        };
        (chain.spatial, chain.aligned) = chain.recompute();
        chain
    }

    /// Independent uniformly random slices.
    pub fn random(
        inst: &'a SpinGlassInstance,
        slices: usize,
        boundary: TimeBoundary,
        rng: &mut Rng,
    ) -> Self {
        let n = inst.num_spins();
        let spins = (0..n * slices)
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        let path = PathConfiguration::new(n, slices, spins).expect("valid shape");
        PimcChain::new(inst, path, boundary)
    }

    pub fn path(&self) -> &PathConfiguration {
        &self.path
    }

    pub fn slices(&self) -> usize {
        self.path.slices()
    }

    pub fn boundary(&self) -> TimeBoundary {
        self.boundary
    }

    pub fn spatial_energy(&self) -> f64 {
        self.spatial
    }

    pub fn aligned_links(&self) -> usize {
        self.aligned
    }

    pub fn total_links(&self) -> usize {
        self.path.sites() * time_links(self.slices(), self.boundary)
    }

    /// `sum_links s s'`.
    pub fn link_sum(&self) -> f64 {
        2.0 * self.aligned as f64 - self.total_links() as f64
    }

    /// Spatial energy and aligned-link count recomputed from scratch.
    pub fn recompute(&self) -> (f64, usize) {
        let m = self.slices();
        let spatial = (0..m).map(|k| self.slice_energy(k)).sum();
        let aligned = (0..self.path.sites())
            .map(|i| line_aligned(self.path.line(i), self.boundary))
            .sum();
        (spatial, aligned)
    }

    pub fn slice_energy(&self, k: usize) -> f64 {
        self.inst.energy_of(self.path.slice(k).spins())
    }

    /// Lowest-energy slice and its energy, recomputed exactly.
    pub fn best_slice(&self) -> (usize, f64) {
        (0..self.slices())
            .map(|k| (k, self.slice_energy(k)))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
    }

    /// Site-averaged `<sigma^x>` estimator for the current path, with
    /// `a = tau Gamma`: each link contributes `tanh a` if aligned and
    /// `coth a` otherwise.
    pub fn sigma_x(&self, a: f64) -> f64 {
        let t = a.tanh();
        let anti = self.total_links() - self.aligned;
        (self.aligned as f64 * t + anti as f64 / t) / self.total_links() as f64
    }

    /// One sweep: a cluster update on every site line in index order.
    /// `gamma = 0` moves whole lines.
    pub fn sweep(&mut self, beta: f64, gamma: f64, problem_scale: f64, rng: &mut Rng) {
        let m = self.slices();
        let tau = beta / m as f64;
        // e^{-2K} = tanh(tau Gamma)
        let bond = if gamma > 0.0 { 1.0 - (tau * gamma).tanh() } else { 1.0 };
        let weight = tau * problem_scale;
        for i in 0..self.path.sites() {
            self.update_line(i, bond, weight, rng);
        }
    }

    fn local_fields(&mut self, i: usize) {
        let m = self.slices();
        let h = self.inst.fields()[i];
        self.hloc.iter_mut().for_each(|x| *x = h);
        let raw = self.path.raw();
        for &(j, c) in self.inst.adjacency().neighbors(i) {
            let line = &raw[j as usize * m..(j as usize + 1) * m];
            for (x, &s) in self.hloc.iter_mut().zip(line) {
                *x += c * s as f64;
            }
        }
    }

    fn update_line(&mut self, i: usize, bond: f64, weight: f64, rng: &mut Rng) {
        let m = self.slices();
        self.local_fields(i);
        let boundary = self.boundary;
        let line = &mut self.path.raw_mut()[i * m..(i + 1) * m];
        let before = line_aligned(line, boundary);

        self.starts.clear();
        self.starts.push(0);
        for k in 1..m {
            let bonded = line[k] == line[k - 1] && (bond >= 1.0 || rng.gen::<f64>() < bond);
            if !bonded {
                self.starts.push(k);
            }
        }
        let segments = self.starts.len();
        let wrap = segments > 1
            && boundary == TimeBoundary::Periodic
            && line[0] == line[m - 1]
            && (bond >= 1.0 || rng.gen::<f64>() < bond);

        let seg_delta = |line: &[i8], a: usize, b: usize, h: &[f64]| -> f64 {
            2.0 * (a..b).map(|k| line[k] as f64 * h[k]).sum::<f64>()
        };
        let hloc = &self.hloc;
        let mut change = 0.0;
        // With a wrap bond the first and last segments form one cluster.
        let first_cluster = if wrap { 1 } else { 0 };
        for s in first_cluster..segments {
            let a = self.starts[s];
            let b = if s + 1 < segments { self.starts[s + 1] } else { m };
            let mut delta = seg_delta(line, a, b, hloc);
            let joined = wrap && s + 1 == segments;
            if joined {
                delta += seg_delta(line, 0, self.starts[1], hloc);
            }
            // Heat bath: a zero-cost cluster must flip with probability 1/2,
            // otherwise all clusters flip together and kinks never move.
            if rng.gen::<f64>() * (1.0 + (delta * weight).exp()) < 1.0 {
                line[a..b].iter_mut().for_each(|x| *x = -*x);
                if joined {
                    line[..self.starts[1]].iter_mut().for_each(|x| *x = -*x);
                }
                change += delta;
            }
        }
        self.spatial += change;
        let after = line_aligned(line, boundary);
        self.aligned = self.aligned + after - before;
    }

    /// Every slice as a classical configuration.
    pub fn slices_iter(&self) -> impl Iterator<Item = SpinConfiguration> + '_ {
        (0..self.slices()).map(|k| self.path.slice(k))
    }
}
