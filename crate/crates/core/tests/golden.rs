//! Frozen reference values for the small golden instances, each checked
//! against both the library and the reference code in `common`.

mod common;

use annealab::classical::ca_equilibrium_measure;
use annealab::instance::{
    generate_ferromagnet, generate_spin_glass, load_instance, save_instance, single_spin, Boundary,
    LatticeSpec,
};
use annealab::oracle::{
    brute_force_ground_state, exact_classical_thermal, exact_ground_state, exact_quantum_expectations,
    transfer_ground_state,
};
use annealab::stats;
use annealab::SpinConfiguration;
use proptest::prelude::*;

const E0_222_S1: f64 = -3.6145268006177895;

/// beta, <E>, sigma for the 2x2x2 open seed-1 glass.
const THERMAL_222_S1: [(f64, f64, f64); 3] = [
    (0.5, -1.2949345633999543, 2.363006467295222),
    (1.0, -2.2817788426854895, 1.5528406274952413),
    (2.0, -3.1696048105644685, 0.4250031397274192),
];

/// Gamma, <sigma^x>, <H_P> at beta = 2 for the same instance.
const QUANTUM_222_S1: [(f64, f64, f64); 3] = [
    (0.5, 0.5422926529879403, -2.5324157675146104),
    (1.0, 0.8535433995595781, -1.486505311090278),
    (2.0, 0.9772212065929903, -0.6814147938261761),
];

fn golden_glass() -> annealab::SpinGlassInstance {
    generate_spin_glass(LatticeSpec::cubic(2, Boundary::Open).unwrap(), 1)
}

#[test]
fn golden_ground_state() {
    let inst = golden_glass();
    assert_eq!(inst.num_spins(), 8);
    assert_eq!(inst.bonds().len(), 12);
    let (e0, deg) = common::ground_state(&inst);
    assert!((e0 - E0_222_S1).abs() < 1e-12);
    assert_eq!(deg, 2);
    let bf = brute_force_ground_state(&inst).unwrap();
    assert!((bf.energy - E0_222_S1).abs() < 1e-12);
    assert_eq!(bf.degeneracy, 2);
    assert!((common::energy(&inst, bf.config.spins()) - E0_222_S1).abs() < 1e-12);
    let tr = transfer_ground_state(&inst).unwrap();
    assert!((tr.energy - E0_222_S1).abs() < 1e-12);
}

#[test]
fn golden_thermal_table() {
    let inst = golden_glass();
    let betas: Vec<f64> = THERMAL_222_S1.iter().map(|r| r.0).collect();
    let lib = exact_classical_thermal(&inst, &betas).unwrap();
    for (row, p) in THERMAL_222_S1.iter().zip(&lib.table) {
        let (mean, var) = common::thermal(&inst, row.0);
        assert!((mean - row.1).abs() < 1e-12 && (var - row.2).abs() < 1e-12);
        assert!((p.mean_energy - row.1).abs() < 1e-10, "{p:?}");
        assert!((p.variance - row.2).abs() < 1e-10, "{p:?}");
    }
    assert!((lib.ground_energy - E0_222_S1).abs() < 1e-12);
}

#[test]
fn golden_quantum_table() {
    let inst = golden_glass();
    let gammas: Vec<f64> = QUANTUM_222_S1.iter().map(|r| r.0).collect();
    let lib = exact_quantum_expectations(&inst, 2.0, &gammas).unwrap();
    for (row, p) in QUANTUM_222_S1.iter().zip(&lib.table) {
        let r = common::quantum(&inst, 2.0, row.0);
        assert!((r.sigma_x - row.1).abs() < 1e-10 && (r.problem_energy - row.2).abs() < 1e-10);
        assert!((p.sigma_x - row.1).abs() < 1e-10, "{p:?}");
        assert!((p.problem_energy - row.2).abs() < 1e-10, "{p:?}");
    }
}

#[test]
fn ferromagnet_ground_states() {
    let open2 = LatticeSpec::cubic(2, Boundary::Open).unwrap();
    let fm = generate_ferromagnet(open2, 0, 0.5).unwrap();
    assert_eq!(common::ground_state(&fm), (-12.5, 1));
    assert_eq!(fm.energy(&SpinConfiguration::all_up(8)).unwrap(), -12.5);
    let down = SpinConfiguration::new(vec![-1; 8]).unwrap();
    assert_eq!(fm.energy(&down).unwrap(), -11.5);
    let free = generate_ferromagnet(open2, 0, 0.0).unwrap();
    let bf = brute_force_ground_state(&free).unwrap();
    assert_eq!((bf.energy, bf.degeneracy), (-12.0, 2));
    let big = generate_ferromagnet(LatticeSpec::cubic(3, Boundary::Periodic).unwrap(), 13, 1.0).unwrap();
    assert_eq!(exact_ground_state(&big).unwrap().energy, -82.0);
}

#[test]
fn single_spin_cases() {
    let gs = brute_force_ground_state(&single_spin(2.0)).unwrap();
    assert_eq!(gs.energy, -2.0);
    assert_eq!(gs.config.spins(), &[1]);
    let t = exact_classical_thermal(&single_spin(1.0), &[1.0]).unwrap();
    assert!((t.table[0].mean_energy + 1f64.tanh()).abs() < 1e-14);
    assert!((t.table[0].mean_energy + 0.7616).abs() < 1e-4);

    let free = exact_quantum_expectations(&single_spin(0.0), 2.0, &[1.0]).unwrap();
    assert!((free.table[0].sigma_x - 2f64.tanh()).abs() < 1e-12);
    assert!((free.table[0].sigma_x - 0.9640).abs() < 1e-4);
    let h = exact_quantum_expectations(&single_spin(1.0), 2.0, &[1.0]).unwrap();
    let analytic = (0.5f64).sqrt() * (2.0 * 2f64.sqrt()).tanh();
    assert!((h.table[0].sigma_x - analytic).abs() < 1e-12);
    assert!((common::quantum(&single_spin(1.0), 2.0, 1.0).sigma_x - analytic).abs() < 1e-12);
    // (1/sqrt 2) tanh(2 sqrt 2) evaluates to 0.70218, not 0.7036.
    assert!((analytic - 0.702183).abs() < 1e-6);
}

#[test]
fn uniform_measure_at_infinite_temperature() {
    let inst = golden_glass();
    let plain = stats::mean(&common::all_energies(&inst));
    let t = exact_classical_thermal(&inst, &[0.0]).unwrap();
    assert!((t.table[0].mean_energy - plain).abs() < 1e-12);
}

#[test]
fn zero_beta_runs_end_uniformly_random() {
    // At beta = 0 every proposal is accepted, so one typewriter chain only
    // visits a configuration and its mirror image. Uniformity is a property
    // of the ensemble of seeded runs.
    let inst = golden_glass();
    let exact = stats::mean(&common::all_energies(&inst));
    let finals: Vec<f64> = (0..4000u64)
        .map(|seed| ca_equilibrium_measure(&inst, 0.0, 1, 32, seed).unwrap().mean_energy)
        .collect();
    let se = stats::standard_error(&finals);
    assert!((stats::mean(&finals) - exact).abs() < 3.0 * se, "{} vs {exact} (se {se})", stats::mean(&finals));
}

#[test]
fn ca_equilibrium_single_spin() {
    let eq = ca_equilibrium_measure(&single_spin(1.0), 1.0, 100, 200_000, 3).unwrap();
    assert!((eq.mean_energy + 1f64.tanh()).abs() < 3.0 * eq.mean_stderr, "{eq:?}");
}

#[test]
fn ca_equilibrium_golden_beta_one() {
    let inst = golden_glass();
    let eq = ca_equilibrium_measure(&inst, 1.0, 1000, 200_000, 5).unwrap();
    let (_, mean, var) = THERMAL_222_S1[1];
    assert!((eq.mean_energy - mean).abs() < 3.0 * eq.mean_stderr, "{eq:?}");
    assert!((eq.variance - var).abs() < 3.0 * eq.variance_stderr, "{eq:?}");
}

#[test]
fn round_trip_of_a_periodic_instance() {
    let inst = generate_spin_glass(LatticeSpec::cubic(4, Boundary::Periodic).unwrap(), 7);
    assert_eq!((inst.num_spins(), inst.bonds().len()), (64, 192));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.txt");
    save_instance(&inst, &path).unwrap();
    assert_eq!(load_instance(&path).unwrap(), inst);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn library_energy_matches_reference_sum(seed in any::<u64>(), bits in any::<u32>(), periodic in any::<bool>()) {
        let lat = if periodic {
            LatticeSpec::cubic(3, Boundary::Periodic).unwrap()
        } else {
            LatticeSpec::new([3, 2, 4], Boundary::Open).unwrap()
        };
        let inst = generate_spin_glass(lat, seed);
        let n = inst.num_spins();
        let spins: Vec<i8> = (0..n).map(|i| if (bits as u64 * 2654435761 >> (i % 40)) & 1 == 1 { 1 } else { -1 }).collect();
        let lib = inst.energy(&SpinConfiguration::new(spins.clone()).unwrap()).unwrap();
        prop_assert!((lib - common::energy(&inst, &spins)).abs() < 1e-12);
        let flipped: Vec<i8> = spins.iter().map(|s| -s).collect();
        prop_assert!((lib - common::energy(&inst, &flipped)).abs() < 1e-12);
    }

    #[test]
    fn transfer_matches_enumeration(seed in 0u64..1000, tall in any::<bool>()) {
        let dims = if tall { [2, 3, 4] } else { [3, 2, 3] };
        let inst = generate_spin_glass(LatticeSpec::new(dims, Boundary::Open).unwrap(), seed);
        let (e0, _) = common::ground_state(&inst);
        prop_assert!((transfer_ground_state(&inst).unwrap().energy - e0).abs() < 1e-9);
    }
}
