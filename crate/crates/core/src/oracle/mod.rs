//! Exact reference calculations for small instances.

mod enumerate;
mod quantum;
mod registry;
mod transfer;
mod trotter;

pub use enumerate::{
    brute_force_ground_state, brute_force_ground_state_bounded, enumerate_energies,
    exact_classical_thermal, exact_classical_thermal_bounded, BruteForceGroundState,
    ExactClassicalSummary, ThermalPoint, BRUTE_FORCE_BOUND, THERMAL_BOUND,
};
pub use quantum::{
    exact_general_curvature, exact_log_partition, exact_open_path_sigma_x,
    exact_quantum_expectations, exact_quantum_expectations_bounded, ExactQuantumSummary,
    GeneralPoint, QuantumPoint, QUANTUM_BOUND,
};
pub use registry::{import_ground_states, GroundStateRegistry};
pub use transfer::{
    exact_ground_energy, exact_ground_state, transfer_ground_state, ExactGroundState,
    GroundStateMethod, MAX_LAYER_WIDTH, TRANSFER_COST_BOUND,
};
pub use trotter::trotter_sigma_x;
