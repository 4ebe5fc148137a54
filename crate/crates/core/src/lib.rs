//! Gaussian quantum battery charged by a coherent squeezing drive while
//! coupled to a squeezed thermal bath.
//!
//! * [`gaussian`]: covariance-matrix states, symplectic spectra, channels.
//! * [`lindblad`]: drift/diffusion generators, stability, steady states and
//!   time evolution.
//! * [`thermo`]: energy, work, heat, entropy, free energy and efficiency.
//! * [`speed`]: Gaussian fidelities, Bures distance, speed-limit based
//!   charging time and power.

// `!(x > 0.0)` is the idiom used throughout to reject NaN alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod lindblad;
pub mod speed;
pub mod thermo;

pub use error::{Error, Result};
pub use gaussian::{
    apply_symplectic, check_physicality, euler_charged_cov, symplectic_eigenvalues, symplectic_form,
    thermal_occupation, thermal_state, ChannelSpec, GaussianState, SymplecticForm, SymplecticSpectrum, TOL_PHYS,
};
pub use lindblad::{
    bona_fide_check, closed_energy_analytic, drift_diffusion, evolve, evolve_charging, hamiltonian_matrix,
    jump_vectors, stability_check, steady_state, BathSpec, DriftDiffusion, DriveSpec, LindbladSpec, Propagator,
    StabilityReport, Trajectory,
};
pub use speed::{
    bures_ds, charging_power, fidelity_multimode, fidelity_single_mode, instantaneous_speed, integral_velocity,
    BuresDistance, FidelityBreakdown, SpeedFormula, SpeedOptions, SpeedReport,
};
pub use thermo::{
    closed_delta_e, delta_e, efficiency, free_energy_change, internal_energy, von_neumann_entropy, work_heat,
    TemperatureConvention, ThermoReport,
};
