//! Simulation engine for Leggett-Garg inequality tests on a three-level
//! system with one auxiliary level.
//!
//! The crate covers the full pipeline of such an experiment:
//!
//! - [`linalg`]: dense complex matrices, Hermitian eigensolver, and the exact
//!   matrix exponential `exp(-i s H)` for small dimensions.
//! - [`dynamics`]: the precession Hamiltonian `H = Omega * Jx` and the
//!   three-moment measurement grid.
//! - [`measurement`]: the dichotomous observable, the Lueders and von Neumann
//!   state-update rules, exact density-matrix correlators, and the closed-form
//!   K3 curves.
//! - [`pulse`]: compilation of a 3x3 evolution unitary into two-level laser
//!   rotations on the four-level system (qutrit plus auxiliary), restricted to
//!   the physically drivable couplings.
//! - [`shots`]: Monte Carlo shot-by-shot emulation of the experiment with a
//!   parametric noise model, joint tallies, and violation statistics.

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod pulse;
pub mod shots;

pub use error::{Error, Result};

pub use num_complex::Complex64;

pub use dynamics::{grid_operators, GridOperators, PrecessionModel, TimeGrid};
pub use linalg::{
    eigh, expm_hermitian, jx, AngularMomentumOp, ComplexMatrix, DensityOperator, HermitianEigen,
};
pub use measurement::{
    correlator, k3_analytic, k3_exact, measure_branch, CorrelatorResult, DichotomousObservable,
    UpdateRule,
};
pub use pulse::{
    compile, compile_epsilon, embed4, legalize, parse_pulse_file, precession_unitary,
    product_of_pulses, pulse_from_block, reconstruct, rotation_block, target_checksum,
    two_level_decompose, write_pulse_file, CouplingGraph, LevelMap, PulseFile, PulseSequence,
    RotationPulse, TwoLevelFactor, DEFAULT_RABI_RAD_PER_S,
};
pub use shots::{
    estimate, estimate_k3, exact_sweep, run_pair, run_sweep, sigma_violation, ExperimentConfig,
    JointTally, MeasurementPair, NoiseModel, SweepPoint, SweepResult, DEFAULT_SHOTS,
};

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// Structural invariants: hermiticity, unitarity, trace, projector algebra.
    pub const STRUCTURAL: f64 = 1e-12;
    /// Identities built from several composed operations (semigroup laws,
    /// pulse-sequence reconstruction).
    pub const COMPOSED: f64 = 1e-10;
    /// Largest imaginary residue tolerated before a correlator is rejected.
    pub const IMAG_RESIDUE: f64 = 1e-8;
}
