//! Two-proton NMR spin dynamics with an induced non-linear collapse term.
//!
//! The crate evolves the four-amplitude spin state of two magnetically
//! inequivalent, j-coupled protons in the rotating frame, optionally with a
//! non-linear term that couples `|↑↑⟩` and `|↓↓⟩` through the complex
//! conjugate state, and analyses how the envelope of the transverse
//! magnetization tracks the entanglement beat.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the CLI and the
//! acceptance suite use.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod scalar;
pub mod spin;

pub use analysis::{
    correlate, detuning_profile, envelope, envelope_depression, envelope_depression_using, sample_average,
    upsilon_eigenbasis, AveragedSeries, Depression, DetuningProfile, EnvelopeSeries, UpsilonReport,
};
pub use dynamics::{
    evolve_inl, evolve_inl_partial, evolve_linear, evolve_linearized, self_consistency, ConsistencyOptions, ConsistencyReport, Evolver,
    IntegratorConfig, Method, Trajectory,
};
pub use error::{Error, Result};
pub use hamiltonian::{
    build_hamiltonian, eigensystem, entanglement_approx, entanglement_period, perturbed_eigenvalues,
    stern_gerlach_time, timing_condition, to_rotating_frame, EigenSystem, NonlinearSign, PhysicalParams,
    RotatingFrameParams,
};
pub use num_complex;
pub use scalar::Real;
pub use spin::{arg_det, entanglement, local_unitary, transverse_magnetization, ObservableSample, SpinState};

pub type SpinState64 = SpinState<f64>;
pub type SpinState32 = SpinState<f32>;
pub type RotatingFrameParams64 = RotatingFrameParams<f64>;
pub type RotatingFrameParams32 = RotatingFrameParams<f32>;
pub type PhysicalParams64 = PhysicalParams<f64>;
pub type IntegratorConfig64 = IntegratorConfig<f64>;
pub type IntegratorConfig32 = IntegratorConfig<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type EigenSystem64 = EigenSystem<f64>;
pub type DetuningProfile64 = DetuningProfile<f64>;
pub type EnvelopeSeries64 = EnvelopeSeries<f64>;
