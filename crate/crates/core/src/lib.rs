//! Phase-lagged Kuramoto networks next to their complex-valued linear counterpart.
//!
//! The nonlinear model `θ̇_i = ω + ε Σ_j A_ij sin(θ_j − θ_i − φ)` is integrated with RK4
//! ([`dynamics`]); the complex system `ẋ = K x`, `K = ε e^{−iφ} A`, is solved in closed
//! form through the eigenpairs of `K` ([`spectral`], [`analytic`]). [`observables`]
//! compares the two, and [`scenario`] packages the named presets behind the CLI.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases below fix the
//! scalar to `f64` or `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod observables;
pub mod real;
pub mod scenario;
pub mod spectral;
pub mod topology;

pub use analytic::{
    analytic_trajectory, mode_coefficients, mode_contributions, reconstruct_phases, AnalyticSolution,
    ModeCoefficients, ModeTrace,
};
pub use dynamics::{
    init_random, init_twisted, instantaneous_frequency, simulate, Integration, PerturbationKind, PerturbationSpec,
    PhaseState, Provenance, Trajectory,
};
pub use error::{Error, Result};
pub use observables::{circular_error, lock_statistics, order_parameter, ComparisonReport, LockStatistics};
pub use real::Real;
pub use spectral::{assemble_system, cdt_spectrum, dense_spectrum, expm_apply, Spectrum, SpectrumSource, SystemMatrix};
pub use topology::{build_complete, build_power_law, build_ring, detect_circulant, CouplingMatrix};

pub type CouplingMatrix64 = CouplingMatrix<f64>;
pub type CouplingMatrix32 = CouplingMatrix<f32>;
pub type SystemMatrix64 = SystemMatrix<f64>;
pub type SystemMatrix32 = SystemMatrix<f32>;
pub type Spectrum64 = Spectrum<f64>;
pub type Spectrum32 = Spectrum<f32>;
pub type PhaseState64 = PhaseState<f64>;
pub type PhaseState32 = PhaseState<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type ModeCoefficients64 = ModeCoefficients<f64>;
pub type ModeCoefficients32 = ModeCoefficients<f32>;
pub type ModeTrace64 = ModeTrace<f64>;
pub type ModeTrace32 = ModeTrace<f32>;
