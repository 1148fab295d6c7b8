//! Hamiltonian mechanics for self-sustained and damped oscillators.
//!
//! Dissipative second-order systems (damped harmonic oscillators, Van der Pol,
//! general Liénard equations) admit no Hamiltonian on their own phase plane.
//! Doubling the system with an anti-damped auxiliary partner restores phase-volume
//! conservation and yields a genuine Hamiltonian for the combined four-dimensional
//! flow. This crate builds those Hamiltonians, integrates their canonical flows,
//! measures limit cycles numerically, and carries the canonical perturbation
//! expansion of the doubled Van der Pol system far enough to predict the
//! limit-cycle frequency and waveform analytically.
//!
//! Module map:
//! - [`models`]: the underlying ODE systems as explicit first-order vector fields.
//! - [`hamiltonians`]: every Hamiltonian for those systems, with analytic
//!   canonical vector fields and reduction checks back to the ODEs.
//! - [`integrate`]: adaptive Dormand–Prince 5(4) and fixed RK4 integration with
//!   dense output and event detection.
//! - [`analysis`]: numerical limit-cycle measurement and Hill/Floquet analysis
//!   of the auxiliary variable.
//! - [`perturb`]: exact trigonometric-polynomial algebra for the canonical
//!   perturbation pipeline: action-angle map, first-order generating function,
//!   second-order energy, frequency and waveform predictions.

pub mod analysis;
pub mod hamiltonians;
pub mod integrate;
pub mod models;
pub mod perturb;

pub use models::{PhaseState4, State2, SystemParams};
