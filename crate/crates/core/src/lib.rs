//! Elementary components of open quantum states.
//!
//! The harmonic translation-invariant Lindblad generator keeps every
//! subspace `exp(i q x) chi(x_d)` closed, so a mixed state can be evolved
//! one wave vector at a time with a closed-form propagator
//! ([`propagator`]). [`integrator`] is an independent method-of-lines
//! solver of the same master equation used to validate it, [`states`]
//! assembles generic states from components, [`rotations`] provides the
//! tensor-operator basis of rotationally invariant dynamics and
//! [`symmetry`] measures how open dynamics reduces two-sided translations
//! to the diagonal subgroup.

pub mod domain;
pub mod error;
pub mod integrator;
pub mod profile;
pub mod propagator;
pub mod rotations;
pub mod states;
pub mod symmetry;

pub use domain::{
    classify_component, decoherence_coefficient, drift_velocity, drift_wavevector, validate_params,
    ComponentClass, DensityOperatorGrid, ElementaryComponent, Grid, ParamsConfig, PhysicalParams, WaveVector,
};
pub use error::{Error, Result};
pub use integrator::{Boundary, IntegratorConfig, Stencil};
pub use profile::{GaussianPoly, Profile, SampledProfile};
pub use propagator::{CoefficientFormula, PropagatorCoefficients};
pub use rotations::{AngularMomentumLabel, EulerAngles, TensorOperatorBasis};
pub use states::SpectralState;
pub use symmetry::{SymmetryClass, SymmetryReport, TwoSidedShift};
