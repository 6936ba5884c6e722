//! Contraction-based certificates of spatial homogeneity for
//! reaction-diffusion systems and diffusively coupled networks.
//!
//! The pipeline: bound the reaction Jacobian by a constant-matrix
//! [`Envelope`], turn the envelope into linear matrix inequalities
//! ([`lmi`]), decide them numerically ([`sdpfeas`]) or in closed form
//! ([`analytic`]), obtain `λ₂` from the domain or graph ([`spectral`]),
//! and check the conclusion by simulation ([`dynamics`]).

pub mod error;
pub mod numerics;
pub mod envelope;
pub mod lmi;
pub mod sdpfeas;
pub mod analytic;
pub mod spectral;
pub mod dynamics;

pub use error::{Error, Result};
pub use numerics::{Mat, SymMat};
pub use envelope::{BoxTerm, Envelope, Grouping, ReactionModel, StateDomain};
pub use lmi::{Certificate, CertStructure, LmiProblem, Structure};
pub use sdpfeas::{FeasibilityResult, SolveOptions, Status, ThresholdResult};
pub use analytic::CyclicSpec;
pub use spectral::{DomainSpec, Graph};
pub use dynamics::{PdeGrid, SimOptions, Stepper, Trace};
