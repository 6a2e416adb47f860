//! Spacelike capillary surfaces with free boundary on umbilical supports in
//! Lorentz-Minkowski space L^{n+1}.
//!
//! The crate is organised around the three-dimensional model (n = 2): compact
//! spacelike surfaces whose boundary sits on an umbilical support surface
//! (spacelike plane, hyperbolic plane, or pseudosphere), together with the
//! capillary energy `area + lambda * wetted area` and its first variation.
//!
//! Modules:
//! - [`lorentz`]: the Minkowski inner product, causal classification and
//!   boundary frames, dimension-generic.
//! - [`umbilic`]: analytic umbilical surfaces, the pseudosphere geodesic
//!   parametrisation and the waist projection.
//! - [`mesh`]: spacelike height-field meshes over planar discs and annuli,
//!   discrete curvature, area, volume and boundary frames.
//! - [`variational`]: capillary energy and the discrete first variations.
//! - [`flow`]: constrained gradient descent to stationary configurations,
//!   rotational CMC profiles and classification of converged states.
//! - [`hopf`]: conformal parametrisation of rotational surfaces and the
//!   quadratic differential diagnostics.
//! - [`theorems`]: sampled-curve checks for the covering/graph statements and
//!   one-sided position theorems.

pub mod flow;
pub mod hopf;
pub mod lorentz;
pub mod mesh;
pub mod numerics;
pub mod theorems;
pub mod umbilic;
pub mod variational;

pub use flow::{ClassKind, Classification, ConstraintMode, SolveOptions, Trace, TraceRow};
pub use hopf::{ConformalPatch, HopfField};
pub use lorentz::{BoundaryFrame, CausalCharacter, LorentzVector};
pub use mesh::{DomainSpec, SpacelikeGraph};
pub use theorems::{CoveringReport, OneSideVerdict, PlaneGraphReport, SampledCurve};
pub use umbilic::{Branch, SupportSurface};
pub use variational::{EnergyBreakdown, StationarityReport, VariationField};
