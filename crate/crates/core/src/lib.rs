//! Energy system graphs and the linear programs built from them.
//!
//! A system is written once as a graph of energy assets ([`EnergySystem`]).
//! [`build_model`] turns it into an [`LpInstance`] under one of four modelling
//! approaches, which differ in how many building blocks and flow variables
//! they use but describe the same optimisation problem.
//!
//! Everything is generic over the floating point type ([`Scalar`]); the
//! aliases below fix it to `f64`, with `f32` variants where a smaller type is
//! useful for size-only work.

pub mod casegen;
pub mod formulation;
pub mod io;
pub mod lp;
pub mod model;
pub mod mps;
pub mod scalar;

pub use formulation::{build_model, lower_to_node_form, Approach, BuildError, Extensions};
pub use lp::{ModelSize, RowFamily, SolveStatus, VarRole};
pub use model::{AssetKind, Diagnostic, ModelError, PortDirection, Severity};
pub use scalar::Scalar;

pub type EnergySystem = model::EnergySystem<f64>;
pub type Asset = model::Asset<f64>;
pub type FlowArc = model::FlowArc<f64>;
pub type HubAnnotation = model::HubAnnotation;
pub type LpInstance = lp::LpInstance<f64>;
pub type ConstraintRow = lp::ConstraintRow<f64>;
pub type VariableRef = lp::VariableRef<f64>;
pub type SolveResult = lp::SolveResult<f64>;

pub type EnergySystemF32 = model::EnergySystem<f32>;
pub type LpInstanceF32 = lp::LpInstance<f32>;
