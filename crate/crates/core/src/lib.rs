//! Thermodynamic formalism on one-sided subshifts of finite type: pressure
//! and its estimators, the pressure spectrum of invariant measures, and the
//! construction of compact invariant subsystems whose pressure approximates
//! any value between `P*(φ)` and `P(φ)`.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common instantiations.

pub mod cli;
pub mod conditions;
pub mod construct;
pub mod density;
pub mod error;
pub mod gluing;
pub mod graph;
pub mod lambda;
pub mod measures;
pub mod report;
pub mod scalar;
pub mod segments;
pub mod symbolic;
pub mod thermo;

pub use conditions::{check_ct_conditions, Condition, ConditionReport, Status};
pub use construct::{construct_intermediate, select_e_set, ConstructConfig, Construction, CtResolutions};
pub use density::{density_experiment, DensityReport, DensityRow};
pub use error::{Error, Result};
pub use gluing::{check_gluing, GluingCertificate, GluingSampling};
pub use graph::WeightedDigraph;
pub use lambda::{build_lambda, verify_counting_bound, CountingMethod, CountingReport, LambdaParams, LambdaSystem, WordList};
pub use measures::{spectrum_sample, MarkovMeasure, PeriodicOrbitMeasure, SpectrumConfig, SpectrumSample};
pub use scalar::Scalar;
pub use segments::{restrict_gm, CTDecomposition, DecompositionConfig, SegmentClass};
pub use symbolic::{Resolution, ShiftSystem, Word};
pub use thermo::{
    bowen_bound, expansivity_report, partition_function, pressure_enumerate, pressure_oracle, pstar, Potential,
    PressureReport,
};

pub type Potential64 = Potential<f64>;
pub type Potential32 = Potential<f32>;
pub type PressureReport64 = PressureReport<f64>;
pub type PressureReport32 = PressureReport<f32>;
pub type MarkovMeasure64 = MarkovMeasure<f64>;
pub type MarkovMeasure32 = MarkovMeasure<f32>;
pub type LambdaSystem64 = LambdaSystem<f64>;
pub type Construction64 = Construction<f64>;
pub type Digraph64 = WeightedDigraph<f64>;
pub type Digraph32 = WeightedDigraph<f32>;
