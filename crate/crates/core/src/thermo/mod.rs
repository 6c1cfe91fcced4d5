//! Potentials, partition functions and pressures.

pub mod block;
pub mod bowen;
pub mod potential;
pub mod pressure;
pub mod pstar;

pub use block::{BlockGraph, BlockIndex};
pub use bowen::{bowen_bound, expansivity_report, BowenBound, ExpansivityReport};
pub use potential::{Potential, PotentialFile};
pub use pressure::{
    partition_function, pressure_enumerate, pressure_oracle, ErrorBound, Method, PressureParams, PressureReport,
    SequencePoint, DEFAULT_WORD_BUDGET,
};
pub use pstar::{pstar, pstar_report, sup_birkhoff, sup_birkhoff_sequence, PStarReport};
