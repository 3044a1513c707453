//! Stochastic sampling of Lindblad steady states with signed complex walkers.
//!
//! The density matrix is expanded on basis operators `|i><j|` built from
//! z-basis spin configurations. A population of integer real/imaginary
//! walkers is propagated with a first-order Euler step of the shifted
//! Liouvillian, and steady-state observables are read off as ratio
//! estimators once the shift has settled at zero.
//!
//! The math is generic over the scalar type (`f32` or `f64`) through
//! [`Real`]; the `*64` aliases below are what most callers want.

pub mod engine;
pub mod error;
pub mod estimators;
pub mod lattice;
pub mod liouvillian;
pub mod oracle;
pub mod samplers;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub use error::{Error, Result};
pub use num_complex::Complex;

/// Floating point scalar the solver can run on.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for literals.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C32 = Complex<f32>;
pub type C64 = Complex<f64>;

pub type ModelParams64 = lattice::ModelParams<f64>;
pub type XyzModel64 = lattice::XyzModel<f64>;
pub type Connection64 = liouvillian::Connection<f64>;
pub type Importance64 = liouvillian::ImportanceScheme<f64>;
pub type EngineParams64 = engine::EngineParams<f64>;
pub type PopulationTable64 = engine::PopulationTable<f64>;
pub type RunOutput64 = engine::RunOutput<f64>;
pub type DenseLiouvillian64 = oracle::DenseLiouvillian<f64>;
pub type SteadyState64 = oracle::SteadyState<f64>;
pub type SusceptibilityResult64 = estimators::SusceptibilityResult<f64>;

pub use engine::{EngineParams, PopulationTable, RunOutput, SimRecord, Simulation, WalkerCell};
pub use lattice::{build_lattice, Lattice, ModelParams, SpinConfig, XyzModel};
pub use liouvillian::{ConfigPair, Connection, ImportanceScheme};
pub use estimators::observable::{Axis, Observable};
