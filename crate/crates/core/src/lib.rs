//! Single-qubit quantum annealing with weakly measured Leggett-Garg functions.
//!
//! The crate simulates the linear sweep `H(s) = (1−s)(Γx/2)σx + s(Γz/2)σz`
//! under an ohmic Lindblad bath, measures σz weakly (Gaussian pointer of
//! variance `D`) or projectively at chosen times, and assembles two-time
//! correlators into the third-order Leggett-Garg functions `K₃ᵃ, K₃ᵇ, K₃ᶜ`.
//! A stochastic Landau-Lifshitz-Gilbert spin on the same schedule serves as
//! the classical comparator.

pub mod algebra;
pub mod bath;
pub mod classical;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod integrate;
pub mod measure;
pub mod model;

pub use algebra::{ComplexMatrix2, DensityMatrix, C64};
pub use bath::BathParams;
pub use error::{Error, Result};
pub use integrate::{IntegratorConfig, MasterEquation};
pub use measure::MeasurementParams;
pub use model::{AnnealSchedule, Drive};
