//! Genetic and photosynthetic optimization engines, with benchmark problems
//! from function optimization, structural design, finite-element inversion
//! and inverse heat conduction.

pub mod cli;
pub mod encoding;
pub mod fem;
pub mod ga;
pub mod heat;
pub mod pa;
pub mod parallel;
pub mod problems;
pub mod rng;
pub mod trace;

pub use encoding::{Chromosome, FieldSpec, GenomeLayout};
pub use parallel::Execution;
pub use problems::{Problem, Sense};
pub use rng::RandomSource;
pub use trace::RunTrace;
