//! Density-matrix simulation of Shor period finding with a single recycled
//! control qubit, tracking logarithmic negativity and mixedness per stage.

pub mod circuit;
pub mod densemat;
pub mod entanglement;
pub mod error;
pub mod experiments;
pub mod noise;
pub mod numtheory;
pub mod random;

pub use circuit::{build_instance, InitialStateKind, ShorInstance};
pub use densemat::{ComplexMatrix, DensityMatrix};
pub use entanglement::{average_log_negativity, log_negativity, Bipartition};
pub use error::{Error, Result};
pub use noise::{NoiseConfig, NoiseKind};
