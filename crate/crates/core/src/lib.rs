pub mod error;
pub mod experiments;
pub mod group;
pub mod lattice;
pub mod numeric;
pub mod observables;
pub mod sampler;
pub mod sieve;

pub use error::{Error, Result};
