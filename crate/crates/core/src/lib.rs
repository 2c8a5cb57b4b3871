pub mod channel;
pub mod circuit;
pub mod dense;
pub mod error;
pub mod experiment;
pub mod lattice;
pub mod logc;
pub mod metrics;
pub mod mps;
pub mod mwpm;
pub mod oracle;
pub mod sampler;
pub mod threshold;

pub use error::{Error, Result};
