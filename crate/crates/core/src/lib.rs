pub mod error;
pub mod formula;
pub mod ingest;
pub mod jacquet;
pub mod kloosterman;
pub mod numberfield;
pub mod quadrature;
pub mod specialfun;
pub mod spectral;

pub use error::{Error, Result};
