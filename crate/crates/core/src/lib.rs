pub mod checkpoint;
pub mod ed;
pub mod error;
pub mod hull;
pub mod linalg;
pub mod models;
pub mod mps;
pub mod pauli;
pub mod scan;
pub mod tebd;
pub mod verify;

pub use error::{Error, Result};
pub use models::{Boundary, FieldMode, ModelBundle, ModelParams};
pub use pauli::{OperatorSum, Pauli, PauliString};
