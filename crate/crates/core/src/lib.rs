pub mod diff;
pub mod error;
pub mod field;
pub mod freeze_gauge;
pub mod interp;
pub mod models;
pub mod point_transform;
pub mod quadrature;
pub mod susy;
pub mod tdse;

pub use error::{Error, Result};
pub use field::{ComplexField, Field, Grid, Jet, RealField, Sample};
