pub mod corrsets;
pub mod detect;
pub mod error;
pub mod mat3;
pub mod oracle;
pub mod pauli;
pub mod settings;

pub use error::{Error, Result};
pub use settings::MeasurementSettings;
