pub mod bigjson;
pub mod error;
pub mod families;
pub mod qarith;
pub mod ore;
pub mod pidegree;
pub mod removal;
pub mod sample;
pub mod scalars;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
