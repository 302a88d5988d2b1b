pub mod analysis;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod liouvillian;
pub mod model;
pub mod optimize;
pub mod par;
pub mod quantum;

pub use error::{Error, Result};
