pub mod attitude_ref;
pub mod certify;
pub mod error;
pub mod inner_hybrid;
pub mod mathkit;
pub mod outer_mpc;
pub mod sim;
pub mod vehicle;

pub use error::{Error, Result};
