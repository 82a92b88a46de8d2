pub mod blocks;
pub mod channel;
pub mod error;
pub mod protocol;
pub mod reductions;
pub mod sdp;
pub mod tensor;
pub mod transforms;
mod unionfind;
pub mod zoo;

pub use error::{Error, Result};
