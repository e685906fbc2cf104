pub mod alignment;
pub mod analysis;
pub mod error;
pub mod group;
pub mod index;
pub mod jaccard;
pub mod kernels;
pub mod io;
pub mod model;
pub mod synth;
mod parallel;

pub use error::{Error, Result};
