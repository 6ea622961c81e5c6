//! Cost-aware sequential feature acquisition.
//!
//! A dense classifier is trained under random input missingness. At test
//! time each unobserved feature is scored by its class-accumulated
//! integrated-gradients attribution divided by its acquisition cost, and
//! the best affordable feature is acquired next.

pub mod acquisition;
pub mod attribution;
pub mod bench;
pub mod data;
mod error;
pub mod mlp;
pub mod model;

pub use error::{Error, Result};
