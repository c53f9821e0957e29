//! Cycle-approximate model of a streaming GEMM accelerator.

pub mod analytic;
pub mod config;
pub mod dtype;
pub mod engine;
pub mod error;
pub mod gemm;
pub mod link;
pub mod memory;
pub mod report;
pub mod system;
pub mod systolic;
pub mod time;
pub mod translation;
pub mod workload;

pub use dtype::DataType;
pub use error::{Error, Result};
pub use time::Ps;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tiles.md")]
    mod tiles {}
    #[doc = include_str!("../../../book/src/systolic.md")]
    mod systolic {}
    #[doc = include_str!("../../../book/src/link.md")]
    mod link {}
    #[doc = include_str!("../../../book/src/translation.md")]
    mod translation {}
    #[doc = include_str!("../../../book/src/memory.md")]
    mod memory {}
    #[doc = include_str!("../../../book/src/engine.md")]
    mod engine {}
    #[doc = include_str!("../../../book/src/workloads.md")]
    mod workloads {}
}
