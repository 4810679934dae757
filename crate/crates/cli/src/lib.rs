//! Pipeline orchestration, reporting and benchmarks behind the `boxopt`
//! command.

pub mod bench;
pub mod config;
pub mod pipeline;
pub mod report;
