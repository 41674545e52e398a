//! Verification, benchmarking and conversion tools around `lowbit`.

pub mod bench;
pub mod oracle;
pub mod shapes;
pub mod stats;
pub mod verify;
