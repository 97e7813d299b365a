pub mod features;
pub mod predict;
pub mod report;
pub mod simulate;
pub mod stats;
