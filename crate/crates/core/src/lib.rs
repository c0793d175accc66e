pub mod telemetry;
pub mod wire;
pub mod segmentation;
pub mod assessment;
pub mod reference;
pub mod simulator;
pub mod config;
