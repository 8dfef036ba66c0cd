//! Deterministic Earth-observation agent environment and evaluation harness.
//!
//! The crate is organized around an indexed multimodal data lake
//! ([`datalake`]), a pixel-space geometry engine ([`raster`]), spectral-index
//! computation ([`spectral`]), a 35-tool action space ([`toolkit`]), a
//! Gymnasium-style episode state machine ([`episode`]), answer judging
//! ([`judge`]), trajectory metrics ([`metrics`]), and the service/CLI plumbing
//! that ties them together ([`harness`]).

pub mod datalake;
pub mod episode;
pub mod harness;
pub mod judge;
pub mod metrics;
pub mod raster;
pub mod spectral;
pub mod toolkit;
