//! Reliability-factor resource selection for computational grids.
//!
//! Nodes report self-protection capability (SPC) scores; users report feedback that
//! aggregates into a reputation weightage (RW). The reliability factor
//! `RF = (SPC + RW) / 2` ranks nodes, and the Grid Organization Manager ([`gom::Gom`])
//! dispatches each job to the top-ranked node.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the scalar for the common cases.

pub mod error;
pub mod gom;
pub mod io;
pub mod model;
pub mod replication;
pub mod scalar;
pub mod scoring;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Score64 = model::Score<f64>;
pub type SecurityProfile64 = model::SecurityProfile<f64>;
pub type WeightTable64 = model::WeightTable<f64>;
pub type FeedbackVector64 = model::FeedbackVector<f64>;
pub type NodeRecord64 = model::NodeRecord<f64>;
pub type JobSpec64 = model::JobSpec<f64>;
pub type JobOutcome64 = model::JobOutcome<f64>;
pub type ExperimentResult64 = model::ExperimentResult<f64>;
pub type Gom64 = gom::Gom<f64>;
pub type SimConfig64 = simulator::SimConfig<f64>;
pub type NodeFixture64 = io::NodeFixture<f64>;

pub type Score32 = model::Score<f32>;
pub type SecurityProfile32 = model::SecurityProfile<f32>;
pub type FeedbackVector32 = model::FeedbackVector<f32>;
pub type Gom32 = gom::Gom<f32>;
pub type SimConfig32 = simulator::SimConfig<f32>;
