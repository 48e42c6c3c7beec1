//! Cost-benefit analysis of data-intelligence workflows.
//!
//! Every stage of a workflow is an alphabet with an entropy. Each step
//! transforms one alphabet into another at some cost, reducing entropy and
//! possibly introducing distortion. The crate computes per-step and
//! whole-workflow cost-benefit measures and searches parameter spaces for
//! the configuration with the best ratio.

pub mod alphabet;
pub mod error;
pub mod metrics;
pub mod optimize;
pub mod reconstruction;
pub mod specio;
pub mod transform;
pub mod workflow;

pub use alphabet::{Alphabet, AlphabetModel, EntropyMode, Letter, Pmf};
pub use error::{Error, Result};
pub use metrics::{Cbr, StepMetrics};
pub use reconstruction::{Impression, Reconstruction, Smoothing};
pub use transform::{compose, CostKind, CostRecord, NodeKind, Transform, TransformKind};
pub use workflow::{
    Classification, CostMerge, EdgeDef, Interval, LevelInfo, MetricsReport, Node, OverallMetrics, VisLevel,
    WorkflowClass, WorkflowGraph,
};
