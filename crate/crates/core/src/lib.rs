//! Design-space exploration for 3D-stacked systolic-array accelerators.
//!
//! - [`model`]: closed-form fold latency for planar and stacked arrays.
//! - [`simulator`]: cycle-level simulation of the same dataflows, used as an
//!   executable check on the model.
//! - [`optimizer`]: array-shape search under a MAC budget, and the tier /
//!   budget sweeps built on it.
//! - [`workloads`]: bundled GEMM layers, CSV ingestion, random workloads.
//! - [`costmodel`]: silicon area of planar, TSV- and MIV-stacked arrays.

pub mod costmodel;
pub mod model;
pub mod optimizer;
pub mod simulator;
pub mod workloads;

pub use model::{
    latency_2d, latency_3d, latency_scaleout, reduction_optimal_tiers, speedup, ArrayShape,
    LatencyEstimate, ModelError, SplitDim, Workload,
};
pub use simulator::{simulate, utilization, Dataflow, Matrix, SimConfig, SimError, SimResult};
pub use optimizer::{Budget, DesignPoint, OptimizeError};
pub use workloads::{WorkloadError, WorkloadSet};
pub use costmodel::{CostError, LinkKind, TechParams};
