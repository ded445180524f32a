//! hotpin: a runtime specialization toolbox.
//!
//! Handler code is written in a small kernel IR with developer-annotated
//! specialization points. At run time the toolbox pins points to constants,
//! rebuilds guarded, optimized variants of the affected functions, measures
//! end-to-end throughput per configuration, and searches the configuration
//! space automatically, restarting when the workload shifts.
//!
//! Module map:
//! - [`ir`]: the kernel IR (parse, validate, print).
//! - [`specializer`]: constant pinning, optimization passes, guards, hot maps.
//! - [`engine`]: deterministic reference evaluator with exact op accounting,
//!   variant dispatch, guard fallback, cleanup callbacks.
//! - [`telemetry`]: per-point value profiles and windowed metrics.
//! - [`explorer`]: search over specialization configurations.
//! - [`runtime`]: the hook facade binding everything together.
//! - [`workloads`]: benchmark programs and deterministic request streams.
//! - [`scenario`]: the batch driver producing CSV traces.

pub mod engine;
pub mod explorer;
pub mod ir;
pub mod report;
pub mod runtime;
pub mod scenario;
pub mod specializer;
pub mod telemetry;
pub mod workloads;
