//! Benchmark programs and deterministic request streams: blocked matrix
//! multiplication, longest-prefix-match routing, and a batched echo
//! pipeline, each with an independent correctness oracle.

pub mod lpm;
pub mod mmul;
pub mod pipeline;
pub mod stream;

pub use lpm::{build_lpm, ipv4, lpm_oracle, synthetic_table, LpmError, Rule, LPM_FN};
pub use mmul::{build_mmul, build_mmul_f64, mmul_inputs, naive_matmul, naive_matmul_f64, MMUL_FN};
pub use pipeline::{
    build_batch_pipeline, BATCH_CANDIDATES, ITEMS_PER_CALL, PIPELINE_FN, STAGE_FIXED_COST,
};
pub use stream::{gen_stream, zipf_mass, Distribution, PhaseSpec, Request, RequestStream};
