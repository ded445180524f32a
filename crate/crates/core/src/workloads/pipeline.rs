//! A three-stage echo pipeline whose per-stage batch sizes are config
//! knobs. Each stage processes 32 items in batches of its own size: a fixed
//! cost per batch (amortized by larger batches) plus a per-item penalty that
//! grows with the batch size (buffering pressure). The opposing terms give
//! the ops/call landscape over {1,2,4,8,16,32}^3 a unique optimum, verified
//! by exhaustive sweep in the acceptance suite.

use crate::ir::{parse_program, Program};

pub const PIPELINE_FN: &str = "pipeline";
/// Items processed per call; every candidate batch size divides it.
pub const ITEMS_PER_CALL: i64 = 32;
/// Per-batch fixed cost (loop trip count) of each stage.
pub const STAGE_FIXED_COST: [i64; 3] = [20, 80, 5];
/// Candidate batch sizes for every stage.
pub const BATCH_CANDIDATES: [i64; 6] = [1, 2, 4, 8, 16, 32];

fn stage_source(stage: usize) -> String {
    let i = stage + 1;
    let fixed = STAGE_FIXED_COST[stage];
    format!(
        "  (set nb (/ 32 b{i}))
  (for t{i} 0 nb 1
    (for f{i} 0 {fixed} 1 (set acc (+ acc f{i})))
    (for i{i} 0 b{i} 1
      (set acc (+ acc x))
      (for w{i} 0 (* 1 b{i}) 1 (set acc (+ acc w{i})))))
"
    )
}

/// The pipeline program: echo `x` through three batched stages, folding the
/// busy work into a scratch cell so it stays observable.
pub fn build_batch_pipeline() -> Program {
    let mut src = String::from(
        "(func pipeline ((x i64) (b1 i64) (b2 i64) (b3 i64) (scratch arr-i64))
  (locals (acc i64) (nb i64))
  (set acc 0)
",
    );
    for stage in 0..3 {
        src.push_str(&stage_source(stage));
    }
    src.push_str(
        "  (store scratch 0 acc)
  (return x))
(specpoint pipeline b1 config)
(specpoint pipeline b2 config)
(specpoint pipeline b3 config)
",
    );
    parse_program(&src).expect("generated pipeline source is valid")
}
