//! Blocked matrix multiplication: the cache-blocking microbenchmark whose
//! block size `s` is the specializable knob. Six nested loops: three over
//! blocks, three over elements inside a block (the intra loops have constant
//! bounds once `s` is pinned, making them unrollable).
//!
//! `c` accumulates: callers pass a zero-filled output buffer.

use crate::ir::{parse_program, Program};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const MMUL_FN: &str = "matmul";

const SOURCE: &str = "\
(func matmul ((a arr-i64) (b arr-i64) (c arr-i64) (n i64) (s i64))
  (locals (i i64) (j i64) (k i64) (ra i64) (rb i64) (va i64))
  (for bi 0 n s
    (for bj 0 n s
      (for bk 0 n s
        (for di 0 s 1
          (set i (+ bi di))
          (set ra (* i n))
          (for dk 0 s 1
            (set k (+ bk dk))
            (set va (load a (+ ra k)))
            (set rb (* k n))
            (for dj 0 s 1
              (set j (+ bj dj))
              (store c (+ ra j)
                (+ (load c (+ ra j)) (* va (load b (+ rb j)))))))))))
  (return 0))
(specpoint matmul s workload)
";

const SOURCE_F64: &str = "\
(func matmul_f64 ((a arr-f64) (b arr-f64) (c arr-f64) (n i64) (s i64))
  (locals (i i64) (j i64) (k i64) (ra i64) (rb i64) (va f64))
  (for bi 0 n s
    (for bj 0 n s
      (for bk 0 n s
        (for di 0 s 1
          (set i (+ bi di))
          (set ra (* i n))
          (for dk 0 s 1
            (set k (+ bk dk))
            (set va (load a (+ ra k)))
            (set rb (* k n))
            (for dj 0 s 1
              (set j (+ bj dj))
              (store c (+ ra j)
                (+ (load c (+ ra j)) (* va (load b (+ rb j)))))))))))
  (return 0))
(specpoint matmul_f64 s workload)
";

/// The blocked matmul program over Int64 matrices (exact equality testing).
pub fn build_mmul() -> Program {
    parse_program(SOURCE).expect("matmul source is valid")
}

/// Float64 twin; compared against its oracle with relative tolerance, never
/// used for golden op counts.
pub fn build_mmul_f64() -> Program {
    parse_program(SOURCE_F64).expect("matmul_f64 source is valid")
}

/// Deterministic input matrices for dimension `n`, seeded per `(seed, n)`.
pub fn mmul_inputs(seed: u64, n: usize) -> (Vec<i64>, Vec<i64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9));
    let a = (0..n * n).map(|_| rng.gen_range(-100..=100)).collect();
    let b = (0..n * n).map(|_| rng.gen_range(-100..=100)).collect();
    (a, b)
}

/// Independent oracle: the naive triple loop, accumulating in ascending `k`
/// like the blocked kernel.
pub fn naive_matmul(a: &[i64], b: &[i64], n: usize) -> Vec<i64> {
    let mut c = vec![0i64; n * n];
    for i in 0..n {
        for k in 0..n {
            let va = a[i * n + k];
            for j in 0..n {
                c[i * n + j] =
                    c[i * n + j].wrapping_add(va.wrapping_mul(b[k * n + j]));
            }
        }
    }
    c
}

pub fn naive_matmul_f64(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0f64; n * n];
    for i in 0..n {
        for k in 0..n {
            let va = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += va * b[k * n + j];
            }
        }
    }
    c
}
