//! Deterministic request streams: a phase schedule of parameter
//! distributions driven by a seeded RNG. Identical seeds produce identical
//! streams with exact phase boundaries.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How one request parameter is drawn within a phase.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Constant(i64),
    UniformChoice(Vec<i64>),
    /// Power-law over a key set: `keys[0]` is rank 1 (hottest).
    Zipf { keys: Vec<i64>, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpec {
    pub calls: u64,
    pub params: Vec<(String, Distribution)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequestStream {
    pub seed: u64,
    pub phases: Vec<PhaseSpec>,
}

/// One request: named scalar parameters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Request {
    pub values: Vec<(String, i64)>,
}

impl Request {
    pub fn get(&self, name: &str) -> Option<i64> {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// Precomputed inverse-CDF sampler for a Zipf distribution.
#[derive(Debug, Clone)]
struct ZipfSampler {
    /// Cumulative mass per rank, ending at 1.0.
    cdf: Vec<f64>,
}

impl ZipfSampler {
    fn new(n: usize, exponent: f64) -> ZipfSampler {
        assert!(n > 0);
        let mut weights = Vec::with_capacity(n);
        let mut total = 0.0;
        for k in 1..=n {
            let w = (k as f64).powf(-exponent);
            total += w;
            weights.push(total);
        }
        for w in &mut weights {
            *w /= total;
        }
        ZipfSampler { cdf: weights }
    }

    fn sample(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u)
    }
}

/// Analytic probability of rank `k` (1-based) under Zipf(`exponent`) over
/// `n` keys.
pub fn zipf_mass(n: usize, exponent: f64, k: usize) -> f64 {
    let h: f64 = (1..=n).map(|i| (i as f64).powf(-exponent)).sum();
    (k as f64).powf(-exponent) / h
}

enum CompiledDist {
    Constant(i64),
    UniformChoice(Vec<i64>),
    Zipf { keys: Vec<i64>, sampler: ZipfSampler },
}

struct CompiledPhase {
    calls: u64,
    params: Vec<(String, CompiledDist)>,
}

/// Iterator over the stream's request vectors.
pub struct StreamIter {
    rng: ChaCha8Rng,
    phases: Vec<CompiledPhase>,
    phase_idx: usize,
    emitted_in_phase: u64,
}

/// Build the deterministic request iterator for a stream spec.
pub fn gen_stream(spec: &RequestStream) -> StreamIter {
    let phases = spec
        .phases
        .iter()
        .map(|p| CompiledPhase {
            calls: p.calls,
            params: p
                .params
                .iter()
                .map(|(name, dist)| {
                    let compiled = match dist {
                        Distribution::Constant(v) => CompiledDist::Constant(*v),
                        Distribution::UniformChoice(choices) => {
                            assert!(!choices.is_empty(), "uniform choice needs options");
                            CompiledDist::UniformChoice(choices.clone())
                        }
                        Distribution::Zipf { keys, exponent } => CompiledDist::Zipf {
                            keys: keys.clone(),
                            sampler: ZipfSampler::new(keys.len(), *exponent),
                        },
                    };
                    (name.clone(), compiled)
                })
                .collect(),
        })
        .collect();
    StreamIter {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        phases,
        phase_idx: 0,
        emitted_in_phase: 0,
    }
}

impl Iterator for StreamIter {
    type Item = Request;

    fn next(&mut self) -> Option<Request> {
        while self.phase_idx < self.phases.len()
            && self.emitted_in_phase >= self.phases[self.phase_idx].calls
        {
            self.phase_idx += 1;
            self.emitted_in_phase = 0;
        }
        if self.phase_idx >= self.phases.len() {
            return None;
        }
        let phase = &self.phases[self.phase_idx];
        let mut values = Vec::with_capacity(phase.params.len());
        for (name, dist) in &phase.params {
            let v = match dist {
                CompiledDist::Constant(v) => *v,
                CompiledDist::UniformChoice(choices) => {
                    choices[self.rng.gen_range(0..choices.len())]
                }
                CompiledDist::Zipf { keys, sampler } => {
                    let u: f64 = self.rng.gen();
                    keys[sampler.sample(u)]
                }
            };
            values.push((name.clone(), v));
        }
        self.emitted_in_phase += 1;
        Some(Request { values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_phase_repeats_the_vector() {
        let stream = RequestStream {
            seed: 1,
            phases: vec![PhaseSpec {
                calls: 1000,
                params: vec![("n".into(), Distribution::Constant(64))],
            }],
        };
        let reqs: Vec<Request> = gen_stream(&stream).collect();
        assert_eq!(reqs.len(), 1000);
        assert!(reqs.iter().all(|r| r.get("n") == Some(64)));
    }

    #[test]
    fn phase_switch_is_exact() {
        let stream = RequestStream {
            seed: 1,
            phases: vec![
                PhaseSpec {
                    calls: 500,
                    params: vec![("n".into(), Distribution::Constant(256))],
                },
                PhaseSpec {
                    calls: 500,
                    params: vec![("n".into(), Distribution::Constant(64))],
                },
            ],
        };
        let reqs: Vec<Request> = gen_stream(&stream).collect();
        assert_eq!(reqs.len(), 1000);
        assert_eq!(reqs[499].get("n"), Some(256));
        assert_eq!(reqs[500].get("n"), Some(64));
    }

    #[test]
    fn identical_seed_gives_identical_stream() {
        let stream = RequestStream {
            seed: 99,
            phases: vec![PhaseSpec {
                calls: 200,
                params: vec![(
                    "x".into(),
                    Distribution::UniformChoice(vec![1, 2, 3, 4]),
                )],
            }],
        };
        let a: Vec<Request> = gen_stream(&stream).collect();
        let b: Vec<Request> = gen_stream(&stream).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn zipf_top_rank_frequency_matches_analytic_mass() {
        let keys: Vec<i64> = (0..1000).map(|k| 10_000 + k).collect();
        let stream = RequestStream {
            seed: 7,
            phases: vec![PhaseSpec {
                calls: 100_000,
                params: vec![(
                    "addr".into(),
                    Distribution::Zipf {
                        keys: keys.clone(),
                        exponent: 1.2,
                    },
                )],
            }],
        };
        let hot = keys[0];
        let hits = gen_stream(&stream)
            .filter(|r| r.get("addr") == Some(hot))
            .count() as f64;
        let freq = hits / 100_000.0;
        let mass = zipf_mass(1000, 1.2, 1);
        assert!(
            (freq / mass - 1.0).abs() < 0.01,
            "freq {freq} vs analytic {mass}"
        );
    }
}
