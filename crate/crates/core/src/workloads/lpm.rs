//! Longest-prefix-match routing: a pure lookup function generated from a
//! rule table as a linear scan ordered by descending prefix length. Prefix
//! masking is expressed as division by a power of two (the IR has no shift
//! operator), keeping the function pure and hot-map eligible.

use crate::ir::{parse_program, Program};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write;
use thiserror::Error;

pub const LPM_FN: &str = "lpm";

/// One routing rule: match the top `len` bits of a 32-bit address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rule {
    pub prefix: u32,
    pub len: u8,
    pub route: i64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpmError {
    #[error("invalid prefix {prefix:#010x}/{len}")]
    InvalidPrefix { prefix: u32, len: u8 },
    #[error("duplicate prefix {prefix:#010x}/{len}")]
    DuplicatePrefix { prefix: u32, len: u8 },
}

fn mask(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - len as u32)
    }
}

/// Generate the scan program for a rule table. Rules are ordered by
/// descending prefix length (ties by ascending prefix) so the first match is
/// the longest; unmatched addresses take route 0.
pub fn build_lpm(rules: &[Rule]) -> Result<Program, LpmError> {
    let mut sorted = Vec::with_capacity(rules.len());
    for r in rules {
        if r.len > 32 || (r.prefix & !mask(r.len)) != 0 {
            return Err(LpmError::InvalidPrefix {
                prefix: r.prefix,
                len: r.len,
            });
        }
        sorted.push(*r);
    }
    sorted.sort_by(|a, b| b.len.cmp(&a.len).then(a.prefix.cmp(&b.prefix)));
    for pair in sorted.windows(2) {
        if pair[0].len == pair[1].len && pair[0].prefix == pair[1].prefix {
            return Err(LpmError::DuplicatePrefix {
                prefix: pair[0].prefix,
                len: pair[0].len,
            });
        }
    }

    let mut src = String::from("(func lpm ((addr i64))\n");
    for r in &sorted {
        let divisor = 1u64 << (32 - r.len as u32);
        let shifted = (r.prefix as u64) >> (32 - r.len as u32);
        writeln!(
            src,
            "  (if (== (/ addr {divisor}) {shifted}) (then (return {})))",
            r.route
        )
        .unwrap();
    }
    src.push_str("  (return 0))\n(specpoint lpm addr workload)\n");
    Ok(parse_program(&src).expect("generated lpm source is valid"))
}

/// Reference oracle: longest matching rule wins; route 0 on no match.
pub fn lpm_oracle(rules: &[Rule], addr: u32) -> i64 {
    rules
        .iter()
        .filter(|r| (addr & mask(r.len)) == r.prefix)
        .max_by_key(|r| r.len)
        .map(|r| r.route)
        .unwrap_or(0)
}

pub fn ipv4(a: u8, b: u8, c: u8, d: u8) -> u32 {
    u32::from_be_bytes([a, b, c, d])
}

/// A deterministic synthetic table: `count` distinct /24 prefixes with
/// routes 1..=count, plus one address inside each prefix. The address list
/// comes back shuffled so Zipf rank is independent of scan position.
pub fn synthetic_table(count: usize, seed: u64) -> (Vec<Rule>, Vec<i64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prefixes = std::collections::BTreeSet::new();
    while prefixes.len() < count {
        let p24: u32 = rng.gen_range(0x0100_0000u32..0xdf00_0000u32) & 0xffff_ff00;
        prefixes.insert(p24);
    }
    let rules: Vec<Rule> = prefixes
        .iter()
        .enumerate()
        .map(|(i, &prefix)| Rule {
            prefix,
            len: 24,
            route: (i + 1) as i64,
        })
        .collect();
    let mut addresses: Vec<i64> = rules
        .iter()
        .map(|r| (r.prefix | rng.gen_range(1u32..255)) as i64)
        .collect();
    addresses.shuffle(&mut rng);
    (rules, addresses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ArgValue, Engine};
    use crate::ir::{validate, Value};

    fn overlap_rules() -> Vec<Rule> {
        vec![
            Rule {
                prefix: ipv4(10, 0, 0, 0),
                len: 8,
                route: 1,
            },
            Rule {
                prefix: ipv4(10, 1, 0, 0),
                len: 16,
                route: 2,
            },
        ]
    }

    #[test]
    fn longest_prefix_wins() {
        let rules = overlap_rules();
        let p = build_lpm(&rules).unwrap();
        let mut e = Engine::new(&p);
        let addr = ipv4(10, 1, 2, 3) as i64;
        let r = e.call(LPM_FN, &[ArgValue::Int(addr)], &[]).unwrap();
        assert_eq!(r.value, Value::Int(2));
        assert_eq!(lpm_oracle(&rules, addr as u32), 2);
    }

    #[test]
    fn unmatched_address_takes_default_route() {
        let p = build_lpm(&overlap_rules()).unwrap();
        let mut e = Engine::new(&p);
        let addr = ipv4(192, 168, 0, 1) as i64;
        let r = e.call(LPM_FN, &[ArgValue::Int(addr)], &[]).unwrap();
        assert_eq!(r.value, Value::Int(0));
    }

    #[test]
    fn generated_function_is_pure_and_valid() {
        let mut p = build_lpm(&overlap_rules()).unwrap();
        assert!(validate(&mut p).is_empty());
        assert!(p.function(LPM_FN).unwrap().pure);
    }

    #[test]
    fn rejects_bad_and_duplicate_prefixes() {
        let bad = vec![Rule {
            prefix: ipv4(10, 0, 0, 1),
            len: 8,
            route: 1,
        }];
        assert!(matches!(
            build_lpm(&bad),
            Err(LpmError::InvalidPrefix { .. })
        ));
        let dup = vec![
            Rule {
                prefix: ipv4(10, 0, 0, 0),
                len: 8,
                route: 1,
            },
            Rule {
                prefix: ipv4(10, 0, 0, 0),
                len: 8,
                route: 2,
            },
        ];
        assert!(matches!(
            build_lpm(&dup),
            Err(LpmError::DuplicatePrefix { .. })
        ));
    }

    #[test]
    fn scan_agrees_with_oracle_on_synthetic_table() {
        let (rules, addresses) = synthetic_table(64, 11);
        let p = build_lpm(&rules).unwrap();
        let mut e = Engine::new(&p);
        for addr in addresses {
            let got = e.call(LPM_FN, &[ArgValue::Int(addr)], &[]).unwrap().value;
            assert_eq!(got, Value::Int(lpm_oracle(&rules, addr as u32)));
        }
    }

    #[test]
    fn zero_length_default_rule_matches_everything() {
        let rules = vec![
            Rule {
                prefix: 0,
                len: 0,
                route: 99,
            },
            Rule {
                prefix: ipv4(10, 0, 0, 0),
                len: 8,
                route: 1,
            },
        ];
        let p = build_lpm(&rules).unwrap();
        let mut e = Engine::new(&p);
        let r = e
            .call(LPM_FN, &[ArgValue::Int(ipv4(8, 8, 8, 8) as i64)], &[])
            .unwrap();
        assert_eq!(r.value, Value::Int(99));
        let r = e
            .call(LPM_FN, &[ArgValue::Int(ipv4(10, 2, 3, 4) as i64)], &[])
            .unwrap();
        assert_eq!(r.value, Value::Int(1));
    }
}
