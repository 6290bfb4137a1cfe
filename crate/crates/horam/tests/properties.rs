//! Property tests for the cross-cutting invariants: every primitive's
//! output is a multiset permutation of its real input, sorting sorts,
//! compaction keeps marked blocks in front, and the tight bucket sizing is
//! tight on both sides.

use horam::block::Block;
use horam::obuf::OBuf;
use horam::oprims::{ocompact, ointersperse, oselect, oshuffle, osort};
use horam::probcalc::{any_bin_overflow_prob, tight_bucket_size, LogProb};
use horam::tape::RandTape;
use proptest::prelude::*;

fn blocks(keys: &[u32]) -> Vec<Block> {
    keys.iter().map(|&k| Block::real(k as i128 + 1, &(k as u64).to_le_bytes())).collect()
}

fn multiset(buf: &OBuf<Block>) -> Vec<i128> {
    let mut v: Vec<i128> = buf.items().iter().map(|b| b.key).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn osort_sorts_and_permutes(keys in prop::collection::vec(0u32..1_000_000, 0..200)) {
        let mut expect: Vec<i128> = keys.iter().map(|&k| k as i128 + 1).collect();
        let mut buf = OBuf::new("prop.sort", 0, blocks(&keys));
        osort(&mut buf, |b| b.key as u128);
        expect.sort();
        prop_assert_eq!(multiset(&buf), expect.clone());
        let got: Vec<i128> = buf.items().iter().map(|b| b.key).collect();
        prop_assert_eq!(got, expect);
    }

    #[test]
    fn oshuffle_permutes(keys in prop::collection::vec(0u32..1_000_000, 1..200), seed in 0u64..1_000) {
        let mut tape = RandTape::from_seed(seed);
        let mut buf = OBuf::new("prop.shuffle", 0, blocks(&keys));
        let before = multiset(&buf);
        oshuffle(&mut buf, &mut tape);
        prop_assert_eq!(multiset(&buf), before);
    }

    #[test]
    fn ocompact_prefix_invariant(keys in prop::collection::vec(0u32..1_000_000, 1..200)) {
        let mut buf = OBuf::new("prop.compact", 0, blocks(&keys));
        let before = multiset(&buf);
        let marked_count = keys.iter().filter(|k| *k % 2 == 0).count();
        ocompact(&mut buf, |b| (b.key - 1) % 2 == 0);
        prop_assert_eq!(multiset(&buf), before);
        for (i, b) in buf.items().iter().enumerate() {
            prop_assert_eq!(i < marked_count, (b.key - 1) % 2 == 0);
        }
    }

    #[test]
    fn ointersperse_unites(a in prop::collection::vec(0u32..1_000, 0..80),
                           b in prop::collection::vec(2_000u32..3_000, 0..80),
                           seed in 0u64..1_000) {
        let mut tape = RandTape::from_seed(seed);
        let ab = OBuf::new("prop.isp.a", 0, blocks(&a));
        let bb = OBuf::new("prop.isp.b", 0, blocks(&b));
        let out = ointersperse(ab, bb, &mut tape);
        let mut expect: Vec<i128> = a.iter().chain(b.iter()).map(|&k| k as i128 + 1).collect();
        expect.sort();
        prop_assert_eq!(multiset(&out), expect);
    }

    #[test]
    fn oselect_is_exact(cond: bool, x in 0u32..100, y in 0u32..100) {
        let a = Block::real(x as i128 + 1, &(x as u64).to_le_bytes());
        let b = Block::real(y as i128 + 1, &(y as u64).to_le_bytes());
        let out = oselect(cond, &a, &b);
        prop_assert_eq!(out, if cond { a } else { b });
    }

    #[test]
    fn bucket_sizing_is_two_sided_tight(n in 4u64..512, m in 1u64..16) {
        let delta = LogProb::pow2(-20);
        let ell = tight_bucket_size(n, m, delta);
        if ell < n {
            prop_assert!(any_bin_overflow_prob(n, m, ell).log2 <= -20.0 + 1e-9);
        }
        if ell > 0 {
            prop_assert!(any_bin_overflow_prob(n, m, ell.saturating_sub(1)).clamped_log2() > -20.0);
        }
    }
}
