//! Oblivious bucket hash table: PRF-partitioned fixed-capacity bins with
//! linear-scan lookup. Bucket capacity comes from the balls-into-bins tail
//! at the configured overflow target, so the table is as small as the bound
//! allows. Build places blocks with the oblivious bin-placement network;
//! lookups touch exactly one bin; extraction compacts never-looked-up
//! blocks back out and reshuffles them.

use crate::block::{Block, OItem, SYNTH_BASE};
use crate::error::{Error, Result};
use crate::obuf::OBuf;
use crate::oprims::{obin_place, ocompact, oselect, oshuffle};
use crate::prf::Prf;
use crate::probcalc::{bucket_sizing, BucketSizing, LogProb};
use crate::tape::RandTape;
use crate::trace::{self, Derivation};

const BUILD_ATTEMPTS: usize = 3;

pub struct BucketTable {
    bins: OBuf<Block>,
    prf: Prf,
    sizing: BucketSizing,
    dummy_ctr: u64,
    width: usize,
    tag: u64,
    #[cfg(debug_assertions)]
    looked_up: std::collections::HashSet<i128>,
}

/// Rewrite dummy input slots with distinct synthetic keys so every slot
/// participates in PRF placement; the real count stays hidden and the
/// balls-into-bins sizing applies at the full slot count.
pub(crate) fn assign_synthetic_keys(blocks: &mut [Block]) {
    for (i, b) in blocks.iter_mut().enumerate() {
        let synth = Block { key: SYNTH_BASE - i as i128, aux: 0, value: b.value.clone() };
        let dummy = b.is_dummy();
        b.cmov(&synth, dummy);
    }
}

impl BucketTable {
    /// Build over `blocks` (distinct real keys; dummies allowed) with `m`
    /// buckets sized at overflow target `delta`. Retries with a fresh PRF
    /// key on bin overflow.
    pub fn build(
        blocks: Vec<Block>,
        m: u64,
        delta: LogProb,
        tape: &mut RandTape,
        tag: u64,
    ) -> Result<BucketTable> {
        let n = blocks.len() as u64;
        assert!(m >= 1);
        let sizing = bucket_sizing(n.max(1), m, delta);
        Self::build_sized(blocks, sizing, tape, tag)
    }

    /// Build with an explicit sizing (tests force tiny capacities through
    /// this to exercise the rebuild path).
    pub fn build_sized(
        mut blocks: Vec<Block>,
        sizing: BucketSizing,
        tape: &mut RandTape,
        tag: u64,
    ) -> Result<BucketTable> {
        let width = blocks.first().map(|b| b.width()).unwrap_or(0);
        trace::public_param("obucket.n", sizing.n);
        trace::public_param("obucket.m", sizing.m);
        trace::public_param("obucket.ell", sizing.ell);
        assign_synthetic_keys(&mut blocks);
        let input = OBuf::new("obucket.input", tag, blocks);
        let mut last = Error::BinOverflow;
        for _ in 0..BUILD_ATTEMPTS {
            let prf = Prf::sample(tape);
            match obin_place(
                &input,
                |b| prf.eval_mod(b.key, sizing.m),
                sizing.m as usize,
                sizing.ell as usize,
            ) {
                Ok(placed) => {
                    let bins = OBuf::new("obucket.bins", tag, placed.into_items());
                    return Ok(BucketTable {
                        bins,
                        prf,
                        sizing,
                        dummy_ctr: 0,
                        width,
                        tag,
                        #[cfg(debug_assertions)]
                        looked_up: Default::default(),
                    });
                }
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    /// Reassemble from snapshot parts.
    pub fn from_parts(
        sizing: BucketSizing,
        prf_key: crate::prf::PrfKey,
        dummy_ctr: u64,
        width: usize,
        tag: u64,
        bins: Vec<Block>,
    ) -> BucketTable {
        assert_eq!(bins.len() as u64, sizing.m * sizing.ell);
        BucketTable {
            bins: OBuf::new("obucket.bins", tag, bins),
            prf: Prf::new(prf_key),
            sizing,
            dummy_ctr,
            width,
            tag,
            #[cfg(debug_assertions)]
            looked_up: Default::default(),
        }
    }

    pub fn snapshot_parts(&self) -> (BucketSizing, crate::prf::PrfKey, u64, usize, u64, &[Block]) {
        (self.sizing, self.prf.key(), self.dummy_ctr, self.width, self.tag, self.bins.items())
    }

    pub fn capacity(&self) -> usize {
        self.sizing.n as usize
    }

    pub fn sizing(&self) -> BucketSizing {
        self.sizing
    }

    pub fn value_width(&self) -> usize {
        self.width
    }

    /// Linear scan of the bucket the PRF names for the key; a dummy lookup
    /// scans the bucket named by a monotone dummy counter. Exactly `ell`
    /// slots of exactly one bin are read and written back; a matched entry
    /// is left as a dummy.
    pub fn lookup(&mut self, key: Option<i128>) -> Option<Vec<u8>> {
        let effective = match key {
            Some(k) => {
                assert!(k > 0, "real keys are positive");
                #[cfg(debug_assertions)]
                assert!(self.looked_up.insert(k), "recurrent lookup of key {k}");
                k
            }
            None => {
                self.dummy_ctr += 1;
                -(self.dummy_ctr as i128)
            }
        };
        let bin = self.prf.eval_mod(effective, self.sizing.m) as usize;
        let ell = self.sizing.ell as usize;
        let mut found = false;
        let mut res = Block::dummy(self.width);
        for s in 0..ell {
            let idx = bin * ell + s;
            self.bins.update_at(idx, Derivation::PrfDerived, |b| {
                let hit = b.is_real() && b.key == effective;
                res.cmov(b, hit);
                found |= hit;
                b.wipe(hit);
            });
        }
        let blank = Block::dummy(self.width);
        let out = oselect(found, &res, &blank);
        if found && key.is_some() {
            Some(out.value.into_vec())
        } else {
            None
        }
    }

    /// Destructive extraction: exactly `n` blocks holding every real block
    /// never looked up, dummies elsewhere, freshly shuffled.
    pub fn extract(self, tape: &mut RandTape) -> Vec<Block> {
        let mut bins = self.bins;
        let n = self.sizing.n as usize;
        ocompact(&mut bins, |b| b.is_real());
        bins.truncate(n);
        let mut out = OBuf::new("obucket.extract", self.tag, bins.into_items());
        oshuffle(&mut out, tape);
        out.into_items()
    }
}

/// Golden-section search for an approximately optimal bucket count on the
/// log2(m) axis over [1, n], at most 12 distinct probes, each the median of
/// three sampler runs. The measured cost surface is approximately convex
/// with heavy fluctuation, which the median damps.
pub fn plan_bucket_count(n: u64, sampler: &mut dyn FnMut(u64) -> f64) -> u64 {
    const PROBES: usize = 12;
    fn probe(
        x: f64,
        n: u64,
        evals: &mut Vec<(u64, f64)>,
        sampler: &mut dyn FnMut(u64) -> f64,
    ) -> f64 {
        let m = x.exp2().round().clamp(1.0, n as f64) as u64;
        if let Some(&(_, c)) = evals.iter().find(|(em, _)| *em == m) {
            return c;
        }
        let mut runs = [sampler(m), sampler(m), sampler(m)];
        runs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        evals.push((m, runs[1]));
        runs[1]
    }
    let mut evals: Vec<(u64, f64)> = Vec::new();
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = 0.0f64;
    let mut hi = (n as f64).log2();
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = probe(x1, n, &mut evals, sampler);
    let mut f2 = probe(x2, n, &mut evals, sampler);
    // the bracket can collapse onto already-probed integers before the
    // probe budget is spent; the turn cap ends the search then
    let mut turns = 0;
    while evals.len() < PROBES && turns < 2 * PROBES && (hi - lo) > 1e-3 {
        turns += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = probe(x1, n, &mut evals, sampler);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = probe(x2, n, &mut evals, sampler);
        }
    }
    // settle the remaining integers inside a narrow final bracket
    let m_lo = lo.exp2().floor().max(1.0) as u64;
    let m_hi = hi.exp2().ceil().min(n as f64) as u64;
    if m_hi.saturating_sub(m_lo) <= 8 {
        for m in m_lo..=m_hi {
            if !evals.iter().any(|(em, _)| *em == m) {
                let mut runs = [sampler(m), sampler(m), sampler(m)];
                runs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                evals.push((m, runs[1]));
            }
        }
    }
    evals.iter().min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).map(|&(m, _)| m).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d64() -> LogProb {
        LogProb::pow2(-64)
    }

    fn real_blocks(n: usize) -> Vec<Block> {
        (1..=n as i128).map(|k| Block::real(k, &(k as u64).to_le_bytes())).collect()
    }

    #[test]
    fn empty_table_returns_nothing() {
        let mut tape = RandTape::from_seed(1);
        let mut t = BucketTable::build(vec![Block::dummy(8)], 1, d64(), &mut tape, 900).unwrap();
        assert_eq!(t.lookup(Some(5)), None);
        assert_eq!(t.lookup(None), None);
    }

    #[test]
    fn every_inserted_key_found() {
        let mut tape = RandTape::from_seed(2);
        let n = 500;
        let mut t = BucketTable::build(real_blocks(n), 8, d64(), &mut tape, 901).unwrap();
        for k in 1..=n as i128 {
            let v = t.lookup(Some(k)).expect("inserted key must be found");
            assert_eq!(v, (k as u64).to_le_bytes());
        }
        assert_eq!(t.lookup(Some(1000)), None);
    }

    #[test]
    fn lookup_consumes() {
        let mut tape = RandTape::from_seed(3);
        let mut t = BucketTable::build(real_blocks(16), 2, d64(), &mut tape, 902).unwrap();
        assert!(t.lookup(Some(7)).is_some());
        let out = t.extract(&mut tape);
        assert_eq!(out.len(), 16);
        let keys: Vec<i128> = out.iter().filter(|b| b.is_real()).map(|b| b.key).collect();
        assert_eq!(keys.len(), 15);
        assert!(!keys.contains(&7));
    }

    #[test]
    #[cfg(debug_assertions)]
    #[should_panic(expected = "recurrent lookup")]
    fn recurrent_lookup_rejected_in_debug() {
        let mut tape = RandTape::from_seed(4);
        let mut t = BucketTable::build(real_blocks(8), 2, d64(), &mut tape, 903).unwrap();
        t.lookup(Some(3));
        t.lookup(Some(3));
    }

    #[test]
    fn forced_tiny_capacity_exhausts_rebuilds() {
        let mut tape = RandTape::from_seed(5);
        let sizing = BucketSizing { n: 64, m: 2, ell: 4, delta: d64() };
        match BucketTable::build_sized(real_blocks(64), sizing, &mut tape, 904) {
            Err(e) => assert_eq!(e, Error::BinOverflow),
            Ok(_) => panic!("expected overflow with forced tiny capacity"),
        }
    }

    #[test]
    fn extract_after_no_lookups_preserves_everything() {
        let mut tape = RandTape::from_seed(6);
        let n = 200;
        let t = BucketTable::build(real_blocks(n), 4, d64(), &mut tape, 905).unwrap();
        let out = t.extract(&mut tape);
        let mut keys: Vec<i128> = out.iter().filter(|b| b.is_real()).map(|b| b.key).collect();
        keys.sort();
        assert_eq!(keys, (1..=n as i128).collect::<Vec<_>>());
    }

    #[test]
    fn lookup_trace_shape_constant() {
        let mut tape = RandTape::from_seed(7);
        let mut t = BucketTable::build(real_blocks(64), 4, d64(), &mut tape, 906).unwrap();
        let ell = t.sizing().ell as usize;
        let (_, t1) = trace::capture(|| t.lookup(Some(5)));
        let (_, t2) = trace::capture(|| t.lookup(Some(33)));
        let (_, t3) = trace::capture(|| t.lookup(None));
        let s1 = trace::shape_of(&t1);
        assert!(trace::assert_shape_equal(&s1, &trace::shape_of(&t2)));
        assert!(trace::assert_shape_equal(&s1, &trace::shape_of(&t3)));
        // exactly ell slots of one bin, read and written
        assert_eq!(t1.len(), 2 * ell);
    }

    #[test]
    fn bucket_index_distribution_uniform() {
        let mut tape = RandTape::from_seed(8);
        let prf = Prf::sample(&mut tape);
        let m = 16u64;
        let idx: Vec<u64> = (1..=20_000i128).map(|k| prf.eval_mod(k, m)).collect();
        assert_eq!(trace::uniformity_test(&idx, m, 0.001).unwrap(), trace::Uniformity::Pass);
    }

    #[test]
    fn golden_section_finds_unimodal_minimum() {
        let mut sampler = |m: u64| (m as f64 - 100.0).abs();
        let best = plan_bucket_count(1024, &mut sampler);
        assert!((98..=102).contains(&best), "got {best}");
    }

    #[test]
    fn golden_section_on_noisy_convex() {
        let mut tape = RandTape::from_seed(9);
        let f = |m: u64| (m as f64).ln().powi(2) - 2.0 * (m as f64).ln() + 5.0;
        let mut sampler =
            |m: u64| f(m) * (1.0 + 0.02 * ((tape.draw() % 100) as f64 / 100.0 - 0.5));
        let best = plan_bucket_count(4096, &mut sampler);
        let brute: u64 =
            (1..=4096).min_by(|&a, &b| f(a).partial_cmp(&f(b)).unwrap()).unwrap();
        assert!(f(best) <= f(brute) * 1.2, "best {best} vs brute {brute}");
    }
}
