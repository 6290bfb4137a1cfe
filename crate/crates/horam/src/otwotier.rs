//! Two-tier hash table for large levels: blocks are routed to major bins
//! with a plain (non-oblivious) scatter, which is safe exactly because the
//! input stream is randomly shuffled, and a fixed quota of each bin is
//! obliviously relocated into a secondary overflow table. Major bins are
//! inner bucket tables; the overflow pile defaults to a stashless Cuckoo
//! table, whose cheap lookups absorb the extra probe every lookup pays.

use crate::block::Block;
use crate::error::{Error, Result};
use crate::obuf::OBuf;
use crate::obucket::{assign_synthetic_keys, BucketTable};
use crate::ocuckoo::CuckooTable;
use crate::oprims::{ocompact, oshuffle};
use crate::prf::Prf;
use crate::probcalc::{min_hash_count, LogProb};
use crate::tape::RandTape;
use crate::trace::{self, Derivation};

/// Safety constant: major-bin capacity is `Z = C / eps^2`, keeping the
/// per-bin concentration failure `exp(-eps^2 Z / 16) = exp(-C/16)`
/// negligible.
pub const TWO_TIER_C: u64 = 1024;

/// Blocks attested to be in uniformly random order. Produced by the
/// shuffle/extract paths; external callers attest explicitly. The
/// non-oblivious scatter inside the two-tier build is only safe under this
/// precondition.
pub struct Shuffled(Vec<Block>);

impl Shuffled {
    /// Caller-asserted witness. In debug builds a sorted-by-key input (the
    /// canonical adversarial counterexample) is rejected.
    pub fn attest(blocks: Vec<Block>) -> Shuffled {
        #[cfg(debug_assertions)]
        if blocks.len() > 16 {
            let sorted = blocks.windows(2).all(|w| w[0].key <= w[1].key);
            assert!(!sorted, "two-tier input must be shuffled; got key-sorted blocks");
        }
        Shuffled(blocks)
    }

    pub fn from_shuffler(blocks: Vec<Block>, tape: &mut RandTape) -> Shuffled {
        let mut buf = OBuf::new("twotier.preshuffle", 0, blocks);
        oshuffle(&mut buf, tape);
        Shuffled(buf.into_items())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TwoTierParams {
    /// Overflow rate as the exponent j of eps = 2^-j.
    pub eps_log2: u32,
    /// Major-bin capacity Z = C * eps^-2.
    pub z: u64,
    /// Blocks an inner major table keeps: Z (1 - eps/2).
    pub keep: u64,
    /// Relocation quota per bin: eps * Z, always moved in full (dummies pad
    /// the gap), so the relocation trace depends only on bin counts.
    pub cap_r: u64,
    pub num_majors: u64,
    /// Bucket count for each inner major table.
    pub major_m: u64,
}

impl TwoTierParams {
    /// Derive parameters for `n` blocks at overflow rate `eps = 2^-eps_log2`.
    pub fn derive(n: u64, eps_log2: u32) -> Result<TwoTierParams> {
        if eps_log2 < 1 {
            return Err(Error::Param("two-tier eps must be <= 1/2".into()));
        }
        if eps_log2 >= 28 {
            return Err(Error::Sizing("two-tier eps too small".into()));
        }
        let z = TWO_TIER_C << (2 * eps_log2);
        if z > n {
            return Err(Error::Sizing(format!("two-tier needs n >= Z; n={n} Z={z}")));
        }
        if n % z != 0 {
            return Err(Error::Param(format!("two-tier needs Z | n; n={n} Z={z}")));
        }
        let cap_r = TWO_TIER_C << eps_log2; // eps * Z
        let keep = z - cap_r / 2; // Z (1 - eps/2)
        let num_majors = n / z;
        let major_m = (keep / 128).max(1);
        Ok(TwoTierParams { eps_log2, z, keep, cap_r, num_majors, major_m })
    }
}

pub struct TwoTierTable {
    majors: Vec<BucketTable>,
    overflow: CuckooTable,
    prf: Prf,
    params: TwoTierParams,
    n: usize,
    dummy_ctr: u64,
    width: usize,
    tag: u64,
}

impl TwoTierTable {
    pub fn build(
        input: Shuffled,
        eps_log2: u32,
        delta: LogProb,
        tape: &mut RandTape,
        tag: u64,
    ) -> Result<TwoTierTable> {
        let mut blocks = input.0;
        let n = blocks.len();
        let p = TwoTierParams::derive(n as u64, eps_log2)?;
        let width = blocks.first().map(|b| b.width()).unwrap_or(0);
        trace::public_param("twotier.n", n as u64);
        trace::public_param("twotier.z", p.z);
        trace::public_param("twotier.eps_log2", p.eps_log2 as u64);
        assign_synthetic_keys(&mut blocks);
        let prf = Prf::sample(tape);
        let bin_cap = (p.keep + p.cap_r) as usize;

        // plain scatter of the shuffled stream; the visible trace is the
        // bin-id sequence of a random stream plus public fill levels
        let mut arena = OBuf::new(
            "twotier.bins",
            tag,
            vec![Block::dummy(width); p.num_majors as usize * bin_cap],
        );
        let mut loads = vec![0usize; p.num_majors as usize];
        let input = OBuf::new("twotier.input", tag, blocks);
        for i in 0..n {
            let b = input.read(i);
            let j = prf.eval_mod(b.key, p.num_majors) as usize;
            if loads[j] >= bin_cap {
                return Err(Error::TierImbalance);
            }
            arena.write_at(j * bin_cap + loads[j], b, Derivation::PrfDerived);
            loads[j] += 1;
        }
        if loads.iter().any(|&l| (l as u64) < p.keep) {
            return Err(Error::TierImbalance);
        }

        // first `keep` arrivals stay in the major bin; the fixed-size
        // remainder (real relocations plus dummy padding) forms the pile
        let mut majors = Vec::with_capacity(p.num_majors as usize);
        let mut relocated: Vec<Block> = Vec::with_capacity((p.num_majors * p.cap_r) as usize);
        for j in 0..p.num_majors as usize {
            let base = j * bin_cap;
            let keep_items: Vec<Block> =
                (0..p.keep as usize).map(|s| arena.read(base + s)).collect();
            majors.push(BucketTable::build(keep_items, p.major_m, delta, tape, tag)?);
            for s in p.keep as usize..bin_cap {
                relocated.push(arena.read(base + s));
            }
        }
        let k = min_hash_count(relocated.len() as u64, delta)?;
        let overflow = CuckooTable::build(relocated, k, delta, tape, tag)?;
        Ok(TwoTierTable { majors, overflow, prf, params: p, n, dummy_ctr: 0, width, tag })
    }

    /// Reassemble from snapshot parts.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        majors: Vec<BucketTable>,
        overflow: CuckooTable,
        prf_key: crate::prf::PrfKey,
        params: TwoTierParams,
        n: usize,
        dummy_ctr: u64,
        width: usize,
        tag: u64,
    ) -> TwoTierTable {
        TwoTierTable {
            majors,
            overflow,
            prf: Prf::new(prf_key),
            params,
            n,
            dummy_ctr,
            width,
            tag,
        }
    }

    pub fn snapshot_parts(
        &self,
    ) -> (&[BucketTable], &CuckooTable, crate::prf::PrfKey, TwoTierParams, usize, u64, usize, u64)
    {
        (
            &self.majors,
            &self.overflow,
            self.prf.key(),
            self.params,
            self.n,
            self.dummy_ctr,
            self.width,
            self.tag,
        )
    }

    pub fn capacity(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> TwoTierParams {
        self.params
    }

    pub fn value_width(&self) -> usize {
        self.width
    }

    /// One inner lookup in the PRF-named major bin, then one in the
    /// overflow pile, in that fixed order; a key lives in exactly one tier,
    /// so the visible result is whichever probe found it.
    pub fn lookup(&mut self, key: Option<i128>) -> Option<Vec<u8>> {
        let effective = match key {
            Some(k) => {
                assert!(k > 0, "real keys are positive");
                k
            }
            None => {
                self.dummy_ctr += 1;
                -(self.dummy_ctr as i128)
            }
        };
        let j = self.prf.eval_mod(effective, self.params.num_majors) as usize;
        let major_res = self.majors[j].lookup(key);
        let over_res = self.overflow.lookup(key);
        match (major_res, over_res) {
            (Some(v), None) => Some(v),
            (None, Some(v)) => Some(v),
            (None, None) => None,
            (Some(_), Some(_)) => unreachable!("key resides in exactly one tier"),
        }
    }

    /// Concatenate the inner extractions, compact the reals back to `n`
    /// slots, and reshuffle.
    pub fn extract(self, tape: &mut RandTape) -> Vec<Block> {
        let mut parts: Vec<Block> = Vec::new();
        for m in self.majors {
            parts.extend(m.extract(tape));
        }
        parts.extend(self.overflow.extract(tape));
        let mut buf = OBuf::new("twotier.extract", self.tag, parts);
        ocompact(&mut buf, |b| b.is_real());
        buf.truncate(self.n);
        let mut out = OBuf::new("twotier.out", self.tag, buf.into_items());
        oshuffle(&mut out, tape);
        out.into_items()
    }
}

/// Brute-force search over the admissible power-of-two overflow rates
/// `eps in [sqrt(C/n), 1)`, returning the exponent with the least sampled
/// cost. `n <= C` leaves no admissible rate.
pub fn plan_epsilon(n: u64, sampler: &mut dyn FnMut(u32) -> f64) -> Result<u32> {
    let mut best: Option<(u32, f64)> = None;
    for j in 1..=32u32 {
        match TwoTierParams::derive(n, j) {
            Ok(_) => {
                let c = sampler(j);
                if best.map(|(_, bc)| c < bc).unwrap_or(true) {
                    best = Some((j, c));
                }
            }
            Err(_) => break,
        }
    }
    best.map(|(j, _)| j)
        .ok_or_else(|| Error::Sizing(format!("no admissible two-tier rate for n={n}")))
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

    fn build_table(n: usize, eps_log2: u32, seed: u64, tag: u64) -> TwoTierTable {
        let mut tape = RandTape::from_seed(seed);
        let input = Shuffled::from_shuffler(real_blocks(n), &mut tape);
        TwoTierTable::build(input, eps_log2, d64(), &mut tape, tag).unwrap()
    }

    #[test]
    fn degenerate_single_bin() {
        // n = Z: one major bin plus the pile
        let n = (TWO_TIER_C << 2) as usize;
        let mut t = build_table(n, 1, 21, 920);
        assert_eq!(t.params().num_majors, 1);
        for k in [1i128, 7, n as i128] {
            assert_eq!(t.lookup(Some(k)).unwrap(), (k as u64).to_le_bytes());
        }
    }

    #[test]
    fn all_keys_retrievable() {
        let n = 2 * (TWO_TIER_C << 2) as usize;
        let mut t = build_table(n, 1, 22, 921);
        for k in 1..=n as i128 {
            assert_eq!(t.lookup(Some(k)).unwrap(), (k as u64).to_le_bytes(), "key {k}");
        }
        assert_eq!(t.lookup(Some((n + 5) as i128)), None);
        assert_eq!(t.lookup(None), None);
    }

    #[test]
    fn lookup_shape_constant() {
        let n = (TWO_TIER_C << 2) as usize * 2;
        let mut t = build_table(n, 1, 23, 922);
        let (_, t1) = trace::capture(|| t.lookup(Some(3)));
        let (_, t2) = trace::capture(|| t.lookup(Some(900)));
        let (_, t3) = trace::capture(|| t.lookup(None));
        let s1 = trace::shape_of(&t1);
        assert!(trace::assert_shape_equal(&s1, &trace::shape_of(&t2)));
        assert!(trace::assert_shape_equal(&s1, &trace::shape_of(&t3)));
    }

    #[test]
    fn extract_preserves_unlooked() {
        let n = (TWO_TIER_C << 2) as usize;
        let mut tape = RandTape::from_seed(24);
        let input = Shuffled::from_shuffler(real_blocks(n), &mut tape);
        let mut t = TwoTierTable::build(input, 1, d64(), &mut tape, 923).unwrap();
        for k in 1..=(n / 4) as i128 {
            t.lookup(Some(k));
        }
        let out = t.extract(&mut tape);
        assert_eq!(out.len(), n);
        let mut keys: Vec<i128> = out.iter().filter(|b| b.is_real()).map(|b| b.key).collect();
        keys.sort();
        assert_eq!(keys, ((n / 4 + 1) as i128..=n as i128).collect::<Vec<_>>());
    }

    #[test]
    #[cfg(debug_assertions)]
    #[should_panic(expected = "must be shuffled")]
    fn sorted_input_rejected() {
        let _ = Shuffled::attest(real_blocks(64));
    }

    #[test]
    fn plan_epsilon_boundaries() {
        // n = C: candidate set empty
        let mut never = |_: u32| unreachable!("no candidates to sample");
        assert!(plan_epsilon(TWO_TIER_C, &mut never).is_err());
        // two-point synthetic sampler: argmin returned
        let n = TWO_TIER_C << 4; // candidates j in {1, 2}
        let mut sampler = |j: u32| if j == 2 { 1.0 } else { 5.0 };
        assert_eq!(plan_epsilon(n, &mut sampler).unwrap(), 2);
    }

    #[test]
    fn relocation_concentration_monte_carlo() {
        // per-bin relocation-overflow frequency vs exp(-eps^2 Z / 16)
        let mut tape = RandTape::from_seed(25);
        for (z, eps_log2) in [(1u64 << 10, 2u32), (1 << 12, 2)] {
            let eps = 0.5f64.powi(eps_log2 as i32);
            let keep = z - (eps * z as f64 / 2.0) as u64;
            let cap_r = (eps * z as f64) as u64;
            let bins = 64u64;
            let n = bins * z;
            let trials = 200u64;
            let mut overflows = 0u64;
            let mut total_bins = 0u64;
            for _ in 0..trials {
                let mut loads = vec![0u64; bins as usize];
                for _ in 0..n {
                    loads[tape.draw_below(bins) as usize] += 1;
                }
                for &l in &loads {
                    total_bins += 1;
                    if l > keep + cap_r {
                        overflows += 1;
                    }
                }
            }
            let bound = (-eps * eps * z as f64 / 16.0).exp();
            let freq = overflows as f64 / total_bins as f64;
            let sigma = (bound * (1.0 - bound) / total_bins as f64).sqrt();
            assert!(
                freq <= bound + 3.0 * sigma,
                "z={z} eps=2^-{eps_log2}: freq {freq} vs bound {bound}"
            );
        }
    }
}
