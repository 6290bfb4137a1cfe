//! Oracle suites behind `horam verify`: reference functionalities for the
//! hash tables and the RAM, plus the trace-audit batteries. The acceptance
//! tests drive the same entry points.

use crate::block::Block;
use crate::error::Result;
use crate::obucket::BucketTable;
use crate::ocuckoo::CuckooTable;
use crate::oram::{Oram, OramConfig, Op};
use crate::otwotier::{Shuffled, TwoTierTable};
use crate::planner::LinearTable;
use crate::probcalc::{min_hash_count, LogProb};
use crate::tape::RandTape;
use crate::trace;
use std::collections::{HashMap, HashSet};

/// Reference hash-table functionality: a map with consume-on-lookup
/// semantics and a recurrent-lookup failure.
pub struct HtOracle {
    entries: HashMap<i128, Vec<u8>>,
    looked: HashSet<i128>,
}

#[derive(Debug, PartialEq, Eq)]
pub enum HtOut {
    Value(Vec<u8>),
    Missing,
    Fail,
}

impl HtOracle {
    pub fn build(blocks: &[Block]) -> HtOracle {
        let mut entries = HashMap::new();
        for b in blocks {
            if b.is_real() {
                let prev = entries.insert(b.key, b.value.to_vec());
                assert!(prev.is_none(), "duplicate key in build input");
            }
        }
        HtOracle { entries, looked: HashSet::new() }
    }

    pub fn lookup(&mut self, key: Option<i128>) -> HtOut {
        match key {
            None => HtOut::Missing,
            Some(k) => {
                if self.looked.contains(&k) {
                    return HtOut::Fail;
                }
                match self.entries.get(&k) {
                    Some(v) => {
                        self.looked.insert(k);
                        HtOut::Value(v.clone())
                    }
                    None => HtOut::Missing,
                }
            }
        }
    }

    /// Multiset of never-looked-up real keys.
    pub fn extract(self) -> Vec<i128> {
        let mut keys: Vec<i128> =
            self.entries.keys().filter(|k| !self.looked.contains(k)).copied().collect();
        keys.sort();
        keys
    }
}

pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failures == 0
    }
}

enum AnyTable {
    Linear(LinearTable),
    Bucket(BucketTable),
    Cuckoo(CuckooTable),
    TwoTier(TwoTierTable),
}

impl AnyTable {
    fn lookup(&mut self, key: Option<i128>) -> Option<Vec<u8>> {
        match self {
            AnyTable::Linear(t) => t.lookup(key),
            AnyTable::Bucket(t) => t.lookup(key),
            AnyTable::Cuckoo(t) => t.lookup(key),
            AnyTable::TwoTier(t) => t.lookup(key),
        }
    }

    fn extract(self, tape: &mut RandTape) -> Vec<Block> {
        match self {
            AnyTable::Linear(t) => t.extract(tape),
            AnyTable::Bucket(t) => t.extract(tape),
            AnyTable::Cuckoo(t) => t.extract(tape),
            AnyTable::TwoTier(t) => t.extract(tape),
        }
    }
}

fn d64() -> LogProb {
    LogProb::pow2(-64)
}

fn build_any(
    which: usize,
    blocks: Vec<Block>,
    tape: &mut RandTape,
    tag: u64,
) -> Result<AnyTable> {
    let n = blocks.len() as u64;
    Ok(match which {
        0 => AnyTable::Linear(LinearTable::build(blocks)),
        1 => AnyTable::Bucket(BucketTable::build(blocks, (n / 16).max(1), d64(), tape, tag)?),
        2 => {
            let k = min_hash_count(n.max(64), d64()).unwrap_or(5);
            AnyTable::Cuckoo(CuckooTable::build(blocks, k, d64(), tape, tag)?)
        }
        _ => AnyTable::TwoTier(TwoTierTable::build(
            Shuffled::from_shuffler(blocks, tape),
            1,
            d64(),
            tape,
            tag,
        )?),
    })
}

/// One random build/lookup/extract schedule of a table vs the reference.
/// Returns the failure count.
fn table_schedule(which: usize, n: usize, width: usize, seed: u64, tag: u64) -> usize {
    let mut tape = RandTape::from_seed(seed);
    let mut fails = 0usize;
    // inputs: n slots, ~1/8 dummies
    let mut blocks = Vec::with_capacity(n);
    let mut next_key = 1i128;
    for _ in 0..n {
        if tape.draw_below(8) == 0 {
            blocks.push(Block::dummy(width));
        } else {
            blocks.push(Block::real(next_key, &(next_key as u64).to_le_bytes().repeat(width / 8)));
            next_key += 1;
        }
    }
    let mut oracle = HtOracle::build(&blocks);
    let mut table = match build_any(which, blocks, &mut tape, tag) {
        Ok(t) => t,
        Err(e) => panic!("build failed in schedule: {e}"),
    };
    // random lookups: present (fresh), absent, dummy
    let lookups = (n / 2).max(1);
    let mut used = HashSet::new();
    for _ in 0..lookups {
        let kind = tape.draw_below(3);
        let key = match kind {
            0 => {
                // a fresh present key, if one remains
                let mut k = None;
                for _ in 0..8 {
                    let cand = 1 + tape.draw_below((next_key - 1).max(1) as u64) as i128;
                    if !used.contains(&cand) {
                        k = Some(cand);
                        break;
                    }
                }
                match k {
                    Some(k) => {
                        used.insert(k);
                        Some(k)
                    }
                    None => None,
                }
            }
            1 => {
                let k = next_key + 10 + tape.draw_below(50) as i128;
                if used.contains(&k) {
                    None
                } else {
                    used.insert(k);
                    Some(k)
                }
            }
            _ => None,
        };
        let got = table.lookup(key);
        let want = oracle.lookup(key);
        let agree = match (&got, &want) {
            (Some(v), HtOut::Value(w)) => v == w,
            (None, HtOut::Missing) => true,
            _ => false,
        };
        if !agree {
            fails += 1;
        }
    }
    let mut got: Vec<i128> = table
        .extract(&mut tape)
        .iter()
        .filter(|b| b.is_real())
        .map(|b| b.key)
        .collect();
    got.sort();
    if got != oracle.extract() {
        fails += 1;
    }
    fails
}

/// Functional-equivalence schedules for the three tables plus linear scan.
pub fn verify_tables(seed: u64, schedules: usize, max_n: usize) -> SuiteReport {
    let mut tape = RandTape::from_seed(seed);
    let mut failures = 0;
    let mut cases = 0;
    for s in 0..schedules {
        let which = s % 4;
        let cap = if which == 3 { max_n.max(4096) } else { max_n };
        let n = match which {
            3 => 4096 << tape.draw_below(2), // two-tier needs Z | n
            _ => 4 + tape.draw_below(cap as u64 - 4) as usize,
        };
        let n = n.min(cap.max(4096));
        failures += table_schedule(which, n, 8, tape.draw(), 5000 + s as u64);
        cases += 1;
    }
    SuiteReport { name: "tables", cases, failures }
}

/// RAM equivalence against a plain array over random read/write schedules.
pub fn verify_oram(seed: u64, seeds: usize, n: u64, ops_per_seed: u64) -> SuiteReport {
    let mut failures = 0;
    let mut cases = 0;
    for s in 0..seeds {
        let mut tape = RandTape::from_seed(seed ^ (s as u64).wrapping_mul(0x9e37_79b9));
        let mut config = OramConfig::new(n, 8);
        config.seed = tape.draw();
        config.top_capacity = 64.min(n / 2).max(4);
        let mut oram = Oram::init(config, &[]).expect("init");
        let mut oracle = vec![vec![0u8; 8]; n as usize];
        for _ in 0..ops_per_seed {
            let addr = tape.draw_below(n);
            cases += 1;
            if tape.draw() & 1 == 0 {
                let v = tape.draw().to_le_bytes().to_vec();
                let got = oram.access(Op::Write, addr, &v).expect("write");
                if got != v {
                    failures += 1;
                }
                oracle[addr as usize] = v;
            } else {
                let got = oram.read(addr).expect("read");
                if got != oracle[addr as usize] {
                    failures += 1;
                }
            }
        }
    }
    SuiteReport { name: "oram", cases, failures }
}

/// Map equivalence against a reference map.
pub fn verify_map(seed: u64, n: u64, ops: u64) -> SuiteReport {
    let mut tape = RandTape::from_seed(seed);
    let mut config = OramConfig::new(n, 8);
    config.seed = tape.draw();
    config.top_capacity = 64.min(n / 2).max(4);
    let mut map = Oram::new_map(config).expect("map init");
    let mut reference: HashMap<u64, Vec<u8>> = HashMap::new();
    let mut failures = 0;
    for _ in 0..ops {
        let key = tape.draw_below(n / 2) * 3 + 1_000_000;
        if tape.draw() & 1 == 0 && (reference.len() as u64) < n {
            let v = tape.draw().to_le_bytes().to_vec();
            map.map_put(key, &v).expect("put");
            reference.insert(key, v);
        } else {
            let got = map.map_get(key).expect("get");
            if got != reference.get(&key).cloned() {
                failures += 1;
            }
        }
    }
    SuiteReport { name: "map", cases: ops as usize, failures }
}

/// Fixed-tape full-trace equality across input pairs for the
/// data-independent primitives, shape equality for PRF-driven lookups and
/// RAM accesses, and the PRF uniformity test.
pub fn verify_trace(seed: u64, pairs: usize) -> SuiteReport {
    use crate::obuf::OBuf;
    use crate::oprims::*;
    let mut failures = 0;
    let mut cases = 0;
    let mut tape_seed = RandTape::from_seed(seed);

    let blocks = |keys: &mut RandTape, n: usize| -> Vec<Block> {
        (0..n).map(|_| Block::real(1 + keys.draw_below(1 << 40) as i128, &[1u8; 8])).collect()
    };

    // (a) full-trace equality for every data-independent primitive
    for p in 0..pairs {
        let n = 64 + (p % 5) * 37;
        let mut keys = RandTape::from_seed(tape_seed.draw());
        let seed_a = tape_seed.draw();
        let in_a = blocks(&mut keys, n);
        let in_b = blocks(&mut keys, n);

        let run = |input: Vec<Block>, op: usize, seed: u64| -> trace::Trace {
            let (_, tr) = trace::capture(|| {
                let mut t = RandTape::from_seed(seed);
                match op {
                    0 => {
                        let mut buf = OBuf::new("audit.sort", 0, input);
                        osort(&mut buf, |b| b.key as u128);
                    }
                    1 => {
                        let mut buf = OBuf::new("audit.shuf", 0, input);
                        oshuffle(&mut buf, &mut t);
                    }
                    2 => {
                        let mut buf = OBuf::new("audit.compact", 0, input);
                        ocompact(&mut buf, |b| b.key & 1 == 1);
                    }
                    3 => {
                        let half = input.len() / 2;
                        let mut a = input;
                        let b = a.split_off(half);
                        let ab = OBuf::new("audit.isp.a", 0, a);
                        let bb = OBuf::new("audit.isp.b", 0, b);
                        let _ = ointersperse(ab, bb, &mut t);
                    }
                    4 => {
                        let mut items = input;
                        for (i, b) in items.iter_mut().enumerate() {
                            b.aux = (i % 4) as u64;
                        }
                        let buf = OBuf::new("audit.bin.in", 0, items);
                        let _ = obin_place(&buf, |b| b.aux, 4, buf.len() / 2).unwrap();
                    }
                    _ => {
                        // relaxed compaction at an exact half marking
                        let n = input.len().next_power_of_two();
                        let mut items = input;
                        items.truncate(n / 2 * 2);
                        let half = items.len() / 2;
                        for (i, b) in items.iter_mut().enumerate() {
                            b.aux = (i < half) as u64;
                        }
                        let mut buf = OBuf::new("audit.relaxed", 0, items);
                        oshuffle(&mut buf, &mut t);
                        let _ = ocompact_relaxed(&mut buf, |b| b.aux & 1 == 1, 16);
                    }
                }
            });
            tr
        };
        for op in 0..6 {
            cases += 1;
            let ta = run(in_a.clone(), op, seed_a);
            let tb = run(in_b.clone(), op, seed_a);
            if ta != tb {
                failures += 1;
            }
        }
    }

    // (b) shape equality across lookups and accesses at equal public state
    {
        let mut tape = RandTape::from_seed(seed ^ 0xb);
        let n = 256usize;
        let reals: Vec<Block> =
            (1..=n as i128).map(|k| Block::real(k, &[2u8; 8])).collect();
        let mut bucket =
            BucketTable::build(reals.clone(), 8, d64(), &mut tape, 7100).unwrap();
        let mut cuckoo = CuckooTable::build(reals.clone(), 4, d64(), &mut tape, 7101).unwrap();
        let tt_n = 4096usize;
        let tt_blocks: Vec<Block> =
            (1..=tt_n as i128).map(|k| Block::real(k, &[2u8; 8])).collect();
        let mut twotier = TwoTierTable::build(
            Shuffled::from_shuffler(tt_blocks, &mut tape),
            1,
            d64(),
            &mut tape,
            7102,
        )
        .unwrap();
        let mut shape_pairs = |f: &mut dyn FnMut(Option<i128>) -> (), keys: &mut dyn Iterator<Item = i128>| {
            let k1 = keys.next().unwrap();
            let (_, t1) = trace::capture(|| f(Some(k1)));
            for _ in 0..pairs {
                cases += 1;
                let k = keys.next().unwrap();
                let use_dummy = k % 3 == 0;
                let (_, t2) = trace::capture(|| f(if use_dummy { None } else { Some(k) }));
                if !trace::assert_shape_equal(&trace::shape_of(&t1), &trace::shape_of(&t2)) {
                    failures += 1;
                }
            }
        };
        shape_pairs(&mut |k| {
            bucket.lookup(k);
        }, &mut (1..=n as i128));
        shape_pairs(&mut |k| {
            cuckoo.lookup(k);
        }, &mut (1..=n as i128));
        shape_pairs(&mut |k| {
            twotier.lookup(k);
        }, &mut (1..=tt_n as i128));
    }
    {
        // RAM accesses at equal public state: pairs of instances walked to
        // the same occupancy, then one traced access each
        let n = 256u64;
        for p in 0..pairs {
            cases += 1;
            let warm = (p % 7) as u64;
            let mk = |seed: u64, warm: u64| -> (Oram, trace::Trace) {
                let mut config = OramConfig::new(n, 8);
                config.seed = seed;
                config.top_capacity = 16;
                let mut o = Oram::init(config, &[]).unwrap();
                for a in 0..warm {
                    o.read(a % n).unwrap();
                }
                let (_, t) = trace::capture(|| o.read((warm * 3) % n).unwrap());
                (o, t)
            };
            let (o1, t1) = mk(1000 + p as u64, warm);
            let (o2, t2) = mk(2000 + p as u64, warm);
            assert_eq!(o1.occupancy(), o2.occupancy());
            if !trace::assert_shape_equal(&trace::shape_of(&t1), &trace::shape_of(&t2)) {
                failures += 1;
            }
        }
    }

    // (c) PRF-derived index uniformity
    {
        cases += 1;
        let mut tape = RandTape::from_seed(seed ^ 0xc);
        let prf = crate::prf::Prf::sample(&mut tape);
        let domain = 64u64;
        let idx: Vec<u64> = (0..100_000i128).map(|x| prf.eval_mod(x, domain)).collect();
        if trace::uniformity_test(&idx, domain, 0.001).unwrap() != trace::Uniformity::Pass {
            failures += 1;
        }
    }

    SuiteReport { name: "trace", cases, failures }
}

/// Primitive-level oracles: sorting, shuffling, compaction, placement.
pub fn verify_oprims(seed: u64, trials: usize) -> SuiteReport {
    use crate::obuf::OBuf;
    use crate::oprims::*;
    let mut tape = RandTape::from_seed(seed);
    let mut failures = 0;
    let mut cases = 0;
    for trial in 0..trials {
        let n = 1 + tape.draw_below(512) as usize;
        let keys: Vec<i128> = (0..n).map(|_| 1 + tape.draw_below(1 << 30) as i128).collect();
        let blocks: Vec<Block> =
            keys.iter().map(|&k| Block::real(k, &(k as u64).to_le_bytes())).collect();

        // sort oracle
        cases += 1;
        let mut buf = OBuf::new("vo.sort", trial as u64, blocks.clone());
        osort(&mut buf, |b| b.key as u128);
        let mut expect = keys.clone();
        expect.sort();
        if buf.items().iter().map(|b| b.key).collect::<Vec<_>>() != expect {
            failures += 1;
        }

        // shuffle multiset
        cases += 1;
        let mut buf = OBuf::new("vo.shuf", trial as u64, blocks.clone());
        oshuffle(&mut buf, &mut tape);
        let mut got: Vec<i128> = buf.items().iter().map(|b| b.key).collect();
        got.sort();
        if got != expect {
            failures += 1;
        }

        // compaction prefix property
        cases += 1;
        let mut buf = OBuf::new("vo.compact", trial as u64, blocks.clone());
        let marked: HashSet<i128> = keys.iter().filter(|k| *k % 3 == 0).copied().collect();
        ocompact(&mut buf, |b| b.key % 3 == 0);
        let ok = buf.items()[..marked.len().min(n)]
            .iter()
            .all(|b| marked.contains(&b.key));
        if !ok {
            failures += 1;
        }
    }
    SuiteReport { name: "oprims", cases, failures }
}
