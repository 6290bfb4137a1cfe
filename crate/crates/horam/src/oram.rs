//! The hierarchical doubly-oblivious RAM and its key-value map extension.
//!
//! Geometrically growing levels, each an oblivious hash table, sit under a
//! small plain-array top level that is scanned linearly on every access.
//! An access probes the top level and then every occupied hash level
//! exactly once — with the real key until the block is found, with a dummy
//! key afterwards — wipes the found copy, and re-appends the fresh copy to
//! the top. When the top fills, the top and every level above the first
//! empty slot are extracted, interspersed and rebuilt one level down; at
//! the bottom the merged array is compacted to half first. Because lookups
//! consume the copies they find, every live key exists in exactly one slot
//! across the hierarchy and rebuilds never see duplicate keys.
//!
//! Keys need not lie in any fixed range — levels are hash tables — which
//! is what the map interface exploits.

use crate::block::{Block, OItem};
use crate::error::{Error, Result};
use crate::obuf::OBuf;
use crate::obucket::BucketTable;
use crate::ocuckoo::CuckooTable;
use crate::oprims::{ocompact, ointersperse, oselect, oshuffle};
use crate::otwotier::{Shuffled, TwoTierTable};
use crate::probcalc::LogProb;
use crate::tape::RandTape;
use crate::trace;

/// Per-level scheme assignment. The default policy routes by capacity:
/// bucket tables up to 2^13 blocks, two-tier above. A planner-driven
/// assignment can override it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelScheme {
    Bucket { m: u64 },
    Cuckoo { k: u32 },
    TwoTier { eps_log2: u32 },
}

#[derive(Debug, Clone)]
pub struct OramConfig {
    /// Capacity N; padded up to a power of two.
    pub capacity: u64,
    /// Payload width in bytes.
    pub value_width: usize,
    /// Top-level (plain array) capacity; clamped to [4, N/2], power of two.
    pub top_capacity: u64,
    pub delta: LogProb,
    pub seed: u64,
    /// Explicit per-level schemes (index = level); `None` entries use the
    /// default routing.
    pub level_schemes: Vec<Option<LevelScheme>>,
}

impl OramConfig {
    pub fn new(capacity: u64, value_width: usize) -> OramConfig {
        OramConfig {
            capacity,
            value_width,
            top_capacity: 512,
            delta: LogProb::pow2(-64),
            seed: 0,
            level_schemes: vec![],
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_top_capacity(mut self, cap: u64) -> Self {
        self.top_capacity = cap;
        self
    }
}

pub(crate) enum LevelTable {
    Bucket(BucketTable),
    Cuckoo(CuckooTable),
    TwoTier(TwoTierTable),
}

impl LevelTable {
    fn lookup(&mut self, key: Option<i128>) -> Option<Vec<u8>> {
        match self {
            LevelTable::Bucket(t) => t.lookup(key),
            LevelTable::Cuckoo(t) => t.lookup(key),
            LevelTable::TwoTier(t) => t.lookup(key),
        }
    }

    fn extract(self, tape: &mut RandTape) -> Vec<Block> {
        match self {
            LevelTable::Bucket(t) => t.extract(tape),
            LevelTable::Cuckoo(t) => t.extract(tape),
            LevelTable::TwoTier(t) => t.extract(tape),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Array,
    Map,
}

pub struct Oram {
    config: OramConfig,
    tape: RandTape,
    mode: Mode,
    /// log2 of top capacity and of N.
    lg_top: u32,
    lg_n: u32,
    top: OBuf<Block>,
    top_fill: usize,
    /// Hash levels lg_top+1 ..= lg_n; entry i-lg_top-1 holds level i.
    levels: Vec<Option<LevelTable>>,
    live_keys: u64,
    accesses: u64,
    /// Rebuild events per level, for cadence instrumentation.
    pub rebuild_counts: Vec<u64>,
}

fn checked_config(mut config: OramConfig) -> OramConfig {
    config.capacity = config.capacity.max(8).next_power_of_two();
    let max_top = config.capacity / 2;
    config.top_capacity = config.top_capacity.clamp(4, max_top).next_power_of_two().min(max_top);
    config
}

impl Oram {
    /// Logical memory over addresses `0..capacity`, all words initialized
    /// to zero, or to the provided `(addr, value)` pairs.
    pub fn init(config: OramConfig, initial: &[(u64, Vec<u8>)]) -> Result<Oram> {
        let config = checked_config(config);
        let n = config.capacity;
        let mut values = vec![vec![0u8; config.value_width]; n as usize];
        let mut seen = std::collections::HashSet::new();
        for (addr, v) in initial {
            if *addr >= n {
                return Err(Error::Init(format!("address {addr} out of range for N={n}")));
            }
            if v.len() != config.value_width {
                return Err(Error::Init("value width mismatch".into()));
            }
            if !seen.insert(*addr) {
                return Err(Error::Init(format!("duplicate address {addr}")));
            }
            values[*addr as usize] = v.clone();
        }
        let blocks: Vec<Block> =
            values.into_iter().enumerate().map(|(a, v)| Block::real(a as i128 + 1, &v)).collect();
        Self::build_fresh(config, Mode::Array, blocks, n)
    }

    /// Empty key-value map over at most `capacity` distinct keys.
    pub fn new_map(config: OramConfig) -> Result<Oram> {
        let config = checked_config(config);
        let n = config.capacity;
        let blocks = vec![Block::dummy(config.value_width); n as usize];
        Self::build_fresh(config, Mode::Map, blocks, 0)
    }

    fn build_fresh(config: OramConfig, mode: Mode, blocks: Vec<Block>, live: u64) -> Result<Oram> {
        let lg_top = config.top_capacity.trailing_zeros();
        let lg_n = config.capacity.trailing_zeros();
        let mut tape = RandTape::from_seed(config.seed);
        let width = config.value_width;
        let mut oram = Oram {
            lg_top,
            lg_n,
            top: OBuf::new("oram.top", 0, vec![Block::dummy(width); config.top_capacity as usize]),
            top_fill: 0,
            levels: (lg_top + 1..=lg_n).map(|_| None).collect(),
            live_keys: live,
            accesses: 0,
            rebuild_counts: vec![0; (lg_n + 1) as usize],
            mode,
            config,
            tape: RandTape::from_seed(0),
        };
        // bottom level initialized occupied
        let bottom = oram.build_level(lg_n, blocks, &mut tape)?;
        let idx = oram.level_index(lg_n);
        oram.levels[idx] = Some(bottom);
        oram.tape = tape;
        Ok(oram)
    }

    fn level_index(&self, level: u32) -> usize {
        (level - self.lg_top - 1) as usize
    }

    fn scheme_for(&self, level: u32) -> LevelScheme {
        if let Some(Some(s)) = self.config.level_schemes.get(level as usize) {
            return *s;
        }
        // measured default on this class of hardware: bucket hashing at
        // every level. Two-tier and Cuckoo assignments come from the
        // planner via `level_schemes` when their measurements win.
        let cap = 1u64 << level;
        LevelScheme::Bucket { m: (cap / 64).max(1) }
    }

    fn build_level(&self, level: u32, blocks: Vec<Block>, tape: &mut RandTape) -> Result<LevelTable> {
        debug_assert_eq!(blocks.len() as u64, 1u64 << level);
        let delta = self.config.delta;
        match self.scheme_for(level) {
            LevelScheme::Bucket { m } => Ok(LevelTable::Bucket(BucketTable::build(
                blocks,
                m,
                delta,
                tape,
                level as u64,
            )?)),
            LevelScheme::Cuckoo { k } => Ok(LevelTable::Cuckoo(CuckooTable::build(
                blocks,
                k,
                delta,
                tape,
                level as u64,
            )?)),
            LevelScheme::TwoTier { eps_log2 } => Ok(LevelTable::TwoTier(TwoTierTable::build(
                Shuffled::attest(blocks),
                eps_log2,
                delta,
                tape,
                level as u64,
            )?)),
        }
    }

    pub fn capacity(&self) -> u64 {
        self.config.capacity
    }

    pub fn value_width(&self) -> usize {
        self.config.value_width
    }

    /// Occupancy vector (public state): top fill plus one flag per level.
    pub fn occupancy(&self) -> (usize, Vec<bool>) {
        (self.top_fill, self.levels.iter().map(|l| l.is_some()).collect())
    }

    /// Logical-memory access. Reads return the current word; writes store
    /// and return the new word. Both run the identical lookup cascade.
    pub fn access(&mut self, op: Op, addr: u64, value: &[u8]) -> Result<Vec<u8>> {
        if addr >= self.config.capacity {
            return Err(Error::Param(format!("address {addr} out of range")));
        }
        assert_eq!(self.mode, Mode::Array);
        if op == Op::Write && value.len() != self.config.value_width {
            return Err(Error::Param("value width mismatch".into()));
        }
        let key = addr as i128 + 1;
        let out = self.cascade(key, op == Op::Write, value)?;
        Ok(out.expect("array addresses are always resident"))
    }

    pub fn read(&mut self, addr: u64) -> Result<Vec<u8>> {
        let zero = vec![0u8; self.config.value_width];
        self.access(Op::Read, addr, &zero)
    }

    pub fn write(&mut self, addr: u64, value: &[u8]) -> Result<Vec<u8>> {
        self.access(Op::Write, addr, value)
    }

    /// Map get: the value last put under `key`, or None.
    pub fn map_get(&mut self, key: u64) -> Result<Option<Vec<u8>>> {
        assert_eq!(self.mode, Mode::Map);
        let zero = vec![0u8; self.config.value_width];
        self.cascade(key as i128 + 1, false, &zero)
    }

    /// Map put: stores `value` under `key`. Errors once the number of
    /// distinct live keys would exceed the capacity.
    pub fn map_put(&mut self, key: u64, value: &[u8]) -> Result<()> {
        assert_eq!(self.mode, Mode::Map);
        if value.len() != self.config.value_width {
            return Err(Error::Param("value width mismatch".into()));
        }
        self.cascade(key as i128 + 1, true, value)?;
        Ok(())
    }

    /// A full access cascade under a key that can match nothing: the same
    /// trace as a real access, used to pad fixed access schedules.
    pub fn dummy_access(&mut self) -> Result<()> {
        let zero = vec![0u8; self.config.value_width];
        self.cascade_inner(None, false, &zero)?;
        Ok(())
    }

    fn cascade(&mut self, key: i128, is_write: bool, value: &[u8]) -> Result<Option<Vec<u8>>> {
        self.cascade_inner(Some(key), is_write, value)
    }

    // The shared lookup cascade. `is_write` selects the stored payload
    // obliviously; the trace is identical for reads and writes.
    fn cascade_inner(
        &mut self,
        key_opt: Option<i128>,
        is_write: bool,
        value: &[u8],
    ) -> Result<Option<Vec<u8>>> {
        trace::public_param("oram.top_fill", self.top_fill as u64);
        let width = self.config.value_width;
        // a dummy access compares against a reserved key no block carries
        let key = key_opt.unwrap_or(i128::MIN + 7);
        let is_write = is_write && key_opt.is_some();
        let mut found = false;
        let mut res = Block::dummy(width);

        // top level: full linear scan, consuming a match
        for i in 0..self.top.len() {
            self.top.update(i, |b| {
                let hit = b.is_real() && b.key == key;
                res.cmov(b, hit);
                found |= hit;
                b.wipe(hit);
            });
        }

        // hash levels: real probe until found, dummy probes after
        #[cfg(debug_assertions)]
        let mut real_probes = 0usize;
        for idx in 0..self.levels.len() {
            if let Some(level) = self.levels[idx].as_mut() {
                let probe_key = if found || key_opt.is_none() { None } else { Some(key) };
                #[cfg(debug_assertions)]
                {
                    real_probes += probe_key.is_some() as usize;
                }
                if let Some(v) = level.lookup(probe_key) {
                    res = Block::real(key, &v);
                    found = true;
                }
            }
        }
        #[cfg(debug_assertions)]
        debug_assert!(real_probes <= self.levels.iter().filter(|l| l.is_some()).count());

        // merge in the write, then re-append the fresh copy to the top.
        // The candidate is assembled fieldwise: under a dummy access the
        // key is the reserved sentinel and the candidate is never selected.
        let mut stored = res.clone();
        let written = Block { key, aux: 0, value: value.to_vec().into() };
        stored.cmov(&written, is_write);
        let is_real_entry = found || is_write;
        let mut fresh = Block::dummy(width);
        fresh.cmov(&stored, is_real_entry);
        if self.mode == Mode::Map && is_write && !found {
            self.live_keys += 1;
            if self.live_keys > self.config.capacity {
                return Err(Error::Capacity);
            }
        }
        let slot = self.top_fill;
        self.top.write(slot, fresh);
        self.top_fill += 1;
        self.accesses += 1;
        if self.top_fill == self.top.len() {
            self.rebuild()?;
            self.top_fill = 0;
        }

        let out = oselect(is_write, &written, &res);
        if found || is_write {
            Ok(Some(out.value.into_vec()))
        } else {
            Ok(None)
        }
    }

    // Extract the top and every occupied level above the target, merge the
    // already-shuffled parts with intersperse, and rebuild one level down.
    // When the whole hierarchy is full the bottom level is merged in too,
    // the array is compacted to half, reshuffled and rebuilt at the bottom.
    fn rebuild(&mut self) -> Result<()> {
        let dbg = std::env::var_os("HORAM_DEBUG_REBUILD").is_some();
        let t_all = std::time::Instant::now();
        let mut tape = std::mem::replace(&mut self.tape, RandTape::from_seed(0));
        let target = (self.lg_top + 1..=self.lg_n)
            .find(|&i| self.levels[self.level_index(i)].is_none())
            .unwrap_or(self.lg_n);
        let at_bottom = target == self.lg_n;

        let mut top_buf = std::mem::replace(
            &mut self.top,
            OBuf::new(
                "oram.top",
                0,
                vec![Block::dummy(self.config.value_width); self.config.top_capacity as usize],
            ),
        );
        oshuffle(&mut top_buf, &mut tape);
        let mut merged = top_buf;

        let last = if at_bottom { self.lg_n } else { target - 1 };
        let t_ex = std::time::Instant::now();
        for i in self.lg_top + 1..=last {
            let idx = self.level_index(i);
            if let Some(level) = self.levels[idx].take() {
                let part = OBuf::new("oram.part", i as u64, level.extract(&mut tape));
                merged = ointersperse(merged, part, &mut tape);
            }
        }
        let ex_el = t_ex.elapsed();

        let cap = 1usize << target;
        let blocks = if at_bottom {
            // keep every live block, drop dummies, truncate to capacity
            ocompact(&mut merged, |b| b.is_real());
            merged.truncate(cap);
            oshuffle(&mut merged, &mut tape);
            merged.into_items()
        } else {
            let mut items = merged.into_items();
            debug_assert!(items.len() <= cap);
            while items.len() < cap {
                items.push(Block::dummy(self.config.value_width));
            }
            items
        };
        #[cfg(debug_assertions)]
        if self.mode == Mode::Array && at_bottom {
            // consume-on-lookup keeps exactly one live copy per address, so
            // a bottom rebuild must carry every address
            let reals = blocks.iter().filter(|b| b.is_real()).count() as u64;
            debug_assert_eq!(reals, self.config.capacity, "live blocks conserved");
        }
        let t_b = std::time::Instant::now();
        let table = self.build_level(target, blocks, &mut tape)?;
        if dbg {
            eprintln!(
                "rebuild L{target}: total={:?} extracts={:?} build={:?}",
                t_all.elapsed(),
                ex_el,
                t_b.elapsed()
            );
        }
        let idx = self.level_index(target);
        self.levels[idx] = Some(table);
        self.rebuild_counts[target as usize] += 1;
        self.tape = tape;
        Ok(())
    }

    /// Total real blocks across the hierarchy, inspected directly (debug
    /// bookkeeping, not part of the oblivious surface).
    pub fn live_count(&self) -> u64 {
        self.live_keys
    }

    pub fn access_count(&self) -> u64 {
        self.accesses
    }

    pub(crate) fn snapshot_impl(&self) -> Vec<u8> {
        use crate::snapshot as sn;
        let mut w = sn::Writer::new();
        w.u8(match self.mode {
            Mode::Array => 0,
            Mode::Map => 1,
        });
        w.u64(self.config.capacity);
        w.u64(self.config.value_width as u64);
        w.u64(self.config.top_capacity);
        w.f64(self.config.delta.log2);
        w.u64(self.config.seed);
        w.u32(self.config.level_schemes.len() as u32);
        for sch in &self.config.level_schemes {
            sn::write_scheme(&mut w, sch);
        }
        let (seed, word_pos, drawn) = self.tape.state();
        w.bytes(&seed);
        w.u128(word_pos);
        w.u64(drawn);
        w.u64(self.top_fill as u64);
        w.u64(self.accesses);
        w.u64(self.live_keys);
        w.u32(self.rebuild_counts.len() as u32);
        for c in &self.rebuild_counts {
            w.u64(*c);
        }
        w.blocks(self.top.items(), self.config.value_width);
        w.u32(self.levels.len() as u32);
        for level in &self.levels {
            match level {
                None => w.u8(0),
                Some(LevelTable::Bucket(t)) => {
                    w.u8(1);
                    sn::write_bucket(&mut w, t);
                }
                Some(LevelTable::Cuckoo(t)) => {
                    w.u8(2);
                    sn::write_cuckoo(&mut w, t);
                }
                Some(LevelTable::TwoTier(t)) => {
                    w.u8(3);
                    sn::write_twotier(&mut w, t);
                }
            }
        }
        w.buf
    }

    pub(crate) fn restore_impl(data: &[u8]) -> Result<Oram> {
        use crate::snapshot as sn;
        let mut r = sn::Reader::new(data)?;
        let mode = match r.u8()? {
            0 => Mode::Array,
            1 => Mode::Map,
            t => return Err(Error::Io(format!("bad mode tag {t}"))),
        };
        let capacity = r.u64()?;
        let value_width = r.u64()? as usize;
        let top_capacity = r.u64()?;
        let delta = LogProb { log2: r.f64()? };
        let seed = r.u64()?;
        let scheme_count = r.u32()? as usize;
        let mut level_schemes = Vec::with_capacity(scheme_count);
        for _ in 0..scheme_count {
            level_schemes.push(sn::read_scheme(&mut r)?);
        }
        let tape_seed = r.array32()?;
        let word_pos = r.u128()?;
        let drawn = r.u64()?;
        let top_fill = r.u64()? as usize;
        let accesses = r.u64()?;
        let live_keys = r.u64()?;
        let rc_len = r.u32()? as usize;
        let mut rebuild_counts = Vec::with_capacity(rc_len);
        for _ in 0..rc_len {
            rebuild_counts.push(r.u64()?);
        }
        let top_items = r.blocks(value_width)?;
        let level_count = r.u32()? as usize;
        let mut levels = Vec::with_capacity(level_count);
        for _ in 0..level_count {
            levels.push(match r.u8()? {
                0 => None,
                1 => Some(LevelTable::Bucket(sn::read_bucket(&mut r)?)),
                2 => Some(LevelTable::Cuckoo(sn::read_cuckoo(&mut r)?)),
                3 => Some(LevelTable::TwoTier(sn::read_twotier(&mut r)?)),
                t => return Err(Error::Io(format!("bad level tag {t}"))),
            });
        }
        if !r.done() {
            return Err(Error::Io("trailing bytes in snapshot".into()));
        }
        let config = OramConfig {
            capacity,
            value_width,
            top_capacity,
            delta,
            seed,
            level_schemes,
        };
        Ok(Oram {
            lg_top: top_capacity.trailing_zeros(),
            lg_n: capacity.trailing_zeros(),
            top: OBuf::new("oram.top", 0, top_items),
            top_fill,
            levels,
            live_keys,
            accesses,
            rebuild_counts,
            mode,
            config,
            tape: RandTape::restore(tape_seed, word_pos, drawn),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u64, width: usize, top: u64, seed: u64) -> OramConfig {
        let mut c = OramConfig::new(n, width);
        c.top_capacity = top;
        c.seed = seed;
        c
    }

    #[test]
    fn zero_initialized_reads() {
        let mut o = Oram::init(cfg(8, 8, 4, 1), &[]).unwrap();
        for addr in 0..8 {
            assert_eq!(o.read(addr).unwrap(), vec![0u8; 8]);
        }
    }

    #[test]
    fn write_then_read() {
        let mut o = Oram::init(cfg(16, 8, 4, 2), &[]).unwrap();
        let v = 0xdeadbeefu64.to_le_bytes().to_vec();
        assert_eq!(o.write(3, &v).unwrap(), v);
        assert_eq!(o.read(3).unwrap(), v);
    }

    #[test]
    fn init_rejects_duplicates_and_out_of_range() {
        let e = Oram::init(cfg(8, 8, 4, 3), &[(1, vec![0; 8]), (1, vec![1; 8])]);
        assert!(matches!(e, Err(Error::Init(_))));
        let e = Oram::init(cfg(8, 8, 4, 3), &[(100, vec![0; 8])]);
        assert!(matches!(e, Err(Error::Init(_))));
    }

    #[test]
    fn matches_array_oracle_across_rebuilds() {
        let n = 64u64;
        let mut o = Oram::init(cfg(n, 8, 8, 4), &[]).unwrap();
        let mut oracle = vec![vec![0u8; 8]; n as usize];
        let mut tape = RandTape::from_seed(99);
        for step in 0..(6 * n) {
            let addr = tape.draw_below(n);
            if tape.draw() & 1 == 0 {
                let v = step.to_le_bytes().to_vec();
                o.write(addr, &v).unwrap();
                oracle[addr as usize] = v;
            } else {
                assert_eq!(o.read(addr).unwrap(), oracle[addr as usize], "step {step}");
            }
        }
    }

    #[test]
    fn map_semantics() {
        let mut m = Oram::new_map(cfg(64, 8, 8, 5)).unwrap();
        assert_eq!(m.map_get(42).unwrap(), None);
        m.map_put(1_000_000_007, &7u64.to_le_bytes()).unwrap();
        assert_eq!(m.map_get(1_000_000_007).unwrap().unwrap(), 7u64.to_le_bytes());
        // overwrite
        m.map_put(1_000_000_007, &9u64.to_le_bytes()).unwrap();
        assert_eq!(m.map_get(1_000_000_007).unwrap().unwrap(), 9u64.to_le_bytes());
    }

    #[test]
    fn map_matches_reference() {
        let mut m = Oram::new_map(cfg(128, 8, 8, 6)).unwrap();
        let mut reference = std::collections::HashMap::new();
        let mut tape = RandTape::from_seed(7);
        for _ in 0..700 {
            let key = tape.draw_below(96);
            if tape.draw() & 1 == 0 {
                let v = tape.draw().to_le_bytes();
                m.map_put(key, &v).unwrap();
                reference.insert(key, v.to_vec());
            } else {
                assert_eq!(m.map_get(key).unwrap(), reference.get(&key).cloned());
            }
        }
    }

    #[test]
    fn map_capacity_error() {
        let mut m = Oram::new_map(cfg(8, 8, 4, 8)).unwrap();
        for k in 0..8 {
            m.map_put(k, &[0; 8]).unwrap();
        }
        assert!(matches!(m.map_put(99, &[0; 8]), Err(Error::Capacity)));
    }

    #[test]
    fn rebuild_cadence_matches_schedule() {
        let n = 128u64;
        let top = 8u64;
        let mut o = Oram::init(cfg(n, 8, top, 9), &[]).unwrap();
        let accesses = 4 * n;
        for a in 0..accesses {
            o.read(a % n).unwrap();
        }
        let epochs = accesses / top;
        // level i is rebuilt once per 2^(i - lg_top) epochs
        let lg_top = top.trailing_zeros();
        for i in (lg_top + 1)..n.trailing_zeros() {
            let expect = epochs >> (i - lg_top);
            let got = o.rebuild_counts[i as usize];
            assert!(
                got == expect || got + 1 == expect || got == expect + 1,
                "level {i}: got {got}, expected about {expect}"
            );
        }
    }

    #[test]
    fn access_shape_depends_only_on_public_state() {
        let n = 64u64;
        let mut o = Oram::init(cfg(n, 8, 8, 10), &[]).unwrap();
        // warm up to a mid-epoch state, then compare consecutive accesses
        for a in 0..3 {
            o.read(a).unwrap();
        }
        let occ_before = o.occupancy();
        let (_, t1) = trace::capture(|| o.read(17).unwrap());
        // restore equal public state: one access advanced top_fill; redo
        // at the same fill by fresh instance with identical schedule
        let mut o2 = Oram::init(cfg(n, 8, 8, 11), &[]).unwrap();
        for a in 0..3 {
            o2.read(a).unwrap();
        }
        assert_eq!(occ_before, o2.occupancy());
        let (_, t2) = trace::capture(|| o2.write(41, &7u64.to_le_bytes()).unwrap());
        assert!(
            trace::assert_shape_equal(&trace::shape_of(&t1), &trace::shape_of(&t2)),
            "read and write at equal public state must have equal shapes"
        );
    }
}
