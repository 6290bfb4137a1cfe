//! Oblivious stashless Cuckoo hash table: k PRFs over k disjoint sub-tables
//! of 2n entries total, one candidate slot per sub-table per key. Build
//! reduces to oblivious left-perfect matching between blocks and their
//! candidate entries; a lookup probes exactly k slots, one per sub-table;
//! extraction compacts the table to half and reshuffles. No stash.

use crate::block::{Block, OItem};
use crate::error::{Error, Result};
use crate::obuf::OBuf;
use crate::obucket::assign_synthetic_keys;
use crate::omatch::omatch_grouped;
use crate::oprims::{obin_place, ocompact, oselect, oshuffle};
use crate::prf::Prf;
use crate::probcalc::{matcher_rounds, LogProb};
use crate::tape::RandTape;
use crate::trace::{self, Derivation};

const BUILD_ATTEMPTS: usize = 3;

pub struct CuckooTable {
    entries: OBuf<Block>,
    prfs: Vec<Prf>,
    n: usize,
    sub_offset: Vec<u64>,
    sub_size: Vec<u64>,
    dummy_ctr: u64,
    width: usize,
    tag: u64,
    #[cfg(debug_assertions)]
    looked_up: std::collections::HashSet<i128>,
}

impl CuckooTable {
    /// Build over `blocks` (distinct real keys; dummies allowed) with `k`
    /// PRFs. A failed matching resamples every PRF key and rebuilds, up to
    /// three attempts. `delta` is carried for reporting; the failure bound
    /// itself is a property of (n, k).
    pub fn build(
        mut blocks: Vec<Block>,
        k: u32,
        _delta: LogProb,
        tape: &mut RandTape,
        tag: u64,
    ) -> Result<CuckooTable> {
        let n = blocks.len();
        assert!(n >= 1, "empty cuckoo table is not built");
        assert!(k >= 2);
        let width = blocks[0].width();
        let m = 2 * n as u64;
        let b = m / k as u64;
        let mut sub_offset = Vec::with_capacity(k as usize);
        let mut sub_size = Vec::with_capacity(k as usize);
        for g in 0..k as u64 {
            sub_offset.push(g * b);
            sub_size.push(if g == k as u64 - 1 { m - g * b } else { b });
        }
        let tau = matcher_rounds(n as u64);
        trace::public_param("ocuckoo.n", n as u64);
        trace::public_param("ocuckoo.k", k as u64);
        assign_synthetic_keys(&mut blocks);
        let input = OBuf::new("ocuckoo.input", tag, blocks);
        for _ in 0..BUILD_ATTEMPTS {
            let prfs: Vec<Prf> = (0..k).map(|_| Prf::sample(tape)).collect();
            let mut groups: Vec<Vec<(u32, u32)>> = Vec::with_capacity(k as usize);
            for g in 0..k as usize {
                let mut grp = Vec::with_capacity(n);
                for u in 0..n {
                    let key = input[u].key;
                    let v = sub_offset[g] + prfs[g].eval_mod(key, sub_size[g]);
                    grp.push((u as u32, v as u32));
                }
                groups.push(grp);
            }
            let matching = omatch_grouped(&groups, n, m as usize, tau);
            if !matching.is_left_perfect() {
                continue;
            }
            // destination slot per input position, routed obliviously
            let dests: Vec<u64> =
                matching.pairs.iter().map(|p| p.expect("left-perfect") as u64).collect();
            let mut staged: Vec<Block> = (0..n).map(|u| input.read(u)).collect();
            for (blk, &d) in staged.iter_mut().zip(&dests) {
                blk.aux = d;
            }
            let staged = OBuf::new("ocuckoo.staged", tag, staged);
            let placed = obin_place(&staged, |b| b.aux, m as usize, 1)?;
            let entries = OBuf::new("ocuckoo.entries", tag, placed.into_items());
            return Ok(CuckooTable {
                entries,
                prfs,
                n,
                sub_offset,
                sub_size,
                dummy_ctr: 0,
                width,
                tag,
                #[cfg(debug_assertions)]
                looked_up: Default::default(),
            });
        }
        Err(Error::MatchingIncomplete)
    }

    /// Reassemble from snapshot parts.
    pub fn from_parts(
        n: usize,
        prf_keys: Vec<crate::prf::PrfKey>,
        dummy_ctr: u64,
        width: usize,
        tag: u64,
        entries: Vec<Block>,
    ) -> CuckooTable {
        assert_eq!(entries.len(), 2 * n);
        let k = prf_keys.len() as u64;
        let m = 2 * n as u64;
        let b = m / k;
        let mut sub_offset = Vec::new();
        let mut sub_size = Vec::new();
        for g in 0..k {
            sub_offset.push(g * b);
            sub_size.push(if g == k - 1 { m - g * b } else { b });
        }
        CuckooTable {
            entries: OBuf::new("ocuckoo.entries", tag, entries),
            prfs: prf_keys.into_iter().map(Prf::new).collect(),
            n,
            sub_offset,
            sub_size,
            dummy_ctr,
            width,
            tag,
            #[cfg(debug_assertions)]
            looked_up: Default::default(),
        }
    }

    pub fn snapshot_parts(&self) -> (usize, Vec<crate::prf::PrfKey>, u64, usize, u64, &[Block]) {
        (
            self.n,
            self.prfs.iter().map(|p| p.key()).collect(),
            self.dummy_ctr,
            self.width,
            self.tag,
            self.entries.items(),
        )
    }

    pub fn capacity(&self) -> usize {
        self.n
    }

    pub fn hash_count(&self) -> u32 {
        self.prfs.len() as u32
    }

    pub fn value_width(&self) -> usize {
        self.width
    }

    /// Probe the k candidate entries, one per sub-table, and obliviously
    /// select the match; the matched entry is left as a dummy. A dummy
    /// lookup probes under the key `-(ctr+1)`.
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
        let mut found = false;
        let mut res = Block::dummy(self.width);
        for g in 0..self.prfs.len() {
            let idx =
                (self.sub_offset[g] + self.prfs[g].eval_mod(effective, self.sub_size[g])) as usize;
            self.entries.update_at(idx, Derivation::PrfDerived, |b| {
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

    /// Compact the 2n entries, truncate to half, and reshuffle.
    pub fn extract(self, tape: &mut RandTape) -> Vec<Block> {
        let mut entries = self.entries;
        ocompact(&mut entries, |b| b.is_real());
        entries.truncate(self.n);
        let mut out = OBuf::new("ocuckoo.extract", self.tag, entries.into_items());
        oshuffle(&mut out, tape);
        out.into_items()
    }
}
