//! Empirical hash-scheme planner. Asymptotics only rank the schemes
//! roughly; the actual winner per level size depends on the machine and
//! block size, so the planner measures candidate schemes on a pinned probe
//! workload (build + min(t, 4n) lookups + extract), caches the timings per
//! machine fingerprint, and picks the cheapest eligible scheme:
//!
//! * linear scan competes only at small sizes (up to 1024 blocks);
//! * stashless Cuckoo is a candidate only for the overflow pile;
//! * once a two-tier table beats bucket hashing at some level, deeper
//!   levels drop bucket hashing from consideration.

use crate::block::{Block, OItem};
use crate::error::Result;
use crate::obucket::{plan_bucket_count, BucketTable};
use crate::ocuckoo::CuckooTable;
use crate::otwotier::{plan_epsilon, Shuffled, TwoTierTable};
use crate::probcalc::{bucket_sizing, cuckoo_sizing, LogProb};
use crate::tape::RandTape;
use siphasher::sip::SipHasher24;
use std::collections::HashMap;
use std::hash::Hasher;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Linear,
    Bucket,
    Cuckoo,
    TwoTier,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Linear => "linear",
            Scheme::Bucket => "bucket",
            Scheme::Cuckoo => "cuckoo",
            Scheme::TwoTier => "twotier",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SchemeParams {
    Linear,
    Bucket { m: u64, ell: u64 },
    Cuckoo { k: u32, tau: u32 },
    TwoTier { eps_log2: u32 },
}

#[derive(Debug, Clone, Copy)]
pub struct SchemeChoice {
    pub scheme: Scheme,
    pub params: SchemeParams,
    pub measured_cost: f64,
}

/// Where the table will live; prunes candidates per the routing rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanContext {
    Level,
    OverflowPile,
}

const LINEAR_MAX: u64 = 1024;

/// Hash of the CPU model string and core count; planner measurements are
/// only comparable on the machine that produced them.
pub fn machine_fingerprint() -> String {
    let model = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .map(|l| l.split(':').nth(1).unwrap_or("").trim().to_string())
        })
        .unwrap_or_else(|| "unknown-cpu".to_string());
    let cores = std::thread::available_parallelism().map(|c| c.get()).unwrap_or(1);
    let mut h = SipHasher24::new_with_key(&[0x5eu8; 16]);
    h.write(model.as_bytes());
    h.write(&cores.to_le_bytes());
    format!("{:016x}", h.finish())
}

pub struct Planner {
    pub delta: LogProb,
    fingerprint: String,
    cache_dir: Option<PathBuf>,
    mem: HashMap<(u64, u32, &'static str), f64>,
    bucket_m: HashMap<(u64, u32), u64>,
    /// Set once a two-tier table beats bucket hashing; deeper levels then
    /// skip the bucket candidate.
    pub exclude_bucket: bool,
    warned_unwritable: bool,
}

impl Planner {
    /// `cache_dir`: directory for plain-text measurement caches; `None`
    /// keeps everything in memory. The `HORAM_CACHE_DIR` environment
    /// variable supplies a default at the CLI layer.
    pub fn new(cache_dir: Option<PathBuf>, delta: LogProb) -> Planner {
        let mut p = Planner {
            delta,
            fingerprint: machine_fingerprint(),
            cache_dir,
            mem: HashMap::new(),
            bucket_m: HashMap::new(),
            exclude_bucket: false,
            warned_unwritable: false,
        };
        p.load_caches();
        p
    }

    fn cache_path(&self, file: &str) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(file))
    }

    fn load_caches(&mut self) {
        if let Some(path) = self.cache_path("planner.cache") {
            if let Ok(text) = std::fs::read_to_string(&path) {
                for line in text.lines() {
                    // n beta scheme fingerprint cost_seconds
                    let f: Vec<&str> = line.split_whitespace().collect();
                    let parsed = (|| {
                        if f.len() != 5 {
                            return None;
                        }
                        let n: u64 = f[0].parse().ok()?;
                        let beta: u32 = f[1].parse().ok()?;
                        let scheme = match f[2] {
                            "linear" => "linear",
                            "bucket" => "bucket",
                            "cuckoo" => "cuckoo",
                            "twotier" => "twotier",
                            _ => return None,
                        };
                        let cost: f64 = f[4].parse().ok()?;
                        Some((n, beta, scheme, f[3].to_string(), cost))
                    })();
                    match parsed {
                        Some((n, beta, scheme, fp, cost)) if fp == self.fingerprint => {
                            self.mem.insert((n, beta, scheme), cost);
                        }
                        Some(_) => {}
                        None => eprintln!("planner cache: skipping corrupt line: {line}"),
                    }
                }
            }
        }
        if let Some(path) = self.cache_path("bucket_m.cache") {
            if let Ok(text) = std::fs::read_to_string(&path) {
                for line in text.lines() {
                    let f: Vec<&str> = line.split_whitespace().collect();
                    if f.len() == 4 && f[2] == self.fingerprint {
                        if let (Ok(n), Ok(beta), Ok(m)) = (f[0].parse(), f[1].parse(), f[3].parse())
                        {
                            self.bucket_m.insert((n, beta), m);
                            continue;
                        }
                    }
                    eprintln!("bucket-m cache: skipping corrupt line: {line}");
                }
            }
        }
    }

    pub fn cache_get(&self, n: u64, beta: u32, scheme: Scheme) -> Option<f64> {
        self.mem.get(&(n, beta, scheme.name())).copied()
    }

    pub fn cache_put(&mut self, n: u64, beta: u32, scheme: Scheme, cost: f64) {
        self.mem.insert((n, beta, scheme.name()), cost);
        if let Some(path) = self.cache_path("planner.cache") {
            let line = format!("{n} {beta} {} {} {cost:.6}\n", scheme.name(), self.fingerprint);
            let ok = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .and_then(|mut f| f.write_all(line.as_bytes()));
            if ok.is_err() && !self.warned_unwritable {
                eprintln!("planner cache unwritable at {}; keeping in-memory", path.display());
                self.warned_unwritable = true;
            }
        }
    }

    fn bucket_m_put(&mut self, n: u64, beta: u32, m: u64) {
        self.bucket_m.insert((n, beta), m);
        if let Some(path) = self.cache_path("bucket_m.cache") {
            let line = format!("{n} {beta} {} {m}\n", self.fingerprint);
            let _ = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .and_then(|mut f| f.write_all(line.as_bytes()));
        }
    }

    /// Choose the cheapest eligible scheme for a table of `n` blocks of
    /// `beta` bytes serving `t` lifetime lookups. Deterministic given the
    /// cached measurements.
    pub fn plan(&mut self, n: u64, t: u64, beta: u32, ctx: PlanContext) -> Result<SchemeChoice> {
        assert!(t >= 1);
        let mut best: Option<SchemeChoice> = None;
        fn consider(c: SchemeChoice, best: &mut Option<SchemeChoice>) {
            if best.map(|b| c.measured_cost < b.measured_cost).unwrap_or(true) {
                *best = Some(c);
            }
        }

        if n <= LINEAR_MAX {
            let cost = self.measured(n, t, beta, Scheme::Linear)?;
            consider(
                SchemeChoice {
                    scheme: Scheme::Linear,
                    params: SchemeParams::Linear,
                    measured_cost: cost,
                },
                &mut best,
            );
        }
        if !self.exclude_bucket {
            let m = self.bucket_count(n, t, beta)?;
            let sizing = bucket_sizing(n.max(1), m, self.delta);
            let cost = self.measured(n, t, beta, Scheme::Bucket)?;
            consider(
                SchemeChoice {
                    scheme: Scheme::Bucket,
                    params: SchemeParams::Bucket { m, ell: sizing.ell },
                    measured_cost: cost,
                },
                &mut best,
            );
        }
        if ctx == PlanContext::OverflowPile {
            if let Ok(sizing) = cuckoo_sizing(n.max(1), self.delta) {
                let cost = self.measured(n, t, beta, Scheme::Cuckoo)?;
                consider(
                    SchemeChoice {
                        scheme: Scheme::Cuckoo,
                        params: SchemeParams::Cuckoo { k: sizing.k, tau: sizing.tau },
                        measured_cost: cost,
                    },
                    &mut best,
                );
            }
        }
        if ctx == PlanContext::Level {
            if let Ok(eps) = self.twotier_eps(n, t, beta) {
                let cost = self.measured(n, t, beta, Scheme::TwoTier)?;
                let choice = SchemeChoice {
                    scheme: Scheme::TwoTier,
                    params: SchemeParams::TwoTier { eps_log2: eps },
                    measured_cost: cost,
                };
                if let Some(b) = best {
                    if b.scheme == Scheme::Bucket && choice.measured_cost < b.measured_cost {
                        self.exclude_bucket = true;
                    }
                }
                consider(choice, &mut best);
            }
        }
        Ok(best.expect("linear or bucket is always eligible"))
    }

    fn measured(&mut self, n: u64, t: u64, beta: u32, scheme: Scheme) -> Result<f64> {
        if let Some(c) = self.cache_get(n, beta, scheme) {
            return Ok(c);
        }
        let c = measure_scheme(
            n,
            t,
            beta,
            scheme,
            self.delta,
            self.bucket_m.get(&(n, beta)).copied(),
        )?;
        self.cache_put(n, beta, scheme, c);
        Ok(c)
    }

    fn bucket_count(&mut self, n: u64, t: u64, beta: u32) -> Result<u64> {
        if let Some(m) = self.bucket_m.get(&(n, beta)) {
            return Ok(*m);
        }
        let delta = self.delta;
        let mut sampler =
            |m: u64| measure_bucket_at(n, t, beta, m, delta).unwrap_or(f64::INFINITY);
        let m = plan_bucket_count(n.max(1), &mut sampler);
        self.bucket_m_put(n, beta, m);
        Ok(m)
    }

    fn twotier_eps(&mut self, n: u64, t: u64, beta: u32) -> Result<u32> {
        let delta = self.delta;
        let mut sampler =
            |j: u32| measure_twotier_at(n, t, beta, j, delta).unwrap_or(f64::INFINITY);
        plan_epsilon(n, &mut sampler)
    }
}

fn probe_blocks(n: u64, beta: u32) -> Vec<Block> {
    (1..=n as i128).map(|k| Block::real(k, &vec![0xa5u8; beta as usize])).collect()
}

/// Probe-lookup budget: the lifetime count capped at 4n.
fn probe_lookups(n: u64, t: u64) -> u64 {
    t.min(4 * n).max(1)
}

fn measure_bucket_at(n: u64, t: u64, beta: u32, m: u64, delta: LogProb) -> Result<f64> {
    let mut tape = RandTape::from_seed(0x6d);
    let start = Instant::now();
    let mut table = BucketTable::build(probe_blocks(n, beta), m, delta, &mut tape, u64::MAX)?;
    // alternate real and dummy probes; once the reals are consumed the
    // rest of the lifetime is dummy probes, as in a live level
    let mut next_real = 1u64;
    for i in 0..probe_lookups(n, t) {
        if i % 2 == 0 && next_real <= n {
            let _ = table.lookup(Some(next_real as i128));
            next_real += 1;
        } else {
            let _ = table.lookup(None);
        }
    }
    let _ = table.extract(&mut tape);
    Ok(start.elapsed().as_secs_f64())
}

fn measure_twotier_at(n: u64, t: u64, beta: u32, eps_log2: u32, delta: LogProb) -> Result<f64> {
    let mut tape = RandTape::from_seed(0x7e);
    let start = Instant::now();
    let input = Shuffled::from_shuffler(probe_blocks(n, beta), &mut tape);
    let mut table = TwoTierTable::build(input, eps_log2, delta, &mut tape, u64::MAX)?;
    for i in 0..probe_lookups(n, t).min(2 * n) {
        let key = i / 2 % n + 1;
        if i % 2 == 0 {
            let _ = table.lookup(Some(key as i128));
        } else {
            let _ = table.lookup(None);
        }
    }
    let _ = table.extract(&mut tape);
    Ok(start.elapsed().as_secs_f64())
}

/// One timed probe of a scheme on the pinned workload.
pub fn measure_scheme(
    n: u64,
    t: u64,
    beta: u32,
    scheme: Scheme,
    delta: LogProb,
    bucket_m: Option<u64>,
) -> Result<f64> {
    match scheme {
        Scheme::Linear => {
            let mut tape = RandTape::from_seed(0x4c);
            let start = Instant::now();
            let mut table = LinearTable::build(probe_blocks(n, beta));
            let mut next_real = 1u64;
            for i in 0..probe_lookups(n, t) {
                if i % 2 == 0 && next_real <= n {
                    let _ = table.lookup(Some(next_real as i128));
                    next_real += 1;
                } else {
                    let _ = table.lookup(None);
                }
            }
            let _ = table.extract(&mut tape);
            Ok(start.elapsed().as_secs_f64())
        }
        Scheme::Bucket => {
            let m = bucket_m.unwrap_or((n / 64).max(1));
            measure_bucket_at(n, t, beta, m, delta)
        }
        Scheme::Cuckoo => {
            let mut tape = RandTape::from_seed(0x5c);
            let sizing = cuckoo_sizing(n.max(1), delta)?;
            let start = Instant::now();
            let mut table =
                CuckooTable::build(probe_blocks(n, beta), sizing.k, delta, &mut tape, u64::MAX)?;
            let mut next_real = 1u64;
            for i in 0..probe_lookups(n, t) {
                if i % 2 == 0 && next_real <= n {
                    let _ = table.lookup(Some(next_real as i128));
                    next_real += 1;
                } else {
                    let _ = table.lookup(None);
                }
            }
            let _ = table.extract(&mut tape);
            Ok(start.elapsed().as_secs_f64())
        }
        Scheme::TwoTier => {
            let mut sampler =
                |j: u32| measure_twotier_at(n, t, beta, j, delta).unwrap_or(f64::INFINITY);
            let j = plan_epsilon(n, &mut sampler)?;
            measure_twotier_at(n, t, beta, j, delta)
        }
    }
}

/// Plain sequential-scan table: the baseline for small levels. Every
/// lookup touches every slot; build is a copy; extract reshuffles.
pub struct LinearTable {
    slots: crate::obuf::OBuf<Block>,
    dummy_ctr: u64,
    width: usize,
}

impl LinearTable {
    pub fn build(blocks: Vec<Block>) -> LinearTable {
        let width = blocks.first().map(|b| b.width()).unwrap_or(0);
        LinearTable {
            slots: crate::obuf::OBuf::new("linear.slots", 0, blocks),
            dummy_ctr: 0,
            width,
        }
    }

    pub fn lookup(&mut self, key: Option<i128>) -> Option<Vec<u8>> {
        let effective = match key {
            Some(k) => k,
            None => {
                self.dummy_ctr += 1;
                -(self.dummy_ctr as i128)
            }
        };
        let mut found = false;
        let mut res = Block::dummy(self.width);
        for i in 0..self.slots.len() {
            self.slots.update(i, |b| {
                let hit = b.is_real() && b.key == effective;
                res.cmov(b, hit);
                found |= hit;
                b.wipe(hit);
            });
        }
        if found && key.is_some() {
            Some(res.value.into_vec())
        } else {
            None
        }
    }

    pub fn extract(self, tape: &mut RandTape) -> Vec<Block> {
        let mut buf = self.slots;
        crate::oprims::oshuffle(&mut buf, tape);
        buf.into_items()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d64() -> LogProb {
        LogProb::pow2(-64)
    }

    #[test]
    fn cache_roundtrip_and_corruption() {
        let dir = std::env::temp_dir().join(format!("horam-planner-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        {
            let mut p = Planner::new(Some(dir.clone()), d64());
            p.cache_put(128, 16, Scheme::Bucket, 0.25);
            assert_eq!(p.cache_get(128, 16, Scheme::Bucket), Some(0.25));
        }
        // corrupt line is skipped, valid one survives
        std::fs::OpenOptions::new()
            .append(true)
            .open(dir.join("planner.cache"))
            .unwrap()
            .write_all(b"not a valid line\n")
            .unwrap();
        let p = Planner::new(Some(dir.clone()), d64());
        assert_eq!(p.cache_get(128, 16, Scheme::Bucket), Some(0.25));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn unwritable_cache_degrades_to_memory() {
        let mut p = Planner::new(Some(PathBuf::from("/nonexistent-dir/deep")), d64());
        p.cache_put(64, 16, Scheme::Linear, 0.5);
        assert_eq!(p.cache_get(64, 16, Scheme::Linear), Some(0.5));
    }

    #[test]
    fn small_levels_prefer_linear() {
        let mut p = Planner::new(None, d64());
        let choice = p.plan(64, 64, 16, PlanContext::Level).unwrap();
        assert_eq!(choice.scheme, Scheme::Linear);
    }

    #[test]
    fn cuckoo_only_in_overflow_context() {
        let mut p = Planner::new(None, d64());
        // seed costs so no measurement happens; cuckoo made artificially free
        for s in [Scheme::Linear, Scheme::Bucket, Scheme::Cuckoo, Scheme::TwoTier] {
            p.cache_put(512, 16, s, if s == Scheme::Cuckoo { 0.0001 } else { 1.0 });
        }
        let level = p.plan(512, 512, 16, PlanContext::Level).unwrap();
        assert_ne!(level.scheme, Scheme::Cuckoo, "cuckoo must not win outside the pile");
        let pile = p.plan(512, 512, 16, PlanContext::OverflowPile).unwrap();
        assert_eq!(pile.scheme, Scheme::Cuckoo);
    }

    #[test]
    fn twotier_win_excludes_bucket_downstream() {
        let mut p = Planner::new(None, d64());
        let n = crate::otwotier::TWO_TIER_C << 2;
        for s in [Scheme::Bucket, Scheme::TwoTier] {
            p.cache_put(n, 16, s, if s == Scheme::TwoTier { 0.1 } else { 1.0 });
        }
        // bucket-count cache primed so no golden-section measurement runs
        p.bucket_m.insert((n, 16), 8);
        let c = p.plan(n, n, 16, PlanContext::Level).unwrap();
        assert_eq!(c.scheme, Scheme::TwoTier);
        assert!(p.exclude_bucket);
        let n2 = n * 4;
        p.cache_put(n2, 16, Scheme::TwoTier, 0.2);
        let c2 = p.plan(n2, n2, 16, PlanContext::Level).unwrap();
        assert_eq!(c2.scheme, Scheme::TwoTier);
    }

    #[test]
    fn linear_table_scan_semantics() {
        let mut t = LinearTable::build(probe_blocks(16, 8));
        assert_eq!(t.lookup(Some(5)).unwrap(), vec![0xa5; 8]);
        assert_eq!(t.lookup(Some(5)), None, "consumed");
        assert_eq!(t.lookup(None), None);
    }
}
