//! Benchmark workloads emitting CSV: `workload,n,beta,threads,scheme,
//! metric,value,units`, with `#`-prefixed metadata lines carrying the
//! build id, machine fingerprint and seed. Timing values vary run to run;
//! row structure, ordering and counted metrics are deterministic under a
//! fixed seed.

use crate::error::{Error, Result};
use crate::oram::{Oram, OramConfig};
use crate::planner::{machine_fingerprint, measure_scheme, Scheme};
use crate::probcalc::LogProb;
use crate::tape::RandTape;
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub workload: String,
    pub n: u64,
    pub beta: u32,
    pub threads: u32,
    pub scheme: String,
    pub metric: String,
    pub value: f64,
    pub units: &'static str,
}

const UNITS: [&str; 3] = ["seconds", "microseconds_per_op", "bytes"];

pub fn to_csv(records: &[BenchRecord], seed: u64) -> String {
    let mut out = String::new();
    let build = option_env!("HORAM_BUILD_ID").unwrap_or("unreleased");
    let _ = writeln!(out, "# build={build}");
    let _ = writeln!(out, "# fingerprint={}", machine_fingerprint());
    let _ = writeln!(out, "# seed={seed}");
    let _ = writeln!(out, "workload,n,beta,threads,scheme,metric,value,units");
    for r in records {
        debug_assert!(UNITS.contains(&r.units));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6},{}",
            r.workload, r.n, r.beta, r.threads, r.scheme, r.metric, r.value, r.units
        );
    }
    out
}

/// Refuse configurations whose estimated footprint exceeds the cap.
fn guard_footprint(n: u64, beta: u32, cap_bytes: u64) -> Result<()> {
    // hierarchy slots total ~4N blocks; block = payload + key/aux overhead
    let per_block = beta as u64 + 40;
    let estimate = 4 * n * per_block;
    if estimate > cap_bytes {
        return Err(Error::Param(format!(
            "estimated footprint {estimate} bytes exceeds cap {cap_bytes}"
        )));
    }
    Ok(())
}

/// Amortized access time of the RAM at each size in `n_range`, measured as
/// total time of n random accesses divided by n.
pub fn bench_oram(
    n_range: &[u64],
    beta: u32,
    threads: u32,
    seed: u64,
    mem_cap: u64,
) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    for &n in n_range {
        guard_footprint(n, beta, mem_cap)?;
        let mut config = OramConfig::new(n, beta as usize);
        config.seed = seed;
        let mut oram = Oram::init(config, &[])?;
        let mut tape = RandTape::from_seed(seed ^ n);
        let ops = n;
        let start = Instant::now();
        for i in 0..ops {
            let addr = tape.draw_below(n);
            if i % 2 == 0 {
                let _ = oram.read(addr)?;
            } else {
                let v = vec![(i % 251) as u8; beta as usize];
                let _ = oram.write(addr, &v)?;
            }
        }
        let total = start.elapsed().as_secs_f64();
        out.push(BenchRecord {
            workload: "oram_access".into(),
            n,
            beta,
            threads,
            scheme: "hierarchy".into(),
            metric: "amortized_access".into(),
            value: total / ops as f64 * 1e6,
            units: "microseconds_per_op",
        });
        out.push(BenchRecord {
            workload: "oram_access".into(),
            n,
            beta,
            threads,
            scheme: "hierarchy".into(),
            metric: "total".into(),
            value: total,
            units: "seconds",
        });
    }
    Ok(out)
}

/// Overall time of each hash scheme on (build + t lookups + extract) per
/// size; the crossover bands between linear, bucket, two-tier and (for the
/// pile workload) Cuckoo come straight out of this table.
pub fn bench_hash_schemes(
    n_range: &[u64],
    t_factor: u64,
    beta: u32,
    threads: u32,
    mem_cap: u64,
) -> Result<Vec<BenchRecord>> {
    let delta = LogProb::pow2(-64);
    let mut out = Vec::new();
    for &n in n_range {
        guard_footprint(n, beta, mem_cap)?;
        let t = n.saturating_mul(t_factor).max(1);
        for scheme in [Scheme::Linear, Scheme::Bucket, Scheme::Cuckoo, Scheme::TwoTier] {
            let res = measure_scheme(n, t, beta, scheme, delta, None);
            if let Ok(cost) = res {
                out.push(BenchRecord {
                    workload: format!("hash_t{}n", t_factor),
                    n,
                    beta,
                    threads,
                    scheme: scheme.name().into(),
                    metric: "build_lookup_extract".into(),
                    value: cost,
                    units: "seconds",
                });
            }
        }
    }
    Ok(out)
}

/// Thread sweep at a fixed size; worker parallelism is capped per row.
pub fn bench_threads(
    n: u64,
    beta: u32,
    threads: &[u32],
    seed: u64,
    mem_cap: u64,
) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    for &t in threads {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(t as usize).build().map_err(
            |e| Error::Param(format!("thread pool: {e}")),
        )?;
        let recs = pool.install(|| bench_oram(&[n], beta, t, seed, mem_cap))?;
        out.extend(recs.into_iter().map(|mut r| {
            r.workload = "threads".into();
            r
        }));
    }
    Ok(out)
}
