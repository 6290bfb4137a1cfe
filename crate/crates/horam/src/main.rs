//! Command-line surface: oracle verification runs, trace-obliviousness
//! audits, probability tables, planner queries, benchmark sweeps and the
//! shortest-path application.

use clap::{Parser, Subcommand};
use horam::planner::{PlanContext, Planner, SchemeParams};
use horam::probcalc::{
    any_bin_overflow_prob, cuckoo_fail_prob, min_hash_count, tight_bucket_size, LogProb,
};
use horam::verify;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "horam", about = "hierarchical oblivious memory toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an oracle suite and exit nonzero on any failure.
    Verify {
        /// One of: oprims, tables, oram, trace.
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Scale knob, e.g. 2^12 (suite-specific meaning).
        #[arg(long, default_value = "2^10")]
        scale: String,
    },
    /// Benchmark sweeps emitting CSV.
    Bench {
        /// One of: oram, hash, threads.
        workload: String,
        #[arg(long, default_value = "2^10")]
        n_min: String,
        #[arg(long, default_value = "2^14")]
        n_max: String,
        /// Lookups per block of table lifetime (hash workload).
        #[arg(long, default_value_t = 1)]
        t_factor: u64,
        #[arg(long, default_value_t = 16)]
        beta: u32,
        /// Comma-separated worker caps for the threads workload.
        #[arg(long, default_value = "1")]
        threads: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Memory-footprint refusal cap in bytes.
        #[arg(long, default_value_t = 4 << 30)]
        mem_cap: u64,
    },
    /// Oblivious single-source shortest paths over an arc-list graph file.
    Sssp {
        graph: PathBuf,
        #[arg(long, default_value_t = 1)]
        source: u64,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        /// Output distances path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overflow/failure probability tables as CSV.
    Probcalc {
        /// `bucket` or `cuckoo`.
        table: String,
        #[arg(long, default_value = "2^13")]
        n: String,
        #[arg(long, default_value = "2^-64")]
        delta: String,
    },
    /// Query the hash-scheme planner.
    Plan {
        #[arg(long)]
        n: String,
        #[arg(long)]
        t: String,
        #[arg(long, default_value_t = 16)]
        beta: u32,
        #[arg(long, default_value = "2^-64")]
        delta: String,
        /// Plan for the overflow pile instead of a level.
        #[arg(long, default_value_t = false)]
        pile: bool,
        /// Measurement cache directory (defaults to $HORAM_CACHE_DIR).
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
}

fn parse_pow(s: &str) -> Result<u64, String> {
    if let Some(rest) = s.strip_prefix("2^") {
        let e: u32 = rest.parse().map_err(|e| format!("bad exponent in {s}: {e}"))?;
        if e >= 63 {
            return Err(format!("{s} out of range"));
        }
        Ok(1u64 << e)
    } else {
        s.parse().map_err(|e| format!("bad number {s}: {e}"))
    }
}

fn parse_delta(s: &str) -> Result<LogProb, String> {
    if let Some(rest) = s.strip_prefix("2^") {
        let e: i32 = rest.parse().map_err(|e| format!("bad delta {s}: {e}"))?;
        if e > 0 {
            return Err(format!("delta must be at most 1, got {s}"));
        }
        Ok(LogProb::pow2(e))
    } else {
        let v: f64 = s.parse().map_err(|e| format!("bad delta {s}: {e}"))?;
        if !(0.0..=1.0).contains(&v) || v == 0.0 {
            return Err(format!("delta must be in (0, 1], got {s}"));
        }
        Ok(LogProb { log2: v.log2() })
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report_table(reports: &[verify::SuiteReport]) -> bool {
    println!("{:<10} {:>10} {:>10} {:>8}", "suite", "cases", "failures", "status");
    let mut ok = true;
    for r in reports {
        ok &= r.ok();
        println!(
            "{:<10} {:>10} {:>10} {:>8}",
            r.name,
            r.cases,
            r.failures,
            if r.ok() { "pass" } else { "FAIL" }
        );
    }
    ok
}

fn run_verify(suite: &str, seed: u64, scale: u64) -> Result<bool, String> {
    let reports = match suite {
        "oprims" => vec![verify::verify_oprims(seed, (scale / 8).max(16) as usize)],
        "tables" => vec![verify::verify_tables(seed, (scale / 16).max(24) as usize, 1024)],
        "oram" => {
            let n = scale.clamp(64, 1 << 16);
            vec![
                verify::verify_oram(seed, 3, n, 4 * n),
                verify::verify_map(seed ^ 1, n, 2 * n),
            ]
        }
        "trace" => vec![verify::verify_trace(seed, 12)],
        other => return Err(format!("unknown suite `{other}`")),
    };
    Ok(report_table(&reports))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Cmd::Verify { suite, seed, scale } => {
            let scale = parse_pow(&scale)?;
            run_verify(&suite, seed, scale)
        }
        Cmd::Bench { workload, n_min, n_max, t_factor, beta, threads, seed, out, mem_cap } => {
            let lo = parse_pow(&n_min)?;
            let hi = parse_pow(&n_max)?;
            if lo > hi || !lo.is_power_of_two() || !hi.is_power_of_two() {
                return Err("n range must be ascending powers of two".into());
            }
            let range: Vec<u64> = {
                let mut v = vec![];
                let mut n = lo;
                while n <= hi {
                    v.push(n);
                    n *= 2;
                }
                v
            };
            let recs = match workload.as_str() {
                "oram" => horam::bench::bench_oram(&range, beta, 1, seed, mem_cap),
                "hash" => horam::bench::bench_hash_schemes(&range, t_factor, beta, 1, mem_cap),
                "threads" => {
                    let caps: Vec<u32> = threads
                        .split(',')
                        .map(|t| t.trim().parse().map_err(|e| format!("bad thread cap: {e}")))
                        .collect::<Result<_, _>>()?;
                    horam::bench::bench_threads(hi, beta, &caps, seed, mem_cap)
                }
                other => return Err(format!("unknown workload `{other}`")),
            }
            .map_err(|e| e.to_string())?;
            emit(&out, &horam::bench::to_csv(&recs, seed)).map_err(|e| e.to_string())?;
            Ok(true)
        }
        Cmd::Sssp { graph, source, seed, out } => {
            let text = std::fs::read_to_string(&graph).map_err(|e| e.to_string())?;
            let g = horam::sssp::Graph::parse(&text).map_err(|e| e.to_string())?;
            if source < 1 || source > g.vertices as u64 {
                return Err(format!("source {source} out of range (1-based)"));
            }
            let dist = horam::sssp::oblivious_sssp(&g, source as usize - 1, seed)
                .map_err(|e| e.to_string())?;
            emit(&out, &horam::sssp::format_distances(&dist)).map_err(|e| e.to_string())?;
            Ok(true)
        }
        Cmd::Probcalc { table, n, delta } => {
            let delta = parse_delta(&delta)?;
            match table.as_str() {
                "bucket" => {
                    let n = parse_pow(&n)?;
                    println!("n,m,ell,log2_prob");
                    let mut m = 1u64;
                    while m <= n {
                        let ell = tight_bucket_size(n, m, delta);
                        let p = any_bin_overflow_prob(n, m, ell);
                        println!("{n},{m},{ell},{:.6}", p.log2);
                        m *= 2;
                    }
                }
                "cuckoo" => {
                    println!("n,k,log2_fail");
                    for e in 6..=20u32 {
                        let n = 1u64 << e;
                        for k in 3..=6u32 {
                            let f = cuckoo_fail_prob(n, k, 2 * n);
                            println!("{n},{k},{:.6}", f.log2);
                        }
                    }
                }
                other => return Err(format!("unknown probcalc table `{other}`")),
            }
            Ok(true)
        }
        Cmd::Plan { n, t, beta, delta, pile, cache_dir } => {
            let n = parse_pow(&n)?;
            let t = parse_pow(&t)?;
            let delta = parse_delta(&delta)?;
            let dir = cache_dir.or_else(|| std::env::var_os("HORAM_CACHE_DIR").map(PathBuf::from));
            let mut planner = Planner::new(dir, delta);
            let ctx = if pile { PlanContext::OverflowPile } else { PlanContext::Level };
            let choice = planner.plan(n, t, beta, ctx).map_err(|e| e.to_string())?;
            println!("n,t,beta,scheme,params,cost_seconds");
            let params = match choice.params {
                SchemeParams::Linear => "-".to_string(),
                SchemeParams::Bucket { m, ell } => format!("m={m};ell={ell}"),
                SchemeParams::Cuckoo { k, tau } => format!("k={k};tau={tau}"),
                SchemeParams::TwoTier { eps_log2 } => format!("eps=2^-{eps_log2}"),
            };
            println!(
                "{n},{t},{beta},{},{params},{:.6}",
                choice.scheme.name(),
                choice.measured_cost
            );
            let _ = min_hash_count(n, delta); // warm the shared caches
            Ok(true)
        }
    }
}
