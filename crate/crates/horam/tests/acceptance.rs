//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with its measured runtime. Tolerances and scales are pinned in
//! code. Run with `cargo test --test acceptance -- --nocapture` to see the
//! summary lines.

use horam::block::Block;
use horam::obucket::BucketTable;
use horam::ocuckoo::CuckooTable;
use horam::omatch::omatch;
use horam::oram::{Oram, OramConfig};
use horam::otwotier::{Shuffled, TwoTierTable};
use horam::planner::LinearTable;
use horam::probcalc::{cuckoo_fail_prob, min_hash_count, tight_bucket_size, LogProb};
use horam::sssp::{oblivious_sssp, plain_sssp, Graph};
use horam::tape::RandTape;
use horam::trace;
use horam::verify::{verify_oram, verify_tables, verify_trace, HtOracle, HtOut};
use std::time::Instant;

fn d64() -> LogProb {
    LogProb::pow2(-64)
}

fn report(criterion: &str, pass: bool, detail: &str, started: Instant) {
    println!(
        "acceptance {criterion}: {} ({detail}; {:.1?})",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed()
    );
    assert!(pass, "{criterion}: {detail}");
}

#[test]
fn criterion_1_probability_fixtures() {
    let t0 = Instant::now();
    let pins =
        [(2u64, 4511u64), (16, 731), (128, 155)].map(|(m, e)| (m, e, tight_bucket_size(8192, m, d64())));
    let ok = pins.iter().all(|&(_, expect, got)| got == expect);
    let within = t0.elapsed().as_secs_f64() < 30.0;
    report(
        "1 (probability fixtures)",
        ok && within,
        &format!("{pins:?}, exact, no convention flip needed"),
        t0,
    );
}

#[test]
fn criterion_2_cuckoo_threshold() {
    let t0 = Instant::now();
    let flip = cuckoo_fail_prob(1 << 15, 3, 1 << 16);
    let mut ks = vec![];
    let mut ok = flip.clamped_log2() <= -64.0;
    for e in 6..=20u32 {
        let k = min_hash_count(1 << e, d64()).expect("sizing");
        ks.push(k);
        ok &= (3..=6).contains(&k);
    }
    let within = t0.elapsed().as_secs_f64() < 120.0;
    report(
        "2 (cuckoo threshold)",
        ok && within,
        &format!("fail(2^15,3)=2^{:.1}, k over 2^6..2^20 = {ks:?}", flip.log2),
        t0,
    );
}

mod hk {
    /// Hopcroft-Karp maximum matching size, the independent oracle.
    pub fn max_matching(edges: &[(u32, u32)], n_left: usize, n_right: usize) -> usize {
        let mut adj = vec![vec![]; n_left];
        for &(u, v) in edges {
            adj[u as usize].push(v as usize);
        }
        let mut match_l = vec![usize::MAX; n_left];
        let mut match_r = vec![usize::MAX; n_right];
        loop {
            let mut dist = vec![usize::MAX; n_left];
            let mut queue: std::collections::VecDeque<usize> = (0..n_left)
                .filter(|&u| match_l[u] == usize::MAX)
                .inspect(|&u| dist[u] = 0)
                .collect();
            let mut found = false;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    let w = match_r[v];
                    if w == usize::MAX {
                        found = true;
                    } else if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                }
            }
            if !found {
                break;
            }
            fn dfs(
                u: usize,
                adj: &[Vec<usize>],
                dist: &mut [usize],
                ml: &mut [usize],
                mr: &mut [usize],
            ) -> bool {
                for i in 0..adj[u].len() {
                    let v = adj[u][i];
                    let w = mr[v];
                    if w == usize::MAX || (dist[w] == dist[u] + 1 && dfs(w, adj, dist, ml, mr)) {
                        ml[u] = v;
                        mr[v] = u;
                        return true;
                    }
                }
                dist[u] = usize::MAX;
                false
            }
            let mut progress = false;
            for u in 0..n_left {
                if match_l[u] == usize::MAX && dfs(u, &adj, &mut dist, &mut match_l, &mut match_r) {
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }
        match_l.iter().filter(|&&v| v != usize::MAX).count()
    }
}

#[test]
fn criterion_3_matching_oracle() {
    let t0 = Instant::now();
    let mut tape = RandTape::from_seed(33);
    let mut mismatches = 0;
    for trial in 0..500 {
        let n_left = 2 + (tape.draw_below(63) as usize);
        let k = 3 + (trial % 2) as usize;
        let n_right = 2 * n_left;
        let b = n_right / k;
        let mut edges = vec![];
        for g in 0..k {
            let size = if g == k - 1 { n_right - b * (k - 1) } else { b };
            for u in 0..n_left {
                edges.push((u as u32, (g * b) as u32 + tape.draw_below(size as u64) as u32));
            }
        }
        let lg = 64 - (n_left as u64 - 1).leading_zeros(); // ceil(log2 n_left)
        let tau = 3 * lg + 1;
        let m = omatch(&edges, n_left, n_right, tau);
        let oracle_perfect = hk::max_matching(&edges, n_left, n_right) == n_left;
        if oracle_perfect && !m.is_left_perfect() {
            mismatches += 1;
        }
    }
    let within = t0.elapsed().as_secs_f64() < 60.0;
    report(
        "3 (matching oracle equivalence)",
        mismatches == 0 && within,
        &format!("500 graphs, {mismatches} mismatches"),
        t0,
    );
}

#[test]
fn criterion_4_ht_oracle_equivalence() {
    let t0 = Instant::now();
    let mut failures = 0usize;
    let mut tape = RandTape::from_seed(44);

    // 1000 schedules per table; bucket and cuckoo at n <= 2^10, two-tier
    // at its admissible power-of-two sizes up to 2^14
    for table_kind in 0..3 {
        for s in 0..1000u64 {
            let n = match table_kind {
                0 | 1 => 4 + tape.draw_below(1021) as usize,
                _ => match s % 100 {
                    99 => 1 << 14,
                    97 | 98 => 1 << 13,
                    _ => 1 << 12,
                },
            };
            failures += run_schedule(table_kind, n, tape.draw(), 20_000 + s);
        }
    }

    // recurrent-lookup rule surfaces in debug builds
    #[cfg(debug_assertions)]
    {
        let mut t = BucketTable::build(
            vec![Block::real(5, &[1u8; 8])],
            1,
            d64(),
            &mut tape,
            29_999,
        )
        .unwrap();
        t.lookup(Some(5));
        let hook = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        let caught =
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| t.lookup(Some(5)))).is_err();
        std::panic::set_hook(hook);
        if !caught {
            failures += 1;
        }
        let mut oracle = HtOracle::build(&[Block::real(5, &[1u8; 8])]);
        oracle.lookup(Some(5));
        if oracle.lookup(Some(5)) != HtOut::Fail {
            failures += 1;
        }
    }

    let within = t0.elapsed().as_secs_f64() < 600.0;
    report(
        "4 (hash-table oracle equivalence)",
        failures == 0 && within,
        &format!("3x1000 schedules, {failures} failures"),
        t0,
    );
}

// One random build/lookup/extract schedule against the reference map.
fn run_schedule(kind: usize, n: usize, seed: u64, tag: u64) -> usize {
    let mut tape = RandTape::from_seed(seed);
    let width = 8;
    let mut fails = 0;
    let mut blocks = Vec::with_capacity(n);
    let mut next_key = 1i128;
    for _ in 0..n {
        if tape.draw_below(8) == 0 {
            blocks.push(Block::dummy(width));
        } else {
            blocks.push(Block::real(next_key, &(next_key as u64).to_le_bytes()));
            next_key += 1;
        }
    }
    let mut oracle = HtOracle::build(&blocks);
    enum T {
        B(BucketTable),
        C(CuckooTable),
        W(TwoTierTable),
    }
    let mut table = match kind {
        0 => T::B(BucketTable::build(blocks, ((n / 16).max(1)) as u64, d64(), &mut tape, tag).unwrap()),
        1 => {
            let k = min_hash_count((n as u64).max(64), d64()).unwrap();
            T::C(CuckooTable::build(blocks, k, d64(), &mut tape, tag).unwrap())
        }
        _ => T::W(
            TwoTierTable::build(Shuffled::from_shuffler(blocks, &mut tape), 1, d64(), &mut tape, tag)
                .unwrap(),
        ),
    };
    let mut used = std::collections::HashSet::new();
    for _ in 0..(n / 2).max(1) {
        let key = match tape.draw_below(3) {
            0 => {
                let cand = 1 + tape.draw_below((next_key - 1).max(1) as u64) as i128;
                if used.insert(cand) {
                    Some(cand)
                } else {
                    None
                }
            }
            1 => {
                let cand = next_key + 5 + tape.draw_below(40) as i128;
                if used.insert(cand) {
                    Some(cand)
                } else {
                    None
                }
            }
            _ => None,
        };
        let got = match &mut table {
            T::B(t) => t.lookup(key),
            T::C(t) => t.lookup(key),
            T::W(t) => t.lookup(key),
        };
        let want = oracle.lookup(key);
        let agree = matches!(
            (&got, &want),
            (Some(_), HtOut::Value(_)) | (None, HtOut::Missing)
        ) && match (&got, &want) {
            (Some(v), HtOut::Value(w)) => v == w,
            _ => true,
        };
        if !agree {
            fails += 1;
        }
    }
    let extracted = match table {
        T::B(t) => t.extract(&mut tape),
        T::C(t) => t.extract(&mut tape),
        T::W(t) => t.extract(&mut tape),
    };
    let mut got: Vec<i128> = extracted.iter().filter(|b| b.is_real()).map(|b| b.key).collect();
    got.sort();
    if got != oracle.extract() {
        fails += 1;
    }
    fails
}

#[test]
fn criterion_5_oram_oracle_equivalence() {
    let t0 = Instant::now();
    let mut failures = 0;
    for (n, seeds) in [(1u64 << 8, 100usize), (1 << 12, 100), (1 << 14, 100)] {
        let r = verify_oram(505 ^ n, seeds, n, 4 * n);
        failures += r.failures;
    }
    let within = t0.elapsed().as_secs_f64() < 600.0;
    report(
        "5 (logical-memory oracle equivalence)",
        failures == 0 && within,
        &format!("N in {{2^8, 2^12, 2^14}}, 100 seeds x 4N ops, {failures} mismatches"),
        t0,
    );
}

#[test]
fn criterion_6_obliviousness_audit() {
    let t0 = Instant::now();
    let r = verify_trace(606, 50);
    let within = t0.elapsed().as_secs_f64() < 600.0;
    report(
        "6 (obliviousness audit)",
        r.failures == 0 && within,
        &format!("{} checks, {} violations", r.cases, r.failures),
        t0,
    );
}

// Measured per the reported methodology: n accesses averaged.
fn amortized_access_us(n: u64, beta: usize, seed: u64) -> f64 {
    let mut config = OramConfig::new(n, beta);
    config.seed = seed;
    let mut oram = Oram::init(config, &[]).unwrap();
    let mut tape = RandTape::from_seed(seed ^ 0xabc);
    let start = Instant::now();
    for i in 0..n {
        let addr = tape.draw_below(n);
        if i % 2 == 0 {
            let _ = oram.read(addr).unwrap();
        } else {
            let v = vec![i as u8; beta];
            let _ = oram.write(addr, &v).unwrap();
        }
    }
    start.elapsed().as_secs_f64() / n as f64 * 1e6
}

// build + t lookups (reals first, then dummies) + extract, Fig-5 style
fn scheme_total_seconds(kind: usize, n: u64, t: u64, beta: usize, seed: u64) -> f64 {
    let mut tape = RandTape::from_seed(seed);
    let blocks: Vec<Block> =
        (1..=n as i128).map(|k| Block::real(k, &vec![0x33u8; beta])).collect();
    let start = Instant::now();
    enum T {
        L(LinearTable),
        B(BucketTable),
        C(CuckooTable),
    }
    let mut table = match kind {
        0 => T::L(LinearTable::build(blocks)),
        1 => T::B(BucketTable::build(blocks, (n / 64).max(1), d64(), &mut tape, 31_000).unwrap()),
        _ => {
            let k = min_hash_count(n, d64()).unwrap();
            T::C(CuckooTable::build(blocks, k, d64(), &mut tape, 31_001).unwrap())
        }
    };
    let mut next_real = 1u64;
    for i in 0..t {
        let key = if i % 2 == 0 && next_real <= n {
            next_real += 1;
            Some((next_real - 1) as i128)
        } else {
            None
        };
        match &mut table {
            T::L(t) => {
                t.lookup(key);
            }
            T::B(t) => {
                t.lookup(key);
            }
            T::C(t) => {
                t.lookup(key);
            }
        }
    }
    match table {
        T::L(t) => {
            t.extract(&mut tape);
        }
        T::B(t) => {
            t.extract(&mut tape);
        }
        T::C(t) => {
            t.extract(&mut tape);
        }
    }
    start.elapsed().as_secs_f64()
}

#[test]
fn criterion_7_scaling_shape() {
    let t0 = Instant::now();
    // amortized access-time envelope between 2^16 and 2^20 at beta = 16
    let t16 = amortized_access_us(1 << 16, 16, 71);
    let t20 = amortized_access_us(1 << 20, 16, 72);
    let ratio = t20 / t16;
    let envelope = (20.0f64 / 16.0).powi(2) * 1.5;
    let ratio_ok = ratio <= envelope;

    // crossovers at the figure's 256-byte blocks
    let lin_128 = scheme_total_seconds(0, 1 << 7, 1 << 7, 256, 81);
    let buc_128 = scheme_total_seconds(1, 1 << 7, 1 << 7, 256, 82);
    let cuc_128 = scheme_total_seconds(2, 1 << 7, 1 << 7, 256, 83);
    let linear_fastest_small = lin_128 < buc_128 && lin_128 < cuc_128;

    let lin_16k = scheme_total_seconds(0, 1 << 14, 1 << 14, 256, 84);
    let buc_16k = scheme_total_seconds(1, 1 << 14, 1 << 14, 256, 85);
    let linear_not_fastest_mid = buc_16k < lin_16k;

    let n12 = 1u64 << 12;
    let buc_heavy = scheme_total_seconds(1, n12, 128 * n12, 256, 86);
    let cuc_heavy = scheme_total_seconds(2, n12, 128 * n12, 256, 87);
    let cuckoo_wins_heavy = cuc_heavy < buc_heavy;

    let within = t0.elapsed().as_secs_f64() < 1800.0;
    report(
        "7 (scaling shape and crossovers)",
        ratio_ok && linear_fastest_small && linear_not_fastest_mid && cuckoo_wins_heavy && within,
        &format!(
            "amortized {t16:.1}us@2^16 {t20:.1}us@2^20 ratio {ratio:.2} <= {envelope:.2}; \
             n=2^7 linear {lin_128:.3}s vs bucket {buc_128:.3}s vs cuckoo {cuc_128:.3}s; \
             n=2^14 bucket {buc_16k:.3}s vs linear {lin_16k:.3}s; \
             t=128n bucket {buc_heavy:.3}s vs cuckoo {cuc_heavy:.3}s"
        ),
        t0,
    );
}

#[test]
fn criterion_8_relocation_concentration() {
    let t0 = Instant::now();
    let mut tape = RandTape::from_seed(88);
    let mut violations = 0;
    let mut detail = String::new();
    for (z, eps_log2) in [(1u64 << 10, 2u32), (1 << 10, 3), (1 << 12, 2), (1 << 12, 3)] {
        let eps = 0.5f64.powi(eps_log2 as i32);
        let keep = z - (eps * z as f64 / 2.0) as u64;
        let cap_r = (eps * z as f64) as u64;
        let bins = 16u64;
        let n = bins * z;
        let trials = 10_000u64 / bins; // 10^4 bin observations per config
        let mut overflows = 0u64;
        let mut observed = 0u64;
        for _ in 0..trials {
            let mut loads = vec![0u64; bins as usize];
            for _ in 0..n {
                loads[tape.draw_below(bins) as usize] += 1;
            }
            for &l in &loads {
                observed += 1;
                if l > keep + cap_r {
                    overflows += 1;
                }
            }
        }
        let bound = (-eps * eps * z as f64 / 16.0).exp();
        let freq = overflows as f64 / observed as f64;
        let sigma = (bound * (1.0 - bound) / observed as f64).sqrt();
        if freq > bound + 3.0 * sigma {
            violations += 1;
        }
        detail.push_str(&format!("Z=2^{} eps=2^-{eps_log2}: {freq:.2e} vs {bound:.2e}; ", z.trailing_zeros()));
    }
    let within = t0.elapsed().as_secs_f64() < 300.0;
    report("8 (relocation concentration)", violations == 0 && within, &detail, t0);
}

#[test]
fn criterion_9_sssp_correctness() {
    let t0 = Instant::now();
    let mut tape = RandTape::from_seed(99);
    let mut mismatches = 0;
    for trial in 0..100u64 {
        let v = 1024usize;
        let e = 4 * v;
        let edges: Vec<(u32, u32, u64)> = (0..e)
            .map(|_| {
                (
                    tape.draw_below(v as u64) as u32,
                    tape.draw_below(v as u64) as u32,
                    tape.draw_below(1000),
                )
            })
            .collect();
        let g = Graph { vertices: v, edges };
        let got = oblivious_sssp(&g, 0, 900 + trial).unwrap();
        if got != plain_sssp(&g, 0) {
            mismatches += 1;
        }
    }

    // trace shape identical across two different graphs of equal size
    let small = |seed: u64| {
        let mut tp = RandTape::from_seed(seed);
        let v = 64usize;
        let edges: Vec<(u32, u32, u64)> = (0..4 * v)
            .map(|_| {
                (
                    tp.draw_below(v as u64) as u32,
                    tp.draw_below(v as u64) as u32,
                    tp.draw_below(50),
                )
            })
            .collect();
        Graph { vertices: v, edges }
    };
    let g1 = small(1);
    let g2 = small(2);
    let (_, tr1) = trace::capture(|| oblivious_sssp(&g1, 0, 901).unwrap());
    let (_, tr2) = trace::capture(|| oblivious_sssp(&g2, 3, 901).unwrap());
    let shapes_equal =
        trace::assert_shape_equal(&trace::shape_of(&tr1), &trace::shape_of(&tr2));

    let within = t0.elapsed().as_secs_f64() < 900.0;
    report(
        "9 (shortest-path correctness)",
        mismatches == 0 && shapes_equal && within,
        &format!("100 graphs, {mismatches} distance mismatches; shapes equal: {shapes_equal}"),
        t0,
    );
}

#[test]
fn tables_suite_smoke() {
    // the CLI-facing verify battery stays green at its default scale
    let r = verify_tables(7, 24, 512);
    assert_eq!(r.failures, 0, "verify tables: {} failures", r.failures);
}
