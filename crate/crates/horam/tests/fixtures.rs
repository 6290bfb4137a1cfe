//! The probability routines are deterministic and platform independent at
//! the declared precision; this compares fresh computations against the
//! versioned text fixture byte for byte.

use horam::probcalc::*;

fn render() -> String {
    let d64 = LogProb::pow2(-64);
    let d128 = LogProb::pow2(-128);
    let mut out = String::from("# probcalc fixture v1\n");
    for (n, m, d, tag) in [
        (8192u64, 2u64, d64, "d64"),
        (8192, 16, d64, "d64"),
        (8192, 128, d64, "d64"),
        (8192, 2, d128, "d128"),
        (1024, 16, d64, "d64"),
        (16384, 256, d64, "d64"),
    ] {
        let ell = tight_bucket_size(n, m, d);
        let p = any_bin_overflow_prob(n, m, ell);
        out.push_str(&format!("bucket {tag} {n} {m} {ell} {:.6}\n", p.log2));
    }
    for (n, k) in [(1u64 << 12, 3u32), (1 << 12, 4), (1 << 15, 3), (1 << 17, 3), (64, 5)] {
        let f = cuckoo_fail_prob(n, k, 2 * n);
        out.push_str(&format!("cuckoo {n} {k} {:.6}\n", f.log2));
    }
    for n in [256u64, 4096, 1 << 16] {
        out.push_str(&format!("minhash {n} {}\n", min_hash_count(n, d64).unwrap()));
    }
    out.push_str(&format!(
        "relaxed 1048576 16384 {:.6}\n",
        relaxed_compact_fail(1 << 20, 1 << 14).unwrap().log2
    ));
    out
}

#[test]
fn probcalc_matches_pinned_fixture_exactly() {
    let fixture = include_str!("../fixtures/probcalc_v1.txt");
    assert_eq!(render(), fixture, "probability outputs drifted from fixtures/probcalc_v1.txt");
}
