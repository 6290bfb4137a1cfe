// regenerate the probability fixture; compare with tests/fixture checks
use horam::probcalc::*;
fn main() {
    let d64 = LogProb::pow2(-64);
    let d128 = LogProb::pow2(-128);
    println!("# probcalc fixture v1");
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
        println!("bucket {tag} {n} {m} {ell} {:.6}", p.log2);
    }
    for (n, k) in [(1u64 << 12, 3u32), (1 << 12, 4), (1 << 15, 3), (1 << 17, 3), (64, 5)] {
        let f = cuckoo_fail_prob(n, k, 2 * n);
        println!("cuckoo {n} {k} {:.6}", f.log2);
    }
    for n in [256u64, 4096, 1 << 16] {
        println!("minhash {n} {}", min_hash_count(n, d64).unwrap());
    }
    println!("relaxed 1048576 16384 {:.6}", relaxed_compact_fail(1 << 20, 1 << 14).unwrap().log2);
}
