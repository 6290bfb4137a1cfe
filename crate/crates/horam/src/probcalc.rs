//! High-precision computation of overflow and failure probabilities and
//! tight parameter search.
//!
//! Balls-into-bins tail: if n balls are thrown independently and uniformly
//! into m bins, the probability of a given bin holding at least k balls is
//! bounded by `sum_{i=k}^{n} C(n,i) (m-1)^(n-i) / m^n`. Bucket capacities
//! are the minimal `ell` for which the m-bin union bound on that tail stays
//! below the target. Stashless Cuckoo construction failure is bounded by
//! `sum_{t=k+1}^{n} C(n,t) C(m,t-1) floor(m/k)^(-kt) prod a_i^t` with
//! `sum a_i = t-1`; the product is evaluated at the equal split, which
//! maximizes it and so keeps the expression an upper bound.
//!
//! Terms are evaluated in the log domain. A double-precision prescreen
//! selects every term within 220 bits of the peak (everything skipped is
//! provably below 2^-200 of the total); the surviving terms are evaluated
//! with 320-bit arithmetic, well past the 256-bit working-precision target,
//! and aggregated by log-sum-exp. Results are deterministic and platform
//! independent; a text fixture pins them exactly.

use crate::error::{Error, Result};
use crate::stats::ln_gamma;
use astro_float::{BigFloat, Consts, RoundingMode};
use std::cell::RefCell;

/// Log-base-2 of a probability bound. `NEG_INFINITY` encodes zero. Values
/// above 0 can occur because the series are upper bounds; comparisons
/// against targets use the clamped value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProb {
    pub log2: f64,
}

impl LogProb {
    pub fn zero() -> Self {
        LogProb { log2: f64::NEG_INFINITY }
    }

    pub fn pow2(e: i32) -> Self {
        LogProb { log2: e as f64 }
    }

    /// log2 clamped to probability <= 1.
    pub fn clamped_log2(&self) -> f64 {
        self.log2.min(0.0)
    }

    pub fn le(&self, other: &LogProb) -> bool {
        self.clamped_log2() <= other.clamped_log2()
    }
}

/// Tight bucket sizing for n items over m buckets at overflow target delta.
#[derive(Debug, Clone, Copy)]
pub struct BucketSizing {
    pub n: u64,
    pub m: u64,
    pub ell: u64,
    pub delta: LogProb,
}

/// Stashless Cuckoo sizing: k PRFs over m = 2n entries, matcher iteration
/// bound tau = max(3 ceil(log2 n) + 1, 30).
#[derive(Debug, Clone, Copy)]
pub struct CuckooSizing {
    pub n: u64,
    pub k: u32,
    pub m: u64,
    pub fail: LogProb,
    pub tau: u32,
}

const PREC: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;
// Terms further than this below the peak are dropped by the prescreen.
const PRESCREEN_WINDOW: f64 = 220.0;
// Small ln-factorials are cached exactly; larger arguments use the Stirling
// series with 26 Bernoulli terms, whose remainder is below 2^-300 already
// at z = 256, far under the comparison slack.
const LNFACT_CACHE: u64 = 256;

struct Hp {
    cc: Consts,
    lnfact: Vec<BigFloat>,
    ln2: BigFloat,
    ln2pi_half: BigFloat,
    // Stirling results recur heavily inside the sizing searches
    lgamma_memo: std::collections::HashMap<u64, BigFloat>,
}

thread_local! {
    static HP: RefCell<Option<Hp>> = const { RefCell::new(None) };
}

// Bernoulli numbers B_2..B_52 as (numerator, denominator).
const BERNOULLI: [(i128, u64); 26] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
    (43867, 798),
    (-174611, 330),
    (854513, 138),
    (-236364091, 2730),
    (8553103, 6),
    (-23749461029, 870),
    (8615841276005, 14322),
    (-7709321041217, 510),
    (2577687858367, 6),
    (-26315271553053477373, 1919190),
    (2929993913841559, 6),
    (-261082718496449122051, 13530),
    (1520097643918070802691, 1806),
    (-27833269579301024235023, 690),
    (596451111593912163277961, 282),
    (-5609403368997817686249127547, 46410),
    (495057205241079648212477525, 66),
    (-801165718135489957347924991853, 1590),
];

impl Hp {
    fn new() -> Self {
        let mut cc = Consts::new().expect("constants cache");
        let ln2 = cc.ln_2(PREC, RM);
        let pi = cc.pi(PREC, RM);
        let two_pi = pi.mul(&BigFloat::from_u64(2, PREC), PREC, RM);
        let ln2pi = two_pi.ln(PREC, RM, &mut cc);
        let ln2pi_half = ln2pi.div(&BigFloat::from_u64(2, PREC), PREC, RM);
        Hp {
            cc,
            lnfact: vec![BigFloat::from_u64(0, PREC)],
            ln2,
            ln2pi_half,
            lgamma_memo: std::collections::HashMap::new(),
        }
    }

    fn ensure_lnfact(&mut self, upto: u64) {
        let upto = upto as usize;
        while self.lnfact.len() <= upto {
            let j = self.lnfact.len() as u64;
            let lnj = BigFloat::from_u64(j, PREC).ln(PREC, RM, &mut self.cc);
            let prev = self.lnfact.last().unwrap();
            self.lnfact.push(prev.add(&lnj, PREC, RM));
        }
    }

    /// ln Gamma(z) for integer z >= 1: cached ln (z-1)! for small z, the
    /// Stirling series above the cache limit.
    fn ln_gamma_int(&mut self, z: u64) -> BigFloat {
        assert!(z >= 1);
        if z - 1 <= LNFACT_CACHE {
            self.ensure_lnfact(z - 1);
            return self.lnfact[(z - 1) as usize].clone();
        }
        if let Some(hit) = self.lgamma_memo.get(&z) {
            return hit.clone();
        }
        let zb = BigFloat::from_u64(z, PREC);
        let lnz = zb.ln(PREC, RM, &mut self.cc);
        let half = BigFloat::from_f64(0.5, PREC);
        // (z - 1/2) ln z - z + ln(2 pi)/2 + sum B_2k / (2k (2k-1) z^(2k-1))
        let mut acc = zb.sub(&half, PREC, RM).mul(&lnz, PREC, RM);
        acc = acc.sub(&zb, PREC, RM);
        acc = acc.add(&self.ln2pi_half, PREC, RM);
        let zinv = BigFloat::from_u64(1, PREC).div(&zb, PREC, RM);
        let zinv2 = zinv.mul(&zinv, PREC, RM);
        let mut zpow = zinv.clone(); // z^-(2k-1)
        for (k, (num, den)) in BERNOULLI.iter().enumerate() {
            let k2 = 2 * (k as u64 + 1);
            let neg = *num < 0;
            let numu = num.unsigned_abs();
            let numb = BigFloat::from_u128(numu, PREC);
            let denb = BigFloat::from_u128(*den as u128 * (k2 as u128) * (k2 as u128 - 1), PREC);
            let mut term = numb.div(&denb, PREC, RM).mul(&zpow, PREC, RM);
            if neg {
                term = term.neg();
            }
            acc = acc.add(&term, PREC, RM);
            zpow = zpow.mul(&zinv2, PREC, RM);
        }
        self.lgamma_memo.insert(z, acc.clone());
        acc
    }

    /// log2 C(n, i) in high precision.
    fn log2_binom(&mut self, n: u64, i: u64) -> BigFloat {
        assert!(i <= n);
        let a = self.ln_gamma_int(n + 1);
        let b = self.ln_gamma_int(i + 1);
        let c = self.ln_gamma_int(n - i + 1);
        a.sub(&b, PREC, RM).sub(&c, PREC, RM).div(&self.ln2, PREC, RM)
    }

    fn log2_u64(&mut self, x: u64) -> BigFloat {
        BigFloat::from_u64(x, PREC).log2(PREC, RM, &mut self.cc)
    }

    /// log2 of sum of 2^x over log2-domain terms.
    fn log2_sum_exp(&mut self, terms: &[BigFloat]) -> BigFloat {
        assert!(!terms.is_empty());
        let mut max = terms[0].clone();
        for t in &terms[1..] {
            if t.cmp(&max).map(|c| c > 0).unwrap_or(false) {
                max = t.clone();
            }
        }
        let mut sum = BigFloat::from_u64(0, PREC);
        for t in terms {
            let d = t.sub(&max, PREC, RM).mul(&self.ln2, PREC, RM);
            sum = sum.add(&d.exp(PREC, RM, &mut self.cc), PREC, RM);
        }
        let l = sum.ln(PREC, RM, &mut self.cc).div(&self.ln2, PREC, RM);
        max.add(&l, PREC, RM)
    }
}

fn with_hp<T>(f: impl FnOnce(&mut Hp) -> T) -> T {
    HP.with(|h| {
        let mut h = h.borrow_mut();
        if h.is_none() {
            *h = Some(Hp::new());
        }
        f(h.as_mut().unwrap())
    })
}

/// Convert a finite BigFloat to f64 (round toward zero; plenty for reporting
/// log-domain values whose decisive comparisons happen in high precision).
fn bf_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    let e = x.exponent().expect("finite") as i32;
    let digits = x.mantissa_digits().expect("finite");
    let top = digits[digits.len() - 1] as f64;
    let next = if digits.len() > 1 { digits[digits.len() - 2] as f64 } else { 0.0 };
    let frac = top / 2f64.powi(64) + next / 2f64.powi(128);
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    sign * frac * 2f64.powi(e)
}

/// log2 C(n, i) computed at 320-bit working precision and reported as f64.
pub fn log_binom(n: u64, i: u64) -> Result<f64> {
    if i > n {
        return Err(Error::Param(format!("log_binom: i={i} out of range for n={n}")));
    }
    Ok(with_hp(|hp| bf_to_f64(&hp.log2_binom(n, i))))
}

fn lb_f64(n: u64, i: u64) -> f64 {
    (ln_gamma(n as f64 + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((n - i) as f64 + 1.0))
        / std::f64::consts::LN_2
}

/// Per-bin balls-into-bins tail `Pr[a given bin holds >= ell balls]`.
pub fn overflow_prob(n: u64, m: u64, ell: u64) -> LogProb {
    LogProb { log2: with_hp(|hp| bf_to_f64(&overflow_prob_hp(hp, n, m, ell))) }
}

fn overflow_prob_hp(hp: &mut Hp, n: u64, m: u64, ell: u64) -> BigFloat {
    assert!(n >= 1 && m >= 1);
    if ell > n {
        return BigFloat::from_f64(f64::NEG_INFINITY, PREC);
    }
    if ell == 0 {
        // the full series telescopes to exactly 1
        return BigFloat::from_u64(0, PREC);
    }
    if m == 1 {
        // only the i = n term survives, and it equals 1
        return BigFloat::from_u64(0, PREC);
    }
    // head term at i = ell in the log domain, exponentiated once; the rest
    // of the series follows by exact rational ratios, so no further
    // transcendentals are needed
    let lb = hp.log2_binom(n, ell);
    let l2m1 = if m == 2 { BigFloat::from_u64(0, PREC) } else { hp.log2_u64(m - 1) };
    let l2m = hp.log2_u64(m);
    let a = l2m1.mul(&BigFloat::from_u64(n - ell, PREC), PREC, RM);
    let b = l2m.mul(&BigFloat::from_u64(n, PREC), PREC, RM);
    let lt0 = lb.add(&a, PREC, RM).sub(&b, PREC, RM);
    let mut term = lt0.mul(&hp.ln2, PREC, RM).exp(PREC, RM, &mut hp.cc);
    let mut sum = term.clone();
    for i in ell..n {
        // T(i+1) = T(i) * (n-i) / ((i+1) * (m-1))
        let num = BigFloat::from_u64(n - i, PREC);
        let den = BigFloat::from_u128((i + 1) as u128 * (m - 1) as u128, PREC);
        term = term.mul(&num, PREC, RM).div(&den, PREC, RM);
        sum = sum.add(&term, PREC, RM);
        // once decayed below half per step and 260 bits under the total,
        // the geometric remainder is beneath the comparison slack
        let halved = (n - i) * 2 <= (i + 2) * (m - 1);
        if halved {
            if let (Some(et), Some(es)) = (term.exponent(), sum.exponent()) {
                if (et as i64) < es as i64 - 260 {
                    break;
                }
            }
        }
    }
    sum.ln(PREC, RM, &mut hp.cc).div(&hp.ln2, PREC, RM)
}

/// Minimal bucket capacity `ell` such that the any-bin overflow event,
/// bounded by the m-fold union of the per-bin tail, stays at or below
/// `delta`. This union-bound convention reproduces the reference sizing
/// series for n = 8192 exactly. A bucket of capacity n can never overflow,
/// so the search is clamped to n. Results are memoized: level rebuilds ask
/// for the same sizing over and over.
pub fn tight_bucket_size(n: u64, m: u64, delta: LogProb) -> u64 {
    use std::sync::Mutex;
    static MEMO: Mutex<Option<std::collections::HashMap<(u64, u64, i64), u64>>> =
        Mutex::new(None);
    let key = (n, m, delta.clamped_log2().to_bits() as i64);
    if let Some(hit) =
        MEMO.lock().unwrap().get_or_insert_with(Default::default).get(&key).copied()
    {
        return hit;
    }
    let ell = tight_bucket_size_uncached(n, m, delta);
    MEMO.lock().unwrap().get_or_insert_with(Default::default).insert(key, ell);
    ell
}

fn tight_bucket_size_uncached(n: u64, m: u64, delta: LogProb) -> u64 {
    assert!(n >= 1 && m >= 1);
    let target = delta.clamped_log2();
    with_hp(|hp| {
        let pred = |hp: &mut Hp, ell: u64| -> bool {
            if ell > n {
                return true;
            }
            let p = overflow_prob_hp(hp, n, m, ell);
            let lm = hp.log2_u64(m);
            let total = p.add(&lm, PREC, RM);
            let t = BigFloat::from_f64(target, PREC);
            total.cmp(&t).map(|c| c <= 0).unwrap_or(false)
        };
        let mut lo = 0u64;
        let mut hi = n + 1;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if pred(hp, mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo.min(n)
    })
}

pub fn bucket_sizing(n: u64, m: u64, delta: LogProb) -> BucketSizing {
    BucketSizing { n, m, ell: tight_bucket_size(n, m, delta), delta }
}

/// Construction-failure bound for stashless Cuckoo hashing with n items,
/// k PRFs and m table entries, at the equal split of the inner product.
pub fn cuckoo_fail_prob(n: u64, k: u32, m: u64) -> LogProb {
    assert!(k >= 2 && m >= k as u64);
    let b = m / k as u64;
    if n < k as u64 + 1 {
        // empty series at tiny n
        return LogProb::zero();
    }
    let log2_kb = ((k as u64 * b) as f64).log2();
    // f64 prescreen over t; incremental log-binomials
    let mut lb_nt = lb_f64(n, k as u64 + 1);
    let mut lb_mt = lb_f64(m, k as u64);
    let mut pre: Vec<(u64, f64)> = Vec::new();
    let mut peak = f64::NEG_INFINITY;
    for t in (k as u64 + 1)..=n {
        if t > k as u64 + 1 {
            // C(n,t) = C(n,t-1) * (n-t+1) / t ; C(m,t-1) likewise
            lb_nt += ((n - t + 1) as f64).log2() - (t as f64).log2();
            lb_mt += ((m - t + 2) as f64).log2() - ((t - 1) as f64).log2();
        }
        let lt = lb_nt + lb_mt + (k as u64 * t) as f64 * (((t - 1) as f64).log2() - log2_kb);
        if lt > peak {
            peak = lt;
        }
        pre.push((t, lt));
    }
    if pre.is_empty() {
        return LogProb::zero();
    }
    let thr = peak - PRESCREEN_WINDOW;
    let log2 = with_hp(|hp| {
        let mut terms = Vec::new();
        let l2kb = hp.log2_u64(k as u64 * b);
        for (t, lt) in pre {
            if lt < thr {
                continue;
            }
            let a = hp.log2_binom(n, t);
            let bnm = hp.log2_binom(m, t - 1);
            let l2t1 = hp.log2_u64(t - 1);
            let kt = BigFloat::from_u64(k as u64 * t, PREC);
            let c = l2t1.sub(&l2kb, PREC, RM).mul(&kt, PREC, RM);
            terms.push(a.add(&bnm, PREC, RM).add(&c, PREC, RM));
        }
        bf_to_f64(&hp.log2_sum_exp(&terms))
    });
    LogProb { log2 }
}

/// The m-fold union bound `m * overflow_prob(n, m, ell)` used by the tight
/// bucket-size search.
pub fn any_bin_overflow_prob(n: u64, m: u64, ell: u64) -> LogProb {
    let p = overflow_prob(n, m, ell);
    LogProb { log2: p.log2 + (m as f64).log2() }
}

/// Smallest k in [3, 8] whose Cuckoo failure bound at m = 2n meets delta.
/// Memoized like the bucket sizing.
pub fn min_hash_count(n: u64, delta: LogProb) -> Result<u32> {
    use std::sync::Mutex;
    static MEMO: Mutex<Option<std::collections::HashMap<(u64, i64), Option<u32>>>> =
        Mutex::new(None);
    let key = (n, delta.clamped_log2().to_bits() as i64);
    if let Some(hit) =
        MEMO.lock().unwrap().get_or_insert_with(Default::default).get(&key).copied()
    {
        return hit.ok_or_else(|| {
            Error::Sizing(format!("no k <= 8 reaches 2^{:.1} at n={n}", delta.clamped_log2()))
        });
    }
    let mut found = None;
    for k in 3..=8u32 {
        if cuckoo_fail_prob(n, k, 2 * n).le(&delta) {
            found = Some(k);
            break;
        }
    }
    MEMO.lock().unwrap().get_or_insert_with(Default::default).insert(key, found);
    found.ok_or_else(|| {
        Error::Sizing(format!("no k <= 8 reaches 2^{:.1} at n={n}", delta.clamped_log2()))
    })
}

pub fn cuckoo_sizing(n: u64, delta: LogProb) -> Result<CuckooSizing> {
    let k = min_hash_count(n, delta)?;
    let m = 2 * n;
    Ok(CuckooSizing { n, k, m, fail: cuckoo_fail_prob(n, k, m), tau: matcher_rounds(n) })
}

/// Iteration budget for the oblivious matcher: max(3 ceil(log2 n) + 1, 30).
pub fn matcher_rounds(n: u64) -> u32 {
    let lg = 64 - n.max(1).next_power_of_two().leading_zeros() - 1;
    (3 * lg + 1).max(30)
}

/// Failure bound of relaxed compaction: 2 n exp(-Z/256) / Z.
pub fn relaxed_compact_fail(n: u64, z: u64) -> Result<LogProb> {
    if z < 1 {
        return Err(Error::Param("relaxed_compact_fail: Z must be >= 1".into()));
    }
    let log2 = 1.0 + (n as f64).log2() - (z as f64).log2()
        - z as f64 / (256.0 * std::f64::consts::LN_2);
    Ok(LogProb { log2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    #[test]
    fn log_binom_small() {
        assert!((log_binom(4, 2).unwrap() - 6f64.log2()).abs() < 1e-12);
        assert_eq!(log_binom(10, 0).unwrap(), 0.0);
        assert!(log_binom(3, 5).is_err());
    }

    #[test]
    fn log_binom_against_big_integer_oracle() {
        // exact big-integer binomials as the independent route
        let cases = [(1000u64, 500u64), (1000, 13), (8192, 731), (300, 150)];
        for (n, i) in cases {
            let mut c = BigUint::from(1u32);
            for j in 0..i {
                c = c * BigUint::from(n - j) / BigUint::from(j + 1);
            }
            let bits = c.bits();
            let shift = bits.saturating_sub(53);
            let head: BigUint = c >> shift;
            let exact = (head.to_u64_digits()[0] as f64).log2() + shift as f64;
            let got = log_binom(n, i).unwrap();
            assert!((got - exact).abs() < 1e-6, "n={n} i={i}: {got} vs {exact}");
        }
    }

    #[test]
    fn overflow_prob_trivial_points() {
        // n=1, m=1, ell=1: the single term C(1,1) 0^0 / 1 = 1
        assert_eq!(overflow_prob(1, 1, 1).log2, 0.0);
        // n=2, m=2, ell=2: C(2,2) (1)^0 / 4 = 1/4
        assert!((overflow_prob(2, 2, 2).log2 + 2.0).abs() < 1e-9);
        // ell=0 clamps to 1
        assert_eq!(overflow_prob(64, 4, 0).log2, 0.0);
        // monotone non-increasing in ell
        let mut prev = 1.0f64;
        for ell in 1..=32 {
            let p = overflow_prob(32, 4, ell).log2;
            assert!(p <= prev + 1e-12);
            prev = p;
        }
    }

    #[test]
    fn relaxed_compact_fail_points() {
        // n = Z = 256: 2 * 256 * e^-1 / 256 = 2/e
        let p = relaxed_compact_fail(256, 256).unwrap();
        assert!((p.log2 - (2.0 / std::f64::consts::E).log2()).abs() < 1e-12);
        // doubling Z strictly decreases the bound
        let a = relaxed_compact_fail(1 << 20, 1 << 10).unwrap().log2;
        let b = relaxed_compact_fail(1 << 20, 1 << 11).unwrap().log2;
        assert!(b < a);
        // n=2^20, Z=2^14
        let c = relaxed_compact_fail(1 << 20, 1 << 14).unwrap().log2;
        assert!(c < -80.0, "got {c}");
        assert!(relaxed_compact_fail(4, 0).is_err());
    }

    #[test]
    fn matcher_rounds_floor() {
        assert_eq!(matcher_rounds(4), 30);
        assert_eq!(matcher_rounds(1 << 12), 37);
        assert_eq!(matcher_rounds((1 << 12) - 1), 37);
    }

    #[test]
    fn min_hash_count_floor_at_delta_one() {
        assert_eq!(min_hash_count(64, LogProb::pow2(0)).unwrap(), 3);
    }
}
