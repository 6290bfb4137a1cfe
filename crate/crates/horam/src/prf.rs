//! Keyed pseudorandom function over block keys. SipHash-2-4 with a 128-bit
//! secret key stands in for the PRF; the uniformity assumption downstream
//! sizing relies on is checked by the trace module's chi-square test.

use crate::tape::RandTape;
use siphasher::sip::SipHasher24;
use std::hash::Hasher;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrfKey(pub [u8; 16]);

impl PrfKey {
    pub fn sample(tape: &mut RandTape) -> Self {
        PrfKey(tape.draw_key())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Prf {
    key: PrfKey,
}

impl Prf {
    pub fn new(key: PrfKey) -> Self {
        Prf { key }
    }

    pub fn sample(tape: &mut RandTape) -> Self {
        Prf::new(PrfKey::sample(tape))
    }

    pub fn key(&self) -> PrfKey {
        self.key
    }

    pub fn eval(&self, x: i128) -> u64 {
        let mut h = SipHasher24::new_with_key(&self.key.0);
        h.write(&x.to_le_bytes());
        h.finish()
    }

    /// PRF output reduced to `[0, range)` by widening multiply.
    pub fn eval_mod(&self, x: i128, range: u64) -> u64 {
        debug_assert!(range > 0);
        (((self.eval(x) as u128) * (range as u128)) >> 64) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyed_and_deterministic() {
        let a = Prf::new(PrfKey([1; 16]));
        let b = Prf::new(PrfKey([2; 16]));
        assert_eq!(a.eval(7), a.eval(7));
        assert_ne!(a.eval(7), b.eval(7));
    }

    #[test]
    fn range_reduction() {
        let p = Prf::new(PrfKey([3; 16]));
        for x in 0..100 {
            assert!(p.eval_mod(x, 13) < 13);
        }
    }
}
