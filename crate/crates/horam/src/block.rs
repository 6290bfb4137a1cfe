//! The fixed-width key-value block stored in every table and ORAM level,
//! plus the branchless conditional-move trait the oblivious primitives are
//! built on.

/// Reserved key marking padding blocks inserted by the primitives themselves
/// (bitonic padding, bin fillers). Never visible to callers.
pub const PAD_KEY: i128 = i128::MIN + 1;

/// Base of the synthetic key range used for dummy input slots so that every
/// slot can participate in PRF placement without revealing which inputs are
/// real. Synthetic keys are `SYNTH_BASE - i` and never collide with dummy
/// lookup keys `-(ctr+1)` for any realistic lookup count.
pub const SYNTH_BASE: i128 = -(1i128 << 80);

/// Branchless conditional assignment. Items carry a scratch tag so sorts and
/// shuffles can stage their keys without auxiliary allocations.
pub trait OItem: Clone {
    /// If `cond`, overwrite `self` with `src`; otherwise leave `self` alone.
    /// Implementations use masked word operations, not branches.
    fn cmov(&mut self, src: &Self, cond: bool);

    /// Masked exchange with `other`; must not allocate. The default clones;
    /// hot types override with xor swaps.
    fn cswap_masked(&mut self, other: &mut Self, cond: bool) {
        let ta = self.clone();
        self.cmov(other, cond);
        other.cmov(&ta, cond);
    }

    /// Build a padding element matching `template`'s shape (value width).
    fn make_pad(template: &Self) -> Self;

    fn is_pad(&self) -> bool;

    fn set_tag(&mut self, tag: u64);
    fn tag(&self) -> u64;
}

#[inline]
pub fn mask64(cond: bool) -> u64 {
    (cond as u64).wrapping_neg()
}

#[inline]
pub fn cmov_u64(dst: &mut u64, src: u64, cond: bool) {
    let m = mask64(cond);
    *dst = (*dst & !m) | (src & m);
}

#[inline]
pub fn cswap_u64(a: &mut u64, b: &mut u64, cond: bool) {
    let m = mask64(cond);
    let t = (*a ^ *b) & m;
    *a ^= t;
    *b ^= t;
}

/// Swap two items in place when `cond` holds, touching both unconditionally.
#[inline]
pub fn cswap<T: OItem>(a: &mut T, b: &mut T, cond: bool) {
    a.cswap_masked(b, cond);
}

#[inline]
fn xor_swap_bytes(a: &mut [u8], b: &mut [u8], mask: u8) {
    let n = a.len().min(b.len());
    let (ac, at) = a[..n].split_at_mut(n - n % 8);
    let (bc, bt) = b[..n].split_at_mut(n - n % 8);
    for (x, y) in ac.chunks_exact_mut(8).zip(bc.chunks_exact_mut(8)) {
        let m = u64::from_ne_bytes([mask; 8]);
        let xv = u64::from_ne_bytes(x.try_into().unwrap());
        let yv = u64::from_ne_bytes(y.try_into().unwrap());
        let t = (xv ^ yv) & m;
        x.copy_from_slice(&(xv ^ t).to_ne_bytes());
        y.copy_from_slice(&(yv ^ t).to_ne_bytes());
    }
    for (x, y) in at.iter_mut().zip(bt.iter_mut()) {
        let t = (*x ^ *y) & mask;
        *x ^= t;
        *y ^= t;
    }
}

/// Unit of storage: signed key (real keys positive, dummies negative, zero
/// reserved), a fixed-width byte payload, and a scratch word for sort keys,
/// mark bits and destination bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub key: i128,
    pub aux: u64,
    pub value: Box<[u8]>,
}

impl Block {
    pub fn real(key: i128, value: &[u8]) -> Self {
        debug_assert!(key > 0, "real keys are positive");
        Block { key, aux: 0, value: value.into() }
    }

    /// A dummy block of the given payload width.
    pub fn dummy(width: usize) -> Self {
        Block { key: -1, aux: 0, value: vec![0u8; width].into() }
    }

    pub fn is_real(&self) -> bool {
        self.key > 0
    }

    pub fn is_dummy(&self) -> bool {
        self.key <= 0
    }

    pub fn width(&self) -> usize {
        self.value.len()
    }

    /// Mark this slot consumed: key becomes a plain dummy, payload zeroed.
    /// Masked in place so callers can wipe conditionally without allocating.
    pub fn wipe(&mut self, cond: bool) {
        let m = mask64(cond);
        let m128 = (m as u128) | ((m as u128) << 64);
        self.key = ((self.key as u128 & !m128) | ((-1i128) as u128 & m128)) as i128;
        self.aux &= !m;
        let mb = m as u8;
        for d in self.value.iter_mut() {
            *d &= !mb;
        }
    }
}

impl OItem for Block {
    fn cmov(&mut self, src: &Self, cond: bool) {
        debug_assert_eq!(self.value.len(), src.value.len(), "uniform value width");
        let m = mask64(cond);
        let m128 = (m as u128) | ((m as u128) << 64);
        self.key = ((self.key as u128 & !m128) | (src.key as u128 & m128)) as i128;
        self.aux = (self.aux & !m) | (src.aux & m);
        let mb = m as u8;
        let chunks = self.value.len() - self.value.len() % 8;
        let (dc, dt) = self.value.split_at_mut(chunks);
        let (sc, st) = src.value.split_at(chunks);
        let mw = u64::from_ne_bytes([mb; 8]);
        for (d, s) in dc.chunks_exact_mut(8).zip(sc.chunks_exact(8)) {
            let dv = u64::from_ne_bytes(d.try_into().unwrap());
            let sv = u64::from_ne_bytes(s.try_into().unwrap());
            d.copy_from_slice(&((dv & !mw) | (sv & mw)).to_ne_bytes());
        }
        for (d, s) in dt.iter_mut().zip(st.iter()) {
            *d = (*d & !mb) | (*s & mb);
        }
    }

    fn cswap_masked(&mut self, other: &mut Self, cond: bool) {
        debug_assert_eq!(self.value.len(), other.value.len(), "uniform value width");
        let m = mask64(cond);
        let m128 = (m as u128) | ((m as u128) << 64);
        let tk = (self.key ^ other.key) as u128 & m128;
        self.key = (self.key as u128 ^ tk) as i128;
        other.key = (other.key as u128 ^ tk) as i128;
        cswap_u64(&mut self.aux, &mut other.aux, cond);
        xor_swap_bytes(&mut self.value, &mut other.value, m as u8);
    }

    fn make_pad(template: &Self) -> Self {
        Block { key: PAD_KEY, aux: 0, value: vec![0u8; template.value.len()].into() }
    }

    fn is_pad(&self) -> bool {
        self.key == PAD_KEY
    }

    fn set_tag(&mut self, tag: u64) {
        self.aux = tag;
    }

    fn tag(&self) -> u64 {
        self.aux
    }
}

impl OItem for u64 {
    fn cmov(&mut self, src: &Self, cond: bool) {
        cmov_u64(self, *src, cond);
    }

    fn cswap_masked(&mut self, other: &mut Self, cond: bool) {
        cswap_u64(self, other, cond);
    }

    fn make_pad(_template: &Self) -> Self {
        u64::MAX
    }

    fn is_pad(&self) -> bool {
        *self == u64::MAX
    }

    fn set_tag(&mut self, tag: u64) {
        *self = tag;
    }

    fn tag(&self) -> u64 {
        *self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cmov_selects() {
        let a = Block::real(7, &[1, 2, 3, 4]);
        let b = Block::real(9, &[5, 6, 7, 8]);
        let mut x = a.clone();
        x.cmov(&b, false);
        assert_eq!(x, a);
        x.cmov(&b, true);
        assert_eq!(x, b);
    }

    #[test]
    fn cswap_swaps() {
        let a0 = Block::real(1, &[1; 8]);
        let b0 = Block::real(2, &[2; 8]);
        let (mut a, mut b) = (a0.clone(), b0.clone());
        cswap(&mut a, &mut b, false);
        assert_eq!((a.clone(), b.clone()), (a0.clone(), b0.clone()));
        cswap(&mut a, &mut b, true);
        assert_eq!((a, b), (b0, a0));
    }
}
