//! A buffer of items with a trace identity. All block touches performed by
//! the oblivious primitives go through these accessors so the recorded
//! sequence is complete.

use crate::block::{cswap, OItem};
use crate::trace::{self, ArrayId, Derivation, OpKind};

#[derive(Debug, Clone)]
pub struct OBuf<T> {
    id: ArrayId,
    items: Vec<T>,
}

impl<T: OItem> OBuf<T> {
    pub fn new(name: &str, qualifier: u64, items: Vec<T>) -> Self {
        OBuf { id: trace::array_id(name, qualifier), items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn id(&self) -> ArrayId {
        self.id
    }

    pub fn into_items(self) -> Vec<T> {
        self.items
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    /// Raw mutable access for untraced (performance-mode) fast paths.
    pub(crate) fn items_mut(&mut self) -> &mut [T] {
        &mut self.items
    }

    #[inline]
    fn rec(&self, op: OpKind, i: usize, derived: Derivation) {
        trace::record(self.id, self.items.len() as u64, op, i as u64, 1, derived);
    }

    #[inline]
    pub fn read(&self, i: usize) -> T {
        self.rec(OpKind::Read, i, Derivation::DataIndependent);
        self.items[i].clone()
    }

    /// Read without cloning: apply `f` to the slot; records one read.
    #[inline]
    pub fn probe<R>(&self, i: usize, f: impl FnOnce(&T) -> R) -> R {
        self.rec(OpKind::Read, i, Derivation::DataIndependent);
        f(&self.items[i])
    }

    #[inline]
    pub fn read_at(&self, i: usize, derived: Derivation) -> T {
        self.rec(OpKind::Read, i, derived);
        self.items[i].clone()
    }

    #[inline]
    pub fn write(&mut self, i: usize, v: T) {
        self.rec(OpKind::Write, i, Derivation::DataIndependent);
        self.items[i] = v;
    }

    #[inline]
    pub fn write_at(&mut self, i: usize, v: T, derived: Derivation) {
        self.rec(OpKind::Write, i, derived);
        self.items[i] = v;
    }

    /// Read-modify-write of one slot; records one read and one write whether
    /// or not `f` changes anything.
    #[inline]
    pub fn update(&mut self, i: usize, f: impl FnOnce(&mut T)) {
        self.rec(OpKind::Read, i, Derivation::DataIndependent);
        f(&mut self.items[i]);
        self.rec(OpKind::Write, i, Derivation::DataIndependent);
    }

    #[inline]
    pub fn update_at(&mut self, i: usize, derived: Derivation, f: impl FnOnce(&mut T)) {
        self.rec(OpKind::Read, i, derived);
        f(&mut self.items[i]);
        self.rec(OpKind::Write, i, derived);
    }

    /// Conditionally swap slots `i` and `j`; always records two reads and
    /// two writes.
    #[inline]
    pub fn cswap(&mut self, i: usize, j: usize, cond: bool) {
        debug_assert_ne!(i, j);
        if trace::active() {
            self.rec(OpKind::Read, i, Derivation::DataIndependent);
            self.rec(OpKind::Read, j, Derivation::DataIndependent);
            self.rec(OpKind::Write, i, Derivation::DataIndependent);
            self.rec(OpKind::Write, j, Derivation::DataIndependent);
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let (a, b) = self.items.split_at_mut(hi);
        cswap(&mut a[lo], &mut b[0], cond);
    }

    /// Comparator of a sorting network: swap so that the element with the
    /// smaller key ends up at `i` when `up`, at `j` otherwise. Requires
    /// `i < j`.
    #[inline]
    pub fn compare_swap(&mut self, i: usize, j: usize, up: bool, key: &impl Fn(&T) -> u128) {
        debug_assert!(i < j);
        if trace::active() {
            self.rec(OpKind::Read, i, Derivation::DataIndependent);
            self.rec(OpKind::Read, j, Derivation::DataIndependent);
            self.rec(OpKind::Write, i, Derivation::DataIndependent);
            self.rec(OpKind::Write, j, Derivation::DataIndependent);
        }
        let (a, b) = self.items.split_at_mut(j);
        let (x, y) = (&mut a[i], &mut b[0]);
        let ki = sort_key(x, key);
        let kj = sort_key(y, key);
        let cond = (ki > kj) == up;
        cswap(x, y, cond);
    }

    /// Append padding up to `target` length. Element count changes are a
    /// function of public sizes only.
    pub fn pad_to(&mut self, target: usize) {
        assert!(!self.items.is_empty() || target == 0, "cannot infer pad shape from empty buffer");
        while self.items.len() < target {
            let pad = T::make_pad(&self.items[0]);
            self.items.push(pad);
            self.rec(OpKind::Write, self.items.len() - 1, Derivation::DataIndependent);
        }
    }

    pub fn truncate(&mut self, len: usize) {
        self.items.truncate(len);
    }
}

/// Padding sorts after every real key regardless of the extractor.
#[inline]
pub fn sort_key<T: OItem>(item: &T, key: &impl Fn(&T) -> u128) -> (bool, u128) {
    (item.is_pad(), key(item))
}

impl<T: OItem> std::ops::Index<usize> for OBuf<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.items[i]
    }
}
