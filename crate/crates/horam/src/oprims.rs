//! Data-oblivious building blocks: constant-trace select, bitonic sort,
//! oblivious shuffle, two compaction variants, intersperse, and bin
//! placement. Every operation's access sequence is a function of public
//! sizes alone; secret values only ever flow into conditional-move masks
//! and register arithmetic.

use crate::block::{Block, OItem};
use crate::error::{Error, Result};
use crate::obuf::OBuf;
use crate::tape::RandTape;
use crate::trace::{self, Derivation};
use rayon::prelude::*;

/// Branchless two-way select: `a` if `cond`, else `b`. Register-level; no
/// memory trace of its own.
pub fn oselect<T: OItem>(cond: bool, a: &T, b: &T) -> T {
    let mut out = b.clone();
    out.cmov(a, cond);
    out
}

// Parallel bitonic stages pay off only on large buffers, and never while a
// trace session needs sequential record order.
const PAR_SORT_MIN: usize = 1 << 14;

/// Bitonic sort, ascending in `key`. Handles any length by padding to the
/// next power of two with sentinels that sort last; the trace is fixed per
/// input length.
pub fn osort<T, F>(buf: &mut OBuf<T>, key: F)
where
    T: OItem + Send,
    F: Fn(&T) -> u128 + Sync,
{
    let n = buf.len();
    if n <= 1 {
        return;
    }
    let n2 = n.next_power_of_two();
    buf.pad_to(n2);
    let workers = std::thread::available_parallelism().map(|c| c.get()).unwrap_or(1);
    if !trace::active() && workers > 1 && n2 >= PAR_SORT_MIN {
        bitonic_parallel(buf.items_mut(), &key);
    } else {
        bitonic_recorded(buf, &key);
    }
    buf.truncate(n);
}

fn bitonic_recorded<T: OItem>(buf: &mut OBuf<T>, key: &impl Fn(&T) -> u128) {
    let n = buf.len();
    let mut k = 2;
    while k <= n {
        let mut j = k / 2;
        while j > 0 {
            for i in 0..n {
                let l = i ^ j;
                if l > i {
                    let up = (i & k) == 0;
                    buf.compare_swap(i, l, up, key);
                }
            }
            j /= 2;
        }
        k *= 2;
    }
}

fn bitonic_parallel<T: OItem + Send>(items: &mut [T], key: &(impl Fn(&T) -> u128 + Sync)) {
    let n = items.len();
    let mut k = 2;
    while k <= n {
        let mut j = k / 2;
        while j > 0 {
            // stage j decomposes into disjoint 2j-wide segments
            items.par_chunks_mut(2 * j).enumerate().for_each(|(c, chunk)| {
                let base = c * 2 * j;
                let up = (base & k) == 0;
                let (lo, hi) = chunk.split_at_mut(j);
                for i in 0..hi.len() {
                    let ki = crate::obuf::sort_key(&lo[i], key);
                    let kl = crate::obuf::sort_key(&hi[i], key);
                    let cond = (ki > kl) == up;
                    crate::block::cswap(&mut lo[i], &mut hi[i], cond);
                }
            });
            j /= 2;
        }
        k *= 2;
    }
}

/// Uniformly random permutation via bitonic sort over 64-bit tape keys.
/// Key collisions (~n^2 / 2^65) leave a negligible non-uniformity.
pub fn oshuffle<T: OItem + Send>(buf: &mut OBuf<T>, tape: &mut RandTape) {
    let n = buf.len();
    for i in 0..n {
        let t = tape.draw();
        buf.update(i, |v| v.set_tag(t));
    }
    osort(buf, |x| x.tag() as u128);
}

/// Sum of mark bits over a range; records one read per slot.
fn count_marks(marks: &OBuf<u64>, lo: usize, n: usize) -> usize {
    let mut s = 0usize;
    for i in lo..lo + n {
        s += marks.read(i) as usize;
    }
    s
}

/// Cyclic offset compaction on a power-of-two range: marked elements end at
/// positions `z, z+1, ..., z+m-1 (mod n)` within the range. Control flow
/// depends only on `n`; `z` and the counts stay in registers.
fn off_compact(
    marks: &mut OBuf<u64>,
    lo: usize,
    n: usize,
    z: usize,
    swap: &mut impl FnMut(usize, usize, bool),
) {
    debug_assert!(n.is_power_of_two());
    if n == 1 {
        return;
    }
    let half = n / 2;
    let m = count_marks(marks, lo, half);
    off_compact(marks, lo, half, z % half, swap);
    off_compact(marks, lo + half, half, (z + m) % half, swap);
    let s = ((z % half) + m >= half) != (z >= half);
    for i in 0..half {
        let b = s != (i >= (z + m) % half);
        marks.cswap(lo + i, lo + i + half, b);
        swap(lo + i, lo + i + half, b);
    }
}

/// Order-preserving (for marked elements) compaction over any length.
fn or_compact(
    marks: &mut OBuf<u64>,
    lo: usize,
    n: usize,
    swap: &mut impl FnMut(usize, usize, bool),
) {
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        off_compact(marks, lo, n, 0, swap);
        return;
    }
    let n2 = n.next_power_of_two() / 2;
    let n1 = n - n2;
    let m1 = count_marks(marks, lo, n1);
    or_compact(marks, lo, n1, swap);
    off_compact(marks, lo + n1, n2, (n2 + m1 - n1) % n2, swap);
    for i in 0..n1 {
        let b = i >= m1;
        marks.cswap(lo + i, lo + n2 + i, b);
        swap(lo + i, lo + n2 + i, b);
    }
}

/// Move all marked blocks to a prefix of length equal to the mark count,
/// preserving their relative order; the unmarked order is unspecified.
/// O(n log n) conditional swaps; trace depends only on the length.
pub fn ocompact<T: OItem>(buf: &mut OBuf<T>, marked: impl Fn(&T) -> bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    let mut marks = extract_marks(buf, &marked);
    or_compact(&mut marks, 0, n, &mut |i, j, b| buf.cswap(i, j, b));
}

fn extract_marks<T: OItem>(buf: &OBuf<T>, marked: &impl Fn(&T) -> bool) -> OBuf<u64> {
    let n = buf.len();
    let mut marks = OBuf::new("ocompact.marks", 0, vec![0u64; n]);
    for i in 0..n {
        let m = buf.probe(i, |b| marked(b)) as u64;
        marks.write(i, m);
    }
    marks
}

/// Relaxed compaction for inputs that are randomly shuffled with exactly
/// half the blocks marked. Works chunk-locally in `O(n log z)` swaps: each
/// round compacts chunks of `z`, peels a provably-marked quarter off to the
/// front region and a provably-unmarked quarter to the back region, and
/// recurses on the concatenated middles. A chunk whose marked count leaves
/// `[z/4, 3z/4]` aborts with `CompactionOverflow` instead of corrupting;
/// callers reshuffle and retry or fall back to [`ocompact`].
pub fn ocompact_relaxed<T: OItem>(
    buf: &mut OBuf<T>,
    marked: impl Fn(&T) -> bool,
    z: usize,
) -> Result<()> {
    let n = buf.len();
    if n <= 1 {
        return Ok(());
    }
    if !z.is_power_of_two() || z < 8 {
        return Err(Error::Param("ocompact_relaxed: z must be a power of two >= 8".into()));
    }
    if n <= z {
        ocompact(buf, marked);
        return Ok(());
    }
    if n % z != 0 || !(n / z).is_power_of_two() {
        return Err(Error::Param("ocompact_relaxed: n must be z times a power of two".into()));
    }
    let marks = extract_marks(buf, &marked);
    if count_marks(&marks, 0, n) != n / 2 {
        return Err(Error::CompactionOverflow);
    }

    let q = z / 4;
    let mut out: OBuf<T> = OBuf::new("relaxed.out", 0, vec![T::make_pad(&buf.read(0)); n]);
    let mut front = 0usize;
    let mut back = n;

    let mut cur: Vec<T> = (0..n).map(|i| buf.read(i)).collect();
    let mut cur_marks: Vec<u64> = (0..n).map(|i| marks.read(i)).collect();
    let mut level = 0u64;

    loop {
        let s = cur.len();
        let mut lvl_buf = OBuf::new("relaxed.work", level, cur);
        let mut lvl_marks = OBuf::new("relaxed.marks", level, cur_marks);
        if s <= z {
            or_compact(&mut lvl_marks, 0, s, &mut |i, j, b| lvl_buf.cswap(i, j, b));
            for i in 0..s {
                let v = lvl_buf.read(i);
                out.write(front + i, v);
            }
            front += s;
            debug_assert_eq!(front, back);
            break;
        }
        let chunks = s / z;
        let mut bad = false;
        for c in 0..chunks {
            let lo = c * z;
            let cnt = count_marks(&lvl_marks, lo, z);
            off_compact(&mut lvl_marks, lo, z, 0, &mut |i, j, b| lvl_buf.cswap(i, j, b));
            bad |= cnt < q || cnt > 3 * q;
        }
        if bad {
            return Err(Error::CompactionOverflow);
        }
        // peel: first quarter all marked, last quarter all unmarked
        let mut next: Vec<T> = Vec::with_capacity(s / 2);
        let mut next_marks: Vec<u64> = Vec::with_capacity(s / 2);
        for c in 0..chunks {
            let lo = c * z;
            for i in 0..q {
                let v = lvl_buf.read(lo + i);
                out.write(front + i, v);
            }
            front += q;
            for i in 0..q {
                let v = lvl_buf.read(lo + 3 * q + i);
                out.write(back - q + i, v);
            }
            back -= q;
            for i in q..3 * q {
                next.push(lvl_buf.read(lo + i));
                next_marks.push(lvl_marks.read(lo + i));
            }
        }
        cur = next;
        cur_marks = next_marks;
        level += 1;
    }

    for i in 0..n {
        let v = out.read(i);
        buf.write(i, v);
    }
    Ok(())
}

/// Merge two independently shuffled arrays into one shuffled array by
/// reversing the compaction network of a random bit array with exactly
/// `|b|` ones. O(n log n) swaps; trace depends only on the two lengths.
pub fn ointersperse<T: OItem>(a: OBuf<T>, b: OBuf<T>, tape: &mut RandTape) -> OBuf<T> {
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    if n == 0 {
        return a;
    }
    // bit array with nb ones, shuffled by a tape-driven Fisher-Yates
    let mut bits = OBuf::new("ointersperse.bits", 0, vec![0u64; n]);
    for i in 0..nb {
        bits.write(i, 1);
    }
    for i in (1..n).rev() {
        let j = tape.draw_below(i as u64 + 1) as usize;
        let vi = bits.read_at(i, Derivation::RandomTape);
        let vj = bits.read_at(j, Derivation::RandomTape);
        bits.write_at(i, vj, Derivation::RandomTape);
        bits.write_at(j, vi, Derivation::RandomTape);
    }
    // forward-simulate compaction of the bits, recording the swap schedule
    let mut route: Vec<(u32, u32, bool)> = Vec::new();
    or_compact(&mut bits, 0, n, &mut |i, j, c| route.push((i as u32, j as u32, c)));
    // one-bit positions map onto the front; reversing the network carries a
    // b-first concatenation back onto the one-positions
    let mut items = b.into_items();
    items.extend(a.into_items());
    let mut out = OBuf::new("ointersperse.out", 0, items);
    for &(i, j, c) in route.iter().rev() {
        out.cswap(i as usize, j as usize, c);
    }
    out
}

/// Route blocks into `m` bins of fixed capacity `cap` according to `dest`
/// (a bin id per block), padding each bin with dummies. One oblivious sort
/// plus one compaction over `n + m*cap` entries; trace depends only on
/// `(n, m, cap)`. A bin asked to hold more than `cap` blocks aborts with
/// `BinOverflow`.
pub fn obin_place(
    input: &OBuf<Block>,
    dest: impl Fn(&Block) -> u64,
    m: usize,
    cap: usize,
) -> Result<OBuf<Block>> {
    let n = input.len();
    let width = if n > 0 { input[0].width() } else { 0 };
    let total = n + m * cap;
    let mut work: Vec<Block> = Vec::with_capacity(total);
    for i in 0..n {
        let mut b = input.read(i);
        let d = dest(&b);
        assert!((d as usize) < m, "destination bin out of range");
        b.aux = d << 1; // real entry: filler bit clear
        work.push(b);
    }
    for bin in 0..m {
        for _ in 0..cap {
            let mut f = Block::dummy(width);
            f.aux = ((bin as u64) << 1) | 1;
            work.push(f);
        }
    }
    let mut work = OBuf::new("obinplace.work", 0, work);
    osort(&mut work, |b| b.aux as u128);

    // rank scan: keep the first `cap` of each bin group (real entries sort
    // before fillers); a real entry past `cap` is an overflow
    let mut prev_bin = u64::MAX;
    let mut rank = 0u64;
    let mut overflow = false;
    for i in 0..total {
        let mut b = work.read(i);
        let bin = b.aux >> 1;
        let filler = b.aux & 1 == 1;
        let new_group = bin != prev_bin;
        rank = if new_group { 0 } else { rank + 1 };
        let keep = rank < cap as u64;
        overflow |= !keep && !filler;
        b.aux = keep as u64;
        prev_bin = bin;
        work.write(i, b);
    }
    if overflow {
        return Err(Error::BinOverflow);
    }
    ocompact(&mut work, |b| b.aux & 1 == 1);
    work.truncate(m * cap);
    let mut items = work.into_items();
    for b in items.iter_mut() {
        b.aux = 0;
    }
    Ok(OBuf::new("obinplace.bins", 0, items))
}
