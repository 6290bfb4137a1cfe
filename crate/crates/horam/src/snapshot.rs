//! Versioned binary snapshot of the full ORAM state, for benchmark warm
//! starts: magic, version, geometry, the randomness-tape position, the top
//! array, and every occupied level's table. Restoring resumes the exact
//! execution point; a resumed instance produces the same access sequence
//! as one that never stopped.

use crate::block::Block;
use crate::error::{Error, Result};
use crate::obucket::BucketTable;
use crate::ocuckoo::CuckooTable;
use crate::oram::{LevelScheme, Oram};
use crate::otwotier::{TwoTierParams, TwoTierTable};
use crate::prf::PrfKey;
use crate::probcalc::{BucketSizing, LogProb};

const MAGIC: &[u8; 8] = b"HORAMSS1";
const VERSION: u32 = 1;

pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Writer {
        let mut w = Writer { buf: Vec::new() };
        w.bytes(MAGIC);
        w.u32(VERSION);
        w
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u128(&mut self, v: u128) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn i128(&mut self, v: i128) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn block(&mut self, b: &Block, width: usize) {
        assert_eq!(b.width(), width);
        self.i128(b.key);
        self.u64(b.aux);
        self.bytes(&b.value);
    }

    pub fn blocks(&mut self, blocks: &[Block], width: usize) {
        self.u64(blocks.len() as u64);
        for b in blocks {
            self.block(b, width);
        }
    }
}

pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Result<Reader<'a>> {
        let mut r = Reader { data, pos: 0 };
        let magic = r.take(8)?;
        if magic != MAGIC {
            return Err(Error::Io("not a snapshot file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Io(format!("unsupported snapshot version {version}")));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Io("truncated snapshot".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    pub fn i128(&mut self) -> Result<i128> {
        Ok(i128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn array16(&mut self) -> Result<[u8; 16]> {
        Ok(self.take(16)?.try_into().unwrap())
    }

    pub fn array32(&mut self) -> Result<[u8; 32]> {
        Ok(self.take(32)?.try_into().unwrap())
    }

    pub fn block(&mut self, width: usize) -> Result<Block> {
        let key = self.i128()?;
        let aux = self.u64()?;
        let value = self.take(width)?.to_vec();
        Ok(Block { key, aux, value: value.into() })
    }

    pub fn blocks(&mut self, width: usize) -> Result<Vec<Block>> {
        let n = self.u64()? as usize;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(self.block(width)?);
        }
        Ok(v)
    }

    pub fn done(&self) -> bool {
        self.pos == self.data.len()
    }
}

pub(crate) fn write_bucket(w: &mut Writer, t: &BucketTable) {
    let (sizing, key, dummy_ctr, width, tag, bins) = t.snapshot_parts();
    w.u64(sizing.n);
    w.u64(sizing.m);
    w.u64(sizing.ell);
    w.f64(sizing.delta.log2);
    w.bytes(&key.0);
    w.u64(dummy_ctr);
    w.u64(width as u64);
    w.u64(tag);
    w.blocks(bins, width);
}

pub(crate) fn read_bucket(r: &mut Reader) -> Result<BucketTable> {
    let n = r.u64()?;
    let m = r.u64()?;
    let ell = r.u64()?;
    let delta = LogProb { log2: r.f64()? };
    let key = PrfKey(r.array16()?);
    let dummy_ctr = r.u64()?;
    let width = r.u64()? as usize;
    let tag = r.u64()?;
    let bins = r.blocks(width)?;
    Ok(BucketTable::from_parts(BucketSizing { n, m, ell, delta }, key, dummy_ctr, width, tag, bins))
}

pub(crate) fn write_cuckoo(w: &mut Writer, t: &CuckooTable) {
    let (n, keys, dummy_ctr, width, tag, entries) = t.snapshot_parts();
    w.u64(n as u64);
    w.u32(keys.len() as u32);
    for k in &keys {
        w.bytes(&k.0);
    }
    w.u64(dummy_ctr);
    w.u64(width as u64);
    w.u64(tag);
    w.blocks(entries, width);
}

pub(crate) fn read_cuckoo(r: &mut Reader) -> Result<CuckooTable> {
    let n = r.u64()? as usize;
    let k = r.u32()? as usize;
    let mut keys = Vec::with_capacity(k);
    for _ in 0..k {
        keys.push(PrfKey(r.array16()?));
    }
    let dummy_ctr = r.u64()?;
    let width = r.u64()? as usize;
    let tag = r.u64()?;
    let entries = r.blocks(width)?;
    Ok(CuckooTable::from_parts(n, keys, dummy_ctr, width, tag, entries))
}

pub(crate) fn write_twotier(w: &mut Writer, t: &TwoTierTable) {
    let (majors, overflow, key, params, n, dummy_ctr, width, tag) = t.snapshot_parts();
    w.u32(params.eps_log2);
    w.u64(n as u64);
    w.bytes(&key.0);
    w.u64(dummy_ctr);
    w.u64(width as u64);
    w.u64(tag);
    w.u32(majors.len() as u32);
    for m in majors {
        write_bucket(w, m);
    }
    write_cuckoo(w, overflow);
}

pub(crate) fn read_twotier(r: &mut Reader) -> Result<TwoTierTable> {
    let eps_log2 = r.u32()?;
    let n = r.u64()? as usize;
    let key = PrfKey(r.array16()?);
    let dummy_ctr = r.u64()?;
    let width = r.u64()? as usize;
    let tag = r.u64()?;
    let count = r.u32()? as usize;
    let mut majors = Vec::with_capacity(count);
    for _ in 0..count {
        majors.push(read_bucket(r)?);
    }
    let overflow = read_cuckoo(r)?;
    let params = TwoTierParams::derive(n as u64, eps_log2)?;
    Ok(TwoTierTable::from_parts(majors, overflow, key, params, n, dummy_ctr, width, tag))
}

pub(crate) fn write_scheme(w: &mut Writer, s: &Option<LevelScheme>) {
    match s {
        None => w.u8(0),
        Some(LevelScheme::Bucket { m }) => {
            w.u8(1);
            w.u64(*m);
        }
        Some(LevelScheme::Cuckoo { k }) => {
            w.u8(2);
            w.u32(*k);
        }
        Some(LevelScheme::TwoTier { eps_log2 }) => {
            w.u8(3);
            w.u32(*eps_log2);
        }
    }
}

pub(crate) fn read_scheme(r: &mut Reader) -> Result<Option<LevelScheme>> {
    Ok(match r.u8()? {
        0 => None,
        1 => Some(LevelScheme::Bucket { m: r.u64()? }),
        2 => Some(LevelScheme::Cuckoo { k: r.u32()? }),
        3 => Some(LevelScheme::TwoTier { eps_log2: r.u32()? }),
        t => return Err(Error::Io(format!("bad scheme tag {t}"))),
    })
}

impl Oram {
    /// Serialize the complete state (versioned header, geometry, tape
    /// position, top array, occupied levels).
    pub fn snapshot(&self) -> Vec<u8> {
        self.snapshot_impl()
    }

    /// Rebuild an instance from [`Oram::snapshot`] bytes.
    pub fn restore(data: &[u8]) -> Result<Oram> {
        Oram::restore_impl(data)
    }
}

#[cfg(test)]
mod tests {
    use crate::oram::{Oram, OramConfig};

    #[test]
    fn snapshot_roundtrip_resumes_exactly() {
        let mut config = OramConfig::new(64, 8);
        config.seed = 77;
        config.top_capacity = 8;
        let mut a = Oram::init(config, &[]).unwrap();
        for i in 0..37u64 {
            a.write(i % 64, &i.to_le_bytes()).unwrap();
        }
        let snap = a.snapshot();
        let mut b = Oram::restore(&snap).unwrap();
        // both instances continue identically
        for i in 0..200u64 {
            let addr = (i * 13) % 64;
            assert_eq!(a.read(addr).unwrap(), b.read(addr).unwrap(), "step {i}");
            let v = (i * 31).to_le_bytes();
            assert_eq!(a.write(addr, &v).unwrap(), b.write(addr, &v).unwrap());
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(Oram::restore(b"not a snapshot").is_err());
    }
}
