//! Logical memory-access trace recording and comparison. Every oblivious
//! structure in the crate routes its block touches through [`record`], so a
//! test can capture the full access sequence of an operation and compare it
//! against another run.
//!
//! Granularity is the logical block. A session is bound to one thread; while
//! a session is active the primitives run sequentially so record order is
//! deterministic. Without a session, recording is a no-op and internal
//! parallelism is permitted.
//!
//! Two comparison levels are provided, and tests state which one certifies
//! which operation:
//! * full-trace equality under a fixed randomness tape, for data-independent
//!   operations (strictly stronger than simulatability for these);
//! * [`TraceShape`] equality, where PRF-derived and random-tape indices are
//!   masked, for lookups whose probe positions are pseudorandom (a
//!   statistical check, strictly weaker than the computational notion).

use crate::error::{Error, Result};
use crate::stats;
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Mutex;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArrayId(u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Derivation {
    /// Index is a function of public parameters only.
    DataIndependent,
    /// Index was computed from a PRF over a key.
    PrfDerived,
    /// Index was drawn from the randomness tape.
    RandomTape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessRecord {
    pub array: ArrayId,
    pub op: OpKind,
    pub index: u64,
    pub span: u64,
    pub derived: Derivation,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<AccessRecord>,
    pub public_params: BTreeMap<String, u64>,
}

/// A trace with PRF-derived and random-tape indices replaced by a
/// placeholder; array identity, op kind, span, derivation and order are
/// retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceShape {
    pub records: Vec<AccessRecord>,
}

const MASKED_INDEX: u64 = u64::MAX;

// Array names are interned globally so that two runs which build the same
// logical structures in the same order see the same ids.
fn name_table() -> &'static Mutex<(Vec<(String, u64)>, BTreeMap<(String, u64), u32>)> {
    static T: OnceLock<Mutex<(Vec<(String, u64)>, BTreeMap<(String, u64), u32>)>> = OnceLock::new();
    T.get_or_init(|| Mutex::new((Vec::new(), BTreeMap::new())))
}

/// Intern a stable (name, qualifier) pair as an array identity. The
/// qualifier distinguishes instances with the same role (e.g. ORAM levels).
pub fn array_id(name: &str, qualifier: u64) -> ArrayId {
    let mut t = name_table().lock().unwrap();
    let key = (name.to_string(), qualifier);
    if let Some(&id) = t.1.get(&key) {
        return ArrayId(id);
    }
    let id = t.0.len() as u32;
    t.0.push(key.clone());
    t.1.insert(key, id);
    ArrayId(id)
}

pub fn array_name(id: ArrayId) -> String {
    let t = name_table().lock().unwrap();
    let (name, q) = &t.0[id.0 as usize];
    format!("{name}[{q}]")
}

thread_local! {
    static SESSION: RefCell<Option<Trace>> = const { RefCell::new(None) };
    // cheap flag checked on every record before touching the RefCell
    static ACTIVE: std::cell::Cell<bool> = const { std::cell::Cell::new(false) };
}

/// Guard for an active recording session on the current thread.
pub struct Session {
    _priv: (),
}

/// Begin recording on this thread. Panics if a session is already active.
pub fn begin() -> Session {
    SESSION.with(|s| {
        let mut s = s.borrow_mut();
        assert!(s.is_none(), "trace session already active on this thread");
        *s = Some(Trace::default());
    });
    ACTIVE.with(|a| a.set(true));
    Session { _priv: () }
}

impl Session {
    pub fn finish(self) -> Trace {
        ACTIVE.with(|a| a.set(false));
        SESSION.with(|s| s.borrow_mut().take().expect("session vanished"))
    }
}

pub fn active() -> bool {
    ACTIVE.with(|a| a.get())
}

/// Append one access record to the active session; no-op without a session.
/// `array_len` backs the bounds contract `index + span <= declared length`.
#[inline]
pub fn record(
    array: ArrayId,
    array_len: u64,
    op: OpKind,
    index: u64,
    span: u64,
    derived: Derivation,
) {
    if !active() {
        return;
    }
    SESSION.with(|s| {
        if let Some(tr) = s.borrow_mut().as_mut() {
            assert!(span >= 1, "span must be at least 1");
            assert!(
                index + span <= array_len,
                "access beyond declared array length: {}+{} > {} on {}",
                index,
                span,
                array_len,
                array_name(array)
            );
            tr.records.push(AccessRecord { array, op, index, span, derived });
        }
    });
}

/// Declare a public parameter of the traced operation (lengths, occupancy,
/// iteration counts) — everything a simulator would take as input.
pub fn public_param(key: &str, value: u64) {
    if !active() {
        return;
    }
    SESSION.with(|s| {
        if let Some(tr) = s.borrow_mut().as_mut() {
            tr.public_params.insert(key.to_string(), value);
        }
    });
}

/// Capture the trace of `f` on this thread.
pub fn capture<T>(f: impl FnOnce() -> T) -> (T, Trace) {
    let session = begin();
    let out = f();
    (out, session.finish())
}

pub fn shape_of(trace: &Trace) -> TraceShape {
    let records = trace
        .records
        .iter()
        .map(|r| {
            let mut r = *r;
            if r.derived != Derivation::DataIndependent {
                r.index = MASKED_INDEX;
            }
            r
        })
        .collect();
    TraceShape { records }
}

pub fn assert_shape_equal(a: &TraceShape, b: &TraceShape) -> bool {
    a.records == b.records
}

/// Index of the first differing record, for test diagnostics.
pub fn first_divergence(a: &Trace, b: &Trace) -> Option<usize> {
    let n = a.records.len().min(b.records.len());
    (0..n).find(|&i| a.records[i] != b.records[i]).or({
        if a.records.len() != b.records.len() {
            Some(n)
        } else {
            None
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uniformity {
    Pass,
    Fail,
}

/// Chi-square goodness-of-fit verdict on PRF-derived indices against the
/// uniform distribution over `[0, domain_size)` at the given significance.
/// With fewer than five expected observations per cell the test has no
/// power and passes by convention.
pub fn uniformity_test(indices: &[u64], domain_size: u64, significance: f64) -> Result<Uniformity> {
    if domain_size < 2 {
        return Err(Error::Param("uniformity_test: domain_size must be >= 2".into()));
    }
    if indices.is_empty() {
        return Err(Error::Param("uniformity_test: empty sample".into()));
    }
    let n = indices.len() as u64;
    if (n as f64) < 5.0 * domain_size as f64 {
        return Ok(Uniformity::Pass);
    }
    let mut counts = vec![0u64; domain_size as usize];
    for &i in indices {
        assert!(i < domain_size, "index outside domain");
        counts[i as usize] += 1;
    }
    let stat = stats::chi_square_uniform(&counts, n);
    let p = stats::chi_square_pvalue(stat, domain_size as f64 - 1.0);
    Ok(if p >= significance { Uniformity::Pass } else { Uniformity::Fail })
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Dump format: a header of `key=value` public parameters, then one
    /// record per line as `array_id op index span derived`. Ordering is
    /// stable for diff-based tests.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.public_params {
            let _ = writeln!(out, "# {k}={v}");
        }
        for r in &self.records {
            let op = match r.op {
                OpKind::Read => "read",
                OpKind::Write => "write",
            };
            let d = match r.derived {
                Derivation::DataIndependent => "data_independent",
                Derivation::PrfDerived => "prf_derived",
                Derivation::RandomTape => "random_tape",
            };
            let _ = writeln!(out, "{} {op} {} {} {d}", array_name(r.array), r.index, r.span);
        }
        out
    }
}
