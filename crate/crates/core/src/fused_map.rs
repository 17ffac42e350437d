//! Global-to-local ID compaction with a fused, lock-free hash table.
//!
//! The table is open-addressed with linear probing. Keys start out as
//! [`SENTINEL`]; an insertion claims a slot with a single compare-exchange
//! and, if it won, immediately takes the next local ID from a shared atomic
//! counter. Building the table and numbering the distinct IDs therefore
//! happen in one pass with no barrier between insertions. The only barrier
//! is the one between the build phase ([`IdMapBuilder`]) and the read phase
//! ([`IdMapTable`]), which the type split makes explicit.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::thread;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{NodeId, SENTINEL};
use crate::sampler::SubgraphBatch;

const FIB_MULTIPLIER: u64 = 0x9E37_79B9_7F4A_7C15;

/// Maps a key onto a slot index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashFn {
    /// Fibonacci multiply-shift; requires a power-of-two capacity.
    MultiplyShift,
    /// `id % capacity`, any capacity. Handy for hand-traced examples.
    Modulo,
}

impl HashFn {
    #[inline]
    fn index(self, id: NodeId, capacity: usize) -> usize {
        match self {
            HashFn::MultiplyShift => {
                let bits = capacity.trailing_zeros();
                if bits == 0 {
                    0
                } else {
                    (id.wrapping_mul(FIB_MULTIPLIER) >> (64 - bits)) as usize
                }
            }
            HashFn::Modulo => (id % capacity as u64) as usize,
        }
    }
}

/// Smallest power of two holding `num_ids` keys at load factor <= 0.5.
pub fn capacity_for(num_ids: usize) -> usize {
    num_ids.max(1).saturating_mul(2).next_power_of_two()
}

/// Where an insertion landed and whether the key was already there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Insertion {
    pub slot: usize,
    pub already_present: bool,
}

/// Build-phase view of the table. All methods take `&self` and may be called
/// from any number of threads at once.
#[derive(Debug)]
pub struct IdMapBuilder {
    slots: Vec<AtomicSlot>,
    local_counter: AtomicU64,
    hash: HashFn,
}

/// Key and value side by side so a probe touches one cache line.
#[derive(Debug)]
struct AtomicSlot {
    key: AtomicU64,
    value: AtomicU64,
}

impl AtomicSlot {
    fn empty() -> Self {
        AtomicSlot { key: AtomicU64::new(SENTINEL), value: AtomicU64::new(0) }
    }

    /// Plain read for use once no writer can be running.
    fn get(&self) -> (NodeId, u64) {
        (self.key.load(Ordering::Relaxed), self.value.load(Ordering::Relaxed))
    }
}

fn empty_slots(capacity: usize) -> Vec<AtomicSlot> {
    (0..capacity).map(|_| AtomicSlot::empty()).collect()
}

impl IdMapBuilder {
    pub fn new(capacity: usize, hash: HashFn) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::validation("id map capacity must be positive"));
        }
        if hash == HashFn::MultiplyShift && !capacity.is_power_of_two() {
            return Err(Error::validation("multiply-shift hashing needs a power-of-two capacity"));
        }
        Ok(IdMapBuilder {
            slots: empty_slots(capacity),
            local_counter: AtomicU64::new(0),
            hash,
        })
    }

    /// Table sized for `num_ids` raw IDs (duplicates counted).
    pub fn for_ids(num_ids: usize) -> Self {
        Self::new(capacity_for(num_ids), HashFn::MultiplyShift).expect("power-of-two capacity")
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn local_counter(&self) -> u64 {
        self.local_counter.load(Ordering::Acquire)
    }

    /// Key and value currently stored at `slot`, if occupied.
    pub fn slot(&self, slot: usize) -> Option<(NodeId, u64)> {
        let s = &self.slots[slot];
        let key = s.key.load(Ordering::Acquire);
        (key != SENTINEL).then(|| (key, s.value.load(Ordering::Acquire)))
    }

    /// Places `id` in the table without numbering it.
    ///
    /// Starting at the hashed slot, an empty-looking slot is claimed with
    /// one compare-exchange of `SENTINEL -> id`. Winning it means this call
    /// placed the key; finding `id` (before or through a lost exchange)
    /// means another insertion already did; any other key is a collision
    /// and the probe moves one slot right, wrapping. Occupied slots are only
    /// read, never exchanged.
    pub fn insert(&self, id: NodeId) -> Result<Insertion> {
        if id == SENTINEL {
            return Err(Error::validation("the sentinel id cannot be inserted"));
        }
        let capacity = self.slots.len();
        let mut slot = self.hash.index(id, capacity);
        for _ in 0..capacity {
            let key = &self.slots[slot].key;
            let mut seen = key.load(Ordering::Acquire);
            if seen == SENTINEL {
                match key.compare_exchange(SENTINEL, id, Ordering::AcqRel, Ordering::Acquire) {
                    Ok(_) => return Ok(Insertion { slot, already_present: false }),
                    Err(prev) => seen = prev,
                }
            }
            if seen == id {
                return Ok(Insertion { slot, already_present: true });
            }
            slot = if slot + 1 == capacity { 0 } else { slot + 1 };
        }
        Err(Error::Capacity { capacity })
    }

    /// Inserts `id` and, if this call placed it, assigns the next local ID.
    ///
    /// The counter increment returns the ID it consumed, so concurrent
    /// winners can never share a local ID.
    pub fn fused_insert(&self, id: NodeId) -> Result<Insertion> {
        let ins = self.insert(id)?;
        if !ins.already_present {
            let local = self.local_counter.fetch_add(1, Ordering::AcqRel);
            self.slots[ins.slot].value.store(local, Ordering::Release);
        }
        Ok(ins)
    }

    /// Ends the build phase. Taking `self` by value guarantees every
    /// inserting thread has finished.
    pub fn finish(self) -> IdMapTable {
        let num_inserted = self.local_counter.into_inner() as usize;
        IdMapTable {
            slots: self.slots,
            num_inserted,
            hash: self.hash,
        }
    }
}

/// Read-phase ID map: global ID -> dense local ID in `0..num_inserted`.
#[derive(Debug)]
pub struct IdMapTable {
    slots: Vec<AtomicSlot>,
    num_inserted: usize,
    hash: HashFn,
}

impl PartialEq for IdMapTable {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash
            && self.num_inserted == other.num_inserted
            && self.slots.len() == other.slots.len()
            && self.slots.iter().zip(&other.slots).all(|(a, b)| a.get() == b.get())
    }
}

impl Eq for IdMapTable {}

impl IdMapTable {
    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn num_inserted(&self) -> usize {
        self.num_inserted
    }

    pub fn slot(&self, slot: usize) -> Option<(NodeId, u64)> {
        let (key, value) = self.slots[slot].get();
        (key != SENTINEL).then_some((key, value))
    }

    /// Occupied `(global, local)` pairs in slot order.
    pub fn entries(&self) -> impl Iterator<Item = (NodeId, u64)> + '_ {
        self.slots.iter().map(AtomicSlot::get).filter(|&(k, _)| k != SENTINEL)
    }

    /// Inverse mapping: element `l` is the global ID with local ID `l`.
    pub fn local_to_global(&self) -> Vec<NodeId> {
        let mut out = vec![SENTINEL; self.num_inserted];
        for (k, v) in self.entries() {
            out[v as usize] = k;
        }
        out
    }

    /// Follows the same probe sequence as insertion.
    pub fn lookup(&self, id: NodeId) -> Result<u64> {
        if id == SENTINEL {
            return Err(Error::NotFound(id));
        }
        let capacity = self.slots.len();
        let mut slot = self.hash.index(id, capacity);
        for _ in 0..capacity {
            let (key, value) = self.slots[slot].get();
            if key == id {
                return Ok(value);
            }
            if key == SENTINEL {
                break;
            }
            slot = if slot + 1 == capacity { 0 } else { slot + 1 };
        }
        Err(Error::NotFound(id))
    }

    /// Rewrites every edge of `batch` into local IDs, preserving order and
    /// weights.
    pub fn translate_batch(&self, mut batch: SubgraphBatch) -> Result<SubgraphBatch> {
        batch.local_seeds = batch.seeds.iter().map(|&s| self.lookup(s)).collect::<Result<_>>()?;
        batch.local_layers = batch
            .layers
            .iter()
            .map(|layer| {
                layer
                    .par_iter()
                    .map(|&(t, s, w)| Ok((self.lookup(t)?, self.lookup(s)?, w)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        batch.num_local = self.num_inserted;
        Ok(batch)
    }
}

fn check_ids(ids: &[NodeId], workers: usize) -> Result<()> {
    if ids.is_empty() {
        return Err(Error::validation("cannot build an id map from an empty id list"));
    }
    if workers == 0 {
        return Err(Error::validation("worker count must be at least 1"));
    }
    if ids.contains(&SENTINEL) {
        return Err(Error::validation("the sentinel id cannot be inserted"));
    }
    Ok(())
}

/// Runs `f` over `workers` contiguous chunks of `ids` on scoped threads and
/// returns once all have joined.
fn run_chunked(ids: &[NodeId], workers: usize, f: impl Fn(&[NodeId]) -> Result<()> + Sync) -> Result<()> {
    if workers == 1 {
        return f(ids);
    }
    let chunk = ids.len().div_ceil(workers);
    thread::scope(|scope| {
        let handles: Vec<_> = ids.chunks(chunk).map(|part| scope.spawn(|| f(part))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("id map worker panicked"))
            .collect::<Result<()>>()
    })
}

/// Fills `builder` from `ids` with `workers` threads and closes the build.
pub fn build_into(builder: IdMapBuilder, ids: &[NodeId], workers: usize) -> Result<IdMapTable> {
    check_ids(ids, workers)?;
    run_chunked(ids, workers, |part| {
        for &id in part {
            builder.fused_insert(id)?;
        }
        Ok(())
    })?;
    Ok(builder.finish())
}

/// Builds the ID map for `ids` (duplicates allowed) using `workers` threads.
///
/// With one worker, local IDs follow first-seen order in `ids`. With more,
/// the numbering is some permutation of `0..n_unique`.
pub fn build(ids: &[NodeId], workers: usize) -> Result<IdMapTable> {
    check_ids(ids, workers)?;
    build_into(IdMapBuilder::for_ids(ids.len()), ids, workers)
}

struct LockedTable {
    slots: Vec<AtomicSlot>,
    counter: u64,
}

/// Same contract as [`build`], but every insertion runs inside one global
/// critical section. Exists only as a benchmark reference.
pub fn build_locked_baseline(ids: &[NodeId], workers: usize) -> Result<IdMapTable> {
    check_ids(ids, workers)?;
    let capacity = capacity_for(ids.len());
    let hash = HashFn::MultiplyShift;
    let table = Mutex::new(LockedTable {
        slots: empty_slots(capacity),
        counter: 0,
    });
    run_chunked(ids, workers, |part| {
        for &id in part {
            let mut t = table.lock().expect("baseline table poisoned");
            let mut slot = hash.index(id, capacity);
            let mut probes = 0;
            loop {
                let key = t.slots[slot].key.load(Ordering::Relaxed);
                if key == SENTINEL {
                    t.slots[slot].key.store(id, Ordering::Relaxed);
                    t.slots[slot].value.store(t.counter, Ordering::Relaxed);
                    t.counter += 1;
                    break;
                }
                if key == id {
                    break;
                }
                probes += 1;
                if probes == capacity {
                    return Err(Error::Capacity { capacity });
                }
                slot = if slot + 1 == capacity { 0 } else { slot + 1 };
            }
        }
        Ok(())
    })?;
    let t = table.into_inner().expect("baseline table poisoned");
    Ok(IdMapTable { slots: t.slots, num_inserted: t.counter as usize, hash })
}
