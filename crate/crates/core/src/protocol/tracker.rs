//! Fragment bookkeeping while the schedule runs.

use rand::Rng;

use crate::oracle::ReplayOp;
use crate::state::{fuse, x_measure, GhzBasisIndex, GhzDiagonalState, MemoryId};
use crate::{Error, Result};

/// Live fragments, a memory → fragment index, and X measurements waiting
/// for their fragment to grow past two qubits.
pub(crate) struct Tracker {
    fragments: Vec<Option<GhzDiagonalState>>,
    owner: Vec<usize>,
    pending: Vec<MemoryId>,
    /// Fragment size right after each X measurement, by memory.
    measured: Vec<Option<usize>>,
    pub swaps: usize,
    pub max_qubits: usize,
    pub ops: Option<Vec<ReplayOp>>,
}

const NONE: usize = usize::MAX;

impl Tracker {
    pub fn new(num_memories: usize, links: Vec<GhzDiagonalState>, pending: Vec<MemoryId>, record: bool) -> Self {
        let mut owner = vec![NONE; num_memories];
        for (i, s) in links.iter().enumerate() {
            for q in s.qubits() {
                owner[q.0 as usize] = i;
            }
        }
        Tracker {
            fragments: links.into_iter().map(Some).collect(),
            owner,
            pending,
            measured: vec![None; num_memories],
            swaps: 0,
            max_qubits: 2,
            ops: record.then(Vec::new),
        }
    }

    fn fragment_of(&self, m: MemoryId) -> Result<usize> {
        match self.owner.get(m.0 as usize) {
            Some(&i) if i != NONE => Ok(i),
            _ => Err(Error::protocol(format!("memory {m} holds no live qubit"))),
        }
    }

    fn store(&mut self, state: GhzDiagonalState) -> usize {
        let idx = self.fragments.len();
        for q in state.qubits() {
            self.owner[q.0 as usize] = idx;
        }
        self.fragments.push(Some(state));
        idx
    }

    /// GHZ projection of `memories`, which must lie in distinct fragments.
    /// Returns the size of the merged fragment after pending measurements.
    pub fn fuse<R: Rng + ?Sized>(&mut self, memories: &[MemoryId], rng: &mut R) -> Result<usize> {
        let mut idx = Vec::with_capacity(memories.len());
        for &m in memories {
            let f = self.fragment_of(m)?;
            if idx.contains(&f) {
                return Err(Error::protocol(format!(
                    "two memories of one node ({m} and another) belong to the same fragment"
                )));
            }
            idx.push(f);
        }
        let outcome = GhzBasisIndex::unpack(rng.gen_range(0..1usize << memories.len()));
        let merged = {
            let frags: Vec<(&GhzDiagonalState, usize)> = idx
                .iter()
                .zip(memories)
                .map(|(&f, &m)| {
                    let s = self.fragments[f].as_ref().expect("live fragment");
                    (s, s.position(m).expect("owner index is consistent"))
                })
                .collect();
            fuse(&frags, outcome)?
        };
        for (&f, &m) in idx.iter().zip(memories) {
            self.fragments[f] = None;
            self.owner[m.0 as usize] = NONE;
        }
        if let Some(ops) = self.ops.as_mut() {
            ops.push(ReplayOp::Fuse {
                memories: memories.to_vec(),
                outcome,
            });
        }
        self.swaps += 1;
        let at = self.store(merged);
        self.settle(at, rng)?;
        let size = self.fragment_size(at);
        // sizes are taken once the node has finished its measurements
        self.max_qubits = self.max_qubits.max(size);
        Ok(size)
    }

    fn fragment_size(&self, f: usize) -> usize {
        self.fragments[f].as_ref().map_or(0, |s| s.num_qubits())
    }

    /// Requests an X measurement of `m`; it runs once its fragment has at
    /// least three qubits. Returns the size of the fragment holding `m`.
    pub fn request_x<R: Rng + ?Sized>(&mut self, m: MemoryId, rng: &mut R) -> Result<usize> {
        if let Some(size) = self.measured[m.0 as usize] {
            return Ok(size);
        }
        if !self.pending.contains(&m) {
            self.pending.push(m);
        }
        let f = self.fragment_of(m)?;
        self.settle(f, rng)?;
        Ok(self.fragment_size(f))
    }

    fn settle<R: Rng + ?Sized>(&mut self, f: usize, rng: &mut R) -> Result<()> {
        loop {
            let state = self.fragments[f].as_ref().expect("live fragment");
            if state.num_qubits() < 3 {
                return Ok(());
            }
            let Some(k) = self.pending.iter().position(|m| state.contains(*m)) else {
                return Ok(());
            };
            let m = self.pending.swap_remove(k);
            let outcome = rng.gen_bool(0.5);
            let pos = state.position(m).expect("checked");
            let next = x_measure(state, pos, outcome)?;
            self.owner[m.0 as usize] = NONE;
            self.measured[m.0 as usize] = Some(next.num_qubits());
            if let Some(ops) = self.ops.as_mut() {
                ops.push(ReplayOp::XMeasure { memory: m, outcome });
            }
            self.fragments[f] = Some(next);
        }
    }

    /// The fragment holding `m` once every measurement has run.
    pub fn finish(mut self, m: MemoryId) -> Result<(GhzDiagonalState, Option<Vec<ReplayOp>>)> {
        if let Some(&p) = self.pending.first() {
            return Err(Error::protocol(format!("X measurement of memory {p} never became possible")));
        }
        let f = self.fragment_of(m)?;
        let state = self.fragments[f].take().expect("live fragment");
        Ok((state, self.ops))
    }
}
