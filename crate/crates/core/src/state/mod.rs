//! GHZ-diagonal state algebra.
//!
//! An `n`-qubit GHZ basis vector is `Z_0^j X_1^{i_1} ... X_{n-1}^{i_{n-1}} |GHZ(n)>`,
//! i.e. `(|x> + (-1)^j |x̄>)/√2` where `x = (0, i_1, ..., i_{n-1})`. The `x`
//! bits are the Z-parities of each qubit relative to qubit 0 and the sign bit
//! `j` is the eigenvalue of `X^{⊗n}`. A GHZ-diagonal state stores one
//! probability per label, packed as `j | (i_1 << 1) | ... | (i_{n-1} << (n-1))`.
//!
//! Every operation here is a pure function over these coefficient vectors.
//! Measurement outcomes are canonicalized to the all-zeros (or `|+>`) branch;
//! the Pauli correction that maps the canonical branch onto the branch that
//! actually occurred is accumulated in a [`PauliFrame`].

mod entropy;
mod fusion;
mod swap;
mod werner;

use std::fmt;

use crate::{Error, Result};

pub use entropy::{coherent_information, shannon_entropy_bits};
pub use fusion::{fuse, merge_swap, merge_swap_with_outcome, x_measure};
pub use swap::{ghz_swap_equal, ghz_swap_mixed};
pub use werner::{werner_from_fidelity, WernerParams};

/// Coefficients more negative than this are rejected rather than clamped.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;
/// Allowed deviation of the coefficient sum from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Largest fragment the dense coefficient storage accepts.
pub const MAX_QUBITS: usize = 26;

/// Identifier of a quantum memory (one qubit).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MemoryId(pub u32);

impl fmt::Display for MemoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A GHZ basis label `(j, i_1, ..., i_{n-1})`.
///
/// Bit `q - 1` of `x_bits` is the X exponent on qubit `q`; qubit 0 never
/// carries one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct GhzBasisIndex {
    pub z_bit: bool,
    pub x_bits: u64,
}

impl GhzBasisIndex {
    pub fn new(z_bit: bool, x_bits: u64) -> Self {
        GhzBasisIndex { z_bit, x_bits }
    }

    pub fn pack(self) -> usize {
        (self.z_bit as usize) | ((self.x_bits as usize) << 1)
    }

    pub fn unpack(index: usize) -> Self {
        GhzBasisIndex {
            z_bit: index & 1 == 1,
            x_bits: (index >> 1) as u64,
        }
    }

    /// Number of X operators after applying the complement identity
    /// `X^{⊗n} |GHZ> = |GHZ>`, i.e. `min(k, n - k)`.
    pub fn weight_class(self, num_qubits: usize) -> usize {
        let k = self.x_bits.count_ones() as usize;
        k.min(num_qubits - k)
    }

    /// Short operator form such as `Z1 X2 X4`, using the fewer-X
    /// representative. Qubits are numbered from 1.
    pub fn describe(self, num_qubits: usize) -> String {
        let k = self.x_bits.count_ones() as usize;
        let mut parts = Vec::new();
        if self.z_bit {
            parts.push("Z1".to_string());
        }
        if 2 * k > num_qubits {
            // complement: X on the qubits (including qubit 1) that were clear
            for q in 0..num_qubits {
                let set = q > 0 && (self.x_bits >> (q - 1)) & 1 == 1;
                if !set {
                    parts.push(format!("X{}", q + 1));
                }
            }
        } else {
            for q in 1..num_qubits {
                if (self.x_bits >> (q - 1)) & 1 == 1 {
                    parts.push(format!("X{}", q + 1));
                }
            }
        }
        if parts.is_empty() {
            "I".to_string()
        } else {
            parts.join(" ")
        }
    }
}

/// Pending single-qubit Pauli corrections, one `(x, z)` pair per qubit.
///
/// The physical state is `F ρ F†` where `ρ` is the stored canonical state and
/// `F` is the product of the recorded Paulis.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PauliFrame {
    x: Vec<bool>,
    z: Vec<bool>,
}

impl PauliFrame {
    pub fn identity(num_qubits: usize) -> Self {
        PauliFrame {
            x: vec![false; num_qubits],
            z: vec![false; num_qubits],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|&b| b)
    }

    pub fn get(&self, qubit: usize) -> (bool, bool) {
        (self.x[qubit], self.z[qubit])
    }

    pub fn apply_x(&mut self, qubit: usize) {
        self.x[qubit] ^= true;
    }

    pub fn apply_z(&mut self, qubit: usize) {
        self.z[qubit] ^= true;
    }

    pub(crate) fn push(&mut self, x: bool, z: bool) {
        self.x.push(x);
        self.z.push(z);
    }

    pub(crate) fn remove(&mut self, qubit: usize) -> (bool, bool) {
        (self.x.remove(qubit), self.z.remove(qubit))
    }

    /// XOR mask the frame induces on packed labels.
    ///
    /// `Z` on any qubit flips the sign bit; `X` on qubit `q > 0` flips its
    /// parity bit; `X` on qubit 0 flips every other parity bit.
    pub fn label_mask(&self) -> usize {
        let n = self.len();
        let mut mask = 0usize;
        if self.z.iter().filter(|&&b| b).count() % 2 == 1 {
            mask ^= 1;
        }
        for q in 1..n {
            if self.x[q] {
                mask ^= 1 << q;
            }
        }
        if n > 0 && self.x[0] {
            mask ^= ((1usize << n) - 1) & !1;
        }
        mask
    }
}

/// A normalized GHZ-diagonal state on an ordered list of memories.
#[derive(Clone, Debug, PartialEq)]
pub struct GhzDiagonalState {
    qubits: Vec<MemoryId>,
    coeffs: Vec<f64>,
    frame: PauliFrame,
}

impl GhzDiagonalState {
    /// Validates and normalizes a coefficient vector.
    pub fn new(qubits: Vec<MemoryId>, coeffs: Vec<f64>) -> Result<Self> {
        let n = qubits.len();
        if n < 2 {
            return Err(Error::domain(format!(
                "a GHZ-diagonal state needs at least 2 qubits, got {n}"
            )));
        }
        if n > MAX_QUBITS {
            return Err(Error::domain(format!("{n} qubits exceed the dense limit of {MAX_QUBITS}")));
        }
        if coeffs.len() != 1 << n {
            return Err(Error::domain(format!(
                "{} coefficients supplied for {n} qubits (expected {})",
                coeffs.len(),
                1usize << n
            )));
        }
        let mut seen = qubits.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != n {
            return Err(Error::domain("duplicate memory id in qubit list"));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite() || **c < -NEGATIVE_TOLERANCE) {
            return Err(Error::domain(format!("invalid coefficient {c}")));
        }
        let sum: f64 = coeffs.iter().map(|c| c.max(0.0)).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::domain(format!("coefficients sum to {sum}, not 1")));
        }
        Ok(Self::from_parts(qubits, coeffs, None))
    }

    /// Clamps round-off negatives, renormalizes and attaches a frame.
    pub(crate) fn from_parts(qubits: Vec<MemoryId>, mut coeffs: Vec<f64>, frame: Option<PauliFrame>) -> Self {
        debug_assert_eq!(coeffs.len(), 1 << qubits.len());
        let mut sum = 0.0;
        for c in coeffs.iter_mut() {
            if *c < 0.0 {
                *c = 0.0;
            }
            sum += *c;
        }
        if sum > 0.0 && (sum - 1.0).abs() > f64::EPSILON {
            coeffs.iter_mut().for_each(|c| *c /= sum);
        }
        let n = qubits.len();
        GhzDiagonalState {
            qubits,
            coeffs,
            frame: frame.unwrap_or_else(|| PauliFrame::identity(n)),
        }
    }

    /// The pure GHZ state on `qubits`.
    pub fn pure_ghz(qubits: Vec<MemoryId>) -> Result<Self> {
        let n = qubits.len();
        if n < 2 || n > MAX_QUBITS {
            return Err(Error::domain(format!("cannot build GHZ({n})")));
        }
        let mut coeffs = vec![0.0; 1 << n];
        coeffs[0] = 1.0;
        Ok(Self::from_parts(qubits, coeffs, None))
    }

    /// The maximally mixed state on `qubits` (uniform over all labels).
    pub fn maximally_mixed(qubits: Vec<MemoryId>) -> Result<Self> {
        let n = qubits.len();
        if n < 2 || n > MAX_QUBITS {
            return Err(Error::domain(format!("cannot build a {n}-qubit mixture")));
        }
        let dim = 1usize << n;
        Ok(Self::from_parts(qubits, vec![1.0 / dim as f64; dim], None))
    }

    /// Werner link `weight·Φ⁺ + (1 - weight)·I/4` on memories `(a, b)`.
    pub fn werner(a: MemoryId, b: MemoryId, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::domain(format!("Werner weight {weight} outside [0, 1]")));
        }
        if a == b {
            return Err(Error::domain("a link needs two distinct memories"));
        }
        let mixed = (1.0 - weight) / 4.0;
        Ok(Self::from_parts(
            vec![a, b],
            vec![weight + mixed, mixed, mixed, mixed],
            None,
        ))
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[MemoryId] {
        &self.qubits
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, label: GhzBasisIndex) -> f64 {
        self.coeffs[label.pack()]
    }

    pub fn frame(&self) -> &PauliFrame {
        &self.frame
    }

    pub fn position(&self, memory: MemoryId) -> Option<usize> {
        self.qubits.iter().position(|&q| q == memory)
    }

    pub fn contains(&self, memory: MemoryId) -> bool {
        self.position(memory).is_some()
    }

    /// Overlap with the all-zeros label (the fidelity with GHZ(n)).
    pub fn fidelity(&self) -> f64 {
        self.coeffs[0]
    }

    /// Coefficients of the physical state `F ρ F†`, i.e. with the recorded
    /// frame applied as a label permutation.
    pub fn physical_coeffs(&self) -> Vec<f64> {
        let mask = self.frame.label_mask();
        let mut out = vec![0.0; self.coeffs.len()];
        for (label, &c) in self.coeffs.iter().enumerate() {
            out[label ^ mask] = c;
        }
        out
    }

    /// Clears the frame; this is the correction the holders of the state
    /// apply once every measurement result has reached them.
    pub fn resolve_frame(mut self) -> Self {
        self.frame = PauliFrame::identity(self.num_qubits());
        self
    }

    pub fn with_frame(mut self, frame: PauliFrame) -> Result<Self> {
        if frame.len() != self.num_qubits() {
            return Err(Error::domain("frame length does not match qubit count"));
        }
        self.frame = frame;
        Ok(self)
    }

    /// Same state with the qubit list relabelled (order preserved).
    pub fn relabel(mut self, qubits: Vec<MemoryId>) -> Result<Self> {
        if qubits.len() != self.qubits.len() {
            return Err(Error::domain("relabel must keep the qubit count"));
        }
        self.qubits = qubits;
        Ok(self)
    }

    /// Largest absolute coefficient difference, for states on the same qubits.
    pub fn max_abs_diff(&self, other: &GhzDiagonalState) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(if self.coeffs.len() == other.coeffs.len() { 0.0 } else { f64::INFINITY }, f64::max)
    }
}

impl fmt::Display for GhzDiagonalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.num_qubits();
        let ids: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        writeln!(f, "GHZ-diagonal state on [{}]", ids.join(", "))?;
        for (label, &c) in self.coeffs.iter().enumerate() {
            if c > 1e-15 {
                writeln!(f, "  {:<16} {c:.12}", GhzBasisIndex::unpack(label).describe(n))?;
            }
        }
        Ok(())
    }
}
