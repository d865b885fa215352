//! Fusion of fragments at a repeater and single-qubit X measurements.
//!
//! A fragment in label `(z, x)` is `(|x⟩ + (−1)^z |x̄⟩)/√2`. Projecting one
//! qubit `a_i` of each fragment onto `|GHZ(m)⟩` keeps the two branches in
//! which all measured bits agree, so every surviving qubit `q` of fragment
//! `i` ends up with parity `x_q ⊕ x_{a_i}`, the sign bits add, and the
//! output pattern is the concatenation of the re-referenced fragments taken
//! up to global complement.

use super::{GhzBasisIndex, GhzDiagonalState, MemoryId, PauliFrame, MAX_QUBITS};
use crate::{Error, Result};

/// Re-references a fragment to its measured qubit and drops that qubit.
///
/// Returns coefficients over `(z, y)` where `y` is the full parity pattern of
/// the surviving qubits (bit `j` = surviving qubit `j`), packed as `z | y << 1`.
fn rereference(state: &GhzDiagonalState, measured: usize) -> Vec<f64> {
    let n = state.num_qubits();
    let mut out = vec![0.0; state.coeffs().len()];
    for (label, &c) in state.coeffs().iter().enumerate() {
        let z = label & 1;
        let x = label & !1; // bit q = parity of qubit q, bit 0 clear
        let xa = (x >> measured) & 1;
        let mut y = 0usize;
        let mut j = 0;
        for q in 0..n {
            if q == measured {
                continue;
            }
            y |= (((x >> q) & 1) ^ xa) << j;
            j += 1;
        }
        out[z | (y << 1)] += c;
    }
    out
}

/// Projects qubit `position` of each fragment onto the GHZ(m) basis vector
/// `outcome` and returns the merged fragment.
///
/// The stored coefficients always describe the all-zeros outcome. Frames on
/// the measured qubits are pushed onto the rest of their fragment, and the
/// Pauli mapping the canonical branch onto `outcome` is added to the frame.
/// Output qubits are the surviving qubits of each fragment, in fragment order.
pub fn fuse(fragments: &[(&GhzDiagonalState, usize)], outcome: GhzBasisIndex) -> Result<GhzDiagonalState> {
    let m = fragments.len();
    if m < 2 {
        return Err(Error::domain(format!("fusion needs at least 2 fragments, got {m}")));
    }
    if outcome.x_bits >> (m - 1) != 0 {
        return Err(Error::domain("fusion outcome has more parity bits than measured qubits"));
    }
    let total: usize = fragments.iter().map(|(s, _)| s.num_qubits() - 1).sum();
    if total < 2 {
        return Err(Error::domain("fusion would leave fewer than 2 qubits"));
    }
    if total > MAX_QUBITS {
        return Err(Error::domain(format!("fusion output of {total} qubits is too large")));
    }
    let mut qubits: Vec<MemoryId> = Vec::with_capacity(total);
    let mut frame = PauliFrame::default();
    for (i, &(state, a)) in fragments.iter().enumerate() {
        if a >= state.num_qubits() {
            return Err(Error::domain(format!("qubit {a} out of range for fragment {i}")));
        }
        let start = frame.len();
        let (xa, za) = state.frame().get(a);
        for q in (0..state.num_qubits()).filter(|&q| q != a) {
            let (x, z) = state.frame().get(q);
            // X on the measured qubit equals X on all others; Z equals Z on one other.
            frame.push(x ^ xa, z ^ (za && frame.len() == start));
            qubits.push(state.qubits()[q]);
        }
        // outcome parity for fragment i (fragment 0 is the reference)
        if i > 0 && (outcome.x_bits >> (i - 1)) & 1 == 1 {
            for q in start..frame.len() {
                frame.apply_x(q);
            }
        }
    }
    if outcome.z_bit {
        frame.apply_z(0);
    }
    {
        let mut seen = qubits.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != qubits.len() {
            return Err(Error::protocol("fused fragments share a memory"));
        }
    }

    let mut acc = rereference(fragments[0].0, fragments[0].1);
    let mut bits = fragments[0].0.num_qubits() - 1;
    for &(state, a) in &fragments[1..] {
        let next = rereference(state, a);
        let nb = state.num_qubits() - 1;
        let mut merged = vec![0.0; 1 << (1 + bits + nb)];
        for (ia, &ca) in acc.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            let (za, ya) = (ia & 1, ia >> 1);
            for (ib, &cb) in next.iter().enumerate() {
                let (zb, yb) = (ib & 1, ib >> 1);
                merged[(za ^ zb) | ((ya | (yb << bits)) << 1)] += ca * cb;
            }
        }
        acc = merged;
        bits += nb;
    }

    let all = (1usize << bits) - 1;
    let mut coeffs = vec![0.0; 1 << bits];
    for (i, &c) in acc.iter().enumerate() {
        let z = i & 1;
        let mut y = i >> 1;
        if y & 1 == 1 {
            y ^= all;
        }
        coeffs[z | y] += c;
    }
    Ok(GhzDiagonalState::from_parts(qubits, coeffs, Some(frame)))
}

/// GHZ swap at a node holding one memory of `main` and one memory of each
/// incident link, canonical outcome.
pub fn merge_swap(
    main: &GhzDiagonalState,
    incident: &[GhzDiagonalState],
    node_memories: &[MemoryId],
) -> Result<GhzDiagonalState> {
    merge_swap_with_outcome(main, incident, node_memories, GhzBasisIndex::default())
}

/// [`merge_swap`] for a specific GHZ(m) outcome; parity bit `i − 1` of the
/// outcome refers to incident link `i − 1`.
pub fn merge_swap_with_outcome(
    main: &GhzDiagonalState,
    incident: &[GhzDiagonalState],
    node_memories: &[MemoryId],
    outcome: GhzBasisIndex,
) -> Result<GhzDiagonalState> {
    let m = incident.len() + 1;
    if !(2..=4).contains(&m) {
        return Err(Error::domain(format!("GHZ swap arity {m} outside 2..=4")));
    }
    let at_node = |s: &GhzDiagonalState| -> Vec<usize> {
        (0..s.num_qubits())
            .filter(|&q| node_memories.contains(&s.qubits()[q]))
            .collect()
    };
    let main_pos = at_node(main);
    if main_pos.len() != 1 {
        return Err(Error::protocol(format!(
            "main state has {} memories at the swapping node, expected 1",
            main_pos.len()
        )));
    }
    let mut fragments = vec![(main, main_pos[0])];
    for (i, link) in incident.iter().enumerate() {
        if link.num_qubits() != 2 {
            return Err(Error::domain(format!("incident state {i} is not a 2-qubit link")));
        }
        let pos = at_node(link);
        if pos.len() != 1 {
            return Err(Error::protocol(format!(
                "incident link {i} has {} memories at the swapping node",
                pos.len()
            )));
        }
        fragments.push((link, pos[0]));
    }
    fuse(&fragments, outcome)
}

/// Measures qubit `position` (0-based) in the X basis.
///
/// `outcome` is the physical result (0 for `|+⟩`). A Z in the frame on the
/// measured qubit flips it; a canonical `|−⟩` result is stored as the `|+⟩`
/// branch with a Z added to the frame.
pub fn x_measure(state: &GhzDiagonalState, position: usize, outcome: bool) -> Result<GhzDiagonalState> {
    let n = state.num_qubits();
    if n < 3 {
        return Err(Error::domain(format!(
            "X measurement would reduce a {n}-qubit state below 2 qubits"
        )));
    }
    if position >= n {
        return Err(Error::domain(format!("qubit {position} out of range for {n} qubits")));
    }
    let mut coeffs = vec![0.0; 1 << (n - 1)];
    for (label, &c) in state.coeffs().iter().enumerate() {
        let z = label & 1;
        let new = if position == 0 {
            let pivot = (label >> 1) & 1;
            let mut rest = label >> 2;
            if pivot == 1 {
                rest ^= (1 << (n - 2)) - 1;
            }
            z | (rest << 1)
        } else {
            let low = label & ((1 << position) - 1);
            let high = (label >> (position + 1)) << position;
            low | high
        };
        coeffs[new] += c;
    }
    let mut frame = state.frame().clone();
    let (_, z_measured) = frame.remove(position);
    let mut qubits = state.qubits().to_vec();
    qubits.remove(position);
    if outcome ^ z_measured {
        frame.apply_z(0);
    }
    Ok(GhzDiagonalState::from_parts(qubits, coeffs, Some(frame)))
}
