//! Brute-force density-matrix engine used to check the GHZ-diagonal algebra.
//!
//! Qubit 0 is the most significant bit of a basis index. Nothing here is
//! used by the simulator itself; it exists so that every closed form can be
//! compared with plain linear algebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::state::{GhzBasisIndex, GhzDiagonalState, MemoryId};
use crate::{Error, Result};

/// Largest register the oracle will build.
pub const MAX_ORACLE_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A dense density matrix on `num_qubits` qubits.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: DMatrix<Complex64>,
}

fn guard(num_qubits: usize) -> Result<()> {
    if num_qubits > MAX_ORACLE_QUBITS {
        return Err(Error::Oracle(format!(
            "{num_qubits} qubits exceed the oracle limit of {MAX_ORACLE_QUBITS}"
        )));
    }
    Ok(())
}

/// `Z_0^z X_1^{x_1} ... X_{n-1}^{x_{n-1}} |GHZ(n)⟩`, built by applying the
/// Pauli matrices to the GHZ vector one qubit at a time.
pub fn ghz_vector(num_qubits: usize, label: GhzBasisIndex) -> Result<DVector<Complex64>> {
    guard(num_qubits)?;
    if num_qubits == 0 || label.x_bits >> (num_qubits - 1) != 0 {
        return Err(Error::Oracle("label does not fit the register".into()));
    }
    let dim = 1usize << num_qubits;
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut v = DVector::from_element(dim, ZERO);
    v[0] = amp;
    v[dim - 1] = amp;
    let bit = |q: usize| 1usize << (num_qubits - 1 - q);
    for q in 1..num_qubits {
        if (label.x_bits >> (q - 1)) & 1 == 1 {
            let mut w = DVector::from_element(dim, ZERO);
            for i in 0..dim {
                w[i ^ bit(q)] = v[i];
            }
            v = w;
        }
    }
    if label.z_bit {
        for i in 0..dim {
            if i & bit(0) != 0 {
                v[i] = -v[i];
            }
        }
    }
    Ok(v)
}

/// Dense matrix of a CNOT on `num_qubits` qubits.
pub fn cnot(num_qubits: usize, control: usize, target: usize) -> DMatrix<Complex64> {
    let dim = 1usize << num_qubits;
    let c = 1usize << (num_qubits - 1 - control);
    let t = 1usize << (num_qubits - 1 - target);
    let mut u = DMatrix::from_element(dim, dim, ZERO);
    for i in 0..dim {
        let j = if i & c != 0 { i ^ t } else { i };
        u[(j, i)] = ONE;
    }
    u
}

impl DensityMatrix {
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim != entries.ncols() || !dim.is_power_of_two() {
            return Err(Error::Oracle("density matrix must be square with power-of-two size".into()));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        guard(num_qubits)?;
        Ok(DensityMatrix { num_qubits, entries })
    }

    /// `Σ_l c_l |ψ_l⟩⟨ψ_l|` over GHZ basis vectors.
    pub fn ghz_diagonal(num_qubits: usize, coeffs: &[f64]) -> Result<Self> {
        guard(num_qubits)?;
        if coeffs.len() != 1 << num_qubits {
            return Err(Error::Oracle("coefficient count does not match register".into()));
        }
        let dim = 1usize << num_qubits;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (label, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let v = ghz_vector(num_qubits, GhzBasisIndex::unpack(label))?;
            m += (&v * v.adjoint()) * Complex64::new(c, 0.0);
        }
        Ok(DensityMatrix { num_qubits, entries: m })
    }

    /// `w |Φ⁺⟩⟨Φ⁺| + (1 − w) I/4`.
    pub fn werner(weight: f64) -> Self {
        let phi = ghz_vector(2, GhzBasisIndex::default()).expect("two qubits");
        let m = (&phi * phi.adjoint()) * Complex64::new(weight, 0.0)
            + DMatrix::identity(4, 4) * Complex64::new((1.0 - weight) / 4.0, 0.0);
        DensityMatrix { num_qubits: 2, entries: m }
    }

    /// Dense form of a GHZ-diagonal state including its Pauli frame.
    pub fn from_state(state: &GhzDiagonalState) -> Result<Self> {
        Self::ghz_diagonal(state.num_qubits(), &state.physical_coeffs())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        guard(self.num_qubits + other.num_qubits)?;
        Ok(DensityMatrix {
            num_qubits: self.num_qubits + other.num_qubits,
            entries: self.entries.kronecker(&other.entries),
        })
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, unitary: &DMatrix<Complex64>) -> Result<DensityMatrix> {
        if unitary.nrows() != self.entries.nrows() {
            return Err(Error::Oracle("unitary size mismatch".into()));
        }
        Ok(DensityMatrix {
            num_qubits: self.num_qubits,
            entries: unitary * &self.entries * unitary.adjoint(),
        })
    }

    /// Hermitian, unit trace and positive semidefinite.
    pub fn check_physical(&self) -> Result<()> {
        let herm = (&self.entries - self.entries.adjoint()).camax();
        if herm > 1e-12 {
            return Err(Error::Oracle(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.entries.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::Oracle(format!("trace {tr} is not 1")));
        }
        // Hermitian H = A + iB is PSD iff the real form [[A, −B], [B, A]] is.
        let n = self.entries.nrows();
        let real = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let e = self.entries[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => e.re,
                (true, false) => -e.im,
                (false, true) => e.im,
            }
        });
        let min = real.symmetric_eigenvalues().min();
        if min < -1e-9 {
            return Err(Error::Oracle(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `⟨Φ⁺|ρ|Φ⁺⟩` for a 2-qubit matrix.
    pub fn bell_fidelity(&self) -> Result<f64> {
        if self.num_qubits != 2 {
            return Err(Error::Oracle("Bell fidelity needs 2 qubits".into()));
        }
        let phi = ghz_vector(2, GhzBasisIndex::default())?;
        Ok((phi.adjoint() * &self.entries * &phi)[(0, 0)].re)
    }

    /// Diagonal in the GHZ basis together with the largest off-diagonal
    /// magnitude (zero for a genuinely GHZ-diagonal state).
    pub fn ghz_diagonal_coefficients(&self) -> Result<(Vec<f64>, f64)> {
        let n = self.num_qubits;
        let dim = 1usize << n;
        let mut basis = DMatrix::from_element(dim, dim, ZERO);
        for label in 0..dim {
            basis.set_column(label, &ghz_vector(n, GhzBasisIndex::unpack(label))?);
        }
        let rotated = basis.adjoint() * &self.entries * &basis;
        let mut diag = Vec::with_capacity(dim);
        let mut off: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                if i == j {
                    diag.push(rotated[(i, i)].re);
                } else {
                    off = off.max(rotated[(i, j)].norm());
                }
            }
        }
        Ok((diag, off))
    }
}

/// Row of `⟨u|ρ|v⟩` on the unmeasured qubits of one factor.
fn partial_element(rho: &DensityMatrix, measured: &[usize], u: usize, v: usize) -> DMatrix<Complex64> {
    let n = rho.num_qubits;
    let rest: Vec<usize> = (0..n).filter(|q| !measured.contains(q)).collect();
    let place = |bits_measured: usize, bits_rest: usize| -> usize {
        let mut idx = 0usize;
        for (k, &q) in measured.iter().enumerate() {
            if (bits_measured >> (measured.len() - 1 - k)) & 1 == 1 {
                idx |= 1 << (n - 1 - q);
            }
        }
        for (k, &q) in rest.iter().enumerate() {
            if (bits_rest >> (rest.len() - 1 - k)) & 1 == 1 {
                idx |= 1 << (n - 1 - q);
            }
        }
        idx
    };
    let d = 1usize << rest.len();
    DMatrix::from_fn(d, d, |r, c| rho.entries[(place(u, r), place(v, c))])
}

/// Applies `⟨φ|` to the listed qubits of the product `⊗_f ρ_f` without
/// forming the full tensor.
///
/// `measured` indexes the concatenated register (factor 0 first) and fixes
/// the bit order of `phi`, whose first entry is the most significant bit.
/// Returns the normalized post-measurement state on the remaining qubits
/// (factor order, original order within a factor) and the outcome probability.
pub fn project(factors: &[DensityMatrix], measured: &[usize], phi: &DVector<Complex64>) -> Result<(DensityMatrix, f64)> {
    let (m, p) = project_unnormalized(factors, measured, phi)?;
    if p <= 0.0 {
        return Err(Error::Oracle("projection has zero probability".into()));
    }
    Ok((
        DensityMatrix {
            num_qubits: m.num_qubits,
            entries: m.entries / Complex64::new(p, 0.0),
        },
        p,
    ))
}

/// [`project`] without normalization; the trace is the outcome probability.
pub fn project_unnormalized(
    factors: &[DensityMatrix],
    measured: &[usize],
    phi: &DVector<Complex64>,
) -> Result<(DensityMatrix, f64)> {
    let total: usize = factors.iter().map(|f| f.num_qubits).sum();
    if phi.len() != 1 << measured.len() {
        return Err(Error::Oracle("projector size does not match measured qubits".into()));
    }
    let out_qubits = total - measured.len();
    guard(out_qubits)?;
    let mut sorted = measured.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != measured.len() || sorted.last().is_some_and(|&q| q >= total) {
        return Err(Error::Oracle("measured qubits must be distinct and in range".into()));
    }
    // per factor: local measured qubits and the position of each in `measured`
    let mut offsets = Vec::with_capacity(factors.len());
    let mut off = 0;
    for f in factors {
        offsets.push(off);
        off += f.num_qubits;
    }
    let local: Vec<Vec<(usize, usize)>> = factors
        .iter()
        .zip(&offsets)
        .map(|(f, &o)| {
            measured
                .iter()
                .enumerate()
                .filter(|(_, &q)| q >= o && q < o + f.num_qubits)
                .map(|(k, &q)| (q - o, k))
                .collect()
        })
        .collect();
    let k = measured.len();
    let local_bits = |pairs: &[(usize, usize)], u: usize| -> usize {
        pairs
            .iter()
            .fold(0, |acc, &(_, pos)| (acc << 1) | ((u >> (k - 1 - pos)) & 1))
    };
    let support: Vec<(usize, Complex64)> = phi
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(i, a)| (i, *a))
        .collect();
    let dim = 1usize << out_qubits;
    let mut acc = DMatrix::from_element(dim, dim, ZERO);
    for &(u, au) in &support {
        for &(v, av) in &support {
            let mut block = DMatrix::from_element(1, 1, au.conj() * av);
            for (f, pairs) in factors.iter().zip(&local) {
                let qs: Vec<usize> = pairs.iter().map(|&(q, _)| q).collect();
                let part = partial_element(f, &qs, local_bits(pairs, u), local_bits(pairs, v));
                block = block.kronecker(&part);
            }
            acc += block;
        }
    }
    let p = acc.trace().re;
    Ok((DensityMatrix { num_qubits: out_qubits, entries: acc }, p))
}

/// `|±⟩` as a one-qubit projector vector.
pub fn x_eigenvector(minus: bool) -> DVector<Complex64> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![Complex64::new(a, 0.0), Complex64::new(if minus { -a } else { a }, 0.0)])
}

/// One step of a recorded protocol round.
#[derive(Clone, Debug, PartialEq)]
pub enum ReplayOp {
    /// GHZ(m) projection of these memories (fragment order) onto `outcome`.
    Fuse { memories: Vec<MemoryId>, outcome: GhzBasisIndex },
    /// X measurement of one memory with the given physical result.
    XMeasure { memory: MemoryId, outcome: bool },
}

/// Replays a round on dense matrices: each link starts as a Werner pair and
/// fragments are merged by explicit projections. Returns the final fragment.
pub fn replay(links: &[(MemoryId, MemoryId, f64)], ops: &[ReplayOp]) -> Result<(Vec<MemoryId>, DensityMatrix)> {
    let mut fragments: Vec<(Vec<MemoryId>, DensityMatrix)> = links
        .iter()
        .map(|&(a, b, w)| (vec![a, b], DensityMatrix::werner(w)))
        .collect();
    let find = |frags: &[(Vec<MemoryId>, DensityMatrix)], m: MemoryId| -> Result<(usize, usize)> {
        frags
            .iter()
            .enumerate()
            .find_map(|(i, (ids, _))| ids.iter().position(|&x| x == m).map(|p| (i, p)))
            .ok_or_else(|| Error::Oracle(format!("memory {m} is not part of any fragment")))
    };
    for op in ops {
        match op {
            ReplayOp::Fuse { memories, outcome } => {
                let mut picked: Vec<(usize, usize)> = Vec::new();
                for &m in memories {
                    let (f, p) = find(&fragments, m)?;
                    if picked.iter().any(|&(g, _)| g == f) {
                        return Err(Error::Oracle(format!("memory {m} shares a fragment with another fused memory")));
                    }
                    picked.push((f, p));
                }
                let mut ids = Vec::new();
                let mut factors = Vec::new();
                let mut measured = Vec::new();
                let mut offset = 0;
                for &(f, p) in &picked {
                    let (fid, rho) = &fragments[f];
                    measured.push(offset + p);
                    ids.extend(fid.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, &m)| m));
                    offset += rho.num_qubits;
                    factors.push(rho.clone());
                }
                let phi = ghz_vector(memories.len(), *outcome)?;
                let (rho, _) = project(&factors, &measured, &phi)?;
                let mut remove: Vec<usize> = picked.iter().map(|&(f, _)| f).collect();
                remove.sort_unstable_by(|a, b| b.cmp(a));
                for f in remove {
                    fragments.remove(f);
                }
                fragments.push((ids, rho));
            }
            ReplayOp::XMeasure { memory, outcome } => {
                let (f, p) = find(&fragments, *memory)?;
                let (mut ids, rho) = fragments.remove(f);
                let (rho, _) = project(&[rho], &[p], &x_eigenvector(*outcome))?;
                ids.remove(p);
                fragments.push((ids, rho));
            }
        }
    }
    fragments
        .into_iter()
        .max_by_key(|(ids, _)| ids.len())
        .ok_or_else(|| Error::Oracle("no fragments left".into()))
}

/// `(F_out, p_succ)` of one BBPSSW step on two Werner pairs of fidelity `f`.
///
/// Register order `A1 B1 A2 B2`; CNOTs `A1→A2` and `B1→B2`; Z measurement of
/// the target pair, kept when the two results agree.
pub fn bbpssw_dense(f: f64) -> Result<(f64, f64)> {
    let w = (4.0 * f - 1.0) / 3.0;
    let rho = DensityMatrix::werner(w).kron(&DensityMatrix::werner(w))?;
    let u = cnot(4, 1, 3) * cnot(4, 0, 2);
    let rho = rho.conjugate(&u)?;
    let mut kept: Option<DMatrix<Complex64>> = None;
    let mut p_succ = 0.0;
    for outcome in [0usize, 3] {
        let mut phi = DVector::from_element(4, ZERO);
        phi[outcome] = ONE;
        let (post, p) = project_unnormalized(std::slice::from_ref(&rho), &[2, 3], &phi)?;
        p_succ += p;
        kept = Some(match kept {
            None => post.entries,
            Some(k) => k + post.entries,
        });
    }
    let kept = kept.expect("two outcomes") / Complex64::new(p_succ, 0.0);
    let fidelity = DensityMatrix::from_matrix(kept)?.bell_fidelity()?;
    Ok((fidelity, p_succ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghz_basis_is_orthonormal() {
        let n = 3;
        for a in 0..8 {
            for b in 0..8 {
                let va = ghz_vector(n, GhzBasisIndex::unpack(a)).unwrap();
                let vb = ghz_vector(n, GhzBasisIndex::unpack(b)).unwrap();
                let ip = va.dotc(&vb).norm();
                assert!((ip - if a == b { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn werner_is_physical_and_bell_diagonal() {
        let w = DensityMatrix::werner(0.6);
        w.check_physical().unwrap();
        let (d, off) = w.ghz_diagonal_coefficients().unwrap();
        assert!(off < 1e-15);
        assert!((d[0] - 0.7).abs() < 1e-15);
        assert!((d[3] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn detects_negative_eigenvalue() {
        let mut m = DMatrix::from_element(2, 2, ZERO);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(DensityMatrix::from_matrix(m).unwrap().check_physical().is_err());
    }

    #[test]
    fn bell_swap_projection() {
        let a = DensityMatrix::werner(1.0);
        let (out, p) = project(&[a.clone(), a], &[1, 2], &ghz_vector(2, GhzBasisIndex::default()).unwrap()).unwrap();
        assert!((p - 0.25).abs() < 1e-15);
        assert!((out.bell_fidelity().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn refuses_oversized_register() {
        let a = DensityMatrix::werner(1.0);
        let factors = vec![a; 7];
        let phi = ghz_vector(1, GhzBasisIndex::default()).unwrap();
        assert!(project(&factors, &[0], &phi).is_err());
    }
}
