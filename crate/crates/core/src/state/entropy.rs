use super::GhzDiagonalState;
use crate::{Error, Result};

/// Shannon entropy in bits with `0·log 0 = 0`.
pub fn shannon_entropy_bits(probabilities: &[f64]) -> f64 {
    probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// `1 − H(coeffs)` for a Bell-diagonal state. Both marginals of such a state
/// are maximally mixed, so this is `S(B) − S(AB)`. Not clamped.
pub fn coherent_information(state: &GhzDiagonalState) -> Result<f64> {
    if state.num_qubits() != 2 {
        return Err(Error::domain(format!(
            "coherent information needs a 2-qubit state, got {} qubits",
            state.num_qubits()
        )));
    }
    Ok(1.0 - shannon_entropy_bits(state.coeffs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{werner_from_fidelity, MemoryId};

    fn bell(c: [f64; 4]) -> GhzDiagonalState {
        GhzDiagonalState::new(vec![MemoryId(0), MemoryId(1)], c.to_vec()).unwrap()
    }

    #[test]
    fn pure_and_mixed() {
        assert_eq!(coherent_information(&bell([1.0, 0.0, 0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(coherent_information(&bell([0.25; 4])).unwrap(), -1.0);
    }

    #[test]
    fn werner_095() {
        let f = 0.95;
        let o = 0.05 / 3.0;
        // 1 + f log2 f + 3 o log2 o, evaluated independently of the helper
        let expected = 1.0 + f * f64::log2(f) + 3.0 * o * f64::log2(o);
        let ci = coherent_information(&bell([f, o, o, o])).unwrap();
        assert!((ci - expected).abs() < 1e-15);
        assert!((ci - 0.634_355).abs() < 1e-6);
    }

    #[test]
    fn rejects_ghz3() {
        let s = GhzDiagonalState::pure_ghz((0..3).map(MemoryId).collect()).unwrap();
        assert!(coherent_information(&s).is_err());
    }

    #[test]
    fn monotone_in_fidelity() {
        let mut last = f64::NEG_INFINITY;
        for i in 0..100 {
            let f = 0.25 + 0.75 * i as f64 / 99.0;
            let c = werner_from_fidelity(f).unwrap().bell_coefficients();
            let ci = coherent_information(&bell(c)).unwrap();
            assert!(ci > last, "not increasing at F={f}");
            last = ci;
        }
    }
}
