//! GHZ swaps of `n` Werner links meeting at one node.
//!
//! Pair `i` runs from an outer memory (output qubit `i`) to the swapping
//! node. Writing each link as `w·Φ⁺ + (1 − w)·I/4`, the maximally mixed part
//! of pair `i` acts as a uniformly random Pauli on its outer qubit. With `R`
//! the set of mixed pairs, the output label `(z, x)` receives
//!
//! * `[z = 0, x = 0]` when `R` is empty;
//! * `([supp x ⊆ R] + [supp x̄ ⊆ R]) / 2^{|R|+1}` otherwise,
//!
//! where `x` is the full parity pattern with `x_0 = 0`.

use super::{GhzDiagonalState, MemoryId, MAX_QUBITS};
use crate::{Error, Result};

fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn check_weight(w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::domain(format!("Werner weight {w} outside [0, 1]")));
    }
    Ok(())
}

/// GHZ(n) projection of `n` Werner links of common weight `w`, canonical
/// outcome. Output qubits are `MemoryId(0..n)` in pair order.
///
/// Labels are grouped by the number `s` of set parity bits; the
/// coefficient is a sum over the number `i` of mixed pairs of
/// `w^{n−i}(1 − w)^i (C(n−s, i−s) + C(s, i−n+s)) / 2^{i+1}`.
pub fn ghz_swap_equal(n: usize, w: f64) -> Result<GhzDiagonalState> {
    if n < 2 {
        return Err(Error::domain(format!("GHZ swap needs n ≥ 2, got {n}")));
    }
    if n > MAX_QUBITS {
        return Err(Error::domain(format!("GHZ swap of {n} links is too large")));
    }
    check_weight(w)?;
    let n_i = n as i64;
    // class[s] for s set parity bits (s ≤ n − 1, qubit 0 never set)
    let class: Vec<f64> = (0..n as i64)
        .map(|s| {
            (1..=n_i)
                .map(|i| {
                    let count = binomial(n_i - s, i - s) + binomial(s, i - (n_i - s));
                    count * w.powi((n_i - i) as i32) * (1.0 - w).powi(i as i32) / 2f64.powi(i as i32 + 1)
                })
                .sum()
        })
        .collect();
    let mut coeffs = vec![0.0; 1 << n];
    for (label, c) in coeffs.iter_mut().enumerate() {
        let s = (label >> 1).count_ones() as usize;
        *c = class[s];
    }
    coeffs[0] += w.powi(n as i32);
    Ok(GhzDiagonalState::from_parts(
        (0..n as u32).map(MemoryId).collect(),
        coeffs,
        None,
    ))
}

/// GHZ(n) projection of Werner links with individual weights.
///
/// Summing the subset expansion over supersets of a support `A` factorizes:
/// `Σ_{R ⊇ A} Π_{i∈R} (1−w_i)/2 Π_{i∉R} w_i = Π_{i∈A} (1−w_i)/2 · Π_{i∉A} (1+w_i)/2`.
pub fn ghz_swap_mixed(weights: &[f64]) -> Result<GhzDiagonalState> {
    let n = weights.len();
    if n < 2 {
        return Err(Error::domain(format!("GHZ swap needs at least 2 links, got {n}")));
    }
    if n > MAX_QUBITS {
        return Err(Error::domain(format!("GHZ swap of {n} links is too large")));
    }
    for &w in weights {
        check_weight(w)?;
    }
    let all_pure: f64 = weights.iter().product();
    let superset_sum = |support: usize| -> f64 {
        let mut acc = 0.5;
        for (i, &w) in weights.iter().enumerate() {
            acc *= if (support >> i) & 1 == 1 { (1.0 - w) / 2.0 } else { (1.0 + w) / 2.0 };
        }
        if support == 0 {
            // the empty subset belongs to the pure term, not the mixture
            acc -= 0.5 * all_pure;
        }
        acc
    };
    let full = (1usize << n) - 1;
    let mut coeffs = vec![0.0; 1 << n];
    for (label, c) in coeffs.iter_mut().enumerate() {
        let x = label & !1; // bit q is qubit q, bit 0 (qubit 0) clear
        *c = superset_sum(x) + superset_sum(full ^ x);
    }
    coeffs[0] += all_pure;
    Ok(GhzDiagonalState::from_parts(
        (0..n as u32).map(MemoryId).collect(),
        coeffs,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_mixed_limits() {
        let s = ghz_swap_equal(3, 1.0).unwrap();
        assert_eq!(s.coeffs()[0], 1.0);
        assert!(s.coeffs()[1..].iter().all(|&c| c == 0.0));
        let s = ghz_swap_equal(3, 0.0).unwrap();
        assert!(s.coeffs().iter().all(|&c| (c - 0.125).abs() < 1e-15));
    }

    #[test]
    fn bell_swap_is_werner_of_product_weight() {
        let s = ghz_swap_equal(2, 0.8).unwrap();
        let w = 0.64;
        let expect = [w + (1.0 - w) / 4.0, (1.0 - w) / 4.0, (1.0 - w) / 4.0, (1.0 - w) / 4.0];
        for (a, b) in s.coeffs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let m = ghz_swap_mixed(&[0.9, 0.7]).unwrap();
        let w = 0.63;
        assert!((m.coeffs()[0] - (w + (1.0 - w) / 4.0)).abs() < 1e-15);
        assert!((m.coeffs()[3] - (1.0 - w) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_reduces_to_equal() {
        for n in 2..=7 {
            for &w in &[0.0, 0.3, 0.6, 0.85, 1.0] {
                let a = ghz_swap_equal(n, w).unwrap();
                let b = ghz_swap_mixed(&vec![w; n]).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-12, "n={n} w={w}");
            }
        }
    }

    #[test]
    fn normalized() {
        for n in 2..=10 {
            let s = ghz_swap_equal(n, 0.37).unwrap();
            assert!((s.coeffs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_degrades_with_arity() {
        for &w in &[0.6, 0.75, 0.9] {
            let f: Vec<f64> = (2..=6).map(|n| ghz_swap_equal(n, w).unwrap().fidelity()).collect();
            assert!(f.windows(2).all(|p| p[1] < p[0]), "w={w}: {f:?}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(ghz_swap_equal(1, 0.5).is_err());
        assert!(ghz_swap_equal(3, 1.5).is_err());
        assert!(ghz_swap_mixed(&[0.5]).is_err());
        assert!(ghz_swap_mixed(&[]).is_err());
    }
}
