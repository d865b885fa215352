use crate::{Error, Result};

/// A Werner link `ρ = F|Φ⁺⟩⟨Φ⁺| + (1 − F)/3 (I − |Φ⁺⟩⟨Φ⁺|)`, also written as
/// `weight·|Φ⁺⟩⟨Φ⁺| + (1 − weight)·I/4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WernerParams {
    fidelity: f64,
    weight: f64,
}

impl WernerParams {
    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn from_weight(weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::domain(format!("Werner weight {weight} outside [0, 1]")));
        }
        Ok(WernerParams {
            fidelity: (3.0 * weight + 1.0) / 4.0,
            weight,
        })
    }

    /// Bell-diagonal coefficients in label order `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻`.
    pub fn bell_coefficients(&self) -> [f64; 4] {
        let off = (1.0 - self.fidelity) / 3.0;
        [self.fidelity, off, off, off]
    }
}

/// Converts a link fidelity to Werner parameters.
pub fn werner_from_fidelity(fidelity: f64) -> Result<WernerParams> {
    if !(0.25..=1.0).contains(&fidelity) {
        return Err(Error::domain(format!("fidelity {fidelity} outside [1/4, 1]")));
    }
    Ok(WernerParams {
        fidelity,
        weight: ((4.0 * fidelity - 1.0) / 3.0).clamp(0.0, 1.0),
    })
}
