use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::numkit::{ComplexMatrix, PureState};
use crate::{Error, Result};

/// A weighted finite list of pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEnsemble {
    d: usize,
    states: Vec<PureState>,
    weights: Vec<f64>,
}

impl StateEnsemble {
    pub fn new(states: Vec<PureState>, weights: Vec<f64>) -> Result<Self> {
        let d = states.first().ok_or_else(|| Error::InvalidArgument("state ensemble must be non-empty".into()))?.dim();
        if states.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), got: weights.len() });
        }
        if let Some(s) = states.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be non-negative".into()));
        }
        super::check_weight_sum(&weights)?;
        Ok(Self { d, states, weights })
    }

    pub fn uniform(states: Vec<PureState>) -> Result<Self> {
        let w = 1.0 / states.len().max(1) as f64;
        let weights = vec![w; states.len()];
        Self::new(states, weights)
    }

    /// The six single-qubit stabilizer states.
    pub fn stabilizer_1q() -> Self {
        let s = FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let states = [
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1.0, 0.0)],
            [c(s, 0.0), c(s, 0.0)],
            [c(s, 0.0), c(-s, 0.0)],
            [c(s, 0.0), c(0.0, s)],
            [c(s, 0.0), c(0.0, -s)],
        ]
        .into_iter()
        .map(|a| PureState::normalized(a.to_vec()).expect("non-zero"))
        .collect();
        Self::uniform(states).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w |ψ⟩⟨ψ|^{⊗k}`.
    pub fn moment_operator(&self, k: usize) -> Result<ComplexMatrix> {
        let dk = self.d.pow(k as u32);
        let mut out = ComplexMatrix::zeros(dk, dk);
        for (w, s) in self.weights.iter().zip(&self.states) {
            out.add_scaled(&s.projector().kron_power(k)?, Complex64::new(*w, 0.0));
        }
        Ok(out)
    }
}
