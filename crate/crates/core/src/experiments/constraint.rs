use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::numkit::{partial_trace_matrix, purity, BipartiteDims, ComplexMatrix, DensityMatrix, Keep};
use crate::{Error, Result, RngStream};

/// Orthonormality tolerance for embedding isometries.
pub const ISOMETRY_TOL: f64 = 1e-10;

/// How the constrained subspace `H_R` sits inside `H_S ⊗ H_E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Embedding {
    /// The first `d_R` computational basis states.
    FirstBasis,
    /// Orthonormalised Gaussian vectors.
    RandomSubspace { seed: u64 },
    /// Basis states whose diagonal energy lies in `[e_min, e_max]`.
    EnergyWindow { energies: Vec<f64>, e_min: f64, e_max: f64 },
    /// Explicit columns, each a list of `[re, im]` amplitudes.
    Columns { columns: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub d_s: usize,
    pub d_e: usize,
    pub d_r: usize,
    pub embedding: Embedding,
}

impl ConstraintSpec {
    pub fn dims(&self) -> Result<BipartiteDims> {
        BipartiteDims::new(self.d_s, self.d_e)
    }

    /// The `d_S d_E × d_R` isometry `V`.
    pub fn isometry(&self) -> Result<ComplexMatrix> {
        let d = self.dims()?.total();
        if self.d_r == 0 || self.d_r > d {
            return Err(Error::InvalidArgument(format!("need 1 ≤ d_R ≤ d_S·d_E = {d}, got d_R = {}", self.d_r)));
        }
        let v = match &self.embedding {
            Embedding::FirstBasis => {
                ComplexMatrix::from_fn(d, self.d_r, |i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
            }
            Embedding::RandomSubspace { seed } => {
                let mut rng = RngStream::new(*seed, 0).rng();
                let g = DMatrix::<Complex64>::from_fn(d, self.d_r, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                });
                ComplexMatrix::from_nalgebra(&g.qr().q())
            }
            Embedding::EnergyWindow { energies, e_min, e_max } => {
                if energies.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: energies.len() });
                }
                let picked: Vec<usize> = (0..d).filter(|&i| (*e_min..=*e_max).contains(&energies[i])).collect();
                if picked.len() != self.d_r {
                    return Err(Error::InvalidArgument(format!(
                        "energy window selects {} states, d_R = {}",
                        picked.len(),
                        self.d_r
                    )));
                }
                ComplexMatrix::from_fn(d, self.d_r, |i, j| Complex64::new(if picked[j] == i { 1.0 } else { 0.0 }, 0.0))
            }
            Embedding::Columns { columns } => {
                if columns.len() != self.d_r {
                    return Err(Error::DimensionMismatch { expected: self.d_r, got: columns.len() });
                }
                if let Some(c) = columns.iter().find(|c| c.len() != d) {
                    return Err(Error::DimensionMismatch { expected: d, got: c.len() });
                }
                ComplexMatrix::from_fn(d, self.d_r, |i, j| Complex64::new(columns[j][i][0], columns[j][i][1]))
            }
        };
        let gram = v.adjoint().matmul(&v)?;
        let res = gram.max_abs_diff(&ComplexMatrix::identity(self.d_r));
        if res > ISOMETRY_TOL {
            return Err(Error::InvalidArgument(format!("embedding is not an isometry (residual {res:e})")));
        }
        Ok(v)
    }

    /// Maximally mixed state on `H_R`, as an operator on `H_S ⊗ H_E`.
    fn constrained_mixture(&self) -> Result<ComplexMatrix> {
        let v = self.isometry()?;
        Ok(v.matmul(&v.adjoint())?.scale_real(1.0 / self.d_r as f64))
    }

    /// `1/tr Ω_E²` for the environment marginal of the constrained mixture.
    pub fn effective_env_dim(&self) -> Result<f64> {
        let omega_e = partial_trace_matrix(&self.constrained_mixture()?, self.dims()?, Keep::E)?;
        Ok(1.0 / purity(&DensityMatrix::new_unchecked(omega_e)))
    }
}

/// `Ω_S = tr_E(V V† / d_R)`.
pub fn canonical_state(c: &ConstraintSpec) -> Result<DensityMatrix> {
    let omega = partial_trace_matrix(&c.constrained_mixture()?, c.dims()?, Keep::S)?;
    DensityMatrix::new(omega)
}
