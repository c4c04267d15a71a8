use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ComplexMatrix;
use crate::{Error, Result};

/// Normalisation tolerance for pure states.
pub const NORM_TOL: f64 = 1e-12;
/// Hermiticity and trace tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-12;
/// Eigenvalues in `[-EIG_CLIP, 0]` are treated as zero; anything lower is invalid.
pub const EIG_CLIP: f64 = 1e-10;
/// Largest state dimension handled densely.
pub const MAX_STATE_DIM: usize = 4096;

/// A normalised state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidState("empty state vector".into()));
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalises an arbitrary non-zero vector.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalise a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(Self { amplitudes })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// Uniformly random state (normalised complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let v: Vec<Complex64> =
            (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        Self::normalized(v).expect("gaussian vector is non-zero almost surely")
    }

    /// Product state `a ⊗ b ⊗ ...`.
    pub fn product(factors: &[PureState]) -> Self {
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for f in factors {
            amps = amps.iter().flat_map(|a| f.amplitudes.iter().map(move |b| a * b)).collect();
        }
        Self { amplitudes: amps }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn evolve(&self, u: &ComplexMatrix) -> Result<Self> {
        Ok(Self { amplitudes: u.apply(&self.amplitudes)? })
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { matrix: self.projector() }
    }
}

impl TryFrom<Vec<Complex64>> for PureState {
    type Error = Error;
    fn try_from(v: Vec<Complex64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PureState> for Vec<Complex64> {
    fn from(s: PureState) -> Self {
        s.amplitudes
    }
}

/// A Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and spectrum.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare(matrix.rows(), matrix.cols()));
        }
        let herm = matrix.hermiticity_residual();
        if herm > DENSITY_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = matrix.eigvalsh()?[0];
        if min < -EIG_CLIP {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Skips validation; callers guarantee the invariants structurally.
    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let d = probs.len();
        let mut m = ComplexMatrix::zeros(d, d);
        for (i, p) in probs.iter().enumerate() {
            m[(i, i)] = Complex64::new(*p, 0.0);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Eigenvalues with tiny negatives from round-off clipped to zero.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let vals = self.matrix.eigvalsh()?;
        Ok(vals.into_iter().map(|l| if (-EIG_CLIP..0.0).contains(&l) { 0.0 } else { l }).collect())
    }

    pub fn kron(&self, other: &DensityMatrix) -> Result<Self> {
        Ok(Self { matrix: self.matrix.kron(&other.matrix)? })
    }
}

/// Dimensions of a bipartition `S ⊗ E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteDims {
    pub d_s: usize,
    pub d_e: usize,
}

impl BipartiteDims {
    pub fn new(d_s: usize, d_e: usize) -> Result<Self> {
        if d_s == 0 || d_e == 0 {
            return Err(Error::InvalidArgument("subsystem dimensions must be positive".into()));
        }
        d_s.checked_mul(d_e).ok_or_else(|| Error::InvalidArgument("total dimension overflows".into()))?;
        Ok(Self { d_s, d_e })
    }

    pub fn total(&self) -> usize {
        self.d_s * self.d_e
    }
}

/// Which factor of a bipartition to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    S,
    E,
}
