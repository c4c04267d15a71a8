//! Dense complex linear algebra and quantum-state primitives.
//!
//! Everything here is a pure function on immutable values. Logarithms are
//! base 2 throughout.

mod matrix;
mod state;

pub use matrix::{pauli, ComplexMatrix, MAX_ENTRIES};
pub use state::{BipartiteDims, DensityMatrix, Keep, PureState, DENSITY_TOL, EIG_CLIP, MAX_STATE_DIM, NORM_TOL};

use num_complex::Complex64;

use crate::{Error, Result};

/// Partial trace of an arbitrary operator on `S ⊗ E`.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: BipartiteDims, keep: Keep) -> Result<ComplexMatrix> {
    let d = dims.total();
    if m.rows() != d || m.cols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: m.rows() });
    }
    let (ds, de) = (dims.d_s, dims.d_e);
    Ok(match keep {
        Keep::S => ComplexMatrix::from_fn(ds, ds, |i, j| (0..de).map(|e| m[(i * de + e, j * de + e)]).sum()),
        Keep::E => ComplexMatrix::from_fn(de, de, |i, j| (0..ds).map(|s| m[(s * de + i, s * de + j)]).sum()),
    })
}

/// Reduced state on `S` (or `E`) of a density matrix on `S ⊗ E`.
pub fn partial_trace(rho: &DensityMatrix, dims: BipartiteDims, keep: Keep) -> Result<DensityMatrix> {
    let reduced = partial_trace_matrix(rho.matrix(), dims, keep)?;
    Ok(DensityMatrix::new_unchecked(reduced))
}

/// Reduced state of a pure state, computed from amplitudes without forming
/// the full projector.
pub fn reduced_state(psi: &PureState, dims: BipartiteDims, keep: Keep) -> Result<DensityMatrix> {
    if psi.dim() != dims.total() {
        return Err(Error::DimensionMismatch { expected: dims.total(), got: psi.dim() });
    }
    let a = psi.amplitudes();
    let (ds, de) = (dims.d_s, dims.d_e);
    let m = match keep {
        Keep::S => ComplexMatrix::from_fn(ds, ds, |i, j| (0..de).map(|e| a[i * de + e] * a[j * de + e].conj()).sum()),
        Keep::E => ComplexMatrix::from_fn(de, de, |i, j| (0..ds).map(|s| a[s * de + i] * a[s * de + j].conj()).sum()),
    };
    Ok(DensityMatrix::new_unchecked(m))
}

/// `tr ρ²`, the squared Frobenius norm.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// `-Σ λ log₂ λ` over the spectrum, in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let s: f64 = rho.spectrum()?.into_iter().filter(|&l| l > EIG_CLIP).map(|l| -l * l.log2()).sum();
    Ok(s.max(0.0))
}

/// Rényi-2 entropy `-log₂ tr ρ²`.
pub fn renyi2_entropy(rho: &DensityMatrix) -> f64 {
    (-purity(rho).log2()).max(0.0)
}

fn check_same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: b.rows() });
    }
    Ok(())
}

/// Trace norm `‖ρ − σ‖₁`; for Hermitian differences this is the sum of
/// absolute eigenvalues.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho.matrix(), sigma.matrix())?;
    let diff = rho.matrix() - sigma.matrix();
    Ok(diff.eigvalsh()?.into_iter().map(f64::abs).sum())
}

/// Schatten 1-norm of an arbitrary square matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(m.singular_values()?.into_iter().sum())
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(m.singular_values()?.first().copied().unwrap_or(0.0))
}

/// Swap `F|i⟩|j⟩ = |j⟩|i⟩` on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut f = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            f[(j * d + i, i * d + j)] = Complex64::new(1.0, 0.0);
        }
    }
    f
}
