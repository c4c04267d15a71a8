//! Haar sampling and the Haar-side moment oracles.
//!
//! Exact moments are available for degree at most 2, read off the closed-form
//! twirls; higher degrees fall back to Monte Carlo with a reported standard
//! error.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::numkit::{self, BipartiteDims, ComplexMatrix, DensityMatrix};
use crate::{Error, Result, RngStream};

/// Default Monte Carlo sample count.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Haar-random unitary on `C^d`.
///
/// Orthonormalises a complex Ginibre matrix by QR and multiplies each column
/// of `Q` by the phase of the matching diagonal entry of `R`, which makes the
/// factorisation unique and the result exactly Haar distributed.
pub fn sample_haar<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    assert!(d >= 1, "dimension must be positive");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = nalgebra::DMatrix::<Complex64>::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal) * scale, rng.sample::<f64, _>(StandardNormal) * scale)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { ONE };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_nalgebra(&q)
}

/// `E_H[U ρ U†] = tr(ρ) I/d`.
pub fn haar_twirl_k1(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !rho.is_square() {
        return Err(Error::NotSquare(rho.rows(), rho.cols()));
    }
    let d = rho.rows();
    Ok(ComplexMatrix::identity(d).scale(rho.trace() / d as f64))
}

/// Coefficients `(c_I, c_F)` of the degree-2 Haar twirl of an operator with
/// the given `tr ρ` and `tr Fρ`, from the Gram system `[[d², d], [d, d²]]`.
fn k2_coefficients(d: usize, tr: Complex64, tr_f: Complex64) -> (Complex64, Complex64) {
    if d == 1 {
        // I = F on C^1 ⊗ C^1; split evenly.
        return (tr * 0.5, tr * 0.5);
    }
    let d = d as f64;
    let det = d.powi(4) - d * d;
    let c_i = (tr * (d * d) - tr_f * d) / det;
    let c_f = (tr_f * (d * d) - tr * d) / det;
    (c_i, c_f)
}

/// `E_H[U^{⊗2} ρ U^{†⊗2}]` for an arbitrary operator on `C^d ⊗ C^d`: the
/// Hilbert-Schmidt projection of `ρ` onto `span{I, F}`.
pub fn haar_twirl_k2(rho: &ComplexMatrix, d: usize) -> Result<ComplexMatrix> {
    if rho.rows() != d * d || rho.cols() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, got: rho.rows() });
    }
    let f = numkit::swap_operator(d);
    let tr_f = f.hs_inner(rho);
    let (c_i, c_f) = k2_coefficients(d, rho.trace(), tr_f);
    let mut out = ComplexMatrix::identity(d * d).scale(c_i);
    out.add_scaled(&f, c_f);
    Ok(out)
}

/// `E_H[UρU† ⊗ UρU†] = (I + F)/(d(d+1))` for a pure `ρ`.
pub fn haar_twirl_k2_pure(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    let p = numkit::purity(rho);
    if p < 1.0 - 1e-8 {
        return Err(Error::InvalidState(format!("twirl input is not pure (purity {p})")));
    }
    let d = rho.dim();
    let mut out = ComplexMatrix::identity(d * d);
    out.add_scaled(&numkit::swap_operator(d), ONE);
    Ok(out.scale_real(1.0 / (d * (d + 1)) as f64))
}

/// `C(k + d − 1, d − 1)`, the dimension of the symmetric subspace of `(C^d)^{⊗k}`.
pub fn sym_dim(d: usize, k: usize) -> u128 {
    binomial((k + d - 1) as u128, (d - 1) as u128)
}

pub(crate) fn binomial(n: u128, r: u128) -> u128 {
    let r = r.min(n - r.min(n));
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..k {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

pub(crate) fn digits(mut index: usize, d: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

pub(crate) fn undigits(tuple: &[usize], d: usize) -> usize {
    tuple.iter().fold(0, |acc, &t| acc * d + t)
}

/// Projector onto the symmetric subspace of `(C^d)^{⊗k}`.
pub fn sym_projector(d: usize, k: usize) -> Result<ComplexMatrix> {
    let dim = (d as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if dim.saturating_mul(dim) > numkit::MAX_ENTRIES {
        return Err(Error::DimensionCap { entries: dim.saturating_mul(dim), cap: numkit::MAX_ENTRIES });
    }
    let dim = dim as usize;
    let perms = permutations(k);
    let w = 1.0 / perms.len() as f64;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let t = digits(col, d, k);
        for p in &perms {
            let permuted: Vec<usize> = p.iter().map(|&i| t[i]).collect();
            out[(undigits(&permuted, d), col)] += Complex64::new(w, 0.0);
        }
    }
    Ok(out)
}

/// A monomial `Π U_{p q} · Π conj(U_{r s})` in the entries of a unitary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonomialSpec {
    /// `(row, col)` of each unconjugated factor.
    pub unconj: Vec<(usize, usize)>,
    /// `(row, col)` of each conjugated factor.
    pub conj: Vec<(usize, usize)>,
}

impl MonomialSpec {
    pub fn new(unconj: Vec<(usize, usize)>, conj: Vec<(usize, usize)>) -> Self {
        Self { unconj, conj }
    }

    /// Balanced monomial from index tuples `p, q, r, s`:
    /// `U_{p1 q1}…U_{pm qm} · conj(U_{r1 s1}…U_{rm sm})`.
    pub fn balanced(p: &[usize], q: &[usize], r: &[usize], s: &[usize]) -> Self {
        Self {
            unconj: p.iter().copied().zip(q.iter().copied()).collect(),
            conj: r.iter().copied().zip(s.iter().copied()).collect(),
        }
    }

    /// `|U_{ij}|^{2m}`.
    pub fn abs_power(i: usize, j: usize, m: usize) -> Self {
        Self { unconj: vec![(i, j); m], conj: vec![(i, j); m] }
    }

    /// `(k₁, k₂)`: number of conjugated and unconjugated factors.
    pub fn degree(&self) -> (usize, usize) {
        (self.conj.len(), self.unconj.len())
    }

    pub fn is_balanced(&self) -> bool {
        self.conj.len() == self.unconj.len()
    }

    pub fn max_index(&self) -> usize {
        self.unconj.iter().chain(&self.conj).map(|&(a, b)| a.max(b)).max().unwrap_or(0)
    }

    pub fn evaluate(&self, u: &ComplexMatrix) -> Complex64 {
        let mut acc = ONE;
        for &(p, q) in &self.unconj {
            acc *= u[(p, q)];
        }
        for &(r, s) in &self.conj {
            acc *= u[(r, s)].conj();
        }
        acc
    }
}

/// An expectation with its standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: Complex64,
    pub se: f64,
}

impl MomentEstimate {
    pub fn exact(mean: Complex64) -> Self {
        Self { mean, se: 0.0 }
    }
}

/// Running sums for a complex sample mean; merge is order independent up to
/// floating-point association.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    pub n: u64,
    pub sum: Complex64,
    pub sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: Complex64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x.norm_sqr();
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn estimate(&self) -> MomentEstimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 { ((self.sum_sq - n * mean.norm_sqr()) / (n - 1.0)).max(0.0) } else { 0.0 };
        MomentEstimate { mean, se: (var / n).sqrt() }
    }
}

/// How to evaluate a Haar expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HaarMode {
    /// Closed form; degree at most 2.
    Exact,
    /// Sample mean over `samples` Haar draws.
    MonteCarlo { samples: usize, rng: RngStream },
}

/// Exact Haar expectation of a balanced monomial of degree at most 2.
pub fn exact_haar_monomial(m: &MonomialSpec, d: usize) -> Result<Complex64> {
    let (k1, k2) = m.degree();
    if k1.max(k2) > 2 {
        return Err(Error::ExactDegree(k1.max(k2)));
    }
    if !m.is_balanced() {
        // invariant under U -> e^{iθ}U, so unbalanced moments vanish
        return Ok(Complex64::new(0.0, 0.0));
    }
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let val = match k1 {
        0 => 1.0,
        1 => {
            let (p, q) = m.unconj[0];
            let (r, s) = m.conj[0];
            delta(q, s) * delta(p, r) / d as f64
        }
        _ => {
            let [(p1, q1), (p2, q2)] = [m.unconj[0], m.unconj[1]];
            let [(r1, s1), (r2, s2)] = [m.conj[0], m.conj[1]];
            let tr = Complex64::new(delta(q1, s1) * delta(q2, s2), 0.0);
            let tr_f = Complex64::new(delta(q1, s2) * delta(q2, s1), 0.0);
            let (c_i, c_f) = k2_coefficients(d, tr, tr_f);
            let v = c_i * (delta(p1, r1) * delta(p2, r2)) + c_f * (delta(p1, r2) * delta(p2, r1));
            return Ok(v);
        }
    };
    Ok(Complex64::new(val, 0.0))
}

/// Haar expectation of a monomial, exactly (degree ≤ 2) or by Monte Carlo.
pub fn haar_monomial(m: &MonomialSpec, d: usize, mode: HaarMode) -> Result<MomentEstimate> {
    if m.max_index() >= d {
        return Err(Error::InvalidArgument(format!("monomial index {} out of range for d = {d}", m.max_index())));
    }
    match mode {
        HaarMode::Exact => Ok(MomentEstimate::exact(exact_haar_monomial(m, d)?)),
        HaarMode::MonteCarlo { samples, rng } => {
            let mut g = rng.rng();
            let mut acc = MeanAccumulator::default();
            for _ in 0..samples {
                acc.push(m.evaluate(&sample_haar(d, &mut g)));
            }
            Ok(acc.estimate())
        }
    }
}

/// Expected purity of the reduced state of a Haar-random pure state on `S ⊗ E`.
pub fn expected_purity(dims: BipartiteDims) -> f64 {
    (dims.d_s + dims.d_e) as f64 / (dims.total() + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{reduced_state, Keep, PureState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn haar_is_unitary_up_to_64() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 2, 3, 5, 8, 16, 33, 64] {
            let u = sample_haar(d, &mut rng);
            assert!(u.unitarity_residual() < 1e-10, "d={d}");
        }
    }

    #[test]
    fn d1_is_a_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = sample_haar(1, &mut rng);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn first_moment_vanishes() {
        let n = 100_000;
        let est = haar_monomial(
            &MonomialSpec::new(vec![(0, 0)], vec![]),
            2,
            HaarMode::MonteCarlo { samples: n, rng: RngStream::new(3, 0) },
        )
        .unwrap();
        let sigma = (1.0 / (2.0 * n as f64)).sqrt();
        assert!(est.mean.norm() < 3.0 * sigma, "{:?}", est);
    }

    #[test]
    fn second_moment_is_one_over_d() {
        let est = haar_monomial(
            &MonomialSpec::abs_power(0, 0, 1),
            4,
            HaarMode::MonteCarlo { samples: 100_000, rng: RngStream::new(4, 0) },
        )
        .unwrap();
        assert!((est.mean.re - 0.25).abs() < 3.0 * est.se, "{:?}", est);
    }

    #[test]
    fn twirl_k1_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(haar_twirl_k1(&i2).unwrap(), i2);
        let p0 = PureState::basis(2, 0).projector();
        assert!(haar_twirl_k1(&p0).unwrap().max_abs_diff(&i2.scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn twirl_k1_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = 3;
        let rho =
            ComplexMatrix::from_fn(d, d, |i, j| Complex64::new((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.2));
        let exact = haar_twirl_k1(&rho).unwrap();
        let n = 100_000;
        let mut acc: Vec<MeanAccumulator> = vec![MeanAccumulator::default(); d * d];
        for _ in 0..n {
            let t = sample_haar(d, &mut rng).conjugate(&rho).unwrap();
            for (a, x) in acc.iter_mut().zip(t.as_slice()) {
                a.push(*x);
            }
        }
        for (a, e) in acc.iter().zip(exact.as_slice()) {
            let est = a.estimate();
            assert!((est.mean - e).norm() <= 4.0 * est.se + 1e-12, "{est:?} vs {e}");
        }
    }

    #[test]
    fn twirl_k2_pure_trace_and_spectrum() {
        let rho = PureState::basis(2, 0).density();
        let t = haar_twirl_k2_pure(&rho).unwrap();
        assert!((t.trace().re - 1.0).abs() < 1e-14);
        let ev = t.eigvalsh().unwrap();
        assert!(ev[0].abs() < 1e-14);
        for e in &ev[1..] {
            assert!((e - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn twirl_k2_pure_rejects_mixed() {
        assert!(haar_twirl_k2_pure(&DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn twirl_k2_pure_independent_of_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let reference = haar_twirl_k2_pure(&PureState::basis(3, 0).density()).unwrap();
        for _ in 0..5 {
            let psi = PureState::random(3, &mut rng);
            let t = haar_twirl_k2_pure(&psi.density()).unwrap();
            assert!(t.max_abs_diff(&reference) < 1e-12);
        }
    }

    #[test]
    fn general_k2_twirl_agrees_with_pure_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for d in 1..5 {
            let psi = PureState::random(d, &mut rng);
            let p = psi.projector();
            let rho2 = p.kron(&p).unwrap();
            let general = haar_twirl_k2(&rho2, d).unwrap();
            let pure = haar_twirl_k2_pure(&psi.density()).unwrap();
            assert!(general.max_abs_diff(&pure) < 1e-12, "d={d}");
        }
    }

    #[test]
    fn twirl_k2_matches_monte_carlo() {
        let d = 2;
        let p = PureState::basis(2, 0).projector();
        let rho2 = p.kron(&p).unwrap();
        let exact = haar_twirl_k2_pure(&PureState::basis(2, 0).density()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut acc = vec![MeanAccumulator::default(); 16];
        for _ in 0..100_000 {
            let u = sample_haar(d, &mut rng);
            let uu = u.kron(&u).unwrap();
            let t = uu.conjugate(&rho2).unwrap();
            for (a, x) in acc.iter_mut().zip(t.as_slice()) {
                a.push(*x);
            }
        }
        for (a, e) in acc.iter().zip(exact.as_slice()) {
            let est = a.estimate();
            assert!((est.mean - e).norm() <= 4.0 * est.se + 1e-12, "{est:?} vs {e}");
        }
        // a non-pure, non-Hermitian input through the Gram projection
        let x = ComplexMatrix::from_fn(4, 4, |i, j| Complex64::new(i as f64 - 0.5 * j as f64, (i * j) as f64 * 0.3));
        let exact = haar_twirl_k2(&x, d).unwrap();
        let mut acc = vec![MeanAccumulator::default(); 16];
        for _ in 0..100_000 {
            let u = sample_haar(d, &mut rng);
            let uu = u.kron(&u).unwrap();
            let t = uu.conjugate(&x).unwrap();
            for (a, v) in acc.iter_mut().zip(t.as_slice()) {
                a.push(*v);
            }
        }
        for (a, e) in acc.iter().zip(exact.as_slice()) {
            let est = a.estimate();
            assert!((est.mean - e).norm() <= 4.0 * est.se + 1e-12, "{est:?} vs {e}");
        }
    }

    #[test]
    fn sym_projector_examples() {
        assert_eq!(sym_dim(2, 2), 3);
        assert_eq!(sym_dim(2, 3), 4);
        assert_eq!(sym_dim(4, 3), 20);
        let p = sym_projector(2, 2).unwrap();
        assert!((p.trace().re - 3.0).abs() < 1e-14);
        assert!((&p * &p).max_abs_diff(&p) < 1e-14);
        let ket00 = PureState::basis(4, 0);
        assert!(p
            .apply(ket00.amplitudes())
            .unwrap()
            .iter()
            .zip(ket00.amplitudes())
            .all(|(a, b)| (a - b).norm() < 1e-15));
        let anti = vec![c(0.0), c(1.0), c(-1.0), c(0.0)];
        assert!(p.apply(&anti).unwrap().iter().all(|z| z.norm() < 1e-15));
        let p3 = sym_projector(2, 3).unwrap();
        assert!((p3.trace().re - 4.0).abs() < 1e-14);
        assert!((&p3 * &p3).max_abs_diff(&p3) < 1e-14);
    }

    #[test]
    fn sym_projector_respects_cap() {
        assert!(matches!(sym_projector(2, 14), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn exact_monomials() {
        let m = MonomialSpec::abs_power(0, 0, 1);
        assert!((exact_haar_monomial(&m, 2).unwrap() - c(0.5)).norm() < 1e-15);
        let m = MonomialSpec::abs_power(0, 0, 2);
        assert!((exact_haar_monomial(&m, 2).unwrap() - c(1.0 / 3.0)).norm() < 1e-15);
        assert!(matches!(
            haar_monomial(&MonomialSpec::abs_power(0, 0, 3), 2, HaarMode::Exact),
            Err(Error::ExactDegree(3))
        ));
    }

    #[test]
    fn unbalanced_vanishes_by_monte_carlo() {
        let m = MonomialSpec::new(vec![(0, 0), (1, 1)], vec![]);
        let est = haar_monomial(&m, 2, HaarMode::MonteCarlo { samples: 100_000, rng: RngStream::new(5, 1) }).unwrap();
        assert!(est.mean.norm() < 3.0 * est.se, "{est:?}");
        assert_eq!(exact_haar_monomial(&m, 2).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn all_low_degree_monomials_match_monte_carlo() {
        for d in [2usize, 3] {
            let mut g = RngStream::new(31, d as u64).rng();
            let samples: Vec<ComplexMatrix> = (0..20_000).map(|_| sample_haar(d, &mut g)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
            for m in 1..=2 {
                for _ in 0..25 {
                    let pick = |rng: &mut ChaCha8Rng| (0..m).map(|_| rng.random_range(0..d)).collect::<Vec<_>>();
                    let (p, q, r, s) = (pick(&mut rng), pick(&mut rng), pick(&mut rng), pick(&mut rng));
                    let mono = MonomialSpec::balanced(&p, &q, &r, &s);
                    let exact = exact_haar_monomial(&mono, d).unwrap();
                    let mut acc = MeanAccumulator::default();
                    samples.iter().for_each(|u| acc.push(mono.evaluate(u)));
                    let est = acc.estimate();
                    assert!((est.mean - exact).norm() <= 4.0 * est.se + 1e-12, "{mono:?}: {est:?} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn expected_purity_examples() {
        for de in 1..6 {
            assert!((expected_purity(BipartiteDims::new(1, de).unwrap()) - 1.0).abs() < 1e-15);
        }
        assert!((expected_purity(BipartiteDims::new(2, 4).unwrap()) - 2.0 / 3.0).abs() < 1e-15);
        let dims = BipartiteDims::new(2, 2).unwrap();
        assert!((expected_purity(dims) - 0.8).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut acc = MeanAccumulator::default();
        let zero = PureState::basis(4, 0);
        for _ in 0..100_000 {
            let psi = zero.evolve(&sample_haar(4, &mut rng)).unwrap();
            acc.push(c(numkit::purity(&reduced_state(&psi, dims, Keep::S).unwrap())));
        }
        let est = acc.estimate();
        assert!((est.mean.re - 0.8).abs() < 3.0 * est.se, "{est:?}");
    }

    #[test]
    fn expected_purity_range_and_symmetry() {
        for ds in 2..8 {
            for de in 1..8 {
                let a = expected_purity(BipartiteDims::new(ds, de).unwrap());
                let b = expected_purity(BipartiteDims::new(de, ds).unwrap());
                assert_eq!(a, b);
                assert!(a > 1.0 / ds as f64 && a <= 1.0);
            }
        }
    }
}
