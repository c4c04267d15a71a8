//! Finite and generator-form unitary ensembles.
//!
//! Explicit ensembles hold their elements and weights; generator ensembles
//! (Haar, random Clifford, random circuits, iterates) only know how to draw a
//! sample. Iterates of explicit ensembles keep an exact twirl so they can be
//! certified without sampling.

mod clifford;
mod io;
mod states;

pub use clifford::{clifford_group, random_clifford};
pub use io::EnsembleFile;
pub use states::StateEnsemble;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::haar::sample_haar;
use crate::numkit::{pauli, ComplexMatrix};
use crate::{Error, Result};

/// Unitarity tolerance for explicit elements.
pub const UNITARY_TOL: f64 = 1e-10;
/// Weight-sum tolerance.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Weight-sum check; the tolerance grows with the number of terms to absorb
/// summation round-off in very large uniform ensembles.
pub(crate) fn check_weight_sum(weights: &[f64]) -> Result<()> {
    let total: f64 = weights.iter().sum();
    let tol = WEIGHT_TOL.max(weights.len() as f64 * f64::EPSILON);
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Where an ensemble came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Pauli,
    Clifford,
    RandomCircuit,
    Iterated,
    Haar,
    Custom,
}

/// A weighted finite list of unitaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitEnsemble {
    d: usize,
    unitaries: Vec<ComplexMatrix>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    provenance: Provenance,
}

impl ExplicitEnsemble {
    pub fn new(unitaries: Vec<ComplexMatrix>, weights: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let first = unitaries.first().ok_or_else(|| Error::InvalidArgument("ensemble must be non-empty".into()))?;
        let d = first.rows();
        if unitaries.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: unitaries.len(), got: weights.len() });
        }
        for (i, u) in unitaries.iter().enumerate() {
            if u.rows() != d || u.cols() != d {
                return Err(Error::DimensionMismatch { expected: d, got: u.rows() });
            }
            let res = u.unitarity_residual();
            if res >= UNITARY_TOL {
                return Err(Error::InvalidArgument(format!("element {i} is not unitary (residual {res:e})")));
            }
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
        }
        check_weight_sum(&weights)?;
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self { d, unitaries, weights, cumulative, provenance })
    }

    pub fn uniform(unitaries: Vec<ComplexMatrix>, provenance: Provenance) -> Result<Self> {
        let w = 1.0 / unitaries.len().max(1) as f64;
        let weights = vec![w; unitaries.len()];
        Self::new(unitaries, weights, provenance)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &ComplexMatrix)> {
        self.weights.iter().copied().zip(&self.unitaries)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix {
        let x: f64 = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let idx = self.cumulative.partition_point(|&c| c <= x).min(self.len() - 1);
        self.unitaries[idx].clone()
    }

    /// Smallest selection probability.
    pub fn pmin(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// How random-circuit gates pick their qubit pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Uniformly random nearest-neighbour pair on a line.
    #[default]
    Line,
    /// Uniformly random unordered pair.
    AllToAll,
}

/// A unitary ensemble, explicit or in generator form.
#[derive(Debug, Clone, PartialEq)]
pub enum UnitaryEnsemble {
    Explicit(ExplicitEnsemble),
    Haar {
        d: usize,
    },
    /// Uniform over the `n`-qubit Clifford group.
    RandomClifford {
        n: usize,
    },
    /// `depth` Haar two-qubit gates on `n` qubits.
    RandomCircuit {
        n: usize,
        depth: usize,
        pairing: Pairing,
    },
    /// Products `U_t ⋯ U_1` of independent draws from `base`.
    Iterated {
        base: Box<UnitaryEnsemble>,
        t: usize,
    },
}

impl UnitaryEnsemble {
    pub fn dim(&self) -> usize {
        match self {
            Self::Explicit(e) => e.dim(),
            Self::Haar { d } => *d,
            Self::RandomClifford { n } | Self::RandomCircuit { n, .. } => 1 << n,
            Self::Iterated { base, .. } => base.dim(),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            Self::Explicit(e) => e.provenance(),
            Self::Haar { .. } => Provenance::Haar,
            Self::RandomClifford { .. } => Provenance::Clifford,
            Self::RandomCircuit { .. } => Provenance::RandomCircuit,
            Self::Iterated { .. } => Provenance::Iterated,
        }
    }

    pub fn as_explicit(&self) -> Option<&ExplicitEnsemble> {
        match self {
            Self::Explicit(e) => Some(e),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix {
        match self {
            Self::Explicit(e) => e.sample(rng),
            Self::Haar { d } => sample_haar(*d, rng),
            Self::RandomClifford { n } => random_clifford(*n, rng),
            Self::RandomCircuit { n, depth, pairing } => sample_circuit(*n, *depth, *pairing, rng),
            Self::Iterated { base, t } => {
                let mut acc = base.sample(rng);
                for _ in 1..*t {
                    acc = base.sample(rng).matmul(&acc).expect("square");
                }
                acc
            }
        }
    }

    /// Exact twirl channel `ρ ↦ E[U^{⊗k} ρ U^{†⊗k}]`, when the ensemble is
    /// explicit or an iterate of one.
    pub fn exact_twirl(&self, k: usize) -> Option<Result<TwirlChannel>> {
        match self {
            Self::Explicit(e) => Some(TwirlChannel::from_explicit(e, k)),
            Self::Iterated { base, t } => base.exact_twirl(k).map(|c| {
                c.map(|mut c| {
                    c.repeat *= t;
                    c
                })
            }),
            _ => None,
        }
    }
}

/// The degree-k twirl of an explicit ensemble, optionally composed with itself.
#[derive(Debug, Clone)]
pub struct TwirlChannel {
    dim: usize,
    ops: Vec<(f64, ComplexMatrix)>,
    repeat: usize,
}

impl TwirlChannel {
    fn from_explicit(e: &ExplicitEnsemble, k: usize) -> Result<Self> {
        let ops = e.iter().map(|(w, u)| Ok((w, u.kron_power(k)?))).collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: e.dim().pow(k as u32), ops, repeat: 1 })
    }

    /// Dimension `d^k` of the space the channel's operators act on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn once(&self, rho: &ComplexMatrix, adjoint: bool) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (w, u) in &self.ops {
            let term = if adjoint { u.adjoint().matmul(rho)?.matmul(u)? } else { u.conjugate(rho)? };
            out.add_scaled(&term, Complex64::new(*w, 0.0));
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = rho.clone();
        for _ in 0..self.repeat {
            out = self.once(&out, false)?;
        }
        Ok(out)
    }

    /// Hilbert-Schmidt adjoint of [`TwirlChannel::apply`].
    pub fn apply_adjoint(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = rho.clone();
        for _ in 0..self.repeat {
            out = self.once(&out, true)?;
        }
        Ok(out)
    }
}

/// The `4^n` Pauli strings with uniform weight.
pub fn pauli_ensemble(n: usize) -> Result<UnitaryEnsemble> {
    if n > 6 {
        return Err(Error::Budget(format!("explicit Pauli ensemble limited to 6 qubits, got {n}")));
    }
    let singles = [pauli::i(), pauli::x(), pauli::y(), pauli::z()];
    let mut strings = vec![ComplexMatrix::identity(1)];
    for _ in 0..n {
        strings = strings.iter().flat_map(|s| singles.iter().map(move |p| s.kron(p).expect("within cap"))).collect();
    }
    Ok(UnitaryEnsemble::Explicit(ExplicitEnsemble::uniform(strings, Provenance::Pauli)?))
}

/// How to build a Clifford ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliffordMode {
    /// Enumerate the whole group modulo phase (n ∈ {1, 2}).
    Enumerate,
    /// Uniformly random group elements.
    Random,
}

pub fn clifford_ensemble(n: usize, mode: CliffordMode) -> Result<UnitaryEnsemble> {
    match mode {
        CliffordMode::Enumerate => {
            if !(1..=2).contains(&n) {
                return Err(Error::Budget(format!("Clifford enumeration supports 1 or 2 qubits, got {n}")));
            }
            Ok(UnitaryEnsemble::Explicit(ExplicitEnsemble::uniform(clifford_group(n), Provenance::Clifford)?))
        }
        CliffordMode::Random => {
            if n == 0 || n > 12 {
                return Err(Error::Budget(format!("random Clifford limited to 1..=12 qubits, got {n}")));
            }
            Ok(UnitaryEnsemble::RandomClifford { n })
        }
    }
}

pub fn random_circuit_ensemble(n: usize, depth: usize, pairing: Pairing) -> Result<UnitaryEnsemble> {
    if n == 0 || n > 12 {
        return Err(Error::Budget(format!("random circuits limited to 1..=12 qubits, got {n}")));
    }
    if n < 2 && depth > 0 {
        return Err(Error::InvalidArgument("two-qubit gates need at least 2 qubits".into()));
    }
    Ok(UnitaryEnsemble::RandomCircuit { n, depth, pairing })
}

/// Applies `gate` (4×4) on qubits `(a, b)` from the left: `m ← G_{ab} m`.
/// Qubit 0 is the most significant bit of the basis index.
pub(crate) fn apply_two_qubit(gate: &ComplexMatrix, a: usize, b: usize, n: usize, m: &mut ComplexMatrix) {
    let ba = n - 1 - a;
    let bb = n - 1 - b;
    let d = 1usize << n;
    let cols = m.cols();
    for base in 0..d {
        if (base >> ba) & 1 == 1 || (base >> bb) & 1 == 1 {
            continue;
        }
        let idx = [base, base | (1 << bb), base | (1 << ba), base | (1 << ba) | (1 << bb)];
        for c in 0..cols {
            let v = [m[(idx[0], c)], m[(idx[1], c)], m[(idx[2], c)], m[(idx[3], c)]];
            for (r, &row) in idx.iter().enumerate() {
                m[(row, c)] = (0..4).map(|k| gate[(r, k)] * v[k]).sum();
            }
        }
    }
}

fn sample_circuit<R: Rng + ?Sized>(n: usize, depth: usize, pairing: Pairing, rng: &mut R) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(1 << n);
    for _ in 0..depth {
        let (a, b) = match pairing {
            Pairing::Line => {
                let i = rng.random_range(0..n - 1);
                (i, i + 1)
            }
            Pairing::AllToAll => {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                (a, b)
            }
        };
        let gate = sample_haar(4, rng);
        apply_two_qubit(&gate, a, b, n, &mut u);
    }
    u
}

/// `ν^t`: products of `t` independent draws. `t = 1` returns `ν` unchanged.
pub fn iterate_ensemble(nu: &UnitaryEnsemble, t: usize) -> Result<UnitaryEnsemble> {
    if t == 0 {
        return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
    }
    if t == 1 {
        return Ok(nu.clone());
    }
    Ok(UnitaryEnsemble::Iterated { base: Box::new(nu.clone()), t })
}

/// Smallest `t ≥ 1` with `λ^t ≤ ε d^{−3k/2}`, computed in log space.
pub fn required_iterations(lambda: f64, d: usize, k: usize, eps: f64) -> Result<usize> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("λ must lie in (0, 1) for convergence, got {lambda}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let target = eps.ln() - 1.5 * k as f64 * (d as f64).ln();
    let ln_l = lambda.ln();
    let raw = target / ln_l;
    // absorb round-off so exact integer ratios are not pushed up by one
    let slack = 1e-9 * raw.abs().max(1.0);
    let mut t = (raw - slack).ceil().max(1.0) as usize;
    while t as f64 * ln_l > target + slack {
        t += 1;
    }
    Ok(t)
}

/// Least selection probability of an explicit ensemble.
pub fn pmin(nu: &UnitaryEnsemble) -> Result<f64> {
    nu.as_explicit().map(ExplicitEnsemble::pmin).ok_or(Error::NotExplicit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;

    #[test]
    fn pauli_single_qubit() {
        let e = pauli_ensemble(1).unwrap();
        let ex = e.as_explicit().unwrap();
        assert_eq!(ex.len(), 4);
        assert!(ex.weights().iter().all(|w| *w == 0.25));
        assert_eq!(ex.unitaries()[1], pauli::x());
        assert_eq!(ex.unitaries()[2], pauli::y());
        assert!(pauli_ensemble(7).is_err());
    }

    #[test]
    fn explicit_elements_are_unitary() {
        for n in 1..=3 {
            let e = pauli_ensemble(n).unwrap();
            assert!(e.as_explicit().unwrap().unitaries().iter().all(|u| u.is_unitary(UNITARY_TOL)));
        }
        let c = clifford_ensemble(1, CliffordMode::Enumerate).unwrap();
        assert!(c.as_explicit().unwrap().unitaries().iter().all(|u| u.is_unitary(UNITARY_TOL)));
    }

    #[test]
    fn rejects_bad_weights_and_non_unitaries() {
        let r = ExplicitEnsemble::new(vec![pauli::x()], vec![0.5], Provenance::Custom);
        assert!(r.is_err());
        let not_u = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(ExplicitEnsemble::uniform(vec![not_u], Provenance::Custom).is_err());
    }

    #[test]
    fn pmin_examples() {
        let c = clifford_ensemble(1, CliffordMode::Enumerate).unwrap();
        assert!((pmin(&c).unwrap() - 1.0 / 24.0).abs() < 1e-15);
        let e =
            ExplicitEnsemble::new(vec![pauli::i(), pauli::x(), pauli::z()], vec![0.5, 0.25, 0.25], Provenance::Custom)
                .unwrap();
        assert_eq!(pmin(&UnitaryEnsemble::Explicit(e)).unwrap(), 0.25);
        assert_eq!(pmin(&pauli_ensemble(2).unwrap()).unwrap(), 1.0 / 16.0);
        assert!(matches!(pmin(&UnitaryEnsemble::Haar { d: 2 }), Err(Error::NotExplicit)));
    }

    #[test]
    fn enumerate_limited_to_two_qubits() {
        assert!(clifford_ensemble(3, CliffordMode::Enumerate).is_err());
    }

    #[test]
    fn depth_zero_circuit_is_identity() {
        let e = random_circuit_ensemble(3, 0, Pairing::Line).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(e.sample(&mut rng), ComplexMatrix::identity(8));
    }

    #[test]
    fn circuit_samples_are_unitary_and_reproducible() {
        let e = random_circuit_ensemble(4, 10, Pairing::Line).unwrap();
        let a = e.sample(&mut RngStream::new(2, 5).rng());
        let b = e.sample(&mut RngStream::new(2, 5).rng());
        assert_eq!(a, b);
        assert!(a.is_unitary(1e-10));
        let e = random_circuit_ensemble(3, 10, Pairing::AllToAll).unwrap();
        assert!(e.sample(&mut RngStream::new(3, 0).rng()).is_unitary(1e-10));
    }

    #[test]
    fn two_qubit_embedding_matches_kron() {
        let mut rng = RngStream::new(4, 0).rng();
        let g = sample_haar(4, &mut rng);
        let mut m = ComplexMatrix::identity(8);
        apply_two_qubit(&g, 1, 2, 3, &mut m);
        let expected = pauli::i().kron(&g).unwrap();
        assert!(m.max_abs_diff(&expected) < 1e-14);
        let mut m = ComplexMatrix::identity(8);
        apply_two_qubit(&g, 0, 1, 3, &mut m);
        assert!(m.max_abs_diff(&g.kron(&pauli::i()).unwrap()) < 1e-14);
    }

    #[test]
    fn iterate_once_is_identity_operation() {
        let p = pauli_ensemble(1).unwrap();
        assert_eq!(iterate_ensemble(&p, 1).unwrap(), p);
        assert!(iterate_ensemble(&p, 0).is_err());
    }

    #[test]
    fn iterated_sampling_is_reproducible() {
        let it = iterate_ensemble(&UnitaryEnsemble::Haar { d: 3 }, 4).unwrap();
        let s = RngStream::new(9, 9);
        assert_eq!(it.sample(&mut s.rng()), it.sample(&mut s.rng()));
        assert!(it.sample(&mut s.rng()).is_unitary(1e-10));
    }

    #[test]
    fn iterate_twice_is_weighted_product_ensemble() {
        let base = ExplicitEnsemble::new(
            vec![pauli::i(), pauli::x(), crate::haar::sample_haar(2, &mut RngStream::new(1, 1).rng())],
            vec![0.5, 0.3, 0.2],
            Provenance::Custom,
        )
        .unwrap();
        let nu = UnitaryEnsemble::Explicit(base.clone());
        let it = iterate_ensemble(&nu, 2).unwrap();
        // the S² products U_b U_a with weight w_a w_b
        let mut prods = Vec::new();
        let mut weights = Vec::new();
        for (wa, ua) in base.iter() {
            for (wb, ub) in base.iter() {
                prods.push(ub.matmul(ua).unwrap());
                weights.push(wa * wb);
            }
        }
        let explicit = UnitaryEnsemble::Explicit(ExplicitEnsemble::new(prods, weights, Provenance::Custom).unwrap());
        let rho = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64 + 0.3, j as f64 - 0.7));
        let a = it.exact_twirl(1).unwrap().unwrap().apply(&rho).unwrap();
        let b = explicit.exact_twirl(1).unwrap().unwrap().apply(&rho).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn required_iterations_examples() {
        assert_eq!(required_iterations(0.5, 2, 1, 2f64.powf(1.5)).unwrap(), 1);
        assert_eq!(required_iterations(0.5, 2, 2, 0.125).unwrap(), 6);
        assert_eq!(required_iterations(0.9, 4, 2, 1e-2).unwrap(), 84);
        assert!(required_iterations(1.0, 2, 1, 0.1).is_err());
        assert!(required_iterations(0.5, 2, 1, 0.0).is_err());
    }

    #[test]
    fn required_iterations_is_minimal() {
        for &(l, d, k, e) in &[(0.3, 2, 1, 1e-3), (0.77, 8, 3, 0.5), (0.99, 16, 2, 1e-6)] {
            let t = required_iterations(l, d, k, e).unwrap();
            let target = e * (d as f64).powf(-1.5 * k as f64);
            assert!(l.powi(t as i32) <= target * (1.0 + 1e-9));
            if t > 1 {
                assert!(l.powi(t as i32 - 1) > target);
            }
        }
    }
}
