//! How close an ensemble is to a k-design: balanced-monomial deviations,
//! state-design operator norms, and the tensor-product-expander constant λ.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{StateEnsemble, UnitaryEnsemble};
use crate::haar::{
    digits, exact_haar_monomial, haar_twirl_k1, haar_twirl_k2, sample_haar, sym_dim, sym_projector, MeanAccumulator,
    MomentEstimate, MonomialSpec, DEFAULT_MC_SAMPLES,
};
use crate::numkit::{operator_norm, ComplexMatrix, MAX_ENTRIES};
use crate::{Error, Result, RngStream};

/// Largest total monomial count an exhaustive scan will visit.
pub const EXHAUSTIVE_BUDGET: u128 = 10_000_000;
/// Largest operator-space dimension `d^{2k}` for [`tpe_lambda`].
pub const TPE_CAP: u128 = 1 << 13;
pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 10_000;
/// Monte Carlo work is split into this many independently seeded batches and
/// merged in order, so results do not depend on the thread count.
const MC_BATCHES: usize = 64;
const SIGMA_SLACK: f64 = 3.0;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Target of a certification: all balanced monomials of degree ≤ k within ε/d^k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub d: usize,
    pub k: usize,
    pub eps: f64,
}

impl DesignSpec {
    pub fn new(d: usize, k: usize, eps: f64) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidArgument("d and k must be positive".into()));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
        }
        Ok(Self { d, k, eps })
    }

    /// Per-monomial tolerance `ε/d^k`.
    pub fn threshold(&self) -> f64 {
        (self.eps.ln() - self.k as f64 * (self.d as f64).ln()).exp()
    }
}

/// Monte Carlo settings used wherever an expectation has no exact form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub samples: usize,
    pub rng: RngStream,
}

impl McOptions {
    pub fn new(samples: usize, rng: RngStream) -> Self {
        Self { samples, rng }
    }

    pub fn with_default_samples(rng: RngStream) -> Self {
        Self::new(DEFAULT_MC_SAMPLES, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Exhaustive,
    /// This many uniformly drawn index tuples per degree.
    RandomMonomials(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub spec: DesignSpec,
    pub max_deviation: f64,
    pub worst_monomial: MonomialSpec,
    /// Standard error of the worst monomial's deviation (0 when exact).
    pub se: f64,
    pub mode: Strategy,
    /// Monte Carlo draws per side when any expectation was sampled.
    pub mc_samples: Option<usize>,
    pub monomials_checked: u64,
    pub threshold: f64,
    pub pass: bool,
}

/// `|E_ν M − E_H M|` with its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub value: f64,
    pub se: f64,
    pub ensemble: MomentEstimate,
    pub haar: MomentEstimate,
}

/// All degree-m balanced moments `E[(U^{⊗m})_{PQ} conj((U^{⊗m})_{RS})]`,
/// stored at row `P·D + R`, column `Q·D + S` with `D = d^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTensor {
    d: usize,
    m: usize,
    mean: ComplexMatrix,
    se: Option<Vec<f64>>,
}

impl MomentTensor {
    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn mean(&self) -> &ComplexMatrix {
        &self.mean
    }

    pub fn is_exact(&self) -> bool {
        self.se.is_none()
    }

    fn block(&self) -> usize {
        self.d.pow(self.m as u32)
    }

    fn se_at(&self, row: usize, col: usize) -> f64 {
        self.se.as_ref().map_or(0.0, |s| s[row * self.mean.cols() + col])
    }

    /// The monomial stored at `(row, col)`.
    pub fn monomial_at(&self, row: usize, col: usize) -> MonomialSpec {
        let dm = self.block();
        let (p, r) = (row / dm, row % dm);
        let (q, s) = (col / dm, col % dm);
        MonomialSpec::balanced(
            &digits(p, self.d, self.m),
            &digits(q, self.d, self.m),
            &digits(r, self.d, self.m),
            &digits(s, self.d, self.m),
        )
    }

    fn position(&self, mono: &MonomialSpec) -> (usize, usize) {
        let enc = |pairs: &[(usize, usize)], first: bool| {
            pairs.iter().fold(0, |acc, &(a, b)| acc * self.d + if first { a } else { b })
        };
        let dm = self.block();
        let (p, q) = (enc(&mono.unconj, true), enc(&mono.unconj, false));
        let (r, s) = (enc(&mono.conj, true), enc(&mono.conj, false));
        (p * dm + r, q * dm + s)
    }

    pub fn get(&self, mono: &MonomialSpec) -> MomentEstimate {
        let (row, col) = self.position(mono);
        MomentEstimate { mean: self.mean[(row, col)], se: self.se_at(row, col) }
    }
}

fn check_tensor_cap(d: usize, m: usize) -> Result<()> {
    let entries = (d as u128).pow(4 * m as u32);
    if entries > MAX_ENTRIES {
        return Err(Error::DimensionCap { entries, cap: MAX_ENTRIES });
    }
    Ok(())
}

/// `A ⊗ conj(A)` with `A = U^{⊗m}`.
fn moment_term(u: &ComplexMatrix, m: usize) -> Result<ComplexMatrix> {
    let a = u.kron_power(m)?;
    a.kron(&a.conj())
}

fn explicit_tensor(items: &[(f64, &ComplexMatrix)], d: usize, m: usize) -> Result<ComplexMatrix> {
    check_tensor_cap(d, m)?;
    let n = d.pow(2 * m as u32);
    let partials = items
        .par_chunks(32)
        .map(|chunk| {
            let mut acc = ComplexMatrix::zeros(n, n);
            for (w, u) in chunk {
                acc.add_scaled(&moment_term(u, m)?, Complex64::new(*w, 0.0));
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = ComplexMatrix::zeros(n, n);
    for p in &partials {
        out.add_scaled(p, Complex64::new(1.0, 0.0));
    }
    Ok(out)
}

fn matrix_power(m: &ComplexMatrix, mut t: usize) -> Result<ComplexMatrix> {
    let mut base = m.clone();
    let mut acc = ComplexMatrix::identity(m.rows());
    while t > 0 {
        if t & 1 == 1 {
            acc = acc.matmul(&base)?;
        }
        t >>= 1;
        if t > 0 {
            base = base.matmul(&base)?;
        }
    }
    Ok(acc)
}

/// Exact degree-m moment tensor, for explicit ensembles and their iterates.
pub fn exact_moment_tensor(nu: &UnitaryEnsemble, m: usize) -> Option<Result<MomentTensor>> {
    let mean = exact_mean(nu, m)?;
    Some(mean.map(|mean| MomentTensor { d: nu.dim(), m, mean, se: None }))
}

fn exact_mean(nu: &UnitaryEnsemble, m: usize) -> Option<Result<ComplexMatrix>> {
    match nu {
        UnitaryEnsemble::Explicit(e) => {
            let items: Vec<_> = e.iter().collect();
            Some(explicit_tensor(&items, e.dim(), m))
        }
        // U ↦ U^{⊗m} ⊗ conj(U)^{⊗m} is multiplicative, so products of
        // independent draws have the matrix power as their moment tensor
        UnitaryEnsemble::Iterated { base, t } => exact_mean(base, m).map(|r| r.and_then(|b| matrix_power(&b, *t))),
        _ => None,
    }
}

/// Exact Haar moment tensor for `m ≤ 2`.
pub fn exact_haar_tensor(d: usize, m: usize) -> Result<MomentTensor> {
    if m > 2 {
        return Err(Error::ExactDegree(m));
    }
    check_tensor_cap(d, m)?;
    let n = d.pow(2 * m as u32);
    let mut t = MomentTensor { d, m, mean: ComplexMatrix::zeros(n, n), se: None };
    for row in 0..n {
        for col in 0..n {
            let mono = t.monomial_at(row, col);
            t.mean[(row, col)] = exact_haar_monomial(&mono, d)?;
        }
    }
    Ok(t)
}

fn batch_sizes(total: usize) -> impl Iterator<Item = usize> {
    (0..MC_BATCHES).map(move |b| total / MC_BATCHES + usize::from(b < total % MC_BATCHES))
}

/// Sample-mean moment tensor from `mc.samples` draws of `sampler`.
pub fn mc_moment_tensor<F>(sampler: F, d: usize, m: usize, mc: &McOptions) -> Result<MomentTensor>
where
    F: Fn(&mut ChaCha20Rng) -> ComplexMatrix + Sync,
{
    check_tensor_cap(d, m)?;
    if mc.samples < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least 2 samples".into()));
    }
    let dm = d.pow(m as u32);
    let n = dm * dm;
    let batches: Vec<(usize, usize)> = batch_sizes(mc.samples).enumerate().collect();
    let partials = batches
        .par_iter()
        .map(|&(b, size)| {
            let mut rng = mc.rng.derive(b as u64).rng();
            let mut sum = vec![ZERO; n * n];
            let mut sum_sq = vec![0.0; n * n];
            for _ in 0..size {
                let a = sampler(&mut rng).kron_power(m)?;
                let abs2: Vec<f64> = a.as_slice().iter().map(|z| z.norm_sqr()).collect();
                for p in 0..dm {
                    for r in 0..dm {
                        let row = (p * dm + r) * n;
                        for q in 0..dm {
                            let apq = a[(p, q)];
                            let wpq = abs2[p * dm + q];
                            let base = row + q * dm;
                            for s in 0..dm {
                                sum[base + s] += apq * a[(r, s)].conj();
                                sum_sq[base + s] += wpq * abs2[r * dm + s];
                            }
                        }
                    }
                }
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sum = vec![ZERO; n * n];
    let mut sum_sq = vec![0.0; n * n];
    for (s, q) in &partials {
        sum.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        sum_sq.iter_mut().zip(q).for_each(|(a, b)| *a += b);
    }
    let count = mc.samples as f64;
    let mut se = Vec::with_capacity(n * n);
    let mean: Vec<Complex64> = sum
        .iter()
        .zip(&sum_sq)
        .map(|(s, q)| {
            let mean = s / count;
            let var = ((q - count * mean.norm_sqr()) / (count - 1.0)).max(0.0);
            se.push((var / count).sqrt());
            mean
        })
        .collect();
    Ok(MomentTensor { d, m, mean: ComplexMatrix::from_vec(n, n, mean)?, se: Some(se) })
}

/// Sample means of several monomials over shared draws.
fn mc_monomials<F>(sampler: F, monos: &[MonomialSpec], mc: &McOptions) -> Result<Vec<MomentEstimate>>
where
    F: Fn(&mut ChaCha20Rng) -> ComplexMatrix + Sync,
{
    if mc.samples < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least 2 samples".into()));
    }
    let batches: Vec<(usize, usize)> = batch_sizes(mc.samples).enumerate().collect();
    let partials: Vec<Vec<MeanAccumulator>> = batches
        .par_iter()
        .map(|&(b, size)| {
            let mut rng = mc.rng.derive(b as u64).rng();
            let mut acc = vec![MeanAccumulator::default(); monos.len()];
            for _ in 0..size {
                let u = sampler(&mut rng);
                for (a, mono) in acc.iter_mut().zip(monos) {
                    a.push(mono.evaluate(&u));
                }
            }
            acc
        })
        .collect();
    let mut total = vec![MeanAccumulator::default(); monos.len()];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total.iter().map(MeanAccumulator::estimate).collect())
}

fn check_monomial(mono: &MonomialSpec, d: usize) -> Result<usize> {
    let (conj, unconj) = mono.degree();
    if conj != unconj {
        return Err(Error::Unbalanced { conj, unconj });
    }
    if conj > 0 && mono.max_index() >= d {
        return Err(Error::InvalidArgument(format!("monomial index {} out of range for d = {d}", mono.max_index())));
    }
    Ok(conj)
}

fn ensemble_side(
    nu: &UnitaryEnsemble,
    monos: &[MonomialSpec],
    m: usize,
    mc: &McOptions,
) -> Result<Vec<MomentEstimate>> {
    if let Some(e) = nu.as_explicit() {
        return Ok(monos
            .iter()
            .map(|mono| MomentEstimate::exact(e.iter().map(|(w, u)| mono.evaluate(u) * w).sum()))
            .collect());
    }
    if check_tensor_cap(nu.dim(), m).is_ok() {
        if let Some(t) = exact_moment_tensor(nu, m) {
            let t = t?;
            return Ok(monos.iter().map(|mono| t.get(mono)).collect());
        }
    }
    let stream = McOptions::new(mc.samples, mc.rng.derive(2 * m as u64));
    mc_monomials(|r| nu.sample(r), monos, &stream)
}

fn haar_side(d: usize, monos: &[MonomialSpec], m: usize, mc: &McOptions) -> Result<Vec<MomentEstimate>> {
    if m <= 2 {
        return monos.iter().map(|mono| exact_haar_monomial(mono, d).map(MomentEstimate::exact)).collect();
    }
    let stream = McOptions::new(mc.samples, mc.rng.derive(2 * m as u64 + 1));
    mc_monomials(|r| sample_haar(d, r), monos, &stream)
}

fn combine(e: MomentEstimate, h: MomentEstimate) -> Deviation {
    Deviation { value: (e.mean - h.mean).norm(), se: e.se.hypot(h.se), ensemble: e, haar: h }
}

/// Deviation of one balanced monomial from its Haar value. Sides without a
/// closed form are estimated with `mc`.
pub fn monomial_deviation(nu: &UnitaryEnsemble, mono: &MonomialSpec, mc: &McOptions) -> Result<Deviation> {
    let d = nu.dim();
    let m = check_monomial(mono, d)?;
    let e = ensemble_side(nu, std::slice::from_ref(mono), m, mc)?[0];
    let h = haar_side(d, std::slice::from_ref(mono), m, mc)?[0];
    Ok(combine(e, h))
}

#[derive(Default)]
struct Scan {
    worst: Option<(f64, f64, MonomialSpec)>,
    pass: bool,
    checked: u64,
    sampled: bool,
}

impl Scan {
    fn visit(&mut self, dev: Deviation, threshold: f64, mono: impl FnOnce() -> MonomialSpec) {
        self.checked += 1;
        if dev.value > threshold + SIGMA_SLACK * dev.se {
            self.pass = false;
        }
        if self.worst.as_ref().is_none_or(|(v, _, _)| dev.value > *v) {
            self.worst = Some((dev.value, dev.se, mono()));
        }
    }
}

/// Checks every balanced monomial of degree `1..=k` (or a random sample of
/// them). A monomial passes when its deviation is at most `ε/d^k` plus three
/// standard errors of whatever was sampled.
pub fn certify_unitary_design(
    nu: &UnitaryEnsemble,
    spec: DesignSpec,
    strategy: Strategy,
    mc: &McOptions,
) -> Result<CertReport> {
    let d = nu.dim();
    if d != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, got: d });
    }
    let threshold = spec.threshold();
    let mut scan = Scan { pass: true, ..Scan::default() };
    match strategy {
        Strategy::Exhaustive => {
            let total: u128 = (1..=spec.k).map(|m| (d as u128).saturating_pow(4 * m as u32)).sum();
            if total > EXHAUSTIVE_BUDGET {
                return Err(Error::Budget(format!(
                    "exhaustive scan needs {total} monomials, budget is {EXHAUSTIVE_BUDGET}"
                )));
            }
            for m in 1..=spec.k {
                let ens = match exact_moment_tensor(nu, m) {
                    Some(t) => t?,
                    None => {
                        let stream = McOptions::new(mc.samples, mc.rng.derive(2 * m as u64));
                        mc_moment_tensor(|r| nu.sample(r), d, m, &stream)?
                    }
                };
                let haar = if m <= 2 {
                    exact_haar_tensor(d, m)?
                } else {
                    let stream = McOptions::new(mc.samples, mc.rng.derive(2 * m as u64 + 1));
                    mc_moment_tensor(|r| sample_haar(d, r), d, m, &stream)?
                };
                scan.sampled |= !(ens.is_exact() && haar.is_exact());
                let n = ens.mean.rows();
                for row in 0..n {
                    for col in 0..n {
                        let e = MomentEstimate { mean: ens.mean[(row, col)], se: ens.se_at(row, col) };
                        let h = MomentEstimate { mean: haar.mean[(row, col)], se: haar.se_at(row, col) };
                        scan.visit(combine(e, h), threshold, || ens.monomial_at(row, col));
                    }
                }
            }
        }
        Strategy::RandomMonomials(count) => {
            if count == 0 {
                return Err(Error::InvalidArgument("need at least one monomial per degree".into()));
            }
            for m in 1..=spec.k {
                let mut rng = mc.rng.derive(1_000 + m as u64).rng();
                let tuple = |rng: &mut ChaCha20Rng| (0..m).map(|_| rng.random_range(0..d)).collect::<Vec<_>>();
                let monos: Vec<MonomialSpec> = (0..count)
                    .map(|_| {
                        let (p, q, r, s) = (tuple(&mut rng), tuple(&mut rng), tuple(&mut rng), tuple(&mut rng));
                        MonomialSpec::balanced(&p, &q, &r, &s)
                    })
                    .collect();
                let ens = ensemble_side(nu, &monos, m, mc)?;
                let haar = haar_side(d, &monos, m, mc)?;
                for ((e, h), mono) in ens.into_iter().zip(haar).zip(&monos) {
                    scan.sampled |= e.se > 0.0 || h.se > 0.0 || m > 2;
                    scan.visit(combine(e, h), threshold, || mono.clone());
                }
            }
        }
    }
    let (max_deviation, se, worst_monomial) = scan.worst.expect("k ≥ 1 visits at least one monomial");
    Ok(CertReport {
        spec,
        max_deviation,
        worst_monomial,
        se,
        mode: strategy,
        mc_samples: scan.sampled.then_some(mc.samples),
        monomials_checked: scan.checked,
        threshold,
        pass: scan.pass,
    })
}

/// Distance of a state ensemble from a state k-design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDesignDeviation {
    /// `‖E[|ψ⟩⟨ψ|^{⊗k}] − Π_sym/D_sym‖_∞`.
    pub norm: f64,
    /// `norm · D_sym`, comparable with the ε of an approximate design.
    pub eps_equivalent: f64,
}

pub fn state_design_deviation(ens: &StateEnsemble, k: usize) -> Result<StateDesignDeviation> {
    let d = ens.dim();
    let avg = ens.moment_operator(k)?;
    let dsym = sym_dim(d, k) as f64;
    let target = sym_projector(d, k)?.scale_real(1.0 / dsym);
    let norm = operator_norm(&(&avg - &target))?;
    Ok(StateDesignDeviation { norm, eps_equivalent: norm * dsym })
}

fn haar_twirl(rho: &ComplexMatrix, d: usize, k: usize) -> Result<ComplexMatrix> {
    match k {
        1 => haar_twirl_k1(rho),
        2 => haar_twirl_k2(rho, d),
        _ => Err(Error::ExactDegree(k)),
    }
}

/// Largest singular value of `T_ν − T_H` on the `d^k × d^k` operator space,
/// by power iteration on `Δ†Δ`.
pub fn tpe_lambda(nu: &UnitaryEnsemble, k: usize) -> Result<f64> {
    let d = nu.dim();
    if k == 0 || k > 2 {
        return Err(Error::ExactDegree(k));
    }
    let entries = (d as u128).pow(2 * k as u32);
    if entries > TPE_CAP {
        return Err(Error::DimensionCap { entries, cap: TPE_CAP });
    }
    let channel = nu.exact_twirl(k).ok_or(Error::NotExplicit)??;
    let dk = channel.dim();
    let delta = |x: &ComplexMatrix| -> Result<ComplexMatrix> { Ok(&channel.apply(x)? - &haar_twirl(x, d, k)?) };
    let delta_adj =
        |x: &ComplexMatrix| -> Result<ComplexMatrix> { Ok(&channel.apply_adjoint(x)? - &haar_twirl(x, d, k)?) };

    // fixed start so λ is a deterministic function of the ensemble
    let mut rng = RngStream::new(0x7e57, 0).rng();
    let mut x =
        ComplexMatrix::from_fn(dk, dk, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    x = x.scale_real(1.0 / x.frobenius_norm());
    let mut prev = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let y = delta(&x)?;
        let sigma = y.frobenius_norm();
        if sigma < 1e-300 {
            return Ok(0.0);
        }
        let z = delta_adj(&y)?;
        let zn = z.frobenius_norm();
        if zn < 1e-300 {
            return Ok(0.0);
        }
        if (sigma - prev).abs() <= POWER_TOL * sigma.max(1.0) {
            return Ok(sigma);
        }
        prev = sigma;
        x = z.scale_real(1.0 / zn);
    }
    Err(Error::PowerIterationNonConvergence(POWER_MAX_ITER))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{
        clifford_ensemble, iterate_ensemble, pauli_ensemble, CliffordMode, ExplicitEnsemble, Provenance,
    };
    use crate::numkit::{pauli, swap_operator, PureState};

    fn mc(seed: u64) -> McOptions {
        McOptions::new(20_000, RngStream::new(seed, 0))
    }

    fn explicit(us: Vec<ComplexMatrix>) -> UnitaryEnsemble {
        UnitaryEnsemble::Explicit(ExplicitEnsemble::uniform(us, Provenance::Custom).unwrap())
    }

    #[test]
    fn threshold_scales_with_dimension() {
        let s = DesignSpec::new(2, 2, 0.1).unwrap();
        assert!((s.threshold() - 0.025).abs() < 1e-15);
        assert!(DesignSpec::new(2, 2, 0.0).is_err());
    }

    #[test]
    fn pauli_monomial_examples() {
        let p = pauli_ensemble(1).unwrap();
        let d1 = monomial_deviation(&p, &MonomialSpec::abs_power(0, 0, 1), &mc(1)).unwrap();
        assert!(d1.value < 1e-15);
        let d2 = monomial_deviation(&p, &MonomialSpec::abs_power(0, 0, 2), &mc(1)).unwrap();
        assert!((d2.ensemble.mean.re - 0.5).abs() < 1e-15);
        assert!((d2.haar.mean.re - 1.0 / 3.0).abs() < 1e-15);
        assert!((d2.value - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(d2.se, 0.0);
    }

    #[test]
    fn unbalanced_monomial_is_rejected() {
        let p = pauli_ensemble(1).unwrap();
        let m = MonomialSpec::new(vec![(0, 0)], vec![]);
        assert!(matches!(monomial_deviation(&p, &m, &mc(1)), Err(Error::Unbalanced { .. })));
    }

    #[test]
    fn pauli_is_exact_one_design() {
        for n in 1..=3 {
            let p = pauli_ensemble(n).unwrap();
            let spec = DesignSpec::new(1 << n, 1, 1e-9).unwrap();
            let r = certify_unitary_design(&p, spec, Strategy::Exhaustive, &mc(1)).unwrap();
            assert!(r.max_deviation < 1e-12, "n={n}: {}", r.max_deviation);
            assert!(r.pass);
            assert_eq!(r.mc_samples, None);
        }
    }

    #[test]
    fn pauli_fails_two_design_on_abs_fourth_power() {
        let p = pauli_ensemble(1).unwrap();
        let spec = DesignSpec::new(2, 2, 0.1).unwrap();
        let r = certify_unitary_design(&p, spec, Strategy::Exhaustive, &mc(1)).unwrap();
        assert!(!r.pass);
        assert_eq!(r.monomials_checked, 16 + 256);
        let worst = monomial_deviation(&p, &r.worst_monomial, &mc(1)).unwrap();
        assert!((worst.value - r.max_deviation).abs() < 1e-15);
        // E[U00² conj(U11²)] is 1/2 for Paulis and 0 under Haar
        assert!((r.max_deviation - 0.5).abs() < 1e-12);
        let abs4 = exact_moment_tensor(&p, 2).unwrap().unwrap().get(&MonomialSpec::abs_power(0, 0, 2));
        assert!((abs4.mean.re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_qubit_clifford_is_exact_two_design() {
        let c = clifford_ensemble(1, CliffordMode::Enumerate).unwrap();
        let spec = DesignSpec::new(2, 2, 1e-9).unwrap();
        let r = certify_unitary_design(&c, spec, Strategy::Exhaustive, &mc(1)).unwrap();
        assert!(r.pass);
        assert!(r.max_deviation < 1e-12);
        for mono in [MonomialSpec::abs_power(0, 0, 2), MonomialSpec::abs_power(1, 0, 1)] {
            assert!(monomial_deviation(&c, &mono, &mc(1)).unwrap().value < 1e-12);
        }
    }

    #[test]
    fn two_qubit_clifford_is_exact_two_design() {
        let c = clifford_ensemble(2, CliffordMode::Enumerate).unwrap();
        let spec = DesignSpec::new(4, 2, 1e-9).unwrap();
        let r = certify_unitary_design(&c, spec, Strategy::Exhaustive, &mc(1)).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn single_qubit_clifford_is_not_a_four_design() {
        let c = clifford_ensemble(1, CliffordMode::Enumerate).unwrap();
        // |U00|^8: Clifford average 5/24, Haar 1/5
        let mono = MonomialSpec::abs_power(0, 0, 4);
        let dev = monomial_deviation(&c, &mono, &McOptions::new(100_000, RngStream::new(2, 0))).unwrap();
        assert!((dev.ensemble.mean.re - 5.0 / 24.0).abs() < 1e-12);
        assert!((dev.haar.mean.re - 0.2).abs() < 4.0 * dev.haar.se);
        let spec = DesignSpec::new(2, 4, 1e-6).unwrap();
        let r = certify_unitary_design(&c, spec, Strategy::Exhaustive, &McOptions::new(100_000, RngStream::new(3, 0)))
            .unwrap();
        assert!(!r.pass);
        assert!(r.max_deviation > r.threshold + 3.0 * r.se);
    }

    #[test]
    fn sampled_haar_ensemble_passes_within_error_bars() {
        let h = UnitaryEnsemble::Haar { d: 2 };
        let spec = DesignSpec::new(2, 2, 0.1).unwrap();
        let r = certify_unitary_design(&h, spec, Strategy::Exhaustive, &McOptions::new(100_000, RngStream::new(4, 0)))
            .unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.mc_samples, Some(100_000));
        assert!(r.se > 0.0);
    }

    #[test]
    fn random_monomial_strategy_matches_exhaustive_verdicts() {
        let c = clifford_ensemble(1, CliffordMode::Enumerate).unwrap();
        let spec = DesignSpec::new(2, 2, 1e-9).unwrap();
        assert!(certify_unitary_design(&c, spec, Strategy::RandomMonomials(50), &mc(5)).unwrap().pass);
        let p = pauli_ensemble(1).unwrap();
        let spec = DesignSpec::new(2, 2, 0.1).unwrap();
        let r = certify_unitary_design(&p, spec, Strategy::RandomMonomials(200), &mc(5)).unwrap();
        assert!(!r.pass);
        assert_eq!(r.monomials_checked, 400);
    }

    #[test]
    fn exhaustive_budget_is_enforced() {
        let c = clifford_ensemble(2, CliffordMode::Enumerate).unwrap();
        let spec = DesignSpec::new(4, 3, 0.1).unwrap();
        assert!(matches!(certify_unitary_design(&c, spec, Strategy::Exhaustive, &mc(1)), Err(Error::Budget(_))));
    }

    #[test]
    fn exhaustive_scan_bounds_every_single_monomial() {
        let mut rng = RngStream::new(8, 0).rng();
        let nu = explicit((0..3).map(|_| sample_haar(2, &mut rng)).collect());
        let spec = DesignSpec::new(2, 2, 0.1).unwrap();
        let r = certify_unitary_design(&nu, spec, Strategy::Exhaustive, &mc(1)).unwrap();
        for _ in 0..50 {
            let m = rng.random_range(1..=2);
            let t = |rng: &mut ChaCha20Rng| (0..m).map(|_| rng.random_range(0..2)).collect::<Vec<_>>();
            let mono = MonomialSpec::balanced(&t(&mut rng), &t(&mut rng), &t(&mut rng), &t(&mut rng));
            assert!(monomial_deviation(&nu, &mono, &mc(1)).unwrap().value <= r.max_deviation + 1e-15);
        }
    }

    #[test]
    fn passing_degree_k_implies_passing_lower_degree() {
        let c = clifford_ensemble(1, CliffordMode::Enumerate).unwrap();
        for k in [2, 1] {
            let spec = DesignSpec::new(2, k, 1e-9).unwrap();
            assert!(certify_unitary_design(&c, spec, Strategy::Exhaustive, &mc(1)).unwrap().pass);
        }
    }

    #[test]
    fn qubit_relabeling_preserves_max_deviation() {
        let mut rng = RngStream::new(9, 0).rng();
        let us: Vec<_> = (0..4).map(|_| sample_haar(4, &mut rng)).collect();
        let swap = swap_operator(2);
        let swapped: Vec<_> = us.iter().map(|u| swap.conjugate(u).unwrap()).collect();
        let spec = DesignSpec::new(4, 1, 0.1).unwrap();
        let a = certify_unitary_design(&explicit(us), spec, Strategy::Exhaustive, &mc(1)).unwrap();
        let b = certify_unitary_design(&explicit(swapped), spec, Strategy::Exhaustive, &mc(1)).unwrap();
        assert!((a.max_deviation - b.max_deviation).abs() < 1e-14);
    }

    #[test]
    fn certification_is_deterministic() {
        let h = UnitaryEnsemble::Haar { d: 2 };
        let spec = DesignSpec::new(2, 1, 0.1).unwrap();
        let run = || certify_unitary_design(&h, spec, Strategy::Exhaustive, &mc(11)).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn depth_one_two_qubit_circuit_is_one_design_by_sampling() {
        let nu = crate::ensembles::random_circuit_ensemble(2, 1, Default::default()).unwrap();
        let spec = DesignSpec::new(4, 1, 0.05).unwrap();
        let r = certify_unitary_design(&nu, spec, Strategy::Exhaustive, &mc(12)).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn iterated_tensor_matches_monte_carlo() {
        let mut rng = RngStream::new(13, 0).rng();
        let nu = explicit((0..2).map(|_| sample_haar(2, &mut rng)).collect());
        let it = iterate_ensemble(&nu, 3).unwrap();
        let exact = exact_moment_tensor(&it, 1).unwrap().unwrap();
        let sampled = mc_moment_tensor(|r| it.sample(r), 2, 1, &mc(14)).unwrap();
        for row in 0..4 {
            for col in 0..4 {
                let diff = (exact.mean[(row, col)] - sampled.mean[(row, col)]).norm();
                assert!(diff <= 4.0 * sampled.se_at(row, col) + 1e-12);
            }
        }
    }

    #[test]
    fn state_design_examples() {
        let stab = StateEnsemble::stabilizer_1q();
        assert!(state_design_deviation(&stab, 2).unwrap().norm < 1e-12);
        let single = StateEnsemble::uniform(vec![PureState::basis(2, 0)]).unwrap();
        let r = state_design_deviation(&single, 1).unwrap();
        assert!((r.norm - 0.5).abs() < 1e-14);
        assert!((r.eps_equivalent - 1.0).abs() < 1e-14);
        // qubit stabilizer states are a 3-design but not a 4-design
        assert!(state_design_deviation(&stab, 3).unwrap().norm < 1e-12);
        assert!(state_design_deviation(&stab, 4).unwrap().norm > 1e-3);
    }

    #[test]
    fn haar_states_approach_three_design() {
        let mut rng = RngStream::new(15, 0).rng();
        let states: Vec<_> = (0..100_000).map(|_| PureState::random(2, &mut rng)).collect();
        let r = state_design_deviation(&StateEnsemble::uniform(states).unwrap(), 3).unwrap();
        assert!(r.eps_equivalent < 0.05, "{r:?}");
    }

    #[test]
    fn lambda_examples() {
        let id = explicit(vec![pauli::i()]);
        assert!((tpe_lambda(&id, 1).unwrap() - 1.0).abs() < 1e-8);
        let p = pauli_ensemble(1).unwrap();
        assert!(tpe_lambda(&p, 1).unwrap() < 1e-12);
        let l2 = tpe_lambda(&p, 2).unwrap();
        assert!(l2 > 0.0);
        for t in 2..=3 {
            let it = iterate_ensemble(&p, t).unwrap();
            assert!((tpe_lambda(&it, 2).unwrap() - l2.powi(t as i32)).abs() < 1e-6);
        }
        assert!(tpe_lambda(&UnitaryEnsemble::Haar { d: 2 }, 1).is_err());
        assert!(tpe_lambda(&p, 3).is_err());
    }

    #[test]
    fn clifford_lambda_vanishes_at_degree_two() {
        let c = clifford_ensemble(1, CliffordMode::Enumerate).unwrap();
        assert!(tpe_lambda(&c, 2).unwrap() < 1e-10);
    }

    /// Dense superoperator of `T_ν − T_H` on `vec(X)`, for cross-checking the
    /// power iteration.
    fn dense_delta(nu: &UnitaryEnsemble, k: usize) -> ComplexMatrix {
        let d = nu.dim();
        let dk = d.pow(k as u32);
        let ch = nu.exact_twirl(k).unwrap().unwrap();
        let n = dk * dk;
        let mut out = ComplexMatrix::zeros(n, n);
        for col in 0..n {
            let mut e = ComplexMatrix::zeros(dk, dk);
            e[(col / dk, col % dk)] = Complex64::new(1.0, 0.0);
            let img = &ch.apply(&e).unwrap() - &haar_twirl(&e, d, k).unwrap();
            for row in 0..n {
                out[(row, col)] = img[(row / dk, row % dk)];
            }
        }
        out
    }

    #[test]
    fn lambda_matches_dense_singular_value() {
        let mut rng = RngStream::new(16, 0).rng();
        for (d, k, s) in [(2, 1, 3), (3, 1, 2), (2, 2, 4)] {
            let nu = explicit((0..s).map(|_| sample_haar(d, &mut rng)).collect());
            let dense = dense_delta(&nu, k).singular_values().unwrap()[0];
            assert!((tpe_lambda(&nu, k).unwrap() - dense).abs() < 1e-6, "d={d} k={k}");
        }
    }

    #[test]
    fn iterated_lambda_is_submultiplicative() {
        let mut rng = RngStream::new(17, 0).rng();
        let nu = explicit((0..3).map(|_| sample_haar(2, &mut rng)).collect());
        let l = tpe_lambda(&nu, 1).unwrap();
        for t in 2..=4 {
            let lt = tpe_lambda(&iterate_ensemble(&nu, t).unwrap(), 1).unwrap();
            assert!(lt <= l.powi(t as i32) + 1e-6);
        }
    }

    #[test]
    fn report_serializes_expected_fields() {
        let p = pauli_ensemble(1).unwrap();
        let r = certify_unitary_design(&p, DesignSpec::new(2, 2, 0.1).unwrap(), Strategy::Exhaustive, &mc(1)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["spec", "max_deviation", "worst_monomial", "mode", "pass", "se"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
