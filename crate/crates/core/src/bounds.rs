//! Closed-form large-deviation bounds.
//!
//! Everything is evaluated in natural-log space and exponentiated once at the
//! end; `d^k`-sized factors overflow doubles long before the bounds become
//! interesting. Probability bounds are reported clamped to `[0, 1]` together
//! with the raw value and its base-2 logarithm.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::ensembles::{pmin, UnitaryEnsemble};
use crate::numkit::{BipartiteDims, DensityMatrix};
use crate::{Error, Result};

/// Levy-lemma constant `2/(9π³)`.
pub fn c1() -> f64 {
    2.0 / (9.0 * PI.powi(3))
}

/// Canonical-typicality constant `1/(18π³)`.
pub fn c2() -> f64 {
    1.0 / (18.0 * PI.powi(3))
}

/// Entropy-concentration constant `1/(8π²)`.
pub fn c_entropy() -> f64 {
    1.0 / (8.0 * PI.powi(2))
}

/// A probability bound. `value` is clamped to `[0, 1]`; `raw` and `log2`
/// describe the unclamped expression. Underflowed values keep their log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound {
    pub value: f64,
    pub raw: f64,
    pub log2: f64,
    pub clamped: bool,
    pub warnings: Vec<String>,
    /// Auxiliary outputs (chosen m, β, offsets, ...).
    pub extras: BTreeMap<&'static str, f64>,
}

impl Bound {
    pub fn from_ln(ln_raw: f64) -> Self {
        let raw = ln_raw.exp();
        Self {
            value: raw.clamp(0.0, 1.0),
            raw,
            log2: ln_raw / LN_2,
            clamped: raw > 1.0,
            warnings: Vec::new(),
            extras: BTreeMap::new(),
        }
    }

    pub fn ln_raw(&self) -> f64 {
        self.log2 * LN_2
    }

    fn warn(mut self, cond: bool, msg: impl FnOnce() -> String) -> Self {
        if cond {
            self.warnings.push(msg());
        }
        self
    }

    fn extra(mut self, key: &'static str, v: f64) -> Self {
        self.extras.insert(key, v);
        self
    }
}

/// `ln(Σ exp(x_i))`, tolerant of `-inf` terms.
fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be non-negative, got {x}")))
    }
}

/// Sub-Gaussian tail `P(|X − μ| ≥ δ + shift) ≤ C exp(−a δ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailProfile {
    pub c: f64,
    pub a: f64,
    pub mu: f64,
    pub shift: f64,
}

impl TailProfile {
    /// `c = 0` is accepted as the degenerate always-zero tail.
    pub fn new(c: f64, a: f64, mu: f64, shift: f64) -> Result<Self> {
        non_negative("C", c)?;
        positive("a", a)?;
        non_negative("shift", shift)?;
        if !mu.is_finite() {
            return Err(Error::InvalidArgument("μ must be finite".into()));
        }
        Ok(Self { c, a, mu, shift })
    }
}

/// A degree-K polynomial in the entries of `U` and `U*` with coefficient
/// mass `α = Σ|α_i|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolynomialSpec {
    pub degree: usize,
    pub alpha: f64,
}

impl PolynomialSpec {
    pub fn new(degree: usize, alpha: f64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidArgument("polynomial degree must be positive".into()));
        }
        positive("α", alpha)?;
        Ok(Self { degree, alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzFn {
    pub eta: f64,
}

impl LipschitzFn {
    pub fn new(eta: f64) -> Result<Self> {
        positive("η", eta)?;
        Ok(Self { eta })
    }
}

/// `4 exp(−C₁ d δ²/η²)`.
pub fn levy_bound(f: LipschitzFn, d: usize, delta: f64) -> Result<Bound> {
    positive("δ", delta)?;
    Ok(Bound::from_ln(4f64.ln() - c1() * d as f64 * delta * delta / (f.eta * f.eta)))
}

/// Moment bounds implied by a tail profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentBound {
    /// `C Γ(m/2 + 1) a^{−m/2}`.
    pub gamma_form: f64,
    /// The looser `C (m/2a)^{m/2}`.
    pub loose_form: f64,
}

/// Bound on `E|X − μ|^m` for any real `m > 0`.
pub fn moment_from_tail(t: TailProfile, m: f64) -> Result<MomentBound> {
    positive("m", m)?;
    if t.shift != 0.0 {
        return Err(Error::InvalidArgument("moment_from_tail needs an unshifted profile".into()));
    }
    let ln_c = t.c.ln();
    Ok(MomentBound {
        gamma_form: (ln_c + ln_gamma(m / 2.0 + 1.0) - m / 2.0 * t.a.ln()).exp(),
        loose_form: (ln_c + m / 2.0 * (m / (2.0 * t.a)).ln()).exp(),
    })
}

/// Bound on `E X^m` for non-negative `X` with a shifted tail:
/// `C (2m/a)^{m/2} + (2·shift)^m`.
pub fn shifted_moment_from_tail(t: TailProfile, m: f64) -> Result<f64> {
    positive("m", m)?;
    let gauss = t.c.ln() + m / 2.0 * (2.0 * m / t.a).ln();
    let shift = m * (2.0 * t.shift).ln();
    Ok(log_sum_exp(&[gauss, shift]).exp())
}

fn check_moment_degree(p: PolynomialSpec, k: usize, m: usize) -> Result<()> {
    if m == 0 || 2 * m * p.degree > k {
        return Err(Error::InvalidArgument(format!(
            "need an integer m ≥ 1 with 2mK ≤ k (m = {m}, K = {}, k = {k})",
            p.degree
        )));
    }
    Ok(())
}

/// `ln(ε d^{−k} (α + |μ|)^{2m})`.
fn ln_design_gap(p: PolynomialSpec, mu: f64, eps: f64, d: usize, k: usize, m: usize) -> f64 {
    eps.ln() - k as f64 * (d as f64).ln() + 2.0 * m as f64 * (p.alpha + mu.abs()).ln()
}

/// Additive correction `ε d^{−k} (α + |μ|)^{2m}` between design and Haar
/// moments of order `2m`.
pub fn design_moment_gap(p: PolynomialSpec, mu: f64, eps: f64, d: usize, k: usize, m: usize) -> Result<f64> {
    non_negative("ε", eps)?;
    check_moment_degree(p, k, m)?;
    Ok(ln_design_gap(p, mu, eps, d, k, m).exp())
}

fn ln_poly_tail(t: TailProfile, p: PolynomialSpec, eps: f64, d: usize, k: usize, delta: f64, m: usize) -> f64 {
    let mf = m as f64;
    let haar = t.c.ln() + mf * (mf / t.a).ln();
    let gap = ln_design_gap(p, t.mu, eps, d, k, m);
    log_sum_exp(&[haar, gap]) - 2.0 * mf * delta.ln()
}

/// Tail bound for a polynomial under an ε-approximate k-design via the
/// `2m`-th moment. With `m = None` the best feasible integer m is used.
pub fn poly_tail_design(
    t: TailProfile,
    p: PolynomialSpec,
    eps: f64,
    d: usize,
    k: usize,
    delta: f64,
    m: Option<usize>,
) -> Result<Bound> {
    positive("δ", delta)?;
    non_negative("ε", eps)?;
    let eval = |m: usize| ln_poly_tail(t, p, eps, d, k, delta, m);
    let m = match m {
        Some(m) => {
            check_moment_degree(p, k, m)?;
            m
        }
        None => {
            let hi = k / (2 * p.degree);
            if hi < 1 {
                return Err(Error::InvalidArgument(format!("no feasible moment: k = {k} < 2K = {}", 2 * p.degree)));
            }
            argmin_log_convex(eval, 1, hi)
        }
    };
    Ok(Bound::from_ln(eval(m)).extra("m", m as f64))
}

/// Minimiser of a log-convex sequence on `[lo, hi]`: a full scan for modest
/// ranges, otherwise integer ternary search finished by a local scan.
fn argmin_log_convex(f: impl Fn(usize) -> f64, lo: usize, hi: usize) -> usize {
    let scan = |lo: usize, hi: usize| {
        (lo..=hi).map(|m| (f(m), m)).fold((f64::INFINITY, lo), |best, cur| if cur.0 < best.0 { cur } else { best }).1
    };
    if hi - lo <= 100_000 {
        return scan(lo, hi);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > 8 {
        let m1 = a + (b - a) / 3;
        let m2 = b - (b - a) / 3;
        if f(m1) <= f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    scan(a, b)
}

/// Markov on purity: `P(tr ψ_S² ≥ γ μ) ≤ 1/γ`.
pub fn markov_purity_tail(gamma: f64) -> Result<Bound> {
    positive("γ", gamma)?;
    Ok(Bound::from_ln(-gamma.ln()).warn(gamma <= 1.0, || format!("γ = {gamma} ≤ 1 gives a vacuous bound")))
}

/// `P(S(ψ_S) ≤ log₂ d_S − α − β) ≤ 2^{−α}`.
pub fn markov_entropy_tail(alpha: f64) -> Result<Bound> {
    if alpha.is_nan() {
        return Err(Error::InvalidArgument("α is NaN".into()));
    }
    Ok(Bound::from_ln(-alpha * LN_2).warn(alpha <= 0.0, || format!("α = {alpha} ≤ 0 gives a vacuous bound")))
}

/// Coefficient mass `d² (Σ_ij |ρ_ij|)²` of the purity polynomial for input `ρ`.
pub fn alpha_purity(rho: &DensityMatrix, d: usize) -> f64 {
    let l1: f64 = rho.matrix().as_slice().iter().map(|z| z.norm()).sum();
    let alpha = (d * d) as f64 * l1 * l1;
    debug_assert!(alpha <= (d as f64).powi(4) + 1e-6);
    alpha
}

/// `β = d_S / (d_E ln 2)`.
pub fn entropy_beta(dims: BipartiteDims) -> f64 {
    dims.d_s as f64 / (dims.d_e as f64 * LN_2)
}

/// Haar entropy tail `exp(−(d−1) C α² / (log₂ d_S)²)`; `β` is in the extras.
pub fn entropy_tail_haar(dims: BipartiteDims, alpha: f64) -> Result<Bound> {
    non_negative("α", alpha)?;
    let d = dims.total() as f64;
    let log_ds = (dims.d_s as f64).log2();
    let ln = -(d - 1.0) * c_entropy() * alpha * alpha / (log_ds * log_ds);
    let ln = if ln.is_nan() { 0.0 } else { ln };
    Ok(Bound::from_ln(ln)
        .warn(!(dims.d_e >= dims.d_s && dims.d_s >= 3), || {
            format!("requires d_E ≥ d_S ≥ 3 (d_S = {}, d_E = {})", dims.d_s, dims.d_e)
        })
        .extra("beta", entropy_beta(dims)))
}

/// Entropy tail under an ε-approximate k-design via the `2m`-th purity moment:
/// `(μ(2^α − 1))^{−2m} (4 (4m/(C₁d))^m + ε d^{−k} (d⁴ + μ)^{2m})`.
pub fn entropy_tail_design_messy(mu: f64, alpha: f64, m: usize, eps: f64, d: usize, k: usize) -> Result<Bound> {
    positive("μ", mu)?;
    positive("α", alpha)?;
    non_negative("ε", eps)?;
    if m == 0 || 4 * m > k {
        return Err(Error::InvalidArgument(format!("need integer 1 ≤ m ≤ k/4 (m = {m}, k = {k})")));
    }
    let (mf, df) = (m as f64, d as f64);
    let haar = 4f64.ln() + mf * (4.0 * mf / (c1() * df)).ln();
    let gap = eps.ln() - k as f64 * df.ln() + 2.0 * mf * (df.powi(4) + mu).ln();
    let ln_dev = mu.ln() + (alpha * LN_2).exp_m1().ln();
    Ok(Bound::from_ln(log_sum_exp(&[haar, gap]) - 2.0 * mf * ln_dev))
}

/// Large-n entropy tail `8·2^{−(n/(80 log₂ n))(n/5 + α)}` together with the
/// design it needs: `k = n/(10 log₂ n)` (extras `k`, `k_floor`) and
/// `ε = 4^{−n²}` (extra `log2_eps`).
pub fn entropy_tail_design(n: usize, d_s: usize, alpha: f64) -> Result<Bound> {
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    let nf = n as f64;
    let log_n = nf.log2();
    let log2_val = 3.0 - nf / (80.0 * log_n) * (nf / 5.0 + alpha);
    let k = nf / (10.0 * log_n);
    Ok(Bound::from_ln(log2_val * LN_2)
        .warn(n < 19, || format!("requires n ≥ 19, got {n}"))
        .warn(!(d_s >= 2 && (d_s as f64).log2() <= nf / 10.0), || {
            format!("requires 2 ≤ d_S ≤ 2^(n/10), got d_S = {d_s}")
        })
        .warn(!(alpha >= 2.0), || format!("requires α ≥ 2, got {alpha}"))
        .extra("k", k)
        .extra("k_floor", k.floor())
        .extra("log2_eps", -2.0 * nf * nf))
}

/// Haar canonical typicality:
/// `P(‖ρ_S − Ω_S‖₁ ≥ ε + √(d_S/d_eff)) ≤ 2 exp(−C₂ d_R ε²)`.
/// The offset `√(d_S/d_eff)` is in the extras.
pub fn statmech_tail_haar(d_s: usize, d_r: usize, d_eff: f64, eps: f64) -> Result<Bound> {
    positive("ε", eps)?;
    positive("d_eff", d_eff)?;
    Ok(Bound::from_ln(2f64.ln() - c2() * d_r as f64 * eps * eps)
        .warn(d_eff < d_r as f64 / d_s as f64 * (1.0 - 1e-12), || {
            format!("d_eff = {d_eff} is below d_R/d_S = {}", d_r as f64 / d_s as f64)
        })
        .extra("offset", (d_s as f64 / d_eff).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatmechMode {
    /// `(d_S/δ²)^m (2(4m/(C₂d_R))^m + (4d_S²/d_R)^m + ε d_R^{−k}(d_R²+1)^{4m})`
    /// with integer `1 ≤ m ≤ k/4`, default `k/8`.
    Messy { m: Option<usize> },
    /// `6 (4d_S³/(d_R δ²))^{k/8}`; needs `8 | k`.
    Simplified,
}

/// Canonical typicality under an ε-approximate k-design.
pub fn statmech_tail_design(
    d_s: usize,
    d_r: usize,
    delta: f64,
    k: usize,
    eps: Option<f64>,
    mode: StatmechMode,
) -> Result<Bound> {
    positive("δ", delta)?;
    if let Some(e) = eps {
        non_negative("ε", e)?;
    }
    let (ds, dr) = (d_s as f64, d_r as f64);
    match mode {
        StatmechMode::Simplified => {
            if k == 0 || !k.is_multiple_of(8) {
                return Err(Error::InvalidArgument(format!(
                    "simplified form needs k to be a positive multiple of 8, got {k}"
                )));
            }
            let kf = k as f64;
            let ln = 6f64.ln() + kf / 8.0 * (4.0 * ds.powi(3) / (dr * delta * delta)).ln();
            let k_max = 8.0 * c2() * ds * ds;
            let ln_eps_max = 1.5f64.ln() + kf / 8.0 * (4.0 * ds.powi(3) / dr).ln();
            Ok(Bound::from_ln(ln)
                .warn(kf > k_max, || format!("requires k ≤ 8C₂d_S² = {k_max:.6}, got k = {k}"))
                .warn(eps.is_some_and(|e| e.ln() > ln_eps_max * (1.0 + 1e-12)), || {
                    format!(
                        "requires ε ≤ (3/2)(4d_S³/d_R)^(k/8) = {:e}, got {}",
                        ln_eps_max.exp(),
                        eps.unwrap_or_default()
                    )
                })
                .extra("m", kf / 8.0))
        }
        StatmechMode::Messy { m } => {
            let eps = eps.ok_or_else(|| Error::InvalidArgument("messy form needs ε".into()))?;
            let m = match m {
                Some(m) => m,
                None if k.is_multiple_of(8) => k / 8,
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "default m = k/8 is not an integer for k = {k}; pass m explicitly"
                    )))
                }
            };
            if m == 0 || 4 * m > k {
                return Err(Error::InvalidArgument(format!("need integer 1 ≤ m ≤ k/4 (m = {m}, k = {k})")));
            }
            let mf = m as f64;
            let haar = 2f64.ln() + mf * (4.0 * mf / (c2() * dr)).ln();
            let shift = mf * (4.0 * ds * ds / dr).ln();
            let gap = eps.ln() - k as f64 * dr.ln() + 4.0 * mf * (dr * dr + 1.0).ln();
            let ln = mf * (ds / (delta * delta)).ln() + log_sum_exp(&[haar, shift, gap]);
            Ok(Bound::from_ln(ln).extra("m", mf))
        }
    }
}

/// Overlap tail `(1+ε) m!/(dδ)^m`; the tighter
/// `(1+ε)/(C(m+d−1, d−1) δ^m)` is reported in the extras as `binomial`
/// (clamped) and `log2_binomial`.
pub fn overlap_tail(d: usize, delta: f64, m: usize, eps: f64) -> Result<Bound> {
    positive("δ", delta)?;
    non_negative("ε", eps)?;
    if m == 0 || d == 0 {
        return Err(Error::InvalidArgument("m and d must be positive".into()));
    }
    let (mf, df) = (m as f64, d as f64);
    let ln_pref = (1.0 + eps).ln() - mf * delta.ln();
    let fact = ln_pref + ln_gamma(mf + 1.0) - mf * df.ln();
    let ln_binom = ln_gamma(mf + df) - ln_gamma(mf + 1.0) - ln_gamma(df);
    let binom = Bound::from_ln(ln_pref - ln_binom);
    Ok(Bound::from_ln(fact).extra("binomial", binom.value).extra("log2_binomial", binom.log2))
}

/// Size of a product-state γ-net on n qubits, `(5n/γ)^{4n}`, in bits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetSize {
    pub bits: f64,
    pub warnings: Vec<String>,
}

pub fn net_size(gamma: f64, n: usize) -> Result<NetSize> {
    positive("γ", gamma)?;
    let nf = n as f64;
    let mut warnings = Vec::new();
    if gamma > 2.0 {
        warnings.push(format!("γ = {gamma} exceeds 2"));
    }
    Ok(NetSize { bits: 4.0 * nf * (5.0 * nf / gamma).log2(), warnings })
}

/// Geometric-entanglement tail under a state k-design:
/// `(1+ε)·2^{k log₂2k + 4n log₂10n − kδ + 4n(n−δ)}`.
pub fn geom_ent_tail(n: usize, k: usize, delta: f64, eps: f64) -> Result<Bound> {
    non_negative("δ", delta)?;
    non_negative("ε", eps)?;
    if k == 0 || n == 0 {
        return Err(Error::InvalidArgument("n and k must be positive".into()));
    }
    let (nf, kf) = (n as f64, k as f64);
    let log2 = (1.0 + eps).log2() + kf * (2.0 * kf).log2() + 4.0 * nf * (10.0 * nf).log2() - kf * delta
        + 4.0 * nf * (nf - delta);
    Ok(Bound::from_ln(log2 * LN_2))
}

/// The closed-form simplification `2·n^{−n²}` of [`geom_ent_tail`] at
/// `k = n²`, `δ = 3 log₂ n + 5`, `ε = 1`. It is an upper bound there, not an
/// identity.
pub fn geom_ent_closed_form(n: usize) -> Bound {
    let nf = n as f64;
    Bound::from_ln((1.0 - nf * nf * nf.log2()) * LN_2)
}

/// Universal floor on any non-vacuous tail probability of an explicit ensemble.
pub fn pmin_floor(nu: &UnitaryEnsemble) -> Result<f64> {
    pmin(nu)
}
