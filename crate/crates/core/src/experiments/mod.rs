//! Seeded Monte Carlo harnesses. Each experiment draws `N` samples in a
//! fixed number of batches, each batch on its own derived [`RngStream`], so
//! results are identical whatever the thread count.

mod constraint;
mod geoment;
mod tail;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use constraint::*;
pub use geoment::*;
pub use tail::*;

use crate::bounds::{
    entropy_beta, entropy_tail_design_messy, geom_ent_tail, markov_entropy_tail, statmech_tail_design,
    statmech_tail_haar, Bound, StatmechMode,
};
use crate::ensembles::{
    clifford_ensemble, pauli_ensemble, random_circuit_ensemble, CliffordMode, ExplicitEnsemble, Pairing, Provenance,
    UnitaryEnsemble,
};
use crate::haar::{expected_purity, sample_haar, MeanAccumulator};
use crate::numkit::{
    purity, reduced_state, renyi2_entropy, trace_distance, von_neumann_entropy, BipartiteDims, ComplexMatrix, Keep,
    PureState,
};
use crate::{Complex64, Error, Result, RngStream};

pub const MIN_SAMPLES: usize = 100;
pub const DEFAULT_BATCHES: usize = 64;
pub const TOOL_VERSION: &str = concat!("designlab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Entropy,
    Statmech,
    Geoment,
    Tailcurve,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Entropy => "entropy",
            Self::Statmech => "statmech",
            Self::Geoment => "geoment",
            Self::Tailcurve => "tailcurve",
        }
    }
}

/// Which unitaries to draw. The dimension comes from the experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EnsembleDescriptor {
    #[default]
    Haar,
    Identity,
    Pauli,
    /// Whole Clifford group (1 or 2 qubits).
    Clifford,
    RandomClifford,
    RandomCircuit {
        depth: usize,
        #[serde(default)]
        pairing: Pairing,
    },
    /// Independent Haar single-qubit unitaries on every qubit.
    ProductHaar,
    File {
        path: PathBuf,
    },
}

/// A design claim `(k, ε)` for the sampled ensemble, enabling design-form bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignClaim {
    pub k: usize,
    #[serde(default)]
    pub eps: f64,
}

/// `P(|X| ≥ t) ≤ C exp(−a t²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub c: f64,
    pub a: f64,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self { c: 2.0, a: 0.5 }
    }
}

fn default_batches() -> usize {
    DEFAULT_BATCHES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub ensemble: EnsembleDescriptor,
    /// Bipartition for `entropy`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<BipartiteDims>,
    /// Constrained subspace for `statmech`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintSpec>,
    /// Qubit count for `geoment`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    pub samples: usize,
    /// Thresholds: α for entropy, δ otherwise.
    pub grid: Vec<f64>,
    pub seed: u64,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignClaim>,
    /// Replaces `|0…0⟩` as the state the sampled unitaries act on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<PureState>,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, samples: usize, grid: Vec<f64>, seed: u64) -> Self {
        Self {
            kind,
            ensemble: EnsembleDescriptor::Haar,
            dims: None,
            constraint: None,
            qubits: None,
            samples,
            grid,
            seed,
            output: None,
            design: None,
            initial_state: None,
            batches: DEFAULT_BATCHES,
            restarts: None,
            profile: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} samples, got {}", self.samples)));
        }
        check_grid(&self.grid)?;
        if self.batches == 0 {
            return Err(Error::InvalidArgument("batches must be positive".into()));
        }
        let missing = |what: &str| Error::InvalidArgument(format!("{} experiment needs `{what}`", self.kind.name()));
        match self.kind {
            ExperimentKind::Entropy => {
                let dims = self.dims.ok_or_else(|| missing("dims"))?;
                BipartiteDims::new(dims.d_s, dims.d_e)?;
            }
            ExperimentKind::Statmech => {
                self.constraint.as_ref().ok_or_else(|| missing("constraint"))?.isometry()?;
            }
            ExperimentKind::Geoment => {
                let n = self.qubits.ok_or_else(|| missing("qubits"))?;
                if n == 0 || n > 10 {
                    return Err(Error::InvalidArgument(format!("geoment supports 1..=10 qubits, got {n}")));
                }
            }
            ExperimentKind::Tailcurve => {}
        }
        if let Some(p) = self.profile {
            if !(p.c >= 0.0 && p.a > 0.0) {
                return Err(Error::InvalidArgument("profile needs C ≥ 0 and a > 0".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form with `output` cleared.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let json = serde_json::to_string(&c).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Samples unitaries for an experiment of dimension `d`.
enum Sampler {
    Ensemble(UnitaryEnsemble),
    ProductHaar { n: usize },
}

impl Sampler {
    fn build(desc: &EnsembleDescriptor, d: usize) -> Result<Self> {
        let qubits = || {
            if d.is_power_of_two() && d > 1 {
                Ok(d.trailing_zeros() as usize)
            } else {
                Err(Error::InvalidArgument(format!("{desc:?} needs a qubit dimension, got d = {d}")))
            }
        };
        let e = match desc {
            EnsembleDescriptor::Haar => UnitaryEnsemble::Haar { d },
            EnsembleDescriptor::Identity => UnitaryEnsemble::Explicit(ExplicitEnsemble::uniform(
                vec![ComplexMatrix::identity(d)],
                Provenance::Custom,
            )?),
            EnsembleDescriptor::Pauli => pauli_ensemble(qubits()?)?,
            EnsembleDescriptor::Clifford => clifford_ensemble(qubits()?, CliffordMode::Enumerate)?,
            EnsembleDescriptor::RandomClifford => clifford_ensemble(qubits()?, CliffordMode::Random)?,
            EnsembleDescriptor::RandomCircuit { depth, pairing } => {
                random_circuit_ensemble(qubits()?, *depth, *pairing)?
            }
            EnsembleDescriptor::ProductHaar => return Ok(Self::ProductHaar { n: qubits()? }),
            EnsembleDescriptor::File { path } => {
                let e = UnitaryEnsemble::load(path)?;
                if e.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: e.dim() });
                }
                e
            }
        };
        Ok(Self::Ensemble(e))
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> ComplexMatrix {
        match self {
            Self::Ensemble(e) => e.sample(rng),
            Self::ProductHaar { n } => {
                (1..*n).fold(sample_haar(2, rng), |acc, _| acc.kron(&sample_haar(2, rng)).expect("within cap"))
            }
        }
    }

    fn is_haar(&self) -> bool {
        matches!(self, Self::Ensemble(UnitaryEnsemble::Haar { .. }))
    }
}

fn initial_state(cfg: &ExperimentConfig, d: usize) -> Result<PureState> {
    match &cfg.initial_state {
        Some(s) if s.dim() != d => Err(Error::DimensionMismatch { expected: d, got: s.dim() }),
        Some(s) => Ok(s.clone()),
        None => Ok(PureState::basis(d, 0)),
    }
}

/// Runs `draw` `n` times split over `batches` derived streams and returns the
/// results in batch order.
fn run_batches<T: Send>(
    seed: u64,
    n: usize,
    batches: usize,
    draw: impl Fn(&mut ChaCha20Rng) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let root = RngStream::new(seed, 0);
    let per = n / batches;
    let extra = n % batches;
    let out: Vec<Vec<T>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = root.derive(b as u64).rng();
            let count = per + usize::from(b < extra);
            (0..count).map(|_| draw(&mut rng)).collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

/// Everything an experiment run produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub tool_version: &'static str,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub curve: TailCurve,
    pub summary: BTreeMap<&'static str, f64>,
}

impl ExperimentResult {
    pub fn pass(&self) -> bool {
        self.curve.all_pass()
    }

    pub fn file_stem(&self) -> String {
        format!("{}_seed{}_{}", self.kind.name(), self.seed, &self.config_hash[..16])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool={}", self.tool_version);
        let _ = writeln!(out, "# kind={}", self.kind.name());
        let _ = writeln!(out, "# seed={}", self.seed);
        let _ = writeln!(out, "# config_hash={}", self.config_hash);
        let _ = writeln!(out, "# samples={}", self.curve.n);
        for (k, v) in &self.summary {
            let _ = writeln!(out, "# {k}={v}");
        }
        for w in &self.curve.warnings {
            let _ = writeln!(out, "# warning={w}");
        }
        out.push_str(&self.curve.to_csv_rows());
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let stem = self.file_stem();
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        fs::write(&csv, self.to_csv())?;
        fs::write(&json, self.to_json()?)?;
        Ok((csv, json))
    }
}

/// Validates `cfg` and runs it, optionally on a pool of `workers` threads.
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentResult> {
    cfg.validate()?;
    let go = || match cfg.kind {
        ExperimentKind::Entropy => entropy_experiment(cfg),
        ExperimentKind::Statmech => statmech_experiment(cfg),
        ExperimentKind::Geoment => mbqc_experiment(cfg),
        ExperimentKind::Tailcurve => tailcurve_experiment(cfg),
    };
    let (curve, summary) = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(go)?,
        None => go()?,
    };
    Ok(ExperimentResult {
        tool_version: TOOL_VERSION,
        kind: cfg.kind,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        curve,
        summary,
    })
}

type Outcome = (TailCurve, BTreeMap<&'static str, f64>);

fn mean_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut acc = MeanAccumulator::default();
    xs.for_each(|x| acc.push(Complex64::new(x, 0.0)));
    let e = acc.estimate();
    (e.mean.re, e.se)
}

fn min_bound(a: Bound, b: Option<Bound>) -> Bound {
    match b {
        Some(b) if b.log2 < a.log2 => b,
        _ => a,
    }
}

fn reference_warning(curve: &mut TailCurve, sampler: &Sampler, cfg: &ExperimentConfig) {
    if !sampler.is_haar() && cfg.design.is_none() {
        curve.warnings.push("ensemble is neither Haar nor a claimed design; bounds are shown for reference".into());
    }
}

struct EntropySample {
    purity: f64,
    entropy: f64,
    renyi2: f64,
}

/// Records `S(ψ_S)`, `S₂(ψ_S)` and purity of `ψ_S = tr_E(U ρ₀ U†)`; the tail
/// variable is `log₂ d_S − β − S`, so exceeding `α` means `S ≤ log₂ d_S − α − β`.
pub fn entropy_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let dims = cfg.dims.ok_or_else(|| Error::InvalidArgument("entropy experiment needs dims".into()))?;
    let d = dims.total();
    let sampler = Sampler::build(&cfg.ensemble, d)?;
    let psi0 = initial_state(cfg, d)?;
    let records = run_batches(cfg.seed, cfg.samples, cfg.batches, |rng| {
        let psi = psi0.evolve(&sampler.sample(rng))?;
        let rho = reduced_state(&psi, dims, Keep::S)?;
        Ok(EntropySample { purity: purity(&rho), entropy: von_neumann_entropy(&rho)?, renyi2: renyi2_entropy(&rho) })
    })?;

    let beta = entropy_beta(dims);
    let log_ds = (dims.d_s as f64).log2();
    let xs: Vec<f64> = records.iter().map(|r| log_ds - beta - r.entropy).collect();
    let mu = expected_purity(dims);
    let mut curve = tail_compare(&xs, &cfg.grid, |alpha| {
        let markov = markov_entropy_tail(alpha)?;
        let design = match cfg.design {
            Some(c) if alpha > 0.0 && c.k >= 4 => (1..=c.k / 4)
                .map(|m| entropy_tail_design_messy(mu, alpha, m, c.eps, d, c.k))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .reduce(|a, b| min_bound(a, Some(b))),
            _ => None,
        };
        Ok(min_bound(markov, design))
    })?;
    reference_warning(&mut curve, &sampler, cfg);

    let (mean_purity, se_purity) = mean_se(records.iter().map(|r| r.purity));
    let (mean_entropy, _) = mean_se(records.iter().map(|r| r.entropy));
    let (mean_renyi2, _) = mean_se(records.iter().map(|r| r.renyi2));
    let violations = records.iter().filter(|r| r.entropy < r.renyi2 - 1e-9).count();
    let summary = BTreeMap::from([
        ("beta", beta),
        ("expected_purity", mu),
        ("mean_purity", mean_purity),
        ("se_purity", se_purity),
        ("mean_entropy", mean_entropy),
        ("mean_renyi2", mean_renyi2),
        ("entropy_below_renyi2", violations as f64),
    ]);
    Ok((curve, summary))
}

/// Records `‖ρ_S − Ω_S‖₁` for `|φ⟩ = V U |ψ₀⟩` with `U` drawn on `H_R`.
pub fn statmech_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = cfg
        .constraint
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("statmech experiment needs a constraint".into()))?;
    let dims = c.dims()?;
    let v = c.isometry()?;
    let omega = canonical_state(c)?;
    let d_eff = c.effective_env_dim()?;
    let sampler = Sampler::build(&cfg.ensemble, c.d_r)?;
    let psi0 = initial_state(cfg, c.d_r)?;
    let records = run_batches(cfg.seed, cfg.samples, cfg.batches, |rng| {
        let u_psi = sampler.sample(rng).apply(psi0.amplitudes())?;
        let phi = PureState::normalized(v.apply(&u_psi)?)?;
        let rho = reduced_state(&phi, dims, Keep::S)?;
        Ok((trace_distance(&rho, &omega)?, purity(&rho)))
    })?;
    let xs: Vec<f64> = records.iter().map(|r| r.0).collect();
    let offset = (c.d_s as f64 / d_eff).sqrt();
    let mut curve = tail_compare(&xs, &cfg.grid, |delta| {
        let haar =
            if delta > offset { statmech_tail_haar(c.d_s, c.d_r, d_eff, delta - offset)? } else { Bound::from_ln(0.0) };
        let design = match cfg.design {
            Some(claim) if claim.k >= 4 && delta > 0.0 => Some(statmech_tail_design(
                c.d_s,
                c.d_r,
                delta,
                claim.k,
                Some(claim.eps),
                StatmechMode::Messy { m: Some((claim.k / 8).max(1)) },
            )?),
            _ => None,
        };
        Ok(if sampler.is_haar() { min_bound(haar, design) } else { design.unwrap_or(haar) })
    })?;
    reference_warning(&mut curve, &sampler, cfg);
    let (mean_distance, se_distance) = mean_se(xs.iter().copied());
    let (mean_purity, se_purity) = mean_se(records.iter().map(|r| r.1));
    let summary = BTreeMap::from([
        ("d_eff", d_eff),
        ("offset", offset),
        ("mean_distance", mean_distance),
        ("se_distance", se_distance),
        ("mean_purity", mean_purity),
        ("se_purity", se_purity),
    ]);
    Ok((curve, summary))
}

/// Records `n − E_g` for states `U|ψ₀⟩` on `n` qubits; exceeding `δ` means
/// `E_g ≤ n − δ`.
pub fn mbqc_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let n = cfg.qubits.ok_or_else(|| Error::InvalidArgument("geoment experiment needs qubits".into()))?;
    let d = 1usize << n;
    let sampler = Sampler::build(&cfg.ensemble, d)?;
    let psi0 = initial_state(cfg, d)?;
    let restarts = cfg.restarts.unwrap_or(DEFAULT_RESTARTS);
    let records = run_batches(cfg.seed, cfg.samples, cfg.batches, |rng| {
        let psi = psi0.evolve(&sampler.sample(rng))?;
        geom_ent_estimate(&psi, restarts, DEFAULT_SWEEP_TOL, rng)
    })?;
    let nf = n as f64;
    let xs: Vec<f64> = records.iter().map(|r| nf - r.e_g).collect();
    let claim = cfg.design.unwrap_or(DesignClaim { k: n * n, eps: 0.0 });
    let mut curve = tail_compare(&xs, &cfg.grid, |delta| {
        // an exact k-design is an exact k'-design for every k' ≤ k
        let ks = if claim.eps == 0.0 { 1..=claim.k } else { claim.k..=claim.k };
        ks.map(|k| geom_ent_tail(n, k, delta.max(0.0), claim.eps))
            .collect::<Result<Vec<_>>>()
            .map(|bs| bs.into_iter().reduce(|a, b| min_bound(a, Some(b))).expect("k ≥ 1"))
    })?;
    reference_warning(&mut curve, &sampler, cfg);
    let threshold = nf - 2.0 * nf.log2() - 3.0;
    let (mean_e_g, se_e_g) = mean_se(records.iter().map(|r| r.e_g));
    let summary = BTreeMap::from([
        ("mean_e_g", mean_e_g),
        ("se_e_g", se_e_g),
        ("haar_threshold", threshold),
        (
            "fraction_above_threshold",
            records.iter().filter(|r| r.e_g > threshold).count() as f64 / records.len() as f64,
        ),
        ("unconverged_restarts", records.iter().map(|r| r.unconverged as f64).sum()),
    ]);
    Ok((curve, summary))
}

/// `|Z|` for standard normal `Z` against the profile `C exp(−a t²)`.
pub fn tailcurve_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = cfg.profile.unwrap_or_default();
    let xs = run_batches(cfg.seed, cfg.samples, cfg.batches, |rng| Ok(rng.sample::<f64, _>(StandardNormal).abs()))?;
    let curve = tail_compare(&xs, &cfg.grid, |t| Ok(Bound::from_ln(p.c.ln() - p.a * t * t)))?;
    let (mean, se) = mean_se(xs.iter().copied());
    Ok((curve, BTreeMap::from([("mean", mean), ("se", se), ("c", p.c), ("a", p.a)])))
}
