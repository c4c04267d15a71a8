mod bound;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use designlab::certify::{certify_unitary_design, tpe_lambda, DesignSpec, McOptions, Strategy, TPE_CAP};
use designlab::ensembles::{
    clifford_ensemble, pauli_ensemble, random_circuit_ensemble, CliffordMode, EnsembleFile, ExplicitEnsemble, Pairing,
    Provenance, UnitaryEnsemble,
};
use designlab::experiments::{run_experiment, ExperimentConfig, TOOL_VERSION};
use designlab::haar::DEFAULT_MC_SAMPLES;
use designlab::numkit::ComplexMatrix;
use designlab::{Error, RngStream};
use serde_json::{json, Value};

const EXIT_PASS: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_FAIL: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "designlab", version, about = "Unitary/state k-design certification, tail bounds and experiments")]
struct Cli {
    /// Seed for randomized commands (falls back to DESIGNLAB_SEED, then OS entropy).
    #[arg(long, global = true, env = "DESIGNLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads for batch-parallel work (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Certify an ensemble as an ε-approximate unitary k-design.
    Certify {
        /// Builtin (pauliN, cliffordN, random-cliffordN, haarD, circuitN:DEPTH, identityD) or a JSON file.
        #[arg(long)]
        ensemble: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        /// Check this many random monomials per degree instead of all of them.
        #[arg(long)]
        random_monomials: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        mc_samples: usize,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an analytic tail bound.
    Bound {
        #[command(subcommand)]
        which: bound::BoundCmd,
    },
    /// Run an experiment from a JSON config; flags override file values.
    Experiment {
        /// Experiment config (JSON).
        config: PathBuf,
        /// Output directory (default: the config's `output`, else the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's sample count.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Explicit-ensemble file operations.
    Ensemble {
        #[command(subcommand)]
        op: EnsembleOp,
    },
    /// Draw unitaries (or states `U|0⟩`) and emit them as JSON.
    Sample {
        #[arg(long)]
        ensemble: String,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        states: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum EnsembleOp {
    /// Write a builtin explicit ensemble to a file.
    Save {
        #[arg(long)]
        ensemble: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate an ensemble file and summarise it.
    Load { path: PathBuf },
    /// Summarise a builtin or file ensemble.
    Describe { ensemble: String },
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Lib(e)
    }
}

type CmdResult = Result<u8, Failure>;

fn parse_count(s: &str, prefix: &str) -> Option<usize> {
    s.strip_prefix(prefix)?.parse().ok()
}

fn resolve_ensemble(spec: &str) -> Result<UnitaryEnsemble, Failure> {
    let explicit = |us: Vec<ComplexMatrix>| -> Result<UnitaryEnsemble, Failure> {
        Ok(UnitaryEnsemble::Explicit(ExplicitEnsemble::uniform(us, Provenance::Custom)?))
    };
    if let Some(n) = parse_count(spec, "random-clifford") {
        return Ok(clifford_ensemble(n, CliffordMode::Random)?);
    }
    if let Some(n) = parse_count(spec, "pauli") {
        return Ok(pauli_ensemble(n)?);
    }
    if let Some(n) = parse_count(spec, "clifford") {
        return Ok(clifford_ensemble(n, CliffordMode::Enumerate)?);
    }
    if let Some(d) = parse_count(spec, "haar") {
        if d == 0 {
            return Err(Failure::Usage("haar dimension must be positive".into()));
        }
        return Ok(UnitaryEnsemble::Haar { d });
    }
    if let Some(d) = parse_count(spec, "identity") {
        if d == 0 {
            return Err(Failure::Usage("identity dimension must be positive".into()));
        }
        return explicit(vec![ComplexMatrix::identity(d)]);
    }
    if let Some(rest) = spec.strip_prefix("circuit") {
        let parsed = rest.split_once(':').and_then(|(n, depth)| Some((n.parse().ok()?, depth.parse().ok()?)));
        let (n, depth) = parsed.ok_or_else(|| Failure::Usage(format!("expected circuitN:DEPTH, got `{spec}`")))?;
        return Ok(random_circuit_ensemble(n, depth, Pairing::Line)?);
    }
    let path = Path::new(spec);
    if path.exists() {
        return Ok(UnitaryEnsemble::load(path)?);
    }
    Err(Failure::Usage(format!("unknown ensemble `{spec}` (not a builtin name or an existing file)")))
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(rand::random);
    eprintln!("seed: {seed}");
    seed
}

fn emit(value: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    if let Some(p) = out {
        fs::write(p, &text).map_err(Error::from)?;
    }
    println!("{text}");
    Ok(())
}

fn describe(e: &UnitaryEnsemble) -> Result<Value, Failure> {
    let mut v = json!({
        "d": e.dim(),
        "provenance": e.provenance(),
    });
    if let Some(x) = e.as_explicit() {
        let residual = x.unitaries().iter().map(ComplexMatrix::unitarity_residual).fold(0.0, f64::max);
        v["size"] = json!(x.len());
        v["pmin"] = json!(x.pmin());
        v["max_unitarity_residual"] = json!(residual);
        if (e.dim() as u128).pow(2) <= TPE_CAP {
            v["tpe_lambda_k1"] = json!(tpe_lambda(e, 1)?);
        }
    } else {
        v["form"] = json!("generator");
    }
    Ok(v)
}

fn cmd_certify(
    seed: Option<u64>,
    ensemble: &str,
    k: usize,
    eps: f64,
    random_monomials: Option<usize>,
    mc_samples: usize,
    out: Option<&Path>,
) -> CmdResult {
    let nu = resolve_ensemble(ensemble)?;
    let spec = DesignSpec::new(nu.dim(), k, eps)?;
    let strategy = random_monomials.map_or(Strategy::Exhaustive, Strategy::RandomMonomials);
    let seed = resolve_seed(seed);
    let report = certify_unitary_design(&nu, spec, strategy, &McOptions::new(mc_samples, RngStream::new(seed, 0)))?;
    let value = json!({
        "tool_version": TOOL_VERSION,
        "seed": seed,
        "ensemble": ensemble,
        "report": report,
    });
    emit(&value, out)?;
    Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_bound(which: &bound::BoundCmd) -> CmdResult {
    let (inputs, result) = bound::evaluate(which).map_err(Failure::Usage)?;
    match result {
        Ok(b) => {
            let (value, violated) = bound::report(which, inputs, &b);
            emit(&value, None)?;
            Ok(if violated { EXIT_FAIL } else { EXIT_PASS })
        }
        Err(e @ (Error::Budget(_) | Error::DimensionCap { .. })) => Err(Failure::Lib(e)),
        Err(e) => {
            emit(&json!({"name": bound::name(which), "inputs": inputs, "error": e.to_string()}), None)?;
            Ok(EXIT_FAIL)
        }
    }
}

fn cmd_experiment(
    seed: Option<u64>,
    workers: Option<usize>,
    config: &Path,
    out: Option<&Path>,
    samples: Option<usize>,
) -> CmdResult {
    let text = fs::read_to_string(config).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
    let mut raw: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config: {e}")))?;
    let obj = raw.as_object_mut().ok_or_else(|| Failure::Usage("config must be a JSON object".into()))?;
    if let Some(s) = seed {
        obj.insert("seed".into(), json!(s));
    } else if !obj.contains_key("seed") {
        obj.insert("seed".into(), json!(rand::random::<u64>()));
    }
    if let Some(n) = samples {
        obj.insert("samples".into(), json!(n));
    }
    let cfg = ExperimentConfig::from_json(&raw.to_string()).map_err(|e| Failure::Usage(format!("config: {e}")))?;
    eprintln!("seed: {}", cfg.seed);
    let result = run_experiment(&cfg, workers)?;
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    let (csv, json_path) = result.write(&dir)?;
    emit(
        &json!({
            "tool_version": TOOL_VERSION,
            "kind": cfg.kind,
            "seed": cfg.seed,
            "config_hash": result.config_hash,
            "pass": result.pass(),
            "summary": result.summary,
            "warnings": result.curve.warnings,
            "csv": csv,
            "json": json_path,
        }),
        None,
    )?;
    Ok(if result.pass() { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_ensemble(op: &EnsembleOp) -> CmdResult {
    match op {
        EnsembleOp::Save { ensemble, out } => {
            let e = resolve_ensemble(ensemble)?;
            if e.as_explicit().is_none() {
                return Err(Failure::Usage(format!("`{ensemble}` is a generator ensemble; use `sample` instead")));
            }
            e.save(out)?;
            emit(&json!({"saved": out, "summary": describe(&e)?}), None)?;
        }
        EnsembleOp::Load { path } => {
            let e = UnitaryEnsemble::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            emit(&describe(&e)?, None)?;
        }
        EnsembleOp::Describe { ensemble } => emit(&describe(&resolve_ensemble(ensemble)?)?, None)?,
    }
    Ok(EXIT_PASS)
}

fn cmd_sample(seed: Option<u64>, ensemble: &str, count: usize, states: bool, out: Option<&Path>) -> CmdResult {
    if count == 0 {
        return Err(Failure::Usage("--count must be positive".into()));
    }
    let nu = resolve_ensemble(ensemble)?;
    let seed = resolve_seed(seed);
    let mut rng = RngStream::new(seed, 0).rng();
    let draws: Vec<ComplexMatrix> = (0..count).map(|_| nu.sample(&mut rng)).collect();
    let mut value = if states {
        let vecs: Vec<Vec<[f64; 2]>> =
            draws.iter().map(|u| u.column(0).into_iter().map(|z| [z.re, z.im]).collect()).collect();
        json!({"d": nu.dim(), "states": vecs})
    } else {
        let file = EnsembleFile::from_ensemble(&ExplicitEnsemble::uniform(draws, nu.provenance())?);
        serde_json::to_value(file).map_err(Error::from)?
    };
    value["seed"] = json!(seed);
    value["tool_version"] = json!(TOOL_VERSION);
    emit(&value, out)?;
    Ok(EXIT_PASS)
}

fn run(cli: Cli) -> CmdResult {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::Usage("--workers must be positive".into()));
        }
        // ignore the error if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match &cli.cmd {
        Cmd::Certify { ensemble, k, eps, random_monomials, mc_samples, out } => {
            cmd_certify(cli.seed, ensemble, *k, *eps, *random_monomials, *mc_samples, out.as_deref())
        }
        Cmd::Bound { which } => cmd_bound(which),
        Cmd::Experiment { config, out, samples } => {
            cmd_experiment(cli.seed, cli.workers, config, out.as_deref(), *samples)
        }
        Cmd::Ensemble { op } => cmd_ensemble(op),
        Cmd::Sample { ensemble, count, states, out } => cmd_sample(cli.seed, ensemble, *count, *states, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS });
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e @ (Error::Budget(_) | Error::DimensionCap { .. }))) => {
            eprintln!("error: {e}");
            EXIT_BUDGET
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    };
    ExitCode::from(code)
}
