use clap::{Subcommand, ValueEnum};
use designlab::bounds::{
    entropy_tail_design, entropy_tail_design_messy, entropy_tail_haar, geom_ent_tail, levy_bound, markov_entropy_tail,
    markov_purity_tail, net_size, overlap_tail, poly_tail_design, statmech_tail_design, statmech_tail_haar, Bound,
    LipschitzFn, PolynomialSpec, StatmechMode, TailProfile,
};
use designlab::numkit::BipartiteDims;
use designlab::Result;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Simplified,
    Messy,
}

#[derive(Debug, Subcommand)]
pub enum BoundCmd {
    /// Lévy concentration for an η-Lipschitz function on U(d).
    Levy {
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        delta: f64,
    },
    /// Polynomial tail under an ε-approximate k-design.
    Poly {
        /// Tail-profile prefactor C.
        #[arg(long)]
        c: f64,
        /// Tail-profile exponent a.
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Polynomial degree K.
        #[arg(long)]
        degree: usize,
        /// Coefficient mass α.
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta: f64,
        /// Moment order; chosen automatically when omitted.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Entanglement-entropy tail for Haar unitaries.
    EntropyHaar {
        #[arg(long)]
        ds: usize,
        #[arg(long)]
        de: usize,
        #[arg(long)]
        alpha: f64,
    },
    /// Entanglement-entropy tail under a design. With `--n` the large-n form;
    /// otherwise the moment form (needs --mu --m --eps --d --k).
    EntropyDesign {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        ds: Option<usize>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Canonical typicality for Haar states on a constrained subspace.
    StatmechHaar {
        #[arg(long)]
        ds: usize,
        #[arg(long)]
        dr: usize,
        #[arg(long)]
        deff: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Canonical typicality under a design.
    StatmechDesign {
        #[arg(long)]
        ds: usize,
        #[arg(long)]
        dr: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Simplified)]
        mode: Mode,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Overlap tail `|⟨Φ|Ψ⟩|² ≥ δ` for a state design.
    Overlap {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Geometric-entanglement tail for a state k-design on n qubits.
    Geoment {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Size of a product-state γ-net, in bits.
    Netsize {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        n: usize,
    },
    /// Markov tails on entropy (`--alpha`) or purity (`--gamma`).
    Markov {
        #[arg(long, conflicts_with = "gamma", required_unless_present = "gamma")]
        alpha: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
    },
}

fn render(name: &str, inputs: Value, b: &Bound) -> Value {
    json!({
        "name": name,
        "inputs": inputs,
        "bound": b.value,
        "log2_bound": b.log2,
        "raw": b.raw,
        "clamped": b.clamped,
        "warnings": b.warnings,
        "extras": b.extras,
    })
}

fn need<T>(v: Option<T>, flag: &str) -> std::result::Result<T, String> {
    v.ok_or_else(|| format!("missing --{flag}"))
}

/// Evaluates the bound. The outer error is a usage problem; the inner one a
/// rejected evaluation.
pub fn evaluate(cmd: &BoundCmd) -> std::result::Result<(Value, Result<Bound>), String> {
    Ok(match *cmd {
        BoundCmd::Levy { eta, d, delta } => {
            (json!({"eta": eta, "d": d, "delta": delta}), LipschitzFn::new(eta).and_then(|f| levy_bound(f, d, delta)))
        }
        BoundCmd::Poly { c, a, mu, degree, alpha, eps, d, k, delta, m } => (
            json!({"c": c, "a": a, "mu": mu, "degree": degree, "alpha": alpha, "eps": eps, "d": d, "k": k, "delta": delta, "m": m}),
            TailProfile::new(c, a, mu, 0.0).and_then(|t| {
                let p = PolynomialSpec::new(degree, alpha)?;
                poly_tail_design(t, p, eps, d, k, delta, m)
            }),
        ),
        BoundCmd::EntropyHaar { ds, de, alpha } => (
            json!({"ds": ds, "de": de, "alpha": alpha}),
            BipartiteDims::new(ds, de).and_then(|dims| entropy_tail_haar(dims, alpha)),
        ),
        BoundCmd::EntropyDesign { alpha, n: Some(n), ds, .. } => {
            let ds = need(ds, "ds")?;
            (json!({"n": n, "ds": ds, "alpha": alpha}), entropy_tail_design(n, ds, alpha))
        }
        BoundCmd::EntropyDesign { alpha, n: None, mu, m, eps, d, k, .. } => {
            let (mu, m, eps, d, k) = (need(mu, "mu")?, need(m, "m")?, need(eps, "eps")?, need(d, "d")?, need(k, "k")?);
            (
                json!({"alpha": alpha, "mu": mu, "m": m, "eps": eps, "d": d, "k": k}),
                entropy_tail_design_messy(mu, alpha, m, eps, d, k),
            )
        }
        BoundCmd::StatmechHaar { ds, dr, deff, eps } => {
            (json!({"ds": ds, "dr": dr, "deff": deff, "eps": eps}), statmech_tail_haar(ds, dr, deff, eps))
        }
        BoundCmd::StatmechDesign { ds, dr, delta, k, eps, mode, m } => {
            let mode_name = match mode {
                Mode::Simplified => "simplified",
                Mode::Messy => "messy",
            };
            let mode = match mode {
                Mode::Simplified => StatmechMode::Simplified,
                Mode::Messy => StatmechMode::Messy { m },
            };
            (
                json!({"ds": ds, "dr": dr, "delta": delta, "k": k, "eps": eps, "mode": mode_name, "m": m}),
                statmech_tail_design(ds, dr, delta, k, eps, mode),
            )
        }
        BoundCmd::Overlap { d, delta, m, eps } => {
            (json!({"d": d, "delta": delta, "m": m, "eps": eps}), overlap_tail(d, delta, m, eps))
        }
        BoundCmd::Geoment { n, k, delta, eps } => {
            (json!({"n": n, "k": k, "delta": delta, "eps": eps}), geom_ent_tail(n, k, delta, eps))
        }
        BoundCmd::Netsize { gamma, n } => {
            // not a probability: report the size itself, unclamped
            let b = net_size(gamma, n).map(|s| {
                let mut b = Bound::from_ln(s.bits * std::f64::consts::LN_2);
                b.value = b.raw;
                b.clamped = false;
                b.warnings = s.warnings;
                b
            });
            (json!({"gamma": gamma, "n": n}), b)
        }
        BoundCmd::Markov { alpha: Some(alpha), .. } => (json!({"alpha": alpha}), markov_entropy_tail(alpha)),
        BoundCmd::Markov { gamma, .. } => {
            let gamma = need(gamma, "gamma")?;
            (json!({"gamma": gamma}), markov_purity_tail(gamma))
        }
    })
}

pub fn name(cmd: &BoundCmd) -> &'static str {
    match cmd {
        BoundCmd::Levy { .. } => "levy",
        BoundCmd::Poly { .. } => "poly",
        BoundCmd::EntropyHaar { .. } => "entropy-haar",
        BoundCmd::EntropyDesign { .. } => "entropy-design",
        BoundCmd::StatmechHaar { .. } => "statmech-haar",
        BoundCmd::StatmechDesign { .. } => "statmech-design",
        BoundCmd::Overlap { .. } => "overlap",
        BoundCmd::Geoment { .. } => "geoment",
        BoundCmd::Netsize { .. } => "netsize",
        BoundCmd::Markov { .. } => "markov",
    }
}

/// JSON for a successful evaluation; the flag is true when preconditions
/// were violated.
pub fn report(cmd: &BoundCmd, inputs: Value, b: &Bound) -> (Value, bool) {
    (render(name(cmd), inputs, b), !b.warnings.is_empty())
}
