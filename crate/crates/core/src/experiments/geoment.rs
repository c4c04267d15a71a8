use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numkit::PureState;
use crate::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 50;
pub const DEFAULT_SWEEP_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 10_000;
pub const MAX_QUBITS: usize = 12;
/// Largest product-state grid scanned by [`geom_ent_net_certify`].
pub const NET_BUDGET: u64 = 100_000_000;

type Qubit = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeomEntEstimate {
    /// `−log₂` of the best overlap found; an upper estimate of E_g.
    pub e_g: f64,
    pub overlap: f64,
    /// Local factors of the best product state, qubit 0 first.
    pub witness: Vec<[Complex64; 2]>,
    pub restarts: usize,
    /// Restarts that hit the sweep cap before converging.
    pub unconverged: usize,
}

fn check_qubits(psi: &PureState) -> Result<usize> {
    let d = psi.dim();
    if !d.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("state dimension {d} is not a power of two")));
    }
    let n = d.trailing_zeros() as usize;
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!("need 1 ≤ n ≤ {MAX_QUBITS} qubits, got {n}")));
    }
    Ok(n)
}

/// `(⊗_{i≠j} ⟨a_i|) ⊗ I_j |ψ⟩`, a vector on qubit `j`.
fn partial_inner(amps: &[Complex64], a: &[Qubit], j: usize) -> Qubit {
    let n = a.len();
    let mut v = [ZERO; 2];
    for (x, amp) in amps.iter().enumerate() {
        let mut c = *amp;
        for (i, ai) in a.iter().enumerate() {
            if i != j {
                c *= ai[(x >> (n - 1 - i)) & 1].conj();
            }
        }
        v[(x >> (n - 1 - j)) & 1] += c;
    }
    v
}

fn norm_sqr(v: &Qubit) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

/// Maximises `|⟨a_1 ⊗ ⋯ ⊗ a_n|ψ⟩|²` one factor at a time from `a`.
/// Returns the final overlap and whether the per-sweep change fell below `tol`.
fn ascend(amps: &[Complex64], a: &mut [Qubit], tol: f64) -> (f64, bool) {
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..MAX_SWEEPS {
        let mut ov = 0.0;
        for j in 0..a.len() {
            let v = partial_inner(amps, a, j);
            ov = norm_sqr(&v);
            if ov > 0.0 {
                let s = ov.sqrt();
                a[j] = [v[0] / s, v[1] / s];
            }
        }
        if (ov - prev).abs() < tol {
            return (ov, true);
        }
        prev = ov;
    }
    (prev, false)
}

fn random_qubit<R: Rng + ?Sized>(rng: &mut R) -> Qubit {
    let s = PureState::random(2, rng);
    [s.amplitudes()[0], s.amplitudes()[1]]
}

/// Alternating maximisation of the product-state overlap.
///
/// The first restart starts from the largest-amplitude basis state, the rest
/// from random product states. Fails only if every restart hits the sweep cap.
pub fn geom_ent_estimate<R: Rng + ?Sized>(
    psi: &PureState,
    restarts: usize,
    tol: f64,
    rng: &mut R,
) -> Result<GeomEntEstimate> {
    let n = check_qubits(psi)?;
    if restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    let amps = psi.amplitudes();
    let peak = (0..amps.len()).max_by(|&x, &y| amps[x].norm_sqr().total_cmp(&amps[y].norm_sqr())).unwrap_or(0);

    let mut best: Option<(f64, Vec<Qubit>)> = None;
    let mut unconverged = 0;
    for r in 0..restarts {
        let mut a: Vec<Qubit> = if r == 0 {
            (0..n)
                .map(|i| {
                    let mut q = [ZERO; 2];
                    q[(peak >> (n - 1 - i)) & 1] = Complex64::new(1.0, 0.0);
                    q
                })
                .collect()
        } else {
            (0..n).map(|_| random_qubit(rng)).collect()
        };
        let (ov, converged) = ascend(amps, &mut a, tol);
        if !converged {
            unconverged += 1;
        }
        if best.as_ref().is_none_or(|(b, _)| ov > *b) {
            best = Some((ov, a));
        }
    }
    if unconverged == restarts {
        return Err(Error::SweepNonConvergence(MAX_SWEEPS));
    }
    let (overlap, witness) = best.expect("at least one restart");
    let overlap = overlap.min(1.0);
    Ok(GeomEntEstimate { e_g: -overlap.log2(), overlap, witness, restarts, unconverged })
}

/// Bracket `[lower, upper]` on the supremum product-state overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetInterval {
    pub lower: f64,
    pub upper: f64,
    pub points: u64,
}

impl NetInterval {
    pub fn contains(&self, overlap: f64, tol: f64) -> bool {
        overlap >= self.lower - tol && overlap <= self.upper + tol
    }

    /// The matching E_g bracket `[−log₂ upper, −log₂ lower]`.
    pub fn e_g_range(&self) -> (f64, f64) {
        (-self.upper.log2(), -self.lower.log2())
    }
}

/// Bloch-sphere grid whose covering radius (great-circle angle) is at most
/// `theta_max`: rows at the midpoints of `N_θ` equal bands, each row split so
/// that the arc along it between neighbours is at most `theta_max`.
fn sphere_grid(theta_max: f64) -> Vec<Qubit> {
    let rows = (PI / theta_max).ceil() as usize;
    let h = PI / rows as f64;
    let mut out = Vec::new();
    for i in 0..rows {
        let theta = (i as f64 + 0.5) * h;
        let cols = ((2.0 * PI * theta.sin() / theta_max).ceil() as usize).max(1);
        for j in 0..cols {
            let phi = 2.0 * PI * j as f64 / cols as f64;
            out.push([Complex64::new((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), phi)]);
        }
    }
    out
}

/// Contracts the leading qubit of `v` (length `2^m`) with `⟨a|`.
fn contract_first(v: &[Complex64], a: &Qubit) -> Vec<Complex64> {
    let half = v.len() / 2;
    (0..half).map(|x| a[0].conj() * v[x] + a[1].conj() * v[half + x]).collect()
}

fn best_over_grid(v: &[Complex64], depth: usize, grid: &[Qubit]) -> f64 {
    if depth == 0 {
        return v.iter().map(|z| z.norm_sqr()).sum();
    }
    grid.iter().map(|a| best_over_grid(&contract_first(v, a), depth - 1, grid)).fold(0.0, f64::max)
}

/// Exhaustive product-state net bound for `n ≤ 3` qubits, returning an
/// interval of width at most `gamma`.
///
/// The first `n − 1` qubits range over a sphere grid; the last is optimised
/// exactly (`max_b |⟨α ⊗ b|ψ⟩|² = ‖(⟨α| ⊗ I)ψ‖²`). If every grid factor is
/// within vector distance `r` of the optimum's factor (after a phase), the
/// `(n−1)`-fold products are within `D = (n−1) r`, and the squared norm of
/// the contracted vector drops by at most `2D − D²`. `D` is chosen so that
/// this slack equals `gamma`.
pub fn geom_ent_net_certify(psi: &PureState, gamma: f64) -> Result<NetInterval> {
    let n = check_qubits(psi)?;
    if n > 3 {
        return Err(Error::InvalidArgument(format!("net certification supports n ≤ 3, got {n}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("γ must lie in (0, 1], got {gamma}")));
    }
    if n == 1 {
        return Ok(NetInterval { lower: 1.0, upper: 1.0, points: 1 });
    }
    let depth = n - 1;
    let d_total = 1.0 - (1.0 - gamma).sqrt();
    let r = d_total / depth as f64;
    // min-phase vector distance between qubits at Bloch angle Θ is 2 sin(Θ/4)
    let theta_max = 4.0 * (r / 2.0).asin();
    let grid = sphere_grid(theta_max);
    let points = (grid.len() as u64).checked_pow(depth as u32).unwrap_or(u64::MAX);
    if points > NET_BUDGET {
        return Err(Error::Budget(format!("net of {points} points exceeds {NET_BUDGET}")));
    }
    let amps = psi.amplitudes();
    let lower = grid
        .par_iter()
        .map(|a| best_over_grid(&contract_first(amps, a), depth - 1, &grid))
        .reduce(|| 0.0, f64::max)
        .min(1.0);
    let slack = 2.0 * d_total - d_total * d_total;
    Ok(NetInterval { lower, upper: (lower + slack).min(1.0), points })
}
