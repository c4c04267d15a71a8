use std::collections::{HashSet, VecDeque};

use num_complex::Complex64;
use rand::Rng;

use crate::numkit::{pauli, ComplexMatrix};

/// Rescales `m` so that its first non-negligible entry (row-major) is positive
/// real. Two unitaries equal up to global phase map to the same matrix.
pub(crate) fn phase_normalize(m: &ComplexMatrix) -> ComplexMatrix {
    let pivot = m.as_slice().iter().find(|z| z.norm() > 1e-8).copied().unwrap_or(Complex64::new(1.0, 0.0));
    m.scale(pivot.conj() / pivot.norm())
}

pub(crate) fn phase_key(m: &ComplexMatrix) -> Vec<(i64, i64)> {
    phase_normalize(m).as_slice().iter().map(|z| ((z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64)).collect()
}

fn hadamard() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]])
}

fn phase_gate() -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(2);
    m[(1, 1)] = Complex64::new(0.0, 1.0);
    m
}

fn cnot() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
}

/// The `n`-qubit Clifford group modulo global phase, by breadth-first closure
/// of `{H_i, S_i, CNOT}`. Sizes: 24 for one qubit, 11520 for two.
pub fn clifford_group(n: usize) -> Vec<ComplexMatrix> {
    let (h, s) = (hadamard(), phase_gate());
    let gens: Vec<ComplexMatrix> = match n {
        1 => vec![h, s],
        2 => {
            let i = pauli::i();
            vec![h.kron(&i).unwrap(), i.kron(&h).unwrap(), s.kron(&i).unwrap(), i.kron(&s).unwrap(), cnot()]
        }
        _ => panic!("Clifford enumeration supports 1 or 2 qubits"),
    };
    let id = ComplexMatrix::identity(1 << n);
    let mut seen = HashSet::from([phase_key(&id)]);
    let mut out = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(u) = queue.pop_front() {
        for g in &gens {
            let v = phase_normalize(&g.matmul(&u).expect("square"));
            if seen.insert(phase_key(&v)) {
                out.push(v.clone());
                queue.push_back(v);
            }
        }
    }
    out
}

/// Symplectic form on `F_2^{2n}` with vectors stored as `(x, z)` bitmasks.
fn symplectic(a: (u64, u64), b: (u64, u64)) -> u32 {
    ((a.0 & b.1) ^ (a.1 & b.0)).count_ones() & 1
}

/// Applies the Hermitian Pauli `i^{|x∧z|} X^x Z^z` to `v`.
fn apply_pauli(x: u64, z: u64, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    let base = Complex64::new(0.0, 1.0).powi((x & z).count_ones() as i32);
    for (b, amp) in v.iter().enumerate() {
        let sign = if (z & b as u64).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        out[b ^ x as usize] += base * sign * amp;
    }
    out
}

/// Uniformly random symplectic basis `(v_i, w_i)`: images of `X_i` and `Z_i`.
///
/// Each vector is drawn uniformly among those compatible with the ones already
/// chosen; the number of choices at every step is independent of the history,
/// so the resulting element of `Sp(2n, F_2)` is uniform.
/// A Pauli as (x bits, z bits), and a symplectic pair of them.
type PauliBits = (u64, u64);
type SymplecticPair = (PauliBits, PauliBits);

fn random_symplectic_basis<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<SymplecticPair> {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut chosen: Vec<SymplecticPair> = Vec::with_capacity(n);
    let orthogonal =
        |c: &[SymplecticPair], u: PauliBits| c.iter().all(|&(v, w)| symplectic(v, u) == 0 && symplectic(w, u) == 0);
    for _ in 0..n {
        let v = loop {
            let cand = (rng.random::<u64>() & mask, rng.random::<u64>() & mask);
            if cand != (0, 0) && orthogonal(&chosen, cand) {
                break cand;
            }
        };
        let w = loop {
            let cand = (rng.random::<u64>() & mask, rng.random::<u64>() & mask);
            if symplectic(v, cand) == 1 && orthogonal(&chosen, cand) {
                break cand;
            }
        };
        chosen.push((v, w));
    }
    chosen
}

/// Uniformly random `n`-qubit Clifford unitary (up to global phase).
///
/// A uniform symplectic basis fixes the Clifford modulo Paulis; the dense
/// matrix sends `|x⟩` to `Π_{i ∈ x} P_i |s⟩` where `|s⟩` is stabilised by the
/// images of the `Z_i`. A uniformly random Pauli applied on the right then
/// randomises the signs.
pub fn random_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let d = 1usize << n;
    let basis = random_symplectic_basis(n, rng);
    // qubit i lives in bit n-1-i; basis[i] is attached to that bit
    let bit_of = |i: usize| n - 1 - i;

    let stabilize = |v: Vec<Complex64>| {
        basis.iter().fold(v, |acc, &(_, (zx, zz))| {
            let q = apply_pauli(zx, zz, &acc);
            acc.iter().zip(&q).map(|(a, b)| (a + b) * 0.5).collect()
        })
    };
    let mut s = Vec::new();
    for b in 0..d {
        let mut e = vec![Complex64::new(0.0, 0.0); d];
        e[b] = Complex64::new(1.0, 0.0);
        let cand = stabilize(e);
        let norm_sq: f64 = cand.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq > 0.5 / d as f64 {
            let norm = norm_sq.sqrt();
            s = cand.into_iter().map(|z| z / norm).collect();
            break;
        }
    }

    let mut u = ComplexMatrix::zeros(d, d);
    for x in 0..d {
        let mut col = s.clone();
        for (i, &((px, pz), _)) in basis.iter().enumerate() {
            if (x >> bit_of(i)) & 1 == 1 {
                col = apply_pauli(px, pz, &col);
            }
        }
        for (r, amp) in col.into_iter().enumerate() {
            u[(r, x)] = amp;
        }
    }

    let mask = (d - 1) as u64;
    let (rx, rz) = (rng.random::<u64>() & mask, rng.random::<u64>() & mask);
    let base = Complex64::new(0.0, 1.0).powi((rx & rz).count_ones() as i32);
    ComplexMatrix::from_fn(d, d, |r, b| {
        let sign = if (rz & b as u64).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        u[(r, b ^ rx as usize)] * base * sign
    })
}
