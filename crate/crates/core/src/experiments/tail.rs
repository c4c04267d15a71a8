use serde::{Deserialize, Serialize};

use crate::bounds::Bound;
use crate::{Error, Result};

/// One-sided 95% standard-normal quantile.
pub const WILSON_Z: f64 = 1.644_853_626_951_472_2;

/// Upper end of the one-sided 95% Wilson score interval for `hits` out of `n`.
pub fn wilson_upper(hits: usize, n: usize) -> f64 {
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = WILSON_Z * WILSON_Z;
    let centre = p + z2 / (2.0 * nf);
    let spread = WILSON_Z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre + spread) / (1.0 + z2 / nf)).min(1.0)
}

/// Empirical exceedance `P(X ≥ t)` against an analytic bound on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub n: usize,
    pub threshold: Vec<f64>,
    pub empirical: Vec<f64>,
    pub wilson_upper: Vec<f64>,
    pub bound: Vec<f64>,
    pub log2_bound: Vec<f64>,
    /// Per point: vacuous bound, or Wilson upper within the bound.
    pub pass: Vec<bool>,
    pub warnings: Vec<String>,
}

impl TailCurve {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }

    pub fn to_csv_rows(&self) -> String {
        let mut out = String::from("threshold,empirical,wilson_upper,bound,log2_bound,pass\n");
        for i in 0..self.threshold.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.threshold[i],
                self.empirical[i],
                self.wilson_upper[i],
                self.bound[i],
                self.log2_bound[i],
                self.pass[i]
            ));
        }
        out
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("threshold grid is empty".into()));
    }
    if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("threshold grid must be finite and sorted".into()));
    }
    Ok(())
}

/// Compares exceedance frequencies of `samples` with `bound(t)` on `grid`.
pub fn tail_compare(samples: &[f64], grid: &[f64], bound: impl Fn(f64) -> Result<Bound>) -> Result<TailCurve> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    check_grid(grid)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut curve = TailCurve {
        n,
        threshold: grid.to_vec(),
        empirical: Vec::with_capacity(grid.len()),
        wilson_upper: Vec::with_capacity(grid.len()),
        bound: Vec::with_capacity(grid.len()),
        log2_bound: Vec::with_capacity(grid.len()),
        pass: Vec::with_capacity(grid.len()),
        warnings: Vec::new(),
    };
    for &t in grid {
        let hits = n - sorted.partition_point(|&x| x < t);
        let upper = wilson_upper(hits, n);
        let b = bound(t)?;
        for w in b.warnings {
            if !curve.warnings.contains(&w) {
                curve.warnings.push(w);
            }
        }
        curve.empirical.push(hits as f64 / n as f64);
        curve.wilson_upper.push(upper);
        curve.pass.push(b.value >= 1.0 || upper <= b.value);
        curve.bound.push(b.value);
        curve.log2_bound.push(b.log2);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn wilson_examples() {
        // p̂ = 0: upper = z²/(n + z²)
        let z2 = WILSON_Z * WILSON_Z;
        assert!((wilson_upper(0, 100) - z2 / (100.0 + z2)).abs() < 1e-15);
        assert_eq!(wilson_upper(100, 100), 1.0);
        assert!(wilson_upper(50, 100) > 0.5);
    }

    #[test]
    fn wilson_shrinks_with_more_samples() {
        for p in [0.0, 0.01, 0.3, 0.5] {
            let n = 1000;
            let a = wilson_upper((p * n as f64) as usize, n) - p;
            let b = wilson_upper((p * 4.0 * n as f64) as usize, 4 * n) - p;
            assert!(b < a, "p = {p}");
        }
    }

    #[test]
    fn constant_samples_below_grid() {
        let c = tail_compare(&[0.1; 500], &[0.5, 1.0], |_| Ok(Bound::from_ln(-5.0))).unwrap();
        assert_eq!(c.empirical, vec![0.0, 0.0]);
        assert!(c.all_pass());
    }

    #[test]
    fn vacuous_bound_passes() {
        let mut rng = RngStream::new(1, 0).rng();
        let xs: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let grid: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let c = tail_compare(&xs, &grid, |_| Ok(Bound::from_ln(0.0))).unwrap();
        assert!(c.all_pass());
        assert!(c.empirical.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gaussian_tail_respects_profile() {
        let mut rng = RngStream::new(2, 0).rng();
        let xs: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect();
        let grid: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
        let c = tail_compare(&xs, &grid, |t| Ok(Bound::from_ln(2f64.ln() - t * t / 2.0))).unwrap();
        assert!(c.all_pass(), "{c:?}");
    }

    #[test]
    fn violated_bound_fails() {
        let c = tail_compare(&[1.0; 200], &[0.5], |_| Ok(Bound::from_ln(-1.0))).unwrap();
        assert!(!c.all_pass());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(tail_compare(&[], &[1.0], |_| Ok(Bound::from_ln(0.0))).is_err());
        assert!(tail_compare(&[1.0], &[2.0, 1.0], |_| Ok(Bound::from_ln(0.0))).is_err());
        assert!(tail_compare(&[1.0], &[], |_| Ok(Bound::from_ln(0.0))).is_err());
    }
}
