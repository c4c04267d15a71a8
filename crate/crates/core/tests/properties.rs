use designlab::bounds::Bound;
use designlab::certify::{certify_unitary_design, monomial_deviation, tpe_lambda, DesignSpec, McOptions, Strategy};
use designlab::ensembles::{iterate_ensemble, ExplicitEnsemble, Provenance, UnitaryEnsemble};
use designlab::experiments::{
    geom_ent_estimate, tail_compare, wilson_upper, ExperimentConfig, ExperimentKind, DEFAULT_SWEEP_TOL,
};
use designlab::haar::{expected_purity, haar_twirl_k2_pure, sample_haar, MonomialSpec};
use designlab::numkit::{BipartiteDims, ComplexMatrix, PureState};
use designlab::RngStream;
use proptest::prelude::*;

fn mc() -> McOptions {
    McOptions::new(1000, RngStream::new(5, 0))
}

fn haar_ensemble(d: usize, size: usize, seed: u64) -> UnitaryEnsemble {
    let mut rng = RngStream::new(seed, 0).rng();
    let us = (0..size).map(|_| sample_haar(d, &mut rng)).collect();
    UnitaryEnsemble::Explicit(ExplicitEnsemble::uniform(us, Provenance::Custom).unwrap())
}

fn swap4() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn haar_samples_are_unitary(seed in any::<u64>(), d in 1usize..=64) {
        let u = sample_haar(d, &mut RngStream::new(seed, 0).rng());
        prop_assert!(u.unitarity_residual() < 1e-10);
    }

    #[test]
    fn expected_purity_range_and_symmetry(ds in 1usize..40, de in 1usize..40) {
        let p = expected_purity(BipartiteDims::new(ds, de).unwrap());
        let q = expected_purity(BipartiteDims::new(de, ds).unwrap());
        prop_assert!(p > 1.0 / ds as f64 - 1e-15 && p <= 1.0 + 1e-15);
        prop_assert!((p - q).abs() < 1e-15);
    }

    #[test]
    fn pure_twirl_forgets_its_input(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = RngStream::new(seed, 0).rng();
        let outs: Vec<_> = (0..5)
            .map(|_| haar_twirl_k2_pure(&PureState::random(d, &mut rng).density()).unwrap())
            .collect();
        for o in &outs[1..] {
            prop_assert!(o.max_abs_diff(&outs[0]) < 1e-12);
        }
    }

    #[test]
    fn passing_k_implies_passing_lower_degree(seed in any::<u64>(), size in 2usize..12, eps in 0.05f64..3.0) {
        let nu = haar_ensemble(2, size, seed);
        let hi = certify_unitary_design(&nu, DesignSpec::new(2, 2, eps).unwrap(), Strategy::Exhaustive, &mc()).unwrap();
        let lo = certify_unitary_design(&nu, DesignSpec::new(2, 1, eps).unwrap(), Strategy::Exhaustive, &mc()).unwrap();
        prop_assert!(hi.max_deviation >= 0.0 && lo.max_deviation >= 0.0);
        prop_assert!(lo.max_deviation <= hi.max_deviation + 1e-12);
        if hi.pass {
            prop_assert!(lo.pass);
        }
    }

    #[test]
    fn single_monomials_stay_under_the_scan_max(seed in any::<u64>(), p in 0usize..2, q in 0usize..2, r in 0usize..2, s in 0usize..2) {
        let nu = haar_ensemble(2, 4, seed);
        let report = certify_unitary_design(&nu, DesignSpec::new(2, 2, 0.1).unwrap(), Strategy::Exhaustive, &mc()).unwrap();
        let dev = monomial_deviation(&nu, &MonomialSpec::balanced(&[p], &[q], &[r], &[s]), &mc()).unwrap();
        prop_assert!(dev.value <= report.max_deviation + 1e-12);
    }

    #[test]
    fn exhaustive_scan_is_relabeling_symmetric(seed in any::<u64>()) {
        let nu = haar_ensemble(4, 3, seed);
        let swap = swap4();
        let relabeled: Vec<_> = nu.as_explicit().unwrap().unitaries().iter().map(|u| swap.conjugate(u).unwrap()).collect();
        let nu2 = UnitaryEnsemble::Explicit(ExplicitEnsemble::uniform(relabeled, Provenance::Custom).unwrap());
        let spec = DesignSpec::new(4, 1, 0.1).unwrap();
        let a = certify_unitary_design(&nu, spec, Strategy::Exhaustive, &mc()).unwrap();
        let b = certify_unitary_design(&nu2, spec, Strategy::Exhaustive, &mc()).unwrap();
        prop_assert!((a.max_deviation - b.max_deviation).abs() < 1e-12);
    }

    #[test]
    fn iterated_lambda_is_submultiplicative(seed in any::<u64>(), size in 3usize..6, t in 1usize..5) {
        let nu = haar_ensemble(2, size, seed);
        let l = tpe_lambda(&nu, 1).unwrap();
        let lt = tpe_lambda(&iterate_ensemble(&nu, t).unwrap(), 1).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&l));
        prop_assert!(lt <= l.powi(t as i32) + 1e-6, "{lt} vs {l}^{t}");
    }

    #[test]
    fn iterated_sampling_is_reproducible(seed in any::<u64>(), t in 2usize..6) {
        let nu = iterate_ensemble(&haar_ensemble(2, 3, 1), t).unwrap();
        let a = nu.sample(&mut RngStream::new(seed, 2).rng());
        let b = nu.sample(&mut RngStream::new(seed, 2).rng());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn exceedance_is_monotone_and_wilson_shrinks(seed in any::<u64>(), n in 100usize..2000) {
        use rand::Rng;
        let mut rng = RngStream::new(seed, 0).rng();
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let grid: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let curve = tail_compare(&xs, &grid, |_| Ok(Bound::from_ln(0.0))).unwrap();
        prop_assert!(curve.empirical.windows(2).all(|w| w[1] <= w[0]));
        let hits = n / 3;
        prop_assert!(wilson_upper(4 * hits, 4 * n) < wilson_upper(hits, n));
    }

    #[test]
    fn geometric_entanglement_ignores_local_unitaries(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0).rng();
        let psi = PureState::random(8, &mut rng);
        let local = sample_haar(2, &mut rng)
            .kron(&sample_haar(2, &mut rng)).unwrap()
            .kron(&sample_haar(2, &mut rng)).unwrap();
        let phi = PureState::new(local.apply(psi.amplitudes()).unwrap()).unwrap();
        let a = geom_ent_estimate(&psi, 20, DEFAULT_SWEEP_TOL, &mut RngStream::new(1, 0).rng()).unwrap();
        let b = geom_ent_estimate(&phi, 20, DEFAULT_SWEEP_TOL, &mut RngStream::new(1, 0).rng()).unwrap();
        prop_assert!((a.e_g - b.e_g).abs() < 1e-8, "{} vs {}", a.e_g, b.e_g);
    }

    #[test]
    fn config_json_round_trips(seed in any::<u64>(), samples in 100usize..100_000, g in 0.01f64..5.0) {
        let cfg = ExperimentConfig::new(ExperimentKind::Tailcurve, samples, vec![g, 2.0 * g], seed);
        let json = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&json).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
