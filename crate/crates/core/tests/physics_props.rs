use proptest::prelude::*;
use sta_core::energetics::{
    energy_bound, instantaneous_energy, instantaneous_std, time_averaged_energy, time_averaged_std,
};
use sta_core::trajectories::{make_hybrid, make_polynomial, make_quasi_optimal, ExpansionSpec};
use sta_core::transitionless::{mean_energy, time_avg_std, FrequencyRamp};
use sta_core::verifier::roundtrip_check;

fn spec_strategy() -> impl Strategy<Value = ExpansionSpec> {
    (1.0..1e4f64, 1e-3..1e3f64, 1e-5..1e-1f64)
        .prop_map(|(w0, ratio, tf)| ExpansionSpec::new(w0, w0 / ratio, tf, 0).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn polynomial_meets_boundary_conditions(spec in spec_strategy()) {
        let traj = make_polynomial(&spec);
        let start = traj.eval(0.0).unwrap();
        let end = traj.eval(spec.tf).unwrap();
        prop_assert_eq!(start.b, 1.0);
        prop_assert!(rel(end.b, spec.gamma()) < 1e-12);
        for v in [start.bdot, start.bddot, end.bdot, end.bddot] {
            prop_assert!(v.abs() * spec.tf < 1e-9 * spec.gamma().max(1.0));
        }
    }

    #[test]
    fn compression_is_reversed_expansion(spec in spec_strategy(), s in 0.0..1.0f64) {
        let comp = make_polynomial(&spec.reversed());
        let exp = make_polynomial(&spec);
        let t = s * spec.tf;
        let lhs = comp.eval(t).unwrap().b;
        let rhs = exp.eval(spec.tf - t).unwrap().b / spec.gamma();
        prop_assert!(rel(lhs, rhs) < 1e-10);
    }

    #[test]
    fn energies_scale_with_level(spec in spec_strategy(), n in 1u32..6, s in 0.0..1.0f64) {
        let traj = make_polynomial(&spec);
        let t = s * spec.tf;
        let factor = (2 * n + 1) as f64;
        let excited = spec.with_n(n);
        let traj_n = make_polynomial(&excited);
        let e0 = instantaneous_energy(&spec, &traj, t).unwrap();
        let en = instantaneous_energy(&excited, &traj_n, t).unwrap();
        prop_assert!((en - factor * e0).abs() <= 1e-12 * factor * e0.abs().max(spec.omega0));
        prop_assert!(rel(energy_bound(&excited), factor * energy_bound(&spec)) < 1e-13);
        let ratio = (2.0 * (n * n + n + 1) as f64).sqrt() / 2f64.sqrt();
        let s0 = instantaneous_std(&spec, &traj, t).unwrap();
        let sn = instantaneous_std(&excited, &traj_n, t).unwrap();
        prop_assert!((sn - ratio * s0).abs() <= 1e-12 * ratio * (s0 + spec.omega0));
    }

    #[test]
    fn designs_cost_at_least_the_bound(spec in spec_strategy(), tau in 0.01..0.49f64) {
        let bound = energy_bound(&spec);
        let poly = time_averaged_energy(&spec, &make_polynomial(&spec)).unwrap();
        let hybrid = time_averaged_energy(&spec, &make_hybrid(&spec, tau).unwrap()).unwrap();
        prop_assert!(poly >= bound * (1.0 - 1e-12));
        prop_assert!(hybrid >= bound * (1.0 - 1e-12));
    }

    #[test]
    fn optimal_law_attains_the_bound(spec in spec_strategy()) {
        let q = make_quasi_optimal(&spec).unwrap();
        prop_assert!(rel(time_averaged_energy(&spec, &q).unwrap(), energy_bound(&spec)) < 1e-9);
        prop_assert!(time_averaged_std(&spec, &q).unwrap() >= 0.0);
    }

    #[test]
    fn transitionless_cost_is_logarithmic(w0 in 1.0..1e4f64, ratio in 1.5..1e4f64, tf in 1e-5..1.0f64, n in 0u32..4) {
        let wf = w0 / ratio;
        let ramp = FrequencyRamp::linear(w0, wf, tf).unwrap();
        let level = n as f64 + 0.5;
        prop_assert!(rel(mean_energy(&ramp, n).unwrap(), level * (w0 + wf) / 2.0) < 1e-12);
        let expected = 0.25 * (2.0 * (n * n + n + 1) as f64).sqrt() * ratio.ln();
        prop_assert!(rel(time_avg_std(&ramp, n).unwrap() * tf, expected) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn designed_frequencies_reproduce_the_design(spec in spec_strategy(), tau in 0.05..0.45f64) {
        for traj in [make_polynomial(&spec), make_hybrid(&spec, tau).unwrap()] {
            let r = roundtrip_check(&spec, &traj, 1e-6).unwrap();
            prop_assert!(r.passed, "{:?}", r);
        }
    }
}
