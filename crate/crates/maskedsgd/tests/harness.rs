use maskedsgd::experiment::{run_experiment, ExperimentSpec};
use maskedsgd::repro::{FIGURE_M, FIGURE_N};
use maskedsgd::table::{parse_csv, render_csv, CsvTable};
use maskedsgd_core::{generate_problem, MaskMode, ObservationRates, ProblemSpec, StepSchedule};
use proptest::prelude::*;

#[test]
fn full_observation_error_decreases_after_warmup() {
    let spec = ExperimentSpec::new(
        ProblemSpec {
            m: FIGURE_M,
            n: FIGURE_N,
            consistent: true,
            seed: 1,
        },
        ObservationRates::full(),
        2,
        FIGURE_N,
        StepSchedule::Constant(1e-4),
        200_000,
    );
    let r = run_experiment(&spec).unwrap();
    let start = r.iterations.iter().position(|&k| k >= 1_000).unwrap();
    for c in start + 1..r.iterations.len() {
        assert!(
            r.mean_relative_error[c] < r.mean_relative_error[c - 1],
            "not decreasing at k = {}",
            r.iterations[c]
        );
    }
}

#[test]
fn results_round_trip_through_csv() {
    let mut spec = ExperimentSpec::new(
        ProblemSpec {
            m: 30,
            n: 5,
            consistent: false,
            seed: 9,
        },
        ObservationRates::new(0.8, 0.9).unwrap(),
        3,
        2,
        StepSchedule::Constant(1e-3),
        1_234,
    );
    spec.mask_mode = MaskMode::FreshPerIteration;
    spec.trials = 3;
    let r = run_experiment(&spec).unwrap();
    let table = CsvTable::from(&r);
    let back = parse_csv(&render_csv(&table)).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(back.iterations, r.iterations);
    assert_eq!(bits(&back.mean), bits(&r.mean_relative_error));
    for (a, b) in back.trials.iter().zip(&r.per_trial_errors) {
        assert_eq!(bits(a), bits(b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inconsistent_residual_is_m_minus_n(n in 1usize..12, extra in 1usize..30, seed in any::<u64>()) {
        let m = n + extra;
        let p = generate_problem(&ProblemSpec { m, n, consistent: false, seed }).unwrap();
        let r2 = p.a.matvec(&p.x_star).unwrap().sub(&p.b).unwrap().norm_sq();
        prop_assert!((r2 - extra as f64).abs() <= 1e-6 * extra as f64, "{} vs {}", r2, extra);
    }

    #[test]
    fn reference_ignores_masks(p in 0.3f64..1.0, seed in 0u64..1000) {
        // x* comes from the fully observed data whatever the rates
        let mut spec = ExperimentSpec::new(
            ProblemSpec { m: 12, n: 3, consistent: true, seed },
            ObservationRates::new(p, p).unwrap(),
            3, 1, StepSchedule::Constant(1e-3), 100,
        );
        spec.trials = 1;
        let r = run_experiment(&spec).unwrap();
        let x_star = generate_problem(&spec.problem).unwrap().x_star;
        prop_assert_eq!(r.reference_norm_sq, x_star.norm_sq());
        prop_assert_eq!(r.mean_relative_error[0], 1.0);
    }
}
