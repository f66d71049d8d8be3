mod common;

use common::{random_model, value_interval};
use hsvi::io::RockSampleParams;
use hsvi::solver::{t_max, u_max};
use hsvi::{
    gen_rocksample, solve, solve_anytime, solve_with_observer, Execution, ObservationHeuristic,
    SolverConfig, Termination,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn small_models_bracket_the_exact_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..8 {
        let ns = rng.gen_range(1..=4);
        let (na, no) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let model = random_model(&mut rng, ns, na, no, 0.9);
        let result = solve(&model, &SolverConfig::with_epsilon(0.01)).unwrap();
        assert_eq!(result.terminated_by, Termination::EpsilonReached);
        assert!(result.final_width <= 0.01);

        let (lo, hi) = value_interval(&model, 1e-3, 1e-4);
        assert!(lo <= hi);
        assert!(
            result.lower_b0 - 0.011 <= lo && hi <= result.upper_b0 + 0.011,
            "[{lo}, {hi}] against [{}, {}]",
            result.lower_b0,
            result.upper_b0
        );
    }
}

#[test]
fn search_respects_depth_and_update_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10 {
        let model = random_model(&mut rng, 3, 2, 2, 0.9);
        let r = solve(&model, &SolverConfig::with_epsilon(0.01)).unwrap();
        assert_eq!(r.t_max, t_max(0.9, 0.01, r.initial_gap));
        assert!(r.max_depth <= r.t_max);
        assert!((r.updates as f64) <= u_max(r.t_max, 2, 2));
    }
}

#[test]
fn audited_anytime_run_has_no_violations() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let model = random_model(&mut rng, 4, 3, 3, 0.9);
    let config = SolverConfig {
        epsilon: 1e-4,
        audit_beliefs: 31,
        max_trials: Some(200),
        ..Default::default()
    };
    let r = solve_anytime(&model, &config).unwrap();
    let audit = r.audit.unwrap();
    assert_eq!(audit.beliefs, 32);
    assert_eq!(audit.violations(), 0, "{audit:?}");
    for w in r.trace.rows.windows(2) {
        assert!(w[1].width <= w[0].width);
        assert!(w[1].wall_time_s >= w[0].wall_time_s);
        assert!(w[1].lower_b0 >= w[0].lower_b0 && w[1].upper_b0 <= w[0].upper_b0);
    }
}

#[test]
fn observer_sees_every_trial() {
    let model = gen_rocksample(&RockSampleParams::new(3, 2).unwrap()).unwrap();
    let mut seen = Vec::new();
    let mut observer = |row: &hsvi::TraceRow, bounds: &hsvi::BoundsPair| {
        assert_eq!(row.num_vectors, bounds.lower.len());
        seen.push(row.trial);
    };
    let config = SolverConfig {
        max_trials: Some(5),
        epsilon: 1e-6,
        ..Default::default()
    };
    let r = solve_with_observer(&model, &config, true, &mut observer).unwrap();
    assert_eq!(seen, (0..r.trace.rows.len()).collect::<Vec<_>>());
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let model = gen_rocksample(&RockSampleParams::new(4, 2).unwrap()).unwrap();
    let run = |execution| {
        let config = SolverConfig {
            epsilon: 0.1,
            execution,
            ..Default::default()
        };
        solve(&model, &config).unwrap()
    };
    let seq = run(Execution::Sequential);
    let par = run(Execution::Parallel);
    assert_eq!(seq.lower_b0, par.lower_b0);
    assert_eq!(seq.upper_b0, par.upper_b0);
    assert_eq!(seq.updates, par.updates);
}

#[test]
fn trial_cap_and_timeout_stop_the_search() {
    let model = gen_rocksample(&RockSampleParams::new(4, 4).unwrap()).unwrap();
    let config = SolverConfig {
        max_trials: Some(3),
        epsilon: 1e-9,
        ..Default::default()
    };
    let r = solve(&model, &config).unwrap();
    assert_eq!(r.terminated_by, Termination::TrialCap);
    assert_eq!(r.trace.rows.len(), 4);

    let config = SolverConfig {
        timeout: Some(std::time::Duration::ZERO),
        ..Default::default()
    };
    let r = solve(&model, &config).unwrap();
    assert_eq!(r.terminated_by, Termination::Timeout);
    assert!(r.lower_b0 <= r.upper_b0);
}

#[test]
fn sampled_observations_still_converge() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let model = random_model(&mut rng, 3, 2, 2, 0.9);
    let config = SolverConfig {
        epsilon: 0.01,
        observation_heuristic: ObservationHeuristic::Sampled { seed: 5 },
        ..Default::default()
    };
    let r = solve(&model, &config).unwrap();
    assert!(r.final_width <= 0.01);
}

/// Needs the standard Tiger-Grid model file:
/// `HSVI_TIGER_GRID=path/to/tiger-grid.pomdp cargo test --release -- --ignored tiger_grid`
#[test]
#[ignore]
fn tiger_grid_reaches_reference_reward() {
    let Ok(path) = std::env::var("HSVI_TIGER_GRID") else {
        eprintln!("HSVI_TIGER_GRID not set, skipping");
        return;
    };
    let model = hsvi::load_pomdp(path).unwrap();
    let config = SolverConfig {
        epsilon: 0.0,
        timeout: Some(std::time::Duration::from_secs(900)),
        ..Default::default()
    };
    let r = solve_anytime(&model, &config).unwrap();
    let e = hsvi::evaluate(&model, &r.bounds.lower, &hsvi::EvalConfig::default());
    assert!(e.mean >= 2.25, "mean {} +/- {}", e.mean, e.ci_half_width);
}
