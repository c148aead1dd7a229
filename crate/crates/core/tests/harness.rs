mod common;

use evflex::aggregate::AggregateFlexSet;
use evflex::ambiguity::{project_to_n_points, robust_set, DiscreteDistribution, RobustOptions};
use evflex::harness::{
    run_trials_with, sample_population, trial_decisions, trial_rng, ExecutionMode, TrialConfig,
};
use evflex::model::{TimeGrid, DEFAULT_TOLERANCE};

fn distribution() -> DiscreteDistribution {
    DiscreteDistribution::new(
        vec![(0.0, 2.0), (1.0, 5.0), (3.0, 6.5), (4.5, 8.0)],
        vec![0.1, 0.2, 0.3, 0.4],
        8.0,
    )
    .unwrap()
}

fn config(trials: u64) -> TrialConfig {
    let p = distribution();
    let eps0 = project_to_n_points(&p, 6).unwrap().cost;
    TrialConfig {
        distribution: p,
        n: 6,
        epsilons: (0..6).map(|k| eps0 + 0.25 * k as f64).collect(),
        trials,
        seed: 99,
        steps: 8,
        power: 1.0,
        normalize: false,
        tolerance: DEFAULT_TOLERANCE,
    }
}

#[test]
fn sampled_frequencies_match_weights() {
    let p = distribution();
    let grid = TimeGrid::new(8).unwrap();
    let draws = 100_000;
    let pop = sample_population(&p, draws, grid, 1.0, &mut trial_rng(5, 0, 0)).unwrap();
    let intervals = pop.intervals();
    for (atom, &w) in p.atoms().iter().zip(p.weights()) {
        let count = intervals.iter().filter(|iv| *iv == atom).count() as f64;
        let sigma = (draws as f64 * w * (1.0 - w)).sqrt();
        assert!(
            (count - draws as f64 * w).abs() <= 3.0 * sigma,
            "{atom:?}: {count}"
        );
    }
}

#[test]
fn violation_rate_falls_with_radius() {
    let report = run_trials_with(&config(2000), ExecutionMode::Parallel).unwrap();
    let eps: Vec<f64> = report.rows.iter().map(|r| r.epsilon).collect();
    let beta: Vec<f64> = report.rows.iter().map(|r| r.beta_hat).collect();
    let (rho, p) = common::spearman_lower_tail(&eps, &beta);
    assert!(
        rho <= 0.0 && p < 0.05,
        "rho = {rho}, p = {p}, beta = {beta:?}"
    );
    for r in &report.rows {
        assert!(r.ci_lo <= r.beta_hat && r.beta_hat <= r.ci_hi);
    }
}

#[test]
fn repeated_runs_are_identical() {
    let cfg = config(300);
    let a = run_trials_with(&cfg, ExecutionMode::Parallel).unwrap();
    let b = run_trials_with(&cfg, ExecutionMode::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn per_trial_decisions_ignore_schedule() {
    let cfg = config(400);
    let grid = TimeGrid::new(cfg.steps).unwrap();
    let set: AggregateFlexSet = robust_set(
        &cfg.distribution,
        cfg.n,
        cfg.epsilons[2],
        grid,
        cfg.power,
        RobustOptions::default(),
    )
    .unwrap()
    .flex;
    let seq = trial_decisions(&cfg, &set, 2, ExecutionMode::Sequential).unwrap();
    let par = trial_decisions(&cfg, &set, 2, ExecutionMode::Parallel).unwrap();
    assert_eq!(seq, par);
    assert!(seq.iter().any(|&v| v) && seq.iter().any(|&v| !v));
}
