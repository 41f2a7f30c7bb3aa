use proptest::prelude::*;

use recosim::agents::{AgentSettings, RandomAgent};
use recosim::eval::{
    evaluate_online, evaluate_tally, generate_log, generate_log_with_bandit_events, rollout_user,
    sweep_bandit_events, wilson_interval, EvalError, EvalOptions, Policy, SweepSettings, Tally,
};
use recosim::rng::{derive_seed, EVAL_SALT, TRAIN_SALT};
use recosim::{Agent, Environment, Event, SimConfig};

/// Wilson bounds as the roots of `(p̂ - p)² = z² p (1 - p) / n`.
fn wilson_roots(k: f64, n: f64, z: f64) -> (f64, f64) {
    let ph = k / n;
    let a = 1.0 + z * z / n;
    let b = -(2.0 * ph + z * z / n);
    let c = ph * ph;
    let disc = (b * b - 4.0 * a * c).sqrt();
    ((-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a))
}

#[test]
fn wilson_matches_quadratic_roots() {
    let (lo, hi) = wilson_interval(5, 100, 1.96).unwrap();
    let (elo, ehi) = wilson_roots(5.0, 100.0, 1.96);
    assert!((lo - elo).abs() < 1e-9 && (hi - ehi).abs() < 1e-9, "({lo}, {hi}) vs ({elo}, {ehi})");
    // Center-and-half-width form evaluated separately in double precision.
    assert!((lo - 0.02154336145631356).abs() < 1e-12 && (hi - 0.11175196527208817).abs() < 1e-12);
    for (k, n) in [(1, 3), (17, 40), (999, 1000), (3, 1_000_000)] {
        let (lo, hi) = wilson_interval(k, n, 2.5).unwrap();
        let (elo, ehi) = wilson_roots(k as f64, n as f64, 2.5);
        assert!((lo - elo).abs() < 1e-9 && (hi - ehi).abs() < 1e-9);
        let p = k as f64 / n as f64;
        assert!(lo <= p && p <= hi);
    }
}

#[test]
fn wilson_boundaries() {
    let (lo, hi) = wilson_interval(0, 50, 1.96).unwrap();
    assert_eq!(lo, 0.0);
    assert!((hi - wilson_roots(0.0, 50.0, 1.96).1).abs() < 1e-12);
    let (lo, hi) = wilson_interval(50, 50, 1.96).unwrap();
    assert!(lo > 0.0);
    assert!((hi - wilson_roots(50.0, 50.0, 1.96).1).abs() < 1e-12);
    assert!((lo - wilson_roots(50.0, 50.0, 1.96).0).abs() < 1e-12);
    assert_eq!(wilson_interval(0, 0, 1.96), Err(EvalError::ZeroDisplays));
}

#[test]
fn oracle_policy_has_zero_regret_without_noise_or_fatigue() {
    let cfg = SimConfig { sigma_phi: 0.0, fatigue_strength: 0.0, ..SimConfig::default() };
    let opts = EvalOptions { oracle: true, ..EvalOptions::default() };
    let report = evaluate_online(&cfg, Policy::Oracle, 300, 1, &opts).unwrap();
    assert_eq!(report.mean_regret, Some(0.0));

    let random = RandomAgent::new(10, 2);
    let report = evaluate_online(&cfg, Policy::Agent(&random), 300, 1, &opts).unwrap();
    assert!(report.mean_regret.unwrap() > 0.0);
}

#[test]
fn regret_is_non_negative_with_fatigue() {
    let cfg = SimConfig { fatigue_strength: 0.5, sigma_phi: 2.0, ..SimConfig::default() };
    let opts = EvalOptions { oracle: true, ..EvalOptions::default() };
    for policy in [Policy::Oracle, Policy::Agent(&RandomAgent::new(10, 0))] {
        let report = evaluate_online(&cfg, policy, 200, 3, &opts).unwrap();
        assert!(report.mean_regret.unwrap() >= 0.0);
    }
    let report = evaluate_online(&cfg, Policy::Oracle, 200, 3, &opts).unwrap();
    assert_eq!(report.mean_regret, Some(0.0), "the oracle tracks fatigue per step");
}

#[test]
fn random_agent_ctr_matches_enumerated_click_probabilities() {
    let cfg = SimConfig::default();
    let seed = 21;
    let n_users = 2000;
    let agent = RandomAgent::new(10, 4);
    let report = evaluate_online(&cfg, Policy::Agent(&agent), n_users, seed, &EvalOptions::default()).unwrap();

    // Each display clicks with the user's mean click probability over actions,
    // whatever happened before, so weight that mean by realized displays.
    let mut env = Environment::new(cfg).unwrap().with_population(derive_seed(seed, EVAL_SALT)).with_oracle(true);
    let (mut weighted, mut displays) = (0.0, 0u64);
    for u in 0..n_users {
        env.reset_user(u);
        let oracle = env.oracle().unwrap();
        let mean: f64 = (0..10).map(|a| oracle.click_probability(a).unwrap()).sum::<f64>() / 10.0;
        let outcome = rollout_user(&mut env, Policy::Agent(&agent), u, false).unwrap();
        weighted += mean * outcome.tally.displays as f64;
        displays += outcome.tally.displays;
    }
    assert_eq!(displays, report.displays);
    let expected = weighted / displays as f64;
    assert!(report.ci_low <= expected && expected <= report.ci_high, "{expected} outside {report:?}");
}

#[test]
fn evaluation_is_deterministic_and_thread_independent() {
    let cfg = SimConfig { sigma_phi: 1.5, fatigue_strength: 0.1, ..SimConfig::default() };
    let log = generate_log(&cfg, 400, &RandomAgent::new(10, 1), 5, 1).unwrap();
    let mut agent = AgentSettings::default().build("combined", 10).unwrap();
    agent.train(&log).unwrap();
    let base = EvalOptions { oracle: true, ..EvalOptions::default() };
    let one = evaluate_online(&cfg, Policy::Agent(&agent), 501, 9, &base).unwrap();
    assert_eq!(one, evaluate_online(&cfg, Policy::Agent(&agent), 501, 9, &base).unwrap());
    for threads in [2, 3, 4, 7] {
        let opts = EvalOptions { threads, ..base.clone() };
        assert_eq!(one, evaluate_online(&cfg, Policy::Agent(&agent), 501, 9, &opts).unwrap(), "threads {threads}");
    }
    for threads in [2, 4] {
        assert_eq!(log, generate_log(&cfg, 400, &RandomAgent::new(10, 1), 5, threads).unwrap());
    }
}

#[test]
fn stochastic_policies_are_thread_independent() {
    let cfg = SimConfig::default();
    let agent = RandomAgent::new(10, 77);
    let tally = |threads| {
        evaluate_tally(&cfg, Policy::Agent(&agent), 300, 2, &EvalOptions { threads, ..EvalOptions::default() })
            .unwrap()
    };
    assert_eq!(tally(1), tally(4));
}

#[test]
fn shared_users_have_identical_trajectories() {
    let cfg = SimConfig::default();
    let agent = RandomAgent::new(10, 8);
    let short = generate_log(&cfg, 40, &agent, 3, 1).unwrap();
    let long = generate_log(&cfg, 90, &agent, 3, 2).unwrap();
    assert_eq!(short.events(), &long.events()[..short.len()]);
    assert!(long.users().count() == 90);
}

#[test]
fn training_and_evaluation_populations_differ() {
    assert_ne!(derive_seed(5, TRAIN_SALT), derive_seed(5, EVAL_SALT));
    let cfg = SimConfig::default();
    let agent = RandomAgent::new(10, 0);
    let train = generate_log(&cfg, 1, &agent, 5, 1).unwrap();
    let mut env = Environment::new(cfg).unwrap().with_population(derive_seed(5, EVAL_SALT));
    let eval = rollout_user(&mut env, Policy::Agent(&agent), 0, false).unwrap().events;
    assert_ne!(train.events(), eval.as_slice());
}

#[test]
fn forced_stop_yields_organic_only_log() {
    let cfg = SimConfig {
        p_organic_to_organic: 0.0,
        p_organic_to_bandit: 0.0,
        p_organic_to_stop: 1.0,
        ..SimConfig::default()
    };
    let log = generate_log(&cfg, 1, &RandomAgent::new(10, 0), 0, 1).unwrap();
    assert_eq!(log.len(), 1);
    assert!(log.iter().all(Event::is_organic));
    assert_eq!(log.events()[0].user, 0);
    let empty = evaluate_online(&cfg, Policy::Oracle, 50, 0, &EvalOptions::default());
    assert_eq!(empty, Err(EvalError::ZeroDisplays));
}

#[test]
fn zero_users_is_an_empty_result() {
    let agent = RandomAgent::new(10, 0);
    let r = evaluate_online(&SimConfig::default(), Policy::Agent(&agent), 0, 0, &EvalOptions::default());
    assert_eq!(r, Err(EvalError::ZeroDisplays));
}

#[test]
fn agent_and_environment_must_agree_on_catalogue_size() {
    let agent = RandomAgent::new(7, 0);
    assert!(evaluate_online(&SimConfig::default(), Policy::Agent(&agent), 5, 0, &EvalOptions::default()).is_err());
}

#[test]
fn truncated_log_has_exact_bandit_budget() {
    let cfg = SimConfig::default();
    let full = generate_log(&cfg, 300, &RandomAgent::new(10, 2), 4, 1).unwrap();
    for n in [0, 1, 17, 500, full.bandit_count()] {
        let cut = full.truncate_to_bandit_events(n);
        assert_eq!(cut.bandit_count(), n);
        // Independent scan for the position of the n-th bandit row.
        let mut seen = 0;
        let mut end = full.len();
        for (i, e) in full.iter().enumerate() {
            if e.is_bandit() {
                seen += 1;
            }
            if e.is_bandit() && seen == n {
                end = i + 1;
                break;
            }
            if n == 0 && e.is_bandit() {
                end = i;
                break;
            }
        }
        let expected_organic: Vec<&Event> = full.events()[..end].iter().filter(|e| e.is_organic()).collect();
        let got_organic: Vec<&Event> = cut.iter().filter(|e| e.is_organic()).collect();
        assert_eq!(got_organic, expected_organic, "n = {n}");
        recosim::io::validate_schema(&cut).unwrap();
    }
}

#[test]
fn bandit_budget_keeps_organic_rows() {
    let cfg = SimConfig::default();
    let full = generate_log(&cfg, 200, &RandomAgent::new(10, 2), 4, 1).unwrap();
    let budget = full.with_bandit_budget(100);
    assert_eq!(budget.bandit_count(), 100);
    assert_eq!(budget.organic_only(), full.organic_only());
    let first: Vec<&Event> = full.iter().filter(|e| e.is_bandit()).take(100).collect();
    assert_eq!(budget.iter().filter(|e| e.is_bandit()).collect::<Vec<_>>(), first);
}

#[test]
fn logged_training_data_has_requested_bandit_rows() {
    let cfg = SimConfig::default();
    let log = generate_log_with_bandit_events(&cfg, 1234, &RandomAgent::new(10, 0), 6).unwrap();
    assert_eq!(log.bandit_count(), 1234);
    assert!(log.iter().last().unwrap().is_bandit());
}

#[test]
fn sweep_has_one_row_per_point_agent_and_rep() {
    let cfg = SimConfig::default();
    let settings = SweepSettings { eval_users: 30, reps: 2, seed: 1, eval: EvalOptions::default() };
    let table =
        sweep_bandit_events(&cfg, &AgentSettings::default(), &["pure_organic", "pure_bandit"], &[10, 20, 40], &settings)
            .unwrap();
    assert_eq!(table.rows.len(), 12);
    for v in [10.0, 20.0, 40.0] {
        for a in ["pure_organic", "pure_bandit"] {
            for rep in 0..2 {
                assert!(table.get(v, a, rep).is_some());
            }
        }
    }
}

#[test]
fn logistic_agent_beats_random_on_a_large_log() {
    let cfg = SimConfig { sigma_phi: 3.0, ..SimConfig::default() };
    let log = generate_log_with_bandit_events(&cfg, 700_000, &RandomAgent::new(10, 1), 30).unwrap();
    assert!(log.len() >= 1_000_000, "log has {} events", log.len());
    let mut agent = AgentSettings::default().build("logistic", 10).unwrap();
    agent.train(&log).unwrap();
    let opts = EvalOptions::default();
    let trained = evaluate_online(&cfg, Policy::Agent(&agent), 2000, 31, &opts).unwrap();
    let random = evaluate_online(&cfg, Policy::Agent(&RandomAgent::new(10, 5)), 2000, 31, &opts).unwrap();
    assert!(trained.separated_above(&random), "{trained:?} vs {random:?}");
}

#[test]
fn combined_is_at_least_pure_bandit_with_moderate_data() {
    let cfg = SimConfig { sigma_phi: 1.0, ..SimConfig::default() };
    let settings = SweepSettings { eval_users: 2000, reps: 5, seed: 40, eval: EvalOptions::default() };
    let table =
        sweep_bandit_events(&cfg, &AgentSettings::default(), &["pure_bandit", "combined"], &[1000], &settings).unwrap();
    let z = settings.eval.z;
    let bandit = table.pooled(1000.0, "pure_bandit", z).unwrap();
    let combined = table.pooled(1000.0, "combined", z).unwrap();
    assert!(combined.ctr > bandit.ctr && combined.ci_low >= bandit.ci_low, "{combined:?} vs {bandit:?}");
}

fn tally_strategy() -> impl Strategy<Value = Tally> {
    prop::collection::vec((any::<bool>(), 0.0f64..1.0), 0..20).prop_map(|steps| {
        let mut t = Tally::default();
        for (c, r) in steps {
            t.record(c, Some(r));
        }
        t
    })
}

proptest! {
    #[test]
    fn tally_merge_is_associative_and_commutative(a in tally_strategy(), b in tally_strategy(), c in tally_strategy()) {
        prop_assert_eq!(a.merge(b).merge(c), a.merge(b.merge(c)));
        prop_assert_eq!(a.merge(b), b.merge(a));
        prop_assert_eq!(a.merge(Tally::default()), a);
    }

    #[test]
    fn wilson_contains_point_estimate(n in 1u64..10_000, frac in 0.0f64..=1.0, z in 0.5f64..4.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, n, z).unwrap();
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}
