use splitgt::bench::{run_trials, run_trials_timed, sweep, wilson_interval, Algorithm, HashModeSer, TrialConfig};
use splitgt::output::{read_results_csv, read_results_json, write_results, Format};

fn config(alg: Algorithm) -> TrialConfig {
    let mut c = match alg {
        Algorithm::Gamma | Algorithm::Comp => TrialConfig {
            gamma: Some(5),
            ..TrialConfig::new(alg, 4096, 4)
        },
        Algorithm::Rho => TrialConfig {
            rho: Some(16),
            ..TrialConfig::new(alg, 4096, 4)
        },
        Algorithm::Noisy | Algorithm::Ncomp => TrialConfig {
            p: 0.05,
            ..TrialConfig::new(alg, 1024, 4)
        },
    };
    c.trials = 60;
    c.seed = 5;
    c
}

const ALL: [Algorithm; 5] = [Algorithm::Gamma, Algorithm::Rho, Algorithm::Noisy, Algorithm::Comp, Algorithm::Ncomp];

#[test]
fn empty_defective_set_is_always_recovered() {
    for alg in ALL {
        let c = TrialConfig {
            p: 0.0,
            defectives: Some(vec![]),
            ..config(alg)
        };
        let mut c = c;
        c.overrides.design_p = Some(0.05);
        let r = run_trials(&c).unwrap();
        assert_eq!(r.success_rate, 1.0, "{alg:?}");
    }
}

#[test]
fn same_seed_gives_identical_output() {
    for alg in ALL {
        let mut c = config(alg);
        c.trials = 200;
        let a = run_trials(&c).unwrap();
        let b = run_trials(&c).unwrap();
        let (mut fa, mut fb) = (Vec::new(), Vec::new());
        write_results(&[a], Format::Json, &mut fa).unwrap();
        write_results(&[b], Format::Json, &mut fb).unwrap();
        assert_eq!(fa, fb, "{alg:?}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let c = config(Algorithm::Noisy);
    let one = run_trials_timed(&c, Some(1)).unwrap().result;
    let four = run_trials_timed(&c, Some(4)).unwrap().result;
    assert_eq!(one, four);
}

#[test]
fn seeds_change_the_trials() {
    let a = config(Algorithm::Gamma);
    let b = TrialConfig { seed: 6, ..a.clone() };
    let (ra, rb) = (run_trials(&a).unwrap(), run_trials(&b).unwrap());
    assert_ne!(ra.mean_outcomes_read, rb.mean_outcomes_read);
}

#[test]
fn counters_respect_the_test_budget() {
    for alg in ALL {
        let r = run_trials(&config(alg)).unwrap();
        assert!(r.max_distinct_outcomes_read <= r.tests, "{alg:?}");
        // Lookups may repeat a test (the noisy lookahead does), distinct reads may not.
        assert!(r.max_outcomes_read >= r.max_distinct_outcomes_read, "{alg:?}");
        assert!((0.0..=1.0).contains(&r.success_rate));
        assert!(r.ci_lo <= r.success_rate && r.success_rate <= r.ci_hi);
    }
}

#[test]
fn empty_set_reads_exactly_the_top_level() {
    let g = TrialConfig {
        defectives: Some(vec![]),
        ..config(Algorithm::Gamma)
    };
    let r = run_trials(&g).unwrap();
    let top = splitgt_core::gamma::gamma_params(4096, 4, 5, None, 1.0 / 144.0, 8.0).unwrap().level1_tests();
    assert_eq!((r.mean_outcomes_read, r.max_outcomes_read), (top as f64, top));

    let rho = TrialConfig {
        defectives: Some(vec![]),
        ..config(Algorithm::Rho)
    };
    let r = run_trials(&rho).unwrap();
    assert_eq!(r.max_outcomes_read, 4096 / 16);
    assert_eq!(r.mean_outcomes_read, 256.0);
}

#[test]
fn single_cell_sweep_matches_run_trials() {
    let c = config(Algorithm::Rho);
    let cells = sweep(std::slice::from_ref(&c), None).unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].as_ref().unwrap().result, run_trials(&c).unwrap());
    assert!(sweep(&[], None).is_err());
}

#[test]
fn sweep_keeps_going_past_bad_cells() {
    let good = config(Algorithm::Gamma);
    let bad = TrialConfig { gamma: Some(2), ..good.clone() };
    let cells = sweep(&[good.clone(), bad, good], None).unwrap();
    assert!(cells[0].is_ok() && cells[1].is_err() && cells[2].is_ok());
}

fn sigma2(a: &splitgt::AggregateResult, b: &splitgt::AggregateResult) -> f64 {
    let pooled = (a.successes + b.successes) as f64 / (a.trials + b.trials) as f64;
    2.0 * (pooled * (1.0 - pooled) * (1.0 / a.trials as f64 + 1.0 / b.trials as f64)).sqrt()
}

#[test]
fn noisy_success_does_not_improve_with_more_noise() {
    let mut base = config(Algorithm::Noisy);
    base.trials = 200;
    base.k = 8;
    base.overrides.design_p = Some(0.05);
    let rates: Vec<_> = [0.0, 0.02, 0.05, 0.1]
        .iter()
        .map(|&p| run_trials(&TrialConfig { p, ..base.clone() }).unwrap())
        .collect();
    for w in rates.windows(2) {
        assert!(w[1].success_rate <= w[0].success_rate + sigma2(&w[0], &w[1]), "{} -> {}", w[0].p, w[1].p);
    }
}

#[test]
fn low_storage_modes_match_full_mode() {
    for (alg, low) in [
        (Algorithm::Gamma, HashModeSer::Kwise),
        (Algorithm::Rho, HashModeSer::Permutation),
        (Algorithm::Noisy, HashModeSer::Pairwise),
    ] {
        let full = TrialConfig { trials: 200, ..config(alg) };
        let lowc = TrialConfig { hash_mode: low, ..full.clone() };
        let (a, b) = (run_trials(&full).unwrap(), run_trials(&lowc).unwrap());
        assert!((a.success_rate - b.success_rate).abs() <= sigma2(&a, &b), "{alg:?}");
        assert!(b.storage_words < a.storage_words, "{alg:?}");
    }
}

#[test]
fn results_round_trip_through_json_and_csv() {
    let results: Vec<_> = ALL.iter().map(|&a| run_trials(&config(a)).unwrap()).collect();
    let mut json = Vec::new();
    write_results(&results, Format::Json, &mut json).unwrap();
    assert_eq!(read_results_json(std::str::from_utf8(&json).unwrap()).unwrap(), results);
    let mut csv = Vec::new();
    write_results(&results, Format::Csv, &mut csv).unwrap();
    assert_eq!(read_results_csv(std::str::from_utf8(&csv).unwrap()).unwrap(), results);
}

#[test]
fn csv_header_is_fixed() {
    let mut csv = Vec::new();
    write_results(&[], Format::Csv, &mut csv).unwrap();
    let header = String::from_utf8(csv).unwrap();
    assert!(header.starts_with(
        "algorithm,n,k,gamma,gamma_prime,rho,p,T,trials,successes,success_rate,ci_lo,ci_hi,\
         mean_outcomes_read,max_outcomes_read,mean_labels,storage_words,seed,hash_mode,"
    ));
}

#[test]
fn wilson_interval_examples() {
    let (lo, hi) = wilson_interval(0, 0);
    assert_eq!((lo, hi), (0.0, 1.0));
    let (lo, hi) = wilson_interval(200, 200);
    assert!((lo - 0.981_154_673_622_733_5).abs() < 1e-12 && hi == 1.0);
    let (lo, hi) = wilson_interval(50, 100);
    assert!((lo - 0.403_831_7).abs() < 1e-6 && (hi - 0.596_168_3).abs() < 1e-6);
}

#[test]
fn parameter_errors_name_the_trial_or_parameter() {
    let c = TrialConfig { gamma: None, ..config(Algorithm::Gamma) };
    assert!(run_trials(&c).unwrap_err().to_string().contains("--gamma"));
    let c = TrialConfig { defectives: Some(vec![5000]), ..config(Algorithm::Rho) };
    assert!(run_trials(&c).is_err());
    let c = TrialConfig { p: 0.7, ..config(Algorithm::Rho) };
    assert!(run_trials(&c).is_err());
}
