use proptest::prelude::*;

use povm_coherence::channels::KrausChannel;
use povm_coherence::monotones::c_linf;
use povm_coherence::povm::{random_povm, Povm};
use povm_coherence::tomography::{
    c_linf_per_run, devectorize, reconstruct_direct, reconstruct_direct_table, reconstruct_general, simulate_record,
    vectorize, ProbeFamily, RunStatistics, TomographyRecord,
};

fn max_entry_error(a: &Povm, b: &Povm) -> f64 {
    a.components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| x.sub(y).unwrap().max_abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vectorization_round_trip_is_exact(d in 1usize..6, n in 1usize..4, s in any::<u64>()) {
        let p = random_povm(d, n, s).unwrap();
        for c in p.components() {
            prop_assert_eq!(&devectorize(&vectorize(c), d).unwrap(), c);
        }
    }

    #[test]
    fn noisy_counts_reconstruct_complete_measurements(d in 2usize..5, n in 2usize..4, s in any::<u64>()) {
        let p = random_povm(d, n, s).unwrap();
        let rec = simulate_record(&p, 500, 3, None, s, 0).unwrap();
        for run in 0..rec.runs() {
            let r = reconstruct_direct_table(&rec.run_table(run).unwrap()).unwrap();
            prop_assert!(r.completeness_residual <= 1e-12, "{}", r.completeness_residual);
        }
        prop_assert!(reconstruct_direct(&rec).unwrap().completeness_residual <= 1e-12);
    }
}

#[test]
fn exact_data_round_trips_on_random_measurements() {
    for s in 0..100u64 {
        let d = 2 + (s % 3) as usize;
        let p = random_povm(d, 2 + (s % 3) as usize, s).unwrap();
        let rec = TomographyRecord::exact(&p);
        let direct = reconstruct_direct(&rec).unwrap();
        assert!(max_entry_error(&direct.povm, &p) <= 1e-12);

        let family = ProbeFamily::standard(d).unwrap();
        let probs: Vec<Vec<f64>> = family
            .states()
            .iter()
            .map(|st| p.born_distribution(st).unwrap().probs().to_vec())
            .collect();
        let general = reconstruct_general(family.states(), &probs).unwrap();
        assert!(max_entry_error(&general.povm, &p) <= 1e-10);
    }
}

/// Per-entry means over 200 runs stay within a few standard errors of the truth.
#[test]
fn reconstruction_is_unbiased() {
    let p = random_povm(2, 3, 42).unwrap();
    let rec = simulate_record(&p, 2000, 200, None, 7, 0).unwrap();
    let runs: Vec<Povm> = (0..rec.runs())
        .map(|r| reconstruct_direct_table(&rec.run_table(r).unwrap()).unwrap().povm)
        .collect();
    for a in 0..p.outcomes() {
        let truth = vectorize(p.component(a));
        for (x, t) in truth.iter().enumerate() {
            let samples: Vec<f64> = runs.iter().map(|q| vectorize(q.component(a))[x]).collect();
            let stats = RunStatistics::from_samples(&samples);
            assert!(
                (stats.mean - t).abs() <= 4.0 * stats.stderr,
                "outcome {a} coordinate {x}: {} vs {t} ({})",
                stats.mean,
                stats.stderr
            );
        }
    }
}

/// Amplitude damping of the probes never raises the estimated `C_linf`
/// beyond sampling error.
#[test]
fn damped_probes_lower_estimated_coherence() {
    for s in 0..8u64 {
        let d = 2 + (s % 2) as usize;
        let p = random_povm(d, 2, s).unwrap();
        let clean = RunStatistics::from_samples(&c_linf_per_run(&simulate_record(&p, 4096, 10, None, s, 1).unwrap()).unwrap());
        for gamma in [0.2, 0.5, 0.9] {
            let ch = KrausChannel::amplitude_damping(d, gamma).unwrap();
            let noisy_rec = simulate_record(&p, 4096, 10, Some(&ch), s, 1).unwrap();
            let noisy = RunStatistics::from_samples(&c_linf_per_run(&noisy_rec).unwrap());
            let slack = 3.0 * (clean.stderr.powi(2) + noisy.stderr.powi(2)).sqrt();
            assert!(noisy.mean <= clean.mean + slack, "gamma {gamma}: {} > {}", noisy.mean, clean.mean);
            // the exact damped measurement sits below the undamped one
            let exact = c_linf(&ch.dual_apply_nonselective(&p).unwrap()).value;
            assert!(exact <= c_linf(&p).value + 1e-12);
        }
    }
}
