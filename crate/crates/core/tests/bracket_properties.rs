use povm_coherence::channels::KrausChannel;
use povm_coherence::monotones::{c_s_estimate, distance_monotone, BracketConfig, TotalVariation};
use povm_coherence::povm::random_povm;
use povm_coherence::seed;

#[test]
fn relative_entropy_monotone_under_sio_duals() {
    let config = BracketConfig::default();
    for s in 0..6u64 {
        let mut rng = seed::rng(s, &[9]);
        let p = random_povm(2, 2, s).unwrap();
        let ch = KrausChannel::random_sio(2, 2, &mut rng);
        let before = c_s_estimate(&p, &config).unwrap();
        assert!(before.converged);
        for q in [ch.dual_apply_nonselective(&p).unwrap(), ch.dual_apply_selective(&p).unwrap()] {
            let after = c_s_estimate(&q, &config).unwrap();
            assert!(
                after.upper <= before.lower + 2.0 * config.gap_tol,
                "seed {s}: [{}, {}] after vs [{}, {}] before",
                after.lower,
                after.upper,
                before.lower,
                before.upper
            );
        }
    }
}

#[test]
fn total_variation_monotone_under_sio_duals() {
    let config = BracketConfig::default();
    for s in 0..6u64 {
        let mut rng = seed::rng(s, &[10]);
        let p = random_povm(2, 2, s).unwrap();
        let ch = KrausChannel::random_sio(2, 2, &mut rng);
        let before = distance_monotone(&p, &TotalVariation, &config).unwrap();
        let after = distance_monotone(&ch.dual_apply_nonselective(&p).unwrap(), &TotalVariation, &config).unwrap();
        assert!(after.upper <= before.lower + 2.0 * config.gap_tol);
    }
}

#[test]
fn bracket_is_faithful() {
    let config = BracketConfig::default();
    for s in 0..5u64 {
        let p = random_povm(2 + (s % 2) as usize, 2, s).unwrap();
        let coherent = c_s_estimate(&p, &config).unwrap();
        assert!(coherent.lower > 0.0, "{coherent:?}");
        let flat = c_s_estimate(&p.dephase(), &config).unwrap();
        assert_eq!((flat.lower, flat.upper), (0.0, 0.0));
    }
}

