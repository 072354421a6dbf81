use apergodic::parallel::{self, chunked};
use apergodic_core::absorbed::{BoundaryPair, SurvivalSampler};
use apergodic_core::ergodic::ErgodicRun;
use apergodic_core::ou::{OuSpec, OuStepper};
use apergodic_core::process::{simulate_ensemble, InitialLaw, Observable};
use apergodic_core::{TimeFunction, TimeGrid};

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

#[test]
fn chunked_preserves_order_and_coverage() {
    let parts = chunked(1000, 64, |r| Ok((r.start, r.end))).unwrap();
    assert_eq!(parts.len(), 16);
    assert_eq!(parts[0], (0, 64));
    assert_eq!(*parts.last().unwrap(), (960, 1000));
    assert!(parts.windows(2).all(|w| w[0].1 == w[1].0));
    assert!(chunked(0, 64, |r| Ok(r.start)).unwrap().is_empty());
}

#[test]
fn ergodic_report_is_independent_of_thread_count() {
    let spec = OuSpec::default_experiment();
    let run =
        ErgodicRun::new(&spec, false, Observable::square(), InitialLaw::Point(1.0), &[1.0, 5.0], 1e-2, 3).unwrap();
    let one = pool(1).install(|| parallel::ergodic_report(&run, 700, 0.5)).unwrap();
    let many = pool(6).install(|| parallel::ergodic_report(&run, 700, 0.5)).unwrap();
    assert_eq!(one, many);
    let seq = run.tally(0..700, 0.5).unwrap().finish();
    for (a, b) in one.mean_avg.iter().zip(&seq.mean_avg) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn parallel_ensemble_equals_sequential() {
    let spec = OuSpec::default_experiment();
    let grid = TimeGrid::new(0.0, 0.05, 40).unwrap();
    let stepper = OuStepper::new(&spec, false, &grid).unwrap();
    let init = InitialLaw::Normal { mean: 0.0, sd: 1.0 };
    let seq = simulate_ensemble(&stepper, &init, &grid, 33, 8).unwrap();
    let par = pool(4).install(|| parallel::ensemble(&stepper, &init, &grid, 33, 8)).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn survival_counts_match_sequential_tally() {
    let h = TimeFunction::constant(1.0);
    let sampler = SurvivalSampler::new(&h, 0.0, 0.0, 0.5, 2e-3, true, 12).unwrap();
    let par = pool(3).install(|| parallel::survival(&sampler, 1500)).unwrap();
    let seq = sampler.tally(0..1500);
    assert_eq!(par.n, 1500);
    assert!((par.p - seq.mean()).abs() < 1e-14);
}

#[test]
fn gap_rows_are_integer_exact_across_threads() {
    let pair = BoundaryPair::default_pair();
    let a = pool(1).install(|| parallel::gap_row(&pair, 0.0, 0.5, 0.0, 2, 2000, 2e-3, 5)).unwrap();
    let b = pool(5).install(|| parallel::gap_row(&pair, 0.0, 0.5, 0.0, 2, 2000, 2e-3, 5)).unwrap();
    assert_eq!(a, b);
    assert!((a.gap - a.sandwich_prob).abs() < 1e-15);
}
