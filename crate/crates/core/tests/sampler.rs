use robust_gxe::gibbs::{run_chain, ChainState, Init, Sampler};
use robust_gxe::inference::inclusion_probabilities;
use robust_gxe::prelude::*;

fn small_data() -> GxEDataset {
    let mut sim = SimulationConfig::example1(ErrorModel::Normal01).with_dims(60, 8, 2, 1);
    sim.n_active_groups = 3;
    sim.n_active_effects = 5;
    let (train, _, _) = gen_dataset(&sim, 3).unwrap();
    standardize(&train).unwrap().0
}

fn config(method: Method, n_iter: usize, burn_in: usize) -> MethodConfig {
    let hyper = Hyperparameters {
        n_iter,
        burn_in,
        seed: 17,
        ..Hyperparameters::default()
    };
    MethodConfig::new(method, hyper)
}

// Debug output prints NaN fields identically, unlike ==.
fn fingerprint(st: &ChainState) -> String {
    format!("{st:?}")
}

fn sweep_n(ds: &GxEDataset, method: Method, sweeps: usize, seed: u64) -> ChainState {
    let cfg = config(method, 10, 0);
    let mut sampler = Sampler::new(ds, &cfg).unwrap();
    let mut rng = RngStream::new(seed, 0);
    let mut st = sampler.initial_state(Init::Default, &mut rng).unwrap();
    sampler.attach(&st);
    for _ in 0..sweeps {
        sampler.sweep(&mut st, &mut rng).unwrap();
    }
    st
}

#[test]
fn sweeps_from_the_same_seed_are_identical() {
    let ds = small_data();
    for m in Method::ALL {
        let a = sweep_n(&ds, m, 25, 4);
        let b = sweep_n(&ds, m, 25, 4);
        assert_eq!(fingerprint(&a), fingerprint(&b), "{m}");
        let c = sweep_n(&ds, m, 25, 5);
        assert_ne!(fingerprint(&a), fingerprint(&c), "{m}");
    }
}

#[test]
fn every_method_keeps_a_finite_state() {
    let ds = small_data();
    for m in Method::ALL {
        let st = sweep_n(&ds, m, 200, 8);
        st.check(m).unwrap();
        assert!(st.beta.iter().all(|b| b.is_finite()), "{m}");
        assert!(st.alpha.iter().chain(st.theta.iter()).all(|v| v.is_finite()), "{m}");
    }
}

#[test]
fn sparse_group_coefficients_are_scale_times_direction() {
    let ds = small_data();
    let l = ds.group_size();
    let cfg = config(Method::RbsgSs, 10, 0);
    let mut sampler = Sampler::new(&ds, &cfg).unwrap();
    let mut rng = RngStream::new(21, 0);
    let mut st = sampler.initial_state(Init::Jittered, &mut rng).unwrap();
    sampler.attach(&st);
    let mut spiked_groups = 0;
    for _ in 0..300 {
        sampler.sweep(&mut st, &mut rng).unwrap();
        for c in 0..st.beta.len() {
            assert_eq!(st.beta[c], st.omega[c] * st.b[c]);
            assert_eq!(st.beta[c] != 0.0, st.phi_b[c / l] && st.phi_w[c]);
        }
        for j in 0..ds.p() {
            if !st.phi_b[j] {
                spiked_groups += 1;
                assert!(st.b[j * l..(j + 1) * l].iter().all(|&v| v == 0.0));
                assert!(st.omega[j * l..(j + 1) * l].iter().all(|&v| v == 0.0));
            }
        }
    }
    assert!(spiked_groups > 0, "no group was ever spiked");
}

#[test]
fn group_and_individual_indicators_zero_their_coefficients() {
    let ds = small_data();
    let l = ds.group_size();
    for m in [Method::RbgSs, Method::BgSs, Method::RblSs, Method::BlSs] {
        let st = sweep_n(&ds, m, 150, 2);
        for c in 0..st.beta.len() {
            let on = match m.structure() {
                Structure::Group => st.phi_b[c / l],
                _ => st.phi_w[c],
            };
            if !on {
                assert_eq!(st.beta[c], 0.0, "{m} effect {c}");
            }
        }
    }
}

#[test]
fn cached_residual_matches_recomputation() {
    let ds = small_data();
    for m in Method::ALL {
        let cfg = config(m, 10, 0);
        let mut sampler = Sampler::new(&ds, &cfg).unwrap();
        sampler.set_refresh_interval(0);
        let mut rng = RngStream::new(6, 0);
        let mut st = sampler.initial_state(Init::Jittered, &mut rng).unwrap();
        sampler.attach(&st);
        for _ in 0..100 {
            sampler.sweep(&mut st, &mut rng).unwrap();
        }
        let fresh = sampler.full_residual(&st);
        let drift = (sampler.residual() - &fresh).amax();
        assert!(drift < 1e-8, "{m}: drift {drift:e}");
    }
}

#[test]
fn stored_draws_follow_burn_in() {
    let ds = small_data();
    let s = run_chain(&ds, &config(Method::RbsgSs, 15_000, 7_500), &mut RngStream::new(1, 0)).unwrap();
    assert_eq!(s.n_draws, 7_500);
    assert_eq!(s.beta.len(), 7_500 * ds.p() * ds.group_size());

    let s = run_chain(&ds, &config(Method::Bl, 50, 49), &mut RngStream::new(1, 0)).unwrap();
    assert_eq!(s.n_draws, 1);
}

#[test]
fn burn_in_must_be_below_iterations() {
    let ds = small_data();
    let e = run_chain(&ds, &config(Method::Rbl, 100, 100), &mut RngStream::new(1, 0)).unwrap_err();
    assert!(matches!(e, Error::Config(_)));
}

#[test]
fn same_seed_gives_the_same_samples() {
    let ds = small_data();
    for m in [Method::RbsgSs, Method::Rbg, Method::BlSs] {
        let cfg = config(m, 300, 100);
        let a = run_chain(&ds, &cfg, &mut RngStream::new(9, 2)).unwrap();
        let b = run_chain(&ds, &cfg, &mut RngStream::new(9, 2)).unwrap();
        assert_eq!(a, b, "{m}");
        let c = run_chain(&ds, &cfg, &mut RngStream::new(9, 3)).unwrap();
        assert_ne!(a.beta, c.beta, "{m}");
    }
}

#[test]
fn chains_differ_by_stream() {
    let ds = small_data();
    let runs = robust_gxe::gibbs::run_chains(&ds, &config(Method::RbsgSs, 200, 100), 2).unwrap();
    assert_eq!(runs.len(), 2);
    assert_ne!(runs[0].samples.beta, runs[1].samples.beta);
    let again = robust_gxe::gibbs::run_chains(&ds, &config(Method::RbsgSs, 200, 100), 2).unwrap();
    assert_eq!(runs[1].samples, again[1].samples);
}

#[test]
fn group_methods_give_one_probability_per_group() {
    let ds = small_data();
    let l = ds.group_size();
    let s = run_chain(&ds, &config(Method::RbgSs, 400, 200), &mut RngStream::new(3, 0)).unwrap();
    let probs = inclusion_probabilities(&s).unwrap();
    for group in probs.chunks(l) {
        assert!(group.iter().all(|&p| p == group[0]));
    }
}

#[test]
fn strong_signal_is_found() {
    let mut sim = SimulationConfig::example1(ErrorModel::Normal01).with_dims(200, 10, 2, 1);
    sim.n_active_groups = 2;
    sim.n_active_effects = 3;
    sim.coef_ge_range = [1.5, 2.0];
    let (train, _, truth) = gen_dataset(&sim, 0).unwrap();
    let (train, _) = standardize(&train).unwrap();
    let s = run_chain(&train, &config(Method::RbsgSs, 2_000, 1_000), &mut RngStream::new(4, 0)).unwrap();
    let sel = select(&s, SelectionRule::Mpm).unwrap();
    let (tp, _) = score_selection(&sel.selected, &truth);
    assert_eq!(tp, 3);
}
