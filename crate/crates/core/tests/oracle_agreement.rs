//! Engines against the brute-force oracles on tiny instances.

mod common;

use common::*;
use tissuemix::gibbs::{effective_sample_size, gibbs_run, GibbsConfig, GibbsInit};
use tissuemix::model::{default_hyperparams, random_profiles, synth_generate, ModelParams, ProfileKind};
use tissuemix::oracles::{oracle_mc_elbo, oracle_posterior_mean, QuadratureSpec};
use tissuemix::vb::{vb_elbo, vb_fit, vb_init, vb_step, VbConfig};
use tissuemix::Exec;

// Frozen quadrature outputs (resolution 200, checked against 400).
const TINY3_E_K: f64 = 0.3893866638;
const TINY3_E_RHO: f64 = 108.5047734841;
const TINY3_LOG_EVIDENCE: f64 = 1.8803424930;
const SINGLE_LOG_EVIDENCE: f64 = -0.9690670234;

#[test]
fn quadrature_reproduces_frozen_values() {
    let q = oracle_posterior_mean(&tiny3(), &informative_hp(), QuadratureSpec::default()).unwrap();
    assert!((q.e_k - TINY3_E_K).abs() < 1e-8, "{}", q.e_k);
    assert!((q.e_rho / TINY3_E_RHO - 1.0).abs() < 1e-8, "{}", q.e_rho);
    assert!((q.log_evidence - TINY3_LOG_EVIDENCE).abs() < 1e-8);
    assert!(q.grid_change < 1e-4);
}

#[test]
fn flat_profiles_leave_k_at_its_prior_mean() {
    let ds = dataset(&[(0.4, [0.5, 0.5]), (0.1, [0.2, 0.2]), (0.7, [0.9, 0.9])]);
    let hp = informative_hp();
    let q = oracle_posterior_mean(&ds, &hp, QuadratureSpec::default()).unwrap();
    assert!((q.e_k - hp.K0[0]).abs() < 1e-8, "{}", q.e_k);
}

#[test]
fn gibbs_means_match_quadrature_within_three_mc_errors() {
    let ds = tiny3();
    let hp = informative_hp();
    let config = GibbsConfig {
        iterations: 200_000,
        burn_in: 2_000,
        thin: 1,
        seed: 2024,
        init: GibbsInit::Prior,
    };
    let chain = gibbs_run(Exec::SERIAL, &ds, &hp, config).unwrap();
    let k: Vec<f64> = chain.samples.iter().map(|p| p.K[0]).collect();
    let rho: Vec<f64> = chain.samples.iter().map(|p| p.rho).collect();
    let se_k = sd(&k) / effective_sample_size(&k).unwrap().sqrt();
    let se_rho = sd(&rho) / effective_sample_size(&rho).unwrap().sqrt();
    assert!((mean(&k) - TINY3_E_K).abs() < 3.0 * se_k, "K {} ± {se_k}", mean(&k));
    assert!((mean(&rho) - TINY3_E_RHO).abs() < 3.0 * se_rho, "rho {} ± {se_rho}", mean(&rho));
}

#[test]
fn vb_k_is_close_to_the_exact_posterior_mean() {
    let (state, trace) = vb_fit(Exec::SERIAL, &tiny3(), &informative_hp(), VbConfig::default()).unwrap();
    assert!(trace.converged);
    assert!((state.e_k()[0] - TINY3_E_K).abs() < 0.05, "{:?}", state.e_k());
}

#[test]
fn elbo_is_below_the_log_evidence() {
    let ds = single();
    let hp = informative_hp();
    let q = oracle_posterior_mean(&ds, &hp, QuadratureSpec::default()).unwrap();
    assert!((q.log_evidence - SINGLE_LOG_EVIDENCE).abs() < 1e-8);
    let (state, _) = vb_fit(Exec::SERIAL, &ds, &hp, VbConfig::default()).unwrap();
    let elbo = vb_elbo(&state, &ds, &hp).unwrap();
    assert!(elbo <= q.log_evidence, "{elbo} > {}", q.log_evidence);
    // and on the three-gene instance too
    let (state, _) = vb_fit(Exec::SERIAL, &tiny3(), &hp, VbConfig::default()).unwrap();
    assert!(vb_elbo(&state, &tiny3(), &hp).unwrap() <= TINY3_LOG_EVIDENCE);
}

#[test]
fn closed_form_elbo_matches_monte_carlo() {
    let ds = tiny5();
    let hp = informative_hp();
    let init = vb_init(&ds, &hp).unwrap();
    let early = vb_step(Exec::SERIAL, &init, &ds, &hp).unwrap();
    let (converged, _) = vb_fit(Exec::SERIAL, &ds, &hp, VbConfig::default()).unwrap();
    for (seed, state) in [(1, early), (2, converged)] {
        let exact = vb_elbo(&state, &ds, &hp).unwrap();
        let mc = oracle_mc_elbo(seed, &state, &ds, &hp, 100_000);
        assert_eq!(mc.excluded, 0);
        assert!((mc.estimate - exact).abs() < 3.0 * mc.std_error, "{exact} vs {mc:?}");
    }
}

#[test]
fn closed_form_elbo_matches_monte_carlo_with_three_networks() {
    // default priors: n0 = 1 is below the dimension, so both sides use the
    // unnormalized Wishart kernel
    let profiles = random_profiles(7, 5, 3, ProfileKind::Uniform).unwrap();
    let ds = synth_generate(7, &ModelParams::reference_truth(), &profiles).unwrap();
    let hp = default_hyperparams(3).unwrap();
    let mut state = vb_init(&ds, &hp).unwrap();
    for _ in 0..5 {
        state = vb_step(Exec::SERIAL, &state, &ds, &hp).unwrap();
    }
    let exact = vb_elbo(&state, &ds, &hp).unwrap();
    let mc = oracle_mc_elbo(3, &state, &ds, &hp, 100_000);
    assert!((mc.estimate - exact).abs() < 3.0 * mc.std_error, "{exact} vs {mc:?}");
}

#[test]
fn monte_carlo_error_shrinks_as_inverse_root_draws() {
    let ds = tiny5();
    let hp = informative_hp();
    let (state, _) = vb_fit(Exec::SERIAL, &ds, &hp, VbConfig::default()).unwrap();
    let small = oracle_mc_elbo(4, &state, &ds, &hp, 10_000);
    let large = oracle_mc_elbo(5, &state, &ds, &hp, 1_000_000);
    let ratio = small.std_error / large.std_error;
    assert!((ratio / 10.0 - 1.0).abs() < 0.2, "{ratio}");
}

#[test]
fn three_network_data_is_rejected_by_the_quadrature() {
    let profiles = random_profiles(1, 3, 3, ProfileKind::Uniform).unwrap();
    let ds = synth_generate(1, &ModelParams::reference_truth(), &profiles).unwrap();
    assert!(oracle_posterior_mean(&ds, &default_hyperparams(3).unwrap(), QuadratureSpec::default()).is_err());
}
