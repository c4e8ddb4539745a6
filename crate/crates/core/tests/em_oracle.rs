mod common;

use tissuemix::em::{em_default_init, em_fit, EmConfig};
use tissuemix::linalg::{Mat, Vector};
use tissuemix::model::{
    default_hyperparams, marginal_loglik, random_profiles, synth_generate, ModelParams, ProfileKind,
};
use tissuemix::oracles::{oracle_max_marginal, single_gene_evidence};
use tissuemix::samplers::RngStream;
use tissuemix::Exec;

#[test]
fn loglik_never_decreases_on_twenty_small_instances() {
    let hp = default_hyperparams(3).unwrap();
    for seed in 0..20u64 {
        let mut rng = RngStream::new(seed, 99);
        let k = Vector::new(vec![0.5 * rng.uniform(), 0.5 * rng.uniform()]).unwrap();
        let truth = ModelParams {
            K: k,
            rho: 20.0 + 200.0 * rng.uniform(),
            ..ModelParams::reference_truth()
        };
        let profiles = random_profiles(seed, 50, 3, ProfileKind::Uniform).unwrap();
        let ds = synth_generate(seed, &truth, &profiles).unwrap();
        let fit = em_fit(Exec::SERIAL, &ds, &em_default_init(&hp), EmConfig::default()).unwrap();
        for w in fit.loglik.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn tiny_instance_reaches_the_brute_force_maximizer() {
    let truth = ModelParams {
        K: Vector::new(vec![0.35]).unwrap(),
        Lambda: Mat::from_rows(&[vec![4.0]]).unwrap(),
        rho: 100.0,
    };
    let profiles = random_profiles(5, 50, 2, ProfileKind::Uniform).unwrap();
    let ds = synth_generate(5, &truth, &profiles).unwrap();
    let (k, lambda, rho) = oracle_max_marginal(&ds).unwrap();
    let init = em_default_init(&default_hyperparams(2).unwrap());
    let fit = em_fit(
        Exec::SERIAL,
        &ds,
        &init,
        EmConfig {
            max_iter: 100_000,
            rel_tol: 1e-14,
        },
    )
    .unwrap();
    assert!((fit.params.K[0] - k).abs() < 1e-3, "EM {} vs oracle {k}", fit.params.K[0]);
    let oracle = ModelParams {
        K: Vector::new(vec![k]).unwrap(),
        Lambda: Mat::from_rows(&[vec![lambda]]).unwrap(),
        rho,
    };
    let (a, b) = (marginal_loglik(&ds, &fit.params).unwrap(), marginal_loglik(&ds, &oracle).unwrap());
    assert!((a - b).abs() < 1e-6 * b.abs(), "{a} vs {b}");
}

#[test]
fn single_gene_marginal_matches_numerical_integration() {
    for (r, d, mu, k, lambda, rho) in [
        (0.3, 0.4, 0.1, 0.2, 25.0, 100.0),
        (-1.0, -0.7, 0.5, 0.9, 2.0, 3.0),
        (0.05, 0.0, 0.05, 0.3, 10.0, 50.0),
    ] {
        let ds = common::dataset(&[(r, [d + mu, mu])]);
        let p = ModelParams {
            K: Vector::new(vec![k]).unwrap(),
            Lambda: Mat::from_rows(&[vec![lambda]]).unwrap(),
            rho,
        };
        let closed = marginal_loglik(&ds, &p).unwrap();
        let numeric = single_gene_evidence(r, d, mu, k, lambda, rho);
        assert!((closed - numeric).abs() < 1e-6, "{closed} vs {numeric}");
    }
}

fn gls(ds: &tissuemix::Dataset, p: &ModelParams) -> Vector {
    // K* = (Σ D Dᵀ / v_i)⁻¹ Σ D y / v_i with v_i = 1/ρ + Dᵀ Λ⁻¹ D
    let n = ds.dim();
    let cov = p.Lambda.inverse().unwrap();
    let mut a = Mat::zeros(n, n);
    let mut b = vec![0.0; n];
    for i in 0..ds.genes() {
        let d = ds.d().get(i);
        let v = 1.0 / p.rho + cov.mul_vec(&d).unwrap().dot(&d);
        for r in 0..n {
            b[r] += d[r] * ds.centered(i) / v;
            for c in 0..n {
                a[(r, c)] += d[r] * d[c] / v;
            }
        }
    }
    a.inverse().unwrap().mul_vec(&Vector::new(b).unwrap()).unwrap()
}

#[test]
fn loglik_peaks_over_k_at_the_gls_solution_with_matching_gradient() {
    let profiles = random_profiles(9, 40, 3, ProfileKind::Uniform).unwrap();
    let ds = synth_generate(9, &ModelParams::reference_truth(), &profiles).unwrap();
    let p = ModelParams::reference_truth();
    let star = gls(&ds, &p);
    let at = |k: &Vector| marginal_loglik(&ds, &ModelParams { K: k.clone(), ..p.clone() }).unwrap();
    let best = at(&star);
    let mut rng = RngStream::new(9, 0);
    for _ in 0..50 {
        let k = Vector::new(vec![star[0] + 0.05 * rng.normal(), star[1] + 0.05 * rng.normal()]).unwrap();
        assert!(at(&k) <= best);
    }
    // analytic gradient Σ D (y − DᵀK) / v_i against central differences
    let k = Vector::new(vec![0.2, 0.1]).unwrap();
    let cov = p.Lambda.inverse().unwrap();
    let mut grad = [0.0; 2];
    for i in 0..ds.genes() {
        let d = ds.d().get(i);
        let v = 1.0 / p.rho + cov.mul_vec(&d).unwrap().dot(&d);
        let res = ds.centered(i) - d.dot(&k);
        for j in 0..2 {
            grad[j] += d[j] * res / v;
        }
    }
    let h = 1e-5;
    for j in 0..2 {
        let mut up = k.clone();
        let mut down = k.clone();
        up.as_mut_slice()[j] += h;
        down.as_mut_slice()[j] -= h;
        let fd = (at(&up) - at(&down)) / (2.0 * h);
        assert!((fd - grad[j]).abs() < 1e-5 * grad[j].abs(), "{fd} vs {}", grad[j]);
    }
}
