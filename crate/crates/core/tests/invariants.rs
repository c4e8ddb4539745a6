mod common;

use proptest::prelude::*;
use tissuemix::em::{em_default_init, em_fit, EmConfig};
use tissuemix::gibbs::{gibbs_step, initial_state, GibbsInit, GibbsStreams};
use tissuemix::linalg::{
    cholesky_batched, gemm_batched, inverse_batched, reduce_scalars, small, Exec, MatBatch, Operand,
};
use tissuemix::model::{
    default_hyperparams, random_profiles, synth_generate, transform, ExpressionProfile, ModelParams, ProfileKind,
    RawRecord,
};
use tissuemix::oracles::compensated_sum;
use tissuemix::samplers::RngStream;
use tissuemix::vb::{vb_fit, VbConfig};

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn random_spd_batch(seed: u64, batch: usize, n: usize) -> MatBatch {
    let mut rng = RngStream::new(seed, 0);
    let mut data = Vec::with_capacity(batch * n * n);
    for _ in 0..batch {
        let a: Vec<f64> = (0..n * n).map(|_| rng.normal()).collect();
        let mut m = vec![0.0; n * n];
        small::gemm(&a, (n, n), false, &a, (n, n), true, 1.0, 0.0, &mut m);
        for j in 0..n {
            m[j * n + j] += n as f64;
        }
        data.extend(m);
    }
    MatBatch::new(batch, n, n, data).unwrap()
}

#[test]
fn batched_gemm_equals_looped_single_item_gemm_exactly() {
    let mut rng = RngStream::new(1, 0);
    let a = MatBatch::new(1000, 2, 2, (0..4000).map(|_| rng.normal()).collect()).unwrap();
    let b = MatBatch::new(1000, 2, 2, (0..4000).map(|_| rng.normal()).collect()).unwrap();
    for exec in [Exec::SERIAL, Exec::PARALLEL] {
        let c = gemm_batched(exec, Operand::Batch(&a), false, Operand::Batch(&b), false, 1.0, 0.0, MatBatch::zeros(1000, 2, 2))
            .unwrap();
        for i in 0..1000 {
            let mut want = [0.0; 4];
            small::gemm(a.item(i), (2, 2), false, b.item(i), (2, 2), false, 1.0, 0.0, &mut want);
            assert_eq!(c.item(i), &want);
        }
    }
}

#[test]
fn deterministic_sum_matches_compensated_serial_sum() {
    let mut rng = RngStream::new(2, 0);
    let x: Vec<f64> = (0..8000).map(|_| rng.normal() * 10f64.powi(rng.below(6) as i32)).collect();
    let exact = compensated_sum(&x);
    let ours = reduce_scalars(Exec::PARALLEL, &x).unwrap();
    assert!((ours - exact).abs() <= 1e-9 * exact.abs().max(1.0), "{ours} vs {exact}");
}

#[test]
fn results_are_bit_identical_across_worker_counts() {
    let profiles = random_profiles(3, 3000, 3, ProfileKind::Uniform).unwrap();
    let ds = synth_generate(3, &ModelParams::reference_truth(), &profiles).unwrap();
    let hp = default_hyperparams(3).unwrap();
    let cfg = VbConfig {
        max_iter: 20,
        ..VbConfig::default()
    };
    let (serial, _) = vb_fit(Exec::SERIAL, &ds, &hp, cfg).unwrap();
    for threads in [1, 2, 4, 7] {
        let (par, _) = pool(threads).install(|| vb_fit(Exec::PARALLEL, &ds, &hp, cfg)).unwrap();
        assert_eq!(par.k0k, serial.k0k);
        assert_eq!(par.b_rho, serial.b_rho);
        assert_eq!(par.lambda0l_inv, serial.lambda0l_inv);
        assert_eq!(par.mu_beta, serial.mu_beta);
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

fn reversed(n: usize) -> Vec<usize> {
    (0..n).rev().collect()
}

#[test]
fn gene_order_does_not_change_vb_or_em_estimates() {
    let profiles = random_profiles(4, 500, 3, ProfileKind::Uniform).unwrap();
    let ds = synth_generate(4, &ModelParams::reference_truth(), &profiles).unwrap();
    let order: Vec<usize> = {
        let mut o: Vec<usize> = (0..500).collect();
        let mut rng = RngStream::new(4, 1);
        for i in (1..o.len()).rev() {
            o.swap(i, rng.below(i + 1));
        }
        o
    };
    let shuffled = ds.permuted(&order);
    let hp = default_hyperparams(3).unwrap();
    let cfg = VbConfig {
        max_iter: 50,
        ..VbConfig::default()
    };
    let (a, _) = vb_fit(Exec::SERIAL, &ds, &hp, cfg).unwrap();
    let (b, _) = vb_fit(Exec::SERIAL, &shuffled, &hp, cfg).unwrap();
    assert!(close(a.k0k.as_slice(), b.k0k.as_slice(), 1e-12));
    assert!(close(a.lambda0l_inv.as_slice(), b.lambda0l_inv.as_slice(), 1e-12));
    assert_eq!(a.a_rho, b.a_rho);
    assert!(close(&[a.b_rho], &[b.b_rho], 1e-12));

    let init = em_default_init(&hp);
    let ea = em_fit(Exec::SERIAL, &ds, &init, EmConfig { max_iter: 50, rel_tol: 0.0 }).unwrap();
    let eb = em_fit(Exec::SERIAL, &shuffled, &init, EmConfig { max_iter: 50, rel_tol: 0.0 }).unwrap();
    assert!(close(ea.params.K.as_slice(), eb.params.K.as_slice(), 1e-10));
    assert!(close(&[ea.params.rho], &[eb.params.rho], 1e-10));
}

#[test]
fn gibbs_chain_follows_its_gene_streams_under_reordering() {
    let profiles = random_profiles(5, 40, 3, ProfileKind::Uniform).unwrap();
    let ds = synth_generate(5, &ModelParams::reference_truth(), &profiles).unwrap();
    let hp = default_hyperparams(3).unwrap();
    let order = reversed(40);
    let shuffled = ds.permuted(&order);
    let ids: Vec<u64> = order.iter().map(|&i| i as u64).collect();
    let mut sa = GibbsStreams::new(6, 40);
    let mut sb = GibbsStreams::with_gene_ids(6, &ids);
    let mut a = initial_state(&ds, &hp, GibbsInit::Prior, 6).unwrap();
    let mut b = initial_state(&shuffled, &hp, GibbsInit::Prior, 6).unwrap();
    for _ in 0..200 {
        a = gibbs_step(Exec::SERIAL, &mut sa, &a, &ds, &hp).unwrap();
        b = gibbs_step(Exec::SERIAL, &mut sb, &b, &shuffled, &hp).unwrap();
        assert!(close(a.K.as_slice(), b.K.as_slice(), 1e-9));
        assert!(close(&[a.rho], &[b.rho], 1e-9));
        for (j, &i) in order.iter().enumerate() {
            assert!(close(a.beta.item(i), b.beta.item(j), 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn batched_kernels_commute_with_batch_permutation(seed in 0u64..1000, n in 1usize..5, batch in 1usize..40) {
        let a = random_spd_batch(seed, batch, n);
        let order: Vec<usize> = (0..batch).rev().collect();
        let inv = inverse_batched(Exec::PARALLEL, &a).unwrap();
        let inv_p = inverse_batched(Exec::PARALLEL, &a.permuted(&order)).unwrap();
        prop_assert_eq!(inv.permuted(&order), inv_p);
        let ch = cholesky_batched(Exec::PARALLEL, &a).unwrap();
        prop_assert_eq!(ch.permuted(&order), cholesky_batched(Exec::PARALLEL, &a.permuted(&order)).unwrap());
    }

    #[test]
    fn double_inverse_and_triangular_factor(seed in 0u64..1000, n in 1usize..5) {
        let a = random_spd_batch(seed, 16, n);
        let back = inverse_batched(Exec::SERIAL, &inverse_batched(Exec::SERIAL, &a).unwrap()).unwrap();
        for i in 0..16 {
            let diff = back.get(i).sub(&a.get(i)).unwrap().frobenius_norm();
            prop_assert!(diff < 1e-9 * a.get(i).frobenius_norm());
        }
        let ch = cholesky_batched(Exec::SERIAL, &a).unwrap();
        for i in 0..16 {
            let l = ch.get(i);
            for r in 0..n {
                for c in r + 1..n {
                    prop_assert_eq!(l[(r, c)], 0.0);
                }
            }
        }
    }

    #[test]
    fn transform_is_invertible(rows in prop::collection::vec((-5.0f64..5.0, prop::collection::vec(0.0f64..1.0, 3)), 1..30)) {
        let records: Vec<RawRecord> = rows
            .iter()
            .map(|(r, d)| RawRecord { r: *r, profile: ExpressionProfile::new(d.clone()).unwrap() })
            .collect();
        let ds = transform(&records).unwrap();
        for (i, rec) in records.iter().enumerate() {
            let mu = ds.mu()[i];
            prop_assert_eq!(mu, rec.profile.values()[2]);
            for q in 0..2 {
                prop_assert!((ds.d().item(i)[q] + mu - rec.profile.values()[q]).abs() < 1e-15);
            }
        }
        prop_assert_eq!(ds.records(), records);
    }

    #[test]
    fn shifting_ratios_and_profiles_together_changes_nothing(shift in -3.0f64..3.0, seed in 0u64..100) {
        let profiles = random_profiles(seed, 20, 3, ProfileKind::Uniform).unwrap();
        let ds = synth_generate(seed, &ModelParams::reference_truth(), &profiles).unwrap();
        let moved: Vec<RawRecord> = ds
            .records()
            .into_iter()
            .map(|rec| RawRecord {
                r: rec.r + shift,
                profile: ExpressionProfile::new(rec.profile.values().iter().map(|v| v + shift).collect()).unwrap(),
            })
            .collect();
        let other = transform(&moved).unwrap();
        for i in 0..20 {
            prop_assert!((other.centered(i) - ds.centered(i)).abs() < 1e-12);
            prop_assert!(close(other.d().item(i), ds.d().item(i), 1e-12));
        }
    }
}
