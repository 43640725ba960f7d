//! Property checks over randomized discrete laws and proptest-driven
//! invariants of the block estimators.

use gmc_core::dist::random_discrete;
use gmc_core::estimators::{empirical_central_p_moment, median};
use gmc_core::tuner::embed_k;
use gmc_core::{derive_stream, ConeSpec, Distribution};
use proptest::prelude::*;

/// Draw exponents 1 <= p < r < q <= inf with r on the interpolation path.
fn exponent_triple(stream: &mut gmc_core::Stream) -> (f64, f64, f64, f64) {
    let p = 1.0 + 2.0 * stream.next_uniform();
    let q = if stream.next_uniform() < 0.2 {
        f64::INFINITY
    } else {
        p + 0.5 + 4.0 * stream.next_uniform()
    };
    let lambda = 0.1 + 0.8 * stream.next_uniform();
    let r = if q.is_infinite() {
        p / (1.0 - lambda)
    } else {
        1.0 / ((1.0 - lambda) / p + lambda / q)
    };
    (p, r, q, lambda)
}

#[test]
fn interpolation_inequalities_on_random_laws() {
    let mut stream = derive_stream(2024, 0);
    for _ in 0..1000 {
        let n_atoms = 2 + (stream.next_uniform() * 5.0) as usize;
        let d = random_discrete(&mut stream, n_atoms, 10.0);
        let (p, r, q, lambda) = exponent_triple(&mut stream);

        let rho_p = d.central_norm(p).unwrap();
        let rho_r = d.central_norm(r).unwrap();
        let rho_q = d.central_norm(q).unwrap();

        assert!(
            rho_p <= rho_r * (1.0 + 1e-9),
            "monotonicity failed: p={p}, r={r}: {rho_p} > {rho_r}"
        );
        let hoelder = rho_p.powf(1.0 - lambda) * rho_q.powf(lambda);
        assert!(
            rho_r <= hoelder * (1.0 + 1e-9),
            "log-convexity failed: p={p}, r={r}, q={q}: {rho_r} > {hoelder}"
        );
    }
}

#[test]
fn cone_embeddings_on_random_laws() {
    let mut stream = derive_stream(2025, 0);
    for _ in 0..1000 {
        let n_atoms = 2 + (stream.next_uniform() * 5.0) as usize;
        let d = random_discrete(&mut stream, n_atoms, 5.0);
        let p = 1.0 + 2.0 * stream.next_uniform();
        let q = if stream.next_uniform() < 0.25 {
            f64::INFINITY
        } else {
            p + 0.25 + 4.0 * stream.next_uniform()
        };

        // Put the law just inside the cone at its own norm ratio.
        let kappa = d.kappa(p, q).unwrap();
        let k = kappa * 1.000001;
        if !(k > 1.0) || !k.is_finite() {
            continue;
        }
        let cone = ConeSpec::new(p, q, k).unwrap();
        assert!(d.in_cone(&cone));

        let k1q = embed_k(&cone, 1.0, q).unwrap();
        assert!(
            d.in_cone(&ConeSpec::new(1.0, q, k1q).unwrap()),
            "(1, q) embedding failed for p={p}, q={q}, K={k}"
        );
        if q >= 2.0 {
            let k12 = embed_k(&cone, 1.0, 2.0).unwrap();
            assert!(
                d.in_cone(&ConeSpec::new(1.0, 2.0, k12).unwrap()),
                "(1, 2) embedding failed for p={p}, q={q}, K={k}"
            );
        }
    }
}

#[test]
fn bernoulli_norm_ratio_bound() {
    // kappa_{p,q}(a) <= a^{-(q-p)/(pq)} on (0, 1/2], exponent 1/p at
    // q = inf.
    for &a in &[0.01, 0.05, 0.1, 0.2, 0.25, 1.0 / 3.0, 0.4, 0.5] {
        let d = Distribution::bernoulli(a).unwrap();
        for &p in &[1.0, 1.5, 2.0, 3.0] {
            for &q in &[1.25, 2.0, 2.5, 4.0, f64::INFINITY] {
                if q <= p {
                    continue;
                }
                let kappa = d.kappa(p, q).unwrap();
                let expo = if q.is_infinite() {
                    1.0 / p
                } else {
                    (q - p) / (p * q)
                };
                let bound = a.powf(-expo);
                assert!(
                    kappa <= bound * (1.0 + 1e-12),
                    "a={a}, p={p}, q={q}: kappa {kappa} > {bound}"
                );
            }
        }
    }
}

#[test]
fn threshold_instances_sit_inside_their_cones() {
    let mut stream = derive_stream(2026, 0);
    for _ in 0..200 {
        let p = 1.0 + 2.0 * stream.next_uniform();
        let q = if stream.next_uniform() < 0.25 {
            f64::INFINITY
        } else {
            p + 0.25 + 4.0 * stream.next_uniform()
        };
        let k = 1.05 + 3.0 * stream.next_uniform();
        let cone = ConeSpec::new(p, q, k).unwrap();
        assert!(gmc_core::bernoulli_threshold_instance(&cone).in_cone(&cone));
    }
}

proptest! {
    #[test]
    fn scale_equivariance_of_central_moment(
        values in proptest::collection::vec(-100.0f64..100.0, 1..40),
        a in -8.0f64..8.0,
        p in 1.0f64..4.0,
    ) {
        let scaled: Vec<f64> = values.iter().map(|v| a * v).collect();
        let base = empirical_central_p_moment(&values, p).unwrap();
        let got = empirical_central_p_moment(&scaled, p).unwrap();
        let want = a.abs().powf(p) * base;
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn shift_invariance_of_central_moment(
        values in proptest::collection::vec(-100.0f64..100.0, 1..40),
        c in -50.0f64..50.0,
        p in 1.0f64..4.0,
    ) {
        let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
        let base = empirical_central_p_moment(&values, p).unwrap();
        let got = empirical_central_p_moment(&shifted, p).unwrap();
        prop_assert!((got - base).abs() <= 1e-10 * (1.0 + base.abs()));
    }

    #[test]
    fn median_is_permutation_invariant_and_a_member(
        values in proptest::collection::vec(-1000.0f64..1000.0, 1..30),
        seed in 0u64..1000,
    ) {
        prop_assume!(values.len() % 2 == 1);
        let med = median(&values).unwrap();
        prop_assert!(values.contains(&med));

        let mut shuffled = values.clone();
        let mut stream = derive_stream(seed, 0);
        for i in (1..shuffled.len()).rev() {
            let j = (stream.next_uniform() * (i + 1) as f64) as usize;
            shuffled.swap(i, j);
        }
        prop_assert_eq!(median(&shuffled).unwrap(), med);
    }

    #[test]
    fn kappa_invariant_under_affine_maps(
        seed in 0u64..5000,
        a in prop_oneof![(-6.0f64..-0.05), (0.05f64..6.0)],
        c in -20.0f64..20.0,
    ) {
        let mut stream = derive_stream(seed, 3);
        let d = random_discrete(&mut stream, 3, 5.0);
        let mapped = d.scale_shift(a, c).unwrap();
        let k0 = d.kappa(1.0, 2.0).unwrap();
        let k1 = mapped.kappa(1.0, 2.0).unwrap();
        prop_assert!((k0 - k1).abs() <= 1e-10 * (1.0 + k0));
    }
}
