//! Turns `(cone, epsilon, delta)` into a concrete two-stage plan, and
//! computes the explicit (constant-free) expected-cost upper bound.

use crate::dist::ConeSpec;
use crate::error::{Error, Result};
use crate::two_stage::{FirstStageEstimator, StagePlan};
use crate::util::{ceil_guarded, least_odd_geq, pow_checked};

/// Error threshold and confidence budget, with the uncertainty split
/// between the two stages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accuracy {
    pub epsilon: f64,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl Accuracy {
    /// Default 50/50 split of `delta` between the stages.
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        Self::with_split(epsilon, delta / 2.0, delta / 2.0)
    }

    pub fn with_split(epsilon: f64, delta1: f64, delta2: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(delta1 > 0.0) || !(delta2 > 0.0) {
            return Err(Error::InvalidParameter(
                "stage uncertainties must be positive".into(),
            ));
        }
        let delta = delta1 + delta2;
        if !(delta < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1/2), got {delta}"
            )));
        }
        Ok(Accuracy {
            epsilon,
            delta,
            delta1,
            delta2,
        })
    }
}

fn median_trick_bound(alpha: f64, delta_target: f64) -> f64 {
    2.0 * (1.0 / (2.0 * delta_target)).ln() / (1.0 / (4.0 * alpha * (1.0 - alpha))).ln()
}

/// Least odd `k` with `k >= 2 ln((2 delta_target)^-1) / ln((4 alpha (1-alpha))^-1)`,
/// at least 1. This is the replication count that amplifies a per-block
/// failure probability `alpha` down to `delta_target`.
pub fn median_trick_k(alpha: f64, delta_target: f64) -> u64 {
    assert!(
        alpha > 0.0 && alpha < 0.5,
        "alpha must lie in (0, 1/2), got {alpha}"
    );
    assert!(
        delta_target > 0.0 && delta_target < 0.5,
        "delta_target must lie in (0, 1/2), got {delta_target}"
    );
    least_odd_geq(median_trick_bound(alpha, delta_target))
}

/// The constant `K'` with `Y_{p,q,K}` contained in
/// `Y_{target_p, target_q, K'}`, for the reachable targets
/// `(1, q)`, `(1, 2)` (the latter requires `q >= 2`), and the identity.
pub fn embed_k(cone: &ConeSpec, target_p: f64, target_q: f64) -> Result<f64> {
    let (p, q, k) = (cone.p, cone.q, cone.k);
    if !(target_p >= 1.0 && target_p < target_q && target_q <= q) {
        return Err(Error::InvalidParameter(format!(
            "target ({target_p}, {target_q}) is not a valid sub-range of (1, {q})"
        )));
    }
    if target_p == p && target_q == q {
        return Ok(k);
    }
    if target_p == 1.0 && target_q == q {
        return Ok(if q.is_infinite() {
            k.powf(p)
        } else {
            k.powf(p * (q - 1.0) / (q - p))
        });
    }
    if target_p == 1.0 && target_q == 2.0 && q >= 2.0 {
        return Ok(if q.is_infinite() {
            k.powf(p / 2.0)
        } else {
            k.powf(p * q / (2.0 * (q - p)))
        });
    }
    Err(Error::InvalidParameter(format!(
        "embedding into ({target_p}, {target_q}) is not covered"
    )))
}

/// Default plan: first-moment estimate in stage one, replication counts
/// from the median trick at per-block failure 1/4, and the published
/// simplified constants for `m`, `s`, `eta` (gamma = 1/2).
///
/// `k` additionally respects the floor `max{4/(q-1), 4}` required by the
/// expected-cost analysis.
pub fn plan_default(cone: &ConeSpec, acc: &Accuracy) -> StagePlan {
    let kexp = pow_checked(cone.k, cone.cone_exponent());
    let qt = cone.q_tilde();
    let a = 1.0 / (qt - 1.0);

    let cost_floor = if cone.q.is_infinite() {
        4.0
    } else {
        (4.0 / (cone.q - 1.0)).max(4.0)
    };
    let k = least_odd_geq(median_trick_bound(0.25, acc.delta1).max(cost_floor));
    let k_prime = least_odd_geq(median_trick_bound(0.25, acc.delta2));

    let m = ceil_guarded(3.0 * pow_checked(48.0, a) * kexp) as u64;
    let s = 1.0 + a;
    let eta = pow_checked(16.0, a) * kexp * pow_checked(acc.epsilon, -(1.0 + a));

    StagePlan {
        moment_order: 1.0,
        k,
        m,
        k_prime,
        s,
        eta,
        gamma: 0.5,
        q_tilde: qt,
        first_stage: FirstStageEstimator::CentralMoment,
    }
}

/// Plan with explicit per-stage block-failure levels `alpha1`, `alpha2`
/// and relative moment accuracy `gamma`. At `alpha = 1/4`, `gamma = 1/2`
/// this reproduces `plan_default`.
pub fn plan_with(
    cone: &ConeSpec,
    acc: &Accuracy,
    alpha1: f64,
    alpha2: f64,
    gamma: f64,
) -> Result<StagePlan> {
    for (name, v) in [("alpha1", alpha1), ("alpha2", alpha2)] {
        if !(v > 0.0 && v < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in (0, 1/2), got {v}"
            )));
        }
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let kexp = pow_checked(cone.k, cone.cone_exponent());
    let qt = cone.q_tilde();
    let a = 1.0 / (qt - 1.0);

    let cost_floor = if cone.q.is_infinite() {
        4.0
    } else {
        (4.0 / (cone.q - 1.0)).max(4.0)
    };
    let k = least_odd_geq(median_trick_bound(alpha1, acc.delta1).max(cost_floor));
    let k_prime = least_odd_geq(median_trick_bound(alpha2, acc.delta2));

    let m = ceil_guarded((3.0 / (2.0 * gamma)) * pow_checked(6.0 / (gamma * alpha1), a) * kexp)
        as u64;
    let s = 1.0 + a;
    let eta = pow_checked(2.0, a - 1.0)
        / (pow_checked(alpha2, a) * pow_checked(1.0 - gamma, 1.0 + a))
        * kexp
        * pow_checked(acc.epsilon, -(1.0 + a));

    Ok(StagePlan {
        moment_order: 1.0,
        k,
        m,
        k_prime,
        s,
        eta,
        gamma,
        q_tilde: qt,
        first_stage: FirstStageEstimator::CentralMoment,
    })
}

/// Explicit upper bound on the expected total cost for an input in the
/// cone with first central moment `rho1`:
/// `k*m + k' * (1 + eta * (1 + 3*gamma)^s * rho1^s)`.
pub fn expected_cost_bound(plan: &StagePlan, rho1: f64) -> f64 {
    let moment_term = if rho1 == 0.0 {
        0.0
    } else {
        pow_checked(rho1, plan.s)
    };
    (plan.k * plan.m) as f64
        + plan.k_prime as f64
            * (1.0 + plan.eta * pow_checked(1.0 + 3.0 * plan.gamma, plan.s) * moment_term)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(p: f64, q: f64, k: f64) -> ConeSpec {
        ConeSpec::new(p, q, k).unwrap()
    }

    #[test]
    fn median_trick_examples() {
        assert_eq!(median_trick_k(0.25, 0.05), 17);
        assert_eq!(median_trick_k(0.25, 0.025), 21);
        assert_eq!(median_trick_k(0.25, 0.245), 5);
    }

    #[test]
    fn embed_examples() {
        let c = cone(2.0, 4.0, 3.0);
        assert!((embed_k(&c, 1.0, 2.0).unwrap() - 9.0).abs() < 1e-12);

        let cinf = cone(2.0, f64::INFINITY, 3.0);
        assert!((embed_k(&cinf, 1.0, 2.0).unwrap() - 3.0).abs() < 1e-12);

        let c12 = cone(1.0, 2.0, 2.5);
        assert_eq!(embed_k(&c12, 1.0, 2.0).unwrap(), 2.5);

        assert!(embed_k(&c, 1.5, 3.0).is_err());
        assert!(embed_k(&c12, 1.0, 4.0).is_err());
    }

    #[test]
    fn plan_examples() {
        let acc = Accuracy::new(0.1, 0.1).unwrap();
        let plan = plan_default(&cone(1.0, 2.0, 2.0), &acc);
        assert_eq!(plan.k, 17);
        assert_eq!(plan.k_prime, 17);
        assert_eq!(plan.m, 576);
        assert_eq!(plan.s, 2.0);
        assert_eq!(plan.eta, 6400.0);
        assert_eq!(plan.moment_order, 1.0);
        assert_eq!(plan.gamma, 0.5);
        assert_eq!(plan.q_tilde, 2.0);

        let acc2 = Accuracy::new(0.5, 0.1).unwrap();
        let plan2 = plan_default(&cone(1.0, 1.5, 2.0), &acc2);
        assert_eq!(plan2.m, 55296);
        assert_eq!(plan2.s, 3.0);
        assert_eq!(plan2.eta, 16384.0);
        assert_eq!(plan2.k, 17);
        assert_eq!(plan2.k_prime, 17);

        let plan3 = plan_default(&cone(2.0, f64::INFINITY, 2.0), &acc);
        assert_eq!(plan3.m, 576);
        assert_eq!(plan3.s, 2.0);
        assert_eq!(plan3.eta, 6400.0);
    }

    #[test]
    fn plan_with_defaults_matches_plan_default() {
        let acc = Accuracy::new(0.1, 0.1).unwrap();
        for c in [
            cone(1.0, 2.0, 2.0),
            cone(1.0, 1.5, 2.0),
            cone(2.0, 4.0, 3.0),
            cone(2.0, f64::INFINITY, 2.0),
        ] {
            let d = plan_default(&c, &acc);
            let w = plan_with(&c, &acc, 0.25, 0.25, 0.5).unwrap();
            assert_eq!(d.k, w.k);
            assert_eq!(d.k_prime, w.k_prime);
            assert_eq!(d.m, w.m);
            assert_eq!(d.s, w.s);
            assert!((d.eta - w.eta).abs() <= 1e-9 * d.eta, "{c:?}");
        }
    }

    #[test]
    fn cost_bound_examples() {
        let acc = Accuracy::new(0.1, 0.1).unwrap();
        let plan = plan_default(&cone(1.0, 2.0, 2.0), &acc);
        assert_eq!(expected_cost_bound(&plan, 1.0), 689_809.0);
        assert_eq!(expected_cost_bound(&plan, 0.375), 105_434.0);
        let floor = (plan.k * plan.m + plan.k_prime) as f64;
        assert!(expected_cost_bound(&plan, 0.0) >= floor);
    }

    #[test]
    fn branch_consistency_at_q_two() {
        // The two published parameter branches coincide at q = 2.
        let a = 1.0 / (2.0 - 1.0);
        assert_eq!(3.0 * 48f64.powf(a), 144.0);
        assert_eq!(16f64.powf(a), 16.0);
        assert_eq!(1.0 + a, 2.0);
    }

    #[test]
    fn eta_matches_embedded_second_stage_constant() {
        // eta for a general cone equals the single-stage formula evaluated
        // at the embedding constant into (1, min{q,2}).
        let acc = Accuracy::new(0.2, 0.1).unwrap();
        for c in [
            cone(1.0, 1.5, 2.0),
            cone(1.25, 1.75, 3.0),
            cone(2.0, 4.0, 2.0),
            cone(1.5, 3.0, 4.0),
            cone(2.0, f64::INFINITY, 2.0),
        ] {
            let plan = plan_default(&c, &acc);
            let qt = c.q_tilde();
            let a = 1.0 / (qt - 1.0);
            let kp = embed_k(&c, 1.0, qt).unwrap();
            let eta_embedded = 16f64.powf(a) * kp.powf(1.0 + a) * acc.epsilon.powf(-(1.0 + a));
            assert!(
                (plan.eta - eta_embedded).abs() <= 1e-9 * plan.eta,
                "{c:?}: {} vs {}",
                plan.eta,
                eta_embedded
            );
        }
    }

    #[test]
    fn k_satisfies_both_floors() {
        let acc = Accuracy::new(0.1, 0.4).unwrap();
        for c in [cone(1.0, 1.1, 2.0), cone(1.0, 1.5, 2.0), cone(1.0, 9.0, 2.0)] {
            let plan = plan_default(&c, &acc);
            assert_eq!(plan.k % 2, 1);
            assert!(plan.k as f64 >= (4.0 / (c.q - 1.0)).max(4.0));
            assert!(plan.k as f64 >= median_trick_bound(0.25, acc.delta1));
        }
    }

    #[test]
    fn cost_bound_monotone() {
        let deltas = 0.1;
        let rho_grid = [0.0, 0.1, 0.5, 1.0, 3.0];
        for q in [1.5, 2.0, 4.0] {
            let mut last = 0.0;
            for k in [1.5, 2.0, 4.0] {
                let plan = plan_default(&cone(1.0, q, k), &Accuracy::new(0.1, deltas).unwrap());
                let b = expected_cost_bound(&plan, 1.0);
                assert!(b >= last, "not monotone in K at q = {q}");
                last = b;
            }
            let mut last = f64::INFINITY;
            for eps in [0.05, 0.1, 0.2, 0.4] {
                let plan = plan_default(&cone(1.0, q, 2.0), &Accuracy::new(eps, deltas).unwrap());
                let b = expected_cost_bound(&plan, 1.0);
                assert!(b <= last, "not monotone in 1/eps at q = {q}");
                last = b;
            }
            let plan = plan_default(&cone(1.0, q, 2.0), &Accuracy::new(0.1, deltas).unwrap());
            let mut last = 0.0;
            for rho in rho_grid {
                let b = expected_cost_bound(&plan, rho);
                assert!(b >= last, "not monotone in rho1 at q = {q}");
                last = b;
            }
        }
    }
}
