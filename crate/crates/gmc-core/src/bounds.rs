//! Closed-form lower-bound calculators (fixed cost, information bound for
//! sequential tests, worst case on cone-and-ball intersections) and the
//! adversarial two-point / five-point instances that witness them.

use crate::dist::{ConeSpec, Distribution};
use crate::error::{Error, Result};
use crate::util::pow_checked;
use serde::{Deserialize, Serialize};

/// Two distributions on a shared finite support whose means are
/// separated; distinguishing them lower-bounds the cost of any estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryPair {
    pub d1: Distribution,
    pub d2: Distribution,
    pub mean_gap: f64,
    pub validity: Validity,
}

/// The constraints under which the pair witnesses its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub constraints: Vec<String>,
}

fn atoms(d: &Distribution) -> &[(f64, f64)] {
    match d {
        Distribution::Discrete { atoms } => atoms,
        _ => unreachable!("adversary laws are discrete by construction"),
    }
}

impl AdversaryPair {
    fn new(d1: Distribution, d2: Distribution, constraints: Vec<String>) -> Result<Self> {
        let mean_gap = (d1.mean()? - d2.mean()?).abs();
        if !(mean_gap > 0.0) {
            return Err(Error::InvalidParameter(
                "adversary pair needs a positive mean gap".into(),
            ));
        }
        {
            let a1 = atoms(&d1);
            let a2 = atoms(&d2);
            let same_support = a1.len() == a2.len()
                && a1.iter().all(|(v, _)| a2.iter().any(|(w, _)| w == v));
            if !same_support {
                return Err(Error::InvalidParameter(
                    "adversary pair must share its support".into(),
                ));
            }
        }
        Ok(AdversaryPair {
            d1,
            d2,
            mean_gap,
            validity: Validity { constraints },
        })
    }

    /// Log probability ratio `ln(P1{y}/P2{y})` for a support point.
    pub(crate) fn log_ratio(&self, y: f64) -> f64 {
        let p1 = atoms(&self.d1)
            .iter()
            .find(|(v, _)| *v == y)
            .map(|(_, p)| *p)
            .expect("value drawn from the shared support");
        let p2 = atoms(&self.d2)
            .iter()
            .find(|(v, _)| *v == y)
            .map(|(_, p)| *p)
            .expect("value drawn from the shared support");
        (p1 / p2).ln()
    }
}

/// Fixed-cost floor for any method that succeeds on the whole cone:
/// `(1/(2 ln 2)) * K^{pq/(q-p)} * ln(1/delta)`.
pub fn fixed_cost_lb(cone: &ConeSpec, delta: f64) -> f64 {
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    pow_checked(cone.k, cone.cone_exponent()) * (1.0 / delta).ln() / (2.0 * 2f64.ln())
}

/// Worst-case cost floor on the cone intersected with a standard
/// deviation ball of radius `sigma`:
/// `(1/(4 ln 3)) (sigma/eps)^2 ln((4 delta / 3)^-1)`.
///
/// Valid for `0 < eps <= min{1 - 2/(K+1), 1/2} sigma` and `delta <= 1/4`.
pub fn wor_lb_variance(sigma: f64, epsilon: f64, delta: f64, k_cone: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::ConstraintViolated(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(k_cone > 1.0) {
        return Err(Error::ConstraintViolated(format!(
            "K must exceed 1, got {k_cone}"
        )));
    }
    let eps_max = (1.0 - 2.0 / (k_cone + 1.0)).min(0.5) * sigma;
    if !(epsilon > 0.0 && epsilon <= eps_max) {
        return Err(Error::ConstraintViolated(format!(
            "epsilon must lie in (0, min{{1 - 2/(K+1), 1/2}}*sigma] = (0, {eps_max}], got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::ConstraintViolated(format!(
            "delta must lie in (0, 1/4], got {delta}"
        )));
    }
    let ratio = sigma / epsilon;
    Ok(ratio * ratio * (3.0 / (4.0 * delta)).ln() / (4.0 * 3f64.ln()))
}

fn beta_of(k_cone: f64) -> f64 {
    0.5 * (1.0 - 3.0 / (1.0 + 2.0 * k_cone))
}

/// Worst-case cost floor on the cone intersected with a centered
/// `L_q`-ball of radius `tau`, for `1 < q <= 2`:
/// `c_{q,K} (tau/eps)^{1 + 1/(q-1)} ln((4 delta / 3)^-1)` with
/// `beta = (1/2)(1 - 3/(1+2K))` and
/// `c_{q,K} = (1/(beta ln 3)) (beta / (2(1+beta)))^{1 + 1/(q-1)}`.
pub fn wor_lb_qnorm(
    tau: f64,
    epsilon: f64,
    delta: f64,
    p: f64,
    q: f64,
    k_cone: f64,
) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::ConstraintViolated(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if !(p >= 1.0 && p < q && q > 1.0 && q <= 2.0) {
        return Err(Error::ConstraintViolated(format!(
            "requires 1 <= p < q <= 2 with q > 1, got p = {p}, q = {q}"
        )));
    }
    if !(k_cone > 1.0) {
        return Err(Error::ConstraintViolated(format!(
            "K must exceed 1, got {k_cone}"
        )));
    }
    let eps_max = (1.0 - 1.0 / k_cone) * tau / 6.0;
    if !(epsilon > 0.0 && epsilon <= eps_max) {
        return Err(Error::ConstraintViolated(format!(
            "epsilon must lie in (0, (1/6)(1 - 1/K)*tau] = (0, {eps_max}], got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::ConstraintViolated(format!(
            "delta must lie in (0, 1/4], got {delta}"
        )));
    }
    let beta = beta_of(k_cone);
    let expo = 1.0 + 1.0 / (q - 1.0);
    let c_qk = (beta / (2.0 * (1.0 + beta))).powf(expo) / (beta * 3f64.ln());
    Ok(c_qk * (tau / epsilon).powf(expo) * (3.0 / (4.0 * delta)).ln())
}

/// Information floor for any sequential test telling `d1` from `d2` at
/// confidence `1 - delta`:
/// `(1 - 2 delta) ln((1-delta)/delta) / |E ln r(Y)|` with the expectation
/// taken under `d1` (the constructed pairs are symmetric).
pub fn wald_lb(pair: &AdversaryPair, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::ConstraintViolated(format!(
            "delta must lie in (0, 1/2), got {delta}"
        )));
    }
    let divergence: f64 = atoms(&pair.d1)
        .iter()
        .map(|&(v, p)| p * pair.log_ratio(v))
        .sum();
    if divergence.abs() < 1e-300 {
        return Err(Error::IndistinguishableHypotheses);
    }
    Ok((1.0 - 2.0 * delta) * ((1.0 - delta) / delta).ln() / divergence.abs())
}

/// Antithetic pair on `{+sigma, -sigma}` with success probabilities
/// `(1 +/- alpha)/2`; both members lie in every cone `Y_{p,q,K}`
/// intersected with the `sigma` standard-deviation ball.
pub fn adversary_variance_pair(sigma: f64, alpha: f64, k_cone: f64) -> Result<AdversaryPair> {
    if !(sigma > 0.0) {
        return Err(Error::ConstraintViolated(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(k_cone > 1.0) {
        return Err(Error::ConstraintViolated(format!(
            "K must exceed 1, got {k_cone}"
        )));
    }
    let alpha_max = (1.0 - 2.0 / (k_cone + 1.0)).min(0.5);
    if !(alpha > 0.0 && alpha <= alpha_max) {
        return Err(Error::ConstraintViolated(format!(
            "alpha must lie in (0, min{{1 - 2/(K+1), 1/2}}] = (0, {alpha_max}], got {alpha}"
        )));
    }
    let p_plus = (1.0 + alpha) / 2.0;
    let p_minus = 1.0 - p_plus;
    let d1 = Distribution::discrete(vec![(-sigma, p_minus), (sigma, p_plus)])?;
    let d2 = Distribution::discrete(vec![(-sigma, p_plus), (sigma, p_minus)])?;
    AdversaryPair::new(
        d1,
        d2,
        vec![
            format!("0 < alpha <= min{{1 - 2/(K+1), 1/2}} = {alpha_max}"),
            format!("members of Y_(p,q,{k_cone}) for all 1 <= p < q <= inf"),
            format!("members of the centered L2 ball of radius sigma = {sigma}"),
        ],
    )
}

/// Five-point pair witnessing the `L_q`-ball lower bound: mass
/// `(1-beta)/2` at `+/-tau'`, `beta(1-gamma)` at 0, and antithetic masses
/// `3/4 beta gamma` vs `1/4 beta gamma` at `+/-gamma^{-1/q} tau'`, with
/// `gamma` just above the threshold that separates the means by `2 eps`.
pub fn adversary_qnorm_pair(
    tau: f64,
    epsilon: f64,
    p: f64,
    q: f64,
    k_cone: f64,
) -> Result<AdversaryPair> {
    if !(tau > 0.0) {
        return Err(Error::ConstraintViolated(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if !(p >= 1.0 && p < q && q > 1.0 && q <= 2.0) {
        return Err(Error::ConstraintViolated(format!(
            "requires 1 <= p < q <= 2 with q > 1, got p = {p}, q = {q}"
        )));
    }
    if !(k_cone > 1.0) {
        return Err(Error::ConstraintViolated(format!(
            "K must exceed 1, got {k_cone}"
        )));
    }
    let beta = beta_of(k_cone);
    let tau_prime = tau / (1.0 + beta);
    let eps_max = 0.5 * beta * tau_prime;
    if !(epsilon > 0.0 && epsilon < eps_max) {
        return Err(Error::ConstraintViolated(format!(
            "epsilon must lie in (0, beta*tau'/2) = (0, {eps_max}), got {epsilon}"
        )));
    }
    let expo = 1.0 + 1.0 / (q - 1.0);
    let gamma = (1.0 + 1e-6) * (2.0 * epsilon / (beta * tau_prime)).powf(expo);
    if !(gamma < 1.0) {
        return Err(Error::ConstraintViolated(
            "epsilon too close to the feasibility boundary: gamma >= 1".into(),
        ));
    }
    let big = gamma.powf(-1.0 / q) * tau_prime;
    let p_edge = (1.0 - beta) / 2.0;
    let p_hi = 0.75 * beta * gamma;
    let p_lo = 0.25 * beta * gamma;
    let p_zero = 1.0 - p_edge - p_edge - p_hi - p_lo;
    let d1 = Distribution::discrete(vec![
        (-big, p_lo),
        (-tau_prime, p_edge),
        (0.0, p_zero),
        (tau_prime, p_edge),
        (big, p_hi),
    ])?;
    let d2 = Distribution::discrete(vec![
        (-big, p_hi),
        (-tau_prime, p_edge),
        (0.0, p_zero),
        (tau_prime, p_edge),
        (big, p_lo),
    ])?;
    let pair = AdversaryPair::new(
        d1,
        d2,
        vec![
            format!("0 < epsilon < beta*tau'/2 = {eps_max}"),
            format!("beta = {beta}, tau' = {tau_prime}, gamma = {gamma}"),
            format!("members of Y_({p},{q},{k_cone}) inside the centered L{q} ball of radius {tau}"),
        ],
    )?;
    debug_assert!(pair.mean_gap > 2.0 * epsilon);
    Ok(pair)
}

/// Heavy two-point law `{(0, 1-a), (scale/a, a)}` with mean `scale`; its
/// norm ratio grows without bound as `a -> 0`, taking it outside every
/// fixed cone.
pub fn adversary_heavy(a: f64, scale: f64) -> Result<Distribution> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "a must lie in (0, 1), got {a}"
        )));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive, got {scale}"
        )));
    }
    Distribution::discrete(vec![(0.0, 1.0 - a), (scale / a, a)])
}
