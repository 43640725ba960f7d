//! The two-stage estimator: stage one estimates a central moment by a
//! median of `k` block estimates from `k*m` draws; stage two sizes a
//! median-of-means estimator as `m' = max{ceil(eta * R^s), 1}` blocks of
//! fresh draws and returns the median of the `k'` block means.

use crate::dist::{ConeSpec, Distribution};
use crate::error::Result;
use crate::estimators::{empirical_mean, median, BlockStatistic};
use crate::streams::{derive_stream, Stream};
use crate::tuner::{plan_default, Accuracy};
use crate::util::{ceil_guarded, pow_checked};
use serde::{Deserialize, Serialize};

/// Statistic evaluated per block in stage one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstStageEstimator {
    /// Empirical central absolute moment of order `moment_order`.
    #[default]
    CentralMoment,
    /// Unbiased sample variance (divisor m-1); requires `m >= 2`.
    UnbiasedVariance,
}

/// Full parameter set of one two-stage run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    /// Moment order used by stage one (default 1).
    pub moment_order: f64,
    /// Stage-one replication count (odd).
    pub k: u64,
    /// Stage-one block size.
    pub m: u64,
    /// Stage-two replication count (odd).
    pub k_prime: u64,
    /// Exponent in the stage-two size rule.
    pub s: f64,
    /// Inflation factor in the stage-two size rule.
    pub eta: f64,
    /// Relative moment accuracy budgeted to stage one.
    pub gamma: f64,
    /// Effective integrability min{q, 2}.
    pub q_tilde: f64,
    #[serde(default)]
    pub first_stage: FirstStageEstimator,
}

impl StagePlan {
    fn stage_one_statistic(&self) -> BlockStatistic {
        match self.first_stage {
            FirstStageEstimator::CentralMoment => BlockStatistic::CentralMoment(self.moment_order),
            FirstStageEstimator::UnbiasedVariance => BlockStatistic::UnbiasedVariance,
        }
    }
}

/// Outcome of one execution, including exact stage costs and the seed
/// that reproduces it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub estimate: f64,
    pub r_hat: f64,
    pub m_prime: u64,
    pub n1: u64,
    pub n2: u64,
    pub total_cost: u64,
    pub master_seed: u64,
    pub lane_index: u64,
}

/// `max{ceil(eta * r_hat^s), 1}` with the conservative integer guard.
pub(crate) fn stage_two_block_size(eta: f64, s: f64, r_hat: f64) -> u64 {
    let x = eta * if r_hat == 0.0 { 0.0 } else { pow_checked(r_hat, s) };
    (ceil_guarded(x).max(1.0)) as u64
}

/// Execute the two-stage algorithm, drawing i.i.d. values from `draw`.
///
/// Consumes exactly `k*m` draws in stage one and `k'*m'` fresh draws in
/// stage two, in stream order; always terminates since the realized
/// moment estimate is finite.
pub fn run(
    plan: &StagePlan,
    mut draw: impl FnMut(&mut Stream) -> f64,
    stream: &mut Stream,
) -> Result<RunRecord> {
    let k = plan.k as usize;
    let m = plan.m as usize;
    let stat = plan.stage_one_statistic();

    let mut block = vec![0.0f64; m];
    let mut stage_one = Vec::with_capacity(k);
    for _ in 0..k {
        for slot in block.iter_mut() {
            *slot = draw(stream);
        }
        stage_one.push(stat.eval(&block)?);
    }
    let r_hat = median(&stage_one)?;

    let m_prime = stage_two_block_size(plan.eta, plan.s, r_hat);
    let k_prime = plan.k_prime as usize;
    let mut block2 = vec![0.0f64; m_prime as usize];
    let mut stage_two = Vec::with_capacity(k_prime);
    for _ in 0..k_prime {
        for slot in block2.iter_mut() {
            *slot = draw(stream);
        }
        stage_two.push(empirical_mean(&block2)?);
    }
    let estimate = median(&stage_two)?;

    let n1 = plan.k * plan.m;
    let n2 = plan.k_prime * m_prime;
    Ok(RunRecord {
        estimate,
        r_hat,
        m_prime,
        n1,
        n2,
        total_cost: n1 + n2,
        master_seed: stream.master_seed(),
        lane_index: stream.lane_index(),
    })
}

/// Estimate `E Y` for a modelled distribution with the default plan for
/// `(cone, epsilon, delta)`.
///
/// The cone membership of `dist` is not enforced; the accuracy guarantee
/// only holds on the cone, and callers may deliberately violate it.
pub fn estimate_mean(
    dist: &Distribution,
    cone: &ConeSpec,
    epsilon: f64,
    delta: f64,
    master_seed: u64,
    lane_index: u64,
) -> Result<RunRecord> {
    let acc = Accuracy::new(epsilon, delta)?;
    let plan = plan_default(cone, &acc);
    let mut stream = derive_stream(master_seed, lane_index);
    run(&plan, |s| dist.sample(s), &mut stream)
}

/// Monte Carlo integration, reduced to mean estimation over the composed
/// experiment `omega -> integrand(point_sampler(omega))`.
pub fn integrate<P>(
    integrand: impl Fn(&P) -> f64,
    mut point_sampler: impl FnMut(&mut Stream) -> P,
    cone: &ConeSpec,
    epsilon: f64,
    delta: f64,
    master_seed: u64,
    lane_index: u64,
) -> Result<RunRecord> {
    let acc = Accuracy::new(epsilon, delta)?;
    let plan = plan_default(cone, &acc);
    let mut stream = derive_stream(master_seed, lane_index);
    run(&plan, |s| integrand(&point_sampler(s)), &mut stream)
}
