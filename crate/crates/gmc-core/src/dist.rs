//! Distribution models with exact moment arithmetic and sampling.
//!
//! These carry the ground truth (mean, centered norms, cone membership)
//! that the experiment harness compares estimates against. Discrete laws
//! use exact sums; continuous families use closed forms where known and
//! adaptive quadrature (relative error <= 1e-10) otherwise.

use crate::error::{Error, Result};
use crate::estimators::{abs_pow, stable_sum};
use crate::quad;
use crate::streams::Stream;
use num_rational::Ratio;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf_inv;
use statrs::function::gamma::gamma;

const QUAD_REL_TOL: f64 = 1e-12;

/// The cone parameters `(p, q, K)`: random variables whose centered
/// `L_q`-norm is at most `K` times their centered `L_p`-norm.
///
/// `q = f64::INFINITY` is the supported sentinel for the essential-sup
/// norm; it serializes as the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConeSpecRaw")]
pub struct ConeSpec {
    pub p: f64,
    #[serde(serialize_with = "ser_q")]
    pub q: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

#[derive(Deserialize)]
struct ConeSpecRaw {
    p: f64,
    #[serde(deserialize_with = "de_q")]
    q: f64,
    #[serde(rename = "K")]
    k: f64,
}

impl TryFrom<ConeSpecRaw> for ConeSpec {
    type Error = Error;
    fn try_from(raw: ConeSpecRaw) -> Result<Self> {
        ConeSpec::new(raw.p, raw.q, raw.k)
    }
}

fn ser_q<S: Serializer>(q: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if q.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*q)
    }
}

fn de_q<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    struct QVisitor;
    impl Visitor<'_> for QVisitor {
        type Value = f64;
        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            write!(f, "a number or the string \"inf\"")
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
            Ok(v)
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
            match v {
                "inf" | "Inf" | "infinity" => Ok(f64::INFINITY),
                _ => Err(E::custom(format!("unrecognized q value {v:?}"))),
            }
        }
    }
    d.deserialize_any(QVisitor)
}

impl ConeSpec {
    pub fn new(p: f64, q: f64, k: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        if !(q > p) {
            return Err(Error::InvalidParameter(format!(
                "q must exceed p, got p = {p}, q = {q}"
            )));
        }
        if !(k > 1.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("K must exceed 1, got {k}")));
        }
        Ok(ConeSpec { p, q, k })
    }

    /// `min{q, 2}` — the effective integrability that drives the
    /// second-stage sample size.
    pub fn q_tilde(&self) -> f64 {
        self.q.min(2.0)
    }

    /// The exponent `p*q/(q-p)`, read as `p` when `q` is infinite.
    pub fn cone_exponent(&self) -> f64 {
        cone_exponent(self.p, self.q)
    }
}

pub(crate) fn cone_exponent(p: f64, q: f64) -> f64 {
    if q.is_infinite() {
        p
    } else {
        p * q / (q - p)
    }
}

/// A sampleable real random variable with exactly computable central
/// absolute moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "DistributionRaw")]
pub enum Distribution {
    /// Finite support `{(value, prob)}`; probs strictly positive, summing
    /// to 1 within 1e-12, values pairwise distinct.
    Discrete { atoms: Vec<(f64, f64)> },
    Normal { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Pareto { scale: f64, shape: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DistributionRaw {
    Discrete { atoms: Vec<(f64, f64)> },
    Normal { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Pareto { scale: f64, shape: f64 },
}

impl TryFrom<DistributionRaw> for Distribution {
    type Error = Error;
    fn try_from(raw: DistributionRaw) -> Result<Self> {
        match raw {
            DistributionRaw::Discrete { atoms } => Distribution::discrete(atoms),
            DistributionRaw::Normal { mu, sigma } => Distribution::normal(mu, sigma),
            DistributionRaw::Exponential { rate } => Distribution::exponential(rate),
            DistributionRaw::Lognormal { mu, sigma } => Distribution::lognormal(mu, sigma),
            DistributionRaw::Pareto { scale, shape } => Distribution::pareto(scale, shape),
        }
    }
}

impl Distribution {
    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("discrete law needs atoms".into()));
        }
        for &(v, p) in &atoms {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("atom value {v} not finite")));
            }
            if !(p > 0.0) || p > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "atom probability {p} not in (0, 1]"
                )));
            }
        }
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                if atoms[i].0 == atoms[j].0 {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate atom value {}",
                        atoms[i].0
                    )));
                }
            }
        }
        let total: f64 = stable_sum(atoms.iter().map(|&(_, p)| p));
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "atom probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Distribution::Discrete { atoms })
    }

    /// Discrete law from exact rational probabilities `(value, num/den)`.
    /// The sum-to-one check runs in exact integer arithmetic before the
    /// probabilities are converted to doubles.
    pub fn discrete_from_rationals(atoms: &[(f64, (i64, i64))]) -> Result<Self> {
        let mut total = Ratio::new(0i64, 1i64);
        for &(_, (num, den)) in atoms {
            if den == 0 {
                return Err(Error::InvalidParameter("zero denominator".into()));
            }
            if num * den <= 0 {
                return Err(Error::InvalidParameter(format!(
                    "probability {num}/{den} not positive"
                )));
            }
            total += Ratio::new(num, den);
        }
        if total != Ratio::new(1, 1) {
            return Err(Error::InvalidParameter(format!(
                "rational probabilities sum to {total}, expected 1"
            )));
        }
        Self::discrete(
            atoms
                .iter()
                .map(|&(v, (num, den))| (v, num as f64 / den as f64))
                .collect(),
        )
    }

    /// Point mass at `c`.
    pub fn constant(c: f64) -> Self {
        Distribution::Discrete {
            atoms: vec![(c, 1.0)],
        }
    }

    /// `P{Y = 1} = a`, `P{Y = 0} = 1 - a`.
    pub fn bernoulli(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "bernoulli parameter {a} not in (0, 1)"
            )));
        }
        Self::discrete(vec![(0.0, 1.0 - a), (1.0, a)])
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "normal requires sigma > 0, got mu = {mu}, sigma = {sigma}"
            )));
        }
        Ok(Distribution::Normal { mu, sigma })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exponential requires rate > 0, got {rate}"
            )));
        }
        Ok(Distribution::Exponential { rate })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lognormal requires sigma > 0, got mu = {mu}, sigma = {sigma}"
            )));
        }
        Ok(Distribution::Lognormal { mu, sigma })
    }

    pub fn pareto(scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0) || !(shape > 0.0) || !scale.is_finite() || !shape.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "pareto requires scale > 0 and shape > 0, got scale = {scale}, shape = {shape}"
            )));
        }
        Ok(Distribution::Pareto { scale, shape })
    }

    /// Exact expectation. Errors when the mean does not exist
    /// (pareto with shape <= 1).
    pub fn mean(&self) -> Result<f64> {
        match self {
            Distribution::Discrete { atoms } => {
                Ok(stable_sum(atoms.iter().map(|&(v, p)| v * p)))
            }
            Distribution::Normal { mu, .. } => Ok(*mu),
            Distribution::Exponential { rate } => Ok(1.0 / rate),
            Distribution::Lognormal { mu, sigma } => Ok((mu + 0.5 * sigma * sigma).exp()),
            Distribution::Pareto { scale, shape } => {
                if *shape <= 1.0 {
                    Err(Error::MeanUndefined(format!(
                        "pareto shape {shape} <= 1"
                    )))
                } else {
                    Ok(shape * scale / (shape - 1.0))
                }
            }
        }
    }

    /// Centered L_p-norm `rho_p = ||Y - EY||_p` for `p in [1, inf]`.
    /// `p = inf` returns the essential sup of `|Y - EY|`, which is
    /// `f64::INFINITY` for families with unbounded support.
    pub fn central_norm(&self, p: f64) -> Result<f64> {
        if p.is_infinite() {
            return self.essential_sup_deviation();
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!("moment order {p} < 1")));
        }
        let moment = self.central_abs_moment(p)?;
        Ok(moment.powf(1.0 / p))
    }

    /// `E|Y - EY|^p` for finite `p >= 1`.
    fn central_abs_moment(&self, p: f64) -> Result<f64> {
        let m = self.mean()?;
        match self {
            Distribution::Discrete { atoms } => Ok(stable_sum(
                atoms.iter().map(|&(v, pr)| pr * abs_pow(v - m, p)),
            )),
            Distribution::Normal { sigma, .. } => {
                // E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi) for Z ~ N(0,1)
                let half = gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
                Ok(sigma.powf(p) * 2f64.powf(p / 2.0) * half)
            }
            Distribution::Exponential { rate } => {
                let base = if p == 1.0 {
                    2.0 / std::f64::consts::E
                } else if p == 2.0 {
                    1.0
                } else {
                    // E|Y - 1/rate|^p = rate^{-p} (int_0^1 (1-u)^p e^{-u} du
                    //                              + Gamma(p+1)/e)
                    let head =
                        quad::integrate(&|u: f64| (1.0 - u).powf(p) * (-u).exp(), 0.0, 1.0, QUAD_REL_TOL);
                    head + gamma(p + 1.0) / std::f64::consts::E
                };
                Ok(base * rate.powf(-p))
            }
            Distribution::Lognormal { mu, sigma } => {
                if p == 2.0 {
                    let s2 = sigma * sigma;
                    return Ok((s2.exp() - 1.0) * (2.0 * mu + s2).exp());
                }
                let ln_mean = mu + 0.5 * sigma * sigma;
                let f = |z: f64| {
                    let a = mu + sigma * z;
                    // log |e^a - e^{ln_mean}| without overflow
                    let log_diff = if a > ln_mean {
                        a + (-((-(a - ln_mean)).exp())).ln_1p()
                    } else if a < ln_mean {
                        ln_mean + (-((-(ln_mean - a)).exp())).ln_1p()
                    } else {
                        return 0.0;
                    };
                    (p * log_diff - 0.5 * z * z).exp()
                };
                let hi = p.mul_add(*sigma, 44.0);
                let v = quad::integrate(&f, -44.0, hi, QUAD_REL_TOL);
                Ok(v / (2.0 * std::f64::consts::PI).sqrt())
            }
            Distribution::Pareto { scale, shape } => {
                if p >= *shape {
                    return Err(Error::MomentUndefined {
                        order: p,
                        reason: format!("pareto moment requires p < shape = {shape}"),
                    });
                }
                if p == 2.0 && *shape > 2.0 {
                    return Ok(shape * scale * scale
                        / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0)));
                }
                // E f(Y) = int_0^1 f(scale * u^{-1/shape}) du; substitute
                // u = t^c with c large enough to lift the endpoint
                // singularity u^{-p/shape}.
                let c = (2.0 / (1.0 - p / shape)).ceil() + 1.0;
                let ln_scale = scale.ln();
                let ln_mean = m.ln();
                let f = |t: f64| {
                    if t <= 0.0 {
                        return 0.0;
                    }
                    let lt = t.ln();
                    let w = ln_scale - (c / shape) * lt;
                    let log_diff = if w > ln_mean {
                        w + (-((-(w - ln_mean)).exp())).ln_1p()
                    } else if w < ln_mean {
                        ln_mean + (-((-(ln_mean - w)).exp())).ln_1p()
                    } else {
                        return 0.0;
                    };
                    c * (p * log_diff + (c - 1.0) * lt).exp()
                };
                Ok(quad::integrate(&f, 0.0, 1.0, QUAD_REL_TOL))
            }
        }
    }

    fn essential_sup_deviation(&self) -> Result<f64> {
        let m = self.mean()?;
        match self {
            Distribution::Discrete { atoms } => Ok(atoms
                .iter()
                .map(|&(v, _)| (v - m).abs())
                .fold(0.0, f64::max)),
            _ => Ok(f64::INFINITY),
        }
    }

    /// Norm ratio `kappa_{p,q} = ||Y - EY||_q / ||Y - EY||_p`.
    pub fn kappa(&self, p: f64, q: f64) -> Result<f64> {
        if !(p < q) {
            return Err(Error::InvalidParameter(format!(
                "kappa requires p < q, got p = {p}, q = {q}"
            )));
        }
        let rho_p = self.central_norm(p)?;
        if rho_p == 0.0 {
            return Err(Error::KappaUndefined);
        }
        let rho_q = self.central_norm(q)?;
        Ok(rho_q / rho_p)
    }

    /// `true` iff `rho_q <= K * rho_p`. Constant laws are members of every
    /// cone (0 <= 0); laws without a finite q-th moment are members of none.
    pub fn in_cone(&self, cone: &ConeSpec) -> bool {
        let rho_p = match self.central_norm(cone.p) {
            Ok(v) => v,
            Err(_) => return false,
        };
        let rho_q = match self.central_norm(cone.q) {
            Ok(v) => v,
            Err(_) => return false,
        };
        rho_q.is_finite() && rho_q <= cone.k * rho_p
    }

    /// Law of `a*Y + c`. Supported for discrete laws and for families
    /// closed under the requested map (location-scale for normal; pure
    /// scaling for exponential, lognormal, pareto).
    pub fn scale_shift(&self, a: f64, c: f64) -> Result<Self> {
        if !a.is_finite() || !c.is_finite() {
            return Err(Error::InvalidParameter("non-finite scale/shift".into()));
        }
        if a == 0.0 {
            return Ok(Distribution::constant(c));
        }
        match self {
            Distribution::Discrete { atoms } => Ok(Distribution::Discrete {
                atoms: atoms.iter().map(|&(v, p)| (a * v + c, p)).collect(),
            }),
            Distribution::Normal { mu, sigma } => Self::normal(a * mu + c, a.abs() * sigma),
            Distribution::Exponential { rate } => {
                if a > 0.0 && c == 0.0 {
                    Self::exponential(rate / a)
                } else {
                    Err(Error::UnsupportedScaleShift(
                        "exponential supports positive scaling only".into(),
                    ))
                }
            }
            Distribution::Lognormal { mu, sigma } => {
                if a > 0.0 && c == 0.0 {
                    Self::lognormal(mu + a.ln(), *sigma)
                } else {
                    Err(Error::UnsupportedScaleShift(
                        "lognormal supports positive scaling only".into(),
                    ))
                }
            }
            Distribution::Pareto { scale, shape } => {
                if a > 0.0 && c == 0.0 {
                    Self::pareto(a * scale, *shape)
                } else {
                    Err(Error::UnsupportedScaleShift(
                        "pareto supports positive scaling only".into(),
                    ))
                }
            }
        }
    }

    /// One draw. Discrete laws use inverse-CDF over the cumulative
    /// probabilities in atom order; continuous families use standard
    /// inverse/transform methods.
    pub fn sample(&self, stream: &mut Stream) -> f64 {
        match self {
            Distribution::Discrete { atoms } => {
                let u = stream.next_uniform();
                let mut cum = 0.0;
                for &(v, p) in atoms {
                    cum += p;
                    if u < cum {
                        return v;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            Distribution::Normal { mu, sigma } => {
                let u = stream.next_open_uniform();
                mu + sigma * std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0)
            }
            Distribution::Exponential { rate } => {
                let u = stream.next_uniform();
                -(1.0 - u).ln() / rate
            }
            Distribution::Lognormal { mu, sigma } => {
                let u = stream.next_open_uniform();
                (mu + sigma * std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0)).exp()
            }
            Distribution::Pareto { scale, shape } => {
                let u = stream.next_uniform();
                scale * (1.0 - u).powf(-1.0 / shape)
            }
        }
    }
}

/// Bernoulli instance sitting exactly at the membership threshold of the
/// cone: success probability `a = K^{-pq/(q-p)}` (`K^{-p}` when
/// `q = inf`), which guarantees `in_cone`.
///
/// Membership is only guaranteed for `a <= 1/2` (the norm ratio is
/// symmetric around 1/2), so the probability is capped there when the
/// cone is wide enough to push the formula past it.
pub fn bernoulli_threshold_instance(cone: &ConeSpec) -> Distribution {
    let a = cone.k.powf(-cone.cone_exponent()).min(0.5);
    Distribution::bernoulli(a).expect("threshold probability is in (0, 1) since K > 1")
}

/// Randomized discrete law with `n_atoms` distinct values, for
/// property-style checks. Deterministic given the stream state.
pub fn random_discrete(stream: &mut Stream, n_atoms: usize, spread: f64) -> Distribution {
    assert!(n_atoms >= 2);
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(n_atoms);
    let mut weights: Vec<f64> = Vec::with_capacity(n_atoms);
    for i in 0..n_atoms {
        // Jitter on top of a lattice keeps values pairwise distinct.
        let v = spread * (2.0 * stream.next_uniform() - 1.0) + i as f64 * 1e-7;
        let w = stream.next_uniform() + 1e-3;
        atoms.push((v, 0.0));
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    let n = atoms.len();
    let mut acc = 0.0;
    for (i, a) in atoms.iter_mut().enumerate() {
        if i + 1 == n {
            a.1 = 1.0 - acc;
        } else {
            a.1 = weights[i] / total;
            acc += a.1;
        }
    }
    Distribution::discrete(atoms).expect("generated atoms are valid")
}
