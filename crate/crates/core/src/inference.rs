//! Statistics of the short-term mean, switching-class size estimation, the
//! threshold decision rule and the Bayesian observation model.
//!
//! The short-term mean of an epoch is treated as uniform over its attainable
//! range `[(n_a - n_b - n_c)/N, (n_a - n_b + n_c)/N]`, which gives
//!
//! ```text
//! E[mean]   = (n_a - n_b) / N
//! E[mean^2] = (3 n_a^2 + 3 n_b^2 + n_c^2 - 6 n_a n_b) / (3 N^2)
//! Var[mean] = n_c^2 / (3 N^2)
//! ```
//!
//! A count-based simulator only reaches the `n_c + 1` discrete means, whose
//! variance under a uniform `s` is `n_c (n_c + 2) / (3 N^2)`; both forms are
//! provided.

use crate::model::{Outcome, Rational, SetConfig};
use crate::sampler::{evolve_with_rng, SamplerError, SwitchPolicy};
use num_integer::Roots;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("cannot decide on an empty series")]
    EmptySeries,
    #[error("expected mean is zero, so there is no ground-truth hypothesis")]
    NoGroundTruth,
    #[error("at least one replicate is required")]
    NoReplicates,
    #[error("observed variance must be finite and non-negative, got {0}")]
    InvalidVariance(f64),
    #[error("invalid confusion model: {0}")]
    InvalidModel(String),
    #[error("observation {0} has zero probability under the model")]
    ZeroProbabilityObservation(Outcome),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// First two moments and variance of the short-term mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentReport {
    pub mean: Rational,
    pub mean_square: Rational,
    pub variance: Rational,
}

fn counts(config: &SetConfig) -> (i128, i128, i128, i128) {
    (
        i128::from(config.n_a()),
        i128::from(config.n_b()),
        i128::from(config.n_c()),
        i128::from(config.total()),
    )
}

/// `(n_a - n_b) / N`.
pub fn expected_mean(config: &SetConfig) -> Rational {
    let (a, b, _, n) = counts(config);
    Rational::new(a - b, n)
}

/// `(3 n_a^2 + 3 n_b^2 + n_c^2 - 6 n_a n_b) / (3 N^2)`.
pub fn mean_square(config: &SetConfig) -> Rational {
    let (a, b, c, n) = counts(config);
    Rational::new(3 * a * a + 3 * b * b + c * c - 6 * a * b, 3 * n * n)
}

/// `n_c^2 / (3 N^2)`; independent of how the stable elements split.
pub fn variance_mean(config: &SetConfig) -> Rational {
    let (_, _, c, n) = counts(config);
    Rational::new(c * c, 3 * n * n)
}

/// Variance of the epoch mean when `s` is uniform on `0..=n_c`:
/// `n_c (n_c + 2) / (3 N^2)`.
pub fn discrete_variance_mean(config: &SetConfig) -> Rational {
    let (_, _, c, n) = counts(config);
    Rational::new(c * (c + 2), 3 * n * n)
}

pub fn moments(config: &SetConfig) -> MomentReport {
    MomentReport {
        mean: expected_mean(config),
        mean_square: mean_square(config),
        variance: variance_mean(config),
    }
}

/// Switching-class size recovered from an observed variance of the epoch
/// mean, under both sampling models. Each value is clamped to `[0, N]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingEstimate {
    /// Inverse of `n_c^2 / (3 N^2)`: `N * sqrt(3 v)`.
    pub continuous: f64,
    /// Inverse of `n_c (n_c + 2) / (3 N^2)`: `sqrt(1 + 3 N^2 v) - 1`.
    pub discrete: f64,
}

// Square root of a non-negative rational, exact when both parts are squares.
fn rational_sqrt(r: &Rational) -> Rational {
    let (num, den) = (*r.numer(), *r.denom());
    let (rn, rd) = (num.sqrt(), den.sqrt());
    if rn * rn == num && rd * rd == den {
        Rational::new(rn, rd)
    } else {
        Rational::approximate_float(r.to_f64().unwrap_or(0.0).sqrt()).unwrap_or_else(Rational::zero)
    }
}

fn clamp_count(x: f64, n: u64) -> f64 {
    x.clamp(0.0, n as f64)
}

/// Estimates `n_c` from an exact variance value. Perfect-square inputs
/// (such as [`variance_mean`] of a real configuration) invert exactly.
pub fn estimate_switching_count(
    observed_variance: &Rational,
    n: u64,
) -> Result<SwitchingEstimate, InferenceError> {
    if *observed_variance < Rational::zero() {
        return Err(InferenceError::InvalidVariance(
            observed_variance.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let big_n = Rational::from_integer(i128::from(n));
    let continuous = big_n * rational_sqrt(&(Rational::from_integer(3) * observed_variance));
    let discrete = rational_sqrt(
        &(Rational::from_integer(1)
            + Rational::from_integer(3) * big_n * big_n * observed_variance),
    ) - Rational::from_integer(1);
    Ok(SwitchingEstimate {
        continuous: clamp_count(continuous.to_f64().unwrap_or(f64::NAN), n),
        discrete: clamp_count(discrete.to_f64().unwrap_or(f64::NAN), n),
    })
}

/// Floating-point variant of [`estimate_switching_count`] for empirical
/// variances.
pub fn estimate_switching_count_f64(
    observed_variance: f64,
    n: u64,
) -> Result<SwitchingEstimate, InferenceError> {
    if !observed_variance.is_finite() || observed_variance < 0.0 {
        return Err(InferenceError::InvalidVariance(observed_variance));
    }
    let nf = n as f64;
    Ok(SwitchingEstimate {
        continuous: clamp_count(nf * (3.0 * observed_variance).sqrt(), n),
        discrete: clamp_count((1.0 + 3.0 * nf * nf * observed_variance).sqrt() - 1.0, n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    A,
    B,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::A => "A",
            Hypothesis::B => "B",
        })
    }
}

/// Threshold rule: A when the signed sum is non-negative, B otherwise.
pub fn decide_from_sum(sum: i128) -> Hypothesis {
    if sum >= 0 {
        Hypothesis::A
    } else {
        Hypothesis::B
    }
}

/// Applies the threshold rule to a series of `±1` observations.
pub fn threshold_decide(series: &[Outcome]) -> Result<Hypothesis, InferenceError> {
    if series.is_empty() {
        return Err(InferenceError::EmptySeries);
    }
    Ok(decide_from_sum(
        series.iter().map(|o| i128::from(o.value())).sum(),
    ))
}

/// How often each hypothesis was chosen over independent replicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionTally {
    pub replicates: u64,
    pub chose_a: u64,
    pub chose_b: u64,
}

impl DecisionTally {
    pub fn frequency_a(&self) -> f64 {
        self.chose_a as f64 / self.replicates as f64
    }
}

/// Generator for replicate `index` under `seed`: the seeded ChaCha8 stream
/// number `index`, so replicates are independent and order-free.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates `replicates` independent series and applies the threshold
/// rule to the pooled draws of each. Deterministic given `seed`.
pub fn decision_tally(
    config: &SetConfig,
    policy: &SwitchPolicy,
    draws: u64,
    epochs: u64,
    replicates: u64,
    seed: u64,
) -> Result<DecisionTally, InferenceError> {
    if replicates == 0 {
        return Err(InferenceError::NoReplicates);
    }
    let decisions = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(seed, rep);
            let obs = evolve_with_rng(config, policy, epochs, draws, &mut rng)?;
            Ok(decide_from_sum(obs.iter().map(|e| e.signed_sum()).sum()))
        })
        .collect::<Result<Vec<_>, SamplerError>>()?;
    let chose_a = decisions.iter().filter(|&&h| h == Hypothesis::A).count() as u64;
    Ok(DecisionTally {
        replicates,
        chose_a,
        chose_b: replicates - chose_a,
    })
}

/// Hypothesis implied by the sign of the expected mean, if it is nonzero.
pub fn ground_truth(config: &SetConfig) -> Option<Hypothesis> {
    let m = expected_mean(config);
    if m.is_zero() {
        None
    } else if m > Rational::zero() {
        Some(Hypothesis::A)
    } else {
        Some(Hypothesis::B)
    }
}

/// Fraction of replicates whose pooled decision contradicts the sign of the
/// expected mean.
pub fn decision_error_rate(
    config: &SetConfig,
    policy: &SwitchPolicy,
    draws: u64,
    epochs: u64,
    replicates: u64,
    seed: u64,
) -> Result<f64, InferenceError> {
    let truth = ground_truth(config).ok_or(InferenceError::NoGroundTruth)?;
    let tally = decision_tally(config, policy, draws, epochs, replicates, seed)?;
    let wrong = match truth {
        Hypothesis::A => tally.chose_b,
        Hypothesis::B => tally.chose_a,
    };
    Ok(wrong as f64 / replicates as f64)
}

/// Source class of an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    A,
    B,
    C,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::A, Source::B, Source::C];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::A => "A",
            Source::B => "B",
            Source::C => "C",
        })
    }
}

fn outcome_index(o: Outcome) -> usize {
    match o {
        Outcome::A => 0,
        Outcome::B => 1,
    }
}

const MODEL_TOLERANCE: f64 = 1e-9;

/// Priors over the three source classes and the likelihood of each observed
/// label given the source. Rows are ordered A, B, C; columns A, B.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct ConfusionModel {
    priors: [f64; 3],
    likelihoods: [[f64; 2]; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    priors: [f64; 3],
    likelihoods: [[f64; 2]; 3],
}

impl TryFrom<RawModel> for ConfusionModel {
    type Error = InferenceError;

    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        ConfusionModel::new(raw.priors, raw.likelihoods)
    }
}

impl ConfusionModel {
    pub fn new(priors: [f64; 3], likelihoods: [[f64; 2]; 3]) -> Result<Self, InferenceError> {
        let in_unit = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
        if !priors.iter().all(|&p| in_unit(p)) {
            return Err(InferenceError::InvalidModel(
                "priors must lie in [0, 1]".into(),
            ));
        }
        if (priors.iter().sum::<f64>() - 1.0).abs() > MODEL_TOLERANCE {
            return Err(InferenceError::InvalidModel("priors must sum to 1".into()));
        }
        for (row, source) in likelihoods.iter().zip(Source::ALL) {
            if !row.iter().all(|&p| in_unit(p)) {
                return Err(InferenceError::InvalidModel(format!(
                    "likelihoods for source {source} must lie in [0, 1]"
                )));
            }
            if (row[0] + row[1] - 1.0).abs() > MODEL_TOLERANCE {
                return Err(InferenceError::InvalidModel(format!(
                    "likelihoods for source {source} must sum to 1"
                )));
            }
        }
        Ok(Self {
            priors,
            likelihoods,
        })
    }

    /// Builds a model from `p(A_o | source)` for each source.
    pub fn from_a_likelihoods(priors: [f64; 3], p_a: [f64; 3]) -> Result<Self, InferenceError> {
        Self::new(priors, p_a.map(|p| [p, 1.0 - p]))
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn prior(&self, source: Source) -> f64 {
        self.priors[source.index()]
    }

    pub fn likelihood(&self, observed: Outcome, source: Source) -> f64 {
        self.likelihoods[source.index()][outcome_index(observed)]
    }
}

/// Total probability of observing `observed`.
pub fn observation_probability(model: &ConfusionModel, observed: Outcome) -> f64 {
    Source::ALL
        .iter()
        .map(|&s| model.likelihood(observed, s) * model.prior(s))
        .sum()
}

/// Posterior over source classes after one observation, indexed A, B, C.
pub fn posterior_source(
    model: &ConfusionModel,
    observed: Outcome,
) -> Result<[f64; 3], InferenceError> {
    let evidence = observation_probability(model, observed);
    if evidence <= 0.0 {
        return Err(InferenceError::ZeroProbabilityObservation(observed));
    }
    Ok(Source::ALL.map(|s| model.likelihood(observed, s) * model.prior(s) / evidence))
}
