//! Seeded simulation of the observation process.
//!
//! Within an epoch the switching membership is frozen: `s` of the `n_c`
//! switching elements project as A. Each draw picks one of the `N` elements
//! uniformly with replacement. Between epochs `s` evolves by one step of a
//! [`SwitchPolicy`].
//!
//! Every random stream comes from [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`; the algorithm identifier is recorded in each
//! [`SampleSeries`].

use crate::dynamics::{DynamicsError, SchemeSpec};
use crate::format::sig12;
use crate::model::{epoch_mean, ModelError, Rational, SetConfig};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use std::io;
use thiserror::Error;

/// Identifier of the generator behind every seeded stream in this crate.
pub const RNG_ALGORITHM: &str = "chacha8";

/// CSV header written by [`SampleSeries::write_csv`].
pub const SERIES_HEADER: [&str; 6] = ["epoch", "s", "draws", "count_a", "count_b", "mean"];

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("draws per epoch must be at least 1")]
    NoDraws,
    #[error("at least one epoch is required")]
    NoEpochs,
    #[error("probability pi_a = {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("scheme modulus {modulus} must equal n_c + 1 = {expected}")]
    ModulusMismatch { modulus: u64, expected: u64 },
    #[error("policy was built for n_c = {policy} but the population has n_c = {config}")]
    PolicyMismatch { policy: u64, config: u64 },
    #[error("series CSV line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Builds the generator used for a given seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchRule {
    /// `s` advances by one step of a modular scheme.
    Scheme(SchemeSpec),
    /// Each switching element independently projects as A with `pi_a`.
    IndependentRandom { pi_a: f64 },
}

/// How the switching count evolves from one epoch to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchPolicy {
    rule: SwitchRule,
    n_c: u64,
    initial_s: u64,
}

impl SwitchPolicy {
    /// Scheme-driven policy. The scheme's state space must coincide with the
    /// possible switching counts, so its modulus has to be `n_c + 1`.
    pub fn scheme(n_c: u64, scheme: SchemeSpec, initial_s: u64) -> Result<Self, SamplerError> {
        let expected = n_c + 1;
        if scheme.modulus() != expected {
            return Err(SamplerError::ModulusMismatch {
                modulus: scheme.modulus(),
                expected,
            });
        }
        check_s(n_c, initial_s)?;
        Ok(Self {
            rule: SwitchRule::Scheme(scheme),
            n_c,
            initial_s,
        })
    }

    pub fn random(n_c: u64, pi_a: f64, initial_s: u64) -> Result<Self, SamplerError> {
        if !(0.0..=1.0).contains(&pi_a) {
            return Err(SamplerError::InvalidProbability(pi_a));
        }
        check_s(n_c, initial_s)?;
        Ok(Self {
            rule: SwitchRule::IndependentRandom { pi_a },
            n_c,
            initial_s,
        })
    }

    pub fn rule(&self) -> SwitchRule {
        self.rule
    }

    pub fn n_c(&self) -> u64 {
        self.n_c
    }

    pub fn initial_s(&self) -> u64 {
        self.initial_s
    }

    /// Short human-readable description, e.g. `scheme(multiplicative k=2 M=6) s0=3`.
    pub fn describe(&self) -> String {
        match self.rule {
            SwitchRule::Scheme(s) => format!("scheme({s}) s0={}", self.initial_s),
            SwitchRule::IndependentRandom { pi_a } => {
                format!("random(pi_a={}) s0={}", sig12(pi_a), self.initial_s)
            }
        }
    }
}

fn check_s(n_c: u64, s: u64) -> Result<(), SamplerError> {
    if s > n_c {
        Err(ModelError::SwitchStateOutOfRange { s, n_c }.into())
    } else {
        Ok(())
    }
}

/// Draw counts for one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochObservation {
    pub epoch_index: u64,
    pub s: u64,
    pub draws: u64,
    pub count_a: u64,
    pub count_b: u64,
    /// `(count_a - count_b) / draws`.
    pub sample_mean: f64,
}

impl EpochObservation {
    fn from_counts(epoch_index: u64, s: u64, count_a: u64, count_b: u64) -> Self {
        let draws = count_a + count_b;
        Self {
            epoch_index,
            s,
            draws,
            count_a,
            count_b,
            sample_mean: (count_a as f64 - count_b as f64) / draws as f64,
        }
    }

    /// Signed sum of the `±1` draws.
    pub fn signed_sum(&self) -> i128 {
        i128::from(self.count_a) - i128::from(self.count_b)
    }
}

/// Takes `draws` with-replacement picks from a population in which `s`
/// switching elements currently project as A.
pub fn sample_epoch<R: Rng + ?Sized>(
    config: &SetConfig,
    s: u64,
    draws: u64,
    rng: &mut R,
) -> Result<EpochObservation, SamplerError> {
    config.check_switch_state(s)?;
    if draws == 0 {
        return Err(SamplerError::NoDraws);
    }
    let n = config.total();
    let a_like = config.n_a() + s;
    let mut count_a = 0u64;
    for _ in 0..draws {
        if rng.random_range(0..n) < a_like {
            count_a += 1;
        }
    }
    Ok(EpochObservation::from_counts(
        0,
        s,
        count_a,
        draws - count_a,
    ))
}

/// The switching count for the next epoch.
pub fn next_switch_state<R: Rng + ?Sized>(
    policy: &SwitchPolicy,
    current_s: u64,
    rng: &mut R,
) -> Result<u64, SamplerError> {
    check_s(policy.n_c, current_s)?;
    match policy.rule {
        SwitchRule::Scheme(scheme) => Ok(scheme.step(current_s)?),
        SwitchRule::IndependentRandom { pi_a } => {
            let binomial = Binomial::new(policy.n_c, pi_a)
                .map_err(|_| SamplerError::InvalidProbability(pi_a))?;
            Ok(binomial.sample(rng))
        }
    }
}

/// A reproducible run of epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    pub config: SetConfig,
    pub policy: SwitchPolicy,
    pub seed: u64,
    pub rng_algorithm: &'static str,
    pub epochs: Vec<EpochObservation>,
}

impl SampleSeries {
    /// Signed sum of all draws in all epochs.
    pub fn pooled_sum(&self) -> i128 {
        self.epochs.iter().map(EpochObservation::signed_sum).sum()
    }

    /// Exact short-term mean implied by each epoch's switching count.
    pub fn implied_means(&self) -> Vec<Rational> {
        self.epochs
            .iter()
            .map(|e| epoch_mean(&self.config, e.s).expect("s validated during sampling"))
            .collect()
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), SamplerError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SERIES_HEADER)?;
        for e in &self.epochs {
            w.write_record([
                e.epoch_index.to_string(),
                e.s.to_string(),
                e.draws.to_string(),
                e.count_a.to_string(),
                e.count_b.to_string(),
                sig12(e.sample_mean),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads epochs back from the CSV produced by [`SampleSeries::write_csv`].
pub fn read_series_csv<R: io::Read>(input: R) -> Result<Vec<EpochObservation>, SamplerError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(SERIES_HEADER) {
        return Err(SamplerError::Parse {
            line: 1,
            message: format!("expected header {}", SERIES_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record?;
        let field = |ix: usize| -> Result<u64, SamplerError> {
            record
                .get(ix)
                .unwrap_or("")
                .parse()
                .map_err(|e| SamplerError::Parse {
                    line,
                    message: format!("column {}: {e}", SERIES_HEADER[ix]),
                })
        };
        let (epoch, s, draws, a, b) = (field(0)?, field(1)?, field(2)?, field(3)?, field(4)?);
        if a + b != draws || draws == 0 {
            return Err(SamplerError::Parse {
                line,
                message: "count_a + count_b must equal draws (and draws >= 1)".into(),
            });
        }
        out.push(EpochObservation::from_counts(epoch, s, a, b));
    }
    Ok(out)
}

/// Runs `epochs` epochs: epoch 0 samples at the policy's initial count,
/// every later epoch first advances the count by one policy step.
pub fn evolve_and_sample(
    config: &SetConfig,
    policy: &SwitchPolicy,
    epochs: u64,
    draws_per_epoch: u64,
    seed: u64,
) -> Result<SampleSeries, SamplerError> {
    let mut rng = seeded_rng(seed);
    evolve_with_rng(config, policy, epochs, draws_per_epoch, &mut rng).map(|epochs| SampleSeries {
        config: *config,
        policy: *policy,
        seed,
        rng_algorithm: RNG_ALGORITHM,
        epochs,
    })
}

pub(crate) fn evolve_with_rng<R: Rng + ?Sized>(
    config: &SetConfig,
    policy: &SwitchPolicy,
    epochs: u64,
    draws_per_epoch: u64,
    rng: &mut R,
) -> Result<Vec<EpochObservation>, SamplerError> {
    if epochs == 0 {
        return Err(SamplerError::NoEpochs);
    }
    if draws_per_epoch == 0 {
        return Err(SamplerError::NoDraws);
    }
    if policy.n_c != config.n_c() {
        return Err(SamplerError::PolicyMismatch {
            policy: policy.n_c,
            config: config.n_c(),
        });
    }
    let mut s = policy.initial_s;
    let mut out = Vec::with_capacity(epochs as usize);
    for epoch in 0..epochs {
        if epoch > 0 {
            s = next_switch_state(policy, s, rng)?;
        }
        let mut obs = sample_epoch(config, s, draws_per_epoch, rng)?;
        obs.epoch_index = epoch;
        out.push(obs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::ratio_to_f64;

    fn cfg(a: u64, b: u64, c: u64) -> SetConfig {
        SetConfig::new(a, b, c).unwrap()
    }

    #[test]
    fn large_sample_mean_approaches_epoch_mean() {
        let mut rng = seeded_rng(7);
        let obs = sample_epoch(&cfg(5, 2, 3), 3, 100_000, &mut rng).unwrap();
        assert!((obs.sample_mean - 0.6).abs() < 0.01, "{}", obs.sample_mean);
        assert_eq!(obs.count_a + obs.count_b, obs.draws);
    }

    #[test]
    fn single_draw_is_plus_or_minus_one() {
        let mut rng = seeded_rng(1);
        for s in 0..=3 {
            let obs = sample_epoch(&cfg(5, 2, 3), s, 1, &mut rng).unwrap();
            assert!(obs.sample_mean == 1.0 || obs.sample_mean == -1.0);
        }
    }

    #[test]
    fn no_a_like_elements_always_observes_b() {
        let mut rng = seeded_rng(3);
        let obs = sample_epoch(&cfg(0, 4, 0), 0, 500, &mut rng).unwrap();
        assert_eq!(obs.count_a, 0);
        assert_eq!(obs.sample_mean, -1.0);
    }

    #[test]
    fn sample_epoch_rejects_bad_input() {
        let mut rng = seeded_rng(0);
        assert!(matches!(
            sample_epoch(&cfg(5, 2, 3), 4, 10, &mut rng),
            Err(SamplerError::Model(
                ModelError::SwitchStateOutOfRange { .. }
            ))
        ));
        assert!(matches!(
            sample_epoch(&cfg(5, 2, 3), 1, 0, &mut rng),
            Err(SamplerError::NoDraws)
        ));
    }

    #[test]
    fn next_state_examples() {
        let mut rng = seeded_rng(0);
        let scheme = SchemeSpec::multiplicative(2, 6).unwrap();
        let policy = SwitchPolicy::scheme(5, scheme, 1).unwrap();
        assert_eq!(next_switch_state(&policy, 3, &mut rng).unwrap(), 0);

        let never = SwitchPolicy::random(7, 0.0, 0).unwrap();
        let always = SwitchPolicy::random(7, 1.0, 0).unwrap();
        for s in 0..=7 {
            assert_eq!(next_switch_state(&never, s, &mut rng).unwrap(), 0);
            assert_eq!(next_switch_state(&always, s, &mut rng).unwrap(), 7);
        }
    }

    #[test]
    fn policy_validation() {
        let scheme = SchemeSpec::additive(1, 5).unwrap();
        assert!(matches!(
            SwitchPolicy::scheme(3, scheme, 0),
            Err(SamplerError::ModulusMismatch {
                modulus: 5,
                expected: 4
            })
        ));
        assert!(matches!(
            SwitchPolicy::random(3, 1.5, 0),
            Err(SamplerError::InvalidProbability(_))
        ));
        assert!(SwitchPolicy::random(3, 0.5, 4).is_err());

        let policy = SwitchPolicy::random(2, 0.5, 0).unwrap();
        assert!(matches!(
            evolve_and_sample(&cfg(5, 2, 3), &policy, 3, 3, 0),
            Err(SamplerError::PolicyMismatch {
                policy: 2,
                config: 3
            })
        ));
    }

    #[test]
    fn evolve_is_deterministic_and_shaped() {
        let config = cfg(5, 2, 3);
        let policy = SwitchPolicy::scheme(3, SchemeSpec::collatz(3, 4).unwrap(), 3).unwrap();
        let a = evolve_and_sample(&config, &policy, 10, 50, 99).unwrap();
        let b = evolve_and_sample(&config, &policy, 10, 50, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.epochs.len(), 10);
        assert_eq!(a.rng_algorithm, RNG_ALGORITHM);
        for (i, e) in a.epochs.iter().enumerate() {
            assert_eq!(e.epoch_index, i as u64);
        }
        for m in a.implied_means() {
            let m = ratio_to_f64(&m);
            assert!((0.0..=0.6).contains(&m));
        }
        let c = evolve_and_sample(&config, &policy, 10, 50, 100).unwrap();
        assert_ne!(a.epochs, c.epochs);
    }

    #[test]
    fn scheme_policy_follows_the_scheme() {
        let config = cfg(4, 1, 5);
        let scheme = SchemeSpec::multiplicative(2, 6).unwrap();
        let policy = SwitchPolicy::scheme(5, scheme, 1).unwrap();
        let series = evolve_and_sample(&config, &policy, 5, 1, 0).unwrap();
        let s: Vec<u64> = series.epochs.iter().map(|e| e.s).collect();
        assert_eq!(s, vec![1, 2, 4, 2, 4]);
    }

    #[test]
    fn csv_round_trip() {
        let config = cfg(5, 2, 3);
        let policy = SwitchPolicy::random(3, 0.3, 1).unwrap();
        let series = evolve_and_sample(&config, &policy, 25, 7, 11).unwrap();
        let mut buf = Vec::new();
        series.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("epoch,s,draws,count_a,count_b,mean\n"));
        let back = read_series_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), series.epochs.len());
        for (x, y) in back.iter().zip(&series.epochs) {
            assert_eq!(
                (x.epoch_index, x.s, x.draws, x.count_a, x.count_b),
                (y.epoch_index, y.s, y.draws, y.count_a, y.count_b)
            );
            assert_eq!(sig12(x.sample_mean), sig12(y.sample_mean));
        }
    }

    #[test]
    fn read_series_reports_line_numbers() {
        let bad = "epoch,s,draws,count_a,count_b,mean\n0,1,3,2,1,0.333333333333\n1,1,3,2,2,0\n";
        match read_series_csv(bad.as_bytes()) {
            Err(SamplerError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
