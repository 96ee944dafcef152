//! Finite modular switching schemes and the functional graphs they induce.
//!
//! A scheme maps the switching state `s` in `0..modulus` to its successor:
//!
//! | kind             | step                                   |
//! |------------------|----------------------------------------|
//! | `Additive`       | `(s + k) mod M`                        |
//! | `Multiplicative` | `(k * s) mod M`                        |
//! | `Collatz`        | `s / 2` if `s` is even (0 included), else `(k * s + 1) mod M` |
//!
//! Because the state space is finite every orbit ends in a cycle. Cycles are
//! always reported in canonical form: rotated to start at their smallest
//! state and listed in iteration order.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Largest modulus accepted by [`classify_states`] and [`one_step_table`].
pub const ENUMERATION_LIMIT: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(u64),
    #[error("state {state} is outside 0..{modulus}")]
    StateOutOfRange { state: u64, modulus: u64 },
    #[error("max_steps must be at least 1")]
    ZeroSteps,
    #[error("no repeated state within {max_steps} steps")]
    Truncated { max_steps: u64, partial: Vec<u64> },
    #[error("modulus {modulus} exceeds the enumeration limit {limit}")]
    TooLargeToEnumerate { modulus: u64, limit: u64 },
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("k = {k} must lie in 1..{modulus}")]
    ElementOutOfRange { k: u64, modulus: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Additive,
    Multiplicative,
    Collatz,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::Additive,
        SchemeKind::Multiplicative,
        SchemeKind::Collatz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Additive => "additive",
            SchemeKind::Multiplicative => "multiplicative",
            SchemeKind::Collatz => "collatz",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "additive" | "add" => Ok(SchemeKind::Additive),
            "multiplicative" | "mul" => Ok(SchemeKind::Multiplicative),
            "collatz" => Ok(SchemeKind::Collatz),
            other => Err(format!(
                "unknown scheme {other:?}, expected additive, multiplicative or collatz"
            )),
        }
    }
}

/// A switching rule together with its parameter `k` and modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeSpec {
    kind: SchemeKind,
    k: u64,
    modulus: u64,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, k: u64, modulus: u64) -> Result<Self, DynamicsError> {
        if modulus < 2 {
            return Err(DynamicsError::ModulusTooSmall(modulus));
        }
        Ok(Self { kind, k, modulus })
    }

    pub fn additive(k: u64, modulus: u64) -> Result<Self, DynamicsError> {
        Self::new(SchemeKind::Additive, k, modulus)
    }

    pub fn multiplicative(k: u64, modulus: u64) -> Result<Self, DynamicsError> {
        Self::new(SchemeKind::Multiplicative, k, modulus)
    }

    pub fn collatz(k: u64, modulus: u64) -> Result<Self, DynamicsError> {
        Self::new(SchemeKind::Collatz, k, modulus)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn check_state(&self, state: u64) -> Result<(), DynamicsError> {
        if state < self.modulus {
            Ok(())
        } else {
            Err(DynamicsError::StateOutOfRange {
                state,
                modulus: self.modulus,
            })
        }
    }

    /// One application of the scheme.
    pub fn step(&self, state: u64) -> Result<u64, DynamicsError> {
        self.check_state(state)?;
        Ok(self.step_unchecked(state))
    }

    // Caller guarantees `state < modulus`.
    fn step_unchecked(&self, state: u64) -> u64 {
        let (s, k, m) = (
            u128::from(state),
            u128::from(self.k),
            u128::from(self.modulus),
        );
        let next = match self.kind {
            SchemeKind::Additive => (s + k) % m,
            SchemeKind::Multiplicative => (k * s) % m,
            SchemeKind::Collatz if s % 2 == 0 => s / 2,
            SchemeKind::Collatz => (k * s + 1) % m,
        };
        next as u64
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} k={} M={}", self.kind, self.k, self.modulus)
    }
}

/// `(s + k) mod M`.
pub fn step_additive(s: u64, k: u64, modulus: u64) -> Result<u64, DynamicsError> {
    SchemeSpec::additive(k, modulus)?.step(s)
}

/// `(k * s) mod M`.
pub fn step_multiplicative(s: u64, k: u64, modulus: u64) -> Result<u64, DynamicsError> {
    SchemeSpec::multiplicative(k, modulus)?.step(s)
}

/// `s / 2` for even `s` (0 counts as even), otherwise `(k * s + 1) mod M`.
pub fn step_collatz(s: u64, k: u64, modulus: u64) -> Result<u64, DynamicsError> {
    SchemeSpec::collatz(k, modulus)?.step(s)
}

/// Iterates `scheme` from `start` until a state repeats, returning every
/// visited state including the closing repeat.
///
/// Fails with [`DynamicsError::Truncated`] (carrying the partial path) when
/// `max_steps` transitions pass without a repeat. That cannot happen once
/// `max_steps >= modulus`.
pub fn trajectory(
    scheme: &SchemeSpec,
    start: u64,
    max_steps: u64,
) -> Result<Vec<u64>, DynamicsError> {
    if max_steps == 0 {
        return Err(DynamicsError::ZeroSteps);
    }
    scheme.check_state(start)?;
    walk(scheme, start, max_steps).map(|(path, _)| path)
}

// Returns the path and the index of the first occurrence of the repeated state.
fn walk(
    scheme: &SchemeSpec,
    start: u64,
    max_steps: u64,
) -> Result<(Vec<u64>, usize), DynamicsError> {
    let mut seen: HashMap<u64, usize> = HashMap::new();
    let mut path = vec![start];
    seen.insert(start, 0);
    let mut current = start;
    for _ in 0..max_steps {
        current = scheme.step_unchecked(current);
        path.push(current);
        if let Some(&first) = seen.get(&current) {
            return Ok((path, first));
        }
        seen.insert(current, path.len() - 1);
    }
    Err(DynamicsError::Truncated {
        max_steps,
        partial: path,
    })
}

/// Orbit of one start state, up to and including its first repeated state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitReport {
    pub start: u64,
    /// Visited states; the last entry repeats an earlier one.
    pub path: Vec<u64>,
    /// Distinct states visited before entering the cycle.
    pub tail_length: usize,
    /// The cycle in canonical form.
    pub cycle: Vec<u64>,
    pub is_fixed_point: bool,
    pub max_value: u64,
    /// Transitions among distinct states, i.e. `distinct_states() - 1`.
    pub path_length: usize,
}

impl OrbitReport {
    /// The path without its closing repeat.
    pub fn distinct_path(&self) -> &[u64] {
        &self.path[..self.path.len() - 1]
    }

    pub fn distinct_states(&self) -> usize {
        self.path.len() - 1
    }

    /// Transitions needed to first reach `target`, if the orbit visits it.
    pub fn steps_to(&self, target: u64) -> Option<usize> {
        self.path.iter().position(|&s| s == target)
    }

    pub fn on_cycle(&self, state: u64) -> bool {
        self.cycle.contains(&state)
    }
}

/// Runs `start` to its first repeat and summarises the orbit.
pub fn orbit_report(scheme: &SchemeSpec, start: u64) -> Result<OrbitReport, DynamicsError> {
    scheme.check_state(start)?;
    let (path, first) = walk(scheme, start, scheme.modulus())?;
    let distinct = path.len() - 1;
    let cycle = canonical_cycle(&path[first..distinct]);
    Ok(OrbitReport {
        start,
        tail_length: first,
        is_fixed_point: cycle.len() == 1,
        max_value: path.iter().copied().max().unwrap_or(start),
        path_length: distinct - 1,
        cycle,
        path,
    })
}

/// Rotates a cycle to begin at its minimal element. A trailing copy of the
/// first element (as in `1 4 2 1`) is dropped first.
pub fn canonical_cycle(cycle: &[u64]) -> Vec<u64> {
    let body = match cycle {
        [first, .., last] if first == last => &cycle[..cycle.len() - 1],
        _ => cycle,
    };
    let Some(min_at) = body
        .iter()
        .enumerate()
        .min_by_key(|(_, s)| **s)
        .map(|(i, _)| i)
    else {
        return Vec::new();
    };
    body[min_at..]
        .iter()
        .chain(&body[..min_at])
        .copied()
        .collect()
}

fn check_enumerable(scheme: &SchemeSpec) -> Result<usize, DynamicsError> {
    if scheme.modulus() > ENUMERATION_LIMIT {
        return Err(DynamicsError::TooLargeToEnumerate {
            modulus: scheme.modulus(),
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(scheme.modulus() as usize)
}

/// Successor of every state; index `i` holds the image of state `i`.
pub fn one_step_table(scheme: &SchemeSpec) -> Result<Vec<u64>, DynamicsError> {
    let m = check_enumerable(scheme)?;
    Ok((0..m as u64).map(|s| scheme.step_unchecked(s)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateRole {
    FixedPoint,
    /// Member of the cycle at this index of [`StateClassification::cycles`].
    Cycle(usize),
    Transient,
}

/// Partition of the state space into fixed points, cycles of length at
/// least two, and transient states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateClassification {
    /// Sorted ascending.
    pub fixed_points: Vec<u64>,
    /// Canonical cycles, ordered by their smallest state.
    pub cycles: Vec<Vec<u64>>,
    /// Sorted ascending.
    pub transients: Vec<u64>,
    roles: Vec<StateRole>,
}

impl StateClassification {
    pub fn role(&self, state: u64) -> Option<StateRole> {
        self.roles.get(state as usize).copied()
    }

    pub fn modulus(&self) -> u64 {
        self.roles.len() as u64
    }

    pub fn is_periodic(&self, state: u64) -> bool {
        matches!(
            self.role(state),
            Some(StateRole::FixedPoint | StateRole::Cycle(_))
        )
    }
}

/// Builds the functional graph of `scheme` and partitions its states.
pub fn classify_states(scheme: &SchemeSpec) -> Result<StateClassification, DynamicsError> {
    let succ = one_step_table(scheme)?;
    let m = succ.len();

    const UNSEEN: u8 = 0;
    const ON_PATH: u8 = 1;
    const DONE: u8 = 2;
    let mut mark = vec![UNSEEN; m];
    let mut periodic = vec![false; m];
    let mut raw_cycles: Vec<Vec<u64>> = Vec::new();
    let mut path: Vec<usize> = Vec::new();

    for start in 0..m {
        if mark[start] != UNSEEN {
            continue;
        }
        path.clear();
        let mut v = start;
        while mark[v] == UNSEEN {
            mark[v] = ON_PATH;
            path.push(v);
            v = succ[v] as usize;
        }
        if mark[v] == ON_PATH {
            let at = path
                .iter()
                .position(|&u| u == v)
                .expect("state on current path");
            for &u in &path[at..] {
                periodic[u] = true;
            }
            raw_cycles.push(path[at..].iter().map(|&u| u as u64).collect());
        }
        for &u in &path {
            mark[u] = DONE;
        }
    }

    let mut fixed_points = Vec::new();
    let mut cycles: Vec<Vec<u64>> = raw_cycles
        .into_iter()
        .filter_map(|c| {
            if c.len() == 1 {
                fixed_points.push(c[0]);
                None
            } else {
                Some(canonical_cycle(&c))
            }
        })
        .collect();
    fixed_points.sort_unstable();
    cycles.sort_unstable_by_key(|c| c[0]);

    let mut roles = vec![StateRole::Transient; m];
    for &f in &fixed_points {
        roles[f as usize] = StateRole::FixedPoint;
    }
    for (id, cycle) in cycles.iter().enumerate() {
        for &s in cycle {
            roles[s as usize] = StateRole::Cycle(id);
        }
    }
    let transients = (0..m).filter(|&s| !periodic[s]).map(|s| s as u64).collect();

    Ok(StateClassification {
        fixed_points,
        cycles,
        transients,
        roles,
    })
}

/// Every state whose orbit eventually visits `target` (including `target`).
///
/// This is the empirical answer to "which initial counts ever reach zero".
pub fn states_reaching(scheme: &SchemeSpec, target: u64) -> Result<Vec<u64>, DynamicsError> {
    scheme.check_state(target)?;
    let succ = one_step_table(scheme)?;
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); succ.len()];
    for (s, &t) in succ.iter().enumerate() {
        preds[t as usize].push(s);
    }
    let mut reach = vec![false; succ.len()];
    let mut stack = vec![target as usize];
    reach[target as usize] = true;
    while let Some(v) = stack.pop() {
        for &p in &preds[v] {
            if !reach[p] {
                reach[p] = true;
                stack.push(p);
            }
        }
    }
    Ok((0..succ.len())
        .filter(|&s| reach[s])
        .map(|s| s as u64)
        .collect())
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut factors = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            factors.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}

fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = u128::from(modulus);
    let mut acc: u128 = 1 % m;
    let mut b = u128::from(base) % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Whether `k` generates the multiplicative group modulo the prime
/// `modulus`, i.e. its order is `modulus - 1`.
pub fn is_primitive_root(k: u64, modulus: u64) -> Result<bool, DynamicsError> {
    if !is_prime(modulus) {
        return Err(DynamicsError::NotPrime(modulus));
    }
    if k == 0 || k >= modulus {
        return Err(DynamicsError::ElementOutOfRange { k, modulus });
    }
    let order_bound = modulus - 1;
    Ok(distinct_prime_factors(order_bound)
        .into_iter()
        .all(|q| pow_mod(k, order_bound / q, modulus) != 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn additive_step_examples() {
        assert_eq!(step_additive(5, 2, 6).unwrap(), 1);
        for s in 0..9 {
            assert_eq!(step_additive(s, 0, 9).unwrap(), s);
        }
        assert_eq!(step_additive(0, 1, 2).unwrap(), 1);
    }

    #[test]
    fn multiplicative_step_examples() {
        assert_eq!(step_multiplicative(3, 2, 6).unwrap(), 0);
        assert_eq!(step_multiplicative(1, 2, 6).unwrap(), 2);
        for k in 0..20 {
            assert_eq!(step_multiplicative(0, k, 11).unwrap(), 0);
        }
    }

    #[test]
    fn collatz_step_examples() {
        assert_eq!(step_collatz(3, 3, 17).unwrap(), 10);
        assert_eq!(step_collatz(11, 3, 17).unwrap(), 0);
        assert_eq!(step_collatz(7, 3, 55).unwrap(), 22);
        assert_eq!(step_collatz(0, 3, 17).unwrap(), 0);
    }

    #[test]
    fn step_rejects_bad_input() {
        assert_eq!(
            step_additive(6, 1, 6),
            Err(DynamicsError::StateOutOfRange {
                state: 6,
                modulus: 6
            })
        );
        assert_eq!(
            step_collatz(0, 3, 1),
            Err(DynamicsError::ModulusTooSmall(1))
        );
    }

    #[test]
    fn huge_parameters_do_not_overflow() {
        let m = u64::MAX - 58; // large odd modulus
        let s = m - 2;
        let expected = ((u128::from(u64::MAX) * u128::from(s)) % u128::from(m)) as u64;
        assert_eq!(step_multiplicative(s, u64::MAX, m).unwrap(), expected);
    }

    #[test]
    fn trajectory_examples() {
        let c55 = SchemeSpec::collatz(3, 55).unwrap();
        assert_eq!(
            trajectory(&c55, 7, 100).unwrap(),
            vec![7, 22, 11, 34, 17, 52, 26, 13, 40, 20, 10, 5, 16, 8, 4, 2, 1, 4]
        );
        let c37 = SchemeSpec::collatz(3, 37).unwrap();
        assert_eq!(
            trajectory(&c37, 7, 100).unwrap(),
            vec![7, 22, 11, 34, 17, 15, 9, 28, 14, 7]
        );
        let m6 = SchemeSpec::multiplicative(2, 6).unwrap();
        assert_eq!(trajectory(&m6, 3, 10).unwrap(), vec![3, 0, 0]);
    }

    #[test]
    fn trajectory_truncation_is_distinct() {
        let c55 = SchemeSpec::collatz(3, 55).unwrap();
        match trajectory(&c55, 7, 3) {
            Err(DynamicsError::Truncated {
                max_steps: 3,
                partial,
            }) => {
                assert_eq!(partial, vec![7, 22, 11, 34]);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
        assert_eq!(trajectory(&c55, 7, 0), Err(DynamicsError::ZeroSteps));
    }

    #[test]
    fn orbit_report_examples() {
        let c100 = SchemeSpec::collatz(3, 100).unwrap();
        let r3 = orbit_report(&c100, 3).unwrap();
        assert_eq!(r3.distinct_path(), &[3, 10, 5, 16, 8, 4, 2, 1]);
        assert_eq!(r3.distinct_states(), 8);
        assert_eq!(r3.path_length, 7);
        assert_eq!(r3.max_value, 16);

        let r25 = orbit_report(&c100, 25).unwrap();
        assert_eq!(r25.steps_to(1), Some(23));
        assert_eq!(r25.max_value, 88);
        assert_eq!(r25.cycle, vec![1, 4, 2]);

        let id = SchemeSpec::additive(0, 9).unwrap();
        let fixed = orbit_report(&id, 4).unwrap();
        assert!(fixed.is_fixed_point);
        assert_eq!(fixed.cycle, vec![4]);
        assert_eq!(fixed.tail_length, 0);
        assert_eq!(fixed.path_length, 0);
    }

    #[test]
    fn one_step_table_examples() {
        let c17 = SchemeSpec::collatz(3, 17).unwrap();
        let table = one_step_table(&c17).unwrap();
        assert_eq!(
            &table[1..],
            &[4, 1, 10, 2, 16, 3, 5, 4, 11, 5, 0, 6, 6, 7, 12, 8]
        );
        let m6 = SchemeSpec::multiplicative(2, 6).unwrap();
        assert_eq!(one_step_table(&m6).unwrap(), vec![0, 2, 4, 0, 2, 4]);
        let rot = SchemeSpec::additive(1, 3).unwrap();
        assert_eq!(one_step_table(&rot).unwrap(), vec![1, 2, 0]);
    }

    #[test]
    fn classify_examples() {
        let m6 = classify_states(&SchemeSpec::multiplicative(2, 6).unwrap()).unwrap();
        assert_eq!(m6.fixed_points, vec![0]);
        assert_eq!(m6.cycles, vec![vec![2, 4]]);
        assert_eq!(m6.transients, vec![1, 3, 5]);
        assert_eq!(m6.role(4), Some(StateRole::Cycle(0)));

        let c17 = classify_states(&SchemeSpec::collatz(3, 17).unwrap()).unwrap();
        assert_eq!(c17.fixed_points, vec![0]);
        assert!(c17.cycles.contains(&canonical_cycle(&[1, 4, 2, 1])));

        let rot = classify_states(&SchemeSpec::additive(1, 4).unwrap()).unwrap();
        assert_eq!(rot.cycles, vec![vec![0, 1, 2, 3]]);
        assert!(rot.fixed_points.is_empty());
        assert!(rot.transients.is_empty());
    }

    #[test]
    fn classify_rejects_huge_modulus() {
        let big = SchemeSpec::additive(1, ENUMERATION_LIMIT + 1).unwrap();
        assert!(matches!(
            classify_states(&big),
            Err(DynamicsError::TooLargeToEnumerate { .. })
        ));
    }

    #[test]
    fn zero_reachability_is_empirical() {
        // In mod 17, 11 maps to 0 since 3*11 + 1 = 34.
        let reach = states_reaching(&SchemeSpec::collatz(3, 17).unwrap(), 0).unwrap();
        assert!(reach.contains(&11));
        assert!(reach.contains(&0));
        assert!(!reach.contains(&1));
    }

    #[test]
    fn primitive_root_examples() {
        assert_eq!(is_primitive_root(3, 7), Ok(true));
        assert_eq!(is_primitive_root(2, 7), Ok(false));
        assert_eq!(is_primitive_root(1, 5), Ok(false));
        assert_eq!(is_primitive_root(1, 2), Ok(true));
        assert_eq!(is_primitive_root(2, 9), Err(DynamicsError::NotPrime(9)));
        assert_eq!(
            is_primitive_root(7, 7),
            Err(DynamicsError::ElementOutOfRange { k: 7, modulus: 7 })
        );
    }

    #[test]
    fn primitive_root_matches_brute_force_order() {
        for m in (2u64..200).filter(|&m| is_prime(m)) {
            for k in 1..m {
                let mut order = 1;
                let mut x = k % m;
                while x != 1 {
                    x = x * k % m;
                    order += 1;
                }
                assert_eq!(
                    is_primitive_root(k, m).unwrap(),
                    order == m - 1,
                    "k={k} M={m}"
                );
            }
        }
    }

    #[test]
    fn closure_for_all_small_schemes() {
        for m in 2..=512u64 {
            for k in 0..=m {
                for kind in SchemeKind::ALL {
                    let scheme = SchemeSpec::new(kind, k, m).unwrap();
                    for s in 0..m {
                        assert!(scheme.step(s).unwrap() < m);
                    }
                }
            }
        }
    }

    #[test]
    fn coprime_additive_is_one_full_cycle() {
        for m in 2..60u64 {
            for k in 1..m {
                if num_integer::gcd(k, m) != 1 {
                    continue;
                }
                let c = classify_states(&SchemeSpec::additive(k, m).unwrap()).unwrap();
                assert_eq!(c.cycles.len(), 1);
                assert_eq!(c.cycles[0].len() as u64, m);
            }
        }
    }

    #[test]
    fn multiplicative_zero_fixed_and_primitive_roots_give_full_cycle() {
        for m in 2..80u64 {
            for k in 0..m {
                let c = classify_states(&SchemeSpec::multiplicative(k, m).unwrap()).unwrap();
                assert!(c.fixed_points.contains(&0));
                if is_prime(m) && k > 0 && is_primitive_root(k, m).unwrap() && m > 2 {
                    assert_eq!(c.cycles.len(), 1);
                    assert_eq!(c.cycles[0].len() as u64, m - 1);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn collatz_halves_even_and_reaches_cycle(m in 2u64..2000, k in 0u64..10, start_frac in 0.0f64..1.0) {
            let scheme = SchemeSpec::collatz(k, m).unwrap();
            let start = ((m as f64) * start_frac) as u64 % m;
            if start.is_multiple_of(2) {
                prop_assert_eq!(scheme.step(start).unwrap(), start / 2);
            }
            let path = trajectory(&scheme, start, m).unwrap();
            prop_assert!(path.len() as u64 <= m + 1);
        }

        #[test]
        fn orbit_report_invariants(kind_ix in 0usize..3, k in 0u64..12, m in 2u64..300, start in 0u64..300) {
            let scheme = SchemeSpec::new(SchemeKind::ALL[kind_ix], k, m).unwrap();
            let start = start % m;
            let report = orbit_report(&scheme, start).unwrap();
            prop_assert_eq!(report.path[0], start);
            for w in report.path.windows(2) {
                prop_assert_eq!(scheme.step(w[0]).unwrap(), w[1]);
            }
            let last = *report.path.last().unwrap();
            prop_assert!(report.distinct_path().contains(&last));
            prop_assert_eq!(report.tail_length + report.cycle.len(), report.distinct_states());
            prop_assert_eq!(report.is_fixed_point, report.cycle.len() == 1);
        }

        #[test]
        fn canonical_cycle_is_rotation_invariant(v in proptest::collection::hash_set(0u64..1000, 1..20), rot in 0usize..20) {
            let v: Vec<u64> = v.into_iter().collect();
            let r = rot % v.len();
            let rotated: Vec<u64> = v[r..].iter().chain(&v[..r]).copied().collect();
            prop_assert_eq!(canonical_cycle(&v), canonical_cycle(&rotated));
        }
    }
}
