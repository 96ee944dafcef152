//! Simpson-type inversions in two-subject stratified tables whose numerators
//! are only known up to an integer range.
//!
//! Every combination of numerators is enumerated. For each one the strata
//! and the pooled totals are compared with exact rationals, and the scenario
//! is flagged as an inversion when one subject dominates per stratum (wins
//! or ties every stratum and wins at least one) while the other subject
//! strictly wins the aggregate.

use crate::model::Rational;
use std::collections::HashMap;
use std::fmt;
use std::io;
use thiserror::Error;

/// Largest number of scenarios [`detect_inversions`] will enumerate.
pub const SCENARIO_LIMIT: u64 = 1_000_000;

/// Header of the table CSV read by [`StratifiedTable::read_csv`].
pub const TABLE_HEADER: [&str; 5] = ["subject", "stratum", "num_lo", "num_hi", "den"];

#[derive(Debug, Error)]
pub enum ParadoxError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("choice does not match the table: {0}")]
    ChoiceOutOfRange(String),
    #[error("{count} scenarios exceed the enumeration limit {limit}")]
    TooManyScenarios { count: u128, limit: u64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One subject's entry in one stratum: numerator in `num_lo..=num_hi` out
/// of `den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub num_lo: u64,
    pub num_hi: u64,
    pub den: u64,
}

impl Cell {
    pub fn new(num_lo: u64, num_hi: u64, den: u64) -> Result<Self, String> {
        if den == 0 {
            return Err("denominator must be positive".into());
        }
        if num_lo > num_hi {
            return Err(format!("num_lo {num_lo} exceeds num_hi {num_hi}"));
        }
        if num_hi > den {
            return Err(format!("num_hi {num_hi} exceeds denominator {den}"));
        }
        Ok(Self {
            num_lo,
            num_hi,
            den,
        })
    }

    pub fn fixed(num: u64, den: u64) -> Result<Self, String> {
        Self::new(num, num, den)
    }

    /// Number of admissible numerators.
    pub fn width(&self) -> u64 {
        self.num_hi - self.num_lo + 1
    }

    pub fn admits(&self, num: u64) -> bool {
        (self.num_lo..=self.num_hi).contains(&num)
    }
}

/// Two subjects compared across ordered strata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratifiedTable {
    subjects: [String; 2],
    strata: Vec<String>,
    /// `cells[stratum][subject]`.
    cells: Vec<[Cell; 2]>,
}

impl StratifiedTable {
    pub fn new(
        subjects: [String; 2],
        strata: Vec<String>,
        cells: Vec<[Cell; 2]>,
    ) -> Result<Self, ParadoxError> {
        if subjects[0] == subjects[1] {
            return Err(ParadoxError::InvalidTable(
                "subjects must be distinct".into(),
            ));
        }
        if strata.is_empty() {
            return Err(ParadoxError::InvalidTable(
                "at least one stratum is required".into(),
            ));
        }
        if strata.len() != cells.len() {
            return Err(ParadoxError::InvalidTable(format!(
                "{} strata but {} cell rows",
                strata.len(),
                cells.len()
            )));
        }
        for row in &cells {
            for cell in row {
                Cell::new(cell.num_lo, cell.num_hi, cell.den)
                    .map_err(ParadoxError::InvalidTable)?;
            }
        }
        Ok(Self {
            subjects,
            strata,
            cells,
        })
    }

    pub fn subjects(&self) -> &[String; 2] {
        &self.subjects
    }

    pub fn strata(&self) -> &[String] {
        &self.strata
    }

    pub fn cell(&self, stratum: usize, subject: usize) -> &Cell {
        &self.cells[stratum][subject]
    }

    /// Product of all numerator-range widths.
    pub fn scenario_count(&self) -> u128 {
        self.cells
            .iter()
            .flatten()
            .map(|c| u128::from(c.width()))
            .fold(1u128, |acc, w| acc.saturating_mul(w))
    }

    /// Parses the `subject,stratum,num_lo,num_hi,den` CSV form. Subjects and
    /// strata keep their order of first appearance; every subject needs
    /// exactly one row per stratum.
    pub fn read_csv<R: io::Read>(input: R) -> Result<Self, ParadoxError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut records = reader.records();

        let header = match records.next() {
            None => {
                return Err(ParadoxError::Parse {
                    line: 1,
                    message: "empty table file".into(),
                })
            }
            Some(h) => h?,
        };
        if header.iter().ne(TABLE_HEADER) {
            return Err(ParadoxError::Parse {
                line: 1,
                message: format!("expected header {}", TABLE_HEADER.join(",")),
            });
        }

        let mut subjects: Vec<String> = Vec::new();
        let mut strata: Vec<String> = Vec::new();
        let mut entries: HashMap<(usize, usize), (Cell, u64)> = HashMap::new();
        for record in records {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let fail = |message: String| ParadoxError::Parse { line, message };
            if record.len() != TABLE_HEADER.len() {
                return Err(fail(format!(
                    "expected {} fields, found {}",
                    TABLE_HEADER.len(),
                    record.len()
                )));
            }
            let number = |ix: usize| -> Result<u64, ParadoxError> {
                record[ix]
                    .parse()
                    .map_err(|e| fail(format!("{}: {e} ({:?})", TABLE_HEADER[ix], &record[ix])))
            };
            let cell = Cell::new(number(2)?, number(3)?, number(4)?).map_err(fail)?;
            let subject = index_of(&mut subjects, &record[0]);
            if subject >= 2 {
                return Err(fail(format!(
                    "third subject {:?}; tables compare exactly two",
                    &record[0]
                )));
            }
            let stratum = index_of(&mut strata, &record[1]);
            if let Some((_, first)) = entries.insert((stratum, subject), (cell, line)) {
                return Err(fail(format!(
                    "duplicate row for {:?} in stratum {:?} (first on line {first})",
                    &record[0], &record[1]
                )));
            }
        }
        if subjects.is_empty() {
            return Err(ParadoxError::Parse {
                line: 2,
                message: "table has no data rows".into(),
            });
        }
        if subjects.len() != 2 {
            return Err(ParadoxError::InvalidTable(format!(
                "expected two subjects, found {}",
                subjects.len()
            )));
        }
        let mut cells = Vec::with_capacity(strata.len());
        for (si, name) in strata.iter().enumerate() {
            let get = |subject: usize| {
                entries.get(&(si, subject)).map(|(c, _)| *c).ok_or_else(|| {
                    ParadoxError::InvalidTable(format!(
                        "subject {:?} has no row for stratum {name:?}",
                        subjects[subject]
                    ))
                })
            };
            cells.push([get(0)?, get(1)?]);
        }
        let [first, second]: [String; 2] = subjects.try_into().expect("two subjects");
        Self::new([first, second], strata, cells)
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), ParadoxError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TABLE_HEADER)?;
        for subject in 0..2 {
            for (si, name) in self.strata.iter().enumerate() {
                let c = self.cells[si][subject];
                w.write_record([
                    self.subjects[subject].as_str(),
                    name,
                    &c.num_lo.to_string(),
                    &c.num_hi.to_string(),
                    &c.den.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    fn check_choice(&self, choice: &[[u64; 2]]) -> Result<(), ParadoxError> {
        if choice.len() != self.strata.len() {
            return Err(ParadoxError::ChoiceOutOfRange(format!(
                "{} strata but {} numerator pairs",
                self.strata.len(),
                choice.len()
            )));
        }
        for (si, pair) in choice.iter().enumerate() {
            for (subject, (cell, &num)) in self.cells[si].iter().zip(pair).enumerate() {
                if !cell.admits(num) {
                    return Err(ParadoxError::ChoiceOutOfRange(format!(
                        "{} in {}: {} not in {}..={}",
                        self.subjects[subject], self.strata[si], num, cell.num_lo, cell.num_hi
                    )));
                }
            }
        }
        Ok(())
    }
}

fn index_of(names: &mut Vec<String>, name: &str) -> usize {
    names.iter().position(|n| n == name).unwrap_or_else(|| {
        names.push(name.to_string());
        names.len() - 1
    })
}

/// A pooled numerator over a pooled denominator, kept unreduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn value(&self) -> Rational {
        Rational::new(i128::from(self.num), i128::from(self.den))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl std::str::FromStr for Fraction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| format!("expected p/q, got {s:?}"))?;
        let num = n.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
        let den: u64 = d.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
        if den == 0 {
            return Err(format!("{s:?}: zero denominator"));
        }
        Ok(Self { num, den })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Winner {
    First,
    Second,
    Tie,
}

impl Winner {
    fn of(first: &Rational, second: &Rational) -> Self {
        match first.cmp(second) {
            std::cmp::Ordering::Greater => Winner::First,
            std::cmp::Ordering::Less => Winner::Second,
            std::cmp::Ordering::Equal => Winner::Tie,
        }
    }

    /// Subject index of the winner, `None` for a tie.
    pub fn subject(self) -> Option<usize> {
        match self {
            Winner::First => Some(0),
            Winner::Second => Some(1),
            Winner::Tie => None,
        }
    }

    fn from_subject(subject: usize) -> Self {
        if subject == 0 {
            Winner::First
        } else {
            Winner::Second
        }
    }
}

/// Pooled ratio per subject for a fixed choice of numerators
/// (`choice[stratum] = [first, second]`).
pub fn aggregate(
    table: &StratifiedTable,
    choice: &[[u64; 2]],
) -> Result<[Fraction; 2], ParadoxError> {
    table.check_choice(choice)?;
    Ok(aggregate_unchecked(table, choice))
}

fn aggregate_unchecked(table: &StratifiedTable, choice: &[[u64; 2]]) -> [Fraction; 2] {
    [0, 1].map(|subject| Fraction {
        num: choice.iter().map(|pair| pair[subject]).sum(),
        den: table.cells.iter().map(|row| row[subject].den).sum(),
    })
}

/// Winner of every stratum for a fixed choice of numerators.
pub fn compare_strata(
    table: &StratifiedTable,
    choice: &[[u64; 2]],
) -> Result<Vec<Winner>, ParadoxError> {
    table.check_choice(choice)?;
    Ok(compare_unchecked(table, choice))
}

fn compare_unchecked(table: &StratifiedTable, choice: &[[u64; 2]]) -> Vec<Winner> {
    choice
        .iter()
        .zip(&table.cells)
        .map(|(pair, row)| {
            let first = Fraction {
                num: pair[0],
                den: row[0].den,
            }
            .value();
            let second = Fraction {
                num: pair[1],
                den: row[1].den,
            }
            .value();
            Winner::of(&first, &second)
        })
        .collect()
}

/// The subject that wins or ties every stratum and wins at least one.
pub fn per_stratum_dominator(winners: &[Winner]) -> Option<usize> {
    let first = winners.iter().all(|w| *w != Winner::Second) && winners.contains(&Winner::First);
    let second = winners.iter().all(|w| *w != Winner::First) && winners.contains(&Winner::Second);
    match (first, second) {
        (true, _) => Some(0),
        (_, true) => Some(1),
        _ => None,
    }
}

/// One numerator combination and its comparisons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    /// `numerators[stratum] = [first, second]`.
    pub numerators: Vec<[u64; 2]>,
    pub stratum_winners: Vec<Winner>,
    pub aggregates: [Fraction; 2],
    pub aggregate_winner: Winner,
    pub inversion: bool,
    /// The presumed dominator loses at least one stratum here.
    pub exception: bool,
}

impl Scenario {
    pub fn dominator(&self) -> Option<usize> {
        per_stratum_dominator(&self.stratum_winners)
    }
}

fn is_inversion(winners: &[Winner], aggregate_winner: Winner) -> bool {
    match (per_stratum_dominator(winners), aggregate_winner.subject()) {
        (Some(dom), Some(agg)) => dom != agg,
        _ => false,
    }
}

/// All scenarios of a table, in odometer order over the cells (strata in
/// order, first subject before second, last cell varying fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InversionReport {
    /// The subject that dominates per stratum in strictly more scenarios
    /// than the other; `None` when neither does.
    pub presumed_dominator: Option<usize>,
    pub scenarios: Vec<Scenario>,
}

impl InversionReport {
    pub fn inversions(&self) -> impl Iterator<Item = &Scenario> {
        self.scenarios.iter().filter(|s| s.inversion)
    }

    pub fn exceptions(&self) -> impl Iterator<Item = &Scenario> {
        self.scenarios.iter().filter(|s| s.exception)
    }

    /// Scenario with the given numerators, if it was enumerated.
    pub fn find(&self, numerators: &[[u64; 2]]) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.numerators == numerators)
    }

    fn header(table: &StratifiedTable) -> Vec<String> {
        let mut h = vec!["scenario".to_string()];
        for stratum in &table.strata {
            for subject in &table.subjects {
                h.push(format!("{subject}:{stratum}"));
            }
        }
        for stratum in &table.strata {
            h.push(format!("winner:{stratum}"));
        }
        for subject in &table.subjects {
            h.push(format!("aggregate:{subject}"));
        }
        h.extend(["aggregate_winner", "inversion", "exception"].map(String::from));
        h
    }

    /// One row per scenario. Winners are written as subject names or `tie`,
    /// aggregates as unreduced `p/q`.
    pub fn write_csv<W: io::Write>(
        &self,
        table: &StratifiedTable,
        out: W,
    ) -> Result<(), ParadoxError> {
        let name = |w: Winner| match w.subject() {
            Some(i) => table.subjects[i].clone(),
            None => "tie".to_string(),
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::header(table))?;
        for (i, s) in self.scenarios.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(s.numerators.iter().flatten().map(u64::to_string));
            row.extend(s.stratum_winners.iter().map(|&x| name(x)));
            row.extend(s.aggregates.iter().map(Fraction::to_string));
            row.push(name(s.aggregate_winner));
            row.push(s.inversion.to_string());
            row.push(s.exception.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads back the CSV written by [`InversionReport::write_csv`] for the
    /// same table.
    pub fn read_csv<R: io::Read>(table: &StratifiedTable, input: R) -> Result<Self, ParadoxError> {
        let expected = Self::header(table);
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        if reader
            .headers()?
            .iter()
            .ne(expected.iter().map(String::as_str))
        {
            return Err(ParadoxError::Parse {
                line: 1,
                message: "report header does not match the table".into(),
            });
        }
        let k = table.strata.len();
        let winner = |text: &str| -> Result<Winner, String> {
            if text == "tie" {
                return Ok(Winner::Tie);
            }
            table
                .subjects
                .iter()
                .position(|s| s == text)
                .map(Winner::from_subject)
                .ok_or_else(|| format!("unknown winner {text:?}"))
        };
        let flag = |text: &str| text.parse::<bool>().map_err(|e| format!("{text:?}: {e}"));

        let mut scenarios = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let fail = |message: String| ParadoxError::Parse { line, message };
            if record.len() != expected.len() {
                return Err(fail(format!("expected {} fields", expected.len())));
            }
            let mut numerators = Vec::with_capacity(k);
            for si in 0..k {
                let mut pair = [0u64; 2];
                for (subject, slot) in pair.iter_mut().enumerate() {
                    let text = &record[1 + 2 * si + subject];
                    *slot = text.parse().map_err(|e| fail(format!("{text:?}: {e}")))?;
                }
                numerators.push(pair);
            }
            let base = 1 + 2 * k;
            let stratum_winners = (0..k)
                .map(|si| winner(&record[base + si]))
                .collect::<Result<Vec<_>, _>>()
                .map_err(fail)?;
            let aggregates = [
                record[base + k].parse::<Fraction>().map_err(fail)?,
                record[base + k + 1].parse::<Fraction>().map_err(fail)?,
            ];
            scenarios.push(Scenario {
                numerators,
                stratum_winners,
                aggregates,
                aggregate_winner: winner(&record[base + k + 2]).map_err(fail)?,
                inversion: flag(&record[base + k + 3]).map_err(fail)?,
                exception: flag(&record[base + k + 4]).map_err(fail)?,
            });
        }
        Ok(Self {
            presumed_dominator: presumed_dominator(&scenarios),
            scenarios,
        })
    }
}

fn presumed_dominator(scenarios: &[Scenario]) -> Option<usize> {
    let mut counts = [0usize; 2];
    for s in scenarios {
        if let Some(d) = s.dominator() {
            counts[d] += 1;
        }
    }
    match counts[0].cmp(&counts[1]) {
        std::cmp::Ordering::Greater => Some(0),
        std::cmp::Ordering::Less => Some(1),
        std::cmp::Ordering::Equal => None,
    }
}

/// Enumerates every numerator combination and flags inversions.
pub fn detect_inversions(table: &StratifiedTable) -> Result<InversionReport, ParadoxError> {
    let count = table.scenario_count();
    if count > u128::from(SCENARIO_LIMIT) {
        return Err(ParadoxError::TooManyScenarios {
            count,
            limit: SCENARIO_LIMIT,
        });
    }
    let cells: Vec<&Cell> = table.cells.iter().flatten().collect();
    let mut current: Vec<u64> = cells.iter().map(|c| c.num_lo).collect();
    let mut scenarios = Vec::with_capacity(count as usize);
    loop {
        let choice: Vec<[u64; 2]> = current.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
        let stratum_winners = compare_unchecked(table, &choice);
        let aggregates = aggregate_unchecked(table, &choice);
        let aggregate_winner = Winner::of(&aggregates[0].value(), &aggregates[1].value());
        scenarios.push(Scenario {
            inversion: is_inversion(&stratum_winners, aggregate_winner),
            exception: false,
            numerators: choice,
            stratum_winners,
            aggregates,
            aggregate_winner,
        });

        // Odometer increment, last cell fastest.
        let mut i = cells.len();
        loop {
            if i == 0 {
                let presumed = presumed_dominator(&scenarios);
                if let Some(dom) = presumed {
                    let rival = Winner::from_subject(1 - dom);
                    for s in &mut scenarios {
                        s.exception = s.stratum_winners.contains(&rival);
                    }
                }
                return Ok(InversionReport {
                    presumed_dominator: presumed,
                    scenarios,
                });
            }
            i -= 1;
            if current[i] < cells[i].num_hi {
                current[i] += 1;
                break;
            }
            current[i] = cells[i].num_lo;
        }
    }
}
