//! The `switchset` command-line front end.
//!
//! Every subcommand writes CSV to standard output or to `--output`. Exit
//! codes: 0 on success, 1 for usage errors, 2 for data errors.

use crate::dynamics::{self, SchemeKind, SchemeSpec, StateRole};
use crate::format::{sig12, sig12_ratio};
use crate::inference::{self, ConfusionModel, Hypothesis};
use crate::model::{make_config, Outcome, SetConfig};
use crate::paradox::{detect_inversions, StratifiedTable};
use crate::sampler::{evolve_and_sample, SwitchPolicy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "switchset",
    version,
    about = "Simulate and analyse sets with randomly switching elements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write output here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate epochs of draws; one CSV row per epoch.
    Simulate {
        #[command(flatten)]
        population: Population,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        epochs: u64,
        /// Draws per epoch.
        #[arg(long)]
        draws: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Trajectory of one start state under a modular scheme.
    Orbit {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        start: u64,
        /// Stop after this many steps and fail if no state has repeated.
        #[arg(long)]
        max_steps: Option<u64>,
        /// Print one summary row instead of the path.
        #[arg(long)]
        summary: bool,
    },
    /// Fixed points, cycles and transients of a modular scheme.
    Classify {
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Mean, mean square and variance of the short-term mean.
    Stats {
        #[command(flatten)]
        population: Population,
    },
    /// Monte Carlo evaluation of the threshold decision rule.
    Decide {
        #[command(flatten)]
        population: Population,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Draws per epoch.
        #[arg(long)]
        draws: u64,
        #[arg(long, default_value_t = 1)]
        epochs: u64,
        #[arg(long)]
        replicates: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Posterior over source classes for one observation.
    Bayes {
        /// JSON document with `priors` (3 numbers) and `likelihoods` (3x2).
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_parser = parse_outcome)]
        observed: Outcome,
    },
    /// Enumerate Simpson inversions of an interval-valued table.
    Simpson {
        /// CSV with header `subject,stratum,num_lo,num_hi,den`.
        #[arg(long)]
        table: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Population {
    #[arg(long, allow_negative_numbers = true)]
    pub na: i64,
    #[arg(long, allow_negative_numbers = true)]
    pub nb: i64,
    #[arg(long, allow_negative_numbers = true)]
    pub nc: i64,
}

impl Population {
    fn config(&self) -> Result<SetConfig, CliError> {
        make_config(self.na, self.nb, self.nc).map_err(data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Scheme,
    Random,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[arg(long, value_enum, default_value_t = PolicyKind::Random)]
    pub policy: PolicyKind,
    /// Scheme for `--policy scheme`; its modulus is n_c + 1.
    #[arg(long, value_parser = parse_kind)]
    pub scheme: Option<SchemeKind>,
    #[arg(long)]
    pub k: Option<u64>,
    /// Probability that a switching element projects as A (`--policy random`).
    #[arg(long, default_value_t = 0.5)]
    pub pi_a: f64,
    /// Switching count of epoch 0.
    #[arg(long, default_value_t = 0)]
    pub initial_s: u64,
}

impl PolicyArgs {
    fn policy(&self, config: &SetConfig) -> Result<SwitchPolicy, CliError> {
        match self.policy {
            PolicyKind::Scheme => {
                let kind = self
                    .scheme
                    .ok_or_else(|| CliError::Usage("--policy scheme requires --scheme".into()))?;
                let k = self
                    .k
                    .ok_or_else(|| CliError::Usage("--policy scheme requires --k".into()))?;
                let scheme = SchemeSpec::new(kind, k, config.n_c() + 1).map_err(data)?;
                SwitchPolicy::scheme(config.n_c(), scheme, self.initial_s).map_err(data)
            }
            PolicyKind::Random => {
                SwitchPolicy::random(config.n_c(), self.pi_a, self.initial_s).map_err(data)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    #[arg(long, value_parser = parse_kind)]
    pub scheme: SchemeKind,
    #[arg(long)]
    pub k: u64,
    /// Modulus M; states are 0..M.
    #[arg(long = "mod")]
    pub modulus: u64,
}

impl SchemeArgs {
    fn spec(&self) -> Result<SchemeSpec, CliError> {
        SchemeSpec::new(self.scheme, self.k, self.modulus).map_err(data)
    }
}

fn parse_kind(s: &str) -> Result<SchemeKind, String> {
    s.parse()
}

fn parse_outcome(s: &str) -> Result<Outcome, String> {
    s.parse()
}

/// Parses and runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write!(stdout, "{e}").map_err(data)
                }
                _ => Err(CliError::Usage(
                    e.render().to_string().trim_end().to_string(),
                )),
            };
        }
    };
    let mut buf = Vec::new();
    execute(&cli.command, &mut buf)?;
    match &cli.output {
        Some(path) => std::fs::write(path, &buf)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => stdout.write_all(&buf).map_err(data),
    }
}

fn csv_writer(out: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::Writer::from_writer(out)
}

fn execute(command: &Command, out: &mut Vec<u8>) -> Result<(), CliError> {
    match command {
        Command::Simulate {
            population,
            policy,
            epochs,
            draws,
            seed,
        } => {
            let config = population.config()?;
            let policy = policy.policy(&config)?;
            let series =
                evolve_and_sample(&config, &policy, *epochs, *draws, *seed).map_err(data)?;
            series.write_csv(out).map_err(data)
        }
        Command::Orbit {
            scheme,
            start,
            max_steps,
            summary,
        } => orbit(&scheme.spec()?, *start, *max_steps, *summary, out),
        Command::Classify { scheme } => classify(&scheme.spec()?, out),
        Command::Stats { population } => {
            let m = inference::moments(&population.config()?);
            let mut w = csv_writer(out);
            w.write_record(["mean", "mean_square", "variance"])
                .map_err(data)?;
            w.write_record([
                sig12_ratio(&m.mean),
                sig12_ratio(&m.mean_square),
                sig12_ratio(&m.variance),
            ])
            .map_err(data)?;
            w.flush().map_err(data)
        }
        Command::Decide {
            population,
            policy,
            draws,
            epochs,
            replicates,
            seed,
        } => {
            let config = population.config()?;
            let policy = policy.policy(&config)?;
            let tally =
                inference::decision_tally(&config, &policy, *draws, *epochs, *replicates, *seed)
                    .map_err(data)?;
            let truth = inference::ground_truth(&config);
            let error_rate = truth.map(|t| {
                let wrong = if t == Hypothesis::A {
                    tally.chose_b
                } else {
                    tally.chose_a
                };
                sig12(wrong as f64 / tally.replicates as f64)
            });
            let mut w = csv_writer(out);
            w.write_record([
                "replicates",
                "chose_a",
                "chose_b",
                "frequency_a",
                "truth",
                "error_rate",
            ])
            .map_err(data)?;
            w.write_record([
                tally.replicates.to_string(),
                tally.chose_a.to_string(),
                tally.chose_b.to_string(),
                sig12(tally.frequency_a()),
                truth.map_or_else(|| "none".to_string(), |t| t.to_string()),
                error_rate.unwrap_or_default(),
            ])
            .map_err(data)?;
            w.flush().map_err(data)
        }
        Command::Bayes { model, observed } => {
            let text = std::fs::read_to_string(model)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", model.display())))?;
            let model = ConfusionModel::from_json(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", model.display())))?;
            let posterior = inference::posterior_source(&model, *observed).map_err(data)?;
            let mut w = csv_writer(out);
            w.write_record([
                "observed",
                "p_observed",
                "posterior_a",
                "posterior_b",
                "posterior_c",
            ])
            .map_err(data)?;
            let mut row = vec![
                observed.to_string(),
                sig12(inference::observation_probability(&model, *observed)),
            ];
            row.extend(posterior.iter().map(|&p| sig12(p)));
            w.write_record(&row).map_err(data)?;
            w.flush().map_err(data)
        }
        Command::Simpson { table } => {
            let table = parse_table(table)?;
            let report = detect_inversions(&table).map_err(data)?;
            report.write_csv(&table, out).map_err(data)
        }
    }
}

/// Reads and validates a stratified table CSV file.
pub fn parse_table(path: &Path) -> Result<StratifiedTable, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    StratifiedTable::read_csv(BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn orbit(
    scheme: &SchemeSpec,
    start: u64,
    max_steps: Option<u64>,
    summary: bool,
    out: &mut Vec<u8>,
) -> Result<(), CliError> {
    if let Some(limit) = max_steps {
        // Surfaces truncation before a report is built.
        dynamics::trajectory(scheme, start, limit).map_err(data)?;
    }
    let report = dynamics::orbit_report(scheme, start).map_err(data)?;
    let mut w = csv_writer(out);
    if summary {
        w.write_record([
            "start",
            "distinct_states",
            "path_length",
            "tail_length",
            "cycle_length",
            "max_value",
            "is_fixed_point",
            "cycle",
        ])
        .map_err(data)?;
        let cycle: Vec<String> = report.cycle.iter().map(u64::to_string).collect();
        w.write_record([
            report.start.to_string(),
            report.distinct_states().to_string(),
            report.path_length.to_string(),
            report.tail_length.to_string(),
            report.cycle.len().to_string(),
            report.max_value.to_string(),
            report.is_fixed_point.to_string(),
            cycle.join(" "),
        ])
        .map_err(data)?;
    } else {
        w.write_record(["step", "state", "on_cycle"])
            .map_err(data)?;
        for (step, &state) in report.distinct_path().iter().enumerate() {
            w.write_record([
                step.to_string(),
                state.to_string(),
                report.on_cycle(state).to_string(),
            ])
            .map_err(data)?;
        }
    }
    w.flush().map_err(data)
}

fn classify(scheme: &SchemeSpec, out: &mut Vec<u8>) -> Result<(), CliError> {
    let table = dynamics::one_step_table(scheme).map_err(data)?;
    let classes = dynamics::classify_states(scheme).map_err(data)?;
    let mut w = csv_writer(out);
    w.write_record(["state", "successor", "role", "cycle"])
        .map_err(data)?;
    for (state, succ) in table.iter().enumerate() {
        let (role, cycle) = match classes.role(state as u64).expect("state in range") {
            StateRole::FixedPoint => ("fixed", String::new()),
            StateRole::Cycle(id) => ("cycle", id.to_string()),
            StateRole::Transient => ("transient", String::new()),
        };
        w.write_record([state.to_string(), succ.to_string(), role.to_string(), cycle])
            .map_err(data)?;
    }
    w.flush().map_err(data)
}

/// Entry point used by the binary: runs and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match run(args, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("switchset: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> String {
        let mut out = Vec::new();
        run(
            std::iter::once("switchset").chain(args.iter().copied()),
            &mut out,
        )
        .unwrap();
        String::from_utf8(out).unwrap()
    }

    fn run_err(args: &[&str]) -> CliError {
        let mut out = Vec::new();
        run(
            std::iter::once("switchset").chain(args.iter().copied()),
            &mut out,
        )
        .unwrap_err()
    }

    #[test]
    fn stats_prints_moments() {
        assert_eq!(
            run_ok(&["stats", "--na", "5", "--nb", "2", "--nc", "3"]),
            "mean,mean_square,variance\n0.3,0.12,0.03\n"
        );
    }

    #[test]
    fn orbit_prints_distinct_path() {
        let text = run_ok(&[
            "orbit", "--scheme", "collatz", "--k", "3", "--mod", "55", "--start", "7",
        ]);
        let states: Vec<u64> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(states.len(), 17);
        assert_eq!(states.iter().max(), Some(&52));

        let summary = run_ok(&[
            "orbit",
            "--scheme",
            "collatz",
            "--k",
            "3",
            "--mod",
            "55",
            "--start",
            "7",
            "--summary",
        ]);
        assert_eq!(summary.lines().nth(1), Some("7,17,16,14,3,52,false,1 4 2"));
    }

    #[test]
    fn classify_lists_roles() {
        let text = run_ok(&[
            "classify",
            "--scheme",
            "multiplicative",
            "--k",
            "2",
            "--mod",
            "6",
        ]);
        assert_eq!(
            text,
            "state,successor,role,cycle\n0,0,fixed,\n1,2,transient,\n2,4,cycle,0\n3,0,transient,\n4,2,cycle,0\n5,4,transient,\n"
        );
    }

    #[test]
    fn usage_and_data_errors_have_distinct_codes() {
        assert_eq!(run_err(&["frobnicate"]).exit_code(), 1);
        assert_eq!(run_err(&["stats", "--na", "5"]).exit_code(), 1);
        assert_eq!(
            run_err(&["stats", "--na", "0", "--nb", "0", "--nc", "0"]).exit_code(),
            2
        );
        assert_eq!(
            run_err(&["stats", "--na", "-1", "--nb", "0", "--nc", "1"]).exit_code(),
            2
        );
        assert_eq!(
            run_err(&[
                "orbit",
                "--scheme",
                "collatz",
                "--k",
                "3",
                "--mod",
                "55",
                "--start",
                "7",
                "--max-steps",
                "3"
            ])
            .exit_code(),
            2
        );
        assert_eq!(
            run_err(&[
                "simulate", "--na", "5", "--nb", "2", "--nc", "3", "--policy", "scheme",
                "--epochs", "2", "--draws", "2", "--seed", "1"
            ])
            .exit_code(),
            1
        );
        assert_eq!(
            run_err(&["simpson", "--table", "/nonexistent/table.csv"]).exit_code(),
            2
        );
    }

    #[test]
    fn decide_without_ground_truth_leaves_error_rate_blank() {
        let text = run_ok(&[
            "decide",
            "--na",
            "3",
            "--nb",
            "3",
            "--nc",
            "2",
            "--draws",
            "5",
            "--replicates",
            "20",
            "--seed",
            "4",
        ]);
        assert!(text.lines().nth(1).unwrap().ends_with(",none,"));
    }
}
