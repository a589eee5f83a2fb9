//! `rssbound`: localization bounds for RSS networks from the command line.
//!
//! Exit codes: 0 success, 1 input error, 2 singular or unidentifiable
//! scenario, 3 verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use rssbound::report::{parse_sweep_csv, sweep_csv, sweep_rows, AnalysisReport, Nuisance, CSV_HEADER};
use rssbound::scenario::{parse_values, sweep_documents, ScenarioDocument, SCHEMA};
use rssbound::svg::{render_report, render_sweep, EllipseSelection, SweepMetric};
use rssbound::verify::{run_suite, Suite};
use rssbound::Error;

const EXIT_INPUT: u8 = 1;
const EXIT_SINGULAR: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "rssbound", version, about = "Cramér-Rao bounds and information ellipses for RSS localization")]
struct Cli {
    /// Print the annotated scenario schema and exit.
    #[arg(long)]
    schema: bool,

    /// Print elapsed time on stderr.
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NuisanceArg {
    None,
    /// Unknown transmit power.
    Power,
    /// Unknown path-loss exponent.
    Gamma,
}

impl From<NuisanceArg> for Nuisance {
    fn from(n: NuisanceArg) -> Self {
        match n {
            NuisanceArg::None => Nuisance::None,
            NuisanceArg::Power => Nuisance::TransmitPower,
            NuisanceArg::Gamma => Nuisance::PathLossExponent,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EllipsesArg {
    Both,
    Ie,
    Ee,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    GradientCheck,
    EmpiricalFim,
    CrlbCoverage,
    SchurOracle,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Net FIM, ellipses and PEB for every unknown-position node.
    Analyze {
        scenario: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the document's confidence scale k.
        #[arg(long)]
        k: Option<f64>,
        /// Nuisance parameter estimated with each source.
        #[arg(long, value_enum, default_value = "none")]
        nuisance: NuisanceArg,
    },
    /// Re-run the analysis for each value of one scenario field; writes CSV.
    Sweep {
        scenario: PathBuf,
        /// e.g. source.x, source.<id>.y, delta, topology.n, sample_count, model.gamma
        #[arg(long)]
        axis: String,
        /// `a,b,c` or inclusive `start:stop:step`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Drop sweep points that fail validation instead of aborting.
        #[arg(long)]
        skip_invalid: bool,
        #[arg(long, value_enum, default_value = "none")]
        nuisance: NuisanceArg,
    },
    /// Render a report, sweep table or scenario as SVG.
    Plot {
        input: PathBuf,
        /// Ellipse scale; semi-axes are √(k·eigenvalue).
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Comma-separated node ids; all nodes when omitted.
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        ellipses: EllipsesArg,
        /// Column drawn for sweep tables: mu, eta, eccentricity, area, peb_m.
        #[arg(long, default_value = "peb_m")]
        metric: String,
    },
    /// Run Monte Carlo and oracle checks on a scenario.
    Verify {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        /// Trials per suite; each suite has its own default.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::SingularFim
            | Error::SingularBlock(_)
            | Error::NotPsd { .. }
            | Error::IllConditionedSubtraction { .. }
            | Error::EmptyParameterVector => EXIT_SINGULAR,
            Error::InsufficientConvergence { .. } => EXIT_VERIFY,
            _ => EXIT_INPUT,
        };
        let message = match &e {
            Error::Validation(list) => {
                let mut m = format!("{} validation error(s):", list.len());
                for v in list {
                    m.push_str(&format!("\n  {v}"));
                }
                m
            }
            other => other.to_string(),
        };
        Failure { code, message }
    }
}

fn input_error(message: String) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))
}

fn write(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| input_error(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn warn(lines: &[String]) {
    for w in lines {
        eprintln!("warning: {w}");
    }
}

fn load(path: &Path) -> Result<ScenarioDocument, Failure> {
    Ok(ScenarioDocument::from_toml(&read(path)?)?)
}

fn analyze_doc(doc: &ScenarioDocument, k: Option<f64>, nuisance: Nuisance) -> Result<AnalysisReport, Failure> {
    let sc = doc.to_scenario().map_err(Error::Validation)?;
    let k = k.unwrap_or(doc.analysis.confidence_k);
    if !(k > 0.0 && k.is_finite()) {
        return Err(input_error("k must be positive".into()));
    }
    Ok(AnalysisReport::build(&sc, &doc.analysis.outputs, k, nuisance)?)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Analyze {
            scenario,
            out,
            k,
            nuisance,
        } => {
            let report = analyze_doc(&load(&scenario)?, k, nuisance.into())?;
            warn(&report.warnings);
            write(&out, &report.to_toml())
        }
        Command::Sweep {
            scenario,
            axis,
            values,
            out,
            skip_invalid,
            nuisance,
        } => {
            let doc = load(&scenario)?;
            let values = parse_values(&values)?;
            let docs = sweep_documents(&doc, &axis, &values)?;
            let nuisance: Nuisance = nuisance.into();
            let results: Vec<_> = docs
                .par_iter()
                .zip(values.par_iter())
                .map(|(d, &v)| {
                    let sc = d.to_scenario().map_err(Error::Validation)?;
                    sweep_rows(&sc, v, &d.analysis.outputs, nuisance)
                })
                .collect();
            let mut rows = Vec::new();
            for (r, v) in results.into_iter().zip(&values) {
                match r {
                    Ok(r) => rows.extend(r),
                    Err(e @ (Error::Validation(_) | Error::BelowReferenceDistance { .. })) if skip_invalid => {
                        eprintln!("warning: skipping {axis} = {v}: {}", Failure::from(e).message);
                    }
                    Err(e) => {
                        let f = Failure::from(e);
                        return Err(Failure {
                            code: f.code,
                            message: format!("{axis} = {v}: {}", f.message),
                        });
                    }
                }
            }
            write(&out, &sweep_csv(&axis, &rows))
        }
        Command::Plot {
            input,
            k,
            nodes,
            out,
            ellipses,
            metric,
        } => {
            let text = read(&input)?;
            let which = match ellipses {
                EllipsesArg::Both => EllipseSelection::default(),
                EllipsesArg::Ie => EllipseSelection {
                    information: true,
                    error: false,
                },
                EllipsesArg::Ee => EllipseSelection {
                    information: false,
                    error: true,
                },
            };
            let svg = if text.starts_with(CSV_HEADER) {
                let metric =
                    SweepMetric::parse(&metric).ok_or_else(|| input_error(format!("unknown metric `{metric}`")))?;
                let (axis, rows) = parse_sweep_csv(&text)?;
                render_sweep(&axis, &rows, metric, &nodes)?
            } else {
                let value: toml::Table = text
                    .parse()
                    .map_err(|_| Failure::from(ScenarioDocument::from_toml(&text).unwrap_err()))?;
                let report = if value.contains_key("report_version") {
                    AnalysisReport::from_toml(&text)?
                } else {
                    let doc = ScenarioDocument::from_toml(&text)?;
                    let r = analyze_doc(&doc, None, Nuisance::None)?;
                    warn(&r.warnings);
                    r
                };
                render_report(&report, k, &nodes, which)?
            };
            write(&out, &svg)
        }
        Command::Verify {
            scenario,
            suite,
            trials,
            seed,
            out,
        } => {
            let doc = load(&scenario)?;
            let sc = doc.to_scenario().map_err(Error::Validation)?;
            let suite = match suite {
                SuiteArg::GradientCheck => Suite::GradientCheck,
                SuiteArg::EmpiricalFim => Suite::EmpiricalFim,
                SuiteArg::CrlbCoverage => Suite::CrlbCoverage,
                SuiteArg::SchurOracle => Suite::SchurOracle,
                SuiteArg::All => Suite::All,
            };
            let report = run_suite(&sc, suite, trials, seed)?;
            write(&out, &report.to_toml())?;
            if report.passed() {
                Ok(())
            } else {
                let failed: Vec<_> = report
                    .checks
                    .iter()
                    .filter(|c| c.hard && !c.passed)
                    .map(|c| format!("{}: {}", c.suite, c.name))
                    .collect();
                Err(Failure {
                    code: EXIT_VERIFY,
                    message: format!("verification failed:\n  {}", failed.join("\n  ")),
                })
            }
        }
    }
}

fn configure_workers() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("RSSBOUND_WORKERS") {
        let n: usize = v
            .parse()
            .map_err(|_| input_error(format!("RSSBOUND_WORKERS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| input_error(format!("cannot configure worker pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved here
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.schema {
        print!("{SCHEMA}");
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(EXIT_INPUT);
    };
    let start = Instant::now();
    let result = configure_workers().and_then(|()| run(command));
    if cli.timing {
        eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
