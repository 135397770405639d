//! Command-line front end. `fibervm run <file>`, `fibervm trace <file>`,
//! `fibervm examples`.

use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::diagnostics::format_backtrace;
use crate::lang::SourceProgram;
use crate::machine::{run, Outcome, Rule, RunOptions, RunResult};
use crate::runtime::{ContinuationMode, RuntimeConfig};
use crate::stdlib::corpus_entries;

pub const EXIT_DONE: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fibervm",
    version,
    about = "Run effect-handler programs on a segmented-stack machine"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a program and print its value and output log.
    Run(RunArgs),
    /// Same as `run --trace`.
    Trace(RunArgs),
    /// List the shipped example programs.
    Examples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Oneshot,
    Multishot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "oneshot")]
    pub mode: Mode,
    #[arg(long, value_enum, default_value = "on")]
    pub opt_exn: Switch,
    /// Print one line per step: index, rule, context.
    #[arg(long)]
    pub trace: bool,
    /// Print metrics as key=value lines.
    #[arg(long)]
    pub metrics: bool,
    /// Print metrics as one JSON object.
    #[arg(long)]
    pub metrics_json: bool,
    #[arg(long, default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_steps: u64,
    #[arg(long, default_value_t = 16)]
    pub stack_init: u64,
    #[arg(long, default_value_t = 16)]
    pub red_zone: u64,
    #[arg(long, default_value_t = 64)]
    pub cache_cap: usize,
    #[arg(long, value_enum, default_value = "on")]
    pub backtrace_on_error: Switch,
    /// Print the backtrace just before the first step using this rule.
    #[arg(long, value_parser = parse_rule)]
    pub break_on: Option<Rule>,
}

fn parse_rule(s: &str) -> Result<Rule, String> {
    Rule::from_name(s).ok_or_else(|| format!("unknown rule `{s}`"))
}

impl RunArgs {
    pub fn options(&self) -> RunOptions {
        RunOptions {
            runtime: RuntimeConfig {
                initial_words: self.stack_init,
                red_zone_words: self.red_zone,
                cache_capacity: self.cache_cap,
                mode: match self.mode {
                    Mode::Oneshot => ContinuationMode::OneShot,
                    Mode::Multishot => ContinuationMode::MultiShot,
                },
                ..RuntimeConfig::default()
            },
            opt_exn: self.opt_exn.on(),
            trace: self.trace,
            max_steps: self.max_steps,
            backtrace_on_error: self.backtrace_on_error.on(),
            break_on: self.break_on,
            check_invariants: false,
        }
    }
}

/// Writes the report for a finished run and returns the exit code.
pub fn report(result: &RunResult, args: &RunArgs, out: &mut dyn Write) -> io::Result<i32> {
    if args.trace {
        for ev in &result.trace {
            writeln!(out, "{ev}")?;
        }
    }
    if let (Some(rule), Some(bt)) = (args.break_on, &result.break_backtrace) {
        writeln!(out, "break before {rule}:")?;
        for line in format_backtrace(bt) {
            writeln!(out, "  {line}")?;
        }
    }
    let code = match &result.outcome {
        Outcome::Done(v) => {
            writeln!(out, "=> {v}")?;
            for entry in &result.output {
                writeln!(out, "{entry}")?;
            }
            EXIT_DONE
        }
        Outcome::Fatal { kind, backtrace } => {
            for entry in &result.output {
                writeln!(out, "{entry}")?;
            }
            writeln!(out, "fatal: {kind}")?;
            if args.backtrace_on_error.on() {
                for line in format_backtrace(backtrace) {
                    writeln!(out, "  {line}")?;
                }
            }
            EXIT_FATAL
        }
        Outcome::StepBudgetExceeded => {
            for entry in &result.output {
                writeln!(out, "{entry}")?;
            }
            writeln!(out, "step budget of {} exceeded", args.max_steps)?;
            EXIT_BUDGET
        }
    };
    if !result.leaks.is_empty() {
        writeln!(out, "leaked continuations: {}", result.leaks.len())?;
        for leak in &result.leaks {
            writeln!(
                out,
                "  {} captured at step {}",
                leak.kont, leak.created_step
            )?;
            for line in format_backtrace(&leak.backtrace) {
                writeln!(out, "    {line}")?;
            }
        }
    }
    if args.metrics {
        for (k, v) in result.metrics.to_flat() {
            writeln!(out, "{k}={v}")?;
        }
    }
    if args.metrics_json {
        writeln!(out, "{}", result.metrics.to_json())?;
    }
    Ok(code)
}

fn run_file(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let text = match std::fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => {
            writeln!(err, "error: cannot read {}: {e}", args.file.display())?;
            return Ok(EXIT_USAGE);
        }
    };
    let program = match SourceProgram::from_source(&args.file, text) {
        Ok(p) => p,
        Err(e) => {
            writeln!(err, "error: {}: {e}", args.file.display())?;
            return Ok(EXIT_USAGE);
        }
    };
    let options = args.options();
    if let Err(e) = options.runtime.validate() {
        writeln!(err, "error: {e}")?;
        return Ok(EXIT_USAGE);
    }
    report(&run(&program, &options), args, out)
}

/// Runs the CLI on `argv` (including the program name).
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_DONE
            };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_file(&args, out, err),
        Command::Trace(mut args) => {
            args.trace = true;
            run_file(&args, out, err)
        }
        Command::Examples => corpus_entries()
            .iter()
            .try_for_each(|e| {
                let kind = if e.regular { "" } else { "  (demo)" };
                writeln!(out, "examples/{}.fib{kind}", e.name)
            })
            .map(|_| EXIT_DONE),
    };
    result.unwrap_or(EXIT_USAGE)
}
