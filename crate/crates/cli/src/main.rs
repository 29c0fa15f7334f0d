use std::path::PathBuf;
use std::process::ExitCode;

use cayley_cli::{execute, parse_index_list, Experiment, ExperimentConfig, Format};
use cayley_core::cogrowth::CheegerMode;
use cayley_core::Error;
use clap::{Args, Parser, Subcommand};

// an alias keeps clap from reading the list as a repeated flag
type Indices = Vec<usize>;

#[derive(Parser)]
#[command(name = "cayley", version, about = "Deterministic experiments on marked groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run(Box<RunArgs>),
    /// List the experiment names.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment name; may instead come from `--config`.
    experiment: Option<Experiment>,
    /// `key = value` config file. Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Group-definition file (repeatable).
    #[arg(long)]
    group: Vec<PathBuf>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    format: Option<Format>,
    /// Directory for the report; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Free ranks, e.g. `2..5`.
    #[arg(long, value_parser = parse_index_list)]
    ranks: Option<Indices>,
    /// Values of `n` for hn-limit, e.g. `1..3`.
    #[arg(long, value_parser = parse_index_list)]
    n: Option<Indices>,
    /// Cheeger mode: paper, balanced or ball.
    #[arg(long)]
    mode: Option<CheegerMode>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    element: Option<String>,
    /// Comma-separated conjugating words.
    #[arg(long)]
    conjugators: Option<String>,
    #[arg(long)]
    multiplier: Option<String>,
    /// Comma-separated elements of `A`.
    #[arg(long)]
    a_set: Option<String>,
    #[arg(long)]
    basis_n: Option<usize>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Certify the planted dependent set instead of `T`.
    #[arg(long)]
    planted: bool,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    exponent: Option<u32>,
    #[arg(long)]
    word_length: Option<usize>,
    #[arg(long)]
    max_cosets: Option<usize>,
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig, Error> {
        let mut c = match (&self.config, self.experiment) {
            (Some(path), exp) => {
                let mut c = ExperimentConfig::load(path)?;
                if let Some(e) = exp {
                    c.experiment = e;
                }
                c
            }
            (None, Some(e)) => ExperimentConfig::new(e),
            (None, None) => return Err(Error::InvalidInput("name an experiment or pass --config".into())),
        };
        if !self.group.is_empty() {
            c.groups = self.group;
        }
        macro_rules! set {
            ($($field:ident),*) => {
                $(if self.$field.is_some() { c.$field = self.$field; })*
            };
        }
        set!(depth, out, threads, ranks, n, mode, radius, budget, element, conjugators, multiplier, a_set);
        set!(basis_n, length, samples, rank, exponent, word_length, max_cosets);
        if let Some(f) = self.format {
            c.format = f;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c.planted |= self.planted;
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{e}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Run(args) => args,
    };
    let result = (*args).into_config().and_then(|c| execute(&c));
    match result {
        Ok(Some(path)) => {
            eprintln!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
