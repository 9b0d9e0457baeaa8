use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use greenberg_cli::config::{parse_config, parse_int, parse_levels};
use greenberg_cli::run::{run, Class, Overrides};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Count,
    Series,
    Measure,
    Mult,
    Ordjac,
    Hensel,
    Greenberg,
    Integrate,
    #[value(alias = "cov")]
    CovCheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Count => "count",
            Command::Series => "series",
            Command::Measure => "measure",
            Command::Mult => "mult",
            Command::Ordjac => "ordjac",
            Command::Hensel => "hensel",
            Command::Greenberg => "greenberg",
            Command::Integrate => "integrate",
            Command::CovCheck => "cov-check",
        }
    }
}

/// Point counts, motivic measures and change of variables checks on
/// truncated arc spaces of formal schemes.
#[derive(Debug, Parser)]
#[command(name = "greenberg-measure", version)]
struct Cli {
    command: Command,
    /// job file
    #[arg(long)]
    config: PathBuf,
    /// residue field orders, comma separated
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<u64>>,
    /// `a..b` or `n` (meaning 0..n)
    #[arg(long)]
    levels: Option<String>,
    /// target error exponent m, for an error at most q^-m
    #[arg(long)]
    precision: Option<i64>,
    /// enumeration budget, `2^24` style accepted
    #[arg(long)]
    budget: Option<String>,
    /// write `<command>.report` and `<command>.tsv` here
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn fail(class: Class, msg: &str) -> ExitCode {
    eprintln!("{msg}");
    println!("class={}", class.name());
    ExitCode::from(class.code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            return fail(Class::Config, &format!("threads: {e}"));
        }
    }
    let src = match std::fs::read_to_string(&cli.config) {
        Ok(s) => s,
        Err(e) => return fail(Class::Config, &format!("{}: {e}", cli.config.display())),
    };
    let cfg = match parse_config(&src) {
        Ok(c) => c,
        Err(errs) => {
            return fail(Class::Config, &format!("{}:\n{errs}", cli.config.display()));
        }
    };
    let mut ov = Overrides {
        q: cli.q.clone(),
        precision: cli.precision,
        ..Overrides::default()
    };
    if let Some(l) = &cli.levels {
        match parse_levels(l) {
            Some(v) => ov.levels = Some(v),
            None => return fail(Class::Config, &format!("bad --levels `{l}`")),
        }
    }
    if let Some(b) = &cli.budget {
        match parse_int(b) {
            Some(v) if v > 0 => ov.budget = Some(v),
            _ => return fail(Class::Config, &format!("bad --budget `{b}`")),
        }
    }
    let command = cli.command.name();
    let out = run(&cfg, command, &ov);
    print!("{}", out.report);
    if let Some(dir) = &cli.out {
        let write = std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(dir.join(format!("{command}.report")), &out.report))
            .and_then(|_| std::fs::write(dir.join(format!("{command}.tsv")), &out.table));
        if let Err(e) = write {
            return fail(Class::Config, &format!("{}: {e}", dir.display()));
        }
    }
    ExitCode::from(out.class.code() as u8)
}
