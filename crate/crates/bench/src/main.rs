use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use saddle3::eigen::DEFAULT_EIGEN_CAP;
use saddle3::gmres::{DEFAULT_MAXIT, DEFAULT_TOL};
use saddle3::precond::PrecondKind;
use saddle3::problems::VChoice;
use saddle3_bench::{
    cmd_solve, cmd_spectrum, cmd_table, cmd_verify, operator_label, write_table, ProblemSpec,
    RunConfig, SStrategy,
};

#[derive(Parser)]
#[command(name = "saddle3-bench", version, about = "Block saddle point solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run GMRES for each (p, preconditioner) pair and print CSV rows.
    Solve(Common),
    /// Like solve, but write the table to --out.
    Table(Common),
    /// Write the dense spectrum of each operator to a CSV in --out.
    Spectrum(Common),
    /// Run the certification suite; exits 1 if any check fails.
    Verify(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    Ex1,
    Ex2,
    Mm,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "ex1")]
    problem: Problem,
    /// Grid sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    p: Vec<usize>,
    /// Vector choice for ex2: decay or sparse-random.
    #[arg(long, default_value = "decay", value_parser = parse_choice)]
    choice: VChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Preconditioners, comma separated: none, PD, P1, P.
    #[arg(long, value_delimiter = ',', default_value = "PD,P1,P", value_parser = parse_kind)]
    precond: Vec<PrecondKind>,
    /// identity, diag or exact.
    #[arg(long, default_value = "identity", value_parser = parse_strategy)]
    s_strategy: SStrategy,
    /// Multiply the chosen S by this factor.
    #[arg(long, default_value_t = 1.0)]
    s_scale: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAXIT)]
    maxit: usize,
    /// Output file (table, solve) or directory (spectrum).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spectrum operators, comma separated: raw, PD, P1, P.
    #[arg(long, value_delimiter = ',', default_value = "raw,PD,P1,P", value_parser = parse_kind)]
    operators: Vec<PrecondKind>,
    #[arg(long, default_value_t = DEFAULT_EIGEN_CAP)]
    desk_cap: usize,
    /// Rows run concurrently; 1 keeps timings clean.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// MatrixMarket files for --problem mm.
    #[arg(long)]
    mm_a: Option<PathBuf>,
    #[arg(long)]
    mm_b: Option<PathBuf>,
    #[arg(long)]
    mm_c: Option<PathBuf>,
}

fn parse_choice(s: &str) -> Result<VChoice, String> {
    VChoice::parse(s).map_err(|e| e.to_string())
}

fn parse_kind(s: &str) -> Result<PrecondKind, String> {
    PrecondKind::parse(s).map_err(|e| e.to_string())
}

fn parse_strategy(s: &str) -> Result<SStrategy, String> {
    SStrategy::parse(s).map_err(|e| e.to_string())
}

impl Common {
    fn config(self) -> Result<RunConfig, String> {
        let problem = match self.problem {
            Problem::Ex1 => ProblemSpec::Ex1,
            Problem::Ex2 => ProblemSpec::Ex2 {
                choice: self.choice,
            },
            Problem::Mm => match (self.mm_a, self.mm_b, self.mm_c) {
                (Some(a), Some(b), Some(c)) => ProblemSpec::Mm { a, b, c },
                _ => return Err("--problem mm needs --mm-a, --mm-b and --mm-c".into()),
            },
        };
        Ok(RunConfig {
            problem,
            ps: self.p,
            seed: self.seed,
            preconds: self.precond,
            s_strategy: self.s_strategy,
            s_scale: self.s_scale,
            tol: self.tol,
            maxit: self.maxit,
            out: self.out,
            operators: self.operators,
            desk_cap: self.desk_cap,
            jobs: self.jobs,
        })
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    let e = |e: saddle3::Error| e.to_string();
    match cli.command {
        Command::Solve(c) => {
            let cfg = c.config()?;
            let rows = cmd_solve(&cfg).map_err(e)?;
            match &cfg.out {
                Some(path) => {
                    write_table(&rows, std::fs::File::create(path).map_err(|x| x.to_string())?)
                        .map_err(e)?
                }
                None => write_table(&rows, std::io::stdout().lock()).map_err(e)?,
            }
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("{} p={:?}: {}", r.precond.label(), r.p, r.error.as_deref().unwrap_or(""));
            }
            Ok(true)
        }
        Command::Table(c) => {
            let cfg = c.config()?;
            let rows = cmd_table(&cfg).map_err(e)?;
            for r in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("{} p={:?}: {}", r.precond.label(), r.p, r.error.as_deref().unwrap_or(""));
            }
            Ok(true)
        }
        Command::Spectrum(c) => {
            let cfg = c.config()?;
            for o in cmd_spectrum(&cfg).map_err(e)? {
                println!(
                    "{:<4} {}  near 1: {}/{}  spread about 1: {:.3e}",
                    operator_label(o.report.operator),
                    o.path.display(),
                    o.report.n_unit,
                    o.report.eigenvalues.len(),
                    o.report.spread_about_one()
                );
            }
            Ok(true)
        }
        Command::Verify(c) => {
            let cfg = c.config()?;
            let report = cmd_verify(&cfg).map_err(e)?;
            for check in &report.checks {
                println!("{check}");
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
