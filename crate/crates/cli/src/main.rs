//! Command-line front end for the reachability checker.
//!
//! Subcommands: `verify` (analyze one program), `types` (report the
//! per-variable domain-type classification), `bench` (run a suite of
//! programs across configurations and emit CSV results), `gen-locks`
//! (generate the lock-discipline scaling family).
//!
//! Exit codes: 0 = TRUE, 1 = FALSE, 2 = UNKNOWN, 3 = usage error,
//! 4 = parse or I/O error.

mod bench;
mod types;
mod verify;

use std::path::PathBuf;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use domcheck_core::engine::{BddOrder, Config, DomainAssignment, WaitlistOrder};

#[derive(Parser)]
#[command(
    name = "domcheck",
    version,
    about = "Reachability checker pairing an explicit-value domain with a \
             BDD domain, split per variable by usage analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Domain assignment: explicit-int, bdd-bool, bdd-inteq,
    /// bdd-inteqadd or bdd-int
    #[arg(long, global = true, value_name = "NAME", default_value = "bdd-inteq")]
    config: String,

    /// Analysis time limit in seconds
    #[arg(long, global = true, value_name = "SECONDS", default_value_t = 900.0)]
    timeout: f64,

    /// Waitlist exploration order: dfs or bfs
    #[arg(long, global = true, value_name = "ORDER", default_value = "dfs")]
    waitlist: String,

    /// Bit width of full-range integer encodings (testing aid)
    #[arg(long, global = true, value_name = "BITS", default_value_t = 32)]
    bv_width: usize,

    /// BDD variable order: `declared`, or `custom:FILE` with one
    /// variable name per line
    #[arg(long, global = true, value_name = "ORDER", default_value = "declared")]
    bdd_order: String,

    /// Write the machine-readable verdict (outcome, confirmed,
    /// cpu_seconds, reached_states, bdd_peak_nodes, trace) to this path
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,

    /// Report per-variable bit counts, total BDD bits and node counts
    #[arg(long, global = true)]
    stats: bool,

    /// Dump the reached BDD states per location; the only format is
    /// `dot`
    #[arg(long, global = true, value_name = "FORMAT")]
    dump_bdd: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check whether any error location is reachable in a program
    Verify {
        /// Program file
        file: PathBuf,
    },
    /// Report each variable's inferred domain type
    Types {
        /// Program file
        file: PathBuf,
        /// Output format
        #[arg(long, value_enum, default_value_t = TypesFormat::Table)]
        format: TypesFormat,
    },
    /// Run every program in a directory under several configurations
    /// and write results.csv plus per-configuration quantile CSVs
    Bench {
        /// Directory containing `.mc` programs (with optional `.expect`
        /// sidecars holding TRUE or FALSE)
        dir: PathBuf,
        /// Comma-separated configuration names (default: all five)
        #[arg(long, value_name = "NAMES", value_delimiter = ',')]
        configs: Vec<String>,
        /// Number of tasks run concurrently
        #[arg(long, value_name = "N", default_value_t = 1)]
        jobs: usize,
        /// Run each task in a separate process
        #[arg(long)]
        isolate: bool,
        /// Directory the CSV files are written to
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Print a lock-discipline program with N lock/request pairs
    GenLocks {
        /// Number of lock/request pairs
        #[arg(long, value_name = "N")]
        k: usize,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum TypesFormat {
    Table,
    Csv,
    Json,
}

/// Errors that end the process, split by exit code: usage errors (3)
/// and parse/I-O errors (4).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 3,
            CliError::Input(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) => m,
        }
    }
}

fn main() {
    // Die quietly when a downstream pipe (e.g. `| head`) closes early,
    // with the conventional 128+SIGPIPE status instead of a panic dump.
    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(move |info| {
        let broken_pipe = info
            .payload()
            .downcast_ref::<String>()
            .is_some_and(|m| m.contains("Broken pipe"));
        if broken_pipe {
            std::process::exit(141);
        }
        default_hook(info);
    }));

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests arrive as errors but are not.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("domcheck: {}", e.message());
            std::process::exit(e.code());
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match &cli.cmd {
        Cmd::Verify { file } => {
            let file = file.clone();
            verify::run(&cli, &file)
        }
        Cmd::Types { file, format } => {
            let (file, format) = (file.clone(), *format);
            types::run(&file, format)
        }
        Cmd::Bench { dir, configs, jobs, isolate, out } => {
            let args = bench::BenchArgs {
                dir: dir.clone(),
                configs: configs.clone(),
                jobs: *jobs,
                isolate: *isolate,
                out: out.clone(),
            };
            bench::run(&cli, &args)
        }
        Cmd::GenLocks { k } => {
            if *k == 0 {
                return Err(CliError::Usage("--k must be at least 1".to_string()));
            }
            print!("{}", domcheck_core::locks::gen_locks(*k));
            Ok(0)
        }
    }
}

/// Builds the engine configuration from the global flags.
pub fn engine_config(cli: &Cli) -> Result<Config, CliError> {
    let assignment: DomainAssignment = cli.config.parse().map_err(CliError::Usage)?;
    let waitlist: WaitlistOrder = cli.waitlist.parse().map_err(CliError::Usage)?;
    if !(1..=32).contains(&cli.bv_width) {
        return Err(CliError::Usage(format!(
            "--bv-width {} out of range 1..=32",
            cli.bv_width
        )));
    }
    if !(cli.timeout > 0.0) {
        return Err(CliError::Usage(format!(
            "--timeout {} must be a positive number of seconds",
            cli.timeout
        )));
    }
    let mut cfg = Config::with_assignment(assignment);
    cfg.bv_width = cli.bv_width;
    cfg.timeout = Some(Duration::from_secs_f64(cli.timeout));
    cfg.waitlist = waitlist;
    cfg.order = parse_bdd_order(&cli.bdd_order)?;
    Ok(cfg)
}

/// Parses `declared` or `custom:FILE` into a BDD variable order. The
/// file lists one variable name per line; blank lines and lines
/// starting with `#` are skipped.
fn parse_bdd_order(spec: &str) -> Result<BddOrder, CliError> {
    if spec == "declared" {
        return Ok(BddOrder::Declared);
    }
    if let Some(path) = spec.strip_prefix("custom:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read order file {path}: {e}")))?;
        let names: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        return Ok(BddOrder::Custom(names));
    }
    Err(CliError::Usage(format!(
        "unknown BDD order `{spec}` (declared or custom:FILE)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_spec_parses_declared_and_rejects_garbage() {
        assert_eq!(parse_bdd_order("declared").ok(), Some(BddOrder::Declared));
        assert!(matches!(parse_bdd_order("sorted"), Err(CliError::Usage(_))));
        assert!(matches!(
            parse_bdd_order("custom:/no/such/file"),
            Err(CliError::Input(_))
        ));
    }

    #[test]
    fn order_file_lines_are_trimmed_and_comments_skipped() {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("order-{}.txt", std::process::id()));
        std::fs::write(&path, "# comment\n  b \n\na\n").unwrap();
        let order = parse_bdd_order(&format!("custom:{}", path.display())).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(
            order,
            BddOrder::Custom(vec!["b".to_string(), "a".to_string()])
        );
    }

    #[test]
    fn config_rejects_bad_width_and_timeout() {
        let cli = Cli::try_parse_from(["domcheck", "verify", "x.mc", "--bv-width", "0"]).unwrap();
        assert!(matches!(engine_config(&cli), Err(CliError::Usage(_))));
        let cli = Cli::try_parse_from(["domcheck", "verify", "x.mc", "--timeout=-1"]).unwrap();
        assert!(matches!(engine_config(&cli), Err(CliError::Usage(_))));
    }

    #[test]
    fn defaults_follow_the_documented_contract() {
        let cli = Cli::try_parse_from(["domcheck", "verify", "x.mc"]).unwrap();
        let cfg = engine_config(&cli).unwrap();
        assert_eq!(cfg.assignment, DomainAssignment::BddIntEq);
        assert_eq!(cfg.waitlist, WaitlistOrder::Dfs);
        assert_eq!(cfg.bv_width, 32);
        assert_eq!(cfg.timeout, Some(Duration::from_secs(900)));
    }
}
