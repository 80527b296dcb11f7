//! The `bench` subcommand: run every program in a directory under the
//! requested configurations and write `results.csv` plus one
//! `quantile_<config>.csv` per configuration.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use domcheck_core::bench::{
    discover_tasks, run_suite, run_task, write_all_quantiles, write_results_csv, OutcomeKind,
    RunRecord, TaskSpec,
};
use domcheck_core::engine::DomainAssignment;
use serde::Deserialize;

use crate::{engine_config, Cli, CliError};

pub struct BenchArgs {
    pub dir: PathBuf,
    pub configs: Vec<String>,
    pub jobs: usize,
    pub isolate: bool,
    pub out: PathBuf,
}

pub fn run(cli: &Cli, args: &BenchArgs) -> Result<i32, CliError> {
    let configs: Vec<DomainAssignment> = if args.configs.is_empty() {
        DomainAssignment::ALL.to_vec()
    } else {
        args.configs
            .iter()
            .map(|s| s.parse().map_err(CliError::Usage))
            .collect::<Result<_, _>>()?
    };
    let base = engine_config(cli)?;

    let tasks = discover_tasks(&args.dir)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.dir.display())))?;
    let records = if args.isolate {
        let ctx = IsolateContext::new(cli)?;
        run_suite(&tasks, &configs, args.jobs, &|t, c| ctx.run(t, c))
    } else {
        run_suite(&tasks, &configs, args.jobs, &|t, c| run_task(t, c, &base))
    };

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", args.out.display())))?;
    let results = args.out.join("results.csv");
    let err = |e: csv::Error| CliError::Input(format!("cannot write results: {e}"));
    write_results_csv(&results, &records).map_err(err)?;
    let quantiles = write_all_quantiles(&args.out, &records, &configs).map_err(err)?;

    let correct = records.iter().filter(|r| r.correct()).count();
    let scored = records.iter().filter(|r| r.expected.is_some()).count();
    println!(
        "{} runs ({} tasks x {} configs): {}/{} scored runs correct",
        records.len(),
        tasks.len(),
        configs.len(),
        correct,
        scored,
    );
    println!("wrote {}", results.display());
    for q in quantiles {
        println!("wrote {}", q.display());
    }
    Ok(0)
}

/// Runs tasks through `domcheck verify` child processes so a
/// runaway task cannot take the whole suite down with it.
struct IsolateContext {
    exe: PathBuf,
    timeout: String,
    waitlist: String,
    bv_width: String,
    bdd_order: String,
    counter: AtomicUsize,
}

/// The fields of the verdict JSON the harness reads back.
#[derive(Deserialize)]
struct ChildVerdict {
    cpu_seconds: f64,
    reached_states: usize,
    bdd_peak_nodes: usize,
}

impl IsolateContext {
    fn new(cli: &Cli) -> Result<Self, CliError> {
        // Surfaces bad global flags before any child process runs.
        engine_config(cli)?;
        let exe = std::env::current_exe()
            .map_err(|e| CliError::Input(format!("cannot locate own executable: {e}")))?;
        Ok(IsolateContext {
            exe,
            timeout: cli.timeout.to_string(),
            waitlist: cli.waitlist.clone(),
            bv_width: cli.bv_width.to_string(),
            bdd_order: cli.bdd_order.clone(),
            counter: AtomicUsize::new(0),
        })
    }

    fn run(&self, task: &TaskSpec, assignment: DomainAssignment) -> RunRecord {
        let json_path = std::env::temp_dir().join(format!(
            "domcheck-bench-{}-{}.json",
            std::process::id(),
            self.counter.fetch_add(1, Ordering::Relaxed),
        ));
        let record = |outcome, cpu, reached, nodes, limits_hit| RunRecord {
            task: task.name.clone(),
            config: assignment.name().to_string(),
            outcome,
            expected: task.expected,
            cpu_seconds: cpu,
            reached_states: reached,
            bdd_peak_nodes: nodes,
            limits_hit,
        };

        let started = std::time::Instant::now();
        let output = Command::new(&self.exe)
            .arg("verify")
            .arg(&task.path)
            .args(["--config", assignment.name()])
            .args(["--timeout", &self.timeout])
            .args(["--waitlist", &self.waitlist])
            .args(["--bv-width", &self.bv_width])
            .args(["--bdd-order", &self.bdd_order])
            .arg("--json")
            .arg(&json_path)
            .output();
        let output = match output {
            Ok(o) => o,
            Err(e) => {
                return record(
                    OutcomeKind::Unknown,
                    started.elapsed().as_secs_f64(),
                    0,
                    0,
                    Some(format!("cannot spawn verifier: {e}")),
                )
            }
        };
        let outcome = match output.status.code() {
            Some(0) => OutcomeKind::True,
            Some(1) => OutcomeKind::False,
            Some(2) => OutcomeKind::Unknown,
            code => {
                return record(
                    OutcomeKind::Unknown,
                    started.elapsed().as_secs_f64(),
                    0,
                    0,
                    Some(format!("verifier exited with {code:?}")),
                )
            }
        };
        let verdict = std::fs::read_to_string(&json_path)
            .ok()
            .and_then(|s| serde_json::from_str::<ChildVerdict>(&s).ok());
        std::fs::remove_file(&json_path).ok();
        let limits_hit = match outcome {
            OutcomeKind::Unknown => Some("see verifier output".to_string()),
            _ => None,
        };
        match verdict {
            Some(v) => record(
                outcome,
                v.cpu_seconds,
                v.reached_states,
                v.bdd_peak_nodes,
                limits_hit,
            ),
            None => record(
                outcome,
                started.elapsed().as_secs_f64(),
                0,
                0,
                Some("verdict JSON missing".to_string()),
            ),
        }
    }
}
