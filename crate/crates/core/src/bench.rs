//! Benchmark harness: runs a task × configuration grid and writes CSV
//! summaries.
//!
//! Tasks are `.mc` programs; an optional `.expect` sidecar holding
//! `TRUE`, `FALSE`, or `UNKNOWN` states the intended verdict. Results
//! land in `results.csv` (one row per task × configuration, grid order)
//! and one `quantile_<config>.csv` per configuration listing the times
//! of correct runs in ascending order.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::engine::{verify, Config, DomainAssignment, Verdict};
use crate::frontend::compile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    True,
    False,
    Unknown,
}

impl OutcomeKind {
    pub fn word(self) -> &'static str {
        match self {
            OutcomeKind::True => "TRUE",
            OutcomeKind::False => "FALSE",
            OutcomeKind::Unknown => "UNKNOWN",
        }
    }

    pub fn parse(s: &str) -> Option<OutcomeKind> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TRUE" => Some(OutcomeKind::True),
            "FALSE" => Some(OutcomeKind::False),
            "UNKNOWN" => Some(OutcomeKind::Unknown),
            _ => None,
        }
    }

    pub fn of(verdict: &Verdict) -> OutcomeKind {
        match verdict {
            Verdict::True => OutcomeKind::True,
            Verdict::False { .. } => OutcomeKind::False,
            Verdict::Unknown { .. } => OutcomeKind::Unknown,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaskSpec {
    /// File stem, used as the row key.
    pub name: String,
    pub path: PathBuf,
    pub expected: Option<OutcomeKind>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub task: String,
    pub config: String,
    pub outcome: OutcomeKind,
    pub expected: Option<OutcomeKind>,
    pub cpu_seconds: f64,
    pub reached_states: usize,
    pub bdd_peak_nodes: usize,
    /// The limit (or failure) behind an UNKNOWN outcome, when one was
    /// reported. Not part of the results CSV.
    pub limits_hit: Option<String>,
}

impl RunRecord {
    /// A run counts as correct only when an expectation exists and the
    /// outcome matches it.
    pub fn correct(&self) -> bool {
        self.expected == Some(self.outcome)
    }
}

/// Collects `*.mc` tasks under `dir` (non-recursive), sorted by file
/// name; `<stem>.expect` sidecars supply expected verdicts.
pub fn discover_tasks(dir: &Path) -> std::io::Result<Vec<TaskSpec>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mc"))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|path| {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let expected = fs::read_to_string(path.with_extension("expect"))
                .ok()
                .and_then(|s| OutcomeKind::parse(&s));
            TaskSpec { name, path, expected }
        })
        .collect())
}

/// Runs one task in-process under `base` with the given assignment.
pub fn run_task(task: &TaskSpec, assignment: DomainAssignment, base: &Config) -> RunRecord {
    let started = std::time::Instant::now();
    let outcome_of = |outcome, cpu, reached, nodes, limits_hit| RunRecord {
        task: task.name.clone(),
        config: assignment.name().to_string(),
        outcome,
        expected: task.expected,
        cpu_seconds: cpu,
        reached_states: reached,
        bdd_peak_nodes: nodes,
        limits_hit,
    };
    let Ok(src) = fs::read_to_string(&task.path) else {
        return outcome_of(
            OutcomeKind::Unknown,
            started.elapsed().as_secs_f64(),
            0,
            0,
            Some("unreadable task file".to_string()),
        );
    };
    let Ok(cfa) = compile(&src) else {
        return outcome_of(
            OutcomeKind::Unknown,
            started.elapsed().as_secs_f64(),
            0,
            0,
            Some("parse error".to_string()),
        );
    };
    let mut cfg = base.clone();
    cfg.assignment = assignment;
    match verify(&cfa, &cfg) {
        Ok(out) => {
            let limits_hit = match &out.verdict {
                Verdict::Unknown { reason } => Some(reason.clone()),
                _ => None,
            };
            outcome_of(
                OutcomeKind::of(&out.verdict),
                out.stats.cpu_seconds,
                out.stats.reached_states,
                out.stats.bdd_peak_nodes,
                limits_hit,
            )
        }
        Err(e) => outcome_of(
            OutcomeKind::Unknown,
            started.elapsed().as_secs_f64(),
            0,
            0,
            Some(e.to_string()),
        ),
    }
}

/// Runs the full grid with `jobs` worker threads. Results come back in
/// grid order — task-major, configuration-minor — independent of
/// scheduling.
pub fn run_suite(
    tasks: &[TaskSpec],
    configs: &[DomainAssignment],
    jobs: usize,
    runner: &(dyn Fn(&TaskSpec, DomainAssignment) -> RunRecord + Sync),
) -> Vec<RunRecord> {
    let total = tasks.len() * configs.len();
    if total == 0 {
        return Vec::new();
    }
    let cursor = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunRecord>>> = Mutex::new((0..total).map(|_| None).collect());
    let workers = jobs.max(1).min(total);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= total {
                    break;
                }
                let record = runner(&tasks[i / configs.len()], configs[i % configs.len()]);
                slots.lock().unwrap()[i] = Some(record);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("worker filled every slot"))
        .collect()
}

pub const RESULTS_HEADER: [&str; 8] = [
    "task",
    "config",
    "outcome",
    "expected",
    "correct",
    "cpu_seconds",
    "reached_states",
    "bdd_peak_nodes",
];

pub fn write_results_csv(path: &Path, records: &[RunRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.write_record([
            r.task.as_str(),
            r.config.as_str(),
            r.outcome.word(),
            r.expected.map_or("", |e| e.word()),
            if r.correct() { "true" } else { "false" },
            &format!("{:.3}", r.cpu_seconds),
            &r.reached_states.to_string(),
            &r.bdd_peak_nodes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(rank, cpu_seconds)` rows for one configuration: the times of its
/// correct runs, ascending, so row `x` is the x-fastest correct run.
pub fn quantile_rows(records: &[RunRecord], config_name: &str) -> Vec<(usize, f64)> {
    let mut times: Vec<f64> = records
        .iter()
        .filter(|r| r.config == config_name && r.correct())
        .map(|r| r.cpu_seconds)
        .collect();
    times.sort_by(f64::total_cmp);
    times
        .into_iter()
        .enumerate()
        .map(|(i, t)| (i + 1, t))
        .collect()
}

pub fn write_quantile_csv(path: &Path, rows: &[(usize, f64)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rank", "cpu_seconds"])?;
    for (rank, t) in rows {
        w.write_record([rank.to_string(), format!("{t:.3}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `quantile_<config>.csv` for every configuration into `dir`;
/// returns the paths written.
pub fn write_all_quantiles(
    dir: &Path,
    records: &[RunRecord],
    configs: &[DomainAssignment],
) -> csv::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for c in configs {
        let rows = quantile_rows(records, c.name());
        let path = dir.join(format!("quantile_{}.csv", c.name()));
        write_quantile_csv(&path, &rows)?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(task: &str, config: &str, outcome: OutcomeKind, cpu: f64) -> RunRecord {
        RunRecord {
            task: task.to_string(),
            config: config.to_string(),
            outcome,
            expected: Some(OutcomeKind::True),
            cpu_seconds: cpu,
            reached_states: 1,
            bdd_peak_nodes: 2,
            limits_hit: None,
        }
    }

    #[test]
    fn expectation_parsing() {
        assert_eq!(OutcomeKind::parse(" true\n"), Some(OutcomeKind::True));
        assert_eq!(OutcomeKind::parse("FALSE"), Some(OutcomeKind::False));
        assert_eq!(OutcomeKind::parse("bogus"), None);
    }

    #[test]
    fn discovery_sorts_and_reads_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b_task.mc"), "void main() { }").unwrap();
        fs::write(dir.path().join("a_task.mc"), "void main() { }").unwrap();
        fs::write(dir.path().join("a_task.expect"), "TRUE\n").unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let tasks = discover_tasks(dir.path()).unwrap();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[0].name, "a_task");
        assert_eq!(tasks[0].expected, Some(OutcomeKind::True));
        assert_eq!(tasks[1].name, "b_task");
        assert_eq!(tasks[1].expected, None);
    }

    #[test]
    fn suite_order_is_grid_order_regardless_of_jobs() {
        let tasks: Vec<TaskSpec> = ["t1", "t2", "t3"]
            .iter()
            .map(|n| TaskSpec {
                name: n.to_string(),
                path: PathBuf::from(format!("{n}.mc")),
                expected: None,
            })
            .collect();
        let configs = [DomainAssignment::ExplicitInt, DomainAssignment::BddBool];
        let runner = |t: &TaskSpec, c: DomainAssignment| RunRecord {
            task: t.name.clone(),
            config: c.name().to_string(),
            outcome: OutcomeKind::True,
            expected: None,
            cpu_seconds: 0.0,
            reached_states: 0,
            bdd_peak_nodes: 0,
            limits_hit: None,
        };
        for jobs in [1, 4] {
            let recs = run_suite(&tasks, &configs, jobs, &runner);
            let keys: Vec<(String, String)> =
                recs.iter().map(|r| (r.task.clone(), r.config.clone())).collect();
            assert_eq!(
                keys,
                vec![
                    ("t1".into(), "explicit-int".into()),
                    ("t1".into(), "bdd-bool".into()),
                    ("t2".into(), "explicit-int".into()),
                    ("t2".into(), "bdd-bool".into()),
                    ("t3".into(), "explicit-int".into()),
                    ("t3".into(), "bdd-bool".into()),
                ]
            );
        }
    }

    #[test]
    fn results_csv_has_header_and_unix_line_endings() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        let recs = vec![
            record("t1", "explicit-int", OutcomeKind::True, 0.25),
            record("t2", "bdd-bool", OutcomeKind::Unknown, 1.5),
        ];
        write_results_csv(&path, &recs).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "task,config,outcome,expected,correct,cpu_seconds,reached_states,bdd_peak_nodes"
        );
        assert_eq!(
            lines.next().unwrap(),
            "t1,explicit-int,TRUE,TRUE,true,0.250,1,2"
        );
        assert_eq!(
            lines.next().unwrap(),
            "t2,bdd-bool,UNKNOWN,TRUE,false,1.500,1,2"
        );
        assert!(!text.contains('\r'));
        assert_eq!(text.matches('\n').count(), 3);
    }

    #[test]
    fn quantiles_are_sorted_and_skip_incorrect_runs() {
        let recs = vec![
            record("t1", "bdd-bool", OutcomeKind::True, 3.0),
            record("t2", "bdd-bool", OutcomeKind::False, 1.0), // wrong
            record("t3", "bdd-bool", OutcomeKind::True, 0.5),
            record("t4", "explicit-int", OutcomeKind::True, 0.1),
        ];
        let rows = quantile_rows(&recs, "bdd-bool");
        assert_eq!(rows, vec![(1, 0.5), (2, 3.0)]);
        let dir = tempfile::tempdir().unwrap();
        let paths = write_all_quantiles(
            dir.path(),
            &recs,
            &[DomainAssignment::BddBool, DomainAssignment::ExplicitInt],
        )
        .unwrap();
        assert_eq!(paths.len(), 2);
        let text = fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text, "rank,cpu_seconds\n1,0.500\n2,3.000\n");
    }
}
