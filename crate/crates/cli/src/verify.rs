//! The `verify` subcommand: run the composite reachability analysis on
//! one program and report the verdict.

use std::fs;
use std::path::Path;

use domcheck_core::bdd_domain::BddDomain;
use domcheck_core::domtype::infer;
use domcheck_core::engine::{
    partition, resolve_order, trace_lines, verify_with_typing, EngineError, Outcome, Verdict,
};
use domcheck_core::frontend::compile;
use serde::Serialize;

use crate::{engine_config, Cli, CliError};

#[derive(Serialize)]
struct VerdictJson<'a> {
    outcome: &'a str,
    confirmed: bool,
    cpu_seconds: f64,
    reached_states: usize,
    bdd_peak_nodes: usize,
    /// Source lines of the counterexample path (empty unless FALSE).
    trace: &'a [u32],
}

pub fn run(cli: &Cli, file: &Path) -> Result<i32, CliError> {
    let src = fs::read_to_string(file)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", file.display())))?;
    let cfa = compile(&src)
        .map_err(|e| CliError::Input(format!("{}: {e}", file.display())))?;

    let mut cfg = engine_config(cli)?;
    if let Some(format) = &cli.dump_bdd {
        if format != "dot" {
            return Err(CliError::Usage(format!(
                "unknown --dump-bdd format `{format}` (only dot)"
            )));
        }
        cfg.dump_dot = true;
    }

    let typing = infer(&cfa);
    let outcome = verify_with_typing(&cfa, &typing, &cfg).map_err(|e| match e {
        EngineError::Config(m) => CliError::Usage(m),
    })?;

    let lines = match &outcome.verdict {
        Verdict::False { trace, .. } => trace_lines(&cfa, trace),
        _ => Vec::new(),
    };
    print_summary(&outcome, &lines);

    if cli.stats {
        print_stats(&cfa, &typing, &cfg, &outcome)?;
    }
    if cfg.dump_dot {
        if let Some(dots) = &outcome.loc_dots {
            for (loc, dot) in dots {
                println!("// location {}", loc.index());
                println!("{dot}");
            }
        }
    }
    if let Some(path) = &cli.json {
        let (outcome_word, confirmed) = match &outcome.verdict {
            Verdict::True => ("TRUE", false),
            Verdict::False { confirmed, .. } => ("FALSE", *confirmed),
            Verdict::Unknown { .. } => ("UNKNOWN", false),
        };
        let record = VerdictJson {
            outcome: outcome_word,
            confirmed,
            cpu_seconds: outcome.stats.cpu_seconds,
            reached_states: outcome.stats.reached_states,
            bdd_peak_nodes: outcome.stats.bdd_peak_nodes,
            trace: &lines,
        };
        let text = serde_json::to_string_pretty(&record)
            .map_err(|e| CliError::Input(format!("cannot encode verdict: {e}")))?;
        fs::write(path, text + "\n")
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }

    Ok(match outcome.verdict {
        Verdict::True => 0,
        Verdict::False { .. } => 1,
        Verdict::Unknown { .. } => 2,
    })
}

fn print_summary(outcome: &Outcome, lines: &[u32]) {
    match &outcome.verdict {
        Verdict::True => println!("verdict: TRUE"),
        Verdict::False { confirmed, .. } => {
            println!("verdict: FALSE");
            let path: Vec<String> = lines.iter().map(u32::to_string).collect();
            println!("trace: lines {}", path.join(" -> "));
            println!("confirmed: {}", if *confirmed { "yes" } else { "no (abstract path)" });
        }
        Verdict::Unknown { reason } => {
            println!("verdict: UNKNOWN");
            println!("reason: {reason}");
        }
    }
    println!("cpu_seconds: {:.3}", outcome.stats.cpu_seconds);
    println!("reached_states: {}", outcome.stats.reached_states);
    println!("expanded: {}", outcome.stats.expanded);
    println!("waitlist_peak: {}", outcome.stats.waitlist_peak);
    println!("bdd_peak_nodes: {}", outcome.stats.bdd_peak_nodes);
}

/// Prints the bit accounting: how many BDD bits each tracked variable
/// needs under the chosen assignment, their total, and the node counts.
fn print_stats(
    cfa: &domcheck_core::cfa::Cfa,
    typing: &domcheck_core::domtype::DomainTyping,
    cfg: &domcheck_core::engine::Config,
    outcome: &Outcome,
) -> Result<(), CliError> {
    let (explicit_vars, bdd_vars) = partition(typing, cfg.assignment);
    let order = resolve_order(cfa, &bdd_vars, &cfg.order).map_err(|e| match e {
        EngineError::Config(m) => CliError::Usage(m),
    })?;
    let dom = BddDomain::new(typing, &order, cfg.bv_width, cfg.node_limit);

    println!("stats:");
    for layout in dom.layouts() {
        println!(
            "  {}: {} bits ({})",
            cfa.var_name(layout.var),
            layout.width(),
            typing.type_of(layout.var),
        );
    }
    for v in &explicit_vars {
        println!("  {}: explicit ({})", cfa.var_name(*v), typing.type_of(*v));
    }
    println!("  total BDD bits: {}", dom.total_plain_bits());
    // The node store is append-only, so the final count is the peak.
    println!("  final nodes: {}", outcome.stats.bdd_peak_nodes);
    println!("  peak nodes: {}", outcome.stats.bdd_peak_nodes);
    Ok(())
}
