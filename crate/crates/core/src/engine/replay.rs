//! Concrete replay of a candidate counterexample.
//!
//! Walks the exact edge sequence of an abstract error trace, branching
//! only over the values of nondet stores and uninitialized reads. If
//! some assignment of candidate values drives a concrete execution down
//! the whole trace, the counterexample is confirmed.

use std::collections::BTreeMap;

use crate::cfa::{Cfa, Expr, Op, VarId};

use super::oracle::concrete_eval;

#[derive(Debug, Clone)]
pub struct ReplayConfig {
    /// Candidate values for nondet stores and uninitialized reads.
    pub values: Vec<i32>,
    /// Bound on explored (position, environment) pairs.
    pub max_states: usize,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        ReplayConfig { values: (-16..=16).collect(), max_states: 50_000 }
    }
}

/// True iff some concrete execution follows `trace` (edge indices into
/// `cfa.edges`) from entry to its end.
pub fn replay(cfa: &Cfa, trace: &[usize], cfg: &ReplayConfig) -> bool {
    // (next trace position, environment)
    let mut stack: Vec<(usize, BTreeMap<VarId, i32>)> = vec![(0, BTreeMap::new())];
    let mut explored = 0usize;

    while let Some((pos, env)) = stack.pop() {
        explored += 1;
        if explored > cfg.max_states {
            return false;
        }
        if pos == trace.len() {
            return true;
        }
        let edge = &cfa.edges[trace[pos]];
        match &edge.op {
            Op::Skip => stack.push((pos + 1, env)),
            Op::Decl { var, init: None } => {
                let mut e = env;
                e.remove(var);
                stack.push((pos + 1, e));
            }
            Op::Decl { var, init: Some(rhs) } | Op::Assign { var, expr: rhs } => {
                if matches!(rhs, Expr::Nondet) {
                    for &val in &cfg.values {
                        let mut e = env.clone();
                        e.insert(*var, val);
                        stack.push((pos + 1, e));
                    }
                } else {
                    match concrete_eval(&env, rhs) {
                        Ok(v) => {
                            let mut e = env;
                            e.insert(*var, v);
                            stack.push((pos + 1, e));
                        }
                        Err(need) => {
                            for &val in &cfg.values {
                                let mut e = env.clone();
                                e.insert(need, val);
                                stack.push((pos, e));
                            }
                        }
                    }
                }
            }
            Op::Assume { expr, polarity } => match concrete_eval(&env, expr) {
                Ok(v) => {
                    if (v != 0) == *polarity {
                        stack.push((pos + 1, env));
                    }
                    // else: this valuation cannot take the edge; drop it.
                }
                Err(need) => {
                    for &val in &cfg.values {
                        let mut e = env.clone();
                        e.insert(need, val);
                        stack.push((pos, e));
                    }
                }
            },
        }
    }
    false
}
