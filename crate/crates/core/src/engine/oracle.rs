//! Brute-force concrete reference interpreter.
//!
//! Explores every execution over a finite set of candidate values: each
//! `nondet()` store and each read of a never-written variable branches
//! over the configured value range. Completely independent of the
//! abstract domains — this is the ground truth the checker is tested
//! against.
//!
//! Concrete semantics: two's-complement wrapping `i32` arithmetic;
//! division and modulo by zero yield 0; shift amounts are masked to
//! 0..=31; `>>` is arithmetic; `&&`/`||` short-circuit and produce 0/1.

use std::collections::BTreeMap;

use crate::cfa::{BinOp, Cfa, Expr, LocId, Op, UnaryOp, VarId};

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Candidate values for every nondet choice and uninitialized read.
    pub values: Vec<i32>,
    /// Transitions allowed on one execution path.
    pub max_steps_per_path: usize,
    /// Transitions allowed over the whole exploration.
    pub max_total_steps: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            values: (-8..=8).collect(),
            max_steps_per_path: 20_000,
            max_total_steps: 2_000_000,
        }
    }
}

impl OracleConfig {
    pub fn with_values(values: impl IntoIterator<Item = i32>) -> Self {
        OracleConfig { values: values.into_iter().collect(), ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    Safe,
    Unsafe,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub verdict: OracleVerdict,
    /// Edge path witnessing an unsafe execution (empty otherwise).
    pub trace: Vec<usize>,
    pub total_steps: usize,
}

/// 0/1 from a C truth value.
fn as_bool(v: i32) -> bool {
    v != 0
}

fn from_bool(b: bool) -> i32 {
    i32::from(b)
}

/// Concrete evaluation; `Err(v)` reports the first unbound variable read.
pub(crate) fn concrete_eval(env: &BTreeMap<VarId, i32>, e: &Expr) -> Result<i32, VarId> {
    match e {
        Expr::Const(c) => Ok(*c),
        Expr::Var(v) => env.get(v).copied().ok_or(*v),
        Expr::Nondet => unreachable!("nondet only appears as a whole assignment source"),
        Expr::Unary(UnaryOp::Not, inner) => {
            Ok(from_bool(!as_bool(concrete_eval(env, inner)?)))
        }
        Expr::Unary(UnaryOp::BitNot, inner) => Ok(!concrete_eval(env, inner)?),
        Expr::Binary(op, l, r) => {
            // Short-circuit first: the right side must not be evaluated
            // (or forked over) when the left side decides.
            match op {
                BinOp::And => {
                    if !as_bool(concrete_eval(env, l)?) {
                        return Ok(0);
                    }
                    return Ok(from_bool(as_bool(concrete_eval(env, r)?)));
                }
                BinOp::Or => {
                    if as_bool(concrete_eval(env, l)?) {
                        return Ok(1);
                    }
                    return Ok(from_bool(as_bool(concrete_eval(env, r)?)));
                }
                _ => {}
            }
            let a = concrete_eval(env, l)?;
            let b = concrete_eval(env, r)?;
            Ok(match op {
                BinOp::Add => a.wrapping_add(b),
                BinOp::Sub => a.wrapping_sub(b),
                BinOp::Mul => a.wrapping_mul(b),
                BinOp::Div => {
                    if b == 0 {
                        0
                    } else {
                        a.wrapping_div(b)
                    }
                }
                BinOp::Mod => {
                    if b == 0 {
                        0
                    } else {
                        a.wrapping_rem(b)
                    }
                }
                BinOp::BitAnd => a & b,
                BinOp::BitOr => a | b,
                BinOp::BitXor => a ^ b,
                BinOp::Shl => a.wrapping_shl(b as u32 & 31),
                BinOp::Shr => a.wrapping_shr(b as u32 & 31),
                BinOp::Eq => from_bool(a == b),
                BinOp::Ne => from_bool(a != b),
                BinOp::Lt => from_bool(a < b),
                BinOp::Gt => from_bool(a > b),
                BinOp::Le => from_bool(a <= b),
                BinOp::Ge => from_bool(a >= b),
                BinOp::And | BinOp::Or => unreachable!("short-circuited above"),
            })
        }
    }
}

enum StepOutcome {
    /// Successor environment.
    Proceed(BTreeMap<VarId, i32>),
    /// Assume failed concretely.
    Prune,
    /// A read of an unbound variable: bind it and retry the location.
    Need(VarId),
    /// `var = nondet()`: branch over the candidate values.
    Fork(VarId),
}

fn step(env: &BTreeMap<VarId, i32>, op: &Op) -> StepOutcome {
    match op {
        Op::Skip => StepOutcome::Proceed(env.clone()),
        Op::Decl { var, init: None } => {
            let mut e = env.clone();
            e.remove(var);
            StepOutcome::Proceed(e)
        }
        Op::Decl { var, init: Some(rhs) } | Op::Assign { var, expr: rhs } => {
            if matches!(rhs, Expr::Nondet) {
                return StepOutcome::Fork(*var);
            }
            match concrete_eval(env, rhs) {
                Ok(v) => {
                    let mut e = env.clone();
                    e.insert(*var, v);
                    StepOutcome::Proceed(e)
                }
                Err(need) => StepOutcome::Need(need),
            }
        }
        Op::Assume { expr, polarity } => match concrete_eval(env, expr) {
            Ok(v) => {
                if as_bool(v) == *polarity {
                    StepOutcome::Proceed(env.clone())
                } else {
                    StepOutcome::Prune
                }
            }
            Err(need) => StepOutcome::Need(need),
        },
    }
}

struct PathState {
    loc: LocId,
    env: BTreeMap<VarId, i32>,
    path: Vec<usize>,
    steps: usize,
}

pub fn interpret(cfa: &Cfa, cfg: &OracleConfig) -> OracleReport {
    let mut total = 0usize;
    let mut truncated = false;
    let mut stack = vec![PathState {
        loc: cfa.entry,
        env: BTreeMap::new(),
        path: Vec::new(),
        steps: 0,
    }];

    while let Some(cur) = stack.pop() {
        if cfa.is_error(cur.loc) {
            return OracleReport {
                verdict: OracleVerdict::Unsafe,
                trace: cur.path,
                total_steps: total,
            };
        }
        if cur.steps >= cfg.max_steps_per_path {
            truncated = true;
            continue;
        }
        total += 1;
        if total >= cfg.max_total_steps {
            truncated = true;
            break;
        }

        // If any out-edge reads an unbound variable, bind it to every
        // candidate and revisit this location; a variable has one value
        // for the whole execution once first read.
        let mut need: Option<VarId> = None;
        let mut succs: Vec<PathState> = Vec::new();
        for ei in cfa.out_edge_range(cur.loc) {
            let edge = &cfa.edges[ei];
            match step(&cur.env, &edge.op) {
                StepOutcome::Proceed(env) => {
                    let mut path = cur.path.clone();
                    path.push(ei);
                    succs.push(PathState {
                        loc: edge.target,
                        env,
                        path,
                        steps: cur.steps + 1,
                    });
                }
                StepOutcome::Prune => {}
                StepOutcome::Need(v) => {
                    need = Some(v);
                    break;
                }
                StepOutcome::Fork(var) => {
                    for &val in &cfg.values {
                        let mut env = cur.env.clone();
                        env.insert(var, val);
                        let mut path = cur.path.clone();
                        path.push(ei);
                        succs.push(PathState {
                            loc: edge.target,
                            env,
                            path,
                            steps: cur.steps + 1,
                        });
                    }
                }
            }
        }
        if let Some(v) = need {
            for &val in &cfg.values {
                let mut env = cur.env.clone();
                env.insert(v, val);
                stack.push(PathState {
                    loc: cur.loc,
                    env,
                    path: cur.path.clone(),
                    steps: cur.steps + 1,
                });
            }
            continue;
        }
        stack.extend(succs);
    }

    OracleReport {
        verdict: if truncated { OracleVerdict::Inconclusive } else { OracleVerdict::Safe },
        trace: Vec::new(),
        total_steps: total,
    }
}
