//! Shared generators for the integration suites: random explicit
//! states, random expressions, random boolean formulas, and random
//! bounded programs. Everything is driven by a caller-supplied RNG so
//! the same generators serve seeded deterministic sweeps and
//! property-test strategies alike.

#![allow(dead_code)]

use domcheck_core::bdd::{Bdd, NodeRef, Result as BddResult};
use domcheck_core::cfa::{BinOp, Expr, Op, UnaryOp, VarId};
use domcheck_core::explicit::ExplicitState;
use rand::Rng;

/// Random explicit state binding a subset of `vars` variables to small
/// constants, built through the domain's own transfer function.
pub fn gen_explicit(rng: &mut impl Rng, vars: u32, span: i32) -> ExplicitState {
    let mut s = ExplicitState::top();
    for v in 0..vars {
        if rng.random_bool(0.6) {
            let c = rng.random_range(-span..=span);
            s = s
                .transfer(&Op::Assign { var: VarId(v), expr: Expr::Const(c) })
                .expect("constant assignment is always feasible");
        }
    }
    s
}

/// Random expression over `vars` variables and small constants.
pub fn gen_expr(rng: &mut impl Rng, vars: u32, depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.35) {
        return if rng.random_bool(0.5) {
            Expr::Var(VarId(rng.random_range(0..vars)))
        } else {
            Expr::Const(rng.random_range(-4..=4))
        };
    }
    if rng.random_bool(0.15) {
        let op = if rng.random_bool(0.5) { UnaryOp::Not } else { UnaryOp::BitNot };
        return Expr::Unary(op, Box::new(gen_expr(rng, vars, depth - 1)));
    }
    const OPS: [BinOp; 18] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Mod,
        BinOp::BitAnd,
        BinOp::BitOr,
        BinOp::BitXor,
        BinOp::Shl,
        BinOp::Shr,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Gt,
        BinOp::Le,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
    ];
    let op = OPS[rng.random_range(0..OPS.len())];
    Expr::Binary(
        op,
        Box::new(gen_expr(rng, vars, depth - 1)),
        Box::new(gen_expr(rng, vars, depth - 1)),
    )
}

/// Random boolean formula over BDD levels `0..nlevels`, built from the
/// kernel's own connectives.
pub fn gen_formula(
    bdd: &mut Bdd,
    rng: &mut impl Rng,
    nlevels: u32,
    depth: usize,
) -> BddResult<NodeRef> {
    if depth == 0 || rng.random_bool(0.3) {
        let l = rng.random_range(0..nlevels);
        return if rng.random_bool(0.5) { bdd.var(l) } else { bdd.nvar(l) };
    }
    let f = gen_formula(bdd, rng, nlevels, depth - 1)?;
    let g = gen_formula(bdd, rng, nlevels, depth - 1)?;
    match rng.random_range(0..4) {
        0 => bdd.and(f, g),
        1 => bdd.or(f, g),
        2 => bdd.xor(f, g),
        _ => {
            let nf = bdd.not(f)?;
            bdd.or(nf, g)
        }
    }
}

fn operand(rng: &mut impl Rng, k: usize) -> String {
    if rng.random_bool(0.6) {
        format!("v{}", rng.random_range(0..k))
    } else {
        format!("{}", rng.random_range(-8..=8))
    }
}

fn rhs(rng: &mut impl Rng, k: usize) -> String {
    let a = operand(rng, k);
    match rng.random_range(0..12) {
        0 => a,
        1 => format!("{a} + {}", operand(rng, k)),
        2 => format!("{a} - {}", operand(rng, k)),
        3 => format!("{a} * {}", rng.random_range(-4..=4i32)),
        4 => {
            // Mostly constant divisors; the occasional variable one
            // exercises the bounded-enumeration path.
            if rng.random_bool(0.8) {
                let d = [1, 2, 3, 5, 7, -2][rng.random_range(0..6)];
                format!("{a} / {d}")
            } else {
                format!("{a} / v{}", rng.random_range(0..k))
            }
        }
        5 => {
            let d = [2, 3, 4, 10][rng.random_range(0..4)];
            format!("{a} % {d}")
        }
        6 => format!("{a} & {}", operand(rng, k)),
        7 => format!("{a} | {}", operand(rng, k)),
        8 => format!("{a} ^ {}", operand(rng, k)),
        9 => format!("{a} << {}", rng.random_range(0..5)),
        10 => format!("{a} >> {}", rng.random_range(0..5)),
        _ => format!("{a} == {}", operand(rng, k)),
    }
}

fn cond(rng: &mut impl Rng, k: usize) -> String {
    let a = operand(rng, k);
    match rng.random_range(0..9) {
        0 => format!("{a} == {}", operand(rng, k)),
        1 => format!("{a} != {}", operand(rng, k)),
        2 => format!("{a} < {}", operand(rng, k)),
        3 => format!("{a} > {}", operand(rng, k)),
        4 => format!("{a} <= {}", operand(rng, k)),
        5 => format!("{a} >= {}", operand(rng, k)),
        6 => format!("v{}", rng.random_range(0..k)),
        7 => format!("v{} && {a} != 0", rng.random_range(0..k)),
        _ => format!("v{} || {a} == 0", rng.random_range(0..k)),
    }
}

/// Random well-formed program: a handful of variables, randomized
/// initialization (constant, nondet, or left uninitialized), flat
/// straight-line/branching statements, at most one bounded counting
/// loop, and usually a final assertion. Always parses; always
/// terminates concretely.
pub fn gen_program(rng: &mut impl Rng) -> String {
    let k = rng.random_range(2..=4usize);
    let mut out = String::from("void main() {\n");
    for i in 0..k {
        out += &format!("    int v{i};\n");
    }
    for i in 0..k {
        match rng.random_range(0..4) {
            0 | 1 => out += &format!("    v{i} = {};\n", rng.random_range(-8..=8)),
            2 => out += &format!("    v{i} = __VERIFIER_nondet_int();\n"),
            _ => {} // uninitialized: every domain treats a read as any value
        }
    }
    let stmts = rng.random_range(2..=6usize);
    let mut loop_done = false;
    for _ in 0..stmts {
        match rng.random_range(0..6) {
            0 | 1 => {
                let t = rng.random_range(0..k);
                out += &format!("    v{t} = {};\n", rhs(rng, k));
            }
            2 => {
                let t = rng.random_range(0..k);
                out += &format!(
                    "    if ({}) {{ v{t} = {}; }}\n",
                    cond(rng, k),
                    rhs(rng, k)
                );
            }
            3 => {
                let t = rng.random_range(0..k);
                let u = rng.random_range(0..k);
                out += &format!(
                    "    if ({}) {{ v{t} = {}; }} else {{ v{u} = {}; }}\n",
                    cond(rng, k),
                    rhs(rng, k),
                    rhs(rng, k)
                );
            }
            4 if !loop_done => {
                loop_done = true;
                let i = rng.random_range(0..k);
                // The counter is reset first and only advanced by the
                // loop itself, so the loop always terminates.
                let mut t = rng.random_range(0..k);
                if t == i {
                    t = (t + 1) % k;
                }
                out += &format!(
                    "    v{i} = 0;\n    while (v{i} < {}) {{ v{i} = v{i} + 1; v{t} = {}; }}\n",
                    rng.random_range(1..=5),
                    rhs(rng, k)
                );
            }
            _ => {
                out += &format!("    if ({}) {{ assert({}); }}\n", cond(rng, k), cond(rng, k));
            }
        }
    }
    if rng.random_bool(0.7) {
        out += &format!("    assert({});\n", cond(rng, k));
    }
    out += "}\n";
    out
}
