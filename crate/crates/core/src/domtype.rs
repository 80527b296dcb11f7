//! Variable classification by usage.
//!
//! Every variable gets the least domain type that covers all expressions
//! it occurs in:
//!
//! - `Bool`: boolean connectives, comparisons with zero, equality with
//!   other Bool variables, assignments of 0/1 or Bool variables.
//! - `IntEq`: additionally equality tests against arbitrary constants and
//!   `==`/`!=` with other IntEq variables; the constants form the
//!   variable's value set.
//! - `IntEqAdd`: additionally linear arithmetic (`+`, `-`), the ordering
//!   comparisons, and bitwise `&`, `|`, `^`, `~`.
//! - `Int`: anything involving `*`, `/`, `%`, `<<`, `>>`.
//!
//! A "hard" operator taints every variable of the surrounding arithmetic
//! atom, including the assignment target; boolean connectives and
//! comparisons bound atoms, so `enabled || a > 5` leaves `enabled` at Bool
//! while `a` becomes IntEqAdd. Assignment (`v = u`) makes v's type at
//! least u's; equality comparison unifies both sides. The fixpoint is a
//! join over these monotone constraints and therefore order-independent.

use std::collections::BTreeSet;
use std::fmt;

use crate::cfa::{BinOp, Cfa, Expr, Op, UnaryOp, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DomainType {
    Bool,
    IntEq,
    IntEqAdd,
    Int,
}

impl fmt::Display for DomainType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainType::Bool => "Bool",
            DomainType::IntEq => "IntEq",
            DomainType::IntEqAdd => "IntEqAdd",
            DomainType::Int => "Int",
        })
    }
}

/// One elementary demand extracted from an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    /// type(var) >= bound.
    Min { var: VarId, bound: DomainType },
    /// type(to) >= type(from); assignment link (also links value sets).
    Flow { from: VarId, to: VarId },
    /// type(a) and type(b) rise to their join; comparison link.
    Unify { a: VarId, b: VarId },
    /// Constant observed in an equality test with or assignment to `var`.
    Obs { var: VarId, value: i32 },
}

#[derive(Debug, Clone)]
pub struct DomainTyping {
    types: Vec<DomainType>,
    /// Ascending constants for variables whose final type is IntEq.
    value_sets: Vec<Option<Vec<i32>>>,
    /// Edge index whose constraints force the final type (diagnostics).
    witnesses: Vec<Option<usize>>,
    /// Assignment/comparison neighbors, used by the fixpoint and exposed
    /// for inspection.
    links: Vec<BTreeSet<VarId>>,
}

impl DomainTyping {
    pub fn num_vars(&self) -> usize {
        self.types.len()
    }

    pub fn type_of(&self, v: VarId) -> DomainType {
        self.types[v.index()]
    }

    /// Ascending, duplicate-free, non-empty for IntEq variables; `None`
    /// for every other type.
    pub fn value_set(&self, v: VarId) -> Option<&[i32]> {
        self.value_sets[v.index()].as_deref()
    }

    pub fn witness_edge(&self, v: VarId) -> Option<usize> {
        self.witnesses[v.index()]
    }

    pub fn linked(&self, v: VarId) -> &BTreeSet<VarId> {
        &self.links[v.index()]
    }

    /// Exclusive counts: exactly-Bool, exactly-IntEq, exactly-IntEqAdd,
    /// exactly-Int.
    pub fn histogram(&self) -> [usize; 4] {
        let mut h = [0usize; 4];
        for t in &self.types {
            h[*t as usize] += 1;
        }
        h
    }
}

/// Demands of a single edge.
pub fn edge_constraints(op: &Op) -> Vec<Constraint> {
    let mut out = Vec::new();
    match op {
        Op::Skip => {}
        Op::Decl { init: None, .. } => {}
        Op::Decl { var, init: Some(e) } | Op::Assign { var, expr: e } => {
            assign_constraints(*var, e, &mut out)
        }
        Op::Assume { expr, .. } => bool_position(expr, &mut out),
    }
    out
}

fn is_bool_topped(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Unary(UnaryOp::Not, _)
            | Expr::Binary(
                BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt
                    | BinOp::Le | BinOp::Ge,
                _,
                _
            )
    )
}

fn op_hardness(op: BinOp) -> Option<DomainType> {
    match op {
        BinOp::Add | BinOp::Sub | BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor => {
            Some(DomainType::IntEqAdd)
        }
        BinOp::Mul | BinOp::Div | BinOp::Mod | BinOp::Shl | BinOp::Shr => Some(DomainType::Int),
        _ => None,
    }
}

fn assign_constraints(target: VarId, e: &Expr, out: &mut Vec<Constraint>) {
    match e {
        Expr::Const(c) => {
            out.push(Constraint::Obs { var: target, value: *c });
            let bound = if *c == 0 || *c == 1 { DomainType::Bool } else { DomainType::IntEq };
            out.push(Constraint::Min { var: target, bound });
        }
        Expr::Var(u) => out.push(Constraint::Flow { from: *u, to: target }),
        Expr::Nondet => {}
        _ if is_bool_topped(e) => {
            // A 0/1-valued right-hand side keeps the target boolean.
            out.push(Constraint::Min { var: target, bound: DomainType::Bool });
            bool_position(e, out);
        }
        _ => {
            // Arithmetic atom: its hardest operator taints every variable
            // in it, the target included.
            let mut vars = Vec::new();
            let mut hardness = DomainType::IntEqAdd;
            scan_atom(e, &mut vars, &mut hardness, out);
            vars.push(target);
            for v in vars {
                out.push(Constraint::Min { var: v, bound: hardness });
            }
        }
    }
}

/// Expression in truth-value position (condition or connective operand).
fn bool_position(e: &Expr, out: &mut Vec<Constraint>) {
    match e {
        Expr::Const(_) | Expr::Nondet => {}
        Expr::Var(v) => {
            // Truthiness is a comparison with zero.
            out.push(Constraint::Min { var: *v, bound: DomainType::Bool });
        }
        Expr::Unary(UnaryOp::Not, inner) => bool_position(inner, out),
        Expr::Binary(BinOp::And | BinOp::Or, l, r) => {
            bool_position(l, out);
            bool_position(r, out);
        }
        Expr::Binary(op @ (BinOp::Eq | BinOp::Ne), l, r) => equality_atom(*op, l, r, out),
        Expr::Binary(BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge, l, r) => {
            comparison_atom(l, r, out)
        }
        _ => {
            // Truthiness of an arithmetic value: `if (x + y)` reads as
            // `(x + y) != 0`, a comparison on a compound expression.
            let mut vars = Vec::new();
            let mut hardness = DomainType::IntEqAdd;
            scan_atom(e, &mut vars, &mut hardness, out);
            for v in vars {
                out.push(Constraint::Min { var: v, bound: hardness });
            }
        }
    }
}

fn equality_atom(_op: BinOp, l: &Expr, r: &Expr, out: &mut Vec<Constraint>) {
    match (l, r) {
        (Expr::Var(v), Expr::Const(c)) | (Expr::Const(c), Expr::Var(v)) => {
            out.push(Constraint::Obs { var: *v, value: *c });
            let bound = if *c == 0 { DomainType::Bool } else { DomainType::IntEq };
            out.push(Constraint::Min { var: *v, bound });
        }
        (Expr::Var(a), Expr::Var(b)) => {
            out.push(Constraint::Min { var: *a, bound: DomainType::Bool });
            out.push(Constraint::Min { var: *b, bound: DomainType::Bool });
            out.push(Constraint::Unify { a: *a, b: *b });
        }
        _ => comparison_atom(l, r, out),
    }
}

/// Ordering comparison, or equality over compound operands: both sides are
/// arithmetic atoms and every variable in them needs at least IntEqAdd.
fn comparison_atom(l: &Expr, r: &Expr, out: &mut Vec<Constraint>) {
    let mut vars = Vec::new();
    let mut hardness = DomainType::IntEqAdd;
    scan_atom(l, &mut vars, &mut hardness, out);
    scan_atom(r, &mut vars, &mut hardness, out);
    for v in vars {
        out.push(Constraint::Min { var: v, bound: hardness });
    }
}

/// Collects the variables and the hardest operator of an arithmetic atom.
/// Boolean-valued subtrees form their own atoms and are analyzed apart.
fn scan_atom(
    e: &Expr,
    vars: &mut Vec<VarId>,
    hardness: &mut DomainType,
    out: &mut Vec<Constraint>,
) {
    match e {
        Expr::Const(_) | Expr::Nondet => {}
        Expr::Var(v) => vars.push(*v),
        Expr::Unary(UnaryOp::BitNot, inner) => {
            *hardness = (*hardness).max(DomainType::IntEqAdd);
            scan_atom(inner, vars, hardness, out);
        }
        Expr::Unary(UnaryOp::Not, _) => bool_position(e, out),
        Expr::Binary(op, l, r) => match op_hardness(*op) {
            Some(h) => {
                *hardness = (*hardness).max(h);
                scan_atom(l, vars, hardness, out);
                scan_atom(r, vars, hardness, out);
            }
            None => bool_position(e, out),
        },
    }
}

pub fn infer(cfa: &Cfa) -> DomainTyping {
    let order: Vec<usize> = (0..cfa.edges.len()).collect();
    infer_with_edge_order(cfa, &order)
}

/// Same result for any permutation of edge indices; exposed so tests can
/// check order independence.
pub fn infer_with_edge_order(cfa: &Cfa, order: &[usize]) -> DomainTyping {
    assert_eq!(order.len(), cfa.edges.len());
    let n = cfa.num_vars();

    // (constraint, index of the edge it came from)
    let mut constraints: Vec<(Constraint, usize)> = Vec::new();
    for &ei in order {
        for c in edge_constraints(&cfa.edges[ei].op) {
            constraints.push((c, ei));
        }
    }

    let mut types = vec![DomainType::Bool; n];
    let mut links: Vec<BTreeSet<VarId>> = vec![BTreeSet::new(); n];
    for (c, _) in &constraints {
        match c {
            Constraint::Flow { from, to } => {
                links[from.index()].insert(*to);
                links[to.index()].insert(*from);
            }
            Constraint::Unify { a, b } => {
                links[a.index()].insert(*b);
                links[b.index()].insert(*a);
            }
            _ => {}
        }
    }

    // Join fixpoint; the lattice has height 4, so this terminates fast.
    let mut changed = true;
    while changed {
        changed = false;
        for (c, _) in &constraints {
            match c {
                Constraint::Min { var, bound } => {
                    if *bound > types[var.index()] {
                        types[var.index()] = *bound;
                        changed = true;
                    }
                }
                Constraint::Flow { from, to } => {
                    if types[from.index()] > types[to.index()] {
                        types[to.index()] = types[from.index()];
                        changed = true;
                    }
                }
                Constraint::Unify { a, b } => {
                    let j = types[a.index()].max(types[b.index()]);
                    if types[a.index()] < j {
                        types[a.index()] = j;
                        changed = true;
                    }
                    if types[b.index()] < j {
                        types[b.index()] = j;
                        changed = true;
                    }
                }
                Constraint::Obs { .. } => {}
            }
        }
    }

    // Canonical witness: the lowest-indexed edge whose constraint, under
    // the final types, forces the variable's final type.
    let mut witnesses: Vec<Option<usize>> = vec![None; n];
    let consider = |v: VarId, forced: DomainType, edge: usize, witnesses: &mut Vec<Option<usize>>| {
        if forced == types[v.index()] {
            let w = &mut witnesses[v.index()];
            if w.map(|cur| edge < cur).unwrap_or(true) {
                *w = Some(edge);
            }
        }
    };
    for (c, ei) in &constraints {
        match c {
            Constraint::Min { var, bound } => consider(*var, *bound, *ei, &mut witnesses),
            Constraint::Flow { from, to } => {
                consider(*to, types[from.index()], *ei, &mut witnesses)
            }
            Constraint::Unify { a, b } => {
                consider(*a, types[b.index()], *ei, &mut witnesses);
                consider(*b, types[a.index()], *ei, &mut witnesses);
            }
            Constraint::Obs { .. } => {}
        }
    }

    // Value sets: IntEq variables linked by assignment or comparison share
    // one partition; the partition's set is the union of constants
    // observed on its members.
    let mut uf = UnionFind::new(n);
    for (c, _) in &constraints {
        let (x, y) = match c {
            Constraint::Flow { from, to } => (*from, *to),
            Constraint::Unify { a, b } => (*a, *b),
            _ => continue,
        };
        if types[x.index()] == DomainType::IntEq && types[y.index()] == DomainType::IntEq {
            uf.union(x.index(), y.index());
        }
    }
    let mut partition_values: Vec<BTreeSet<i32>> = vec![BTreeSet::new(); n];
    for (c, _) in &constraints {
        if let Constraint::Obs { var, value } = c {
            if types[var.index()] == DomainType::IntEq {
                partition_values[uf.find(var.index())].insert(*value);
            }
        }
    }
    let value_sets: Vec<Option<Vec<i32>>> = (0..n)
        .map(|i| {
            if types[i] == DomainType::IntEq {
                let set: Vec<i32> = partition_values[uf.find(i)].iter().copied().collect();
                debug_assert!(!set.is_empty(), "IntEq variable with empty value set");
                Some(set)
            } else {
                None
            }
        })
        .collect();

    DomainTyping { types, value_sets, witnesses, links }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Deterministic: smaller index wins.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
