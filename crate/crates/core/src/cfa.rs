//! Control-flow automaton: the analysis-facing program representation.
//!
//! Locations are plain indices, edges carry one operation each, and all
//! variable names have been resolved to dense `VarId`s by lowering. The
//! `variables` table preserves first-declaration order, which later fixes
//! the default BDD bit order.

use std::collections::BTreeSet;
use std::fmt;

pub use crate::frontend::ast::{BinOp, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl LocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(i32),
    Var(VarId),
    Nondet,
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Calls `f` for every variable occurrence, left to right.
    pub fn for_each_var(&self, f: &mut impl FnMut(VarId)) {
        match self {
            Expr::Const(_) | Expr::Nondet => {}
            Expr::Var(v) => f(*v),
            Expr::Unary(_, e) => e.for_each_var(f),
            Expr::Binary(_, l, r) => {
                l.for_each_var(f);
                r.for_each_var(f);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.for_each_var(&mut |v| {
            out.insert(v);
        });
        out
    }

    pub fn mentions(&self, var: VarId) -> bool {
        let mut found = false;
        self.for_each_var(&mut |v| found |= v == var);
        found
    }
}

/// One edge operation. `Decl` with no initializer havocs the variable;
/// `Assume` keeps only executions where the expression's truth matches
/// `polarity`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Decl { var: VarId, init: Option<Expr> },
    Assign { var: VarId, expr: Expr },
    Assume { expr: Expr, polarity: bool },
    Skip,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub source: LocId,
    pub target: LocId,
    pub op: Op,
    /// Source line the operation came from, for traces and diagnostics.
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct Cfa {
    /// VarId -> mangled source name, in first-declaration order.
    pub variables: Vec<String>,
    /// Sorted by source location; `out_offsets` indexes into this.
    pub edges: Vec<Edge>,
    pub entry: LocId,
    pub num_locations: u32,
    pub error_locations: BTreeSet<LocId>,
    out_offsets: Vec<u32>,
}

impl Cfa {
    /// Builds the automaton from parts, sorting edges by source location.
    /// Callers guarantee locations are dense 0..num_locations with
    /// `entry` = 0 and no edge targeting the entry.
    pub(crate) fn assemble(
        variables: Vec<String>,
        mut edges: Vec<Edge>,
        num_locations: u32,
        error_locations: BTreeSet<LocId>,
    ) -> Cfa {
        edges.sort_by_key(|e| e.source.0);
        let mut out_offsets = vec![0u32; num_locations as usize + 1];
        for e in &edges {
            out_offsets[e.source.index() + 1] += 1;
        }
        for i in 1..out_offsets.len() {
            out_offsets[i] += out_offsets[i - 1];
        }
        Cfa {
            variables,
            edges,
            entry: LocId(0),
            num_locations,
            error_locations,
            out_offsets,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.variables[v.index()]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables
            .iter()
            .position(|n| n == name)
            .map(|i| VarId(i as u32))
    }

    pub fn out_edges(&self, loc: LocId) -> &[Edge] {
        &self.edges[self.out_edge_range(loc)]
    }

    /// Global indices into `edges` for the out-edges of `loc`.
    pub fn out_edge_range(&self, loc: LocId) -> std::ops::Range<usize> {
        let lo = self.out_offsets[loc.index()] as usize;
        let hi = self.out_offsets[loc.index() + 1] as usize;
        lo..hi
    }

    pub fn is_error(&self, loc: LocId) -> bool {
        self.error_locations.contains(&loc)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "v{}", v.0),
            Expr::Nondet => write!(f, "nondet()"),
            Expr::Unary(UnaryOp::Not, e) => write!(f, "!({e})"),
            Expr::Unary(UnaryOp::BitNot, e) => write!(f, "~({e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}
