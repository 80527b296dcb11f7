//! Explicit-value domain: partial maps from variables to concrete values.
//!
//! A state binds some variables to known `i32` values; unbound variables
//! are unconstrained. Evaluation is three-valued (any unknown operand
//! makes the result unknown, except where short-circuiting decides it).
//! Assumes first check feasibility, then learn bindings from equalities
//! that pin a variable to a constant.
//!
//! Arithmetic wraps; shift amounts are masked to 0..=31; `>>` is
//! arithmetic. Division or modulo by zero yields an unknown value here
//! (the concrete reference semantics picks 0, which unknown includes).

use std::collections::BTreeMap;

use crate::cfa::{BinOp, Expr, Op, UnaryOp, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Val {
    Known(i32),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Val {
    pub fn truthiness(self) -> Truth {
        match self {
            Val::Known(0) => Truth::False,
            Val::Known(_) => Truth::True,
            Val::Unknown => Truth::Unknown,
        }
    }
}

fn bool_val(b: bool) -> Val {
    Val::Known(if b { 1 } else { 0 })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExplicitState {
    values: BTreeMap<VarId, i32>,
}

impl ExplicitState {
    /// No bindings: every variable unconstrained.
    pub fn top() -> Self {
        ExplicitState { values: BTreeMap::new() }
    }

    pub fn get(&self, v: VarId) -> Option<i32> {
        self.values.get(&v).copied()
    }

    pub fn bindings(&self) -> &BTreeMap<VarId, i32> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eval(&self, e: &Expr) -> Val {
        match e {
            Expr::Const(c) => Val::Known(*c),
            Expr::Var(v) => self.get(*v).map_or(Val::Unknown, Val::Known),
            Expr::Nondet => Val::Unknown,
            Expr::Unary(UnaryOp::Not, inner) => match self.eval(inner).truthiness() {
                Truth::True => bool_val(false),
                Truth::False => bool_val(true),
                Truth::Unknown => Val::Unknown,
            },
            Expr::Unary(UnaryOp::BitNot, inner) => match self.eval(inner) {
                Val::Known(c) => Val::Known(!c),
                Val::Unknown => Val::Unknown,
            },
            Expr::Binary(op, l, r) => self.eval_binary(*op, l, r),
        }
    }

    fn eval_binary(&self, op: BinOp, l: &Expr, r: &Expr) -> Val {
        // Connectives first: they decide on one known side.
        match op {
            BinOp::And => {
                let lt = self.eval(l).truthiness();
                if lt == Truth::False {
                    return bool_val(false);
                }
                let rt = self.eval(r).truthiness();
                return match (lt, rt) {
                    (_, Truth::False) => bool_val(false),
                    (Truth::True, Truth::True) => bool_val(true),
                    _ => Val::Unknown,
                };
            }
            BinOp::Or => {
                let lt = self.eval(l).truthiness();
                if lt == Truth::True {
                    return bool_val(true);
                }
                let rt = self.eval(r).truthiness();
                return match (lt, rt) {
                    (_, Truth::True) => bool_val(true),
                    (Truth::False, Truth::False) => bool_val(false),
                    _ => Val::Unknown,
                };
            }
            _ => {}
        }
        let (lv, rv) = (self.eval(l), self.eval(r));
        let (a, b) = match (lv, rv) {
            (Val::Known(a), Val::Known(b)) => (a, b),
            _ => return Val::Unknown,
        };
        match op {
            BinOp::Add => Val::Known(a.wrapping_add(b)),
            BinOp::Sub => Val::Known(a.wrapping_sub(b)),
            BinOp::Mul => Val::Known(a.wrapping_mul(b)),
            BinOp::Div => {
                if b == 0 {
                    Val::Unknown
                } else {
                    Val::Known(a.wrapping_div(b))
                }
            }
            BinOp::Mod => {
                if b == 0 {
                    Val::Unknown
                } else {
                    Val::Known(a.wrapping_rem(b))
                }
            }
            BinOp::BitAnd => Val::Known(a & b),
            BinOp::BitOr => Val::Known(a | b),
            BinOp::BitXor => Val::Known(a ^ b),
            BinOp::Shl => Val::Known(a.wrapping_shl(b as u32 & 31)),
            BinOp::Shr => Val::Known(a.wrapping_shr(b as u32 & 31)),
            BinOp::Eq => bool_val(a == b),
            BinOp::Ne => bool_val(a != b),
            BinOp::Lt => bool_val(a < b),
            BinOp::Gt => bool_val(a > b),
            BinOp::Le => bool_val(a <= b),
            BinOp::Ge => bool_val(a >= b),
            BinOp::And | BinOp::Or => unreachable!("handled above"),
        }
    }

    /// Successor state, or `None` when the operation is infeasible here.
    pub fn transfer(&self, op: &Op) -> Option<ExplicitState> {
        match op {
            Op::Skip => Some(self.clone()),
            Op::Decl { var, init: None } => {
                let mut s = self.clone();
                s.values.remove(var);
                Some(s)
            }
            Op::Decl { var, init: Some(e) } | Op::Assign { var, expr: e } => {
                let rhs = self.eval(e);
                let mut s = self.clone();
                match rhs {
                    Val::Known(c) => {
                        s.values.insert(*var, c);
                    }
                    Val::Unknown => {
                        s.values.remove(var);
                    }
                }
                Some(s)
            }
            Op::Assume { expr, polarity } => self.assume(expr, *polarity),
        }
    }

    fn assume(&self, expr: &Expr, target: bool) -> Option<ExplicitState> {
        // Feasibility first.
        match (self.eval(expr).truthiness(), target) {
            (Truth::True, false) | (Truth::False, true) => return None,
            _ => {}
        }
        let learned = self.learn(expr, target)?;
        // Learning may have uncovered a contradiction elsewhere in the
        // expression.
        match (learned.eval(expr).truthiness(), target) {
            (Truth::True, false) | (Truth::False, true) => None,
            _ => Some(learned),
        }
    }

    /// Adds bindings implied by `expr == target`. Never removes or
    /// changes an existing binding; conflicts mean infeasibility.
    fn learn(&self, expr: &Expr, target: bool) -> Option<ExplicitState> {
        match (expr, target) {
            (Expr::Unary(UnaryOp::Not, inner), t) => self.learn(inner, !t),
            (Expr::Binary(BinOp::And, l, r), true)
            | (Expr::Binary(BinOp::Or, l, r), false) => {
                self.learn(l, target)?.learn(r, target)
            }
            (Expr::Binary(BinOp::Eq, l, r), true)
            | (Expr::Binary(BinOp::Ne, l, r), false) => self.learn_equal(l, r),
            (Expr::Var(v), false) => self.bind(*v, 0),
            _ => Some(self.clone()),
        }
    }

    fn learn_equal(&self, l: &Expr, r: &Expr) -> Option<ExplicitState> {
        match (l, r) {
            (Expr::Var(v), other) | (other, Expr::Var(v)) => {
                match self.eval(other) {
                    Val::Known(c) => self.bind(*v, c),
                    Val::Unknown => {
                        // `v == u` with v known and u free: bind u.
                        if let (Some(c), Expr::Var(u)) = (self.get(*v), other) {
                            self.bind(*u, c)
                        } else {
                            Some(self.clone())
                        }
                    }
                }
            }
            _ => Some(self.clone()),
        }
    }

    fn bind(&self, v: VarId, c: i32) -> Option<ExplicitState> {
        match self.get(v) {
            Some(existing) if existing != c => None,
            _ => {
                let mut s = self.clone();
                s.values.insert(v, c);
                Some(s)
            }
        }
    }

    /// `self` covers `other`: every state admitted by `other` is admitted
    /// by `self` (self's bindings are a subset of other's).
    pub fn covers(&self, other: &ExplicitState) -> bool {
        self.values
            .iter()
            .all(|(v, c)| other.values.get(v) == Some(c))
    }

    /// Least upper bound: keep only bindings both sides agree on.
    pub fn join(&self, other: &ExplicitState) -> ExplicitState {
        let values = self
            .values
            .iter()
            .filter(|(v, c)| other.values.get(v) == Some(c))
            .map(|(v, c)| (*v, *c))
            .collect();
        ExplicitState { values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> VarId {
        VarId(i)
    }

    fn var(i: u32) -> Expr {
        Expr::Var(v(i))
    }

    fn c(n: i32) -> Expr {
        Expr::Const(n)
    }

    fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    fn with(bindings: &[(u32, i32)]) -> ExplicitState {
        let mut s = ExplicitState::top();
        for (i, val) in bindings {
            s = s.bind(v(*i), *val).unwrap();
        }
        s
    }

    #[test]
    fn eval_three_valued() {
        let s = with(&[(0, 5)]);
        assert_eq!(s.eval(&bin(BinOp::Add, var(0), c(2))), Val::Known(7));
        assert_eq!(s.eval(&bin(BinOp::Add, var(1), c(2))), Val::Unknown);
        assert_eq!(s.eval(&Expr::Nondet), Val::Unknown);
    }

    #[test]
    fn short_circuit_decides_with_unknowns() {
        let s = with(&[(0, 0), (1, 3)]);
        // 0 && unknown = 0
        assert_eq!(s.eval(&bin(BinOp::And, var(0), var(9))), Val::Known(0));
        // 3 || unknown = 1
        assert_eq!(s.eval(&bin(BinOp::Or, var(1), var(9))), Val::Known(1));
        // unknown && 3 = unknown
        assert_eq!(s.eval(&bin(BinOp::And, var(9), var(1))), Val::Unknown);
        // unknown && 0 = 0 (right side decides)
        assert_eq!(s.eval(&bin(BinOp::And, var(9), var(0))), Val::Known(0));
    }

    #[test]
    fn division_by_zero_is_unknown() {
        let s = with(&[(0, 10), (1, 0)]);
        assert_eq!(s.eval(&bin(BinOp::Div, var(0), var(1))), Val::Unknown);
        assert_eq!(s.eval(&bin(BinOp::Mod, var(0), var(1))), Val::Unknown);
        assert_eq!(s.eval(&bin(BinOp::Div, var(0), c(3))), Val::Known(3));
    }

    #[test]
    fn wrapping_and_shift_masking() {
        let s = with(&[(0, i32::MAX), (1, 33)]);
        assert_eq!(
            s.eval(&bin(BinOp::Add, var(0), c(1))),
            Val::Known(i32::MIN)
        );
        // Shift by 33 behaves as shift by 1.
        assert_eq!(s.eval(&bin(BinOp::Shl, c(1), var(1))), Val::Known(2));
        // Arithmetic right shift keeps the sign.
        assert_eq!(s.eval(&bin(BinOp::Shr, c(-8), c(1))), Val::Known(-4));
    }

    #[test]
    fn assign_binds_and_havocs() {
        let s = ExplicitState::top();
        let s = s
            .transfer(&Op::Assign { var: v(0), expr: c(4) })
            .unwrap();
        assert_eq!(s.get(v(0)), Some(4));
        let s = s
            .transfer(&Op::Assign { var: v(0), expr: Expr::Nondet })
            .unwrap();
        assert_eq!(s.get(v(0)), None);
    }

    #[test]
    fn assume_prunes_contradictions() {
        let s = with(&[(0, 5)]);
        let eq7 = bin(BinOp::Eq, var(0), c(7));
        assert!(s.transfer(&Op::Assume { expr: eq7.clone(), polarity: true }).is_none());
        assert!(s.transfer(&Op::Assume { expr: eq7, polarity: false }).is_some());
    }

    #[test]
    fn assume_learns_equalities() {
        let s = ExplicitState::top();
        let eq = bin(BinOp::Eq, var(0), c(9));
        let s2 = s.transfer(&Op::Assume { expr: eq, polarity: true }).unwrap();
        assert_eq!(s2.get(v(0)), Some(9));
        // !(x != 3) binds too.
        let ne = Expr::Unary(
            UnaryOp::Not,
            Box::new(bin(BinOp::Ne, var(1), c(3))),
        );
        let s3 = s2.transfer(&Op::Assume { expr: ne, polarity: true }).unwrap();
        assert_eq!(s3.get(v(1)), Some(3));
        // Conjunctions learn both sides; contradictions are infeasible.
        let both = bin(
            BinOp::And,
            bin(BinOp::Eq, var(2), c(1)),
            bin(BinOp::Eq, var(2), c(2)),
        );
        assert!(s3.transfer(&Op::Assume { expr: both, polarity: true }).is_none());
    }

    #[test]
    fn assume_false_var_binds_zero() {
        let s = ExplicitState::top();
        let s2 = s
            .transfer(&Op::Assume { expr: var(0), polarity: false })
            .unwrap();
        assert_eq!(s2.get(v(0)), Some(0));
    }

    #[test]
    fn var_to_var_equality_propagates() {
        let s = with(&[(0, 6)]);
        let eq = bin(BinOp::Eq, var(0), var(1));
        let s2 = s.transfer(&Op::Assume { expr: eq, polarity: true }).unwrap();
        assert_eq!(s2.get(v(1)), Some(6));
    }

    #[test]
    fn covers_is_binding_subset() {
        let wide = with(&[(0, 1)]);
        let narrow = with(&[(0, 1), (1, 2)]);
        assert!(wide.covers(&narrow));
        assert!(!narrow.covers(&wide));
        assert!(ExplicitState::top().covers(&narrow));
        let other = with(&[(0, 9)]);
        assert!(!wide.covers(&other));
    }

    #[test]
    fn join_keeps_agreement() {
        let a = with(&[(0, 1), (1, 2)]);
        let b = with(&[(0, 1), (1, 3)]);
        let j = a.join(&b);
        assert_eq!(j.get(v(0)), Some(1));
        assert_eq!(j.get(v(1)), None);
        assert!(j.covers(&a) && j.covers(&b));
    }

    #[test]
    fn decl_without_init_havocs() {
        let s = with(&[(0, 4)]);
        let s2 = s.transfer(&Op::Decl { var: v(0), init: None }).unwrap();
        assert_eq!(s2.get(v(0)), None);
    }
}
