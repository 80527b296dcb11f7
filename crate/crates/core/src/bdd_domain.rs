//! Symbolic domain: program states as BDDs over per-variable bit layouts.
//!
//! Each tracked variable gets an encoding chosen from its domain type:
//!
//! - `Bool1` — one bit holding the variable's truthiness.
//! - `Compact` — for variables only ever equality-tested against a known
//!   constant set: ceil(log2(n)) code bits index into the value set, plus
//!   one "outside" bit for values not in the set.
//! - `Full` — plain two's-complement bit vector (default 32 bits).
//!
//! Every encoded bit owns two adjacent BDD levels: the plain bit and its
//! primed copy (used only transiently inside assignments, so renaming
//! primed to plain is a structural relabel). Above all variable bits
//! lives a pool of scratch levels for unknown values; transfers quantify
//! scratch out before returning, so reachable-state BDDs never mention
//! scratch or primed levels.

use std::collections::{BTreeMap, BTreeSet};

use crate::bdd::bitvec::{
    bv_add, bv_and, bv_as_const, bv_const, bv_eq, bv_ite, bv_mul, bv_neg, bv_nonzero,
    bv_not, bv_or, bv_shl_const, bv_shr_const, bv_slt, bv_sub, bv_udivrem_const, bv_xor,
    BitVec,
};
use crate::bdd::{Bdd, NodeRef, Result, FALSE, TRUE};
use crate::cfa::{BinOp, Expr, Op, UnaryOp, VarId};
use crate::domtype::{DomainType, DomainTyping};

/// How many candidate divisor values to enumerate before giving up on
/// a division or remainder whose divisor is not a single constant.
const DIVISOR_ENUM_BOUND: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Encoding {
    Bool1,
    Compact { values: Vec<i32> },
    Full { width: usize },
}

impl Encoding {
    pub fn width(&self) -> usize {
        match self {
            Encoding::Bool1 => 1,
            Encoding::Compact { values } => code_bit_count(values.len()) + 1,
            Encoding::Full { width } => *width,
        }
    }
}

/// Bits needed to index `n` values (at least one).
pub fn code_bit_count(n: usize) -> usize {
    let n = n.max(2);
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

#[derive(Debug, Clone)]
pub struct VarLayout {
    pub var: VarId,
    pub encoding: Encoding,
    /// First BDD level of this variable's bit block.
    pub base: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Plain,
    Primed,
}

impl VarLayout {
    pub fn width(&self) -> usize {
        self.encoding.width()
    }

    pub fn plain_level(&self, i: usize) -> u32 {
        self.base + 2 * i as u32
    }

    pub fn primed_level(&self, i: usize) -> u32 {
        self.base + 2 * i as u32 + 1
    }

    fn level(&self, role: Role, i: usize) -> u32 {
        match role {
            Role::Plain => self.plain_level(i),
            Role::Primed => self.primed_level(i),
        }
    }

    fn plain_levels(&self) -> BTreeSet<u32> {
        (0..self.width()).map(|i| self.plain_level(i)).collect()
    }

    fn prime_to_plain(&self) -> BTreeMap<u32, u32> {
        (0..self.width())
            .map(|i| (self.primed_level(i), self.plain_level(i)))
            .collect()
    }
}

/// Right-hand side of an assignment, reduced to the target's encoding.
enum RhsVal {
    /// Truthiness bit (Bool1 targets).
    Bit(NodeRef),
    /// Full-width value vector.
    Vec(BitVec),
    /// Copy of another variable with the identical compact layout.
    CompactCopy(VarId),
    CompactConst(i32),
    /// 0/1-valued condition assigned to a compact variable.
    CompactPred(NodeRef),
    /// Unconstrained.
    Free,
}

pub struct BddDomain {
    pub bdd: Bdd,
    layouts: BTreeMap<VarId, VarLayout>,
    scratch_base: u32,
    scratch_next: u32,
    bv_width: usize,
}

impl BddDomain {
    /// `order` lists the tracked variables in layout order (layout order
    /// is the variable order of the diagrams).
    pub fn new(
        typing: &DomainTyping,
        order: &[VarId],
        bv_width: usize,
        node_limit: usize,
    ) -> Self {
        assert!((1..=32).contains(&bv_width));
        let mut layouts = BTreeMap::new();
        let mut next_level = 0u32;
        for &v in order {
            let encoding = match typing.type_of(v) {
                DomainType::Bool => Encoding::Bool1,
                DomainType::IntEq => Encoding::Compact {
                    values: typing.value_set(v).expect("IntEq value set").to_vec(),
                },
                DomainType::IntEqAdd | DomainType::Int => Encoding::Full { width: bv_width },
            };
            let width = encoding.width() as u32;
            layouts.insert(v, VarLayout { var: v, encoding, base: next_level });
            next_level += 2 * width;
        }
        BddDomain {
            bdd: Bdd::new(node_limit),
            layouts,
            scratch_base: next_level,
            scratch_next: 0,
            bv_width,
        }
    }

    pub fn tracks(&self, v: VarId) -> bool {
        self.layouts.contains_key(&v)
    }

    pub fn layout(&self, v: VarId) -> Option<&VarLayout> {
        self.layouts.get(&v)
    }

    pub fn layouts(&self) -> impl Iterator<Item = &VarLayout> {
        self.layouts.values()
    }

    pub fn num_tracked(&self) -> usize {
        self.layouts.len()
    }

    /// Sum of plain bits over all tracked variables.
    pub fn total_plain_bits(&self) -> usize {
        self.layouts.values().map(|l| l.width()).sum()
    }

    /// Initial state: everything unconstrained, compact variables in
    /// canonical form.
    pub fn initial(&mut self) -> Result<NodeRef> {
        let vars: Vec<VarId> = self.layouts.keys().copied().collect();
        let mut s = TRUE;
        for v in vars {
            let canon = self.canonical_form(v, Role::Plain)?;
            s = self.bdd.and(s, canon)?;
        }
        Ok(s)
    }

    pub fn bottom(&self) -> NodeRef {
        FALSE
    }

    pub fn is_bottom(&self, s: NodeRef) -> bool {
        s == FALSE
    }

    pub fn join(&mut self, a: NodeRef, b: NodeRef) -> Result<NodeRef> {
        self.bdd.or(a, b)
    }

    /// Does `a` describe a subset of `b`'s states?
    pub fn entails(&mut self, a: NodeRef, b: NodeRef) -> Result<bool> {
        let nb = self.bdd.not(b)?;
        let diff = self.bdd.and(a, nb)?;
        Ok(diff == FALSE)
    }

    pub fn node_count(&self) -> usize {
        self.bdd.node_count()
    }

    /// Tracked variables any of whose bits appear in `s`'s support.
    pub fn support_vars(&self, s: NodeRef) -> Vec<VarId> {
        let support = self.bdd.support(s);
        let mut out = Vec::new();
        for layout in self.layouts.values() {
            let lo = layout.base;
            let hi = layout.base + 2 * layout.width() as u32;
            if support.iter().any(|&l| l >= lo && l < hi) {
                out.push(layout.var);
            }
        }
        out
    }

    /// True when the state mentions neither primed nor scratch levels.
    pub fn state_is_clean(&self, s: NodeRef) -> bool {
        self.bdd.support(s).iter().all(|&l| {
            if l >= self.scratch_base {
                return false;
            }
            self.level_is_plain(l)
        })
    }

    fn level_is_plain(&self, l: u32) -> bool {
        // Bit blocks interleave plain (even offset) and primed (odd).
        self.layouts
            .values()
            .any(|lay| {
                let w = 2 * lay.width() as u32;
                l >= lay.base && l < lay.base + w && (l - lay.base) % 2 == 0
            })
    }

    fn fresh_bit(&mut self) -> Result<NodeRef> {
        let level = self.scratch_base + self.scratch_next;
        self.scratch_next += 1;
        self.bdd.var(level)
    }

    fn fresh_vec(&mut self) -> Result<BitVec> {
        let bits = (0..self.bv_width)
            .map(|_| self.fresh_bit())
            .collect::<Result<_>>()?;
        Ok(BitVec::new(bits))
    }

    /// Quantifies out any scratch levels and recycles the pool.
    fn scrub(&mut self, s: NodeRef) -> Result<NodeRef> {
        let scratch: BTreeSet<u32> = self
            .bdd
            .support(s)
            .into_iter()
            .filter(|&l| l >= self.scratch_base)
            .collect();
        let r = if scratch.is_empty() { s } else { self.bdd.exists(s, &scratch)? };
        self.scratch_next = 0;
        debug_assert!(self.state_is_clean(r));
        Ok(r)
    }

    fn wrap_const(&self, c: i32) -> u64 {
        let mask = if self.bv_width == 64 { u64::MAX } else { (1u64 << self.bv_width) - 1 };
        (c as u32 as u64) & mask
    }

    fn const_vec(&self, c: i32) -> Result<BitVec> {
        bv_const(self.bv_width, self.wrap_const(c))
    }

    fn bit_to_vec(&self, bit: NodeRef) -> BitVec {
        let mut bits = vec![FALSE; self.bv_width];
        bits[0] = bit;
        BitVec::new(bits)
    }

    fn var_bit(&mut self, lay_var: VarId, role: Role, i: usize) -> Result<NodeRef> {
        let level = self.layouts[&lay_var].level(role, i);
        self.bdd.var(level)
    }

    /// code == k over the variable's code bits.
    fn code_pred(&mut self, v: VarId, role: Role, k: usize) -> Result<NodeRef> {
        let nbits = self.layouts[&v].width() - 1;
        let mut acc = TRUE;
        for j in 0..nbits {
            let b = self.var_bit(v, role, j)?;
            let lit = if (k >> j) & 1 == 1 { b } else { self.bdd.not(b)? };
            acc = self.bdd.and(acc, lit)?;
        }
        Ok(acc)
    }

    fn extra_bit(&mut self, v: VarId, role: Role) -> Result<NodeRef> {
        let i = self.layouts[&v].width() - 1;
        self.var_bit(v, role, i)
    }

    /// Canonical compact form: outside values carry code 0, inside values
    /// carry a valid index. `TRUE` for other encodings.
    fn canonical_form(&mut self, v: VarId, role: Role) -> Result<NodeRef> {
        let values = match &self.layouts[&v].encoding {
            Encoding::Compact { values } => values.clone(),
            _ => return Ok(TRUE),
        };
        let n = values.len();
        let nbits = code_bit_count(n);
        let extra = self.extra_bit(v, role)?;
        let code0 = self.code_pred(v, role, 0)?;
        let valid = if n == 1 << nbits {
            TRUE
        } else {
            let mut any = FALSE;
            for k in 0..n {
                let ck = self.code_pred(v, role, k)?;
                any = self.bdd.or(any, ck)?;
            }
            any
        };
        self.bdd.ite(extra, code0, valid)
    }

    /// Truncating signed division or remainder by a known nonzero
    /// divisor: unsigned restoring division over the absolute value,
    /// with signs fixed up afterwards (quotient negative when operand
    /// signs differ, remainder sign following the dividend). All parts
    /// wrap at the vector width, which makes MIN / -1 come out as MIN,
    /// matching the concrete wrapping semantics.
    fn divrem_const(&mut self, x: &BitVec, d: i64, want_div: bool) -> Result<BitVec> {
        let d_abs = d.unsigned_abs();
        let sign_x = x.msb();
        let negx = bv_neg(&mut self.bdd, x)?;
        let absx = bv_ite(&mut self.bdd, sign_x, &negx, x)?;
        let (qu, ru) = bv_udivrem_const(&mut self.bdd, &absx, d_abs)?;
        if want_div {
            let negq = bv_neg(&mut self.bdd, &qu)?;
            if d < 0 {
                bv_ite(&mut self.bdd, sign_x, &qu, &negq)
            } else {
                bv_ite(&mut self.bdd, sign_x, &negq, &qu)
            }
        } else {
            let negr = bv_neg(&mut self.bdd, &ru)?;
            bv_ite(&mut self.bdd, sign_x, &negr, &ru)
        }
    }

    /// Collects into `out` up to `limit` distinct values the vector can
    /// take under `state`, splitting the state on one undetermined bit
    /// at a time. Returns true when the collected set is exhaustive,
    /// false when the walk was cut off at the limit. Each leaf of the
    /// split fixes a distinct bit pattern, so every leaf contributes a
    /// new value and the walk does O(limit * width) entailment checks.
    fn vec_values(
        &mut self,
        state: NodeRef,
        v: &BitVec,
        limit: usize,
        out: &mut Vec<i64>,
    ) -> Result<bool> {
        let sv = self.simplify_under(state, v)?;
        if let Some(c) = bv_as_const(&sv) {
            if !out.contains(&c) {
                if out.len() >= limit {
                    return Ok(false);
                }
                out.push(c);
            }
            return Ok(true);
        }
        if out.len() >= limit {
            return Ok(false);
        }
        let bit = sv
            .bits()
            .iter()
            .copied()
            .find(|&b| b != TRUE && b != FALSE)
            .expect("non-constant vector has a symbolic bit");
        let nb = self.bdd.not(bit)?;
        let s0 = self.bdd.and(state, nb)?;
        let s1 = self.bdd.and(state, bit)?;
        let mut complete = true;
        if s0 != FALSE {
            complete &= self.vec_values(s0, &sv, limit, out)?;
        }
        if complete && s1 != FALSE {
            complete &= self.vec_values(s1, &sv, limit, out)?;
        }
        Ok(complete)
    }

    /// Replaces bits the state already decides by constants. The result
    /// is only equivalent in conjunction with `state`.
    fn simplify_under(&mut self, state: NodeRef, v: &BitVec) -> Result<BitVec> {
        let mut bits = Vec::with_capacity(v.width());
        for &bit in v.bits() {
            let simplified = if bit == TRUE || bit == FALSE {
                bit
            } else if self.bdd.and(state, bit)? == FALSE {
                FALSE
            } else {
                let nb = self.bdd.not(bit)?;
                if self.bdd.and(state, nb)? == FALSE {
                    TRUE
                } else {
                    bit
                }
            };
            bits.push(simplified);
        }
        Ok(BitVec::new(bits))
    }

    /// Value of an expression as a full-width vector. Every variable in
    /// `e` must be tracked by this domain.
    fn encode_expr(&mut self, state: NodeRef, e: &Expr) -> Result<BitVec> {
        match e {
            Expr::Const(c) => self.const_vec(*c),
            Expr::Nondet => self.fresh_vec(),
            Expr::Var(v) => self.var_value_vec(*v),
            Expr::Unary(UnaryOp::Not, inner) => {
                let p = self.encode_pred(state, inner)?;
                let np = self.bdd.not(p)?;
                Ok(self.bit_to_vec(np))
            }
            Expr::Unary(UnaryOp::BitNot, inner) => {
                let v = self.encode_expr(state, inner)?;
                bv_not(&mut self.bdd, &v)
            }
            Expr::Binary(op, l, r) => self.encode_binary(state, *op, l, r),
        }
    }

    fn var_value_vec(&mut self, v: VarId) -> Result<BitVec> {
        match self.layouts[&v].encoding.clone() {
            Encoding::Bool1 => {
                // Only truthiness is tracked; a true bit admits any
                // value (soundly including zero — extra behaviors only).
                let bit = self.var_bit(v, Role::Plain, 0)?;
                let any = self.fresh_vec()?;
                let zero = self.const_vec(0)?;
                bv_ite(&mut self.bdd, bit, &any, &zero)
            }
            Encoding::Compact { values } => {
                let mut vec = self.const_vec(0)?;
                for (k, &c) in values.iter().enumerate() {
                    let sel = self.code_pred(v, Role::Plain, k)?;
                    let cv = self.const_vec(c)?;
                    vec = bv_ite(&mut self.bdd, sel, &cv, &vec)?;
                }
                let extra = self.extra_bit(v, Role::Plain)?;
                let any = self.fresh_vec()?;
                bv_ite(&mut self.bdd, extra, &any, &vec)
            }
            Encoding::Full { .. } => {
                let levels: Vec<u32> = (0..self.layouts[&v].width())
                    .map(|i| self.layouts[&v].plain_level(i))
                    .collect();
                let bits = levels
                    .into_iter()
                    .map(|l| self.bdd.var(l))
                    .collect::<Result<_>>()?;
                Ok(BitVec::new(bits))
            }
        }
    }

    fn encode_binary(
        &mut self,
        state: NodeRef,
        op: BinOp,
        l: &Expr,
        r: &Expr,
    ) -> Result<BitVec> {
        match op {
            BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt
            | BinOp::Le | BinOp::Ge => {
                let e = Expr::Binary(op, Box::new(l.clone()), Box::new(r.clone()));
                let p = self.encode_pred(state, &e)?;
                Ok(self.bit_to_vec(p))
            }
            BinOp::Add | BinOp::Sub => {
                let lv = self.encode_expr(state, l)?;
                let lv = self.simplify_under(state, &lv)?;
                let rv = self.encode_expr(state, r)?;
                let rv = self.simplify_under(state, &rv)?;
                if op == BinOp::Add {
                    bv_add(&mut self.bdd, &lv, &rv)
                } else {
                    bv_sub(&mut self.bdd, &lv, &rv)
                }
            }
            BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor => {
                let lv = self.encode_expr(state, l)?;
                let lv = self.simplify_under(state, &lv)?;
                let rv = self.encode_expr(state, r)?;
                let rv = self.simplify_under(state, &rv)?;
                match op {
                    BinOp::BitAnd => bv_and(&mut self.bdd, &lv, &rv),
                    BinOp::BitOr => bv_or(&mut self.bdd, &lv, &rv),
                    _ => bv_xor(&mut self.bdd, &lv, &rv),
                }
            }
            BinOp::Mul => {
                let lv = self.encode_expr(state, l)?;
                let lv = self.simplify_under(state, &lv)?;
                let rv = self.encode_expr(state, r)?;
                let rv = self.simplify_under(state, &rv)?;
                bv_mul(&mut self.bdd, &lv, &rv)
            }
            BinOp::Div | BinOp::Mod => {
                let lv = self.encode_expr(state, l)?;
                let lv = self.simplify_under(state, &lv)?;
                let rv = self.encode_expr(state, r)?;
                let rv = self.simplify_under(state, &rv)?;
                let want_div = op == BinOp::Div;
                match (bv_as_const(&lv), bv_as_const(&rv)) {
                    (Some(a), Some(b)) if b != 0 => {
                        let (a, b) = (a as i32, b as i32);
                        let c = if want_div {
                            a.wrapping_div(b)
                        } else {
                            a.wrapping_rem(b)
                        };
                        self.const_vec(c)
                    }
                    (None, Some(b)) if b != 0 => self.divrem_const(&lv, b, want_div),
                    (_, None) => {
                        // Symbolic divisor: when the state confines it to
                        // a few values, dispatch on each; regions not
                        // covered (including zero) stay unconstrained.
                        let mut vals = Vec::new();
                        self.vec_values(state, &rv, DIVISOR_ENUM_BOUND, &mut vals)?;
                        let mut result = self.fresh_vec()?;
                        for &dv in vals.iter().filter(|&&d| d != 0) {
                            let dvec = self.const_vec(dv as i32)?;
                            let hit = bv_eq(&mut self.bdd, &rv, &dvec)?;
                            let qr = self.divrem_const(&lv, dv, want_div)?;
                            result = bv_ite(&mut self.bdd, hit, &qr, &result)?;
                        }
                        Ok(result)
                    }
                    // Constant zero divisor: any result.
                    _ => self.fresh_vec(),
                }
            }
            BinOp::Shl | BinOp::Shr => {
                let lv = self.encode_expr(state, l)?;
                let lv = self.simplify_under(state, &lv)?;
                let rv = self.encode_expr(state, r)?;
                let rv = self.simplify_under(state, &rv)?;
                self.encode_shift(op == BinOp::Shl, &lv, &rv)
            }
        }
    }

    /// Shift by the low five bits of the amount (two's-complement, so
    /// missing high bits replicate the sign).
    fn encode_shift(&mut self, left: bool, a: &BitVec, amount: &BitVec) -> Result<BitVec> {
        if let Some(raw) = bv_as_const(amount) {
            let k = (raw as u32 & 31) as usize;
            return self.shift_total(left, a, k);
        }
        // Barrel shifter over the five amount bits that survive the mask.
        let mut cur = a.clone();
        for p in 0..5usize {
            let amt_bit = if p < amount.width() { amount.bit(p) } else { amount.msb() };
            if amt_bit == FALSE {
                continue;
            }
            let shifted = self.shift_total(left, &cur, 1 << p)?;
            cur = if amt_bit == TRUE {
                shifted
            } else {
                bv_ite(&mut self.bdd, amt_bit, &shifted, &cur)?
            };
        }
        Ok(cur)
    }

    /// Constant shift that saturates instead of erroring at `k >= width`.
    fn shift_total(&mut self, left: bool, a: &BitVec, k: usize) -> Result<BitVec> {
        let w = a.width();
        if k == 0 {
            return Ok(a.clone());
        }
        if k >= w {
            return if left {
                Ok(BitVec::new(vec![FALSE; w]))
            } else {
                Ok(BitVec::new(vec![a.msb(); w]))
            };
        }
        if left {
            bv_shl_const(&mut self.bdd, a, k)
        } else {
            bv_shr_const(&mut self.bdd, a, k)
        }
    }

    /// Truth value of an expression under `state` (only valid conjoined
    /// with `state`).
    pub fn encode_pred(&mut self, state: NodeRef, e: &Expr) -> Result<NodeRef> {
        match e {
            Expr::Const(c) => Ok(self.bdd.constant(*c != 0)),
            Expr::Nondet => self.fresh_bit(),
            Expr::Var(v) => self.var_truthiness(*v),
            Expr::Unary(UnaryOp::Not, inner) => {
                let p = self.encode_pred(state, inner)?;
                self.bdd.not(p)
            }
            Expr::Unary(UnaryOp::BitNot, _) => {
                let v = self.encode_expr(state, e)?;
                let v = self.simplify_under(state, &v)?;
                bv_nonzero(&mut self.bdd, &v)
            }
            Expr::Binary(BinOp::And, l, r) => {
                let lp = self.encode_pred(state, l)?;
                let rp = self.encode_pred(state, r)?;
                self.bdd.and(lp, rp)
            }
            Expr::Binary(BinOp::Or, l, r) => {
                let lp = self.encode_pred(state, l)?;
                let rp = self.encode_pred(state, r)?;
                self.bdd.or(lp, rp)
            }
            Expr::Binary(BinOp::Eq, l, r) => self.encode_equality(state, l, r),
            Expr::Binary(BinOp::Ne, l, r) => {
                let eq = self.encode_equality(state, l, r)?;
                self.bdd.not(eq)
            }
            Expr::Binary(op @ (BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge), l, r) => {
                let lv = self.encode_expr(state, l)?;
                let lv = self.simplify_under(state, &lv)?;
                let rv = self.encode_expr(state, r)?;
                let rv = self.simplify_under(state, &rv)?;
                match op {
                    BinOp::Lt => bv_slt(&mut self.bdd, &lv, &rv),
                    BinOp::Gt => bv_slt(&mut self.bdd, &rv, &lv),
                    BinOp::Le => {
                        let gt = bv_slt(&mut self.bdd, &rv, &lv)?;
                        self.bdd.not(gt)
                    }
                    _ => {
                        let lt = bv_slt(&mut self.bdd, &lv, &rv)?;
                        self.bdd.not(lt)
                    }
                }
            }
            Expr::Binary(_, _, _) => {
                // Arithmetic in truth position: nonzero test.
                let v = self.encode_expr(state, e)?;
                let v = self.simplify_under(state, &v)?;
                bv_nonzero(&mut self.bdd, &v)
            }
        }
    }

    fn var_truthiness(&mut self, v: VarId) -> Result<NodeRef> {
        match self.layouts[&v].encoding.clone() {
            Encoding::Bool1 => self.var_bit(v, Role::Plain, 0),
            Encoding::Compact { values } => {
                let extra = self.extra_bit(v, Role::Plain)?;
                // In-set: true exactly for the nonzero constants.
                let mut inside_true = FALSE;
                for (k, &c) in values.iter().enumerate() {
                    if c != 0 {
                        let sel = self.code_pred(v, Role::Plain, k)?;
                        inside_true = self.bdd.or(inside_true, sel)?;
                    }
                }
                let not_extra = self.bdd.not(extra)?;
                let inside = self.bdd.and(not_extra, inside_true)?;
                if values.contains(&0) {
                    // Outside the set excludes zero: definitely true.
                    self.bdd.or(inside, extra)
                } else {
                    // Outside might be zero: unknown.
                    let s = self.fresh_bit()?;
                    let out = self.bdd.and(extra, s)?;
                    self.bdd.or(inside, out)
                }
            }
            Encoding::Full { .. } => {
                let vec = self.var_value_vec(v)?;
                bv_nonzero(&mut self.bdd, &vec)
            }
        }
    }

    fn encode_equality(&mut self, state: NodeRef, l: &Expr, r: &Expr) -> Result<NodeRef> {
        // Structure-aware fast paths keep Bool1 and compact encodings
        // sound and precise without expanding to full vectors.
        match (l, r) {
            (Expr::Var(u), Expr::Var(v)) => {
                let (eu, ev) =
                    (self.layouts[u].encoding.clone(), self.layouts[v].encoding.clone());
                match (&eu, &ev) {
                    (Encoding::Bool1, Encoding::Bool1) => {
                        return self.bool_eq_bool(*u, *v);
                    }
                    (Encoding::Compact { values: a }, Encoding::Compact { values: b })
                        if a == b =>
                    {
                        return self.compact_eq_compact(*u, *v);
                    }
                    _ => {}
                }
            }
            (Expr::Var(u), Expr::Const(c)) | (Expr::Const(c), Expr::Var(u)) => {
                match self.layouts[u].encoding.clone() {
                    Encoding::Bool1 => return self.bool_eq_const(*u, *c),
                    Encoding::Compact { values } => {
                        return self.compact_eq_const(*u, &values, *c)
                    }
                    Encoding::Full { .. } => {}
                }
            }
            _ => {}
        }
        let lv = self.encode_expr(state, l)?;
        let lv = self.simplify_under(state, &lv)?;
        let rv = self.encode_expr(state, r)?;
        let rv = self.simplify_under(state, &rv)?;
        bv_eq(&mut self.bdd, &lv, &rv)
    }

    /// Truthiness bits only: both false means equal (both zero), mixed
    /// means unequal, both true leaves the exact values unknown.
    fn bool_eq_bool(&mut self, u: VarId, v: VarId) -> Result<NodeRef> {
        let bu = self.var_bit(u, Role::Plain, 0)?;
        let bv = self.var_bit(v, Role::Plain, 0)?;
        let nu = self.bdd.not(bu)?;
        let nv = self.bdd.not(bv)?;
        let both_zero = self.bdd.and(nu, nv)?;
        let both_true = self.bdd.and(bu, bv)?;
        let s = self.fresh_bit()?;
        let unknown = self.bdd.and(both_true, s)?;
        self.bdd.or(both_zero, unknown)
    }

    fn bool_eq_const(&mut self, u: VarId, c: i32) -> Result<NodeRef> {
        let bu = self.var_bit(u, Role::Plain, 0)?;
        if c == 0 {
            self.bdd.not(bu)
        } else {
            // Nonzero truthiness; whether the value is exactly `c` is
            // not tracked.
            let s = self.fresh_bit()?;
            self.bdd.and(bu, s)
        }
    }

    fn compact_eq_const(&mut self, u: VarId, values: &[i32], c: i32) -> Result<NodeRef> {
        let extra = self.extra_bit(u, Role::Plain)?;
        let not_extra = self.bdd.not(extra)?;
        match values.iter().position(|&x| x == c) {
            Some(k) => {
                let sel = self.code_pred(u, Role::Plain, k)?;
                self.bdd.and(not_extra, sel)
            }
            None => {
                // Equal only possibly when the value is outside the set.
                let s = self.fresh_bit()?;
                self.bdd.and(extra, s)
            }
        }
    }

    fn compact_eq_compact(&mut self, u: VarId, v: VarId) -> Result<NodeRef> {
        let eu = self.extra_bit(u, Role::Plain)?;
        let ev = self.extra_bit(v, Role::Plain)?;
        let neu = self.bdd.not(eu)?;
        let nev = self.bdd.not(ev)?;
        let both_in = self.bdd.and(neu, nev)?;
        let nbits = self.layouts[&u].width() - 1;
        let mut codes_eq = TRUE;
        for j in 0..nbits {
            let bu = self.var_bit(u, Role::Plain, j)?;
            let bv = self.var_bit(v, Role::Plain, j)?;
            let e = self.bdd.iff(bu, bv)?;
            codes_eq = self.bdd.and(codes_eq, e)?;
        }
        let inside = self.bdd.and(both_in, codes_eq)?;
        // One inside, one outside: values differ by definition of the
        // shared set. Both outside: unknown.
        let both_out = self.bdd.and(eu, ev)?;
        let s = self.fresh_bit()?;
        let unknown = self.bdd.and(both_out, s)?;
        self.bdd.or(inside, unknown)
    }

    /// Abstract post-state of one operation. Expressions must only
    /// mention tracked variables (callers substitute or havoc the rest).
    pub fn transfer(&mut self, state: NodeRef, op: &Op) -> Result<NodeRef> {
        let result = match op {
            Op::Skip => state,
            Op::Decl { var, init: None } => self.havoc(state, *var)?,
            Op::Decl { var, init: Some(e) } | Op::Assign { var, expr: e } => {
                self.assign(state, *var, e)?
            }
            Op::Assume { expr, polarity } => {
                let p = self.encode_pred(state, expr)?;
                let p = if *polarity { p } else { self.bdd.not(p)? };
                self.bdd.and(state, p)?
            }
        };
        self.scrub(result)
    }

    pub fn havoc(&mut self, state: NodeRef, var: VarId) -> Result<NodeRef> {
        let plains = self.layouts[&var].plain_levels();
        let dropped = self.bdd.exists(state, &plains)?;
        let canon = self.canonical_form(var, Role::Plain)?;
        self.bdd.and(dropped, canon)
    }

    fn assign(&mut self, state: NodeRef, var: VarId, rhs: &Expr) -> Result<NodeRef> {
        let rhs_val = self.eval_rhs(state, var, rhs)?;
        // Bits the state already fixes collapse to constants before the
        // binding constraint is built; with contiguous per-variable bit
        // order a constraint tying two symbolic 32-bit vectors together
        // is exponentially large, while the collapsed form stays linear.
        let rhs_val = match rhs_val {
            RhsVal::Vec(v) => RhsVal::Vec(self.simplify_under(state, &v)?),
            other => other,
        };
        let lay = self.layouts[&var].clone();
        let plains = lay.plain_levels();
        if self.rhs_reads(&rhs_val, &plains) {
            // Bind the primed copy, drop the old plain bits, relabel.
            let s1 = self.binding_under(state, var, Role::Primed, &rhs_val)?;
            let s2 = self.bdd.exists(s1, &plains)?;
            self.bdd.rename(s2, &lay.prime_to_plain())
        } else {
            let s1 = self.bdd.exists(state, &plains)?;
            self.binding_under(s1, var, Role::Plain, &rhs_val)
        }
    }

    fn rhs_reads(&self, rhs: &RhsVal, levels: &BTreeSet<u32>) -> bool {
        let mut nodes: Vec<NodeRef> = Vec::new();
        match rhs {
            RhsVal::Bit(b) | RhsVal::CompactPred(b) => nodes.push(*b),
            RhsVal::Vec(v) => nodes.extend(v.bits().iter().copied()),
            RhsVal::CompactCopy(u) => {
                let lu = &self.layouts[u];
                return (0..lu.width()).any(|i| levels.contains(&lu.plain_level(i)));
            }
            RhsVal::CompactConst(_) | RhsVal::Free => {}
        }
        nodes
            .iter()
            .any(|&n| self.bdd.support(n).iter().any(|l| levels.contains(l)))
    }

    fn eval_rhs(&mut self, state: NodeRef, target: VarId, rhs: &Expr) -> Result<RhsVal> {
        let target_enc = self.layouts[&target].encoding.clone();
        if matches!(rhs, Expr::Nondet) {
            return Ok(RhsVal::Free);
        }
        match target_enc {
            Encoding::Bool1 => {
                let bit = match rhs {
                    Expr::Const(c) => self.bdd.constant(*c != 0),
                    Expr::Var(u) => match self.layouts[u].encoding {
                        Encoding::Bool1 => self.var_bit(*u, Role::Plain, 0)?,
                        _ => self.var_truthiness(*u)?,
                    },
                    _ if is_predicate(rhs) => self.encode_pred(state, rhs)?,
                    _ => {
                        let v = self.encode_expr(state, rhs)?;
                        bv_nonzero(&mut self.bdd, &v)?
                    }
                };
                Ok(RhsVal::Bit(bit))
            }
            Encoding::Compact { .. } => match rhs {
                Expr::Const(c) => Ok(RhsVal::CompactConst(*c)),
                Expr::Var(u) => {
                    let same = match (&self.layouts[u].encoding, &self.layouts[&target].encoding)
                    {
                        (Encoding::Compact { values: a }, Encoding::Compact { values: b }) => {
                            a == b
                        }
                        _ => false,
                    };
                    if same {
                        Ok(RhsVal::CompactCopy(*u))
                    } else {
                        let v = self.encode_expr(state, rhs)?;
                        Ok(RhsVal::Vec(v))
                    }
                }
                _ if is_predicate(rhs) => {
                    let p = self.encode_pred(state, rhs)?;
                    Ok(RhsVal::CompactPred(p))
                }
                _ => {
                    let v = self.encode_expr(state, rhs)?;
                    let v = self.simplify_under(state, &v)?;
                    Ok(RhsVal::Vec(v))
                }
            },
            Encoding::Full { .. } => {
                let v = self.encode_expr(state, rhs)?;
                Ok(RhsVal::Vec(v))
            }
        }
    }

    /// Constraint tying the target's bits (in `role`) to the value.
    /// Conjoins `base` with "target-bits(role) == rhs". The conjunction is
    /// folded onto `base` bit by bit so that bits `base` already fixes
    /// collapse immediately, and scratch levels are quantified out as
    /// soon as their last equation has joined. Both matter: a standalone
    /// equation chain between bit groups that sit far apart in the
    /// contiguous per-variable order is exponentially large, while the
    /// folded form stays linear whenever the bits are forced or free.
    fn binding_under(
        &mut self,
        base: NodeRef,
        target: VarId,
        role: Role,
        rhs: &RhsVal,
    ) -> Result<NodeRef> {
        match rhs {
            RhsVal::Free => {
                let canon = self.canonical_form(target, role)?;
                self.bdd.and(base, canon)
            }
            RhsVal::Bit(b) => {
                let t = self.var_bit(target, role, 0)?;
                let e = self.bdd.iff(t, *b)?;
                self.bdd.and(base, e)
            }
            RhsVal::Vec(v) => match self.layouts[&target].encoding.clone() {
                Encoding::Compact { values } => {
                    let bind = self.compact_vec_binding(target, role, &values, v)?;
                    self.bdd.and(base, bind)
                }
                _ => {
                    let w = self.layouts[&target].width();
                    debug_assert_eq!(w, v.width());
                    // Remaining uses of each scratch level across the
                    // not-yet-folded equations.
                    let supports: Vec<Vec<u32>> = (0..w)
                        .map(|i| {
                            self.bdd
                                .support(v.bit(i))
                                .into_iter()
                                .filter(|&l| l >= self.scratch_base)
                                .collect()
                        })
                        .collect();
                    let mut remaining: BTreeMap<u32, usize> = BTreeMap::new();
                    for s in &supports {
                        for &l in s {
                            *remaining.entry(l).or_insert(0) += 1;
                        }
                    }
                    let mut acc = base;
                    for i in 0..w {
                        let t = self.var_bit(target, role, i)?;
                        let e = self.bdd.iff(t, v.bit(i))?;
                        acc = self.bdd.and(acc, e)?;
                        let mut done: BTreeSet<u32> = BTreeSet::new();
                        for &l in &supports[i] {
                            let n = remaining.get_mut(&l).expect("counted above");
                            *n -= 1;
                            if *n == 0 {
                                done.insert(l);
                            }
                        }
                        if !done.is_empty() {
                            acc = self.bdd.exists(acc, &done)?;
                        }
                    }
                    Ok(acc)
                }
            },
            RhsVal::CompactConst(c) => {
                let values = match &self.layouts[&target].encoding {
                    Encoding::Compact { values } => values.clone(),
                    _ => unreachable!("CompactConst for non-compact target"),
                };
                let bind = self.compact_const_binding(target, role, &values, *c)?;
                self.bdd.and(base, bind)
            }
            RhsVal::CompactPred(p) => {
                let values = match &self.layouts[&target].encoding {
                    Encoding::Compact { values } => values.clone(),
                    _ => unreachable!("CompactPred for non-compact target"),
                };
                let b1 = self.compact_const_binding(target, role, &values, 1)?;
                let b0 = self.compact_const_binding(target, role, &values, 0)?;
                let bind = self.bdd.ite(*p, b1, b0)?;
                self.bdd.and(base, bind)
            }
            RhsVal::CompactCopy(u) => {
                let w = self.layouts[&target].width();
                let mut acc = base;
                for i in 0..w {
                    let t = self.var_bit(target, role, i)?;
                    let s = self.var_bit(*u, Role::Plain, i)?;
                    let e = self.bdd.iff(t, s)?;
                    acc = self.bdd.and(acc, e)?;
                }
                Ok(acc)
            }
        }
    }

    fn compact_const_binding(
        &mut self,
        target: VarId,
        role: Role,
        values: &[i32],
        c: i32,
    ) -> Result<NodeRef> {
        let extra = self.extra_bit(target, role)?;
        match values.iter().position(|&x| x == c) {
            Some(k) => {
                let sel = self.code_pred(target, role, k)?;
                let ne = self.bdd.not(extra)?;
                self.bdd.and(sel, ne)
            }
            None => {
                let code0 = self.code_pred(target, role, 0)?;
                self.bdd.and(extra, code0)
            }
        }
    }

    /// value-vector -> compact bits: inside constants select their code,
    /// everything else is the canonical outside form.
    fn compact_vec_binding(
        &mut self,
        target: VarId,
        role: Role,
        values: &[i32],
        v: &BitVec,
    ) -> Result<NodeRef> {
        let mut acc = FALSE;
        let mut any_hit = FALSE;
        for &c in values {
            let cv = self.const_vec(c)?;
            let hit = bv_eq(&mut self.bdd, v, &cv)?;
            let bind = self.compact_const_binding(target, role, values, c)?;
            let case = self.bdd.and(hit, bind)?;
            acc = self.bdd.or(acc, case)?;
            any_hit = self.bdd.or(any_hit, hit)?;
        }
        let miss = self.bdd.not(any_hit)?;
        let extra = self.extra_bit(target, role)?;
        let code0 = self.code_pred(target, role, 0)?;
        let outside = self.bdd.and(extra, code0)?;
        let out_case = self.bdd.and(miss, outside)?;
        self.bdd.or(acc, out_case)
    }

    pub fn to_dot(&self, state: NodeRef, var_names: &dyn Fn(VarId) -> String) -> String {
        let layouts = self.layouts.clone();
        let scratch_base = self.scratch_base;
        self.bdd.to_dot(state, &move |level| {
            if level >= scratch_base {
                return format!("scratch{}", level - scratch_base);
            }
            for lay in layouts.values() {
                let w = 2 * lay.width() as u32;
                if level >= lay.base && level < lay.base + w {
                    let off = level - lay.base;
                    let bit = off / 2;
                    let primed = if off % 2 == 1 { "'" } else { "" };
                    return format!("{}[{}]{}", var_names(lay.var), bit, primed);
                }
            }
            format!("L{level}")
        })
    }
}

fn is_predicate(e: &Expr) -> bool {
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
