//! Reduced ordered binary decision diagrams with hash-consing.
//!
//! Nodes live in an append-only arena; the unique table guarantees that
//! structurally equal functions share one `NodeRef`, so semantic equality
//! is pointer equality. Variables are identified by *level* (0 is the
//! topmost / first tested). All allocating operations return `Result`
//! because the arena enforces a node limit.

pub mod bitvec;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BddError {
    #[error("node limit of {limit} nodes exceeded")]
    NodeLimit { limit: usize },
    #[error("variable level {level} has no value in the assignment")]
    UnknownVariable { level: u32 },
    #[error("rename map is not injective on the function's support")]
    NonInjectiveRename,
    #[error("bit-vector width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("shift by {amount} out of range for width {width}")]
    ShiftOutOfRange { amount: usize, width: usize },
    #[error("constant {value:#x} does not fit in {width} bits")]
    WidthOverflow { value: u64, width: usize },
}

pub type Result<T> = std::result::Result<T, BddError>;

/// Handle to a hash-consed node. Equal handles denote equal functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeRef(u32);

pub const FALSE: NodeRef = NodeRef(0);
pub const TRUE: NodeRef = NodeRef(1);

/// Terminals carry this pseudo-level; it orders below every real level.
const TERMINAL_LEVEL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    level: u32,
    lo: NodeRef,
    hi: NodeRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum CacheKey {
    And(NodeRef, NodeRef),
    Or(NodeRef, NodeRef),
    Xor(NodeRef, NodeRef),
    Not(NodeRef),
    Ite(NodeRef, NodeRef, NodeRef),
}

pub struct Bdd {
    nodes: Vec<Node>,
    unique: HashMap<(u32, NodeRef, NodeRef), NodeRef>,
    cache: HashMap<CacheKey, NodeRef>,
    node_limit: usize,
}

impl Bdd {
    pub fn new(node_limit: usize) -> Self {
        let terminal = |_| Node { level: TERMINAL_LEVEL, lo: FALSE, hi: TRUE };
        Bdd {
            nodes: vec![terminal(0), terminal(1)],
            unique: HashMap::new(),
            cache: HashMap::new(),
            node_limit,
        }
    }

    /// Total nodes ever allocated (the arena is append-only, so this is
    /// also the peak).
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Drops the operation cache (node sharing is unaffected). Useful
    /// between unrelated workloads to bound memory.
    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }

    fn level(&self, f: NodeRef) -> u32 {
        self.nodes[f.0 as usize].level
    }

    fn lo(&self, f: NodeRef) -> NodeRef {
        self.nodes[f.0 as usize].lo
    }

    fn hi(&self, f: NodeRef) -> NodeRef {
        self.nodes[f.0 as usize].hi
    }

    fn is_terminal(f: NodeRef) -> bool {
        f.0 <= 1
    }

    /// Canonical node constructor: applies the reduction rule and the
    /// unique table.
    fn mk(&mut self, level: u32, lo: NodeRef, hi: NodeRef) -> Result<NodeRef> {
        if lo == hi {
            return Ok(lo);
        }
        debug_assert!(level < self.level(lo) && level < self.level(hi));
        if let Some(&r) = self.unique.get(&(level, lo, hi)) {
            return Ok(r);
        }
        if self.nodes.len() >= self.node_limit {
            return Err(BddError::NodeLimit { limit: self.node_limit });
        }
        let r = NodeRef(self.nodes.len() as u32);
        self.nodes.push(Node { level, lo, hi });
        self.unique.insert((level, lo, hi), r);
        Ok(r)
    }

    /// The function "variable at `level` is true".
    pub fn var(&mut self, level: u32) -> Result<NodeRef> {
        assert!(level < TERMINAL_LEVEL);
        self.mk(level, FALSE, TRUE)
    }

    /// The function "variable at `level` is false".
    pub fn nvar(&mut self, level: u32) -> Result<NodeRef> {
        assert!(level < TERMINAL_LEVEL);
        self.mk(level, TRUE, FALSE)
    }

    pub fn constant(&self, value: bool) -> NodeRef {
        if value { TRUE } else { FALSE }
    }

    pub fn and(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        match (f, g) {
            _ if f == g => return Ok(f),
            (FALSE, _) | (_, FALSE) => return Ok(FALSE),
            (TRUE, x) | (x, TRUE) => return Ok(x),
            _ => {}
        }
        let key = CacheKey::And(f.min(g), f.max(g));
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let (level, (f0, f1), (g0, g1)) = self.cofactors(f, g);
        let lo = self.and(f0, g0)?;
        let hi = self.and(f1, g1)?;
        let r = self.mk(level, lo, hi)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    pub fn or(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        match (f, g) {
            _ if f == g => return Ok(f),
            (TRUE, _) | (_, TRUE) => return Ok(TRUE),
            (FALSE, x) | (x, FALSE) => return Ok(x),
            _ => {}
        }
        let key = CacheKey::Or(f.min(g), f.max(g));
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let (level, (f0, f1), (g0, g1)) = self.cofactors(f, g);
        let lo = self.or(f0, g0)?;
        let hi = self.or(f1, g1)?;
        let r = self.mk(level, lo, hi)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    pub fn xor(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        match (f, g) {
            _ if f == g => return Ok(FALSE),
            (FALSE, x) | (x, FALSE) => return Ok(x),
            (TRUE, x) | (x, TRUE) => return self.not(x),
            _ => {}
        }
        let key = CacheKey::Xor(f.min(g), f.max(g));
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let (level, (f0, f1), (g0, g1)) = self.cofactors(f, g);
        let lo = self.xor(f0, g0)?;
        let hi = self.xor(f1, g1)?;
        let r = self.mk(level, lo, hi)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    pub fn not(&mut self, f: NodeRef) -> Result<NodeRef> {
        match f {
            FALSE => return Ok(TRUE),
            TRUE => return Ok(FALSE),
            _ => {}
        }
        let key = CacheKey::Not(f);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let (level, lo, hi) = (self.level(f), self.lo(f), self.hi(f));
        let nlo = self.not(lo)?;
        let nhi = self.not(hi)?;
        let r = self.mk(level, nlo, nhi)?;
        self.cache.insert(key, r);
        self.cache.insert(CacheKey::Not(r), f);
        Ok(r)
    }

    pub fn implies(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        let nf = self.not(f)?;
        self.or(nf, g)
    }

    pub fn iff(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        let x = self.xor(f, g)?;
        self.not(x)
    }

    pub fn ite(&mut self, f: NodeRef, g: NodeRef, h: NodeRef) -> Result<NodeRef> {
        match (f, g, h) {
            (TRUE, g, _) => return Ok(g),
            (FALSE, _, h) => return Ok(h),
            (_, g, h) if g == h => return Ok(g),
            (f, TRUE, FALSE) => return Ok(f),
            (f, FALSE, TRUE) => return self.not(f),
            _ => {}
        }
        let key = CacheKey::Ite(f, g, h);
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let level = self.level(f).min(self.level(g)).min(self.level(h));
        let (f0, f1) = self.cofactor_at(f, level);
        let (g0, g1) = self.cofactor_at(g, level);
        let (h0, h1) = self.cofactor_at(h, level);
        let lo = self.ite(f0, g0, h0)?;
        let hi = self.ite(f1, g1, h1)?;
        let r = self.mk(level, lo, hi)?;
        self.cache.insert(key, r);
        Ok(r)
    }

    fn cofactor_at(&self, f: NodeRef, level: u32) -> (NodeRef, NodeRef) {
        if self.level(f) == level {
            (self.lo(f), self.hi(f))
        } else {
            (f, f)
        }
    }

    fn cofactors(
        &self,
        f: NodeRef,
        g: NodeRef,
    ) -> (u32, (NodeRef, NodeRef), (NodeRef, NodeRef)) {
        let level = self.level(f).min(self.level(g));
        (level, self.cofactor_at(f, level), self.cofactor_at(g, level))
    }

    /// Existentially quantifies all variables whose level is in `levels`.
    pub fn exists(&mut self, f: NodeRef, levels: &BTreeSet<u32>) -> Result<NodeRef> {
        if levels.is_empty() {
            return Ok(f);
        }
        let mut memo = HashMap::new();
        self.exists_rec(f, levels, &mut memo)
    }

    fn exists_rec(
        &mut self,
        f: NodeRef,
        levels: &BTreeSet<u32>,
        memo: &mut HashMap<NodeRef, NodeRef>,
    ) -> Result<NodeRef> {
        if Self::is_terminal(f) {
            return Ok(f);
        }
        let level = self.level(f);
        if levels.iter().all(|&l| l < level) {
            // Every quantified level sits above this node.
            return Ok(f);
        }
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let (lo, hi) = (self.lo(f), self.hi(f));
        let lo_q = self.exists_rec(lo, levels, memo)?;
        let hi_q = self.exists_rec(hi, levels, memo)?;
        let r = if levels.contains(&level) {
            self.or(lo_q, hi_q)?
        } else {
            self.mk(level, lo_q, hi_q)?
        };
        memo.insert(f, r);
        Ok(r)
    }

    pub fn forall(&mut self, f: NodeRef, levels: &BTreeSet<u32>) -> Result<NodeRef> {
        let nf = self.not(f)?;
        let e = self.exists(nf, levels)?;
        self.not(e)
    }

    /// Simultaneously replaces the variable at each key level with the
    /// variable at the mapped level. Errors if the effective map is not
    /// injective on the function's support together with its targets.
    pub fn rename(&mut self, f: NodeRef, map: &BTreeMap<u32, u32>) -> Result<NodeRef> {
        let support = self.support(f);
        // Effective target per support level (identity when unmapped).
        let targets: Vec<u32> =
            support.iter().map(|l| *map.get(l).unwrap_or(l)).collect();
        let distinct: BTreeSet<u32> = targets.iter().copied().collect();
        if distinct.len() != targets.len() {
            return Err(BddError::NonInjectiveRename);
        }
        let mut memo = HashMap::new();
        if targets.windows(2).all(|w| w[0] < w[1]) {
            // Relative order is preserved: relabel nodes structurally.
            self.relabel_rec(f, map, &mut memo)
        } else {
            // General case: simultaneous substitution bottom-up.
            self.compose_rec(f, map, &mut memo)
        }
    }

    fn relabel_rec(
        &mut self,
        f: NodeRef,
        map: &BTreeMap<u32, u32>,
        memo: &mut HashMap<NodeRef, NodeRef>,
    ) -> Result<NodeRef> {
        if Self::is_terminal(f) {
            return Ok(f);
        }
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let level = self.level(f);
        let target = *map.get(&level).unwrap_or(&level);
        let (lo, hi) = (self.lo(f), self.hi(f));
        let lo_r = self.relabel_rec(lo, map, memo)?;
        let hi_r = self.relabel_rec(hi, map, memo)?;
        let r = self.mk(target, lo_r, hi_r)?;
        memo.insert(f, r);
        Ok(r)
    }

    fn compose_rec(
        &mut self,
        f: NodeRef,
        map: &BTreeMap<u32, u32>,
        memo: &mut HashMap<NodeRef, NodeRef>,
    ) -> Result<NodeRef> {
        if Self::is_terminal(f) {
            return Ok(f);
        }
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let level = self.level(f);
        let target = *map.get(&level).unwrap_or(&level);
        let (lo, hi) = (self.lo(f), self.hi(f));
        let lo_r = self.compose_rec(lo, map, memo)?;
        let hi_r = self.compose_rec(hi, map, memo)?;
        let v = self.var(target)?;
        let r = self.ite(v, hi_r, lo_r)?;
        memo.insert(f, r);
        Ok(r)
    }

    /// Levels the function actually depends on.
    pub fn support(&self, f: NodeRef) -> BTreeSet<u32> {
        let mut seen = BTreeSet::new();
        let mut levels = BTreeSet::new();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if Self::is_terminal(n) || !seen.insert(n) {
                continue;
            }
            levels.insert(self.level(n));
            stack.push(self.lo(n));
            stack.push(self.hi(n));
        }
        levels
    }

    /// Evaluates under a total assignment indexed by level.
    pub fn eval(&self, f: NodeRef, assignment: &[bool]) -> Result<bool> {
        let mut cur = f;
        while !Self::is_terminal(cur) {
            let level = self.level(cur) as usize;
            let value = *assignment
                .get(level)
                .ok_or(BddError::UnknownVariable { level: level as u32 })?;
            cur = if value { self.hi(cur) } else { self.lo(cur) };
        }
        Ok(cur == TRUE)
    }

    /// One satisfying assignment over the support, if any.
    pub fn any_sat(&self, f: NodeRef) -> Option<BTreeMap<u32, bool>> {
        if f == FALSE {
            return None;
        }
        let mut out = BTreeMap::new();
        let mut cur = f;
        while !Self::is_terminal(cur) {
            let (level, lo, hi) = (self.level(cur), self.lo(cur), self.hi(cur));
            if lo != FALSE {
                out.insert(level, false);
                cur = lo;
            } else {
                out.insert(level, true);
                cur = hi;
            }
        }
        Some(out)
    }

    /// GraphViz rendering; `label` names levels (falls back to `L<n>`).
    pub fn to_dot(&self, f: NodeRef, label: &dyn Fn(u32) -> String) -> String {
        use std::fmt::Write;
        let mut s = String::from("digraph bdd {\n  rankdir=TB;\n");
        let _ = writeln!(s, "  n0 [shape=box,label=\"0\"];");
        let _ = writeln!(s, "  n1 [shape=box,label=\"1\"];");
        let mut seen = BTreeSet::new();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if Self::is_terminal(n) || !seen.insert(n) {
                continue;
            }
            let _ = writeln!(
                s,
                "  n{} [shape=circle,label=\"{}\"];",
                n.0,
                label(self.level(n))
            );
            let _ = writeln!(s, "  n{} -> n{} [style=dashed];", n.0, self.lo(n).0);
            let _ = writeln!(s, "  n{} -> n{};", n.0, self.hi(n).0);
            stack.push(self.lo(n));
            stack.push(self.hi(n));
        }
        s.push_str("}\n");
        s
    }
}
