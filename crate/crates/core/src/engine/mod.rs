//! Composite reachability analysis.
//!
//! Variables are classified by [`crate::domtype::infer`] and split
//! between two abstract domains according to a [`DomainAssignment`]: a
//! threshold domain type such that every variable at or below it is
//! tracked by the BDD domain and everything above it by the
//! explicit-value domain. A composite state is one explicit partial map
//! plus one BDD over the tracked variables' bits; the reachability loop
//! explores the control-flow automaton until it proves the error
//! locations unreachable (TRUE), finds a concrete-replayable error path
//! (FALSE), or gives up on a resource limit (UNKNOWN).

pub mod oracle;
pub mod replay;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::bdd::{BddError, NodeRef};
use crate::bdd_domain::BddDomain;
use crate::cfa::{BinOp, Cfa, Expr, LocId, Op, UnaryOp, VarId};
use crate::domtype::{infer, DomainType, DomainTyping};
use crate::explicit::ExplicitState;

use replay::{replay, ReplayConfig};

/// Which domain types the BDD side tracks; the rest go to the
/// explicit-value side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DomainAssignment {
    /// Everything explicit.
    ExplicitInt,
    /// Bool in BDDs.
    BddBool,
    /// Bool and IntEq in BDDs.
    BddIntEq,
    /// Bool, IntEq and IntEqAdd in BDDs.
    BddIntEqAdd,
    /// Everything in BDDs.
    BddInt,
}

impl DomainAssignment {
    pub const ALL: [DomainAssignment; 5] = [
        DomainAssignment::ExplicitInt,
        DomainAssignment::BddBool,
        DomainAssignment::BddIntEq,
        DomainAssignment::BddIntEqAdd,
        DomainAssignment::BddInt,
    ];

    /// Largest domain type still tracked by the BDD side.
    pub fn bdd_threshold(self) -> Option<DomainType> {
        match self {
            DomainAssignment::ExplicitInt => None,
            DomainAssignment::BddBool => Some(DomainType::Bool),
            DomainAssignment::BddIntEq => Some(DomainType::IntEq),
            DomainAssignment::BddIntEqAdd => Some(DomainType::IntEqAdd),
            DomainAssignment::BddInt => Some(DomainType::Int),
        }
    }

    pub fn bdd_owns(self, t: DomainType) -> bool {
        self.bdd_threshold().is_some_and(|th| t <= th)
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainAssignment::ExplicitInt => "explicit-int",
            DomainAssignment::BddBool => "bdd-bool",
            DomainAssignment::BddIntEq => "bdd-inteq",
            DomainAssignment::BddIntEqAdd => "bdd-inteqadd",
            DomainAssignment::BddInt => "bdd-int",
        }
    }
}

impl fmt::Display for DomainAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DomainAssignment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        DomainAssignment::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown config `{s}` (choose one of: explicit-int, bdd-bool, \
                     bdd-inteq, bdd-inteqadd, bdd-int)"
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaitlistOrder {
    #[default]
    Dfs,
    Bfs,
}

impl FromStr for WaitlistOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dfs" => Ok(WaitlistOrder::Dfs),
            "bfs" => Ok(WaitlistOrder::Bfs),
            _ => Err(format!("unknown waitlist order `{s}` (dfs or bfs)")),
        }
    }
}

/// BDD variable ordering over the tracked variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum BddOrder {
    /// Declaration order.
    #[default]
    Declared,
    /// Listed variables first (by source name, in list order), remaining
    /// tracked variables after them in declaration order. Unknown names
    /// are a configuration error; names of explicitly-tracked variables
    /// are ignored.
    Custom(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct Config {
    pub assignment: DomainAssignment,
    /// Bit width of Int/IntEqAdd variables in the BDD domain (1..=32).
    pub bv_width: usize,
    pub timeout: Option<Duration>,
    /// Bound on composite states created.
    pub max_states: usize,
    /// Bound on BDD nodes allocated.
    pub node_limit: usize,
    pub waitlist: WaitlistOrder,
    pub order: BddOrder,
    /// Candidate values for confirming counterexamples concretely.
    pub replay: ReplayConfig,
    /// Record per-state partition data for invariant checking.
    pub collect_reached: bool,
    /// Render the final per-location reached-set BDDs to DOT.
    pub dump_dot: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            assignment: DomainAssignment::BddIntEq,
            bv_width: 32,
            timeout: Some(Duration::from_secs(900)),
            max_states: 1_000_000,
            node_limit: 50_000_000,
            waitlist: WaitlistOrder::Dfs,
            order: BddOrder::Declared,
            replay: ReplayConfig::default(),
            collect_reached: false,
            dump_dot: false,
        }
    }
}

impl Config {
    pub fn with_assignment(assignment: DomainAssignment) -> Self {
        Config { assignment, ..Config::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Error locations are unreachable.
    True,
    /// An error location is reachable in the abstraction; `trace` is the
    /// edge path (indices into `Cfa::edges`) and `confirmed` says whether
    /// concrete replay validated it.
    False { trace: Vec<usize>, confirmed: bool },
    /// Analysis gave up (resource limit or imprecision).
    Unknown { reason: String },
}

impl Verdict {
    pub fn word(&self) -> &'static str {
        match self {
            Verdict::True => "TRUE",
            Verdict::False { .. } => "FALSE",
            Verdict::Unknown { .. } => "UNKNOWN",
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Verdict::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Verdict::False { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stats {
    /// Distinct composite states kept when the search stopped. Arrivals
    /// that were subsumed or folded into an existing state by a join are
    /// not counted separately.
    pub reached_states: usize,
    /// Worklist pops, re-expansions after a join included.
    pub expanded: usize,
    /// Largest number of states waiting at once.
    pub waitlist_peak: usize,
    /// Total BDD nodes allocated (the store is append-only, so this is
    /// the peak).
    pub bdd_peak_nodes: usize,
    pub cpu_seconds: f64,
}

/// Partition snapshot of one reached state, for invariant checking.
#[derive(Debug, Clone)]
pub struct ReachedInfo {
    pub loc: LocId,
    /// Explicit-side bindings.
    pub explicit: Vec<(VarId, i32)>,
    /// Variables the BDD component actually constrains.
    pub bdd_vars: Vec<VarId>,
}

#[derive(Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub stats: Stats,
    pub reached: Option<Vec<ReachedInfo>>,
    /// (location, DOT text) for each location with reached states.
    pub loc_dots: Option<Vec<(LocId, String)>>,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("configuration error: {0}")]
    Config(String),
}

/// Splits the variable set into (explicit-tracked, bdd-tracked), both in
/// declaration order.
pub fn partition(
    typing: &DomainTyping,
    assignment: DomainAssignment,
) -> (Vec<VarId>, Vec<VarId>) {
    let mut explicit = Vec::new();
    let mut bdd = Vec::new();
    for i in 0..typing.num_vars() {
        let v = VarId(i as u32);
        if assignment.bdd_owns(typing.type_of(v)) {
            bdd.push(v);
        } else {
            explicit.push(v);
        }
    }
    (explicit, bdd)
}

/// Resolves the configured ordering against the BDD-tracked variables.
pub fn resolve_order(
    cfa: &Cfa,
    tracked: &[VarId],
    order: &BddOrder,
) -> Result<Vec<VarId>, EngineError> {
    match order {
        BddOrder::Declared => Ok(tracked.to_vec()),
        BddOrder::Custom(names) => {
            let mut out: Vec<VarId> = Vec::new();
            for name in names {
                let v = cfa.var_id(name).ok_or_else(|| {
                    EngineError::Config(format!("unknown variable `{name}` in BDD order"))
                })?;
                if tracked.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
            for &v in tracked {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
            Ok(out)
        }
    }
}

/// Source lines of a trace, for reporting.
pub fn trace_lines(cfa: &Cfa, trace: &[usize]) -> Vec<u32> {
    trace.iter().map(|&ei| cfa.edges[ei].line).collect()
}

pub fn verify(cfa: &Cfa, cfg: &Config) -> Result<Outcome, EngineError> {
    let typing = infer(cfa);
    verify_with_typing(cfa, &typing, cfg)
}

pub fn verify_with_typing(
    cfa: &Cfa,
    typing: &DomainTyping,
    cfg: &Config,
) -> Result<Outcome, EngineError> {
    if !(1..=32).contains(&cfg.bv_width) {
        return Err(EngineError::Config(format!(
            "bit width {} out of range 1..=32",
            cfg.bv_width
        )));
    }
    let (_, bdd_vars) = partition(typing, cfg.assignment);
    let order = resolve_order(cfa, &bdd_vars, &cfg.order)?;
    let dom = BddDomain::new(typing, &order, cfg.bv_width, cfg.node_limit);

    let start = Instant::now();
    let mut search = Search {
        cfa,
        cfg,
        dom,
        arena: Vec::new(),
        at_loc: (0..cfa.num_locations).map(|_| LocStates::default()).collect(),
        waitlist: VecDeque::new(),
        expanded: 0,
        waitlist_peak: 0,
        start,
    };
    let verdict = match search.run() {
        Ok(v) => v,
        Err(BddError::NodeLimit { .. }) => Verdict::Unknown {
            reason: "bdd node limit reached".to_string(),
        },
        Err(e) => Verdict::Unknown { reason: format!("bdd failure: {e}") },
    };

    let loc_dots = if cfg.dump_dot { search.collect_dots().ok() } else { None };
    let reached = cfg.collect_reached.then(|| search.collect_reached());
    let stats = Stats {
        reached_states: search.arena.len(),
        waitlist_peak: search.waitlist_peak,
        expanded: search.expanded,
        bdd_peak_nodes: search.dom.node_count(),
        cpu_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Outcome { verdict, stats, reached, loc_dots })
}

struct CompositeState {
    loc: LocId,
    exp: ExplicitState,
    sym: NodeRef,
    /// Incoming (predecessor arena index, CFA edge index) arrivals, the
    /// creating one first. Arrivals that were folded or subsumed into
    /// this state are recorded too (up to a bound), so counterexample
    /// reconstruction can follow any incoming path, not just the first.
    /// The creating entry always points to an older state, so following
    /// first entries terminates; later entries may form cycles (loops).
    parents: Vec<(usize, usize)>,
    /// Whether this state's successors were already computed. An arrival
    /// with an equal explicit part is always folded into the existing
    /// state by joining the BDD parts; if that state was already
    /// expanded, it goes back on the waitlist. Re-expansion therefore
    /// reuses the state instead of duplicating it, and converges because
    /// the BDD part only ever grows.
    expanded: bool,
}

/// How many incoming arrivals a state remembers for counterexample
/// reconstruction.
const PARENT_BOUND: usize = 8;

/// States at one location, indexed two ways: in arrival order for the
/// (bounded) weaker-state scan, and by explicit-part hash for exact
/// matches, which merging and loop convergence rely on.
#[derive(Default)]
struct LocStates {
    states: Vec<usize>,
    by_exp: HashMap<u64, Vec<usize>>,
}

/// How many existing states a new arrival is compared against for
/// strictly-weaker subsumption. Equal explicit parts are found through
/// the hash index regardless, so this bound only trades pruning of
/// incomparable-but-weaker states against quadratic scans at hot
/// locations.
const SUBSUME_SCAN_BOUND: usize = 32;

fn exp_hash(exp: &ExplicitState) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    exp.hash(&mut h);
    h.finish()
}

struct Search<'a> {
    cfa: &'a Cfa,
    cfg: &'a Config,
    dom: BddDomain,
    arena: Vec<CompositeState>,
    at_loc: Vec<LocStates>,
    waitlist: VecDeque<usize>,
    expanded: usize,
    waitlist_peak: usize,
    start: Instant,
}

impl<'a> Search<'a> {
    fn run(&mut self) -> Result<Verdict, BddError> {
        let cfa = self.cfa;
        if cfa.is_error(cfa.entry) {
            let confirmed = replay(cfa, &[], &self.cfg.replay);
            return Ok(Verdict::False { trace: Vec::new(), confirmed });
        }
        let sym0 = self.dom.initial()?;
        self.push_state(CompositeState {
            loc: cfa.entry,
            exp: ExplicitState::top(),
            sym: sym0,
            parents: Vec::new(),
            expanded: false,
        });

        while let Some(idx) = self.pop() {
            if let Some(limit) = self.cfg.timeout {
                if self.start.elapsed() >= limit {
                    return Ok(Verdict::Unknown { reason: "timeout".to_string() });
                }
            }
            self.expanded += 1;
            self.arena[idx].expanded = true;
            // Reversed so depth-first search pops the first out-edge's
            // successor first and explores branches in source order.
            for ei in cfa.out_edge_range(self.arena[idx].loc).rev() {
                let edge = &cfa.edges[ei];
                let exp = self.arena[idx].exp.clone();
                let sym = self.arena[idx].sym;
                let Some((exp, sym)) = self.post(&exp, sym, &edge.op)? else {
                    continue;
                };
                if cfa.is_error(edge.target) {
                    return Ok(self.report_false(idx, ei));
                }
                // At most one state per (location, explicit part): an
                // equal explicit part either subsumes the arrival or
                // absorbs it by joining the BDD parts. An absorbing state
                // that was already expanded is re-queued so its successors
                // are recomputed with the larger BDD part.
                if let Some(oi) = self.find_same_exp(edge.target, &exp) {
                    self.note_parent(oi, idx, ei);
                    if self.dom.entails(sym, self.arena[oi].sym)? {
                        continue;
                    }
                    let joined = self.dom.join(self.arena[oi].sym, sym)?;
                    self.arena[oi].sym = joined;
                    if self.arena[oi].expanded {
                        self.arena[oi].expanded = false;
                        self.requeue(oi);
                    }
                    continue;
                }
                if let Some(oi) = self.covered_by_weaker(edge.target, &exp, sym)? {
                    self.note_parent(oi, idx, ei);
                    continue;
                }
                self.push_state(CompositeState {
                    loc: edge.target,
                    exp,
                    sym,
                    parents: vec![(idx, ei)],
                    expanded: false,
                });
                if self.arena.len() > self.cfg.max_states {
                    return Ok(Verdict::Unknown {
                        reason: "state limit exceeded".to_string(),
                    });
                }
            }
        }
        Ok(Verdict::True)
    }

    /// Records an additional incoming arrival on a state, up to the
    /// bound. Dropping one only loses a counterexample reconstruction
    /// option, never soundness.
    fn note_parent(&mut self, oi: usize, from: usize, edge: usize) {
        let ps = &mut self.arena[oi].parents;
        if ps.len() < PARENT_BOUND && !ps.contains(&(from, edge)) {
            ps.push((from, edge));
        }
    }

    /// The state at `loc` whose explicit part equals `exp`.
    fn find_same_exp(&self, loc: LocId, exp: &ExplicitState) -> Option<usize> {
        let bucket = self.at_loc[loc.index()].by_exp.get(&exp_hash(exp))?;
        bucket.iter().copied().find(|&oi| &self.arena[oi].exp == exp)
    }

    /// The state at `loc` with a strictly weaker explicit part and an
    /// entailing BDD part that subsumes the candidate, if any. Scans a
    /// bounded prefix; missing a subsumption is sound (the state is just
    /// kept).
    fn covered_by_weaker(
        &mut self,
        loc: LocId,
        exp: &ExplicitState,
        sym: NodeRef,
    ) -> Result<Option<usize>, BddError> {
        let candidates: Vec<usize> = self.at_loc[loc.index()]
            .states
            .iter()
            .copied()
            .take(SUBSUME_SCAN_BOUND)
            .collect();
        for oi in candidates {
            if self.arena[oi].exp.covers(exp) {
                let old_sym = self.arena[oi].sym;
                if self.dom.entails(sym, old_sym)? {
                    return Ok(Some(oi));
                }
            }
        }
        Ok(None)
    }

    fn pop(&mut self) -> Option<usize> {
        match self.cfg.waitlist {
            WaitlistOrder::Dfs => self.waitlist.pop_back(),
            WaitlistOrder::Bfs => self.waitlist.pop_front(),
        }
    }

    fn enqueue(&mut self, idx: usize) {
        self.waitlist.push_back(idx);
        self.waitlist_peak = self.waitlist_peak.max(self.waitlist.len());
    }

    /// Schedules a state whose BDD part just grew for re-expansion,
    /// behind every state already waiting. Deferring it lets further
    /// arrivals fold into the state first, so one re-expansion covers a
    /// batch of joins instead of rippling each one through the suffix.
    fn requeue(&mut self, idx: usize) {
        match self.cfg.waitlist {
            WaitlistOrder::Dfs => self.waitlist.push_front(idx),
            WaitlistOrder::Bfs => self.waitlist.push_back(idx),
        }
        self.waitlist_peak = self.waitlist_peak.max(self.waitlist.len());
    }

    fn push_state(&mut self, s: CompositeState) -> usize {
        let idx = self.arena.len();
        let slot = &mut self.at_loc[s.loc.index()];
        slot.states.push(idx);
        slot.by_exp.entry(exp_hash(&s.exp)).or_default().push(idx);
        self.arena.push(s);
        self.enqueue(idx);
        idx
    }

    /// Bounded concrete search for any unsafe execution, used as a last
    /// resort when no enumerated abstract path replays: joins can merge
    /// away every reconstructible feasible path while the program still
    /// has a concrete error path, and any such path is a valid confirmed
    /// trace regardless of how the abstraction found the error.
    fn oracle_witness(&self) -> Option<Vec<usize>> {
        let cfg = oracle::OracleConfig {
            values: self.cfg.replay.values.clone(),
            max_steps_per_path: 10_000,
            max_total_steps: 200_000,
        };
        let report = oracle::interpret(self.cfa, &cfg);
        (report.verdict == oracle::OracleVerdict::Unsafe).then_some(report.trace)
    }

    /// Builds the FALSE verdict for an error edge taken from state
    /// `last`. States merge arrivals from several paths, so the chain of
    /// creating arrivals may be concretely infeasible even when another
    /// recorded incoming path is fine. Candidate paths are enumerated by
    /// backtracking over the recorded arrivals (creating ones first) and
    /// replayed until one is concretely feasible; if none is, a bounded
    /// concrete search may still produce a witness, and only when that
    /// fails too is the first candidate reported unconfirmed.
    fn report_false(&self, last: usize, err_edge: usize) -> Verdict {
        const REPLAY_TRIES: usize = 256;
        const MAX_TRACE_EDGES: usize = 4096;

        // (arena index, index into its parents) links, error end first.
        let mut chain: Vec<(usize, usize)> = vec![(last, 0)];
        let mut fallback: Option<Vec<usize>> = None;
        let mut tries = 0;
        while tries < REPLAY_TRIES && !chain.is_empty() {
            // Extend with first-choice arrivals up to the entry state
            // (which has none) or the length bound.
            loop {
                let (s, c) = *chain.last().unwrap();
                let ps = &self.arena[s].parents;
                if ps.is_empty() || chain.len() > MAX_TRACE_EDGES {
                    break;
                }
                chain.push((ps[c].0, 0));
            }
            if self.arena[chain.last().unwrap().0].parents.is_empty() {
                let mut trace: Vec<usize> = chain[..chain.len() - 1]
                    .iter()
                    .map(|&(s, c)| self.arena[s].parents[c].1)
                    .collect();
                trace.reverse();
                trace.push(err_edge);
                tries += 1;
                if replay(self.cfa, &trace, &self.cfg.replay) {
                    return Verdict::False { trace, confirmed: true };
                }
                if fallback.is_none() {
                    fallback = Some(trace);
                }
            }
            // Backtrack: drop the end of the chain, then advance the
            // deepest link that still has an untried arrival.
            chain.pop();
            while let Some((s, c)) = chain.last_mut() {
                if *c + 1 < self.arena[*s].parents.len() {
                    *c += 1;
                    break;
                }
                chain.pop();
            }
        }
        match fallback {
            // Every enumerated candidate already failed to replay.
            Some(trace) => match self.oracle_witness() {
                Some(witness) => Verdict::False { trace: witness, confirmed: true },
                None => Verdict::False { trace, confirmed: false },
            },
            None => {
                // Budget-truncated enumeration: fall back to the chain of
                // creating arrivals, which always reaches the entry state.
                let mut trace = Vec::new();
                let mut cur = last;
                while let Some(&(p, e)) = self.arena[cur].parents.first() {
                    trace.push(e);
                    cur = p;
                }
                trace.reverse();
                trace.push(err_edge);
                if replay(self.cfa, &trace, &self.cfg.replay) {
                    return Verdict::False { trace, confirmed: true };
                }
                match self.oracle_witness() {
                    Some(witness) => Verdict::False { trace: witness, confirmed: true },
                    None => Verdict::False { trace, confirmed: false },
                }
            }
        }
    }

    // ---- composite transfer ------------------------------------------

    fn owns(&self, v: VarId) -> bool {
        self.dom.tracks(v)
    }

    fn mentions_tracked(&self, e: &Expr) -> bool {
        let mut found = false;
        e.for_each_var(&mut |v| found |= self.dom.tracks(v));
        found
    }

    /// Rewrites an expression for the BDD side: explicit-tracked
    /// variables become their known constant or an unconstrained value.
    fn subst_for_bdd(&self, e: &Expr, exp: &ExplicitState) -> Expr {
        subst_vars(e, &|v| {
            if self.dom.tracks(v) {
                None
            } else {
                Some(match exp.get(v) {
                    Some(c) => Expr::Const(c),
                    None => Expr::Nondet,
                })
            }
        })
    }

    /// Rewrites an expression for the explicit side: BDD-tracked
    /// variables become unconstrained values.
    fn subst_for_explicit(&self, e: &Expr) -> Expr {
        subst_vars(e, &|v| self.dom.tracks(v).then_some(Expr::Nondet))
    }

    /// One-edge composite successor; `None` means infeasible.
    fn post(
        &mut self,
        exp: &ExplicitState,
        sym: NodeRef,
        op: &Op,
    ) -> Result<Option<(ExplicitState, NodeRef)>, BddError> {
        match op {
            Op::Skip => Ok(Some((exp.clone(), sym))),
            Op::Decl { var, init: None } => {
                if self.owns(*var) {
                    let sym2 = self.dom.havoc(sym, *var)?;
                    Ok(Some((exp.clone(), sym2)))
                } else {
                    Ok(exp.transfer(op).map(|e| (e, sym)))
                }
            }
            Op::Decl { var, init: Some(rhs) } | Op::Assign { var, expr: rhs } => {
                if self.owns(*var) {
                    let rhs = self.subst_for_bdd(rhs, exp);
                    let sym2 = self
                        .dom
                        .transfer(sym, &Op::Assign { var: *var, expr: rhs })?;
                    Ok(Some((exp.clone(), sym2)))
                } else {
                    let rhs = self.subst_for_explicit(rhs);
                    Ok(exp
                        .transfer(&Op::Assign { var: *var, expr: rhs })
                        .map(|e| (e, sym)))
                }
            }
            Op::Assume { expr, polarity } => {
                let mut conjuncts = Vec::new();
                split_assume(expr, *polarity, &mut conjuncts);
                let mut cur_exp = exp.clone();
                let mut cur_sym = sym;
                for (c, pol) in &conjuncts {
                    // The explicit side always filters; what it learns
                    // sharpens the substitution for later conjuncts and
                    // for the BDD side of this one.
                    let ce = self.subst_for_explicit(c);
                    match cur_exp.transfer(&Op::Assume { expr: ce, polarity: *pol }) {
                        Some(e) => cur_exp = e,
                        None => return Ok(None),
                    }
                    if self.mentions_tracked(c) {
                        let cb = self.subst_for_bdd(c, &cur_exp);
                        cur_sym = self
                            .dom
                            .transfer(cur_sym, &Op::Assume { expr: cb, polarity: *pol })?;
                        if self.dom.is_bottom(cur_sym) {
                            return Ok(None);
                        }
                    }
                }
                Ok(Some((cur_exp, cur_sym)))
            }
        }
    }

    // ---- reporting ----------------------------------------------------

    fn collect_reached(&self) -> Vec<ReachedInfo> {
        let mut out = Vec::new();
        for (li, states) in self.at_loc.iter().enumerate() {
            for &si in &states.states {
                let s = &self.arena[si];
                out.push(ReachedInfo {
                    loc: LocId(li as u32),
                    explicit: s.exp.bindings().iter().map(|(v, c)| (*v, *c)).collect(),
                    bdd_vars: self.dom.support_vars(s.sym),
                });
            }
        }
        out
    }

    fn collect_dots(&mut self) -> Result<Vec<(LocId, String)>, BddError> {
        let mut joined: Vec<(LocId, NodeRef)> = Vec::new();
        for li in 0..self.at_loc.len() {
            if self.at_loc[li].states.is_empty() {
                continue;
            }
            let mut acc = self.dom.bottom();
            let syms: Vec<NodeRef> =
                self.at_loc[li].states.iter().map(|&si| self.arena[si].sym).collect();
            for s in syms {
                acc = self.dom.join(acc, s)?;
            }
            joined.push((LocId(li as u32), acc));
        }
        let cfa = self.cfa;
        Ok(joined
            .into_iter()
            .map(|(loc, s)| {
                let dot = self.dom.to_dot(s, &|v| cfa.var_name(v).to_string());
                (loc, dot)
            })
            .collect())
    }
}

/// Replaces variables by `f`'s result, leaving everything else intact.
fn subst_vars(e: &Expr, f: &impl Fn(VarId) -> Option<Expr>) -> Expr {
    match e {
        Expr::Const(_) | Expr::Nondet => e.clone(),
        Expr::Var(v) => f(*v).unwrap_or_else(|| e.clone()),
        Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(subst_vars(inner, f))),
        Expr::Binary(op, l, r) => Expr::Binary(
            *op,
            Box::new(subst_vars(l, f)),
            Box::new(subst_vars(r, f)),
        ),
    }
}

/// Decomposes `expr == polarity` into conjuncts that can be applied one
/// after another: `&&` under true and `||` under false split, `!` flips.
fn split_assume(e: &Expr, polarity: bool, out: &mut Vec<(Expr, bool)>) {
    match e {
        Expr::Unary(UnaryOp::Not, inner) => split_assume(inner, !polarity, out),
        Expr::Binary(BinOp::And, l, r) if polarity => {
            split_assume(l, true, out);
            split_assume(r, true, out);
        }
        Expr::Binary(BinOp::Or, l, r) if !polarity => {
            split_assume(l, false, out);
            split_assume(r, false, out);
        }
        _ => out.push((e.clone(), polarity)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile;

    const GUARDED_SQUARE: &str = "void main() {
        int enabled;
        int a;
        int b;
        enabled = nondet();
        a = nondet();
        b = 20;
        if (enabled || a > 5) {
            if (a == 0) { b = 0; }
            assert(b * b > 200);
        }
    }";

    const GUARDED_SQUARE_SAFE: &str = "void main() {
        int enabled;
        int a;
        int b;
        enabled = nondet();
        a = nondet();
        b = 20;
        if (enabled || a > 5) {
            if (a == 0) { b = 0; }
            assert(b * b >= 0);
        }
    }";

    fn run(src: &str, assignment: DomainAssignment) -> Verdict {
        let cfa = compile(src).unwrap();
        verify(&cfa, &Config::with_assignment(assignment))
            .unwrap()
            .verdict
    }

    #[test]
    fn buggy_branching_program_is_false_under_every_assignment() {
        for a in DomainAssignment::ALL {
            match run(GUARDED_SQUARE, a) {
                Verdict::False { confirmed, .. } => {
                    assert!(confirmed, "unconfirmed counterexample under {a}")
                }
                v => panic!("expected FALSE under {a}, got {v:?}"),
            }
        }
    }

    #[test]
    fn squares_are_nonnegative_under_every_assignment() {
        for a in DomainAssignment::ALL {
            assert_eq!(run(GUARDED_SQUARE_SAFE, a), Verdict::True, "under {a}");
        }
    }

    #[test]
    fn trivial_assertion_holds() {
        let src = "void main() { int x; x = 0; assert(x == 0); }";
        for a in DomainAssignment::ALL {
            assert_eq!(run(src, a), Verdict::True, "under {a}");
        }
    }

    #[test]
    fn assert_false_is_reached_and_confirmed() {
        let src = "void main() { assert(0); }";
        for a in DomainAssignment::ALL {
            match run(src, a) {
                Verdict::False { confirmed: true, .. } => {}
                v => panic!("expected confirmed FALSE under {a}, got {v:?}"),
            }
        }
    }

    #[test]
    fn unreachable_branch_is_pruned() {
        let src = "void main() { if (0) { assert(0); } }";
        for a in DomainAssignment::ALL {
            assert_eq!(run(src, a), Verdict::True, "under {a}");
        }
    }

    #[test]
    fn bounded_loop_counts_correctly() {
        let src = "void main() {
            int i;
            int n;
            i = 0;
            n = 0;
            while (i < 8) { i = i + 1; n = n + 2; }
            assert(n == 16);
        }";
        for a in [DomainAssignment::ExplicitInt, DomainAssignment::BddInt] {
            assert_eq!(run(src, a), Verdict::True, "under {a}");
        }
    }

    #[test]
    fn bounded_loop_bug_is_confirmed() {
        let src = "void main() {
            int i;
            i = 0;
            while (i < 5) { i = i + 1; }
            assert(i != 5);
        }";
        for a in [DomainAssignment::ExplicitInt, DomainAssignment::BddInt] {
            match run(src, a) {
                Verdict::False { confirmed: true, .. } => {}
                v => panic!("expected confirmed FALSE under {a}, got {v:?}"),
            }
        }
    }

    #[test]
    fn cross_domain_constant_flows_into_bdd() {
        // x stays explicit under bdd-bool (IntEq); flag is a BDD bit.
        // Proving the assert needs x's constant inside the BDD transfer.
        let src = "void main() {
            int flag;
            int x;
            x = 3;
            flag = x == 3;
            assert(flag != 0);
        }";
        assert_eq!(run(src, DomainAssignment::BddBool), Verdict::True);
    }

    #[test]
    fn explicit_learning_sharpens_later_conjuncts() {
        // Under bdd-bool, y is explicit (IntEq) and flag is a BDD bit;
        // `y == 4` is learned first, so `flag == (y == 4)`'s BDD side sees
        // the constant.
        let src = "void main() {
            int flag;
            int y;
            y = nondet();
            flag = 1;
            if (y == 4 && flag == 0) {
                assert(0);
            }
        }";
        assert_eq!(run(src, DomainAssignment::BddBool), Verdict::True);
    }

    #[test]
    fn state_limit_reports_unknown() {
        let src = "void main() {
            int i;
            i = 0;
            while (i < 1000) { i = i + 1; }
            assert(i == 1000);
        }";
        let cfa = compile(src).unwrap();
        let mut cfg = Config::with_assignment(DomainAssignment::ExplicitInt);
        cfg.max_states = 50;
        let out = verify(&cfa, &cfg).unwrap();
        match out.verdict {
            Verdict::Unknown { reason } => assert!(reason.contains("state limit")),
            v => panic!("expected UNKNOWN, got {v:?}"),
        }
        assert!(out.stats.reached_states > 50);
    }

    #[test]
    fn timeout_reports_unknown() {
        let src = "void main() {
            int i;
            i = 0;
            while (i < 100000000) { i = i + 1; }
            assert(i >= 0);
        }";
        let cfa = compile(src).unwrap();
        let mut cfg = Config::with_assignment(DomainAssignment::ExplicitInt);
        cfg.timeout = Some(Duration::from_millis(50));
        let out = verify(&cfa, &cfg).unwrap();
        match out.verdict {
            Verdict::Unknown { reason } => assert_eq!(reason, "timeout"),
            v => panic!("expected timeout UNKNOWN, got {v:?}"),
        }
    }

    #[test]
    fn verdicts_and_stats_are_deterministic() {
        let cfa = compile(GUARDED_SQUARE).unwrap();
        for a in DomainAssignment::ALL {
            let cfg = Config::with_assignment(a);
            let o1 = verify(&cfa, &cfg).unwrap();
            let o2 = verify(&cfa, &cfg).unwrap();
            assert_eq!(o1.verdict, o2.verdict);
            assert_eq!(o1.stats.reached_states, o2.stats.reached_states);
            assert_eq!(o1.stats.expanded, o2.stats.expanded);
            assert_eq!(o1.stats.bdd_peak_nodes, o2.stats.bdd_peak_nodes);
        }
    }

    #[test]
    fn reached_partition_is_disjoint() {
        let cfa = compile(GUARDED_SQUARE_SAFE).unwrap();
        for a in DomainAssignment::ALL {
            let mut cfg = Config::with_assignment(a);
            cfg.collect_reached = true;
            let out = verify(&cfa, &cfg).unwrap();
            for info in out.reached.expect("requested reached set") {
                for (v, _) in &info.explicit {
                    assert!(
                        !info.bdd_vars.contains(v),
                        "variable {v:?} in both components under {a}"
                    );
                }
            }
        }
    }

    #[test]
    fn custom_order_rejects_unknown_names() {
        let cfa = compile(GUARDED_SQUARE).unwrap();
        let mut cfg = Config::with_assignment(DomainAssignment::BddInt);
        cfg.order = BddOrder::Custom(vec!["no_such_var".to_string()]);
        match verify(&cfa, &cfg) {
            Err(EngineError::Config(msg)) => assert!(msg.contains("no_such_var")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn custom_order_reorders_tracked_variables() {
        let cfa = compile(GUARDED_SQUARE).unwrap();
        let typing = infer(&cfa);
        let (_, tracked) = partition(&typing, DomainAssignment::BddInt);
        let reversed: Vec<String> = tracked
            .iter()
            .rev()
            .map(|&v| cfa.var_name(v).to_string())
            .collect();
        let order = resolve_order(&cfa, &tracked, &BddOrder::Custom(reversed)).unwrap();
        let mut expect = tracked.clone();
        expect.reverse();
        assert_eq!(order, expect);
        // Verification still works under the permuted order.
        let mut cfg = Config::with_assignment(DomainAssignment::BddInt);
        cfg.order = BddOrder::Custom(
            tracked.iter().rev().map(|&v| cfa.var_name(v).to_string()).collect(),
        );
        assert!(verify(&cfa, &cfg).unwrap().verdict.is_false());
    }

    #[test]
    fn trace_is_a_connected_error_path() {
        let cfa = compile(GUARDED_SQUARE).unwrap();
        let out = verify(&cfa, &Config::with_assignment(DomainAssignment::BddInt)).unwrap();
        let Verdict::False { trace, .. } = out.verdict else {
            panic!("expected FALSE");
        };
        assert_eq!(cfa.edges[trace[0]].source, cfa.entry);
        for w in trace.windows(2) {
            assert_eq!(cfa.edges[w[0]].target, cfa.edges[w[1]].source);
        }
        assert!(cfa.is_error(cfa.edges[*trace.last().unwrap()].target));
    }

    #[test]
    fn nondet_branches_both_ways() {
        // Each branch pins y, so the final assert is decidable on every
        // abstract path in every assignment.
        let src = "void main() {
            int x;
            int y;
            x = nondet();
            if (x == 2) { y = 1; } else { y = 2; }
            assert(y != 0);
        }";
        for a in DomainAssignment::ALL {
            assert_eq!(run(src, a), Verdict::True, "under {a}");
        }
    }

    #[test]
    fn merge_keeps_one_state_per_explicit_part() {
        // Two paths reach the join with the same explicit part and
        // different BDD parts; both survive as a single merged state.
        let src = "void main() {
            int flag;
            int x;
            flag = nondet();
            x = 1;
            if (flag != 0) { flag = 1; } else { flag = 0; }
            assert(x == 1);
        }";
        let cfa = compile(src).unwrap();
        let mut cfg = Config::with_assignment(DomainAssignment::BddBool);
        cfg.collect_reached = true;
        let out = verify(&cfa, &cfg).unwrap();
        assert_eq!(out.verdict, Verdict::True);
        // No location holds two states with equal explicit parts.
        let reached = out.reached.unwrap();
        for i in 0..reached.len() {
            for j in i + 1..reached.len() {
                if reached[i].loc == reached[j].loc {
                    assert_ne!(
                        reached[i].explicit, reached[j].explicit,
                        "duplicate explicit part at {:?}",
                        reached[i].loc
                    );
                }
            }
        }
    }
}
