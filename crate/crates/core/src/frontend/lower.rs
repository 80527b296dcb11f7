//! Lowers the syntax tree to a control-flow automaton.
//!
//! - `assert(e)` becomes two `Assume` edges; the false branch targets a
//!   fresh error location.
//! - `if`/`while` conditions become `Assume` pairs with both polarities.
//! - Calls are inlined at the call site; locals and parameters get a
//!   call-site-unique name suffix. Recursion is rejected.
//! - Locations unreachable from the entry are pruned and the rest
//!   renumbered in traversal order, so the result is deterministic.

use std::collections::{BTreeSet, HashMap};

use super::ast::{self, Rhs, Stmt};
use super::error::FrontendError;
use crate::cfa::{Cfa, Edge, Expr, LocId, Op, VarId};

pub fn lower(program: &ast::Program) -> Result<Cfa, FrontendError> {
    let mut funcs: HashMap<&str, &ast::Function> = HashMap::new();
    for f in &program.functions {
        if funcs.insert(f.name.as_str(), f).is_some() {
            return Err(FrontendError::syntax(
                f.line,
                1,
                format!("function '{}' is defined twice", f.name),
            ));
        }
    }
    let main = *funcs
        .get("main")
        .ok_or_else(|| FrontendError::syntax(1, 1, "program requires a 'main' function"))?;

    let mut b = Builder {
        funcs,
        num_locs: 0,
        edges: Vec::new(),
        var_names: Vec::new(),
        taken_names: BTreeSet::new(),
        scopes: vec![HashMap::new()],
        frames: Vec::new(),
        inline_stack: Vec::new(),
        call_counter: 0,
        error_locations: BTreeSet::new(),
    };

    let entry = b.new_loc();
    let mut cur = entry;
    for d in &program.globals {
        cur = b.global_decl(cur, d)?;
    }

    cur = b.inline_function(cur, main, &[], None, main.line, 1, true)?;
    let _ = cur;

    b.finish(entry)
}

struct Frame {
    labels: HashMap<String, LocId>,
    gotos: Vec<(String, LocId, u32, u32)>,
    exit: LocId,
    ret_target: Option<VarId>,
    returns_int: bool,
    fname: String,
    /// Index into `scopes` where this frame's scopes begin; name lookup
    /// stops here and falls through only to the global scope.
    scope_base: usize,
    /// Call-site-unique suffix for locals; `None` for main.
    suffix: Option<u32>,
}

struct Builder<'a> {
    funcs: HashMap<&'a str, &'a ast::Function>,
    num_locs: u32,
    edges: Vec<Edge>,
    var_names: Vec<String>,
    taken_names: BTreeSet<String>,
    scopes: Vec<HashMap<String, VarId>>,
    frames: Vec<Frame>,
    inline_stack: Vec<String>,
    call_counter: u32,
    error_locations: BTreeSet<LocId>,
}

impl<'a> Builder<'a> {
    fn new_loc(&mut self) -> LocId {
        let l = LocId(self.num_locs);
        self.num_locs += 1;
        l
    }

    fn edge(&mut self, source: LocId, target: LocId, op: Op, line: u32) {
        self.edges.push(Edge { source, target, op, line });
    }

    /// Emits `op` on a fresh edge from `cur`, returning the new location.
    fn step(&mut self, cur: LocId, op: Op, line: u32) -> LocId {
        let next = self.new_loc();
        self.edge(cur, next, op, line);
        next
    }

    /// Declares a variable in the innermost scope. The stored name is the
    /// source name, made globally unique with an inline-instance suffix
    /// (`@n`) and, if still colliding, a shadow counter (`#k`).
    fn declare(&mut self, name: &str, line: u32, col: u32) -> Result<VarId, FrontendError> {
        let scope = self.scopes.last_mut().unwrap();
        if scope.contains_key(name) {
            return Err(FrontendError::syntax(
                line,
                col,
                format!("redeclaration of '{name}' in the same scope"),
            ));
        }
        let suffix = self.frames.last().and_then(|f| f.suffix);
        let base = match suffix {
            Some(n) => format!("{name}@{n}"),
            None => name.to_string(),
        };
        let mut unique = base.clone();
        let mut k = 2;
        while self.taken_names.contains(&unique) {
            unique = format!("{base}#{k}");
            k += 1;
        }
        self.taken_names.insert(unique.clone());
        let id = VarId(self.var_names.len() as u32);
        self.var_names.push(unique);
        self.scopes.last_mut().unwrap().insert(name.to_string(), id);
        Ok(id)
    }

    /// Innermost-scope-first lookup, limited to the current frame plus
    /// globals: inlined callees never see caller locals.
    fn resolve(&self, name: &str, line: u32, col: u32) -> Result<VarId, FrontendError> {
        let base = self.frames.last().map(|f| f.scope_base).unwrap_or(1);
        for scope in self.scopes[base..].iter().rev() {
            if let Some(&id) = scope.get(name) {
                return Ok(id);
            }
        }
        if let Some(&id) = self.scopes[0].get(name) {
            return Ok(id);
        }
        Err(FrontendError::UndeclaredVariable { line, col, name: name.to_string() })
    }

    fn lower_expr(&self, e: &ast::Expr) -> Result<Expr, FrontendError> {
        Ok(match e {
            ast::Expr::Const(c) => Expr::Const(*c),
            ast::Expr::Var { name, line, col } => Expr::Var(self.resolve(name, *line, *col)?),
            ast::Expr::Nondet { line } => {
                // The parser only lets Nondet through as a whole RHS.
                debug_assert!(false, "nondet leaked into expression at line {line}");
                Expr::Nondet
            }
            ast::Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(self.lower_expr(inner)?)),
            ast::Expr::Binary(op, l, r) => Expr::Binary(
                *op,
                Box::new(self.lower_expr(l)?),
                Box::new(self.lower_expr(r)?),
            ),
        })
    }

    fn global_decl(&mut self, cur: LocId, d: &ast::Declarator) -> Result<LocId, FrontendError> {
        let init = match &d.init {
            None => None,
            Some(Rhs::Expr(ast::Expr::Nondet { .. })) => Some(Expr::Nondet),
            Some(Rhs::Expr(e)) => Some(self.lower_expr(e)?),
            Some(Rhs::Call { line, col, .. }) => {
                return Err(FrontendError::syntax(
                    *line,
                    *col,
                    "global initializers may not call functions",
                ));
            }
        };
        let id = self.declare(&d.name, d.line, d.col)?;
        Ok(self.step(cur, Op::Decl { var: id, init }, d.line))
    }

    /// Inlines a call to `f`. Arguments are lowered in the caller's scope
    /// first, then bound to parameter copies. Returns the location after
    /// the call.
    #[allow(clippy::too_many_arguments)]
    fn inline_function(
        &mut self,
        cur: LocId,
        f: &'a ast::Function,
        args: &[Expr],
        ret_target: Option<VarId>,
        line: u32,
        col: u32,
        is_main: bool,
    ) -> Result<LocId, FrontendError> {
        if self.inline_stack.iter().any(|n| n == &f.name) {
            return Err(FrontendError::Recursion { name: f.name.clone() });
        }
        if args.len() != f.params.len() {
            return Err(FrontendError::syntax(
                line,
                col,
                format!(
                    "function '{}' takes {} argument(s), {} given",
                    f.name,
                    f.params.len(),
                    args.len()
                ),
            ));
        }
        if ret_target.is_some() && !f.returns_int {
            return Err(FrontendError::syntax(
                line,
                col,
                format!("void function '{}' used as a value", f.name),
            ));
        }

        let suffix = if is_main {
            None
        } else {
            self.call_counter += 1;
            Some(self.call_counter)
        };
        self.inline_stack.push(f.name.clone());
        let exit = self.new_loc();
        self.frames.push(Frame {
            labels: HashMap::new(),
            gotos: Vec::new(),
            exit,
            ret_target,
            returns_int: f.returns_int,
            fname: f.name.clone(),
            scope_base: self.scopes.len(),
            suffix,
        });
        self.scopes.push(HashMap::new());

        let mut cur = cur;
        for (p, arg) in f.params.iter().zip(args.iter()) {
            let pid = self.declare(p, f.line, 1)?;
            let init = if is_main { None } else { Some(arg.clone()) };
            cur = self.step(cur, Op::Decl { var: pid, init }, line);
        }
        cur = self.lower_stmts(&f.body, cur)?;

        // Falling off the end of a value-producing call leaves the target
        // unconstrained.
        if let Some(t) = self.frames.last().unwrap().ret_target {
            cur = self.step(cur, Op::Assign { var: t, expr: Expr::Nondet }, f.line);
        }
        let frame = self.frames.last().unwrap();
        let (exit, line_end) = (frame.exit, f.line);
        self.edge(cur, exit, Op::Skip, line_end);

        let frame = self.frames.pop().unwrap();
        for (label, from, gline, gcol) in frame.gotos {
            match frame.labels.get(&label) {
                Some(&target) => self.edge(from, target, Op::Skip, gline),
                None => {
                    return Err(FrontendError::syntax(
                        gline,
                        gcol,
                        format!("goto to unknown label '{label}' in function '{}'", frame.fname),
                    ));
                }
            }
        }
        self.scopes.pop();
        self.inline_stack.pop();
        Ok(exit)
    }

    fn lower_stmts(&mut self, stmts: &[Stmt], mut cur: LocId) -> Result<LocId, FrontendError> {
        for s in stmts {
            cur = self.lower_stmt(s, cur)?;
        }
        Ok(cur)
    }

    fn lower_rhs_assign(
        &mut self,
        cur: LocId,
        target: VarId,
        value: &Rhs,
        line: u32,
    ) -> Result<LocId, FrontendError> {
        match value {
            Rhs::Expr(ast::Expr::Nondet { .. }) => {
                Ok(self.step(cur, Op::Assign { var: target, expr: Expr::Nondet }, line))
            }
            Rhs::Expr(e) => {
                let expr = self.lower_expr(e)?;
                Ok(self.step(cur, Op::Assign { var: target, expr }, line))
            }
            Rhs::Call { name, args, line: cl, col } => {
                let args = args
                    .iter()
                    .map(|a| self.lower_expr(a))
                    .collect::<Result<Vec<_>, _>>()?;
                let f = *self.funcs.get(name.as_str()).ok_or_else(|| {
                    FrontendError::UndefinedFunction { line: *cl, col: *col, name: name.clone() }
                })?;
                self.inline_function(cur, f, &args, Some(target), *cl, *col, false)
            }
        }
    }

    fn lower_stmt(&mut self, s: &Stmt, cur: LocId) -> Result<LocId, FrontendError> {
        match s {
            Stmt::Block(inner) => {
                self.scopes.push(HashMap::new());
                let out = self.lower_stmts(inner, cur);
                self.scopes.pop();
                out
            }
            Stmt::Decl { decls, line } => {
                let mut cur = cur;
                for d in decls {
                    match &d.init {
                        None => {
                            let id = self.declare(&d.name, d.line, d.col)?;
                            cur = self.step(cur, Op::Decl { var: id, init: None }, *line);
                        }
                        Some(Rhs::Expr(ast::Expr::Nondet { .. })) => {
                            let id = self.declare(&d.name, d.line, d.col)?;
                            cur = self.step(cur, Op::Decl { var: id, init: Some(Expr::Nondet) }, *line);
                        }
                        Some(Rhs::Expr(e)) => {
                            // The initializer is evaluated before the name
                            // becomes visible.
                            let init = self.lower_expr(e)?;
                            let id = self.declare(&d.name, d.line, d.col)?;
                            cur = self.step(cur, Op::Decl { var: id, init: Some(init) }, *line);
                        }
                        Some(Rhs::Call { .. }) => {
                            let id = self.declare(&d.name, d.line, d.col)?;
                            cur = self.step(cur, Op::Decl { var: id, init: None }, *line);
                            let rhs = d.init.clone().unwrap();
                            cur = self.lower_rhs_assign(cur, id, &rhs, *line)?;
                        }
                    }
                }
                Ok(cur)
            }
            Stmt::Assign { name, value, line, col } => {
                let target = self.resolve(name, *line, *col)?;
                self.lower_rhs_assign(cur, target, value, *line)
            }
            Stmt::If { cond, then_branch, else_branch, line } => {
                let cond = self.lower_expr(cond)?;
                let then_start = self.new_loc();
                let else_start = self.new_loc();
                self.edge(cur, then_start, Op::Assume { expr: cond.clone(), polarity: true }, *line);
                self.edge(cur, else_start, Op::Assume { expr: cond, polarity: false }, *line);
                self.scopes.push(HashMap::new());
                let then_end = self.lower_stmts(then_branch, then_start)?;
                self.scopes.pop();
                self.scopes.push(HashMap::new());
                let else_end = self.lower_stmts(else_branch, else_start)?;
                self.scopes.pop();
                let join = self.new_loc();
                self.edge(then_end, join, Op::Skip, *line);
                self.edge(else_end, join, Op::Skip, *line);
                Ok(join)
            }
            Stmt::While { cond, body, line } => {
                let cond = self.lower_expr(cond)?;
                let head = self.new_loc();
                self.edge(cur, head, Op::Skip, *line);
                let body_start = self.new_loc();
                let exit = self.new_loc();
                self.edge(head, body_start, Op::Assume { expr: cond.clone(), polarity: true }, *line);
                self.edge(head, exit, Op::Assume { expr: cond, polarity: false }, *line);
                self.scopes.push(HashMap::new());
                let body_end = self.lower_stmts(body, body_start)?;
                self.scopes.pop();
                self.edge(body_end, head, Op::Skip, *line);
                Ok(exit)
            }
            Stmt::Goto { label, line, col } => {
                self.frames
                    .last_mut()
                    .unwrap()
                    .gotos
                    .push((label.clone(), cur, *line, *col));
                // Code after an unconditional jump is unreachable.
                Ok(self.new_loc())
            }
            Stmt::Label { name, line, col } => {
                let at = self.new_loc();
                self.edge(cur, at, Op::Skip, *line);
                let frame = self.frames.last_mut().unwrap();
                if frame.labels.insert(name.clone(), at).is_some() {
                    return Err(FrontendError::syntax(
                        *line,
                        *col,
                        format!("duplicate label '{name}'"),
                    ));
                }
                Ok(at)
            }
            Stmt::Assert { cond, line } => {
                let cond = self.lower_expr(cond)?;
                let ok = self.new_loc();
                let err = self.new_loc();
                self.error_locations.insert(err);
                self.edge(cur, ok, Op::Assume { expr: cond.clone(), polarity: true }, *line);
                self.edge(cur, err, Op::Assume { expr: cond, polarity: false }, *line);
                Ok(ok)
            }
            Stmt::Assume { cond, line } => {
                let cond = self.lower_expr(cond)?;
                Ok(self.step(cur, Op::Assume { expr: cond, polarity: true }, *line))
            }
            Stmt::Error { line } => {
                let err = self.new_loc();
                self.error_locations.insert(err);
                self.edge(cur, err, Op::Skip, *line);
                Ok(self.new_loc())
            }
            Stmt::Call { name, args, line, col } => {
                let args = args
                    .iter()
                    .map(|a| self.lower_expr(a))
                    .collect::<Result<Vec<_>, _>>()?;
                let f = *self.funcs.get(name.as_str()).ok_or_else(|| {
                    FrontendError::UndefinedFunction { line: *line, col: *col, name: name.clone() }
                })?;
                self.inline_function(cur, f, &args, None, *line, *col, false)
            }
            Stmt::Return { value, line } => {
                let frame = self.frames.last().unwrap();
                let (returns_int, ret_target, exit, fname) =
                    (frame.returns_int, frame.ret_target, frame.exit, frame.fname.clone());
                match (returns_int, value) {
                    (true, None) => {
                        return Err(FrontendError::syntax(
                            *line,
                            1,
                            format!("function '{fname}' returns int and needs a value"),
                        ));
                    }
                    (false, Some(_)) => {
                        return Err(FrontendError::syntax(
                            *line,
                            1,
                            format!("void function '{fname}' cannot return a value"),
                        ));
                    }
                    _ => {}
                }
                match (ret_target, value) {
                    (Some(t), Some(e)) => {
                        let expr = self.lower_expr(e)?;
                        self.edge(cur, exit, Op::Assign { var: t, expr }, *line);
                    }
                    _ => self.edge(cur, exit, Op::Skip, *line),
                }
                Ok(self.new_loc())
            }
        }
    }

    /// Prunes locations unreachable from the entry, renumbers the rest in
    /// discovery order, and re-interns variables in first-mention order.
    fn finish(self, entry: LocId) -> Result<Cfa, FrontendError> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.num_locs as usize];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.source.index()].push(i);
        }
        let mut loc_map: Vec<Option<u32>> = vec![None; self.num_locs as usize];
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        loc_map[entry.index()] = Some(0);
        order.push(entry);
        queue.push_back(entry);
        while let Some(l) = queue.pop_front() {
            for &ei in &out[l.index()] {
                let t = self.edges[ei].target;
                if loc_map[t.index()].is_none() {
                    loc_map[t.index()] = Some(order.len() as u32);
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }

        let kept: Vec<&Edge> = self
            .edges
            .iter()
            .filter(|e| loc_map[e.source.index()].is_some())
            .collect();

        // First-mention renumbering of variables over the kept edges.
        let mut var_map: Vec<Option<u32>> = vec![None; self.var_names.len()];
        let mut names = Vec::new();
        {
            let note = |v: VarId, var_map: &mut Vec<Option<u32>>, names: &mut Vec<String>| {
                if var_map[v.index()].is_none() {
                    var_map[v.index()] = Some(names.len() as u32);
                    names.push(self.var_names[v.index()].clone());
                }
            };
            for e in &kept {
                match &e.op {
                    Op::Decl { var, init } => {
                        note(*var, &mut var_map, &mut names);
                        if let Some(i) = init {
                            i.for_each_var(&mut |v| note(v, &mut var_map, &mut names));
                        }
                    }
                    Op::Assign { var, expr } => {
                        note(*var, &mut var_map, &mut names);
                        expr.for_each_var(&mut |v| note(v, &mut var_map, &mut names));
                    }
                    Op::Assume { expr, .. } => {
                        expr.for_each_var(&mut |v| note(v, &mut var_map, &mut names));
                    }
                    Op::Skip => {}
                }
            }
        }

        let remap_var = |v: VarId| VarId(var_map[v.index()].expect("var on kept edge"));
        fn remap_expr(e: &Expr, f: &impl Fn(VarId) -> VarId) -> Expr {
            match e {
                Expr::Const(c) => Expr::Const(*c),
                Expr::Var(v) => Expr::Var(f(*v)),
                Expr::Nondet => Expr::Nondet,
                Expr::Unary(op, i) => Expr::Unary(*op, Box::new(remap_expr(i, f))),
                Expr::Binary(op, l, r) => {
                    Expr::Binary(*op, Box::new(remap_expr(l, f)), Box::new(remap_expr(r, f)))
                }
            }
        }

        let edges: Vec<Edge> = kept
            .iter()
            .map(|e| Edge {
                source: LocId(loc_map[e.source.index()].unwrap()),
                target: LocId(loc_map[e.target.index()].unwrap()),
                op: match &e.op {
                    Op::Decl { var, init } => Op::Decl {
                        var: remap_var(*var),
                        init: init.as_ref().map(|i| remap_expr(i, &remap_var)),
                    },
                    Op::Assign { var, expr } => Op::Assign {
                        var: remap_var(*var),
                        expr: remap_expr(expr, &remap_var),
                    },
                    Op::Assume { expr, polarity } => Op::Assume {
                        expr: remap_expr(expr, &remap_var),
                        polarity: *polarity,
                    },
                    Op::Skip => Op::Skip,
                },
                line: e.line,
            })
            .collect();

        let error_locations: BTreeSet<LocId> = self
            .error_locations
            .iter()
            .filter_map(|l| loc_map[l.index()].map(LocId))
            .collect();

        Ok(Cfa::assemble(names, edges, order.len() as u32, error_locations))
    }
}
