//! Recursive-descent parser for the C subset.
//!
//! Grammar outline:
//!   program  := decl* func+
//!   func     := ("int" | "void") ident "(" params? ")" block
//!   stmt     := decl | assign | if | while | goto | label | assert
//!             | assume | error-call | call | return | block | ";"
//!
//! Function calls and `nondet()` are only accepted as a whole assignment
//! right-hand side or as a statement; nesting them in expressions is
//! rejected here so later stages never see them.

use super::ast::*;
use super::error::FrontendError;
use super::lexer::{lex, Tok, Token};

const NONDET_NAMES: &[&str] = &["nondet", "__VERIFIER_nondet_int"];
const ASSUME_NAMES: &[&str] = &["__VERIFIER_assume"];
const ERROR_NAMES: &[&str] = &["__VERIFIER_error"];

pub fn parse(src: &str) -> Result<Program, FrontendError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0 };
    p.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.tokens.get(self.pos + 1).map(|t| &t.tok)
    }

    fn here(&self) -> (u32, u32) {
        match self.tokens.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => self
                .tokens
                .last()
                .map(|t| (t.line, t.col + 1))
                .unwrap_or((1, 1)),
        }
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> FrontendError {
        let (line, col) = self.here();
        FrontendError::syntax(line, col, msg)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, FrontendError> {
        match self.peek() {
            Some(t) if *t == tok => Ok(self.bump().unwrap()),
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, u32, u32), FrontendError> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let t = self.bump().unwrap();
                match t.tok {
                    Tok::Ident(name) => Ok((name, t.line, t.col)),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn program(&mut self) -> Result<Program, FrontendError> {
        let mut globals = Vec::new();
        let mut functions = Vec::new();
        while self.peek().is_some() {
            match self.peek() {
                Some(Tok::KwInt) => {
                    // "int ident (" starts a function, otherwise a global.
                    if matches!(self.peek2(), Some(Tok::Ident(_)))
                        && matches!(self.tokens.get(self.pos + 2).map(|t| &t.tok), Some(Tok::LParen))
                    {
                        functions.push(self.function(true)?);
                    } else {
                        if !functions.is_empty() {
                            return Err(self.err("global declarations must precede functions"));
                        }
                        let (decls, _) = self.declaration()?;
                        globals.extend(decls);
                    }
                }
                Some(Tok::KwVoid) => functions.push(self.function(false)?),
                _ => return Err(self.err("expected a declaration or function definition")),
            }
        }
        if functions.is_empty() {
            return Err(self.err("program has no functions; a 'main' function is required"));
        }
        Ok(Program { globals, functions })
    }

    fn function(&mut self, returns_int: bool) -> Result<Function, FrontendError> {
        let kw = self.bump().unwrap(); // int | void
        let (name, _, _) = self.expect_ident("function name")?;
        self.expect(Tok::LParen, "'('")?;
        let mut params = Vec::new();
        if !matches!(self.peek(), Some(Tok::RParen)) {
            // Allow a single bare "void" parameter list.
            if matches!(self.peek(), Some(Tok::KwVoid)) && matches!(self.peek2(), Some(Tok::RParen))
            {
                self.bump();
            } else {
                loop {
                    self.expect(Tok::KwInt, "'int' in parameter list")?;
                    let (p, _, _) = self.expect_ident("parameter name")?;
                    params.push(p);
                    if matches!(self.peek(), Some(Tok::Comma)) {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
        }
        self.expect(Tok::RParen, "')'")?;
        let body = self.block()?;
        Ok(Function { name, returns_int, params, body, line: kw.line })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut stmts = Vec::new();
        while !matches!(self.peek(), Some(Tok::RBrace)) {
            if self.peek().is_none() {
                return Err(self.err("unexpected end of input inside a block"));
            }
            stmts.push(self.statement()?);
        }
        self.bump();
        Ok(stmts)
    }

    /// `int a = e, b, c = e;` — returns the declarators and the line.
    fn declaration(&mut self) -> Result<(Vec<Declarator>, u32), FrontendError> {
        let kw = self.expect(Tok::KwInt, "'int'")?;
        let mut decls = Vec::new();
        loop {
            let (name, line, col) = self.expect_ident("variable name")?;
            let init = if matches!(self.peek(), Some(Tok::Assign)) {
                self.bump();
                Some(self.rhs()?)
            } else {
                None
            };
            decls.push(Declarator { name, init, line, col });
            match self.peek() {
                Some(Tok::Comma) => {
                    self.bump();
                }
                _ => break,
            }
        }
        self.expect(Tok::Semi, "';' after declaration")?;
        Ok((decls, kw.line))
    }

    fn statement(&mut self) -> Result<Stmt, FrontendError> {
        match self.peek() {
            Some(Tok::Semi) => {
                self.bump();
                Ok(Stmt::Block(Vec::new()))
            }
            Some(Tok::LBrace) => Ok(Stmt::Block(self.block()?)),
            Some(Tok::KwInt) => {
                let (decls, line) = self.declaration()?;
                Ok(Stmt::Decl { decls, line })
            }
            Some(Tok::KwIf) => {
                let kw = self.bump().unwrap();
                self.expect(Tok::LParen, "'(' after 'if'")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                let then_branch = self.branch_body()?;
                let else_branch = if matches!(self.peek(), Some(Tok::KwElse)) {
                    self.bump();
                    self.branch_body()?
                } else {
                    Vec::new()
                };
                Ok(Stmt::If { cond, then_branch, else_branch, line: kw.line })
            }
            Some(Tok::KwWhile) => {
                let kw = self.bump().unwrap();
                self.expect(Tok::LParen, "'(' after 'while'")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                let body = self.branch_body()?;
                Ok(Stmt::While { cond, body, line: kw.line })
            }
            Some(Tok::KwGoto) => {
                let kw = self.bump().unwrap();
                let (label, line, col) = self.expect_ident("label after 'goto'")?;
                let _ = line;
                self.expect(Tok::Semi, "';' after goto")?;
                Ok(Stmt::Goto { label, line: kw.line, col })
            }
            Some(Tok::KwReturn) => {
                let kw = self.bump().unwrap();
                let value = if matches!(self.peek(), Some(Tok::Semi)) {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "';' after return")?;
                Ok(Stmt::Return { value, line: kw.line })
            }
            Some(Tok::KwAssert) => {
                let kw = self.bump().unwrap();
                self.expect(Tok::LParen, "'(' after 'assert'")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                self.expect(Tok::Semi, "';' after assert")?;
                Ok(Stmt::Assert { cond, line: kw.line })
            }
            Some(Tok::KwAssume) => {
                let kw = self.bump().unwrap();
                self.expect(Tok::LParen, "'(' after 'assume'")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                self.expect(Tok::Semi, "';' after assume")?;
                Ok(Stmt::Assume { cond, line: kw.line })
            }
            Some(Tok::Ident(_)) => self.ident_statement(),
            Some(Tok::KwVoid) => Err(self.err("nested function definitions are not allowed")),
            _ => Err(self.err("expected a statement")),
        }
    }

    /// `if`/`while`/`else` body: a single statement or a block.
    fn branch_body(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        if matches!(self.peek(), Some(Tok::LBrace)) {
            self.block()
        } else {
            Ok(vec![self.statement()?])
        }
    }

    fn ident_statement(&mut self) -> Result<Stmt, FrontendError> {
        let (name, line, col) = self.expect_ident("identifier")?;
        match self.peek() {
            Some(Tok::Colon) => {
                self.bump();
                Ok(Stmt::Label { name, line, col })
            }
            Some(Tok::Assign) => {
                self.bump();
                let value = self.rhs()?;
                self.expect(Tok::Semi, "';' after assignment")?;
                Ok(Stmt::Assign { name, value, line, col })
            }
            Some(Tok::LParen) => {
                let args = self.call_args()?;
                self.expect(Tok::Semi, "';' after call")?;
                if ASSUME_NAMES.contains(&name.as_str()) {
                    let mut args = args;
                    if args.len() != 1 {
                        return Err(FrontendError::syntax(line, col, "assume takes one argument"));
                    }
                    return Ok(Stmt::Assume { cond: args.remove(0), line });
                }
                if ERROR_NAMES.contains(&name.as_str()) {
                    if !args.is_empty() {
                        return Err(FrontendError::syntax(line, col, "error call takes no arguments"));
                    }
                    return Ok(Stmt::Error { line });
                }
                if NONDET_NAMES.contains(&name.as_str()) {
                    return Err(FrontendError::syntax(
                        line,
                        col,
                        "nondet() is only meaningful as an assignment right-hand side",
                    ));
                }
                Ok(Stmt::Call { name, args, line, col })
            }
            _ => Err(self.err("expected ':', '=' or '(' after identifier")),
        }
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, FrontendError> {
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        if !matches!(self.peek(), Some(Tok::RParen)) {
            loop {
                args.push(self.expr()?);
                if matches!(self.peek(), Some(Tok::Comma)) {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')'")?;
        Ok(args)
    }

    /// Assignment right-hand side: `nondet()`, a call, or an expression.
    fn rhs(&mut self) -> Result<Rhs, FrontendError> {
        if let (Some(Tok::Ident(name)), Some(Tok::LParen)) = (self.peek(), self.peek2()) {
            let name = name.clone();
            let (line, col) = self.here();
            self.bump();
            let args = self.call_args()?;
            // A call must be the whole right-hand side.
            if !matches!(self.peek(), Some(Tok::Semi) | Some(Tok::Comma)) {
                return Err(self.err("a call may not be part of a larger expression"));
            }
            if NONDET_NAMES.contains(&name.as_str()) {
                if !args.is_empty() {
                    return Err(FrontendError::syntax(line, col, "nondet() takes no arguments"));
                }
                return Ok(Rhs::Expr(Expr::Nondet { line }));
            }
            return Ok(Rhs::Call { name, args, line, col });
        }
        Ok(Rhs::Expr(self.expr()?))
    }

    // Expression parsing, C precedence: || < && < | < ^ < & < == != <
    // relational < shift < additive < multiplicative < unary.

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.and_expr()?;
        while matches!(self.peek(), Some(Tok::OrOr)) {
            self.bump();
            let r = self.and_expr()?;
            e = Expr::Binary(BinOp::Or, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.bitor_expr()?;
        while matches!(self.peek(), Some(Tok::AndAnd)) {
            self.bump();
            let r = self.bitor_expr()?;
            e = Expr::Binary(BinOp::And, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn bitor_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.bitxor_expr()?;
        while matches!(self.peek(), Some(Tok::Pipe)) {
            self.bump();
            let r = self.bitxor_expr()?;
            e = Expr::Binary(BinOp::BitOr, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn bitxor_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.bitand_expr()?;
        while matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let r = self.bitand_expr()?;
            e = Expr::Binary(BinOp::BitXor, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn bitand_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.equality_expr()?;
        while matches!(self.peek(), Some(Tok::Amp)) {
            self.bump();
            let r = self.equality_expr()?;
            e = Expr::Binary(BinOp::BitAnd, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn equality_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.relational_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::EqEq) => BinOp::Eq,
                Some(Tok::Ne) => BinOp::Ne,
                _ => break,
            };
            self.bump();
            let r = self.relational_expr()?;
            e = Expr::Binary(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn relational_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.shift_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Lt) => BinOp::Lt,
                Some(Tok::Gt) => BinOp::Gt,
                Some(Tok::Le) => BinOp::Le,
                Some(Tok::Ge) => BinOp::Ge,
                _ => break,
            };
            self.bump();
            let r = self.shift_expr()?;
            e = Expr::Binary(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn shift_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.additive_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Shl) => BinOp::Shl,
                Some(Tok::Shr) => BinOp::Shr,
                _ => break,
            };
            self.bump();
            let r = self.additive_expr()?;
            e = Expr::Binary(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn additive_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.multiplicative_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let r = self.multiplicative_expr()?;
            e = Expr::Binary(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn multiplicative_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                Some(Tok::Percent) => BinOp::Mod,
                _ => break,
            };
            let at = self.here();
            self.bump();
            let r = self.unary_expr()?;
            // Division by the literal constant 0 is rejected outright.
            if matches!(op, BinOp::Div | BinOp::Mod) {
                if let Expr::Const(0) = r {
                    return Err(FrontendError::syntax(
                        at.0,
                        at.1,
                        "division or modulo by constant zero",
                    ));
                }
            }
            e = Expr::Binary(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn unary_expr(&mut self) -> Result<Expr, FrontendError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                let e = self.unary_expr()?;
                // Negative literals fold; negation of anything else is
                // arithmetic and stays visible as subtraction from zero.
                Ok(match e {
                    Expr::Const(c) => Expr::Const(c.wrapping_neg()),
                    other => Expr::Binary(BinOp::Sub, Box::new(Expr::Const(0)), Box::new(other)),
                })
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary_expr()
            }
            Some(Tok::Bang) => {
                self.bump();
                let e = self.unary_expr()?;
                Ok(Expr::Unary(UnaryOp::Not, Box::new(e)))
            }
            Some(Tok::Tilde) => {
                self.bump();
                let e = self.unary_expr()?;
                Ok(Expr::Unary(UnaryOp::BitNot, Box::new(e)))
            }
            Some(Tok::Star) => {
                let (line, col) = self.here();
                Err(FrontendError::unsupported(line, col, "pointer dereference"))
            }
            Some(Tok::Amp) => {
                let (line, col) = self.here();
                Err(FrontendError::unsupported(line, col, "address-of operator"))
            }
            _ => self.primary_expr(),
        }
    }

    fn primary_expr(&mut self) -> Result<Expr, FrontendError> {
        match self.peek() {
            Some(Tok::Int(_)) => {
                let t = self.bump().unwrap();
                match t.tok {
                    Tok::Int(v) => Ok(Expr::Const(v)),
                    _ => unreachable!(),
                }
            }
            Some(Tok::Ident(_)) => {
                let (name, line, col) = self.expect_ident("identifier")?;
                if matches!(self.peek(), Some(Tok::LParen)) {
                    if NONDET_NAMES.contains(&name.as_str()) {
                        return Err(FrontendError::syntax(
                            line,
                            col,
                            "nondet() must be the whole right-hand side of an assignment",
                        ));
                    }
                    return Err(FrontendError::unsupported(
                        line,
                        col,
                        "function call inside an expression (a call must be the whole right-hand side)",
                    ));
                }
                Ok(Expr::Var { name, line, col })
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            _ => Err(self.err("expected an expression")),
        }
    }
}
