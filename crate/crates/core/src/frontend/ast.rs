//! Source-level syntax tree produced by the parser.
//!
//! Names are unresolved strings here; scoping, inlining and mangling happen
//! during lowering.

/// Binary operators, C precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    And,
    Or,
}

impl BinOp {
    /// Operator spelling, as written in source.
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::BitAnd => "&",
            BinOp::BitXor => "^",
            BinOp::BitOr => "|",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    /// Logical `!`. Unary minus is rewritten to `0 - e` at parse time.
    Not,
    /// Bitwise `~`.
    BitNot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(i32),
    Var { name: String, line: u32, col: u32 },
    /// `nondet()` / `__VERIFIER_nondet_int()`; only legal as a whole
    /// assignment right-hand side (the parser enforces this).
    Nondet { line: u32 },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone)]
pub struct Declarator {
    pub name: String,
    pub init: Option<Rhs>,
    pub line: u32,
    pub col: u32,
}

/// Right-hand side of an assignment or initializer. Function calls and
/// nondet never nest inside larger expressions.
#[derive(Debug, Clone)]
pub enum Rhs {
    Expr(Expr),
    Call { name: String, args: Vec<Expr>, line: u32, col: u32 },
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Decl { decls: Vec<Declarator>, line: u32 },
    Assign { name: String, value: Rhs, line: u32, col: u32 },
    If { cond: Expr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt>, line: u32 },
    While { cond: Expr, body: Vec<Stmt>, line: u32 },
    Goto { label: String, line: u32, col: u32 },
    Label { name: String, line: u32, col: u32 },
    Assert { cond: Expr, line: u32 },
    Assume { cond: Expr, line: u32 },
    /// `__VERIFIER_error();` — reaches a dedicated error location.
    Error { line: u32 },
    /// Call for effect: `f(a, b);`
    Call { name: String, args: Vec<Expr>, line: u32, col: u32 },
    Return { value: Option<Expr>, line: u32 },
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone)]
pub struct Function {
    pub name: String,
    pub returns_int: bool,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub line: u32,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub globals: Vec<Declarator>,
    pub functions: Vec<Function>,
}
