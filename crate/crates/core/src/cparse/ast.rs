use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CType {
    Void,
    Double,
    Float,
    Int,
    Bool,
    Long,
    Undefined4,
    Undefined8,
}

impl CType {
    pub fn from_keyword(word: &str) -> Option<CType> {
        Some(match word {
            "void" => CType::Void,
            "double" => CType::Double,
            "float" => CType::Float,
            "int" => CType::Int,
            "bool" => CType::Bool,
            "long" => CType::Long,
            "undefined4" => CType::Undefined4,
            "undefined8" => CType::Undefined8,
            _ => return None,
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            CType::Void => "void",
            CType::Double => "double",
            CType::Float => "float",
            CType::Int => "int",
            CType::Bool => "bool",
            CType::Long => "long",
            CType::Undefined4 => "undefined4",
            CType::Undefined8 => "undefined8",
        }
    }
}

impl fmt::Display for CType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Cast applied to a component-struct dereference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DerefCast {
    Float,
    Double,
    Int,
    Bool,
}

impl DerefCast {
    pub fn from_ctype(t: CType) -> Option<DerefCast> {
        Some(match t {
            CType::Float => DerefCast::Float,
            CType::Double => DerefCast::Double,
            CType::Int => DerefCast::Int,
            CType::Bool => DerefCast::Bool,
            _ => return None,
        })
    }

    pub fn ctype(self) -> CType {
        match self {
            DerefCast::Float => CType::Float,
            DerefCast::Double => CType::Double,
            DerefCast::Int => CType::Int,
            DerefCast::Bool => CType::Bool,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    /// C binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div => 6,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div
        )
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Callee {
    Fmin,
    Fmax,
    Fminf,
    Fmaxf,
    Fabs,
    Fabsf,
    /// Normalized `min(max(e, lo), hi)`; produced by rewriting, never parsed.
    Clamp,
}

impl Callee {
    pub fn from_name(name: &str) -> Option<Callee> {
        Some(match name {
            "fmin" => Callee::Fmin,
            "fmax" => Callee::Fmax,
            "fminf" => Callee::Fminf,
            "fmaxf" => Callee::Fmaxf,
            "fabs" => Callee::Fabs,
            "fabsf" => Callee::Fabsf,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Callee::Fmin => "fmin",
            Callee::Fmax => "fmax",
            Callee::Fminf => "fminf",
            Callee::Fmaxf => "fmaxf",
            Callee::Fabs => "fabs",
            Callee::Fabsf => "fabsf",
            Callee::Clamp => "clamp",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Callee::Fabs | Callee::Fabsf => 1,
            Callee::Clamp => 3,
            _ => 2,
        }
    }

    pub fn is_min(self) -> bool {
        matches!(self, Callee::Fmin | Callee::Fminf)
    }

    pub fn is_max(self) -> bool {
        matches!(self, Callee::Fmax | Callee::Fmaxf)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CodeExpr {
    IntLit(i64),
    RealLit(f64),
    Ident(String),
    /// `*(cast *)(base + offset)`
    Deref {
        base: String,
        offset: u64,
        cast: DerefCast,
    },
    Unary(UnaryOp, Box<CodeExpr>),
    Binary(BinaryOp, Box<CodeExpr>, Box<CodeExpr>),
    Ternary(Box<CodeExpr>, Box<CodeExpr>, Box<CodeExpr>),
    Call(Callee, Vec<CodeExpr>),
}

impl CodeExpr {
    pub fn binary(op: BinaryOp, l: CodeExpr, r: CodeExpr) -> CodeExpr {
        CodeExpr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn unary(op: UnaryOp, e: CodeExpr) -> CodeExpr {
        CodeExpr::Unary(op, Box::new(e))
    }

    pub fn ident(name: &str) -> CodeExpr {
        CodeExpr::Ident(name.to_string())
    }

    pub fn deref(base: &str, offset: u64) -> CodeExpr {
        CodeExpr::Deref {
            base: base.to_string(),
            offset,
            cast: DerefCast::Double,
        }
    }

    pub fn is_lvalue(&self) -> bool {
        matches!(self, CodeExpr::Ident(_) | CodeExpr::Deref { .. })
    }

    /// Pre-order walk.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a CodeExpr)) {
        f(self);
        match self {
            CodeExpr::Unary(_, e) => e.visit(f),
            CodeExpr::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            CodeExpr::Ternary(c, t, e) => {
                c.visit(f);
                t.visit(f);
                e.visit(f);
            }
            CodeExpr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }

    pub fn mentions_ident(&self, name: &str) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if let CodeExpr::Ident(n) = e {
                found |= n == name;
            }
        });
        found
    }
}

/// Statement with the source line it started on. Equality ignores the line
/// so that re-parsed printouts compare structurally.
#[derive(Clone, Debug)]
pub struct CodeStmt {
    pub kind: StmtKind,
    pub line: u32,
}

impl PartialEq for CodeStmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl CodeStmt {
    pub fn new(kind: StmtKind) -> Self {
        CodeStmt { kind, line: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Decl {
        ty: CType,
        name: String,
        init: Option<CodeExpr>,
    },
    Assign {
        target: CodeExpr,
        value: CodeExpr,
    },
    If {
        cond: CodeExpr,
        then_body: Vec<CodeStmt>,
        else_body: Vec<CodeStmt>,
    },
    Return(Option<CodeExpr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub ty: CType,
    pub name: String,
}

#[derive(Clone, Debug)]
pub struct Function {
    pub return_type: CType,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<CodeStmt>,
    pub line: u32,
}

impl PartialEq for Function {
    fn eq(&self, other: &Self) -> bool {
        self.return_type == other.return_type
            && self.name == other.name
            && self.params == other.params
            && self.body == other.body
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CodeUnit {
    pub functions: Vec<Function>,
}

impl CodeUnit {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }
}

/// Calls `f` on every statement, descending into `if` branches.
pub fn walk_stmts<'a>(body: &'a [CodeStmt], f: &mut dyn FnMut(&'a CodeStmt)) {
    for stmt in body {
        f(stmt);
        if let StmtKind::If {
            then_body,
            else_body,
            ..
        } = &stmt.kind
        {
            walk_stmts(then_body, f);
            walk_stmts(else_body, f);
        }
    }
}
