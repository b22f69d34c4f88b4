use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

pub fn parse_c_unit(text: &str) -> Result<CodeUnit, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let mut unit = CodeUnit::default();
    let mut names = HashSet::new();
    while p.peek() != &Tok::Eof {
        let name_tok = p.toks.get(p.pos + 1).cloned();
        let f = p.function()?;
        if !names.insert(f.name.clone()) {
            let t = name_tok.expect("function has a name token");
            return Err(ParseError::new(
                t.line,
                t.column,
                ["unique function name"],
                &format!("`{}`", f.name),
            ));
        }
        unit.functions.push(f);
    }
    Ok(unit)
}

/// Parses a single expression; used by tests and rule files.
pub fn parse_c_expr(text: &str) -> Result<CodeExpr, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses a statement sequence as if it were a function body.
pub fn parse_c_stmts(text: &str) -> Result<Vec<CodeStmt>, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let mut out = Vec::new();
    while p.peek() != &Tok::Eof {
        out.push(p.stmt()?);
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn current(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<const N: usize>(&self, expected: [&str; N]) -> ParseError {
        let t = self.current();
        ParseError::new(t.line, t.column, expected, &t.tok.describe())
    }

    fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Tok::Punct(q) if *q == p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &'static str) -> Result<(), ParseError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.error([&format!("`{p}`")]))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            Err(self.error(["end of input"]))
        }
    }

    fn peek_type(&self) -> Option<CType> {
        match self.peek() {
            Tok::Ident(w) => CType::from_keyword(w),
            _ => None,
        }
    }

    fn ctype(&mut self) -> Result<CType, ParseError> {
        match self.peek_type() {
            Some(t) => {
                self.bump();
                Ok(t)
            }
            None => Err(self.error(["type"])),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(w) if !is_keyword(w) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => Err(self.error(["identifier"])),
        }
    }

    fn function(&mut self) -> Result<Function, ParseError> {
        let line = self.current().line;
        let return_type = self.ctype()?;
        let name = self.ident()?;
        self.expect("(")?;
        let mut params = Vec::new();
        if matches!(self.peek(), Tok::Ident(w) if w == "void")
            && self.peek_at(1) == &Tok::Punct(")")
        {
            self.bump();
            self.bump();
        } else if !self.eat(")") {
            loop {
                let ty = self.ctype()?;
                let name = self.ident()?;
                params.push(Param { ty, name });
                if self.eat(")") {
                    break;
                }
                if !self.eat(",") {
                    return Err(self.error(["`,`", "`)`"]));
                }
            }
        }
        let body = self.block()?;
        Ok(Function {
            return_type,
            name,
            params,
            body,
            line,
        })
    }

    fn block(&mut self) -> Result<Vec<CodeStmt>, ParseError> {
        self.expect("{")?;
        let mut body = Vec::new();
        while !self.eat("}") {
            if self.peek() == &Tok::Eof {
                return Err(self.error(["`}`"]));
            }
            body.push(self.stmt()?);
        }
        Ok(body)
    }

    fn stmt(&mut self) -> Result<CodeStmt, ParseError> {
        let line = self.current().line;
        let kind = if let Some(ty) = self.peek_type() {
            self.bump();
            let name = self.ident()?;
            let init = if self.eat("=") {
                Some(self.expr()?)
            } else {
                None
            };
            self.expect(";")?;
            StmtKind::Decl { ty, name, init }
        } else if matches!(self.peek(), Tok::Ident(w) if w == "if") {
            self.bump();
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let then_body = self.block()?;
            let else_body = if matches!(self.peek(), Tok::Ident(w) if w == "else") {
                self.bump();
                self.block()?
            } else {
                Vec::new()
            };
            StmtKind::If {
                cond,
                then_body,
                else_body,
            }
        } else if matches!(self.peek(), Tok::Ident(w) if w == "return") {
            self.bump();
            let value = if self.eat(";") {
                None
            } else {
                let e = self.expr()?;
                self.expect(";")?;
                Some(e)
            };
            StmtKind::Return(value)
        } else {
            let target = match self.peek() {
                Tok::Punct("*") => self.deref()?,
                Tok::Ident(_) => CodeExpr::Ident(self.ident()?),
                _ => return Err(self.error(["statement"])),
            };
            self.expect("=")?;
            let value = self.expr()?;
            self.expect(";")?;
            StmtKind::Assign { target, value }
        };
        Ok(CodeStmt { kind, line })
    }

    // `*` `(` type `*` `)` `(` ident `+` intlit `)`
    fn deref(&mut self) -> Result<CodeExpr, ParseError> {
        self.expect("*")?;
        self.expect("(")?;
        let ty = self.ctype()?;
        let cast = DerefCast::from_ctype(ty).ok_or_else(|| {
            self.toks
                .get(self.pos - 1)
                .map(|t| {
                    ParseError::new(
                        t.line,
                        t.column,
                        ["`float`", "`double`", "`int`", "`bool`"],
                        &t.tok.describe(),
                    )
                })
                .expect("type token")
        })?;
        self.expect("*")?;
        self.expect(")")?;
        self.expect("(")?;
        let base = self.ident()?;
        self.expect("+")?;
        let offset = match self.peek() {
            Tok::Int(v) if *v >= 0 => {
                let v = *v as u64;
                self.bump();
                v
            }
            _ => return Err(self.error(["integer offset"])),
        };
        self.expect(")")?;
        Ok(CodeExpr::Deref { base, offset, cast })
    }

    pub(crate) fn expr(&mut self) -> Result<CodeExpr, ParseError> {
        let cond = self.binary(1)?;
        if self.eat("?") {
            let then = self.expr()?;
            self.expect(":")?;
            let els = self.expr()?;
            Ok(CodeExpr::Ternary(
                Box::new(cond),
                Box::new(then),
                Box::new(els),
            ))
        } else {
            Ok(cond)
        }
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let Tok::Punct(p) = self.peek() else {
            return None;
        };
        Some(match *p {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "&&" => BinaryOp::And,
            "||" => BinaryOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<CodeExpr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = CodeExpr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<CodeExpr, ParseError> {
        if self.eat("-") {
            return Ok(CodeExpr::unary(UnaryOp::Neg, self.unary()?));
        }
        if self.eat("!") {
            return Ok(CodeExpr::unary(UnaryOp::Not, self.unary()?));
        }
        if self.eat("+") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<CodeExpr, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(CodeExpr::IntLit(v))
            }
            Tok::Real(v) => {
                self.bump();
                Ok(CodeExpr::RealLit(v))
            }
            Tok::Punct("*") => self.deref(),
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.bump();
                Ok(CodeExpr::IntLit((w == "true") as i64))
            }
            Tok::Ident(w) if !is_keyword(&w) => {
                let start = self.current().clone();
                self.bump();
                if self.eat("(") {
                    let callee = Callee::from_name(&w).ok_or_else(|| {
                        ParseError::new(
                            start.line,
                            start.column,
                            ["supported function"],
                            &format!("`{w}`"),
                        )
                    })?;
                    let mut args = Vec::new();
                    if !self.eat(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(")") {
                                break;
                            }
                            if !self.eat(",") {
                                return Err(self.error(["`,`", "`)`"]));
                            }
                        }
                    }
                    if args.len() != callee.arity() {
                        return Err(ParseError::new(
                            start.line,
                            start.column,
                            [&format!("{} argument(s) to `{w}`", callee.arity())],
                            &format!("{} argument(s)", args.len()),
                        ));
                    }
                    Ok(CodeExpr::Call(callee, args))
                } else {
                    Ok(CodeExpr::Ident(w))
                }
            }
            _ => Err(self.error(["expression"])),
        }
    }
}

fn is_keyword(w: &str) -> bool {
    CType::from_keyword(w).is_some() || matches!(w, "if" | "else" | "return" | "true" | "false")
}
