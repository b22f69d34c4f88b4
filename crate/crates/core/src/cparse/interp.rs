//! Reference interpreter for the supported C subset. All values are `f64`;
//! booleans are 0/1 and any non-zero value is true. Integer division is not
//! modelled separately.

use std::collections::HashMap;

use super::ast::*;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Env {
    pub idents: HashMap<String, f64>,
    /// Component-struct memory keyed by byte offset.
    pub memory: HashMap<u64, f64>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum InterpError {
    #[error("unbound identifier `{0}`")]
    Unbound(String),
    #[error("read of uninitialized offset {0:#x}")]
    Uninitialized(u64),
    #[error("assignment to a non-lvalue")]
    NotLvalue,
}

fn truth(v: f64) -> bool {
    v != 0.0
}

fn from_bool(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn eval_expr(e: &CodeExpr, env: &Env) -> Result<f64, InterpError> {
    Ok(match e {
        CodeExpr::IntLit(v) => *v as f64,
        CodeExpr::RealLit(v) => *v,
        CodeExpr::Ident(n) => *env
            .idents
            .get(n)
            .ok_or_else(|| InterpError::Unbound(n.clone()))?,
        CodeExpr::Deref { offset, .. } => *env
            .memory
            .get(offset)
            .ok_or(InterpError::Uninitialized(*offset))?,
        CodeExpr::Unary(UnaryOp::Neg, x) => -eval_expr(x, env)?,
        CodeExpr::Unary(UnaryOp::Not, x) => from_bool(!truth(eval_expr(x, env)?)),
        CodeExpr::Binary(BinaryOp::And, l, r) => {
            from_bool(truth(eval_expr(l, env)?) && truth(eval_expr(r, env)?))
        }
        CodeExpr::Binary(BinaryOp::Or, l, r) => {
            from_bool(truth(eval_expr(l, env)?) || truth(eval_expr(r, env)?))
        }
        CodeExpr::Binary(op, l, r) => {
            let (a, b) = (eval_expr(l, env)?, eval_expr(r, env)?);
            match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => a / b,
                BinaryOp::Lt => from_bool(a < b),
                BinaryOp::Le => from_bool(a <= b),
                BinaryOp::Gt => from_bool(a > b),
                BinaryOp::Ge => from_bool(a >= b),
                BinaryOp::Eq => from_bool(a == b),
                BinaryOp::Ne => from_bool(a != b),
                BinaryOp::And | BinaryOp::Or => unreachable!(),
            }
        }
        CodeExpr::Ternary(c, t, f) => {
            if truth(eval_expr(c, env)?) {
                eval_expr(t, env)?
            } else {
                eval_expr(f, env)?
            }
        }
        CodeExpr::Call(callee, args) => {
            let vals = args
                .iter()
                .map(|a| eval_expr(a, env))
                .collect::<Result<Vec<_>, _>>()?;
            match callee {
                Callee::Fmin | Callee::Fminf => vals[0].min(vals[1]),
                Callee::Fmax | Callee::Fmaxf => vals[0].max(vals[1]),
                Callee::Fabs | Callee::Fabsf => vals[0].abs(),
                Callee::Clamp => vals[0].max(vals[1]).min(vals[2]),
            }
        }
    })
}

/// Outcome of running a body: `true` if a `return` was hit.
pub fn exec(body: &[CodeStmt], env: &mut Env) -> Result<bool, InterpError> {
    for stmt in body {
        match &stmt.kind {
            StmtKind::Decl { name, init, .. } => {
                if let Some(e) = init {
                    let v = eval_expr(e, env)?;
                    env.idents.insert(name.clone(), v);
                }
            }
            StmtKind::Assign { target, value } => {
                let v = eval_expr(value, env)?;
                match target {
                    CodeExpr::Ident(n) => {
                        env.idents.insert(n.clone(), v);
                    }
                    CodeExpr::Deref { offset, .. } => {
                        env.memory.insert(*offset, v);
                    }
                    _ => return Err(InterpError::NotLvalue),
                }
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let branch = if truth(eval_expr(cond, env)?) {
                    then_body
                } else {
                    else_body
                };
                if exec(branch, env)? {
                    return Ok(true);
                }
            }
            StmtKind::Return(_) => return Ok(true),
        }
    }
    Ok(false)
}
