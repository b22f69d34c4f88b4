//! Locates the step function in a decompiled unit and normalizes the
//! primitives a decompiler distorts:
//!
//! * R1 reciprocal multiply: `e * c` with `c ≈ 1/n` becomes `e / n`;
//! * R2 clamp: `fmin(fmax(e, lo), hi)`, `fmax(fmin(e, hi), lo)` and the
//!   equivalent if/else chain become a single clamp marker;
//! * R3 negated subtract: `-(a - b)` becomes `b - a`.
//!
//! Rules apply innermost-first, left to right, until nothing fires.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::cparse::{
    walk_stmts, BinaryOp, Callee, CodeExpr, CodeStmt, CodeUnit, StmtKind, UnaryOp,
};

pub const RULES_FILE: &str = "rules.toml";
const REWRITE_CAP: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum IsolateError {
    #[error("no function assigns component-struct slots")]
    NoStepFunction,
    #[error("no function named `{0}`")]
    UnknownStepFunction(String),
    #[error("several candidate step functions: {}", .0.join(", "))]
    AmbiguousStepFunction(Vec<String>),
    #[error("step function `{0}` never dereferences a parameter")]
    NoDerefBase(String),
    #[error("step function `{function}` dereferences several bases: {}", bases.join(", "))]
    InconsistentDerefBase {
        function: String,
        bases: Vec<String>,
    },
    #[error("step function `{0}` has no step-size parameter")]
    NoStepParameter(String),
    #[error("rewriting did not converge on the statement at line {0}")]
    DivergingRewrite(u32),
    #[error("invalid rule configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleConfig {
    #[serde(default = "default_tolerance")]
    pub reciprocal_tolerance: f64,
    #[serde(default = "default_max_denominator")]
    pub reciprocal_max_denominator: u32,
    #[serde(default, rename = "step_param")]
    pub step_param_name: Option<String>,
    #[serde(default, rename = "step_function")]
    pub step_function_name: Option<String>,
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_max_denominator() -> u32 {
    1000
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            reciprocal_tolerance: default_tolerance(),
            reciprocal_max_denominator: default_max_denominator(),
            step_param_name: None,
            step_function_name: None,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<(), IsolateError> {
        if self.reciprocal_tolerance.is_nan() || self.reciprocal_tolerance <= 0.0 {
            return Err(IsolateError::InvalidConfig(format!(
                "reciprocal_tolerance must be positive, got {}",
                self.reciprocal_tolerance
            )));
        }
        if self.reciprocal_max_denominator < 2 {
            return Err(IsolateError::InvalidConfig(format!(
                "reciprocal_max_denominator must be at least 2, got {}",
                self.reciprocal_max_denominator
            )));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, IsolateError> {
        let cfg: RuleConfig =
            toml::from_str(text).map_err(|e| IsolateError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `rules.toml` from a container root, or the defaults when absent.
    pub fn load(container_root: &Path) -> Result<Self, IsolateError> {
        let path = container_root.join(RULES_FILE);
        match std::fs::read_to_string(&path) {
            Ok(text) => Self::from_toml(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(IsolateError::InvalidConfig(format!(
                "{}: {e}",
                path.display()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepBody {
    pub function: String,
    pub statements: Vec<CodeStmt>,
    /// Communication step size parameter.
    pub step_symbol: String,
    /// Component-struct pointer every dereference goes through.
    pub base_pointer: String,
    /// Remaining parameters, which are model inputs rather than slots in memory.
    pub params: Vec<String>,
}

fn assigns_deref(body: &[CodeStmt]) -> bool {
    let mut found = false;
    walk_stmts(body, &mut |s| {
        if let StmtKind::Assign {
            target: CodeExpr::Deref { .. },
            ..
        } = &s.kind
        {
            found = true;
        }
    });
    found
}

fn stmt_exprs<'a>(body: &'a [CodeStmt], f: &mut dyn FnMut(&'a CodeExpr)) {
    walk_stmts(body, &mut |s| match &s.kind {
        StmtKind::Decl { init: Some(e), .. } | StmtKind::Return(Some(e)) => f(e),
        StmtKind::Assign { target, value } => {
            f(target);
            f(value);
        }
        StmtKind::If { cond, .. } => f(cond),
        _ => {}
    });
}

pub fn isolate_step_function(unit: &CodeUnit, cfg: &RuleConfig) -> Result<StepBody, IsolateError> {
    cfg.validate()?;
    let function = match &cfg.step_function_name {
        Some(name) => unit
            .function(name)
            .ok_or_else(|| IsolateError::UnknownStepFunction(name.clone()))?,
        None => {
            let candidates: Vec<_> = unit
                .functions
                .iter()
                .filter(|f| assigns_deref(&f.body))
                .collect();
            match candidates.as_slice() {
                [] => return Err(IsolateError::NoStepFunction),
                [f] => *f,
                many => {
                    return Err(IsolateError::AmbiguousStepFunction(
                        many.iter().map(|f| f.name.clone()).collect(),
                    ))
                }
            }
        }
    };

    let mut bases = BTreeSet::new();
    stmt_exprs(&function.body, &mut |e| {
        e.visit(&mut |n| {
            if let CodeExpr::Deref { base, .. } = n {
                bases.insert(base.clone());
            }
        })
    });
    let base_pointer = match bases.len() {
        0 => return Err(IsolateError::NoDerefBase(function.name.clone())),
        1 => bases.into_iter().next().unwrap(),
        _ => {
            return Err(IsolateError::InconsistentDerefBase {
                function: function.name.clone(),
                bases: bases.into_iter().collect(),
            })
        }
    };
    if !function.params.iter().any(|p| p.name == base_pointer) {
        return Err(IsolateError::NoDerefBase(function.name.clone()));
    }

    let step_symbol = match &cfg.step_param_name {
        Some(name) if function.params.iter().any(|p| &p.name == name) => name.clone(),
        Some(_) => return Err(IsolateError::NoStepParameter(function.name.clone())),
        None => function
            .params
            .get(1)
            .filter(|p| p.name != base_pointer)
            .map(|p| p.name.clone())
            .ok_or_else(|| IsolateError::NoStepParameter(function.name.clone()))?,
    };

    Ok(StepBody {
        function: function.name.clone(),
        statements: function.body.clone(),
        params: function
            .params
            .iter()
            .map(|p| p.name.clone())
            .filter(|n| *n != base_pointer && *n != step_symbol)
            .collect(),
        step_symbol,
        base_pointer,
    })
}

pub fn normalize_primitives(body: &StepBody, cfg: &RuleConfig) -> Result<StepBody, IsolateError> {
    cfg.validate()?;
    let rw = Rewriter {
        cfg,
        step: &body.step_symbol,
    };
    let statements = body
        .statements
        .iter()
        .map(|s| rw.normalize_stmt(s))
        .collect::<Result<_, _>>()?;
    Ok(StepBody {
        statements,
        ..body.clone()
    })
}

struct Rewriter<'a> {
    cfg: &'a RuleConfig,
    step: &'a str,
}

impl Rewriter<'_> {
    fn normalize_stmt(&self, stmt: &CodeStmt) -> Result<CodeStmt, IsolateError> {
        let mut current = stmt.clone();
        for _ in 0..REWRITE_CAP {
            let (next, changed) = self.rewrite_stmt(&current);
            if !changed {
                return Ok(next);
            }
            current = next;
        }
        Err(IsolateError::DivergingRewrite(stmt.line))
    }

    fn rewrite_stmt(&self, stmt: &CodeStmt) -> (CodeStmt, bool) {
        let mut changed = false;
        let mut ex = |e: &CodeExpr| {
            let (e, c) = self.rewrite_expr(e);
            changed |= c;
            e
        };
        let kind = match &stmt.kind {
            StmtKind::Decl { ty, name, init } => StmtKind::Decl {
                ty: *ty,
                name: name.clone(),
                init: init.as_ref().map(&mut ex),
            },
            StmtKind::Assign { target, value } => StmtKind::Assign {
                target: target.clone(),
                value: ex(value),
            },
            StmtKind::Return(e) => StmtKind::Return(e.as_ref().map(&mut ex)),
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let cond = ex(cond);
                let mut branch = |b: &[CodeStmt]| -> Vec<CodeStmt> {
                    b.iter()
                        .map(|s| {
                            let (s, c) = self.rewrite_stmt(s);
                            changed |= c;
                            s
                        })
                        .collect()
                };
                let then_body = branch(then_body);
                let else_body = branch(else_body);
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                }
            }
        };
        let out = CodeStmt {
            kind,
            line: stmt.line,
        };
        if let Some(clamped) = clamp_chain(&out) {
            return (clamped, true);
        }
        (out, changed)
    }

    fn rewrite_expr(&self, e: &CodeExpr) -> (CodeExpr, bool) {
        let mut changed = false;
        let mut sub = |x: &CodeExpr| {
            let (x, c) = self.rewrite_expr(x);
            changed |= c;
            Box::new(x)
        };
        let rebuilt = match e {
            CodeExpr::Unary(op, x) => CodeExpr::Unary(*op, sub(x)),
            CodeExpr::Binary(op, l, r) => {
                let l = sub(l);
                CodeExpr::Binary(*op, l, sub(r))
            }
            CodeExpr::Ternary(c, t, f) => {
                let c = sub(c);
                let t = sub(t);
                CodeExpr::Ternary(c, t, sub(f))
            }
            CodeExpr::Call(callee, args) => {
                CodeExpr::Call(*callee, args.iter().map(|a| *sub(a)).collect())
            }
            leaf => leaf.clone(),
        };
        match self.apply_rules(&rebuilt) {
            Some(r) => (r, true),
            None => (rebuilt, changed),
        }
    }

    fn apply_rules(&self, e: &CodeExpr) -> Option<CodeExpr> {
        self.reciprocal(e)
            .or_else(|| clamp_call(e))
            .or_else(|| negated_subtract(e))
    }

    // R1
    fn reciprocal(&self, e: &CodeExpr) -> Option<CodeExpr> {
        let CodeExpr::Binary(BinaryOp::Mul, l, r) = e else {
            return None;
        };
        let (other, c) = match (l.as_ref(), r.as_ref()) {
            (x, CodeExpr::RealLit(c)) => (x, *c),
            (CodeExpr::RealLit(c), x) => (x, *c),
            _ => return None,
        };
        // `h * c` inside an integrator must keep its shape.
        if matches!(other, CodeExpr::Ident(n) if n == self.step) {
            return None;
        }
        let n = reciprocal_denominator(c, self.cfg)?;
        Some(CodeExpr::binary(
            BinaryOp::Div,
            other.clone(),
            CodeExpr::RealLit(n as f64),
        ))
    }
}

/// The integer `n` with `c ≈ 1/n` under the configured tolerance, if any.
pub fn reciprocal_denominator(c: f64, cfg: &RuleConfig) -> Option<u32> {
    let inv = 1.0 / c;
    if !inv.is_finite() {
        return None;
    }
    let n = inv.round();
    if n < 2.0 || n > cfg.reciprocal_max_denominator as f64 {
        return None;
    }
    if (inv - n).abs() <= cfg.reciprocal_tolerance * n.abs() {
        Some(n as u32)
    } else {
        None
    }
}

fn constant_value(e: &CodeExpr) -> Option<f64> {
    match e {
        CodeExpr::RealLit(v) => Some(*v),
        CodeExpr::IntLit(v) => Some(*v as f64),
        CodeExpr::Unary(UnaryOp::Neg, x) => constant_value(x).map(|v| -v),
        _ => None,
    }
}

fn ordered_bounds(lo: &CodeExpr, hi: &CodeExpr) -> bool {
    matches!((constant_value(lo), constant_value(hi)), (Some(a), Some(b)) if a <= b)
}

fn clamp(e: &CodeExpr, lo: &CodeExpr, hi: &CodeExpr) -> CodeExpr {
    CodeExpr::Call(Callee::Clamp, vec![e.clone(), lo.clone(), hi.clone()])
}

// R2, call forms.
fn clamp_call(e: &CodeExpr) -> Option<CodeExpr> {
    let CodeExpr::Call(outer, args) = e else {
        return None;
    };
    let CodeExpr::Call(inner, inner_args) = &args[0] else {
        return None;
    };
    if outer.is_min() && inner.is_max() {
        // fmin(fmax(e, lo), hi) is already the canonical nesting.
        return Some(clamp(&inner_args[0], &inner_args[1], &args[1]));
    }
    if outer.is_max() && inner.is_min() && ordered_bounds(&args[1], &inner_args[1]) {
        return Some(clamp(&inner_args[0], &args[1], &inner_args[1]));
    }
    None
}

// R3
fn negated_subtract(e: &CodeExpr) -> Option<CodeExpr> {
    match e {
        CodeExpr::Unary(UnaryOp::Neg, x) => match x.as_ref() {
            CodeExpr::Binary(BinaryOp::Sub, a, b) => Some(CodeExpr::binary(
                BinaryOp::Sub,
                (**b).clone(),
                (**a).clone(),
            )),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Bound {
    Below,
    Above,
}

/// Matches `e < c`, `c > e` (Below) or `e > c`, `c < e` (Above), non-strict
/// forms included, returning `(e, c)`.
fn bound_test(cond: &CodeExpr) -> Option<(Bound, &CodeExpr, &CodeExpr)> {
    let CodeExpr::Binary(op, l, r) = cond else {
        return None;
    };
    let (kind, e, c) = match op {
        BinaryOp::Lt | BinaryOp::Le if constant_value(r).is_some() => (Bound::Below, l, r),
        BinaryOp::Gt | BinaryOp::Ge if constant_value(l).is_some() => (Bound::Below, r, l),
        BinaryOp::Gt | BinaryOp::Ge if constant_value(r).is_some() => (Bound::Above, l, r),
        BinaryOp::Lt | BinaryOp::Le if constant_value(l).is_some() => (Bound::Above, r, l),
        _ => return None,
    };
    Some((kind, e.as_ref(), c.as_ref()))
}

fn single_assign(body: &[CodeStmt]) -> Option<(&CodeExpr, &CodeExpr)> {
    match body {
        [CodeStmt {
            kind: StmtKind::Assign { target, value },
            ..
        }] => Some((target, value)),
        _ => None,
    }
}

// R2, statement form:
//   if (e < lo) { t = lo; } else { if (e > hi) { t = hi; } else { t = e; } }
// and the variant testing the upper bound first.
fn clamp_chain(stmt: &CodeStmt) -> Option<CodeStmt> {
    let StmtKind::If {
        cond,
        then_body,
        else_body,
    } = &stmt.kind
    else {
        return None;
    };
    let (first, e1, c1) = bound_test(cond)?;
    let (target, v1) = single_assign(then_body)?;
    let [CodeStmt {
        kind:
            StmtKind::If {
                cond: cond2,
                then_body: then2,
                else_body: else2,
            },
        ..
    }] = else_body.as_slice()
    else {
        return None;
    };
    let (second, e2, c2) = bound_test(cond2)?;
    let (target2, v2) = single_assign(then2)?;
    let (target3, v3) = single_assign(else2)?;
    if first == second
        || e1 != e2
        || v3 != e1
        || v1 != c1
        || v2 != c2
        || target != target2
        || target != target3
    {
        return None;
    }
    let (lo, hi) = if first == Bound::Below {
        (c1, c2)
    } else {
        (c2, c1)
    };
    if !ordered_bounds(lo, hi) {
        return None;
    }
    Some(CodeStmt {
        kind: StmtKind::Assign {
            target: target.clone(),
            value: clamp(e1, lo, hi),
        },
        line: stmt.line,
    })
}
