//! Code-level step body to symbolic equation model.
//!
//! Slots are numbered by first occurrence in document order. Chromosome
//! genes are positional over this numbering, so the order is part of the
//! model's contract.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::container::VarType;
use crate::cparse::{BinaryOp, Callee, CodeExpr, CodeStmt, StmtKind};
use crate::expr::{Equation, Expr, SlotId, Value};
use crate::isolate::{RuleConfig, StepBody};

#[derive(Debug, Error, PartialEq)]
pub enum TranslateError {
    #[error("temporary `{0}` is assigned more than once along one path")]
    ReassignedTemporary(String),
    #[error("temporary `{name}` is read on line {line} after an input of its definition was overwritten")]
    UnsafeInline { name: String, line: u32 },
    #[error("line {0}: unsupported control flow")]
    UnsupportedControlFlow(u32),
    #[error("unbound identifier `{0}`")]
    UnboundIdentifier(String),
    #[error("line {line}: step size `{symbol}` used outside an integrator update")]
    StepSymbolOutsideIntegrator { symbol: String, line: u32 },
    #[error("line {line}: `{slot}` already has an equation")]
    DuplicateAssignment { slot: String, line: u32 },
}

/// Where a symbol slot came from in the decompiled code.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SlotOrigin {
    Offset(u64),
    Ident(String),
}

impl fmt::Display for SlotOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotOrigin::Offset(o) => write!(f, "{o:#x}"),
            SlotOrigin::Ident(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SlotType {
    Real,
    Integer,
    Boolean,
    Unknown,
}

impl SlotType {
    pub fn accepts(self, t: VarType) -> bool {
        match self {
            SlotType::Unknown => true,
            SlotType::Real => t == VarType::Real,
            SlotType::Integer => t == VarType::Integer,
            SlotType::Boolean => t == VarType::Boolean,
        }
    }

    pub fn known(self) -> Option<VarType> {
        match self {
            SlotType::Real => Some(VarType::Real),
            SlotType::Integer => Some(VarType::Integer),
            SlotType::Boolean => Some(VarType::Boolean),
            SlotType::Unknown => None,
        }
    }
}

impl From<VarType> for SlotType {
    fn from(t: VarType) -> Self {
        match t {
            VarType::Real => SlotType::Real,
            VarType::Integer => SlotType::Integer,
            VarType::Boolean => SlotType::Boolean,
        }
    }
}

impl fmt::Display for SlotType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.known() {
            Some(t) => t.fmt(f),
            None => f.write_str("Unknown"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolSlot {
    pub id: SlotId,
    pub origin: SlotOrigin,
    pub inferred_type: SlotType,
    pub is_state: bool,
}

impl SymbolSlot {
    /// Placeholder name used in skeleton models, e.g. `sym_0x10`.
    pub fn placeholder(&self) -> String {
        format!("sym_{}", self.origin)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquationModel {
    pub equations: Vec<Equation<SlotId>>,
    pub slots: Vec<SymbolSlot>,
}

impl EquationModel {
    pub fn slot_type(&self, id: SlotId) -> SlotType {
        self.slots[id].inferred_type
    }

    /// Slot ids referenced by equation `eq`, in first-occurrence order.
    pub fn equation_slots(&self, eq: usize) -> Vec<SlotId> {
        let mut out = Vec::new();
        self.equations[eq].for_each_var(&mut |s, _| {
            if !out.contains(s) {
                out.push(*s);
            }
        });
        out
    }
}

/// Longest chain of assignments to `name` along any control path.
fn max_assignments(body: &[CodeStmt], name: &str) -> usize {
    body.iter()
        .map(|s| match &s.kind {
            StmtKind::Decl {
                name: n,
                init: Some(_),
                ..
            } if n == name => 1,
            StmtKind::Assign {
                target: CodeExpr::Ident(n),
                ..
            } if n == name => 1,
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => max_assignments(then_body, name).max(max_assignments(else_body, name)),
            _ => 0,
        })
        .sum()
}

fn declared_locals(body: &[CodeStmt], out: &mut Vec<String>) {
    for s in body {
        match &s.kind {
            StmtKind::Decl { name, .. } if !out.contains(name) => out.push(name.clone()),
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                declared_locals(then_body, out);
                declared_locals(else_body, out);
            }
            _ => {}
        }
    }
}

fn nested_assigns(body: &[CodeStmt], name: &str) -> bool {
    body.iter().any(|s| match &s.kind {
        StmtKind::If {
            then_body,
            else_body,
            ..
        } => max_assignments(then_body, name) + max_assignments(else_body, name) > 0,
        _ => false,
    })
}

fn substitute(e: &CodeExpr, env: &HashMap<String, CodeExpr>) -> CodeExpr {
    let s = |x: &CodeExpr| Box::new(substitute(x, env));
    match e {
        CodeExpr::Ident(n) => env.get(n).cloned().unwrap_or_else(|| e.clone()),
        CodeExpr::Unary(op, x) => CodeExpr::Unary(*op, s(x)),
        CodeExpr::Binary(op, l, r) => CodeExpr::Binary(*op, s(l), s(r)),
        CodeExpr::Ternary(c, t, f) => CodeExpr::Ternary(s(c), s(t), s(f)),
        CodeExpr::Call(c, args) => {
            CodeExpr::Call(*c, args.iter().map(|a| substitute(a, env)).collect())
        }
        leaf => leaf.clone(),
    }
}

fn reads_lvalue(e: &CodeExpr, target: &CodeExpr) -> bool {
    let mut found = false;
    e.visit(&mut |n| {
        found |= match (n, target) {
            (CodeExpr::Ident(a), CodeExpr::Ident(b)) => a == b,
            (CodeExpr::Deref { offset: a, .. }, CodeExpr::Deref { offset: b, .. }) => a == b,
            _ => false,
        };
    });
    found
}

struct Inliner {
    temps: HashSet<String>,
    env: HashMap<String, CodeExpr>,
    // Temporaries whose defining expression reads a since-overwritten lvalue.
    stale: HashSet<String>,
}

impl Inliner {
    fn expr(&self, e: &CodeExpr, line: u32) -> Result<CodeExpr, TranslateError> {
        let mut stale_use = None;
        e.visit(&mut |n| {
            if let CodeExpr::Ident(name) = n {
                if self.stale.contains(name) {
                    stale_use.get_or_insert_with(|| name.clone());
                }
            }
        });
        if let Some(name) = stale_use {
            return Err(TranslateError::UnsafeInline { name, line });
        }
        Ok(substitute(e, &self.env))
    }

    fn wrote(&mut self, target: &CodeExpr) {
        for (name, def) in &self.env {
            if reads_lvalue(def, target) {
                self.stale.insert(name.clone());
            }
        }
    }

    fn body(
        &mut self,
        body: &[CodeStmt],
        top_level: bool,
    ) -> Result<Vec<CodeStmt>, TranslateError> {
        let mut out = Vec::with_capacity(body.len());
        for stmt in body {
            let line = stmt.line;
            match &stmt.kind {
                StmtKind::Decl { name, init, ty } => {
                    if self.temps.contains(name) {
                        if let Some(e) = init {
                            let e = self.expr(e, line)?;
                            self.env.insert(name.clone(), e);
                        }
                        continue;
                    }
                    let init = init.as_ref().map(|e| self.expr(e, line)).transpose()?;
                    out.push(CodeStmt {
                        kind: StmtKind::Decl {
                            ty: *ty,
                            name: name.clone(),
                            init,
                        },
                        line,
                    });
                }
                StmtKind::Assign { target, value } => {
                    let value = self.expr(value, line)?;
                    if let CodeExpr::Ident(name) = target {
                        if top_level && self.temps.contains(name) {
                            self.wrote(target);
                            self.env.insert(name.clone(), value);
                            continue;
                        }
                    }
                    self.wrote(target);
                    out.push(CodeStmt {
                        kind: StmtKind::Assign {
                            target: target.clone(),
                            value,
                        },
                        line,
                    });
                }
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    let cond = self.expr(cond, line)?;
                    let then_body = self.body(then_body, false)?;
                    let else_body = self.body(else_body, false)?;
                    out.push(CodeStmt {
                        kind: StmtKind::If {
                            cond,
                            then_body,
                            else_body,
                        },
                        line,
                    });
                }
                StmtKind::Return(e) => {
                    let e = e.as_ref().map(|e| self.expr(e, line)).transpose()?;
                    out.push(CodeStmt {
                        kind: StmtKind::Return(e),
                        line,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Inlines every declared local with exactly one top-level assignment.
/// Locals assigned inside `if` branches survive and later become slots.
pub fn eliminate_temporaries(body: &StepBody) -> Result<StepBody, TranslateError> {
    let mut locals = Vec::new();
    declared_locals(&body.statements, &mut locals);
    let mut temps = HashSet::new();
    for name in &locals {
        match max_assignments(&body.statements, name) {
            0 => {}
            1 if !nested_assigns(&body.statements, name) => {
                temps.insert(name.clone());
            }
            1 => {}
            _ => return Err(TranslateError::ReassignedTemporary(name.clone())),
        }
    }
    let mut inliner = Inliner {
        temps,
        env: HashMap::new(),
        stale: HashSet::new(),
    };
    let statements = inliner.body(&body.statements, true)?;
    Ok(StepBody {
        statements,
        ..body.clone()
    })
}

struct Translator<'a> {
    body: &'a StepBody,
    locals: HashSet<String>,
    slots: Vec<SymbolSlot>,
    by_origin: HashMap<SlotOrigin, SlotId>,
    equations: Vec<Equation<SlotId>>,
    defined: HashSet<SlotId>,
}

impl Translator<'_> {
    fn slot(&mut self, origin: SlotOrigin) -> SlotId {
        if let Some(&id) = self.by_origin.get(&origin) {
            return id;
        }
        let id = self.slots.len();
        self.slots.push(SymbolSlot {
            id,
            origin: origin.clone(),
            inferred_type: SlotType::Unknown,
            is_state: false,
        });
        self.by_origin.insert(origin, id);
        id
    }

    fn lvalue(&mut self, target: &CodeExpr, line: u32) -> Result<SlotId, TranslateError> {
        match target {
            CodeExpr::Deref { offset, .. } => Ok(self.slot(SlotOrigin::Offset(*offset))),
            CodeExpr::Ident(name) => self.ident(name, line),
            _ => Err(TranslateError::UnsupportedControlFlow(line)),
        }
    }

    fn ident(&mut self, name: &str, line: u32) -> Result<SlotId, TranslateError> {
        if name == self.body.step_symbol {
            return Err(TranslateError::StepSymbolOutsideIntegrator {
                symbol: name.to_string(),
                line,
            });
        }
        if self.locals.contains(name) || self.body.params.iter().any(|p| p == name) {
            Ok(self.slot(SlotOrigin::Ident(name.to_string())))
        } else {
            Err(TranslateError::UnboundIdentifier(name.to_string()))
        }
    }

    fn expr(&mut self, e: &CodeExpr, line: u32) -> Result<Expr<SlotId>, TranslateError> {
        let b = |x: &CodeExpr, t: &mut Self| t.expr(x, line).map(Box::new);
        Ok(match e {
            CodeExpr::IntLit(v) => Expr::Const(Value::Integer(*v)),
            CodeExpr::RealLit(v) => Expr::Const(Value::Real(*v)),
            CodeExpr::Ident(name) => Expr::Var(self.ident(name, line)?),
            CodeExpr::Deref { offset, .. } => Expr::Var(self.slot(SlotOrigin::Offset(*offset))),
            CodeExpr::Unary(op, x) => Expr::Unary(*op, b(x, self)?),
            CodeExpr::Binary(op, l, r) => {
                let l = b(l, self)?;
                Expr::Binary(*op, l, b(r, self)?)
            }
            CodeExpr::Ternary(c, t, f) => {
                let c = b(c, self)?;
                let t = b(t, self)?;
                Expr::If(c, t, b(f, self)?)
            }
            CodeExpr::Call(callee, args) => {
                let mut a = Vec::with_capacity(args.len());
                for x in args {
                    a.push(b(x, self)?);
                }
                let mut a = a.into_iter();
                let mut next = || a.next().expect("arity checked by the parser");
                match callee {
                    Callee::Fmin | Callee::Fminf => {
                        let l = next();
                        Expr::Min(l, next())
                    }
                    Callee::Fmax | Callee::Fmaxf => {
                        let l = next();
                        Expr::Max(l, next())
                    }
                    Callee::Fabs | Callee::Fabsf => Expr::Abs(next()),
                    Callee::Clamp => {
                        let (x, lo, hi) = (next(), next(), next());
                        Expr::Min(Box::new(Expr::Max(x, lo)), hi)
                    }
                }
            }
        })
    }

    /// `x + h * E` or `x + E * h` with `x` the target, yielding `E`.
    fn integrand<'e>(&self, target: &CodeExpr, value: &'e CodeExpr) -> Option<&'e CodeExpr> {
        let CodeExpr::Binary(BinaryOp::Add, x, prod) = value else {
            return None;
        };
        if !same_lvalue(x, target) {
            return None;
        }
        let CodeExpr::Binary(BinaryOp::Mul, a, b) = prod.as_ref() else {
            return None;
        };
        let h = &self.body.step_symbol;
        let is_h = |e: &CodeExpr| matches!(e, CodeExpr::Ident(n) if n == h);
        match (is_h(a), is_h(b)) {
            (true, false) if !b.mentions_ident(h) => Some(b),
            (false, true) if !a.mentions_ident(h) => Some(a),
            _ => None,
        }
    }

    fn define(&mut self, slot: SlotId, line: u32) -> Result<(), TranslateError> {
        if !self.defined.insert(slot) {
            return Err(TranslateError::DuplicateAssignment {
                slot: self.slots[slot].origin.to_string(),
                line,
            });
        }
        Ok(())
    }

    fn assign(
        &mut self,
        target: &CodeExpr,
        value: &CodeExpr,
        line: u32,
    ) -> Result<(), TranslateError> {
        let slot = self.lvalue(target, line)?;
        if let Some(integrand) = self.integrand(target, value) {
            // Register the target's read occurrence before the integrand.
            self.define(slot, line)?;
            let rhs = self.expr(integrand, line)?;
            self.slots[slot].is_state = true;
            self.equations.push(Equation::new(Expr::Der(slot), rhs));
        } else {
            self.define(slot, line)?;
            let rhs = self.expr(value, line)?;
            self.equations.push(Equation::new(Expr::Var(slot), rhs));
        }
        Ok(())
    }

    /// Resolves a branch to `(target, value)`: a single assignment, or a
    /// nested `if` whose branches assign the same target.
    fn branch(
        &mut self,
        body: &[CodeStmt],
        line: u32,
    ) -> Result<(CodeExpr, Expr<SlotId>), TranslateError> {
        match body {
            [CodeStmt {
                kind: StmtKind::Assign { target, value },
                line,
            }] => {
                self.lvalue(target, *line)?;
                if self.integrand(target, value).is_some() {
                    return Err(TranslateError::UnsupportedControlFlow(*line));
                }
                Ok((target.clone(), self.expr(value, *line)?))
            }
            [CodeStmt {
                kind:
                    StmtKind::If {
                        cond,
                        then_body,
                        else_body,
                    },
                line,
            }] => self.conditional(cond, then_body, else_body, *line),
            _ => Err(TranslateError::UnsupportedControlFlow(line)),
        }
    }

    fn conditional(
        &mut self,
        cond: &CodeExpr,
        then_body: &[CodeStmt],
        else_body: &[CodeStmt],
        line: u32,
    ) -> Result<(CodeExpr, Expr<SlotId>), TranslateError> {
        let c = self.expr(cond, line)?;
        let (t1, v1) = self.branch(then_body, line)?;
        let (t2, v2) = self.branch(else_body, line)?;
        if !same_lvalue(&t1, &t2) {
            return Err(TranslateError::UnsupportedControlFlow(line));
        }
        Ok((t1, Expr::if_then_else(c, v1, v2)))
    }

    fn stmts(&mut self, body: &[CodeStmt]) -> Result<(), TranslateError> {
        for (i, stmt) in body.iter().enumerate() {
            let line = stmt.line;
            match &stmt.kind {
                StmtKind::Decl { init: None, .. } => {}
                StmtKind::Decl {
                    name,
                    init: Some(e),
                    ..
                } => {
                    self.assign(&CodeExpr::Ident(name.clone()), e, line)?;
                }
                StmtKind::Assign { target, value } => self.assign(target, value, line)?,
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                } => {
                    let (target, value) = self.conditional(cond, then_body, else_body, line)?;
                    let slot = self.lvalue(&target, line)?;
                    self.define(slot, line)?;
                    self.equations.push(Equation::new(Expr::Var(slot), value));
                }
                StmtKind::Return(value) => {
                    let trivial = matches!(
                        value,
                        None | Some(CodeExpr::IntLit(_)) | Some(CodeExpr::RealLit(_))
                    );
                    if !trivial || i + 1 != body.len() {
                        return Err(TranslateError::UnsupportedControlFlow(line));
                    }
                }
            }
        }
        Ok(())
    }
}

fn same_lvalue(a: &CodeExpr, b: &CodeExpr) -> bool {
    match (a, b) {
        (CodeExpr::Ident(x), CodeExpr::Ident(y)) => x == y,
        (CodeExpr::Deref { offset: x, .. }, CodeExpr::Deref { offset: y, .. }) => x == y,
        _ => false,
    }
}

pub fn translate_to_equations(
    body: &StepBody,
    _cfg: &RuleConfig,
) -> Result<EquationModel, TranslateError> {
    let mut locals = Vec::new();
    declared_locals(&body.statements, &mut locals);
    let mut t = Translator {
        body,
        locals: locals.into_iter().collect(),
        slots: Vec::new(),
        by_origin: HashMap::new(),
        equations: Vec::new(),
        defined: HashSet::new(),
    };
    t.stmts(&body.statements)?;
    Ok(EquationModel {
        equations: t.equations,
        slots: t.slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cparse::{parse_c_stmts, print_stmts};

    fn body(src: &str) -> StepBody {
        StepBody {
            function: "step".into(),
            statements: parse_c_stmts(src).unwrap(),
            step_symbol: "h".into(),
            base_pointer: "p".into(),
            params: vec![],
        }
    }

    fn translate(src: &str) -> Result<EquationModel, TranslateError> {
        let b = eliminate_temporaries(&body(src))?;
        translate_to_equations(&b, &RuleConfig::default())
    }

    #[test]
    fn single_use_inline() {
        let b = eliminate_temporaries(&body("double t = a*b; y = t + c;")).unwrap();
        assert_eq!(print_stmts(&b.statements, 0), "y = a * b + c;\n");
    }

    #[test]
    fn reassigned_temporary() {
        assert_eq!(
            eliminate_temporaries(&body("double t = a; t = b; y = t;")),
            Err(TranslateError::ReassignedTemporary("t".into()))
        );
        assert_eq!(
            eliminate_temporaries(&body(
                "double t; t = a; if (c) { t = b; } else { y = 1.0; } y = t;"
            )),
            Err(TranslateError::ReassignedTemporary("t".into()))
        );
    }

    #[test]
    fn no_locals_is_identity() {
        let b = body("y = a + b; *(double *)(p + 0x8) = y;");
        assert_eq!(eliminate_temporaries(&b).unwrap(), b);
    }

    #[test]
    fn branch_assigned_local_survives() {
        let b = eliminate_temporaries(&body("double t; if (c) { t = a; } else { t = b; } y = t;"))
            .unwrap();
        assert_eq!(b.statements.len(), 3);
    }

    #[test]
    fn stale_inline_rejected() {
        let err = eliminate_temporaries(&body(
            "double t = *(double *)(p + 0x8);\n*(double *)(p + 0x8) = 1.0;\ny = t;",
        ))
        .unwrap_err();
        assert_eq!(
            err,
            TranslateError::UnsafeInline {
                name: "t".into(),
                line: 3
            }
        );
        // Reading in the same statement that overwrites is fine.
        assert!(eliminate_temporaries(&body(
            "double t = *(double *)(p + 0x8); *(double *)(p + 0x8) = t + h * 2.0;"
        ))
        .is_ok());
    }

    #[test]
    fn integrator_becomes_derivative() {
        let m =
            translate("*(double *)(p + 0x10) = *(double *)(p + 0x10) + h * *(double *)(p + 0x18);")
                .unwrap();
        assert_eq!(m.equations, vec![Equation::new(Expr::Der(0), Expr::Var(1))]);
        assert_eq!(m.slots[0].origin, SlotOrigin::Offset(0x10));
        assert_eq!(m.slots[1].origin, SlotOrigin::Offset(0x18));
        assert!(m.slots[0].is_state);
        assert!(!m.slots[1].is_state);

        let m =
            translate("*(double *)(p + 0x10) = *(double *)(p + 0x10) + (k * e) * h;").unwrap_err();
        assert_eq!(m, TranslateError::UnboundIdentifier("k".into()));
    }

    #[test]
    fn guarded_assignment_becomes_if() {
        let src = "bool c; double y; double a; double b; if (c) { y = a; } else { y = b; }";
        let m = translate(src);
        // Locals without any assignment are unbound inputs here; use params instead.
        assert!(m.is_ok());
        let m = m.unwrap();
        assert_eq!(
            m.equations,
            vec![Equation::new(
                Expr::Var(1),
                Expr::if_then_else(Expr::Var(0), Expr::Var(2), Expr::Var(3))
            )]
        );
        let names: Vec<_> = m.slots.iter().map(|s| s.placeholder()).collect();
        assert_eq!(names, ["sym_c", "sym_y", "sym_a", "sym_b"]);
    }

    #[test]
    fn mismatched_branches_rejected() {
        let src = "double y; double z; double a; if (a > 0.0) { y = a; } else { z = a; }";
        assert_eq!(
            translate(src),
            Err(TranslateError::UnsupportedControlFlow(1))
        );
        let src = "double y; double a; if (a > 0.0) { y = a; }";
        assert_eq!(
            translate(src),
            Err(TranslateError::UnsupportedControlFlow(1))
        );
    }

    #[test]
    fn unbound_and_step_misuse() {
        assert_eq!(
            translate("y = q;"),
            Err(TranslateError::UnboundIdentifier("y".into()))
        );
        assert_eq!(
            translate("*(double *)(p + 8) = h * 2.0;"),
            Err(TranslateError::StepSymbolOutsideIntegrator {
                symbol: "h".into(),
                line: 1
            })
        );
    }

    #[test]
    fn clamp_marker_lowers_to_min_max() {
        let mut b = body("*(double *)(p + 8) = *(double *)(p + 16);");
        if let StmtKind::Assign { value, .. } = &mut b.statements[0].kind {
            *value = CodeExpr::Call(
                Callee::Clamp,
                vec![
                    value.clone(),
                    CodeExpr::RealLit(-1.0),
                    CodeExpr::RealLit(1.0),
                ],
            );
        }
        let m = translate_to_equations(&b, &RuleConfig::default()).unwrap();
        assert_eq!(
            m.equations[0].rhs,
            Expr::Min(
                Box::new(Expr::Max(
                    Box::new(Expr::Var(1)),
                    Box::new(Expr::real(-1.0))
                )),
                Box::new(Expr::real(1.0))
            )
        );
    }

    #[test]
    fn duplicate_assignment_rejected() {
        assert!(matches!(
            translate("*(double *)(p + 8) = 1.0; *(double *)(p + 8) = 2.0;"),
            Err(TranslateError::DuplicateAssignment { .. })
        ));
    }

    #[test]
    fn slot_numbering_follows_document_order() {
        let m = translate(
            "*(double *)(p + 0x30) = *(double *)(p + 0x20) * *(double *)(p + 0x10);\n*(double *)(p + 0x10) = *(double *)(p + 0x30) - *(double *)(p + 0x08);",
        )
        .unwrap();
        let offsets: Vec<_> = m.slots.iter().map(|s| s.origin.clone()).collect();
        assert_eq!(
            offsets,
            [0x30, 0x20, 0x10, 0x08].map(SlotOrigin::Offset).to_vec()
        );
    }
}
