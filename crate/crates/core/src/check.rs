//! Slot type inference, variable classification and the validity
//! constraints C0..C4 on symbol-to-variable assignments.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::container::{Causality, VarType, VariableTable};
use crate::expr::{Equation, Expr, SlotId, UnaryOp, Value};
use crate::ga::Chromosome;
use crate::translate::{EquationModel, SlotType};

#[derive(Debug, Error, PartialEq)]
pub enum CheckError {
    #[error("slot {slot} is required to be both {}", fmt_demands(.demands))]
    TypeConflict { slot: SlotId, demands: Vec<VarType> },
    #[error("equation {equation} combines Boolean and Real subexpressions")]
    ExpressionTypeConflict { equation: usize },
}

fn fmt_demands(d: &[VarType]) -> String {
    d.iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(" and ")
}

/// Type of a subexpression during inference.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Ty {
    Known(VarType),
    Class(SlotId),
    /// Integer literal: fits any numeric context without demanding one.
    Free,
}

struct Inference {
    parent: Vec<SlotId>,
    demands: Vec<BTreeSet<VarType>>,
    equation: usize,
    expr_conflict: Option<usize>,
}

impl Inference {
    fn find(&mut self, s: SlotId) -> SlotId {
        let p = self.parent[s];
        if p == s {
            return s;
        }
        let r = self.find(p);
        self.parent[s] = r;
        r
    }

    fn union(&mut self, a: SlotId, b: SlotId) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            let (lo, hi) = (a.min(b), a.max(b));
            self.parent[hi] = lo;
            let moved = std::mem::take(&mut self.demands[hi]);
            self.demands[lo].extend(moved);
        }
    }

    fn demand(&mut self, t: Ty, want: VarType) {
        match t {
            Ty::Class(s) => {
                let r = self.find(s);
                self.demands[r].insert(want);
            }
            Ty::Known(k) if k != want => {
                self.expr_conflict.get_or_insert(self.equation);
            }
            _ => {}
        }
    }

    fn unify(&mut self, a: Ty, b: Ty) -> Ty {
        match (a, b) {
            (Ty::Class(x), Ty::Class(y)) => {
                self.union(x, y);
                Ty::Class(x)
            }
            (Ty::Class(_), Ty::Known(k)) => {
                self.demand(a, k);
                a
            }
            (Ty::Known(k), Ty::Class(_)) => {
                self.demand(b, k);
                b
            }
            (Ty::Known(x), Ty::Known(y)) => {
                if x != y {
                    self.expr_conflict.get_or_insert(self.equation);
                }
                a
            }
            (Ty::Free, other) | (other, Ty::Free) => other,
        }
    }

    fn expr(&mut self, e: &Expr<SlotId>) -> Ty {
        match e {
            Expr::Const(Value::Real(_)) => Ty::Known(VarType::Real),
            Expr::Const(Value::Boolean(_)) => Ty::Known(VarType::Boolean),
            Expr::Const(Value::Integer(_)) => Ty::Free,
            Expr::Var(s) => Ty::Class(*s),
            Expr::Der(s) => {
                self.demand(Ty::Class(*s), VarType::Real);
                Ty::Known(VarType::Real)
            }
            Expr::Unary(UnaryOp::Neg, x) | Expr::Abs(x) => {
                let t = self.expr(x);
                self.demand(t, VarType::Real);
                Ty::Known(VarType::Real)
            }
            Expr::Unary(UnaryOp::Not, x) => {
                let t = self.expr(x);
                self.demand(t, VarType::Boolean);
                Ty::Known(VarType::Boolean)
            }
            Expr::Min(l, r) | Expr::Max(l, r) => {
                for x in [l, r] {
                    let t = self.expr(x);
                    self.demand(t, VarType::Real);
                }
                Ty::Known(VarType::Real)
            }
            Expr::Binary(op, l, r) => {
                let (lt, rt) = (self.expr(l), self.expr(r));
                if op.is_arithmetic() {
                    self.demand(lt, VarType::Real);
                    self.demand(rt, VarType::Real);
                    Ty::Known(VarType::Real)
                } else if op.is_logical() {
                    self.demand(lt, VarType::Boolean);
                    self.demand(rt, VarType::Boolean);
                    Ty::Known(VarType::Boolean)
                } else {
                    self.unify(lt, rt);
                    Ty::Known(VarType::Boolean)
                }
            }
            Expr::If(c, t, f) => {
                let ct = self.expr(c);
                self.demand(ct, VarType::Boolean);
                let (tt, ft) = (self.expr(t), self.expr(f));
                self.unify(tt, ft)
            }
        }
    }
}

/// Fills each slot's `inferred_type` from the contexts it occurs in.
pub fn infer_symbol_types(m: &EquationModel) -> Result<EquationModel, CheckError> {
    let n = m.slots.len();
    let mut inf = Inference {
        parent: (0..n).collect(),
        demands: vec![BTreeSet::new(); n],
        equation: 0,
        expr_conflict: None,
    };
    for (i, eq) in m.equations.iter().enumerate() {
        inf.equation = i;
        let l = inf.expr(&eq.lhs);
        let r = inf.expr(&eq.rhs);
        inf.unify(l, r);
    }
    let mut out = m.clone();
    for s in 0..n {
        let root = inf.find(s);
        let d = &inf.demands[root];
        out.slots[s].inferred_type = match d.len() {
            0 => SlotType::Unknown,
            1 => SlotType::from(*d.iter().next().unwrap()),
            _ => {
                return Err(CheckError::TypeConflict {
                    slot: s,
                    demands: d.iter().copied().collect(),
                })
            }
        };
    }
    if let Some(equation) = inf.expr_conflict {
        return Err(CheckError::ExpressionTypeConflict { equation });
    }
    Ok(out)
}

/// Variable positions grouped by causality, each in table order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VariablePartition {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub parameters: Vec<usize>,
    pub locals: Vec<usize>,
}

impl VariablePartition {
    /// Variables the equation system must determine.
    pub fn unknowns(&self) -> Vec<usize> {
        merge(&self.outputs, &self.locals)
    }

    pub fn knowns(&self) -> Vec<usize> {
        merge(&self.inputs, &self.parameters)
    }

    pub fn interface(&self) -> Vec<usize> {
        merge(&self.inputs, &self.outputs)
    }
}

fn merge(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v
}

pub fn classify_variables(vars: &VariableTable) -> VariablePartition {
    let mut p = VariablePartition::default();
    for (i, v) in vars.iter().enumerate() {
        match v.causality {
            Causality::Input => p.inputs.push(i),
            Causality::Output => p.outputs.push(i),
            Causality::Parameter => p.parameters.push(i),
            Causality::Local => p.locals.push(i),
        }
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ConstraintId {
    C0,
    C1,
    C2,
    C3,
    C4,
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub constraint: ConstraintId,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, c: ConstraintId) -> bool {
        self.violations.iter().any(|v| v.constraint == c)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return writeln!(f, "valid");
        }
        writeln!(f, "invalid: {} violation(s)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.constraint, v.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckConfig {
    /// Treat `Unknown` slot types as mismatching every variable.
    pub strict_unknown_types: bool,
}

pub fn validate_assignment(
    m: &EquationModel,
    vars: &VariableTable,
    c: &Chromosome,
) -> ValidationReport {
    validate_assignment_with(m, vars, c, CheckConfig::default())
}

pub fn validate_assignment_with(
    m: &EquationModel,
    vars: &VariableTable,
    c: &Chromosome,
    cfg: CheckConfig,
) -> ValidationReport {
    let genes = &c.genes;
    let mut violations = Vec::new();
    let mut push = |constraint, detail: String| violations.push(Violation { constraint, detail });

    if genes.len() != m.slots.len() {
        push(
            ConstraintId::C0,
            format!(
                "chromosome has {} genes for {} slots",
                genes.len(),
                m.slots.len()
            ),
        );
    }
    let in_range = |g: usize| g < vars.len();
    for (pos, &g) in genes.iter().enumerate() {
        if !in_range(g) {
            push(
                ConstraintId::C0,
                format!("gene {pos} = {g} is not a variable index"),
            );
        }
    }
    // C0
    let mut seen = BTreeSet::new();
    let mut reported = BTreeSet::new();
    for &g in genes {
        if !seen.insert(g) && in_range(g) && reported.insert(g) {
            push(
                ConstraintId::C0,
                format!(
                    "variable `{}` is assigned to more than one slot",
                    vars[g].name
                ),
            );
        }
    }
    // C1
    for (slot, &g) in genes
        .iter()
        .enumerate()
        .filter(|(s, &g)| *s < m.slots.len() && in_range(g))
    {
        let st = m.slots[slot].inferred_type;
        let v = &vars[g];
        let ok = if st == SlotType::Unknown {
            !cfg.strict_unknown_types
        } else {
            st.accepts(v.vtype)
        };
        if !ok {
            push(
                ConstraintId::C1,
                format!("{} variable `{}` on {st} slot {slot}", v.vtype, v.name),
            );
        }
    }
    let is_unknown = |slot: SlotId| {
        genes
            .get(slot)
            .filter(|&&g| in_range(g))
            .is_some_and(|&g| vars[g].causality.is_unknown())
    };
    // C2
    for (i, eq) in m.equations.iter().enumerate() {
        if !equation_slots(eq).into_iter().any(is_unknown) {
            push(ConstraintId::C2, format!("equation {i} has no unknown"));
        }
    }
    // C3
    let unknowns: BTreeSet<usize> = (0..m.slots.len())
        .filter(|&s| is_unknown(s))
        .map(|s| genes[s])
        .collect();
    if unknowns.len() != m.equations.len() {
        push(
            ConstraintId::C3,
            format!(
                "{} unknowns for {} equations",
                unknowns.len(),
                m.equations.len()
            ),
        );
    }
    // C4
    let image: BTreeSet<usize> = genes.iter().copied().collect();
    for i in classify_variables(vars).interface() {
        if !image.contains(&i) {
            push(
                ConstraintId::C4,
                format!("{} `{}` is not used", vars[i].causality, vars[i].name),
            );
        }
    }

    ValidationReport {
        valid: violations.is_empty(),
        violations,
    }
}

fn equation_slots(eq: &Equation<SlotId>) -> Vec<SlotId> {
    let mut v = Vec::new();
    eq.for_each_var(&mut |s, _| v.push(*s));
    v
}
