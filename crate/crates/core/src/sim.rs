//! Causalization and fixed-step simulation of bound models.
//!
//! The simulator is deliberately strict: it re-checks injectivity, types,
//! interface coverage and balance on its own instead of trusting the
//! validator, so a model that breaks any validity rule cannot produce a
//! finite fitness.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::container::{Trace, VarType, VariableTable};
use crate::expr::{BinaryOp, Equation, Expr, UnaryOp, Value};
use crate::model::BoundModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("{equations} equations for {unknowns} unknowns")]
    UnbalancedSystem { equations: usize, unknowns: usize },
    #[error("structurally singular system")]
    StructurallySingular,
    #[error("algebraic loop through {}", .0.join(", "))]
    AlgebraicLoop(Vec<String>),
    #[error("equation {0} cannot be solved for its matched unknown")]
    NotIsolatable(usize),
    #[error("`{variable}` occurs more than once in equation {equation}")]
    MultipleOccurrence { variable: String, equation: usize },
    #[error("variable `{0}` is bound to more than one slot")]
    DuplicateBinding(String),
    #[error("equation {equation}: {detail}")]
    TypeMismatch { equation: usize, detail: String },
    #[error("`{0}` is not in the variable table")]
    UnknownVariable(String),
    #[error("interface variable `{0}` does not occur in any equation")]
    UnusedInterface(String),
    #[error("der() applied to `{0}`, which is not an unknown")]
    DerivativeOfKnown(String),
    #[error("equation {0}: der() may only stand alone on the left-hand side")]
    MisplacedDerivative(usize),
    #[error("division by zero at t={t} in equation {equation}")]
    DivisionByZero { t: f64, equation: usize },
    #[error("non-finite value for `{name}` at t={t}")]
    NonFiniteValue { t: f64, name: String },
    #[error("input trace has no column `{0}`")]
    MissingInput(String),
    #[error("`{0}` is not computed by the model")]
    UnknownOutput(String),
    #[error("trace time grid is not uniform")]
    NonUniformGrid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateEquation {
    pub equation: usize,
    pub name: String,
    pub start: f64,
    pub rhs: Expr<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraicStep {
    pub equation: usize,
    pub name: String,
    pub expr: Expr<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimPlan {
    pub state_vars: Vec<StateEquation>,
    /// Topologically ordered: each step reads only inputs, parameters,
    /// states and earlier steps.
    pub algebraic_order: Vec<AlgebraicStep>,
    pub param_env: BTreeMap<String, f64>,
    pub input_names: BTreeSet<String>,
    pub warnings: Vec<String>,
    /// Every division introduced by solving an equation is by a nonzero
    /// parameter expression.
    pub division_safe: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsolationError {
    Absent,
    MultipleOccurrence,
    NotIsolatable,
}

/// Solves `eq` for `v` by inverting `+ - * /` and negation along the path
/// from the equation root to the single occurrence of `v`.
pub fn isolate<V: PartialEq + Clone>(eq: &Equation<V>, v: &V) -> Result<Expr<V>, IsolationError> {
    isolate_with_divisors(eq, v).map(|(e, _)| e)
}

/// Like [`isolate`], also returning every expression the solution divides
/// by that was not already a divisor in the equation.
pub fn isolate_with_divisors<V: PartialEq + Clone>(
    eq: &Equation<V>,
    v: &V,
) -> Result<(Expr<V>, Vec<Expr<V>>), IsolationError> {
    match eq.count_var(v) {
        0 => return Err(IsolationError::Absent),
        1 => {}
        _ => return Err(IsolationError::MultipleOccurrence),
    }
    let mut divisors = Vec::new();
    let solved = if eq.lhs.mentions(v) {
        invert(&eq.lhs, eq.rhs.clone(), v, &mut divisors)
    } else {
        invert(&eq.rhs, eq.lhs.clone(), v, &mut divisors)
    }?;
    Ok((solved, divisors))
}

fn invert<V: PartialEq + Clone>(
    side: &Expr<V>,
    target: Expr<V>,
    v: &V,
    divisors: &mut Vec<Expr<V>>,
) -> Result<Expr<V>, IsolationError> {
    use BinaryOp::*;
    match side {
        Expr::Var(w) if w == v => Ok(target),
        Expr::Unary(UnaryOp::Neg, x) => invert(x, Expr::unary(UnaryOp::Neg, target), v, divisors),
        Expr::Binary(op @ (Add | Sub | Mul | Div), l, r) => {
            let (l, r) = (l.as_ref(), r.as_ref());
            if l.mentions(v) {
                let t = match op {
                    Add => Expr::binary(Sub, target, r.clone()),
                    Sub => Expr::binary(Add, target, r.clone()),
                    Mul => {
                        divisors.push(r.clone());
                        Expr::binary(Div, target, r.clone())
                    }
                    _ => Expr::binary(Mul, target, r.clone()),
                };
                invert(l, t, v, divisors)
            } else {
                let t = match op {
                    Add => Expr::binary(Sub, target, l.clone()),
                    Sub => Expr::binary(Sub, l.clone(), target),
                    Mul => {
                        divisors.push(l.clone());
                        Expr::binary(Div, target, l.clone())
                    }
                    _ => {
                        divisors.push(target.clone());
                        Expr::binary(Div, l.clone(), target)
                    }
                };
                invert(r, t, v, divisors)
            }
        }
        _ => Err(IsolationError::NotIsolatable),
    }
}

/// Value of an expression built only from constants and parameters, or
/// `None` if it reads anything else or divides by zero.
fn parameter_value(e: &Expr<String>, params: &BTreeMap<String, f64>) -> Option<f64> {
    let mut names = Vec::new();
    let mut ok = true;
    e.for_each_var(&mut |v, der| {
        if der || !params.contains_key(v) {
            ok = false;
        }
        names.push(v.clone());
    });
    if !ok {
        return None;
    }
    names.sort();
    names.dedup();
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let vals: Vec<f64> = names.iter().map(|n| params[n]).collect();
    eval(&e.map_vars(&mut |v| index[v.as_str()]), &vals).ok()
}

/// Declared-type view used for the simulator's own type check. Integer
/// literals fit any numeric position.
#[derive(Clone, Copy, Debug, PartialEq)]
enum STy {
    Of(VarType),
    IntLit,
}

impl STy {
    fn is_real(self) -> bool {
        matches!(self, STy::Of(VarType::Real) | STy::IntLit)
    }

    fn compatible(self, other: STy) -> bool {
        match (self, other) {
            (STy::IntLit, STy::Of(t)) | (STy::Of(t), STy::IntLit) => t != VarType::Boolean,
            (a, b) => a == b,
        }
    }

    fn join(self, other: STy) -> STy {
        if self == STy::IntLit {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for STy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            STy::Of(t) => t.fmt(f),
            STy::IntLit => f.write_str("integer literal"),
        }
    }
}

fn type_of(e: &Expr<String>, vars: &VariableTable) -> Result<STy, String> {
    let real = |t: STy, what: &str| {
        if t.is_real() {
            Ok(())
        } else {
            Err(format!("{what} needs Real, got {t}"))
        }
    };
    let boolean = |t: STy, what: &str| {
        if t == STy::Of(VarType::Boolean) {
            Ok(())
        } else {
            Err(format!("{what} needs Boolean, got {t}"))
        }
    };
    Ok(match e {
        Expr::Const(Value::Real(_)) => STy::Of(VarType::Real),
        Expr::Const(Value::Integer(_)) => STy::IntLit,
        Expr::Const(Value::Boolean(_)) => STy::Of(VarType::Boolean),
        Expr::Var(n) => STy::Of(
            vars.by_name(n)
                .ok_or_else(|| format!("unknown variable `{n}`"))?
                .vtype,
        ),
        Expr::Der(n) => {
            let t = STy::Of(
                vars.by_name(n)
                    .ok_or_else(|| format!("unknown variable `{n}`"))?
                    .vtype,
            );
            real(t, "der()")?;
            t
        }
        Expr::Unary(UnaryOp::Neg, x) | Expr::Abs(x) => {
            real(type_of(x, vars)?, "arithmetic")?;
            STy::Of(VarType::Real)
        }
        Expr::Unary(UnaryOp::Not, x) => {
            boolean(type_of(x, vars)?, "not")?;
            STy::Of(VarType::Boolean)
        }
        Expr::Min(l, r) | Expr::Max(l, r) => {
            real(type_of(l, vars)?, "min/max")?;
            real(type_of(r, vars)?, "min/max")?;
            STy::Of(VarType::Real)
        }
        Expr::Binary(op, l, r) => {
            let (lt, rt) = (type_of(l, vars)?, type_of(r, vars)?);
            if op.is_arithmetic() {
                real(lt, "arithmetic")?;
                real(rt, "arithmetic")?;
                STy::Of(VarType::Real)
            } else if op.is_logical() {
                boolean(lt, "logical operator")?;
                boolean(rt, "logical operator")?;
                STy::Of(VarType::Boolean)
            } else {
                if !lt.compatible(rt) {
                    return Err(format!("comparison of {lt} with {rt}"));
                }
                STy::Of(VarType::Boolean)
            }
        }
        Expr::If(c, t, f) => {
            boolean(type_of(c, vars)?, "if condition")?;
            let (tt, ft) = (type_of(t, vars)?, type_of(f, vars)?);
            if !tt.compatible(ft) {
                return Err(format!("if branches of type {tt} and {ft}"));
            }
            tt.join(ft)
        }
    })
}

fn contains_der(e: &Expr<String>) -> bool {
    let mut found = false;
    e.for_each_var(&mut |_, d| found |= d);
    found
}

/// Kuhn's augmenting-path matching; `edges[i]` lists the columns row `i`
/// may take. Returns the column matched to each row when all rows match.
fn perfect_matching(edges: &[Vec<usize>], columns: usize) -> Option<Vec<usize>> {
    fn augment(
        row: usize,
        edges: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &c in &edges[row] {
            if !seen[c] {
                seen[c] = true;
                if owner[c].is_none_or(|r| augment(r, edges, seen, owner)) {
                    owner[c] = Some(row);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; columns];
    for row in 0..edges.len() {
        let mut seen = vec![false; columns];
        if !augment(row, edges, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut assigned = vec![usize::MAX; edges.len()];
    for (c, r) in owner.iter().enumerate() {
        if let Some(r) = r {
            assigned[*r] = c;
        }
    }
    Some(assigned)
}

pub fn causalize(b: &BoundModel) -> Result<SimPlan, SimError> {
    let vars = &b.variable_table;
    let mut bound = BTreeSet::new();
    for name in &b.bindings {
        if !bound.insert(name.as_str()) {
            return Err(SimError::DuplicateBinding(name.clone()));
        }
    }
    for (i, eq) in b.equations.iter().enumerate() {
        let mut missing = None;
        eq.for_each_var(&mut |v, _| {
            if vars.by_name(v).is_none() {
                missing.get_or_insert_with(|| v.clone());
            }
        });
        if let Some(v) = missing {
            return Err(SimError::UnknownVariable(v));
        }
        let mismatch = |detail| SimError::TypeMismatch {
            equation: i,
            detail,
        };
        let lt = type_of(&eq.lhs, vars).map_err(mismatch)?;
        let rt = type_of(&eq.rhs, vars).map_err(mismatch)?;
        if !lt.compatible(rt) {
            return Err(mismatch(format!("equation sides of type {lt} and {rt}")));
        }
    }
    let used = b.used_names();
    for v in vars.iter() {
        if v.causality.is_interface() && !used.contains(v.name.as_str()) {
            return Err(SimError::UnusedInterface(v.name.clone()));
        }
    }

    let mut warnings = Vec::new();
    let mut state_vars = Vec::new();
    let mut states = BTreeSet::new();
    let mut algebraic = Vec::new();
    for (i, eq) in b.equations.iter().enumerate() {
        if contains_der(&eq.rhs) {
            return Err(SimError::MisplacedDerivative(i));
        }
        match &eq.lhs {
            Expr::Der(x) => {
                let d = vars.by_name(x).expect("checked above");
                if !d.causality.is_unknown() {
                    return Err(SimError::DerivativeOfKnown(x.clone()));
                }
                if !states.insert(x.clone()) {
                    return Err(SimError::StructurallySingular);
                }
                let start = match d.start {
                    Some(v) => v.as_f64(),
                    None => {
                        warnings.push(format!("state `{x}` has no start value; using 0"));
                        0.0
                    }
                };
                state_vars.push(StateEquation {
                    equation: i,
                    name: x.clone(),
                    start,
                    rhs: eq.rhs.clone(),
                });
            }
            lhs if contains_der(lhs) => return Err(SimError::MisplacedDerivative(i)),
            _ => algebraic.push(i),
        }
    }

    let unknowns: Vec<&str> = vars
        .iter()
        .filter(|v| v.causality.is_unknown() && used.contains(v.name.as_str()))
        .map(|v| v.name.as_str())
        .collect();
    if unknowns.len() != b.equations.len() {
        return Err(SimError::UnbalancedSystem {
            equations: b.equations.len(),
            unknowns: unknowns.len(),
        });
    }
    let alg_unknowns: Vec<&str> = unknowns
        .iter()
        .copied()
        .filter(|u| !states.contains(*u))
        .collect();
    let param_env: BTreeMap<String, f64> = vars
        .iter()
        .filter(|v| {
            v.causality == crate::container::Causality::Parameter && used.contains(v.name.as_str())
        })
        .map(|v| (v.name.clone(), v.start.map(Value::as_f64).unwrap_or(0.0)))
        .collect();

    let occurs: Vec<Vec<usize>> = algebraic
        .iter()
        .map(|&i| {
            (0..alg_unknowns.len())
                .filter(|&u| b.equations[i].count_var(&alg_unknowns[u].to_string()) > 0)
                .collect()
        })
        .collect();
    let solvable: Vec<Vec<usize>> = algebraic
        .iter()
        .zip(&occurs)
        .map(|(&i, occ)| {
            occ.iter()
                .copied()
                .filter(|&u| isolate(&b.equations[i], &alg_unknowns[u].to_string()).is_ok())
                .collect()
        })
        .collect();
    let matching = match perfect_matching(&solvable, alg_unknowns.len()) {
        Some(m) => m,
        None => {
            let Some(m) = perfect_matching(&occurs, alg_unknowns.len()) else {
                return Err(SimError::StructurallySingular);
            };
            for (row, &u) in m.iter().enumerate() {
                let i = algebraic[row];
                let name = alg_unknowns[u].to_string();
                match isolate(&b.equations[i], &name) {
                    Ok(_) => {}
                    Err(IsolationError::MultipleOccurrence) => {
                        return Err(SimError::MultipleOccurrence {
                            variable: name,
                            equation: i,
                        })
                    }
                    Err(_) => return Err(SimError::NotIsolatable(i)),
                }
            }
            unreachable!("a fully solvable occurrence matching is a solvable matching")
        }
    };
    // A loop-free square system has exactly one perfect matching (two would
    // differ by an alternating cycle, which is an algebraic loop), so this
    // is a property of the model rather than of the matching chosen.
    let division_safe = algebraic.iter().zip(&matching).all(|(&i, &u)| {
        let (_, divisors) = isolate_with_divisors(&b.equations[i], &alg_unknowns[u].to_string())
            .expect("solvable edge");
        divisors
            .iter()
            .all(|d| parameter_value(d, &param_env).is_some_and(|x| x != 0.0 && x.is_finite()))
    });

    let mut steps: Vec<AlgebraicStep> = algebraic
        .iter()
        .zip(&matching)
        .map(|(&i, &u)| {
            let name = alg_unknowns[u].to_string();
            let expr = isolate(&b.equations[i], &name).expect("matched on solvable edges");
            AlgebraicStep {
                equation: i,
                name,
                expr,
            }
        })
        .collect();

    // Kahn's algorithm, always releasing the lowest equation index first.
    let solver_of: HashMap<&str, usize> = steps
        .iter()
        .enumerate()
        .map(|(k, s)| (s.name.as_str(), k))
        .collect();
    let mut deps: Vec<BTreeSet<usize>> = Vec::with_capacity(steps.len());
    for s in &steps {
        let mut d = BTreeSet::new();
        s.expr.for_each_var(&mut |v, _| {
            if let Some(&k) = solver_of.get(v.as_str()) {
                d.insert(k);
            }
        });
        deps.push(d);
    }
    let mut order = Vec::with_capacity(steps.len());
    let mut done = vec![false; steps.len()];
    let mut ready: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (k, d) in deps.iter().enumerate() {
        if d.is_empty() {
            ready.insert((steps[k].equation, k));
        }
    }
    while let Some((_, k)) = ready.pop_first() {
        done[k] = true;
        order.push(k);
        for (j, d) in deps.iter().enumerate() {
            if !done[j] && !ready.contains(&(steps[j].equation, j)) && d.iter().all(|&x| done[x]) {
                ready.insert((steps[j].equation, j));
            }
        }
    }
    if order.len() != steps.len() {
        let mut members: Vec<String> = (0..steps.len())
            .filter(|&k| !done[k])
            .map(|k| steps[k].name.clone())
            .collect();
        members.sort();
        return Err(SimError::AlgebraicLoop(members));
    }
    let mut slots: Vec<Option<AlgebraicStep>> = steps.drain(..).map(Some).collect();
    let algebraic_order = order
        .into_iter()
        .map(|k| slots[k].take().unwrap())
        .collect();

    let input_names = vars
        .iter()
        .filter(|v| v.causality == crate::container::Causality::Input)
        .map(|v| v.name.clone())
        .collect();

    Ok(SimPlan {
        state_vars,
        algebraic_order,
        param_env,
        input_names,
        warnings,
        division_safe,
    })
}

struct DivZero;

fn truth(x: f64) -> bool {
    x != 0.0
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn eval(e: &Expr<usize>, vals: &[f64]) -> Result<f64, DivZero> {
    use BinaryOp::*;
    Ok(match e {
        Expr::Const(v) => v.as_f64(),
        Expr::Var(i) | Expr::Der(i) => vals[*i],
        Expr::Unary(UnaryOp::Neg, x) => -eval(x, vals)?,
        Expr::Unary(UnaryOp::Not, x) => flag(!truth(eval(x, vals)?)),
        Expr::Abs(x) => eval(x, vals)?.abs(),
        Expr::Min(l, r) => eval(l, vals)?.min(eval(r, vals)?),
        Expr::Max(l, r) => eval(l, vals)?.max(eval(r, vals)?),
        Expr::If(c, t, f) => {
            if truth(eval(c, vals)?) {
                eval(t, vals)?
            } else {
                eval(f, vals)?
            }
        }
        Expr::Binary(op, l, r) => {
            let a = eval(l, vals)?;
            match op {
                And if !truth(a) => 0.0,
                Or if truth(a) => 1.0,
                _ => {
                    let b = eval(r, vals)?;
                    match op {
                        Add => a + b,
                        Sub => a - b,
                        Mul => a * b,
                        Div => {
                            if b == 0.0 {
                                return Err(DivZero);
                            }
                            a / b
                        }
                        Lt => flag(a < b),
                        Le => flag(a <= b),
                        Gt => flag(a > b),
                        Ge => flag(a >= b),
                        Eq => flag(a == b),
                        Ne => flag(a != b),
                        And | Or => flag(truth(b)),
                    }
                }
            }
        }
    })
}

pub fn check_uniform_grid(times: &[f64]) -> Result<f64, SimError> {
    let h = times[1] - times[0];
    let ok = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    if ok && h > 0.0 {
        Ok(h)
    } else {
        Err(SimError::NonUniformGrid)
    }
}

/// Forward Euler on the input trace's own time grid, with inputs held
/// constant between samples.
pub fn simulate(plan: &SimPlan, inputs: &Trace, outputs: &[String]) -> Result<Trace, SimError> {
    let times = inputs.times();
    let h = check_uniform_grid(times)?;

    let mut index: HashMap<String, usize> = HashMap::new();
    let mut vals: Vec<f64> = Vec::new();
    let slot = |name: &str, init: f64, index: &mut HashMap<String, usize>, vals: &mut Vec<f64>| {
        *index.entry(name.to_string()).or_insert_with(|| {
            vals.push(init);
            vals.len() - 1
        })
    };
    for (n, v) in &plan.param_env {
        slot(n, *v, &mut index, &mut vals);
    }
    let states: Vec<usize> = plan
        .state_vars
        .iter()
        .map(|s| slot(&s.name, s.start, &mut index, &mut vals))
        .collect();
    let mut input_cols = Vec::new();
    for n in &plan.input_names {
        let col = inputs
            .column(n)
            .ok_or_else(|| SimError::MissingInput(n.clone()))?;
        input_cols.push((slot(n, 0.0, &mut index, &mut vals), col));
    }
    for s in &plan.algebraic_order {
        slot(&s.name, 0.0, &mut index, &mut vals);
    }
    let compile = |e: &Expr<String>, index: &HashMap<String, usize>| {
        e.map_vars(&mut |n| {
            *index
                .get(n)
                .expect("every referenced variable has a value slot")
        })
    };
    let algebraic: Vec<(usize, usize, Expr<usize>)> = plan
        .algebraic_order
        .iter()
        .map(|s| (s.equation, index[&s.name], compile(&s.expr, &index)))
        .collect();
    let rhs: Vec<(usize, Expr<usize>)> = plan
        .state_vars
        .iter()
        .map(|s| (s.equation, compile(&s.rhs, &index)))
        .collect();
    let out_idx: Vec<usize> = outputs
        .iter()
        .map(|n| {
            index
                .get(n)
                .copied()
                .ok_or_else(|| SimError::UnknownOutput(n.clone()))
        })
        .collect::<Result<_, _>>()?;

    let names: Vec<&str> = {
        let mut v = vec![""; vals.len()];
        for (n, &i) in &index {
            v[i] = n;
        }
        v
    };
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); outputs.len()];
    let mut derivs = vec![0.0; states.len()];
    for (k, &t) in times.iter().enumerate() {
        for (i, col) in &input_cols {
            vals[*i] = col[k];
        }
        for (equation, target, e) in &algebraic {
            let v = eval(e, &vals).map_err(|_| SimError::DivisionByZero {
                t,
                equation: *equation,
            })?;
            if !v.is_finite() {
                return Err(SimError::NonFiniteValue {
                    t,
                    name: names[*target].to_string(),
                });
            }
            vals[*target] = v;
        }
        for (col, &i) in columns.iter_mut().zip(&out_idx) {
            col.push(vals[i]);
        }
        if k + 1 == times.len() {
            break;
        }
        for (d, (equation, e)) in derivs.iter_mut().zip(&rhs) {
            *d = eval(e, &vals).map_err(|_| SimError::DivisionByZero {
                t,
                equation: *equation,
            })?;
        }
        for (&i, d) in states.iter().zip(&derivs) {
            let next = vals[i] + h * d;
            if !next.is_finite() {
                return Err(SimError::NonFiniteValue {
                    t,
                    name: names[i].to_string(),
                });
            }
            vals[i] = next;
        }
    }
    Ok(Trace::new(
        times.to_vec(),
        outputs.iter().cloned().zip(columns).collect(),
    )
    .expect("output trace shares the validated input grid"))
}

/// Simulation-based score: lower is better, and a model that cannot be
/// simulated ranks below every finite score.
#[derive(Clone, Copy, Debug)]
pub enum Fitness {
    Finite(f64),
    Invalid,
}

impl Fitness {
    pub fn mse(self) -> Option<f64> {
        match self {
            Fitness::Finite(v) => Some(v),
            Fitness::Invalid => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Fitness::Finite(_))
    }
}

impl Ord for Fitness {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Fitness::Finite(a), Fitness::Finite(b)) => a.total_cmp(b),
            (Fitness::Finite(_), Fitness::Invalid) => Ordering::Less,
            (Fitness::Invalid, Fitness::Finite(_)) => Ordering::Greater,
            (Fitness::Invalid, Fitness::Invalid) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Fitness {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Fitness {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Fitness {}

impl Serialize for Fitness {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.mse().serialize(s)
    }
}

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fitness::Finite(v) => write!(f, "{v:e}"),
            Fitness::Invalid => f.write_str("invalid"),
        }
    }
}

/// Names of the table's output variables, in table order.
pub fn output_names(vars: &VariableTable) -> Vec<String> {
    vars.iter()
        .filter(|v| v.causality == crate::container::Causality::Output)
        .map(|v| v.name.clone())
        .collect()
}

pub fn mean_squared_error(sim: &Trace, reference: &Trace, outputs: &[String]) -> Option<f64> {
    if outputs.is_empty() || sim.len() != reference.len() {
        return None;
    }
    let mut total = 0.0;
    for name in outputs {
        let (a, b) = (sim.column(name)?, reference.column(name)?);
        total += a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    }
    let mse = total / (sim.len() * outputs.len()) as f64;
    mse.is_finite().then_some(mse)
}

pub fn fitness(candidate: &BoundModel, inputs: &Trace, reference: &Trace) -> Fitness {
    let outputs = output_names(&candidate.variable_table);
    causalize(candidate)
        .and_then(|plan| simulate(&plan, inputs, &outputs))
        .ok()
        .and_then(|sim| mean_squared_error(&sim, reference, &outputs))
        .map_or(Fitness::Invalid, Fitness::Finite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::container::{Causality, VariableDescriptor};

    fn n(s: &str) -> Expr<String> {
        Expr::Var(s.into())
    }

    fn d(
        name: &str,
        vtype: VarType,
        causality: Causality,
        start: Option<f64>,
    ) -> VariableDescriptor {
        VariableDescriptor {
            name: name.into(),
            value_reference: 0,
            vtype,
            causality,
            start: start.map(|v| match vtype {
                VarType::Real => Value::Real(v),
                VarType::Integer => Value::Integer(v as i64),
                VarType::Boolean => Value::Boolean(v != 0.0),
            }),
        }
    }

    fn bound(equations: Vec<Equation<String>>, vars: Vec<VariableDescriptor>) -> BoundModel {
        let vars = VariableTable::new(
            vars.into_iter()
                .enumerate()
                .map(|(i, mut v)| {
                    v.value_reference = i as u64;
                    v
                })
                .collect(),
        )
        .unwrap();
        let mut bindings = Vec::new();
        let mut states = BTreeSet::new();
        for eq in &equations {
            eq.for_each_var(&mut |v, is_der| {
                if !bindings.contains(v) {
                    bindings.push(v.clone());
                }
                if is_der {
                    states.insert(v.clone());
                }
            });
        }
        BoundModel {
            equations,
            variable_table: vars,
            states,
            bindings,
        }
    }

    fn real(name: &str, c: Causality) -> VariableDescriptor {
        d(
            name,
            VarType::Real,
            c,
            (c == Causality::Parameter).then_some(2.0),
        )
    }

    fn trace(times: &[f64], cols: &[(&str, &[f64])]) -> Trace {
        Trace::new(
            times.to_vec(),
            cols.iter()
                .map(|(n, v)| (n.to_string(), v.to_vec()))
                .collect(),
        )
        .unwrap()
    }

    use BinaryOp::*;
    use Causality::*;

    #[test]
    fn direct_assignment() {
        let b = bound(
            vec![Equation::new(n("y"), Expr::binary(Mul, n("k"), n("u")))],
            vec![real("u", Input), real("y", Output), real("k", Parameter)],
        );
        let plan = causalize(&b).unwrap();
        assert_eq!(plan.algebraic_order.len(), 1);
        assert_eq!(
            plan.algebraic_order[0].expr,
            Expr::binary(Mul, n("k"), n("u"))
        );
    }

    #[test]
    fn linear_inversion() {
        let b = bound(
            vec![Equation::new(
                Expr::real(0.0),
                Expr::binary(Sub, n("u"), Expr::binary(Mul, Expr::real(2.0), n("y"))),
            )],
            vec![real("u", Input), real("y", Output)],
        );
        let plan = causalize(&b).unwrap();
        let out = simulate(
            &plan,
            &trace(&[0.0, 1.0], &[("u", &[3.0, 5.0])]),
            &["y".into()],
        )
        .unwrap();
        assert_eq!(out.column("y").unwrap(), &[1.5, 2.5]);
    }

    #[test]
    fn algebraic_loop() {
        let b = bound(
            vec![
                Equation::new(n("y"), Expr::binary(Add, n("z"), Expr::real(1.0))),
                Equation::new(n("z"), Expr::binary(Sub, n("y"), Expr::real(1.0))),
                Equation::new(n("w"), n("u")),
            ],
            vec![
                real("u", Input),
                real("y", Output),
                real("z", Local),
                real("w", Local),
            ],
        );
        assert_eq!(
            causalize(&b),
            Err(SimError::AlgebraicLoop(vec!["y".into(), "z".into()]))
        );
    }

    #[test]
    fn euler_integrator() {
        let b = bound(
            vec![
                Equation::new(Expr::Der("x".into()), n("u")),
                Equation::new(n("y"), n("x")),
            ],
            vec![
                real("u", Input),
                real("y", Output),
                d("x", VarType::Real, Local, Some(0.0)),
            ],
        );
        let plan = causalize(&b).unwrap();
        let out = simulate(
            &plan,
            &trace(&[0.0, 0.1, 0.2], &[("u", &[1.0, 1.0, 1.0])]),
            &["y".into()],
        )
        .unwrap();
        let y = out.column("y").unwrap();
        assert_eq!(y[0], 0.0);
        assert!(
            (y[1] - 0.1).abs() < 1e-15 && (y[2] - 0.2).abs() < 1e-15,
            "{y:?}"
        );
    }

    #[test]
    fn division_by_zero() {
        let b = bound(
            vec![Equation::new(
                n("y"),
                Expr::binary(Div, n("u"), Expr::binary(Sub, n("u"), Expr::real(1.0))),
            )],
            vec![real("u", Input), real("y", Output)],
        );
        let plan = causalize(&b).unwrap();
        let err = simulate(
            &plan,
            &trace(&[0.0, 1.0], &[("u", &[1.0, 1.0])]),
            &["y".into()],
        )
        .unwrap_err();
        assert_eq!(
            err,
            SimError::DivisionByZero {
                t: 0.0,
                equation: 0
            }
        );
    }

    #[test]
    fn structural_errors() {
        // Unknown appears twice.
        let b = bound(
            vec![Equation::new(n("u"), Expr::binary(Mul, n("y"), n("y")))],
            vec![real("u", Input), real("y", Output)],
        );
        assert!(matches!(
            causalize(&b),
            Err(SimError::MultipleOccurrence { .. })
        ));
        // Unknown only inside an if.
        let b = bound(
            vec![Equation::new(
                n("u"),
                Expr::if_then_else(n("c"), n("y"), Expr::real(0.0)),
            )],
            vec![
                real("u", Input),
                real("y", Output),
                d("c", VarType::Boolean, Parameter, Some(1.0)),
            ],
        );
        assert_eq!(causalize(&b), Err(SimError::NotIsolatable(0)));
        // Two equations, one unknown.
        let b = bound(
            vec![Equation::new(n("y"), n("u")), Equation::new(n("k"), n("u"))],
            vec![real("u", Input), real("y", Output), real("k", Parameter)],
        );
        assert_eq!(
            causalize(&b),
            Err(SimError::UnbalancedSystem {
                equations: 2,
                unknowns: 1
            })
        );
        // Equation without any unknown while another has two.
        let b = bound(
            vec![
                Equation::new(n("y"), Expr::binary(Add, n("z"), n("u"))),
                Equation::new(n("k"), n("u")),
            ],
            vec![
                real("u", Input),
                real("y", Output),
                real("z", Local),
                real("k", Parameter),
            ],
        );
        assert_eq!(causalize(&b), Err(SimError::StructurallySingular));
        // Derivative of a parameter.
        let b = bound(
            vec![
                Equation::new(Expr::Der("k".into()), n("u")),
                Equation::new(n("y"), n("k")),
            ],
            vec![real("u", Input), real("y", Output), real("k", Parameter)],
        );
        assert_eq!(causalize(&b), Err(SimError::DerivativeOfKnown("k".into())));
    }

    #[test]
    fn validity_rules_enforced_independently() {
        // Boolean on a Real position.
        let b = bound(
            vec![Equation::new(n("y"), Expr::binary(Mul, n("c"), n("u")))],
            vec![
                real("u", Input),
                real("y", Output),
                d("c", VarType::Boolean, Parameter, Some(1.0)),
            ],
        );
        assert!(matches!(causalize(&b), Err(SimError::TypeMismatch { .. })));
        // Unused input.
        let b = bound(
            vec![Equation::new(n("y"), n("k"))],
            vec![real("u", Input), real("y", Output), real("k", Parameter)],
        );
        assert_eq!(causalize(&b), Err(SimError::UnusedInterface("u".into())));
        // Duplicate binding.
        let mut b = bound(
            vec![Equation::new(n("y"), n("u"))],
            vec![real("u", Input), real("y", Output)],
        );
        b.bindings.push("u".into());
        assert_eq!(causalize(&b), Err(SimError::DuplicateBinding("u".into())));
    }

    #[test]
    fn fitness_values() {
        let b = bound(
            vec![Equation::new(n("y"), n("u"))],
            vec![real("u", Input), real("y", Output)],
        );
        let inputs = trace(&[0.0, 1.0], &[("u", &[1.0, 3.0])]);
        let reference = trace(&[0.0, 1.0], &[("y", &[1.0, 2.0])]);
        assert_eq!(fitness(&b, &inputs, &reference), Fitness::Finite(0.5));
        let exact = trace(&[0.0, 1.0], &[("y", &[1.0, 3.0])]);
        assert!(fitness(&b, &inputs, &exact).mse().unwrap() <= 1e-18);

        let bad = bound(
            vec![Equation::new(n("y"), Expr::binary(Mul, n("c"), n("u")))],
            vec![
                real("u", Input),
                real("y", Output),
                d("c", VarType::Boolean, Parameter, Some(1.0)),
            ],
        );
        assert_eq!(fitness(&bad, &inputs, &reference), Fitness::Invalid);
    }

    #[test]
    fn non_uniform_grid() {
        let b = bound(
            vec![Equation::new(n("y"), n("u"))],
            vec![real("u", Input), real("y", Output)],
        );
        let plan = causalize(&b).unwrap();
        let t = trace(&[0.0, 1.0, 3.0], &[("u", &[1.0, 1.0, 1.0])]);
        assert_eq!(
            simulate(&plan, &t, &["y".into()]),
            Err(SimError::NonUniformGrid)
        );
        let t = trace(&[0.0, 1.0], &[("v", &[1.0, 1.0])]);
        assert_eq!(
            simulate(&plan, &t, &["y".into()]),
            Err(SimError::MissingInput("u".into()))
        );
    }

    #[test]
    fn fitness_order() {
        let mut v = [
            Fitness::Invalid,
            Fitness::Finite(2.0),
            Fitness::Finite(0.0),
            Fitness::Finite(1.0),
        ];
        v.sort();
        assert_eq!(v.map(Fitness::mse), [Some(0.0), Some(1.0), Some(2.0), None]);
    }

    #[test]
    fn isolation_reports_new_divisors() {
        // y = k * x solved for x divides by k; y = a / x solved for x divides by y.
        let eq = Equation::new(n("y"), Expr::binary(Mul, n("k"), n("x")));
        assert_eq!(
            isolate_with_divisors(&eq, &"x".to_string()).unwrap().1,
            vec![n("k")]
        );
        assert!(isolate_with_divisors(&eq, &"y".to_string())
            .unwrap()
            .1
            .is_empty());
        let eq = Equation::new(n("y"), Expr::binary(Div, n("a"), n("x")));
        assert_eq!(
            isolate_with_divisors(&eq, &"x".to_string()).unwrap().1,
            vec![n("y")]
        );
        assert!(isolate_with_divisors(&eq, &"a".to_string())
            .unwrap()
            .1
            .is_empty());
    }

    #[test]
    fn parameter_divisors_are_safe() {
        // u = k * y: y is solved as u / k with k a nonzero parameter.
        let b = bound(
            vec![Equation::new(n("u"), Expr::binary(Mul, n("k"), n("y")))],
            vec![real("u", Input), real("y", Output), real("k", Parameter)],
        );
        assert!(causalize(&b).unwrap().division_safe);
    }

    #[test]
    fn variable_divisors_are_flagged() {
        // k = y * u: solving for y divides by the input u.
        let b = bound(
            vec![Equation::new(n("k"), Expr::binary(Mul, n("y"), n("u")))],
            vec![real("u", Input), real("y", Output), real("k", Parameter)],
        );
        let plan = causalize(&b).unwrap();
        assert!(!plan.division_safe);
        let t = trace(&[0.0, 1.0], &[("u", &[0.0, 1.0])]);
        assert_eq!(
            simulate(&plan, &t, &["y".into()]),
            Err(SimError::DivisionByZero {
                t: 0.0,
                equation: 0
            })
        );
    }

    #[test]
    fn zero_parameter_divisor_is_not_safe() {
        let b = bound(
            vec![Equation::new(n("u"), Expr::binary(Mul, n("k"), n("y")))],
            vec![
                real("u", Input),
                real("y", Output),
                d("k", VarType::Real, Parameter, Some(0.0)),
            ],
        );
        assert!(!causalize(&b).unwrap().division_safe);
    }
}
