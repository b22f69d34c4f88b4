//! Chromosome binding and Modelica text output.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::container::{format_real, Causality, VarType, VariableDescriptor, VariableTable};
use crate::expr::{BinaryOp, Equation, Expr, UnaryOp, Value};
use crate::ga::Chromosome;
use crate::translate::EquationModel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("gene at position {0} is not a variable index")]
    GeneOutOfRange(usize),
    #[error("chromosome has {genes} genes but the model has {slots} slots")]
    LengthMismatch { genes: usize, slots: usize },
}

/// An equation model with every slot replaced by a concrete variable.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundModel {
    pub equations: Vec<Equation<String>>,
    pub variable_table: VariableTable,
    pub states: BTreeSet<String>,
    /// Variable bound to each slot, in slot order.
    pub bindings: Vec<String>,
}

impl BoundModel {
    /// Names referenced by any equation.
    pub fn used_names(&self) -> BTreeSet<&str> {
        let mut used = BTreeSet::new();
        for eq in &self.equations {
            eq.for_each_var(&mut |v, _| {
                used.insert(v.as_str());
            });
        }
        used
    }
}

pub fn apply_assignment(
    m: &EquationModel,
    c: &Chromosome,
    vars: &VariableTable,
) -> Result<BoundModel, ModelError> {
    if c.genes.len() != m.slots.len() {
        return Err(ModelError::LengthMismatch {
            genes: c.genes.len(),
            slots: m.slots.len(),
        });
    }
    let mut bindings = Vec::with_capacity(c.genes.len());
    for (pos, &g) in c.genes.iter().enumerate() {
        let v = vars.get(g).ok_or(ModelError::GeneOutOfRange(pos))?;
        bindings.push(v.name.clone());
    }
    let equations = m
        .equations
        .iter()
        .map(|eq| eq.map_vars(&mut |s| bindings[*s].clone()))
        .collect();
    let states = m
        .slots
        .iter()
        .filter(|s| s.is_state)
        .map(|s| bindings[s.id].clone())
        .collect();
    Ok(BoundModel {
        equations,
        variable_table: vars.clone(),
        states,
        bindings,
    })
}

/// Skeleton model whose variables are the slot placeholders themselves.
pub fn skeleton(m: &EquationModel) -> BoundModel {
    let vars = m
        .slots
        .iter()
        .map(|s| VariableDescriptor {
            name: s.placeholder(),
            value_reference: s.id as u64,
            vtype: s.inferred_type.known().unwrap_or(VarType::Real),
            causality: Causality::Local,
            start: None,
        })
        .collect();
    let table = VariableTable::new(vars).expect("slot origins are unique");
    let c = Chromosome::new((0..m.slots.len()).collect());
    apply_assignment(m, &c, &table).expect("identity assignment")
}

const PREC_IF: u8 = 0;
const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;
const PREC_REL: u8 = 4;
const PREC_ADD: u8 = 5;
const PREC_MUL: u8 = 6;
const PREC_PRIMARY: u8 = 8;

fn binary_prec(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Or => PREC_OR,
        BinaryOp::And => PREC_AND,
        BinaryOp::Add | BinaryOp::Sub => PREC_ADD,
        BinaryOp::Mul | BinaryOp::Div => PREC_MUL,
        _ => PREC_REL,
    }
}

fn binary_symbol(op: BinaryOp) -> &'static str {
    match op {
        BinaryOp::Or => "or",
        BinaryOp::And => "and",
        BinaryOp::Eq => "==",
        BinaryOp::Ne => "<>",
        other => other.symbol(),
    }
}

fn prec(e: &Expr<String>) -> u8 {
    match e {
        Expr::If(..) => PREC_IF,
        Expr::Binary(op, ..) => binary_prec(*op),
        Expr::Unary(UnaryOp::Not, _) => PREC_NOT,
        Expr::Unary(UnaryOp::Neg, _) => PREC_ADD,
        Expr::Const(Value::Real(v)) if v.is_sign_negative() => PREC_ADD,
        Expr::Const(Value::Integer(v)) if *v < 0 => PREC_ADD,
        _ => PREC_PRIMARY,
    }
}

fn literal(v: &Value) -> String {
    match v {
        Value::Real(x) => format_real(*x),
        Value::Integer(i) => i.to_string(),
        Value::Boolean(b) => b.to_string(),
    }
}

fn write_at(out: &mut String, e: &Expr<String>, min: u8) {
    let paren = prec(e) < min;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Const(v) => out.push_str(&literal(v)),
        Expr::Var(n) => out.push_str(n),
        Expr::Der(n) => {
            let _ = write!(out, "der({n})");
        }
        Expr::Unary(UnaryOp::Neg, x) => {
            out.push('-');
            write_at(out, x, PREC_MUL);
        }
        Expr::Unary(UnaryOp::Not, x) => {
            out.push_str("not ");
            write_at(out, x, PREC_REL);
        }
        Expr::Binary(op, l, r) => {
            let p = binary_prec(*op);
            // Relational operators do not chain in Modelica.
            let left_min = if p == PREC_REL { p + 1 } else { p };
            write_at(out, l, left_min);
            let _ = write!(out, " {} ", binary_symbol(*op));
            write_at(out, r, p + 1);
        }
        Expr::If(c, t, f) => {
            out.push_str("if ");
            write_at(out, c, PREC_IF);
            out.push_str(" then ");
            write_at(out, t, PREC_IF);
            out.push_str(" else ");
            write_at(out, f, PREC_IF);
        }
        Expr::Min(l, r) | Expr::Max(l, r) => {
            out.push_str(if matches!(e, Expr::Min(..)) {
                "min("
            } else {
                "max("
            });
            write_at(out, l, PREC_IF);
            out.push_str(", ");
            write_at(out, r, PREC_IF);
            out.push(')');
        }
        Expr::Abs(x) => {
            out.push_str("abs(");
            write_at(out, x, PREC_IF);
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn print_model_expr(e: &Expr<String>) -> String {
    let mut s = String::new();
    write_at(&mut s, e, PREC_IF);
    s
}

fn declaration(v: &VariableDescriptor) -> String {
    let ty = v.vtype.to_string();
    match v.causality {
        Causality::Input => format!("input {ty} {};", v.name),
        Causality::Output => format!("output {ty} {};", v.name),
        Causality::Parameter => match &v.start {
            Some(s) => format!("parameter {ty} {} = {};", v.name, literal(s)),
            None => format!("parameter {ty} {};", v.name),
        },
        Causality::Local => match &v.start {
            Some(s) => format!("{ty} {}(start = {});", v.name, literal(s)),
            None => format!("{ty} {};", v.name),
        },
    }
}

/// Flat Modelica model text for `b`. Only variables referenced by some
/// equation are declared.
pub fn emit_modelica(b: &BoundModel, model_name: &str) -> String {
    let used = b.used_names();
    let mut out = format!("model {model_name}\n");
    for causality in [
        Causality::Input,
        Causality::Output,
        Causality::Parameter,
        Causality::Local,
    ] {
        let mut group: Vec<&VariableDescriptor> = b
            .variable_table
            .iter()
            .filter(|v| v.causality == causality && used.contains(v.name.as_str()))
            .collect();
        group.sort_by(|a, b| a.name.cmp(&b.name));
        for v in group {
            let _ = writeln!(out, "  {}", declaration(v));
        }
    }
    out.push_str("equation\n");
    for eq in &b.equations {
        let _ = writeln!(
            out,
            "  {} = {};",
            print_model_expr(&eq.lhs),
            print_model_expr(&eq.rhs)
        );
    }
    let _ = writeln!(out, "end {model_name};");
    out
}
