use std::fmt::Write;

use super::ast::*;
use crate::container::format_real;

const TERNARY: u8 = 0;
const UNARY: u8 = 7;
const PRIMARY: u8 = 8;

fn prec(e: &CodeExpr) -> u8 {
    match e {
        CodeExpr::Ternary(..) => TERNARY,
        CodeExpr::Binary(op, ..) => op.precedence(),
        CodeExpr::Unary(..) => UNARY,
        CodeExpr::RealLit(v) if v.is_sign_negative() => UNARY,
        CodeExpr::IntLit(v) if *v < 0 => UNARY,
        _ => PRIMARY,
    }
}

/// Prints an expression with the minimal parentheses C precedence needs.
pub fn print_expr(e: &CodeExpr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, TERNARY);
    out
}

fn write_expr(out: &mut String, e: &CodeExpr, min_prec: u8) {
    let wrap = prec(e) < min_prec;
    if wrap {
        out.push('(');
    }
    match e {
        CodeExpr::IntLit(v) => write!(out, "{v}").unwrap(),
        CodeExpr::RealLit(v) => out.push_str(&format_real(*v)),
        CodeExpr::Ident(n) => out.push_str(n),
        CodeExpr::Deref { base, offset, cast } => {
            write!(out, "*({} *)({base} + {offset:#x})", cast.ctype()).unwrap()
        }
        CodeExpr::Unary(op, operand) => {
            out.push(match op {
                UnaryOp::Neg => '-',
                UnaryOp::Not => '!',
            });
            write_expr(out, operand, PRIMARY);
        }
        CodeExpr::Binary(op, l, r) => {
            write_expr(out, l, op.precedence());
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(out, r, op.precedence() + 1);
        }
        CodeExpr::Ternary(c, t, f) => {
            write_expr(out, c, 1);
            out.push_str(" ? ");
            write_expr(out, t, TERNARY);
            out.push_str(" : ");
            write_expr(out, f, TERNARY);
        }
        CodeExpr::Call(Callee::Clamp, args) => {
            // clamp(e, lo, hi) == fmin(fmax(e, lo), hi)
            let lowered = CodeExpr::Call(
                Callee::Fmin,
                vec![
                    CodeExpr::Call(Callee::Fmax, vec![args[0].clone(), args[1].clone()]),
                    args[2].clone(),
                ],
            );
            write_expr(out, &lowered, min_prec);
        }
        CodeExpr::Call(callee, args) => {
            out.push_str(callee.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, TERNARY);
            }
            out.push(')');
        }
    }
    if wrap {
        out.push(')');
    }
}

pub fn print_stmts(body: &[CodeStmt], indent: usize) -> String {
    let mut out = String::new();
    write_stmts(&mut out, body, indent);
    out
}

fn write_stmts(out: &mut String, body: &[CodeStmt], indent: usize) {
    let pad = "  ".repeat(indent);
    for stmt in body {
        match &stmt.kind {
            StmtKind::Decl { ty, name, init } => match init {
                Some(e) => writeln!(out, "{pad}{ty} {name} = {};", print_expr(e)).unwrap(),
                None => writeln!(out, "{pad}{ty} {name};").unwrap(),
            },
            StmtKind::Assign { target, value } => {
                writeln!(out, "{pad}{} = {};", print_expr(target), print_expr(value)).unwrap()
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                writeln!(out, "{pad}if ({}) {{", print_expr(cond)).unwrap();
                write_stmts(out, then_body, indent + 1);
                if else_body.is_empty() {
                    writeln!(out, "{pad}}}").unwrap();
                } else {
                    writeln!(out, "{pad}}}").unwrap();
                    writeln!(out, "{pad}else {{").unwrap();
                    write_stmts(out, else_body, indent + 1);
                    writeln!(out, "{pad}}}").unwrap();
                }
            }
            StmtKind::Return(None) => writeln!(out, "{pad}return;").unwrap(),
            StmtKind::Return(Some(e)) => writeln!(out, "{pad}return {};", print_expr(e)).unwrap(),
        }
    }
}

pub fn print_unit(unit: &CodeUnit) -> String {
    let mut out = String::new();
    for (i, f) in unit.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let params = if f.params.is_empty() {
            "void".to_string()
        } else {
            f.params
                .iter()
                .map(|p| format!("{} {}", p.ty, p.name))
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(out, "{} {}({params})\n{{", f.return_type, f.name).unwrap();
        write_stmts(&mut out, &f.body, 1);
        out.push_str("}\n");
    }
    out
}
