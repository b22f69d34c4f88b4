//! Authored controller cases (PI, PID, LimPID) and the tiny three-slot
//! instance used for exhaustive checks.
//!
//! Each fixture is written from one authored equation list. The decompiled
//! C, the struct layout and the ground-truth mapping are all derived from
//! it, so the container on disk and the ground truth cannot drift apart.
//! The C deliberately carries the distortions normalization has to undo:
//! single-use temporaries, reciprocal multiplies, negated subtractions and
//! nested `fmin`/`fmax` clamps.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::check::infer_symbol_types;
use crate::container::{
    format_real, write_trace, Causality, Trace, VarType, VariableDescriptor, VariableTable,
    DESCRIPTION_FILE, INPUT_TRACE, REFERENCE_TRACE,
};
use crate::cparse::{
    parse_c_expr, print_unit, BinaryOp, CType, Callee, CodeExpr, CodeStmt, CodeUnit, DerefCast,
    Function, Param, StmtKind, UnaryOp,
};
use crate::expr::{Equation, Expr, SlotId, Value};
use crate::ga::{Chromosome, Problem};
use crate::isolate::RULES_FILE;
use crate::pipeline::{
    mapping_json, simulate_mapping, translate_container, write_file, PipelineError,
};
use crate::translate::{EquationModel, SlotOrigin, SlotType, SymbolSlot};

pub const FIXTURE_NAMES: [&str; 3] = ["pi", "pid", "limpid"];
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

const SAMPLES: usize = 101;
const STEP: f64 = 0.01;
const BASE: &str = "param_1";
const STEP_PARAM: &str = "param_2";

#[derive(Clone, Copy)]
struct Eq {
    lhs: &'static str,
    rhs: &'static str,
    /// Route the value through a single-use `dVarN` temporary.
    temp: bool,
    /// Render a top-level conditional as an if/else statement.
    if_stmt: bool,
    /// Render each `a - b` as `-(b - a)`.
    negate_sub: bool,
}

const fn eq(lhs: &'static str, rhs: &'static str) -> Eq {
    Eq {
        lhs,
        rhs,
        temp: false,
        if_stmt: false,
        negate_sub: false,
    }
}

const fn tmp(lhs: &'static str, rhs: &'static str) -> Eq {
    Eq {
        temp: true,
        ..eq(lhs, rhs)
    }
}

struct Case {
    name: &'static str,
    model_name: &'static str,
    function: &'static str,
    /// `name:R|B|I:causality[=start]`, in description order.
    variables: &'static [&'static str],
    /// Algebraic equations in evaluation order, then state equations.
    equations: &'static [Eq],
    extra_functions: &'static str,
    rules: Option<&'static str>,
    inputs: fn(&str, f64) -> f64,
    max_slots: usize,
    summary: &'static str,
}

const PI_VARS: &[&str] = &[
    "kp:R:parameter=0.8584",
    "u_s:R:input",
    "e:R:local=0.1587",
    "ki:R:parameter=0.611",
    "y:R:output=0.1993",
    "k_aw:R:parameter=0.4086",
    "e_w:R:local=0.2579",
    "wp:R:parameter=0.8362",
    "x:R:local=0.3525",
    "u_m:R:input",
    "y_p:R:local=0.2081",
    "t_filt:R:parameter=0.1834",
    "y_i:R:local=0.2667",
    "kff:R:parameter=0.431",
    "y_ff:R:local=0.3433",
    "y_start:R:parameter=0.4986",
    "y_sum:R:local=0.3839",
    "ky:R:parameter=0.7462",
];

const PI_EQS: &[Eq] = &[
    tmp("e", "u_s - u_m"),
    tmp("e_w", "wp * u_s - u_m"),
    tmp("y_p", "kp * e_w"),
    tmp("y_i", "kp * x"),
    tmp("y_ff", "kff * u_s / 2.0"),
    tmp("y_sum", "y_p + y_i + y_ff"),
    tmp("y", "ky * y_sum"),
    tmp("der(x)", "ki * e"),
];

const PID_VARS: &[&str] = &[
    "u_s:R:input",
    "u_m:R:input",
    "manual:B:input",
    "u_man:R:input",
    "y:R:output=0.3075",
    "kp:R:parameter=0.8471",
    "ki:R:parameter=0.4984",
    "kd:R:parameter=0.3297",
    "wd:R:parameter=0.791",
    "int_enable:B:parameter=true",
    "wp:R:parameter=0.7573",
    "ti:R:parameter=0.6336",
    "td:R:parameter=0.3299",
    "nd:R:parameter=0.9262",
    "y_max:R:parameter=0.9825",
    "y_min:R:parameter=0.0821",
    "k_aw:R:parameter=0.4084",
    "y_start:R:parameter=0.5547",
    "ni:R:parameter=0.836",
    "y_offset:R:parameter=0.6673",
    "reverse_action:B:parameter=false",
    "use_ff:B:parameter=true",
    "strict:B:parameter=false",
    "init_type:I:parameter=1",
    "controller_type:I:parameter=3",
    "e:R:local=0.2196",
    "x_i:R:local=0.3749",
    "x_d:R:local=0.2512",
    "y_d:R:local=0.3165",
    "y_pid:R:local=0.2801",
    "y_p_int:R:local=0.1564",
    "e_filt:R:local=0.2577",
    "x_aux:R:local=0.368",
    "y_track:R:local=0.4783",
    "saturated:B:local=false",
    "tracking:B:local=false",
    "mode_index:I:local=0",
];

const PID_EQS: &[Eq] = &[
    tmp("e", "u_s - u_m"),
    Eq {
        negate_sub: true,
        ..tmp("y_d", "kd * (e - x_d) * wd")
    },
    tmp("y_pid", "kp * e + x_i + y_d"),
    Eq {
        if_stmt: true,
        ..eq("y", "manual ? u_man : y_pid")
    },
    tmp("der(x_i)", "int_enable ? ki * e : 0.0"),
    tmp("der(x_d)", "(e - x_d) * wd"),
];

const LIMPID_VARS: &[&str] = &[
    "u_s:R:input",
    "u_m:R:input",
    "u_ff:R:input",
    "y:R:output=0.3636",
    "limited:B:output=false",
    "k:R:parameter=0.9599",
    "kp:R:parameter=0.9712",
    "ki:R:parameter=0.5775",
    "kd:R:parameter=0.2171",
    "wp:R:parameter=0.7684",
    "wd:R:parameter=0.5997",
    "ni:R:parameter=0.881",
    "nd:R:parameter=0.7123",
    "kff:R:parameter=0.3636",
    "y_max:R:parameter=0.9149",
    "y_min:R:parameter=0.2062",
    "ti:R:parameter=0.5775",
    "td:R:parameter=0.1271",
    "xi_start:R:parameter=0.2284",
    "xd_start:R:parameter=0.1497",
    "y_start:R:parameter=0.341",
    "k_track:R:parameter=0.4873",
    "nd_min:R:parameter=0.1386",
    "deadband:R:parameter=0.1229",
    "ff_gain:R:parameter=0.4312",
    "tau_ff:R:parameter=0.3525",
    "y_rate:R:parameter=0.7121",
    "sp_min:R:parameter=0.1834",
    "sp_max:R:parameter=0.8247",
    "bias:R:parameter=0.179",
    "k_bump:R:parameter=0.6673",
    "t_reset:R:parameter=0.5886",
    "k_ramp:R:parameter=0.4649",
    "y_hold:R:parameter=0.6562",
    "k_sat:R:parameter=0.7575",
    "t_track:R:parameter=0.7571",
    "u_scale:R:parameter=0.4984",
    "y_scale:R:parameter=0.8697",
    "e_scale:R:parameter=0.836",
    "ff_lead:R:parameter=0.3523",
    "ff_lag:R:parameter=0.2736",
    "k_dead:R:parameter=0.4019",
    "with_i:B:parameter=true",
    "with_d:B:parameter=true",
    "with_ff:B:parameter=true",
    "reverse_action:B:parameter=false",
    "strict:B:parameter=false",
    "homotopy:B:parameter=false",
    "init_type:I:parameter=1",
    "controller_type:I:parameter=4",
    "limits_at_init:I:parameter=1",
    "n_filter:I:parameter=2",
    "anti_windup:I:parameter=1",
    "version:I:parameter=3",
    "e_p:R:local=0.2152",
    "e_i:R:local=0.2445",
    "e_d:R:local=0.1901",
    "x_i:R:local=0.2284",
    "x_d:R:local=0.1497",
    "y_i:R:local=0.242",
    "y_d:R:local=0.2893",
    "y_pid:R:local=0.3546",
    "y_ffw:R:local=0.3839",
    "y_sum:R:local=0.4492",
    "y_aw:R:local=0.4965",
    "y_unsat:R:local=0.4241",
    "e_lim:R:local=0.4714",
    "y_ramp:R:local=0.5367",
    "y_prev:R:local=0.602",
    "x_ff:R:local=0.6313",
    "y_trk:R:local=0.6966",
    "e_abs:R:local=0.7439",
    "u_sat:R:local=0.7732",
    "x_aux:R:local=0.8385",
    "y_bias:R:local=0.7841",
    "sat_hi:B:local=false",
    "sat_lo:B:local=false",
    "tracking:B:local=false",
    "n_steps:I:local=0",
    "mode_index:I:local=0",
];

const LIMPID_EQS: &[Eq] = &[
    tmp("e_p", "wp * u_s - u_m"),
    tmp("e_i", "u_s - u_m"),
    tmp("e_d", "wd * u_s - u_m"),
    tmp("y_i", "ki * x_i"),
    Eq {
        negate_sub: true,
        ..tmp("y_d", "kd * nd * (e_d - x_d)")
    },
    tmp("y_pid", "kp * (e_p + y_i + y_d)"),
    tmp("y_ffw", "kff * u_ff / 5.0"),
    tmp("y_sum", "y_pid + y_ffw"),
    tmp("y", "fmin(fmax(y_sum, y_min), y_max)"),
    tmp("y_aw", "y - y_sum"),
    tmp("limited", "y_sum > y_max || y_sum < y_min"),
    tmp("der(x_i)", "e_i + ni * y_aw"),
    Eq {
        negate_sub: true,
        ..tmp("der(x_d)", "(e_d - x_d) * nd")
    },
];

fn pi_inputs(name: &str, t: f64) -> f64 {
    match name {
        "u_s" => 1.2 + 0.4 * (2.0 * PI * t).sin(),
        "u_m" => 0.437 + 0.213 * (3.0 * t).cos(),
        _ => unreachable!("PI has no input `{name}`"),
    }
}

fn pid_inputs(name: &str, t: f64) -> f64 {
    match name {
        "u_s" => 1.2 + 0.4 * (2.0 * PI * t).sin(),
        "u_m" => 0.326 + 0.207 * (5.0 * t + 0.3).sin(),
        "u_man" => 0.613 + 0.109 * t,
        "manual" => f64::from(u8::from((0.55..0.75).contains(&t))),
        _ => unreachable!("PID has no input `{name}`"),
    }
}

fn limpid_inputs(name: &str, t: f64) -> f64 {
    match name {
        "u_s" => 1.0 + 0.8 * (2.0 * PI * t).sin(),
        "u_m" => 0.223 + 0.117 * (4.0 * t).cos(),
        "u_ff" => 0.527 + 0.481 * t,
        _ => unreachable!("LimPID has no input `{name}`"),
    }
}

const LIMPID_INIT: &str = "\
void FUN_00101890(long param_1)
{
  *(double *)(param_1 + 0x1a8) = 0.2;
  *(double *)(param_1 + 0x1b0) = 0.1;
  return;
}

";

fn case(name: &str) -> Option<Case> {
    Some(match name {
        "pi" => Case {
            name: "pi",
            model_name: "PI",
            function: "FUN_00101a40",
            variables: PI_VARS,
            equations: PI_EQS,
            extra_functions: "",
            rules: None,
            inputs: pi_inputs,
            max_slots: 18,
            summary: "Gain plus integrator with setpoint weighting and a feed-forward path. All variables are Real.",
        },
        "pid" => Case {
            name: "pid",
            model_name: "PID",
            function: "FUN_00101c10",
            variables: PID_VARS,
            equations: PID_EQS,
            extra_functions: "",
            rules: None,
            inputs: pid_inputs,
            max_slots: 20,
            summary: "PID with a first-order derivative filter, a Boolean integrator enable and a manual override switch. Mixes Real, Boolean and Integer variables.",
        },
        "limpid" => Case {
            name: "limpid",
            model_name: "LimPID",
            function: "FUN_00101b20",
            variables: LIMPID_VARS,
            equations: LIMPID_EQS,
            extra_functions: LIMPID_INIT,
            rules: Some("step_function = \"FUN_00101b20\"\n"),
            inputs: limpid_inputs,
            max_slots: 39,
            summary: "PID with output limits, anti-windup feedback, a derivative filter, feed-forward and a Boolean saturation flag. The container also holds an initialization routine, so rules.toml names the step function.",
        },
        _ => return None,
    })
}

fn parse_var(text: &str, vr: u64) -> VariableDescriptor {
    let (head, start) = match text.split_once('=') {
        Some((h, s)) => (h, Some(s)),
        None => (text, None),
    };
    let mut parts = head.split(':');
    let name = parts.next().expect("name").to_string();
    let vtype = match parts.next().expect("type") {
        "R" => VarType::Real,
        "B" => VarType::Boolean,
        "I" => VarType::Integer,
        t => panic!("bad type {t}"),
    };
    let causality = match parts.next().expect("causality") {
        "input" => Causality::Input,
        "output" => Causality::Output,
        "parameter" => Causality::Parameter,
        "local" => Causality::Local,
        c => panic!("bad causality {c}"),
    };
    let start = start.map(|s| match vtype {
        VarType::Real => Value::Real(s.parse().expect("real start")),
        VarType::Integer => Value::Integer(s.parse().expect("integer start")),
        VarType::Boolean => Value::Boolean(s.parse().expect("boolean start")),
    });
    VariableDescriptor {
        name,
        value_reference: vr,
        vtype,
        causality,
        start,
    }
}

fn table_of(case: &Case) -> VariableTable {
    VariableTable::new(
        case.variables
            .iter()
            .enumerate()
            .map(|(i, t)| parse_var(t, i as u64))
            .collect(),
    )
    .expect("fixture variable table is well-formed")
}

/// Struct offset of each variable: a fixed permutation of table order, so
/// the layout says nothing about value references.
fn layout(vars: &VariableTable) -> HashMap<String, u64> {
    let n = vars.len() as u64;
    assert!(!n.is_multiple_of(7), "stride must be coprime with the table size");
    vars.iter()
        .enumerate()
        .map(|(k, v)| (v.name.clone(), 0x10 + 8 * ((k as u64 * 7 + 3) % n)))
        .collect()
}

fn lhs_parts(lhs: &str) -> (bool, &str) {
    match lhs.strip_prefix("der(").and_then(|s| s.strip_suffix(')')) {
        Some(x) => (true, x),
        None => (false, lhs),
    }
}

fn code_to_model(e: &CodeExpr) -> Expr<String> {
    let b = |x: &CodeExpr| Box::new(code_to_model(x));
    match e {
        CodeExpr::IntLit(v) => Expr::Const(Value::Integer(*v)),
        CodeExpr::RealLit(v) => Expr::Const(Value::Real(*v)),
        CodeExpr::Ident(n) => Expr::Var(n.clone()),
        CodeExpr::Unary(op, x) => Expr::Unary(*op, b(x)),
        CodeExpr::Binary(op, l, r) => Expr::Binary(*op, b(l), b(r)),
        CodeExpr::Ternary(c, t, f) => Expr::If(b(c), b(t), b(f)),
        CodeExpr::Call(Callee::Fmin, a) => Expr::Min(b(&a[0]), b(&a[1])),
        CodeExpr::Call(Callee::Fmax, a) => Expr::Max(b(&a[0]), b(&a[1])),
        CodeExpr::Call(Callee::Fabs, a) => Expr::Abs(b(&a[0])),
        other => panic!("unsupported authored expression {other:?}"),
    }
}

fn authored_rhs(e: &Eq) -> CodeExpr {
    parse_c_expr(e.rhs).unwrap_or_else(|err| panic!("authored equation `{}`: {err}", e.rhs))
}

/// The fixture's ground-truth equations over variable names.
pub fn ground_truth_equations(name: &str) -> Option<Vec<Equation<String>>> {
    let case = case(name)?;
    Some(
        case.equations
            .iter()
            .map(|e| {
                let (is_der, target) = lhs_parts(e.lhs);
                let lhs = if is_der {
                    Expr::Der(target.to_string())
                } else {
                    Expr::Var(target.to_string())
                };
                Equation::new(lhs, code_to_model(&authored_rhs(e)))
            })
            .collect(),
    )
}

struct Decompiler<'a> {
    vars: &'a VariableTable,
    offsets: HashMap<String, u64>,
}

impl Decompiler<'_> {
    fn deref(&self, name: &str) -> CodeExpr {
        let v = self
            .vars
            .by_name(name)
            .unwrap_or_else(|| panic!("unknown variable `{name}`"));
        CodeExpr::Deref {
            base: BASE.to_string(),
            offset: self.offsets[name],
            cast: match v.vtype {
                VarType::Real => DerefCast::Double,
                VarType::Boolean => DerefCast::Bool,
                VarType::Integer => DerefCast::Int,
            },
        }
    }

    fn expr(&self, e: &CodeExpr, negate_sub: bool) -> CodeExpr {
        let r = |x: &CodeExpr| self.expr(x, negate_sub);
        match e {
            CodeExpr::Ident(n) => self.deref(n),
            CodeExpr::Binary(BinaryOp::Div, x, d) if is_small_integer(d) => {
                let CodeExpr::RealLit(n) = **d else {
                    unreachable!()
                };
                CodeExpr::binary(BinaryOp::Mul, r(x), CodeExpr::RealLit(1.0 / n))
            }
            CodeExpr::Binary(BinaryOp::Sub, a, b) if negate_sub => {
                CodeExpr::unary(UnaryOp::Neg, CodeExpr::binary(BinaryOp::Sub, r(b), r(a)))
            }
            CodeExpr::Binary(op, a, b) => CodeExpr::binary(*op, r(a), r(b)),
            CodeExpr::Unary(op, x) => CodeExpr::unary(*op, r(x)),
            CodeExpr::Ternary(c, t, f) => {
                CodeExpr::Ternary(Box::new(r(c)), Box::new(r(t)), Box::new(r(f)))
            }
            CodeExpr::Call(c, args) => CodeExpr::Call(*c, args.iter().map(r).collect()),
            leaf => leaf.clone(),
        }
    }

    fn function(&self, case: &Case) -> Function {
        let assign =
            |target: CodeExpr, value: CodeExpr| CodeStmt::new(StmtKind::Assign { target, value });
        let mut decls = Vec::new();
        let mut body = Vec::new();
        for e in case.equations {
            let (is_der, target) = lhs_parts(e.lhs);
            let target = self.deref(target);
            let mut value = self.expr(&authored_rhs(e), e.negate_sub);
            if e.temp {
                let name = format!("dVar{}", decls.len() + 1);
                decls.push(CodeStmt::new(StmtKind::Decl {
                    ty: CType::Double,
                    name: name.clone(),
                    init: None,
                }));
                body.push(assign(CodeExpr::Ident(name.clone()), value));
                value = CodeExpr::Ident(name);
            }
            let h = CodeExpr::ident(STEP_PARAM);
            body.push(match (is_der, &value) {
                // Alternate product order between temporaries and inline values.
                (true, CodeExpr::Ident(_)) => assign(
                    target.clone(),
                    CodeExpr::binary(
                        BinaryOp::Add,
                        target,
                        CodeExpr::binary(BinaryOp::Mul, value, h),
                    ),
                ),
                (true, _) => assign(
                    target.clone(),
                    CodeExpr::binary(
                        BinaryOp::Add,
                        target,
                        CodeExpr::binary(BinaryOp::Mul, h, value),
                    ),
                ),
                (false, CodeExpr::Ternary(c, t, f)) if e.if_stmt => CodeStmt::new(StmtKind::If {
                    cond: (**c).clone(),
                    then_body: vec![assign(target.clone(), (**t).clone())],
                    else_body: vec![assign(target, (**f).clone())],
                }),
                (false, _) => assign(target, value),
            });
        }
        decls.extend(body);
        decls.push(CodeStmt::new(StmtKind::Return(None)));
        Function {
            return_type: CType::Void,
            name: case.function.to_string(),
            params: vec![
                Param {
                    ty: CType::Long,
                    name: BASE.to_string(),
                },
                Param {
                    ty: CType::Double,
                    name: STEP_PARAM.to_string(),
                },
            ],
            body: decls,
            line: 0,
        }
    }
}

fn is_small_integer(e: &CodeExpr) -> bool {
    matches!(e, CodeExpr::RealLit(n) if n.fract() == 0.0 && (2.0..=1000.0).contains(n))
}

fn description_xml(case: &Case, vars: &VariableTable) -> String {
    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<fmiModelDescription fmiVersion=\"2.0\" modelName=\"{}\">\n  <ModelVariables>\n",
        case.model_name
    );
    for v in vars.iter() {
        let variability = match v.causality {
            Causality::Parameter => "fixed",
            _ if v.vtype == VarType::Real => "continuous",
            _ => "discrete",
        };
        let start = v
            .start
            .map(|s| {
                format!(
                    " start=\"{}\"",
                    match s {
                        Value::Real(x) => format_real(x),
                        other => other.to_string(),
                    }
                )
            })
            .unwrap_or_default();
        out.push_str(&format!(
            "    <ScalarVariable name=\"{}\" valueReference=\"{}\" causality=\"{}\" variability=\"{}\">\n      <{}{}/>\n    </ScalarVariable>\n",
            v.name, v.value_reference, v.causality, variability, v.vtype, start
        ));
    }
    out.push_str("  </ModelVariables>\n</fmiModelDescription>\n");
    out
}

fn input_trace(case: &Case, vars: &VariableTable) -> Trace {
    let times: Vec<f64> = (0..SAMPLES).map(|k| k as f64 / 100.0).collect();
    debug_assert!((times[1] - STEP).abs() < 1e-15);
    let columns = vars
        .iter()
        .filter(|v| v.causality == Causality::Input)
        .map(|v| {
            (
                v.name.clone(),
                times.iter().map(|&t| (case.inputs)(&v.name, t)).collect(),
            )
        })
        .collect();
    Trace::new(times, columns).expect("fixture input grid is valid")
}

fn readme(case: &Case, vars: &VariableTable, slots: usize) -> String {
    let mut out = format!(
        "# {} fixture\n\n{}\n\n## Equations\n\n```\n",
        case.model_name, case.summary
    );
    for e in case.equations {
        out.push_str(&format!("{} = {}\n", e.lhs, e.rhs));
    }
    out.push_str("```\n\n## Coefficients\n\n");
    for v in vars.iter().filter(|v| v.causality == Causality::Parameter) {
        if let Some(s) = v.start {
            out.push_str(&format!("- `{}` = {}\n", v.name, s));
        }
    }
    out.push_str(&format!(
        "\n## Counts\n\n- equations: {}\n- variables: {}\n- symbol slots after temporary elimination: {}\n\n\
         Inputs are sampled every {STEP} s over 0..1 s. `traces/reference.csv` is the ground-truth model simulated on \
         `traces/input.csv`; `ground_truth.json` holds the slot-to-variable genes.\n",
        case.equations.len(),
        vars.len(),
        slots
    ));
    out
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub dir: PathBuf,
    pub ground_truth: Chromosome,
    /// `(equations, variables, slots)`.
    pub counts: (usize, usize, usize),
    pub mixed_types: bool,
}

/// Writes the named fixture into `dir` and returns its summary. Fails on
/// an unknown name or if the ground truth does not translate and simulate.
pub fn build_fixture(name: &str, dir: &Path) -> Result<Fixture, PipelineError> {
    let case = case(name).ok_or_else(|| PipelineError::Mapping {
        path: dir.to_path_buf(),
        reason: format!(
            "unknown fixture `{name}`; expected one of {}",
            FIXTURE_NAMES.join(", ")
        ),
    })?;
    let vars = table_of(&case);
    let dec = Decompiler {
        vars: &vars,
        offsets: layout(&vars),
    };
    let mut source = format!("// {} step routine, decompiled\n\n", case.model_name);
    source.push_str(case.extra_functions);
    source.push_str(&print_unit(&CodeUnit {
        functions: vec![dec.function(&case)],
    }));

    write_file(&dir.join(DESCRIPTION_FILE), &description_xml(&case, &vars))?;
    write_file(
        &dir.join("sources").join(format!("{}_step.c", case.name)),
        &source,
    )?;
    if let Some(rules) = case.rules {
        write_file(&dir.join(RULES_FILE), rules)?;
    }
    let inputs = input_trace(&case, &vars);
    write_file(&dir.join(INPUT_TRACE), &inputs.to_csv())?;

    let translated = translate_container(dir)?;
    let by_offset: HashMap<u64, &str> = dec.offsets.iter().map(|(n, o)| (*o, n.as_str())).collect();
    let genes = translated
        .model
        .slots
        .iter()
        .map(|s| match &s.origin {
            SlotOrigin::Offset(o) => vars
                .position(by_offset[o])
                .expect("layout covers the table"),
            SlotOrigin::Ident(n) => panic!("fixture slot `{n}` survived temporary elimination"),
        })
        .collect();
    let ground_truth = Chromosome::new(genes);
    let reference = simulate_mapping(&translated, &ground_truth, &inputs)?;
    write_trace(&dir.join(REFERENCE_TRACE), &reference)?;
    write_file(&dir.join(GROUND_TRUTH_FILE), &mapping_json(&ground_truth))?;
    let slots = translated.model.slots.len();
    write_file(&dir.join("README.md"), &readme(&case, &vars, slots))?;

    assert!(slots <= case.max_slots, "{name}: {slots} slots");
    Ok(Fixture {
        name: case.name.to_string(),
        dir: dir.to_path_buf(),
        ground_truth,
        counts: (case.equations.len(), vars.len(), slots),
        mixed_types: vars.iter().any(|v| v.vtype != VarType::Real),
    })
}

/// Three slots, one equation: `s1 = if s3 then s2 else 0.0` over
/// `y` (Real output), `u` (Real input) and `f` (Boolean parameter).
pub fn tiny_instance() -> (EquationModel, VariableTable) {
    let m = EquationModel {
        equations: vec![Equation::new(
            Expr::Var(0),
            Expr::if_then_else(Expr::Var(2), Expr::Var(1), Expr::real(0.0)),
        )],
        slots: (0..3)
            .map(|id: SlotId| SymbolSlot {
                id,
                origin: SlotOrigin::Ident(format!("s{}", id + 1)),
                inferred_type: SlotType::Unknown,
                is_state: false,
            })
            .collect(),
    };
    let vars = VariableTable::new(vec![
        parse_var("y:R:output", 0),
        parse_var("u:R:input", 1),
        parse_var("f:B:parameter=true", 2),
    ])
    .expect("tiny table");
    (infer_symbol_types(&m).expect("tiny instance types"), vars)
}

/// The tiny instance with an 11-sample input ramp and the reference
/// produced by the mapping `(y, u, f)`.
pub fn tiny_problem() -> Problem {
    let (m, vars) = tiny_instance();
    let times: Vec<f64> = (0..11).map(|k| k as f64 / 10.0).collect();
    let u: Vec<f64> = times.iter().map(|t| 0.5 + t).collect();
    let inputs = Trace::new(times.clone(), vec![("u".into(), u.clone())]).expect("tiny inputs");
    let reference = Trace::new(times, vec![("y".into(), u)]).expect("tiny reference");
    Problem::new(m, vars, Some(inputs), Some(reference))
}
