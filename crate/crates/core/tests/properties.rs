use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use construct::cparse::interp::{exec, Env};
use construct::cparse::{parse_c_expr, print_expr, BinaryOp, Callee, CodeExpr, UnaryOp};
use construct::expr::{Expr, Value};
use construct::fixtures::{build_fixture, tiny_problem, FIXTURE_NAMES};
use construct::ga::{crossover, generate_individual, mutate, Chromosome, GaConfig, Mode, Problem};
use construct::isolate::{isolate_step_function, normalize_primitives};
use construct::pipeline::{translate_container, Translated};
use construct::sim::Fitness;
use construct::translate::SlotOrigin;

fn code_expr() -> impl Strategy<Value = CodeExpr> {
    let leaf = prop_oneof![
        (0i64..1000).prop_map(CodeExpr::IntLit),
        (0.0f64..1e6).prop_map(CodeExpr::RealLit),
        prop::sample::select(vec!["a", "b", "dVar1", "param_2"]).prop_map(CodeExpr::ident),
        (0u64..64).prop_map(|k| CodeExpr::deref("param_1", 0x10 + 8 * k)),
    ];
    let ops = vec![
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::And,
        BinaryOp::Or,
    ];
    leaf.prop_recursive(5, 48, 3, move |inner| {
        prop_oneof![
            (
                prop::sample::select(ops.clone()),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| CodeExpr::binary(op, l, r)),
            (
                prop::sample::select(vec![UnaryOp::Neg, UnaryOp::Not]),
                inner.clone()
            )
                .prop_map(|(op, e)| CodeExpr::unary(op, e)),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, f)| CodeExpr::Ternary(
                Box::new(c),
                Box::new(t),
                Box::new(f)
            )),
            (
                prop::sample::select(vec![Callee::Fmin, Callee::Fmax]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(c, a, b)| CodeExpr::Call(c, vec![a, b])),
            inner.prop_map(|a| CodeExpr::Call(Callee::Fabs, vec![a])),
        ]
    })
}

fn fixtures() -> &'static [(tempfile::TempDir, Translated)] {
    use std::sync::OnceLock;
    static CELL: OnceLock<Vec<(tempfile::TempDir, Translated)>> = OnceLock::new();
    CELL.get_or_init(|| {
        FIXTURE_NAMES
            .iter()
            .map(|name| {
                let dir = tempfile::tempdir().unwrap();
                build_fixture(name, dir.path()).unwrap();
                let t = translate_container(dir.path()).unwrap();
                (dir, t)
            })
            .collect()
    })
}

/// Straightforward tree-walking evaluator over slot values, written
/// separately from the simulator's compiled form.
fn eval(e: &Expr<usize>, slots: &[f64]) -> f64 {
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    match e {
        Expr::Const(Value::Real(v)) => *v,
        Expr::Const(Value::Integer(v)) => *v as f64,
        Expr::Const(Value::Boolean(v)) => b(*v),
        Expr::Var(s) => slots[*s],
        Expr::Der(_) => panic!("der on a right-hand side"),
        Expr::Unary(UnaryOp::Neg, x) => -eval(x, slots),
        Expr::Unary(UnaryOp::Not, x) => b(eval(x, slots) == 0.0),
        Expr::Binary(op, l, r) => {
            let (x, y) = (eval(l, slots), eval(r, slots));
            match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                BinaryOp::Div => x / y,
                BinaryOp::Lt => b(x < y),
                BinaryOp::Le => b(x <= y),
                BinaryOp::Gt => b(x > y),
                BinaryOp::Ge => b(x >= y),
                BinaryOp::Eq => b(x == y),
                BinaryOp::Ne => b(x != y),
                BinaryOp::And => b(x != 0.0 && y != 0.0),
                BinaryOp::Or => b(x != 0.0 || y != 0.0),
            }
        }
        Expr::If(c, t, f) => {
            if eval(c, slots) != 0.0 {
                eval(t, slots)
            } else {
                eval(f, slots)
            }
        }
        Expr::Min(x, y) => eval(x, slots).min(eval(y, slots)),
        Expr::Max(x, y) => eval(x, slots).max(eval(y, slots)),
        Expr::Abs(x) => eval(x, slots).abs(),
    }
}

fn offset(o: &SlotOrigin) -> u64 {
    match o {
        SlotOrigin::Offset(o) => *o,
        SlotOrigin::Ident(n) => panic!("unexpected identifier slot {n}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(e in code_expr()) {
        let text = print_expr(&e);
        let back = parse_c_expr(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e, "{}", text);
    }
}

#[test]
fn normalization_is_idempotent_on_fixtures() {
    for (_, t) in fixtures() {
        let again = normalize_primitives(&t.step, &t.rules).unwrap();
        assert_eq!(again, t.step);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Executing the decompiled step and stepping the translated equations
    /// in program order leave memory in the same state.
    #[test]
    fn translated_equations_match_decompiled_code(
        values in prop::collection::vec(-2.0f64..2.0, 80),
        flags in prop::collection::vec(any::<bool>(), 80),
        h in 0.001f64..0.1,
        which in 0usize..3,
    ) {
        let (_, t) = &fixtures()[which];
        let vars = &t.container.variable_table;
        let unit = construct::pipeline::parse_sources(&t.container.sources).unwrap();
        let f = unit.function(&t.step.function).unwrap();

        // Initial memory: every struct offset the code touches.
        let mut env = Env::default();
        env.idents.insert("param_2".into(), h);
        let mut init: HashMap<u64, f64> = HashMap::new();
        for (i, s) in t.model.slots.iter().enumerate() {
            let v = match t.model.slot_type(s.id).known() {
                Some(construct::container::VarType::Real) | None => values[i],
                Some(construct::container::VarType::Boolean) => f64::from(u8::from(flags[i])),
                Some(construct::container::VarType::Integer) => (values[i] * 3.0).round(),
            };
            init.insert(offset(&s.origin), v);
        }
        env.memory = init.clone();
        exec(&f.body, &mut env).unwrap();

        let mut slots: Vec<f64> = t.model.slots.iter().map(|s| init[&offset(&s.origin)]).collect();
        for eq in &t.model.equations {
            let v = eval(&eq.rhs, &slots);
            match &eq.lhs {
                Expr::Var(s) => slots[*s] = v,
                Expr::Der(s) => slots[*s] += h * v,
                other => panic!("lhs {other:?}"),
            }
        }
        for (s, slot) in t.model.slots.iter().enumerate() {
            let expected = env.memory[&offset(&slot.origin)];
            prop_assert!((slots[s] - expected).abs() <= 1e-12, "slot {} of {}: {} vs {}", s, vars.len(), slots[s], expected);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Rewriting primitives does not change what the step computes.
    #[test]
    fn normalization_preserves_execution(
        values in prop::collection::vec(-2.0f64..2.0, 80),
        h in 0.001f64..0.1,
        which in 0usize..3,
    ) {
        let (_, t) = &fixtures()[which];
        let unit = construct::pipeline::parse_sources(&t.container.sources).unwrap();
        let raw = isolate_step_function(&unit, &t.rules).unwrap();
        let normalized = normalize_primitives(&raw, &t.rules).unwrap();
        let mut memory = HashMap::new();
        for (i, s) in t.model.slots.iter().enumerate() {
            let v = match t.model.slot_type(s.id).known() {
                Some(construct::container::VarType::Real) | None => values[i],
                _ => f64::from(u8::from(values[i] > 0.0)),
            };
            memory.insert(offset(&s.origin), v);
        }
        let run = |body: &[construct::cparse::CodeStmt]| {
            let mut env = Env { memory: memory.clone(), ..Env::default() };
            env.idents.insert("param_2".into(), h);
            exec(body, &mut env).unwrap();
            env.memory
        };
        let (a, b) = (run(&raw.statements), run(&normalized.statements));
        for (k, v) in &a {
            prop_assert!((v - b[k]).abs() <= 1e-12, "offset {:#x}: {} vs {}", k, v, b[k]);
        }
    }
}

fn gen_chromosome(n_vars: usize, n_slots: usize) -> impl Strategy<Value = Chromosome> {
    Just((0..n_vars).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(move |v| Chromosome::new(v[..n_slots].to_vec()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fitness_total_order(a in prop::option::of(0.0f64..1e6), b in prop::option::of(0.0f64..1e6)) {
        let fa = a.map_or(Fitness::Invalid, Fitness::Finite);
        let fb = b.map_or(Fitness::Invalid, Fitness::Finite);
        match (a, b) {
            (Some(x), Some(y)) => prop_assert_eq!(fa.cmp(&fb), x.total_cmp(&y)),
            (Some(_), None) => prop_assert!(fa < fb),
            (None, Some(_)) => prop_assert!(fa > fb),
            (None, None) => prop_assert_eq!(fa, fb),
        }
    }

    #[test]
    fn invalid_assignments_score_invalid(c in gen_chromosome(18, 15)) {
        let (_, t) = &fixtures()[0];
        let p = t.problem();
        if !p.validate(&c).valid {
            prop_assert_eq!(p.evaluate(&c), Fitness::Invalid);
        }
    }

    /// Every chromosome a CbC operator hands out passes every constraint.
    #[test]
    fn cbc_operators_stay_admissible(seed in any::<u64>(), which in 0usize..3) {
        let (_, t) = &fixtures()[which];
        let p: Problem = t.problem();
        let cfg = GaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = generate_individual(Mode::Cbc, &p, &cfg, &mut rng).unwrap();
        let b = generate_individual(Mode::Cbc, &p, &cfg, &mut rng).unwrap();
        let m = mutate(Mode::Cbc, &a, &p, &cfg, &mut rng);
        let (c1, c2) = crossover(Mode::Cbc, &a, &b, &p, &cfg, &mut rng).unwrap();
        for c in [&a, &b, &m, &c1, &c2] {
            let report = p.validate(c);
            prop_assert!(report.valid, "{}", report);
            prop_assert!(c.is_injective());
        }
    }

    #[test]
    fn cbt_init_is_injective_and_in_range(seed in any::<u64>()) {
        let p = tiny_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = generate_individual(Mode::Cbt, &p, &GaConfig::default(), &mut rng).unwrap();
        prop_assert!(c.is_injective());
        prop_assert!(c.genes.iter().all(|&g| g < 3));
    }
}
