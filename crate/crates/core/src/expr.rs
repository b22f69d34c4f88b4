//! Model-level expressions, generic over what a variable reference is: a
//! symbol-slot id before binding, a variable name after.

pub use crate::container::Value;
pub use crate::cparse::{BinaryOp, UnaryOp};

pub type SlotId = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr<V> {
    Const(Value),
    Var(V),
    Unary(UnaryOp, Box<Expr<V>>),
    Binary(BinaryOp, Box<Expr<V>>, Box<Expr<V>>),
    If(Box<Expr<V>>, Box<Expr<V>>, Box<Expr<V>>),
    Der(V),
    Min(Box<Expr<V>>, Box<Expr<V>>),
    Max(Box<Expr<V>>, Box<Expr<V>>),
    Abs(Box<Expr<V>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equation<V> {
    pub lhs: Expr<V>,
    pub rhs: Expr<V>,
}

impl<V> Expr<V> {
    pub fn real(v: f64) -> Self {
        Expr::Const(Value::Real(v))
    }

    pub fn binary(op: BinaryOp, l: Expr<V>, r: Expr<V>) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn unary(op: UnaryOp, e: Expr<V>) -> Self {
        Expr::Unary(op, Box::new(e))
    }

    pub fn if_then_else(c: Expr<V>, t: Expr<V>, f: Expr<V>) -> Self {
        Expr::If(Box::new(c), Box::new(t), Box::new(f))
    }

    pub fn children(&self) -> Vec<&Expr<V>> {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Der(_) => vec![],
            Expr::Unary(_, e) | Expr::Abs(e) => vec![e],
            Expr::Binary(_, l, r) | Expr::Min(l, r) | Expr::Max(l, r) => vec![l, r],
            Expr::If(c, t, f) => vec![c, t, f],
        }
    }

    /// Visits every variable reference; the flag is true under `der`.
    pub fn for_each_var<'a>(&'a self, f: &mut dyn FnMut(&'a V, bool)) {
        match self {
            Expr::Var(v) => f(v, false),
            Expr::Der(v) => f(v, true),
            _ => self.children().into_iter().for_each(|c| c.for_each_var(f)),
        }
    }

    pub fn map_vars<W>(&self, f: &mut dyn FnMut(&V) -> W) -> Expr<W> {
        let mut m = |e: &Expr<V>| Box::new(e.map_vars(f));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => Expr::Var(f(v)),
            Expr::Der(v) => Expr::Der(f(v)),
            Expr::Unary(op, e) => Expr::Unary(*op, m(e)),
            Expr::Abs(e) => Expr::Abs(m(e)),
            Expr::Binary(op, l, r) => {
                let l = m(l);
                Expr::Binary(*op, l, m(r))
            }
            Expr::Min(l, r) => {
                let l = m(l);
                Expr::Min(l, m(r))
            }
            Expr::Max(l, r) => {
                let l = m(l);
                Expr::Max(l, m(r))
            }
            Expr::If(c, t, e) => {
                let c = m(c);
                let t = m(t);
                Expr::If(c, t, m(e))
            }
        }
    }
}

impl<V: PartialEq> Expr<V> {
    pub fn count_var(&self, v: &V) -> usize {
        let mut n = 0;
        self.for_each_var(&mut |w, _| {
            if w == v {
                n += 1;
            }
        });
        n
    }

    pub fn mentions(&self, v: &V) -> bool {
        self.count_var(v) > 0
    }
}

impl<V> Equation<V> {
    pub fn new(lhs: Expr<V>, rhs: Expr<V>) -> Self {
        Equation { lhs, rhs }
    }

    pub fn for_each_var<'a>(&'a self, f: &mut dyn FnMut(&'a V, bool)) {
        self.lhs.for_each_var(f);
        self.rhs.for_each_var(f);
    }

    pub fn map_vars<W>(&self, f: &mut dyn FnMut(&V) -> W) -> Equation<W> {
        Equation {
            lhs: self.lhs.map_vars(f),
            rhs: self.rhs.map_vars(f),
        }
    }

    /// The state variable if this is a `der(x) = ...` equation.
    pub fn state(&self) -> Option<&V> {
        match &self.lhs {
            Expr::Der(v) => Some(v),
            _ => None,
        }
    }
}

impl<V: PartialEq> Equation<V> {
    pub fn count_var(&self, v: &V) -> usize {
        self.lhs.count_var(v) + self.rhs.count_var(v)
    }
}
