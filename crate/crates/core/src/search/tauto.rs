//! Classical propositional validity by truth table.

use std::time::Instant;

use crate::kernel::expr::{alpha_eq, lower};
use crate::kernel::{whnf, Environment, Expr, TypeChecker};

/// Largest atom count the checker accepts.
pub const MAX_ATOMS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(usize),
    True,
    False,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn negation(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Evaluate under an assignment given as a bitmask over atom indices.
    pub fn eval(&self, bits: u64) -> bool {
        match self {
            Formula::Atom(i) => bits >> i & 1 == 1,
            Formula::True => true,
            Formula::False => false,
            Formula::Not(a) => !a.eval(bits),
            Formula::And(a, b) => a.eval(bits) && b.eval(bits),
            Formula::Or(a, b) => a.eval(bits) || b.eval(bits),
            Formula::Imp(a, b) => !a.eval(bits) || b.eval(bits),
            Formula::Iff(a, b) => a.eval(bits) == b.eval(bits),
        }
    }

    pub fn max_atom(&self) -> Option<usize> {
        match self {
            Formula::Atom(i) => Some(*i),
            Formula::True | Formula::False => None,
            Formula::Not(a) => a.max_atom(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                a.max_atom().max(b.max_atom())
            }
        }
    }

    /// Render in the surface syntax with atoms named by `names`.
    pub fn render(&self, names: &[&str]) -> String {
        fn go(f: &Formula, names: &[&str], prec: u32) -> String {
            let (s, p) = match f {
                Formula::Atom(i) => (names[*i].to_string(), 1024),
                Formula::True => ("true".to_string(), 1024),
                Formula::False => ("false".to_string(), 1024),
                Formula::Not(a) => (format!("¬{}", go(a, names, 40)), 40),
                Formula::And(a, b) => (format!("{} ∧ {}", go(a, names, 36), go(b, names, 35)), 35),
                Formula::Or(a, b) => (format!("{} ∨ {}", go(a, names, 31), go(b, names, 30)), 30),
                Formula::Imp(a, b) => (format!("{} → {}", go(a, names, 26), go(b, names, 25)), 25),
                Formula::Iff(a, b) => (format!("{} ↔ {}", go(a, names, 21), go(b, names, 21)), 20),
            };
            if p < prec {
                format!("({s})")
            } else {
                s
            }
        }
        go(self, names, 0)
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum TautoOutcome {
    Valid,
    Invalid,
    TooManyAtoms(usize),
    TimedOut,
}

/// Check validity over `atoms` variables, polling `deadline` as rows are
/// enumerated.
pub fn is_tautology(f: &Formula, atoms: usize, deadline: Option<Instant>) -> TautoOutcome {
    if atoms > MAX_ATOMS {
        return TautoOutcome::TooManyAtoms(atoms);
    }
    for bits in 0..1u64 << atoms {
        if bits & 0xfff == 0 {
            if let Some(d) = deadline {
                if Instant::now() > d {
                    return TautoOutcome::TimedOut;
                }
            }
        }
        if !f.eval(bits) {
            return TautoOutcome::Invalid;
        }
    }
    TautoOutcome::Valid
}

/// Translates kernel propositions into formulas, collecting atoms up to
/// alpha equivalence.
pub struct Translator<'a> {
    env: &'a Environment,
    pub atoms: Vec<Expr>,
}

impl<'a> Translator<'a> {
    pub fn new(env: &'a Environment) -> Self {
        Self { env, atoms: Vec::new() }
    }

    fn atom(&mut self, e: &Expr) -> Formula {
        match self.atoms.iter().position(|a| alpha_eq(a, e)) {
            Some(i) => Formula::Atom(i),
            None => {
                self.atoms.push(e.clone());
                Formula::Atom(self.atoms.len() - 1)
            }
        }
    }

    pub fn translate(&mut self, e: &Expr) -> Formula {
        if e.is_const("true") {
            return Formula::True;
        }
        if e.is_const("false") {
            return Formula::False;
        }
        if let Some(a) = e.const_app("not", 1) {
            let a = a[0].clone();
            return Formula::negation(self.translate(&a));
        }
        for (name, mk) in [
            ("and", Formula::and as fn(Formula, Formula) -> Formula),
            ("or", Formula::or),
            ("iff", Formula::iff),
        ] {
            if let Some(args) = e.const_app(name, 2) {
                let (a, b) = (args[0].clone(), args[1].clone());
                let fa = self.translate(&a);
                return mk(fa, self.translate(&b));
            }
        }
        if let Expr::Pi(b, body) = e {
            if let Some(body) = lower(body, 1, 0) {
                if TypeChecker::full(self.env).is_prop(&b.ty) {
                    let fa = self.translate(&b.ty);
                    return Formula::imp(fa, self.translate(&body));
                }
            }
        }
        let w = whnf(self.env, e);
        if !alpha_eq(&w, e) {
            return self.translate(&w);
        }
        self.atom(e)
    }
}
