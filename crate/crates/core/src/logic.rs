//! Terms, properties, assertions, path programs and Hoare triples, with
//! evaluation at hybrid states and under symbol valuations.
//!
//! A property is a pair `(D, H)`: a discrete condition over level atoms and a
//! hybrid condition that may also mention fractional parts, celerity symbols
//! and duration symbols. Fractional-part symbols come in two flavours per
//! state index: the exiting part `pi[u,i]` and the entering part `pi'[u,i]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::HybridState;
use crate::model::{CelerityKey, DiscreteState, Grn, ModelError};

/// Absolute tolerance for equality comparisons during evaluation.
pub const EQ_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unbound symbol {0}")]
    Unbound(String),
    #[error("division by zero in term")]
    DivisionByZero,
    #[error("no discrete state available to evaluate eta_{0}")]
    NoDiscreteState(String),
    #[error("no fractional parts available to evaluate {0}")]
    NoFractionalState(String),
    #[error("cyclic elimination chain at {0}")]
    CyclicElimination(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Comparison operators allowed in atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Cmp {
    pub fn eval(self, lhs: f64, rhs: f64) -> bool {
        let close = (lhs - rhs).abs() <= EQ_TOLERANCE * f64::max(1.0, lhs.abs().max(rhs.abs()));
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Eq => close,
            Cmp::Ne => !close,
        }
    }
}

/// Arithmetic terms over levels, fractional parts, celerities and durations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    Const { value: f64 },
    /// Discrete level of a variable.
    Eta(String),
    /// Exiting fractional part; `index` is a state index when present.
    PiExit { var: String, index: Option<u32> },
    /// Entering fractional part.
    PiEntry { var: String, index: Option<u32> },
    Celerity(CelerityKey),
    Duration(String),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Div(Box<Term>, Box<Term>),
}

impl Term {
    pub fn constant(value: f64) -> Term {
        Term::Const { value }
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Term, b: Term) -> Term {
        Term::Div(Box::new(a), Box::new(b))
    }

    pub fn pi_exit(var: impl Into<String>, index: u32) -> Term {
        Term::PiExit { var: var.into(), index: Some(index) }
    }

    pub fn pi_entry(var: impl Into<String>, index: u32) -> Term {
        Term::PiEntry { var: var.into(), index: Some(index) }
    }

    pub fn from_symbol(sym: &Symbol) -> Term {
        match sym {
            Symbol::PiExit { var, index } => Term::pi_exit(var.clone(), *index),
            Symbol::PiEntry { var, index } => Term::pi_entry(var.clone(), *index),
            Symbol::Celerity(key) => Term::Celerity(key.clone()),
            Symbol::Duration(name) => Term::Duration(name.clone()),
        }
    }

    /// The symbol this term denotes, when it is a bare symbol.
    pub fn as_symbol(&self) -> Option<Symbol> {
        match self {
            Term::PiExit { var, index: Some(i) } => {
                Some(Symbol::PiExit { var: var.clone(), index: *i })
            }
            Term::PiEntry { var, index: Some(i) } => {
                Some(Symbol::PiEntry { var: var.clone(), index: *i })
            }
            Term::Celerity(key) => Some(Symbol::Celerity(key.clone())),
            Term::Duration(name) => Some(Symbol::Duration(name.clone())),
            _ => None,
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Term::Const { value } => Some(*value),
            _ => None,
        }
    }

    pub fn contains_symbol(&self, sym: &Symbol) -> bool {
        match self {
            Term::Const { .. } | Term::Eta(_) => false,
            Term::PiExit { .. } | Term::PiEntry { .. } | Term::Celerity(_) | Term::Duration(_) => {
                self.as_symbol().as_ref() == Some(sym)
            }
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.contains_symbol(sym) || b.contains_symbol(sym)
            }
        }
    }

    pub fn contains_eta(&self) -> bool {
        match self {
            Term::Eta(_) => true,
            Term::Const { .. }
            | Term::PiExit { .. }
            | Term::PiEntry { .. }
            | Term::Celerity(_)
            | Term::Duration(_) => false,
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.contains_eta() || b.contains_eta()
            }
        }
    }

    pub fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Term::Const { .. } | Term::Eta(_) => {}
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            _ => {
                if let Some(sym) = self.as_symbol() {
                    out.insert(sym);
                }
            }
        }
    }

    pub fn substitute_symbol(&self, sym: &Symbol, replacement: &Term) -> Term {
        match self {
            Term::Const { .. } | Term::Eta(_) => self.clone(),
            Term::Add(a, b) => Term::add(
                a.substitute_symbol(sym, replacement),
                b.substitute_symbol(sym, replacement),
            ),
            Term::Sub(a, b) => Term::sub(
                a.substitute_symbol(sym, replacement),
                b.substitute_symbol(sym, replacement),
            ),
            Term::Mul(a, b) => Term::mul(
                a.substitute_symbol(sym, replacement),
                b.substitute_symbol(sym, replacement),
            ),
            Term::Div(a, b) => Term::div(
                a.substitute_symbol(sym, replacement),
                b.substitute_symbol(sym, replacement),
            ),
            _ => {
                if self.as_symbol().as_ref() == Some(sym) {
                    replacement.clone()
                } else {
                    self.clone()
                }
            }
        }
    }

    /// Replaces `eta_v` by `eta_v + shift` (used by level substitution).
    pub fn shift_eta(&self, var: &str, shift: i32) -> Term {
        match self {
            Term::Eta(v) if v == var => {
                let delta = Term::constant(shift.abs() as f64);
                if shift >= 0 {
                    Term::add(self.clone(), delta)
                } else {
                    Term::sub(self.clone(), delta)
                }
            }
            Term::Add(a, b) => Term::add(a.shift_eta(var, shift), b.shift_eta(var, shift)),
            Term::Sub(a, b) => Term::sub(a.shift_eta(var, shift), b.shift_eta(var, shift)),
            Term::Mul(a, b) => Term::mul(a.shift_eta(var, shift), b.shift_eta(var, shift)),
            Term::Div(a, b) => Term::div(a.shift_eta(var, shift), b.shift_eta(var, shift)),
            _ => self.clone(),
        }
    }
}

/// A comparison atom between two terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub lhs: Term,
    pub op: Cmp,
    pub rhs: Term,
}

impl Atom {
    pub fn new(lhs: Term, op: Cmp, rhs: Term) -> Atom {
        Atom { lhs, op, rhs }
    }
}

/// Boolean conditions over atoms. Used for both the discrete and hybrid
/// parts of a property; implication appears only in generated intermediate
/// formulas and is rewritten away by the simplifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition {
    True,
    False,
    Atom(Atom),
    Not(Box<Condition>),
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Implies(Box<Condition>, Box<Condition>),
}

impl Condition {
    pub fn atom(lhs: Term, op: Cmp, rhs: Term) -> Condition {
        Condition::Atom(Atom::new(lhs, op, rhs))
    }

    pub fn negate(c: Condition) -> Condition {
        Condition::Not(Box::new(c))
    }

    /// Conjunction; empty is `top`, singletons collapse.
    pub fn and(mut parts: Vec<Condition>) -> Condition {
        match parts.len() {
            0 => Condition::True,
            1 => parts.pop().unwrap(),
            _ => Condition::And(parts),
        }
    }

    /// Disjunction; empty is `bot`, singletons collapse.
    pub fn or(mut parts: Vec<Condition>) -> Condition {
        match parts.len() {
            0 => Condition::False,
            1 => parts.pop().unwrap(),
            _ => Condition::Or(parts),
        }
    }

    pub fn implies(lhs: Condition, rhs: Condition) -> Condition {
        Condition::Implies(Box::new(lhs), Box::new(rhs))
    }

    /// True when the condition only uses discrete terms (levels and constants).
    pub fn is_discrete(&self) -> bool {
        match self {
            Condition::True | Condition::False => true,
            Condition::Atom(a) => discrete_term(&a.lhs) && discrete_term(&a.rhs),
            Condition::Not(c) => c.is_discrete(),
            Condition::And(cs) | Condition::Or(cs) => cs.iter().all(|c| c.is_discrete()),
            Condition::Implies(a, b) => a.is_discrete() && b.is_discrete(),
        }
    }

    pub fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Condition::True | Condition::False => {}
            Condition::Atom(a) => {
                a.lhs.collect_symbols(out);
                a.rhs.collect_symbols(out);
            }
            Condition::Not(c) => c.collect_symbols(out),
            Condition::And(cs) | Condition::Or(cs) => {
                for c in cs {
                    c.collect_symbols(out);
                }
            }
            Condition::Implies(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
        }
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    pub fn contains_symbol(&self, sym: &Symbol) -> bool {
        match self {
            Condition::True | Condition::False => false,
            Condition::Atom(a) => a.lhs.contains_symbol(sym) || a.rhs.contains_symbol(sym),
            Condition::Not(c) => c.contains_symbol(sym),
            Condition::And(cs) | Condition::Or(cs) => cs.iter().any(|c| c.contains_symbol(sym)),
            Condition::Implies(a, b) => a.contains_symbol(sym) || b.contains_symbol(sym),
        }
    }

    pub fn substitute_symbol(&self, sym: &Symbol, replacement: &Term) -> Condition {
        self.map_atoms(&|a| Atom {
            lhs: a.lhs.substitute_symbol(sym, replacement),
            op: a.op,
            rhs: a.rhs.substitute_symbol(sym, replacement),
        })
    }

    /// Level substitution `[eta_v \ eta_v + shift]` applied to every atom.
    pub fn shift_eta(&self, var: &str, shift: i32) -> Condition {
        self.map_atoms(&|a| Atom {
            lhs: a.lhs.shift_eta(var, shift),
            op: a.op,
            rhs: a.rhs.shift_eta(var, shift),
        })
    }

    pub fn map_atoms(&self, f: &impl Fn(&Atom) -> Atom) -> Condition {
        match self {
            Condition::True => Condition::True,
            Condition::False => Condition::False,
            Condition::Atom(a) => Condition::Atom(f(a)),
            Condition::Not(c) => Condition::negate(c.map_atoms(f)),
            Condition::And(cs) => Condition::And(cs.iter().map(|c| c.map_atoms(f)).collect()),
            Condition::Or(cs) => Condition::Or(cs.iter().map(|c| c.map_atoms(f)).collect()),
            Condition::Implies(a, b) => Condition::implies(a.map_atoms(f), b.map_atoms(f)),
        }
    }

    /// Top-level conjuncts (the condition itself when it is not a conjunction).
    pub fn conjuncts(&self) -> Vec<Condition> {
        match self {
            Condition::And(cs) => cs.clone(),
            Condition::True => Vec::new(),
            other => vec![other.clone()],
        }
    }
}

/// A property: discrete condition plus hybrid condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Property {
    pub d: Condition,
    pub h: Condition,
}

impl Property {
    pub fn new(d: Condition, h: Condition) -> Property {
        Property { d, h }
    }

    pub fn top() -> Property {
        Property { d: Condition::True, h: Condition::True }
    }
}

/// Free symbols of hybrid conditions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Symbol {
    PiExit { var: String, index: u32 },
    PiEntry { var: String, index: u32 },
    Celerity(CelerityKey),
    Duration(String),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::PiExit { var, index } => write!(f, "pi[{var},{index}]"),
            Symbol::PiEntry { var, index } => write!(f, "pi'[{var},{index}]"),
            Symbol::Celerity(key) => write!(f, "{key}"),
            Symbol::Duration(name) => write!(f, "{name}"),
        }
    }
}

/// A total assignment of reals to symbols.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Valuation(pub BTreeMap<Symbol, f64>);

impl Valuation {
    pub fn get(&self, sym: &Symbol) -> Option<f64> {
        self.0.get(sym).copied()
    }

    pub fn insert(&mut self, sym: Symbol, value: f64) {
        self.0.insert(sym, value);
    }

    /// Celerity assignments contained in the valuation.
    pub fn celerities(&self) -> BTreeMap<CelerityKey, f64> {
        self.0
            .iter()
            .filter_map(|(sym, v)| match sym {
                Symbol::Celerity(key) => Some((key.clone(), *v)),
                _ => None,
            })
            .collect()
    }
}

/// Duration of one path atom: a concrete value or a duration symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DurationTerm {
    Const { value: f64 },
    Symbol { name: String },
}

impl DurationTerm {
    pub fn to_term(&self) -> Term {
        match self {
            DurationTerm::Const { value } => Term::constant(*value),
            DurationTerm::Symbol { name } => Term::Duration(name.clone()),
        }
    }

    /// Concrete value, reading symbols from a valuation.
    pub fn value(&self, valuation: &Valuation) -> Option<f64> {
        match self {
            DurationTerm::Const { value } => Some(*value),
            DurationTerm::Symbol { name } => {
                valuation.get(&Symbol::Duration(name.clone()))
            }
        }
    }
}

/// Per-step annotations: abstract celerity bounds and slide events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assertion {
    Top,
    CelerityBound { var: String, op: Cmp, bound: f64 },
    Slide { var: String },
    SlidePlus { var: String },
    SlideMinus { var: String },
    Not { inner: Box<Assertion> },
    And { lhs: Box<Assertion>, rhs: Box<Assertion> },
    Or { lhs: Box<Assertion>, rhs: Box<Assertion> },
}

impl Assertion {
    pub fn not(inner: Assertion) -> Assertion {
        Assertion::Not { inner: Box::new(inner) }
    }

    pub fn and(lhs: Assertion, rhs: Assertion) -> Assertion {
        Assertion::And { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn or(lhs: Assertion, rhs: Assertion) -> Assertion {
        Assertion::Or { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }
}

/// Direction of a discrete path atom: `v+` or `v-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    Up,
    Down,
}

impl Dir {
    pub fn sign(self) -> i32 {
        match self {
            Dir::Up => 1,
            Dir::Down => -1,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Dir::Up => "+",
            Dir::Down => "-",
        }
    }
}

/// One path atom: duration, assertion and the level change it describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathAtom {
    pub duration: DurationTerm,
    pub assert: Assertion,
    pub var: String,
    pub dir: Dir,
}

/// A path program: atoms in execution order. Empty is the neutral path.
pub type PathProgram = Vec<PathAtom>;

/// A Hoare triple; `pre` is absent for precondition queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoareTriple {
    pub name: String,
    pub pre: Option<Property>,
    pub path: PathProgram,
    pub post: Property,
    pub cycle: bool,
}

/// Context for evaluating terms and conditions.
///
/// Resolution order for an indexed fractional symbol: the valuation, then the
/// elimination log (definitions recorded by equality propagation), then the
/// state's fractional parts when the index matches `state_index`.
#[derive(Clone, Copy, Default)]
pub struct EvalEnv<'a> {
    pub eta: Option<&'a DiscreteState>,
    pub pi: Option<&'a BTreeMap<String, f64>>,
    /// Indexed fractional symbols at this state index read `pi` (entering parts).
    pub state_index: Option<u32>,
    pub valuation: Option<&'a Valuation>,
    pub eliminations: &'a [(Symbol, Term)],
}

impl<'a> EvalEnv<'a> {
    pub fn for_state(h: &'a HybridState, valuation: Option<&'a Valuation>) -> EvalEnv<'a> {
        EvalEnv {
            eta: Some(&h.eta),
            pi: Some(&h.pi),
            state_index: None,
            valuation,
            eliminations: &[],
        }
    }

    pub fn resolve(&self, sym: &Symbol) -> Result<f64, EvalError> {
        self.resolve_depth(sym, 0)
    }

    fn resolve_depth(&self, sym: &Symbol, depth: usize) -> Result<f64, EvalError> {
        if depth > 64 {
            return Err(EvalError::CyclicElimination(sym.to_string()));
        }
        if let Some(val) = self.valuation.and_then(|v| v.get(sym)) {
            return Ok(val);
        }
        if let Some((_, term)) = self.eliminations.iter().find(|(s, _)| s == sym) {
            return self.eval_term_depth(term, depth + 1);
        }
        if let (Some(index), Some(pi)) = (self.state_index, self.pi) {
            let var = match sym {
                Symbol::PiEntry { var, index: i } if *i == index => Some(var),
                Symbol::PiExit { var, index: i } if *i == index => Some(var),
                _ => None,
            };
            if let Some(var) = var {
                if let Some(v) = pi.get(var) {
                    return Ok(*v);
                }
            }
        }
        Err(EvalError::Unbound(sym.to_string()))
    }

    pub fn eval_term(&self, term: &Term) -> Result<f64, EvalError> {
        self.eval_term_depth(term, 0)
    }

    fn eval_term_depth(&self, term: &Term, depth: usize) -> Result<f64, EvalError> {
        if depth > 64 {
            return Err(EvalError::CyclicElimination(format!("{term:?}")));
        }
        Ok(match term {
            Term::Const { value } => *value,
            Term::Eta(var) => match self.eta {
                Some(eta) => eta.level(var)? as f64,
                None => return Err(EvalError::NoDiscreteState(var.clone())),
            },
            Term::PiExit { var, index: None } | Term::PiEntry { var, index: None } => {
                match self.pi.and_then(|pi| pi.get(var)) {
                    Some(v) => *v,
                    None => return Err(EvalError::NoFractionalState(var.clone())),
                }
            }
            Term::Add(a, b) => self.eval_term_depth(a, depth + 1)? + self.eval_term_depth(b, depth + 1)?,
            Term::Sub(a, b) => self.eval_term_depth(a, depth + 1)? - self.eval_term_depth(b, depth + 1)?,
            Term::Mul(a, b) => self.eval_term_depth(a, depth + 1)? * self.eval_term_depth(b, depth + 1)?,
            Term::Div(a, b) => {
                let num = self.eval_term_depth(a, depth + 1)?;
                let den = self.eval_term_depth(b, depth + 1)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            other => {
                let sym = other
                    .as_symbol()
                    .expect("non-composite term must be a symbol");
                self.resolve_depth(&sym, depth + 1)?
            }
        })
    }

    pub fn eval_condition(&self, cond: &Condition) -> Result<bool, EvalError> {
        Ok(match cond {
            Condition::True => true,
            Condition::False => false,
            Condition::Atom(a) => {
                let lhs = self.eval_term(&a.lhs)?;
                let rhs = self.eval_term(&a.rhs)?;
                a.op.eval(lhs, rhs)
            }
            Condition::Not(c) => !self.eval_condition(c)?,
            Condition::And(cs) => {
                let mut all = true;
                for c in cs {
                    all &= self.eval_condition(c)?;
                }
                all
            }
            Condition::Or(cs) => {
                let mut any = false;
                for c in cs {
                    any |= self.eval_condition(c)?;
                }
                any
            }
            Condition::Implies(a, b) => !self.eval_condition(a)? || self.eval_condition(b)?,
        })
    }
}

/// Evaluates a discrete condition at a discrete state.
pub fn eval_discrete(cond: &Condition, eta: &DiscreteState) -> Result<bool, EvalError> {
    EvalEnv { eta: Some(eta), ..Default::default() }.eval_condition(cond)
}

/// Satisfaction of a property at a hybrid state: both parts must hold.
///
/// `state_index`, when given, lets indexed fractional symbols at that index
/// read the state; all other symbols must come from the valuation or the
/// elimination log.
pub fn eval_property(
    p: &Property,
    h: &HybridState,
    valuation: Option<&Valuation>,
    state_index: Option<u32>,
    eliminations: &[(Symbol, Term)],
) -> Result<bool, EvalError> {
    let env = EvalEnv {
        eta: Some(&h.eta),
        pi: Some(&h.pi),
        state_index,
        valuation,
        eliminations,
    };
    Ok(env.eval_condition(&p.d)? && env.eval_condition(&p.h)?)
}

/// Satisfying discrete states of a condition, over the full level grid.
pub fn satisfying_states(grn: &Grn, cond: &Condition) -> Result<Vec<DiscreteState>, EvalError> {
    let mut out = Vec::new();
    for eta in grn.discrete_states() {
        if eval_discrete(cond, &eta)? {
            out.push(eta);
        }
    }
    Ok(out)
}

fn discrete_term(t: &Term) -> bool {
    match t {
        Term::Eta(_) => true,
        Term::Const { value } => value.fract() == 0.0,
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
            discrete_term(a) && discrete_term(b)
        }
        _ => false,
    }
}
