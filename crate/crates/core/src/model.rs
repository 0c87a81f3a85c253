//! Network data model: variables, multiplexes, celerity tables.
//!
//! A network is a tuple of variables (each with a maximal discrete level),
//! multiplexes (named threshold formulas regulating a target variable) and
//! a total celerity table indexed by (variable, resource set, level).
//! Edges are implicit: the predecessors of `v` are the multiplexes whose
//! target is `v`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{Atom, Cmp, Condition, Term};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("unknown multiplex '{0}'")]
    UnknownMultiplex(String),
    #[error("{omega:?} is not a resource subset of variable '{var}'")]
    NotAResourceSubset { var: String, omega: Vec<String> },
    #[error("celerity {0} is symbolic; a concrete value is required")]
    SymbolicCelerity(CelerityKey),
    #[error("level {level} out of range for variable '{var}' (boundary {boundary})")]
    LevelOutOfRange {
        var: String,
        level: u32,
        boundary: u32,
    },
}

/// A network variable with its maximal discrete level (boundary).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub boundary: u32,
}

/// Propositional formula over threshold atoms `v >= n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiplexFormula {
    Atom { var: String, threshold: u32 },
    Not { inner: Box<MultiplexFormula> },
    And { lhs: Box<MultiplexFormula>, rhs: Box<MultiplexFormula> },
    Or { lhs: Box<MultiplexFormula>, rhs: Box<MultiplexFormula> },
    Implies { lhs: Box<MultiplexFormula>, rhs: Box<MultiplexFormula> },
}

impl MultiplexFormula {
    pub fn atom(var: impl Into<String>, threshold: u32) -> Self {
        MultiplexFormula::Atom { var: var.into(), threshold }
    }

    pub fn not(inner: MultiplexFormula) -> Self {
        MultiplexFormula::Not { inner: Box::new(inner) }
    }

    pub fn and(lhs: MultiplexFormula, rhs: MultiplexFormula) -> Self {
        MultiplexFormula::And { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn or(lhs: MultiplexFormula, rhs: MultiplexFormula) -> Self {
        MultiplexFormula::Or { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn implies(lhs: MultiplexFormula, rhs: MultiplexFormula) -> Self {
        MultiplexFormula::Implies { lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    /// All threshold atoms appearing in the formula.
    pub fn atoms(&self) -> Vec<(&str, u32)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(&'a str, u32)>) {
        match self {
            MultiplexFormula::Atom { var, threshold } => out.push((var, *threshold)),
            MultiplexFormula::Not { inner } => inner.collect_atoms(out),
            MultiplexFormula::And { lhs, rhs }
            | MultiplexFormula::Or { lhs, rhs }
            | MultiplexFormula::Implies { lhs, rhs } => {
                lhs.collect_atoms(out);
                rhs.collect_atoms(out);
            }
        }
    }

    /// Evaluates the formula against a discrete state. Atoms read levels only.
    /// `phi => psi` is evaluated as `not phi or psi`.
    pub fn eval(&self, eta: &DiscreteState) -> Result<bool, ModelError> {
        Ok(match self {
            MultiplexFormula::Atom { var, threshold } => eta.level(var)? >= *threshold,
            MultiplexFormula::Not { inner } => !inner.eval(eta)?,
            MultiplexFormula::And { lhs, rhs } => lhs.eval(eta)? && rhs.eval(eta)?,
            MultiplexFormula::Or { lhs, rhs } => lhs.eval(eta)? || rhs.eval(eta)?,
            MultiplexFormula::Implies { lhs, rhs } => !lhs.eval(eta)? || rhs.eval(eta)?,
        })
    }

    /// Lowers the formula to a discrete condition over level atoms.
    pub fn to_condition(&self) -> Condition {
        match self {
            MultiplexFormula::Atom { var, threshold } => Condition::Atom(Atom {
                lhs: Term::Eta(var.clone()),
                op: Cmp::Ge,
                rhs: Term::constant(*threshold as f64),
            }),
            MultiplexFormula::Not { inner } => Condition::negate(inner.to_condition()),
            MultiplexFormula::And { lhs, rhs } => {
                Condition::and(vec![lhs.to_condition(), rhs.to_condition()])
            }
            MultiplexFormula::Or { lhs, rhs } => {
                Condition::or(vec![lhs.to_condition(), rhs.to_condition()])
            }
            MultiplexFormula::Implies { lhs, rhs } => {
                Condition::implies(lhs.to_condition(), rhs.to_condition())
            }
        }
    }
}

/// A named regulation: when `formula` holds, the multiplex is a resource of `target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multiplex {
    pub name: String,
    pub target: String,
    pub formula: MultiplexFormula,
}

/// Index of one celerity: variable, resource set and discrete level.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CelerityKey {
    pub var: String,
    pub resources: BTreeSet<String>,
    pub level: u32,
}

impl CelerityKey {
    pub fn new(var: impl Into<String>, resources: &[&str], level: u32) -> Self {
        CelerityKey {
            var: var.into(),
            resources: resources.iter().map(|s| s.to_string()).collect(),
            level,
        }
    }
}

impl fmt::Display for CelerityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let omega: Vec<&str> = self.resources.iter().map(|s| s.as_str()).collect();
        write!(f, "C[{},{{{}}},{}]", self.var, omega.join(","), self.level)
    }
}

/// A celerity table entry: a fixed real or a free symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CelerityValue {
    Symbolic,
    Concrete { value: f64 },
}

/// A discrete state: one level per variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteState(pub BTreeMap<String, u32>);

impl DiscreteState {
    pub fn new(levels: &[(&str, u32)]) -> Self {
        DiscreteState(levels.iter().map(|(v, n)| (v.to_string(), *n)).collect())
    }

    pub fn level(&self, var: &str) -> Result<u32, ModelError> {
        self.0
            .get(var)
            .copied()
            .ok_or_else(|| ModelError::UnknownVariable(var.to_string()))
    }

    pub fn set(&mut self, var: &str, level: u32) {
        self.0.insert(var.to_string(), level);
    }
}

impl fmt::Display for DiscreteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(v, n)| format!("{v}={n}")).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Sign requirement on one celerity level, used for profile checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignRel {
    Positive,
    Negative,
    Zero,
}

/// A hybrid gene regulatory network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grn {
    pub name: String,
    pub variables: Vec<Variable>,
    pub multiplexes: Vec<Multiplex>,
    pub celerities: BTreeMap<CelerityKey, CelerityValue>,
}

impl Grn {
    /// Builds a network, filling the celerity table with symbolic entries for
    /// every valid (variable, resource subset, level) not given concretely.
    pub fn new(
        name: impl Into<String>,
        variables: Vec<Variable>,
        multiplexes: Vec<Multiplex>,
        concrete: BTreeMap<CelerityKey, f64>,
    ) -> Grn {
        let mut grn = Grn {
            name: name.into(),
            variables,
            multiplexes,
            celerities: BTreeMap::new(),
        };
        let mut table = BTreeMap::new();
        for var in &grn.variables {
            for omega in grn.resource_subsets(&var.name) {
                for level in 0..=var.boundary {
                    let key = CelerityKey {
                        var: var.name.clone(),
                        resources: omega.clone(),
                        level,
                    };
                    let value = match concrete.get(&key) {
                        Some(&v) => CelerityValue::Concrete { value: v },
                        None => CelerityValue::Symbolic,
                    };
                    table.insert(key, value);
                }
            }
        }
        // Keep out-of-table concrete entries so validate can report them.
        for (key, value) in concrete {
            table
                .entry(key)
                .or_insert(CelerityValue::Concrete { value });
        }
        grn.celerities = table;
        grn
    }

    pub fn variable(&self, name: &str) -> Result<&Variable, ModelError> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))
    }

    pub fn boundary(&self, name: &str) -> Result<u32, ModelError> {
        Ok(self.variable(name)?.boundary)
    }

    pub fn multiplex(&self, name: &str) -> Result<&Multiplex, ModelError> {
        self.multiplexes
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| ModelError::UnknownMultiplex(name.to_string()))
    }

    /// Multiplexes whose target is `v`, in lexicographic order.
    pub fn predecessors(&self, v: &str) -> BTreeSet<String> {
        self.multiplexes
            .iter()
            .filter(|m| m.target == v)
            .map(|m| m.name.clone())
            .collect()
    }

    /// All subsets of `pred(v)`, in deterministic (bitmask) order.
    pub fn resource_subsets(&self, v: &str) -> Vec<BTreeSet<String>> {
        let preds: Vec<String> = self.predecessors(v).into_iter().collect();
        let mut out = Vec::with_capacity(1 << preds.len());
        for mask in 0u32..(1 << preds.len()) {
            let mut set = BTreeSet::new();
            for (i, p) in preds.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    set.insert(p.clone());
                }
            }
            out.push(set);
        }
        out
    }

    /// The resources of `v` at a discrete state: predecessors whose formula holds.
    pub fn resources(&self, eta: &DiscreteState, v: &str) -> Result<BTreeSet<String>, ModelError> {
        self.variable(v)?;
        let mut out = BTreeSet::new();
        for m in &self.multiplexes {
            if m.target == v && m.formula.eval(eta)? {
                out.insert(m.name.clone());
            }
        }
        Ok(out)
    }

    /// The condition that holds exactly when the resources of `v` are `omega`:
    /// the conjunction of the formulas in `omega` and the negations of the rest.
    pub fn resource_formula(
        &self,
        v: &str,
        omega: &BTreeSet<String>,
    ) -> Result<Condition, ModelError> {
        self.variable(v)?;
        let preds = self.predecessors(v);
        if !omega.is_subset(&preds) {
            return Err(ModelError::NotAResourceSubset {
                var: v.to_string(),
                omega: omega.iter().cloned().collect(),
            });
        }
        let mut parts = Vec::new();
        for name in &preds {
            let m = self.multiplex(name)?;
            let lowered = m.formula.to_condition();
            if omega.contains(name) {
                parts.push(lowered);
            } else {
                parts.push(Condition::negate(lowered));
            }
        }
        Ok(Condition::and(parts))
    }

    pub fn celerity(&self, key: &CelerityKey) -> Result<CelerityValue, ModelError> {
        self.celerities
            .get(key)
            .copied()
            .ok_or_else(|| ModelError::UnknownVariable(key.var.clone()))
    }

    /// Concrete celerity value, or an error carrying the symbolic key.
    pub fn concrete_celerity(&self, key: &CelerityKey) -> Result<f64, ModelError> {
        match self.celerity(key)? {
            CelerityValue::Concrete { value } => Ok(value),
            CelerityValue::Symbolic => Err(ModelError::SymbolicCelerity(key.clone())),
        }
    }

    /// The celerity key active at a discrete state: `(v, resources, level)`.
    pub fn active_key(&self, eta: &DiscreteState, v: &str) -> Result<CelerityKey, ModelError> {
        Ok(CelerityKey {
            var: v.to_string(),
            resources: self.resources(eta, v)?,
            level: eta.level(v)?,
        })
    }

    /// Overrides celerity table entries with values from `assignments`.
    pub fn with_celerities(&self, assignments: &BTreeMap<CelerityKey, f64>) -> Grn {
        let mut grn = self.clone();
        for (key, value) in assignments {
            if grn.celerities.contains_key(key) {
                grn.celerities
                    .insert(key.clone(), CelerityValue::Concrete { value: *value });
            }
        }
        grn
    }

    /// Iterates over every discrete state of the network.
    pub fn discrete_states(&self) -> Vec<DiscreteState> {
        let mut states = vec![BTreeMap::new()];
        for var in &self.variables {
            let mut next = Vec::with_capacity(states.len() * (var.boundary as usize + 1));
            for state in &states {
                for level in 0..=var.boundary {
                    let mut s = state.clone();
                    s.insert(var.name.clone(), level);
                    next.push(s);
                }
            }
            states = next;
        }
        states.into_iter().map(DiscreteState).collect()
    }

    /// Checks the network invariants and returns one diagnostic per violation.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        let mut seen = BTreeSet::new();
        for var in &self.variables {
            if var.boundary < 1 {
                diags.push(format!(
                    "variable '{}' must have boundary >= 1 (got {})",
                    var.name, var.boundary
                ));
            }
            if !seen.insert(var.name.clone()) {
                diags.push(format!("duplicate variable '{}'", var.name));
            }
        }
        let mut seen_m = BTreeSet::new();
        for m in &self.multiplexes {
            if !seen_m.insert(m.name.clone()) {
                diags.push(format!("duplicate multiplex '{}'", m.name));
            }
            if self.variable(&m.target).is_err() {
                diags.push(format!(
                    "multiplex '{}' targets unknown variable '{}'",
                    m.name, m.target
                ));
            }
            for (var, threshold) in m.formula.atoms() {
                match self.variable(var) {
                    Err(_) => diags.push(format!(
                        "multiplex '{}' references unknown variable '{}'",
                        m.name, var
                    )),
                    Ok(v) => {
                        if threshold < 1 || threshold > v.boundary {
                            diags.push(format!(
                                "multiplex '{}': threshold {} out of range 1..={} for '{}'",
                                m.name, threshold, v.boundary, var
                            ));
                        }
                    }
                }
            }
        }
        for key in self.celerities.keys() {
            match self.variable(&key.var) {
                Err(_) => diags.push(format!(
                    "celerity {} references unknown variable '{}'",
                    key, key.var
                )),
                Ok(v) => {
                    if key.level > v.boundary {
                        diags.push(format!(
                            "celerity {}: level {} out of range 0..={}",
                            key, key.level, v.boundary
                        ));
                    }
                    let preds = self.predecessors(&key.var);
                    for m in &key.resources {
                        if !preds.contains(m) {
                            diags.push(format!(
                                "celerity {}: unknown multiplex '{}' (not a predecessor of '{}')",
                                key, m, key.var
                            ));
                        }
                    }
                }
            }
        }
        // Concrete entries of a (variable, resource set) group must admit a sign profile.
        let mut groups: BTreeMap<(String, BTreeSet<String>), Vec<(u32, SignRel)>> = BTreeMap::new();
        for (key, value) in &self.celerities {
            if let CelerityValue::Concrete { value } = value {
                let rel = if *value > 0.0 {
                    SignRel::Positive
                } else if *value < 0.0 {
                    SignRel::Negative
                } else {
                    SignRel::Zero
                };
                groups
                    .entry((key.var.clone(), key.resources.clone()))
                    .or_default()
                    .push((key.level, rel));
            }
        }
        for ((var, resources), literals) in groups {
            if let Ok(boundary) = self.boundary(&var) {
                if !sign_profile_satisfiable(boundary, &literals) {
                    let omega: Vec<&str> = resources.iter().map(|s| s.as_str()).collect();
                    diags.push(format!(
                        "celerities of ({},{{{}}}) violate the sign profile discipline",
                        var,
                        omega.join(",")
                    ));
                }
            }
        }
        diags
    }
}

/// Whether some admissible sign profile is consistent with all literals.
///
/// Admissible profiles for a fixed (variable, resource set): all levels share
/// one nonzero sign, or there is a pivot level with value zero, positive signs
/// strictly below it and negative signs strictly above it.
pub fn sign_profile_satisfiable(boundary: u32, literals: &[(u32, SignRel)]) -> bool {
    admissible_profiles(boundary)
        .iter()
        .any(|profile| literals.iter().all(|(n, rel)| sign_matches(profile[*n as usize], *rel)))
}

/// All admissible sign vectors over levels `0..=boundary`.
pub fn admissible_profiles(boundary: u32) -> Vec<Vec<i8>> {
    let len = boundary as usize + 1;
    let mut out = Vec::with_capacity(len + 2);
    out.push(vec![1; len]);
    out.push(vec![-1; len]);
    for pivot in 0..len {
        let mut p = vec![0i8; len];
        for (n, slot) in p.iter_mut().enumerate() {
            *slot = match n.cmp(&pivot) {
                std::cmp::Ordering::Less => 1,
                std::cmp::Ordering::Equal => 0,
                std::cmp::Ordering::Greater => -1,
            };
        }
        out.push(p);
    }
    out
}

fn sign_matches(sign: i8, rel: SignRel) -> bool {
    match rel {
        SignRel::Positive => sign > 0,
        SignRel::Negative => sign < 0,
        SignRel::Zero => sign == 0,
    }
}

/// The worked two-variable oscillator network used across the test suite.
pub fn laci_network() -> Grn {
    Grn::new(
        "lacI_ntr",
        vec![
            Variable { name: "A".into(), boundary: 2 },
            Variable { name: "B".into(), boundary: 1 },
        ],
        vec![
            Multiplex {
                name: "m1".into(),
                target: "A".into(),
                formula: MultiplexFormula::atom("A", 1),
            },
            Multiplex {
                name: "m2".into(),
                target: "B".into(),
                formula: MultiplexFormula::atom("A", 2),
            },
            Multiplex {
                name: "m3".into(),
                target: "A".into(),
                formula: MultiplexFormula::not(MultiplexFormula::atom("B", 1)),
            },
        ],
        BTreeMap::new(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn laci_predecessors_are_derived_from_targets() {
        let grn = laci_network();
        assert_eq!(grn.predecessors("A"), set(&["m1", "m3"]));
        assert_eq!(grn.predecessors("B"), set(&["m2"]));
    }

    #[test]
    fn resources_match_worked_example_states() {
        let grn = laci_network();
        let eta = DiscreteState::new(&[("A", 1), ("B", 0)]);
        assert_eq!(grn.resources(&eta, "A").unwrap(), set(&["m1", "m3"]));
        let eta = DiscreteState::new(&[("A", 2), ("B", 1)]);
        assert_eq!(grn.resources(&eta, "B").unwrap(), set(&["m2"]));
    }

    #[test]
    fn resources_empty_without_predecessors() {
        let grn = Grn::new(
            "solo",
            vec![Variable { name: "X".into(), boundary: 1 }],
            vec![],
            BTreeMap::new(),
        );
        let eta = DiscreteState::new(&[("X", 0)]);
        assert!(grn.resources(&eta, "X").unwrap().is_empty());
    }

    #[test]
    fn resources_depend_only_on_the_discrete_state() {
        let grn = laci_network();
        for eta in grn.discrete_states() {
            let a = grn.resources(&eta, "A").unwrap();
            let b = grn.resources(&eta, "A").unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unknown_variable_is_reported() {
        let grn = laci_network();
        let eta = DiscreteState::new(&[("A", 0), ("B", 0)]);
        assert!(matches!(
            grn.resources(&eta, "Z"),
            Err(ModelError::UnknownVariable(_))
        ));
    }

    #[test]
    fn resource_formula_rejects_non_subsets() {
        let grn = laci_network();
        let err = grn.resource_formula("B", &set(&["m1"]));
        assert!(matches!(err, Err(ModelError::NotAResourceSubset { .. })));
    }

    #[test]
    fn exactly_one_resource_set_holds_per_state() {
        let grn = laci_network();
        for eta in grn.discrete_states() {
            for var in &grn.variables {
                let mut holding = Vec::new();
                for omega in grn.resource_subsets(&var.name) {
                    let formula = grn.resource_formula(&var.name, &omega).unwrap();
                    if crate::logic::eval_discrete(&formula, &eta).unwrap() {
                        holding.push(omega);
                    }
                }
                assert_eq!(holding.len(), 1, "state {eta} var {}", var.name);
                assert_eq!(holding[0], grn.resources(&eta, &var.name).unwrap());
            }
        }
    }

    #[test]
    fn sign_profile_rejects_positive_below_negative_above_gap() {
        // Positive at level 1 and negative at level 2 leaves no room for a pivot.
        assert!(!sign_profile_satisfiable(
            2,
            &[(1, SignRel::Positive), (2, SignRel::Negative)]
        ));
        assert!(!sign_profile_satisfiable(
            1,
            &[(0, SignRel::Positive), (1, SignRel::Negative)]
        ));
    }

    #[test]
    fn sign_profile_allows_uniform_signs() {
        assert!(sign_profile_satisfiable(
            2,
            &[(1, SignRel::Negative), (2, SignRel::Negative)]
        ));
        assert!(sign_profile_satisfiable(
            2,
            &[(0, SignRel::Positive), (2, SignRel::Positive)]
        ));
    }

    #[test]
    fn sign_profile_allows_pivot_with_zero() {
        assert!(sign_profile_satisfiable(
            2,
            &[(0, SignRel::Positive), (1, SignRel::Zero), (2, SignRel::Negative)]
        ));
        assert!(!sign_profile_satisfiable(
            2,
            &[(0, SignRel::Negative), (1, SignRel::Zero)]
        ));
    }

    #[test]
    fn validate_accepts_the_fixture() {
        assert!(laci_network().validate().is_empty());
    }

    #[test]
    fn validate_reports_threshold_out_of_range() {
        let grn = Grn::new(
            "bad",
            vec![
                Variable { name: "A".into(), boundary: 2 },
                Variable { name: "B".into(), boundary: 1 },
            ],
            vec![Multiplex {
                name: "m".into(),
                target: "A".into(),
                formula: MultiplexFormula::atom("B", 2),
            }],
            BTreeMap::new(),
        );
        let diags = grn.validate();
        assert!(diags.iter().any(|d| d.contains("out of range")), "{diags:?}");
    }

    #[test]
    fn validate_reports_sign_profile_violation() {
        let mut concrete = BTreeMap::new();
        concrete.insert(CelerityKey::new("B", &[], 0), -1.0);
        concrete.insert(CelerityKey::new("B", &[], 1), 1.0);
        let grn = Grn::new(
            "bad",
            vec![
                Variable { name: "A".into(), boundary: 2 },
                Variable { name: "B".into(), boundary: 1 },
            ],
            vec![],
            concrete,
        );
        let diags = grn.validate();
        assert!(
            diags.iter().any(|d| d.contains("sign profile")),
            "{diags:?}"
        );
    }
}
