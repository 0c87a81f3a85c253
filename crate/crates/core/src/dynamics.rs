//! Exact executable semantics: touch delays, walls, sliding variables,
//! continuous and discrete successors, and trace simulation for networks
//! with concrete celerities.
//!
//! Within a discrete state every variable moves at its active celerity.
//! Variables that face an internal or external wall in their direction of
//! motion are sliding: they stop on the wall border and do not compete for
//! the next discrete transition. The non-sliding variable with the least
//! touch delay exits first; the continuous successor moves every variable
//! to that exit time, then a discrete transition flips one level.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{Assertion, Cmp, Dir};
use crate::model::{DiscreteState, Grn, ModelError};

/// Tolerance for duration comparisons in assertion and trace checks.
pub const DURATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("negative duration {0}")]
    NegativeDuration(f64),
    #[error("fractional part of '{0}' missing from state")]
    MissingFraction(String),
}

/// A hybrid state: one discrete level and one fractional part per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridState {
    pub eta: DiscreteState,
    pub pi: BTreeMap<String, f64>,
}

impl HybridState {
    pub fn new(levels: &[(&str, u32)], fracs: &[(&str, f64)]) -> HybridState {
        HybridState {
            eta: DiscreteState::new(levels),
            pi: fracs.iter().map(|(v, x)| (v.to_string(), *x)).collect(),
        }
    }

    pub fn frac(&self, var: &str) -> Result<f64, DynamicsError> {
        self.pi
            .get(var)
            .copied()
            .ok_or_else(|| DynamicsError::MissingFraction(var.to_string()))
    }

    /// Same discrete state and fractional parts within `tol`.
    pub fn close_to(&self, other: &HybridState, tol: f64) -> bool {
        self.eta == other.eta
            && self.pi.len() == other.pi.len()
            && self
                .pi
                .iter()
                .all(|(v, x)| other.pi.get(v).is_some_and(|y| (x - y).abs() <= tol))
    }
}

impl std::fmt::Display for HybridState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pi: Vec<String> = self.pi.iter().map(|(v, x)| format!("{v}={x}")).collect();
        write!(f, "{} | pi: {}", self.eta, pi.join(" "))
    }
}

fn sgn(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Concrete celerity driving `v` at `h`.
pub fn active_celerity(grn: &Grn, h: &HybridState, v: &str) -> Result<f64, DynamicsError> {
    let key = grn.active_key(&h.eta, v)?;
    Ok(grn.concrete_celerity(&key)?)
}

/// Time for `v` to reach the border of its level, `+inf` when frozen.
pub fn touch_delay(grn: &Grn, h: &HybridState, v: &str) -> Result<f64, DynamicsError> {
    let c = active_celerity(grn, h, v)?;
    let pi = h.frac(v)?;
    Ok(if c == 0.0 {
        f64::INFINITY
    } else if c > 0.0 {
        (1.0 - pi) / c
    } else {
        -pi / c
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallStatus {
    pub external_wall: bool,
    pub internal_wall: bool,
}

/// Whether `v` potentially meets an external or internal wall at `h`.
///
/// External: moving below level 0 or above the boundary. Internal: the
/// celerity in the neighbouring level (with resources re-evaluated there)
/// has the opposite sign.
pub fn wall_status(grn: &Grn, h: &HybridState, v: &str) -> Result<WallStatus, DynamicsError> {
    let c = active_celerity(grn, h, v)?;
    let level = h.eta.level(v)?;
    let boundary = grn.boundary(v)?;
    let s = sgn(c);
    let external_wall = (s < 0 && level == 0) || (s > 0 && level == boundary);
    let mut internal_wall = false;
    if s != 0 && !external_wall {
        let neighbour_level = (level as i64 + s as i64) as u32;
        let mut eta2 = h.eta.clone();
        eta2.set(v, neighbour_level);
        let key = grn.active_key(&eta2, v)?;
        let c2 = grn.concrete_celerity(&key)?;
        internal_wall = s * sgn(c2) == -1;
    }
    Ok(WallStatus { external_wall, internal_wall })
}

/// Variables that potentially meet a wall at `h`.
pub fn sliding_variables(grn: &Grn, h: &HybridState) -> Result<BTreeSet<String>, DynamicsError> {
    let mut out = BTreeSet::new();
    for var in &grn.variables {
        let w = wall_status(grn, h, &var.name)?;
        if w.external_wall || w.internal_wall {
            out.insert(var.name.clone());
        }
    }
    Ok(out)
}

/// The knocking variables (non-sliding minimizers of the touch delay) and
/// the time spent in the qualitative state. `(empty, +inf)` when steady.
pub fn knocking(grn: &Grn, h: &HybridState) -> Result<(BTreeSet<String>, f64), DynamicsError> {
    let sliding = sliding_variables(grn, h)?;
    let mut best = f64::INFINITY;
    let mut first = BTreeSet::new();
    for var in &grn.variables {
        if sliding.contains(&var.name) {
            continue;
        }
        let d = touch_delay(grn, h, &var.name)?;
        if d.is_infinite() {
            continue;
        }
        if d < best {
            best = d;
            first.clear();
        }
        if d == best {
            first.insert(var.name.clone());
        }
    }
    Ok((first, best))
}

/// Result of moving to the exit point of the current discrete state.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousOutcome {
    /// No non-sliding variable can reach a border: the state is steady.
    Steady,
    Step { exit: HybridState, duration: f64 },
}

/// The unique continuous successor of `h`: knocking variables are placed on
/// their border, sliding variables advance and stop on their wall, and all
/// other variables advance by the exit time.
pub fn continuous_successor(grn: &Grn, h: &HybridState) -> Result<ContinuousOutcome, DynamicsError> {
    let (first, duration) = knocking(grn, h)?;
    if first.is_empty() {
        return Ok(ContinuousOutcome::Steady);
    }
    let mut pi = BTreeMap::new();
    for var in &grn.variables {
        let v = &var.name;
        let c = active_celerity(grn, h, v)?;
        let value = if first.contains(v) {
            (1.0 + sgn(c) as f64) / 2.0
        } else {
            // Sliding variables stop on their wall border. For the rest the
            // touch delay is at least the exit time, so the clamp only
            // absorbs floating-point noise at the borders.
            (h.frac(v)? + duration * c).clamp(0.0, 1.0)
        };
        pi.insert(v.clone(), value);
    }
    Ok(ContinuousOutcome::Step {
        exit: HybridState { eta: h.eta.clone(), pi },
        duration,
    })
}

/// One discrete successor per knocking variable sitting on its border:
/// the level steps by the celerity sign and the fractional part flips.
pub fn discrete_successors(
    grn: &Grn,
    h: &HybridState,
) -> Result<Vec<(String, Dir, HybridState)>, DynamicsError> {
    let (first, _) = knocking(grn, h)?;
    let mut out = Vec::new();
    for v in &first {
        if touch_delay(grn, h, v)? != 0.0 {
            continue;
        }
        let c = active_celerity(grn, h, v)?;
        let s = sgn(c);
        let dir = if s > 0 { Dir::Up } else { Dir::Down };
        let mut eta = h.eta.clone();
        eta.set(v, (h.eta.level(v)? as i64 + s as i64) as u32);
        let mut pi = h.pi.clone();
        pi.insert(v.clone(), (1.0 - s as f64) / 2.0);
        out.push((v.clone(), dir, HybridState { eta, pi }));
    }
    Ok(out)
}

/// Choice rule when several discrete transitions are possible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Always fire the lexicographically least knocking variable.
    Lexicographic,
    /// Seeded random choice among the knocking variables.
    SeededRandom(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceStep {
    Continuous { duration: f64, to: HybridState },
    Discrete { var: String, dir: Dir, to: HybridState },
}

/// An alternating run of continuous and discrete transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub initial: HybridState,
    pub steps: Vec<TraceStep>,
    pub elapsed: f64,
    /// Simulation stopped because no variable could exit.
    pub steady: bool,
}

impl Trace {
    /// States entered after each discrete transition, starting with the
    /// initial state.
    pub fn entering_states(&self) -> Vec<&HybridState> {
        let mut out = vec![&self.initial];
        for step in &self.steps {
            if let TraceStep::Discrete { to, .. } = step {
                out.push(to);
            }
        }
        out
    }
}

/// Alternates continuous and discrete successors from `h0` until a steady
/// state or the discrete-step budget is reached.
pub fn simulate(
    grn: &Grn,
    h0: &HybridState,
    max_steps: usize,
    policy: Policy,
) -> Result<Trace, DynamicsError> {
    let mut rng = match policy {
        Policy::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Policy::Lexicographic => None,
    };
    let mut trace = Trace {
        initial: h0.clone(),
        steps: Vec::new(),
        elapsed: 0.0,
        steady: false,
    };
    let mut current = h0.clone();
    for _ in 0..max_steps {
        match continuous_successor(grn, &current)? {
            ContinuousOutcome::Steady => {
                trace.steady = true;
                return Ok(trace);
            }
            ContinuousOutcome::Step { exit, duration } => {
                trace.elapsed += duration;
                trace.steps.push(TraceStep::Continuous { duration, to: exit.clone() });
                current = exit;
            }
        }
        let succ = discrete_successors(grn, &current)?;
        if succ.is_empty() {
            trace.steady = true;
            return Ok(trace);
        }
        let (var, dir, to) = match rng.as_mut() {
            None => succ.into_iter().next().unwrap(),
            Some(rng) => succ.choose(rng).cloned().unwrap(),
        };
        trace.steps.push(TraceStep::Discrete { var, dir, to: to.clone() });
        current = to;
    }
    Ok(trace)
}

/// Materializes every branch when ties make several variables fire,
/// up to `max_traces` complete traces.
pub fn simulate_all(
    grn: &Grn,
    h0: &HybridState,
    max_steps: usize,
    max_traces: usize,
) -> Result<Vec<Trace>, DynamicsError> {
    let mut done = Vec::new();
    let mut queue = vec![Trace {
        initial: h0.clone(),
        steps: Vec::new(),
        elapsed: 0.0,
        steady: false,
    }];
    while let Some(trace) = queue.pop() {
        if done.len() >= max_traces {
            break;
        }
        let current = match trace.steps.last() {
            Some(TraceStep::Continuous { to, .. }) | Some(TraceStep::Discrete { to, .. }) => {
                to.clone()
            }
            None => trace.initial.clone(),
        };
        let discrete_count = trace
            .steps
            .iter()
            .filter(|s| matches!(s, TraceStep::Discrete { .. }))
            .count();
        if discrete_count >= max_steps {
            done.push(trace);
            continue;
        }
        match continuous_successor(grn, &current)? {
            ContinuousOutcome::Steady => {
                let mut t = trace;
                t.steady = true;
                done.push(t);
            }
            ContinuousOutcome::Step { exit, duration } => {
                let succ = discrete_successors(grn, &exit)?;
                if succ.is_empty() {
                    let mut t = trace;
                    t.steady = true;
                    done.push(t);
                    continue;
                }
                for (var, dir, to) in succ {
                    let mut t = trace.clone();
                    t.elapsed += duration;
                    t.steps
                        .push(TraceStep::Continuous { duration, to: exit.clone() });
                    t.steps.push(TraceStep::Discrete { var, dir, to });
                    queue.push(t);
                }
            }
        }
    }
    Ok(done)
}

/// A detected revisit of an entering state along a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleInfo {
    /// Index (among entering states) where the repeated state first appears.
    pub start: usize,
    /// Number of discrete transitions in one period.
    pub length: usize,
    /// Total duration of one period.
    pub period: f64,
}

/// Finds the first revisited entering state, comparing fractional parts
/// within `tol`.
pub fn detect_cycle(trace: &Trace, tol: f64) -> Option<CycleInfo> {
    let entering = trace.entering_states();
    // Durations between consecutive entering states.
    let mut durations = Vec::new();
    let mut acc = 0.0;
    for step in &trace.steps {
        match step {
            TraceStep::Continuous { duration, .. } => acc += duration,
            TraceStep::Discrete { .. } => {
                durations.push(acc);
                acc = 0.0;
            }
        }
    }
    for i in 0..entering.len() {
        for j in (i + 1)..entering.len() {
            if entering[i].close_to(entering[j], tol) {
                let period = durations[i..j].iter().sum();
                return Some(CycleInfo { start: i, length: j - i, period });
            }
        }
    }
    None
}

/// Result of checking an assertion couple against a continuous transition.
#[derive(Debug, Clone, PartialEq)]
pub struct AssertOutcome {
    pub holds: bool,
    pub warnings: Vec<String>,
}

/// Checks the assertion couple `(dt, a)` against the continuous transition
/// leaving `entry`. Every case requires the exit time to equal `dt`; slides
/// additionally require the variable to stop strictly before the exit.
pub fn check_assertion(
    grn: &Grn,
    entry: &HybridState,
    _exit: &HybridState,
    dt: f64,
    a: &Assertion,
) -> Result<AssertOutcome, DynamicsError> {
    if dt < 0.0 {
        return Err(DynamicsError::NegativeDuration(dt));
    }
    let (_, d_first) = knocking(grn, entry)?;
    let duration_ok = (d_first - dt).abs() <= DURATION_TOLERANCE;
    let mut warnings = Vec::new();
    let holds = duration_ok && assertion_body(grn, entry, dt, d_first, a, &mut warnings)?;
    Ok(AssertOutcome { holds, warnings })
}

fn assertion_body(
    grn: &Grn,
    entry: &HybridState,
    dt: f64,
    d_first: f64,
    a: &Assertion,
    warnings: &mut Vec<String>,
) -> Result<bool, DynamicsError> {
    Ok(match a {
        Assertion::Top => true,
        Assertion::CelerityBound { var, op, bound } => {
            let c = active_celerity(grn, entry, var)?;
            op.eval(c, *bound)
        }
        Assertion::Slide { var } => slide_holds(grn, entry, d_first, var, warnings)?,
        Assertion::SlidePlus { var } => {
            slide_holds(grn, entry, d_first, var, warnings)?
                && active_celerity(grn, entry, var)? > 0.0
        }
        Assertion::SlideMinus { var } => {
            slide_holds(grn, entry, d_first, var, warnings)?
                && active_celerity(grn, entry, var)? < 0.0
        }
        Assertion::Not { inner } => !assertion_body(grn, entry, dt, d_first, inner, warnings)?,
        Assertion::And { lhs, rhs } => {
            assertion_body(grn, entry, dt, d_first, lhs, warnings)?
                && assertion_body(grn, entry, dt, d_first, rhs, warnings)?
        }
        Assertion::Or { lhs, rhs } => {
            assertion_body(grn, entry, dt, d_first, lhs, warnings)?
                || assertion_body(grn, entry, dt, d_first, rhs, warnings)?
        }
    })
}

fn slide_holds(
    grn: &Grn,
    entry: &HybridState,
    d_first: f64,
    var: &str,
    warnings: &mut Vec<String>,
) -> Result<bool, DynamicsError> {
    let dv = touch_delay(grn, entry, var)?;
    if dv.is_finite() && d_first.is_finite() && (dv - d_first).abs() <= DURATION_TOLERANCE {
        warnings.push(format!(
            "slide({var}): touch delay equals the exit time ({dv}); \
             the strict slide condition is read as not holding"
        ));
    }
    Ok(dv < d_first - DURATION_TOLERANCE)
}

/// Check helpers used by comparisons inside assertions.
pub fn cmp_eval(op: Cmp, lhs: f64, rhs: f64) -> bool {
    op.eval(lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{laci_network, CelerityKey};
    use std::collections::BTreeMap;

    /// Concrete lacI instance whose limit cycle closes exactly with
    /// durations T1=1, T2=2, T3=1, T4=2 from the entry point (0, 0.2).
    pub fn laci_cycle_instance() -> Grn {
        let grn = laci_network();
        let mut vals: BTreeMap<CelerityKey, f64> = BTreeMap::new();
        for (var, omega, level, value) in [
            ("A", vec![], 0, -1.0),
            ("A", vec![], 1, -1.0),
            ("A", vec![], 2, -1.0),
            ("A", vec!["m1"], 0, -0.2),
            ("A", vec!["m1"], 1, -0.3),
            ("A", vec!["m1"], 2, -0.3),
            ("A", vec!["m3"], 0, 1.0),
            ("A", vec!["m3"], 1, 1.0),
            ("A", vec!["m3"], 2, 1.0),
            ("A", vec!["m1", "m3"], 0, 0.5),
            ("A", vec!["m1", "m3"], 1, 0.6),
            ("A", vec!["m1", "m3"], 2, 0.15),
            ("B", vec![], 0, -0.8),
            ("B", vec![], 1, -0.5),
            ("B", vec!["m2"], 0, 0.4),
            ("B", vec!["m2"], 1, 1.5),
        ] {
            let omega: Vec<&str> = omega;
            vals.insert(CelerityKey::new(var, &omega, level), value);
        }
        grn.with_celerities(&vals)
    }

    #[test]
    fn touch_delay_cases() {
        let mut grn = laci_cycle_instance();
        // C = 0 freezes the variable.
        grn.celerities.insert(
            CelerityKey::new("A", &["m1", "m3"], 1),
            crate::model::CelerityValue::Concrete { value: 0.0 },
        );
        let h = HybridState::new(&[("A", 1), ("B", 0)], &[("A", 0.25), ("B", 0.0)]);
        assert_eq!(touch_delay(&grn, &h, "A").unwrap(), f64::INFINITY);

        let grn = laci_cycle_instance();
        // Positive celerity from 0.25 at rate 0.5 takes (1 - 0.25) / 0.5.
        let mut grn2 = grn.clone();
        grn2.celerities.insert(
            CelerityKey::new("A", &["m1", "m3"], 1),
            crate::model::CelerityValue::Concrete { value: 0.5 },
        );
        assert!((touch_delay(&grn2, &h, "A").unwrap() - 1.5).abs() < 1e-12);
        grn2.celerities.insert(
            CelerityKey::new("A", &["m1", "m3"], 1),
            crate::model::CelerityValue::Concrete { value: -0.5 },
        );
        assert!((touch_delay(&grn2, &h, "A").unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn external_wall_at_bottom_level_with_negative_celerity() {
        let grn = laci_cycle_instance();
        // State (1,0): B has resources {} and C[B,{},0] = -0.8 < 0 at level 0.
        let h = HybridState::new(&[("A", 1), ("B", 0)], &[("A", 0.4), ("B", 1.0)]);
        let w = wall_status(&grn, &h, "B").unwrap();
        assert!(w.external_wall);
        assert!(!w.internal_wall);
        assert!(sliding_variables(&grn, &h).unwrap().contains("B"));
    }

    #[test]
    fn zero_celerity_meets_no_wall() {
        let mut grn = laci_cycle_instance();
        grn.celerities.insert(
            CelerityKey::new("B", &[], 0),
            crate::model::CelerityValue::Concrete { value: 0.0 },
        );
        let h = HybridState::new(&[("A", 1), ("B", 0)], &[("A", 0.4), ("B", 1.0)]);
        let w = wall_status(&grn, &h, "B").unwrap();
        assert!(!w.external_wall && !w.internal_wall);
    }

    #[test]
    fn internal_wall_when_neighbour_celerity_flips_sign() {
        // A at (1,1) moving down would meet an internal wall if C[A,{},0] > 0.
        let mut grn = laci_cycle_instance();
        grn.celerities.insert(
            CelerityKey::new("A", &[], 0),
            crate::model::CelerityValue::Concrete { value: 1.0 },
        );
        let h = HybridState::new(&[("A", 1), ("B", 1)], &[("A", 1.0), ("B", 1.0)]);
        let w = wall_status(&grn, &h, "A").unwrap();
        assert!(w.internal_wall);
        assert!(!w.external_wall);
    }

    #[test]
    fn knocking_picks_minimal_delay_and_skips_sliders() {
        let grn = laci_cycle_instance();
        // Entry of (1,1): A at 1 (delay 1/0.3), B at 1 (delay 1/0.5); B first.
        let h = HybridState::new(&[("A", 1), ("B", 1)], &[("A", 1.0), ("B", 1.0)]);
        let (first, d) = knocking(&grn, &h).unwrap();
        assert_eq!(first, ["B".to_string()].into_iter().collect());
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn steady_state_when_everything_slides_or_freezes() {
        let mut grn = laci_cycle_instance();
        // Freeze A and wall B at (1,0).
        grn.celerities.insert(
            CelerityKey::new("A", &["m1", "m3"], 1),
            crate::model::CelerityValue::Concrete { value: 0.0 },
        );
        let h = HybridState::new(&[("A", 1), ("B", 0)], &[("A", 0.4), ("B", 0.5)]);
        let (first, d) = knocking(&grn, &h).unwrap();
        assert!(first.is_empty());
        assert!(d.is_infinite());
        assert!(matches!(
            continuous_successor(&grn, &h).unwrap(),
            ContinuousOutcome::Steady
        ));
    }

    #[test]
    fn equal_delays_give_two_knocking_variables_and_two_successors() {
        let mut grn = laci_cycle_instance();
        // Make A and B reach their borders simultaneously from (1,1).
        grn.celerities.insert(
            CelerityKey::new("A", &["m1"], 1),
            crate::model::CelerityValue::Concrete { value: -0.5 },
        );
        let h = HybridState::new(&[("A", 1), ("B", 1)], &[("A", 1.0), ("B", 1.0)]);
        let (first, _) = knocking(&grn, &h).unwrap();
        assert_eq!(first.len(), 2);
        match continuous_successor(&grn, &h).unwrap() {
            ContinuousOutcome::Step { exit, .. } => {
                let succ = discrete_successors(&grn, &exit).unwrap();
                assert_eq!(succ.len(), 2);
            }
            ContinuousOutcome::Steady => panic!("expected a step"),
        }
    }

    #[test]
    fn continuous_successor_pins_leaver_and_advances_others() {
        let grn = laci_cycle_instance();
        // Cycle entry of (2,0): B exits at 1 after (1-0.2)/0.4 = 2; A slides up.
        let h = HybridState::new(&[("A", 2), ("B", 0)], &[("A", 0.0), ("B", 0.2)]);
        match continuous_successor(&grn, &h).unwrap() {
            ContinuousOutcome::Step { exit, duration } => {
                assert!((duration - 2.0).abs() < 1e-12);
                assert_eq!(exit.frac("B").unwrap(), 1.0);
                assert!((exit.frac("A").unwrap() - 0.3).abs() < 1e-12);
                assert_eq!(exit.eta, h.eta);
            }
            ContinuousOutcome::Steady => panic!("expected a step"),
        }
    }

    #[test]
    fn continuous_successor_with_zero_delay_is_identity() {
        let grn = laci_cycle_instance();
        let h = HybridState::new(&[("A", 2), ("B", 0)], &[("A", 0.0), ("B", 1.0)]);
        match continuous_successor(&grn, &h).unwrap() {
            ContinuousOutcome::Step { exit, duration } => {
                assert_eq!(duration, 0.0);
                assert_eq!(exit, h);
            }
            ContinuousOutcome::Steady => panic!("expected a step"),
        }
    }

    #[test]
    fn discrete_successor_flips_the_fired_fraction() {
        let grn = laci_cycle_instance();
        let exit = HybridState::new(&[("A", 2), ("B", 0)], &[("A", 0.3), ("B", 1.0)]);
        let succ = discrete_successors(&grn, &exit).unwrap();
        assert_eq!(succ.len(), 1);
        let (var, dir, to) = &succ[0];
        assert_eq!(var, "B");
        assert_eq!(*dir, Dir::Up);
        assert_eq!(to.eta.level("B").unwrap(), 1);
        assert_eq!(to.frac("B").unwrap(), 0.0);
        assert_eq!(to.frac("A").unwrap(), 0.3);
    }

    #[test]
    fn no_exit_point_gives_no_discrete_successor() {
        let grn = laci_cycle_instance();
        // Interior point: nobody is on a border.
        let h = HybridState::new(&[("A", 2), ("B", 0)], &[("A", 0.1), ("B", 0.5)]);
        assert!(discrete_successors(&grn, &h).unwrap().is_empty());
    }

    #[test]
    fn simulation_runs_the_limit_cycle_with_exact_durations() {
        let grn = laci_cycle_instance();
        let h0 = HybridState::new(&[("A", 2), ("B", 0)], &[("A", 0.0), ("B", 0.2)]);
        let trace = simulate(&grn, &h0, 8, Policy::Lexicographic).unwrap();
        assert!(!trace.steady);
        let durations: Vec<f64> = trace
            .steps
            .iter()
            .filter_map(|s| match s {
                TraceStep::Continuous { duration, .. } => Some(*duration),
                _ => None,
            })
            .collect();
        assert_eq!(durations.len(), 8);
        for (d, expected) in durations.iter().zip([2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0]) {
            assert!((d - expected).abs() < 1e-9, "duration {d} vs {expected}");
        }
        let cycle = detect_cycle(&trace, 1e-9).expect("cycle detected");
        assert_eq!(cycle.start, 0);
        assert_eq!(cycle.length, 4);
        assert!((cycle.period - 6.0).abs() < 1e-9);
        // Durations along the trace sum to the elapsed time.
        let total: f64 = durations.iter().sum();
        assert!((total - trace.elapsed).abs() < 1e-12);
    }

    #[test]
    fn steady_initial_state_gives_empty_trace() {
        let mut grn = laci_cycle_instance();
        grn.celerities.insert(
            CelerityKey::new("A", &["m1", "m3"], 1),
            crate::model::CelerityValue::Concrete { value: 0.0 },
        );
        let h = HybridState::new(&[("A", 1), ("B", 0)], &[("A", 0.4), ("B", 0.5)]);
        let trace = simulate(&grn, &h, 10, Policy::Lexicographic).unwrap();
        assert!(trace.steady);
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn slide_plus_holds_on_the_saturating_segment() {
        let grn = laci_cycle_instance();
        // Entry of (2,1): B climbs to its wall before A exits after 1.
        let entry = HybridState::new(&[("A", 2), ("B", 1)], &[("A", 0.3), ("B", 0.0)]);
        let exit = HybridState::new(&[("A", 2), ("B", 1)], &[("A", 0.0), ("B", 1.0)]);
        let ok = check_assertion(
            &grn,
            &entry,
            &exit,
            1.0,
            &Assertion::SlidePlus { var: "B".into() },
        )
        .unwrap();
        assert!(ok.holds, "{:?}", ok.warnings);
        // slide-(B) fails: the celerity is positive.
        let bad = check_assertion(
            &grn,
            &entry,
            &exit,
            1.0,
            &Assertion::SlideMinus { var: "B".into() },
        )
        .unwrap();
        assert!(!bad.holds);
    }

    #[test]
    fn top_assertion_checks_the_exit_time() {
        let grn = laci_cycle_instance();
        let entry = HybridState::new(&[("A", 2), ("B", 1)], &[("A", 0.3), ("B", 0.0)]);
        let exit = HybridState::new(&[("A", 2), ("B", 1)], &[("A", 0.0), ("B", 1.0)]);
        assert!(
            check_assertion(&grn, &entry, &exit, 1.0, &Assertion::Top)
                .unwrap()
                .holds
        );
        assert!(
            !check_assertion(&grn, &entry, &exit, 0.5, &Assertion::Top)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn negated_slide_agrees_with_slide_negation() {
        let grn = laci_cycle_instance();
        let entry = HybridState::new(&[("A", 2), ("B", 1)], &[("A", 0.3), ("B", 0.0)]);
        let exit = HybridState::new(&[("A", 2), ("B", 1)], &[("A", 0.0), ("B", 1.0)]);
        for var in ["A", "B"] {
            let pos = check_assertion(
                &grn,
                &entry,
                &exit,
                1.0,
                &Assertion::Slide { var: var.into() },
            )
            .unwrap();
            let neg = check_assertion(
                &grn,
                &entry,
                &exit,
                1.0,
                &Assertion::not(Assertion::Slide { var: var.into() }),
            )
            .unwrap();
            assert_eq!(pos.holds, !neg.holds);
        }
    }

    #[test]
    fn negative_duration_is_rejected() {
        let grn = laci_cycle_instance();
        let h = HybridState::new(&[("A", 2), ("B", 1)], &[("A", 0.3), ("B", 0.0)]);
        assert!(matches!(
            check_assertion(&grn, &h, &h, -1.0, &Assertion::Top),
            Err(DynamicsError::NegativeDuration(_))
        ));
    }
}
