//! Parameter constraint synthesis for hybrid gene regulatory network models.
//!
//! A network couples qualitative expression levels with per-level evolution
//! speeds (celerities). Observed timed traces are written as Hoare triples
//! over a small path language; a backward precondition calculus turns a
//! triple into symbolic constraints on celerities, durations and fractional
//! parts. The crate also ships an exact simulator for concrete instances,
//! a formula simplifier that mechanizes the usual by-hand reductions, and
//! exporters for SMT-LIB and seeded model sampling.
//!
//! Module map:
//! * [`model`] — networks: variables, multiplexes, celerity tables.
//! * [`logic`] — terms, properties, assertions, paths, Hoare triples.
//! * [`simplify`] — rewriting, equality propagation, equivalence oracle.
//! * [`textio`] — the network/triple DSL, formula parsing and rendering.
//! * [`dynamics`] — exact hybrid semantics and trace simulation.
//! * [`wp`] — the backward precondition calculus and cycle closure.
//! * [`solve`] — SMT-LIB export and rejection sampling of models.
//! * [`cli`] — command implementations used by the `grn-hoare` binary.

pub mod cli;
pub mod dynamics;
pub mod logic;
pub mod model;
pub mod simplify;
pub mod solve;
pub mod textio;
pub mod wp;
