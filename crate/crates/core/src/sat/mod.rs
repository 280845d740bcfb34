//! CNF encoding, satisfiability engines and the detection miter.

mod auxiliary;
mod dimacs;
mod external;
mod solver;
mod tseitin;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use thiserror::Error;

pub use auxiliary::{
    add_observation, build_aux, build_detection_miter, AuxCircuit, DetectionMiter,
};
pub use dimacs::{parse_dimacs, parse_solver_output};
pub use external::ExternalSolver;
pub use solver::CdclSolver;
pub use tseitin::{encode_into, tseitin_encode};

#[derive(Debug, Error)]
pub enum SatError {
    #[error("resource budget exhausted before a verdict ({0})")]
    Budget(String),
    #[error("engine returned a model violating clause {0}")]
    InvalidModel(usize),
    #[error("literal {0} out of range")]
    LiteralOutOfRange(i32),
    #[error("net name collision: `{0}`")]
    NameCollision(String),
    #[error("DIMACS: {0}")]
    Dimacs(String),
    #[error("external solver: {0}")]
    External(String),
    #[error(transparent)]
    Netlist(#[from] crate::netlist::NetlistError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 1-based variable index.
pub type Var = u32;

/// Nonzero DIMACS-style literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Self {
        assert!(var >= 1 && var <= i32::MAX as u32);
        Lit(if positive { var as i32 } else { -(var as i32) })
    }

    pub fn from_dimacs(x: i32) -> Self {
        assert!(x != 0, "0 is not a literal");
        Lit(x)
    }

    pub fn pos(var: Var) -> Self {
        Lit::new(var, true)
    }

    pub fn var(self) -> Var {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    /// `self` if `value`, else its negation.
    pub fn with_polarity(self, value: bool) -> Self {
        if value {
            self
        } else {
            !self
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Clause database with a (label, net) -> variable map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    names: BTreeMap<(String, String), Var>,
}

impl Cnf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        self.num_vars
    }

    /// Allocates a variable and records it under `(label, net)`.
    pub fn named_var(&mut self, label: &str, net: &str) -> Result<Var, SatError> {
        let key = (label.to_string(), net.to_string());
        if self.names.contains_key(&key) {
            return Err(SatError::NameCollision(format!("{label}/{net}")));
        }
        let v = self.new_var();
        self.names.insert(key, v);
        Ok(v)
    }

    pub fn var_of(&self, label: &str, net: &str) -> Option<Var> {
        self.names
            .get(&(label.to_string(), net.to_string()))
            .copied()
    }

    pub fn names(&self) -> &BTreeMap<(String, String), Var> {
        &self.names
    }

    pub fn add_clause(&mut self, lits: impl Into<Vec<Lit>>) {
        let lits = lits.into();
        assert!(!lits.is_empty(), "empty clause");
        for l in &lits {
            assert!(
                l.var() <= self.num_vars,
                "literal {l} beyond {} variables",
                self.num_vars
            );
        }
        self.clauses.push(lits);
    }

    /// Index of the first clause falsified by `model`, if any.
    pub fn first_violated(&self, model: &Model) -> Option<usize> {
        self.clauses
            .iter()
            .position(|c| !c.iter().any(|&l| model.lit(l)))
    }
}

/// Total assignment; index 0 is variable 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn new(values: Vec<bool>) -> Self {
        Model { values }
    }

    pub fn value(&self, v: Var) -> bool {
        self.values.get(v as usize - 1).copied().unwrap_or(false)
    }

    pub fn lit(&self, l: Lit) -> bool {
        self.value(l.var()) == l.is_positive()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sat(Model),
    Unsat,
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }

    pub fn model(&self) -> Option<&Model> {
        match self {
            Verdict::Sat(m) => Some(m),
            Verdict::Unsat => None,
        }
    }
}

/// Per-call resource limits. Exceeding one yields [`SatError::Budget`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Budget {
    pub max_conflicts: Option<u64>,
    pub deadline: Option<Instant>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }
}

/// Accumulating clause store answering satisfiability under assumptions.
pub trait SatEngine {
    fn reserve_vars(&mut self, num_vars: u32);
    fn add_clause(&mut self, lits: &[Lit]);
    /// A returned model satisfies every clause added so far and every assumption.
    fn solve(&mut self, assumptions: &[Lit], budget: Budget) -> Result<Verdict, SatError>;

    fn add_cnf(&mut self, cnf: &Cnf) {
        self.reserve_vars(cnf.num_vars());
        for c in cnf.clauses() {
            self.add_clause(c);
        }
    }
}

/// Checks a model against clauses and assumptions.
pub(crate) fn check_model(
    clauses: &[Vec<Lit>],
    assumptions: &[Lit],
    model: &Model,
) -> Result<(), SatError> {
    if let Some(i) = clauses
        .iter()
        .position(|c| !c.iter().any(|&l| model.lit(l)))
    {
        return Err(SatError::InvalidModel(i));
    }
    if assumptions.iter().any(|&a| !model.lit(a)) {
        return Err(SatError::InvalidModel(usize::MAX));
    }
    Ok(())
}

/// One-shot solve with the built-in engine and no resource limit.
pub fn solve(f: &Cnf, assumptions: &[Lit]) -> Result<Verdict, SatError> {
    solve_with(f, assumptions, Budget::unlimited())
}

pub fn solve_with(f: &Cnf, assumptions: &[Lit], budget: Budget) -> Result<Verdict, SatError> {
    for a in assumptions {
        if a.var() > f.num_vars() {
            return Err(SatError::LiteralOutOfRange(a.to_dimacs()));
        }
    }
    let mut s = CdclSolver::new();
    s.add_cnf(f);
    s.solve(assumptions, budget)
}
