use num_bigint::BigInt;

use crate::rational::Rational;
use crate::system::ConstraintSystem;

/// Default cap on branch-and-bound nodes.
pub const DEFAULT_NODE_LIMIT: usize = 100_000;

/// How a list of objectives is minimized lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexMode {
    /// Minimize each objective in turn, pinning earlier optima.
    Staged,
    /// One solve of `Σ base^(K-1-k) · objective_k`.
    Weighted { base: BigInt },
}

impl LexMode {
    pub fn weighted() -> Self {
        LexMode::Weighted {
            base: BigInt::from(1u64 << 32),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    pub system: ConstraintSystem,
    /// Objectives in priority order, each a dense vector over `system.vars`.
    pub objectives: Vec<Vec<Rational>>,
    pub mode: LexMode,
    /// Variables required to be integral, in branching priority order.
    pub integral: Vec<usize>,
    pub node_limit: usize,
}

impl LpProblem {
    pub fn new(system: ConstraintSystem) -> Self {
        LpProblem {
            system,
            objectives: Vec::new(),
            mode: LexMode::Staged,
            integral: Vec::new(),
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }

    /// Lexmin over single variables in the given order.
    pub fn lexmin_vars(system: ConstraintSystem, order: &[usize]) -> Self {
        let n = system.num_vars();
        let objectives = order
            .iter()
            .map(|&v| {
                let mut o = vec![Rational::from_integer(0.into()); n];
                o[v] = Rational::from_integer(1.into());
                o
            })
            .collect();
        LpProblem {
            objectives,
            ..LpProblem::new(system)
        }
    }

    pub fn with_mode(mut self, mode: LexMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_integral(mut self, vars: Vec<usize>) -> Self {
        self.integral = vars;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub values: Vec<Rational>,
    /// Value of each objective at `values`, in priority order.
    pub objective: Vec<Rational>,
    /// Branch-and-bound nodes explored beyond the root (0 for pure LP).
    pub branches: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Optimal(Solution),
    Infeasible,
    Unbounded,
}

impl Outcome {
    pub fn optimal(&self) -> Option<&Solution> {
        match self {
            Outcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_optimal(self) -> Option<Solution> {
        match self {
            Outcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Outcome::Infeasible)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("branch-and-bound node limit of {limit} exceeded")]
    NodeLimit { limit: usize },
}
