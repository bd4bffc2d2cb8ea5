//! Shared state for one scheduling run: the program, cached Farkas rows per
//! dependence and an optional log of every solved LP.

use std::cell::{Cell, RefCell};
use std::rc::Rc;

use ratlp::{LpProblem, Outcome, Solution};

use crate::error::Result;
use crate::farkas::{DepRows, FarkasCache};
use crate::model::{Ddg, Program};

/// One solved optimization problem together with its optimum.
#[derive(Debug, Clone)]
pub struct LoggedLp {
    pub origin: &'static str,
    pub problem: LpProblem,
    pub solution: Solution,
}

pub struct Session<'a> {
    pub program: &'a Program,
    cache: FarkasCache,
    log: RefCell<Vec<LoggedLp>>,
    logging: Cell<bool>,
    solves: Cell<usize>,
}

impl<'a> Session<'a> {
    pub fn new(program: &'a Program) -> Self {
        Session {
            program,
            cache: FarkasCache::new(),
            log: RefCell::new(Vec::new()),
            logging: Cell::new(false),
            solves: Cell::new(0),
        }
    }

    /// Keeps a copy of every optimal problem from now on.
    pub fn enable_logging(&self) {
        self.logging.set(true);
    }

    pub fn take_log(&self) -> Vec<LoggedLp> {
        std::mem::take(&mut *self.log.borrow_mut())
    }

    /// Number of problems solved so far.
    pub fn solves(&self) -> usize {
        self.solves.get()
    }

    /// Legality and bounding rows of dependence `e`. Dependence indices are
    /// shared by every graph derived from the session's original one.
    pub fn dep_rows(&self, ddg: &Ddg, e: usize) -> Rc<DepRows> {
        self.cache.get(self.program, e, &ddg.deps[e])
    }

    /// Lexmin over the rationals, or over the integers when `integral`.
    pub fn solve(&self, origin: &'static str, problem: LpProblem, integral: bool) -> Result<Outcome> {
        self.solves.set(self.solves.get() + 1);
        let outcome = if integral {
            ratlp::solve_ilp(&problem)?
        } else {
            ratlp::solve_lexmin(&problem)
        };
        if self.logging.get() {
            if let Outcome::Optimal(s) = &outcome {
                self.log.borrow_mut().push(LoggedLp {
                    origin,
                    problem,
                    solution: s.clone(),
                });
            }
        }
        Ok(outcome)
    }
}
