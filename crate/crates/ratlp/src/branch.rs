//! Depth-first branch and bound over the lexicographic LP relaxation.

use std::cmp::Ordering;

use num_traits::Zero;

use crate::problem::{LpError, LpProblem, Outcome, Solution};
use crate::rational::{rat, Rational};
use crate::simplex::optimize;
use crate::system::{ConstraintSystem, Relation};

/// Branching bounds per variable: `(at least, at most)`.
#[derive(Debug, Clone)]
struct Bounds(Vec<(Option<Rational>, Option<Rational>)>);

fn lex_cmp(a: &[Rational], b: &[Rational]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Returns `None` if some variable has an empty range.
fn with_bounds(base: &ConstraintSystem, bounds: &Bounds) -> Option<ConstraintSystem> {
    let mut sys = base.clone();
    for (v, (lo, hi)) in bounds.0.iter().enumerate() {
        if let Some(l) = lo {
            if sys.lower[v].as_ref().is_none_or(|old| l > old) {
                sys.set_lower(v, Some(l.clone()));
            }
        }
        if let Some(h) = hi {
            if sys.lower[v].as_ref().is_some_and(|l| l > h) {
                return None;
            }
            sys.push_sparse(&[(v, rat(1))], Relation::Le, h.clone());
        }
    }
    Some(sys)
}

/// Exact integer lexmin. Branches on the first fractional variable in
/// `problem.integral` order, exploring the rounded-down side first.
pub fn solve_ilp(problem: &LpProblem) -> Result<Outcome, LpError> {
    let mut stack = vec![Bounds(vec![(None, None); problem.system.num_vars()])];
    let mut incumbent: Option<Solution> = None;
    let mut nodes = 0usize;
    let mut root = true;
    while let Some(bounds) = stack.pop() {
        if nodes >= problem.node_limit {
            return Err(LpError::NodeLimit {
                limit: problem.node_limit,
            });
        }
        nodes += 1;
        let Some(sys) = with_bounds(&problem.system, &bounds) else {
            root = false;
            continue;
        };
        let relaxed = match optimize(&sys, &problem.objectives, &problem.mode) {
            Outcome::Optimal(s) => s,
            Outcome::Infeasible => {
                root = false;
                continue;
            }
            Outcome::Unbounded => {
                if root {
                    return Ok(Outcome::Unbounded);
                }
                continue;
            }
        };
        root = false;
        if let Some(best) = &incumbent {
            if lex_cmp(&relaxed.objective, &best.objective) != Ordering::Less {
                continue;
            }
        }
        let fractional = problem
            .integral
            .iter()
            .copied()
            .find(|&v| !relaxed.values[v].is_integer());
        match fractional {
            None => incumbent = Some(relaxed),
            Some(v) => {
                let x = &relaxed.values[v];
                let mut up = bounds.clone();
                up.0[v].0 = Some(x.ceil());
                let mut down = bounds;
                down.0[v].1 = Some(x.floor());
                stack.push(up);
                stack.push(down);
            }
        }
    }
    Ok(match incumbent {
        Some(mut s) => {
            s.branches = nodes - 1;
            for v in &mut s.values {
                if v.is_zero() {
                    *v = Rational::zero();
                }
            }
            Outcome::Optimal(s)
        }
        None => Outcome::Infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::simplex::solve_lexmin;

    fn single(name: &str) -> ConstraintSystem {
        ConstraintSystem::new(vec![name.to_string()])
    }

    #[test]
    fn rounding_is_forced() {
        // min c s.t. 2c >= 1, c integral
        let mut s = single("c");
        s.push_sparse(&[(0, rat(2))], Relation::Ge, rat(1));
        let p = LpProblem::lexmin_vars(s, &[0]).with_integral(vec![0]);
        let lp = solve_lexmin(&p).into_optimal().unwrap();
        assert_eq!(lp.values, vec![ratio(1, 2)]);
        let ilp = solve_ilp(&p).unwrap().into_optimal().unwrap();
        assert_eq!(ilp.values, vec![rat(1)]);
    }

    #[test]
    fn integral_relaxation_needs_no_branching() {
        let mut s = ConstraintSystem::new(vec!["w".into(), "c".into()]);
        s.push_sparse(&[(0, rat(1)), (1, rat(-1))], Relation::Ge, rat(0));
        s.push_sparse(&[(1, rat(1))], Relation::Ge, rat(1));
        let p = LpProblem::lexmin_vars(s, &[0, 1]).with_integral(vec![0, 1]);
        let lp = solve_lexmin(&p).into_optimal().unwrap();
        let ilp = solve_ilp(&p).unwrap().into_optimal().unwrap();
        assert_eq!(ilp.branches, 0);
        assert_eq!(ilp.values, lp.values);
    }

    #[test]
    fn infeasible_integer_hull() {
        // 1/3 <= x <= 2/3 has no integer point
        let mut s = single("x");
        s.push_sparse(&[(0, rat(3))], Relation::Ge, rat(1));
        s.push_sparse(&[(0, rat(3))], Relation::Le, rat(2));
        let p = LpProblem::lexmin_vars(s, &[0]).with_integral(vec![0]);
        assert_eq!(solve_ilp(&p).unwrap(), Outcome::Infeasible);
    }

    #[test]
    fn node_limit_is_reported() {
        let mut s = single("x");
        s.push_sparse(&[(0, rat(2))], Relation::Ge, rat(1));
        let mut p = LpProblem::lexmin_vars(s, &[0]).with_integral(vec![0]);
        p.node_limit = 1;
        assert_eq!(solve_ilp(&p), Err(LpError::NodeLimit { limit: 1 }));
    }

    #[test]
    fn unbounded_region_without_integer_points_hits_node_limit() {
        // 2x - 2y = 1 has rational points arbitrarily far out but no integer one
        let mut s = ConstraintSystem::new(vec!["x".into(), "y".into()]);
        s.push_sparse(&[(0, rat(2)), (1, rat(-2))], Relation::Eq, rat(1));
        let mut p = LpProblem::lexmin_vars(s, &[0, 1]).with_integral(vec![0, 1]);
        p.node_limit = 200;
        assert_eq!(solve_ilp(&p), Err(LpError::NodeLimit { limit: 200 }));
    }

    #[test]
    fn lexicographic_integer_optimum() {
        // w >= c1, w >= c2, c1 + c2 >= 1: LP gives halves, ILP gives w = 1
        // with the later-priority variable absorbing the unit.
        let mut s = ConstraintSystem::new(vec!["w".into(), "c1".into(), "c2".into()]);
        s.push_sparse(&[(0, rat(1)), (1, rat(-1))], Relation::Ge, rat(0));
        s.push_sparse(&[(0, rat(1)), (2, rat(-1))], Relation::Ge, rat(0));
        s.push_sparse(&[(1, rat(1)), (2, rat(1))], Relation::Ge, rat(1));
        let p = LpProblem::lexmin_vars(s, &[0, 1, 2]).with_integral(vec![0, 1, 2]);
        let ilp = solve_ilp(&p).unwrap().into_optimal().unwrap();
        assert_eq!(ilp.values, vec![rat(1), rat(0), rat(1)]);
    }
}
