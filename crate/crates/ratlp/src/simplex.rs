//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Variables are shifted by their lower bounds (free variables are split into
//! a positive and a negative part) so the tableau only ever sees `x >= 0`.
//! Lexicographic minimization is done on a single tableau: after each stage,
//! nonbasic columns with a strictly positive reduced cost are frozen at zero,
//! which restricts later stages to the optimal face of the earlier ones.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::problem::{LexMode, LpProblem, Outcome, Solution};
use crate::q::Q;
use crate::rational::Rational;
use crate::system::{ConstraintSystem, Relation};

#[derive(Debug, Clone)]
enum VarColumns {
    Shifted { col: usize, lower: Rational },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// `rows[r][ncols]` holds the right-hand side.
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    ncols: usize,
    allowed: Vec<bool>,
    artificial: Vec<bool>,
    /// Reduced costs, last entry is minus the objective value.
    obj: Vec<Q>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Q {
        &self.rows[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        if !piv.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &piv;
                }
            }
        }
        let nz: Vec<usize> = (0..=self.ncols)
            .filter(|&j| !self.rows[r][j].is_zero())
            .collect();
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            eliminate(row, &pivot_row, c, &nz);
        }
        eliminate(&mut self.obj, &pivot_row, c, &nz);
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Loads a cost vector over columns and prices out the basis.
    fn set_costs(&mut self, costs: &[Q]) {
        let mut obj: Vec<Q> = costs.to_vec();
        obj.push(Q::zero());
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[r].iter().enumerate() {
                if !v.is_zero() {
                    obj[j] -= cb * v;
                }
            }
        }
        self.obj = obj;
    }

    fn run(&mut self) -> Phase {
        loop {
            let entering = (0..self.ncols).find(|&j| self.allowed[j] && self.obj[j].is_negative());
            let Some(e) = entering else {
                return Phase::Optimal;
            };
            let mut best: Option<(usize, Q)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][e];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                let better = match &best {
                    None => true,
                    Some((br, bv)) => ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                None => return Phase::Unbounded,
                Some((r, _)) => self.pivot(r, e),
            }
        }
    }

    fn column_values(&self) -> Vec<Q> {
        let mut vals = vec![Q::zero(); self.ncols];
        for (r, &b) in self.basis.iter().enumerate() {
            vals[b] = self.rhs(r).clone();
        }
        vals
    }
}

fn eliminate(row: &mut [Q], pivot_row: &[Q], c: usize, nz: &[usize]) {
    if row[c].is_zero() {
        return;
    }
    let f = row[c].clone();
    for &j in nz {
        let delta = &f * &pivot_row[j];
        row[j] -= delta;
    }
}

/// A built tableau together with the mapping back to the caller's variables.
struct Prepared {
    tab: Tableau,
    columns: Vec<VarColumns>,
}

enum Build {
    Ready(Prepared),
    Infeasible,
}

fn build(system: &ConstraintSystem) -> Build {
    let n = system.num_vars();
    let mut columns = Vec::with_capacity(n);
    let mut nstruct = 0;
    for lb in &system.lower {
        match lb {
            Some(l) => {
                columns.push(VarColumns::Shifted {
                    col: nstruct,
                    lower: l.clone(),
                });
                nstruct += 1;
            }
            None => {
                columns.push(VarColumns::Split {
                    pos: nstruct,
                    neg: nstruct + 1,
                });
                nstruct += 2;
            }
        }
    }

    // Normalized rows: (struct coeffs, rel, rhs >= 0)
    let mut norm: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
    for row in &system.rows {
        let mut coeffs = vec![Rational::zero(); nstruct];
        let mut rhs = row.rhs.clone();
        for (v, a) in row.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            match &columns[v] {
                VarColumns::Shifted { col, lower } => {
                    coeffs[*col] = a.clone();
                    if !lower.is_zero() {
                        rhs -= a * lower;
                    }
                }
                VarColumns::Split { pos, neg } => {
                    coeffs[*pos] = a.clone();
                    coeffs[*neg] = -a;
                }
            }
        }
        let mut rel = row.rel;
        if coeffs.iter().all(Zero::is_zero) {
            if !rel.holds(&Rational::zero(), &rhs) {
                return Build::Infeasible;
            }
            continue;
        }
        if rhs.is_negative() || (rhs.is_zero() && rel == Relation::Ge) {
            for c in coeffs.iter_mut() {
                *c = -&*c;
            }
            rhs = -rhs;
            rel = match rel {
                Relation::Ge => Relation::Le,
                Relation::Le => Relation::Ge,
                Relation::Eq => Relation::Eq,
            };
        }
        norm.push((coeffs, rel, rhs));
    }

    let nslack = norm.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
    let nart = norm.iter().filter(|(_, r, _)| *r != Relation::Le).count();
    let ncols = nstruct + nslack + nart;
    let mut rows = Vec::with_capacity(norm.len());
    let mut basis = Vec::with_capacity(norm.len());
    let mut artificial = vec![false; ncols];
    let mut next_slack = nstruct;
    let mut next_art = nstruct + nslack;
    for (coeffs, rel, rhs) in norm {
        let mut row: Vec<Q> = coeffs.iter().map(Q::from_rational).collect();
        row.resize(ncols + 1, Q::zero());
        row[ncols] = Q::from_rational(&rhs);
        match rel {
            Relation::Le => {
                row[next_slack] = Q::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -&Q::one();
                next_slack += 1;
                row[next_art] = Q::one();
                artificial[next_art] = true;
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = Q::one();
                artificial[next_art] = true;
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }
    Build::Ready(Prepared {
        tab: Tableau {
            rows,
            basis,
            ncols,
            allowed: vec![true; ncols],
            artificial,
            obj: Vec::new(),
        },
        columns,
    })
}

impl Prepared {
    /// Phase one. Returns false if the system is infeasible.
    fn phase_one(&mut self) -> bool {
        let tab = &mut self.tab;
        if tab.artificial.iter().any(|&a| a) {
            let costs: Vec<Q> = tab
                .artificial
                .iter()
                .map(|&a| if a { Q::one() } else { Q::zero() })
                .collect();
            tab.set_costs(&costs);
            // Phase one is bounded below by zero.
            let _ = tab.run();
            if !tab.obj[tab.ncols].is_zero() {
                return false;
            }
            // Drive remaining (zero-valued) artificials out of the basis.
            let mut redundant = Vec::new();
            for r in 0..tab.rows.len() {
                if !tab.artificial[tab.basis[r]] {
                    continue;
                }
                let col = (0..tab.ncols).find(|&j| !tab.artificial[j] && !tab.rows[r][j].is_zero());
                match col {
                    Some(j) => tab.pivot(r, j),
                    None => redundant.push(r),
                }
            }
            for r in redundant.into_iter().rev() {
                tab.rows.remove(r);
                tab.basis.remove(r);
            }
            for j in 0..tab.ncols {
                if tab.artificial[j] {
                    tab.allowed[j] = false;
                }
            }
        }
        true
    }

    fn column_costs(&self, objective: &[Rational]) -> Vec<Q> {
        let mut costs = vec![Q::zero(); self.tab.ncols];
        for (v, c) in objective.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            match &self.columns[v] {
                VarColumns::Shifted { col, .. } => costs[*col] = Q::from_rational(c),
                VarColumns::Split { pos, neg } => {
                    costs[*pos] = Q::from_rational(c);
                    costs[*neg] = Q::from_rational(&-c);
                }
            }
        }
        costs
    }

    /// Minimizes `objective` over the current face; on success freezes
    /// nonbasic columns with positive reduced cost.
    fn minimize_stage(&mut self, objective: &[Rational]) -> bool {
        let costs = self.column_costs(objective);
        let mut support = costs.iter().enumerate().filter(|(_, c)| !c.is_zero());
        match (support.next(), support.next()) {
            (None, _) => return true,
            (Some((j, c)), None) if c.is_positive() && !self.tab.basis.contains(&j) => {
                self.tab.allowed[j] = false;
                return true;
            }
            _ => {}
        }
        self.tab.set_costs(&costs);
        match self.tab.run() {
            Phase::Unbounded => false,
            Phase::Optimal => {
                for j in 0..self.tab.ncols {
                    if self.tab.allowed[j] && self.tab.obj[j].is_positive() {
                        self.tab.allowed[j] = false;
                    }
                }
                true
            }
        }
    }

    fn values(&self) -> Vec<Rational> {
        let cols = self.tab.column_values();
        self.columns
            .iter()
            .map(|c| match c {
                VarColumns::Shifted { col, lower } => cols[*col].to_rational() + lower,
                VarColumns::Split { pos, neg } => (&cols[*pos] - &cols[*neg]).to_rational(),
            })
            .collect()
    }
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .filter(|(x, _)| !x.is_zero())
        .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

fn finish(prep: &Prepared, objectives: &[Vec<Rational>]) -> Outcome {
    let values = prep.values();
    let objective = objectives.iter().map(|o| dot(o, &values)).collect();
    Outcome::Optimal(Solution {
        values,
        objective,
        branches: 0,
    })
}

/// Rational feasibility of a constraint system.
pub fn is_feasible(system: &ConstraintSystem) -> bool {
    match build(system) {
        Build::Infeasible => false,
        Build::Ready(mut prep) => prep.phase_one(),
    }
}

/// Minimizes the first objective only (zero objective if none given).
pub fn solve_lp(problem: &LpProblem) -> Outcome {
    let first: Vec<Vec<Rational>> = problem.objectives.iter().take(1).cloned().collect();
    optimize(&problem.system, &first, &LexMode::Staged)
}

/// Lexicographic minimum of all objectives, staged or weighted per
/// `problem.mode`.
pub fn solve_lexmin(problem: &LpProblem) -> Outcome {
    optimize(&problem.system, &problem.objectives, &problem.mode)
}

pub(crate) fn optimize(system: &ConstraintSystem, objectives: &[Vec<Rational>], mode: &LexMode) -> Outcome {
    let mut prep = match build(system) {
        Build::Infeasible => return Outcome::Infeasible,
        Build::Ready(p) => p,
    };
    if !prep.phase_one() {
        return Outcome::Infeasible;
    }
    match mode {
        LexMode::Staged => {
            for o in objectives {
                if !prep.minimize_stage(o) {
                    return Outcome::Unbounded;
                }
            }
        }
        LexMode::Weighted { base } => {
            if !objectives.is_empty() {
                let combined = weighted_objective(objectives, base, system.num_vars());
                if !prep.minimize_stage(&combined) {
                    return Outcome::Unbounded;
                }
            }
        }
    }
    finish(&prep, objectives)
}

fn weighted_objective(objectives: &[Vec<Rational>], base: &BigInt, n: usize) -> Vec<Rational> {
    let mut combined = vec![Rational::zero(); n];
    let mut weight = Rational::one();
    for o in objectives.iter().rev() {
        for (c, v) in combined.iter_mut().zip(o) {
            if !v.is_zero() {
                *c += &weight * v;
            }
        }
        weight *= Rational::from_integer(base.clone());
    }
    combined
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    fn sys(vars: &[&str]) -> ConstraintSystem {
        ConstraintSystem::new(vars.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn two_row_hand_solve() {
        // min w s.t. w >= c, c >= 1
        let mut s = sys(&["w", "c"]);
        s.push_sparse(&[(0, rat(1)), (1, rat(-1))], Relation::Ge, rat(0));
        s.push_sparse(&[(1, rat(1))], Relation::Ge, rat(1));
        let p = LpProblem::lexmin_vars(s, &[0]);
        let sol = solve_lp(&p).into_optimal().unwrap();
        assert_eq!(sol.values, vec![rat(1), rat(1)]);
        assert_eq!(sol.objective, vec![rat(1)]);
    }

    #[test]
    fn empty_system_is_all_zero() {
        let p = LpProblem::new(sys(&["a", "b"]));
        let sol = solve_lp(&p).into_optimal().unwrap();
        assert_eq!(sol.values, vec![rat(0), rat(0)]);
    }

    #[test]
    fn unbounded_distinct_from_infeasible() {
        let mut p = LpProblem::new(sys(&["c"]));
        p.objectives = vec![vec![rat(-1)]];
        assert_eq!(solve_lp(&p), Outcome::Unbounded);

        let mut s = sys(&["c"]);
        s.push_sparse(&[(0, rat(1))], Relation::Le, rat(-1));
        assert_eq!(solve_lp(&LpProblem::new(s)), Outcome::Infeasible);
    }

    #[test]
    fn free_variables_and_equalities() {
        // x free, y >= 0: x + y = 1, x - y = 3 -> x = 2, y = -1 infeasible
        let mut s = ConstraintSystem::with_free_vars(vec!["x".into(), "y".into()]);
        s.set_lower(1, Some(rat(0)));
        s.push_sparse(&[(0, rat(1)), (1, rat(1))], Relation::Eq, rat(1));
        s.push_sparse(&[(0, rat(1)), (1, rat(-1))], Relation::Eq, rat(3));
        assert!(!is_feasible(&s));
        // min x over x >= -5/2 (free var reaching a negative optimum)
        let mut s = ConstraintSystem::with_free_vars(vec!["x".into()]);
        s.push_sparse(&[(0, rat(2))], Relation::Ge, rat(-5));
        let p = LpProblem::lexmin_vars(s, &[0]);
        assert_eq!(solve_lp(&p).into_optimal().unwrap().values, vec![ratio(-5, 2)]);
    }

    #[test]
    fn staged_lexmin_respects_priority() {
        // x + y >= 2, lexmin(y, x) -> y = 0, x = 2; lexmin(x, y) -> x = 0, y = 2
        let mut s = sys(&["x", "y"]);
        s.push_sparse(&[(0, rat(1)), (1, rat(1))], Relation::Ge, rat(2));
        let a = solve_lexmin(&LpProblem::lexmin_vars(s.clone(), &[1, 0]));
        assert_eq!(a.into_optimal().unwrap().values, vec![rat(2), rat(0)]);
        let b = solve_lexmin(&LpProblem::lexmin_vars(s, &[0, 1]));
        assert_eq!(b.into_optimal().unwrap().values, vec![rat(0), rat(2)]);
    }

    #[test]
    fn weighted_matches_staged_on_small_instance() {
        let mut s = sys(&["u", "w", "c1", "c2"]);
        s.push_sparse(&[(1, rat(1)), (2, rat(-1))], Relation::Ge, rat(0));
        s.push_sparse(&[(1, rat(1)), (3, rat(-1))], Relation::Ge, rat(0));
        s.push_sparse(&[(2, rat(1)), (3, rat(1))], Relation::Ge, rat(1));
        let staged = solve_lexmin(&LpProblem::lexmin_vars(s.clone(), &[0, 1, 3, 2]));
        let weighted =
            solve_lexmin(&LpProblem::lexmin_vars(s, &[0, 1, 3, 2]).with_mode(LexMode::weighted()));
        assert_eq!(staged, weighted);
        let sol = staged.into_optimal().unwrap();
        assert_eq!(sol.values, vec![rat(0), ratio(1, 2), ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn lower_bounds_are_shifted() {
        let mut s = sys(&["x"]);
        s.set_lower(0, Some(rat(3)));
        let p = LpProblem::lexmin_vars(s, &[0]);
        assert_eq!(solve_lp(&p).into_optimal().unwrap().values, vec![rat(3)]);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut s = sys(&["x", "y"]);
        s.push_sparse(&[(0, rat(1)), (1, rat(1))], Relation::Eq, rat(2));
        s.push_sparse(&[(0, rat(2)), (1, rat(2))], Relation::Eq, rat(4));
        let p = LpProblem::lexmin_vars(s, &[0, 1]);
        assert_eq!(solve_lexmin(&p).into_optimal().unwrap().values, vec![rat(0), rat(2)]);
    }
}
