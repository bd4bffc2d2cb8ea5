//! Affine constraint systems over named rational variables.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::rational::{rat, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// `coeffs · x >= rhs`
    Ge,
    /// `coeffs · x <= rhs`
    Le,
    /// `coeffs · x == rhs`
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
            Relation::Eq => "==",
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Ge => lhs >= rhs,
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Row {
    pub coeffs: Vec<Rational>,
    pub rel: Relation,
    pub rhs: Rational,
}

impl Row {
    pub fn new(coeffs: Vec<Rational>, rel: Relation, rhs: Rational) -> Self {
        Row { coeffs, rel, rhs }
    }

    pub fn eval(&self, values: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(values)
            .filter(|(c, _)| !c.is_zero())
            .fold(Rational::zero(), |acc, (c, v)| acc + c * v)
    }

    pub fn satisfied_by(&self, values: &[Rational]) -> bool {
        self.rel.holds(&self.eval(values), &self.rhs)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Rewrites `<=` as `>=` by negation; equalities are kept.
    pub fn as_ge(&self) -> Row {
        match self.rel {
            Relation::Le => Row {
                coeffs: self.coeffs.iter().map(|c| -c).collect(),
                rel: Relation::Ge,
                rhs: -&self.rhs,
            },
            _ => self.clone(),
        }
    }
}

/// Rows over an ordered variable list, with optional lower bounds per
/// variable. A `None` bound means the variable is free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub vars: Vec<String>,
    pub rows: Vec<Row>,
    pub lower: Vec<Option<Rational>>,
}

impl ConstraintSystem {
    /// Creates a system whose variables all default to a lower bound of 0.
    pub fn new(vars: Vec<String>) -> Self {
        let lower = vec![Some(Rational::zero()); vars.len()];
        ConstraintSystem {
            vars,
            rows: Vec::new(),
            lower,
        }
    }

    pub fn with_free_vars(vars: Vec<String>) -> Self {
        let lower = vec![None; vars.len()];
        ConstraintSystem {
            vars,
            rows: Vec::new(),
            lower,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<Rational>) -> usize {
        self.vars.push(name.into());
        self.lower.push(lower);
        for row in &mut self.rows {
            row.coeffs.push(Rational::zero());
        }
        self.vars.len() - 1
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn push(&mut self, row: Row) {
        assert_eq!(row.coeffs.len(), self.vars.len(), "row width mismatch");
        self.rows.push(row);
    }

    /// Adds `Σ terms >= rhs` from sparse `(var, coeff)` terms.
    pub fn push_sparse(&mut self, terms: &[(usize, Rational)], rel: Relation, rhs: Rational) {
        let mut coeffs = vec![Rational::zero(); self.vars.len()];
        for (v, c) in terms {
            coeffs[*v] += c;
        }
        self.push(Row::new(coeffs, rel, rhs));
    }

    pub fn set_lower(&mut self, var: usize, bound: Option<Rational>) {
        self.lower[var] = bound;
    }

    /// Pins a variable with an equality row.
    pub fn fix(&mut self, var: usize, value: Rational) {
        self.push_sparse(&[(var, rat(1))], Relation::Eq, value);
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = Row>) {
        for r in rows {
            self.push(r);
        }
    }

    /// Index of the first row (or bound, reported as `rows.len() + var`)
    /// violated by `values`.
    pub fn first_violation(&self, values: &[Rational]) -> Option<usize> {
        if values.len() != self.vars.len() {
            return Some(usize::MAX);
        }
        if let Some(i) = self.rows.iter().position(|r| !r.satisfied_by(values)) {
            return Some(i);
        }
        self.lower
            .iter()
            .zip(values)
            .position(|(lb, v)| lb.as_ref().is_some_and(|lb| v < lb))
            .map(|v| self.rows.len() + v)
    }

    pub fn satisfied_by(&self, values: &[Rational]) -> bool {
        self.first_violation(values).is_none()
    }

    /// True if no row has a negative constant side after moving to `>=` form,
    /// i.e. every row is homogeneous or a `>= positive` cut. Such systems are
    /// closed under scaling by any k >= 1.
    pub fn is_scaling_closed(&self) -> bool {
        self.rows.iter().all(|r| match r.rel {
            Relation::Eq => r.rhs.is_zero(),
            Relation::Ge => !r.rhs.is_negative(),
            Relation::Le => !r.rhs.is_positive(),
        }) && self
            .lower
            .iter()
            .all(|lb| lb.as_ref().is_none_or(|l| !l.is_negative()))
    }
}

impl fmt::Display for ConstraintSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let mut first = true;
            for (c, name) in row.coeffs.iter().zip(&self.vars) {
                if c.is_zero() {
                    continue;
                }
                if !first {
                    write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
                } else if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
                let a = c.abs();
                if a == rat(1) {
                    write!(f, "{name}")?;
                } else {
                    write!(f, "{a}*{name}")?;
                }
            }
            if first {
                write!(f, "0")?;
            }
            writeln!(f, " {} {}", row.rel.symbol(), row.rhs)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_violation() {
        let mut sys = ConstraintSystem::new(vec!["x".into(), "y".into()]);
        sys.push_sparse(&[(0, rat(1)), (1, rat(-1))], Relation::Ge, rat(1));
        assert!(sys.satisfied_by(&[rat(3), rat(2)]));
        assert_eq!(sys.first_violation(&[rat(2), rat(2)]), Some(0));
        // lower bound violation is reported after the rows
        assert_eq!(sys.first_violation(&[rat(0), rat(-1)]), Some(2));
        assert!(sys.is_scaling_closed());
        sys.push_sparse(&[(0, rat(1))], Relation::Le, rat(4));
        assert!(!sys.is_scaling_closed());
    }

    #[test]
    fn display_is_readable() {
        let mut sys = ConstraintSystem::new(vec!["c".into(), "w".into()]);
        sys.push_sparse(&[(0, rat(-1)), (1, rat(2))], Relation::Ge, rat(0));
        assert_eq!(sys.to_string(), "-c + 2*w >= 0\n");
    }
}
