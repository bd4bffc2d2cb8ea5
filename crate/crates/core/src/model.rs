//! Core IR: statements with affine domains and accesses, dependence
//! polyhedra, the dependence graph and multi-level affine transforms.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use std::fmt;

use num_traits::{One, Signed, Zero};
use ratlp::{ConstraintSystem, LpProblem, Outcome, Rational, Relation};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// `coeffs · x + constant >= 0`
    Inequality,
    /// `coeffs · x + constant == 0`
    Equality,
}

/// An affine constraint with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineConstraint {
    pub coeffs: Vec<i64>,
    pub constant: i64,
    pub kind: ConstraintKind,
}

impl AffineConstraint {
    pub fn ge(coeffs: Vec<i64>, constant: i64) -> Self {
        AffineConstraint {
            coeffs,
            constant,
            kind: ConstraintKind::Inequality,
        }
    }

    pub fn eq(coeffs: Vec<i64>, constant: i64) -> Self {
        AffineConstraint {
            coeffs,
            constant,
            kind: ConstraintKind::Equality,
        }
    }

    pub fn eval(&self, point: &[i64]) -> i64 {
        self.coeffs.iter().zip(point).map(|(a, x)| a * x).sum::<i64>() + self.constant
    }

    pub fn holds_at(&self, point: &[i64]) -> bool {
        let v = self.eval(point);
        match self.kind {
            ConstraintKind::Inequality => v >= 0,
            ConstraintKind::Equality => v == 0,
        }
    }
}

/// A conjunction of affine constraints over `dim` integer variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polyhedron {
    pub dim: usize,
    pub constraints: Vec<AffineConstraint>,
}

/// Result of minimizing an affine form over a polyhedron's rational points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Minimum {
    Finite(Rational),
    Unbounded,
    Empty,
}

impl Minimum {
    pub fn at_least(&self, bound: &Rational) -> bool {
        matches!(self, Minimum::Finite(v) if v >= bound)
    }
}

impl Polyhedron {
    pub fn universe(dim: usize) -> Self {
        Polyhedron {
            dim,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, c: AffineConstraint) {
        assert_eq!(c.coeffs.len(), self.dim, "constraint width mismatch");
        self.constraints.push(c);
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        self.constraints.iter().all(|c| c.holds_at(point))
    }

    /// The rational relaxation as a system over free variables.
    pub fn to_system(&self) -> ConstraintSystem {
        let vars = (0..self.dim).map(|i| format!("x{i}")).collect();
        let mut sys = ConstraintSystem::with_free_vars(vars);
        for c in &self.constraints {
            let coeffs = c.coeffs.iter().map(|&a| ratlp::rat(a)).collect();
            let rel = match c.kind {
                ConstraintKind::Inequality => Relation::Ge,
                ConstraintKind::Equality => Relation::Eq,
            };
            sys.push(ratlp::Row::new(coeffs, rel, ratlp::rat(-c.constant)));
        }
        sys
    }

    pub fn is_rationally_feasible(&self) -> bool {
        ratlp::is_feasible(&self.to_system())
    }

    /// Minimum of `form[..dim] · x + form[dim]` over the rational points.
    pub fn minimize(&self, form: &[Rational]) -> Minimum {
        assert_eq!(form.len(), self.dim + 1);
        let mut problem = LpProblem::new(self.to_system());
        problem.objectives = vec![form[..self.dim].to_vec()];
        match ratlp::solve_lp(&problem) {
            Outcome::Optimal(s) => Minimum::Finite(&s.objective[0] + &form[self.dim]),
            Outcome::Unbounded => Minimum::Unbounded,
            Outcome::Infeasible => Minimum::Empty,
        }
    }
}

/// Iteration domain of a statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    pub iterators: Vec<String>,
    pub params: Vec<String>,
    /// Constraints over `iterators ++ params`.
    pub constraints: Vec<AffineConstraint>,
}

impl IndexSet {
    pub fn dim(&self) -> usize {
        self.iterators.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

/// `array[map · (iterators, params, 1)]`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub array: String,
    pub kind: AccessKind,
    pub map: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub id: String,
    pub domain: IndexSet,
    pub accesses: Vec<Access>,
    pub order: i64,
}

impl Statement {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub params: Vec<String>,
    pub statements: Vec<Statement>,
    /// Dependences supplied with the input instead of being computed.
    pub dependences: Option<Vec<Dependence>>,
}

impl Program {
    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn statement_index(&self, id: &str) -> Option<usize> {
        self.statements.iter().position(|s| s.id == id)
    }

    /// Width of a transform row for statement `s`: iterators, params, constant.
    pub fn row_width(&self, s: usize) -> usize {
        self.statements[s].dim() + self.num_params() + 1
    }

    pub fn max_dim(&self) -> usize {
        self.statements.iter().map(Statement::dim).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DepKind {
    Raw,
    War,
    Waw,
    Rar,
}

impl DepKind {
    pub fn name(self) -> &'static str {
        match self {
            DepKind::Raw => "RAW",
            DepKind::War => "WAR",
            DepKind::Waw => "WAW",
            DepKind::Rar => "RAR",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.to_ascii_uppercase().as_str() {
            "RAW" => Some(DepKind::Raw),
            "WAR" => Some(DepKind::War),
            "WAW" => Some(DepKind::Waw),
            "RAR" => Some(DepKind::Rar),
            _ => None,
        }
    }

    /// Read-after-read pairs order nothing and never constrain legality.
    pub fn constrains_order(self) -> bool {
        self != DepKind::Rar
    }
}

/// Source/target instance pairs `<s, t>` as a polyhedron over
/// `(src iterators, dst iterators, params)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dependence {
    pub src: usize,
    pub dst: usize,
    pub kind: DepKind,
    pub relation: Polyhedron,
    pub satisfied_at: Option<usize>,
}

impl Dependence {
    pub fn is_self(&self) -> bool {
        self.src == self.dst
    }

    pub fn is_satisfied(&self) -> bool {
        self.satisfied_at.is_some()
    }

    /// `φ_dst(t) − φ_src(s)` as an affine form over the relation's variables
    /// (last entry is the constant).
    pub fn difference_form(&self, program: &Program, src_row: &[Rational], dst_row: &[Rational]) -> Vec<Rational> {
        let ms = program.statements[self.src].dim();
        let mt = program.statements[self.dst].dim();
        let p = program.num_params();
        let mut form = vec![Rational::zero(); ms + mt + p + 1];
        for k in 0..ms {
            form[k] = -&src_row[k];
        }
        form[ms..ms + mt].clone_from_slice(&dst_row[..mt]);
        for q in 0..p {
            form[ms + mt + q] = &dst_row[mt + q] - &src_row[ms + q];
        }
        form[ms + mt + p] = &dst_row[mt + p] - &src_row[ms + p];
        form
    }

    /// Minimum of the level difference under a transform.
    pub fn min_difference(&self, program: &Program, transform: &AffineTransform, level: usize) -> Minimum {
        let form = self.difference_form(
            program,
            &transform.rows[self.src][level],
            &transform.rows[self.dst][level],
        );
        self.relation.minimize(&form)
    }
}

/// Data dependence graph: statements as vertices, dependences as edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ddg {
    pub num_statements: usize,
    pub deps: Vec<Dependence>,
}

/// Strongly connected components in topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sccs {
    pub components: Vec<Vec<usize>>,
    /// Statement index to position in `components`.
    pub ordinal: Vec<usize>,
}

impl Sccs {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

impl Ddg {
    pub fn new(num_statements: usize, deps: Vec<Dependence>) -> Self {
        Ddg { num_statements, deps }
    }

    /// Indices of dependences not yet satisfied.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.deps.len()).filter(|&e| !self.deps[e].is_satisfied())
    }

    /// Active dependences that constrain legality (everything but RAR).
    pub fn active_ordering(&self) -> impl Iterator<Item = usize> + '_ {
        self.active().filter(|&e| self.deps[e].kind.constrains_order())
    }

    /// SCC decomposition over the active dependences accepted by `filter`.
    pub fn scc_decompose_with(&self, filter: impl Fn(&Dependence) -> bool) -> Sccs {
        let edges: Vec<(usize, usize)> = self
            .deps
            .iter()
            .filter(|d| !d.is_satisfied() && filter(d))
            .map(|d| (d.src, d.dst))
            .collect();
        scc_order(self.num_statements, &edges)
    }

    /// SCCs over all active dependences.
    pub fn scc_decompose(&self) -> Sccs {
        self.scc_decompose_with(|_| true)
    }

    /// Weakly connected components over all dependences, each sorted, in
    /// order of their smallest statement.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.num_statements).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut y = x;
            while parent[y] != r {
                let next = parent[y];
                parent[y] = r;
                y = next;
            }
            r
        }
        for d in &self.deps {
            let (a, b) = (find(&mut parent, d.src), find(&mut parent, d.dst));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.num_statements];
        for s in 0..self.num_statements {
            let r = find(&mut parent, s);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(s);
        }
        groups
    }

    /// DDG predecessors of `s` through active dependences (excluding `s`).
    pub fn predecessors(&self, s: usize) -> BTreeSet<usize> {
        self.active()
            .map(|e| &self.deps[e])
            .filter(|d| d.dst == s && d.src != s)
            .map(|d| d.src)
            .collect()
    }

    /// Marks every active dependence whose difference reaches 1 at some row
    /// `<= level` as satisfied at the first such row.
    pub fn remove_satisfied(&self, program: &Program, transform: &AffineTransform, level: usize) -> Result<Ddg> {
        let mut out = self.clone();
        for e in self.active().collect::<Vec<_>>() {
            let dep = &self.deps[e];
            for l in 0..=level.min(transform.num_levels().saturating_sub(1)) {
                if transform.num_levels() == 0 {
                    break;
                }
                match dep.min_difference(program, transform, l) {
                    Minimum::Empty => {
                        return Err(Error::internal(format!(
                            "dependence {e} has an empty relation"
                        )))
                    }
                    Minimum::Finite(v) if v >= Rational::one() => {
                        out.deps[e].satisfied_at = Some(l);
                        break;
                    }
                    _ => {}
                }
            }
        }
        Ok(out)
    }
}

/// Tarjan SCCs of a directed graph, emitted in a topological order of the
/// condensation. Ties between ready components go to the one holding the
/// smallest vertex index.
pub fn scc_order(n: usize, edges: &[(usize, usize)]) -> Sccs {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }

    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp_of = vec![UNSEEN; n];
    let mut ncomp = 0;
    let mut counter = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // iterative DFS: (vertex, next child position)
        let mut work = vec![(root, 0usize)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = work.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp_of[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }

    let mut members = vec![Vec::new(); ncomp];
    for v in 0..n {
        members[comp_of[v]].push(v);
    }
    let mut indeg = vec![0usize; ncomp];
    let mut cadj = vec![BTreeSet::new(); ncomp];
    for &(a, b) in edges {
        let (ca, cb) = (comp_of[a], comp_of[b]);
        if ca != cb && cadj[ca].insert(cb) {
            indeg[cb] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..ncomp)
        .filter(|&c| indeg[c] == 0)
        .map(|c| Reverse((members[c][0], c)))
        .collect();
    let mut components = Vec::with_capacity(ncomp);
    let mut ordinal = vec![0; n];
    while let Some(Reverse((_, c))) = ready.pop() {
        for &v in &members[c] {
            ordinal[v] = components.len();
        }
        components.push(members[c].clone());
        for &d in &cadj[c] {
            indeg[d] -= 1;
            if indeg[d] == 0 {
                ready.push(Reverse((members[d][0], d)));
            }
        }
    }
    Sccs {
        components,
        ordinal,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelKind {
    /// A loop level found by the scheduler or the permutation search.
    Hyperplane,
    /// A constant (distribution) level.
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub kind: LevelKind,
    /// All dependences live at this level have zero distance.
    pub parallel: bool,
}

/// Consecutive hyperplane levels `start..end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Band {
    pub start: usize,
    pub end: usize,
    pub permutable: bool,
    /// The outermost level of the band is parallel.
    pub parallel: bool,
}

impl Band {
    pub fn depth(&self) -> usize {
        self.end - self.start
    }
}

/// A scalar level distributing statement groups in the listed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub level: usize,
    pub partition: Vec<Vec<usize>>,
}

/// Per-statement multi-level affine schedule. Each row is laid out as
/// `(c_1..c_m, d_1..d_p, c_0)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AffineTransform {
    pub rows: Vec<Vec<Vec<Rational>>>,
    pub levels: Vec<Level>,
    pub bands: Vec<Band>,
    pub cuts: Vec<Cut>,
}

impl AffineTransform {
    pub fn empty(num_statements: usize) -> Self {
        AffineTransform {
            rows: vec![Vec::new(); num_statements],
            ..Default::default()
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn push_level(&mut self, kind: LevelKind, parallel: bool, rows: Vec<Vec<Rational>>) {
        assert_eq!(rows.len(), self.rows.len());
        for (s, r) in rows.into_iter().enumerate() {
            self.rows[s].push(r);
        }
        self.levels.push(Level { kind, parallel });
    }

    /// Iterator-coefficient sub-rows of statement `s`.
    pub fn iterator_rows(&self, s: usize, dim: usize) -> Vec<Vec<Rational>> {
        self.rows[s].iter().map(|r| r[..dim].to_vec()).collect()
    }

    /// Every coefficient is non-negative.
    pub fn is_non_negative(&self) -> bool {
        self.rows
            .iter()
            .flatten()
            .flatten()
            .all(|v| !v.is_negative())
    }
}

impl Dependence {
    /// Minimum and maximum of the level difference; an unbounded maximum is
    /// reported as [`Minimum::Unbounded`].
    pub fn difference_range(&self, program: &Program, transform: &AffineTransform, level: usize) -> (Minimum, Minimum) {
        let form = self.difference_form(
            program,
            &transform.rows[self.src][level],
            &transform.rows[self.dst][level],
        );
        let min = self.relation.minimize(&form);
        let neg: Vec<Rational> = form.iter().map(|v| -v).collect();
        let max = match self.relation.minimize(&neg) {
            Minimum::Finite(v) => Minimum::Finite(-v),
            other => other,
        };
        (min, max)
    }
}

/// First level at which each dependence's difference is at least 1.
pub fn satisfaction_levels(program: &Program, ddg: &Ddg, transform: &AffineTransform) -> Vec<Option<usize>> {
    let one = Rational::one();
    ddg.deps
        .iter()
        .map(|d| (0..transform.num_levels()).find(|&l| d.min_difference(program, transform, l).at_least(&one)))
        .collect()
}

/// Recomputes per-level parallel flags and band parallel flags. A level is
/// parallel when every ordering dependence still live there has zero
/// difference.
pub fn annotate(program: &Program, ddg: &Ddg, transform: &mut AffineTransform) {
    let sat = satisfaction_levels(program, ddg, transform);
    let zero = Rational::zero();
    for l in 0..transform.num_levels() {
        let parallel = transform.levels[l].kind == LevelKind::Hyperplane
            && ddg.deps.iter().zip(&sat).all(|(d, s)| {
                if !d.kind.constrains_order() || s.is_some_and(|s| s < l) {
                    return true;
                }
                let (min, max) = d.difference_range(program, transform, l);
                min == Minimum::Finite(zero.clone()) && max == Minimum::Finite(zero.clone())
            });
        transform.levels[l].parallel = parallel;
    }
    for b in &mut transform.bands {
        b.parallel = transform.levels[b.start].parallel;
    }
}

/// Maximal runs of hyperplane levels on which every ordering dependence live
/// at the run start has a non-negative difference.
pub fn permutable_bands(program: &Program, ddg: &Ddg, transform: &AffineTransform) -> Vec<Band> {
    let sat = satisfaction_levels(program, ddg, transform);
    let zero = Rational::zero();
    let nonneg = |start: usize, l: usize| {
        ddg.deps.iter().zip(&sat).all(|(d, s)| {
            !d.kind.constrains_order()
                || s.is_some_and(|s| s < start)
                || d.min_difference(program, transform, l).at_least(&zero)
        })
    };
    let mut bands = Vec::new();
    let mut l = 0;
    while l < transform.num_levels() {
        if transform.levels[l].kind != LevelKind::Hyperplane {
            l += 1;
            continue;
        }
        let start = l;
        l += 1;
        while l < transform.num_levels() && transform.levels[l].kind == LevelKind::Hyperplane && nonneg(start, l) {
            l += 1;
        }
        bands.push(Band {
            start,
            end: l,
            permutable: true,
            parallel: transform.levels[start].parallel,
        });
    }
    bands
}

/// Rank of a rational matrix by exact row reduction.
pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for i in 0..m.len() {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &pivot;
            for j in c..ncols {
                let d = &f * &m[r][j];
                m[i][j] -= d;
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

impl fmt::Display for Dependence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} S{} -> S{}", self.kind.name(), self.src, self.dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ratlp::rat;

    #[test]
    fn scc_of_empty_graph() {
        let s = scc_order(0, &[]);
        assert!(s.is_empty());
    }

    #[test]
    fn two_cycle_is_one_component() {
        let s = scc_order(2, &[(0, 1), (1, 0)]);
        assert_eq!(s.components, vec![vec![0, 1]]);
    }

    #[test]
    fn topological_order_respects_edges() {
        // 2 -> 0 -> 1, 3 isolated
        let s = scc_order(4, &[(2, 0), (0, 1)]);
        assert_eq!(s.components, vec![vec![2], vec![0], vec![1], vec![3]]);
        assert!(s.ordinal[2] < s.ordinal[0] && s.ordinal[0] < s.ordinal[1]);
    }

    #[test]
    fn condensation_of_mixed_graph() {
        // {1,2} cycle fed by 0, feeding 3
        let s = scc_order(4, &[(0, 1), (1, 2), (2, 1), (2, 3)]);
        assert_eq!(s.components, vec![vec![0], vec![1, 2], vec![3]]);
    }

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(rank(&[]), 0);
        assert_eq!(rank(&[vec![rat(1), rat(0)], vec![rat(2), rat(0)]]), 1);
        assert_eq!(rank(&[vec![rat(1), rat(1)], vec![rat(0), rat(1)]]), 2);
    }

    #[test]
    fn minimize_reports_unbounded_and_empty() {
        let mut p = Polyhedron::universe(1);
        p.push(AffineConstraint::ge(vec![1], 0)); // x >= 0
        assert_eq!(p.minimize(&[rat(1), rat(2)]), Minimum::Finite(rat(2)));
        assert_eq!(p.minimize(&[rat(-1), rat(0)]), Minimum::Unbounded);
        p.push(AffineConstraint::ge(vec![-1], -1)); // x <= -1
        assert_eq!(p.minimize(&[rat(1), rat(0)]), Minimum::Empty);
    }
}
