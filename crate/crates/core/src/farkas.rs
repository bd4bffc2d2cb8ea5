//! Farkas-lemma linearization of dependence conditions and projection by
//! Gaussian plus Fourier-Motzkin elimination.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use ratlp::{ConstraintSystem, Rational, Relation, Row};

use crate::model::{ConstraintKind, Dependence, Polyhedron, Program};

/// Integer row `a · x + k` with the constant last, meaning `>= 0` or `== 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct IntRow {
    a: Vec<BigInt>,
    eq: bool,
}

impl IntRow {
    fn width(&self) -> usize {
        self.a.len() - 1
    }

    fn constant(&self) -> &BigInt {
        &self.a[self.a.len() - 1]
    }

    fn is_constant(&self) -> bool {
        self.a[..self.width()].iter().all(Zero::is_zero)
    }

    fn normalize(mut self) -> Self {
        let g = self.a.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
        if !g.is_zero() && !g.is_one() {
            for v in &mut self.a {
                *v /= &g;
            }
        }
        if self.eq {
            if let Some(first) = self.a.iter().find(|v| !v.is_zero()) {
                if first.is_negative() {
                    for v in &mut self.a {
                        *v = -&*v;
                    }
                }
            }
        }
        self
    }

    /// `|p| · self − sign(p) · r · pivot` where `p = pivot[var]`, `r = self[var]`.
    fn cancel(&self, pivot: &IntRow, var: usize) -> IntRow {
        let p = &pivot.a[var];
        let r = &self.a[var];
        let (mul_self, mul_piv) = if p.is_negative() { (-p, -r) } else { (p.clone(), r.clone()) };
        let a = self
            .a
            .iter()
            .zip(&pivot.a)
            .map(|(x, y)| &mul_self * x - &mul_piv * y)
            .collect();
        IntRow { a, eq: self.eq }.normalize()
    }

    /// Positive combination eliminating `var` from a `>=` pair with opposite signs.
    fn combine(pos: &IntRow, neg: &IntRow, var: usize) -> IntRow {
        let fp = -&neg.a[var];
        let fnn = pos.a[var].clone();
        let a = pos
            .a
            .iter()
            .zip(&neg.a)
            .map(|(x, y)| &fp * x + &fnn * y)
            .collect();
        IntRow { a, eq: false }.normalize()
    }

    fn from_row(row: &Row) -> IntRow {
        let row = row.as_ge();
        let mut vals: Vec<Rational> = row.coeffs.clone();
        vals.push(-&row.rhs);
        IntRow {
            a: ratlp::rational::primitive_integer_row(&vals),
            eq: row.rel == Relation::Eq,
        }
        .normalize()
    }

    fn to_row(&self, keep: &[usize]) -> Row {
        let coeffs = keep
            .iter()
            .map(|&v| Rational::from_integer(self.a[v].clone()))
            .collect();
        let rel = if self.eq { Relation::Eq } else { Relation::Ge };
        Row::new(coeffs, rel, Rational::from_integer(-self.constant()))
    }
}

/// `strong` implies `weak` for `>=` rows, given which variables are known
/// non-negative.
fn dominates(strong: &IntRow, weak: &IntRow, nonneg: &[bool]) -> bool {
    if strong.eq || weak.eq {
        return false;
    }
    let n = strong.width();
    for v in 0..n {
        let diff = &weak.a[v] - &strong.a[v];
        if diff.is_negative() || (diff.is_positive() && !nonneg[v]) {
            return false;
        }
    }
    weak.constant() >= strong.constant()
}

/// Removes trivial rows, duplicates and rows dominated by a single other
/// row. Returns `None` when a row is a constant contradiction.
fn prune(rows: Vec<IntRow>, nonneg: &[bool]) -> Option<Vec<IntRow>> {
    let mut seen = HashSet::new();
    let mut out: Vec<IntRow> = Vec::new();
    for r in rows {
        if r.is_constant() {
            let k = r.constant();
            let ok = if r.eq { k.is_zero() } else { !k.is_negative() };
            if ok {
                continue;
            }
            return None;
        }
        if seen.insert(r.clone()) {
            out.push(r);
        }
    }
    let mut keep = vec![true; out.len()];
    for i in 0..out.len() {
        if !keep[i] {
            continue;
        }
        for j in 0..out.len() {
            if i != j && keep[j] && dominates(&out[j], &out[i], nonneg) {
                keep[i] = false;
                break;
            }
        }
    }
    Some(
        out.into_iter()
            .zip(keep)
            .filter_map(|(r, k)| k.then_some(r))
            .collect(),
    )
}

fn infeasible_row(width: usize) -> IntRow {
    let mut a = vec![BigInt::zero(); width + 1];
    a[width] = BigInt::from(-1);
    IntRow { a, eq: false }
}

/// Projects `system` onto the variables not listed in `vars`. Equalities are
/// used for Gaussian substitution first; the rest go through Fourier-Motzkin
/// with pairwise dominance pruning. Lower bounds of eliminated variables are
/// taken into account; bounds of the remaining variables are kept as bounds.
pub fn eliminate(system: &ConstraintSystem, vars: &[usize]) -> ConstraintSystem {
    let n = system.num_vars();
    let gone: HashSet<usize> = vars.iter().copied().collect();
    // eliminated variables carry their bounds as rows, which pruning may
    // drop, so only kept variables count as known non-negative
    let nonneg: Vec<bool> = system
        .lower
        .iter()
        .enumerate()
        .map(|(v, l)| !gone.contains(&v) && l.as_ref().is_some_and(|l| !l.is_negative()))
        .collect();
    let mut rows: Vec<IntRow> = system.rows.iter().map(IntRow::from_row).collect();
    for &v in vars {
        if let Some(l) = &system.lower[v] {
            let mut coeffs = vec![Rational::zero(); n];
            coeffs[v] = Rational::one();
            rows.push(IntRow::from_row(&Row::new(coeffs, Relation::Ge, l.clone())));
        }
    }
    let keep: Vec<usize> = (0..n).filter(|v| !gone.contains(v)).collect();
    let mut out = ConstraintSystem::with_free_vars(keep.iter().map(|&v| system.vars[v].clone()).collect());
    for (i, &v) in keep.iter().enumerate() {
        out.set_lower(i, system.lower[v].clone());
    }

    let projected = project(rows, vars, &nonneg, n);
    for r in &projected {
        out.push(r.to_row(&keep));
    }
    out
}

fn project(mut rows: Vec<IntRow>, vars: &[usize], nonneg: &[bool], n: usize) -> Vec<IntRow> {
    let mut pending: Vec<usize> = vars.to_vec();
    // Gaussian substitution through equalities
    let mut progress = true;
    while progress {
        progress = false;
        for (pi, &v) in pending.iter().enumerate() {
            let Some(k) = rows.iter().position(|r| r.eq && !r.a[v].is_zero()) else {
                continue;
            };
            let pivot = rows.swap_remove(k);
            rows = rows
                .iter()
                .map(|r| if r.a[v].is_zero() { r.clone() } else { r.cancel(&pivot, v) })
                .collect();
            pending.swap_remove(pi);
            progress = true;
            break;
        }
    }
    let Some(mut rows) = prune(rows, nonneg) else {
        return vec![infeasible_row(n)];
    };
    // Fourier-Motzkin on the rest; equalities still mentioning a pending
    // variable cannot exist past this point.
    while !pending.is_empty() {
        let (pi, v) = pending
            .iter()
            .enumerate()
            .map(|(pi, &v)| {
                let pos = rows.iter().filter(|r| r.a[v].is_positive()).count();
                let neg = rows.iter().filter(|r| r.a[v].is_negative()).count();
                (pos * neg, pi, v)
            })
            .min()
            .map(|(_, pi, v)| (pi, v))
            .expect("pending is non-empty");
        pending.remove(pi);
        let (pos, rest): (Vec<IntRow>, Vec<IntRow>) = rows.into_iter().partition(|r| r.a[v].is_positive());
        let (neg, mut next): (Vec<IntRow>, Vec<IntRow>) = rest.into_iter().partition(|r| r.a[v].is_negative());
        for p in &pos {
            for q in &neg {
                next.push(IntRow::combine(p, q, v));
            }
        }
        match prune(next, nonneg) {
            Some(r) => rows = r,
            None => return vec![infeasible_row(n)],
        }
    }
    rows
}

/// Affine form over the relation's variables whose coefficients are
/// themselves affine in a vector of unknowns `z`. Entry `j` of `terms` is the
/// coefficient of relation variable `j`; the extra entry is the constant.
/// Each coefficient is `z`-weights followed by a constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub num_unknowns: usize,
    pub terms: Vec<Vec<Rational>>,
}

impl Template {
    pub fn zero(relation_dim: usize, num_unknowns: usize) -> Self {
        Template {
            num_unknowns,
            terms: vec![vec![Rational::zero(); num_unknowns + 1]; relation_dim + 1],
        }
    }

    /// Adds `weight · z[unknown]` to the coefficient of relation variable
    /// `var` (`var == relation_dim` addresses the constant).
    pub fn add(&mut self, var: usize, unknown: usize, weight: Rational) {
        self.terms[var][unknown] += weight;
    }

    pub fn negated(&self) -> Self {
        Template {
            num_unknowns: self.num_unknowns,
            terms: self
                .terms
                .iter()
                .map(|t| t.iter().map(|v| -v).collect())
                .collect(),
        }
    }

    /// Evaluates the form at concrete unknowns and a relation point.
    pub fn eval(&self, z: &[Rational], point: &[Rational]) -> Rational {
        let coeff = |t: &Vec<Rational>| {
            t[..self.num_unknowns]
                .iter()
                .zip(z)
                .fold(t[self.num_unknowns].clone(), |acc, (a, b)| acc + a * b)
        };
        let dim = self.terms.len() - 1;
        (0..dim).fold(coeff(&self.terms[dim]), |acc, j| acc + coeff(&self.terms[j]) * &point[j])
    }
}

/// Rows over the unknowns equivalent to `template(z)(x) >= 0` for every
/// rational `x` in the (non-empty) relation. An empty relation yields no
/// rows.
pub fn farkas_nonnegative(relation: &Polyhedron, template: &Template) -> Vec<Row> {
    let dim = relation.dim;
    let nz = template.num_unknowns;
    assert_eq!(template.terms.len(), dim + 1);
    let mut terms = template.terms.clone();
    let mut cons: Vec<(Vec<Rational>, bool)> = relation
        .constraints
        .iter()
        .map(|c| {
            let mut r: Vec<Rational> = c.coeffs.iter().map(|&a| ratlp::rat(a)).collect();
            r.push(ratlp::rat(c.constant));
            (r, c.kind == ConstraintKind::Equality)
        })
        .collect();

    // substitute equalities into the other constraints and the template
    let mut live = vec![true; dim];
    while let Some(k) = cons.iter().position(|(_, eq)| *eq) {
        let (row, _) = cons.swap_remove(k);
        let Some(j) = (0..dim).find(|&j| live[j] && !row[j].is_zero()) else {
            if row[dim].is_zero() {
                continue;
            }
            return Vec::new();
        };
        live[j] = false;
        // x_j = −(Σ_{i≠j} a_i x_i + b) / a_j
        let aj = row[j].clone();
        let tj = terms[j].clone();
        for i in 0..=dim {
            if i == j || row[i].is_zero() {
                continue;
            }
            let f = -&row[i] / &aj;
            for (dst, src) in terms[i].iter_mut().zip(&tj) {
                *dst += &f * src;
            }
        }
        terms[j].iter_mut().for_each(|v| *v = Rational::zero());
        for (other, _) in cons.iter_mut() {
            if other[j].is_zero() {
                continue;
            }
            let f = &other[j] / &aj;
            for i in 0..=dim {
                let d = &f * &row[i];
                other[i] -= d;
            }
        }
    }

    let mut ineqs: Vec<Vec<Rational>> = Vec::new();
    let mut seen = HashSet::new();
    for (row, _) in cons {
        if row[..dim].iter().all(Zero::is_zero) {
            if row[dim].is_negative() {
                return Vec::new();
            }
            continue;
        }
        let key = ratlp::rational::primitive_integer_row(&row);
        if seen.insert(key.clone()) {
            ineqs.push(key.into_iter().map(Rational::from_integer).collect());
        }
    }

    // unknowns z, then one multiplier per inequality
    let nl = ineqs.len();
    let mut names: Vec<String> = (0..nz).map(|i| format!("z{i}")).collect();
    names.extend((0..nl).map(|k| format!("lambda{k}")));
    let mut sys = ConstraintSystem::with_free_vars(names);
    for k in nz..nz + nl {
        sys.set_lower(k, Some(Rational::zero()));
    }
    for j in (0..dim).filter(|&j| live[j]) {
        let mut coeffs: Vec<Rational> = terms[j][..nz].to_vec();
        coeffs.extend(ineqs.iter().map(|r| -&r[j]));
        sys.push(Row::new(coeffs, Relation::Eq, -&terms[j][nz]));
    }
    let mut coeffs: Vec<Rational> = terms[dim][..nz].to_vec();
    coeffs.extend(ineqs.iter().map(|r| -&r[dim]));
    sys.push(Row::new(coeffs, Relation::Ge, -&terms[dim][nz]));

    let lambdas: Vec<usize> = (nz..nz + nl).collect();
    eliminate(&sys, &lambdas).rows
}

/// Column layout of the unknowns for one dependence: source block, target
/// block (absent for self dependences), `u_1..u_p`, `w`. A block is
/// `c_1..c_m, d_1..d_p, c_0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepLayout {
    pub src: usize,
    pub dst: usize,
    pub u: usize,
    pub w: usize,
    pub width: usize,
}

impl DepLayout {
    pub fn new(program: &Program, dep: &Dependence) -> Self {
        let src_w = program.row_width(dep.src);
        let dst = if dep.is_self() { 0 } else { src_w };
        let u = if dep.is_self() { src_w } else { src_w + program.row_width(dep.dst) };
        let p = program.num_params();
        DepLayout {
            src: 0,
            dst,
            u,
            w: u + p,
            width: u + p + 1,
        }
    }

    pub fn names(&self, program: &Program, dep: &Dependence) -> Vec<String> {
        let mut names = block_names(program, dep.src);
        if !dep.is_self() {
            names.extend(block_names(program, dep.dst));
        }
        names.extend(program.params.iter().map(|p| format!("u_{p}")));
        names.push("w".to_string());
        names
    }
}

/// Variable names of a statement's coefficient block.
pub fn block_names(program: &Program, s: usize) -> Vec<String> {
    let st = &program.statements[s];
    let mut names: Vec<String> = st.domain.iterators.iter().map(|i| format!("{}.c_{i}", st.id)).collect();
    names.extend(program.params.iter().map(|p| format!("{}.d_{p}", st.id)));
    names.push(format!("{}.c_0", st.id));
    names
}

/// Template of `φ_dst(t) − φ_src(s)` over the dependence's local unknowns.
fn difference_template(program: &Program, dep: &Dependence, layout: &DepLayout) -> Template {
    let ms = program.statements[dep.src].dim();
    let mt = program.statements[dep.dst].dim();
    let p = program.num_params();
    let dim = ms + mt + p;
    let mut t = Template::zero(dim, layout.width);
    let one = Rational::one;
    for k in 0..ms {
        t.add(k, layout.src + k, -one());
    }
    for k in 0..mt {
        t.add(ms + k, layout.dst + k, one());
    }
    for q in 0..p {
        t.add(ms + mt + q, layout.dst + mt + q, one());
        t.add(ms + mt + q, layout.src + ms + q, -one());
    }
    t.add(dim, layout.dst + mt + p, one());
    t.add(dim, layout.src + ms + p, -one());
    t
}

fn local_system(program: &Program, dep: &Dependence, layout: &DepLayout, rows: Vec<Row>) -> ConstraintSystem {
    let mut sys = ConstraintSystem::new(layout.names(program, dep));
    sys.extend(rows);
    sys
}

/// Rows equivalent to `φ_dst(t) − φ_src(s) >= 0` on the dependence, over
/// the unknowns of [`DepLayout`].
pub fn legality_constraints(program: &Program, dep: &Dependence) -> ConstraintSystem {
    let layout = DepLayout::new(program, dep);
    let t = difference_template(program, dep, &layout);
    local_system(program, dep, &layout, farkas_nonnegative(&dep.relation, &t))
}

/// Rows equivalent to `φ_dst(t) − φ_src(s) >= 1` on the dependence.
pub fn satisfaction_constraints(program: &Program, dep: &Dependence) -> ConstraintSystem {
    let layout = DepLayout::new(program, dep);
    let mut t = difference_template(program, dep, &layout);
    let dim = t.terms.len() - 1;
    t.terms[dim][layout.width] -= Rational::one();
    local_system(program, dep, &layout, farkas_nonnegative(&dep.relation, &t))
}

/// Rows equivalent to `u · p + w − (φ_dst(t) − φ_src(s)) >= 0` on the
/// dependence, over the unknowns of [`DepLayout`].
pub fn bounding_constraints(program: &Program, dep: &Dependence) -> ConstraintSystem {
    let layout = DepLayout::new(program, dep);
    let mut t = difference_template(program, dep, &layout).negated();
    let ms = program.statements[dep.src].dim();
    let mt = program.statements[dep.dst].dim();
    let p = program.num_params();
    for q in 0..p {
        t.add(ms + mt + q, layout.u + q, Rational::one());
    }
    t.add(ms + mt + p, layout.w, Rational::one());
    local_system(program, dep, &layout, farkas_nonnegative(&dep.relation, &t))
}

/// Global unknowns for a set of statements: `u_1..u_p`, `w`, then one
/// coefficient block per listed statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub num_params: usize,
    pub statements: Vec<usize>,
    /// Block offset per program statement, `None` when not in the layout.
    pub offset: Vec<Option<usize>>,
    pub width: usize,
}

impl Layout {
    pub fn new(program: &Program, statements: &[usize]) -> Self {
        let p = program.num_params();
        let mut offset = vec![None; program.statements.len()];
        let mut at = p + 1;
        for &s in statements {
            offset[s] = Some(at);
            at += program.row_width(s);
        }
        Layout {
            num_params: p,
            statements: statements.to_vec(),
            offset,
            width: at,
        }
    }

    pub fn all(program: &Program) -> Self {
        let all: Vec<usize> = (0..program.statements.len()).collect();
        Layout::new(program, &all)
    }

    pub fn u(&self, q: usize) -> usize {
        q
    }

    pub fn w(&self) -> usize {
        self.num_params
    }

    /// Column of `c_k` (iterator coefficient `k`) of statement `s`.
    pub fn c(&self, s: usize, k: usize) -> usize {
        self.block(s) + k
    }

    pub fn d(&self, program: &Program, s: usize, q: usize) -> usize {
        self.block(s) + program.statements[s].dim() + q
    }

    pub fn c0(&self, program: &Program, s: usize) -> usize {
        self.block(s) + program.row_width(s) - 1
    }

    pub fn block(&self, s: usize) -> usize {
        self.offset[s].expect("statement not in layout")
    }

    pub fn contains(&self, s: usize) -> bool {
        self.offset[s].is_some()
    }

    pub fn names(&self, program: &Program) -> Vec<String> {
        let mut names: Vec<String> = program.params.iter().map(|p| format!("u_{p}")).collect();
        names.push("w".to_string());
        for &s in &self.statements {
            names.extend(block_names(program, s));
        }
        names
    }

    /// Empty system over the layout, every unknown bounded below by 0.
    pub fn system(&self, program: &Program) -> ConstraintSystem {
        ConstraintSystem::new(self.names(program))
    }

    /// Maps rows over a dependence's local unknowns into this layout.
    pub fn embed(&self, program: &Program, dep: &Dependence, local: &[Row]) -> Vec<Row> {
        let dl = DepLayout::new(program, dep);
        let mut map = vec![0; dl.width];
        for j in 0..program.row_width(dep.src) {
            map[dl.src + j] = self.block(dep.src) + j;
        }
        for j in 0..program.row_width(dep.dst) {
            map[dl.dst + j] = self.block(dep.dst) + j;
        }
        for q in 0..self.num_params {
            map[dl.u + q] = self.u(q);
        }
        map[dl.w] = self.w();
        local
            .iter()
            .map(|r| {
                let mut coeffs = vec![Rational::zero(); self.width];
                for (j, v) in r.coeffs.iter().enumerate() {
                    if !v.is_zero() {
                        coeffs[map[j]] += v;
                    }
                }
                Row::new(coeffs, r.rel, r.rhs.clone())
            })
            .collect()
    }

    /// The block of statement `s` in an assignment.
    pub fn row_of(&self, program: &Program, s: usize, values: &[Rational]) -> Vec<Rational> {
        let b = self.block(s);
        values[b..b + program.row_width(s)].to_vec()
    }
}

/// Per-dependence legality and bounding rows, computed once and reused.
#[derive(Debug, Default)]
pub struct FarkasCache {
    entries: std::cell::RefCell<Vec<Option<std::rc::Rc<DepRows>>>>,
}

#[derive(Debug, Clone)]
pub struct DepRows {
    pub legality: Vec<Row>,
    pub bounding: Vec<Row>,
}

impl FarkasCache {
    pub fn new() -> Self {
        FarkasCache::default()
    }

    /// Rows for dependence number `index` of the program's dependence list.
    pub fn get(&self, program: &Program, index: usize, dep: &Dependence) -> std::rc::Rc<DepRows> {
        let mut entries = self.entries.borrow_mut();
        if entries.len() <= index {
            entries.resize(index + 1, None);
        }
        entries[index]
            .get_or_insert_with(|| {
                std::rc::Rc::new(DepRows {
                    legality: legality_constraints(program, dep).rows,
                    bounding: bounding_constraints(program, dep).rows,
                })
            })
            .clone()
    }
}
