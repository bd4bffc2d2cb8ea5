//! Iterative hyperplane search in integer (pluto-ilp) or relaxed
//! (pluto-lp) mode.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use ratlp::{LexMode, LpProblem, Outcome, Rational, Relation, DEFAULT_NODE_LIMIT};

use crate::error::{Error, Result};
use crate::farkas::Layout;
use crate::model::{rank, AffineTransform, Band, Cut, Ddg, LevelKind, Program};
use crate::session::Session;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ilp,
    Lp,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Ilp => "ilp",
            Mode::Lp => "lp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulerConfig {
    pub mode: Mode,
    /// Coefficients `d_i` of the parameters.
    pub allow_parametric_shift: bool,
    /// Constant and parametric shifts.
    pub allow_shift: bool,
    /// Rows other than unit vectors on the iterators.
    pub allow_skew: bool,
    pub lex_mode: LexMode,
    pub node_limit: usize,
}

impl SchedulerConfig {
    pub fn new(mode: Mode) -> Self {
        SchedulerConfig {
            mode,
            allow_parametric_shift: true,
            allow_shift: true,
            allow_skew: true,
            lex_mode: LexMode::Staged,
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }

    /// Shifts and skews disabled: every row is a unit vector.
    pub fn restricted(mode: Mode) -> Self {
        SchedulerConfig {
            allow_parametric_shift: false,
            allow_shift: false,
            allow_skew: false,
            ..SchedulerConfig::new(mode)
        }
    }
}

/// Integer basis of the null space of `prior` (rows of length `m`).
pub fn build_ortho_basis(prior: &[Vec<Rational>], m: usize) -> Vec<Vec<Rational>> {
    let mut rows: Vec<Vec<Rational>> = prior.iter().map(|r| r[..m].to_vec()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = Rational::one() / &rows[r][c];
        for v in &mut rows[r] {
            *v *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..m {
                    let d = &f * &rows[r][j];
                    rows[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (0..m)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Rational::zero(); m];
            v[free] = Rational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -&rows[i][free];
            }
            ratlp::rational::primitive_integer_row(&v)
                .into_iter()
                .map(Rational::from_integer)
                .collect()
        })
        .collect()
}

/// One hyperplane as found by the solver.
#[derive(Debug, Clone)]
pub struct HyperplaneRecord {
    pub level: usize,
    pub band: usize,
    pub layout: Layout,
    /// The problem as solved (integrality list filled in ILP mode).
    pub problem: LpProblem,
    /// Optimum before scaling.
    pub raw: Vec<Rational>,
    pub scaled: Vec<Rational>,
    /// Factor applied to `u` and `w`; a multiple of every component factor.
    pub factor: BigInt,
    /// Factor applied to each statement's block.
    pub statement_factors: Vec<BigInt>,
}

impl HyperplaneRecord {
    /// `u = 0` and `w = 0`: the hyperplane carries no dependence distance.
    pub fn bound_is_zero(&self) -> bool {
        (0..=self.layout.num_params).all(|v| self.scaled[v].is_zero())
    }
}

#[derive(Debug, Clone)]
pub struct Schedule {
    pub transform: AffineTransform,
    pub ddg: Ddg,
    pub trace: Vec<HyperplaneRecord>,
}

fn statement_complete(program: &Program, transform: &AffineTransform, s: usize) -> bool {
    let m = program.statements[s].dim();
    rank(&transform.iterator_rows(s, m)) == m
}

pub fn all_complete(program: &Program, transform: &AffineTransform) -> bool {
    (0..program.statements.len()).all(|s| statement_complete(program, transform, s))
}

/// Legality and bounding rows of every live ordering dependence in `ddg`
/// whose statements are all in `layout`.
pub fn dependence_system(session: &Session, ddg: &Ddg, layout: &Layout) -> ratlp::ConstraintSystem {
    let program = session.program;
    let mut sys = layout.system(program);
    for e in ddg.active_ordering() {
        let dep = &ddg.deps[e];
        if !layout.contains(dep.src) || !layout.contains(dep.dst) {
            continue;
        }
        let rows = session.dep_rows(ddg, e);
        sys.extend(layout.embed(program, dep, &rows.legality));
        sys.extend(layout.embed(program, dep, &rows.bounding));
    }
    sys
}

/// Objective priority: `u`, `w`, then per statement the iterator
/// coefficients innermost first, parametric shifts, constant shift.
pub fn objective_order(program: &Program, layout: &Layout) -> Vec<usize> {
    let mut order: Vec<usize> = (0..=layout.num_params).collect();
    for &s in &layout.statements {
        let m = program.statements[s].dim();
        order.extend((0..m).rev().map(|k| layout.c(s, k)));
        order.extend((0..program.num_params()).map(|q| layout.d(program, s, q)));
        order.push(layout.c0(program, s));
    }
    order
}

pub fn restrict_shifts(program: &Program, layout: &Layout, sys: &mut ratlp::ConstraintSystem, config: &SchedulerConfig) {
    for &s in &layout.statements {
        if !config.allow_parametric_shift || !config.allow_shift {
            for q in 0..program.num_params() {
                sys.fix(layout.d(program, s, q), Rational::zero());
            }
        }
        if !config.allow_shift {
            sys.fix(layout.c0(program, s), Rational::zero());
        }
    }
}

/// Solves a lexmin problem in the configured mode and scales a rational
/// optimum per weakly connected component.
pub fn solve_scaled(
    session: &Session,
    origin: &'static str,
    layout: &Layout,
    problem: LpProblem,
    mode: Mode,
    components: &[Vec<usize>],
) -> Result<Option<(Vec<Rational>, ratlp::Scaled, LpProblem)>> {
    let program = session.program;
    let logged = problem.clone();
    let outcome = session.solve(origin, problem, mode == Mode::Ilp)?;
    let raw = match outcome {
        Outcome::Optimal(s) => s.values,
        Outcome::Infeasible => return Ok(None),
        Outcome::Unbounded => return Err(Error::internal(format!("{origin}: unbounded lexmin"))),
    };
    let groups: Vec<Vec<usize>> = components
        .iter()
        .map(|comp| {
            comp.iter()
                .filter(|&&s| layout.contains(s))
                .flat_map(|&s| {
                    let b = layout.block(s);
                    b..b + program.row_width(s)
                })
                .collect()
        })
        .collect();
    let shared: Vec<usize> = (0..=layout.num_params).collect();
    let scaled = ratlp::scale_to_integral(&raw, &groups, &shared);
    Ok(Some((raw, scaled, logged)))
}

struct Found {
    rows: Vec<Vec<Rational>>,
    record: HyperplaneRecord,
}

fn statement_factors(program: &Program, components: &[Vec<usize>], scaled: &ratlp::Scaled) -> Vec<BigInt> {
    let mut out = vec![BigInt::one(); program.statements.len()];
    for (g, comp) in components.iter().enumerate() {
        for &s in comp {
            out[s] = scaled.group_factors[g].clone();
        }
    }
    out
}

/// Searches for the next hyperplane. `flip` negates the orientation of the
/// linear independence rows.
fn find_hyperplane(
    session: &Session,
    ddg: &Ddg,
    transform: &AffineTransform,
    config: &SchedulerConfig,
    flip: bool,
) -> Result<Option<Found>> {
    let program = session.program;
    let layout = Layout::all(program);
    let mut base = dependence_system(session, ddg, &layout);
    restrict_shifts(program, &layout, &mut base, config);
    let components = ddg.components();
    let n = program.statements.len();

    let incomplete: Vec<usize> = (0..n).filter(|&s| !statement_complete(program, transform, s)).collect();
    let mut candidates: Vec<ratlp::ConstraintSystem> = Vec::new();
    if config.allow_skew {
        let mut sys = base.clone();
        for &s in &incomplete {
            let m = program.statements[s].dim();
            let trivial: Vec<(usize, Rational)> = (0..m).map(|k| (layout.c(s, k), Rational::one())).collect();
            sys.push_sparse(&trivial, Relation::Ge, Rational::one());
            let basis = build_ortho_basis(&transform.iterator_rows(s, m), m);
            let sum: Vec<Rational> = (0..m).map(|k| basis.iter().map(|b| b[k].clone()).sum()).collect();
            // flipped only where the reversed sum has a positive entry
            let sign = if flip && sum.iter().any(|v| v.is_negative()) {
                -Rational::one()
            } else {
                Rational::one()
            };
            let lin: Vec<(usize, Rational)> = (0..m).map(|k| (layout.c(s, k), &sign * &sum[k])).collect();
            sys.push_sparse(&lin, Relation::Ge, Rational::one());
        }
        candidates.push(sys);
    } else {
        // one unit vector per incomplete statement, enumerated in lex order
        let choices: Vec<Vec<usize>> = incomplete
            .iter()
            .map(|&s| {
                let m = program.statements[s].dim();
                let prior = transform.iterator_rows(s, m);
                let r = rank(&prior);
                (0..m)
                    .filter(|&k| {
                        let mut with = prior.clone();
                        let mut e = vec![Rational::zero(); m];
                        e[k] = Rational::one();
                        with.push(e);
                        rank(&with) > r
                    })
                    .collect()
            })
            .collect();
        const MAX_COMBINATIONS: usize = 4096;
        let mut pick = vec![0usize; incomplete.len()];
        'combos: for _ in 0..MAX_COMBINATIONS {
            let mut sys = base.clone();
            let mut chosen = vec![None; n];
            for (i, &s) in incomplete.iter().enumerate() {
                chosen[s] = Some(choices[i][pick[i]]);
            }
            for s in 0..n {
                for k in 0..program.statements[s].dim() {
                    if chosen[s] == Some(k) {
                        sys.set_lower(layout.c(s, k), Some(Rational::one()));
                    } else {
                        sys.fix(layout.c(s, k), Rational::zero());
                    }
                }
            }
            candidates.push(sys);
            // odometer, last statement fastest
            let mut i = incomplete.len();
            loop {
                if i == 0 {
                    break 'combos;
                }
                i -= 1;
                pick[i] += 1;
                if pick[i] < choices[i].len() {
                    break;
                }
                pick[i] = 0;
            }
        }
    }

    let order = objective_order(program, &layout);
    for sys in candidates {
        let mut problem = LpProblem::lexmin_vars(sys, &order).with_mode(config.lex_mode.clone());
        problem.node_limit = config.node_limit;
        if config.mode == Mode::Ilp {
            problem = problem.with_integral(order.clone());
        }
        let Some((raw, scaled, problem)) = solve_scaled(session, "pluto", &layout, problem, config.mode, &components)? else {
            continue;
        };
        let rows = (0..n).map(|s| layout.row_of(program, s, &scaled.values)).collect();
        let record = HyperplaneRecord {
            level: transform.num_levels(),
            band: 0,
            layout: layout.clone(),
            problem,
            raw,
            statement_factors: statement_factors(program, &components, &scaled),
            factor: scaled.factor.clone(),
            scaled: scaled.values,
        };
        return Ok(Some(Found { rows, record }));
    }
    Ok(None)
}

/// Distribution bookkeeping shared by the scheduler and the permutation
/// search.
pub struct CutState {
    /// Whether the last level is a scalar level that may be refined.
    pub open_scalar: bool,
}

/// Separates the lowest pair of topologically ordered SCCs joined by a live
/// ordering dependence. Consecutive cuts refine the same scalar level.
/// Returns false when no inter-SCC dependence is live.
pub fn cut_lowest(program: &Program, ddg: &Ddg, transform: &mut AffineTransform, state: &mut CutState) -> bool {
    let sccs = ddg.scc_decompose_with(|d| d.kind.constrains_order());
    let k = ddg
        .active_ordering()
        .map(|e| &ddg.deps[e])
        .filter(|d| sccs.ordinal[d.src] != sccs.ordinal[d.dst])
        .map(|d| sccs.ordinal[d.src])
        .min();
    let Some(k) = k else {
        return false;
    };
    cut_after(program, &sccs, k, transform, state);
    true
}

/// Scalar level giving SCCs with ordinal `> k` a larger constant. An open
/// scalar level is refined so that earlier groups keep their relative order.
pub fn cut_after(program: &Program, sccs: &crate::model::Sccs, k: usize, transform: &mut AffineTransform, state: &mut CutState) {
    let n = program.statements.len();
    let p = program.num_params();
    let high = |s: usize| sccs.ordinal[s] > k;
    if state.open_scalar && transform.num_levels() > 0 {
        let l = transform.num_levels() - 1;
        let keys: Vec<(Rational, bool)> = (0..n)
            .map(|s| (transform.rows[s][l].last().cloned().unwrap_or_default(), high(s)))
            .collect();
        let mut distinct = keys.clone();
        distinct.sort();
        distinct.dedup();
        for s in 0..n {
            let last = transform.rows[s][l].len() - 1;
            let rank = distinct.binary_search(&keys[s]).expect("key present");
            transform.rows[s][l][last] = Rational::from_integer(BigInt::from(rank));
        }
    } else {
        let rows = (0..n)
            .map(|s| {
                let mut r = vec![Rational::zero(); program.statements[s].dim() + p + 1];
                if high(s) {
                    let last = r.len() - 1;
                    r[last] = Rational::one();
                }
                r
            })
            .collect();
        transform.push_level(LevelKind::Scalar, false, rows);
        state.open_scalar = true;
    }
    let level = transform.num_levels() - 1;
    let partition = scalar_partition(program, transform, level);
    match transform.cuts.last_mut() {
        Some(c) if c.level == level => c.partition = partition,
        _ => transform.cuts.push(Cut { level, partition }),
    }
}

/// Statements grouped by their constant at a scalar level, in increasing
/// order of the constant.
fn scalar_partition(program: &Program, transform: &AffineTransform, level: usize) -> Vec<Vec<usize>> {
    let mut keyed: Vec<(Rational, usize)> = (0..program.statements.len())
        .map(|s| (transform.rows[s][level].last().cloned().unwrap_or_default(), s))
        .collect();
    keyed.sort();
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<Rational> = None;
    for (v, s) in keyed {
        if prev.as_ref() != Some(&v) {
            out.push(Vec::new());
            prev = Some(v);
        }
        out.last_mut().expect("group pushed").push(s);
    }
    out
}

fn satisfied_count(ddg: &Ddg) -> usize {
    ddg.deps.iter().filter(|d| d.is_satisfied()).count()
}

/// Runs the iterative scheduler until every statement has full rank and
/// every ordering dependence is satisfied.
pub fn schedule(session: &Session, ddg: &Ddg, config: &SchedulerConfig) -> Result<Schedule> {
    let program = session.program;
    let n = program.statements.len();
    let mut transform = AffineTransform::empty(n);
    let mut ddg = ddg.clone();
    let mut trace: Vec<HyperplaneRecord> = Vec::new();
    let mut band_start = 0;
    let mut state = CutState { open_scalar: false };
    let close_band = |transform: &mut AffineTransform, band_start: &mut usize, end: usize| {
        let start = (*band_start..end)
            .find(|&l| transform.levels[l].kind == LevelKind::Hyperplane)
            .unwrap_or(end);
        if start < end {
            transform.bands.push(Band {
                start,
                end,
                permutable: true,
                parallel: false,
            });
        }
        *band_start = end;
    };
    let budget = 4 * (program.statements.iter().map(|s| s.dim()).sum::<usize>() + ddg.deps.len() + n) + 8;
    let mut steps = 0;
    while !all_complete(program, &transform) {
        steps += 1;
        if steps > budget {
            return Err(Error::internal("scheduler made no progress"));
        }
        if let Some(found) = find_hyperplane(session, &ddg, &transform, config, false)? {
            accept(&mut transform, &mut trace, found);
            state.open_scalar = false;
            continue;
        }
        if transform.num_levels() > 0 {
            let next = ddg.remove_satisfied(program, &transform, transform.num_levels() - 1)?;
            if satisfied_count(&next) > satisfied_count(&ddg) {
                let end = transform.num_levels();
                close_band(&mut transform, &mut band_start, end);
                ddg = next;
                continue;
            }
        }
        let before = transform.num_levels();
        if cut_lowest(program, &ddg, &mut transform, &mut state) {
            close_band(&mut transform, &mut band_start, before);
            ddg = ddg.remove_satisfied(program, &transform, transform.num_levels() - 1)?;
            band_start = transform.num_levels();
            continue;
        }
        match find_hyperplane(session, &ddg, &transform, config, true)? {
            Some(found) => {
                accept(&mut transform, &mut trace, found);
                state.open_scalar = false;
            }
            None => return Err(Error::internal("no hyperplane, no satisfiable dependence and no cut")),
        }
    }
    let end = transform.num_levels();
    close_band(&mut transform, &mut band_start, end);
    finish_with_cuts(program, &mut ddg, &mut transform, &mut state)?;
    for r in &mut trace {
        r.band = transform
            .bands
            .iter()
            .position(|b| b.start <= r.level && r.level < b.end)
            .unwrap_or(usize::MAX);
    }
    crate::model::annotate(program, &ddg, &mut transform);
    Ok(Schedule { transform, ddg, trace })
}

fn accept(transform: &mut AffineTransform, trace: &mut Vec<HyperplaneRecord>, found: Found) {
    transform.push_level(LevelKind::Hyperplane, false, found.rows);
    trace.push(found.record);
}

/// Appends scalar levels until no ordering dependence is left unsatisfied.
pub fn finish_with_cuts(program: &Program, ddg: &mut Ddg, transform: &mut AffineTransform, state: &mut CutState) -> Result<()> {
    loop {
        if transform.num_levels() > 0 {
            *ddg = ddg.remove_satisfied(program, transform, transform.num_levels() - 1)?;
        }
        if ddg.active_ordering().next().is_none() {
            return Ok(());
        }
        if !cut_lowest(program, ddg, transform, state) {
            let e = ddg.active_ordering().next().expect("checked above");
            return Err(Error::internal(format!(
                "dependence {} stays unsatisfied by a complete transform",
                ddg.deps[e]
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ratlp::rat;

    #[test]
    fn basis_without_prior_rows_is_the_unit_basis() {
        assert_eq!(
            build_ortho_basis(&[], 2),
            vec![vec![rat(1), rat(0)], vec![rat(0), rat(1)]]
        );
    }

    #[test]
    fn basis_orthogonal_to_first_axis() {
        assert_eq!(build_ortho_basis(&[vec![rat(1), rat(0)]], 2), vec![vec![rat(0), rat(1)]]);
    }

    #[test]
    fn full_rank_prior_leaves_nothing() {
        let prior = vec![vec![rat(1), rat(1)], vec![rat(1), rat(0)]];
        assert!(build_ortho_basis(&prior, 2).is_empty());
    }

    #[test]
    fn basis_vectors_are_orthogonal_integers() {
        let prior = vec![vec![rat(2), rat(1), rat(0)]];
        let basis = build_ortho_basis(&prior, 3);
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(b.iter().all(|v| v.is_integer()));
            let dot: Rational = b.iter().zip(&prior[0]).map(|(x, y)| x * y).sum();
            assert!(dot.is_zero());
        }
    }
}
