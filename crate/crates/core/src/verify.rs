//! Executable checks of the scheduler's guarantees: exact legality of a
//! transform, a brute-force lexmin oracle for small systems, and a property
//! suite over a corpus of programs.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use ratlp::rational::{denominator_lcm, primitive_integer_row, to_fraction_string};
use ratlp::{ConstraintSystem, LpProblem, Outcome, Rational, Relation};
use serde::Serialize;

use crate::fcg::{build_fcg, fusion_feasible, FusionConflictGraph, FusionOptions};
use crate::frontend::dependence_graph;
use crate::model::{rank, AffineTransform, Ddg, Minimum, Program};
use crate::pipeline::{run_in, Algorithm, ScheduleResult};
use crate::pluto::{schedule, HyperplaneRecord, Mode, Schedule, SchedulerConfig};
use crate::postpass::{hyperplane_runs, negative_components};
use crate::session::{LoggedLp, Session};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// The level difference is negative somewhere before satisfaction.
    Negative,
    /// The level difference has no lower bound.
    Unbounded,
    /// No level reaches a difference of one.
    NeverSatisfied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub dep: usize,
    pub level: Option<usize>,
    pub kind: ViolationKind,
    pub message: String,
}

/// Exact per-level check of every ordering dependence: the difference must
/// stay non-negative until the first level where its minimum reaches one.
pub fn check_legality(program: &Program, ddg: &Ddg, transform: &AffineTransform) -> Vec<Violation> {
    let one = Rational::from_integer(1.into());
    let mut out = Vec::new();
    for (e, d) in ddg.deps.iter().enumerate() {
        if !d.kind.constrains_order() || !d.relation.is_rationally_feasible() {
            continue;
        }
        let mut satisfied = false;
        for l in 0..transform.num_levels() {
            match d.min_difference(program, transform, l) {
                Minimum::Empty => {
                    satisfied = true;
                    break;
                }
                Minimum::Unbounded => {
                    out.push(Violation {
                        dep: e,
                        level: Some(l),
                        kind: ViolationKind::Unbounded,
                        message: format!("dependence {d} is unbounded below at level {l}"),
                    });
                    satisfied = true;
                    break;
                }
                Minimum::Finite(v) if v < Rational::zero() => {
                    out.push(Violation {
                        dep: e,
                        level: Some(l),
                        kind: ViolationKind::Negative,
                        message: format!("dependence {d} reaches {} at level {l}", to_fraction_string(&v)),
                    });
                    satisfied = true;
                    break;
                }
                Minimum::Finite(v) if v >= one => {
                    satisfied = true;
                    break;
                }
                Minimum::Finite(_) => {}
            }
        }
        if !satisfied {
            out.push(Violation {
                dep: e,
                level: None,
                kind: ViolationKind::NeverSatisfied,
                message: format!("dependence {d} is never satisfied"),
            });
        }
    }
    out
}

/// Every statement's iterator rows have full column rank.
pub fn has_full_rank(program: &Program, transform: &AffineTransform) -> bool {
    program
        .statements
        .iter()
        .enumerate()
        .all(|(s, st)| rank(&transform.iterator_rows(s, st.dim())) == st.dim())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteForce {
    Found(Vec<Rational>),
    Infeasible,
    /// The node budget ran out before the scan finished.
    Exhausted,
}

/// Priority order of a problem built from unit objectives, followed by any
/// variable not mentioned.
pub fn priority_order(problem: &LpProblem) -> Vec<usize> {
    let n = problem.system.num_vars();
    let mut order: Vec<usize> = problem
        .objectives
        .iter()
        .filter_map(|o| o.iter().position(|v| !v.is_zero()))
        .collect();
    let mut seen = vec![false; n];
    order.retain(|&v| !std::mem::replace(&mut seen[v], true));
    order.extend((0..n).filter(|&v| !seen[v]));
    order
}

/// Lexicographically smallest integer point of `[0, bound]^n` (respecting
/// lower bounds) in the given variable priority, by depth-first scan with
/// interval pruning.
pub fn brute_force_lexmin(system: &ConstraintSystem, order: &[usize], bound: i64, node_limit: usize) -> BruteForce {
    let n = system.num_vars();
    let lo: Vec<i64> = system
        .lower
        .iter()
        .map(|l| match l {
            Some(v) => v.ceil().to_integer().to_i64().unwrap_or(i64::MAX).max(0),
            None => 0,
        })
        .collect();
    if lo.iter().any(|&l| l > bound) {
        return BruteForce::Infeasible;
    }
    let pos: Vec<usize> = {
        let mut p = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            p[v] = i;
        }
        p
    };
    // rows as integer `Σ a_i x_i rel b`, coefficients indexed by position
    let mut rows: Vec<(Vec<i128>, Relation, i128)> = Vec::new();
    for r in &system.rows {
        let mut vals = r.coeffs.clone();
        vals.push(r.rhs.clone());
        let ints = primitive_integer_row(&vals);
        let Some(ints) = ints.iter().map(|v| v.to_i128()).collect::<Option<Vec<i128>>>() else {
            return BruteForce::Exhausted;
        };
        let mut coeffs = vec![0i128; n];
        for v in 0..n {
            coeffs[pos[v]] = ints[v];
        }
        rows.push((coeffs, r.rel, ints[n]));
    }
    let bounds: Vec<(i128, i128)> = order.iter().map(|&v| (lo[v] as i128, bound as i128)).collect();
    // rest[r][d]: min and max of the row over positions >= d
    let rest: Vec<Vec<(i128, i128)>> = rows
        .iter()
        .map(|(c, _, _)| {
            let mut acc = vec![(0i128, 0i128); n + 1];
            for d in (0..n).rev() {
                let (a, b) = (c[d] * bounds[d].0, c[d] * bounds[d].1);
                acc[d] = (acc[d + 1].0 + a.min(b), acc[d + 1].1 + a.max(b));
            }
            acc
        })
        .collect();
    let feasible = |partial: &[i128], d: usize| {
        rows.iter().zip(&rest).enumerate().all(|(r, ((_, rel, rhs), rest))| {
            let (min, max) = (partial[r] + rest[d].0, partial[r] + rest[d].1);
            match rel {
                Relation::Ge => max >= *rhs,
                Relation::Le => min <= *rhs,
                Relation::Eq => min <= *rhs && *rhs <= max,
            }
        })
    };
    let mut partial = vec![0i128; rows.len()];
    if !feasible(&partial, 0) {
        return BruteForce::Infeasible;
    }
    let mut point = vec![0i128; n];
    let mut budget = node_limit;
    fn dfs(
        d: usize,
        point: &mut Vec<i128>,
        partial: &mut Vec<i128>,
        budget: &mut usize,
        rows: &[(Vec<i128>, Relation, i128)],
        bounds: &[(i128, i128)],
        feasible: &dyn Fn(&[i128], usize) -> bool,
    ) -> Option<bool> {
        if d == point.len() {
            return Some(true);
        }
        for x in bounds[d].0..=bounds[d].1 {
            if *budget == 0 {
                return None;
            }
            *budget -= 1;
            for (r, (c, _, _)) in rows.iter().enumerate() {
                partial[r] += c[d] * x;
            }
            point[d] = x;
            let ok = feasible(partial, d + 1);
            let found = if ok { dfs(d + 1, point, partial, budget, rows, bounds, feasible)? } else { false };
            if found {
                return Some(true);
            }
            for (r, (c, _, _)) in rows.iter().enumerate() {
                partial[r] -= c[d] * x;
            }
        }
        Some(false)
    }
    match dfs(0, &mut point, &mut partial, &mut budget, &rows, &bounds, &feasible) {
        None => BruteForce::Exhausted,
        Some(false) => BruteForce::Infeasible,
        Some(true) => {
            let mut values = vec![Rational::zero(); n];
            for v in 0..n {
                values[v] = Rational::from_integer(BigInt::from(point[pos[v]]));
            }
            BruteForce::Found(values)
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub description: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// Fewest passing cases for the check to count as passed.
    pub minimum: usize,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl CheckResult {
    fn new(name: &'static str, description: &'static str) -> Self {
        CheckResult {
            name,
            description,
            ..Default::default()
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0 && self.passed >= self.minimum
    }

    fn record(&mut self, ok: bool, failure: impl FnOnce() -> String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            self.failures.push(failure());
        }
    }

    fn skip(&mut self, note: impl Into<String>) {
        self.skipped += 1;
        self.notes.push(note.into());
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub instances: Vec<String>,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckResult::ok)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check, then the failures.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<32} passed={} failed={} skipped={}  {}",
                if c.ok() { "PASS" } else { "FAIL" },
                c.name,
                c.passed,
                c.failed,
                c.skipped,
                c.description
            );
        }
        for c in self.checks.iter().filter(|c| !c.ok()) {
            if c.passed < c.minimum {
                let _ = writeln!(out, "  {}: only {} cases, need {}", c.name, c.passed, c.minimum);
            }
            for f in c.failures.iter().take(10) {
                let _ = writeln!(out, "  {}: {f}", c.name);
            }
        }
        out
    }
}

pub const ORACLE_BOUND: i64 = 3;
pub const ORACLE_NODE_LIMIT: usize = 2_000_000;
pub const SCALING_MINIMUM: usize = 50;

fn scale_factors() -> Vec<Rational> {
    vec![
        Rational::from_integer(2.into()),
        Rational::new(7.into(), 3.into()),
        Rational::from_integer(10.into()),
    ]
}

struct Runs {
    ddg: Ddg,
    lp: crate::Result<ScheduleResult>,
    ilp: crate::Result<ScheduleResult>,
    dfp: crate::Result<ScheduleResult>,
    logs: Vec<LoggedLp>,
    restricted: Option<(Schedule, Schedule)>,
}

fn collect(program: &Program) -> Runs {
    let ddg = dependence_graph(program);
    let mut logs = Vec::new();
    let mut go = |a: Algorithm| {
        let session = Session::new(program);
        session.enable_logging();
        let r = run_in(&session, &ddg, a);
        logs.extend(session.take_log());
        r
    };
    let lp = go(Algorithm::Lp);
    let ilp = go(Algorithm::Ilp);
    let dfp = go(Algorithm::Dfp);
    let restricted = {
        let s = Session::new(program);
        let lp = schedule(&s, &ddg, &SchedulerConfig::restricted(Mode::Lp));
        let ilp = schedule(&s, &ddg, &SchedulerConfig::restricted(Mode::Ilp));
        match (lp, ilp) {
            (Ok(a), Ok(b)) => Some((a, b)),
            _ => None,
        }
    };
    Runs {
        ddg,
        lp,
        ilp,
        dfp,
        logs,
        restricted,
    }
}

fn fmt_values(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(to_fraction_string).collect();
    format!("[{}]", parts.join(", "))
}

/// Outer hyperplane of each band: whether its bound is zero.
fn band_parallel_flags(result: &ScheduleResult) -> Vec<bool> {
    (0..result.transform.bands.len())
        .map(|b| {
            result
                .trace
                .iter()
                .filter(|r| r.band == b)
                .min_by_key(|r| r.level)
                .is_some_and(HyperplaneRecord::bound_is_zero)
        })
        .collect()
}

fn band_depths(t: &AffineTransform) -> Vec<usize> {
    t.bands.iter().map(|b| b.depth()).collect()
}

/// Runs every property check over the corpus.
pub fn theorem_suite(corpus: &[(String, Program)]) -> SuiteReport {
    let mut exact = CheckResult::new("lp-optimum-exact", "every LP optimum satisfies its system exactly");
    let mut scaling = CheckResult::new("scaling-closure", "LP optima scaled by 2, 7/3 and 10 stay feasible");
    scaling.minimum = SCALING_MINIMUM;
    let mut oracle = CheckResult::new(
        "scaled-lp-matches-oracle",
        "c_s times the raw LP row equals the brute-force integer lexmin",
    );
    let mut parallel = CheckResult::new("parallel-agreement", "per band, lp finds u = 0 and w = 0 iff ilp does");
    let mut depth = CheckResult::new("band-depth-agreement", "per band, lp and ilp find the same number of rows");
    let mut restricted = CheckResult::new(
        "restricted-scaling",
        "without shifts and skews, c_s times the lp assignment equals the ilp assignment",
    );
    let mut skew_legal = CheckResult::new("skew-legality", "the skew pass output has no negative component");
    let mut skew_noop = CheckResult::new("skew-noop-when-tileable", "the skew pass leaves tileable transforms untouched");
    let mut valid = CheckResult::new("dfp-valid-full-rank", "dfp transforms are legal with full rank per statement");
    let mut shift_trans = CheckResult::new(
        "shift-transitivity",
        "pairwise shift-enabled fusion of one dimension implies joint fusion",
    );
    let mut scc_color = CheckResult::new("scc-colorable", "every isolated SCC has a conflict-free dimension choice");
    let mut dim_trans = CheckResult::new(
        "dimension-transitivity",
        "fusable (i, j) and (j, k) pairs imply a fusable triple",
    );

    for (name, program) in corpus {
        let runs = collect(program);

        for log in &runs.logs {
            let sol = &log.solution;
            exact.record(log.problem.system.satisfied_by(&sol.values), || {
                format!("{name}: {} optimum {} violates its system", log.origin, fmt_values(&sol.values))
            });
            if !log.problem.integral.is_empty() {
                continue;
            }
            let bad = scale_factors()
                .into_iter()
                .find(|k| {
                    let scaled: Vec<Rational> = sol.values.iter().map(|v| v * k).collect();
                    !log.problem.system.satisfied_by(&scaled)
                });
            scaling.record(bad.is_none(), || {
                format!(
                    "{name}: {} optimum {} fails after scaling by {}",
                    log.origin,
                    fmt_values(&sol.values),
                    to_fraction_string(bad.as_ref().expect("failing factor"))
                )
            });
        }

        match &runs.lp {
            Ok(lp) => {
                for rec in &lp.trace {
                    oracle_check(name, rec, &mut oracle);
                }
            }
            Err(e) => oracle.skip(format!("{name}: lp schedule failed: {e}")),
        }

        match (&runs.lp, &runs.ilp) {
            (Ok(lp), Ok(ilp)) => {
                let (a, b) = (band_parallel_flags(lp), band_parallel_flags(ilp));
                parallel.record(a == b, || format!("{name}: lp bands {a:?}, ilp bands {b:?}"));
                let (a, b) = (band_depths(&lp.transform), band_depths(&ilp.transform));
                depth.record(a == b, || format!("{name}: lp depths {a:?}, ilp depths {b:?}"));
            }
            (lp, ilp) => {
                let msg = format!(
                    "{name}: schedule failed (lp: {:?}, ilp: {:?})",
                    lp.as_ref().err().map(ToString::to_string),
                    ilp.as_ref().err().map(ToString::to_string)
                );
                parallel.record(false, || msg.clone());
                depth.record(false, || msg);
            }
        }

        match &runs.restricted {
            Some((lp, ilp)) => {
                let ok = lp.trace.len() == ilp.trace.len()
                    && lp.trace.iter().zip(&ilp.trace).all(|(a, b)| {
                        let c = Rational::from_integer(denominator_lcm(&a.raw));
                        a.raw.iter().map(|v| v * &c).collect::<Vec<_>>() == b.raw
                    });
                restricted.record(ok, || {
                    let show = |t: &[HyperplaneRecord]| t.iter().map(|r| fmt_values(&r.raw)).collect::<Vec<_>>().join(" ");
                    format!("{name}: lp raw {} vs ilp {}", show(&lp.trace), show(&ilp.trace))
                });
            }
            None => restricted.skip(format!("{name}: needs shifts or skews")),
        }

        match &runs.dfp {
            Ok(dfp) => {
                let unskewed = dfp.unskewed.as_ref().expect("dfp keeps the unskewed transform");
                let skewed = dfp.skew.as_ref().expect("dfp runs the skew pass");
                let negative: Vec<String> = check_legality(program, &runs.ddg, &skewed.transform)
                    .into_iter()
                    .filter(|v| v.kind != ViolationKind::NeverSatisfied)
                    .map(|v| v.message)
                    .collect();
                skew_legal.record(negative.is_empty(), || format!("{name}: {}", negative.join("; ")));
                let tileable = hyperplane_runs(unskewed).iter().all(|&(start, end)| {
                    (start..end).all(|l| negative_components(program, &runs.ddg, unskewed, start, l).is_empty())
                });
                if tileable {
                    skew_noop.record(skewed.transform == *unskewed && skewed.levels.is_empty(), || {
                        format!("{name}: tileable transform was changed")
                    });
                } else {
                    skew_noop.skip(format!("{name}: not tileable before skewing"));
                }
                let violations = check_legality(program, &runs.ddg, &dfp.transform);
                let full = has_full_rank(program, &dfp.transform);
                valid.record(violations.is_empty() && full, || {
                    let msgs: Vec<String> = violations.iter().map(|v| v.message.clone()).collect();
                    format!("{name}: full rank {full}; {}", msgs.join("; "))
                });
            }
            Err(e) => {
                let msg = format!("{name}: dfp failed: {e}");
                skew_legal.record(false, || msg.clone());
                valid.record(false, || msg);
            }
        }

        let session = Session::new(program);
        if let Err(e) = transitivity_checks(name, &session, &runs.ddg, &mut shift_trans, &mut scc_color, &mut dim_trans) {
            dim_trans.record(false, || format!("{name}: {e}"));
        }
    }

    SuiteReport {
        instances: corpus.iter().map(|(n, _)| n.clone()).collect(),
        checks: vec![
            exact,
            scaling,
            oracle,
            parallel,
            depth,
            restricted,
            skew_legal,
            skew_noop,
            valid,
            shift_trans,
            scc_color,
            dim_trans,
        ],
    }
}

fn oracle_check(name: &str, rec: &HyperplaneRecord, check: &mut CheckResult) {
    let all: Vec<usize> = (0..rec.problem.system.num_vars()).collect();
    let ilp = rec.problem.clone().with_integral(all);
    let ilp_values = match ratlp::solve_ilp(&ilp) {
        Ok(Outcome::Optimal(s)) => s.values,
        Ok(_) => return check.skip(format!("{name} level {}: no ilp optimum", rec.level)),
        Err(e) => return check.skip(format!("{name} level {}: {e}", rec.level)),
    };
    let bound = Rational::from_integer(ORACLE_BOUND.into());
    if ilp_values.iter().any(|v| *v > bound || *v < Rational::zero()) {
        return check.skip(format!(
            "{name} level {}: ilp optimum {} lies outside the grid",
            rec.level,
            fmt_values(&ilp_values)
        ));
    }
    let order = priority_order(&rec.problem);
    match brute_force_lexmin(&rec.problem.system, &order, ORACLE_BOUND, ORACLE_NODE_LIMIT) {
        BruteForce::Found(best) => {
            if best != ilp_values {
                check.record(false, || {
                    format!(
                        "{name} level {}: oracle {} disagrees with branch and bound {}",
                        rec.level,
                        fmt_values(&best),
                        fmt_values(&ilp_values)
                    )
                });
                return;
            }
            check.record(rec.scaled == best, || {
                format!(
                    "{name} level {}: c_s = {}, scaled lp {} vs oracle {}",
                    rec.level,
                    rec.factor,
                    fmt_values(&rec.scaled),
                    fmt_values(&best)
                )
            });
        }
        BruteForce::Infeasible => check.record(false, || format!("{name} level {}: oracle found no point", rec.level)),
        BruteForce::Exhausted => check.skip(format!("{name} level {}: oracle budget exhausted", rec.level)),
    }
}

/// One dimension per statement of `stmts` with no self-loop and no edge
/// between the chosen vertices.
pub fn conflict_free_choice(program: &Program, fcg: &FusionConflictGraph, stmts: &[usize]) -> Option<Vec<usize>> {
    fn go(program: &Program, fcg: &FusionConflictGraph, stmts: &[usize], chosen: &mut Vec<usize>) -> bool {
        let Some(&s) = stmts.get(chosen.len()) else {
            return true;
        };
        for k in 0..program.statements[s].dim() {
            let v = fcg.vertex(s, k);
            if fcg.has_self_loop(v) || chosen.iter().any(|&u| fcg.has_edge(u, v)) {
                continue;
            }
            chosen.push(v);
            if go(program, fcg, stmts, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    let mut chosen = Vec::new();
    go(program, fcg, stmts, &mut chosen).then_some(chosen)
}

/// Copy of `ddg` in which only dependences inside `set` stay active.
pub fn isolate(ddg: &Ddg, set: &[usize]) -> Ddg {
    let mut out = ddg.clone();
    for d in &mut out.deps {
        if !(set.contains(&d.src) && set.contains(&d.dst)) {
            d.satisfied_at = Some(0);
        }
    }
    out
}

const MAX_SUBSET_STATEMENTS: usize = 8;

fn transitivity_checks(
    name: &str,
    session: &Session,
    ddg: &Ddg,
    shift_trans: &mut CheckResult,
    scc_color: &mut CheckResult,
    dim_trans: &mut CheckResult,
) -> crate::Result<()> {
    let program = session.program;
    let n = program.statements.len();

    for comp in ddg.scc_decompose().components {
        let stmts: Vec<usize> = comp.iter().copied().filter(|&s| program.statements[s].dim() > 0).collect();
        if stmts.is_empty() {
            continue;
        }
        let fcg = build_fcg(session, &isolate(ddg, &comp), FusionOptions::default())?;
        let ok = conflict_free_choice(program, &fcg, &stmts).is_some();
        scc_color.record(ok, || {
            let ids: Vec<&str> = stmts.iter().map(|&s| program.statements[s].id.as_str()).collect();
            format!("{name}: no conflict-free dimension for SCC {ids:?}")
        });
    }

    let shifts = FusionOptions { parametric_shift: true };
    let mut memo: HashMap<Vec<(usize, usize)>, bool> = HashMap::new();
    let mut feasible = |chosen: Vec<(usize, usize)>| -> crate::Result<bool> {
        if let Some(&v) = memo.get(&chosen) {
            return Ok(v);
        }
        let v = fusion_feasible(session, ddg, &chosen, shifts)?;
        memo.insert(chosen, v);
        Ok(v)
    };

    if n <= MAX_SUBSET_STATEMENTS {
        for mask in 1u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|&s| mask & (1 << s) != 0).collect();
            if set.len() < 3 {
                continue;
            }
            let depth = set.iter().map(|&s| program.statements[s].dim()).min().unwrap_or(0);
            for i in 0..depth {
                let mut pairwise = true;
                for (a, &s) in set.iter().enumerate() {
                    for &t in &set[a + 1..] {
                        pairwise &= feasible(vec![(s, i), (t, i)])?;
                    }
                }
                if !pairwise {
                    continue;
                }
                let joint = feasible(set.iter().map(|&s| (s, i)).collect())?;
                shift_trans.record(joint, || format!("{name}: dimension {i} of {set:?} fuses pairwise but not jointly"));
            }
        }
    } else {
        shift_trans.skip(format!("{name}: more than {MAX_SUBSET_STATEMENTS} statements"));
    }

    for a in 0..n {
        for b in 0..n {
            for c in a + 1..n {
                if b == a || b == c {
                    continue;
                }
                for i in 0..program.statements[a].dim() {
                    for j in 0..program.statements[b].dim() {
                        for k in 0..program.statements[c].dim() {
                            let mut ab = vec![(a, i), (b, j)];
                            ab.sort_unstable();
                            let mut bc = vec![(b, j), (c, k)];
                            bc.sort_unstable();
                            if !feasible(ab)? || !feasible(bc)? {
                                continue;
                            }
                            let mut all = vec![(a, i), (b, j), (c, k)];
                            all.sort_unstable();
                            let joint = feasible(all)?;
                            dim_trans.record(joint, || {
                                let v = |s: usize, d: usize| {
                                    let st = &program.statements[s];
                                    format!("{}.{}", st.id, st.domain.iterators[d])
                                };
                                format!("{name}: {} {} {} fuse pairwise but not jointly", v(a, i), v(b, j), v(c, k))
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
