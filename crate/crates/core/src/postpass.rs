//! Scaling and shifting of a permutation, then skewing for tileability.

use num_traits::{One, Zero};
use ratlp::{LpProblem, Outcome, Rational};

use crate::error::{Error, Result};
use crate::farkas::{farkas_nonnegative, satisfaction_constraints, Layout, Template};
use crate::fcg::Permutation;
use crate::model::{satisfaction_levels, AffineTransform, Ddg, LevelKind, Program};
use crate::pluto::{dependence_system, objective_order, solve_scaled, Mode};
use crate::session::Session;

/// Replaces every unit row of the permutation by a scaled and shifted row
/// found by the relaxed LP; scalar levels are kept as they are.
pub fn scale_and_shift(session: &Session, ddg: &Ddg, perm: &Permutation) -> Result<AffineTransform> {
    let program = session.program;
    let n = program.statements.len();
    let mut transform = AffineTransform::empty(n);
    let mut work = ddg.clone();
    for l in 0..perm.transform.num_levels() {
        let level = &perm.transform.levels[l];
        let unit: Vec<Vec<Rational>> = (0..n).map(|s| perm.transform.rows[s][l].clone()).collect();
        if level.kind == LevelKind::Scalar {
            transform.push_level(LevelKind::Scalar, false, unit);
        } else {
            let rows = scale_level(session, &work, perm, l, &unit)?;
            transform.push_level(LevelKind::Hyperplane, false, rows);
        }
        work = work.remove_satisfied(program, &transform, l)?;
    }
    transform.cuts = perm.transform.cuts.clone();
    Ok(transform)
}

fn scale_level(session: &Session, work: &Ddg, perm: &Permutation, l: usize, unit: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>> {
    let program = session.program;
    let layout = Layout::all(program);
    let mut base = dependence_system(session, work, &layout);
    for (s, row) in unit.iter().enumerate() {
        for k in 0..program.statements[s].dim() {
            if row[k].is_zero() {
                base.fix(layout.c(s, k), Rational::zero());
            } else {
                base.set_lower(layout.c(s, k), Some(Rational::one()));
            }
        }
    }
    let mut strong = base.clone();
    for e in work.active_ordering() {
        if perm.ddg.deps[e].satisfied_at == Some(l) {
            let dep = &work.deps[e];
            strong.extend(layout.embed(program, dep, &satisfaction_constraints(program, dep).rows));
        }
    }
    let order = objective_order(program, &layout);
    let components = work.components();
    for sys in [strong, base] {
        let problem = LpProblem::lexmin_vars(sys, &order);
        if let Some((_, scaled, _)) = solve_scaled(session, "postpass", &layout, problem, Mode::Lp, &components)? {
            return Ok((0..program.statements.len())
                .map(|s| layout.row_of(program, s, &scaled.values))
                .collect());
        }
    }
    Err(Error::internal(format!("no scaling and shifting for level {l}")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skewed {
    pub transform: AffineTransform,
    /// Levels whose rows were replaced.
    pub levels: Vec<usize>,
    /// Set when some negative component could not be removed.
    pub diagnostic: Option<String>,
}

/// Maximal runs of consecutive hyperplane levels.
pub fn hyperplane_runs(transform: &AffineTransform) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut l = 0;
    while l < transform.num_levels() {
        if transform.levels[l].kind != LevelKind::Hyperplane {
            l += 1;
            continue;
        }
        let start = l;
        while l < transform.num_levels() && transform.levels[l].kind == LevelKind::Hyperplane {
            l += 1;
        }
        runs.push((start, l));
    }
    runs
}

/// Ordering dependences live at the start of a run that have a negative
/// difference somewhere at `level`.
pub fn negative_components(program: &Program, ddg: &Ddg, transform: &AffineTransform, start: usize, level: usize) -> Vec<usize> {
    let sat = satisfaction_levels(program, ddg, transform);
    let zero = Rational::zero();
    (0..ddg.deps.len())
        .filter(|&e| {
            let d = &ddg.deps[e];
            d.kind.constrains_order()
                && !sat[e].is_some_and(|s| s < start)
                && !d.min_difference(program, transform, level).at_least(&zero)
        })
        .collect()
}

/// Replaces rows that give a live dependence a negative component by a
/// non-negative combination of the row and the rows outside it.
pub fn introduce_skew(session: &Session, ddg: &Ddg, transform: &AffineTransform) -> Result<Skewed> {
    let program = session.program;
    let mut out = transform.clone();
    let mut levels = Vec::new();
    for (start, end) in hyperplane_runs(transform) {
        for i in start..end {
            if negative_components(program, ddg, &out, start, i).is_empty() {
                continue;
            }
            match skew_row(session, ddg, &out, start, i)? {
                Some(rows) => {
                    for (s, r) in rows.into_iter().enumerate() {
                        out.rows[s][i] = r;
                    }
                    levels.push(i);
                }
                None => {
                    return Ok(Skewed {
                        transform: transform.clone(),
                        levels: Vec::new(),
                        diagnostic: Some(format!("level {i} has a negative dependence component that no skew removes")),
                    })
                }
            }
        }
    }
    Ok(Skewed {
        transform: out,
        levels,
        diagnostic: None,
    })
}

fn skew_row(session: &Session, ddg: &Ddg, transform: &AffineTransform, start: usize, i: usize) -> Result<Option<Vec<Vec<Rational>>>> {
    let program = session.program;
    let n = program.statements.len();
    let p = program.num_params();
    let k = i + 1;
    // unknowns: u_1..u_p, w, then alpha_{s,0..=i} per statement
    let alpha = |s: usize, j: usize| p + 1 + s * k + j;
    let width = p + 1 + n * k;
    let mut names: Vec<String> = program.params.iter().map(|q| format!("u_{q}")).collect();
    names.push("w".into());
    for st in &program.statements {
        names.extend((0..k).map(|j| format!("{}.alpha_{j}", st.id)));
    }
    let mut sys = ratlp::ConstraintSystem::new(names);
    for s in 0..n {
        sys.set_lower(alpha(s, i), Some(Rational::one()));
    }
    let sat = satisfaction_levels(program, ddg, transform);
    for (e, d) in ddg.deps.iter().enumerate() {
        if !d.kind.constrains_order() || sat[e].is_some_and(|s| s < start) {
            continue;
        }
        let ms = program.statements[d.src].dim();
        let mt = program.statements[d.dst].dim();
        let dim = ms + mt + p;
        let mut t = Template::zero(dim, width);
        for j in 0..k {
            let (rs, rt) = (&transform.rows[d.src][j], &transform.rows[d.dst][j]);
            for c in 0..ms {
                t.add(c, alpha(d.src, j), -&rs[c]);
            }
            for c in 0..mt {
                t.add(ms + c, alpha(d.dst, j), rt[c].clone());
            }
            for q in 0..p {
                t.add(ms + mt + q, alpha(d.dst, j), rt[mt + q].clone());
                t.add(ms + mt + q, alpha(d.src, j), -&rs[ms + q]);
            }
            t.add(dim, alpha(d.dst, j), rt[mt + p].clone());
            t.add(dim, alpha(d.src, j), -&rs[ms + p]);
        }
        sys.extend(farkas_nonnegative(&d.relation, &t));
        let mut b = t.negated();
        for q in 0..p {
            b.add(ms + mt + q, q, Rational::one());
        }
        b.add(dim, p, Rational::one());
        sys.extend(farkas_nonnegative(&d.relation, &b));
    }
    let mut order: Vec<usize> = (0..=p).collect();
    order.extend((0..n).flat_map(|s| (0..k).map(move |j| alpha(s, j))));
    let problem = LpProblem::lexmin_vars(sys, &order);
    let values = match session.solve("skew", problem, false)? {
        Outcome::Optimal(sol) => sol.values,
        Outcome::Infeasible => return Ok(None),
        Outcome::Unbounded => return Err(Error::internal("skew LP is unbounded")),
    };
    let group: Vec<usize> = (p + 1..width).collect();
    let shared: Vec<usize> = (0..=p).collect();
    let scaled = ratlp::scale_to_integral(&values, &[group], &shared).values;
    let rows = (0..n)
        .map(|s| {
            let w = program.row_width(s);
            let mut r = vec![Rational::zero(); w];
            for j in 0..k {
                let a = &scaled[alpha(s, j)];
                if a.is_zero() {
                    continue;
                }
                for (x, y) in r.iter_mut().zip(&transform.rows[s][j]) {
                    *x += a * y;
                }
            }
            r
        })
        .collect();
    Ok(Some(rows))
}
