//! Instance-level oracle: enumerates statement instances for fixed parameter
//! values and checks schedules point by point.

#![allow(dead_code)]

use std::collections::BTreeSet;

use lpdfp::model::{AccessKind, AffineTransform, DepKind, Program};
use ratlp::Rational;

pub type Instance = (usize, Vec<i64>);

/// A dependent pair of instances, source first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pair {
    pub kind: DepKind,
    pub src: Instance,
    pub dst: Instance,
}

pub fn domain_points(program: &Program, s: usize, params: &[i64]) -> Vec<Vec<i64>> {
    let st = &program.statements[s];
    let hi = params.iter().copied().max().unwrap_or(0) + 4;
    let mut out = Vec::new();
    let mut point = vec![-3i64; st.dim()];
    loop {
        let full: Vec<i64> = point.iter().chain(params).copied().collect();
        if st.domain.constraints.iter().all(|c| c.holds_at(&full)) {
            out.push(point.clone());
        }
        let mut d = point.len();
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            if point[d] < hi {
                point[d] += 1;
                break;
            }
            point[d] = -3;
        }
    }
}

/// Original execution order: statements in `order` (ties by position),
/// instances of one statement lexicographically.
pub fn executes_before(program: &Program, a: &Instance, b: &Instance) -> bool {
    if a.0 == b.0 {
        return a.1 < b.1;
    }
    let key = |s: usize| (program.statements[s].order, s);
    key(a.0) < key(b.0)
}

fn subscript(map: &[Vec<i64>], point: &[i64], params: &[i64]) -> Vec<i64> {
    let (m, p) = (point.len(), params.len());
    map.iter()
        .map(|r| {
            r[..m].iter().zip(point).map(|(a, x)| a * x).sum::<i64>()
                + r[m..m + p].iter().zip(params).map(|(a, x)| a * x).sum::<i64>()
                + r[m + p]
        })
        .collect()
}

fn kind_of(a: AccessKind, b: AccessKind) -> DepKind {
    match (a, b) {
        (AccessKind::Write, AccessKind::Read) => DepKind::Raw,
        (AccessKind::Read, AccessKind::Write) => DepKind::War,
        (AccessKind::Write, AccessKind::Write) => DepKind::Waw,
        (AccessKind::Read, AccessKind::Read) => DepKind::Rar,
    }
}

/// Dependent instance pairs from the accesses, or from the explicit
/// dependence relations when the program lists them.
pub fn dependent_pairs(program: &Program, params: &[i64]) -> BTreeSet<Pair> {
    let n = program.statements.len();
    let points: Vec<Vec<Vec<i64>>> = (0..n).map(|s| domain_points(program, s, params)).collect();
    let mut out = BTreeSet::new();
    if let Some(deps) = &program.dependences {
        for d in deps {
            for x in &points[d.src] {
                for y in &points[d.dst] {
                    let full: Vec<i64> = x.iter().chain(y).chain(params).copied().collect();
                    if d.relation.contains(&full) {
                        out.insert(Pair {
                            kind: d.kind,
                            src: (d.src, x.clone()),
                            dst: (d.dst, y.clone()),
                        });
                    }
                }
            }
        }
        return out;
    }
    for s in 0..n {
        for t in 0..n {
            for x in &points[s] {
                for y in &points[t] {
                    let (a, b) = ((s, x.clone()), (t, y.clone()));
                    if !executes_before(program, &a, &b) {
                        continue;
                    }
                    for ra in &program.statements[s].accesses {
                        for rb in &program.statements[t].accesses {
                            if ra.array == rb.array && subscript(&ra.map, x, params) == subscript(&rb.map, y, params) {
                                out.insert(Pair {
                                    kind: kind_of(ra.kind, rb.kind),
                                    src: a.clone(),
                                    dst: b.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn ordering_pairs(program: &Program, params: &[i64]) -> Vec<Pair> {
    dependent_pairs(program, params)
        .into_iter()
        .filter(|p| p.kind != DepKind::Rar)
        .collect()
}

pub fn timestamp(t: &AffineTransform, inst: &Instance, params: &[i64]) -> Vec<Rational> {
    let (s, x) = inst;
    t.rows[*s]
        .iter()
        .map(|row| {
            let vals = x.iter().chain(params).copied().chain(std::iter::once(1));
            row.iter()
                .zip(vals)
                .map(|(c, v)| c * Rational::from_integer(v.into()))
                .sum()
        })
        .collect()
}

fn differences(t: &AffineTransform, p: &Pair, params: &[i64]) -> Vec<Rational> {
    let (a, b) = (timestamp(t, &p.src, params), timestamp(t, &p.dst, params));
    b.iter().zip(&a).map(|(y, x)| y - x).collect()
}

/// First dependent pair whose target does not run strictly after its source.
pub fn first_illegal(program: &Program, t: &AffineTransform, params: &[i64]) -> Option<Pair> {
    ordering_pairs(program, params).into_iter().find(|p| {
        let (a, b) = (timestamp(t, &p.src, params), timestamp(t, &p.dst, params));
        b <= a
    })
}

/// Checks every band's permutability and parallel flags on live pairs.
pub fn band_problems(program: &Program, t: &AffineTransform, params: &[i64]) -> Vec<String> {
    let zero = Rational::from_integer(0.into());
    let mut out = Vec::new();
    let pairs = ordering_pairs(program, params);
    for (k, band) in t.bands.iter().enumerate() {
        for p in &pairs {
            let diff = differences(t, p, params);
            if diff[..band.start].iter().any(|v| *v != zero) {
                continue;
            }
            if band.permutable && diff[band.start..band.end].iter().any(|v| *v < zero) {
                out.push(format!("band {k} not permutable for {p:?}"));
            }
            if band.parallel && diff[band.start] != zero {
                out.push(format!("band {k} not parallel for {p:?}"));
            }
        }
    }
    out
}
