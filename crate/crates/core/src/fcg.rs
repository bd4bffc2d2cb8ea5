//! Fusion conflict graph: construction from pairwise relaxed LPs, convex
//! SCC-driven coloring and the per-statement permutations it induces.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use ratlp::{LpProblem, Outcome, Rational};

use crate::error::{Error, Result};
use crate::farkas::Layout;
use crate::model::{AffineTransform, Ddg, LevelKind, Program};
use crate::pluto::{cut_after, objective_order, CutState};
use crate::session::Session;

/// Shift freedom of the fusion LPs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FusionOptions {
    /// Allow the parameter coefficients `d_i` in addition to `c_0`.
    pub parametric_shift: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FusionConflictGraph {
    /// `(statement, dimension)` per vertex, grouped by statement.
    pub vertices: Vec<(usize, usize)>,
    /// First vertex of each statement.
    pub offset: Vec<usize>,
    /// Undirected edges `(a, b)` with `a <= b`; `a == b` is a self-loop.
    pub edges: BTreeSet<(usize, usize)>,
}

impl FusionConflictGraph {
    fn empty(program: &Program) -> Self {
        let mut vertices = Vec::new();
        let mut offset = Vec::new();
        for (s, st) in program.statements.iter().enumerate() {
            offset.push(vertices.len());
            vertices.extend((0..st.dim()).map(|k| (s, k)));
        }
        FusionConflictGraph {
            vertices,
            offset,
            edges: BTreeSet::new(),
        }
    }

    pub fn vertex(&self, s: usize, k: usize) -> usize {
        self.offset[s] + k
    }

    pub fn stmt_of(&self, v: usize) -> usize {
        self.vertices[v].0
    }

    fn add_edge(&mut self, a: usize, b: usize) {
        self.edges.insert((a.min(b), a.max(b)));
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn has_self_loop(&self, v: usize) -> bool {
        self.has_edge(v, v)
    }

    /// Edges between different statements.
    pub fn conflict_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(a, b)| self.stmt_of(a) != self.stmt_of(b))
            .collect()
    }

    /// Edges between two dimensions of one statement.
    pub fn clique_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(a, b)| a != b && self.stmt_of(a) == self.stmt_of(b))
            .collect()
    }

    pub fn self_loops(&self) -> Vec<usize> {
        self.edges.iter().filter(|(a, b)| a == b).map(|&(a, _)| a).collect()
    }

    pub fn vertex_name(&self, program: &Program, v: usize) -> String {
        let (s, k) = self.vertices[v];
        let st = &program.statements[s];
        format!("{}.{}", st.id, st.domain.iterators[k])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub color: Vec<Option<usize>>,
    pub max_colors: usize,
}

impl Coloring {
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.max_colors];
        for (v, c) in self.color.iter().enumerate() {
            if let Some(c) = c {
                out[*c].push(v);
            }
        }
        out
    }
}

/// Active dependences entering the fusion LP of a statement set: every
/// ordering dependence inside the set plus read-after-read dependences
/// between distinct statements.
pub fn fusion_deps(ddg: &Ddg, set: &[usize]) -> Vec<usize> {
    ddg.active()
        .filter(|&e| {
            let d = &ddg.deps[e];
            set.contains(&d.src) && set.contains(&d.dst) && (d.kind.constrains_order() || !d.is_self())
        })
        .collect()
}

/// Whether the chosen `(statement, dimension)` pairs can be fused and
/// permuted outermost together: relaxed LP over the dependences among the
/// statements with the chosen coefficients `>= 1` and every other iterator
/// coefficient zero.
pub fn fusion_feasible(
    session: &Session,
    ddg: &Ddg,
    chosen: &[(usize, usize)],
    options: FusionOptions,
) -> Result<bool> {
    let program = session.program;
    let mut stmts: Vec<usize> = chosen.iter().map(|&(s, _)| s).collect();
    stmts.sort_unstable();
    stmts.dedup();
    let layout = Layout::new(program, &stmts);
    let mut sys = layout.system(program);
    for e in fusion_deps(ddg, &stmts) {
        let dep = &ddg.deps[e];
        let rows = session.dep_rows(ddg, e);
        sys.extend(layout.embed(program, dep, &rows.legality));
        sys.extend(layout.embed(program, dep, &rows.bounding));
    }
    for &s in &stmts {
        for k in 0..program.statements[s].dim() {
            if chosen.contains(&(s, k)) {
                sys.set_lower(layout.c(s, k), Some(Rational::from_integer(1.into())));
            } else {
                sys.fix(layout.c(s, k), Rational::default());
            }
        }
        if !options.parametric_shift {
            for q in 0..program.num_params() {
                sys.fix(layout.d(program, s, q), Rational::default());
            }
        }
    }
    let problem = LpProblem::lexmin_vars(sys, &objective_order(program, &layout));
    match session.solve("fcg", problem, false)? {
        Outcome::Optimal(_) => Ok(true),
        Outcome::Infeasible => Ok(false),
        Outcome::Unbounded => Err(Error::internal("fusion LP is unbounded")),
    }
}

fn connected(ddg: &Ddg, s: usize, t: usize) -> bool {
    ddg.active()
        .map(|e| &ddg.deps[e])
        .any(|d| (d.src == s && d.dst == t) || (d.src == t && d.dst == s))
}

/// Builds the conflict graph of the active dependences of `ddg`.
pub fn build_fcg(session: &Session, ddg: &Ddg, options: FusionOptions) -> Result<FusionConflictGraph> {
    let program = session.program;
    let n = program.statements.len();
    let mut fcg = FusionConflictGraph::empty(program);
    for s in 0..n {
        if fusion_deps(ddg, &[s]).is_empty() {
            continue;
        }
        for k in 0..program.statements[s].dim() {
            if !fusion_feasible(session, ddg, &[(s, k)], options)? {
                let v = fcg.vertex(s, k);
                fcg.add_edge(v, v);
            }
        }
    }
    for s in 0..n {
        for t in s + 1..n {
            if !connected(ddg, s, t) {
                continue;
            }
            for i in 0..program.statements[s].dim() {
                for j in 0..program.statements[t].dim() {
                    if !fusion_feasible(session, ddg, &[(s, i), (t, j)], options)? {
                        let (a, b) = (fcg.vertex(s, i), fcg.vertex(t, j));
                        fcg.add_edge(a, b);
                    }
                }
            }
        }
    }
    for s in 0..n {
        let m = program.statements[s].dim();
        for i in 0..m {
            for j in i + 1..m {
                let (a, b) = (fcg.vertex(s, i), fcg.vertex(s, j));
                fcg.add_edge(a, b);
            }
        }
    }
    Ok(fcg)
}

/// Result of the permutation search.
#[derive(Debug, Clone)]
pub struct Permutation {
    /// One unit row per color plus the scalar levels of the cuts.
    pub transform: AffineTransform,
    /// Graph as last rebuilt.
    pub fcg: FusionConflictGraph,
    pub coloring: Coloring,
    /// Dependences marked with the level that satisfies them.
    pub ddg: Ddg,
    /// Transform level of each color.
    pub color_levels: Vec<usize>,
    pub rebuilds: usize,
}

impl Permutation {
    /// Dimension of `s` placed at color `c`.
    pub fn dim_at(&self, s: usize, c: usize) -> Option<usize> {
        (0..self.fcg.vertices.len())
            .filter(|&v| self.fcg.stmt_of(v) == s)
            .find(|&v| self.coloring.color[v] == Some(c))
            .map(|v| self.fcg.vertices[v].1)
    }

    pub fn num_cuts(&self) -> usize {
        self.transform.cuts.len()
    }
}

fn has_color(fcg: &FusionConflictGraph, coloring: &Coloring, program: &Program, s: usize, c: usize) -> bool {
    (0..program.statements[s].dim()).any(|k| coloring.color[fcg.vertex(s, k)] == Some(c))
}

fn has_uncolored(fcg: &FusionConflictGraph, coloring: &Coloring, program: &Program, s: usize) -> bool {
    (0..program.statements[s].dim()).any(|k| coloring.color[fcg.vertex(s, k)].is_none())
}

const SCC_SEARCH_LIMIT: usize = 100_000;

/// Picks one vertex per statement of `comp` that still needs color `c`.
/// Lowest dimension first, with backtracking.
fn color_scc(
    program: &Program,
    fcg: &FusionConflictGraph,
    coloring: &Coloring,
    ddg: &Ddg,
    comp: &[usize],
    c: usize,
) -> Option<Vec<usize>> {
    let stmts: Vec<usize> = comp
        .iter()
        .copied()
        .filter(|&s| has_uncolored(fcg, coloring, program, s) && !has_color(fcg, coloring, program, s, c))
        .collect();
    for &s in &stmts {
        for p in ddg.predecessors(s) {
            if !stmts.contains(&p) && !has_color(fcg, coloring, program, p, c) {
                return None;
            }
        }
    }
    let colored: Vec<usize> = (0..fcg.vertices.len()).filter(|&v| coloring.color[v] == Some(c)).collect();
    let candidates: Vec<Vec<usize>> = stmts
        .iter()
        .map(|&s| {
            (0..program.statements[s].dim())
                .map(|k| fcg.vertex(s, k))
                .filter(|&v| {
                    coloring.color[v].is_none() && !fcg.has_self_loop(v) && colored.iter().all(|&u| !fcg.has_edge(u, v))
                })
                .collect()
        })
        .collect();
    let mut chosen = Vec::with_capacity(stmts.len());
    let mut budget = SCC_SEARCH_LIMIT;
    fn search(fcg: &FusionConflictGraph, cands: &[Vec<usize>], chosen: &mut Vec<usize>, budget: &mut usize) -> bool {
        let i = chosen.len();
        if i == cands.len() {
            return true;
        }
        for &v in &cands[i] {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            if chosen.iter().all(|&u| !fcg.has_edge(u, v)) {
                chosen.push(v);
                if search(fcg, cands, chosen, budget) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    search(fcg, &candidates, &mut chosen, &mut budget).then_some(chosen)
}

fn refresh(program: &Program, ddg: &Ddg, transform: &AffineTransform) -> Result<Ddg> {
    match transform.num_levels() {
        0 => Ok(ddg.clone()),
        l => ddg.remove_satisfied(program, transform, l - 1),
    }
}

/// Colors the graph one color at a time, SCC by SCC in topological order,
/// cutting and rebuilding the graph when an SCC cannot be colored.
pub fn color_fcg(
    session: &Session,
    fcg: FusionConflictGraph,
    ddg: &Ddg,
    max_colors: usize,
    options: FusionOptions,
) -> Result<Permutation> {
    let program = session.program;
    let n = program.statements.len();
    let mut fcg = fcg;
    let mut ddg = ddg.clone();
    let mut coloring = Coloring {
        color: vec![None; fcg.vertices.len()],
        max_colors,
    };
    let mut transform = AffineTransform::empty(n);
    let mut state = CutState { open_scalar: false };
    let mut color_levels = Vec::new();
    let mut rebuilds = 0;
    for c in 0..max_colors {
        state.open_scalar = false;
        let mut retry: Option<Vec<usize>> = None;
        loop {
            let sccs = ddg.scc_decompose();
            let needs = |s: usize| {
                has_uncolored(&fcg, &coloring, program, s) && !has_color(&fcg, &coloring, program, s, c)
            };
            let Some(i) = sccs.components.iter().position(|comp| comp.iter().any(|&s| needs(s))) else {
                break;
            };
            let comp = sccs.components[i].clone();
            if let Some(picked) = color_scc(program, &fcg, &coloring, &ddg, &comp, c) {
                for v in picked {
                    coloring.color[v] = Some(c);
                }
                retry = None;
                continue;
            }
            if retry.as_ref() == Some(&comp) {
                return Err(Error::internal(format!(
                    "cannot color statements {:?} with color {} after rebuilding the conflict graph",
                    comp.iter().map(|&s| program.statements[s].id.as_str()).collect::<Vec<_>>(),
                    c + 1
                )));
            }
            if i > 0 {
                cut_after(program, &sccs, i - 1, &mut transform, &mut state);
            }
            ddg = refresh(program, &ddg, &transform)?;
            fcg = build_fcg(session, &ddg, options)?;
            rebuilds += 1;
            retry = Some(comp);
        }
        let rows = (0..n)
            .map(|s| {
                let m = program.statements[s].dim();
                let mut r = vec![Rational::default(); program.row_width(s)];
                if let Some(k) = (0..m).find(|&k| coloring.color[fcg.vertex(s, k)] == Some(c)) {
                    r[k] = Rational::from_integer(1.into());
                }
                r
            })
            .collect();
        transform.push_level(LevelKind::Hyperplane, false, rows);
        color_levels.push(transform.num_levels() - 1);
    }
    if let Some(v) = coloring.color.iter().position(Option::is_none) {
        return Err(Error::internal(format!(
            "vertex {} left uncolored",
            fcg.vertex_name(program, v)
        )));
    }
    let ddg = refresh(program, &ddg, &transform)?;
    Ok(Permutation {
        transform,
        fcg,
        coloring,
        ddg,
        color_levels,
        rebuilds,
    })
}

/// Builds and colors the conflict graph with as many colors as the deepest
/// statement has dimensions.
pub fn permute_and_fuse(session: &Session, ddg: &Ddg) -> Result<Permutation> {
    permute_and_fuse_with(session, ddg, FusionOptions::default())
}

pub fn permute_and_fuse_with(session: &Session, ddg: &Ddg, options: FusionOptions) -> Result<Permutation> {
    let fcg = build_fcg(session, ddg, options)?;
    color_fcg(session, fcg, ddg, session.program.max_dim(), options)
}

const PALETTE: [&str; 8] = [
    "red", "green", "lightblue", "orange", "violet", "cyan", "yellow", "gray",
];

/// Graphviz rendering: one cluster per statement, conflict edges solid,
/// same-statement edges dashed, fill color by color class.
pub fn to_dot(program: &Program, fcg: &FusionConflictGraph, coloring: Option<&Coloring>) -> String {
    let mut out = String::from("graph fcg {\n  node [shape=circle, style=filled];\n");
    for (s, st) in program.statements.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{s} {{\n    label=\"{}\";", st.id);
        for k in 0..st.dim() {
            let v = fcg.vertex(s, k);
            let color = coloring.and_then(|c| c.color[v]);
            let (fill, tag) = match color {
                Some(c) => (PALETTE[c % PALETTE.len()], format!(" color={}", c + 1)),
                None => ("white", String::new()),
            };
            let _ = writeln!(
                out,
                "    v{v} [label=\"{}\", fillcolor={fill}, tooltip=\"{}{tag}\"];",
                st.domain.iterators[k],
                fcg.vertex_name(program, v)
            );
        }
        out.push_str("  }\n");
    }
    for &(a, b) in &fcg.edges {
        if a != b && fcg.stmt_of(a) == fcg.stmt_of(b) {
            let _ = writeln!(out, "  v{a} -- v{b} [style=dashed];");
        } else {
            let _ = writeln!(out, "  v{a} -- v{b};");
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{corpus, frontend};

    fn fcg_of(name: &str) -> (Program, FusionConflictGraph) {
        let program = corpus::bundled(name).unwrap();
        let ddg = frontend::dependence_graph(&program);
        let session = Session::new(&program);
        let fcg = build_fcg(&session, &ddg, FusionOptions::default()).unwrap();
        (program, fcg)
    }

    #[test]
    fn vertex_per_dimension() {
        let (program, fcg) = fcg_of("interchange_fusion");
        assert_eq!(fcg.vertices.len(), 6);
        assert_eq!(fcg.vertex_name(&program, 3), "S2.j");
        assert_eq!(fcg.clique_edges().len(), 3);
        assert!(fcg.self_loops().is_empty());
    }

    #[test]
    fn dot_marks_clique_edges_dashed() {
        let (program, fcg) = fcg_of("interchange_fusion");
        let dot = to_dot(&program, &fcg, None);
        assert_eq!(dot.matches("style=dashed").count(), 3);
        assert!(dot.contains("cluster_0"));
    }
}
