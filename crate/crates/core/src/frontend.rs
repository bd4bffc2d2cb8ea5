//! JSON program reader and memory-based dependence analysis.
//!
//! A program file looks like
//!
//! ```json
//! {
//!   "params": ["N"],
//!   "statements": [{
//!     "id": "S1", "iterators": ["i"], "order": 0,
//!     "domain": [[1, 0, 0, ">="], [1, -1, 1, "<="]],
//!     "accesses": [{"array": "a", "kind": "write", "map": [[1, 0, 0]]}]
//!   }],
//!   "dependences": [{"src": "S1", "dst": "S1", "kind": "RAW",
//!                    "relation": [[-1, 1, 0, -1, "=="]]}]
//! }
//! ```
//!
//! Constraint rows hold integer coefficients for the iterators, the
//! parameters and the constant, followed by the relation to zero. Dependence
//! rows range over source iterators, target iterators, parameters and the
//! constant. When `dependences` is absent they are computed from the accesses.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    Access, AccessKind, AffineConstraint, ConstraintKind, Ddg, DepKind, Dependence, IndexSet, Polyhedron, Program,
    Statement,
};

fn field<'a>(obj: &'a Value, key: &str, at: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::parse(at, format!("missing field `{key}`")))
}

fn array<'a>(v: &'a Value, at: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::parse(at, "expected an array"))
}

fn string(v: &Value, at: &str) -> Result<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| Error::parse(at, "expected a string"))
}

fn integer(v: &Value, at: &str) -> Result<i64> {
    v.as_i64()
        .ok_or_else(|| Error::parse(at, format!("expected an integer, found `{v}`")))
}

fn names(v: &Value, at: &str) -> Result<Vec<String>> {
    array(v, at)?
        .iter()
        .enumerate()
        .map(|(i, x)| string(x, &format!("{at}[{i}]")))
        .collect()
}

/// `[a_1, ..., a_n, k, rel]` read as `a · x + k rel 0`, normalized to a
/// `>= 0` or `== 0` constraint.
fn constraint_row(v: &Value, width: usize, at: &str) -> Result<AffineConstraint> {
    let items = array(v, at)?;
    if items.len() != width + 2 {
        return Err(Error::parse(
            at,
            format!("row has {} entries, expected {} coefficients, a constant and a relation", items.len(), width + 1),
        ));
    }
    let mut nums = Vec::with_capacity(width + 1);
    for (i, x) in items[..=width].iter().enumerate() {
        nums.push(integer(x, &format!("{at}[{i}]"))?);
    }
    let constant = nums.pop().expect("width + 1 entries");
    let rel = string(&items[width + 1], &format!("{at}[{}]", width + 1))?;
    match rel.as_str() {
        ">=" => Ok(AffineConstraint::ge(nums, constant)),
        "<=" => Ok(AffineConstraint::ge(nums.iter().map(|a| -a).collect(), -constant)),
        "==" => Ok(AffineConstraint::eq(nums, constant)),
        other => Err(Error::parse(at, format!("unknown relation `{other}`"))),
    }
}

fn check_unique(names: &[String], what: &str, at: &str) -> Result<()> {
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::parse(at, format!("duplicate {what} `{n}`")));
        }
    }
    Ok(())
}

fn parse_statement(v: &Value, params: &[String], at: &str) -> Result<Statement> {
    let id = string(field(v, "id", at)?, &format!("{at}.id"))?;
    let at = format!("{at} ({id})");
    let iterators = names(field(v, "iterators", &at)?, &format!("{at}.iterators"))?;
    check_unique(&iterators, "iterator", &at)?;
    if let Some(clash) = iterators.iter().find(|i| params.contains(i)) {
        return Err(Error::parse(&at, format!("iterator `{clash}` shadows a parameter")));
    }
    let width = iterators.len() + params.len();
    let mut constraints = Vec::new();
    if let Some(dom) = v.get("domain") {
        for (r, row) in array(dom, &format!("{at}.domain"))?.iter().enumerate() {
            constraints.push(constraint_row(row, width, &format!("{at}.domain[{r}]"))?);
        }
    }
    let mut accesses = Vec::new();
    if let Some(acc) = v.get("accesses") {
        for (a, item) in array(acc, &format!("{at}.accesses"))?.iter().enumerate() {
            let aat = format!("{at}.accesses[{a}]");
            let arr = string(field(item, "array", &aat)?, &format!("{aat}.array"))?;
            let kind = match string(field(item, "kind", &aat)?, &format!("{aat}.kind"))?.as_str() {
                "read" => AccessKind::Read,
                "write" => AccessKind::Write,
                other => return Err(Error::parse(&aat, format!("unknown access kind `{other}`"))),
            };
            let mut map = Vec::new();
            for (r, row) in array(field(item, "map", &aat)?, &format!("{aat}.map"))?.iter().enumerate() {
                let rat = format!("{aat}.map[{r}]");
                let items = array(row, &rat)?;
                if items.len() != width + 1 {
                    return Err(Error::parse(
                        &rat,
                        format!("row has {} entries, expected {}", items.len(), width + 1),
                    ));
                }
                map.push(
                    items
                        .iter()
                        .enumerate()
                        .map(|(i, x)| integer(x, &format!("{rat}[{i}]")))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            accesses.push(Access { array: arr, kind, map });
        }
    }
    let order = match v.get("order") {
        Some(o) => integer(o, &format!("{at}.order"))?,
        None => 0,
    };
    if order < 0 {
        return Err(Error::parse(&at, "order must be non-negative"));
    }
    Ok(Statement {
        id,
        domain: IndexSet {
            iterators,
            params: params.to_vec(),
            constraints,
        },
        accesses,
        order,
    })
}

/// Reads and validates a program.
pub fn parse_program(text: &str) -> Result<Program> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::parse(format!("line {}", e.line()), e.to_string()))?;
    if !root.is_object() {
        return Err(Error::parse("top level", "expected an object"));
    }
    let params = match root.get("params") {
        Some(p) => names(p, "params")?,
        None => Vec::new(),
    };
    check_unique(&params, "parameter", "params")?;
    let mut statements = Vec::new();
    for (i, s) in array(field(&root, "statements", "top level")?, "statements")?
        .iter()
        .enumerate()
    {
        statements.push(parse_statement(s, &params, &format!("statements[{i}]"))?);
    }
    let ids: Vec<String> = statements.iter().map(|s| s.id.clone()).collect();
    check_unique(&ids, "statement id", "statements")?;
    let mut program = Program {
        params,
        statements,
        dependences: None,
    };
    check_array_arity(&program)?;
    if let Some(deps) = root.get("dependences") {
        let mut out = Vec::new();
        for (i, d) in array(deps, "dependences")?.iter().enumerate() {
            out.push(parse_dependence(&program, d, &format!("dependences[{i}]"))?);
        }
        program.dependences = Some(out);
    }
    Ok(program)
}

fn check_array_arity(program: &Program) -> Result<()> {
    let mut seen: Vec<(&str, usize, &str)> = Vec::new();
    for s in &program.statements {
        for a in &s.accesses {
            match seen.iter().find(|(name, _, _)| *name == a.array) {
                Some((_, n, first)) if *n != a.map.len() => {
                    return Err(Error::parse(
                        format!("statement {}", s.id),
                        format!(
                            "array `{}` accessed with {} subscripts here but {} in {first}",
                            a.array,
                            a.map.len(),
                            n
                        ),
                    ))
                }
                Some(_) => {}
                None => seen.push((&a.array, a.map.len(), &s.id)),
            }
        }
    }
    Ok(())
}

fn parse_dependence(program: &Program, v: &Value, at: &str) -> Result<Dependence> {
    let lookup = |key: &str| -> Result<usize> {
        let id = string(field(v, key, at)?, &format!("{at}.{key}"))?;
        program
            .statement_index(&id)
            .ok_or_else(|| Error::parse(format!("{at}.{key}"), format!("unknown statement `{id}`")))
    };
    let src = lookup("src")?;
    let dst = lookup("dst")?;
    let kind_text = string(field(v, "kind", at)?, &format!("{at}.kind"))?;
    let kind = DepKind::parse(&kind_text)
        .ok_or_else(|| Error::parse(format!("{at}.kind"), format!("unknown dependence kind `{kind_text}`")))?;
    let dim = relation_dim(program, src, dst);
    let mut relation = Polyhedron::universe(dim);
    for (r, row) in array(field(v, "relation", at)?, &format!("{at}.relation"))?
        .iter()
        .enumerate()
    {
        relation.push(constraint_row(row, dim, &format!("{at}.relation[{r}]"))?);
    }
    add_param_bounds(program, src, dst, &mut relation);
    if !relation.is_rationally_feasible() {
        return Err(Error::parse(at, "dependence relation is empty"));
    }
    Ok(Dependence {
        src,
        dst,
        kind,
        relation,
        satisfied_at: None,
    })
}

fn relation_dim(program: &Program, src: usize, dst: usize) -> usize {
    program.statements[src].dim() + program.statements[dst].dim() + program.num_params()
}

fn add_param_bounds(program: &Program, src: usize, dst: usize, rel: &mut Polyhedron) {
    let base = program.statements[src].dim() + program.statements[dst].dim();
    for q in 0..program.num_params() {
        let mut c = vec![0; rel.dim];
        c[base + q] = 1;
        let c = AffineConstraint::ge(c, 0);
        if !rel.constraints.contains(&c) {
            rel.push(c);
        }
    }
}

/// Embeds a constraint over `(iterators, params)` of one side into the
/// relation space `(src iterators, dst iterators, params)`.
fn embed(c: &[i64], constant: i64, kind: ConstraintKind, offset: usize, m: usize, layout: (usize, usize, usize)) -> AffineConstraint {
    let (ms, mt, p) = layout;
    let mut coeffs = vec![0; ms + mt + p];
    coeffs[offset..offset + m].copy_from_slice(&c[..m]);
    coeffs[ms + mt..].copy_from_slice(&c[m..m + p]);
    AffineConstraint { coeffs, constant, kind }
}

fn dep_kind(a: AccessKind, b: AccessKind) -> DepKind {
    match (a, b) {
        (AccessKind::Write, AccessKind::Read) => DepKind::Raw,
        (AccessKind::Read, AccessKind::Write) => DepKind::War,
        (AccessKind::Write, AccessKind::Write) => DepKind::Waw,
        (AccessKind::Read, AccessKind::Read) => DepKind::Rar,
    }
}

/// Base relation for a pair of accesses: both domains, equal subscripts and
/// non-negative parameters.
fn access_relation(program: &Program, src: usize, dst: usize, a: &Access, b: &Access) -> Polyhedron {
    let (ss, ts) = (&program.statements[src], &program.statements[dst]);
    let (ms, mt, p) = (ss.dim(), ts.dim(), program.num_params());
    let layout = (ms, mt, p);
    let mut rel = Polyhedron::universe(ms + mt + p);
    for c in &ss.domain.constraints {
        rel.push(embed(&c.coeffs, c.constant, c.kind, 0, ms, layout));
    }
    for c in &ts.domain.constraints {
        rel.push(embed(&c.coeffs, c.constant, c.kind, ms, mt, layout));
    }
    for (ra, rb) in a.map.iter().zip(&b.map) {
        // a(s) − b(t) == 0
        let mut coeffs = vec![0; ms + mt + p];
        for k in 0..ms {
            coeffs[k] += ra[k];
        }
        for k in 0..mt {
            coeffs[ms + k] -= rb[k];
        }
        for q in 0..p {
            coeffs[ms + mt + q] += ra[ms + q] - rb[mt + q];
        }
        rel.push(AffineConstraint::eq(coeffs, ra[ms + p] - rb[mt + p]));
    }
    add_param_bounds(program, src, dst, &mut rel);
    rel
}

/// Memory-based dependences. Statements are taken as separate loop nests
/// executed in `order` (ties broken by position), so every instance of an
/// earlier statement precedes every instance of a later one. Pairs within a
/// statement are ordered lexicographically, one polyhedron per leading
/// level.
pub fn compute_dependences(program: &Program) -> Ddg {
    let n = program.statements.len();
    let mut rank: Vec<usize> = (0..n).collect();
    rank.sort_by_key(|&s| (program.statements[s].order, s));
    let mut deps = Vec::new();
    for (pos, &src) in rank.iter().enumerate() {
        let ss = &program.statements[src];
        // self pairs
        for a in &ss.accesses {
            for b in &ss.accesses {
                if a.array != b.array {
                    continue;
                }
                let base = access_relation(program, src, src, a, b);
                let m = ss.dim();
                for level in 0..m {
                    let mut rel = base.clone();
                    for k in 0..=level {
                        let mut c = vec![0; rel.dim];
                        c[k] = -1;
                        c[m + k] = 1;
                        if k < level {
                            rel.push(AffineConstraint::eq(c, 0));
                        } else {
                            rel.push(AffineConstraint::ge(c, -1));
                        }
                    }
                    if rel.is_rationally_feasible() {
                        deps.push(Dependence {
                            src,
                            dst: src,
                            kind: dep_kind(a.kind, b.kind),
                            relation: rel,
                            satisfied_at: None,
                        });
                    }
                }
            }
        }
        for &dst in &rank[pos + 1..] {
            let ts = &program.statements[dst];
            for a in &ss.accesses {
                for b in &ts.accesses {
                    if a.array != b.array {
                        continue;
                    }
                    let rel = access_relation(program, src, dst, a, b);
                    if rel.is_rationally_feasible() {
                        deps.push(Dependence {
                            src,
                            dst,
                            kind: dep_kind(a.kind, b.kind),
                            relation: rel,
                            satisfied_at: None,
                        });
                    }
                }
            }
        }
    }
    deps.sort_by_key(|d| (d.src, d.dst));
    Ddg::new(n, deps)
}

/// The program's dependence graph: the explicit list when given, computed
/// otherwise.
pub fn dependence_graph(program: &Program) -> Ddg {
    match &program.dependences {
        Some(deps) => Ddg::new(program.statements.len(), deps.clone()),
        None => compute_dependences(program),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STENCIL: &str = r#"{
        "params": ["N"],
        "statements": [{
            "id": "S", "iterators": ["i"], "order": 0,
            "domain": [[1, 0, 0, ">="], [1, -1, 1, "<="]],
            "accesses": [
                {"array": "a", "kind": "write", "map": [[1, 0, 0]]},
                {"array": "a", "kind": "read", "map": [[1, 0, -1]]}
            ]
        }]
    }"#;

    #[test]
    fn empty_program() {
        let p = parse_program(r#"{"params": [], "statements": []}"#).unwrap();
        assert!(p.statements.is_empty());
        assert!(compute_dependences(&p).deps.is_empty());
    }

    #[test]
    fn bad_row_width_names_statement() {
        let text = r#"{"params": ["N"], "statements": [{"id": "S7", "iterators": ["i"],
            "domain": [[1, 0, ">="]], "accesses": [], "order": 0}]}"#;
        let err = parse_program(text).unwrap_err().to_string();
        assert!(err.contains("S7"), "{err}");
        assert!(err.contains("domain[0]"), "{err}");
    }

    #[test]
    fn non_integer_coefficient_is_rejected() {
        let text = r#"{"params": [], "statements": [{"id": "S", "iterators": ["i"],
            "domain": [[1.5, 0, ">="]], "order": 0}]}"#;
        let err = parse_program(text).unwrap_err().to_string();
        assert!(err.contains("expected an integer"), "{err}");
    }

    #[test]
    fn unknown_statement_in_dependence() {
        let text = r#"{"params": [], "statements": [{"id": "S", "iterators": [], "order": 0}],
            "dependences": [{"src": "S", "dst": "T", "kind": "RAW", "relation": []}]}"#;
        let err = parse_program(text).unwrap_err().to_string();
        assert!(err.contains("unknown statement `T`"), "{err}");
    }

    #[test]
    fn less_equal_rows_are_negated() {
        let p = parse_program(STENCIL).unwrap();
        // i - N + 1 <= 0  becomes  -i + N - 1 >= 0
        assert_eq!(p.statements[0].domain.constraints[1], AffineConstraint::ge(vec![-1, 1], -1));
    }

    #[test]
    fn stencil_has_one_raw_self_dependence() {
        let p = parse_program(STENCIL).unwrap();
        let ddg = compute_dependences(&p);
        let raw: Vec<_> = ddg.deps.iter().filter(|d| d.kind == DepKind::Raw).collect();
        assert_eq!(raw.len(), 1);
        // write at s, read at t = s + 1
        assert!(raw[0].relation.contains(&[2, 3, 5]));
        assert!(!raw[0].relation.contains(&[2, 4, 5]));
        assert!(!raw[0].relation.contains(&[4, 5, 5]));
    }
}
