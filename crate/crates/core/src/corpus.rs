//! Bundled example programs and generators for larger inputs.

use crate::error::Result;
use crate::frontend::parse_program;
use crate::model::Program;

/// `(name, JSON source)` for every bundled program.
pub const BUNDLED: &[(&str, &str)] = &[
    ("interchange_fusion", include_str!("../corpus/interchange_fusion.json")),
    ("stencil1d", include_str!("../corpus/stencil1d.json")),
    ("jacobi1d", include_str!("../corpus/jacobi1d.json")),
    ("matmul", include_str!("../corpus/matmul.json")),
    ("independent", include_str!("../corpus/independent.json")),
    ("transpose_chain", include_str!("../corpus/transpose_chain.json")),
    ("scc_cycle", include_str!("../corpus/scc_cycle.json")),
    ("reversal", include_str!("../corpus/reversal.json")),
    ("shift", include_str!("../corpus/shift.json")),
    ("empty", include_str!("../corpus/empty.json")),
    ("parallel2d", include_str!("../corpus/parallel2d.json")),
    ("mixed", include_str!("../corpus/mixed.json")),
    ("skewed2d", include_str!("../corpus/skewed2d.json")),
];

pub fn bundled(name: &str) -> Option<Program> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_program(text).expect("bundled program parses"))
}

pub fn all_bundled() -> Result<Vec<(String, Program)>> {
    BUNDLED
        .iter()
        .map(|(n, text)| Ok((n.to_string(), parse_program(text)?)))
        .collect()
}

/// JSON for a chain of `n` two-dimensional statements over `0 <= i, j < N`
/// where statement `k` reads the transpose of what statement `k - 1` wrote.
pub fn transpose_chain_source(n: usize) -> String {
    let domain = r#"[[1, 0, 0, 0, ">="], [0, 1, 0, 0, ">="], [1, 0, -1, 1, "<="], [0, 1, -1, 1, "<="]]"#;
    let ident = "[[1, 0, 0, 0], [0, 1, 0, 0]]";
    let trans = "[[0, 1, 0, 0], [1, 0, 0, 0]]";
    let stmts: Vec<String> = (0..n)
        .map(|k| {
            let mut acc = format!(r#"{{"array": "A{k}", "kind": "write", "map": {ident}}}"#);
            if k > 0 {
                acc.push_str(&format!(r#", {{"array": "A{}", "kind": "read", "map": {trans}}}"#, k - 1));
            }
            format!(
                r#"{{"id": "S{}", "iterators": ["i", "j"], "domain": {domain}, "accesses": [{acc}], "order": {k}}}"#,
                k + 1
            )
        })
        .collect();
    format!("{{\"params\": [\"N\"], \"statements\": [\n{}\n]}}\n", stmts.join(",\n"))
}
