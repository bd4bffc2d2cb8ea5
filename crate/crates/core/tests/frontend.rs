mod common;

use std::collections::BTreeSet;

use common::{dependent_pairs, domain_points, Pair};
use lpdfp::corpus::{self, transpose_chain_source};
use lpdfp::frontend::{compute_dependences, parse_program};
use lpdfp::Error;

/// Instance pairs covered by the computed dependence polyhedra.
fn polyhedral_pairs(program: &lpdfp::model::Program, params: &[i64]) -> BTreeSet<Pair> {
    let ddg = compute_dependences(program);
    let mut out = BTreeSet::new();
    for d in &ddg.deps {
        for x in domain_points(program, d.src, params) {
            for y in domain_points(program, d.dst, params) {
                let full: Vec<i64> = x.iter().chain(&y).chain(params).copied().collect();
                if d.relation.contains(&full) {
                    out.insert(Pair {
                        kind: d.kind,
                        src: (d.src, x.clone()),
                        dst: (d.dst, y),
                    });
                }
            }
        }
    }
    out
}

#[test]
fn dependence_polyhedra_match_instance_enumeration() {
    for (name, program) in corpus::all_bundled().unwrap() {
        if program.dependences.is_some() {
            continue;
        }
        for n in [2, 4] {
            let params = vec![n; program.num_params()];
            let expected = dependent_pairs(&program, &params);
            let got = polyhedral_pairs(&program, &params);
            assert_eq!(got, expected, "{name} at {params:?}");
        }
    }
}

#[test]
fn generated_chain_has_one_raw_per_link() {
    let p = parse_program(&transpose_chain_source(5)).unwrap();
    let ddg = compute_dependences(&p);
    let raw: Vec<(usize, usize)> = ddg
        .deps
        .iter()
        .filter(|d| d.kind.constrains_order())
        .map(|d| (d.src, d.dst))
        .collect();
    assert_eq!(raw, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
}

fn parse_error(text: &str) -> String {
    match parse_program(text) {
        Err(Error::Parse { location, .. }) => location,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn rejects_malformed_programs() {
    assert!(parse_error("[1, 2]").contains("top level"));
    let unknown_statement = r#"{"params": ["N"], "statements": [{"id": "S", "iterators": ["i"],
        "domain": [[1, 0, 0, ">="]], "accesses": [], "order": 0}],
        "dependences": [{"src": "S", "dst": "T", "kind": "RAW", "relation": []}]}"#;
    assert!(parse_error(unknown_statement).contains("dependences[0]"));
    let fractional = r#"{"params": [], "statements": [{"id": "S", "iterators": ["i"],
        "domain": [[0.5, 0, ">="]], "accesses": [], "order": 0}]}"#;
    assert!(parse_error(fractional).contains("statements[0]"));
    let bad_relation = r#"{"params": [], "statements": [{"id": "S", "iterators": ["i"],
        "domain": [[1, 0, "<>"]], "accesses": [], "order": 0}]}"#;
    assert!(parse_error(bad_relation).contains("domain"));
}

#[test]
fn duplicate_statement_ids_are_rejected() {
    let text = r#"{"params": [], "statements": [
        {"id": "S", "iterators": [], "domain": [], "accesses": [], "order": 0},
        {"id": "S", "iterators": [], "domain": [], "accesses": [], "order": 1}]}"#;
    assert!(parse_program(text).is_err());
}
