mod common;

use common::first_illegal;
use lpdfp::corpus;
use lpdfp::frontend::dependence_graph;
use lpdfp::model::{AffineTransform, LevelKind};
use lpdfp::verify::{brute_force_lexmin, check_legality, theorem_suite, BruteForce, ViolationKind};
use proptest::prelude::*;
use ratlp::{rat, ConstraintSystem, Relation};

fn one_level(rows: Vec<Vec<i64>>) -> AffineTransform {
    let mut t = AffineTransform::empty(rows.len());
    t.push_level(LevelKind::Hyperplane, false, rows.into_iter().map(|r| r.into_iter().map(rat).collect()).collect());
    t
}

#[test]
fn reversed_stencil_is_negative() {
    let p = corpus::bundled("stencil1d").unwrap();
    let ddg = dependence_graph(&p);
    let v = check_legality(&p, &ddg, &one_level(vec![vec![-1, 0, 0]]));
    assert!(!v.is_empty());
    assert!(v.iter().all(|x| x.kind == ViolationKind::Negative && x.level == Some(0)));
}

#[test]
fn zero_schedule_never_satisfies() {
    let p = corpus::bundled("stencil1d").unwrap();
    let ddg = dependence_graph(&p);
    let v = check_legality(&p, &ddg, &one_level(vec![vec![0, 0, 0]]));
    assert!(!v.is_empty());
    assert!(v.iter().all(|x| x.kind == ViolationKind::NeverSatisfied));
}

#[test]
fn parametric_distance_is_unbounded_for_fused_reversal() {
    let p = corpus::bundled("reversal").unwrap();
    let ddg = dependence_graph(&p);
    // S1 at i, S2 at i: S2 reads a[N - 1 - i]
    let v = check_legality(&p, &ddg, &one_level(vec![vec![1, 0, 0], vec![1, 0, 0]]));
    assert!(v.iter().any(|x| x.kind == ViolationKind::Unbounded));
}

proptest! {
    #[test]
    fn symbolic_legality_agrees_with_instances(a in -2i64..=2, b in -2i64..=2, c0 in -3i64..=3) {
        let p = corpus::bundled("skewed2d").unwrap();
        let ddg = dependence_graph(&p);
        let mut t2 = one_level(vec![vec![a, b, 0, c0]]);
        t2.push_level(LevelKind::Hyperplane, false, vec![vec![rat(1), rat(0), rat(0), rat(0)]]);
        t2.push_level(LevelKind::Hyperplane, false, vec![vec![rat(0), rat(1), rat(0), rat(0)]]);
        let symbolic = check_legality(&p, &ddg, &t2);
        for n in [3, 6] {
            if first_illegal(&p, &t2, &[n]).is_some() {
                prop_assert!(!symbolic.is_empty());
            }
        }
        if symbolic.is_empty() {
            for n in [3, 6] {
                prop_assert!(first_illegal(&p, &t2, &[n]).is_none());
            }
        }
    }
}

#[test]
fn oracle_respects_lower_bounds_and_budget() {
    let mut sys = ConstraintSystem::new(vec!["x".into(), "y".into()]);
    sys.push_sparse(&[(0, rat(1)), (1, rat(1))], Relation::Ge, rat(3));
    sys.set_lower(1, Some(rat(2)));
    assert_eq!(brute_force_lexmin(&sys, &[0, 1], 3, 100), BruteForce::Found(vec![rat(0), rat(3)]));
    assert_eq!(brute_force_lexmin(&sys, &[1, 0], 3, 100), BruteForce::Found(vec![rat(1), rat(2)]));
    sys.push_sparse(&[(0, rat(1))], Relation::Ge, rat(4));
    assert_eq!(brute_force_lexmin(&sys, &[0, 1], 3, 100), BruteForce::Infeasible);
    let mut wide = ConstraintSystem::new((0..6).map(|i| format!("x{i}")).collect());
    wide.push_sparse(&[(5, rat(1))], Relation::Eq, rat(3));
    assert_eq!(brute_force_lexmin(&wide, &[0, 1, 2, 3, 4, 5], 3, 2), BruteForce::Exhausted);
}

#[test]
fn suite_reports_every_check_once() {
    let corpus: Vec<_> = ["stencil1d", "interchange_fusion"]
        .iter()
        .map(|n| (n.to_string(), corpus::bundled(n).unwrap()))
        .collect();
    let report = theorem_suite(&corpus);
    let names: Vec<&str> = report.checks.iter().map(|c| c.name).collect();
    let mut unique = names.clone();
    unique.sort_unstable();
    unique.dedup();
    assert_eq!(unique.len(), names.len());
    assert_eq!(report.instances, vec!["stencil1d", "interchange_fusion"]);
    for c in &report.checks {
        if c.name != "scaling-closure" {
            assert!(c.ok(), "{}: {:?}", c.name, c.failures);
        }
    }
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["checks"].as_array().unwrap().len(), names.len());
}
