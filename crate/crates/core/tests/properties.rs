mod common;

use common::{band_problems, first_illegal};
use lpdfp::frontend::{dependence_graph, parse_program};
use lpdfp::model::Program;
use lpdfp::output::{transform_from_json, transform_to_json};
use lpdfp::pipeline::{run, Algorithm};
use lpdfp::pluto::{schedule, Mode, SchedulerConfig};
use lpdfp::session::Session;
use lpdfp::Error;
use lpdfp::verify::{brute_force_lexmin, check_legality, has_full_rank, BruteForce};
use proptest::prelude::*;
use ratlp::{rat, solve_ilp, ConstraintSystem, LpError, LpProblem, Outcome, Relation, Row};
use serde_json::json;

#[derive(Debug, Clone)]
struct Access {
    write: bool,
    array: usize,
    /// `(iterator, sign, offset)` per subscript
    subs: Vec<(usize, bool, i64)>,
}

#[derive(Debug, Clone)]
struct Stmt {
    dim: usize,
    accesses: Vec<Access>,
}

/// Exact branch and bound need not terminate on unbounded coefficient
/// polyhedra; such programs hit this budget and are skipped for ilp.
const ILP_NODE_LIMIT: usize = 2000;

const RANKS: [usize; 3] = [1, 1, 2];

fn access(dim: usize) -> impl Strategy<Value = Access> {
    let arrays: Vec<usize> = (0..RANKS.len()).filter(|&a| RANKS[a] <= dim).collect();
    (any::<bool>(), prop::sample::select(arrays)).prop_flat_map(move |(write, array)| {
        prop::collection::vec((0..dim, any::<bool>(), -2i64..=2), RANKS[array])
            .prop_map(move |subs| Access { write, array, subs })
    })
}

fn stmt() -> impl Strategy<Value = Stmt> {
    (1usize..=2).prop_flat_map(|dim| {
        prop::collection::vec(access(dim), 1..=3).prop_map(move |accesses| Stmt { dim, accesses })
    })
}

fn program_text(stmts: &[Stmt]) -> String {
    let iters = ["i", "j"];
    let statements: Vec<_> = stmts
        .iter()
        .enumerate()
        .map(|(s, st)| {
            let m = st.dim;
            let domain: Vec<_> = (0..m)
                .flat_map(|k| {
                    let mut lo = vec![json!(0); m + 2];
                    lo[k] = json!(1);
                    lo.push(json!(">="));
                    let mut hi = vec![json!(0); m + 2];
                    hi[k] = json!(1);
                    hi[m] = json!(-1);
                    hi[m + 1] = json!(1);
                    hi.push(json!("<="));
                    [lo, hi]
                })
                .collect();
            let accesses: Vec<_> = st
                .accesses
                .iter()
                .map(|a| {
                    let map: Vec<Vec<i64>> = a
                        .subs
                        .iter()
                        .map(|&(k, forward, off)| {
                            let mut row = vec![0; m + 2];
                            if forward {
                                row[k] = 1;
                                row[m + 1] = off;
                            } else {
                                row[k] = -1;
                                row[m] = 1;
                                row[m + 1] = off - 1;
                            }
                            row
                        })
                        .collect();
                    json!({"array": format!("A{}", a.array), "kind": if a.write { "write" } else { "read" }, "map": map})
                })
                .collect();
            json!({"id": format!("S{}", s + 1), "iterators": &iters[..m], "domain": domain,
                   "accesses": accesses, "order": s})
        })
        .collect();
    json!({"params": ["N"], "statements": statements}).to_string()
}

fn programs() -> impl Strategy<Value = Program> {
    prop::collection::vec(stmt(), 1..=3).prop_map(|s| parse_program(&program_text(&s)).expect("generated program parses"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_programs_get_legal_full_rank_schedules(program in programs()) {
        let ddg = dependence_graph(&program);
        for algo in Algorithm::ALL {
            let t = if algo == Algorithm::Ilp {
                let mut config = SchedulerConfig::new(Mode::Ilp);
                config.node_limit = ILP_NODE_LIMIT;
                match schedule(&Session::new(&program), &ddg, &config) {
                    Ok(s) => s.transform,
                    Err(Error::Solver(LpError::NodeLimit { .. })) => continue,
                    Err(e) => return Err(TestCaseError::fail(format!("ilp: {e}"))),
                }
            } else {
                let r = run(&program, &ddg, algo);
                prop_assert!(r.is_ok(), "{}: {:?}", algo.name(), r.err());
                r.unwrap().transform
            };
            for n in [3, 5] {
                let bad = first_illegal(&program, &t, &[n]);
                prop_assert!(bad.is_none(), "{} N={}: {:?}", algo.name(), n, bad);
                let problems = band_problems(&program, &t, &[n]);
                prop_assert!(problems.is_empty(), "{}: {:?}", algo.name(), problems);
            }
            prop_assert!(check_legality(&program, &ddg, &t).is_empty());
            prop_assert!(has_full_rank(&program, &t));
        }
    }

    #[test]
    fn transforms_round_trip_through_json(program in programs()) {
        let r = run(&program, &dependence_graph(&program), Algorithm::Dfp).unwrap();
        let text = transform_to_json(&program, &r.transform, Some("dfp"));
        prop_assert_eq!(transform_from_json(&program, &text).unwrap(), r.transform);
    }

    #[test]
    fn brute_force_oracle_agrees_with_branch_and_bound(
        rows in prop::collection::vec((prop::collection::vec(-3i64..=3, 3), -4i64..=6, 0u8..2), 1..5),
    ) {
        let mut sys = ConstraintSystem::new(vec!["x".into(), "y".into(), "z".into()]);
        for v in 0..3 {
            sys.push_sparse(&[(v, rat(1))], Relation::Le, rat(3));
        }
        for (c, rhs, rel) in &rows {
            let rel = if *rel == 0 { Relation::Ge } else { Relation::Eq };
            sys.push(Row::new(c.iter().map(|&v| rat(v)).collect(), rel, rat(*rhs)));
        }
        let order = [2, 0, 1];
        let problem = LpProblem::lexmin_vars(sys.clone(), &order).with_integral(vec![0, 1, 2]);
        let oracle = brute_force_lexmin(&sys, &order, 3, 1_000_000);
        match solve_ilp(&problem).unwrap() {
            Outcome::Optimal(s) => prop_assert_eq!(oracle, BruteForce::Found(s.values)),
            Outcome::Infeasible => prop_assert_eq!(oracle, BruteForce::Infeasible),
            Outcome::Unbounded => prop_assert!(false),
        }
    }
}
