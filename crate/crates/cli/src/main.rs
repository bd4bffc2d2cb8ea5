use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lpdfp::fcg::{permute_and_fuse, to_dot};
use lpdfp::frontend::{dependence_graph, parse_program};
use lpdfp::model::Program;
use lpdfp::output::{ddg_to_json, transform_to_json};
use lpdfp::pipeline::{run, Algorithm};
use lpdfp::session::Session;
use lpdfp::verify::theorem_suite;
use lpdfp::{corpus, Error};
use serde_json::json;

#[derive(Parser)]
#[command(name = "lpdfp", version, about = "Affine loop scheduling with an LP-relaxed Pluto core")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schedule a program and print the transform as JSON.
    Schedule {
        file: PathBuf,
        #[arg(long, default_value = "dfp", value_parser = parse_algo)]
        algo: Algorithm,
    },
    /// Print the dependence graph as JSON.
    Deps { file: PathBuf },
    /// Print the colored fusion conflict graph.
    Fcg {
        file: PathBuf,
        /// Emit Graphviz instead of JSON.
        #[arg(long)]
        dot: bool,
    },
    /// Run the property suite over a corpus.
    Verify {
        /// Directory of program files; the bundled corpus by default.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Time the ilp, lp and dfp paths on one program.
    Bench { file: PathBuf },
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

enum Failure {
    Verification,
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } => Failure::Input(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<Program, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_program(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_dir(dir: &Path) -> Result<Vec<(String, Program)>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, load(p)?))
        })
        .collect()
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Schedule { file, algo } => {
            let program = load(&file)?;
            let ddg = dependence_graph(&program);
            let result = run(&program, &ddg, algo)?;
            print!("{}", transform_to_json(&program, &result.transform, Some(algo.name())));
        }
        Command::Deps { file } => {
            let program = load(&file)?;
            print!("{}", ddg_to_json(&program, &dependence_graph(&program)));
        }
        Command::Fcg { file, dot } => {
            let program = load(&file)?;
            let ddg = dependence_graph(&program);
            let session = Session::new(&program);
            let perm = permute_and_fuse(&session, &ddg)?;
            if dot {
                print!("{}", to_dot(&program, &perm.fcg, Some(&perm.coloring)));
            } else {
                let fcg = &perm.fcg;
                let vertices: Vec<_> = (0..fcg.vertices.len())
                    .map(|v| json!({"name": fcg.vertex_name(&program, v), "color": perm.coloring.color[v]}))
                    .collect();
                let edges: Vec<_> = fcg
                    .edges
                    .iter()
                    .map(|&(a, b)| {
                        let kind = if a == b {
                            "self"
                        } else if fcg.stmt_of(a) == fcg.stmt_of(b) {
                            "clique"
                        } else {
                            "conflict"
                        };
                        json!([fcg.vertex_name(&program, a), fcg.vertex_name(&program, b), kind])
                    })
                    .collect();
                let doc = json!({"vertices": vertices, "edges": edges, "cuts": perm.num_cuts()});
                println!("{}", serde_json::to_string_pretty(&doc).expect("fcg serializes"));
            }
        }
        Command::Verify { corpus: dir, json } => {
            let programs = match dir {
                Some(d) => load_dir(&d)?,
                None => corpus::all_bundled()?,
            };
            let report = theorem_suite(&programs);
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.summary());
            }
            if !report.all_passed() {
                return Err(Failure::Verification);
            }
        }
        Command::Bench { file } => {
            let program = load(&file)?;
            let ddg = dependence_graph(&program);
            println!("{:<5} {:>12} {:>8} {:>7} {:>6}", "algo", "seconds", "solves", "levels", "bands");
            for algo in Algorithm::ALL {
                let r = run(&program, &ddg, algo)?;
                println!(
                    "{:<5} {:>12.6} {:>8} {:>7} {:>6}",
                    algo.name(),
                    r.elapsed.as_secs_f64(),
                    r.solves,
                    r.transform.num_levels(),
                    r.transform.bands.len()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
