//! `pqcausal` command-line front end.
//!
//! Every subcommand prints one JSON [`RunReport`] on standard output. Exit codes:
//! 0 success, 1 a verification ran but failed, 2 precondition error, 3 numerical
//! non-convergence, 64 usage error, 65 unreadable or malformed input, 73 output
//! not writable.

pub mod instance;
pub mod render;
pub mod suite;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use pqcausal::cauchy::{intersect_fixed_point, random_affine, random_interpolant, FixedPointOptions, SpacelikeMap};
use pqcausal::diamond::FlatDiamond;
use pqcausal::lipgraph::{lipschitz_constant, ExtendOptions, ExtensionSession, GraphSamples};
use pqcausal::plateau::{solve_plateau, PlateauProblem, PlateauSolution};
use pqcausal::pqform::{classify_vector, PseudoMetric};
use pqcausal::split::{reconstruct, splitting_map, verify_splitting_bijectivity, FoliationWitness, LevelSetSurface};

use instance::{load, load_causal_map, load_surface, InstanceFile, Kind};
use render::DiamondSlice;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] pqcausal::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Input(_) => 65,
            CliError::Output(_) => 73,
            CliError::Core(e) if e.is_convergence_failure() => 3,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pqcausal", version, about = "Causal structure tools for flat signature-(p,q) space")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a vector as spacelike, lightlike or timelike.
    Classify {
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        vector: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Evaluate the Kirszbraun extension of graph samples.
    Extend {
        #[arg(long)]
        samples: PathBuf,
        /// One or more points separated by ';'.
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 1.0)]
        lipschitz: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Intersect a causal graph with a spacelike surface.
    Intersect {
        #[arg(long)]
        causal: PathBuf,
        #[arg(long)]
        surface: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        start: Option<String>,
    },
    /// Render and sample a slice of the flat diamond.
    Diamond(DiamondArgs),
    /// Solve a discrete Plateau problem.
    Plateau {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Apply the splitting map to one point.
    Split {
        #[arg(long)]
        foliation: PathBuf,
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Round-trip random points through the splitting map.
    VerifySplit {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        foliation: Option<PathBuf>,
        #[arg(long)]
        surface: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Directory receiving the foliation and surface used, as instance files.
        #[arg(long)]
        save_instances: Option<PathBuf>,
    },
    /// Run the reduced invariant suite of every module.
    VerifyAll,
}

#[derive(Debug, Args)]
struct DiamondArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    q: usize,
    /// Fixed coordinates such as "x2=0.1,y2=0"; x1 and y1 span the slice.
    #[arg(long, default_value = "")]
    slice: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 61)]
    resolution: usize,
    /// Also test this point with the closed form and the sampling oracle.
    #[arg(long)]
    point: Option<String>,
    #[arg(long, default_value_t = 1000)]
    sphere_samples: usize,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub seed: u64,
    pub wall_time: f64,
    pub result: Value,
    pub checks: Vec<CheckFlag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckFlag {
    pub name: String,
    pub passed: bool,
}

impl CheckFlag {
    fn new(name: &str, passed: bool) -> Self {
        Self { name: name.into(), passed }
    }
}

struct Outcome {
    result: Value,
    checks: Vec<CheckFlag>,
}

impl Outcome {
    fn plain(result: Value) -> Self {
        Self { result, checks: Vec::new() }
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    match execute(&cli) {
        Ok(outcome) => {
            let failed = outcome.checks.iter().any(|c| !c.passed);
            let report = RunReport {
                command: argv.iter().skip(1).cloned().collect(),
                seed: cli.seed,
                wall_time: started.elapsed().as_secs_f64(),
                result: outcome.result,
                checks: outcome.checks,
            };
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
            i32::from(failed)
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn parse_vector(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad number {s:?} in {text:?}"))))
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Classify { metric, vector, tol } => {
            let g: PseudoMetric = load(metric, Kind::Metric)?;
            let v = parse_vector(vector)?;
            let class = classify_vector(&g, &v, *tol)?;
            Ok(Outcome::plain(json!({ "class": class })))
        }
        Command::Extend { samples, query, lipschitz, tol } => {
            let samples: GraphSamples = load(samples, Kind::Samples)?;
            let data = lipschitz_constant(&samples);
            if data > lipschitz * (1.0 + 1e-12) {
                return Err(pqcausal::Error::LipschitzViolation { constant: data, bound: *lipschitz }.into());
            }
            let opts = ExtendOptions { tol: *tol, ..ExtendOptions::default() };
            let mut session = ExtensionSession::new(&samples, *lipschitz, opts);
            let mut values = Vec::new();
            for q in query.split(';') {
                values.push(session.eval(&parse_vector(q)?)?);
            }
            Ok(Outcome::plain(json!({ "lipschitz": lipschitz, "data_constant": data, "values": values })))
        }
        Command::Intersect { causal, surface, tol, start } => {
            let f = load_causal_map(causal)?;
            let w = load_surface(surface)?;
            let x0 = match start {
                Some(s) => parse_vector(s)?,
                None => vec![0.0; f.source_dim()],
            };
            let opts = FixedPointOptions { tol: *tol, ..FixedPointOptions::default() };
            let hit = intersect_fixed_point(&f, &w, &x0, &opts)?;
            Ok(Outcome::plain(json!({
                "time": hit.time,
                "point": hit.point,
                "iterations": hit.iterations,
                "contraction": hit.contraction,
            })))
        }
        Command::Diamond(args) => diamond(args),
        Command::Plateau { problem, out, svg } => {
            let problem: PlateauProblem = load(problem, Kind::Problem)?;
            let sol = solve_plateau(&problem)?;
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&solution_json(&sol)).expect("solution serializes");
                write_text(path, &(text + "\n"))?;
            }
            if let Some(path) = svg {
                write_text(path, &render::section_svg(&sol.section))?;
            }
            let checks = vec![
                CheckFlag::new("feasible", sol.max_violation <= problem.solver.feas_tol),
                CheckFlag::new("monotone history", sol.history.windows(2).all(|w| w[1] >= w[0] - 1e-12)),
            ];
            Ok(Outcome {
                result: json!({
                    "area": sol.area,
                    "iterations": sol.iterations,
                    "converged": sol.converged,
                    "max_violation": sol.max_violation,
                    "degenerate_cells": sol.degenerate_cells,
                }),
                checks,
            })
        }
        Command::Split { foliation, surface, point, tol } => {
            let fol: FoliationWitness = load(foliation, Kind::Foliation)?;
            let level = LevelSetSurface(load_surface(surface)?);
            let pt = parse_vector(point)?;
            let s = splitting_map(&fol, &level, &pt, *tol)?;
            let back = reconstruct(&fol, &s)?;
            let error = pqcausal::linalg::dist(&back, &pt);
            Ok(Outcome {
                result: json!({ "leaf_point": s.leaf_point, "time": s.time, "reconstruction_error": error }),
                checks: vec![CheckFlag::new("round trip", error <= 10.0 * tol.max(1e-12))],
            })
        }
        Command::VerifySplit { samples, foliation, surface, tol, save_instances } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let fol = match foliation {
                Some(path) => load(path, Kind::Foliation)?,
                None => FoliationWitness::new(random_interpolant(&mut rng, 2, 2, 5, 0.9))?,
            };
            let level = match surface {
                Some(path) => LevelSetSurface(load_surface(path)?),
                None => LevelSetSurface(SpacelikeMap::new(random_affine(&mut rng, fol.q(), fol.p(), 0.8))?),
            };
            if let Some(dir) = save_instances {
                std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
                InstanceFile::wrap(Kind::Foliation, &fol)?.write(&dir.join("foliation.json"))?;
                InstanceFile::wrap(Kind::Surface, &level)?.write(&dir.join("surface.json"))?;
            }
            let report = verify_splitting_bijectivity(&fol, &level, *samples, cli.seed, *tol)?;
            let passed = report.passed();
            Ok(Outcome {
                result: serde_json::to_value(&report).expect("report serializes"),
                checks: vec![CheckFlag::new("bijectivity", passed)],
            })
        }
        Command::VerifyAll => {
            let checks = suite::run_suite(cli.seed);
            let passed = checks.iter().filter(|c| c.passed).count();
            let flags = checks.iter().map(|c| CheckFlag::new(&format!("{}: {}", c.module, c.name), c.passed)).collect();
            Ok(Outcome {
                result: json!({ "passed": passed, "total": checks.len(), "checks": checks }),
                checks: flags,
            })
        }
    }
}

fn parse_slice(text: &str, p: usize, q: usize) -> Result<Vec<f64>, CliError> {
    let mut anchor = vec![0.0; p + q];
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("slice entry {part:?} is not name=value")))?;
        let bad = || CliError::Usage(format!("bad slice entry {part:?}"));
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        let name = name.trim();
        let (block, index) = name.split_at(1);
        let index: usize = index.parse().map_err(|_| bad())?;
        let slot = match block {
            "x" if (2..=p).contains(&index) => index - 1,
            "y" if (2..=q).contains(&index) => p + index - 1,
            _ => return Err(bad()),
        };
        anchor[slot] = value;
    }
    Ok(anchor)
}

fn diamond(args: &DiamondArgs) -> Result<Outcome, CliError> {
    let d = FlatDiamond::canonical(args.p, args.q)?;
    let anchor = parse_slice(&args.slice, args.p, args.q)?;
    let slice = DiamondSlice { diamond: &d, anchor, resolution: args.resolution };
    let grid = slice.grid()?;
    let members = grid.iter().filter(|c| c.2).count();
    if let Some(path) = &args.out {
        write_text(path, &render::diamond_svg(Some(&slice))?)?;
    }
    if let Some(path) = &args.csv {
        write_text(path, &render::diamond_csv(&slice)?)?;
    }
    let mut result = json!({
        "p": args.p,
        "q": args.q,
        "slice": slice.anchor,
        "grid_points": grid.len(),
        "members": members,
    });
    let mut checks = Vec::new();
    if let Some(text) = &args.point {
        let pt = parse_vector(text)?;
        let closed = d.contains(&pt, 0.0)?;
        let oracle = d.membership_oracle(&pt, args.sphere_samples, 0.0)?;
        result["point"] = json!({ "closed_form": closed, "oracle": oracle, "gap": d.boundary_gap(&pt)? });
        checks.push(CheckFlag::new("oracle agreement", closed == oracle));
    }
    Ok(Outcome { result, checks })
}

fn solution_json(sol: &PlateauSolution) -> Value {
    let base = sol.section.base();
    let nodes: Vec<Value> = (0..base.len())
        .map(|i| {
            json!({
                "position": base.positions()[i],
                "value": sol.section.value(i),
                "boundary": base.is_boundary(i),
            })
        })
        .collect();
    json!({
        "area": sol.area,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "max_violation": sol.max_violation,
        "degenerate_cells": sol.degenerate_cells,
        "history": sol.history,
        "nodes": nodes,
    })
}
