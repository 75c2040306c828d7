use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tsplift::decomposition::{decompose, DecompositionOptions};
use tsplift::model::{build_model, lift_tour, objective_value, residuals};
use tsplift::simplex::{
    certify_optimality, solve_dual, solve_primal, LpForm, LpSolution, SolverOptions,
};
use tsplift::{
    brute_force_opt, generate_extreme, generate_random, mps, Error, ExtremeKind, Result, Tour,
    TspInstance,
};

#[derive(Parser)]
#[command(name = "tsplift", version, about = "Lifted network-flow LP relaxation of the TSP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the instance comes from: a file, a seeded random draw, or one of
/// the fixed extreme cost patterns.
#[derive(Args)]
struct InstanceArgs {
    /// Plain-text instance file (first line n, then the cost rows)
    #[arg(long, conflicts_with_all = ["seed", "extreme"])]
    file: Option<PathBuf>,

    /// City count for generated instances
    #[arg(short, long, default_value_t = 7)]
    n: usize,

    /// Seed for a random instance
    #[arg(long)]
    seed: Option<u64>,

    /// Draw a symmetric cost matrix
    #[arg(long, requires = "seed")]
    symmetric: bool,

    /// One of the fixed patterns: x71, x72, x73
    #[arg(long, conflicts_with = "seed")]
    extreme: Option<String>,
}

impl InstanceArgs {
    fn load(&self) -> Result<TspInstance> {
        if let Some(path) = &self.file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into());
            return TspInstance::from_text(&text, label);
        }
        if let Some(kind) = &self.extreme {
            return generate_extreme(kind.parse::<ExtremeKind>()?, self.n);
        }
        if let Some(seed) = self.seed {
            return generate_random(self.n, seed, self.symmetric);
        }
        Err(Error::Parse(
            "no instance given: use --file, --seed or --extreme".into(),
        ))
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Formulation to pivot on: primal or dual
    #[arg(long, default_value = "primal")]
    form: String,

    /// Feasibility/optimality tolerance
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,

    /// Pivot cap across both phases
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: u64,
}

impl SolveArgs {
    fn solve(&self, model: &tsplift::SparseLpModel) -> Result<(LpForm, LpSolution)> {
        let form: LpForm = self.form.parse()?;
        let opts = SolverOptions {
            feas_tol: self.tol,
            opt_tol: self.tol,
            max_iters: self.max_iter,
            ..Default::default()
        };
        let sol = match form {
            LpForm::Primal => solve_primal(model, &opts)?,
            LpForm::Dual => solve_dual(model, &opts)?,
        };
        Ok((form, sol))
    }

    fn options(&self) -> SolverOptions {
        SolverOptions {
            feas_tol: self.tol,
            opt_tol: self.tol,
            max_iters: self.max_iter,
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and print it in the plain-text format
    Gen {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Write to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the lifted model and print its size figures
    Build {
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Solve the relaxation and print objective, certificate and stats
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Exact optimum by full tour enumeration
    Oracle {
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Lift a tour and check feasibility and cost agreement
    LiftCheck {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Visiting order of cities 2..n, comma separated, e.g. 3,2,4,5,6,7
        #[arg(long)]
        tour: String,
    },
    /// Solve, then peel the solution into weighted tours
    Decompose {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Write the decomposition as JSON to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the lifted model as an MPS file
    ExportMps {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Write to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance against the oracle and print the record as JSON
    Experiment {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Sweep random instances hunting for relaxation/oracle gaps
    Search {
        /// City count
        #[arg(short, long, default_value_t = 5)]
        n: usize,
        /// Number of instances
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// First seed; instance k uses seed_start + k
        #[arg(long, default_value_t = 0)]
        seed_start: u64,
        /// Draw symmetric cost matrices
        #[arg(long)]
        symmetric: bool,
        #[command(flatten)]
        solve: SolveArgs,
        /// Gap magnitude below this counts as agreement
        #[arg(long, default_value_t = 1e-6)]
        gap_tol: f64,
        /// Report file stem inside the output directory
        #[arg(long, default_value = "search")]
        stem: String,
    },
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { instance, out } => {
            let inst = instance.load()?;
            emit(&out, &inst.to_text())?;
            if out.is_some() {
                eprintln!("wrote instance {}", inst.label());
            }
        }
        Command::Build { instance } => {
            let inst = instance.load()?;
            let model = build_model(&inst)?;
            let s = model.summary();
            println!("instance {}", model.label());
            println!("columns {} rows {} nonzeros {}", s.n_cols, s.n_rows, s.nnz);
            for fc in &s.rows_per_family {
                println!("  {:<4} rows {:>8} nnz {:>10}", fc.family.code(), fc.rows, fc.nnz);
            }
        }
        Command::Solve { instance, solve } => {
            let inst = instance.load()?;
            let model = build_model(&inst)?;
            let (form, sol) = solve.solve(&model)?;
            println!("instance {}", model.label());
            println!(
                "form {form:?} status {:?} objective {} iterations {} tours-examined {}",
                sol.status, sol.objective, sol.iterations, sol.tours_examined
            );
            let cert = certify_optimality(&model, &sol)?;
            println!(
                "certificate max-violation {:.3e} ({})",
                cert.max_violation(),
                if cert.certified(1e-8) { "certified" } else { "NOT certified" }
            );
        }
        Command::Oracle { instance } => {
            let inst = instance.load()?;
            let res = brute_force_opt(&inst)?;
            println!("instance {}", inst.label());
            println!(
                "optimum {} tour {} ({} tours enumerated)",
                res.best_cost, res.best_tour, res.tours_enumerated
            );
        }
        Command::LiftCheck { instance, tour } => {
            let inst = instance.load()?;
            let order: Vec<u8> = tour
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u8>()
                        .map_err(|e| Error::Parse(format!("bad city '{s}': {e}")))
                })
                .collect::<Result<_>>()?;
            let t = Tour::new(inst.n(), order)?;
            let model = build_model(&inst)?;
            let x = lift_tour(model.space(), &t)?;
            let rep = residuals(&model, &x)?;
            let obj = objective_value(&model, &x)?;
            let cost = inst.tour_cost(&t)?;
            println!("tour {t}");
            println!("max residual {:.3e}", rep.max_abs());
            println!("lift objective {obj} tour cost {cost} difference {:.3e}", obj - cost);
        }
        Command::Decompose { instance, solve, out } => {
            let inst = instance.load()?;
            let model = build_model(&inst)?;
            let (_, sol) = solve.solve(&model)?;
            let d = decompose(model.space(), &sol.x, &DecompositionOptions::default())?;
            println!("instance {} objective {}", model.label(), sol.objective);
            for wt in &d.tours {
                println!("  weight {:<22} tour {}", wt.weight, wt.tour(inst.n()));
            }
            println!(
                "total weight {} max residual {:.3e} stranded flow {:.3e} ({})",
                d.total_weight,
                d.max_residual(),
                d.stranded_flow,
                if d.is_exact(1e-9) { "exact" } else { "NOT exact" }
            );
            if let Some(path) = out {
                let body = serde_json::to_string_pretty(&d)
                    .map_err(|e| Error::Parse(format!("serializing: {e}")))?;
                emit(&Some(path), &body)?;
            }
        }
        Command::ExportMps { instance, out } => {
            let inst = instance.load()?;
            let model = build_model(&inst)?;
            emit(&out, &mps::export(&model))?;
        }
        Command::Experiment { instance, solve } => {
            let inst = instance.load()?;
            let form: LpForm = solve.form.parse()?;
            let rec = tsplift_cli::run_experiment(&inst, form, &solve.options())?;
            let body = serde_json::to_string_pretty(&rec)
                .map_err(|e| Error::Parse(format!("serializing: {e}")))?;
            println!("{body}");
        }
        Command::Search { n, count, seed_start, symmetric, solve, gap_tol, stem } => {
            let cfg = tsplift_cli::SearchConfig {
                n,
                count,
                seed_start,
                symmetric,
                form: solve.form.parse()?,
                tol: gap_tol,
                solver: solve.options(),
            };
            let report = tsplift_cli::search_gap(&cfg)?;
            let dir = tsplift_cli::output_dir();
            let paths = tsplift_cli::write_reports(&report, &dir, &stem)?;
            println!(
                "{} instances, agreement rate {:.3}, {} counterexamples",
                report.records.len(),
                report.agreement_rate(),
                report.counterexamples.len()
            );
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_) | Error::InvalidInstance(_) | Error::InvalidTour(_) => 1,
        Error::EnumerationGuard(_) | Error::UnsupportedSize { .. } | Error::PathBudget(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
