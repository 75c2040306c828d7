use std::time::Instant;

use tsplift::model::build_model;
use tsplift::simplex::{certify_optimality, solve_dual, solve_primal, SolverOptions};
use tsplift::{brute_force_opt, generate_extreme, generate_random, ExtremeKind};

fn main() {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("x73");
    let n: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(7);
    let form = args.get(3).map(String::as_str).unwrap_or("primal");

    let inst = match which {
        "x71" => generate_extreme(ExtremeKind::X71, n).unwrap(),
        "x72" => generate_extreme(ExtremeKind::X72, n).unwrap(),
        "x73" => generate_extreme(ExtremeKind::X73, n).unwrap(),
        seed => generate_random(n, seed.parse().unwrap(), false).unwrap(),
    };
    let oracle = brute_force_opt(&inst).unwrap();
    println!("instance {} oracle {}", inst.label(), oracle.best_cost);

    let t0 = Instant::now();
    let model = build_model(&inst).unwrap();
    println!(
        "model {} rows x {} cols, nnz {} ({:?})",
        model.n_rows(),
        model.n_cols(),
        model.nnz(),
        t0.elapsed()
    );

    let mut opts = SolverOptions::default();
    if let Some(iv) = args.get(4) {
        opts.refactor_interval = iv.parse().unwrap();
    }
    let t1 = Instant::now();
    let sol = if form == "dual" {
        solve_dual(&model, &opts).unwrap()
    } else {
        solve_primal(&model, &opts).unwrap()
    };
    println!(
        "{form}: status {:?} obj {} iters {} tours {} ({:?})",
        sol.status,
        sol.objective,
        sol.iterations,
        sol.tours_examined,
        t1.elapsed()
    );
    let cert = certify_optimality(&model, &sol).unwrap();
    println!("certificate: max violation {:.3e} ({cert:?})", cert.max_violation());
}
