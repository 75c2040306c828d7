//! Experiment harness: solve instances against the brute-force oracle,
//! record the outcomes in versioned CSV/JSON reports, and hunt for
//! instances where the relaxation value drops below the true optimum.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use tsplift::decomposition::{decompose, Decomposition, DecompositionOptions};
use tsplift::model::build_model;
use tsplift::simplex::{certify_optimality, solve_dual, solve_primal, LpForm, SolverOptions};
use tsplift::{brute_force_opt, generate_random, Error, Result, TspInstance};

/// Bumped whenever the record layout changes incompatibly.
pub const EXPERIMENT_FORMAT_VERSION: u32 = 1;

/// Environment variable naming the directory reports are written to.
pub const OUT_DIR_ENV: &str = "TSPLIFT_OUT_DIR";

pub fn output_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

/// One instance solved once, compared against the enumeration oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub format_version: u32,
    pub label: String,
    pub n: usize,
    pub form: String,
    pub status: String,
    pub objective: f64,
    pub iterations: u64,
    pub tours_examined: usize,
    /// Worst violation across the optimality certificate.
    pub certificate: f64,
    pub oracle_cost: f64,
    /// `oracle_cost - objective`; positive means the relaxation undercuts
    /// the true optimum.
    pub gap: f64,
    pub solve_ms: u64,
}

impl ExperimentRecord {
    pub fn matches_oracle(&self, tol: f64) -> bool {
        self.status == "Optimal" && self.gap.abs() <= tol
    }
}

/// Solves one instance and lines the result up against the oracle.
pub fn run_experiment(
    inst: &TspInstance,
    form: LpForm,
    opts: &SolverOptions,
) -> Result<ExperimentRecord> {
    let oracle = brute_force_opt(inst)?;
    let model = build_model(inst)?;
    let t0 = Instant::now();
    let sol = match form {
        LpForm::Primal => solve_primal(&model, opts)?,
        LpForm::Dual => solve_dual(&model, opts)?,
    };
    let solve_ms = t0.elapsed().as_millis() as u64;
    let cert = certify_optimality(&model, &sol)?;
    Ok(ExperimentRecord {
        format_version: EXPERIMENT_FORMAT_VERSION,
        label: inst.label().to_string(),
        n: inst.n(),
        form: format!("{form:?}").to_lowercase(),
        status: format!("{:?}", sol.status),
        objective: sol.objective,
        iterations: sol.iterations,
        tours_examined: sol.tours_examined,
        certificate: cert.max_violation(),
        oracle_cost: oracle.best_cost,
        gap: oracle.best_cost - sol.objective,
        solve_ms,
    })
}

/// A solved instance whose relaxation value differs from the oracle: the
/// full evidence needed to reproduce and inspect it offline.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub record: ExperimentRecord,
    /// Plain-text cost matrix, re-parseable by the instance reader.
    pub instance: String,
    pub solution: Vec<f64>,
    /// Tour decomposition of the solution vector, when one was attempted.
    pub decomposition: Option<Decomposition>,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub n: usize,
    pub count: usize,
    pub seed_start: u64,
    pub symmetric: bool,
    pub form: LpForm,
    /// Gap magnitude below this counts as agreement.
    pub tol: f64,
    pub solver: SolverOptions,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n: 5,
            count: 20,
            seed_start: 0,
            symmetric: false,
            form: LpForm::Primal,
            tol: 1e-6,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub format_version: u32,
    pub records: Vec<ExperimentRecord>,
    pub counterexamples: Vec<Counterexample>,
}

impl SearchReport {
    pub fn agreement_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 1.0;
        }
        let hits = self.records.len() - self.counterexamples.len();
        hits as f64 / self.records.len() as f64
    }
}

/// Solves `count` random instances and collects any whose relaxation value
/// strays from the oracle optimum by more than `tol`.
pub fn search_gap(cfg: &SearchConfig) -> Result<SearchReport> {
    let mut records = Vec::with_capacity(cfg.count);
    let mut counterexamples = Vec::new();
    for k in 0..cfg.count {
        let seed = cfg.seed_start + k as u64;
        let inst = generate_random(cfg.n, seed, cfg.symmetric)?;
        let record = run_experiment(&inst, cfg.form, &cfg.solver)?;
        log::info!(
            "{}: lp {} oracle {} gap {:+.3e}",
            record.label,
            record.objective,
            record.oracle_cost,
            record.gap
        );
        if !record.matches_oracle(cfg.tol) {
            let model = build_model(&inst)?;
            let sol = match cfg.form {
                LpForm::Primal => solve_primal(&model, &cfg.solver)?,
                LpForm::Dual => solve_dual(&model, &cfg.solver)?,
            };
            let decomposition =
                decompose(model.space(), &sol.x, &DecompositionOptions::default()).ok();
            counterexamples.push(Counterexample {
                record: record.clone(),
                instance: inst.to_text(),
                solution: sol.x,
                decomposition,
            });
        }
        records.push(record);
    }
    Ok(SearchReport {
        format_version: EXPERIMENT_FORMAT_VERSION,
        records,
        counterexamples,
    })
}

/// Writes the CSV record table plus one JSON certificate per
/// counterexample. Returns the paths written.
pub fn write_reports(report: &SearchReport, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let io_err = |e: std::io::Error| Error::Parse(format!("writing reports: {e}"));
    fs::create_dir_all(dir).map_err(io_err)?;
    let mut paths = Vec::new();

    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)
        .map_err(|e| Error::Parse(format!("writing {}: {e}", csv_path.display())))?;
    for r in &report.records {
        w.serialize(r)
            .map_err(|e| Error::Parse(format!("serializing record: {e}")))?;
    }
    w.flush().map_err(io_err)?;
    paths.push(csv_path);

    for (k, ce) in report.counterexamples.iter().enumerate() {
        let path = dir.join(format!("{stem}-counterexample-{k}.json"));
        let body = serde_json::to_string_pretty(ce)
            .map_err(|e| Error::Parse(format!("serializing counterexample: {e}")))?;
        fs::write(&path, body).map_err(io_err)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tsplift::{generate_extreme, ExtremeKind};

    #[test]
    fn experiment_record_round_trips_through_csv() {
        let inst = generate_extreme(ExtremeKind::X73, 5).unwrap();
        let rec = run_experiment(&inst, LpForm::Primal, &SolverOptions::default()).unwrap();
        assert_eq!(rec.status, "Optimal");
        assert!(rec.matches_oracle(1e-6));
        assert_eq!(rec.format_version, EXPERIMENT_FORMAT_VERSION);

        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&rec).unwrap();
        let data = w.into_inner().unwrap();
        let mut r = csv::Reader::from_reader(data.as_slice());
        let back: ExperimentRecord = r.deserialize().next().unwrap().unwrap();
        assert_eq!(back.label, rec.label);
        assert_eq!(back.objective, rec.objective);
    }

    #[test]
    fn search_finds_no_gap_on_small_instances() {
        let cfg = SearchConfig { n: 5, count: 3, seed_start: 100, ..Default::default() };
        let report = search_gap(&cfg).unwrap();
        assert_eq!(report.records.len(), 3);
        assert!(report.counterexamples.is_empty());
        assert_eq!(report.agreement_rate(), 1.0);
    }

    #[test]
    fn reports_land_on_disk() {
        let cfg = SearchConfig { n: 5, count: 2, seed_start: 7, ..Default::default() };
        let report = search_gap(&cfg).unwrap();
        let dir = std::env::temp_dir().join("tsplift-harness-test");
        let paths = write_reports(&report, &dir, "probe").unwrap();
        assert_eq!(paths.len(), 1);
        let body = fs::read_to_string(&paths[0]).unwrap();
        assert!(body.lines().count() >= 3); // header + 2 records
        fs::remove_dir_all(&dir).ok();
    }
}
