//! Self-contained two-phase revised simplex for equality-form LPs
//! (`min c.x, A x = b, x >= 0`), with sparse LU basis factorization,
//! product-form eta updates and periodic refactorization.
//!
//! The model can be solved in its native (primal) form or through the
//! explicit standard-form dual; both deliver the primal solution, the row
//! duals and an iteration trail observed for integral vertices.

pub mod exact;
pub mod lu;

use std::collections::HashSet;
use std::str::FromStr;

use crate::decomposition::tour_from_stage_arcs;
use crate::error::{Error, Result};
use crate::indexing::{ColumnKey, VariableSpace};
use crate::instance::City;
use crate::model::{SolutionVector, SparseLpModel};

use lu::{LuFactors, LuScratch};

/// Which formulation the solver pivots on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpForm {
    Primal,
    Dual,
}

impl FromStr for LpForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "primal" => Ok(LpForm::Primal),
            "dual" => Ok(LpForm::Dual),
            other => Err(Error::Parse(format!("unknown LP form {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Absolute feasibility tolerance (phase-1 residual, basic value drift).
    pub feas_tol: f64,
    /// Reduced-cost threshold for entering candidates.
    pub opt_tol: f64,
    /// Total pivot cap across both phases.
    pub max_iters: u64,
    /// Pivots between basis refactorizations.
    pub refactor_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            max_iters: 1_000_000,
            refactor_interval: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Occupant of one basis slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisVar {
    Structural(usize),
    Artificial(usize),
}

/// An equality-form LP ready for the pivoting core: columns of `A` as
/// sparse (row, value) lists.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub m: usize,
    pub n: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Raw solve result over a `StandardLp`.
#[derive(Debug, Clone)]
pub struct StdSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: u64,
    pub duals: Vec<f64>,
    /// Final basis occupant per row slot.
    pub basis: Vec<BasisVar>,
}

/// Hooks into the phase-2 iteration trail.
pub trait IterateObserver {
    /// Called whenever all basic values sit within 1e-7 of {0, 1};
    /// `basic` holds the structural (column, value) pairs above 0.5.
    fn on_integral_vertex(&mut self, _basic: &[(usize, f64)]) {}
    /// Called with the current row duals when `wants_duals` is true.
    fn on_duals(&mut self, _y: &[f64]) {}
    fn wants_duals(&self) -> bool {
        false
    }
}

pub struct NoObserver;
impl IterateObserver for NoObserver {}

/// Solution of a model solve, expressed over the model's own columns and
/// rows regardless of which form was pivoted on.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub form: LpForm,
    /// Values of the model columns.
    pub x: SolutionVector,
    pub objective: f64,
    pub iterations: u64,
    /// Duals of the model rows.
    pub duals: Vec<f64>,
    /// Basic structural columns of the standard-form LP that was pivoted on.
    pub basis: Vec<usize>,
    /// Full slot-by-slot basis of that LP, artificials included.
    pub row_basis: Vec<BasisVar>,
    /// Distinct tours decoded from integral iterates along the solve.
    pub tours_examined: usize,
}

const RATIO_TOL: f64 = 1e-7;
const RATIO_TOL_LAST: f64 = 1e-10;
/// Consecutive degenerate pivots before Bland's rule takes over.
const DEGENERATE_LIMIT: u32 = 50;
/// Consecutive degenerate pivots before the basic values are perturbed.
const PERTURB_TRIGGER: u32 = 5000;
/// Perturbation rounds per phase; past this, plain Bland finishes the job.
const PERTURB_LIMIT: u32 = 1000;
const PERTURB_SCALE: f64 = 1e-8;
const INTEGRALITY_TOL: f64 = 1e-7;
const CLEANUP_CAP: u64 = 20_000;

struct Eta {
    pos: usize,
    pivot: f64,
    /// Sparse `w = B^-1 a_enter` without the pivot position.
    entries: Vec<(usize, f64)>,
}

struct Core<'a, O: IterateObserver> {
    m: usize,
    n: usize,
    /// Sign flips applied so the internal right-hand side is nonnegative.
    sign: Vec<f64>,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    c: &'a [f64],
    opts: &'a SolverOptions,
    observer: &'a mut O,

    basis: Vec<BasisVar>,
    /// Structural column -> basis position, usize::MAX when nonbasic.
    pos_of: Vec<usize>,
    /// Basic values by position.
    x: Vec<f64>,
    lu: LuFactors,
    etas: Vec<Eta>,
    scratch: LuScratch,
    rhs_buf: Vec<f64>,
    w: Vec<f64>,
    y: Vec<f64>,
    cb: Vec<f64>,
    iterations: u64,
    rng: rand_chacha::ChaCha8Rng,
    /// Basic values currently carry anti-degeneracy noise; the solve must
    /// finish with a true-rhs refactorization and a cleanup pass.
    perturbed: bool,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl<'a, O: IterateObserver> Core<'a, O> {
    fn new(lp: &'a StandardLp, opts: &'a SolverOptions, observer: &'a mut O) -> Result<Self> {
        let m = lp.m;
        let sign: Vec<f64> =
            lp.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let cols: Vec<Vec<(usize, f64)>> = lp
            .cols
            .iter()
            .map(|col| col.iter().map(|&(i, v)| (i, v * sign[i])).collect())
            .collect();
        let b: Vec<f64> = lp.b.iter().map(|v| v.abs()).collect();
        let mut scratch = LuScratch::new(m);

        // Crash: cover rows with singleton structural columns where that
        // yields a nonnegative basic value; artificials take the rest.
        let mut basis: Vec<BasisVar> = (0..m).map(BasisVar::Artificial).collect();
        let mut pos_of = vec![usize::MAX; lp.n];
        let mut x = b.clone();
        for (j, col) in cols.iter().enumerate() {
            if let [(i, v)] = col[..] {
                if matches!(basis[i], BasisVar::Artificial(_)) && v.abs() > 0.5 {
                    let val = b[i] / v;
                    if val >= 0.0 {
                        basis[i] = BasisVar::Structural(j);
                        pos_of[j] = i;
                        x[i] = val;
                    }
                }
            }
        }
        let start_cols: Vec<Vec<(usize, f64)>> = basis
            .iter()
            .map(|&var| match var {
                BasisVar::Structural(j) => cols[j].clone(),
                BasisVar::Artificial(i) => vec![(i, 1.0)],
            })
            .collect();
        let lu = LuFactors::factorize(m, &start_cols, &mut scratch)?;
        Ok(Self {
            m,
            n: lp.n,
            sign,
            cols,
            x,
            b,
            c: &lp.c,
            opts,
            observer,
            basis,
            pos_of,
            lu,
            etas: Vec::new(),
            scratch,
            rhs_buf: vec![0.0; m],
            w: vec![0.0; m],
            y: vec![0.0; m],
            cb: vec![0.0; m],
            iterations: 0,
            rng: <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0x5eed),
            perturbed: false,
        })
    }

    fn cost(&self, var: BasisVar, phase: u8) -> f64 {
        match (var, phase) {
            (BasisVar::Artificial(_), 1) => 1.0,
            (BasisVar::Artificial(_), _) => 0.0,
            (BasisVar::Structural(_), 1) => 0.0,
            (BasisVar::Structural(j), _) => self.c[j],
        }
    }

    /// `w = B^-1 a_j` for structural column `j`.
    fn ftran_col(&mut self, j: usize) {
        self.rhs_buf.fill(0.0);
        for &(i, v) in &self.cols[j] {
            self.rhs_buf[i] += v;
        }
        self.lu.ftran(&mut self.rhs_buf, &mut self.w);
        for eta in &self.etas {
            let t = self.w[eta.pos] / eta.pivot;
            self.w[eta.pos] = t;
            if t != 0.0 {
                for &(i, v) in &eta.entries {
                    self.w[i] -= v * t;
                }
            }
        }
    }

    /// `y = B^-T c_B` into `self.y` (internal row space).
    fn btran_cb(&mut self, phase: u8) {
        for pos in 0..self.m {
            self.cb[pos] = self.cost(self.basis[pos], phase);
        }
        for eta in self.etas.iter().rev() {
            let mut acc = self.cb[eta.pos];
            for &(i, v) in &eta.entries {
                acc -= v * self.cb[i];
            }
            self.cb[eta.pos] = acc / eta.pivot;
        }
        self.lu.btran(&self.cb, &mut self.y, &mut self.scratch);
    }

    /// Rebuilds the factorization from the true rhs. With `clamp`, basic
    /// values that come out slightly negative mid-solve (residue of the
    /// anti-degeneracy noise) are floored at zero; the final pass runs
    /// unclamped and repairs them properly.
    fn refactor(&mut self, clamp: bool) -> Result<()> {
        let cols: Vec<Vec<(usize, f64)>> = self
            .basis
            .iter()
            .map(|&var| match var {
                BasisVar::Structural(j) => self.cols[j].clone(),
                BasisVar::Artificial(i) => vec![(i, 1.0)],
            })
            .collect();
        self.lu = LuFactors::factorize(self.m, &cols, &mut self.scratch)?;
        self.etas.clear();
        self.rhs_buf.copy_from_slice(&self.b);
        let mut fresh = std::mem::take(&mut self.x);
        self.lu.ftran(&mut self.rhs_buf, &mut fresh);
        if clamp {
            for v in fresh.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        self.x = fresh;
        Ok(())
    }

    /// Nudges degenerate basic values upward to break ratio-test ties.
    /// Phase 2 leaves artificial slots untouched (they must stay at zero).
    fn perturb(&mut self, phase: u8) {
        use rand::Rng;
        for pos in 0..self.m {
            if self.x[pos] >= 1e-9 {
                continue;
            }
            self.x[pos] = self.x[pos].max(0.0);
            if phase == 2 && matches!(self.basis[pos], BasisVar::Artificial(_)) {
                continue;
            }
            self.x[pos] += PERTURB_SCALE * (0.5 + self.rng.gen::<f64>());
        }
        self.perturbed = true;
    }

    fn price(&self, phase: u8, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            if self.pos_of[j] != usize::MAX {
                continue;
            }
            let cj = if phase == 1 { 0.0 } else { self.c[j] };
            let mut d = cj;
            for &(i, v) in &self.cols[j] {
                d -= v * self.y[i];
            }
            if d < -self.opts.opt_tol {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// Minimum-ratio test over `w`; in phase 2 a basic artificial blocks at
    /// |w| so it is driven out (at ratio 0) instead of going positive.
    fn ratio_test(&self, phase: u8) -> Option<(usize, f64)> {
        for tol in [RATIO_TOL, RATIO_TOL_LAST] {
            let mut pick: Option<(usize, f64, bool, f64)> = None;
            for pos in 0..self.m {
                let wv = self.w[pos];
                let art = matches!(self.basis[pos], BasisVar::Artificial(_));
                let denom = if phase == 2 && art { wv.abs() } else { wv };
                if denom <= tol {
                    continue;
                }
                let ratio = self.x[pos].max(0.0) / denom;
                let better = match pick {
                    None => true,
                    Some((_, r, a, d)) => {
                        ratio < r - 1e-10
                            || (ratio < r + 1e-10
                                && ((art && !a) || (art == a && denom > d)))
                    }
                };
                if better {
                    pick = Some((pos, ratio, art, denom));
                }
            }
            if let Some((pos, ratio, _, _)) = pick {
                return Some((pos, ratio));
            }
        }
        None
    }

    fn pivot(&mut self, enter: usize, leave_pos: usize, theta: f64) {
        let pivot_val = self.w[leave_pos];
        let mut entries = Vec::new();
        for pos in 0..self.m {
            let wv = self.w[pos];
            if wv != 0.0 {
                self.x[pos] -= theta * wv;
                if self.x[pos].abs() < 1e-12 {
                    self.x[pos] = 0.0;
                }
                if pos != leave_pos && wv.abs() > 1e-12 {
                    entries.push((pos, wv));
                }
            }
        }
        self.x[leave_pos] = theta;
        if let BasisVar::Structural(k) = self.basis[leave_pos] {
            self.pos_of[k] = usize::MAX;
        }
        self.basis[leave_pos] = BasisVar::Structural(enter);
        self.pos_of[enter] = leave_pos;
        self.etas.push(Eta { pos: leave_pos, pivot: pivot_val, entries });
    }

    fn emit_integral_vertex(&mut self) {
        let mut basic = Vec::new();
        for pos in 0..self.m {
            let v = self.x[pos];
            if (v - v.round()).abs() > INTEGRALITY_TOL {
                return;
            }
            if v > 0.5 {
                if let BasisVar::Structural(j) = self.basis[pos] {
                    basic.push((j, v));
                }
            }
        }
        self.observer.on_integral_vertex(&basic);
    }

    fn run_phase(&mut self, phase: u8) -> Result<PhaseEnd> {
        let mut bland = false;
        let mut degenerate = 0u32;
        let mut stalled = 0u32;
        let mut perturbations = 0u32;
        loop {
            if self.iterations >= self.opts.max_iters {
                return Ok(PhaseEnd::IterationLimit);
            }
            if phase == 2 {
                self.emit_integral_vertex();
            }
            self.btran_cb(phase);
            if phase == 2 && self.observer.wants_duals() {
                let corrected: Vec<f64> = (0..self.m)
                    .map(|i| self.y[i] * self.sign[i])
                    .collect();
                self.observer.on_duals(&corrected);
            }
            let Some(enter) = self.price(phase, bland) else {
                return Ok(PhaseEnd::Optimal);
            };
            self.ftran_col(enter);
            let Some((leave_pos, theta)) = self.ratio_test(phase) else {
                return Ok(PhaseEnd::Unbounded);
            };
            self.pivot(enter, leave_pos, theta);
            self.iterations += 1;
            if theta <= 1e-10 {
                degenerate += 1;
                stalled = stalled.max(degenerate);
                // once a phase has proven tie-prone, re-arm quickly
                let trigger = if perturbations == 0 {
                    PERTURB_TRIGGER
                } else {
                    2 * DEGENERATE_LIMIT
                };
                if degenerate >= trigger && perturbations < PERTURB_LIMIT {
                    perturbations += 1;
                    self.perturb(phase);
                    degenerate = 0;
                    bland = false;
                } else if degenerate >= DEGENERATE_LIMIT {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
            if self.etas.len() >= self.opts.refactor_interval {
                self.refactor(false)?;
                if self.perturbed && stalled >= DEGENERATE_LIMIT {
                    // still tie-prone: keep the noise alive on fresh values
                    self.perturb(phase);
                } else {
                    self.perturbed = false;
                }
                stalled = 0;
            }
            if self.iterations.is_multiple_of(1000) {
                let obj: f64 = (0..self.m)
                    .map(|pos| self.cost(self.basis[pos], phase) * self.x[pos])
                    .sum();
                log::debug!(
                    "phase {phase} iter {} obj {obj:.6} etas {}",
                    self.iterations,
                    self.etas.len()
                );
            }
        }
    }

    /// Dual-simplex repair after the anti-degeneracy noise is removed: the
    /// basis is dual feasible (reduced costs were nonnegative at phase-2
    /// optimality), so pivoting negative basic values out restores primal
    /// feasibility without losing optimality.
    fn cleanup_feasibility(&mut self) -> Result<()> {
        let mut steps = 0u64;
        loop {
            let (leave_pos, worst) = (0..self.m)
                .map(|pos| (pos, self.x[pos]))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty basis");
            if worst >= -self.opts.feas_tol {
                return Ok(());
            }
            steps += 1;
            if steps > CLEANUP_CAP {
                return Err(Error::NumericalFailure(format!(
                    "feasibility cleanup did not converge (residual {worst:.3e})"
                )));
            }
            // duals for reduced costs
            self.btran_cb(2);
            let d: Vec<f64> = (0..self.n)
                .map(|j| {
                    if self.pos_of[j] != usize::MAX {
                        return f64::INFINITY; // basic: not a candidate
                    }
                    let mut d = self.c[j];
                    for &(i, v) in &self.cols[j] {
                        d -= v * self.y[i];
                    }
                    d
                })
                .collect();
            // row of B^-1 A at the leaving slot
            let mut unit = vec![0.0; self.m];
            unit[leave_pos] = 1.0;
            for eta in self.etas.iter().rev() {
                let mut acc = unit[eta.pos];
                for &(i, v) in &eta.entries {
                    acc -= v * unit[i];
                }
                unit[eta.pos] = acc / eta.pivot;
            }
            let mut rho = vec![0.0; self.m];
            self.lu.btran(&unit, &mut rho, &mut self.scratch);
            let mut enter: Option<(usize, f64, f64)> = None; // (j, ratio, |alpha|)
            for (j, dj) in d.iter().enumerate().take(self.n) {
                if self.pos_of[j] != usize::MAX {
                    continue;
                }
                let mut alpha = 0.0;
                for &(i, v) in &self.cols[j] {
                    alpha += v * rho[i];
                }
                if alpha < -RATIO_TOL {
                    let ratio = dj.max(0.0) / -alpha;
                    let better = match enter {
                        None => true,
                        Some((_, r, a)) => {
                            ratio < r - 1e-10 || (ratio < r + 1e-10 && -alpha > a)
                        }
                    };
                    if better {
                        enter = Some((j, ratio, -alpha));
                    }
                }
            }
            let Some((enter, _, _)) = enter else {
                return Err(Error::NumericalFailure(
                    "feasibility cleanup found no entering column".to_string(),
                ));
            };
            self.ftran_col(enter);
            if self.w[leave_pos].abs() < RATIO_TOL_LAST {
                return Err(Error::NumericalFailure(
                    "feasibility cleanup hit a vanishing pivot".to_string(),
                ));
            }
            let theta = self.x[leave_pos] / self.w[leave_pos];
            self.pivot(enter, leave_pos, theta);
            self.iterations += 1;
            if self.etas.len() >= self.opts.refactor_interval {
                self.refactor(false)?;
            }
        }
    }

    fn phase1_residual(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.x)
            .filter(|(v, _)| matches!(v, BasisVar::Artificial(_)))
            .map(|(_, &x)| x.max(0.0))
            .sum()
    }

    fn extract(&mut self, status: SolveStatus) -> StdSolution {
        let mut x = vec![0.0; self.n];
        for pos in 0..self.m {
            if let BasisVar::Structural(j) = self.basis[pos] {
                x[j] = self.x[pos];
            }
        }
        self.btran_cb(2);
        let duals: Vec<f64> = (0..self.m).map(|i| self.y[i] * self.sign[i]).collect();
        let objective = self.c.iter().zip(&x).map(|(&c, &v)| c * v).sum();
        StdSolution {
            status,
            x,
            objective,
            iterations: self.iterations,
            duals,
            basis: self.basis.clone(),
        }
    }
}

/// Solves an equality-form LP with the two-phase revised simplex.
pub fn solve_standard<O: IterateObserver>(
    lp: &StandardLp,
    opts: &SolverOptions,
    observer: &mut O,
) -> Result<StdSolution> {
    for (j, col) in lp.cols.iter().enumerate() {
        for &(i, _) in col {
            if i >= lp.m {
                return Err(Error::Index(format!("column {j} touches row {i} >= {}", lp.m)));
            }
        }
    }
    let mut core = Core::new(lp, opts, observer)?;

    match core.run_phase(1)? {
        PhaseEnd::IterationLimit => return Ok(core.extract(SolveStatus::IterationLimit)),
        // A phase-1 ray cannot exist: the artificial objective is bounded
        // below by zero. Treat it as numerical breakdown.
        PhaseEnd::Unbounded => {
            return Err(Error::NumericalFailure(
                "phase 1 reported an unbounded direction".to_string(),
            ))
        }
        PhaseEnd::Optimal => {}
    }
    if core.perturbed {
        // measure phase-1 infeasibility on true values, not on the noise
        core.refactor(false)?;
        core.perturbed = false;
    }
    if core.phase1_residual() > 1e-7 {
        let mut sol = core.extract(SolveStatus::Infeasible);
        sol.duals.fill(0.0);
        return Ok(sol);
    }
    // Residual artificials stay basic at zero, pinned by the ratio test.
    for pos in 0..core.m {
        if matches!(core.basis[pos], BasisVar::Artificial(_)) {
            core.x[pos] = 0.0;
        }
    }

    let end = core.run_phase(2)?;
    let status = match end {
        PhaseEnd::Optimal => SolveStatus::Optimal,
        PhaseEnd::Unbounded => SolveStatus::Unbounded,
        PhaseEnd::IterationLimit => SolveStatus::IterationLimit,
    };
    if matches!(status, SolveStatus::Optimal) {
        // strip any remaining noise and repair the feasibility it masked
        core.refactor(false)?;
        core.perturbed = false;
        core.cleanup_feasibility()?;
        core.emit_integral_vertex();
        if core.observer.wants_duals() {
            core.btran_cb(2);
            let corrected: Vec<f64> =
                (0..core.m).map(|i| core.y[i] * core.sign[i]).collect();
            core.observer.on_duals(&corrected);
        }
    }
    Ok(core.extract(status))
}

/// The model as-is: one standard-form column per model column.
pub fn model_standard_form(model: &SparseLpModel) -> StandardLp {
    let m = model.n_rows();
    let n = model.n_cols();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut b = Vec::with_capacity(m);
    for (i, row) in model.rows().iter().enumerate() {
        b.push(row.rhs);
        for (&c, &v) in row.cols.iter().zip(&row.coefs) {
            cols[c as usize].push((i, v));
        }
    }
    StandardLp { m, n, cols, b, c: model.objective().to_vec() }
}

/// The explicit standard-form dual: split row duals `pi = p - q` plus one
/// slack per model column, `A^T p - A^T q + s = c`, minimizing `-b.(p - q)`.
/// Columns are laid out as the p block, the q block, then the slack block.
pub fn dual_standard_form(model: &SparseLpModel) -> StandardLp {
    let mp = model.n_rows();
    let np = model.n_cols();
    let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(2 * mp + np);
    let mut c = Vec::with_capacity(2 * mp + np);
    for row in model.rows() {
        cols.push(
            row.cols.iter().zip(&row.coefs).map(|(&j, &v)| (j as usize, v)).collect(),
        );
        c.push(-row.rhs);
    }
    for row in model.rows() {
        cols.push(
            row.cols.iter().zip(&row.coefs).map(|(&j, &v)| (j as usize, -v)).collect(),
        );
        c.push(row.rhs);
    }
    for j in 0..np {
        cols.push(vec![(j, 1.0)]);
        c.push(0.0);
    }
    StandardLp { m: np, n: 2 * mp + np, cols, b: model.objective().to_vec(), c }
}

/// Counts distinct tours decoded from integral primal iterates.
struct TourCounter<'s> {
    space: &'s VariableSpace,
    seen: HashSet<Vec<City>>,
}

impl<'s> TourCounter<'s> {
    fn record_diag_support(&mut self, diag: &[(u32, f64)]) {
        let mut arcs = Vec::new();
        for &(col, _) in diag {
            if let ColumnKey::Y(k) = self.space.key_of(col) {
                if k.a == k.b {
                    arcs.push(k.a);
                }
            }
        }
        if arcs.len() != self.space.stages() {
            return;
        }
        arcs.sort_by_key(|a| a.r);
        if let Ok(tour) = tour_from_stage_arcs(self.space.n(), &arcs) {
            self.seen.insert(tour.order().to_vec());
        }
    }
}

impl IterateObserver for TourCounter<'_> {
    fn on_integral_vertex(&mut self, basic: &[(usize, f64)]) {
        let diag: Vec<(u32, f64)> =
            basic.iter().map(|&(j, v)| (j as u32, v)).collect();
        self.record_diag_support(&diag);
    }
}

/// Counts distinct tours decoded from integral row-dual iterates of the
/// dual-form solve (the row duals of the dual are primal candidates).
struct DualVertexCounter<'s> {
    inner: TourCounter<'s>,
}

impl IterateObserver for DualVertexCounter<'_> {
    fn wants_duals(&self) -> bool {
        true
    }

    fn on_duals(&mut self, y: &[f64]) {
        let mut diag = Vec::new();
        for (j, &mu) in y.iter().enumerate() {
            let v = -mu;
            if (v - v.round()).abs() > INTEGRALITY_TOL {
                return;
            }
            if v > 0.5 {
                diag.push((j as u32, v));
            }
        }
        self.inner.record_diag_support(&diag);
    }
}

/// Solves the model by pivoting on its own columns.
pub fn solve_primal(model: &SparseLpModel, opts: &SolverOptions) -> Result<LpSolution> {
    let lp = model_standard_form(model);
    let mut counter = TourCounter { space: model.space(), seen: HashSet::new() };
    let std = solve_standard(&lp, opts, &mut counter)?;
    let basis = structural_set(&std.basis);
    Ok(LpSolution {
        status: std.status,
        form: LpForm::Primal,
        x: std.x,
        objective: std.objective,
        iterations: std.iterations,
        duals: std.duals,
        basis,
        row_basis: std.basis,
        tours_examined: counter.seen.len(),
    })
}

/// Solves the model through its explicit dual. The dual's row duals are the
/// primal column values (negated); its p/q split recovers the model's row
/// duals.
pub fn solve_dual(model: &SparseLpModel, opts: &SolverOptions) -> Result<LpSolution> {
    let lp = dual_standard_form(model);
    let mut counter = DualVertexCounter {
        inner: TourCounter { space: model.space(), seen: HashSet::new() },
    };
    let std = solve_standard(&lp, opts, &mut counter)?;
    let mp = model.n_rows();
    let duals: Vec<f64> = (0..mp).map(|i| std.x[i] - std.x[mp + i]).collect();
    let x: Vec<f64> = std.duals.iter().map(|&mu| -mu).collect();
    let objective = model
        .objective()
        .iter()
        .zip(&x)
        .map(|(&c, &v)| c * v)
        .sum();
    let status = match std.status {
        SolveStatus::Optimal => SolveStatus::Optimal,
        // an unbounded dual certifies primal infeasibility and vice versa
        SolveStatus::Unbounded => SolveStatus::Infeasible,
        SolveStatus::Infeasible => SolveStatus::Unbounded,
        SolveStatus::IterationLimit => SolveStatus::IterationLimit,
    };
    let basis = structural_set(&std.basis);
    Ok(LpSolution {
        status,
        form: LpForm::Dual,
        x,
        objective,
        iterations: std.iterations,
        duals,
        basis,
        row_basis: std.basis,
        tours_examined: counter.inner.seen.len(),
    })
}

fn structural_set(row_basis: &[BasisVar]) -> Vec<usize> {
    let mut set: Vec<usize> = row_basis
        .iter()
        .filter_map(|v| match v {
            BasisVar::Structural(j) => Some(*j),
            BasisVar::Artificial(_) => None,
        })
        .collect();
    set.sort_unstable();
    set
}

/// Floating-point optimality certificate: every KKT condition measured
/// against the model's own rows and objective.
#[derive(Debug, Clone)]
pub struct OptimalityCertificate {
    /// max |A x - b|
    pub primal_residual: f64,
    /// max(0, -min x)
    pub bound_violation: f64,
    /// max(0, -min reduced cost)
    pub dual_violation: f64,
    /// max |x_j (c_j - pi.a_j)|
    pub complementary_slackness: f64,
    /// |c.x - b.pi|
    pub duality_gap: f64,
}

impl OptimalityCertificate {
    pub fn max_violation(&self) -> f64 {
        self.primal_residual
            .max(self.bound_violation)
            .max(self.dual_violation)
            .max(self.complementary_slackness)
            .max(self.duality_gap)
    }

    pub fn certified(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

/// Measures a solution/dual pair against the model.
pub fn certify_optimality(
    model: &SparseLpModel,
    sol: &LpSolution,
) -> Result<OptimalityCertificate> {
    let n = model.n_cols();
    let m = model.n_rows();
    if sol.x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sol.x.len() });
    }
    if sol.duals.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: sol.duals.len() });
    }
    let mut primal_residual: f64 = 0.0;
    let mut b_dot_pi = 0.0;
    let mut at_pi = vec![0.0; n];
    for (i, row) in model.rows().iter().enumerate() {
        let pi = sol.duals[i];
        b_dot_pi += row.rhs * pi;
        let mut acc = -row.rhs;
        for (&c, &v) in row.cols.iter().zip(&row.coefs) {
            acc += v * sol.x[c as usize];
            at_pi[c as usize] += v * pi;
        }
        primal_residual = primal_residual.max(acc.abs());
    }
    let mut bound_violation: f64 = 0.0;
    let mut dual_violation: f64 = 0.0;
    let mut comp_slack: f64 = 0.0;
    let mut c_dot_x = 0.0;
    for (j, &xj) in sol.x.iter().enumerate().take(n) {
        bound_violation = bound_violation.max(-xj);
        c_dot_x += model.objective()[j] * xj;
        let d = model.objective()[j] - at_pi[j];
        dual_violation = dual_violation.max(-d);
        comp_slack = comp_slack.max((xj * d).abs());
    }
    Ok(OptimalityCertificate {
        primal_residual,
        bound_violation: bound_violation.max(0.0),
        dual_violation: dual_violation.max(0.0),
        complementary_slackness: comp_slack,
        duality_gap: (c_dot_x - b_dot_pi).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_extreme, generate_random, ExtremeKind};
    use crate::model::build_model;
    use crate::oracle::brute_force_opt;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn small_lp_with_slacks() {
        // min -x1 - 2 x2  s.t.  x1 + x2 + s1 = 4,  x2 + s2 = 3
        let lp = StandardLp {
            m: 2,
            n: 4,
            cols: vec![
                vec![(0, 1.0)],
                vec![(0, 1.0), (1, 1.0)],
                vec![(0, 1.0)],
                vec![(1, 1.0)],
            ],
            b: vec![4.0, 3.0],
            c: vec![-1.0, -2.0, 0.0, 0.0],
        };
        let sol = solve_standard(&lp, &opts(), &mut NoObserver).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - (-7.0)).abs() < 1e-9);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.x[1] - 3.0).abs() < 1e-9);
        // duals: y1 = -1 (binding row 1 via x1), y2 = -1
        assert!((sol.duals[0] + 1.0).abs() < 1e-9);
        assert!((sol.duals[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_is_flipped() {
        // -x1 = -3 with cost 2: x1 = 3, dual of the original row is -2
        let lp = StandardLp {
            m: 1,
            n: 1,
            cols: vec![vec![(0, -1.0)]],
            b: vec![-3.0],
            c: vec![2.0],
        };
        let sol = solve_standard(&lp, &opts(), &mut NoObserver).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
        assert!((sol.duals[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_detected() {
        // x1 = 1 and x1 = 2
        let lp = StandardLp {
            m: 2,
            n: 1,
            cols: vec![vec![(0, 1.0), (1, 1.0)]],
            b: vec![1.0, 2.0],
            c: vec![0.0],
        };
        let sol = solve_standard(&lp, &opts(), &mut NoObserver).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        // min -x1 s.t. x1 - x2 = 0: ray x1 = x2 = t
        let lp = StandardLp {
            m: 1,
            n: 2,
            cols: vec![vec![(0, 1.0)], vec![(0, -1.0)]],
            b: vec![0.0],
            c: vec![-1.0, 0.0],
        };
        let sol = solve_standard(&lp, &opts(), &mut NoObserver).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn model_n5_matches_oracle_both_forms() {
        let inst = generate_random(5, 42, false).unwrap();
        let model = build_model(&inst).unwrap();
        let oracle = brute_force_opt(&inst).unwrap();

        let p = solve_primal(&model, &opts()).unwrap();
        assert_eq!(p.status, SolveStatus::Optimal);
        assert!((p.objective - oracle.best_cost).abs() < 1e-6, "primal {}", p.objective);
        let cert = certify_optimality(&model, &p).unwrap();
        assert!(cert.certified(1e-8), "{cert:?}");
        assert!(p.tours_examined >= 1);

        let d = solve_dual(&model, &opts()).unwrap();
        assert_eq!(d.status, SolveStatus::Optimal);
        assert!((d.objective - oracle.best_cost).abs() < 1e-6, "dual {}", d.objective);
        assert!((d.objective - p.objective).abs() < 1e-8);
        let cert = certify_optimality(&model, &d).unwrap();
        assert!(cert.certified(1e-8), "{cert:?}");
    }

    #[test]
    fn extreme_n5_instances_solve_to_oracle() {
        for kind in [ExtremeKind::X71, ExtremeKind::X72, ExtremeKind::X73] {
            let inst = generate_extreme(kind, 5).unwrap();
            let model = build_model(&inst).unwrap();
            let oracle = brute_force_opt(&inst).unwrap();
            let sol = solve_primal(&model, &opts()).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal, "{}", inst.label());
            assert!(
                (sol.objective - oracle.best_cost).abs() < 1e-6,
                "{}: lp {} oracle {}",
                inst.label(),
                sol.objective,
                oracle.best_cost
            );
        }
    }

    #[test]
    fn lp_form_parse() {
        assert_eq!("primal".parse::<LpForm>().unwrap(), LpForm::Primal);
        assert_eq!("Dual".parse::<LpForm>().unwrap(), LpForm::Dual);
        assert!("simplex".parse::<LpForm>().is_err());
    }
}
