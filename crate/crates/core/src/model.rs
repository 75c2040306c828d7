//! Assembly of the sparse equality-constrained LP over the admissible y/z
//! variable space, the tour-to-vector lift, feasibility residuals and the
//! objective.
//!
//! Every constraint row is an equality with coefficients in {+1, -1}; the
//! right-hand side is 1 for the unit-flow row and 0 elsewhere. Because of
//! this, residuals of 0/1 vectors evaluate exactly in f64 arithmetic: all
//! intermediate sums are small integers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::indexing::{pair_admissible, triple_admissible, Arc, VariableSpace, YKey, ZKey};
use crate::instance::{City, Stage, Tour, TspInstance};

/// Constraint families of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Family {
    /// Unit flow out of stage 1.
    FlowInit,
    /// Later-stage flow equals the stage-1 flow propagating onto it.
    FlowCons,
    /// A flow pair distributes over third arcs at a later stage.
    LayerA,
    /// A flow pair distributes over interior arcs between its stages.
    LayerB,
    /// A flow pair distributes over originating arcs at an earlier stage.
    LayerC,
    /// Node conservation of each arc's flow layer, in y.
    ConnY,
    /// Node conservation in z, sweeping the arc before the fixed pair.
    ConnZPre,
    /// Node conservation in z, sweeping the arc between the fixed pair.
    ConnZMid,
    /// Node conservation in z, sweeping the arc after the fixed pair.
    ConnZPost,
    /// Each flow pair's mass routes through every city outside the pair.
    Visit,
}

pub const FAMILIES: [Family; 10] = [
    Family::FlowInit,
    Family::FlowCons,
    Family::LayerA,
    Family::LayerB,
    Family::LayerC,
    Family::ConnY,
    Family::ConnZPre,
    Family::ConnZMid,
    Family::ConnZPost,
    Family::Visit,
];

impl Family {
    pub fn code(self) -> &'static str {
        match self {
            Family::FlowInit => "FI",
            Family::FlowCons => "FC",
            Family::LayerA => "LA",
            Family::LayerB => "LB",
            Family::LayerC => "LC",
            Family::ConnY => "CY",
            Family::ConnZPre => "ZB",
            Family::ConnZMid => "ZM",
            Family::ConnZPost => "ZA",
            Family::Visit => "VI",
        }
    }
}

/// Identity of one constraint row: its family plus the free indices of that
/// row instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    FlowInit,
    FlowCons(Arc),
    /// (pair, summed later stage)
    LayerA(Arc, Arc, Stage),
    /// (pair, summed interior stage)
    LayerB(Arc, Arc, Stage),
    /// (pair, summed earlier stage)
    LayerC(Arc, Arc, Stage),
    /// (layer arc, stage of the node, city of the node)
    ConnY(Arc, Stage, City),
    ConnZPre(Arc, Arc, Stage, City),
    ConnZMid(Arc, Arc, Stage, City),
    ConnZPost(Arc, Arc, Stage, City),
    /// (pair, visited city)
    Visit(Arc, Arc, City),
}

impl RowTag {
    pub fn family(&self) -> Family {
        match self {
            RowTag::FlowInit => Family::FlowInit,
            RowTag::FlowCons(..) => Family::FlowCons,
            RowTag::LayerA(..) => Family::LayerA,
            RowTag::LayerB(..) => Family::LayerB,
            RowTag::LayerC(..) => Family::LayerC,
            RowTag::ConnY(..) => Family::ConnY,
            RowTag::ConnZPre(..) => Family::ConnZPre,
            RowTag::ConnZMid(..) => Family::ConnZMid,
            RowTag::ConnZPost(..) => Family::ConnZPost,
            RowTag::Visit(..) => Family::Visit,
        }
    }

    /// Stable row name for exports: family code plus decimal indices.
    pub fn name(&self) -> String {
        fn arc(a: &Arc) -> String {
            format!("{}_{}_{}", a.i, a.r, a.j)
        }
        match self {
            RowTag::FlowInit => "FI".to_string(),
            RowTag::FlowCons(a) => format!("FC_{}", arc(a)),
            RowTag::LayerA(a, b, s) => format!("LA_{}_{}_{}", arc(a), arc(b), s),
            RowTag::LayerB(a, b, s) => format!("LB_{}_{}_{}", arc(a), arc(b), s),
            RowTag::LayerC(a, b, s) => format!("LC_{}_{}_{}", arc(a), arc(b), s),
            RowTag::ConnY(a, s, t) => format!("CY_{}_{}_{}", arc(a), s, t),
            RowTag::ConnZPre(a, b, p, u) => format!("ZB_{}_{}_{}_{}", arc(a), arc(b), p, u),
            RowTag::ConnZMid(a, b, p, u) => format!("ZM_{}_{}_{}_{}", arc(a), arc(b), p, u),
            RowTag::ConnZPost(a, b, p, u) => format!("ZA_{}_{}_{}_{}", arc(a), arc(b), p, u),
            RowTag::Visit(a, b, u) => format!("VI_{}_{}_{}", arc(a), arc(b), u),
        }
    }
}

/// One equality row: sorted sparse coefficients and a right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub tag: RowTag,
    pub cols: Vec<u32>,
    pub coefs: Vec<f64>,
    pub rhs: f64,
}

/// The assembled equality-constrained LP.
#[derive(Debug, Clone)]
pub struct SparseLpModel {
    space: VariableSpace,
    rows: Vec<Row>,
    objective: Vec<f64>,
    label: String,
}

/// Dense solution values over the model's columns.
pub type SolutionVector = Vec<f64>;

struct RowBuf {
    entries: Vec<(u32, f64)>,
}

impl RowBuf {
    fn new() -> Self {
        Self { entries: Vec::new() }
    }

    fn push(&mut self, col: u32, coef: f64) {
        self.entries.push((col, coef));
    }

    fn take(&mut self, tag: RowTag, rhs: f64) -> Row {
        self.entries.sort_unstable_by_key(|&(c, _)| c);
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut coefs = Vec::with_capacity(self.entries.len());
        for &(c, v) in &self.entries {
            if cols.last() == Some(&c) {
                *coefs.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                coefs.push(v);
            }
        }
        self.entries.clear();
        Row { tag, cols, coefs, rhs }
    }
}

impl SparseLpModel {
    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.space.n_cols()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.cols.len()).sum()
    }

    /// Per-family row counts and size figures, for harness reports.
    pub fn summary(&self) -> ModelSummary {
        let mut per_family: Vec<(Family, usize, usize)> =
            FAMILIES.iter().map(|&f| (f, 0, 0)).collect();
        for row in &self.rows {
            let slot = per_family
                .iter_mut()
                .find(|(f, _, _)| *f == row.tag.family())
                .unwrap();
            slot.1 += 1;
            slot.2 += row.cols.len();
        }
        ModelSummary {
            format_version: 1,
            label: self.label.clone(),
            n: self.space.n(),
            n_y: self.space.n_y(),
            n_z: self.space.n_z(),
            n_cols: self.n_cols(),
            n_rows: self.n_rows(),
            nnz: self.nnz(),
            rows_per_family: per_family
                .into_iter()
                .map(|(f, rows, nnz)| FamilyCount { family: f, rows, nnz })
                .collect(),
        }
    }
}

/// JSON-serializable model size report.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub format_version: u32,
    pub label: String,
    pub n: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub n_cols: usize,
    pub n_rows: usize,
    pub nnz: usize,
    pub rows_per_family: Vec<FamilyCount>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyCount {
    pub family: Family,
    pub rows: usize,
    pub nnz: usize,
}

/// Builds the LP for an instance: objective on the diagonal y columns,
/// equality rows for every family, variables bounded below by zero only.
pub fn build_model(inst: &TspInstance) -> Result<SparseLpModel> {
    let n = inst.n();
    let space = VariableSpace::new(n)?;
    let stages = (n - 2) as Stage;
    let mut rows = Vec::new();
    let mut buf = RowBuf::new();

    let ycol = |a: Arc, b: Arc| -> u32 {
        space
            .y_column(a, b)
            .unwrap_or_else(|| panic!("y key ({a:?},{b:?}) eliminated but referenced"))
    };
    let zcol = |a: Arc, b: Arc, c: Arc| -> u32 {
        space
            .z_column(a, b, c)
            .unwrap_or_else(|| panic!("z key ({a:?},{b:?},{c:?}) eliminated but referenced"))
    };

    // Unit flow out of stage 1.
    for &a in space.arcs_at(1) {
        buf.push(ycol(a, a), 1.0);
    }
    rows.push(buf.take(RowTag::FlowInit, 1.0));

    // Later-stage flow equals stage-1 flow propagating onto it.
    for &b in space.arcs().iter().filter(|b| b.r >= 2) {
        buf.push(ycol(b, b), 1.0);
        for &a in space.arcs_at(1) {
            if pair_admissible(a, b) {
                buf.push(ycol(a, b), -1.0);
            }
        }
        rows.push(buf.take(RowTag::FlowCons(b), 0.0));
    }

    // Layer distribution: pair mass equals the z mass over a swept stage.
    for &YKey { a, b } in space.y_keys().iter().filter(|k| k.a.r < k.b.r) {
        // ... over a later third arc
        for s in (b.r + 1)..=stages {
            buf.push(ycol(a, b), 1.0);
            for &c in space.arcs_at(s) {
                if pair_admissible(b, c) && pair_admissible(a, c) {
                    buf.push(zcol(a, b, c), -1.0);
                }
            }
            rows.push(buf.take(RowTag::LayerA(a, b, s), 0.0));
        }
        // ... over an interior arc
        for p in (a.r + 1)..b.r {
            buf.push(ycol(a, b), 1.0);
            for &m in space.arcs_at(p) {
                if pair_admissible(a, m) && pair_admissible(m, b) {
                    buf.push(zcol(a, m, b), -1.0);
                }
            }
            rows.push(buf.take(RowTag::LayerB(a, b, p), 0.0));
        }
        // ... over an earlier originating arc
        for r in 1..a.r {
            buf.push(ycol(a, b), 1.0);
            for &e in space.arcs_at(r) {
                if pair_admissible(e, a) && pair_admissible(e, b) {
                    buf.push(zcol(e, a, b), -1.0);
                }
            }
            rows.push(buf.take(RowTag::LayerC(a, b, r), 0.0));
        }
    }

    // Node conservation of each arc's flow layer: in-flow at node (t, s+1)
    // equals out-flow, with the diagonal acting as the layer's source.
    for &a in space.arcs().iter().filter(|a| a.r < stages) {
        for s in a.r..=(stages - 1) {
            for t in 2..=n as City {
                if s == a.r {
                    if t == a.j {
                        buf.push(ycol(a, a), 1.0);
                    }
                } else {
                    for &e in space.arcs_at(s).iter().filter(|e| e.j == t) {
                        if pair_admissible(a, e) {
                            buf.push(ycol(a, e), 1.0);
                        }
                    }
                }
                for &e in space.arcs_at(s + 1).iter().filter(|e| e.i == t) {
                    if pair_admissible(a, e) {
                        buf.push(ycol(a, e), -1.0);
                    }
                }
                let row = buf.take(RowTag::ConnY(a, s, t), 0.0);
                if !row.cols.is_empty() {
                    rows.push(row);
                }
            }
        }
    }

    // Node conservation in z with two arcs of the triple fixed.
    for &YKey { a, b } in space.y_keys().iter().filter(|k| k.a.r < k.b.r) {
        // sweep the arc before the fixed pair
        if a.r >= 3 {
            for p in 1..=(a.r - 2) {
                for u in 2..=n as City {
                    for &e in space.arcs_at(p).iter().filter(|e| e.j == u) {
                        if triple_admissible(e, a, b) {
                            buf.push(zcol(e, a, b), 1.0);
                        }
                    }
                    for &e in space.arcs_at(p + 1).iter().filter(|e| e.i == u) {
                        if triple_admissible(e, a, b) {
                            buf.push(zcol(e, a, b), -1.0);
                        }
                    }
                    let row = buf.take(RowTag::ConnZPre(a, b, p, u), 0.0);
                    if !row.cols.is_empty() {
                        rows.push(row);
                    }
                }
            }
        }
        // sweep the arc between the fixed pair
        if b.r >= a.r + 3 {
            for p in (a.r + 1)..=(b.r - 2) {
                for u in 2..=n as City {
                    for &e in space.arcs_at(p).iter().filter(|e| e.j == u) {
                        if triple_admissible(a, e, b) {
                            buf.push(zcol(a, e, b), 1.0);
                        }
                    }
                    for &e in space.arcs_at(p + 1).iter().filter(|e| e.i == u) {
                        if triple_admissible(a, e, b) {
                            buf.push(zcol(a, e, b), -1.0);
                        }
                    }
                    let row = buf.take(RowTag::ConnZMid(a, b, p, u), 0.0);
                    if !row.cols.is_empty() {
                        rows.push(row);
                    }
                }
            }
        }
        // sweep the arc after the fixed pair
        if b.r + 2 <= stages {
            for p in (b.r + 1)..=(stages - 1) {
                for u in 2..=n as City {
                    for &e in space.arcs_at(p).iter().filter(|e| e.j == u) {
                        if triple_admissible(a, b, e) {
                            buf.push(zcol(a, b, e), 1.0);
                        }
                    }
                    for &e in space.arcs_at(p + 1).iter().filter(|e| e.i == u) {
                        if triple_admissible(a, b, e) {
                            buf.push(zcol(a, b, e), -1.0);
                        }
                    }
                    let row = buf.take(RowTag::ConnZPost(a, b, p, u), 0.0);
                    if !row.cols.is_empty() {
                        rows.push(row);
                    }
                }
            }
        }
    }

    // Visit accounting: a pair's mass routes through every city outside the
    // pair. The visiting city is counted as the tail of the arc at its
    // visiting stage, or as the head of the final-stage arc when the visit
    // happens at the last position.
    for &YKey { a, b } in space.y_keys().iter().filter(|k| k.a.r < k.b.r) {
        let used = [a.i, a.j, b.i, b.j];
        for u in 2..=n as City {
            if used.contains(&u) {
                continue;
            }
            buf.push(ycol(a, b), 1.0);
            for p in 1..a.r {
                for &e in space.arcs_at(p).iter().filter(|e| e.i == u) {
                    if triple_admissible(e, a, b) {
                        buf.push(zcol(e, a, b), -1.0);
                    }
                }
            }
            for p in (a.r + 1)..b.r {
                for &e in space.arcs_at(p).iter().filter(|e| e.i == u) {
                    if triple_admissible(a, e, b) {
                        buf.push(zcol(a, e, b), -1.0);
                    }
                }
            }
            for p in (b.r + 1)..=stages {
                for &e in space.arcs_at(p).iter().filter(|e| e.i == u) {
                    if triple_admissible(a, b, e) {
                        buf.push(zcol(a, b, e), -1.0);
                    }
                }
            }
            for &e in space.arcs_at(stages).iter().filter(|e| e.j == u) {
                if triple_admissible(a, b, e) {
                    buf.push(zcol(a, b, e), -1.0);
                }
            }
            rows.push(buf.take(RowTag::Visit(a, b, u), 0.0));
        }
    }

    // Objective, supported on the diagonal y columns only.
    let mut objective = vec![0.0; space.n_cols()];
    for (idx, &a) in space.arcs().iter().enumerate() {
        objective[space.diag_column_of(idx) as usize] = inst.stage_cost(a.i, a.r, a.j)?;
    }

    Ok(SparseLpModel { space, rows, objective, label: inst.label().to_string() })
}

/// Model dimensions for a given city count (costs do not affect the shape).
pub fn dimensions(n: usize) -> Result<ModelSummary> {
    let inst = TspInstance::constant(n, 0.0, format!("dims-n{n}"))?;
    Ok(build_model(&inst)?.summary())
}

/// The y and z keys set to 1 by a tour's lift. Works for any `n`, without
/// materializing a `VariableSpace`.
pub fn lift_tour_keys(n: usize, tour: &Tour) -> Result<(Vec<YKey>, Vec<ZKey>)> {
    if tour.order().len() != n - 1 {
        return Err(Error::InvalidTour(format!(
            "tour visits {} cities, expected {}",
            tour.order().len() + 1,
            n
        )));
    }
    let order = tour.order();
    let path: Vec<Arc> = (0..n - 2)
        .map(|k| Arc::new(order[k], (k + 1) as Stage, order[k + 1]))
        .collect();
    let mut y = Vec::new();
    let mut z = Vec::new();
    for (ri, &a) in path.iter().enumerate() {
        for (si, &b) in path.iter().enumerate().skip(ri) {
            debug_assert!(pair_admissible(a, b));
            y.push(YKey { a, b });
            if si > ri {
                for &c in path.iter().skip(si + 1) {
                    debug_assert!(triple_admissible(a, b, c));
                    z.push(ZKey { a, b, c });
                }
            }
        }
    }
    Ok((y, z))
}

/// Dense 0/1 lift of a tour over a model's columns.
pub fn lift_tour(space: &VariableSpace, tour: &Tour) -> Result<SolutionVector> {
    let (y, z) = lift_tour_keys(space.n(), tour)?;
    let mut x = vec![0.0; space.n_cols()];
    for k in y {
        let col = space.y_column(k.a, k.b).ok_or_else(|| {
            Error::InvalidTour(format!("lifted y key {k:?} not admissible"))
        })?;
        x[col as usize] = 1.0;
    }
    for k in z {
        let col = space.z_column(k.a, k.b, k.c).ok_or_else(|| {
            Error::InvalidTour(format!("lifted z key {k:?} not admissible"))
        })?;
        x[col as usize] = 1.0;
    }
    Ok(x)
}

/// Per-family maximum absolute row residual of `rows . x - rhs`.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub families: Vec<(Family, f64, Option<RowTag>)>,
}

impl ResidualReport {
    pub fn max_abs(&self) -> f64 {
        self.families.iter().map(|&(_, r, _)| r).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<(Family, f64, RowTag)> {
        self.families
            .iter()
            .filter_map(|&(f, r, t)| t.map(|t| (f, r, t)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Row residuals of a solution vector, reported per constraint family.
/// For 0/1 vectors the arithmetic is exact (all coefficients are units).
pub fn residuals(model: &SparseLpModel, x: &[f64]) -> Result<ResidualReport> {
    if x.len() != model.n_cols() {
        return Err(Error::DimensionMismatch { expected: model.n_cols(), got: x.len() });
    }
    let mut families: Vec<(Family, f64, Option<RowTag>)> =
        FAMILIES.iter().map(|&f| (f, 0.0, None)).collect();
    for row in &model.rows {
        let mut acc = -row.rhs;
        for (&c, &v) in row.cols.iter().zip(&row.coefs) {
            acc += v * x[c as usize];
        }
        let r = acc.abs();
        let slot = families
            .iter_mut()
            .find(|(f, _, _)| *f == row.tag.family())
            .unwrap();
        if r > slot.1 || slot.2.is_none() {
            if r > slot.1 {
                slot.1 = r;
                slot.2 = Some(row.tag);
            } else if slot.2.is_none() {
                slot.2 = Some(row.tag);
            }
        }
    }
    Ok(ResidualReport { families })
}

/// Inner product of the objective with `x`.
pub fn objective_value(model: &SparseLpModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.n_cols() {
        return Err(Error::DimensionMismatch { expected: model.n_cols(), got: x.len() });
    }
    Ok(model
        .objective
        .iter()
        .zip(x)
        .filter(|(&c, _)| c != 0.0)
        .map(|(&c, &v)| c * v)
        .sum())
}

/// Maximum violation of the valid layer-mass identities: each diagonal
/// y equals its layer's total y mass at every later stage, and its total
/// z mass over every later stage pair. Checked numerically, never emitted
/// as rows.
pub fn layer_mass_residual(space: &VariableSpace, x: &[f64]) -> Result<f64> {
    if x.len() != space.n_cols() {
        return Err(Error::DimensionMismatch { expected: space.n_cols(), got: x.len() });
    }
    let stages = space.stages() as Stage;
    let mut worst: f64 = 0.0;
    for &a in space.arcs() {
        let diag = x[space.y_column(a, a).unwrap() as usize];
        for s in (a.r + 1)..=stages {
            let mass: f64 = space
                .arcs_at(s)
                .iter()
                .filter_map(|&b| space.y_column(a, b))
                .map(|c| x[c as usize])
                .sum();
            worst = worst.max((diag - mass).abs());
        }
        for s in (a.r + 1)..stages {
            for t in (s + 1)..=stages {
                let mass: f64 = space
                    .arcs_at(s)
                    .iter()
                    .flat_map(|&b| {
                        space
                            .arcs_at(t)
                            .iter()
                            .filter_map(move |&c| space.z_column(a, b, c))
                    })
                    .map(|c| x[c as usize])
                    .sum();
                worst = worst.max((diag - mass).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_extreme, generate_random, ExtremeKind};
    use crate::oracle::all_tours;

    #[test]
    fn flow_init_row_has_one_coef_per_stage1_arc() {
        let inst = TspInstance::constant(5, 0.0, "z5").unwrap();
        let model = build_model(&inst).unwrap();
        let row = &model.rows()[0];
        assert_eq!(row.tag, RowTag::FlowInit);
        assert_eq!(row.cols.len(), 12);
        assert!(row.coefs.iter().all(|&c| c == 1.0));
        assert_eq!(row.rhs, 1.0);
    }

    #[test]
    fn lifted_tours_have_zero_residual_n5() {
        let inst = generate_random(5, 3, false).unwrap();
        let model = build_model(&inst).unwrap();
        for tour in all_tours(5).unwrap() {
            let x = lift_tour(model.space(), &tour).unwrap();
            let rep = residuals(&model, &x).unwrap();
            assert_eq!(rep.max_abs(), 0.0, "tour {tour}: {:?}", rep.worst());
        }
    }

    #[test]
    fn lift_objective_equals_tour_cost() {
        for n in [5, 6] {
            let inst = generate_random(n, 17, n == 5).unwrap();
            let model = build_model(&inst).unwrap();
            for tour in all_tours(n).unwrap() {
                let x = lift_tour(model.space(), &tour).unwrap();
                assert_eq!(
                    objective_value(&model, &x).unwrap(),
                    inst.tour_cost(&tour).unwrap(),
                    "tour {tour}"
                );
            }
        }
    }

    #[test]
    fn lift_support_size() {
        let tour = Tour::new(7, vec![2, 3, 4, 5, 6, 7]).unwrap();
        let (y, z) = lift_tour_keys(7, &tour).unwrap();
        assert_eq!(y.len() + z.len(), 25); // 5 + 10 + 10
    }

    #[test]
    fn distinct_tours_lift_to_distinct_vectors() {
        let space = VariableSpace::new(5).unwrap();
        let mut seen = std::collections::HashSet::new();
        for tour in all_tours(5).unwrap() {
            let x = lift_tour(&space, &tour).unwrap();
            let sig: Vec<u32> = x
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(c, _)| c as u32)
                .collect();
            assert!(seen.insert(sig));
        }
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn convex_mix_and_perturbation_residuals() {
        let inst = generate_random(5, 9, false).unwrap();
        let model = build_model(&inst).unwrap();
        let tours: Vec<Tour> = all_tours(5).unwrap().collect();
        let xa = lift_tour(model.space(), &tours[0]).unwrap();
        let xb = lift_tour(model.space(), &tours[10]).unwrap();
        let mix: Vec<f64> =
            xa.iter().zip(&xb).map(|(&a, &b)| 0.25 * a + 0.75 * b).collect();
        assert_eq!(residuals(&model, &mix).unwrap().max_abs(), 0.0);

        // perturb one coordinate: only rows touching that column move
        let mut pert = mix.clone();
        let col = 0usize;
        pert[col] += 0.5;
        let rep = residuals(&model, &pert).unwrap();
        let touched: f64 = model
            .rows()
            .iter()
            .filter(|r| r.cols.contains(&(col as u32)))
            .map(|_| 0.5)
            .fold(0.0, f64::max);
        assert_eq!(rep.max_abs(), touched);
    }

    #[test]
    fn xtsp72_lift_objective() {
        let inst = generate_extreme(ExtremeKind::X72, 7).unwrap();
        let model = build_model(&inst).unwrap();
        let tour = Tour::new(7, vec![2, 3, 4, 5, 6, 7]).unwrap();
        let x = lift_tour(model.space(), &tour).unwrap();
        assert_eq!(objective_value(&model, &x).unwrap(), -94.0);
        let zero = vec![0.0; model.n_cols()];
        assert_eq!(objective_value(&model, &zero).unwrap(), 0.0);
    }

    #[test]
    fn layer_mass_identities_on_lifts() {
        let space = VariableSpace::new(6).unwrap();
        for tour in all_tours(6).unwrap().take(20) {
            let x = lift_tour(&space, &tour).unwrap();
            assert_eq!(layer_mass_residual(&space, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let inst = generate_random(5, 1, false).unwrap();
        let model = build_model(&inst).unwrap();
        let short = vec![0.0; 3];
        assert!(residuals(&model, &short).is_err());
        assert!(objective_value(&model, &short).is_err());
    }
}
