//! Sparse LU factorization of a simplex basis: right-looking elimination
//! with Markowitz pivot selection under threshold partial pivoting. Unit
//! columns (artificial slots) and singletons eliminate with zero fill-in,
//! and the Markowitz score keeps fill low on the overlapping structural
//! kernel that remains.

use crate::error::{Error, Result};

const DROP_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-11;
const THRESHOLD: f64 = 0.05;
/// Candidate columns examined per pivot search before settling.
const SEARCH_LIMIT: usize = 4;

/// LU factors of a square basis built from sparse columns.
pub struct LuFactors {
    m: usize,
    /// Multipliers of pivot step k, keyed by original row index; every such
    /// row is pivoted at a later step.
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Column k of U above the diagonal, indexed by earlier pivot steps.
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    /// pivot step -> original row.
    pivot_row: Vec<usize>,
    /// original row -> pivot step.
    row_pos: Vec<usize>,
    /// pivot step -> basis position of the column eliminated at that step.
    col_order: Vec<usize>,
}

/// Scratch buffers reused across solves.
pub struct LuScratch {
    steps: Vec<f64>,
}

impl LuScratch {
    pub fn new(m: usize) -> Self {
        Self { steps: vec![0.0; m] }
    }

    fn ensure(&mut self, m: usize) {
        if self.steps.len() < m {
            self.steps = vec![0.0; m];
        }
    }
}

/// Active-submatrix state during elimination.
struct Active {
    /// Row-major entries (column position, value); compacted on update.
    rows: Vec<Vec<(usize, f64)>>,
    row_count: Vec<usize>,
    col_count: Vec<usize>,
    /// Rows that may hold an entry of a column; validated lazily.
    col_rows: Vec<Vec<usize>>,
    /// Columns bucketed by active count; entries go stale when the count
    /// moves and are skipped on inspection.
    buckets: Vec<Vec<usize>>,
    row_alive: Vec<bool>,
    col_alive: Vec<bool>,
}

impl Active {
    fn rebucket(&mut self, col: usize) {
        let c = self.col_count[col];
        self.buckets[c].push(col);
    }

    fn entry(&self, row: usize, col: usize) -> Option<f64> {
        self.rows[row].iter().find(|&&(c, _)| c == col).map(|&(_, v)| v)
    }
}

impl LuFactors {
    /// Factorizes the basis whose `m` columns are given as sparse
    /// (row, value) lists.
    pub fn factorize(
        m: usize,
        cols: &[Vec<(usize, f64)>],
        scratch: &mut LuScratch,
    ) -> Result<Self> {
        assert_eq!(cols.len(), m);
        scratch.ensure(m);

        let mut act = Active {
            rows: vec![Vec::new(); m],
            row_count: vec![0; m],
            col_count: vec![0; m],
            col_rows: vec![Vec::new(); m],
            buckets: vec![Vec::new(); m + 1],
            row_alive: vec![true; m],
            col_alive: vec![true; m],
        };
        for (pos, col) in cols.iter().enumerate() {
            act.col_count[pos] = col.len();
            for &(r, v) in col {
                act.rows[r].push((pos, v));
                act.col_rows[pos].push(r);
            }
            act.rebucket(pos);
        }
        for r in 0..m {
            act.row_count[r] = act.rows[r].len();
        }

        let mut lu = LuFactors {
            m,
            l_cols: Vec::with_capacity(m),
            u_cols: vec![Vec::new(); m],
            u_diag: Vec::with_capacity(m),
            pivot_row: Vec::with_capacity(m),
            row_pos: vec![usize::MAX; m],
            col_order: Vec::with_capacity(m),
        };
        // U rows by pivot step, keyed by column position until the step of
        // every column is known.
        let mut u_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut step_of_col = vec![usize::MAX; m];

        // Dense scatter of the pivot row plus generation-stamped markers.
        let mut pivot_vals = vec![0.0; m];
        let mut pivot_mark = vec![0u32; m];
        let mut row_mark = vec![0u32; m];
        let mut pgen = 0u32;
        let mut rgen = 0u32;

        for k in 0..m {
            let (pr, pc) = Self::find_pivot(&mut act, k)?;

            // Detach the pivot row and scatter it.
            pgen += 1;
            let prow = std::mem::take(&mut act.rows[pr]);
            act.row_alive[pr] = false;
            act.col_alive[pc] = false;
            let mut piv = 0.0;
            for &(col, v) in &prow {
                if col == pc {
                    piv = v;
                } else {
                    pivot_vals[col] = v;
                    pivot_mark[col] = pgen;
                    act.col_count[col] -= 1;
                    act.rebucket(col);
                }
            }
            debug_assert!(piv.abs() >= PIVOT_TOL);

            lu.pivot_row.push(pr);
            lu.row_pos[pr] = k;
            lu.col_order.push(pc);
            step_of_col[pc] = k;
            lu.u_diag.push(piv);
            u_rows.push(prow.iter().filter(|&&(c, _)| c != pc).copied().collect());

            // Eliminate the pivot column from every remaining row.
            let mut l_col = Vec::new();
            let col_rows = std::mem::take(&mut act.col_rows[pc]);
            for row in col_rows {
                if !act.row_alive[row] {
                    continue;
                }
                let Some(val) = act.entry(row, pc) else { continue };
                let l = val / piv;
                l_col.push((row, l));

                let old = std::mem::take(&mut act.rows[row]);
                let mut new_row = Vec::with_capacity(old.len() + prow.len());
                rgen += 1;
                for &(col, v) in &old {
                    if col == pc {
                        continue;
                    }
                    let nv = if pivot_mark[col] == pgen {
                        v - l * pivot_vals[col]
                    } else {
                        v
                    };
                    row_mark[col] = rgen;
                    if nv.abs() > DROP_TOL {
                        new_row.push((col, nv));
                    } else {
                        act.col_count[col] -= 1;
                        act.rebucket(col);
                    }
                }
                // Fill-in from pivot-row columns absent in this row.
                for &(col, pv) in &prow {
                    if col == pc || row_mark[col] == rgen || pivot_mark[col] != pgen {
                        continue;
                    }
                    let nv = -l * pv;
                    if nv.abs() > DROP_TOL {
                        new_row.push((col, nv));
                        act.col_count[col] += 1;
                        act.col_rows[col].push(row);
                        act.rebucket(col);
                    }
                }
                act.row_count[row] = new_row.len();
                act.rows[row] = new_row;
            }
            lu.l_cols.push(l_col);

            // Clear the pivot-row scatter.
            for &(col, _) in &u_rows[k] {
                pivot_vals[col] = 0.0;
                pivot_mark[col] = 0;
            }
            act.col_count[pc] = 0;
        }

        // Re-key the stored U rows from column positions to pivot steps.
        for (t, row) in u_rows.into_iter().enumerate() {
            for (col, v) in row {
                let k = step_of_col[col];
                debug_assert!(k > t);
                lu.u_cols[k].push((t, v));
            }
        }
        Ok(lu)
    }

    fn find_pivot(act: &mut Active, step: usize) -> Result<(usize, usize)> {
        let m = act.rows.len();
        let mut best: Option<(usize, usize, usize, f64)> = None; // (pr, pc, score, |val|)
        let mut examined = 0usize;
        let mut requeue: Vec<usize> = Vec::new();
        'outer: for c in 1..=m {
            while let Some(col) = act.buckets[c].pop() {
                if !act.col_alive[col] || act.col_count[col] != c {
                    continue; // stale bucket entry
                }
                // Validate the column's rows and find its magnitude profile.
                let mut entries: Vec<(usize, f64)> = Vec::with_capacity(c);
                let mut max_abs = 0.0f64;
                let mut seen = 0;
                let col_rows = std::mem::take(&mut act.col_rows[col]);
                let mut fresh = Vec::with_capacity(c);
                for row in col_rows {
                    if !act.row_alive[row] {
                        continue;
                    }
                    if let Some(v) = act.entry(row, col) {
                        if fresh.iter().all(|&r| r != row) {
                            fresh.push(row);
                            entries.push((row, v));
                            max_abs = max_abs.max(v.abs());
                            seen += 1;
                        }
                    }
                }
                act.col_rows[col] = fresh;
                act.col_count[col] = seen;
                if seen == 0 {
                    return Err(Error::NumericalFailure(format!(
                        "singular basis at pivot step {step} (column vanished)"
                    )));
                }
                if max_abs < PIVOT_TOL {
                    return Err(Error::NumericalFailure(format!(
                        "singular basis at pivot step {step} (column magnitude {max_abs:.3e})"
                    )));
                }
                requeue.push(col);
                examined += 1;
                for (row, v) in entries {
                    if v.abs() >= THRESHOLD * max_abs {
                        let score = (act.row_count[row] - 1) * (seen - 1);
                        let better = match best {
                            None => true,
                            Some((_, _, s, a)) => {
                                score < s || (score == s && v.abs() > a)
                            }
                        };
                        if better {
                            best = Some((row, col, score, v.abs()));
                        }
                    }
                }
                if let Some((_, _, s, _)) = best {
                    if s <= (c - 1) * (c - 1) || examined >= SEARCH_LIMIT {
                        break 'outer;
                    }
                }
            }
            if let Some((_, _, s, _)) = best {
                if s <= c * c {
                    break;
                }
            }
        }
        for col in requeue {
            if act.col_alive[col] {
                act.rebucket(col);
            }
        }
        match best {
            Some((pr, pc, _, _)) => Ok((pr, pc)),
            None => Err(Error::NumericalFailure(format!(
                "singular basis at pivot step {step} (no admissible pivot)"
            ))),
        }
    }

    /// Solves `B x = rhs`. `rhs` (original row space) is consumed as
    /// workspace; the solution lands in `out`, indexed by basis position.
    pub fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for t in 0..self.m {
            let val = rhs[self.pivot_row[t]];
            if val != 0.0 {
                for &(row, l) in &self.l_cols[t] {
                    rhs[row] -= l * val;
                }
            }
        }
        for k in (0..self.m).rev() {
            let val = rhs[self.pivot_row[k]] / self.u_diag[k];
            out[self.col_order[k]] = val;
            if val != 0.0 {
                for &(t, u) in &self.u_cols[k] {
                    rhs[self.pivot_row[t]] -= u * val;
                }
            }
        }
    }

    /// Solves `B^T y = c`. `c` is indexed by basis position; the result
    /// lands in `out` over original rows.
    pub fn btran(&self, c: &[f64], out: &mut [f64], scratch: &mut LuScratch) {
        scratch.ensure(self.m);
        let g = &mut scratch.steps;
        for k in 0..self.m {
            let mut acc = c[self.col_order[k]];
            for &(t, u) in &self.u_cols[k] {
                acc -= u * g[t];
            }
            g[k] = acc / self.u_diag[k];
        }
        for t in (0..self.m).rev() {
            let mut acc = g[t];
            for &(row, l) in &self.l_cols[t] {
                acc -= l * g[self.row_pos[row]];
            }
            g[t] = acc;
        }
        for t in 0..self.m {
            out[self.pivot_row[t]] = g[t];
        }
    }

    pub fn nnz(&self) -> usize {
        self.l_cols.iter().map(Vec::len).sum::<usize>()
            + self.u_cols.iter().map(Vec::len).sum::<usize>()
            + self.m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(m: usize, cols: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (j, col) in cols.iter().enumerate() {
            for &(row, v) in col {
                out[row] += v * x[j];
            }
        }
        out
    }

    fn dense_mul_t(cols: &[Vec<(usize, f64)>], y: &[f64]) -> Vec<f64> {
        cols.iter()
            .map(|col| col.iter().map(|&(row, v)| v * y[row]).sum())
            .collect()
    }

    fn random_nonsingular(m: usize, seed: u64) -> Vec<Vec<(usize, f64)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<(usize, f64)>> = (0..m)
            .map(|j| {
                let mut col = vec![(j, 2.0 + rng.gen::<f64>())]; // diagonal keeps it nonsingular
                for _ in 0..3 {
                    let row = rng.gen_range(0..m);
                    if row != j {
                        col.push((row, rng.gen_range(-1.0..1.0)));
                    }
                }
                col.sort_by_key(|&(r, _)| r);
                col.dedup_by_key(|e| e.0);
                col
            })
            .collect();
        // shuffle column order so positions differ from pivot order
        for j in (1..m).rev() {
            let k = rng.gen_range(0..=j);
            cols.swap(j, k);
        }
        cols
    }

    #[test]
    fn ftran_btran_match_dense() {
        for seed in 0..5u64 {
            let m = 60;
            let cols = random_nonsingular(m, seed);
            let mut scratch = LuScratch::new(m);
            let lu = LuFactors::factorize(m, &cols, &mut scratch).unwrap();

            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let x_true: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut rhs = dense_mul(m, &cols, &x_true);
            let mut x = vec![0.0; m];
            lu.ftran(&mut rhs, &mut x);
            for (a, b) in x.iter().zip(&x_true) {
                assert!((a - b).abs() < 1e-8, "ftran mismatch");
            }

            let y_true: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let c = dense_mul_t(&cols, &y_true);
            let mut y = vec![0.0; m];
            lu.btran(&c, &mut y, &mut scratch);
            for (a, b) in y.iter().zip(&y_true) {
                assert!((a - b).abs() < 1e-8, "btran mismatch");
            }
        }
    }

    #[test]
    fn unit_coefficient_bases_round_trip() {
        // basis texture like the model: columns of +/-1 entries plus unit
        // artificial columns
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let m = 80;
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
        for j in 0..m / 2 {
            cols.push(vec![(j, 1.0)]); // artificial slot
        }
        for j in 0..m / 2 {
            let mut col = vec![(m / 2 + j, 1.0)];
            for _ in 0..4 {
                let row = rng.gen_range(0..m);
                if col.iter().all(|&(r, _)| r != row) {
                    col.push((row, if rng.gen::<bool>() { 1.0 } else { -1.0 }));
                }
            }
            cols.push(col);
        }
        let mut scratch = LuScratch::new(m);
        let lu = LuFactors::factorize(m, &cols, &mut scratch).unwrap();
        let x_true: Vec<f64> = (0..m).map(|i| (i % 7) as f64 - 3.0).collect();
        let mut rhs = dense_mul(m, &cols, &x_true);
        let mut x = vec![0.0; m];
        lu.ftran(&mut rhs, &mut x);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn identity_and_permutation() {
        let m = 10;
        // a permutation matrix
        let cols: Vec<Vec<(usize, f64)>> =
            (0..m).map(|j| vec![((j + 3) % m, 1.0)]).collect();
        let mut scratch = LuScratch::new(m);
        let lu = LuFactors::factorize(m, &cols, &mut scratch).unwrap();
        let mut rhs: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let expect = rhs.clone();
        let mut x = vec![0.0; m];
        lu.ftran(&mut rhs, &mut x);
        let round = dense_mul(m, &cols, &x);
        for (a, b) in round.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let cols = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)]];
        let mut scratch = LuScratch::new(2);
        assert!(LuFactors::factorize(2, &cols, &mut scratch).is_err());
    }
}
