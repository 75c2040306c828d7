//! Decomposition of solution vectors into weighted tours.
//!
//! An integral solution decodes directly from its stage diagonals. A
//! fractional solution is peeled greedily: depth-first search assembles a
//! tour whose entire lift support (stage diagonals, every pair, every
//! triple) is present in the residual vector, the minimum supporting value
//! is subtracted as that tour's weight, and the process repeats until the
//! unit of flow is exhausted. The pair/triple membership checks are what
//! keep the search from stitching together crossover chains that borrow
//! arcs from different tours of the mixture.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::indexing::{Arc, VariableSpace};
use crate::instance::{Stage, Tour};
use crate::model::lift_tour_keys;

/// Reassembles a tour from one arc per stage. The arcs must be sorted by
/// stage and chain head-to-tail.
pub fn tour_from_stage_arcs(n: usize, arcs: &[Arc]) -> Result<Tour> {
    if arcs.len() != n - 2 {
        return Err(Error::InconsistentPath(format!(
            "{} stage arcs, expected {}",
            arcs.len(),
            n - 2
        )));
    }
    let mut order = Vec::with_capacity(n - 1);
    order.push(arcs[0].i);
    for (k, a) in arcs.iter().enumerate() {
        if a.r as usize != k + 1 {
            return Err(Error::InconsistentPath(format!(
                "arc {k} sits at stage {}, expected {}",
                a.r,
                k + 1
            )));
        }
        if k > 0 && a.i != arcs[k - 1].j {
            return Err(Error::InconsistentPath(format!(
                "arc at stage {} starts at {}, previous ended at {}",
                a.r,
                a.i,
                arcs[k - 1].j
            )));
        }
        order.push(a.j);
    }
    Tour::new(n, order)
}

/// Decodes a 0/1 solution: every value must sit within `tol` of an integer
/// and the stage diagonals must chain into a tour.
pub fn decode_integral(space: &VariableSpace, x: &[f64], tol: f64) -> Result<Tour> {
    if x.len() != space.n_cols() {
        return Err(Error::DimensionMismatch { expected: space.n_cols(), got: x.len() });
    }
    let mut arcs = Vec::with_capacity(space.stages());
    for (idx, &a) in space.arcs().iter().enumerate() {
        let v = x[space.diag_column_of(idx) as usize];
        if (v - v.round()).abs() > tol {
            return Err(Error::NonIntegral(format!(
                "diagonal of arc ({},{},{}) is {v}",
                a.i, a.r, a.j
            )));
        }
        if v.round() == 1.0 {
            arcs.push(a);
        }
    }
    arcs.sort_by_key(|a| a.r);
    tour_from_stage_arcs(space.n(), &arcs)
}

#[derive(Debug, Clone)]
pub struct DecompositionOptions {
    /// Support threshold: values at or below this count as absent.
    pub eps: f64,
    /// Depth-first extension budget across the whole decomposition.
    pub path_budget: usize,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        Self { eps: 1e-7, path_budget: 1_000_000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedTour {
    /// Visiting order, depot first.
    pub cities: Vec<u8>,
    pub weight: f64,
}

impl WeightedTour {
    pub fn tour(&self, n: usize) -> Tour {
        Tour::new(n, self.cities[1..].to_vec()).expect("stored tours are valid")
    }
}

/// Result of peeling a solution vector into tours, plus the certificate
/// that the weighted lifts reproduce the vector.
#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub tours: Vec<WeightedTour>,
    pub total_weight: f64,
    /// max |x_j - sum of weighted lifts| over diagonal y columns.
    pub residual_diag: f64,
    /// ... over off-diagonal y columns.
    pub residual_pairs: f64,
    /// ... over z columns.
    pub residual_triples: f64,
    /// Unpeeled stage-1 flow when the search found no further tour.
    pub stranded_flow: f64,
}

impl Decomposition {
    pub fn max_residual(&self) -> f64 {
        self.residual_diag.max(self.residual_pairs).max(self.residual_triples)
    }

    /// The weighted tours reproduce the vector within `tol` and no flow was
    /// left stranded.
    pub fn is_exact(&self, tol: f64) -> bool {
        self.max_residual() <= tol && self.stranded_flow <= tol
    }
}

struct Peeler<'s> {
    space: &'s VariableSpace,
    residual: Vec<f64>,
    eps: f64,
    budget: usize,
}

impl<'s> Peeler<'s> {
    fn diag(&self, a: Arc) -> f64 {
        self.residual[self.space.diag_column(a).unwrap() as usize]
    }

    fn pair(&self, a: Arc, b: Arc) -> f64 {
        self.space
            .y_column(a, b)
            .map_or(0.0, |c| self.residual[c as usize])
    }

    fn triple(&self, a: Arc, b: Arc, c: Arc) -> f64 {
        self.space
            .z_column(a, b, c)
            .map_or(0.0, |col| self.residual[col as usize])
    }

    /// Whether arc `b` can extend `chain`: full pair and triple support in
    /// the residual, besides the head-to-tail chaining checked by the caller.
    fn supported(&self, chain: &[Arc], b: Arc) -> bool {
        if self.diag(b) <= self.eps {
            return false;
        }
        for (p, &a) in chain.iter().enumerate() {
            if self.pair(a, b) <= self.eps {
                return false;
            }
            for &m in &chain[p + 1..] {
                if self.triple(a, m, b) <= self.eps {
                    return false;
                }
            }
        }
        true
    }

    fn find_tour(&mut self) -> Result<Option<Tour>> {
        let stages = self.space.stages() as Stage;
        let mut chain: Vec<Arc> = Vec::with_capacity(stages as usize);
        if self.extend(&mut chain, stages)? {
            Ok(Some(tour_from_stage_arcs(self.space.n(), &chain)?))
        } else {
            Ok(None)
        }
    }

    fn extend(&mut self, chain: &mut Vec<Arc>, stages: Stage) -> Result<bool> {
        let r = chain.len() as Stage + 1;
        if r > stages {
            return Ok(true);
        }
        for &b in self.space.arcs_at(r) {
            if let Some(&last) = chain.last() {
                if b.i != last.j {
                    continue;
                }
            }
            if !self.supported(chain, b) {
                continue;
            }
            if self.budget == 0 {
                return Err(Error::PathBudget(0));
            }
            self.budget -= 1;
            chain.push(b);
            if self.extend(chain, stages)? {
                return Ok(true);
            }
            chain.pop();
        }
        Ok(false)
    }

    fn peel(&mut self, tour: &Tour) -> Result<f64> {
        let (y, z) = lift_tour_keys(self.space.n(), tour)?;
        let mut cols = Vec::with_capacity(y.len() + z.len());
        for k in &y {
            cols.push(self.space.y_column(k.a, k.b).ok_or_else(|| {
                Error::InconsistentPath(format!("lift key {k:?} outside the space"))
            })?);
        }
        for k in &z {
            cols.push(self.space.z_column(k.a, k.b, k.c).ok_or_else(|| {
                Error::InconsistentPath(format!("lift key {k:?} outside the space"))
            })?);
        }
        let lambda = cols
            .iter()
            .map(|&c| self.residual[c as usize])
            .fold(f64::INFINITY, f64::min);
        debug_assert!(lambda > self.eps);
        for c in cols {
            self.residual[c as usize] -= lambda;
        }
        Ok(lambda)
    }

    fn stage1_flow(&self) -> f64 {
        self.space.arcs_at(1).iter().map(|&a| self.diag(a).max(0.0)).sum()
    }
}

/// Peels `x` into weighted tours and certifies the reconstruction.
pub fn decompose(
    space: &VariableSpace,
    x: &[f64],
    opts: &DecompositionOptions,
) -> Result<Decomposition> {
    if x.len() != space.n_cols() {
        return Err(Error::DimensionMismatch { expected: space.n_cols(), got: x.len() });
    }
    let mut peeler = Peeler {
        space,
        residual: x.to_vec(),
        eps: opts.eps,
        budget: opts.path_budget,
    };
    let mut tours = Vec::new();
    let mut total_weight = 0.0;
    while peeler.stage1_flow() > opts.eps {
        let Some(tour) = peeler.find_tour()? else { break };
        let weight = peeler.peel(&tour)?;
        total_weight += weight;
        let mut cities = vec![1u8];
        cities.extend_from_slice(tour.order());
        tours.push(WeightedTour { cities, weight });
    }

    // Residual by block: what the weighted lifts fail to reproduce.
    let mut residual_diag = 0.0f64;
    let mut residual_pairs = 0.0f64;
    let mut residual_triples = 0.0f64;
    let n_y = space.n_y();
    let diag_cols: std::collections::HashSet<u32> = (0..space.arcs().len())
        .map(|i| space.diag_column_of(i))
        .collect();
    for (col, &r) in peeler.residual.iter().enumerate() {
        let r = r.abs();
        if col >= n_y {
            residual_triples = residual_triples.max(r);
        } else if diag_cols.contains(&(col as u32)) {
            residual_diag = residual_diag.max(r);
        } else {
            residual_pairs = residual_pairs.max(r);
        }
    }
    Ok(Decomposition {
        tours,
        total_weight,
        residual_diag,
        residual_pairs,
        residual_triples,
        stranded_flow: peeler.stage1_flow(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lift_tour;
    use crate::oracle::all_tours;

    fn mix(space: &VariableSpace, parts: &[(usize, f64)]) -> Vec<f64> {
        let tours: Vec<Tour> = all_tours(space.n()).unwrap().collect();
        let mut x = vec![0.0; space.n_cols()];
        for &(t, w) in parts {
            let lift = lift_tour(space, &tours[t]).unwrap();
            for (xi, li) in x.iter_mut().zip(&lift) {
                *xi += w * li;
            }
        }
        x
    }

    #[test]
    fn single_tour_decomposes_to_itself() {
        let space = VariableSpace::new(6).unwrap();
        for t in all_tours(6).unwrap().take(10) {
            let x = lift_tour(&space, &t).unwrap();
            let d = decompose(&space, &x, &DecompositionOptions::default()).unwrap();
            assert_eq!(d.tours.len(), 1);
            assert_eq!(d.tours[0].weight, 1.0);
            assert_eq!(d.tours[0].tour(6).order(), t.order());
            assert!(d.is_exact(1e-12), "{d:?}");
        }
    }

    #[test]
    fn convex_mixtures_recover_weights() {
        let space = VariableSpace::new(6).unwrap();
        let x = mix(&space, &[(0, 0.25), (30, 0.35), (77, 0.4)]);
        let d = decompose(&space, &x, &DecompositionOptions::default()).unwrap();
        assert_eq!(d.tours.len(), 3);
        assert!(d.is_exact(1e-9), "{d:?}");
        let mut weights: Vec<f64> = d.tours.iter().map(|t| t.weight).collect();
        weights.sort_by(f64::total_cmp);
        assert!((weights[0] - 0.25).abs() < 1e-12);
        assert!((weights[1] - 0.35).abs() < 1e-12);
        assert!((weights[2] - 0.4).abs() < 1e-12);
        assert!((d.total_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sub_unit_mass_reports_residual_flow_only() {
        let space = VariableSpace::new(5).unwrap();
        let x = mix(&space, &[(3, 0.5)]);
        let d = decompose(&space, &x, &DecompositionOptions::default()).unwrap();
        assert_eq!(d.tours.len(), 1);
        assert!((d.total_weight - 0.5).abs() < 1e-12);
        assert!(d.is_exact(1e-9));
    }

    #[test]
    fn corrupted_vector_fails_with_certificate() {
        let space = VariableSpace::new(5).unwrap();
        let mut x = mix(&space, &[(0, 1.0)]);
        // strip one z entry: the tour is no longer fully supported
        let col = space.n_y(); // first z column
        if x[col] == 1.0 {
            x[col] = 0.0;
        } else {
            // ensure some z of this lift is hit
            let idx = x
                .iter()
                .enumerate()
                .skip(space.n_y())
                .find(|(_, &v)| v == 1.0)
                .unwrap()
                .0;
            x[idx] = 0.0;
        }
        let d = decompose(&space, &x, &DecompositionOptions::default()).unwrap();
        assert!(!d.is_exact(1e-9));
        assert!(d.stranded_flow > 0.9);
    }

    #[test]
    fn decode_integral_round_trip() {
        let space = VariableSpace::new(7).unwrap();
        let t = Tour::new(7, vec![4, 2, 7, 3, 6, 5]).unwrap();
        let x = lift_tour(&space, &t).unwrap();
        let back = decode_integral(&space, &x, 1e-7).unwrap();
        assert_eq!(back.order(), t.order());

        let mut frac = x.clone();
        frac[0] += 0.3;
        assert!(matches!(
            decode_integral(&space, &frac, 1e-7),
            Err(Error::NonIntegral(_)) | Err(Error::InconsistentPath(_))
        ));
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let space = VariableSpace::new(6).unwrap();
        let x = mix(&space, &[(0, 0.5), (50, 0.5)]);
        let opts = DecompositionOptions { path_budget: 1, ..Default::default() };
        assert!(matches!(decompose(&space, &x, &opts), Err(Error::PathBudget(_))));
    }
}
