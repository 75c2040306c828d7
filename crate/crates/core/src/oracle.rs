//! Exact brute-force TSP optimum by full tour enumeration.
//!
//! Deliberately the dumbest possible implementation: at the city counts where
//! it is used it is instant, and it has to be trustworthy enough to serve as
//! the reference for everything else.

use crate::error::{Error, Result};
use crate::instance::{City, Tour, TspInstance};

/// Enumeration guard: `(n-1)!` tours beyond this are not worth waiting for.
pub const MAX_ORACLE_N: usize = 10;

/// Iterator over all `(n-1)!` tours in lexicographic order of the visiting
/// sequence.
pub struct AllTours {
    n: usize,
    current: Option<Vec<City>>,
}

impl Iterator for AllTours {
    type Item = Tour;

    fn next(&mut self) -> Option<Tour> {
        let order = self.current.take()?;
        let tour = Tour::new(self.n, order.clone()).expect("permutation by construction");
        self.current = next_permutation(order);
        Some(tour)
    }
}

fn next_permutation(mut v: Vec<City>) -> Option<Vec<City>> {
    let k = v.windows(2).rposition(|w| w[0] < w[1])?;
    let l = v.iter().rposition(|&x| x > v[k]).unwrap();
    v.swap(k, l);
    v[k + 1..].reverse();
    Some(v)
}

/// All tours at city count `n`, lexicographically.
pub fn all_tours(n: usize) -> Result<AllTours> {
    if n < 3 {
        return Err(Error::InvalidInstance(format!("n = {n}, need n >= 3")));
    }
    if n > MAX_ORACLE_N {
        return Err(Error::EnumerationGuard(format!(
            "full enumeration capped at n = {MAX_ORACLE_N}, got {n}"
        )));
    }
    Ok(AllTours { n, current: Some((2..=n as City).collect()) })
}

/// Result of an exhaustive search over all tours.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_tour: Tour,
    pub best_cost: f64,
    pub tours_enumerated: usize,
}

/// Exact optimum by full enumeration using `tour_cost`.
pub fn brute_force_opt(inst: &TspInstance) -> Result<OracleResult> {
    let mut best: Option<(Tour, f64)> = None;
    let mut count = 0usize;
    for tour in all_tours(inst.n())? {
        let cost = inst.tour_cost(&tour)?;
        count += 1;
        match &best {
            Some((_, c)) if *c <= cost => {}
            _ => best = Some((tour, cost)),
        }
    }
    let (best_tour, best_cost) = best.expect("at least one tour for n >= 3");
    Ok(OracleResult { best_tour, best_cost, tours_enumerated: count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_extreme, generate_random, ExtremeKind};

    #[test]
    fn tour_counts_and_order() {
        let tours: Vec<Tour> = all_tours(5).unwrap().collect();
        assert_eq!(tours.len(), 24);
        assert_eq!(tours[0].order(), &[2, 3, 4, 5]);
        assert_eq!(tours[1].order(), &[2, 3, 5, 4]);
        assert_eq!(tours.last().unwrap().order(), &[5, 4, 3, 2]);
        assert_eq!(all_tours(7).unwrap().count(), 720);
        assert!(all_tours(11).is_err());
    }

    #[test]
    fn extreme_instance_optima() {
        let cases = [
            (ExtremeKind::X71, -7.0),
            (ExtremeKind::X72, -94.0),
            (ExtremeKind::X73, 0.0),
        ];
        for (kind, expected) in cases {
            let inst = generate_extreme(kind, 7).unwrap();
            let res = brute_force_opt(&inst).unwrap();
            assert_eq!(res.best_cost, expected, "{}", inst.label());
            assert_eq!(res.tours_enumerated, 720);
        }
    }

    #[test]
    fn relabeling_invariance() {
        // Relabel cities 2..n by a permutation applied to rows and columns;
        // the optimal value must not change and the argmin maps through.
        let inst = generate_random(6, 11, false).unwrap();
        let perm: [City; 7] = [0, 1, 4, 2, 6, 3, 5]; // perm[c] = relabeled city
        let n = 6;
        let mut t = vec![f64::INFINITY; n * n];
        for i in 1..=n as City {
            for j in 1..=n as City {
                if i != j {
                    let (pi, pj) = (perm[i as usize], perm[j as usize]);
                    t[(pi as usize - 1) * n + (pj as usize - 1)] = inst.cost(i, j);
                }
            }
        }
        let relabeled = TspInstance::new(n, t, "relabeled").unwrap();
        let a = brute_force_opt(&inst).unwrap();
        let b = brute_force_opt(&relabeled).unwrap();
        assert_eq!(a.best_cost, b.best_cost);
        let mapped: Vec<City> =
            a.best_tour.order().iter().map(|&c| perm[c as usize]).collect();
        assert_eq!(
            relabeled.tour_cost(&Tour::new(n, mapped).unwrap()).unwrap(),
            b.best_cost
        );
    }
}
