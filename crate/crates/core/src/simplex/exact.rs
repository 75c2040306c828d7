//! Exact rational certification of a primal-form solve: the final basis is
//! re-solved over arbitrary-precision integers (fraction-free Bareiss
//! elimination), so feasibility, dual feasibility and a zero duality gap are
//! established without any floating-point tolerance. Requires an integral
//! objective; all constraint coefficients are units by construction.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::SparseLpModel;
use crate::simplex::{BasisVar, LpForm, LpSolution, SolveStatus};

/// Outcome of the exact re-check. `certified` holds iff every component
/// verdict does.
#[derive(Debug, Clone)]
pub struct ExactCertificate {
    /// Exact optimal objective of the basis.
    pub objective: BigRational,
    /// Basic values are nonnegative.
    pub primal_feasible: bool,
    /// Artificial slots carry exactly zero (the equalities hold exactly).
    pub artificials_zero: bool,
    /// Every reduced cost is nonnegative.
    pub dual_feasible: bool,
    /// c.x equals b.pi exactly.
    pub gap_zero: bool,
    /// |exact objective - float objective| of the solve being certified.
    pub float_gap: f64,
}

impl ExactCertificate {
    pub fn certified(&self) -> bool {
        self.primal_feasible && self.artificials_zero && self.dual_feasible && self.gap_zero
    }
}

fn as_int(v: f64, what: &str) -> Result<BigInt> {
    if v.fract() != 0.0 || v.abs() > 2f64.powi(52) {
        return Err(Error::NumericalFailure(format!(
            "{what} = {v} is not an exactly representable integer"
        )));
    }
    Ok(BigInt::from(v as i64))
}

/// Fraction-free Gaussian elimination (Bareiss) with row pivoting, followed
/// by rational back substitution. `a` is consumed; `rhs` is the single
/// right-hand side.
fn bareiss_solve(mut a: Vec<Vec<BigInt>>, rhs: Vec<BigInt>) -> Result<Vec<BigRational>> {
    let n = a.len();
    for (row, r) in a.iter_mut().zip(rhs) {
        row.push(r);
    }
    let width = n + 1;
    let mut prev = BigInt::from(1);
    for k in 0..n {
        let piv = (k..n)
            .find(|&r| !a[r][k].is_zero())
            .ok_or_else(|| Error::NumericalFailure(format!("exactly singular at step {k}")))?;
        a.swap(k, piv);
        let (top, rest) = a.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in rest.iter_mut() {
            if row[k].is_zero() {
                continue;
            }
            for j in (k + 1)..width {
                row[j] = (&pivot_row[k] * &row[j] - &row[k] * &pivot_row[j]) / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let mut x = vec![BigRational::zero(); n];
    for k in (0..n).rev() {
        let mut acc = BigRational::from(a[k][n].clone());
        for j in (k + 1)..n {
            acc -= BigRational::from(a[k][j].clone()) * &x[j];
        }
        x[k] = acc / BigRational::from(a[k][k].clone());
    }
    Ok(x)
}

/// Re-derives the final basis of a primal-form solve in exact arithmetic and
/// checks every optimality condition without tolerances.
pub fn certify_exact(model: &SparseLpModel, sol: &LpSolution) -> Result<ExactCertificate> {
    if sol.form != LpForm::Primal {
        return Err(Error::NumericalFailure(
            "exact certification works on primal-form solves".to_string(),
        ));
    }
    if sol.status != SolveStatus::Optimal {
        return Err(Error::NumericalFailure(format!(
            "cannot certify a solve with status {:?}",
            sol.status
        )));
    }
    let m = model.n_rows();
    let n = model.n_cols();
    if sol.row_basis.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: sol.row_basis.len() });
    }

    // Model columns over rows, in exact integers.
    let mut col_entries: Vec<Vec<(usize, BigInt)>> = vec![Vec::new(); n];
    let mut b = Vec::with_capacity(m);
    for (i, row) in model.rows().iter().enumerate() {
        b.push(as_int(row.rhs, "rhs")?);
        for (&c, &v) in row.cols.iter().zip(&row.coefs) {
            col_entries[c as usize].push((i, as_int(v, "coefficient")?));
        }
    }
    let c_int: Vec<BigInt> = model
        .objective()
        .iter()
        .map(|&v| as_int(v, "objective"))
        .collect::<Result<_>>()?;

    // Dense basis matrix and its transpose.
    let mut basis_mat = vec![vec![BigInt::zero(); m]; m];
    let mut basis_t = vec![vec![BigInt::zero(); m]; m];
    let mut cb = vec![BigInt::zero(); m];
    for (pos, &var) in sol.row_basis.iter().enumerate() {
        match var {
            BasisVar::Structural(j) => {
                for &(i, ref v) in &col_entries[j] {
                    basis_mat[i][pos] = v.clone();
                    basis_t[pos][i] = v.clone();
                }
                cb[pos] = c_int[j].clone();
            }
            BasisVar::Artificial(i) => {
                basis_mat[i][pos] = BigInt::from(1);
                basis_t[pos][i] = BigInt::from(1);
            }
        }
    }

    let xb = bareiss_solve(basis_mat, b.clone())?;
    let pi = bareiss_solve(basis_t, cb)?;

    let mut primal_feasible = true;
    let mut artificials_zero = true;
    let mut x = vec![BigRational::zero(); n];
    for (pos, &var) in sol.row_basis.iter().enumerate() {
        if xb[pos].is_negative() {
            primal_feasible = false;
        }
        match var {
            BasisVar::Structural(j) => x[j] = xb[pos].clone(),
            BasisVar::Artificial(_) => {
                if !xb[pos].is_zero() {
                    artificials_zero = false;
                }
            }
        }
    }

    let mut dual_feasible = true;
    let mut objective = BigRational::zero();
    for j in 0..n {
        let mut d = BigRational::from(c_int[j].clone());
        for &(i, ref v) in &col_entries[j] {
            d -= BigRational::from(v.clone()) * &pi[i];
        }
        if d.is_negative() {
            dual_feasible = false;
        }
        if !x[j].is_zero() {
            objective += BigRational::from(c_int[j].clone()) * &x[j];
        }
    }
    let mut b_dot_pi = BigRational::zero();
    for (i, bi) in b.into_iter().enumerate() {
        if !bi.is_zero() {
            b_dot_pi += BigRational::from(bi) * &pi[i];
        }
    }
    let gap_zero = objective == b_dot_pi;
    let float_gap = (objective.to_f64().unwrap_or(f64::NAN) - sol.objective).abs();

    Ok(ExactCertificate {
        objective,
        primal_feasible,
        artificials_zero,
        dual_feasible,
        gap_zero,
        float_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_random;
    use crate::model::build_model;
    use crate::oracle::brute_force_opt;
    use crate::simplex::{solve_primal, SolverOptions};
    use num_traits::One;

    #[test]
    fn bareiss_small_system() {
        // [2 1; 1 3] x = [5, 10] -> x = (1, 3)
        let a = vec![
            vec![BigInt::from(2), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(3)],
        ];
        let x = bareiss_solve(a, vec![BigInt::from(5), BigInt::from(10)]).unwrap();
        assert_eq!(x[0], BigRational::one());
        assert_eq!(x[1], BigRational::from(BigInt::from(3)));
    }

    #[test]
    fn bareiss_rejects_singular() {
        let a = vec![
            vec![BigInt::from(1), BigInt::from(2)],
            vec![BigInt::from(2), BigInt::from(4)],
        ];
        assert!(bareiss_solve(a, vec![BigInt::from(1), BigInt::from(2)]).is_err());
    }

    #[test]
    fn n5_solve_certifies_exactly() {
        let inst = generate_random(5, 7, false).unwrap();
        assert!(inst.is_integral());
        let model = build_model(&inst).unwrap();
        let sol = solve_primal(&model, &SolverOptions::default()).unwrap();
        let cert = certify_exact(&model, &sol).unwrap();
        assert!(cert.certified(), "{cert:?}");
        assert!(cert.float_gap < 1e-8);
        let oracle = brute_force_opt(&inst).unwrap();
        assert_eq!(
            cert.objective,
            BigRational::from(BigInt::from(oracle.best_cost as i64))
        );
    }
}
