//! Orthogonal matching pursuit, the column-wise coding baseline.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{check_dims, Error, Result};
use crate::linalg::{cdot, norm_sq, CoefMatrix, DenseMatrix, Dictionary, SparseColumn, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmpParams {
    sparsity: usize,
    err_tol: f64,
}

impl OmpParams {
    pub const DEFAULT_ERR_TOL: f64 = 1e-6;

    pub fn new(sparsity: usize, err_tol: f64) -> Result<Self> {
        if sparsity == 0 {
            return Err(Error::InvalidParameter("OMP sparsity must be at least 1".into()));
        }
        if !(err_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "OMP error tolerance must be non-negative, got {err_tol}"
            )));
        }
        Ok(Self { sparsity, err_tol })
    }

    pub fn with_sparsity(sparsity: usize) -> Result<Self> {
        Self::new(sparsity, Self::DEFAULT_ERR_TOL)
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn err_tol(&self) -> f64 {
        self.err_tol
    }
}

/// Code `x` with `y ≈ D x`, plus whether a refit hit a rank-deficient subdictionary
/// (the minimum-norm solution is used in that case).
#[derive(Clone, Debug, PartialEq)]
pub struct OmpCode {
    pub code: SparseColumn,
    pub rank_deficient: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmpBatch {
    /// `C` with row `i` equal to `x_i^H`.
    pub coefs: CoefMatrix,
    pub rank_deficient_signals: usize,
}

/// Least squares on the selected atoms via SVD. Returns the coefficients and
/// whether the subdictionary was rank deficient.
fn refit(dict: &Dictionary, support: &[usize], y: &[C64]) -> (Vec<C64>, bool) {
    let n = dict.signal_dim();
    let ds = DMatrix::from_fn(n, support.len(), |r, c| dict.atom(support[c])[r]);
    let b = DMatrix::from_column_slice(n, 1, y);
    let svd = ds.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * (n.max(support.len()) as f64) * f64::EPSILON;
    let rank = svd.rank(eps);
    let x = svd.solve(&b, eps).expect("both singular vector sets were computed");
    (x.iter().copied().collect(), rank < support.len())
}

pub fn omp_code(dict: &Dictionary, y: &[C64], params: &OmpParams) -> Result<OmpCode> {
    let n = dict.signal_dim();
    let j = dict.num_atoms();
    check_dims("signal length", n, y.len())?;
    let mut support: Vec<usize> = Vec::new();
    let mut coeffs: Vec<C64> = Vec::new();
    let mut residual = y.to_vec();
    let mut rank_deficient = false;
    while support.len() < params.sparsity.min(j) && norm_sq(&residual) > params.err_tol {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..j {
            if support.contains(&k) {
                continue;
            }
            let m = cdot(dict.atom(k), &residual).norm();
            if best.is_none_or(|(_, bm)| m > bm) {
                best = Some((k, m));
            }
        }
        let Some((k, m)) = best else { break };
        if m == 0.0 {
            break;
        }
        support.push(k);
        let (x, deficient) = refit(dict, &support, y);
        rank_deficient |= deficient;
        coeffs = x;
        residual.copy_from_slice(y);
        for (&k, &c) in support.iter().zip(&coeffs) {
            for (r, d) in residual.iter_mut().zip(dict.atom(k)) {
                *r -= d * c;
            }
        }
    }
    let mut dense = vec![C64::new(0.0, 0.0); j];
    for (&k, &c) in support.iter().zip(&coeffs) {
        dense[k] = c;
    }
    Ok(OmpCode {
        code: SparseColumn::from_dense(&dense),
        rank_deficient,
    })
}

/// [`omp_code`] on every column of `y`, in parallel.
pub fn omp_code_all(dict: &Dictionary, y: &DenseMatrix, params: &OmpParams) -> Result<OmpBatch> {
    check_dims("signal length", dict.signal_dim(), y.rows())?;
    let codes: Vec<OmpCode> = (0..y.cols())
        .into_par_iter()
        .map(|i| omp_code(dict, y.col(i), params))
        .collect::<Result<_>>()?;
    let big_n = y.cols();
    let mut per_atom: Vec<(Vec<usize>, Vec<C64>)> = vec![(Vec::new(), Vec::new()); dict.num_atoms()];
    let mut rank_deficient_signals = 0;
    for (i, oc) in codes.iter().enumerate() {
        rank_deficient_signals += oc.rank_deficient as usize;
        for (k, v) in oc.code.iter() {
            per_atom[k].0.push(i);
            per_atom[k].1.push(v.conj());
        }
    }
    let columns = per_atom
        .into_iter()
        .map(|(s, v)| SparseColumn::new(big_n, s, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(OmpBatch {
        coefs: CoefMatrix::from_columns(big_n, columns)?,
        rank_deficient_signals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{dct_plus_random, overcomplete_dct};
    use crate::metrics::nsre;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn recovers_single_atom() {
        let d = dct_plus_random(4, 6, 1).unwrap();
        let p = OmpParams::with_sparsity(2).unwrap();
        let out = omp_code(&d, d.atom(3), &p).unwrap();
        assert_eq!(out.code.support(), &[3]);
        assert!((out.code.values()[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(!out.rank_deficient);
        assert!(omp_code(&d, &[C64::new(0.0, 0.0); 4], &p).unwrap().code.is_zero());
    }

    #[test]
    fn residual_orthogonal_to_selected_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = dct_plus_random(9, 20, 2).unwrap();
        let y = rand_vec(9, &mut rng);
        let out = omp_code(&d, &y, &OmpParams::with_sparsity(4).unwrap()).unwrap();
        assert_eq!(out.code.nnz(), 4);
        let mut r = y.clone();
        for (k, v) in out.code.iter() {
            for (ri, di) in r.iter_mut().zip(d.atom(k)) {
                *ri -= di * v;
            }
        }
        for &k in out.code.support() {
            assert!(cdot(d.atom(k), &r).norm() < 1e-8);
        }
    }

    #[test]
    fn greedy_error_is_close_to_exhaustive_best_pair() {
        // Greedy selection carries no worst-case guarantee, so the 2x bound is
        // checked as a rate over random near-2-sparse instances.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 50;
        let mut within = 0;
        for _ in 0..trials {
            let cols: Vec<Vec<C64>> = (0..6).map(|_| rand_vec(4, &mut rng)).collect();
            let d = Dictionary::normalized(DenseMatrix::from_columns(&cols).unwrap()).unwrap();
            let (p, q) = (rng.random_range(0..6), rng.random_range(0..6));
            let (a, b) = (rand_vec(1, &mut rng)[0], rand_vec(1, &mut rng)[0]);
            let noise = rand_vec(4, &mut rng);
            let y: Vec<C64> = (0..4).map(|r| d.atom(p)[r] * a + d.atom(q)[r] * b + noise[r] * 0.05).collect();
            let out = omp_code(&d, &y, &OmpParams::new(2, 0.0).unwrap()).unwrap();
            let err = |code: &[C64]| {
                let yhat = d.as_matrix().matvec(code).unwrap();
                crate::linalg::diff_norm_sq(&y, &yhat)
            };
            // exhaustive oracle: best 2-subset via 2×2 normal equations
            let mut best = f64::INFINITY;
            for a in 0..6 {
                for b in a + 1..6 {
                    let (da, db) = (d.atom(a), d.atom(b));
                    let g = cdot(da, db);
                    let (ra, rb) = (cdot(da, &y), cdot(db, &y));
                    let det = 1.0 - g.norm_sqr();
                    let mut code = vec![C64::new(0.0, 0.0); 6];
                    code[a] = (ra - g * rb) / det;
                    code[b] = (rb - g.conj() * ra) / det;
                    best = best.min(err(&code));
                }
            }
            let got = err(&out.code.to_dense());
            assert!(got + 1e-12 >= best);
            within += (got <= 2.0 * best + 1e-12) as usize;
        }
        eprintln!("omp within 2x of best pair: {within}/{trials}");
        assert!(within >= 40, "{within}/{trials}");
    }

    #[test]
    fn duplicated_atom_is_flagged() {
        let a = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let d = Dictionary::new(DenseMatrix::from_columns(&[a.clone(), a.clone()]).unwrap()).unwrap();
        // After picking atom 0 the residual is zero so the duplicate is never chosen.
        let out = omp_code(&d, &a, &OmpParams::new(2, 0.0).unwrap()).unwrap();
        assert_eq!(out.code.support(), &[0]);
        let ds = Dictionary::new(DenseMatrix::from_columns(&[a.clone(), a.clone(), vec![C64::new(0.6, 0.), C64::new(0.8, 0.)]]).unwrap()).unwrap();
        let (x, flagged) = refit(&ds, &[0, 1], &a);
        assert!(flagged);
        // minimum-norm split between the two copies
        assert!((x[0] - C64::new(0.5, 0.0)).norm() < 1e-12 && (x[1] - C64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let d = overcomplete_dct(4, 4).unwrap();
        // y correlates equally with atoms 1 and 2
        let y: Vec<C64> = d.atom(1).iter().zip(d.atom(2)).map(|(a, b)| a + b).collect();
        let out = omp_code(&d, &y, &OmpParams::new(1, 0.0).unwrap()).unwrap();
        assert_eq!(out.code.support(), &[1]);
    }

    #[test]
    fn batch_matches_per_column_and_nsre_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = dct_plus_random(9, 18, 1).unwrap();
        let y = DenseMatrix::from_col_major(9, 30, rand_vec(270, &mut rng)).unwrap();
        let mut last = f64::INFINITY;
        for s in 1..=5 {
            let p = OmpParams::with_sparsity(s).unwrap();
            let batch = omp_code_all(&d, &y, &p).unwrap();
            for i in 0..30 {
                let single = omp_code(&d, y.col(i), &p).unwrap().code;
                for (k, v) in single.iter() {
                    let col = batch.coefs.col(k);
                    let pos = col.support().binary_search(&i).unwrap();
                    assert_eq!(col.values()[pos], v.conj());
                }
            }
            let e = nsre(&y, d.as_matrix(), &batch.coefs).unwrap();
            assert!(e <= last + 1e-12);
            last = e;
        }
        let d2 = dct_plus_random(4, 4, 0).unwrap();
        let y2 = DenseMatrix::from_columns(&[d2.atom(0).to_vec(), d2.atom(1).to_vec()]).unwrap();
        let b = omp_code_all(&d2, &y2, &OmpParams::with_sparsity(1).unwrap()).unwrap();
        assert_eq!(b.coefs.nnz(), 2);
        assert_eq!(b.coefs.col(0).support(), &[0]);
        assert_eq!(b.coefs.col(1).support(), &[1]);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(OmpParams::with_sparsity(0).is_err());
        assert!(OmpParams::new(1, -1.0).is_err());
    }
}
