//! Closed-form solutions of the per-atom sparse-coding subproblems.
//!
//! For fixed `E_j` and `d_j`, minimising `‖E_j − d_j c^H‖_F² + penalty(c)` over
//! `c` separates into scalar problems `|c_i − b_i|² + penalty(c_i)` with
//! `b = E_j^H d_j`. The ℓ0 case is solved by truncated hard thresholding, the
//! ℓ1 case by complex soft thresholding.

use crate::error::{Error, Result};
use crate::linalg::{phase_unit, SparseColumn, C64};

/// Weight `λ` (the penalty is `λ²‖c‖₀`) and magnitude cap `L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L0CodeParams {
    lambda: f64,
    cap: f64,
}

impl L0CodeParams {
    pub fn new(lambda: f64, cap: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        if !(cap > lambda) {
            return Err(Error::InvalidParameter(format!(
                "cap L = {cap} must exceed lambda = {lambda}"
            )));
        }
        Ok(Self { lambda, cap })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }
}

/// Weight `μ` of the ℓ1 penalty `μ‖c‖₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1CodeParams {
    mu: f64,
}

impl L1CodeParams {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mu must be finite and non-negative, got {mu}"
            )));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `H_λ(b)`: zero every entry with `|b_i| < λ`. Entries at exactly `λ` are kept.
pub fn hard_threshold(b: &[C64], lambda: f64) -> Vec<C64> {
    b.iter()
        .map(|&z| if z.norm() < lambda { C64::new(0.0, 0.0) } else { z })
        .collect()
}

/// Truncated hard thresholding: `min(|H_λ(b_i)|, L) · e^{i∠b_i}`.
pub fn sparse_code_l0(b: &[C64], params: &L0CodeParams) -> SparseColumn {
    let mut out = SparseColumn::zeros(b.len());
    for (i, &z) in b.iter().enumerate() {
        let m = z.norm();
        if m < params.lambda {
            continue;
        }
        let v = if m <= params.cap {
            z
        } else {
            phase_unit(z) * params.cap
        };
        out.push_unchecked(i, v);
    }
    out
}

/// Soft thresholding: `max(|b_i| − μ/2, 0) · e^{i∠b_i}`.
pub fn sparse_code_l1(b: &[C64], params: &L1CodeParams) -> SparseColumn {
    let half = params.mu / 2.0;
    let mut out = SparseColumn::zeros(b.len());
    for (i, &z) in b.iter().enumerate() {
        let m = z.norm();
        let shrunk = m - half;
        if shrunk > 0.0 {
            out.push_unchecked(i, z * (shrunk / m));
        }
    }
    out
}

/// Number of entries sitting exactly on the threshold. The ℓ0 minimiser is
/// unique iff this is zero.
pub fn threshold_ties(b: &[C64], lambda: f64) -> usize {
    b.iter().filter(|z| z.norm() == lambda).count()
}

/// Whether the ℓ0 sparse-coding minimiser for `b` is unique.
pub fn l0_minimizer_is_unique(b: &[C64], lambda: f64) -> bool {
    threshold_ties(b, lambda) == 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Scalar ℓ0 objective `|c − b|² + λ²·[c ≠ 0]`.
    fn l0_cost(cv: C64, b: C64, lambda: f64) -> f64 {
        (cv - b).norm_sqr() + if cv.norm() > 0.0 { lambda * lambda } else { 0.0 }
    }

    /// Grid search over magnitude in [0, cap] along the phase of `b`.
    fn l0_grid(b: C64, lambda: f64, cap: f64, step: f64) -> C64 {
        let ph = phase_unit(b);
        let steps = (cap.min(b.norm() + 1.0) / step).ceil() as usize;
        (0..=steps)
            .map(|k| ph * (k as f64 * step).min(cap))
            .min_by(|x, y| l0_cost(*x, b, lambda).total_cmp(&l0_cost(*y, b, lambda)))
            .unwrap()
    }

    #[test]
    fn hard_threshold_examples() {
        let out = hard_threshold(&[c(0.5, 0.), c(-2., 0.), c(1., 0.)], 1.0);
        assert_eq!(out, vec![c(0., 0.), c(-2., 0.), c(1., 0.)]);
        let b = [c(0.1, -0.3), c(0., 0.)];
        assert_eq!(hard_threshold(&b, 0.0), b.to_vec());
        // |0.6 + 0.8i| = 1 exactly in binary? 0.36 + 0.64 rounds to 1.0.
        let z = c(0.6, 0.8);
        assert_eq!(z.norm(), 1.0);
        assert_eq!(hard_threshold(&[z], 1.0), vec![z]);
    }

    #[test]
    fn l0_examples() {
        let p = L0CodeParams::new(1.0, 1e8).unwrap();
        assert!(sparse_code_l0(&[c(0., 0.); 4], &p).is_zero());

        let out = sparse_code_l0(&[c(3., 0.), c(0.2, 0.), c(0., -1.5)], &p);
        assert_eq!(out.support(), &[0, 2]);
        assert_eq!(out.values(), &[c(3., 0.), c(0., -1.5)]);

        let p = L0CodeParams::new(1.0, 2.0).unwrap();
        let b = C64::from_polar(5.0, PI / 3.0);
        let out = sparse_code_l0(&[b], &p);
        let grid = l0_grid(b, 1.0, 2.0, 1e-4);
        assert_eq!(out.support(), &[0]);
        assert!((out.values()[0] - grid).norm() < 1e-3);
        assert!((out.values()[0] - C64::from_polar(2.0, PI / 3.0)).norm() < 1e-12);
    }

    #[test]
    fn l0_rejects_cap_below_lambda() {
        assert!(L0CodeParams::new(1.0, 1.0).is_err());
        assert!(L0CodeParams::new(2.0, 1.0).is_err());
        assert!(L0CodeParams::new(-1.0, 1.0).is_err());
        assert!(L1CodeParams::new(-0.1).is_err());
    }

    #[test]
    fn l1_examples() {
        let p = L1CodeParams::new(1.0).unwrap();
        assert!(sparse_code_l1(&[c(0., 0.); 3], &p).is_zero());

        // 1-D grid-search oracle over magnitude with step 1e-5.
        let grid = |b: C64, mu: f64| -> C64 {
            let ph = phase_unit(b);
            let best = (0..=((b.norm() + 1.0) / 1e-5) as usize)
                .map(|k| k as f64 * 1e-5)
                .min_by(|x, y| {
                    let fx = (ph * *x - b).norm_sqr() + mu * x;
                    let fy = (ph * *y - b).norm_sqr() + mu * y;
                    fx.total_cmp(&fy)
                })
                .unwrap();
            ph * best
        };
        let out = sparse_code_l1(&[c(2., 0.)], &p);
        assert!((out.values()[0] - grid(c(2., 0.), 1.0)).norm() < 1e-4);
        assert!((out.values()[0] - c(1.5, 0.)).norm() < 1e-12);

        let p = L1CodeParams::new(2.0).unwrap();
        let b = C64::from_polar(3.0, PI / 4.0);
        let out = sparse_code_l1(&[b], &p);
        assert!((out.values()[0] - grid(b, 2.0)).norm() < 1e-4);
        assert!((out.values()[0] - C64::from_polar(2.0, PI / 4.0)).norm() < 1e-12);
    }

    #[test]
    fn tie_diagnostic() {
        let b = [c(0.6, 0.8), c(0.5, 0.)];
        assert_eq!(threshold_ties(&b, 1.0), 1);
        assert!(!l0_minimizer_is_unique(&b, 1.0));
        assert!(l0_minimizer_is_unique(&b, 0.7));
    }
}
