//! Quality measures for learned representations and reconstructions.

use crate::error::{check_dims, Error, Result};
use crate::learn::residual_sq;
use crate::linalg::{CoefMatrix, DenseMatrix};
use crate::patches::ComplexImage;

/// Reported instead of `+∞` when the reconstruction matches the reference exactly.
pub const PSNR_CAP_DB: f64 = 300.0;

/// Normalised sparse representation error `‖Y − DC^H‖_F / ‖Y‖_F`.
pub fn nsre(y: &DenseMatrix, dict: &DenseMatrix, coefs: &CoefMatrix) -> Result<f64> {
    let denom = y.frobenius();
    if denom == 0.0 {
        return Err(Error::Undefined("NSRE of an all-zero data matrix"));
    }
    Ok(residual_sq(y, dict, coefs)?.sqrt() / denom)
}

/// `nnz(C) / (n·N)` for signals of length `n`.
pub fn sparsity_factor(coefs: &CoefMatrix, signal_dim: usize) -> Result<f64> {
    let total = signal_dim * coefs.num_signals();
    if total == 0 {
        return Err(Error::Undefined("sparsity factor of an empty data set"));
    }
    Ok(coefs.nnz() as f64 / total as f64)
}

/// PSNR in dB of the magnitude image: `20·log10(max|ref| / rms(|rec| − |ref|))`.
///
/// Exact agreement gives [`PSNR_CAP_DB`].
pub fn psnr(rec: &ComplexImage, reference: &ComplexImage) -> Result<f64> {
    check_dims("image height", reference.height(), rec.height())?;
    check_dims("image width", reference.width(), rec.width())?;
    let peak = reference.max_abs();
    if peak == 0.0 || reference.as_slice().is_empty() {
        return Err(Error::Undefined("PSNR against an all-zero reference"));
    }
    let mse = rec
        .as_slice()
        .iter()
        .zip(reference.as_slice())
        .map(|(a, b)| (a.norm() - b.norm()).powi(2))
        .sum::<f64>()
        / reference.as_slice().len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((20.0 * (peak / mse.sqrt()).log10()).min(PSNR_CAP_DB))
}

/// Summary row for one run, with NSRE and sparsity in percent.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub nsre_pct: f64,
    pub sparsity_pct: f64,
    pub psnr_db: Option<f64>,
    pub objective: f64,
}

impl MetricReport {
    pub fn from_fit(y: &DenseMatrix, dict: &DenseMatrix, coefs: &CoefMatrix, objective: f64) -> Result<Self> {
        Ok(Self {
            nsre_pct: 100.0 * nsre(y, dict, coefs)?,
            sparsity_pct: 100.0 * sparsity_factor(coefs, y.rows())?,
            psnr_db: None,
            objective,
        })
    }

    /// `key=value` lines; `psnr_db` only when present.
    pub fn to_lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("nsre_pct={}", self.nsre_pct),
            format!("sparsity_pct={}", self.sparsity_pct),
        ];
        if let Some(p) = self.psnr_db {
            out.push(format!("psnr_db={p}"));
        }
        out.push(format!("objective={}", self.objective));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{SparseColumn, C64};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn nsre_examples() {
        let y = DenseMatrix::from_col_major(2, 1, vec![c(3., 0.), c(4., 0.)]).unwrap();
        let d = DenseMatrix::identity(2);
        let zero = CoefMatrix::zeros(1, 2);
        assert!((nsre(&y, &d, &zero).unwrap() - 1.0).abs() < 1e-15);
        let exact = CoefMatrix::from_dense(&y.adjoint().scale(c(1., 0.)));
        assert_eq!(nsre(&y, &d, &exact).unwrap(), 0.0);
        assert!(nsre(&DenseMatrix::zeros(2, 1), &d, &zero).is_err());
    }

    #[test]
    fn sparsity_examples() {
        let mut cm = CoefMatrix::zeros(4, 3);
        cm.set_col(1, SparseColumn::new(4, vec![0, 3], vec![c(1., 0.), c(0., 2.)]).unwrap())
            .unwrap();
        assert!((sparsity_factor(&cm, 2).unwrap() - 2.0 / 8.0).abs() < 1e-15);
        assert!(sparsity_factor(&CoefMatrix::zeros(0, 3), 2).is_err());
    }

    #[test]
    fn psnr_examples() {
        let r = ComplexImage::from_fn(4, 4, |i, j| c((i + j) as f64 / 6.0, 0.0));
        assert_eq!(psnr(&r, &r).unwrap(), PSNR_CAP_DB);
        // constant magnitude offset e: PSNR = 20 log10(1 / e)
        let shifted = ComplexImage::from_fn(4, 4, |i, j| c((i + j) as f64 / 6.0 + 0.01, 0.0));
        assert!((psnr(&shifted, &r).unwrap() - 40.0).abs() < 1e-9);
        // phase is ignored
        let rot = ComplexImage::from_vec(4, 4, r.as_slice().iter().map(|z| z * c(0., 1.)).collect()).unwrap();
        assert_eq!(psnr(&rot, &r).unwrap(), PSNR_CAP_DB);
        assert!(psnr(&r, &ComplexImage::zeros(4, 4)).is_err());
        assert!(psnr(&ComplexImage::zeros(4, 5), &r).is_err());
    }

    #[test]
    fn report_lines() {
        let y = DenseMatrix::from_col_major(2, 2, vec![c(1., 0.), c(0., 0.), c(0., 0.), c(2., 0.)]).unwrap();
        let mut m = MetricReport::from_fit(&y, &DenseMatrix::identity(2), &CoefMatrix::zeros(2, 2), 5.0).unwrap();
        assert_eq!(m.nsre_pct, 100.0);
        m.psnr_db = Some(30.0);
        assert_eq!(m.to_lines(), vec!["nsre_pct=100", "sparsity_pct=0", "psnr_db=30", "objective=5"]);
    }
}
