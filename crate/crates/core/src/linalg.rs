//! Complex dense and sparse primitives.
//!
//! Dense matrices are column-major. Sparse columns keep a strictly increasing
//! support and never store an exact zero, so `nnz` is the ℓ0 "norm".

use num_complex::Complex64;

use crate::error::{check_dims, Error, Result};

pub type C64 = Complex64;

/// Tolerance used when validating unit-norm atoms handed in from outside.
pub const UNIT_NORM_TOL: f64 = 1e-8;

/// `z / |z|`, with `phase_unit(0) = 1`.
#[inline]
pub fn phase_unit(z: C64) -> C64 {
    let m = z.norm();
    if m == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z / m
    }
}

/// `a^H b`.
#[inline]
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter()
        .zip(b)
        .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

#[inline]
pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

#[inline]
pub fn norm2(v: &[C64]) -> f64 {
    norm_sq(v).sqrt()
}

/// `‖a − b‖²` for equal-length slices.
pub fn diff_norm_sq(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        check_dims("DenseMatrix::from_col_major", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length columns.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            check_dims("DenseMatrix::from_columns", rows, c.len())?;
            data.extend_from_slice(c);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[c * self.rows + r] = v;
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[C64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn frobenius_sq(&self) -> f64 {
        norm_sq(&self.data)
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    fn check_same_shape(&self, other: &Self, context: &'static str) -> Result<()> {
        check_dims(context, self.rows, other.rows)?;
        check_dims(context, self.cols, other.cols)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "DenseMatrix::add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { data, ..*self })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "DenseMatrix::sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { data, ..*self })
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * alpha).collect(),
            ..*self
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    /// Plain triple-loop product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dims("DenseMatrix::matmul", self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for c in 0..other.cols {
            for k in 0..self.cols {
                let s = other.get(k, c);
                if s == C64::new(0.0, 0.0) {
                    continue;
                }
                let a = self.col(k);
                for (o, x) in out.col_mut(c).iter_mut().zip(a) {
                    *o += x * s;
                }
            }
        }
        Ok(out)
    }

    /// `M v`.
    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_dims("matvec", self.cols, v.len())?;
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for (c, &s) in v.iter().enumerate() {
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, x) in out.iter_mut().zip(self.col(c)) {
                *o += x * s;
            }
        }
        Ok(out)
    }

    /// `M^H v`; entry `k` is `Σ_i conj(M[i,k]) v[i]`.
    pub fn hermitian_matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_dims("hermitian_matvec", self.rows, v.len())?;
        Ok((0..self.cols).map(|c| cdot(self.col(c), v)).collect())
    }
}

/// A sparse vector with strictly increasing support and no stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseColumn {
    len: usize,
    support: Vec<usize>,
    values: Vec<C64>,
}

impl SparseColumn {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Validating constructor.
    pub fn new(len: usize, support: Vec<usize>, values: Vec<C64>) -> Result<Self> {
        check_dims("SparseColumn::new", support.len(), values.len())?;
        for w in support.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidParameter(
                    "sparse support must be strictly increasing".into(),
                ));
            }
        }
        if support.last().is_some_and(|&i| i >= len) {
            return Err(Error::InvalidParameter("sparse index out of range".into()));
        }
        if values.iter().any(|v| *v == C64::new(0.0, 0.0)) {
            return Err(Error::InvalidParameter(
                "sparse column may not store exact zeros".into(),
            ));
        }
        Ok(Self {
            len,
            support,
            values,
        })
    }

    /// Keeps every entry that is not exactly zero.
    pub fn from_dense(v: &[C64]) -> Self {
        let mut out = Self::zeros(v.len());
        for (i, &z) in v.iter().enumerate() {
            out.push_unchecked(i, z);
        }
        out
    }

    /// Appends `(idx, value)`; `idx` must exceed every stored index. Zeros are dropped.
    pub(crate) fn push_unchecked(&mut self, idx: usize, value: C64) {
        debug_assert!(idx < self.len);
        debug_assert!(self.support.last().is_none_or(|&l| l < idx));
        if value != C64::new(0.0, 0.0) {
            self.support.push(idx);
            self.values.push(value);
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    /// True when every entry is zero.
    #[inline]
    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.len];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    /// `c^H v` for dense `v`.
    pub fn dot_dense(&self, v: &[C64]) -> C64 {
        self.iter()
            .fold(C64::new(0.0, 0.0), |acc, (i, c)| acc + c.conj() * v[i])
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.values)
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖self − other‖²` by merging supports.
    pub fn diff_norm_sq(&self, other: &Self) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.nnz() || b < other.nnz() {
            let ia = self.support.get(a).copied().unwrap_or(usize::MAX);
            let ib = other.support.get(b).copied().unwrap_or(usize::MAX);
            if ia == ib {
                acc += (self.values[a] - other.values[b]).norm_sqr();
                a += 1;
                b += 1;
            } else if ia < ib {
                acc += self.values[a].norm_sqr();
                a += 1;
            } else {
                acc += other.values[b].norm_sqr();
                b += 1;
            }
        }
        acc
    }
}

/// `acc += alpha · c`, touching only the support of `c`.
pub fn sparse_axpy(alpha: C64, c: &SparseColumn, acc: &mut [C64]) -> Result<()> {
    check_dims("sparse_axpy", c.len(), acc.len())?;
    if alpha == C64::new(0.0, 0.0) {
        return Ok(());
    }
    for (i, v) in c.iter() {
        acc[i] += alpha * v;
    }
    Ok(())
}

/// The N×J coefficient matrix `C`, stored as J sparse columns of length N.
///
/// Row `i` of `C` is the conjugate transpose of signal `i`'s sparse code,
/// so the data model is `Y ≈ D C^H = Σ_j d_j c_j^H`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefMatrix {
    rows: usize,
    columns: Vec<SparseColumn>,
}

impl CoefMatrix {
    pub fn zeros(num_signals: usize, num_atoms: usize) -> Self {
        Self {
            rows: num_signals,
            columns: vec![SparseColumn::zeros(num_signals); num_atoms],
        }
    }

    pub fn from_columns(num_signals: usize, columns: Vec<SparseColumn>) -> Result<Self> {
        for c in &columns {
            check_dims("CoefMatrix::from_columns", num_signals, c.len())?;
        }
        Ok(Self {
            rows: num_signals,
            columns,
        })
    }

    /// Sparse view of a dense N×J matrix.
    pub fn from_dense(m: &DenseMatrix) -> Self {
        Self {
            rows: m.rows(),
            columns: (0..m.cols())
                .map(|j| SparseColumn::from_dense(m.col(j)))
                .collect(),
        }
    }

    #[inline]
    pub fn num_signals(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn num_atoms(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn col(&self, j: usize) -> &SparseColumn {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[SparseColumn] {
        &self.columns
    }

    pub fn set_col(&mut self, j: usize, c: SparseColumn) -> Result<()> {
        check_dims("CoefMatrix::set_col", self.rows, c.len())?;
        self.columns[j] = c;
        Ok(())
    }

    pub(crate) fn replace_col(&mut self, j: usize, c: SparseColumn) -> SparseColumn {
        std::mem::replace(&mut self.columns[j], c)
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(SparseColumn::nnz).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.columns.iter().map(SparseColumn::l1_norm).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.columns
            .iter()
            .map(SparseColumn::max_abs)
            .fold(0.0, f64::max)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.columns.iter().map(SparseColumn::norm_sq).sum()
    }

    pub fn diff_frobenius_sq(&self, other: &Self) -> f64 {
        self.columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| a.diff_norm_sq(b))
            .sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.columns.len());
        for (j, c) in self.columns.iter().enumerate() {
            for (i, v) in c.iter() {
                m.set(i, j, v);
            }
        }
        m
    }

    /// `D C^H` (n×N), accumulated over the sparse supports.
    pub fn synthesize(&self, dict: &DenseMatrix) -> Result<DenseMatrix> {
        check_dims("CoefMatrix::synthesize", dict.cols(), self.num_atoms())?;
        let mut out = DenseMatrix::zeros(dict.rows(), self.rows);
        self.accumulate_synthesis(dict, 1.0, &mut out);
        Ok(out)
    }

    /// Adds `sign · D C^H` into `out` (n×N) without shape checks.
    pub(crate) fn accumulate_synthesis(&self, dict: &DenseMatrix, sign: f64, out: &mut DenseMatrix) {
        for (k, c) in self.columns.iter().enumerate() {
            let atom = dict.col(k);
            for (i, v) in c.iter() {
                let s = v.conj() * sign;
                for (o, d) in out.col_mut(i).iter_mut().zip(atom) {
                    *o += d * s;
                }
            }
        }
    }
}

/// An n×J matrix whose columns (atoms) have unit ℓ2 norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary(DenseMatrix);

impl Dictionary {
    /// Accepts `m` if every column has unit norm within [`UNIT_NORM_TOL`].
    pub fn new(m: DenseMatrix) -> Result<Self> {
        for j in 0..m.cols() {
            let nrm = norm2(m.col(j));
            if (nrm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "dictionary atom {j} has norm {nrm}, expected 1"
                )));
            }
        }
        Ok(Self(m))
    }

    /// Scales every column to unit norm. Zero columns are rejected.
    pub fn normalized(mut m: DenseMatrix) -> Result<Self> {
        for j in 0..m.cols() {
            let nrm = norm2(m.col(j));
            if nrm == 0.0 {
                return Err(Error::Degenerate(format!("dictionary column {j} is zero")));
            }
            m.col_mut(j).iter_mut().for_each(|z| *z /= nrm);
        }
        Ok(Self(m))
    }

    #[inline]
    pub fn signal_dim(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn num_atoms(&self) -> usize {
        self.0.cols()
    }

    #[inline]
    pub fn atom(&self, j: usize) -> &[C64] {
        self.0.col(j)
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn matvec_examples() {
        let id = DenseMatrix::identity(2);
        assert_eq!(id.matvec(&[c(1., 1.), c(2., 0.)]).unwrap(), vec![c(1., 1.), c(2., 0.)]);

        let z = DenseMatrix::zeros(3, 2);
        assert_eq!(z.matvec(&[c(5., 0.), c(7., 0.)]).unwrap(), vec![c(0., 0.); 3]);

        let m = DenseMatrix::from_fn(2, 2, |r, k| c((2 * r + k + 1) as f64, 0.));
        // scalar-loop oracle
        let v = [c(1., 0.), c(1., 0.)];
        let mut oracle = [c(0., 0.); 2];
        #[allow(clippy::needless_range_loop)]
        for r in 0..2 {
            for k in 0..2 {
                oracle[r] += m.get(r, k) * v[k];
            }
        }
        assert_eq!(oracle, [c(3., 0.), c(7., 0.)]);
        assert_eq!(m.matvec(&v).unwrap(), oracle.to_vec());

        assert!(m.matvec(&[c(1., 0.)]).is_err());
    }

    #[test]
    fn hermitian_matvec_conjugates() {
        let id = DenseMatrix::identity(2);
        assert_eq!(
            id.hermitian_matvec(&[c(1., 1.), c(2., 0.)]).unwrap(),
            vec![c(1., 1.), c(2., 0.)]
        );
        let m = DenseMatrix::from_fn(2, 2, |r, k| if r == k { c(0., 1.) } else { c(0., 0.) });
        assert_eq!(
            m.hermitian_matvec(&[c(1., 0.), c(1., 0.)]).unwrap(),
            vec![c(0., -1.), c(0., -1.)]
        );
        assert!(m.hermitian_matvec(&[c(1., 0.)]).is_err());
    }

    #[test]
    fn hermitian_matvec_matches_adjoint_then_multiply() {
        let m = DenseMatrix::from_fn(3, 2, |r, k| c(r as f64 - 0.3 * k as f64, 0.7 * (r * k) as f64 - 0.2));
        let v = [c(0.1, -1.0), c(2.0, 0.5), c(-0.7, 0.3)];
        let fast = m.hermitian_matvec(&v).unwrap();
        let naive = m.adjoint().matvec(&v).unwrap();
        for (a, b) in fast.iter().zip(&naive) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sparse_axpy_examples() {
        let col = SparseColumn::new(3, vec![1], vec![c(3., 0.)]).unwrap();
        let mut acc = vec![c(1., 0.); 3];
        sparse_axpy(c(0., 0.), &col, &mut acc).unwrap();
        assert_eq!(acc, vec![c(1., 0.); 3]);

        sparse_axpy(c(2., 0.), &SparseColumn::zeros(3), &mut acc).unwrap();
        assert_eq!(acc, vec![c(1., 0.); 3]);

        sparse_axpy(c(2., 0.), &col, &mut acc).unwrap();
        // dense-path oracle
        let dense: Vec<C64> = col.to_dense().iter().map(|v| c(1., 0.) + c(2., 0.) * v).collect();
        assert_eq!(acc, dense);
        assert_eq!(acc, vec![c(1., 0.), c(7., 0.), c(1., 0.)]);

        assert!(sparse_axpy(c(1., 0.), &col, &mut [c(0., 0.); 2]).is_err());
    }

    #[test]
    fn sparse_column_validation() {
        assert!(SparseColumn::new(3, vec![2, 1], vec![c(1., 0.), c(1., 0.)]).is_err());
        assert!(SparseColumn::new(3, vec![3], vec![c(1., 0.)]).is_err());
        assert!(SparseColumn::new(3, vec![0], vec![c(0., 0.)]).is_err());
        let s = SparseColumn::from_dense(&[c(0., 0.), c(1e-300, 0.), c(0., 0.)]);
        assert_eq!(s.support(), &[1]);
    }

    #[test]
    fn phase_unit_of_zero_is_one() {
        assert_eq!(phase_unit(c(0., 0.)), c(1., 0.));
        assert!((phase_unit(c(3., -4.)).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dictionary_requires_unit_columns() {
        let m = DenseMatrix::from_fn(2, 2, |_, _| c(1., 0.));
        assert!(Dictionary::new(m.clone()).is_err());
        let d = Dictionary::normalized(m).unwrap();
        assert!((norm2(d.atom(1)) - 1.0).abs() < 1e-15);
        assert!(Dictionary::normalized(DenseMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn coef_synthesis_matches_dense_product() {
        let d = DenseMatrix::from_fn(3, 2, |r, k| c(r as f64 + 1.0, k as f64));
        let cm = DenseMatrix::from_fn(4, 2, |i, k| if (i + k) % 2 == 0 { c(i as f64, 1.0) } else { c(0., 0.) });
        let coefs = CoefMatrix::from_dense(&cm);
        let fast = coefs.synthesize(&d).unwrap();
        let naive = d.matmul(&cm.adjoint()).unwrap();
        assert!(fast.sub(&naive).unwrap().frobenius() < 1e-12);
    }
}
