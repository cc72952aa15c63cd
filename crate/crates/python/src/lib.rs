//! Python bindings. Images are lists of rows, signals and atoms are lists of
//! complex numbers, and sets of signals are lists of signals.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use soupdil::learn::{self, LearnConfig, LearnState, Penalty};
use soupdil::linalg::{CoefMatrix, DenseMatrix, Dictionary, C64};
use soupdil::patches::ComplexImage;
use soupdil::sensing::{MaskScheme, MriOperator, SamplingMask};
use soupdil::thresholding::{L0CodeParams, L1CodeParams};
use soupdil::{baselines, metrics, sensing, thresholding, Error};
use soupdil_cli::commands::recon::{run_recon, ReconParams};
use soupdil_cli::error::CliError;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Usage(m) => PyValueError::new_err(m),
        CliError::Core(e) => py_err(e),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn image_from_rows(rows: Vec<Vec<C64>>) -> PyResult<ComplexImage> {
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        return Err(PyValueError::new_err("image rows must all have the same length"));
    }
    ComplexImage::from_vec(h, w, rows.into_iter().flatten().collect()).map_err(py_err)
}

fn image_to_rows(img: &ComplexImage) -> Vec<Vec<C64>> {
    img.as_slice().chunks(img.width().max(1)).map(<[C64]>::to_vec).collect()
}

fn matrix_from_columns(cols: &[Vec<C64>]) -> PyResult<DenseMatrix> {
    DenseMatrix::from_columns(cols).map_err(py_err)
}

fn mask_from_rows(rows: Vec<Vec<bool>>) -> PyResult<SamplingMask> {
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        return Err(PyValueError::new_err("mask rows must all have the same length"));
    }
    SamplingMask::from_kept(h, w, rows.into_iter().flatten().collect()).map_err(py_err)
}

/// A dictionary with unit-norm atoms.
#[pyclass(name = "Dictionary", module = "pysoupdil")]
#[derive(Clone)]
struct PyDictionary {
    inner: Dictionary,
}

#[pymethods]
impl PyDictionary {
    /// Builds a dictionary from a list of atoms. With `normalize`, nonzero
    /// atoms are scaled to unit norm; otherwise they must already be unit norm.
    #[new]
    #[pyo3(signature = (atoms, normalize = false))]
    fn new(atoms: Vec<Vec<C64>>, normalize: bool) -> PyResult<Self> {
        let m = matrix_from_columns(&atoms)?;
        let inner = if normalize { Dictionary::normalized(m) } else { Dictionary::new(m) };
        Ok(Self { inner: inner.map_err(py_err)? })
    }

    #[staticmethod]
    fn overcomplete_dct(n: usize, atoms: usize) -> PyResult<Self> {
        Ok(Self { inner: learn::overcomplete_dct(n, atoms).map_err(py_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, atoms, seed = 0))]
    fn dct_plus_random(n: usize, atoms: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: learn::dct_plus_random(n, atoms, seed).map_err(py_err)? })
    }

    #[getter]
    fn signal_dim(&self) -> usize {
        self.inner.signal_dim()
    }

    #[getter]
    fn num_atoms(&self) -> usize {
        self.inner.num_atoms()
    }

    fn atom(&self, j: usize) -> PyResult<Vec<C64>> {
        if j >= self.inner.num_atoms() {
            return Err(PyValueError::new_err(format!("atom index {j} out of range")));
        }
        Ok(self.inner.atom(j).to_vec())
    }

    fn atoms(&self) -> Vec<Vec<C64>> {
        (0..self.inner.num_atoms()).map(|j| self.inner.atom(j).to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Dictionary({}x{})", self.inner.signal_dim(), self.inner.num_atoms())
    }
}

#[pyclass(name = "LearnResult", module = "pysoupdil", get_all)]
struct LearnResult {
    dictionary: PyDictionary,
    /// `codes[i]` is the sparse code of signal `i` (length `J`).
    codes: Vec<Vec<C64>>,
    objective_trace: Vec<f64>,
    dict_diff_trace: Vec<f64>,
    coef_diff_trace: Vec<f64>,
    nsre: f64,
    sparsity: f64,
}

fn codes_of(coefs: &CoefMatrix) -> Vec<Vec<C64>> {
    let dense = coefs.to_dense();
    (0..dense.rows())
        .map(|i| (0..dense.cols()).map(|j| dense.get(i, j).conj()).collect())
        .collect()
}

fn penalty(kind: &str, weight: f64, cap: f64) -> PyResult<Penalty> {
    match kind {
        "l0" => Ok(Penalty::L0(L0CodeParams::new(weight, cap).map_err(py_err)?)),
        "l1" => Penalty::l1(weight).map_err(py_err),
        other => Err(PyValueError::new_err(format!("penalty must be 'l0' or 'l1', got '{other}'"))),
    }
}

/// Dictionary learning from `C = 0`: SOUP-DILLO for `penalty="l0"` (weight λ),
/// OS-DL for `penalty="l1"` (weight μ).
#[pyfunction]
#[pyo3(signature = (signals, dictionary, penalty_kind = "l0", weight = 0.1, iterations = 10, cap = learn::DEFAULT_CAP))]
fn learn_dictionary(
    signals: Vec<Vec<C64>>,
    dictionary: &PyDictionary,
    penalty_kind: &str,
    weight: f64,
    iterations: usize,
    cap: f64,
) -> PyResult<LearnResult> {
    let y = matrix_from_columns(&signals)?;
    let p = penalty(penalty_kind, weight, cap)?;
    let j = dictionary.inner.num_atoms();
    let cfg = LearnConfig::new(j, p, iterations).map_err(py_err)?;
    let state = LearnState::initial(dictionary.inner.clone(), y.cols());
    let out = learn::learn(&y, state, &cfg).map_err(py_err)?;
    let nsre = metrics::nsre(&y, out.dictionary.as_matrix(), &out.coefs).map_err(py_err)?;
    let sparsity = metrics::sparsity_factor(&out.coefs, y.rows()).map_err(py_err)?;
    Ok(LearnResult {
        codes: codes_of(&out.coefs),
        dictionary: PyDictionary { inner: out.dictionary },
        objective_trace: out.objective_trace,
        dict_diff_trace: out.dict_diff_trace,
        coef_diff_trace: out.coef_diff_trace,
        nsre,
        sparsity,
    })
}

/// Truncated hard thresholding of `b` at `lam` with magnitude cap `cap`.
#[pyfunction]
#[pyo3(signature = (b, lam, cap = learn::DEFAULT_CAP))]
fn sparse_code_l0(b: Vec<C64>, lam: f64, cap: f64) -> PyResult<Vec<C64>> {
    let p = L0CodeParams::new(lam, cap).map_err(py_err)?;
    Ok(thresholding::sparse_code_l0(&b, &p).to_dense())
}

/// Soft thresholding of `b` at `mu / 2`.
#[pyfunction]
fn sparse_code_l1(b: Vec<C64>, mu: f64) -> PyResult<Vec<C64>> {
    let p = L1CodeParams::new(mu).map_err(py_err)?;
    Ok(thresholding::sparse_code_l1(&b, &p).to_dense())
}

/// Orthogonal matching pursuit with at most `sparsity` atoms.
#[pyfunction]
#[pyo3(signature = (dictionary, signal, sparsity, err_tol = baselines::OmpParams::DEFAULT_ERR_TOL))]
fn omp(dictionary: &PyDictionary, signal: Vec<C64>, sparsity: usize, err_tol: f64) -> PyResult<Vec<C64>> {
    let p = baselines::OmpParams::new(sparsity, err_tol).map_err(py_err)?;
    Ok(baselines::omp_code(&dictionary.inner, &signal, &p).map_err(py_err)?.code.to_dense())
}

/// The built-in complex test phantom, unit peak.
#[pyfunction]
fn phantom(size: usize) -> Vec<Vec<C64>> {
    image_to_rows(&soupdil_cli::phantom::phantom(size))
}

/// Sampling mask as rows of booleans (centred k-space layout).
#[pyfunction]
#[pyo3(signature = (height, width, scheme = "cartesian", factor = 2.5, seed = 0))]
fn make_mask(height: usize, width: usize, scheme: &str, factor: f64, seed: u64) -> PyResult<Vec<Vec<bool>>> {
    let scheme: MaskScheme = scheme.parse().map_err(py_err)?;
    let m = sensing::make_mask(height, width, scheme, factor, seed).map_err(py_err)?;
    Ok(m.kept().chunks(width.max(1)).map(<[bool]>::to_vec).collect())
}

/// Undersampled unitary DFT of `image` at the kept mask entries.
#[pyfunction]
fn mri_forward(image: Vec<Vec<C64>>, mask: Vec<Vec<bool>>) -> PyResult<Vec<C64>> {
    let op = MriOperator::new(mask_from_rows(mask)?);
    op.forward(&image_from_rows(image)?).map_err(py_err)
}

/// Zero-filled reconstruction `A^H z`.
#[pyfunction]
fn mri_adjoint(samples: Vec<C64>, mask: Vec<Vec<bool>>) -> PyResult<Vec<Vec<C64>>> {
    let op = MriOperator::new(mask_from_rows(mask)?);
    Ok(image_to_rows(&op.adjoint(&samples).map_err(py_err)?))
}

/// PSNR in dB of the magnitudes of `rec` against `reference`.
#[pyfunction]
fn psnr(rec: Vec<Vec<C64>>, reference: Vec<Vec<C64>>) -> PyResult<f64> {
    metrics::psnr(&image_from_rows(rec)?, &image_from_rows(reference)?).map_err(py_err)
}

#[pyclass(name = "ReconResult", module = "pysoupdil", get_all)]
struct ReconResult {
    image: Vec<Vec<C64>>,
    dictionary: PyDictionary,
    objective_trace: Vec<f64>,
    /// Empty without a reference.
    psnr_trace: Vec<f64>,
    image_diff_trace: Vec<f64>,
    zero_filled_psnr: Option<f64>,
}

/// Dictionary-blind reconstruction (`model="l0"`: SOUP-DILLO MRI,
/// `model="l1"`: SOUP-DILLI MRI) with a linear weight ramp.
#[pyfunction]
#[pyo3(signature = (
    samples, mask, model = "l0", outer_iters = 45, inner_iters = None, patch = 6, atoms = 144,
    lambda_start = 0.35, lambda_end = 0.01, nu = None, seed = 0, reference = None
))]
#[allow(clippy::too_many_arguments)]
fn reconstruct(
    samples: Vec<C64>,
    mask: Vec<Vec<bool>>,
    model: &str,
    outer_iters: usize,
    inner_iters: Option<usize>,
    patch: usize,
    atoms: usize,
    lambda_start: f64,
    lambda_end: f64,
    nu: Option<f64>,
    seed: u64,
    reference: Option<Vec<Vec<C64>>>,
) -> PyResult<ReconResult> {
    let l1 = match model {
        "l0" => false,
        "l1" => true,
        other => return Err(PyValueError::new_err(format!("model must be 'l0' or 'l1', got '{other}'"))),
    };
    let d = ReconParams::defaults(l1);
    let p = ReconParams {
        outer_iters,
        inner_iters: inner_iters.unwrap_or(d.inner_iters),
        patch,
        atoms,
        lambda_start,
        lambda_end,
        nu,
        seed,
        ..d
    };
    let op = MriOperator::new(mask_from_rows(mask)?);
    let reference = reference
        .map(image_from_rows)
        .transpose()?
        .map(|r| r.normalized_to_unit_peak())
        .transpose()
        .map_err(py_err)?;
    let out = run_recon(&samples, &op, reference.as_ref(), &p).map_err(cli_err)?;
    Ok(ReconResult {
        image: image_to_rows(&out.state.image),
        dictionary: PyDictionary { inner: out.state.learn.dictionary },
        objective_trace: out.state.objective_trace,
        psnr_trace: out.state.psnr_trace,
        image_diff_trace: out.state.image_diff_trace,
        zero_filled_psnr: out.zero_filled_psnr_db,
    })
}

#[pymodule]
fn pysoupdil(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDictionary>()?;
    m.add_class::<LearnResult>()?;
    m.add_class::<ReconResult>()?;
    m.add_function(wrap_pyfunction!(learn_dictionary, m)?)?;
    m.add_function(wrap_pyfunction!(sparse_code_l0, m)?)?;
    m.add_function(wrap_pyfunction!(sparse_code_l1, m)?)?;
    m.add_function(wrap_pyfunction!(omp, m)?)?;
    m.add_function(wrap_pyfunction!(phantom, m)?)?;
    m.add_function(wrap_pyfunction!(make_mask, m)?)?;
    m.add_function(wrap_pyfunction!(mri_forward, m)?)?;
    m.add_function(wrap_pyfunction!(mri_adjoint, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    Ok(())
}
