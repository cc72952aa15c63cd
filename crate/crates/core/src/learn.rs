//! Block coordinate descent dictionary learning in the sum-of-outer-products
//! form `Y ≈ Σ_j d_j c_j^H`.
//!
//! Each inner step updates one pair `(c_j, d_j)`: the sparse code by exact
//! thresholding of `b = E_j^H d_j`, then the atom by normalising `h = E_j c_j`.
//! The residual `E_j = Y − Σ_{k≠j} d_k c_k^H` is never formed; `b` and `h` are
//! evaluated from `Y`, `D` and the sparse columns of `C` directly.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dims, Error, Result};
use crate::linalg::{cdot, norm2, CoefMatrix, DenseMatrix, Dictionary, SparseColumn, C64};
use crate::thresholding::{
    sparse_code_l0, sparse_code_l1, threshold_ties, L0CodeParams, L1CodeParams,
};

/// Sparsity penalty used in the sparse-coding step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Penalty {
    /// `λ² ‖C‖₀` with `‖C‖_∞ ≤ L` (SOUP-DILLO).
    L0(L0CodeParams),
    /// `μ ‖C‖₁` (OS-DL).
    L1(L1CodeParams),
}

impl Penalty {
    pub fn l0(lambda: f64) -> Result<Self> {
        Ok(Penalty::L0(L0CodeParams::new(lambda, DEFAULT_CAP)?))
    }

    pub fn l1(mu: f64) -> Result<Self> {
        Ok(Penalty::L1(L1CodeParams::new(mu)?))
    }

    /// Penalty value for the given coefficients.
    pub fn value(&self, coefs: &CoefMatrix) -> f64 {
        match self {
            Penalty::L0(p) => p.lambda() * p.lambda() * coefs.nnz() as f64,
            Penalty::L1(p) => p.mu() * coefs.l1_norm(),
        }
    }

    fn code(&self, b: &[C64]) -> SparseColumn {
        match self {
            Penalty::L0(p) => sparse_code_l0(b, p),
            Penalty::L1(p) => sparse_code_l1(b, p),
        }
    }

    fn cap(&self) -> Option<f64> {
        match self {
            Penalty::L0(p) => Some(p.cap()),
            Penalty::L1(_) => None,
        }
    }
}

/// Default magnitude cap `L` for ℓ0 coding. Large enough to never bind.
pub const DEFAULT_CAP: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomOrder {
    /// `j = 0, 1, …, J−1` every iteration.
    Cyclic,
    /// A fresh random permutation every iteration, from a seeded generator.
    Random { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnConfig {
    pub num_atoms: usize,
    pub penalty: Penalty,
    pub iterations: usize,
    pub atom_order: AtomOrder,
    fallback_atom: Option<Vec<C64>>,
    /// Record the objective after every sparse-coding and atom step.
    pub record_inner_steps: bool,
}

impl LearnConfig {
    pub fn new(num_atoms: usize, penalty: Penalty, iterations: usize) -> Result<Self> {
        if num_atoms == 0 {
            return Err(Error::InvalidParameter("need at least one atom".into()));
        }
        if iterations == 0 {
            return Err(Error::InvalidParameter("need at least one iteration".into()));
        }
        Ok(Self {
            num_atoms,
            penalty,
            iterations,
            atom_order: AtomOrder::Cyclic,
            fallback_atom: None,
            record_inner_steps: false,
        })
    }

    pub fn with_order(mut self, order: AtomOrder) -> Self {
        self.atom_order = order;
        self
    }

    pub fn with_inner_trace(mut self, on: bool) -> Self {
        self.record_inner_steps = on;
        self
    }

    /// Replaces the default fallback atom `e₁`. Must have unit norm within 1e-12.
    pub fn with_fallback_atom(mut self, v: Vec<C64>) -> Result<Self> {
        let nrm = norm2(&v);
        if (nrm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "fallback atom must have unit norm, got {nrm}"
            )));
        }
        self.fallback_atom = Some(v);
        Ok(self)
    }

    /// The atom assigned whenever a code column becomes zero.
    pub fn fallback_atom(&self, n: usize) -> Result<Vec<C64>> {
        match &self.fallback_atom {
            Some(v) => {
                check_dims("fallback atom", n, v.len())?;
                Ok(v.clone())
            }
            None => {
                let mut e1 = vec![C64::new(0.0, 0.0); n];
                e1[0] = C64::new(1.0, 0.0);
                Ok(e1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnState {
    pub dictionary: Dictionary,
    pub coefs: CoefMatrix,
    /// Objective after each outer iteration.
    pub objective_trace: Vec<f64>,
    /// `‖D^t − D^{t−1}‖_F` per outer iteration.
    pub dict_diff_trace: Vec<f64>,
    /// `‖C^t − C^{t−1}‖_F` per outer iteration.
    pub coef_diff_trace: Vec<f64>,
    /// Objective after every inner step, when enabled in the config.
    pub inner_objective_trace: Vec<f64>,
    /// ℓ0 sparse-coding steps that hit an entry with `|b_i| = λ` exactly.
    pub threshold_ties: usize,
}

impl LearnState {
    pub fn new(dictionary: Dictionary, coefs: CoefMatrix) -> Result<Self> {
        check_dims(
            "LearnState atoms",
            dictionary.num_atoms(),
            coefs.num_atoms(),
        )?;
        Ok(Self {
            dictionary,
            coefs,
            objective_trace: Vec::new(),
            dict_diff_trace: Vec::new(),
            coef_diff_trace: Vec::new(),
            inner_objective_trace: Vec::new(),
            threshold_ties: 0,
        })
    }

    /// `C⁰ = 0` with the given dictionary.
    pub fn initial(dictionary: Dictionary, num_signals: usize) -> Self {
        let j = dictionary.num_atoms();
        Self::new(dictionary, CoefMatrix::zeros(num_signals, j)).expect("shapes agree")
    }

    pub fn clear_traces(&mut self) {
        self.objective_trace.clear();
        self.dict_diff_trace.clear();
        self.coef_diff_trace.clear();
        self.inner_objective_trace.clear();
        self.threshold_ties = 0;
    }
}

/// Constraint checks standing in for the barrier terms of the objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Feasibility {
    pub atoms_unit_norm: bool,
    pub coefs_within_cap: bool,
}

impl Feasibility {
    pub fn ok(&self) -> bool {
        self.atoms_unit_norm && self.coefs_within_cap
    }
}

pub fn feasibility(dict: &DenseMatrix, coefs: &CoefMatrix, cap: Option<f64>) -> Feasibility {
    let atoms_unit_norm = (0..dict.cols()).all(|j| (norm2(dict.col(j)) - 1.0).abs() <= 1e-10);
    let coefs_within_cap = cap.is_none_or(|l| coefs.max_abs() <= l);
    Feasibility {
        atoms_unit_norm,
        coefs_within_cap,
    }
}

fn check_shapes(y: &DenseMatrix, dict: &DenseMatrix, coefs: &CoefMatrix) -> Result<()> {
    check_dims("signal dimension", y.rows(), dict.rows())?;
    check_dims("signal count", y.cols(), coefs.num_signals())?;
    check_dims("atom count", dict.cols(), coefs.num_atoms())
}

/// `‖Y − D C^H‖_F²`.
pub fn residual_sq(y: &DenseMatrix, dict: &DenseMatrix, coefs: &CoefMatrix) -> Result<f64> {
    check_shapes(y, dict, coefs)?;
    let mut r = y.clone();
    coefs.accumulate_synthesis(dict, -1.0, &mut r);
    Ok(r.frobenius_sq())
}

/// `‖Y − D C^H‖_F² + λ² ‖C‖₀`.
pub fn objective_l0(y: &DenseMatrix, dict: &DenseMatrix, coefs: &CoefMatrix, lambda: f64) -> Result<f64> {
    Ok(residual_sq(y, dict, coefs)? + lambda * lambda * coefs.nnz() as f64)
}

/// `‖Y − D C^H‖_F² + μ ‖C‖₁`.
pub fn objective_l1(y: &DenseMatrix, dict: &DenseMatrix, coefs: &CoefMatrix, mu: f64) -> Result<f64> {
    Ok(residual_sq(y, dict, coefs)? + mu * coefs.l1_norm())
}

pub fn objective(y: &DenseMatrix, dict: &DenseMatrix, coefs: &CoefMatrix, penalty: &Penalty) -> Result<f64> {
    Ok(residual_sq(y, dict, coefs)? + penalty.value(coefs))
}

/// Minimiser of `‖E_j − d c_j^H‖_F²` over unit-norm `d`, given `ec = E_j c_j`.
///
/// Returns `ec / ‖ec‖` when the code is nonzero and `fallback` otherwise.
pub fn atom_update(ec: &[C64], c_nonzero: bool, fallback: &[C64]) -> Result<Vec<C64>> {
    if !c_nonzero {
        return Ok(fallback.to_vec());
    }
    let nrm = norm2(ec);
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(Error::Degenerate(format!(
            "E_j c_j has norm {nrm} for a nonzero code"
        )));
    }
    Ok(ec.iter().map(|z| z / nrm).collect())
}

fn compute_b_into(y: &DenseMatrix, dict: &DenseMatrix, coefs: &CoefMatrix, j: usize, out: &mut Vec<C64>) {
    let d = dict.col(j);
    out.clear();
    out.extend((0..y.cols()).map(|i| cdot(y.col(i), d)));
    // The k = j term of C D^H d_j is c_j ‖d_j‖² = c_j, which the trailing + c_j cancels.
    for (k, ck) in coefs.columns().iter().enumerate() {
        if k == j || ck.is_zero() {
            continue;
        }
        let w = cdot(dict.col(k), d);
        for (i, v) in ck.iter() {
            out[i] -= v * w;
        }
    }
}

/// `b = Y^H d_j − C D^H d_j + c_j = E_j^H d_j`, where column `j` of `(D, C)`
/// holds the previous iterates `(d_j^{t−1}, c_j^{t−1})`.
pub fn compute_b(y: &DenseMatrix, dict: &DenseMatrix, coefs: &CoefMatrix, j: usize) -> Result<Vec<C64>> {
    check_shapes(y, dict, coefs)?;
    check_index(j, dict.cols())?;
    let mut out = Vec::with_capacity(y.cols());
    compute_b_into(y, dict, coefs, j, &mut out);
    Ok(out)
}

fn compute_h_into(
    y: &DenseMatrix,
    dict: &DenseMatrix,
    coefs: &CoefMatrix,
    j: usize,
    c_new: &SparseColumn,
    scatter: &mut [C64],
    out: &mut [C64],
) {
    out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    if c_new.is_zero() {
        return;
    }
    // Y c
    for (i, v) in c_new.iter() {
        for (o, yv) in out.iter_mut().zip(y.col(i)) {
            *o += yv * v;
        }
        scatter[i] = v;
    }
    // − Σ_{k≠j} d_k (c_k^H c): the k = j term of D C^H c cancels against d_j c_j^H c.
    for (k, ck) in coefs.columns().iter().enumerate() {
        if k == j || ck.is_zero() {
            continue;
        }
        let u = ck.dot_dense(scatter);
        if u == C64::new(0.0, 0.0) {
            continue;
        }
        for (o, d) in out.iter_mut().zip(dict.col(k)) {
            *o -= d * u;
        }
    }
    for &i in c_new.support() {
        scatter[i] = C64::new(0.0, 0.0);
    }
}

/// `h = Y c − D C^H c + d_j (c_j^H c) = E_j c`, with column `j` of `(D, C)`
/// holding the previous iterates and `c_new` the freshly coded column.
pub fn compute_h(
    y: &DenseMatrix,
    dict: &DenseMatrix,
    coefs: &CoefMatrix,
    j: usize,
    c_new: &SparseColumn,
) -> Result<Vec<C64>> {
    check_shapes(y, dict, coefs)?;
    check_index(j, dict.cols())?;
    check_dims("compute_h code length", y.cols(), c_new.len())?;
    let mut scatter = vec![C64::new(0.0, 0.0); y.cols()];
    let mut out = vec![C64::new(0.0, 0.0); y.rows()];
    compute_h_into(y, dict, coefs, j, c_new, &mut scatter, &mut out);
    Ok(out)
}

fn check_index(j: usize, num_atoms: usize) -> Result<()> {
    if j < num_atoms {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "atom index {j} out of range for {num_atoms} atoms"
        )))
    }
}

fn validate_learn_inputs(y: &DenseMatrix, state: &LearnState, cfg: &LearnConfig) -> Result<()> {
    if y.rows() == 0 || y.cols() == 0 {
        return Err(Error::InvalidParameter("training data is empty".into()));
    }
    check_shapes(y, state.dictionary.as_matrix(), &state.coefs)?;
    check_dims("configured atom count", cfg.num_atoms, state.dictionary.num_atoms())?;
    if let Some(cap) = cfg.penalty.cap() {
        let m = state.coefs.max_abs();
        if m > cap {
            return Err(Error::InvalidParameter(format!(
                "initial coefficients exceed the cap ({m} > {cap})"
            )));
        }
    }
    Ok(())
}

/// Runs `cfg.iterations` outer iterations of block coordinate descent.
///
/// Dispatches on the penalty: ℓ0 gives SOUP-DILLO, ℓ1 gives OS-DL. Traces are
/// appended to those already in `state`.
pub fn learn(y: &DenseMatrix, mut state: LearnState, cfg: &LearnConfig) -> Result<LearnState> {
    validate_learn_inputs(y, &state, cfg)?;
    let n = y.rows();
    let nsig = y.cols();
    let jn = cfg.num_atoms;
    let fallback = cfg.fallback_atom(n)?;
    let penalty = cfg.penalty;

    let mut order: Vec<usize> = (0..jn).collect();
    let mut rng = match cfg.atom_order {
        AtomOrder::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        AtomOrder::Cyclic => None,
    };

    let mut b = Vec::with_capacity(nsig);
    let mut h = vec![C64::new(0.0, 0.0); n];
    let mut scatter = vec![C64::new(0.0, 0.0); nsig];
    let mut dict = state.dictionary.into_matrix();
    let mut coefs = state.coefs;

    for _ in 0..cfg.iterations {
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        let mut dict_diff = 0.0;
        let mut coef_diff = 0.0;
        for &j in &order {
            compute_b_into(y, &dict, &coefs, j, &mut b);
            if let Penalty::L0(p) = &penalty {
                if threshold_ties(&b, p.lambda()) > 0 {
                    state.threshold_ties += 1;
                }
            }
            let c_new = penalty.code(&b);
            compute_h_into(y, &dict, &coefs, j, &c_new, &mut scatter, &mut h);
            let d_new = atom_update(&h, !c_new.is_zero(), &fallback)?;

            coef_diff += c_new.diff_norm_sq(coefs.col(j));
            dict_diff += crate::linalg::diff_norm_sq(&d_new, dict.col(j));
            coefs.replace_col(j, c_new);
            if cfg.record_inner_steps {
                state
                    .inner_objective_trace
                    .push(objective(y, &dict, &coefs, &penalty)?);
            }
            dict.col_mut(j).copy_from_slice(&d_new);
            if cfg.record_inner_steps {
                state
                    .inner_objective_trace
                    .push(objective(y, &dict, &coefs, &penalty)?);
            }
        }
        state.objective_trace.push(objective(y, &dict, &coefs, &penalty)?);
        state.dict_diff_trace.push(dict_diff.sqrt());
        state.coef_diff_trace.push(coef_diff.sqrt());
    }

    state.dictionary = Dictionary::new(dict)?;
    state.coefs = coefs;
    Ok(state)
}

/// SOUP-DILLO: [`learn`] with an ℓ0 penalty.
pub fn soup_dillo(y: &DenseMatrix, init: LearnState, cfg: &LearnConfig) -> Result<LearnState> {
    match cfg.penalty {
        Penalty::L0(_) => learn(y, init, cfg),
        Penalty::L1(_) => Err(Error::InvalidParameter(
            "soup_dillo requires an l0 penalty".into(),
        )),
    }
}

/// OS-DL: [`learn`] with an ℓ1 penalty.
pub fn os_dl(y: &DenseMatrix, init: LearnState, cfg: &LearnConfig) -> Result<LearnState> {
    match cfg.penalty {
        Penalty::L1(_) => learn(y, init, cfg),
        Penalty::L0(_) => Err(Error::InvalidParameter("os_dl requires an l1 penalty".into())),
    }
}

/// Sparse coding with a fixed dictionary: `sweeps` passes of exact block
/// coordinate descent over the columns of `C`. Returns the final coefficients
/// and the objective after each sweep.
pub fn code_with_fixed_dictionary(
    y: &DenseMatrix,
    dict: &Dictionary,
    mut coefs: CoefMatrix,
    penalty: &Penalty,
    sweeps: usize,
) -> Result<(CoefMatrix, Vec<f64>)> {
    let d = dict.as_matrix();
    check_shapes(y, d, &coefs)?;
    let mut b = Vec::with_capacity(y.cols());
    let mut trace = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        for j in 0..d.cols() {
            compute_b_into(y, d, &coefs, j, &mut b);
            coefs.replace_col(j, penalty.code(&b));
        }
        trace.push(objective(y, d, &coefs, penalty)?);
    }
    Ok((coefs, trace))
}

fn is_square(n: usize) -> Option<usize> {
    let s = (n as f64).sqrt().round() as usize;
    (s * s == n).then_some(s)
}

/// 1-D overcomplete DCT: `len × atoms`, column `m` is `cos(π r m / atoms)`
/// with the mean removed for `m > 0`, normalised.
fn odct_1d(len: usize, atoms: usize) -> DenseMatrix {
    let mut m = DenseMatrix::from_fn(len, atoms, |r, k| {
        C64::new((PI * r as f64 * k as f64 / atoms as f64).cos(), 0.0)
    });
    for k in 1..atoms {
        let col = m.col_mut(k);
        let mean = col.iter().map(|z| z.re).sum::<f64>() / len as f64;
        col.iter_mut().for_each(|z| z.re -= mean);
    }
    m
}

fn kron_columns(a: &DenseMatrix, b: &DenseMatrix, take: usize) -> DenseMatrix {
    // Column (p, q) of A ⊗ B is a_p ⊗ b_q; entry (r, s) sits at row r·rows(B) + s.
    let rows = a.rows() * b.rows();
    let mut cols = Vec::with_capacity(take);
    'outer: for p in 0..a.cols() {
        for q in 0..b.cols() {
            if cols.len() == take {
                break 'outer;
            }
            let mut v = Vec::with_capacity(rows);
            for r in 0..a.rows() {
                for s in 0..b.rows() {
                    v.push(a.get(r, p) * b.get(s, q));
                }
            }
            cols.push(v);
        }
    }
    DenseMatrix::from_columns(&cols).expect("equal-length columns")
}

/// Overcomplete DCT dictionary with `atoms` columns for signals of length `n`.
///
/// For square `n = s²` this is the Kronecker product of two 1-D overcomplete
/// DCTs with `⌈√atoms⌉` atoms each, truncated to `atoms` columns; otherwise a
/// 1-D overcomplete DCT.
pub fn overcomplete_dct(n: usize, atoms: usize) -> Result<Dictionary> {
    if n == 0 || atoms == 0 {
        return Err(Error::InvalidParameter("empty dictionary shape".into()));
    }
    let m = match is_square(n) {
        Some(s) => {
            let k = (atoms as f64).sqrt().ceil() as usize;
            let one = odct_1d(s, k);
            kron_columns(&one, &one, atoms)
        }
        None => odct_1d(n, atoms),
    };
    Dictionary::normalized(m)
}

/// Orthonormal DCT-II basis (2-D separable for square `n`) followed by
/// normalised real Gaussian atoms, `atoms` columns in total.
pub fn dct_plus_random(n: usize, atoms: usize, seed: u64) -> Result<Dictionary> {
    if n == 0 || atoms == 0 {
        return Err(Error::InvalidParameter("empty dictionary shape".into()));
    }
    let dct1 = |len: usize| {
        DenseMatrix::from_fn(len, len, |r, k| {
            C64::new((PI * (r as f64 + 0.5) * k as f64 / len as f64).cos(), 0.0)
        })
    };
    let square = match is_square(n) {
        Some(s) => {
            let one = dct1(s);
            kron_columns(&one, &one, n)
        }
        None => dct1(n),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<C64>> = (0..atoms)
        .map(|j| {
            if j < n {
                square.col(j).to_vec()
            } else {
                (0..n)
                    .map(|_| C64::new(StandardNormal.sample(&mut rng), 0.0))
                    .collect()
            }
        })
        .collect();
    Dictionary::normalized(DenseMatrix::from_columns(&cols)?)
}
