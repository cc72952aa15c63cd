//! Dictionary-blind image reconstruction.
//!
//! Each outer iteration learns `(D, C)` on the patches of the current image
//! (warm-started from the previous pair), then solves the least-squares image
//! update
//!
//! `(Σ_i P_i^T P_i + ν A^H A) y = Σ_i P_i^T D x_i + ν A^H z`
//!
//! either in closed form in k-space (stride-1 wrapped patches, unitary DFT)
//! or by conjugate gradients for a generic operator.

use crate::error::{check_dims, Error, Result};
use crate::learn::{learn, LearnConfig, LearnState, Penalty, AtomOrder, residual_sq};
use crate::linalg::{cdot, norm2, CoefMatrix, Dictionary, C64};
use crate::metrics::psnr;
use crate::patches::{aggregate_patches, extract_patches, overlap_weights, ComplexImage, PatchGeometry};
use crate::sensing::{LinearOperator, MriOperator};
use crate::thresholding::{L0CodeParams, L1CodeParams};

/// Which sparsity model the inner learning uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SparsityModel {
    /// ℓ0 with magnitude cap `L` (SOUP-DILLO MRI).
    L0 { cap: f64 },
    /// ℓ1 (SOUP-DILLI MRI).
    L1,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ImageSolver {
    FourierClosedForm,
    ConjugateGradient { tol: f64, max_iters: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconConfig {
    /// Data-fidelity weight `ν`.
    pub nu: f64,
    /// `λ_t` (ℓ0) or `μ_t` (ℓ1) for each outer iteration; its length is `M`.
    pub schedule: Vec<f64>,
    pub model: SparsityModel,
    /// Learning iterations `K` per outer iteration.
    pub inner_iters: usize,
    pub geom: PatchGeometry,
    pub num_atoms: usize,
    pub solver: ImageSolver,
    pub atom_order: AtomOrder,
}

impl ReconConfig {
    pub fn new(
        nu: f64,
        schedule: Vec<f64>,
        model: SparsityModel,
        inner_iters: usize,
        geom: PatchGeometry,
        num_atoms: usize,
    ) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        if let Some(w) = schedule.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sparsity weights must be positive, got {w}"
            )));
        }
        if inner_iters == 0 || num_atoms == 0 {
            return Err(Error::InvalidParameter(
                "inner iterations and atom count must be positive".into(),
            ));
        }
        let cfg = Self {
            nu,
            schedule,
            model,
            inner_iters,
            geom,
            num_atoms,
            solver: ImageSolver::FourierClosedForm,
            atom_order: AtomOrder::Cyclic,
        };
        for t in 0..cfg.outer_iters() {
            cfg.penalty_at(t)?;
        }
        Ok(cfg)
    }

    pub fn with_solver(mut self, solver: ImageSolver) -> Self {
        self.solver = solver;
        self
    }

    /// `M`.
    pub fn outer_iters(&self) -> usize {
        self.schedule.len()
    }

    pub fn penalty_at(&self, t: usize) -> Result<Penalty> {
        let w = self.schedule[t];
        Ok(match self.model {
            SparsityModel::L0 { cap } => Penalty::L0(L0CodeParams::new(w, cap)?),
            SparsityModel::L1 => Penalty::L1(L1CodeParams::new(w)?),
        })
    }
}

/// `M` values interpolated linearly from `start` to `end` inclusive.
pub fn linear_schedule(start: f64, end: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..m)
            .map(|t| start + (end - start) * t as f64 / (m - 1) as f64)
            .collect(),
    }
}

/// `ν = 10⁶ / p` for a `p`-pixel image.
pub fn default_nu(num_pixels: usize) -> f64 {
    1e6 / num_pixels as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconState {
    pub image: ComplexImage,
    pub learn: LearnState,
    /// `g` (or `g̃`) after each outer iteration, using that iteration's weight.
    pub objective_trace: Vec<f64>,
    /// PSNR against the reference, when one was supplied.
    pub psnr_trace: Vec<f64>,
    /// `‖y^t − y^{t−1}‖₂`.
    pub image_diff_trace: Vec<f64>,
    /// Sparsity factor of `C` after each outer iteration.
    pub sparsity_trace: Vec<f64>,
    /// Whether the constraints held after every outer iteration.
    pub feasible: bool,
}

impl ReconState {
    /// `y⁰ = A†z`, `C⁰ = 0`, with the given initial dictionary.
    pub fn zero_filled(op: &MriOperator, z: &[C64], dictionary: Dictionary, geom: &PatchGeometry) -> Result<Self> {
        let image = op.adjoint(z)?;
        Self::new(image, dictionary, geom)
    }

    pub fn new(image: ComplexImage, dictionary: Dictionary, geom: &PatchGeometry) -> Result<Self> {
        check_dims("initial dictionary", geom.patch_len(), dictionary.signal_dim())?;
        check_dims("image height", geom.image_h(), image.height())?;
        check_dims("image width", geom.image_w(), image.width())?;
        Ok(Self {
            image,
            learn: LearnState::initial(dictionary, geom.num_patches()),
            objective_trace: Vec::new(),
            psnr_trace: Vec::new(),
            image_diff_trace: Vec::new(),
            sparsity_trace: Vec::new(),
            feasible: true,
        })
    }
}

/// `Σ_i P_i^T D x_i` with `X = C^H`.
fn patch_synthesis(dict: &Dictionary, coefs: &CoefMatrix, geom: &PatchGeometry) -> Result<ComplexImage> {
    check_dims("patch count", geom.num_patches(), coefs.num_signals())?;
    let dx = coefs.synthesize(dict.as_matrix())?;
    aggregate_patches(&dx, geom)
}

/// Closed-form image update in k-space.
///
/// With `Σ P_i^T P_i = nI` the normal equation is diagonal in the DFT basis:
/// `S/n` off the mask and `(S + ν S₀)/(n + ν)` on it, where `S = F Σ P_i^T D x_i`
/// and `S₀ = F F_u^H z`.
pub fn image_update_fourier(
    dict: &Dictionary,
    coefs: &CoefMatrix,
    z: &[C64],
    op: &MriOperator,
    nu: f64,
    geom: &PatchGeometry,
) -> Result<ComplexImage> {
    if geom.stride() != 1 || !geom.wrap() {
        return Err(Error::InvalidParameter(
            "the closed-form image update needs stride-1 wrapped patches; use the CG solver".into(),
        ));
    }
    check_dims("image height", op.mask().height(), geom.image_h())?;
    check_dims("image width", op.mask().width(), geom.image_w())?;
    let beta = geom.patch_len() as f64;
    let rhs = patch_synthesis(dict, coefs, geom)?;
    let mut s = op.fourier().forward(&rhs);
    let s0 = op.zero_filled_spectrum(z)?;
    for ((sk, s0k), &on) in s.iter_mut().zip(&s0).zip(op.sampled_unshifted()) {
        *sk = if on {
            (*sk + s0k * nu) / (beta + nu)
        } else {
            *sk / beta
        };
    }
    Ok(op.fourier().inverse(s))
}

/// Right-hand side `Σ_i P_i^T D x_i + ν A^H z`, flattened.
fn normal_rhs(
    dict: &Dictionary,
    coefs: &CoefMatrix,
    z: &[C64],
    op: &dyn LinearOperator,
    nu: f64,
    geom: &PatchGeometry,
) -> Result<Vec<C64>> {
    check_dims("operator input", geom.image_h() * geom.image_w(), op.input_len())?;
    check_dims("measurement count", op.output_len(), z.len())?;
    let mut rhs = patch_synthesis(dict, coefs, geom)?.into_vec();
    for (r, a) in rhs.iter_mut().zip(op.apply_adjoint(z)?) {
        *r += a * nu;
    }
    Ok(rhs)
}

fn normal_apply(y: &[C64], weights: &[f64], op: &dyn LinearOperator, nu: f64) -> Result<Vec<C64>> {
    let aha = op.apply_adjoint(&op.apply(y)?)?;
    Ok(y.iter()
        .zip(weights)
        .zip(aha)
        .map(|((v, w), a)| v * *w + a * nu)
        .collect())
}

/// Image update by conjugate gradients from a zero start.
#[allow(clippy::too_many_arguments)]
pub fn image_update_cg(
    dict: &Dictionary,
    coefs: &CoefMatrix,
    z: &[C64],
    op: &dyn LinearOperator,
    nu: f64,
    geom: &PatchGeometry,
    tol: f64,
    max_iters: usize,
) -> Result<ComplexImage> {
    let rhs = normal_rhs(dict, coefs, z, op, nu, geom)?;
    let weights = overlap_weights(geom);
    let (h, w) = (geom.image_h(), geom.image_w());
    let rhs_norm = norm2(&rhs);
    let mut x = vec![C64::new(0.0, 0.0); rhs.len()];
    if rhs_norm == 0.0 {
        return ComplexImage::from_vec(h, w, x);
    }
    let mut r = rhs;
    let mut p = r.clone();
    let mut rr = cdot(&r, &r).re;
    for _ in 0..max_iters {
        if rr.sqrt() <= tol * rhs_norm {
            return ComplexImage::from_vec(h, w, x);
        }
        let ap = normal_apply(&p, &weights, op, nu)?;
        let alpha = rr / cdot(&p, &ap).re;
        for ((xi, pi), (ri, api)) in x.iter_mut().zip(&p).zip(r.iter_mut().zip(&ap)) {
            *xi += pi * alpha;
            *ri -= api * alpha;
        }
        let rr_new = cdot(&r, &r).re;
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + *pi * beta;
        }
        rr = rr_new;
    }
    let residual = rr.sqrt() / rhs_norm;
    if residual <= tol {
        ComplexImage::from_vec(h, w, x)
    } else {
        Err(Error::NotConverged {
            iterations: max_iters,
            residual,
        })
    }
}

/// `(‖lhs − rhs‖, ‖rhs‖)` of the normal equation at `y`.
pub fn normal_equation_residual(
    y: &ComplexImage,
    dict: &Dictionary,
    coefs: &CoefMatrix,
    z: &[C64],
    op: &dyn LinearOperator,
    nu: f64,
    geom: &PatchGeometry,
) -> Result<(f64, f64)> {
    let rhs = normal_rhs(dict, coefs, z, op, nu, geom)?;
    let lhs = normal_apply(y.as_slice(), &overlap_weights(geom), op, nu)?;
    Ok((crate::linalg::diff_norm_sq(&lhs, &rhs).sqrt(), norm2(&rhs)))
}

/// `ν‖Ay − z‖² + Σ_i ‖P_i y − D x_i‖²`, the part of the objective that depends on `y`.
pub fn image_objective(
    y: &ComplexImage,
    dict: &Dictionary,
    coefs: &CoefMatrix,
    z: &[C64],
    op: &dyn LinearOperator,
    nu: f64,
    geom: &PatchGeometry,
) -> Result<f64> {
    check_dims("measurement count", op.output_len(), z.len())?;
    let ay = op.apply(y.as_slice())?;
    let data = crate::linalg::diff_norm_sq(&ay, z);
    let patches = extract_patches(y, geom)?;
    Ok(nu * data + residual_sq(&patches, dict.as_matrix(), coefs)?)
}

/// The full reconstruction objective `g` (ℓ0) or `g̃` (ℓ1).
#[allow(clippy::too_many_arguments)]
pub fn recon_objective(
    y: &ComplexImage,
    dict: &Dictionary,
    coefs: &CoefMatrix,
    z: &[C64],
    op: &dyn LinearOperator,
    nu: f64,
    geom: &PatchGeometry,
    penalty: &Penalty,
) -> Result<f64> {
    Ok(image_objective(y, dict, coefs, z, op, nu, geom)? + penalty.value(coefs))
}

/// Runs the outer loop for whichever sparsity model `cfg` names.
pub fn reconstruct(
    z: &[C64],
    op: &MriOperator,
    mut state: ReconState,
    cfg: &ReconConfig,
    reference: Option<&ComplexImage>,
) -> Result<ReconState> {
    let geom = &cfg.geom;
    check_dims("measurement count", op.num_samples(), z.len())?;
    check_dims("dictionary atoms", cfg.num_atoms, state.learn.dictionary.num_atoms())?;
    for t in 0..cfg.outer_iters() {
        let penalty = cfg.penalty_at(t)?;
        let patches = extract_patches(&state.image, geom)?;
        let learn_cfg = LearnConfig::new(cfg.num_atoms, penalty, cfg.inner_iters)?.with_order(cfg.atom_order);
        let mut ls = std::mem::replace(&mut state.learn, placeholder_state());
        ls.clear_traces();
        state.learn = learn(&patches, ls, &learn_cfg)?;

        let dict = &state.learn.dictionary;
        let coefs = &state.learn.coefs;
        let image = match cfg.solver {
            ImageSolver::FourierClosedForm => image_update_fourier(dict, coefs, z, op, cfg.nu, geom)?,
            ImageSolver::ConjugateGradient { tol, max_iters } => {
                image_update_cg(dict, coefs, z, op, cfg.nu, geom, tol, max_iters)?
            }
        };
        state.image_diff_trace.push(image.distance(&state.image)?);
        state.image = image;
        state.objective_trace.push(recon_objective(
            &state.image, dict, coefs, z, op, cfg.nu, geom, &penalty,
        )?);
        let cap = match cfg.model {
            SparsityModel::L0 { cap } => Some(cap),
            SparsityModel::L1 => None,
        };
        state.feasible &= crate::learn::feasibility(dict.as_matrix(), coefs, cap).ok();
        state
            .sparsity_trace
            .push(coefs.nnz() as f64 / (geom.patch_len() * geom.num_patches()) as f64);
        if let Some(r) = reference {
            state.psnr_trace.push(psnr(&state.image, r)?);
        }
    }
    Ok(state)
}

fn placeholder_state() -> LearnState {
    LearnState::initial(
        Dictionary::new(crate::linalg::DenseMatrix::zeros(0, 0)).expect("empty dictionary"),
        0,
    )
}

/// SOUP-DILLO MRI: [`reconstruct`] with ℓ0 learning.
pub fn soup_dillo_mri(
    z: &[C64],
    op: &MriOperator,
    init: ReconState,
    cfg: &ReconConfig,
    reference: Option<&ComplexImage>,
) -> Result<ReconState> {
    match cfg.model {
        SparsityModel::L0 { .. } => reconstruct(z, op, init, cfg, reference),
        SparsityModel::L1 => Err(Error::InvalidParameter(
            "soup_dillo_mri needs the l0 model".into(),
        )),
    }
}

/// SOUP-DILLI MRI: [`reconstruct`] with ℓ1 learning.
pub fn soup_dilli_mri(
    z: &[C64],
    op: &MriOperator,
    init: ReconState,
    cfg: &ReconConfig,
    reference: Option<&ComplexImage>,
) -> Result<ReconState> {
    match cfg.model {
        SparsityModel::L1 => reconstruct(z, op, init, cfg, reference),
        SparsityModel::L0 { .. } => Err(Error::InvalidParameter(
            "soup_dilli_mri needs the l1 model".into(),
        )),
    }
}
