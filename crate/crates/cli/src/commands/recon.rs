use std::path::PathBuf;

use soupdil::formats;
use soupdil::linalg::C64;
use soupdil::metrics::psnr;
use soupdil::patches::{ComplexImage, PatchGeometry};
use soupdil::recon::{default_nu, linear_schedule, reconstruct, ImageSolver, ReconConfig, ReconState, SparsityModel};
use soupdil::sensing::MriOperator;

use super::{init_dictionary, Stopwatch};
use crate::config::{Config, Resolver};
use crate::error::{CliError, CliResult, WithPath};
use crate::io::{ensure_dir, load_image};
use crate::output::{Manifest, Table};
use crate::row;

pub const TRACE_HEADER: [&str; 9] = [
    "iter",
    "weight",
    "objective",
    "psnr_db",
    "image_diff",
    "image_diff_rel_ref",
    "dict_diff_rel",
    "coef_diff",
    "sparsity_pct",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ReconParams {
    pub model: SparsityModel,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub patch: usize,
    pub atoms: usize,
    pub lambda_start: f64,
    pub lambda_end: f64,
    /// `μ = λ / mu_ratio` for the ℓ1 model.
    pub mu_ratio: f64,
    /// `None` selects `10⁶ / p`.
    pub nu: Option<f64>,
    pub solver: ImageSolver,
    pub init: String,
    pub seed: u64,
}

impl ReconParams {
    /// 6×6 patches, 144 atoms, 45 outer iterations, 5 (ℓ0) or 1 (ℓ1) inner
    /// iterations, λ from 0.35 to 0.01, μ = λ/1.4.
    pub fn defaults(l1: bool) -> Self {
        Self {
            model: if l1 {
                SparsityModel::L1
            } else {
                SparsityModel::L0 {
                    cap: soupdil::learn::DEFAULT_CAP,
                }
            },
            outer_iters: 45,
            inner_iters: if l1 { 1 } else { 5 },
            patch: 6,
            atoms: 144,
            lambda_start: 0.35,
            lambda_end: 0.01,
            mu_ratio: 1.4,
            nu: None,
            solver: ImageSolver::FourierClosedForm,
            init: "dct_random".into(),
            seed: 0,
        }
    }

    pub fn schedule(&self) -> Vec<f64> {
        let lambdas = linear_schedule(self.lambda_start, self.lambda_end, self.outer_iters);
        match self.model {
            SparsityModel::L0 { .. } => lambdas,
            SparsityModel::L1 => lambdas.into_iter().map(|l| l / self.mu_ratio).collect(),
        }
    }
}

pub struct ReconOutcome {
    pub state: ReconState,
    pub trace: Table,
    pub zero_filled_psnr_db: Option<f64>,
}

/// Runs the reconstruction one outer iteration at a time so every iteration
/// gets a trace row.
pub fn run_recon(
    z: &[C64],
    op: &MriOperator,
    reference: Option<&ComplexImage>,
    p: &ReconParams,
) -> CliResult<ReconOutcome> {
    let (h, w) = (op.mask().height(), op.mask().width());
    let geom = PatchGeometry::dense_wrapped(h, w, p.patch)?;
    let nu = p.nu.unwrap_or_else(|| default_nu(h * w));
    let dict = init_dictionary(&p.init, p.patch * p.patch, p.atoms, p.seed)?;
    let mut state = ReconState::zero_filled(op, z, dict, &geom)?;
    let zero_filled_psnr_db = reference.map(|r| psnr(&state.image, r)).transpose()?;
    let ref_norm = reference.map(|r| r.norm());
    let mut trace = Table::new(&TRACE_HEADER);
    for (t, weight) in p.schedule().into_iter().enumerate() {
        let cfg = ReconConfig::new(nu, vec![weight], p.model, p.inner_iters, geom, p.atoms)?.with_solver(p.solver);
        let prev_dict = state.learn.dictionary.clone();
        let prev_coefs = state.learn.coefs.clone();
        state = reconstruct(z, op, state, &cfg, reference)?;
        let dict_diff = state.learn.dictionary.as_matrix().sub(prev_dict.as_matrix())?.frobenius() / (p.atoms as f64).sqrt();
        let coef_diff = state.learn.coefs.diff_frobenius_sq(&prev_coefs).sqrt();
        let image_diff = *state.image_diff_trace.last().expect("one outer iteration ran");
        trace.push(row![
            t + 1,
            weight,
            *state.objective_trace.last().expect("one outer iteration ran"),
            state.psnr_trace.last().copied(),
            image_diff,
            ref_norm.map(|n| image_diff / n),
            dict_diff,
            coef_diff,
            100.0 * state.sparsity_trace.last().expect("one outer iteration ran"),
        ]);
    }
    Ok(ReconOutcome {
        state,
        trace,
        zero_filled_psnr_db,
    })
}

pub fn run(cfg: &Config) -> CliResult<(ReconOutcome, Manifest)> {
    let mut r = Resolver::new(cfg, "recon");
    let kspace_path = r.path("kspace")?;
    let mask_path = r.path("mask")?;
    let reference_path: Option<PathBuf> = r.optional_path("reference")?;
    let model: String = r.get("model", "l0".to_string())?;
    let l1 = match model.as_str() {
        "l0" => false,
        "l1" => true,
        other => return Err(CliError::usage(format!("model must be l0 or l1, got '{other}'"))),
    };
    let d = ReconParams::defaults(l1);
    let mut p = ReconParams {
        outer_iters: r.get("m", d.outer_iters)?,
        inner_iters: r.get("k", d.inner_iters)?,
        patch: r.get("patch", d.patch)?,
        atoms: r.get("atoms", d.atoms)?,
        lambda_start: r.get("lambda_start", d.lambda_start)?,
        lambda_end: r.get("lambda_end", d.lambda_end)?,
        mu_ratio: r.get("mu_ratio", d.mu_ratio)?,
        nu: r.optional("nu")?,
        init: r.get("init", d.init.clone())?,
        seed: r.get("seed", d.seed)?,
        ..d
    };
    if !l1 {
        p.model = SparsityModel::L0 {
            cap: r.get("cap", soupdil::learn::DEFAULT_CAP)?,
        };
    }
    let solver: String = r.get("solver", "fourier".to_string())?;
    p.solver = match solver.as_str() {
        "fourier" => ImageSolver::FourierClosedForm,
        "cg" => ImageSolver::ConjugateGradient {
            tol: r.get("cg_tol", 1e-10)?,
            max_iters: r.get("cg_iters", 500usize)?,
        },
        other => return Err(CliError::usage(format!("solver must be fourier or cg, got '{other}'"))),
    };
    let out: Option<PathBuf> = r.optional_path("out")?;
    let used = r.finish()?;

    let mask = formats::load_mask(&mask_path).at(&mask_path)?;
    let (kh, kw, z) = formats::load_kspace(&kspace_path).at(&kspace_path)?;
    if (kh, kw) != (mask.height(), mask.width()) || z.len() != mask.count() {
        return Err(CliError::File {
            path: kspace_path,
            source: soupdil::Error::DimensionMismatch {
                context: "k-space samples vs mask",
                expected: mask.count(),
                found: z.len(),
            },
        });
    }
    let reference = match &reference_path {
        Some(path) => Some(load_image(path)?.normalized_to_unit_peak().at(path)?),
        None => None,
    };
    let op = MriOperator::new(mask);
    let clock = Stopwatch::start();
    let outcome = run_recon(&z, &op, reference.as_ref(), &p)?;
    let secs = clock.secs();

    let mut manifest = Manifest::new("recon", used);
    manifest.timings.push(("recon", secs));
    manifest.notes.push(format!("rows={}", outcome.trace.len()));
    if let Some(v) = outcome.zero_filled_psnr_db {
        manifest.notes.push(format!("zero_filled_psnr_db={v}"));
    }
    if let Some(v) = outcome.state.psnr_trace.last() {
        manifest.notes.push(format!("final_psnr_db={v}"));
    }
    manifest.notes.push(format!("feasible={}", outcome.state.feasible));
    if let Some(dir) = out {
        ensure_dir(&dir)?;
        let img = &outcome.state.image;
        let path = dir.join("recon.soupimg");
        formats::save_image(&path, img).at(&path)?;
        let path = dir.join("recon.pgm");
        formats::save_pgm(&path, img, img.max_abs().max(f64::MIN_POSITIVE)).at(&path)?;
        let path = dir.join("dictionary.soupdic");
        formats::save_dictionary(&path, &outcome.state.learn.dictionary).at(&path)?;
        outcome.trace.save(&dir.join("trace.csv"))?;
        manifest.save(&dir.join("manifest.txt"))?;
    }
    Ok((outcome, manifest))
}
