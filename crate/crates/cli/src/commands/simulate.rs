use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use soupdil::formats;
use soupdil::linalg::C64;
use soupdil::metrics::psnr;
use soupdil::patches::ComplexImage;
use soupdil::sensing::{make_mask, MaskScheme, MriOperator, SamplingMask};

use crate::config::{Config, Resolver};
use crate::error::{CliError, CliResult, WithPath};
use crate::io::{ensure_dir, load_image};
use crate::output::Manifest;
use crate::phantom::phantom;

pub struct Simulation {
    pub reference: ComplexImage,
    pub mask: SamplingMask,
    pub kspace: Vec<C64>,
    pub zero_filled: ComplexImage,
    pub zero_filled_psnr_db: f64,
}

/// Normalises `image` to unit peak, draws the mask and acquires (noisy) samples.
/// The noise stream is seeded independently of the mask.
pub fn simulate(image: &ComplexImage, scheme: MaskScheme, factor: f64, seed: u64, sigma: f64) -> CliResult<Simulation> {
    if !(sigma >= 0.0) {
        return Err(CliError::usage(format!("noise sigma must be non-negative, got {sigma}")));
    }
    let reference = image.normalized_to_unit_peak()?;
    let mask = make_mask(reference.height(), reference.width(), scheme, factor, seed)?;
    let op = MriOperator::new(mask.clone());
    let mut kspace = op.forward(&reference)?;
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x006e_6f69_7365);
        let normal = Normal::new(0.0, sigma / std::f64::consts::SQRT_2).expect("finite sigma");
        for z in &mut kspace {
            *z += C64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }
    let zero_filled = op.adjoint(&kspace)?;
    let zero_filled_psnr_db = psnr(&zero_filled, &reference)?;
    Ok(Simulation {
        reference,
        mask,
        kspace,
        zero_filled,
        zero_filled_psnr_db,
    })
}

pub fn run(cfg: &Config) -> CliResult<(Simulation, Manifest)> {
    let mut r = Resolver::new(cfg, "simulate");
    let image_path: Option<PathBuf> = r.optional_path("image")?;
    let phantom_size: Option<usize> = r.optional("phantom")?;
    let scheme: MaskScheme = r.get("scheme", MaskScheme::Cartesian1d)?;
    let factor = r.get("factor", 2.5)?;
    let seed = r.get("seed", 0u64)?;
    let sigma = r.get("noise_sigma", 0.0)?;
    let out: Option<PathBuf> = r.optional_path("out")?;
    let used = r.finish()?;

    let image = match (image_path, phantom_size) {
        (Some(p), None) => load_image(&p)?,
        (None, Some(n)) => phantom(n),
        _ => return Err(CliError::usage("set exactly one of simulate.image or simulate.phantom")),
    };
    let sim = simulate(&image, scheme, factor, seed, sigma)?;
    let mut manifest = Manifest::new("simulate", used);
    manifest.notes.push(format!("samples={}", sim.kspace.len()));
    manifest.notes.push(format!("zero_filled_psnr_db={}", sim.zero_filled_psnr_db));
    if let Some(dir) = out {
        ensure_dir(&dir)?;
        let (h, w) = (sim.reference.height(), sim.reference.width());
        let p = dir.join("reference.soupimg");
        formats::save_image(&p, &sim.reference).at(&p)?;
        let p = dir.join("reference.pgm");
        formats::save_pgm(&p, &sim.reference, 1.0).at(&p)?;
        let p = dir.join("mask.txt");
        formats::save_mask(&p, &sim.mask).at(&p)?;
        let p = dir.join("kspace.soupksp");
        formats::save_kspace(&p, h, w, &sim.kspace).at(&p)?;
        let p = dir.join("zero_filled.soupimg");
        formats::save_image(&p, &sim.zero_filled).at(&p)?;
        let p = dir.join("zero_filled.pgm");
        formats::save_pgm(&p, &sim.zero_filled, 1.0).at(&p)?;
        manifest.save(&dir.join("manifest.txt"))?;
    }
    Ok((sim, manifest))
}
