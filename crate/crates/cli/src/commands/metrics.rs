use soupdil::formats;
use soupdil::metrics::{nsre, psnr, sparsity_factor};

use super::{path_list, sample_patches, square_side};
use crate::config::{Config, Resolver};
use crate::error::{CliError, CliResult, WithPath};
use crate::io::load_image;

/// Computes PSNR (`image` against `reference`) and/or NSRE and sparsity
/// (`dict` and `coefs` against patches of `data`). Returns `key=value` lines.
pub fn run(cfg: &Config) -> CliResult<Vec<String>> {
    let mut r = Resolver::new(cfg, "metrics");
    let image = r.optional_path("image")?;
    let reference = r.optional_path("reference")?;
    let dict = r.optional_path("dict")?;
    let coefs = r.optional_path("coefs")?;
    let data: Option<String> = r.optional("data")?;
    let (stride, count, seed) = if data.is_some() {
        (r.get("stride", 1usize)?, r.get("patches", 30_000usize)?, r.get("seed", 0u64)?)
    } else {
        (1, 0, 0)
    };
    r.finish()?;

    let mut lines = Vec::new();
    match (&image, &reference) {
        (Some(i), Some(rp)) => {
            let rec = load_image(i)?;
            let refimg = load_image(rp)?;
            // PSNR is scale dependent, so both are brought to the reference's unit peak.
            let peak = refimg.max_abs();
            if peak == 0.0 {
                return Err(CliError::File {
                    path: rp.clone(),
                    source: soupdil::Error::Undefined("PSNR against an all-zero reference"),
                });
            }
            let scale = |img: &soupdil::patches::ComplexImage| {
                soupdil::patches::ComplexImage::from_vec(
                    img.height(),
                    img.width(),
                    img.as_slice().iter().map(|z| z / peak).collect(),
                )
            };
            let v = psnr(&scale(&rec)?, &scale(&refimg)?)?;
            lines.push(format!("psnr_db={v}"));
        }
        (None, None) => {}
        _ => return Err(CliError::usage("metrics.image and metrics.reference go together")),
    }
    match (&dict, &coefs, &data) {
        (Some(dp), Some(cp), Some(images)) => {
            let d = formats::load_dictionary(dp).at(dp)?;
            let c = formats::load_coefs(cp).at(cp)?;
            let side = square_side(d.signal_dim(), dp)?;
            let y = sample_patches(&path_list(images), side, stride, count, seed)?;
            lines.push(format!("nsre_pct={}", 100.0 * nsre(&y, d.as_matrix(), &c)?));
            lines.push(format!("sparsity_pct={}", 100.0 * sparsity_factor(&c, d.signal_dim())?));
        }
        (None, None, None) => {}
        _ => return Err(CliError::usage("metrics.dict, metrics.coefs and metrics.data go together")),
    }
    if lines.is_empty() {
        return Err(CliError::usage("nothing to measure: give image+reference or dict+coefs+data"));
    }
    Ok(lines)
}
