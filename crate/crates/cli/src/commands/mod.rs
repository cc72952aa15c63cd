pub mod bench;
pub mod code;
pub mod learn;
pub mod metrics;
pub mod recon;
pub mod simulate;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use soupdil::learn::{dct_plus_random, overcomplete_dct, AtomOrder, Penalty, DEFAULT_CAP};
use soupdil::linalg::{DenseMatrix, Dictionary};
use soupdil::patches::{extract_patches, PatchGeometry};

use crate::config::Resolver;
use crate::error::{CliError, CliResult, WithPath};
use crate::io::load_image;

/// Splits a comma-separated list of paths.
pub(crate) fn path_list(raw: &str) -> Vec<PathBuf> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(PathBuf::from)
        .collect()
}

/// `count` patches drawn without replacement from all non-wrapping patch
/// positions of the images (all of them, in order, when `count` is 0 or too large).
pub fn sample_patches(images: &[PathBuf], side: usize, stride: usize, count: usize, seed: u64) -> CliResult<DenseMatrix> {
    let mut pools = Vec::with_capacity(images.len());
    for path in images {
        let img = load_image(path)?;
        let geom = PatchGeometry::new(img.height(), img.width(), side, stride, false).at(path)?;
        pools.push(extract_patches(&img, &geom).at(path)?);
    }
    let total: usize = pools.iter().map(|p| p.cols()).sum();
    if total == 0 {
        return Err(CliError::usage("no input images given"));
    }
    let picks: Vec<usize> = if count == 0 || count >= total {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        index::sample(&mut rng, total, count).into_vec()
    };
    let n = side * side;
    let mut out = DenseMatrix::zeros(n, picks.len());
    for (dst, &k) in picks.iter().enumerate() {
        let (mut img, mut col) = (0, k);
        while col >= pools[img].cols() {
            col -= pools[img].cols();
            img += 1;
        }
        out.col_mut(dst).copy_from_slice(pools[img].col(col));
    }
    Ok(out)
}

pub(crate) fn penalty_from(r: &mut Resolver, default_kind: &str) -> CliResult<Penalty> {
    let kind: String = r.get("penalty", default_kind.to_string())?;
    match kind.as_str() {
        "l0" => {
            let lambda = r.get("lambda", 69.0)?;
            let cap = r.get("cap", DEFAULT_CAP)?;
            Ok(Penalty::L0(soupdil::thresholding::L0CodeParams::new(lambda, cap)?))
        }
        "l1" => Ok(Penalty::l1(r.required("mu")?)?),
        other => Err(CliError::usage(format!("penalty must be l0 or l1, got '{other}'"))),
    }
}

pub(crate) fn order_from(r: &mut Resolver, seed: u64) -> CliResult<AtomOrder> {
    let order: String = r.get("order", "cyclic".to_string())?;
    match order.as_str() {
        "cyclic" => Ok(AtomOrder::Cyclic),
        "random" => Ok(AtomOrder::Random { seed }),
        other => Err(CliError::usage(format!("order must be cyclic or random, got '{other}'"))),
    }
}

pub(crate) fn init_dictionary(kind: &str, n: usize, atoms: usize, seed: u64) -> CliResult<Dictionary> {
    match kind {
        "dct" => Ok(overcomplete_dct(n, atoms)?),
        "dct_random" => Ok(dct_plus_random(n, atoms, seed)?),
        other => Err(CliError::usage(format!("init must be dct or dct_random, got '{other}'"))),
    }
}

/// Patch side for a dictionary with `n`-pixel atoms.
pub(crate) fn square_side(n: usize, path: &Path) -> CliResult<usize> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(CliError::File {
            path: path.into(),
            source: soupdil::Error::InvalidParameter(format!("atom length {n} is not a square patch")),
        });
    }
    Ok(side)
}

pub(crate) struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
