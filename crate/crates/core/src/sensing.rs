//! Single-coil Cartesian MRI encoding: unitary 2-D DFT followed by k-space
//! undersampling on a mask `Ω`.
//!
//! Masks are stored DC-centred (row `h/2`, column `w/2` is the zero
//! frequency). Measurements are laid out in row-major order of the kept
//! entries of the centred mask.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_dims, Error, Result};
use crate::linalg::C64;
use crate::patches::ComplexImage;

/// Fraction of the grid extent that is always fully sampled around DC.
pub const CENTER_FRACTION: f64 = 0.04;
/// Exponent `q` of the variable-density profile `(1 − d/d_max)^q`.
pub const DENSITY_EXPONENT: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskScheme {
    /// Whole k-space rows (phase encodes) chosen with variable density.
    Cartesian1d,
    /// Individual k-space points chosen with radially variable density.
    Random2d,
    /// Loaded from a file or built by hand.
    Custom,
}

impl MaskScheme {
    pub fn name(&self) -> &'static str {
        match self {
            MaskScheme::Cartesian1d => "cartesian",
            MaskScheme::Random2d => "random2d",
            MaskScheme::Custom => "custom",
        }
    }
}

impl std::fmt::Display for MaskScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MaskScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" | "cartesian1d" | "1d" => Ok(MaskScheme::Cartesian1d),
            "random2d" | "2d" => Ok(MaskScheme::Random2d),
            "custom" => Ok(MaskScheme::Custom),
            other => Err(Error::InvalidParameter(format!("unknown mask scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingMask {
    height: usize,
    width: usize,
    kept: Vec<bool>,
    pub seed: u64,
    pub scheme: MaskScheme,
}

impl SamplingMask {
    /// A mask from a DC-centred, row-major keep pattern.
    pub fn from_kept(height: usize, width: usize, kept: Vec<bool>) -> Result<Self> {
        check_dims("mask size", height * width, kept.len())?;
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter("empty mask".into()));
        }
        Ok(Self {
            height,
            width,
            kept,
            seed: 0,
            scheme: MaskScheme::Custom,
        })
    }

    pub fn full(height: usize, width: usize) -> Result<Self> {
        Self::from_kept(height, width, vec![true; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Whether centred position `(u, v)` is sampled.
    pub fn is_kept(&self, u: usize, v: usize) -> bool {
        self.kept[u * self.width + v]
    }

    pub fn kept(&self) -> &[bool] {
        &self.kept
    }

    /// `|Ω|`.
    pub fn count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    /// `h·w / |Ω|`.
    pub fn undersampling_factor(&self) -> f64 {
        (self.height * self.width) as f64 / self.count() as f64
    }
}

/// Weighted sampling without replacement (exponential keys), returning `k` indices.
fn weighted_pick(weights: &[(usize, f64)], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = weights
        .iter()
        .map(|&(i, w)| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            (u.ln() / w, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().take(k).map(|(_, i)| i).collect()
}

fn density(d: f64, d_max: f64) -> f64 {
    (1.0 - d / d_max).powi(DENSITY_EXPONENT)
}

/// Builds a variable-density mask hitting `h·w / factor` samples.
///
/// A centred band (1-D) or disk (2-D) of extent [`CENTER_FRACTION`] is always
/// kept; the rest is drawn without replacement with probability decaying as
/// `(1 − d/d_max)^4` in the distance from DC. `factor = 1` gives a full mask.
pub fn make_mask(height: usize, width: usize, scheme: MaskScheme, factor: f64, seed: u64) -> Result<SamplingMask> {
    if !(factor >= 1.0) || !factor.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "undersampling factor must be >= 1, got {factor}"
        )));
    }
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter("empty mask".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cu, cv) = (height / 2, width / 2);
    let mut kept = vec![false; height * width];
    match scheme {
        MaskScheme::Cartesian1d => {
            let target = ((height as f64 / factor).round() as usize).clamp(1, height);
            let band = ((CENTER_FRACTION * height as f64).round() as usize).max(1);
            if band > target {
                return Err(Error::InvalidParameter(format!(
                    "factor {factor} leaves {target} rows, fewer than the {band}-row centre band"
                )));
            }
            let first = cu - band / 2;
            let mut rows: Vec<usize> = (first..first + band).collect();
            let dist = |r: usize| (r as f64 - cu as f64).abs();
            let d_max = dist(0).max(dist(height - 1)) + 1.0;
            let candidates: Vec<(usize, f64)> = (0..height)
                .filter(|r| !(first..first + band).contains(r))
                .map(|r| (r, density(dist(r), d_max)))
                .collect();
            rows.extend(weighted_pick(&candidates, target - band, &mut rng));
            for r in rows {
                kept[r * width..(r + 1) * width].iter_mut().for_each(|k| *k = true);
            }
        }
        MaskScheme::Random2d => {
            let total = height * width;
            let target = ((total as f64 / factor).round() as usize).clamp(1, total);
            let radius = (CENTER_FRACTION * height.min(width) as f64).max(1.0);
            let rel = |u: usize, v: usize| {
                let a = (u as f64 - cu as f64) / (height as f64 / 2.0);
                let b = (v as f64 - cv as f64) / (width as f64 / 2.0);
                (a * a + b * b).sqrt()
            };
            let mut forced = 0;
            for u in 0..height {
                for v in 0..width {
                    let du = u as f64 - cu as f64;
                    let dv = v as f64 - cv as f64;
                    if (du * du + dv * dv).sqrt() <= radius {
                        kept[u * width + v] = true;
                        forced += 1;
                    }
                }
            }
            if forced > target {
                return Err(Error::InvalidParameter(format!(
                    "factor {factor} leaves {target} samples, fewer than the {forced}-sample centre disk"
                )));
            }
            let d_max = (0..height)
                .flat_map(|u| (0..width).map(move |v| (u, v)))
                .map(|(u, v)| rel(u, v))
                .fold(0.0, f64::max)
                * 1.01;
            let candidates: Vec<(usize, f64)> = (0..total)
                .filter(|&i| !kept[i])
                .map(|i| (i, density(rel(i / width, i % width), d_max)))
                .collect();
            for i in weighted_pick(&candidates, target - forced, &mut rng) {
                kept[i] = true;
            }
        }
        MaskScheme::Custom => {
            return Err(Error::InvalidParameter(
                "custom masks cannot be generated".into(),
            ))
        }
    }
    Ok(SamplingMask {
        height,
        width,
        kept,
        seed,
        scheme,
    })
}

/// Unitary 2-D DFT (`F^H F = I`) on row-major `h × w` buffers, unshifted layout.
#[derive(Clone)]
pub struct FourierOperator {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierOperator")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish()
    }
}

impl FourierOperator {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            col_fwd: planner.plan_fft_forward(height),
            row_inv: planner.plan_fft_inverse(width),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn run(&self, data: &mut [C64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        rows.process(data);
        let mut t = vec![C64::new(0.0, 0.0); h * w];
        transpose(data, &mut t, h, w);
        cols.process(&mut t);
        transpose(&t, data, w, h);
        let s = 1.0 / ((h * w) as f64).sqrt();
        data.iter_mut().for_each(|z| *z *= s);
    }

    pub fn forward_inplace(&self, data: &mut [C64]) {
        assert_eq!(data.len(), self.height * self.width);
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse_inplace(&self, data: &mut [C64]) {
        assert_eq!(data.len(), self.height * self.width);
        self.run(data, &self.row_inv, &self.col_inv);
    }

    pub fn forward(&self, img: &ComplexImage) -> Vec<C64> {
        let mut d = img.as_slice().to_vec();
        self.forward_inplace(&mut d);
        d
    }

    pub fn inverse(&self, spectrum: Vec<C64>) -> ComplexImage {
        let mut d = spectrum;
        self.inverse_inplace(&mut d);
        ComplexImage::from_vec(self.height, self.width, d).expect("sizes agree")
    }
}

fn transpose(src: &[C64], dst: &mut [C64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// `A = F_u`: unitary DFT restricted to the mask.
#[derive(Clone, Debug)]
pub struct MriOperator {
    mask: SamplingMask,
    fourier: FourierOperator,
    sample_index: Vec<usize>,
    sampled: Vec<bool>,
}

impl MriOperator {
    pub fn new(mask: SamplingMask) -> Self {
        let (h, w) = (mask.height(), mask.width());
        let unshift_r = |u: usize| (u + h - h / 2) % h;
        let unshift_c = |v: usize| (v + w - w / 2) % w;
        let mut sample_index = Vec::with_capacity(mask.count());
        let mut sampled = vec![false; h * w];
        for u in 0..h {
            for v in 0..w {
                if mask.is_kept(u, v) {
                    let k = unshift_r(u) * w + unshift_c(v);
                    sample_index.push(k);
                    sampled[k] = true;
                }
            }
        }
        Self {
            fourier: FourierOperator::new(h, w),
            mask,
            sample_index,
            sampled,
        }
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn fourier(&self) -> &FourierOperator {
        &self.fourier
    }

    /// Number of measurements `m = |Ω|`.
    pub fn num_samples(&self) -> usize {
        self.sample_index.len()
    }

    /// Sampled flags in the unshifted DFT layout.
    pub fn sampled_unshifted(&self) -> &[bool] {
        &self.sampled
    }

    fn check_image(&self, img: &ComplexImage) -> Result<()> {
        check_dims("image height", self.mask.height(), img.height())?;
        check_dims("image width", self.mask.width(), img.width())
    }

    /// `z = F_u y`.
    pub fn forward(&self, img: &ComplexImage) -> Result<Vec<C64>> {
        self.check_image(img)?;
        let spec = self.fourier.forward(img);
        Ok(self.sample_index.iter().map(|&k| spec[k]).collect())
    }

    /// `F F_u^H z`: measurements embedded in a zero spectrum (unshifted layout).
    pub fn zero_filled_spectrum(&self, z: &[C64]) -> Result<Vec<C64>> {
        check_dims("measurement count", self.sample_index.len(), z.len())?;
        let (h, w) = (self.mask.height(), self.mask.width());
        let mut spec = vec![C64::new(0.0, 0.0); h * w];
        for (&k, &v) in self.sample_index.iter().zip(z) {
            spec[k] = v;
        }
        Ok(spec)
    }

    /// `F_u^H z`, which is also the zero-filled reconstruction `A†z`.
    pub fn adjoint(&self, z: &[C64]) -> Result<ComplexImage> {
        Ok(self.fourier.inverse(self.zero_filled_spectrum(z)?))
    }
}

/// A linear map between flat complex vectors with an explicit adjoint.
pub trait LinearOperator {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>>;
    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>>;
}

impl LinearOperator for MriOperator {
    fn input_len(&self) -> usize {
        self.mask.height() * self.mask.width()
    }

    fn output_len(&self) -> usize {
        self.num_samples()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let img = ComplexImage::from_vec(self.mask.height(), self.mask.width(), x.to_vec())?;
        self.forward(&img)
    }

    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        Ok(self.adjoint(y)?.into_vec())
    }
}

/// The identity on vectors of a fixed length (the denoising case).
#[derive(Clone, Copy, Debug)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn input_len(&self) -> usize {
        self.0
    }

    fn output_len(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_dims("identity operator", self.0, x.len())?;
        Ok(x.to_vec())
    }

    fn apply_adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        self.apply(y)
    }
}
