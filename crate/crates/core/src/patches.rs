//! Patch extraction `P_i` on 2-D complex images and its adjoint.
//!
//! Patches are square with side `patch_side`. Corners lie on a stride grid
//! ordered row-major; within a patch, pixels are vectorised column-major.
//! With `wrap = true` patches crossing the border continue on the opposite side.

use crate::error::{check_dims, Error, Result};
use crate::linalg::{DenseMatrix, C64};

/// A complex image stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexImage {
    height: usize,
    width: usize,
    data: Vec<C64>,
}

impl ComplexImage {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![C64::new(0.0, 0.0); height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<C64>) -> Result<Self> {
        check_dims("ComplexImage::from_vec", height * width, data.len())?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.width + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.width + c] = v;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Divides by the peak magnitude so the result has unit peak. Fails on an all-zero image.
    pub fn normalized_to_unit_peak(&self) -> Result<Self> {
        let peak = self.max_abs();
        if peak == 0.0 {
            return Err(Error::Undefined("peak normalisation of an all-zero image"));
        }
        Ok(Self {
            data: self.data.iter().map(|z| z / peak).collect(),
            ..*self
        })
    }

    /// `‖self − other‖₂`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        check_dims("image height", self.height, other.height)?;
        check_dims("image width", self.width, other.width)?;
        Ok(crate::linalg::diff_norm_sq(&self.data, &other.data).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchGeometry {
    image_h: usize,
    image_w: usize,
    patch_side: usize,
    stride: usize,
    wrap: bool,
}

impl PatchGeometry {
    pub fn new(image_h: usize, image_w: usize, patch_side: usize, stride: usize, wrap: bool) -> Result<Self> {
        if patch_side == 0 || stride == 0 {
            return Err(Error::InvalidParameter(
                "patch side and stride must be positive".into(),
            ));
        }
        if patch_side > image_h.min(image_w) {
            return Err(Error::InvalidParameter(format!(
                "patch side {patch_side} exceeds image size {image_h}x{image_w}"
            )));
        }
        Ok(Self {
            image_h,
            image_w,
            patch_side,
            stride,
            wrap,
        })
    }

    /// Stride-1 wrap-around geometry, the one used for reconstruction.
    pub fn dense_wrapped(image_h: usize, image_w: usize, patch_side: usize) -> Result<Self> {
        Self::new(image_h, image_w, patch_side, 1, true)
    }

    pub fn image_h(&self) -> usize {
        self.image_h
    }

    pub fn image_w(&self) -> usize {
        self.image_w
    }

    pub fn patch_side(&self) -> usize {
        self.patch_side
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn wrap(&self) -> bool {
        self.wrap
    }

    /// Pixels per patch, `n`.
    pub fn patch_len(&self) -> usize {
        self.patch_side * self.patch_side
    }

    fn grid_len(&self, extent: usize) -> usize {
        if self.wrap {
            extent.div_ceil(self.stride)
        } else {
            (extent - self.patch_side) / self.stride + 1
        }
    }

    fn grid_dims(&self) -> (usize, usize) {
        (self.grid_len(self.image_h), self.grid_len(self.image_w))
    }

    /// Number of patches, `N`.
    pub fn num_patches(&self) -> usize {
        let (gh, gw) = self.grid_dims();
        gh * gw
    }

    /// Top-left corner of patch `i`.
    pub fn corner(&self, i: usize) -> (usize, usize) {
        let (_, gw) = self.grid_dims();
        ((i / gw) * self.stride, (i % gw) * self.stride)
    }

    fn check_image(&self, img: &ComplexImage) -> Result<()> {
        check_dims("image height", self.image_h, img.height())?;
        check_dims("image width", self.image_w, img.width())
    }

    /// Linear pixel indices of patch `i`, in vectorisation order.
    fn pixel_indices(&self, i: usize, out: &mut Vec<usize>) {
        let (r0, c0) = self.corner(i);
        out.clear();
        for dc in 0..self.patch_side {
            let c = (c0 + dc) % self.image_w;
            for dr in 0..self.patch_side {
                let r = (r0 + dr) % self.image_h;
                out.push(r * self.image_w + c);
            }
        }
    }
}

/// `Y = [P_1 y | … | P_N y]`, an `n × N` matrix.
pub fn extract_patches(img: &ComplexImage, geom: &PatchGeometry) -> Result<DenseMatrix> {
    geom.check_image(img)?;
    let n = geom.patch_len();
    let count = geom.num_patches();
    let mut out = DenseMatrix::zeros(n, count);
    let mut idx = Vec::with_capacity(n);
    let src = img.as_slice();
    for i in 0..count {
        geom.pixel_indices(i, &mut idx);
        for (o, &p) in out.col_mut(i).iter_mut().zip(&idx) {
            *o = src[p];
        }
    }
    Ok(out)
}

/// `Σ_i P_i^T x_i`: every patch column added back at its source pixels.
pub fn aggregate_patches(x: &DenseMatrix, geom: &PatchGeometry) -> Result<ComplexImage> {
    check_dims("patch length", geom.patch_len(), x.rows())?;
    check_dims("patch count", geom.num_patches(), x.cols())?;
    let mut img = ComplexImage::zeros(geom.image_h, geom.image_w);
    let mut idx = Vec::with_capacity(geom.patch_len());
    let dst = img.as_mut_slice();
    for i in 0..x.cols() {
        geom.pixel_indices(i, &mut idx);
        for (v, &p) in x.col(i).iter().zip(&idx) {
            dst[p] += v;
        }
    }
    Ok(img)
}

/// The diagonal of `Σ_i P_i^T P_i`: how many patches cover each pixel.
pub fn overlap_weights(geom: &PatchGeometry) -> Vec<f64> {
    let mut w = vec![0.0; geom.image_h * geom.image_w];
    let mut idx = Vec::with_capacity(geom.patch_len());
    for i in 0..geom.num_patches() {
        geom.pixel_indices(i, &mut idx);
        for &p in &idx {
            w[p] += 1.0;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> ComplexImage {
        ComplexImage::from_fn(h, w, |r, c| C64::new((r * w + c) as f64, 0.0))
    }

    #[test]
    fn one_pixel_patches() {
        let img = ramp(2, 2);
        let g = PatchGeometry::new(2, 2, 1, 1, true).unwrap();
        let y = extract_patches(&img, &g).unwrap();
        assert_eq!((y.rows(), y.cols()), (1, 4));
        assert_eq!(y.as_slice(), img.as_slice());
        assert_eq!(aggregate_patches(&y, &g).unwrap(), img);
        assert!(overlap_weights(&g).iter().all(|&w| w == 1.0));
    }

    #[test]
    fn constant_image_gives_constant_columns() {
        let v = C64::new(0.3, -2.0);
        let img = ComplexImage::from_fn(5, 6, |_, _| v);
        let g = PatchGeometry::new(5, 6, 3, 2, true).unwrap();
        let y = extract_patches(&img, &g).unwrap();
        assert!(y.as_slice().iter().all(|z| *z == v));
    }

    #[test]
    fn wrapped_corner_patch() {
        let img = ramp(4, 4);
        let g = PatchGeometry::dense_wrapped(4, 4, 2).unwrap();
        let y = extract_patches(&img, &g).unwrap();
        // index-arithmetic oracle: corner (3,3) is patch 3·4 + 3
        let i = 15;
        assert_eq!(g.corner(i), (3, 3));
        let px = |r: usize, c: usize| C64::new((r * 4 + c) as f64, 0.0);
        assert_eq!(y.col(i), &[px(3, 3), px(0, 3), px(3, 0), px(0, 0)]);
    }

    #[test]
    fn dense_wrapped_overlap_is_n() {
        let g = PatchGeometry::dense_wrapped(7, 5, 3).unwrap();
        assert_eq!(g.num_patches(), 35);
        assert!(overlap_weights(&g).iter().all(|&w| w == 9.0));
        let img = ramp(7, 5);
        let back = aggregate_patches(&extract_patches(&img, &g).unwrap(), &g).unwrap();
        for (a, b) in back.as_slice().iter().zip(img.as_slice()) {
            assert_eq!(*a, b * 9.0);
        }
    }

    #[test]
    fn stride_two_tiles_exactly_once() {
        let g = PatchGeometry::new(4, 4, 2, 2, true).unwrap();
        // direct enumeration oracle
        let mut count = [0.0; 16];
        for r0 in (0..4).step_by(2) {
            for c0 in (0..4).step_by(2) {
                for dr in 0..2 {
                    for dc in 0..2 {
                        count[((r0 + dr) % 4) * 4 + (c0 + dc) % 4] += 1.0;
                    }
                }
            }
        }
        assert_eq!(overlap_weights(&g), count.to_vec());
        assert!(count.iter().all(|&c| c == 1.0));
    }

    #[test]
    fn unwrapped_grid_stays_in_bounds() {
        let g = PatchGeometry::new(6, 5, 3, 2, false).unwrap();
        assert_eq!(g.num_patches(), 2 * 2);
        for i in 0..g.num_patches() {
            let (r, c) = g.corner(i);
            assert!(r + 3 <= 6 && c + 3 <= 5);
        }
    }

    #[test]
    fn invalid_geometry() {
        assert!(PatchGeometry::new(4, 4, 5, 1, true).is_err());
        assert!(PatchGeometry::new(4, 4, 2, 0, true).is_err());
        let g = PatchGeometry::dense_wrapped(4, 4, 2).unwrap();
        assert!(extract_patches(&ramp(4, 5), &g).is_err());
        assert!(aggregate_patches(&DenseMatrix::zeros(4, 15), &g).is_err());
    }
}
