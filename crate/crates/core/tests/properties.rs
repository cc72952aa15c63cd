use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soupdil::learn::{compute_b, compute_h, learn, LearnConfig, LearnState, Penalty};
use soupdil::linalg::{cdot, CoefMatrix, DenseMatrix, Dictionary, SparseColumn, C64};
use soupdil::metrics::{nsre, psnr};
use soupdil::patches::{aggregate_patches, extract_patches, ComplexImage, PatchGeometry};
use soupdil::sensing::{make_mask, LinearOperator, MaskScheme, MriOperator};
use soupdil::thresholding::{sparse_code_l0, sparse_code_l1, L0CodeParams, L1CodeParams};
use soupdil::{formats, recon};

fn rc(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n).map(|_| rc(rng)).collect()
}

fn rand_image(h: usize, w: usize, rng: &mut ChaCha8Rng) -> ComplexImage {
    ComplexImage::from_vec(h, w, rand_vec(h * w, rng)).unwrap()
}

fn rand_dict(n: usize, j: usize, rng: &mut ChaCha8Rng) -> Dictionary {
    Dictionary::normalized(DenseMatrix::from_fn(n, j, |_, _| rc(rng))).unwrap()
}

fn rand_coefs(nsig: usize, j: usize, density: f64, rng: &mut ChaCha8Rng) -> CoefMatrix {
    CoefMatrix::from_dense(&DenseMatrix::from_fn(nsig, j, |_, _| {
        if rng.random_bool(density) {
            rc(rng)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Dense `E_j = Y − Σ_{k≠j} d_k c_k^H`.
fn naive_ej(y: &DenseMatrix, d: &DenseMatrix, c: &CoefMatrix, j: usize) -> DenseMatrix {
    let mut e = y.clone();
    let cd = c.to_dense();
    for k in (0..d.cols()).filter(|&k| k != j) {
        for i in 0..y.cols() {
            let ck = cd.get(i, k).conj();
            for r in 0..y.rows() {
                let v = e.get(r, i) - d.get(r, k) * ck;
                e.set(r, i, v);
            }
        }
    }
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn patch_extraction_adjoint(seed in any::<u64>(), h in 3usize..9, w in 3usize..9, side in 1usize..4, stride in 1usize..3, wrap in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geom = PatchGeometry::new(h, w, side, stride, wrap).unwrap();
        let img = rand_image(h, w, &mut rng);
        let x = DenseMatrix::from_fn(geom.patch_len(), geom.num_patches(), |_, _| rc(&mut rng));
        let lhs = cdot(extract_patches(&img, &geom).unwrap().as_slice(), x.as_slice());
        let rhs = cdot(img.as_slice(), aggregate_patches(&x, &geom).unwrap().as_slice());
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn patches_are_translation_equivariant(seed in any::<u64>(), h in 3usize..8, w in 3usize..8, dr in 0usize..8, dc in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geom = PatchGeometry::dense_wrapped(h, w, 2).unwrap();
        let img = rand_image(h, w, &mut rng);
        let shifted = ComplexImage::from_fn(h, w, |r, c| img.get((r + dr) % h, (c + dc) % w));
        let p = extract_patches(&img, &geom).unwrap();
        let q = extract_patches(&shifted, &geom).unwrap();
        for r in 0..h {
            for c in 0..w {
                let src = ((r + dr) % h) * w + (c + dc) % w;
                prop_assert_eq!(q.col(r * w + c), p.col(src));
            }
        }
    }

    #[test]
    fn mri_operator_adjoint_and_isometry(seed in any::<u64>(), h in 4usize..12, w in 4usize..12, factor in 1.0f64..4.0, two_d in any::<bool>()) {
        let scheme = if two_d { MaskScheme::Random2d } else { MaskScheme::Cartesian1d };
        let Ok(mask) = make_mask(h, w, scheme, factor, seed) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let op = MriOperator::new(mask);
        let x = rand_vec(h * w, &mut rng);
        let z = rand_vec(op.num_samples(), &mut rng);
        let ax = op.apply(&x).unwrap();
        let ahz = op.apply_adjoint(&z).unwrap();
        let (l, r) = (cdot(&ax, &z), cdot(&x, &ahz));
        prop_assert!((l - r).norm() <= 1e-10 * (1.0 + l.norm()));
        let back = op.apply(&ahz).unwrap();
        for (a, b) in back.iter().zip(&z) {
            prop_assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn thresholding_is_phase_equivariant(seed in any::<u64>(), len in 1usize..8, theta in -3.2f64..3.2, lambda in 0.0f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = rand_vec(len, &mut rng);
        let rot = C64::from_polar(1.0, theta);
        let br: Vec<C64> = b.iter().map(|z| z * rot).collect();
        prop_assume!(b.iter().all(|z| (z.norm() - lambda).abs() > 1e-9));
        let p0 = L0CodeParams::new(lambda, lambda + 0.3).unwrap();
        let p1 = L1CodeParams::new(lambda).unwrap();
        for (x, y) in [
            (sparse_code_l0(&b, &p0), sparse_code_l0(&br, &p0)),
            (sparse_code_l1(&b, &p1), sparse_code_l1(&br, &p1)),
        ] {
            prop_assert_eq!(x.support(), y.support());
            for (u, v) in x.values().iter().zip(y.values()) {
                prop_assert!((u * rot - v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn support_shrinks_with_weight(seed in any::<u64>(), len in 1usize..12, a in 0.0f64..2.0, extra in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = rand_vec(len, &mut rng);
        let is_subset = |small: &SparseColumn, big: &SparseColumn| small.support().iter().all(|i| big.support().contains(i));
        let lo0 = sparse_code_l0(&b, &L0CodeParams::new(a, 1e8).unwrap());
        let hi0 = sparse_code_l0(&b, &L0CodeParams::new(a + extra, 1e8).unwrap());
        prop_assert!(is_subset(&hi0, &lo0));
        let lo1 = sparse_code_l1(&b, &L1CodeParams::new(a).unwrap());
        let hi1 = sparse_code_l1(&b, &L1CodeParams::new(a + extra).unwrap());
        prop_assert!(is_subset(&hi1, &lo1));
    }

    #[test]
    fn b_and_h_match_explicit_residual(seed in any::<u64>(), n in 1usize..8, nsig in 1usize..12, j in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DenseMatrix::from_fn(n, nsig, |_, _| rc(&mut rng));
        let d = rand_dict(n, j, &mut rng);
        let c = rand_coefs(nsig, j, 0.5, &mut rng);
        let c_new = SparseColumn::from_dense(&(0..nsig).map(|_| if rng.random_bool(0.5) { rc(&mut rng) } else { C64::new(0.0, 0.0) }).collect::<Vec<_>>());
        for k in 0..j {
            let e = naive_ej(&y, d.as_matrix(), &c, k);
            let b = compute_b(&y, d.as_matrix(), &c, k).unwrap();
            let b_ref = e.hermitian_matvec(d.atom(k)).unwrap();
            let h = compute_h(&y, d.as_matrix(), &c, k, &c_new).unwrap();
            let h_ref = e.matvec(&c_new.to_dense()).unwrap();
            for (got, want) in [(b, b_ref), (h, h_ref)] {
                let scale = want.iter().map(|z| z.norm()).fold(1.0, f64::max);
                for (g, w) in got.iter().zip(&want) {
                    prop_assert!((g - w).norm() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn nsre_invariant_to_joint_scaling(seed in any::<u64>(), alpha_re in 0.2f64..3.0, alpha_im in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DenseMatrix::from_fn(4, 7, |_, _| rc(&mut rng));
        let d = rand_dict(4, 5, &mut rng).into_matrix();
        let c = rand_coefs(7, 5, 0.6, &mut rng);
        let alpha = C64::new(alpha_re, alpha_im);
        // d → αd and C → C/conj(α) keep D C^H fixed
        let ds = d.scale(alpha);
        let cs = CoefMatrix::from_dense(&c.to_dense().scale(C64::new(1.0, 0.0) / alpha.conj()));
        let a = nsre(&y, &d, &c).unwrap();
        let b = nsre(&y, &ds, &cs).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
    }

    #[test]
    fn psnr_ignores_global_phase(seed in any::<u64>(), theta in -3.2f64..3.2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reference = rand_image(5, 6, &mut rng);
        let rec = rand_image(5, 6, &mut rng);
        let rot = C64::from_polar(1.0, theta);
        let rec_rot = ComplexImage::from_vec(5, 6, rec.as_slice().iter().map(|z| z * rot).collect()).unwrap();
        let a = psnr(&rec, &reference).unwrap();
        let b = psnr(&rec_rot, &reference).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn binary_formats_round_trip(seed in any::<u64>(), h in 1usize..6, w in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = rand_image(h, w, &mut rng);
        let mut buf = Vec::new();
        formats::write_image(&mut buf, &img).unwrap();
        prop_assert_eq!(formats::read_image(&mut buf.as_slice()).unwrap(), img);
        let c = rand_coefs(h * w, 3, 0.4, &mut rng);
        let mut buf = Vec::new();
        formats::write_coefs(&mut buf, &c).unwrap();
        prop_assert_eq!(formats::read_coefs(&mut buf.as_slice()).unwrap(), c);
        let d = rand_dict(h + 1, w, &mut rng);
        let mut buf = Vec::new();
        formats::write_dictionary(&mut buf, &d).unwrap();
        prop_assert_eq!(formats::read_dictionary(&mut buf.as_slice()).unwrap(), d);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn learning_objective_never_increases(seed in any::<u64>(), l1 in any::<bool>(), weight in 0.05f64..0.8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DenseMatrix::from_fn(4, 20, |_, _| rc(&mut rng));
        let penalty = if l1 { Penalty::l1(weight).unwrap() } else { Penalty::l0(weight).unwrap() };
        let cfg = LearnConfig::new(6, penalty, 8).unwrap().with_inner_trace(true);
        let init = LearnState::initial(rand_dict(4, 6, &mut rng), 20);
        let out = learn(&y, init, &cfg).unwrap();
        let trace = &out.inner_objective_trace;
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-10) + 1e-12, "{} -> {}", w[0], w[1]);
        }
        for k in 0..6 {
            prop_assert!((soupdil::linalg::norm2(out.dictionary.atom(k)) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn image_update_solves_normal_equation(seed in any::<u64>(), nu in 0.1f64..100.0, factor in 1.5f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geom = PatchGeometry::dense_wrapped(8, 8, 2).unwrap();
        let d = rand_dict(4, 6, &mut rng);
        let c = rand_coefs(64, 6, 0.2, &mut rng);
        let op = MriOperator::new(make_mask(8, 8, MaskScheme::Random2d, factor, seed).unwrap());
        let z = rand_vec(op.num_samples(), &mut rng);
        let y = recon::image_update_fourier(&d, &c, &z, &op, nu, &geom).unwrap();
        let (res, rhs) = recon::normal_equation_residual(&y, &d, &c, &z, &op, nu, &geom).unwrap();
        prop_assert!(res <= 1e-8 * rhs);
    }
}
