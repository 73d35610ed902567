use std::f64::consts::PI;

use andersonlab::fourier::io::{load_field, read_field, save_field, write_field};
use andersonlab::fourier::{
    besov_norm, high_pass, holder_norm, low_pass, lp_block, lp_norm, sobolev_norm, transform, Complex64, Direction,
    DyadicDecomposition, Grid, TorusField,
};
use andersonlab::noise::sample_white_noise;
use proptest::prelude::*;

fn rand_field(dim: usize, m: usize, seed: u64) -> TorusField {
    sample_white_noise(dim, m, seed).unwrap().field
}

/// Complex field with arbitrary (non-Hermitian) coefficients.
fn complex_field(grid: Grid, seed: u64) -> TorusField {
    let a = rand_field(grid.dim(), grid.m(), seed);
    let b = rand_field(grid.dim(), grid.m(), seed + 1000);
    a.add(&b.scale_complex(Complex64::new(0.0, 1.0)))
}

#[test]
fn grid_rejects_non_power_of_two() {
    assert!(Grid::new(2, 48).is_err());
    assert!(Grid::new(4, 16).is_err());
    assert!(Grid::new(3, 16).is_ok());
}

#[test]
fn delta_transforms_to_flat_coefficients() {
    let g = Grid::new(2, 16).unwrap();
    let mut v = vec![Complex64::new(0.0, 0.0); g.len()];
    v[0] = Complex64::new(1.0, 0.0);
    let c = transform(g, &v, Direction::Forward);
    let w = g.cell_weight();
    assert!(c.iter().all(|z| (z - Complex64::new(w, 0.0)).norm() < 1e-15));
}

#[test]
fn single_mode_is_one_hot() {
    let g = Grid::new(2, 16).unwrap();
    let f = TorusField::mode(g, &[3, -2]).unwrap();
    // Point values of e_k built by hand.
    let vals: Vec<Complex64> = (0..16 * 16)
        .map(|i| {
            let (x, y) = ((i / 16) as f64 / 16.0, (i % 16) as f64 / 16.0);
            Complex64::from_polar(1.0, 2.0 * PI * (3.0 * x - 2.0 * y))
        })
        .collect();
    let c = transform(g, &vals, Direction::Forward);
    for (i, z) in c.iter().enumerate() {
        let want = if g.wavevector(i)[..2] == [3, -2] { 1.0 } else { 0.0 };
        assert!((z - Complex64::new(want, 0.0)).norm() < 1e-12, "index {i}");
        assert!((f.coeffs()[i] - z).norm() < 1e-12);
    }
}

#[test]
fn round_trip_3d() {
    let g = Grid::new(3, 16).unwrap();
    let f = complex_field(g, 3);
    let back = transform(g, &transform(g, f.coeffs(), Direction::Inverse), Direction::Forward);
    let err: f64 = back.iter().zip(f.coeffs()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    assert!(err / f.norm_l2() < 1e-12);
}

#[test]
fn real_fields_are_hermitian() {
    let f = rand_field(2, 32, 5);
    assert!(f.is_real());
    assert_eq!(f.hermitian_defect(), 0.0);
}

#[test]
fn lp_blocks_of_a_single_mode() {
    let g = Grid::new(2, 32).unwrap();
    // |k| = 3 lies in (2, 4], block 2.
    let f = TorusField::mode(g, &[3, 0]).unwrap();
    let d = DyadicDecomposition::sharp(g);
    for j in -1..=d.j_max() {
        let b = lp_block(&f, j).unwrap();
        if j == 2 {
            assert!(b.sub(&f).norm_l2() < 1e-15);
        } else {
            assert!(b.norm_l2() < 1e-15, "block {j}");
        }
    }
    let c = TorusField::constant(g, 2.5);
    assert!(lp_block(&c, -1).unwrap().sub(&c).norm_l2() < 1e-15);
    assert!(lp_block(&f, d.j_max() + 1).is_err());
    assert!(lp_block(&f, -2).is_err());
}

#[test]
fn sharp_blocks_partition_and_are_orthogonal() {
    let f = rand_field(2, 64, 11);
    let d = DyadicDecomposition::sharp(f.grid());
    let blocks = d.blocks(&f).unwrap();
    let sum = blocks.iter().fold(TorusField::zeros(f.grid()), |a, b| a.add(b));
    assert!(sum.sub(&f).norm_l2() / f.norm_l2() < 1e-14);
    for (i, a) in blocks.iter().enumerate() {
        let again = d.block(a, i as i32 - 1).unwrap();
        assert!(again.sub(a).norm_l2() < 1e-14, "idempotence");
        for b in &blocks[i + 1..] {
            assert!(a.inner(b).norm() < 1e-12, "orthogonality");
        }
    }
}

#[test]
fn block_supports_are_dyadic_annuli() {
    let g = Grid::new(2, 64).unwrap();
    let f = TorusField::from_coeffs(g, vec![Complex64::new(1.0, 0.0); g.len()], false).unwrap();
    for j in 0..=DyadicDecomposition::sharp(g).j_max() {
        let b = lp_block(&f, j).unwrap();
        for (i, c) in b.coeffs().iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let k = g.wavevector(i);
            let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
            let lo = if j == 0 { 0.0 } else { 2f64.powi(j - 1) };
            assert!(r > lo && r <= 2f64.powi(j), "block {j}, |k| = {r}");
        }
    }
}

#[test]
fn low_and_high_pass() {
    let g = Grid::new(2, 32).unwrap();
    let e = TorusField::mode(g, &[3, 4]).unwrap();
    assert!(low_pass(&e, 5.0).sub(&e).norm_l2() < 1e-15);
    assert!(low_pass(&e, 4.0).norm_l2() < 1e-15);
    let f = rand_field(2, 32, 2);
    assert!(low_pass(&f, 6.0).add(&high_pass(&f, 6.0)).sub(&f).norm_l2() < 1e-13);
    let twice = low_pass(&low_pass(&f, 9.0), 4.0);
    assert!(twice.sub(&low_pass(&f, 4.0)).norm_l2() < 1e-15);
}

#[test]
fn besov_of_single_mode_and_constant() {
    let g = Grid::new(2, 64).unwrap();
    // |k| = 5 is in block 3.
    let e = TorusField::mode(g, &[3, 4]).unwrap();
    for (a, p, q) in [(0.5, 2.0, 2.0), (-1.0, f64::INFINITY, f64::INFINITY), (1.3, 4.0, 1.0)] {
        let want = 2f64.powf(3.0 * a);
        assert!((besov_norm(&e, a, p, q) - want).abs() < 1e-12 * want);
    }
    let c = TorusField::constant(g, -1.7);
    for (a, p, q) in [(0.5, 2.0, 2.0), (-2.0, 1.0, f64::INFINITY)] {
        assert!((besov_norm(&c, a, p, q) - 1.7).abs() < 1e-12);
    }
}

#[test]
fn besov_022_is_parseval_l2() {
    let f = rand_field(2, 256, 9);
    let parseval: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    assert!((besov_norm(&f, 0.0, 2.0, 2.0) - parseval).abs() < 1e-10 * parseval);
    assert!((sobolev_norm(&f, 0.0) - lp_norm(&f, 2.0)).abs() < 1e-10 * parseval);
}

#[test]
fn sobolev_of_modes() {
    let g = Grid::new(3, 16).unwrap();
    let one = TorusField::mode(g, &[0, 0, 0]).unwrap();
    for s in [-1.0, 0.0, 0.7, 2.0] {
        assert!((sobolev_norm(&one, s) - 1.0).abs() < 1e-14);
    }
    let e = TorusField::mode(g, &[1, 2, -2]).unwrap();
    let want = (1.0 + 4.0 * PI * PI * 9.0f64).sqrt();
    assert!((sobolev_norm(&e, 1.0) - want).abs() < 1e-12 * want);
}

#[test]
fn sobolev_and_besov_22_are_equivalent() {
    for seed in 0..10 {
        let f = rand_field(2, 64, seed).low_pass(20.0);
        for s in [0.5, 1.0, 1.5] {
            // On block j the weights compare as (1 + 4π²|k|²)^{s/2} / 2^{js} ∈ [π^s, (1 + 4π²)^{s/2}].
            let r = sobolev_norm(&f, s) / besov_norm(&f, s, 2.0, 2.0);
            let (lo, hi) = (PI.powf(s).min(1.0), (1.0 + 4.0 * PI * PI).powf(s / 2.0));
            assert!(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12), "ratio {r} at s = {s}");
        }
    }
}

#[test]
fn besov_embedding_constant_is_uniform() {
    // B^α_{p,q} ≤ C B^β_{r,q} with β = α + d(1/r - 1/p), p ≥ r.
    let (alpha, p, r, q) = (-0.5, f64::INFINITY, 2.0, f64::INFINITY);
    let beta = alpha + 2.0 * (1.0 / r - 1.0 / p);
    let worst = (0..100)
        .map(|s| {
            let f = rand_field(2, 32, s);
            besov_norm(&f, alpha, p, q) / besov_norm(&f, beta, r, q)
        })
        .fold(0.0, f64::max);
    assert!(worst < 8.0, "embedding ratio {worst}");
}

#[test]
fn derivative_of_modes_is_exact() {
    let g = Grid::new(2, 64).unwrap();
    for k in [[1i64, 0], [3, -7], [-12, 5], [20, 20]] {
        let e = TorusField::mode(g, &k).unwrap();
        let grad = e.gradient();
        let n = grad.iter().map(|x| x.norm_l2().powi(2)).sum::<f64>().sqrt();
        let want = 2.0 * PI * ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
        assert!((n - want).abs() < 1e-12 * want);
    }
}

#[test]
fn holder_is_besov_infinity() {
    let f = rand_field(2, 64, 4);
    assert_eq!(holder_norm(&f, -1.1), besov_norm(&f, -1.1, f64::INFINITY, f64::INFINITY));
    let e = TorusField::mode(Grid::new(2, 64).unwrap(), &[0, 9]).unwrap();
    assert!((lp_norm(&e, f64::INFINITY) - 1.0).abs() < 1e-14);
    assert!((lp_norm(&e, 4.0) - 1.0).abs() < 1e-14);
}

#[test]
fn container_round_trip() {
    let g = Grid::new(2, 16).unwrap();
    let f = complex_field(g, 21);
    let mut bytes = Vec::new();
    write_field(&mut bytes, &f).unwrap();
    let back = read_field(bytes.as_slice()).unwrap();
    assert_eq!(back.coeffs(), f.coeffs());
    assert_eq!(back.grid(), g);

    let r = rand_field(3, 8, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.fld");
    save_field(&path, &r).unwrap();
    let back = load_field(&path).unwrap();
    assert!(back.is_real());
    assert_eq!(back.coeffs(), r.coeffs());
}

#[test]
fn truncated_container_is_rejected() {
    let f = rand_field(2, 8, 1);
    let mut bytes = Vec::new();
    write_field(&mut bytes, &f).unwrap();
    bytes.truncate(bytes.len() - 8);
    assert!(read_field(bytes.as_slice()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn round_trip_is_identity(vals in prop::collection::vec(-1.0f64..1.0, 2 * 16 * 16)) {
        let g = Grid::new(2, 16).unwrap();
        let v: Vec<Complex64> = vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let back = transform(g, &transform(g, &v, Direction::Forward), Direction::Inverse);
        let scale = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        let err = back.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err / scale < 1e-12);
    }

    #[test]
    fn projectors_are_complementary(seed in 0u64..1000, n in 0.0f64..40.0) {
        let f = rand_field(2, 32, seed);
        let sum = low_pass(&f, n).add(&high_pass(&f, n));
        prop_assert!(sum.sub(&f).norm_l2() <= 1e-13 * f.norm_l2());
    }
}
