//! Seeded random states, unitaries and Hermitian matrices.

use nalgebra::QR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CMatrix, CVector, Hermitian, StateVector, UnitaryMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Counter-based seed derivation (splitmix64 finalizer over `seed` and
/// `stream`). Distinct streams give statistically independent seeds and the
/// result does not depend on evaluation order.
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Complex normal with `E|z|^2 = 1`.
pub fn standard_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    // column-major fill keeps the stream order independent of nalgebra internals
    let mut m = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            m[(i, j)] = standard_complex_gaussian(rng);
        }
    }
    m
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryMatrix {
    assert!(dim >= 1, "dimension must be positive");
    let qr = QR::new(ginibre(dim, rng));
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let n = d.norm();
        let phase = if n > 0.0 { d / n } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    UnitaryMatrix::from_raw(q)
}

pub fn haar_random_unitary(dim: usize, seed: u64) -> UnitaryMatrix {
    haar_unitary(dim, &mut rng_from_seed(seed))
}

pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    assert!(dim >= 1, "dimension must be positive");
    let v = CVector::from_fn(dim, |_, _| standard_complex_gaussian(rng));
    StateVector::normalized(v).expect("Gaussian vector is nonzero almost surely")
}

/// GUE sample `(G + G^dag) / 2`, optionally projected to zero trace.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R, traceless: bool) -> Hermitian {
    assert!(dim >= 1, "dimension must be positive");
    let g = ginibre(dim, rng);
    let mut h = (&g + g.adjoint()).unscale(2.0);
    if traceless {
        let shift = h.trace() / dim as f64;
        for i in 0..dim {
            h[(i, i)] -= shift;
        }
    }
    Hermitian::from_raw(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_dim_one_is_phase() {
        let u = haar_random_unitary(1, 9);
        assert!((u.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_is_deterministic_and_unitary() {
        let a = haar_random_unitary(6, 42);
        let b = haar_random_unitary(6, 42);
        assert_eq!(a, b);
        assert!(a.deviation() < 1e-12);
        assert_ne!(a, haar_random_unitary(6, 43));
    }

    #[test]
    fn haar_first_moment_dim_two() {
        // E|U_00|^2 = 1/d under the Haar measure
        let mut rng = rng_from_seed(2024);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| haar_unitary(2, &mut rng).matrix()[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn haar_second_moment_dim_two() {
        // For Haar U(2), |U_00|^2 is uniform on [0,1] (second moment 1/3)
        // and the phase of U_00 is uniform (E[U_00^2] = 0).
        let mut rng = rng_from_seed(77);
        let n = 10_000;
        let mut m2 = 0.0;
        let mut z2 = C64::new(0.0, 0.0);
        for _ in 0..n {
            let u = haar_unitary(2, &mut rng);
            let a = u.matrix()[(0, 0)];
            m2 += a.norm_sqr().powi(2);
            z2 += a * a;
        }
        assert!((m2 / n as f64 - 1.0 / 3.0).abs() < 0.02);
        assert!((z2 / n as f64).norm() < 0.03);
    }

    #[test]
    fn traceless_hermitian_has_no_identity_component() {
        let mut rng = rng_from_seed(1);
        let h = random_hermitian(2, &mut rng, true);
        assert!(h.trace().abs() < 1e-12);
        // H = a X + b Y + c Z: diagonal entries are +c and -c
        let m = h.matrix();
        assert!((m[(0, 0)] + m[(1, 1)]).norm() < 1e-12);
        assert!(super::super::hermitian_deviation(m) < 1e-12);
    }

    #[test]
    fn random_hermitian_deterministic() {
        let a = random_hermitian(5, &mut rng_from_seed(8), false);
        let b = random_hermitian(5, &mut rng_from_seed(8), false);
        assert_eq!(a, b);
    }

    #[test]
    fn gue_spectrum_is_semicircle_like() {
        // Wigner semicircle with radius 2 sqrt(N / 2) for this normalization.
        let n = 64;
        let mut rng = rng_from_seed(31);
        let radius = 2.0 * (n as f64 / 2.0).sqrt();
        let mut bins = [0usize; 3];
        let mut outside = 0usize;
        for _ in 0..20 {
            let h = random_hermitian(n, &mut rng, false);
            for ev in h.into_inner().symmetric_eigenvalues().iter() {
                let x = ev / radius;
                if x.abs() > 1.1 {
                    outside += 1;
                }
                let b = (((x + 1.0) / 2.0 * 3.0).floor() as isize).clamp(0, 2) as usize;
                bins[b] += 1;
            }
        }
        // exact semicircle masses of the thirds: 0.292, 0.416, 0.292
        let total = (20 * n) as f64;
        let mid = bins[1] as f64 / total;
        assert!((mid - 0.416).abs() < 0.04, "{bins:?}");
        assert!(bins[1] > bins[0] && bins[1] > bins[2], "{bins:?}");
        assert!(outside == 0, "{outside} eigenvalues beyond the edge");
    }
}
