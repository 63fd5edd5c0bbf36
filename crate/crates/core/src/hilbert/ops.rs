use nalgebra::SVD;

use super::{BipartiteDims, CMatrix, CVector, DensityMatrix, StateVector, C64};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Which factor a partial trace keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    System,
    Environment,
}

/// Kronecker product `a ⊗ b` under the `k = i * d_b + j` convention.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let max = Tolerances::DEFAULT.max_dim;
    let (rows, cols) = (ra * rb, ca * cb);
    if rows > max || cols > max {
        return Err(Error::SizeLimit {
            dim: rows.max(cols),
            max,
        });
    }
    Ok(a.kronecker(b))
}

pub fn kron_state(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    let dim = a.dim() * b.dim();
    let max = Tolerances::DEFAULT.max_dim;
    if dim > max {
        return Err(Error::SizeLimit { dim, max });
    }
    Ok(StateVector::from_unitary_image(
        a.amplitudes().kronecker(b.amplitudes()),
    ))
}

pub fn partial_trace(rho: &DensityMatrix, dims: BipartiteDims, keep: Keep) -> Result<DensityMatrix> {
    dims.check_world(rho.dim())?;
    let (d_s, d_e) = (dims.d_s(), dims.d_e());
    let m = rho.matrix();
    let out = match keep {
        Keep::System => CMatrix::from_fn(d_s, d_s, |i, k| {
            (0..d_e).map(|j| m[(i * d_e + j, k * d_e + j)]).sum()
        }),
        Keep::Environment => CMatrix::from_fn(d_e, d_e, |j, l| {
            (0..d_s).map(|i| m[(i * d_e + j, i * d_e + l)]).sum()
        }),
    };
    Ok(DensityMatrix::from_raw(out))
}

/// `d_s x d_e` coefficient matrix of a world vector.
pub(crate) fn coefficient_matrix(psi: &CVector, dims: BipartiteDims) -> CMatrix {
    CMatrix::from_row_slice(dims.d_s(), dims.d_e(), psi.as_slice())
}

/// `Tr_e |psi><psi|` computed directly from the amplitudes.
pub fn reduced_system(psi: &StateVector, dims: BipartiteDims) -> Result<DensityMatrix> {
    dims.check_world(psi.dim())?;
    let c = coefficient_matrix(psi.amplitudes(), dims);
    Ok(DensityMatrix::from_raw(&c * c.adjoint()))
}

/// `Tr_s |psi><psi|` computed directly from the amplitudes.
pub fn reduced_environment(psi: &StateVector, dims: BipartiteDims) -> Result<DensityMatrix> {
    dims.check_world(psi.dim())?;
    let c = coefficient_matrix(psi.amplitudes(), dims);
    Ok(DensityMatrix::from_raw(c.transpose() * c.conjugate()))
}

/// `Tr[rho^2]`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr[rho^2] = sum |rho_ij|^2 for Hermitian rho
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Linear entanglement entropy `1 - Tr[rho_s^2]` of a pure world state.
pub fn linear_entropy(psi: &StateVector, dims: BipartiteDims) -> Result<f64> {
    dims.check_world(psi.dim())?;
    Ok(linear_entropy_raw(psi.amplitudes().as_slice(), dims))
}

/// Linear entropy of an unvalidated amplitude slice. Uses the smaller of the
/// two reduced states; their purities agree for pure states.
pub(crate) fn linear_entropy_raw(psi: &[C64], dims: BipartiteDims) -> f64 {
    let (d_s, d_e) = (dims.d_s(), dims.d_e());
    let mut purity = 0.0;
    if d_s <= d_e {
        for i in 0..d_s {
            let ri = &psi[i * d_e..(i + 1) * d_e];
            for k in i..d_s {
                let rk = &psi[k * d_e..(k + 1) * d_e];
                let mut z = C64::new(0.0, 0.0);
                for j in 0..d_e {
                    z += ri[j] * rk[j].conj();
                }
                let w = if i == k { 1.0 } else { 2.0 };
                purity += w * z.norm_sqr();
            }
        }
    } else {
        for j in 0..d_e {
            for l in j..d_e {
                let mut z = C64::new(0.0, 0.0);
                for i in 0..d_s {
                    z += psi[i * d_e + j] * psi[i * d_e + l].conj();
                }
                let w = if j == l { 1.0 } else { 2.0 };
                purity += w * z.norm_sqr();
            }
        }
    }
    1.0 - purity
}

/// `psi = sum_k c_k |s_k> ⊗ |e_k>` with `c` descending.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub system: Vec<StateVector>,
    pub environment: Vec<StateVector>,
}

impl SchmidtDecomposition {
    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    pub fn reconstruct(&self) -> CVector {
        let d = self.system[0].dim() * self.environment[0].dim();
        let mut out = CVector::zeros(d);
        for ((c, s), e) in self.coefficients.iter().zip(&self.system).zip(&self.environment) {
            out += s.amplitudes().kronecker(e.amplitudes()).scale(*c);
        }
        out
    }
}

pub fn schmidt_decompose(psi: &StateVector, dims: BipartiteDims) -> Result<SchmidtDecomposition> {
    dims.check_world(psi.dim())?;
    let c = coefficient_matrix(psi.amplitudes(), dims);
    let svd = SVD::new(c, true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^dag");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut out = SchmidtDecomposition {
        coefficients: Vec::with_capacity(order.len()),
        system: Vec::with_capacity(order.len()),
        environment: Vec::with_capacity(order.len()),
    };
    for k in order {
        out.coefficients.push(svd.singular_values[k]);
        out.system
            .push(StateVector::from_unitary_image(u.column(k).into_owned()));
        // psi[i][j] = sum_k u[i][k] s_k v_t[k][j], so the environment vector is row k of V^dag
        out.environment
            .push(StateVector::from_unitary_image(v_t.row(k).transpose()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{haar_state, ONE, ZERO};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn dims(n_s: u32, n_e: u32) -> BipartiteDims {
        BipartiteDims::new(n_s, n_e).unwrap()
    }

    fn bell() -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_slice(&[c(h, 0.0), ZERO, ZERO, c(h, 0.0)]).unwrap()
    }

    #[test]
    fn kron_identities_and_basis() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2).unwrap(), CMatrix::identity(4, 4));
        let s = kron_state(&StateVector::basis(2, 0), &StateVector::basis(2, 1)).unwrap();
        assert_eq!(s, StateVector::basis(4, 1));
    }

    #[test]
    fn kron_zz_matches_elementwise_oracle() {
        let z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        let zz = kron(&z, &z).unwrap();
        // elementwise oracle: (a⊗b)[2i+j, 2k+l] = a[i,k] b[j,l]
        for r in 0..4 {
            for col in 0..4 {
                let expect = z[(r / 2, col / 2)] * z[(r % 2, col % 2)];
                assert_eq!(zz[(r, col)], expect);
            }
        }
        let diag: Vec<f64> = (0..4).map(|k| zz[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn kron_rejects_oversize() {
        let a = CMatrix::identity(128, 128);
        assert!(matches!(kron(&a, &a), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn partial_trace_examples() {
        let d = dims(1, 1);
        let rho = StateVector::basis(4, 1).projector();
        let rs = partial_trace(&rho, d, Keep::System).unwrap();
        assert_eq!(rs.matrix(), StateVector::basis(2, 0).projector().matrix());
        let rb = partial_trace(&bell().projector(), d, Keep::System).unwrap();
        assert!((rb.matrix() - CMatrix::identity(2, 2).unscale(2.0)).norm() < 1e-15);
        assert!(partial_trace(&rho, dims(1, 2), Keep::System).is_err());
    }

    #[test]
    fn partial_trace_matches_index_summation() {
        let d = dims(1, 2);
        let mut rng = crate::hilbert::rng_from_seed(3);
        let psi = haar_state(8, &mut rng);
        let rho = psi.projector();
        let fast = partial_trace(&rho, d, Keep::System).unwrap();
        let direct = reduced_system(&psi, d).unwrap();
        let mut oracle = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for k in 0..2 {
                for j in 0..4 {
                    oracle[(i, k)] += psi.amplitudes()[i * 4 + j] * psi.amplitudes()[k * 4 + j].conj();
                }
            }
        }
        assert!((fast.matrix() - &oracle).norm() < 1e-12);
        assert!((direct.matrix() - &oracle).norm() < 1e-12);
        let env = partial_trace(&rho, d, Keep::Environment).unwrap();
        assert!((env.matrix() - reduced_environment(&psi, d).unwrap().matrix()).norm() < 1e-12);
        assert!((env.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&StateVector::basis(3, 2).projector()) - 1.0).abs() < 1e-15);
        assert!((purity(&DensityMatrix::maximally_mixed(2)) - 0.5).abs() < 1e-15);
        let m = CMatrix::from_row_slice(2, 2, &[c(0.9, 0.0), ZERO, ZERO, c(0.1, 0.0)]);
        let rho = DensityMatrix::new(m).unwrap();
        // eigenvalues 0.9, 0.1: 0.81 + 0.01
        assert!((purity(&rho) - 0.82).abs() < 1e-12);
    }

    #[test]
    fn linear_entropy_examples() {
        let d = dims(1, 1);
        let prod = kron_state(&StateVector::basis(2, 1), &StateVector::basis(2, 0)).unwrap();
        assert!(linear_entropy(&prod, d).unwrap().abs() < 1e-15);
        assert!((linear_entropy(&bell(), d).unwrap() - 0.5).abs() < 1e-15);
        let th = std::f64::consts::PI / 6.0;
        let psi =
            StateVector::from_slice(&[c(th.cos(), 0.0), ZERO, ZERO, c(0.0, -th.sin())]).unwrap();
        // Schmidt coefficients cos, sin: 1 - (cos^4 + sin^4)
        let oracle = 1.0 - (th.cos().powi(4) + th.sin().powi(4));
        assert!((oracle - 0.375).abs() < 1e-15);
        assert!((linear_entropy(&psi, d).unwrap() - 0.375).abs() < 1e-14);
    }

    #[test]
    fn linear_entropy_uses_either_factor() {
        let mut rng = crate::hilbert::rng_from_seed(11);
        for (ns, ne) in [(1, 2), (2, 1), (2, 3), (3, 1)] {
            let d = dims(ns, ne);
            let psi = haar_state(d.d_w(), &mut rng);
            let s = 1.0 - purity(&reduced_system(&psi, d).unwrap());
            let e = 1.0 - purity(&reduced_environment(&psi, d).unwrap());
            let fast = linear_entropy(&psi, d).unwrap();
            assert!((s - e).abs() < 1e-10);
            assert!((s - fast).abs() < 1e-12);
        }
    }

    #[test]
    fn schmidt_examples() {
        let d = dims(1, 1);
        let prod = kron_state(&StateVector::basis(2, 0), &StateVector::basis(2, 1)).unwrap();
        let sd = schmidt_decompose(&prod, d).unwrap();
        assert!((sd.coefficients[0] - 1.0).abs() < 1e-14);
        assert_eq!(sd.rank(1e-12), 1);
        let sb = schmidt_decompose(&bell(), d).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((sb.coefficients[0] - h).abs() < 1e-14 && (sb.coefficients[1] - h).abs() < 1e-14);
    }

    #[test]
    fn schmidt_squares_are_reduced_eigenvalues() {
        let d = dims(1, 2);
        let mut rng = crate::hilbert::rng_from_seed(5);
        let psi = haar_state(8, &mut rng);
        let sd = schmidt_decompose(&psi, d).unwrap();
        let rho = reduced_system(&psi, d).unwrap().into_inner();
        let mut ev: Vec<f64> = rho.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        for (c, e) in sd.coefficients.iter().zip(&ev) {
            assert!((c * c - e).abs() < 1e-12);
        }
        let total: f64 = sd.coefficients.iter().map(|c| c * c).sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert!((sd.reconstruct() - psi.amplitudes()).norm() < 1e-10);
    }
}
