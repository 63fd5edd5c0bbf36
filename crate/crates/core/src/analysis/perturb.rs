//! Robustness trajectories of a trained state under four substitutions.

use std::path::Path;

use crate::cost::{entropy_trajectory, write_columns_csv};
use crate::error::{Error, Result};
use crate::hilbert::{
    haar_state, kron_state, rng_from_seed, schmidt_decompose, standard_complex_gaussian,
    BipartiteDims, CVector, SpectralDecomposition, StateVector, UnitaryMatrix,
};

use super::orthogonal_state;

pub const PERTURBATION_COLUMNS: [&str; 4] = ["trained", "orthogonal_system", "random_env", "subspace_perturbed"];

/// Largest admissible `1 - c_1^2` for the trained state in frame `B`.
const PRODUCT_GAP: f64 = 1e-6;
/// Eigenvectors with weight above this belong to the support of the state.
const SUPPORT_WEIGHT: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PerturbationSuite {
    pub times: Vec<f64>,
    pub trained: Vec<f64>,
    pub orthogonal_system: Vec<f64>,
    pub random_env: Vec<f64>,
    pub subspace_perturbed: Vec<f64>,
}

impl PerturbationSuite {
    pub fn columns(&self) -> [&[f64]; 4] {
        [
            &self.trained,
            &self.orthogonal_system,
            &self.random_env,
            &self.subspace_perturbed,
        ]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_columns_csv(path, &PERTURBATION_COLUMNS, &self.times, &self.columns())
    }
}

/// Trajectories for the trained state, the system factor swapped for an
/// orthogonal state, the environment factor replaced by a Haar state, and the
/// eigen-coefficients re-randomized inside the state's eigen-support.
pub fn perturbation_suite(
    spec: &SpectralDecomposition,
    b: &UnitaryMatrix,
    psi_w: &StateVector,
    dims: BipartiteDims,
    times: &[f64],
    seed: u64,
) -> Result<PerturbationSuite> {
    let framed = b.apply(psi_w);
    let schmidt = schmidt_decompose(&framed, dims)?;
    let gap = 1.0 - schmidt.coefficients[0].powi(2);
    if gap > PRODUCT_GAP {
        return Err(Error::Precondition(format!(
            "trained state is not product in the given factorization: Schmidt gap {gap:.3e} exceeds {PRODUCT_GAP:e}"
        )));
    }
    let sys = &schmidt.system[0];
    let env = &schmidt.environment[0];
    let mut rng = rng_from_seed(seed);
    let to_world = |dest: StateVector| b.adjoint().apply(&dest);

    let ortho = if dims.d_s() > 1 {
        to_world(kron_state(&orthogonal_state(sys), env)?)
    } else {
        psi_w.clone()
    };
    let random_env = to_world(kron_state(sys, &haar_state(dims.d_e(), &mut rng))?);

    let coeffs = spec.to_eigenbasis(psi_w.amplitudes());
    let mut mixed = CVector::zeros(spec.dim());
    for (k, c) in coeffs.iter().enumerate() {
        if c.norm_sqr() > SUPPORT_WEIGHT {
            mixed += spec.eigenvectors().column(k) * standard_complex_gaussian(&mut rng);
        }
    }
    let subspace = StateVector::normalized(mixed)?;

    let run = |psi: &StateVector| entropy_trajectory(psi, b, spec, times, dims);
    Ok(PerturbationSuite {
        times: times.to_vec(),
        trained: run(psi_w)?,
        orthogonal_system: run(&ortho)?,
        random_env: run(&random_env)?,
        subspace_perturbed: run(&subspace)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::PointerSolution;
    use crate::cost::{log_grid, DEFAULT_T_LATE};
    use crate::hamiltonians::{block_diagonal, furnace, gue_blocks};
    use crate::hilbert::{haar_unitary, random_hermitian, Hermitian, C64};

    fn dims() -> BipartiteDims {
        BipartiteDims::new(1, 2).unwrap()
    }

    #[test]
    fn block_diagonal_pointer_survives_env_randomization() {
        let d = dims();
        let mut rng = rng_from_seed(1);
        let blocks = gue_blocks(2, 4, 0.0, &mut rng);
        let w = haar_unitary(2, &mut rng);
        let h = block_diagonal(d, &blocks, Some(&w)).unwrap();
        let spec = SpectralDecomposition::new(&h).unwrap();
        let sol = PointerSolution::from_blocks(d, blocks, Some(&w)).unwrap();
        let psi = sol.world_state(0, &haar_state(4, &mut rng)).unwrap();
        let times = log_grid(0.01, DEFAULT_T_LATE, 40);
        let suite = perturbation_suite(&spec, &sol.b, &psi, d, &times, 9).unwrap();
        for col in [&suite.trained, &suite.random_env, &suite.orthogonal_system] {
            assert!(col.iter().all(|&s| s <= 1e-9));
        }
    }

    #[test]
    fn furnace_incinerates_random_env_but_not_subspace() {
        let d = dims();
        let mut rng = rng_from_seed(2);
        let u = haar_unitary(2, &mut rng);
        let pair: Vec<Hermitian> = [[0.3, -1.1], [0.8, 0.2]]
            .iter()
            .map(|ev| Hermitian::from_real_diagonal(ev).conjugate_by(&u))
            .collect();
        let blocks = vec![pair[0].clone(), pair[1].clone(), random_hermitian(2, &mut rng, false), random_hermitian(2, &mut rng, false)];
        let h = furnace(d, &blocks).unwrap();
        let spec = SpectralDecomposition::new(&h).unwrap();
        let s0 = StateVector::new(u.matrix().column(0).into_owned()).unwrap();
        let env = StateVector::from_slice(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let psi = kron_state(&s0, &env).unwrap();
        let times = log_grid(0.01, DEFAULT_T_LATE, 48);
        let id = UnitaryMatrix::identity(8);
        let suite = perturbation_suite(&spec, &id, &psi, d, &times, 3).unwrap();
        assert!(suite.trained.iter().all(|&s| s <= 1e-9));
        assert!(suite.subspace_perturbed.iter().all(|&s| s <= 1e-9));
        assert!(suite.random_env.iter().cloned().fold(0.0, f64::max) > 0.1);
    }

    #[test]
    fn rejects_entangled_input() {
        let d = dims();
        let mut rng = rng_from_seed(3);
        let h = random_hermitian(8, &mut rng, false);
        let spec = SpectralDecomposition::new(&h).unwrap();
        let psi = haar_state(8, &mut rng);
        let err = perturbation_suite(&spec, &UnitaryMatrix::identity(8), &psi, d, &[0.0, 1.0], 0).unwrap_err();
        assert!(err.to_string().contains("Schmidt gap"));
    }

    #[test]
    fn csv_layout() {
        let suite = PerturbationSuite {
            times: vec![0.0, 1.0],
            trained: vec![0.0, 0.1],
            orthogonal_system: vec![0.0, 0.2],
            random_env: vec![0.0, 0.3],
            subspace_perturbed: vec![0.0, 0.4],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        suite.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,trained,orthogonal_system,random_env,subspace_perturbed"));
        assert_eq!(lines.count(), 2);
    }
}
