//! Pauli-string decomposition of qubit operators.
//!
//! Strings are indexed in base 4 with qubit 0 as the most significant digit,
//! matching the world index convention (system qubits first).

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BipartiteDims, CMatrix, Hermitian, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn from_digit(d: usize) -> Self {
        Self::ALL[d]
    }

    pub fn digit(self) -> usize {
        self as usize
    }

    /// Bit flip applied to the ket index.
    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Matrix element `<a|P|a ^ flip>` for input bit `b = a ^ flip`.
    fn element(self, row_bit: usize) -> C64 {
        match (self, row_bit) {
            (Pauli::I, _) | (Pauli::X, _) => C64::new(1.0, 0.0),
            (Pauli::Y, 0) => C64::new(0.0, -1.0),
            (Pauli::Y, _) => C64::new(0.0, 1.0),
            (Pauli::Z, 0) => C64::new(1.0, 0.0),
            (Pauli::Z, _) => C64::new(-1.0, 0.0),
        }
    }

    pub fn matrix(self) -> CMatrix {
        let mut m = CMatrix::zeros(2, 2);
        for row in 0..2 {
            let col = if self.flips() { row ^ 1 } else { row };
            m[(row, col)] = self.element(row);
        }
        m
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// Real coefficients `c_P = Tr[P H] / 2^n` for all `4^n` strings.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDecomposition {
    n_qubits: u32,
    coeffs: Vec<f64>,
}

impl PauliDecomposition {
    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn index_of(&self, string: &[Pauli]) -> usize {
        assert_eq!(string.len(), self.n_qubits as usize, "string length");
        string.iter().fold(0, |acc, p| acc * 4 + p.digit())
    }

    pub fn string_of(&self, mut index: usize) -> Vec<Pauli> {
        let n = self.n_qubits as usize;
        let mut out = vec![Pauli::I; n];
        for q in (0..n).rev() {
            out[q] = Pauli::from_digit(index % 4);
            index /= 4;
        }
        out
    }

    pub fn get(&self, string: &[Pauli]) -> f64 {
        self.coeffs[self.index_of(string)]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Non-identity strings with `|c_P| > tol`.
    pub fn nonzero(&self, tol: f64) -> Vec<(Vec<Pauli>, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| c.abs() > tol)
            .map(|(i, &c)| (self.string_of(i), c))
            .collect()
    }

    /// `sum_P c_P P`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.n_qubits as usize;
        let dim = 1usize << n;
        let mut out = CMatrix::zeros(dim, dim);
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let string = self.string_of(idx);
            for row in 0..dim {
                let (col, phase) = string_action(&string, row);
                out[(row, col)] += phase * c;
            }
        }
        out
    }
}

/// Column and value of the single nonzero entry of `P` in `row`.
fn string_action(string: &[Pauli], row: usize) -> (usize, C64) {
    let n = string.len();
    let mut col = row;
    let mut phase = C64::new(1.0, 0.0);
    for (q, p) in string.iter().enumerate() {
        let bit_pos = n - 1 - q;
        let bit = (row >> bit_pos) & 1;
        if p.flips() {
            col ^= 1 << bit_pos;
        }
        phase *= p.element(bit);
    }
    (col, phase)
}

pub fn pauli_decompose(h: &Hermitian, n_qubits: u32) -> Result<PauliDecomposition> {
    let dim = h.dim();
    if !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    if dim != 1usize << n_qubits {
        return Err(Error::dims(1usize << n_qubits, dim));
    }
    let n = n_qubits as usize;
    let m = h.matrix();
    let count = 1usize << (2 * n);
    let mut coeffs = vec![0.0; count];
    let mut string = vec![Pauli::I; n];
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let mut rest = idx;
        for q in (0..n).rev() {
            string[q] = Pauli::from_digit(rest % 4);
            rest /= 4;
        }
        // Tr[P H] = sum_row P[row, col] H[col, row]
        let mut tr = C64::new(0.0, 0.0);
        for row in 0..dim {
            let (col, phase) = string_action(&string, row);
            tr += phase * m[(col, row)];
        }
        *c = tr.re / dim as f64;
    }
    Ok(PauliDecomposition { n_qubits, coeffs })
}

/// Squared-coefficient mass on system-only, environment-only and
/// interaction strings. The identity string is excluded everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionWeight {
    pub system: f64,
    pub environment: f64,
    pub interaction: f64,
}

/// Number of string slots in each group: `(4^n_s - 1, 4^n_e - 1, rest)`.
pub fn slot_counts(dims: BipartiteDims) -> (usize, usize, usize) {
    let s = 1usize << (2 * dims.n_s());
    let e = 1usize << (2 * dims.n_e());
    let w = 1usize << (2 * dims.n_w());
    (s - 1, e - 1, w - s - e + 1)
}

pub fn interaction_weight(coeffs: &PauliDecomposition, dims: BipartiteDims) -> Result<InteractionWeight> {
    if coeffs.n_qubits() != dims.n_w() {
        return Err(Error::dims(dims.n_w() as usize, coeffs.n_qubits() as usize));
    }
    // index = sys_part * 4^n_e + env_part
    let env_count = 1usize << (2 * dims.n_e());
    let mut w = InteractionWeight {
        system: 0.0,
        environment: 0.0,
        interaction: 0.0,
    };
    for (idx, &c) in coeffs.coefficients().iter().enumerate() {
        let sys = idx / env_count;
        let env = idx % env_count;
        let c2 = c * c;
        match (sys == 0, env == 0) {
            (true, true) => {}
            (false, true) => w.system += c2,
            (true, false) => w.environment += c2,
            (false, false) => w.interaction += c2,
        }
    }
    Ok(w)
}
