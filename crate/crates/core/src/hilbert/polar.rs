use nalgebra::SVD;

use super::{CMatrix, UnitaryMatrix};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Unitary polar factor of `m`: with `m = U S V^dag`, returns `U V^dag`, the
/// unitary nearest to `m` in Frobenius norm.
pub fn closest_unitary(m: &CMatrix) -> Result<UnitaryMatrix> {
    if !m.is_square() {
        return Err(Error::dims(m.nrows(), m.ncols()));
    }
    let svd = SVD::new(m.clone(), true, true);
    let smallest = svd.singular_values.min();
    if !(smallest > Tolerances::DEFAULT.singular) {
        return Err(Error::Singular(smallest));
    }
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^dag");
    Ok(UnitaryMatrix::from_raw(u * v_t))
}
