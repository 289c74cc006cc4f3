//! Fourth-order finite differences on uniform grids.
//!
//! Central five-point stencils in the interior, one-sided stencils of the
//! same order on the two outermost nodes at each end. Grids with fewer than
//! six nodes fall back to second-order three-point formulas.

use crate::error::{Error, Result};
use crate::field::{Field, RealField, Sample};

/// Default relative floor for [`second_log_derivative`]: `|f| >= 1e-10 * max|f|`.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-10;

pub fn first_derivative<T: Sample>(f: &Field<T>) -> Field<T> {
    let v = f.values();
    let n = v.len();
    let h = f.grid().spacing();
    let mut out = vec![T::zero(); n];
    if n < 6 {
        let inv = 1.0 / (2.0 * h);
        out[0] = (v[0] * -3.0 + v[1] * 4.0 - v[2]) * inv;
        for i in 1..n - 1 {
            out[i] = (v[i + 1] - v[i - 1]) * inv;
        }
        out[n - 1] = (v[n - 1] * 3.0 - v[n - 2] * 4.0 + v[n - 3]) * inv;
        return Field::from_parts_unchecked(*f.grid(), out);
    }
    let inv = 1.0 / (12.0 * h);
    for i in 2..n - 2 {
        out[i] = (v[i - 2] - v[i - 1] * 8.0 + v[i + 1] * 8.0 - v[i + 2]) * inv;
    }
    out[0] = (v[0] * -25.0 + v[1] * 48.0 - v[2] * 36.0 + v[3] * 16.0 - v[4] * 3.0) * inv;
    out[1] = (v[0] * -3.0 - v[1] * 10.0 + v[2] * 18.0 - v[3] * 6.0 + v[4]) * inv;
    let m = n - 1;
    out[m] = (v[m] * 25.0 - v[m - 1] * 48.0 + v[m - 2] * 36.0 - v[m - 3] * 16.0 + v[m - 4] * 3.0)
        * inv;
    out[m - 1] =
        (v[m] * 3.0 + v[m - 1] * 10.0 - v[m - 2] * 18.0 + v[m - 3] * 6.0 - v[m - 4]) * inv;
    Field::from_parts_unchecked(*f.grid(), out)
}

pub fn second_derivative<T: Sample>(f: &Field<T>) -> Field<T> {
    let v = f.values();
    let n = v.len();
    let h = f.grid().spacing();
    let mut out = vec![T::zero(); n];
    if n < 6 {
        let inv = 1.0 / (h * h);
        for i in 1..n - 1 {
            out[i] = (v[i - 1] - v[i] * 2.0 + v[i + 1]) * inv;
        }
        out[0] = out[1];
        out[n - 1] = out[n - 2];
        return Field::from_parts_unchecked(*f.grid(), out);
    }
    let inv = 1.0 / (12.0 * h * h);
    for i in 2..n - 2 {
        out[i] = (-v[i - 2] + v[i - 1] * 16.0 - v[i] * 30.0 + v[i + 1] * 16.0 - v[i + 2]) * inv;
    }
    let edge0 = |a: T, b: T, c: T, d: T, e: T, g: T| {
        (a * 45.0 - b * 154.0 + c * 214.0 - d * 156.0 + e * 61.0 - g * 10.0) * inv
    };
    let edge1 = |a: T, b: T, c: T, d: T, e: T, g: T| {
        (a * 10.0 - b * 15.0 - c * 4.0 + d * 14.0 - e * 6.0 + g) * inv
    };
    out[0] = edge0(v[0], v[1], v[2], v[3], v[4], v[5]);
    out[1] = edge1(v[0], v[1], v[2], v[3], v[4], v[5]);
    let m = n - 1;
    out[m] = edge0(v[m], v[m - 1], v[m - 2], v[m - 3], v[m - 4], v[m - 5]);
    out[m - 1] = edge1(v[m], v[m - 1], v[m - 2], v[m - 3], v[m - 4], v[m - 5]);
    Field::from_parts_unchecked(*f.grid(), out)
}

/// `d²/dy² ln|f|` with the default floor.
pub fn second_log_derivative(f: &RealField) -> Result<RealField> {
    second_log_derivative_with_floor(f, DEFAULT_LOG_FLOOR)
}

/// `d²/dy² ln|f| = (f''f - f'²)/f²`.
///
/// `f` must be sign-definite with `|f| >= rel_floor * max|f|` at every node.
pub fn second_log_derivative_with_floor(f: &RealField, rel_floor: f64) -> Result<RealField> {
    ensure_sign_definite(f, rel_floor)?;
    let d1 = first_derivative(f);
    let d2 = second_derivative(f);
    let values = f
        .values()
        .iter()
        .zip(d1.values())
        .zip(d2.values())
        .map(|((&v, &p), &pp)| (pp * v - p * p) / (v * v))
        .collect();
    Ok(Field::from_parts_unchecked(*f.grid(), values))
}

/// Fails with [`Error::Singularity`] at the first node where `f` drops below
/// the floor or flips sign.
pub fn ensure_sign_definite(f: &RealField, rel_floor: f64) -> Result<()> {
    let grid = f.grid();
    let max = f.sup_norm();
    if max == 0.0 {
        return Err(Error::Singularity {
            node: 0,
            position: grid.node(0),
            reason: "function vanishes identically".into(),
        });
    }
    let floor = rel_floor * max;
    let sign = f.values()[0].signum();
    for (i, &v) in f.values().iter().enumerate() {
        if v.abs() < floor {
            return Err(Error::Singularity {
                node: i,
                position: grid.node(i),
                reason: format!("|f| = {:e} below floor {:e}", v.abs(), floor),
            });
        }
        if v.signum() != sign {
            return Err(Error::Singularity {
                node: i,
                position: grid.node(i),
                reason: "sign change".into(),
            });
        }
    }
    Ok(())
}

/// Sup-norm of `-psi'' + V psi - E psi` over the nodes that use central
/// stencils (the two outermost nodes at each end are skipped).
pub fn stationary_residual<T: Sample>(v: &RealField, psi: &Field<T>, energy: f64) -> Result<f64> {
    psi.ensure_same_grid(v.grid())?;
    let d2 = second_derivative(psi);
    let n = psi.len();
    let (lo, hi) = if n >= 6 { (2, n - 2) } else { (1, n - 1) };
    Ok((lo..hi)
        .map(|i| {
            let p = psi.values()[i];
            (-d2.values()[i] + p * (v.values()[i] - energy)).modulus()
        })
        .fold(0.0, f64::max))
}
