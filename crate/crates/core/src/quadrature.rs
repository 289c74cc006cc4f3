//! Quadrature on uniform grids.

use crate::error::{Error, Result};
use crate::field::{Field, RealField, Sample};
use crate::interp;

/// Running integral `F(y) = ∫_{y0}^{y} f(z) dz`.
///
/// Each interval `[y_i, y_{i+1}]` is integrated with the cubic through the
/// four surrounding nodes, `h/24 (-f[i-1] + 13 f[i] + 13 f[i+1] - f[i+2])`,
/// with one-sided cubics on the end intervals. The rule is fourth order and,
/// unlike alternating cumulative Simpson, its error varies smoothly from node
/// to node, so `F` can be differentiated twice by finite differences without
/// picking up an odd/even zigzag. Exact for cubic `f`.
pub fn cumulative_integral(f: &RealField, y0: f64) -> Result<RealField> {
    let grid = *f.grid();
    if !grid.contains(y0) {
        return Err(Error::Domain(format!(
            "lower limit {y0} outside [{}, {}]",
            grid.y_min(),
            grid.y_max()
        )));
    }
    let mut running = running_from_start(f.values(), grid.spacing());
    let offset = integral_from_node(f, y0, &running);
    for v in &mut running {
        *v -= offset;
    }
    Ok(Field::from_parts_unchecked(grid, running))
}

fn running_from_start(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    if n == 3 {
        out[1] = h / 12.0 * (5.0 * v[0] + 8.0 * v[1] - v[2]);
        out[2] = out[1] + h / 12.0 * (-v[0] + 8.0 * v[1] + 5.0 * v[2]);
        return out;
    }
    let c = h / 24.0;
    for i in 0..n - 1 {
        let piece = if i == 0 {
            c * (9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3])
        } else if i == n - 2 {
            c * (9.0 * v[n - 1] + 19.0 * v[n - 2] - 5.0 * v[n - 3] + v[n - 4])
        } else {
            c * (-v[i - 1] + 13.0 * v[i] + 13.0 * v[i + 1] - v[i + 2])
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

/// `∫_{y_min}^{y0} f` using the running table plus the local interpolant on
/// the partial interval.
fn integral_from_node(f: &RealField, y0: f64, running: &[f64]) -> f64 {
    let grid = f.grid();
    let h = grid.spacing();
    let s = (y0 - grid.y_min()) / h;
    let j = (s.floor() as usize).min(grid.len() - 2);
    let a = grid.node(j);
    let width = y0 - a;
    if width.abs() < 1e-14 * h {
        return running[j];
    }
    // 3-point Gauss-Legendre on [a, y0], exact for the local cubic
    const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let mid = a + 0.5 * width;
    let partial: f64 = NODES
        .iter()
        .zip(WEIGHTS)
        .map(|(&x, w)| w * interp::lagrange4(f, mid + 0.5 * width * x))
        .sum();
    running[j] + 0.5 * width * partial
}

/// Composite Simpson over the whole grid; the 3/8 rule absorbs the last three
/// intervals when the interval count is odd.
pub fn integrate<T: Sample>(f: &Field<T>) -> T {
    simpson(f.values(), f.grid().spacing())
}

/// Composite Simpson over the nodes lying in `[lo, hi]`.
pub fn integrate_between<T: Sample>(f: &Field<T>, lo: f64, hi: f64) -> T {
    let g = f.grid();
    let h = g.spacing();
    let first = ((lo - g.y_min()) / h - 1e-9).ceil().max(0.0) as usize;
    let last = (((hi - g.y_min()) / h + 1e-9).floor() as usize).min(g.len() - 1);
    if last <= first {
        return T::zero();
    }
    simpson(&f.values()[first..=last], h)
}

fn simpson<T: Sample>(v: &[T], h: f64) -> T {
    let n = v.len();
    match n {
        0 | 1 => T::zero(),
        2 => (v[0] + v[1]) * (0.5 * h),
        _ => {
            let intervals = n - 1;
            let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };
            let mut acc = T::zero();
            if simpson_end >= 2 {
                let mut odd = T::zero();
                let mut even = T::zero();
                for i in 1..simpson_end {
                    if i % 2 == 1 {
                        odd = odd + v[i];
                    } else {
                        even = even + v[i];
                    }
                }
                acc = (v[0] + v[simpson_end] + odd * 4.0 + even * 2.0) * (h / 3.0);
            }
            if intervals % 2 == 1 {
                let k = simpson_end;
                acc = acc + (v[k] + v[k + 1] * 3.0 + v[k + 2] * 3.0 + v[k + 3]) * (3.0 * h / 8.0);
            }
            acc
        }
    }
}

/// `∫ |ψ|² dy` by composite Simpson.
pub fn l2_norm_sq<T: Sample>(psi: &Field<T>) -> f64 {
    let density = psi.map(|v| v.modulus_sq());
    integrate(&density)
}
