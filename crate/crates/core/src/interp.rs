//! Local interpolation of sampled fields at off-grid points.

use crate::field::{Field, Jet, Sample};

/// Four-point Lagrange (cubic) interpolation. Points outside the grid are
/// extrapolated from the end stencil.
pub fn lagrange4<T: Sample>(f: &Field<T>, y: f64) -> T {
    let g = f.grid();
    let v = f.values();
    let n = v.len();
    let h = g.spacing();
    let s = (y - g.y_min()) / h;
    if n < 4 {
        // quadratic through all three nodes
        let t = s;
        let l0 = (t - 1.0) * (t - 2.0) / 2.0;
        let l1 = -t * (t - 2.0);
        let l2 = t * (t - 1.0) / 2.0;
        return v[0] * l0 + v[1] * l1 + v[2] * l2;
    }
    let j = (s.floor() as isize).clamp(0, n as isize - 2) as usize;
    let start = j.saturating_sub(1).min(n - 4);
    let t = s - start as f64;
    let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    v[start] * l0 + v[start + 1] * l1 + v[start + 2] * l2 + v[start + 3] * l3
}

/// Cubic Hermite interpolation from values and slopes; returns `(value, slope)`.
pub fn hermite<T: Sample>(jet: &Jet<T>, y: f64) -> (T, T) {
    let g = jet.grid();
    let n = g.len();
    let h = g.spacing();
    let s = (y - g.y_min()) / h;
    let j = (s.floor() as isize).clamp(0, n as isize - 2) as usize;
    let t = s - j as f64;
    let (p0, p1) = (jet.value.values()[j], jet.value.values()[j + 1]);
    let (m0, m1) = (jet.slope.values()[j] * h, jet.slope.values()[j + 1] * h);
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11;
    let d00 = 6.0 * t2 - 6.0 * t;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d01 = -6.0 * t2 + 6.0 * t;
    let d11 = 3.0 * t2 - 2.0 * t;
    let slope = (p0 * d00 + m0 * d10 + p1 * d01 + m1 * d11) / h;
    (value, slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    #[test]
    fn lagrange_reproduces_cubics() {
        let g = Grid::new(-1.0, 1.0, 9).unwrap();
        let p = |y: f64| 2.0 * y.powi(3) - y + 0.5;
        let f = g.sample(p);
        for &y in &[-1.0, -0.99, -0.3, 0.0, 0.41, 0.99, 1.0] {
            assert!((lagrange4(&f, y) - p(y)).abs() < 1e-13, "y={y}");
        }
    }

    #[test]
    fn hermite_reproduces_cubics_and_slopes() {
        let g = Grid::new(0.0, 2.0, 5).unwrap();
        let jet = Jet::sample(&g, |y: f64| y.powi(3) - y, |y: f64| 3.0 * y * y - 1.0);
        for &y in &[0.0, 0.3, 1.11, 1.999, 2.0] {
            let (v, d) = hermite(&jet, y);
            assert!((v - (y.powi(3) - y)).abs() < 1e-13);
            assert!((d - (3.0 * y * y - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn hermite_is_fourth_order_on_smooth_data() {
        let err = |n: usize| {
            let g = Grid::new(0.0, 3.0, n).unwrap();
            let jet = Jet::sample(&g, f64::sin, f64::cos);
            (0..200)
                .map(|i| {
                    let y = 0.013 + i as f64 * 0.0147;
                    (hermite(&jet, y).0 - y.sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        assert!(err(31) / err(61) > 12.0);
    }
}
