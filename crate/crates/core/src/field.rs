//! Uniform 1D grids and the sampled fields that live on them.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// A uniform lattice `y_i = y_min + i*h`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    y_min: f64,
    y_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(y_min: f64, y_max: f64, n: usize) -> Result<Self> {
        if !(y_min.is_finite() && y_max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if y_min >= y_max {
            return Err(Error::InvalidGrid(format!(
                "y_min = {y_min} must be below y_max = {y_max}"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
        }
        Ok(Self { y_min, y_max, n })
    }

    /// Grid on `[y_min, y_max]` whose spacing is as close as possible to `h`
    /// (never coarser).
    pub fn with_spacing(y_min: f64, y_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        let intervals = ((y_max - y_min) / h - 1e-9).ceil().max(2.0) as usize;
        Self::new(y_min, y_max, intervals + 1)
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.y_max - self.y_min) / (self.n - 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.y_max
        } else {
            self.y_min + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.y_min && y <= self.y_max
    }

    /// Index of the closest node to `y` (clamped to the grid).
    pub fn nearest(&self, y: f64) -> usize {
        let s = ((y - self.y_min) / self.spacing()).round();
        s.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Sample an analytic function on the grid.
    pub fn sample<T: Sample>(&self, f: impl Fn(f64) -> T) -> Field<T> {
        Field {
            grid: *self,
            values: self.nodes().map(f).collect(),
        }
    }
}

/// Scalar types a [`Field`] can hold: `f64` and `Complex64`.
pub trait Sample:
    Copy
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Send
    + Sync
    + std::fmt::Debug
    + 'static
{
    fn modulus(self) -> f64;
    fn modulus_sq(self) -> f64;
    fn is_finite_sample(self) -> bool;
    fn from_real(x: f64) -> Self;
}

impl Sample for f64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn modulus_sq(self) -> f64 {
        self * self
    }
    fn is_finite_sample(self) -> bool {
        self.is_finite()
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Sample for Complex64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn modulus_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn is_finite_sample(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Samples of a function on a [`Grid`], one value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: Sample> Field<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite_sample()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<T>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise map that also sees the node position.
    pub fn map_with_y<U: Sample>(&self, f: impl Fn(f64, T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| f(self.grid.node(i), v))
                .collect(),
        }
    }

    pub fn zip_with<U: Sample, R: Sample>(
        &self,
        other: &Field<U>,
        f: impl Fn(T, U) -> R,
    ) -> Result<Field<R>> {
        self.ensure_same_grid(other.grid())?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(other.values())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// Sup-norm of `self - other`.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.ensure_same_grid(other.grid())?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).modulus())
            .fold(0.0, f64::max))
    }

    /// Sup-norm of `self - f(y)` restricted to `y` in `[lo, hi]`.
    pub fn sup_distance_to(&self, lo: f64, hi: f64, f: impl Fn(f64) -> T) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| {
                let y = self.grid.node(i);
                (y >= lo && y <= hi).then(|| (v - f(y)).modulus())
            })
            .fold(0.0, f64::max)
    }

    pub fn ensure_same_grid(&self, other: &Grid) -> Result<()> {
        if &self.grid == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

impl RealField {
    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

impl ComplexField {
    pub fn re(&self) -> RealField {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|v| v.im)
    }

    pub fn density(&self) -> RealField {
        self.map(|v| v.norm_sqr())
    }
}

/// A sampled state together with its first derivative.
///
/// Carrying the slope explicitly lets chained transformations avoid
/// re-differentiating already-transformed samples, which would amplify
/// roundoff at every level.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    pub value: Field<T>,
    pub slope: Field<T>,
}

impl<T: Sample> Jet<T> {
    pub fn new(value: Field<T>, slope: Field<T>) -> Result<Self> {
        value.ensure_same_grid(slope.grid())?;
        Ok(Self { value, slope })
    }

    /// Build a jet from a sampled value, differentiating numerically.
    pub fn from_samples(value: Field<T>) -> Self {
        let slope = crate::diff::first_derivative(&value);
        Self { value, slope }
    }

    /// Sample a function and its known derivative.
    pub fn sample(grid: &Grid, f: impl Fn(f64) -> T, df: impl Fn(f64) -> T) -> Self {
        Self {
            value: grid.sample(f),
            slope: grid.sample(df),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.value.grid()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: self.value.scale(c),
            slope: self.slope.scale(c),
        }
    }
}

impl Jet<f64> {
    pub fn to_complex(&self) -> Jet<Complex64> {
        Jet {
            value: self.value.to_complex(),
            slope: self.slope.to_complex(),
        }
    }
}

impl Jet<Complex64> {
    /// Real part, failing if the imaginary part is not negligible.
    pub fn to_real(&self, tol: f64) -> Result<Jet<f64>> {
        let scale = self.value.sup_norm().max(1.0);
        let worst = self
            .value
            .values()
            .iter()
            .chain(self.slope.values())
            .map(|v| v.im.abs())
            .fold(0.0, f64::max);
        if worst > tol * scale {
            return Err(Error::Domain(format!(
                "state is not real: max |Im| = {worst:e}"
            )));
        }
        Ok(Jet {
            value: self.value.re(),
            slope: self.slope.re(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_bounds() {
        assert!(Grid::new(1.0, 1.0, 10).is_err());
        assert!(Grid::new(2.0, 1.0, 10).is_err());
        assert!(Grid::new(0.0, 1.0, 2).is_err());
        assert!(Grid::new(0.0, f64::NAN, 10).is_err());
    }

    #[test]
    fn grid_nodes_are_uniform() {
        let g = Grid::new(-1.0, 3.0, 9).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.node(0), -1.0);
        assert_eq!(g.node(8), 3.0);
        assert_eq!(g.node(3), 0.5);
        assert_eq!(g.nearest(0.76), 4);
        assert_eq!(g.nearest(100.0), 8);
    }

    #[test]
    fn with_spacing_hits_requested_step() {
        let g = Grid::with_spacing(0.0, 40.0, 1e-3).unwrap();
        assert_eq!(g.len(), 40_001);
        assert!((g.spacing() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn field_validates_length_and_finiteness() {
        let g = Grid::new(0.0, 1.0, 3).unwrap();
        assert!(matches!(
            RealField::new(g, vec![0.0; 2]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            RealField::new(g, vec![0.0, f64::INFINITY, 1.0]),
            Err(Error::NonFinite { node: 1 })
        ));
    }

    #[test]
    fn complex_jet_to_real_checks_imaginary_part() {
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        let j = Jet::sample(&g, |y| Complex64::new(y, 0.0), |_| Complex64::new(1.0, 0.0));
        assert!(j.to_real(1e-12).is_ok());
        let bad = Jet::sample(&g, |y| Complex64::new(y, 0.1), |_| Complex64::new(1.0, 0.0));
        assert!(bad.to_real(1e-12).is_err());
    }
}
