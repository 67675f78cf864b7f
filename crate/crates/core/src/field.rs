//! Real scalar and vector fields sampled on a periodic grid.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::contract(format!(
                "field needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y, z)` at every grid node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let xs = grid.coordinates();
        let mut values = Vec::with_capacity(grid.len());
        for &x in &xs {
            for &y in &xs {
                for &z in &xs {
                    values.push(f(x, y, z));
                }
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(self.grid.same_shape(&other.grid));
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `\int f dx` by the periodic trapezoid rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// `\int f g dx`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub(crate) fn check_finite(&self, name: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::numerical(name, "non-finite value"))
        }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|a| a * rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|a| -a)
    }
}

impl AddAssign<&ScalarField> for ScalarField {
    fn add_assign(&mut self, rhs: &ScalarField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&ScalarField> for ScalarField {
    fn sub_assign(&mut self, rhs: &ScalarField) {
        self.axpy(-1.0, rhs);
    }
}

/// Three scalar components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn new(components: [ScalarField; 3]) -> Result<Self> {
        let g = components[0].grid;
        if !components.iter().all(|c| c.grid.same_shape(&g)) {
            return Err(Error::contract("vector components live on different grids"));
        }
        Ok(Self { components })
    }

    pub(crate) fn from_components(components: [ScalarField; 3]) -> Self {
        Self { components }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            components: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        Self {
            components: [
                ScalarField::from_fn(grid, |x, y, z| f(x, y, z)[0]),
                ScalarField::from_fn(grid, |x, y, z| f(x, y, z)[1]),
                ScalarField::from_fn(grid, |x, y, z| f(x, y, z)[2]),
            ],
        }
    }

    pub fn grid(&self) -> Grid {
        self.components[0].grid
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField; 3] {
        &mut self.components
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    pub fn x(&self) -> &ScalarField {
        &self.components[0]
    }

    pub fn y(&self) -> &ScalarField {
        &self.components[1]
    }

    pub fn z(&self) -> &ScalarField {
        &self.components[2]
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Self {
            components: [
                f(&self.components[0]),
                f(&self.components[1]),
                f(&self.components[2]),
            ],
        }
    }

    pub fn zip_map(
        &self,
        other: &VectorField,
        f: impl Fn(&ScalarField, &ScalarField) -> ScalarField,
    ) -> Self {
        Self {
            components: [
                f(&self.components[0], &other.components[0]),
                f(&self.components[1], &other.components[1]),
                f(&self.components[2], &other.components[2]),
            ],
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &VectorField) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.axpy(alpha, b);
        }
    }

    /// Multiplies every component pointwise by `f`.
    pub fn scale_by(&self, f: &ScalarField) -> Self {
        self.map(|c| c * f)
    }

    /// Pointwise `a . b`.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let [ax, ay, az] = &self.components;
        let [bx, by, bz] = &other.components;
        let mut out = ax * bx;
        for ((o, (a, b)), (c, d)) in out
            .values
            .iter_mut()
            .zip(ay.values.iter().zip(&by.values))
            .zip(az.values.iter().zip(&bz.values))
        {
            *o += a * b + c * d;
        }
        out
    }

    /// Pointwise `a x b`.
    pub fn cross(&self, other: &VectorField) -> VectorField {
        let [ax, ay, az] = &self.components;
        let [bx, by, bz] = &other.components;
        let cx = ay.zip_map(bz, |a, b| a * b).zip_map(&az.zip_map(by, |a, b| a * b), |p, q| p - q);
        let cy = az.zip_map(bx, |a, b| a * b).zip_map(&ax.zip_map(bz, |a, b| a * b), |p, q| p - q);
        let cz = ax.zip_map(by, |a, b| a * b).zip_map(&ay.zip_map(bx, |a, b| a * b), |p, q| p - q);
        VectorField::from_components([cx, cy, cz])
    }

    /// Pointwise `|v|^2`.
    pub fn norm_sq(&self) -> ScalarField {
        self.dot(self)
    }

    /// Pointwise maximum of `|v|`.
    pub fn max_magnitude(&self) -> f64 {
        self.norm_sq().max().max(0.0).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.inner(c))
            .sum::<f64>()
            .sqrt()
    }

    pub fn inner(&self, other: &VectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    pub(crate) fn check_finite(&self, name: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::numerical(name, "non-finite value"))
        }
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, rhs: f64) -> VectorField {
        self.map(|c| c * rhs)
    }
}

/// Either arity, for operations that accept both.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl Field {
    pub fn grid(&self) -> Grid {
        match self {
            Field::Scalar(s) => s.grid(),
            Field::Vector(v) => v.grid(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        match self {
            Field::Scalar(s) => s.l2_norm(),
            Field::Vector(v) => v.l2_norm(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Field::Scalar(s) => s.is_finite(),
            Field::Vector(v) => v.is_finite(),
        }
    }

    pub fn as_scalar(&self) -> Option<&ScalarField> {
        match self {
            Field::Scalar(s) => Some(s),
            Field::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&VectorField> {
        match self {
            Field::Vector(v) => Some(v),
            Field::Scalar(_) => None,
        }
    }
}

impl From<ScalarField> for Field {
    fn from(s: ScalarField) -> Self {
        Field::Scalar(s)
    }
}

impl From<VectorField> for Field {
    fn from(v: VectorField) -> Self {
        Field::Vector(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_of_basis_vectors() {
        let g = Grid::new(8, 1.0).unwrap();
        let ex = VectorField::from_fn(g, |_, _, _| [1.0, 0.0, 0.0]);
        let ey = VectorField::from_fn(g, |_, _, _| [0.0, 1.0, 0.0]);
        let ez = ex.cross(&ey);
        assert!(ez.z().values().iter().all(|&v| v == 1.0));
        assert!(ez.x().max_abs() == 0.0 && ez.y().max_abs() == 0.0);
    }

    #[test]
    fn integral_of_constant_is_volume() {
        let g = Grid::new(8, 2.0).unwrap();
        let one = ScalarField::constant(g, 1.0);
        assert!((one.integral() - 8.0).abs() < 1e-12);
        assert!((one.l2_norm() - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn from_values_checks_length() {
        let g = Grid::new(8, 1.0).unwrap();
        assert!(ScalarField::from_values(g, vec![0.0; 10]).is_err());
    }
}
