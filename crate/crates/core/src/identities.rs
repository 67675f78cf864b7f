//! Vector-calculus and energy-exchange identities checked on discrete
//! fields. Every product is dealiased; with inputs band-limited to `n/6`
//! both sides are exact trigonometric polynomials and residuals sit at
//! round-off.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{Field, ScalarField, VectorField};
use crate::grid::Grid;
use crate::spectral::{self, curl, dealias_scalar, dealias_vector, div, grad};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdentityName {
    /// `div(f a) = f div a + ∇f·a`
    DivFa,
    /// `curl(f a) = f curl a + ∇f×a`
    CurlFa,
    /// `div(a×b) = b·curl a − a·curl b`
    DivCross,
    /// `curl(a×b) = (b·∇)a − (a·∇)b + a div b − b div a`
    CurlCross,
    /// `∇(a·b) = (a·∇)b + (b·∇)a + a×curl b + b×curl a`
    GradDot,
    /// `div(H×curl H) = |curl H|² − curl(curl H)·H`
    EnergyExchange1,
    /// `div((u×H)×H) = (curl H)×H·u + curl(u×H)·H`
    EnergyExchange2,
}

impl IdentityName {
    pub const ALL: [IdentityName; 7] = [
        IdentityName::DivFa,
        IdentityName::CurlFa,
        IdentityName::DivCross,
        IdentityName::CurlCross,
        IdentityName::GradDot,
        IdentityName::EnergyExchange1,
        IdentityName::EnergyExchange2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityName::DivFa => "div_fa",
            IdentityName::CurlFa => "curl_fa",
            IdentityName::DivCross => "div_cross",
            IdentityName::CurlCross => "curl_cross",
            IdentityName::GradDot => "grad_dot",
            IdentityName::EnergyExchange1 => "energy_exchange_1",
            IdentityName::EnergyExchange2 => "energy_exchange_2",
        }
    }

    /// Names of the inputs the identity reads.
    pub fn inputs(&self) -> &'static [&'static str] {
        match self {
            IdentityName::DivFa | IdentityName::CurlFa => &["f", "a"],
            IdentityName::DivCross | IdentityName::CurlCross | IdentityName::GradDot => &["a", "b"],
            IdentityName::EnergyExchange1 => &["H"],
            IdentityName::EnergyExchange2 => &["u", "H"],
        }
    }
}

impl fmt::Display for IdentityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdentityName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        IdentityName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::contract(format!("unknown identity `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCase {
    pub name: IdentityName,
    /// `‖LHS − RHS‖_{L²}`.
    pub residual_norm: f64,
    /// Sum of the `L²` norms of the inputs.
    pub input_norm: f64,
    /// `residual_norm / max(1, input_norm)`.
    pub relative_residual: f64,
}

impl IdentityCase {
    pub fn passes(&self, threshold: f64) -> bool {
        self.relative_residual <= threshold
    }
}

fn scalar<'a>(fields: &'a HashMap<String, Field>, key: &str, name: IdentityName) -> Result<&'a ScalarField> {
    match fields.get(key) {
        Some(Field::Scalar(s)) => Ok(s),
        Some(Field::Vector(_)) => Err(Error::contract(format!(
            "{name}: input `{key}` must be a scalar field"
        ))),
        None => Err(Error::contract(format!("{name}: missing input `{key}`"))),
    }
}

fn vector<'a>(fields: &'a HashMap<String, Field>, key: &str, name: IdentityName) -> Result<&'a VectorField> {
    match fields.get(key) {
        Some(Field::Vector(v)) => Ok(v),
        Some(Field::Scalar(_)) => Err(Error::contract(format!(
            "{name}: input `{key}` must be a vector field"
        ))),
        None => Err(Error::contract(format!("{name}: missing input `{key}`"))),
    }
}

fn sprod(a: &ScalarField, b: &ScalarField) -> ScalarField {
    dealias_scalar(&(a * b))
}

fn scale(f: &ScalarField, a: &VectorField) -> VectorField {
    dealias_vector(&a.scale_by(f))
}

fn dot(a: &VectorField, b: &VectorField) -> ScalarField {
    dealias_scalar(&a.dot(b))
}

fn cross(a: &VectorField, b: &VectorField) -> VectorField {
    dealias_vector(&a.cross(b))
}

/// `(a·∇) b`, dealiased.
fn advect(a: &VectorField, b: &VectorField) -> VectorField {
    let comps = b.components().clone().map(|c| dot(a, &grad(&c)));
    VectorField::new(comps).expect("same grid")
}

fn vsum(parts: &[(&VectorField, f64)]) -> VectorField {
    let mut out = VectorField::zeros(parts[0].0.grid());
    for (v, w) in parts {
        out.axpy(*w, v);
    }
    out
}

/// Evaluates one identity on the given inputs.
pub fn check_identity(name: IdentityName, fields: &HashMap<String, Field>) -> Result<IdentityCase> {
    let mut input_norm = 0.0;
    for key in name.inputs() {
        let f = fields
            .get(*key)
            .ok_or_else(|| Error::contract(format!("{name}: missing input `{key}`")))?;
        if !f.is_finite() {
            return Err(Error::numerical(*key, "non-finite input"));
        }
        input_norm += f.l2_norm();
    }
    let residual_norm = match name {
        IdentityName::DivFa => {
            let f = scalar(fields, "f", name)?;
            let a = vector(fields, "a", name)?;
            let lhs = div(&scale(f, a));
            let rhs = &sprod(f, &div(a)) + &dot(&grad(f), a);
            (&lhs - &rhs).l2_norm()
        }
        IdentityName::CurlFa => {
            let f = scalar(fields, "f", name)?;
            let a = vector(fields, "a", name)?;
            let lhs = curl(&scale(f, a));
            let rhs = &scale(f, &curl(a)) + &cross(&grad(f), a);
            (&lhs - &rhs).l2_norm()
        }
        IdentityName::DivCross => {
            let a = vector(fields, "a", name)?;
            let b = vector(fields, "b", name)?;
            let lhs = div(&cross(a, b));
            let rhs = &dot(b, &curl(a)) - &dot(a, &curl(b));
            (&lhs - &rhs).l2_norm()
        }
        IdentityName::CurlCross => {
            let a = vector(fields, "a", name)?;
            let b = vector(fields, "b", name)?;
            let lhs = curl(&cross(a, b));
            let rhs = vsum(&[
                (&advect(b, a), 1.0),
                (&advect(a, b), -1.0),
                (&scale(&div(b), a), 1.0),
                (&scale(&div(a), b), -1.0),
            ]);
            (&lhs - &rhs).l2_norm()
        }
        IdentityName::GradDot => {
            let a = vector(fields, "a", name)?;
            let b = vector(fields, "b", name)?;
            let lhs = grad(&dot(a, b));
            let rhs = vsum(&[
                (&advect(a, b), 1.0),
                (&advect(b, a), 1.0),
                (&cross(a, &curl(b)), 1.0),
                (&cross(b, &curl(a)), 1.0),
            ]);
            (&lhs - &rhs).l2_norm()
        }
        IdentityName::EnergyExchange1 => {
            let h = vector(fields, "H", name)?;
            let j = curl(h);
            let lhs = div(&cross(h, &j));
            let rhs = &dot(&j, &j) - &dot(&curl(&j), h);
            (&lhs - &rhs).l2_norm()
        }
        IdentityName::EnergyExchange2 => {
            let u = vector(fields, "u", name)?;
            let h = vector(fields, "H", name)?;
            let uxh = cross(u, h);
            let lhs = div(&cross(&uxh, h));
            let rhs = &dot(&cross(&curl(h), h), u) + &dot(&curl(&uxh), h);
            (&lhs - &rhs).l2_norm()
        }
    };
    Ok(IdentityCase {
        name,
        residual_norm,
        input_norm,
        relative_residual: residual_norm / input_norm.max(1.0),
    })
}

/// Random inputs `f, a, b, u, H` band-limited to `band`.
pub fn random_inputs<R: Rng + ?Sized>(grid: Grid, band: f64, rng: &mut R) -> HashMap<String, Field> {
    let mut m = HashMap::new();
    m.insert("f".to_string(), spectral::random_band_limited(grid, band, rng).into());
    for key in ["a", "b", "u", "H"] {
        m.insert(
            key.to_string(),
            spectral::random_band_limited_vector(grid, band, rng).into(),
        );
    }
    m
}

/// Worst case of every identity over `samples` random input sets at band
/// `n/6`.
pub fn run_suite(grid: Grid, samples: usize, seed: u64) -> Result<Vec<IdentityCase>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let band = (grid.n() / 6) as f64;
    let mut worst: Vec<Option<IdentityCase>> = vec![None; IdentityName::ALL.len()];
    for _ in 0..samples {
        let inputs = random_inputs(grid, band, &mut rng);
        for (slot, name) in worst.iter_mut().zip(IdentityName::ALL) {
            let case = check_identity(name, &inputs)?;
            if slot
                .as_ref()
                .is_none_or(|w| case.relative_residual > w.relative_residual)
            {
                *slot = Some(case);
            }
        }
    }
    Ok(worst.into_iter().flatten().collect())
}
