//! Spectral representation of fields and the exact differential operators
//! built on it.
//!
//! Derivatives use the derivative wavenumbers of [`Grid`] (Nyquist zeroed),
//! the Laplacian uses the true `|k|^2`. Pairs of real fields share one
//! complex transform wherever possible.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{Field, ScalarField, VectorField};
use crate::grid::Grid;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fourier coefficients of a real scalar field (unnormalized DFT).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    data: Vec<Complex64>,
}

/// Per-mode wavenumber data handed to spectral kernels.
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    /// Derivative wavenumbers (Nyquist components zeroed).
    pub kd: [f64; 3],
    /// True `|k|^2`, Nyquist included.
    pub ksq: f64,
    /// Whether the 2/3-rule (or configured) filter keeps this mode.
    pub kept: bool,
}

impl Mode {
    pub fn kd_sq(&self) -> f64 {
        self.kd[0] * self.kd[0] + self.kd[1] * self.kd[1] + self.kd[2] * self.kd[2]
    }
}

/// Calls `f(flat_index, mode)` for every Fourier mode of `grid`.
pub fn for_each_mode(grid: Grid, mut f: impl FnMut(usize, Mode)) {
    let n = grid.n();
    let kd = grid.derivative_wavenumbers();
    let k = grid.wavenumbers();
    let cut = grid.dealias_cutoff();
    let keep: Vec<bool> = (0..n).map(|i| grid.mode_index(i).abs() <= cut).collect();
    let mut idx = 0;
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                f(
                    idx,
                    Mode {
                        kd: [kd[ix], kd[iy], kd[iz]],
                        ksq: k[ix] * k[ix] + k[iy] * k[iy] + k[iz] * k[iz],
                        kept: keep[ix] && keep[iy] && keep[iz],
                    },
                );
                idx += 1;
            }
        }
    }
}

fn negated_index(grid: Grid, idx: usize) -> usize {
    let n = grid.n();
    let iz = idx % n;
    let iy = (idx / n) % n;
    let ix = idx / (n * n);
    grid.index((n - ix) % n, (n - iy) % n, (n - iz) % n)
}

impl Spectrum {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![ZERO; grid.len()],
        }
    }

    pub fn of(field: &ScalarField) -> Self {
        let mut data: Vec<Complex64> = field
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft::plan(field.grid().n()).forward(&mut data);
        Self {
            grid: field.grid(),
            data,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Back to physical space; the imaginary residue of a Hermitian
    /// spectrum is discarded.
    pub fn to_field(&self) -> ScalarField {
        let mut data = self.data.clone();
        fft::plan(self.grid.n()).inverse(&mut data);
        ScalarField::from_values(self.grid, data.iter().map(|c| c.re).collect())
            .expect("spectrum length matches grid")
    }

    /// Applies a per-mode multiplier.
    pub fn map_modes(&self, f: impl Fn(Mode, Complex64) -> Complex64) -> Self {
        let mut out = Self::zeros(self.grid);
        for_each_mode(self.grid, |i, m| out.data[i] = f(m, self.data[i]));
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|c| c * s).collect(),
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &Spectrum) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * alpha;
        }
    }

    pub fn derivative(&self, axis: usize) -> Self {
        self.map_modes(|m, c| I * m.kd[axis] * c)
    }

    pub fn laplacian(&self) -> Self {
        self.map_modes(|m, c| -m.ksq * c)
    }

    /// Zero-mean inverse of the derivative-consistent Laplacian.
    pub fn inverse_laplacian(&self) -> Self {
        self.map_modes(|m, c| {
            let k2 = m.kd_sq();
            if k2 > 0.0 {
                -c / k2
            } else {
                ZERO
            }
        })
    }

    pub fn dealiased(&self) -> Self {
        self.map_modes(|m, c| if m.kept { c } else { ZERO })
    }

    pub fn dealias_in_place(&mut self) {
        let data = &mut self.data;
        for_each_mode(self.grid, |i, m| {
            if !m.kept {
                data[i] = ZERO;
            }
        });
    }

    /// Sum over modes of `w(mode) |c|^2`, scaled so that `w == 1` gives
    /// `\int f^2 dx`.
    pub fn weighted_energy(&self, w: impl Fn(Mode) -> f64) -> f64 {
        let mut acc = 0.0;
        for_each_mode(self.grid, |i, m| acc += w(m) * self.data[i].norm_sqr());
        let n3 = self.grid.len() as f64;
        acc * self.grid.volume() / (n3 * n3)
    }
}

/// Forward transforms of many real fields, two per complex FFT.
pub fn forward_all(fields: &[&ScalarField]) -> Vec<Spectrum> {
    let mut out = Vec::with_capacity(fields.len());
    for chunk in fields.chunks(2) {
        match chunk {
            [a, b] => {
                let (sa, sb) = forward_pair(a, b);
                out.push(sa);
                out.push(sb);
            }
            [a] => out.push(Spectrum::of(a)),
            _ => unreachable!(),
        }
    }
    out
}

fn forward_pair(a: &ScalarField, b: &ScalarField) -> (Spectrum, Spectrum) {
    let grid = a.grid();
    let mut c: Vec<Complex64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| Complex64::new(x, y))
        .collect();
    fft::plan(grid.n()).forward(&mut c);
    let mut sa = Spectrum::zeros(grid);
    let mut sb = Spectrum::zeros(grid);
    for i in 0..c.len() {
        let conj_neg = c[negated_index(grid, i)].conj();
        sa.data[i] = (c[i] + conj_neg) * 0.5;
        sb.data[i] = (c[i] - conj_neg) * Complex64::new(0.0, -0.5);
    }
    (sa, sb)
}

/// Inverse transforms of many Hermitian spectra, two per complex FFT.
pub fn inverse_all(spectra: &[&Spectrum]) -> Vec<ScalarField> {
    let mut out = Vec::with_capacity(spectra.len());
    for chunk in spectra.chunks(2) {
        match chunk {
            [a, b] => {
                let grid = a.grid;
                let mut c: Vec<Complex64> = a
                    .data
                    .iter()
                    .zip(&b.data)
                    .map(|(x, y)| x + I * y)
                    .collect();
                fft::plan(grid.n()).inverse(&mut c);
                out.push(
                    ScalarField::from_values(grid, c.iter().map(|v| v.re).collect()).unwrap(),
                );
                out.push(
                    ScalarField::from_values(grid, c.iter().map(|v| v.im).collect()).unwrap(),
                );
            }
            [a] => out.push(a.to_field()),
            _ => unreachable!(),
        }
    }
    out
}

/// Spectra of the three components of a vector field.
pub fn vector_spectrum(v: &VectorField) -> [Spectrum; 3] {
    let [x, y, z] = v.components();
    let mut s = forward_all(&[x, y, z]).into_iter();
    [s.next().unwrap(), s.next().unwrap(), s.next().unwrap()]
}

pub(crate) fn vector_from_spectra(s: [&Spectrum; 3]) -> VectorField {
    let mut f = inverse_all(&s).into_iter();
    VectorField::from_components([f.next().unwrap(), f.next().unwrap(), f.next().unwrap()])
}

pub(crate) fn grad_spectra(s: &Spectrum) -> [Spectrum; 3] {
    [s.derivative(0), s.derivative(1), s.derivative(2)]
}

pub(crate) fn div_spectrum(v: &[Spectrum; 3]) -> Spectrum {
    let mut out = Spectrum::zeros(v[0].grid);
    for_each_mode(out.grid, |i, m| {
        out.data[i] = I * (m.kd[0] * v[0].data[i] + m.kd[1] * v[1].data[i] + m.kd[2] * v[2].data[i]);
    });
    out
}

pub(crate) fn curl_spectra(v: &[Spectrum; 3]) -> [Spectrum; 3] {
    let g = v[0].grid;
    let mut out = [Spectrum::zeros(g), Spectrum::zeros(g), Spectrum::zeros(g)];
    for_each_mode(g, |i, m| {
        let [kx, ky, kz] = m.kd;
        let (a, b, c) = (v[0].data[i], v[1].data[i], v[2].data[i]);
        out[0].data[i] = I * (ky * c - kz * b);
        out[1].data[i] = I * (kz * a - kx * c);
        out[2].data[i] = I * (kx * b - ky * a);
    });
    out
}

/// Removes the gradient part of a vector spectrum in place.
pub(crate) fn leray_spectra(v: &mut [Spectrum; 3]) {
    let g = v[0].grid;
    for_each_mode(g, |i, m| {
        let k2 = m.kd_sq();
        if k2 > 0.0 {
            let proj = (m.kd[0] * v[0].data[i] + m.kd[1] * v[1].data[i] + m.kd[2] * v[2].data[i]) / k2;
            for (a, s) in v.iter_mut().enumerate() {
                s.data[i] -= proj * m.kd[a];
            }
        }
    });
}

pub fn grad(f: &ScalarField) -> VectorField {
    let s = Spectrum::of(f);
    let [a, b, c] = grad_spectra(&s);
    vector_from_spectra([&a, &b, &c])
}

pub fn div(v: &VectorField) -> ScalarField {
    div_spectrum(&vector_spectrum(v)).to_field()
}

pub fn curl(v: &VectorField) -> VectorField {
    let [a, b, c] = curl_spectra(&vector_spectrum(v));
    vector_from_spectra([&a, &b, &c])
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    Spectrum::of(f).laplacian().to_field()
}

pub fn vector_laplacian(v: &VectorField) -> VectorField {
    let [a, b, c] = vector_spectrum(v);
    vector_from_spectra([&a.laplacian(), &b.laplacian(), &c.laplacian()])
}

/// Zero-mean solution of `Δφ = f`.
pub fn inverse_laplacian(f: &ScalarField) -> ScalarField {
    Spectrum::of(f).inverse_laplacian().to_field()
}

pub fn dealias_scalar(f: &ScalarField) -> ScalarField {
    Spectrum::of(f).dealiased().to_field()
}

pub fn dealias_vector(v: &VectorField) -> VectorField {
    let [a, b, c] = vector_spectrum(v);
    vector_from_spectra([&a.dealiased(), &b.dealiased(), &c.dealiased()])
}

/// Zeroes every mode with some `|m_i|` above the grid's dealias cutoff.
pub fn dealias(field: &Field) -> Field {
    match field {
        Field::Scalar(s) => Field::Scalar(dealias_scalar(s)),
        Field::Vector(v) => Field::Vector(dealias_vector(v)),
    }
}

/// `v - ∇Δ^{-1} div v`.
pub fn leray_project(v: &VectorField) -> VectorField {
    let mut s = vector_spectrum(v);
    leray_spectra(&mut s);
    vector_from_spectra([&s[0], &s[1], &s[2]])
}

/// Pointwise product followed by the dealias filter.
pub fn product_dealiased(a: &ScalarField, b: &ScalarField) -> ScalarField {
    dealias_scalar(&(a * b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOp {
    Grad,
    Div,
    Curl,
    Laplacian,
}

/// Exact spectral derivative of the trigonometric interpolant of `field`.
pub fn diff_op(kind: DiffOp, field: &Field) -> Result<Field> {
    if !field.is_finite() {
        return Err(Error::numerical(format!("{kind:?} input"), "non-finite value"));
    }
    match (kind, field) {
        (DiffOp::Grad, Field::Scalar(f)) => Ok(grad(f).into()),
        (DiffOp::Laplacian, Field::Scalar(f)) => Ok(laplacian(f).into()),
        (DiffOp::Div, Field::Vector(v)) => Ok(div(v).into()),
        (DiffOp::Curl, Field::Vector(v)) => Ok(curl(v).into()),
        (DiffOp::Laplacian, Field::Vector(v)) => Ok(vector_laplacian(v).into()),
        (kind, Field::Scalar(_)) => Err(Error::contract(format!(
            "{kind:?} needs a vector field, got a scalar"
        ))),
        (kind, Field::Vector(_)) => Err(Error::contract(format!(
            "{kind:?} needs a scalar field, got a vector"
        ))),
    }
}

/// Zero-mean random field whose modes satisfy `|m| <= band` (Euclidean
/// mode index), scaled to unit root-mean-square.
pub fn random_band_limited<R: Rng + ?Sized>(grid: Grid, band: f64, rng: &mut R) -> ScalarField {
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
    let noise = ScalarField::from_values(grid, noise).expect("length matches");
    let k0 = grid.k0();
    let band_sq = band * band;
    let filtered = Spectrum::of(&noise)
        .map_modes(|m, c| {
            let msq = m.ksq / (k0 * k0);
            if msq > 0.0 && msq <= band_sq + 1e-9 && m.kd_sq() == m.ksq {
                c
            } else {
                ZERO
            }
        })
        .to_field();
    let rms = (filtered.values().iter().map(|v| v * v).sum::<f64>() / grid.len() as f64).sqrt();
    if rms > 0.0 {
        filtered.map(|v| v / rms)
    } else {
        filtered
    }
}

pub fn random_band_limited_vector<R: Rng + ?Sized>(grid: Grid, band: f64, rng: &mut R) -> VectorField {
    VectorField::from_components([
        random_band_limited(grid, band, rng),
        random_band_limited(grid, band, rng),
        random_band_limited(grid, band, rng),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, 2.0 * PI).unwrap()
    }

    #[test]
    fn paired_transforms_match_single() {
        let g = grid(8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_band_limited(g, 3.0, &mut rng);
        let b = random_band_limited(g, 3.0, &mut rng);
        let pair = forward_all(&[&a, &b]);
        let (sa, sb) = (Spectrum::of(&a), Spectrum::of(&b));
        for i in 0..g.len() {
            assert!((pair[0].data[i] - sa.data[i]).norm() < 1e-10);
            assert!((pair[1].data[i] - sb.data[i]).norm() < 1e-10);
        }
        let back = inverse_all(&[&pair[0], &pair[1]]);
        for (x, y) in back[0].values().iter().zip(a.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in back[1].values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_of_sine() {
        let g = Grid::new(16, 3.0).unwrap();
        let k = 2.0 * PI / 3.0;
        let f = ScalarField::from_fn(g, |x, _, _| (k * x).sin());
        let df = grad(&f);
        let expect = ScalarField::from_fn(g, |x, _, _| k * (k * x).cos());
        assert!((df.x() - &expect).max_abs() < 1e-13);
        assert!(df.y().max_abs() < 1e-13 && df.z().max_abs() < 1e-13);
    }

    #[test]
    fn arity_mismatch_is_contract_error() {
        let g = grid(8);
        let s: Field = ScalarField::zeros(g).into();
        let v: Field = VectorField::zeros(g).into();
        assert!(matches!(diff_op(DiffOp::Div, &s), Err(Error::Contract(_))));
        assert!(matches!(diff_op(DiffOp::Curl, &s), Err(Error::Contract(_))));
        assert!(matches!(diff_op(DiffOp::Grad, &v), Err(Error::Contract(_))));
        assert!(diff_op(DiffOp::Laplacian, &v).is_ok());
    }

    #[test]
    fn non_finite_input_is_numerical_error() {
        let g = grid(8);
        let mut f = ScalarField::zeros(g);
        f.values_mut()[3] = f64::NAN;
        assert!(matches!(
            diff_op(DiffOp::Grad, &f.into()),
            Err(Error::Numerical { .. })
        ));
    }

    #[test]
    fn nyquist_mode_below_cutoff_is_removed() {
        // m = n/2 - 1 = 15 on n = 32 with cutoff 10.
        let g = grid(32);
        let f = ScalarField::from_fn(g, |x, _, _| (15.0 * x).cos());
        assert!(dealias_scalar(&f).max_abs() < 1e-14);
        let s = Spectrum::of(&f).dealiased();
        assert!(s.data().iter().all(|c| c.norm() < 1e-10));
    }

    #[test]
    fn low_modes_survive_dealiasing() {
        let g = grid(32);
        let f = ScalarField::from_fn(g, |x, y, z| (8.0 * x).sin() + (3.0 * y + 5.0 * z).cos());
        assert!((&dealias_scalar(&f) - &f).max_abs() < 1e-13);
    }

    #[test]
    fn leray_example_from_two_pieces() {
        let g = grid(16);
        let v = VectorField::from_fn(g, |x, y, _| [y.sin() - x.sin(), 0.0, 0.0]);
        let p = leray_project(&v);
        let expect = VectorField::from_fn(g, |_, y, _| [y.sin(), 0.0, 0.0]);
        assert!((&p - &expect).l2_norm() < 1e-12);
    }

    #[test]
    fn random_field_is_band_limited_and_normalized() {
        let g = grid(16);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_band_limited(g, 2.5, &mut rng);
        let rms = (f.values().iter().map(|v| v * v).sum::<f64>() / g.len() as f64).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
        assert!(f.mean().abs() < 1e-14);
        let s = Spectrum::of(&f);
        let leak = s.weighted_energy(|m| if m.ksq > 2.5f64.powi(2) + 1e-9 { 1.0 } else { 0.0 });
        assert!(leak < 1e-24);
    }
}
