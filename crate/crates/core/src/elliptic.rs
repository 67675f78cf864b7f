//! Preconditioned conjugate gradients for the variable-coefficient elliptic
//! problems of the limit and acoustic solvers. The preconditioner is always a
//! constant-coefficient operator inverted exactly in spectral space.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::spectral::{self, Spectrum};

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub solution: ScalarField,
    pub iterations: usize,
    /// Final residual norm relative to the right-hand side norm.
    pub relative_residual: f64,
}

/// Solves `A x = b` for symmetric positive (semi-)definite `A`.
///
/// Stops when `|r| <= tol |b|`; errors after `max_iter` iterations.
pub fn pcg(
    apply: impl Fn(&ScalarField) -> ScalarField,
    precondition: impl Fn(&ScalarField) -> ScalarField,
    b: &ScalarField,
    x0: Option<&ScalarField>,
    tol: f64,
    max_iter: usize,
) -> Result<PcgOutcome> {
    let b_norm = b.l2_norm();
    let mut x = x0.cloned().unwrap_or_else(|| ScalarField::zeros(b.grid()));
    if b_norm == 0.0 {
        return Ok(PcgOutcome {
            solution: ScalarField::zeros(b.grid()),
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = if x0.is_some() { b - &apply(&x) } else { b.clone() };
    let mut rel = r.l2_norm() / b_norm;
    if rel <= tol {
        return Ok(PcgOutcome {
            solution: x,
            iterations: 0,
            relative_residual: rel,
        });
    }
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = r.inner(&z);
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = p.inner(&ap);
        if !(pap > 0.0) {
            // Exhausted search directions; the residual cannot shrink further.
            if rel <= tol {
                return Ok(PcgOutcome {
                    solution: x,
                    iterations: it,
                    relative_residual: rel,
                });
            }
            return Err(Error::Convergence {
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        rel = r.l2_norm() / b_norm;
        if !rel.is_finite() {
            return Err(Error::numerical("pcg residual", "non-finite"));
        }
        if rel <= tol {
            return Ok(PcgOutcome {
                solution: x,
                iterations: it,
                relative_residual: rel,
            });
        }
        z = precondition(&r);
        let rz_new = r.inner(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = &z + &(&p * beta);
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual: rel,
    })
}

/// Zero-mean, dealiased solution of `div(c ∇φ) = f`.
///
/// The operator is restricted to the dealiased subspace, which keeps it
/// symmetric; `f` is projected onto that subspace first.
pub fn solve_variable_poisson(
    coef: &ScalarField,
    f: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<PcgOutcome> {
    let c_ref = coef.mean();
    if !(coef.min() > 0.0) {
        return Err(Error::contract("elliptic coefficient must be positive"));
    }
    // Work with A = -P div(c ∇ .), positive semi-definite.
    let apply = |phi: &ScalarField| -> ScalarField {
        let s = Spectrum::of(phi);
        let g = spectral::grad_spectra(&s);
        let grad_phi = spectral::vector_from_spectra([&g[0], &g[1], &g[2]]);
        let flux = grad_phi.scale_by(coef);
        let mut fs = spectral::vector_spectrum(&flux);
        for c in fs.iter_mut() {
            c.dealias_in_place();
        }
        spectral::div_spectrum(&fs).scaled(-1.0).to_field()
    };
    let precondition = |r: &ScalarField| -> ScalarField {
        Spectrum::of(r)
            .dealiased()
            .inverse_laplacian()
            .scaled(-1.0 / c_ref)
            .to_field()
    };
    let rhs = Spectrum::of(f).dealiased().map_modes(|m, c| {
        if m.kd_sq() > 0.0 {
            -c
        } else {
            rustfft::num_complex::Complex64::new(0.0, 0.0)
        }
    });
    let rhs = rhs.to_field();
    pcg(apply, precondition, &rhs, None, tol, max_iter)
}
