use super::{EpsState, PhysParams, Tendencies};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::spectral::{self, for_each_mode, forward_all, inverse_all, Spectrum};

/// Spectra of `(p, u, H, θ − θ̄)` or of a tendency with the same layout.
#[derive(Debug, Clone)]
pub(crate) struct StateSpectra {
    pub p: Spectrum,
    pub u: [Spectrum; 3],
    pub h: [Spectrum; 3],
    pub delta: Spectrum,
}

impl StateSpectra {
    pub fn of(state: &EpsState, theta_bar: f64) -> Self {
        let delta = state.theta.map(|t| t - theta_bar);
        let [ux, uy, uz] = state.u.components();
        let [hx, hy, hz] = state.h.components();
        Self::from_vec(forward_all(&[&state.p, ux, uy, uz, hx, hy, hz, &delta]))
    }

    fn from_vec(v: Vec<Spectrum>) -> Self {
        let mut it = v.into_iter();
        let mut next = || it.next().expect("eight spectra");
        Self {
            p: next(),
            u: [next(), next(), next()],
            h: [next(), next(), next()],
            delta: next(),
        }
    }

    pub fn parts(&self) -> [&Spectrum; 8] {
        [
            &self.p, &self.u[0], &self.u[1], &self.u[2], &self.h[0], &self.h[1], &self.h[2],
            &self.delta,
        ]
    }

    pub fn parts_mut(&mut self) -> [&mut Spectrum; 8] {
        let [u0, u1, u2] = &mut self.u;
        let [h0, h1, h2] = &mut self.h;
        [&mut self.p, u0, u1, u2, h0, h1, h2, &mut self.delta]
    }

    /// Physical fields in the order `p, u, H, θ − θ̄`.
    pub fn to_fields(&self) -> (ScalarField, VectorField, VectorField, ScalarField) {
        let mut f = inverse_all(&self.parts()).into_iter();
        let mut next = || f.next().expect("eight fields");
        let p = next();
        let u = VectorField::from_components([next(), next(), next()]);
        let h = VectorField::from_components([next(), next(), next()]);
        (p, u, h, next())
    }

    pub fn to_state(&self, theta_bar: f64, time: f64) -> EpsState {
        let (p, u, h, delta) = self.to_fields();
        EpsState {
            p,
            u,
            h,
            theta: delta.map(|d| d + theta_bar),
            time,
        }
    }
}

/// Tendencies of the scaled system, returned together with the spectra of
/// the state they were evaluated at. The tendency spectra are dealiased.
pub(crate) fn rhs_spectral(
    state: &EpsState,
    params: &PhysParams,
) -> Result<(StateSpectra, StateSpectra)> {
    state.check()?;
    let g = state.grid();
    let y = StateSpectra::of(state, params.theta_bar);
    let PhysParams {
        eps,
        mu,
        lambda,
        nu,
        kappa,
        ..
    } = *params;

    // Derivatives needed pointwise: ∇p, ∇δ, Δδ, ∇u, curl H and the
    // viscous operator μΔu + (μ+λ)∇div u.
    let mut deriv: Vec<Spectrum> = Vec::with_capacity(22);
    deriv.extend(spectral::grad_spectra(&y.p));
    deriv.extend(spectral::grad_spectra(&y.delta));
    deriv.push(y.delta.laplacian());
    for c in &y.u {
        deriv.extend(spectral::grad_spectra(c));
    }
    deriv.extend(spectral::curl_spectra(&y.h));
    let mut visc = [Spectrum::zeros(g), Spectrum::zeros(g), Spectrum::zeros(g)];
    for_each_mode(g, |i, m| {
        let kdu = m.kd[0] * y.u[0].data()[i] + m.kd[1] * y.u[1].data()[i] + m.kd[2] * y.u[2].data()[i];
        for (a, v) in visc.iter_mut().enumerate() {
            v.data_mut()[i] = -mu * m.ksq * y.u[a].data()[i] - (mu + lambda) * m.kd[a] * kdu;
        }
    });
    deriv.extend(visc);
    let refs: Vec<&Spectrum> = deriv.iter().collect();
    let d = inverse_all(&refs);
    let v = |j: usize, i: usize| d[j].values()[i];

    let len = g.len();
    let mut out: Vec<Vec<f64>> = (0..8).map(|_| vec![0.0; len]).collect();
    let (pv, th) = (state.p.values(), state.theta.values());
    let u = state.u.components().clone().map(|c| c.into_values());
    let h = state.h.components().clone().map(|c| c.into_values());
    for i in 0..len {
        let uu = [u[0][i], u[1][i], u[2][i]];
        let hh = [h[0][i], h[1][i], h[2][i]];
        let gp = [v(0, i), v(1, i), v(2, i)];
        let gt = [v(3, i), v(4, i), v(5, i)];
        let lt = v(6, i);
        let gu = |a: usize, b: usize| v(7 + 3 * a + b, i);
        let j = [v(16, i), v(17, i), v(18, i)];
        let vis = [v(19, i), v(20, i), v(21, i)];

        let a = (-eps * pv[i]).exp();
        let b = th[i].exp();
        let ab = (th[i] - eps * pv[i]).exp();
        let divu = gu(0, 0) + gu(1, 1) + gu(2, 2);
        let mut dd = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                let s = 0.5 * (gu(r, c) + gu(c, r));
                dd += s * s;
            }
        }
        let q = ab * (lt + dot(gt, gt));
        let heat = a * (nu * dot(j, j) + 2.0 * mu * dd + lambda * divu * divu);
        let lor = cross(j, hh);
        out[0][i] = -dot(uu, gp) - 2.0 / eps * divu + kappa / eps * q + eps * heat;
        for r in 0..3 {
            let adv = uu[0] * gu(r, 0) + uu[1] * gu(r, 1) + uu[2] * gu(r, 2);
            out[1 + r][i] = -adv - b / eps * gp[r] + ab * (lor[r] + vis[r]);
        }
        let uxh = cross(uu, hh);
        out[4..7].iter_mut().zip(uxh).for_each(|(o, x)| o[i] = x);
        out[7][i] = -dot(uu, gt) - divu + kappa * q + eps * eps * heat;
    }
    let names = ["p", "u", "u", "u", "H", "H", "H", "theta"];
    let fields: Vec<ScalarField> = out
        .into_iter()
        .zip(names)
        .map(|(vals, name)| {
            if vals.iter().all(|x| x.is_finite()) {
                Ok(ScalarField::from_values(g, vals).expect("grid length"))
            } else {
                Err(Error::numerical(
                    name,
                    "non-finite tendency (exp overflow or blow-up)",
                ))
            }
        })
        .collect::<Result<_>>()?;
    let frefs: Vec<&ScalarField> = fields.iter().collect();
    let mut f = StateSpectra::from_vec(forward_all(&frefs));
    // f.h currently holds u×H; the induction tendency is its curl plus ν ΔH.
    let mut dh = spectral::curl_spectra(&f.h);
    for (c, hc) in dh.iter_mut().zip(&y.h) {
        c.axpy(-1.0, &hc.map_modes(|m, x| m.ksq * nu * x));
    }
    f.h = dh;
    for s in f.parts_mut() {
        s.dealias_in_place();
    }
    Ok((y, f))
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Right-hand side of the scaled system: everything except `∂t`, with
/// nonlinear products dealiased.
pub fn rhs_full(state: &EpsState, params: &PhysParams) -> Result<Tendencies> {
    let (_, f) = rhs_spectral(state, params)?;
    let (dp, du, dh, dtheta) = f.to_fields();
    Ok(Tendencies {
        dp,
        du,
        dh,
        dtheta,
    })
}

/// `div(2u − κ e^{−εp+θ} ∇θ)`, the quantity that vanishes in the limit.
pub fn constraint_residual_field(state: &EpsState, params: &PhysParams) -> ScalarField {
    let delta = state.theta.map(|t| t - params.theta_bar);
    let sd = Spectrum::of(&delta);
    let gt = spectral::grad_spectra(&sd);
    let gt = spectral::vector_from_spectra([&gt[0], &gt[1], &gt[2]]);
    let coef = state
        .theta
        .zip_map(&state.p, |t, p| params.kappa * (t - params.eps * p).exp());
    let flux = state.u.zip_map(&gt.scale_by(&coef), |u, q| &(u * 2.0) - q);
    let mut fs = spectral::vector_spectrum(&flux);
    for c in fs.iter_mut() {
        c.dealias_in_place();
    }
    spectral::div_spectrum(&fs).to_field()
}
