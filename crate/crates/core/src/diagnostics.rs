//! Per-step measurements of a compressible run, one CSV row each.

use crate::field::{ScalarField, VectorField};
use crate::io::csv::fmt_f64;
use crate::mhd_eps::{constraint_residual_field, EpsState, PhysParams};
use crate::norms::{norm_parts, sobolev_norm, LocalMask};
use crate::spectral::curl;

pub const CSV_HEADER: [&str; 12] = [
    "t",
    "eps",
    "Hs_p",
    "Hs_u",
    "Hs_H",
    "Hs_theta_dev",
    "triple_norm",
    "divH_res",
    "constraint_res",
    "energy_total",
    "acoustic_L2_local",
    "curl_btu_Hsm1",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub eps: f64,
    pub hs_p: f64,
    pub hs_u: f64,
    pub hs_h: f64,
    pub hs_theta_dev: f64,
    /// Composite trajectory norm up to `t`.
    pub triple_norm: f64,
    /// `‖div H‖_{L²}`.
    pub div_h_res: f64,
    /// `‖div(2u − κ e^{−εp+θ}∇θ)‖_{L²}`.
    pub constraint_res: f64,
    /// Reconstructed total energy of the unscaled flow.
    pub energy_total: f64,
    /// `‖p‖_{L²(K)}`.
    pub acoustic_l2_local: f64,
    /// `‖curl(e^{−θ}u)‖_{H^{s−1}}`.
    pub curl_btu_hsm1: f64,
}

impl DiagnosticsRecord {
    pub fn row(&self) -> Vec<String> {
        [
            self.t,
            self.eps,
            self.hs_p,
            self.hs_u,
            self.hs_h,
            self.hs_theta_dev,
            self.triple_norm,
            self.div_h_res,
            self.constraint_res,
            self.energy_total,
            self.acoustic_l2_local,
            self.curl_btu_hsm1,
        ]
        .iter()
        .map(|&v| fmt_f64(v))
        .collect()
    }
}

/// `curl(e^{−θ}u)`, the incompressible component.
pub fn curl_btu(u: &VectorField, theta: &ScalarField) -> VectorField {
    curl(&u.scale_by(&theta.map(|t| (-t).exp())))
}

/// Measures `state`; `triple_norm` is passed in from the caller's
/// accumulator.
pub fn measure(
    state: &EpsState,
    params: &PhysParams,
    s: f64,
    mask: &LocalMask,
    triple_norm: f64,
) -> DiagnosticsRecord {
    let parts = norm_parts(state, params, s);
    DiagnosticsRecord {
        t: state.time,
        eps: params.eps,
        hs_p: parts.hs_p,
        hs_u: parts.hs_u,
        hs_h: parts.hs_h,
        hs_theta_dev: parts.hs_theta_dev,
        triple_norm,
        div_h_res: state.div_h_residual(),
        constraint_res: constraint_residual_field(state, params).l2_norm(),
        energy_total: state.reconstructed_energy(params.eps),
        acoustic_l2_local: mask.l2_sq(&state.p).sqrt(),
        curl_btu_hsm1: sobolev_norm(&curl_btu(&state.u, &state.theta), s - 1.0),
    }
}

pub fn csv_rows(records: &[DiagnosticsRecord]) -> Vec<Vec<String>> {
    records.iter().map(DiagnosticsRecord::row).collect()
}
