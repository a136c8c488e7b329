//! Closed-form results for infinitely thin, semi-infinite electrodes.
//!
//! Each left/right electrode pair is a semi-infinite parallel-plate
//! capacitor mapped onto a strip by `ζ = z + e^z`; the two pair solutions are
//! superposed. Points are given in the w-plane, `w = u + i v` in µm, with the
//! tips at u = ±a/2 and the layers at v = ±d/2. The sign convention puts
//! +V₀/2 on the upper-left and lower-right electrodes.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::lambert::{lambert_w_exp, select_branch, LambertError};
use crate::model::constants::BOLTZMANN;
use crate::model::{DriveConfig, IonSpecies, TrapGeometry};
use crate::multipole::REFERENCE_RF_MHZ;
use crate::trapchar::pseudopotential;

/// Below this α the closed forms are reported but flagged as outside their
/// asymptotic range.
pub const ASYMPTOTIC_ALPHA: f64 = 10.0;
/// Smallest α accepted by the potential and profile routines.
pub const MIN_ALPHA: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("point ({u} µm, {v} µm) lies on an electrode")]
    OnElectrode { u: f64, v: f64 },
    #[error("α = {alpha} is outside the range of the conformal solution (needs α ≥ {min})")]
    AlphaOutOfRange { alpha: f64, min: f64 },
    #[error("conformal map: {0}")]
    Lambert(#[from] LambertError),
}

/// A point in the w-plane (µm) or the mapped z-plane (dimensionless).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPoint {
    pub re: f64,
    pub im: f64,
}

impl ComplexPoint {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
}

impl From<ComplexPoint> for C64 {
    fn from(p: ComplexPoint) -> Self {
        C64::new(p.re, p.im)
    }
}

fn check_alpha(alpha: f64, min: f64) -> Result<(), AnalyticError> {
    if !(alpha >= min) {
        return Err(AnalyticError::AlphaOutOfRange { alpha, min });
    }
    if alpha < ASYMPTOTIC_ALPHA {
        log::warn!("α = {alpha} is below {ASYMPTOTIC_ALPHA}; the thin-electrode closed forms are only asymptotic");
    }
    Ok(())
}

/// Inverts ζ = z + e^z onto the strip −π < Im z ≤ π.
pub fn strip_preimage(zeta: C64) -> Result<C64, LambertError> {
    // With this branch y + Log y = ζ, so z = ζ − y = Log y; the log form
    // avoids cancellation when |ζ| is large.
    let y = lambert_w_exp(select_branch(zeta), zeta)?;
    Ok(y.ln())
}

/// Potential (V) at `w` for RF amplitude `v0`.
pub fn analytic_potential(w: ComplexPoint, geom: &TrapGeometry, v0: f64) -> Result<f64, AnalyticError> {
    check_alpha(geom.alpha(), MIN_ALPHA)?;
    let g = geom.um();
    let (a, d) = (g.a, g.d);
    let on_plate = |u_rel: f64| {
        let tol = 1e-12 * d;
        u_rel <= tol && ((w.im.abs() - d / 2.0).abs() <= tol)
    };
    if on_plate(w.re + a / 2.0) || on_plate(a / 2.0 - w.re) {
        return Err(AnalyticError::OnElectrode { u: w.re, v: w.im });
    }
    let wc = C64::from(w);
    let offset = C64::new(a * PI / d - 1.0, 0.0);
    let zeta_plus = wc * (2.0 * PI / d) + offset;
    let zeta_minus = -wc * (2.0 * PI / d) + offset;
    let zp = strip_preimage(zeta_plus)?;
    let zm = strip_preimage(zeta_minus)?;
    Ok(v0 / (2.0 * PI) * (zp.im + zm.im))
}

/// π(α²+1)/(απ−1)².
pub fn analytic_eta(alpha: f64) -> f64 {
    let den = alpha * PI - 1.0;
    PI * (alpha * alpha + 1.0) / (den * den)
}

/// (a/2)(1 − 1/(πα)) in µm.
pub fn analytic_rmax(geom: &TrapGeometry) -> f64 {
    geom.um().a / 2.0 * (1.0 - 1.0 / (PI * geom.alpha()))
}

/// Effective arctangent offset a − d/π (µm).
fn arctan_offset(geom: &TrapGeometry) -> f64 {
    let g = geom.um();
    g.a - g.d / PI
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticDepth {
    /// ψ(r_max)/k_B for the given ion and drive (K).
    pub depth_k: f64,
    /// depth·a²/V₀² for the given ion and drive (K µm²/V²).
    pub scaled_depth: f64,
    /// Same for singly charged 111Cd at 50 MHz.
    pub scaled_depth_reference: f64,
    pub r_max_um: f64,
    pub asymptotic_valid: bool,
}

/// Barrier height at r_max from the closed form.
pub fn analytic_depth(geom: &TrapGeometry, drive: &DriveConfig, ion: &IonSpecies) -> AnalyticDepth {
    // |∇Φ| peaks at V₀/(πA) with A = a − d/π, in V/µm.
    let grad = drive.v0 / (PI * arctan_offset(geom));
    let grad_sq_si = grad * grad * 1e12;
    let depth_k = pseudopotential(grad_sq_si, drive, ion) / BOLTZMANN;
    let reference = DriveConfig::new(drive.v0, REFERENCE_RF_MHZ, 0.0).expect("valid reference drive");
    let reference_k = pseudopotential(grad_sq_si, &reference, &IonSpecies::cd111()) / BOLTZMANN;
    let a = geom.um().a;
    let scale = a * a / (drive.v0 * drive.v0);
    AnalyticDepth {
        depth_k,
        scaled_depth: depth_k * scale,
        scaled_depth_reference: reference_k * scale,
        r_max_um: analytic_rmax(geom),
        asymptotic_valid: geom.alpha() >= ASYMPTOTIC_ALPHA,
    }
}

/// Scaled depth for 111Cd at 50 MHz in the α → ∞ limit (K µm²/V²).
pub fn asymptotic_scaled_depth() -> f64 {
    let drive = DriveConfig::new(1.0, REFERENCE_RF_MHZ, 0.0).expect("valid reference drive");
    // a = 1 µm, A → a: |∇Φ| = V₀/(π·1 µm).
    let grad_sq_si = (1.0 / PI).powi(2) * 1e12;
    pseudopotential(grad_sq_si, &drive, &IonSpecies::cd111()) / BOLTZMANN
}

/// Gradient (V/µm) of the arctangent form of the potential.
pub fn arctan_gradient(u: f64, v: f64, geom: &TrapGeometry, v0: f64) -> (f64, f64) {
    let a_off = arctan_offset(geom);
    let p = 2.0 * u + a_off;
    let m = a_off - 2.0 * u;
    let dp = p * p + 4.0 * v * v;
    let dm = m * m + 4.0 * v * v;
    let k = v0 / (2.0 * PI);
    let du = k * (-4.0 * v / dp - 4.0 * v / dm);
    let dv = k * (2.0 * p / dp - 2.0 * m / dm);
    (du, dv)
}

/// Arctangent form of the potential near the trap centre (V).
pub fn arctan_potential(u: f64, v: f64, geom: &TrapGeometry, v0: f64) -> f64 {
    let a_off = arctan_offset(geom);
    v0 / (2.0 * PI) * ((2.0 * v).atan2(2.0 * u + a_off) + (-2.0 * v).atan2(a_off - 2.0 * u))
}

/// ψ along the v-axis, as (v µm, ψ K) samples.
pub fn analytic_pseudopotential_profile(
    v: &[f64],
    geom: &TrapGeometry,
    drive: &DriveConfig,
    ion: &IonSpecies,
) -> Result<Vec<(f64, f64)>, AnalyticError> {
    check_alpha(geom.alpha(), MIN_ALPHA)?;
    Ok(v.iter()
        .map(|&vi| {
            let (du, dv) = arctan_gradient(0.0, vi, geom, drive.v0);
            let grad_sq_si = (du * du + dv * dv) * 1e12;
            (vi, pseudopotential(grad_sq_si, drive, ion) / BOLTZMANN)
        })
        .collect())
}

/// `alpha,eta_analytic` rows.
pub fn eta_overlay_csv(alphas: &[f64]) -> String {
    let mut out = String::from("alpha,eta_analytic\n");
    for &a in alphas {
        out.push_str(&crate::csvfmt::row(&[a, analytic_eta(a)]));
        out.push('\n');
    }
    out
}

/// `v_um,psi_K` rows.
pub fn profile_csv(samples: &[(f64, f64)]) -> String {
    let mut out = String::from("v_um,psi_K\n");
    for &(v, psi) in samples {
        out.push_str(&crate::csvfmt::row(&[v, psi]));
        out.push('\n');
    }
    out
}
