//! Cylindrical harmonic decomposition of the transverse RF potential.
//!
//! V(r, θ′) = V₀ [Σ C_m (r/r₀)^m cos mθ′ + Σ S_n (r/r₀)^n sin nθ′], with θ′
//! measured from the diagonal x′ axis at +45° to the electrode layers.
//! Coefficients are disc projections evaluated on a tensor grid of 256
//! uniform angles and 128 Gauss–Legendre radii.

use std::f64::consts::{FRAC_PI_4, PI};

use thiserror::Error;

use crate::fit::gauss_legendre;
use crate::laplace2d::{FieldError, ScalarField2D};
use crate::model::{constants::BOLTZMANN, DriveConfig, IonSpecies, TrapGeometry};
use crate::trapchar::pseudopotential;

pub const ANGULAR_POINTS: usize = 256;
pub const RADIAL_POINTS: usize = 128;
pub const DEFAULT_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MultipoleError {
    #[error("reference radius {r0_um} µm reaches an electrode or the box (nearest at {nearest_um} µm)")]
    RadiusTouchesElectrode { r0_um: f64, nearest_um: f64 },
    #[error("reference radius and drive amplitude must be positive (r0 = {r0_um}, V0 = {v0})")]
    InvalidInput { r0_um: f64, v0: f64 },
    #[error("pseudopotential maximum lies on the grid edge at y = {y_um} µm; enlarge the box")]
    MaxOnBoundary { y_um: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipoleExpansion {
    /// Reference radius (µm).
    pub r0: f64,
    /// Normalising amplitude (V).
    pub v0: f64,
    /// `c[m]` for m = 0..=M; `c[0]` is the disc mean over V₀.
    pub c: Vec<f64>,
    /// `s[n]` for n = 0..=M; `s[0]` is always zero.
    pub s: Vec<f64>,
}

impl MultipoleExpansion {
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// Sum of V₀²·|coefficient|²·‖basis‖² over the retained terms, divided by
    /// the disc area: the mean square of the projected field.
    pub fn projected_mean_square(&self) -> f64 {
        let mut s = self.c[0] * self.c[0];
        for m in 1..=self.order() {
            let norm = 1.0 / (2.0 * (m as f64 + 1.0));
            s += (self.c[m] * self.c[m] + self.s[m] * self.s[m]) * norm;
        }
        s * self.v0 * self.v0
    }
}

/// Projection of an arbitrary potential function `f(x, y)` (µm → V).
pub fn expand_fn<F: Fn(f64, f64) -> f64>(f: F, v0: f64, r0: f64, order: usize) -> MultipoleExpansion {
    let (gx, gw) = gauss_legendre(RADIAL_POINTS);
    let mut c = vec![0.0; order + 1];
    let mut s = vec![0.0; order + 1];
    let dtheta = 2.0 * PI / ANGULAR_POINTS as f64;
    let mut powers = vec![0.0; order + 1];
    for (xi, wi) in gx.iter().zip(&gw) {
        let rho = 0.5 * (xi + 1.0);
        let r = rho * r0;
        // ∫₀^{r0} g r dr = r0² ∫₋₁¹ g ρ/2 dξ with ρ = (ξ + 1)/2.
        let radial_w = wi * 0.5 * rho;
        powers[0] = 1.0;
        for m in 1..=order {
            powers[m] = powers[m - 1] * rho;
        }
        for k in 0..ANGULAR_POINTS {
            let tp = k as f64 * dtheta;
            let phi = tp + FRAC_PI_4;
            let v = f(r * phi.cos(), r * phi.sin());
            let w = radial_w * dtheta * v;
            c[0] += w;
            for m in 1..=order {
                let (sn, cs) = (m as f64 * tp).sin_cos();
                c[m] += w * powers[m] * cs;
                s[m] += w * powers[m] * sn;
            }
        }
    }
    // Disc integrals carry r0²; projection divides by the basis norm
    // π r0²/(2(m+1)) (π r0² for m = 0), so r0² cancels.
    c[0] /= PI * v0;
    for m in 1..=order {
        let k = 2.0 * (m as f64 + 1.0) / (PI * v0);
        c[m] *= k;
        s[m] *= k;
    }
    MultipoleExpansion { r0, v0, c, s }
}

/// Expansion of a solved field; `r0` must stay inside the vacuum region.
pub fn expand(field: &ScalarField2D, v0: f64, r0: f64, order: usize) -> Result<MultipoleExpansion, MultipoleError> {
    if !(r0 > 0.0 && v0 > 0.0) {
        return Err(MultipoleError::InvalidInput { r0_um: r0, v0 });
    }
    let nearest = field.nearest_fixed_distance();
    if r0 >= nearest {
        return Err(MultipoleError::RadiusTouchesElectrode { r0_um: r0, nearest_um: nearest });
    }
    Ok(expand_fn(|x, y| field.sample(x, y).unwrap_or(0.0), v0, r0, order))
}

/// η = 2 C₂ ℓ_eff² / r₀².
pub fn eta(exp: &MultipoleExpansion, geom: &TrapGeometry) -> f64 {
    let l = geom.l_eff() * 1e6;
    2.0 * exp.c[2] * l * l / (exp.r0 * exp.r0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusChoice {
    /// r₀ = a/8.
    EighthOfTip,
    /// r₀ at the pseudopotential maximum along y (capped at a/2).
    Rmax,
    /// Explicit radius in µm.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnharmonicityReport {
    pub r0: f64,
    pub c2: f64,
    pub ratio_s4: f64,
    pub ratio_c6: f64,
    pub ratio_s8: f64,
    pub ratio_c10: f64,
    pub ratio_s12: f64,
    pub expansion: MultipoleExpansion,
}

fn report_from(exp: MultipoleExpansion) -> AnharmonicityReport {
    let c2 = exp.c[2];
    let at = |v: &Vec<f64>, k: usize| v.get(k).copied().unwrap_or(0.0) / c2;
    AnharmonicityReport {
        r0: exp.r0,
        c2,
        ratio_s4: at(&exp.s, 4),
        ratio_c6: at(&exp.c, 6),
        ratio_s8: at(&exp.s, 8),
        ratio_c10: at(&exp.c, 10),
        ratio_s12: at(&exp.s, 12),
        expansion: exp,
    }
}

/// Higher-order to quadrupole ratios at the requested radius.
///
/// At r_max the disc reaches the cantilever tips, so the radius is clipped
/// to just inside the nearest electrode node.
pub fn anharmonicity_report(
    field: &ScalarField2D,
    geom: &TrapGeometry,
    v0: f64,
    choice: RadiusChoice,
) -> Result<AnharmonicityReport, MultipoleError> {
    let r0 = match choice {
        RadiusChoice::EighthOfTip => geom.um().a / 8.0,
        RadiusChoice::Fixed(r) => r,
        RadiusChoice::Rmax => {
            let rmax = rmax_scan(field, geom)?.r_max;
            let limit = field.nearest_fixed_distance() * (1.0 - 1e-6);
            rmax.min(limit)
        }
    };
    Ok(report_from(expand(field, v0, r0, DEFAULT_ORDER)?))
}

/// Ratios over a sequence of radii (Fig. 8 style curve).
pub fn anharmonicity_curve(field: &ScalarField2D, v0: f64, radii: &[f64]) -> Result<Vec<AnharmonicityReport>, MultipoleError> {
    radii
        .iter()
        .map(|&r| expand(field, v0, r, DEFAULT_ORDER).map(report_from))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RmaxScan {
    /// Refined position of the |∇V|² maximum along +y (µm).
    argmax: f64,
    /// |∇V|² at that position (V²/µm²).
    peak: f64,
    r_max: f64,
}

fn rmax_scan(field: &ScalarField2D, geom: &TrapGeometry) -> Result<RmaxScan, MultipoleError> {
    let grad = field.gradient_field();
    let (ci, cj) = field.center_node();
    let mut samples = Vec::new();
    for j in cj..field.ny {
        match grad.magnitude_sq(ci, j) {
            Some(g) if field.kind(ci, j).is_vacuum() => samples.push(g),
            _ => break,
        }
    }
    let ys = &field.ys[cj..];
    let (best, &peak) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("centre node is vacuum");
    if best + 1 >= samples.len() {
        return Err(MultipoleError::MaxOnBoundary { y_um: ys[best] });
    }
    let (mut argmax, mut top) = (ys[best], peak);
    if best > 0 {
        // Parabola through the three samples around the maximum.
        let (y0, y1, y2) = (ys[best - 1], ys[best], ys[best + 1]);
        let (f0, f1, f2) = (samples[best - 1], samples[best], samples[best + 1]);
        let s01 = (f1 - f0) / (y1 - y0);
        let s12 = (f2 - f1) / (y2 - y1);
        let curv = (s12 - s01) / (y2 - y0);
        if curv < 0.0 {
            let slope = s01 - curv * (y0 + y1);
            argmax = -slope / (2.0 * curv);
            top = f0 + (argmax - y0) * (s01 + curv * (argmax - y1));
        }
    }
    Ok(RmaxScan {
        argmax,
        peak: top,
        r_max: argmax.min(geom.um().a / 2.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthReport {
    /// Barrier height for the given ion and drive (K).
    pub depth_k: f64,
    /// depth·a²/V₀² for the given ion and drive (K µm²/V²).
    pub scaled_depth: f64,
    /// Same for singly charged 111Cd at 50 MHz.
    pub scaled_depth_reference: f64,
    /// Position of the pseudopotential maximum along +y (µm).
    pub argmax: f64,
    /// min(argmax, a/2) (µm).
    pub r_max: f64,
}

/// Reference drive frequency for scaled depths (MHz).
pub const REFERENCE_RF_MHZ: f64 = 50.0;

pub fn trap_depth_and_rmax(
    field: &ScalarField2D,
    geom: &TrapGeometry,
    drive: &DriveConfig,
    ion: &IonSpecies,
) -> Result<DepthReport, MultipoleError> {
    let scan = rmax_scan(field, geom)?;
    let grad_sq_si = scan.peak * 1e12;
    let depth_k = pseudopotential(grad_sq_si, drive, ion) / BOLTZMANN;
    let a = geom.um().a;
    let reference_drive = DriveConfig::new(drive.v0, REFERENCE_RF_MHZ, 0.0).expect("valid reference drive");
    let reference_k = pseudopotential(grad_sq_si, &reference_drive, &IonSpecies::cd111()) / BOLTZMANN;
    let v0_sq = drive.v0 * drive.v0;
    Ok(DepthReport {
        depth_k,
        scaled_depth: depth_k * a * a / v0_sq,
        scaled_depth_reference: reference_k * a * a / v0_sq,
        argmax: scan.argmax,
        r_max: scan.r_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotated(x: f64, y: f64) -> (f64, f64) {
        let (s, c) = FRAC_PI_4.sin_cos();
        (x * c + y * s, -x * s + y * c)
    }

    #[test]
    fn pure_quadrupole_fixture() {
        let (v0, r0) = (3.0, 2.0);
        let e = expand_fn(
            |x, y| {
                let (xp, yp) = rotated(x, y);
                v0 * (xp * xp - yp * yp) / (2.0 * r0 * r0)
            },
            v0,
            r0,
            12,
        );
        assert!((e.c[2] - 0.5).abs() < 1e-12);
        for m in 0..=12 {
            if m != 2 {
                assert!(e.c[m].abs() < 1e-12, "C{m} = {}", e.c[m]);
            }
            assert!(e.s[m].abs() < 1e-12, "S{m} = {}", e.s[m]);
        }
    }

    #[test]
    fn basis_functions_are_one_hot() {
        let r0 = 1.5;
        for m in 1..=12usize {
            for sine in [false, true] {
                let e = expand_fn(
                    |x, y| {
                        let (xp, yp) = rotated(x, y);
                        let (r, t) = (xp.hypot(yp), yp.atan2(xp));
                        let ang = if sine { (m as f64 * t).sin() } else { (m as f64 * t).cos() };
                        (r / r0).powi(m as i32) * ang
                    },
                    1.0,
                    r0,
                    12,
                );
                for k in 0..=12 {
                    let want_c = if !sine && k == m { 1.0 } else { 0.0 };
                    let want_s = if sine && k == m { 1.0 } else { 0.0 };
                    assert!((e.c[k] - want_c).abs() < 1e-10, "m={m} sine={sine} C{k}={}", e.c[k]);
                    assert!((e.s[k] - want_s).abs() < 1e-10, "m={m} sine={sine} S{k}={}", e.s[k]);
                }
            }
        }
    }

    #[test]
    fn eta_of_hyperbolic_reference_is_one() {
        // V = V0 (x′² − y′²)/(2 ℓ²) is the ideal trap of radius ℓ.
        let geom = TrapGeometry::from_um(crate::model::GeometryUm { a: 40.0, d: 2.0, w: 2.0, b: 100.0, c: 100.0, g: 2.0, h: 100.0 }).unwrap();
        let l = geom.l_eff() * 1e6;
        for r0 in [2.0, 5.0] {
            let e = expand_fn(
                |x, y| {
                    let (xp, yp) = rotated(x, y);
                    (xp * xp - yp * yp) / (2.0 * l * l)
                },
                1.0,
                r0,
                4,
            );
            assert!((eta(&e, &geom) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_bound() {
        let f = |x: f64, y: f64| (0.3 * x).sin() * (0.2 * y).cosh() + 0.1 * x * y;
        let (r0, v0) = (2.0, 1.0);
        let e = expand_fn(f, v0, r0, 12);
        let mean_sq = expand_fn(|x, y| f(x, y) * f(x, y), 1.0, r0, 0).c[0];
        assert!(e.projected_mean_square() <= mean_sq * (1.0 + 1e-12));
        assert!(e.projected_mean_square() > 0.999 * mean_sq);
    }
}
