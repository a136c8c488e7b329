//! Pseudopotential kernel, secular frequencies, static anisotropy and the
//! principal-axis analysis.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::fmt;

use thiserror::Error;

use crate::csvfmt::num;
use crate::model::{DriveConfig, IonSpecies, TrapGeometry};

/// q at or above this value breaks the adiabatic approximation.
pub const Q_WARNING: f64 = 0.3;

/// Allowed relative disagreement between the two ε routes.
pub const EPSILON_CONSISTENCY: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrapError {
    #[error("D_z = {dz:.4e} 1/µm² is not positive: the end-caps do not confine along z")]
    NotAxiallyConfining { dz: f64 },
    #[error("the {0} axis is unstable: static anti-confinement exceeds the RF confinement")]
    UnstableAxis(Axis),
    #[error("point ({x}, {y}, {z}) µm is outside the harmonic region")]
    OutsideHarmonicRegion { x: f64, y: f64, z: f64 },
    #[error("isotropic transverse potential (ε = 1/2, λ = 0) has no principal axes")]
    DegenerateRotation,
    #[error("end-cap voltage must be positive for axial confinement, got {u0} V")]
    NonPositiveEndcapVoltage { u0: f64 },
}

/// ψ = e²|∇V|²/(4mΩ²) in joules, with |∇V|² in V²/m².
pub fn pseudopotential(grad_sq: f64, drive: &DriveConfig, ion: &IonSpecies) -> f64 {
    let e = ion.charge_c();
    e * e * grad_sq / (4.0 * ion.mass_kg() * drive.omega_rf * drive.omega_rf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrupoleFrequency {
    /// rad/s.
    pub omega_p: f64,
    pub q: f64,
    /// q ≥ 0.3.
    pub q_warning: bool,
}

/// ω_p = eV₀η/(√2 m Ω ℓ²) with ℓ in metres.
pub fn secular_frequency_with_l(eta: f64, l_eff: f64, drive: &DriveConfig, ion: &IonSpecies) -> QuadrupoleFrequency {
    let omega_p = ion.charge_c() * drive.v0 * eta / (SQRT_2 * ion.mass_kg() * drive.omega_rf * l_eff * l_eff);
    let q = 2.0 * SQRT_2 * omega_p / drive.omega_rf;
    if q >= Q_WARNING {
        log::warn!("q = {q:.3} is at or above {Q_WARNING}: pseudopotential approximation is marginal");
    }
    QuadrupoleFrequency {
        omega_p,
        q,
        q_warning: q >= Q_WARNING,
    }
}

pub fn secular_frequency_quadrupole(eta: f64, geom: &TrapGeometry, drive: &DriveConfig, ion: &IonSpecies) -> QuadrupoleFrequency {
    secular_frequency_with_l(eta, geom.l_eff(), drive, ion)
}

/// Diagonal static curvatures normalised by U₀ (1/µm²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticCurvature {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticCharacterization {
    pub kappa: f64,
    /// −D_x/D_z.
    pub epsilon: f64,
    /// 1 + D_y/D_z.
    pub epsilon_alt: f64,
    /// The two routes agree within 5 %.
    pub consistent: bool,
}

pub fn static_characterization_with_d(d: &StaticCurvature, d_eff_um: f64) -> Result<StaticCharacterization, TrapError> {
    if !(d.dz > 0.0) {
        return Err(TrapError::NotAxiallyConfining { dz: d.dz });
    }
    let kappa = d.dz * d_eff_um * d_eff_um / 2.0;
    let epsilon = -d.dx / d.dz;
    let epsilon_alt = 1.0 + d.dy / d.dz;
    let consistent = (epsilon - epsilon_alt).abs() < EPSILON_CONSISTENCY * epsilon.abs();
    if !consistent {
        log::warn!("ε routes disagree: −D_x/D_z = {epsilon:.4}, 1 + D_y/D_z = {epsilon_alt:.4}");
    }
    Ok(StaticCharacterization {
        kappa,
        epsilon,
        epsilon_alt,
        consistent,
    })
}

pub fn static_characterization(d: &StaticCurvature, geom: &TrapGeometry) -> Result<StaticCharacterization, TrapError> {
    static_characterization_with_d(d, geom.d_eff() * 1e6)
}

/// ω_z = √(2κeU₀/(m d_eff²)) with d_eff in metres.
pub fn axial_frequency_with_d(kappa: f64, d_eff: f64, drive: &DriveConfig, ion: &IonSpecies) -> Result<f64, TrapError> {
    if drive.u0 < 0.0 {
        return Err(TrapError::NonPositiveEndcapVoltage { u0: drive.u0 });
    }
    Ok((2.0 * kappa * ion.charge_c() * drive.u0 / (ion.mass_kg() * d_eff * d_eff)).sqrt())
}

pub fn axial_frequency(kappa: f64, geom: &TrapGeometry, drive: &DriveConfig, ion: &IonSpecies) -> Result<f64, TrapError> {
    axial_frequency_with_d(kappa, geom.d_eff(), drive, ion)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetFrequencies {
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
}

pub fn net_frequencies(omega_p: f64, omega_z: f64, epsilon: f64) -> Result<NetFrequencies, TrapError> {
    let (p2, z2) = (omega_p * omega_p, omega_z * omega_z);
    let x2 = p2 - epsilon * z2;
    let y2 = p2 - (1.0 - epsilon) * z2;
    if !(x2 > 0.0) {
        return Err(TrapError::UnstableAxis(Axis::X));
    }
    if !(y2 > 0.0) {
        return Err(TrapError::UnstableAxis(Axis::Y));
    }
    Ok(NetFrequencies {
        omega_x: x2.sqrt(),
        omega_y: y2.sqrt(),
        omega_z,
    })
}

/// ω_z with the residual axial pseudopotential included:
/// ω_z,tot² = ω_z² + σ_z ω_p².
pub fn axial_frequency_with_rf(omega_z: f64, omega_p: f64, sigma_z: f64) -> f64 {
    (omega_z * omega_z + sigma_z * omega_p * omega_p).sqrt()
}

/// σ_z = H_z ℓ⁴/(η² V₀²) with H_z in V²/µm⁴ and ℓ in µm.
pub fn sigma_z(h_z: f64, eta: f64, l_eff_um: f64, v0: f64) -> f64 {
    h_z * l_eff_um.powi(4) / (eta * eta * v0 * v0)
}

/// Everything needed to evaluate the harmonic net potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicModel {
    pub geom: TrapGeometry,
    pub drive: DriveConfig,
    pub ion: IonSpecies,
    pub eta: f64,
    pub kappa: f64,
    pub epsilon: f64,
    /// Residual axial pseudopotential ratio; `None` leaves it out.
    pub sigma_z: Option<f64>,
}

impl HarmonicModel {
    /// Net potential energy φ = ψ + eU (J) at (x, y, z) in µm.
    pub fn net_potential(&self, x: f64, y: f64, z: f64) -> Result<f64, TrapError> {
        let g = self.geom.um();
        let tol = 1e-12;
        if x.abs() > g.a / 8.0 + tol || y.abs() > g.a / 8.0 + tol || z.abs() > g.b / 4.0 + tol {
            return Err(TrapError::OutsideHarmonicRegion { x, y, z });
        }
        Ok(self.energy(x * 1e-6, y * 1e-6, z * 1e-6))
    }

    fn energy(&self, x: f64, y: f64, z: f64) -> f64 {
        let m = self.ion.mass_kg();
        let wp = secular_frequency_quadrupole(self.eta, &self.geom, &self.drive, &self.ion).omega_p;
        let rf_axial = self.sigma_z.unwrap_or(0.0) * wp * wp * z * z;
        let psi = 0.5 * m * (wp * wp * (x * x + y * y) + rf_axial);
        let d_eff = self.geom.d_eff();
        let u = self.drive.u0 * self.kappa / (d_eff * d_eff)
            * (-self.epsilon * x * x - (1.0 - self.epsilon) * y * y + z * z);
        psi + self.ion.charge_c() * u
    }
}

/// θ = ½ atan2(λ, 2ε − 1). With 2ε − 1 < 0 the result lies beyond ±π/4.
pub fn principal_axis_angle(epsilon: f64, lambda: f64) -> Result<f64, TrapError> {
    let den = 2.0 * epsilon - 1.0;
    if lambda == 0.0 && den == 0.0 {
        return Err(TrapError::DegenerateRotation);
    }
    Ok(0.5 * lambda.atan2(den))
}

/// ε′ = ε cos 2θ + (λ/2) sin 2θ + sin²θ.
pub fn rotated_anisotropy(epsilon: f64, lambda: f64, theta: f64) -> f64 {
    let (s2, c2) = (2.0 * theta).sin_cos();
    epsilon * c2 + 0.5 * lambda * s2 + theta.sin().powi(2)
}

/// Coefficients (xx, yy, xy) of −εx² − (1−ε)y² + λxy in the rotated
/// frame x = x′cosθ + y′sinθ, y = −x′sinθ + y′cosθ.
pub fn rotated_form(epsilon: f64, lambda: f64, theta: f64) -> (f64, f64, f64) {
    let (s, c) = theta.sin_cos();
    let (a, b, h) = (-epsilon, -(1.0 - epsilon), lambda);
    let xx = a * c * c + b * s * s - h * s * c;
    let yy = a * s * s + b * c * c + h * s * c;
    let xy = 2.0 * (a - b) * s * c + h * (c * c - s * s);
    (xx, yy, xy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointChargeModel {
    pub epsilon: f64,
    pub lambda: f64,
    pub theta: f64,
}

/// Twelve-charge model with charge q′ on one diagonal centre pair.
pub fn point_charge_model(geom: &TrapGeometry, q_ratio: f64) -> PointChargeModel {
    point_charge_model_alpha(geom.alpha(), q_ratio)
}

pub fn point_charge_model_alpha(alpha: f64, q_ratio: f64) -> PointChargeModel {
    let a2 = alpha * alpha;
    let asym = (1.0 - q_ratio) / (1.0 + q_ratio);
    let epsilon = (2.0 * a2 - 1.0) / (a2 + 1.0);
    let lambda = 6.0 * asym * alpha / (a2 + 1.0);
    let theta = if (alpha - 1.0).abs() < 1e-15 {
        if asym == 0.0 {
            0.0
        } else {
            FRAC_PI_4.copysign(asym)
        }
    } else {
        0.5 * (asym * 2.0 * alpha / (a2 - 1.0)).atan()
    };
    PointChargeModel { epsilon, lambda, theta }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapCharacterization {
    pub eta: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub sigma_z: Option<f64>,
    pub q: f64,
    /// µm.
    pub r_max: Option<f64>,
    /// K.
    pub depth: Option<f64>,
    /// rad/s.
    pub omega_p: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    pub theta_principal: f64,
    pub epsilon_prime: f64,
}

/// One reference design with its solved or overridden inputs. `l_eff_um` and `d_eff_um` override the
/// geometric values when set (printed tables round them).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignRow {
    pub geom: TrapGeometry,
    pub drive: DriveConfig,
    pub ion: IonSpecies,
    pub eta: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub l_eff_um: Option<f64>,
    pub d_eff_um: Option<f64>,
}

impl DesignRow {
    pub fn l_eff_um(&self) -> f64 {
        self.l_eff_um.unwrap_or(self.geom.l_eff() * 1e6)
    }

    pub fn d_eff_um(&self) -> f64 {
        self.d_eff_um.unwrap_or(self.geom.d_eff() * 1e6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignResult {
    pub row: DesignRow,
    pub chr: TrapCharacterization,
}

impl DesignResult {
    pub const CSV_HEADER: &'static str = "a,d,w,b,alpha,delta,l_eff,d_eff,eta,epsilon,kappa,V0,U0,f_p_MHz,f_x_MHz,f_y_MHz,f_z_MHz,q";

    pub fn f_mhz(&self) -> [f64; 4] {
        let k = 1.0 / (2.0 * std::f64::consts::PI * 1e6);
        [
            self.chr.omega_p * k,
            self.chr.omega_x * k,
            self.chr.omega_y * k,
            self.chr.omega_z * k,
        ]
    }

    fn cells(&self) -> Vec<f64> {
        let g = self.row.geom.um();
        let f = self.f_mhz();
        vec![
            g.a,
            g.d,
            g.w,
            g.b,
            self.row.geom.alpha(),
            self.row.geom.delta(),
            self.row.l_eff_um(),
            self.row.d_eff_um(),
            self.row.eta,
            self.row.epsilon,
            self.row.kappa,
            self.row.drive.v0,
            self.row.drive.u0,
            f[0],
            f[1],
            f[2],
            f[3],
            self.chr.q,
        ]
    }

    pub fn csv_row(&self) -> String {
        crate::csvfmt::row(&self.cells())
    }
}

pub fn characterize_row(row: &DesignRow) -> Result<DesignResult, TrapError> {
    let l = row.l_eff_um() * 1e-6;
    let d_eff = row.d_eff_um() * 1e-6;
    let qf = secular_frequency_with_l(row.eta, l, &row.drive, &row.ion);
    let omega_z = axial_frequency_with_d(row.kappa, d_eff, &row.drive, &row.ion)?;
    let net = net_frequencies(qf.omega_p, omega_z, row.epsilon)?;
    Ok(DesignResult {
        row: *row,
        chr: TrapCharacterization {
            eta: row.eta,
            epsilon: row.epsilon,
            kappa: row.kappa,
            sigma_z: None,
            q: qf.q,
            r_max: None,
            depth: None,
            omega_p: qf.omega_p,
            omega_x: net.omega_x,
            omega_y: net.omega_y,
            omega_z: net.omega_z,
            theta_principal: 0.0,
            epsilon_prime: row.epsilon,
        },
    })
}

pub fn design_row_report(rows: &[DesignRow]) -> Result<Vec<DesignResult>, TrapError> {
    rows.iter().map(characterize_row).collect()
}

pub fn design_row_csv(results: &[DesignResult]) -> String {
    let mut s = String::from(DesignResult::CSV_HEADER);
    s.push('\n');
    for r in results {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Column-aligned rendering of the same table.
pub fn design_row_text(results: &[DesignResult]) -> String {
    let header: Vec<&str> = DesignResult::CSV_HEADER.split(',').collect();
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| r.cells().iter().map(|v| format!("{v:.4}")).collect())
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut s = line(header.iter().map(|h| h.to_string()).collect());
    s.push('\n');
    for r in rows {
        s.push_str(&line(r));
        s.push('\n');
    }
    s
}

/// Key-value summary of a characterization, one `key = value` per line.
pub fn characterization_text(c: &TrapCharacterization) -> String {
    let k = 1.0 / (2.0 * std::f64::consts::PI * 1e6);
    let mut lines = vec![
        format!("eta = {}", num(c.eta)),
        format!("epsilon = {}", num(c.epsilon)),
        format!("kappa = {}", num(c.kappa)),
    ];
    if let Some(s) = c.sigma_z {
        lines.push(format!("sigma_z = {}", num(s)));
    }
    lines.push(format!("q = {}", num(c.q)));
    if let Some(r) = c.r_max {
        lines.push(format!("r_max_um = {}", num(r)));
    }
    if let Some(d) = c.depth {
        lines.push(format!("depth_K = {}", num(d)));
    }
    lines.push(format!("f_p_MHz = {}", num(c.omega_p * k)));
    lines.push(format!("f_x_MHz = {}", num(c.omega_x * k)));
    lines.push(format!("f_y_MHz = {}", num(c.omega_y * k)));
    lines.push(format!("f_z_MHz = {}", num(c.omega_z * k)));
    lines.push(format!("theta_principal_rad = {}", num(c.theta_principal)));
    lines.push(format!("theta_principal_deg = {}", num(c.theta_principal.to_degrees())));
    lines.push(format!("epsilon_prime = {}", num(c.epsilon_prime)));
    let mut s = lines.join("\n");
    s.push('\n');
    s
}
