//! Electromechanical and thermal side estimates: cantilever stiffness,
//! deflection and resonance, RF dissipation, Johnson-noise heating.

use std::f64::consts::PI;

use crate::csvfmt::num;
use crate::model::constants::{BOLTZMANN, ELEMENTARY_CHARGE, HBAR, VACUUM_PERMITTIVITY};
use crate::model::{DriveConfig, IonSpecies, MaterialProps, TrapGeometry};

/// Dissipation quoted for the reference design (W). The formula gives half
/// of it with the quoted inputs; both are reported.
pub const QUOTED_POWER_DISSIPATION: f64 = 0.040;

/// Breakdown fields (V/µm).
pub const BREAKDOWN_SEMICONDUCTOR: f64 = 40.0;
pub const BREAKDOWN_SILICON_NITRIDE: f64 = 300.0;

/// Above this, RCΩ or tan δ no longer count as small.
const SMALL_LOSS: f64 = 0.1;

/// k = E w³ b / (4 h³) in N/m.
pub fn cantilever_spring_constant(geom: &TrapGeometry, mat: &MaterialProps) -> f64 {
    mat.youngs_modulus * geom.w().powi(3) * geom.b() / (4.0 * geom.h().powi(3))
}

/// F = (ε₀/2) h b V₀² / d² in N.
pub fn capacitor_force(geom: &TrapGeometry, v0: f64) -> f64 {
    0.5 * VACUUM_PERMITTIVITY * geom.h() * geom.b() * v0 * v0 / (geom.d() * geom.d())
}

/// Static tip deflection x_d = 2ε₀h⁴V₀²/(E d² w³) in m.
pub fn tip_deflection(geom: &TrapGeometry, mat: &MaterialProps, v0: f64) -> f64 {
    2.0 * VACUUM_PERMITTIVITY * geom.h().powi(4) * v0 * v0 / (mat.youngs_modulus * geom.d().powi(2) * geom.w().powi(3))
}

/// ω_vib/2π = 0.162 √(E/ρ) w/h² in Hz.
pub fn cantilever_resonance(geom: &TrapGeometry, mat: &MaterialProps) -> f64 {
    0.162 * (mat.youngs_modulus / mat.density).sqrt() * geom.w() / (geom.h() * geom.h())
}

/// ω_vib²/Ω², the suppression of the deflection under an RF drive far above
/// the mechanical resonance.
pub fn lorentzian_reduction(geom: &TrapGeometry, mat: &MaterialProps, drive: &DriveConfig) -> f64 {
    let w = 2.0 * PI * cantilever_resonance(geom, mat);
    (w / drive.omega_rf).powi(2)
}

/// P_d = (V₀²CΩ/2)(RCΩ + tan δ) in W.
pub fn rf_power_dissipation(mat: &MaterialProps, drive: &DriveConfig) -> f64 {
    let rc_omega = mat.series_resistance * mat.capacitance * drive.omega_rf;
    if rc_omega >= SMALL_LOSS || mat.loss_tangent >= SMALL_LOSS {
        log::warn!("RCΩ = {rc_omega:.3} and tan δ = {:.3} should both be ≪ 1", mat.loss_tangent);
    }
    0.5 * drive.v0 * drive.v0 * mat.capacitance * drive.omega_rf * (rc_omega + mat.loss_tangent)
}

/// Where the heating estimate is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingSite {
    /// Ion-electrode distance (m).
    pub z: f64,
    /// Secular angular frequency of the heated mode (rad/s).
    pub omega_s: f64,
}

/// ṅ = e²k_BT(ρ_e/w)/(m z² ħω_s) in quanta/s, with the electrode resistance
/// taken as ρ_e/w.
pub fn thermal_heating_rate(ion: &IonSpecies, mat: &MaterialProps, geom: &TrapGeometry, site: &HeatingSite) -> f64 {
    if geom.w() >= site.z {
        log::warn!("electrode thickness {:.3e} m is not small against the ion distance {:.3e} m", geom.w(), site.z);
    }
    heating_per_resistivity(ion, mat.temperature, geom, site) * mat.resistivity
}

fn heating_per_resistivity(ion: &IonSpecies, temperature: f64, geom: &TrapGeometry, site: &HeatingSite) -> f64 {
    let q = ion.charge_number() as f64 * ELEMENTARY_CHARGE;
    q * q * BOLTZMANN * temperature / (geom.w() * ion.mass_kg() * site.z * site.z * HBAR * site.omega_s)
}

/// Resistivity (Ω m) that yields `rate` quanta/s at this site.
pub fn resistivity_for_rate(ion: &IonSpecies, temperature: f64, geom: &TrapGeometry, site: &HeatingSite, rate: f64) -> f64 {
    rate / heating_per_resistivity(ion, temperature, geom, site)
}

/// V₀/(d·E_bd) with E_bd in V/µm.
pub fn breakdown_margin(geom: &TrapGeometry, v0: f64, breakdown_v_per_um: f64) -> f64 {
    v0 / (geom.d() * 1e6 * breakdown_v_per_um)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingRequest {
    pub site: HeatingSite,
    /// Target rate for the resistivity back-solve (quanta/s).
    pub target_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineeringReport {
    /// N/m.
    pub spring_constant: f64,
    /// N.
    pub force: f64,
    /// Static tip deflection (m).
    pub max_deflection: f64,
    /// Deflection under the RF drive (m).
    pub rf_deflection: f64,
    /// Hz.
    pub resonant_freq: f64,
    pub lorentzian_reduction: f64,
    /// W.
    pub power_dissipation: f64,
    pub power_dissipation_quoted: f64,
    /// quanta/s.
    pub heating_rate: Option<f64>,
    /// Ω m.
    pub resistivity_for_target: Option<f64>,
    pub breakdown_margin: f64,
}

impl EngineeringReport {
    /// Drive at or below the mechanical resonance.
    pub fn near_resonance(&self) -> bool {
        self.lorentzian_reduction >= 1.0
    }

    fn fields(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("spring_constant_N_per_m", Some(self.spring_constant)),
            ("force_N", Some(self.force)),
            ("max_deflection_m", Some(self.max_deflection)),
            ("rf_deflection_m", Some(self.rf_deflection)),
            ("resonant_freq_Hz", Some(self.resonant_freq)),
            ("lorentzian_reduction", Some(self.lorentzian_reduction)),
            ("power_dissipation_W", Some(self.power_dissipation)),
            ("power_dissipation_quoted_W", Some(self.power_dissipation_quoted)),
            ("heating_rate_quanta_per_s", self.heating_rate),
            ("resistivity_for_target_ohm_m", self.resistivity_for_target),
            ("breakdown_margin", Some(self.breakdown_margin)),
        ]
    }

    /// `key = value` lines; absent values are omitted.
    pub fn text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            if let Some(v) = v {
                s.push_str(&format!("{k} = {}\n", num(v)));
            }
        }
        if self.near_resonance() {
            s.push_str("warning = drive frequency at or below the cantilever resonance\n");
        }
        s.push_str("note = power_dissipation_quoted_W is the published figure; the formula gives power_dissipation_W\n");
        s
    }

    /// Two-line CSV; absent values are empty cells.
    pub fn csv(&self) -> String {
        let f = self.fields();
        let header: Vec<&str> = f.iter().map(|(k, _)| *k).collect();
        let cells: Vec<String> = f.iter().map(|(_, v)| v.map(num).unwrap_or_default()).collect();
        format!("{}\n{}\n", header.join(","), cells.join(","))
    }
}

pub fn engineering_report(
    geom: &TrapGeometry,
    mat: &MaterialProps,
    drive: &DriveConfig,
    ion: &IonSpecies,
    breakdown_v_per_um: f64,
    heating: Option<&HeatingRequest>,
) -> EngineeringReport {
    let lorentz = lorentzian_reduction(geom, mat, drive);
    let x_d = tip_deflection(geom, mat, drive.v0);
    EngineeringReport {
        spring_constant: cantilever_spring_constant(geom, mat),
        force: capacitor_force(geom, drive.v0),
        max_deflection: x_d,
        rf_deflection: x_d * lorentz,
        resonant_freq: cantilever_resonance(geom, mat),
        lorentzian_reduction: lorentz,
        power_dissipation: rf_power_dissipation(mat, drive),
        power_dissipation_quoted: QUOTED_POWER_DISSIPATION,
        heating_rate: heating.map(|h| thermal_heating_rate(ion, mat, geom, &h.site)),
        resistivity_for_target: heating
            .and_then(|h| h.target_rate.map(|r| resistivity_for_rate(ion, mat.temperature, geom, &h.site, r))),
        breakdown_margin: breakdown_margin(geom, drive.v0, breakdown_v_per_um),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GeometryUm;

    fn geom(h: f64, w: f64) -> TrapGeometry {
        TrapGeometry::from_um(GeometryUm { a: 40.0, d: 2.0, w, b: 100.0, c: 100.0, g: 2.0, h }).unwrap()
    }

    fn gaas() -> MaterialProps {
        MaterialProps::new(85.5e9, 5310.0, 1e-7, 2e-4, 10.0, 10e-12, 300.0).unwrap()
    }

    #[test]
    fn spring_constant_hand_value_and_scaling() {
        let k = cantilever_spring_constant(&geom(100.0, 2.0), &gaas());
        assert!((k - 85.5e9 * (8e-18 * 1e-4) / (4.0 * 1e-12)).abs() < 1e-9 * k);
        let k2 = cantilever_spring_constant(&geom(200.0, 2.0), &gaas());
        assert!((k / k2 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn force_hand_value() {
        // (8.8541878128e-12/2)·(1e-4·1e-4·400)/(2e-6)² = 4.4271e-6 N.
        let f = capacitor_force(&geom(100.0, 2.0), 20.0);
        assert!((f - 4.427_093_906_4e-6).abs() < 1e-15);
        assert_eq!(capacitor_force(&geom(100.0, 2.0), 0.0), 0.0);
    }

    #[test]
    fn deflection_and_resonance_scale() {
        let g = geom(100.0, 2.0);
        let x1 = tip_deflection(&g, &gaas(), 20.0);
        let x2 = tip_deflection(&geom(200.0, 2.0), &gaas(), 20.0);
        assert!((x2 / x1 - 16.0).abs() < 1e-12);
        let f1 = cantilever_resonance(&g, &gaas());
        let f2 = cantilever_resonance(&geom(200.0, 2.0), &gaas());
        assert!((f1 / f2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dissipation_vanishes_without_loss() {
        let m = MaterialProps { series_resistance: 0.0, loss_tangent: 0.0, ..gaas() };
        let drive = DriveConfig::new(20.0, 50.0, 0.0).unwrap();
        assert_eq!(rf_power_dissipation(&m, &drive), 0.0);
    }

    #[test]
    fn resistivity_back_solve_round_trips() {
        let g = geom(100.0, 2.0);
        let site = HeatingSite { z: 20e-6, omega_s: 2.0 * PI * 10e6 };
        let ion = IonSpecies::cd111();
        let rho = resistivity_for_rate(&ion, 300.0, &g, &site, 10.0);
        let m = MaterialProps { resistivity: rho, ..gaas() };
        assert!((thermal_heating_rate(&ion, &m, &g, &site) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn report_renders_every_field() {
        let drive = DriveConfig::new(20.0, 50.0, 0.0).unwrap();
        let req = HeatingRequest { site: HeatingSite { z: 20e-6, omega_s: 2.0 * PI * 10e6 }, target_rate: Some(10.0) };
        let r = engineering_report(&geom(100.0, 2.0), &gaas(), &drive, &IonSpecies::cd111(), BREAKDOWN_SEMICONDUCTOR, Some(&req));
        assert!(!r.near_resonance());
        assert!((r.breakdown_margin - 0.25).abs() < 1e-12);
        let csv = r.csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(r.text().contains("heating_rate_quanta_per_s = "));
    }
}
