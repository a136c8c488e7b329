//! Domain types shared by the solvers and the analysis layers.
//!
//! Everything is stored in SI units. Lengths enter and leave the public
//! constructors in micrometres and frequencies in MHz, because that is how
//! trap designs are written down.

use std::f64::consts::PI;

use thiserror::Error;

/// CODATA 2018 values.
pub mod constants {
    /// Elementary charge (C).
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    /// Vacuum permittivity (F/m).
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    /// Boltzmann constant (J/K).
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    /// Reduced Planck constant (J s).
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Unified atomic mass unit (kg).
    pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
    /// Atomic mass of 111Cd (u).
    pub const CD111_MASS_AMU: f64 = 110.904_183;

    pub const UM: f64 = 1e-6;
    pub const MHZ: f64 = 1e6;
}

use constants::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

fn require(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), ModelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value, reason })
    }
}

/// The constants table, in the order `--version` prints it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub elementary_charge: f64,
    pub vacuum_permittivity: f64,
    pub boltzmann: f64,
    pub hbar: f64,
    pub atomic_mass_unit: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        elementary_charge: ELEMENTARY_CHARGE,
        vacuum_permittivity: VACUUM_PERMITTIVITY,
        boltzmann: BOLTZMANN,
        hbar: HBAR,
        atomic_mass_unit: ATOMIC_MASS_UNIT,
    };

    pub fn table(&self) -> Vec<(&'static str, f64, &'static str)> {
        vec![
            ("e", self.elementary_charge, "C"),
            ("epsilon_0", self.vacuum_permittivity, "F/m"),
            ("k_B", self.boltzmann, "J/K"),
            ("hbar", self.hbar, "J s"),
            ("u", self.atomic_mass_unit, "kg"),
        ]
    }
}

/// Cantilever trap dimensions, stored in metres.
///
/// `a` tip-to-tip separation, `d` layer separation (inner faces at y = ±d/2),
/// `w` layer thickness, `b` centre electrode axial width, `c` end-cap axial
/// width, `g` gap between centre electrode and end-caps, `h` cantilever length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapGeometry {
    a: f64,
    d: f64,
    w: f64,
    b: f64,
    c: f64,
    g: f64,
    h: f64,
}

/// The same dimensions in micrometres, for grid work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryUm {
    pub a: f64,
    pub d: f64,
    pub w: f64,
    pub b: f64,
    pub c: f64,
    pub g: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratios {
    pub alpha: f64,
    pub delta: f64,
    /// Metres.
    pub l_eff: f64,
    /// Metres.
    pub d_eff: f64,
}

impl TrapGeometry {
    pub fn from_um(dims: GeometryUm) -> Result<Self, ModelError> {
        let GeometryUm { a, d, w, b, c, g, h } = dims;
        for (name, v) in [("a", a), ("d", d), ("w", w), ("b", b), ("c", c), ("g", g), ("h", h)] {
            require(name, v, v > 0.0, "must be positive")?;
        }
        Ok(TrapGeometry {
            a: a * UM,
            d: d * UM,
            w: w * UM,
            b: b * UM,
            c: c * UM,
            g: g * UM,
            h: h * UM,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn um(&self) -> GeometryUm {
        GeometryUm {
            a: self.a / UM,
            d: self.d / UM,
            w: self.w / UM,
            b: self.b / UM,
            c: self.c / UM,
            g: self.g / UM,
            h: self.h / UM,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.a / self.d
    }

    pub fn delta(&self) -> f64 {
        self.d / self.w
    }

    /// Distance from the trap centre to the nearest tip edge (m).
    pub fn l_eff(&self) -> f64 {
        (self.a / 2.0).hypot(self.d / 2.0)
    }

    /// Distance from the trap centre to the nearest end-cap corner (m).
    pub fn d_eff(&self) -> f64 {
        self.l_eff().hypot(self.b / 2.0 + self.g)
    }

    /// Copy with every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self, ModelError> {
        require("scale", s, s > 0.0, "must be positive")?;
        Ok(TrapGeometry {
            a: self.a * s,
            d: self.d * s,
            w: self.w * s,
            b: self.b * s,
            c: self.c * s,
            g: self.g * s,
            h: self.h * s,
        })
    }
}

pub fn derive_ratios(geom: &TrapGeometry) -> Ratios {
    Ratios {
        alpha: geom.alpha(),
        delta: geom.delta(),
        l_eff: geom.l_eff(),
        d_eff: geom.d_eff(),
    }
}

/// Electrical drive. Stored in SI (V, rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub v0: f64,
    pub omega_rf: f64,
    pub u0: f64,
    /// Static offsets on the centre electrodes, ordered by quadrant of the
    /// electrode tip: (+x,+y), (−x,+y), (−x,−y), (+x,−y).
    pub center_offsets: [f64; 4],
}

impl DriveConfig {
    pub fn new(v0: f64, f_rf_mhz: f64, u0: f64) -> Result<Self, ModelError> {
        require("V0", v0, v0 >= 0.0, "must be non-negative")?;
        require("f_RF", f_rf_mhz, f_rf_mhz > 0.0, "must be positive")?;
        require("U0", u0, true, "must be finite")?;
        Ok(DriveConfig {
            v0,
            omega_rf: 2.0 * PI * f_rf_mhz * MHZ,
            u0,
            center_offsets: [0.0; 4],
        })
    }

    pub fn with_center_offsets(mut self, offsets: [f64; 4]) -> Result<Self, ModelError> {
        for v in offsets {
            require("center_offsets", v, true, "must be finite")?;
        }
        self.center_offsets = offsets;
        Ok(self)
    }

    pub fn f_rf_mhz(&self) -> f64 {
        self.omega_rf / (2.0 * PI * MHZ)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpecies {
    mass_amu: f64,
    charge: u32,
}

impl IonSpecies {
    pub fn new(mass_amu: f64, charge: u32) -> Result<Self, ModelError> {
        require("mass_amu", mass_amu, mass_amu > 0.0, "must be positive")?;
        if charge == 0 {
            return Err(ModelError::InvalidParameter {
                name: "charge",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(IonSpecies { mass_amu, charge })
    }

    /// Singly charged 111Cd.
    pub fn cd111() -> Self {
        IonSpecies {
            mass_amu: CD111_MASS_AMU,
            charge: 1,
        }
    }

    pub fn mass_amu(&self) -> f64 {
        self.mass_amu
    }

    pub fn mass_kg(&self) -> f64 {
        self.mass_amu * ATOMIC_MASS_UNIT
    }

    pub fn charge_number(&self) -> u32 {
        self.charge
    }

    pub fn charge_c(&self) -> f64 {
        self.charge as f64 * ELEMENTARY_CHARGE
    }
}

/// Substrate and circuit properties for the engineering estimates (SI).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialProps {
    pub youngs_modulus: f64,
    pub density: f64,
    pub resistivity: f64,
    pub loss_tangent: f64,
    pub series_resistance: f64,
    pub capacitance: f64,
    pub temperature: f64,
}

impl MaterialProps {
    pub fn new(
        youngs_modulus: f64,
        density: f64,
        resistivity: f64,
        loss_tangent: f64,
        series_resistance: f64,
        capacitance: f64,
        temperature: f64,
    ) -> Result<Self, ModelError> {
        for (name, v) in [
            ("youngs_modulus", youngs_modulus),
            ("density", density),
            ("resistivity", resistivity),
            ("loss_tangent", loss_tangent),
            ("series_resistance", series_resistance),
            ("capacitance", capacitance),
            ("temperature", temperature),
        ] {
            require(name, v, v > 0.0, "must be positive")?;
        }
        Ok(MaterialProps {
            youngs_modulus,
            density,
            resistivity,
            loss_tangent,
            series_resistance,
            capacitance,
            temperature,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dims(a: f64, d: f64, w: f64, b: f64, g: f64) -> GeometryUm {
        GeometryUm { a, d, w, b, c: 100.0, g, h: 100.0 }
    }

    #[test]
    fn ratios_for_thick_layers() {
        let g = TrapGeometry::from_um(dims(40.0, 10.0, 10.0, 100.0, 2.0)).unwrap();
        let r = derive_ratios(&g);
        assert_relative_eq!(r.alpha, 4.0);
        assert_relative_eq!(r.delta, 1.0);
        assert_relative_eq!(r.l_eff / UM, 20.615_528_128, max_relative = 1e-10);
    }

    #[test]
    fn square_cross_section_l_eff() {
        let g = TrapGeometry::from_um(dims(30.0, 30.0, 5.0, 100.0, 2.0)).unwrap();
        assert_relative_eq!(g.l_eff(), g.a() / 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn d_eff_uses_gap_and_half_width() {
        let g = TrapGeometry::from_um(dims(40.0, 2.0, 2.0, 100.0, 2.0)).unwrap();
        let expect = (20.0f64.powi(2) + 1.0 + 52.0f64.powi(2)).sqrt();
        assert_relative_eq!(g.d_eff() / UM, expect, max_relative = 1e-12);
        assert!((g.d_eff() / UM - 55.7).abs() < 0.05);
    }

    #[test]
    fn rejects_non_positive_dimensions() {
        let err = TrapGeometry::from_um(dims(40.0, 0.0, 2.0, 100.0, 2.0)).unwrap_err();
        assert!(matches!(err, ModelError::InvalidParameter { name: "d", .. }));
        assert!(TrapGeometry::from_um(dims(f64::NAN, 1.0, 2.0, 100.0, 2.0)).is_err());
        assert!(IonSpecies::new(111.0, 0).is_err());
        assert!(DriveConfig::new(-1.0, 50.0, 0.0).is_err());
        assert!(DriveConfig::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn drive_converts_mhz() {
        let d = DriveConfig::new(20.0, 50.0, 1.0).unwrap();
        assert_relative_eq!(d.omega_rf, 2.0 * PI * 50e6);
        assert_relative_eq!(d.f_rf_mhz(), 50.0, max_relative = 1e-14);
    }

    #[test]
    fn um_round_trip() {
        let src = dims(40.0, 2.0, 2.0, 100.0, 2.0);
        let g = TrapGeometry::from_um(src).unwrap();
        let back = g.um();
        assert_relative_eq!(back.a, src.a, max_relative = 1e-14);
        assert_relative_eq!(back.g, src.g, max_relative = 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn l_eff_below_d_eff(a in 0.1f64..500.0, d in 0.1f64..100.0, b in 0.1f64..500.0, g in 0.01f64..50.0) {
                let geom = TrapGeometry::from_um(GeometryUm { a, d, w: 1.0, b, c: 10.0, g, h: 50.0 }).unwrap();
                prop_assert!(geom.l_eff() < geom.d_eff());
            }

            #[test]
            fn ratios_scale_covariantly(a in 0.1f64..500.0, d in 0.1f64..100.0, w in 0.1f64..50.0, s in 0.01f64..100.0) {
                let geom = TrapGeometry::from_um(GeometryUm { a, d, w, b: 80.0, c: 10.0, g: 2.0, h: 50.0 }).unwrap();
                let r = derive_ratios(&geom);
                let rs = derive_ratios(&geom.scaled(s).unwrap());
                prop_assert!((rs.alpha - r.alpha).abs() <= 1e-12 * r.alpha);
                prop_assert!((rs.delta - r.delta).abs() <= 1e-12 * r.delta);
                prop_assert!((rs.l_eff - s * r.l_eff).abs() <= 1e-12 * s * r.l_eff);
                prop_assert!((rs.d_eff - s * r.d_eff).abs() <= 1e-12 * s * r.d_eff);
            }
        }
    }
}
