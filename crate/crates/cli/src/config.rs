//! Design files: flat INI text with `[section]` headers and `key = value`
//! lines. Blank lines and lines starting with `#` or `;` are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use iontrap::model::{DriveConfig, GeometryUm, IonSpecies, MaterialProps, TrapGeometry};
use iontrap::model::constants::CD111_MASS_AMU;
use iontrap::pipeline::{Design, EndcapLength, SolveOptions};
use iontrap::solver::{Method, SolverConfig};

/// Parse or validation failure. `line` and `column` are 1-based; 0 means
/// the problem is not tied to a position (a missing key).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> ConfigError {
    ConfigError { line, column, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveBlock {
    pub v0: f64,
    pub f_rf_mhz: f64,
    pub u0: f64,
    pub center_offsets: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonBlock {
    pub mass_amu: f64,
    pub charge: u32,
}

/// Material and circuit inputs in the units of the file keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialBlock {
    pub youngs_modulus_gpa: f64,
    pub density_g_cm3: f64,
    pub resistivity_ohm_m: f64,
    pub loss_tangent: f64,
    pub series_resistance_ohm: f64,
    pub capacitance_pf: f64,
    pub temperature_k: f64,
    pub breakdown_v_per_um: f64,
    /// Ion-electrode distance for the heating estimate (µm).
    pub ion_distance_um: Option<f64>,
    /// Secular frequency of the heated mode (MHz).
    pub secular_mhz: Option<f64>,
    /// quanta/s, for the resistivity back-solve.
    pub target_heating_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverBlock {
    pub box_factor: f64,
    pub grid_scale: f64,
    pub stretch: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    pub method: Method,
    pub richardson: bool,
    /// Zero-thickness electrodes in the cross-section.
    pub thin_electrodes: bool,
    /// Include σ_z in `characterize`.
    pub sigma_z: bool,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let o = SolveOptions::default();
        SolverBlock {
            box_factor: o.box_factor,
            grid_scale: o.grid_scale,
            stretch: o.stretch,
            tol: o.solver.tol,
            max_iters: o.solver.max_iters,
            method: o.solver.method,
            richardson: o.richardson,
            thin_electrodes: false,
            sigma_z: false,
        }
    }
}

/// Values that replace the solved ones in `characterize`. With η, ε and
/// κ all given no field is solved.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OverrideBlock {
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    pub kappa: Option<f64>,
    pub l_eff_um: Option<f64>,
    pub d_eff_um: Option<f64>,
}

impl OverrideBlock {
    pub fn replaces_solves(&self) -> bool {
        self.eta.is_some() && self.epsilon.is_some() && self.kappa.is_some()
    }

    fn entries(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("eta", self.eta),
            ("epsilon", self.epsilon),
            ("kappa", self.kappa),
            ("l_eff_um", self.l_eff_um),
            ("d_eff_um", self.d_eff_um),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Alpha,
    /// Centre electrode length b (µm).
    B,
    /// Voltage on the (+x,+y) and (−x,−y) centre electrodes (V).
    CenterVoltage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepQuantity {
    Eta,
    Anharmonicity,
    Depth,
    SigmaZ,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepRadius {
    Eighth,
    Rmax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBlock {
    pub parameter: SweepParameter,
    pub quantity: SweepQuantity,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    /// δ for α sweeps; `None` keeps the design's d/w.
    pub delta: Option<f64>,
    pub radius: SweepRadius,
    pub endcap: EndcapLength,
}

impl SweepBlock {
    /// Sweep values, or `None` for an empty range.
    pub fn values(&self) -> Option<Vec<f64>> {
        if self.steps == 0 || !(self.to >= self.from) || (self.steps > 1 && self.to == self.from) {
            return None;
        }
        if self.steps == 1 {
            return Some(vec![self.from]);
        }
        let n = self.steps - 1;
        Some((0..=n).map(|i| self.from + (self.to - self.from) * i as f64 / n as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignFile {
    pub geometry: GeometryUm,
    pub drive: DriveBlock,
    pub ion: IonBlock,
    pub material: Option<MaterialBlock>,
    pub solver: SolverBlock,
    pub overrides: OverrideBlock,
    pub sweep: Option<SweepBlock>,
}

/// End-cap length used when the file leaves `c` out (µm).
pub const DEFAULT_ENDCAP_LENGTH_UM: f64 = 100.0;
/// Cantilever length used when the file leaves `h` out (µm).
pub const DEFAULT_CANTILEVER_LENGTH_UM: f64 = 100.0;

const SECTIONS: &[(&str, &[&str])] = &[
    ("geometry", &["a", "d", "w", "b", "c", "g", "h"]),
    ("drive", &["V0", "f_RF", "U0", "center_offsets"]),
    ("ion", &["mass_amu", "charge"]),
    (
        "material",
        &[
            "youngs_modulus_gpa",
            "density_g_cm3",
            "resistivity_ohm_m",
            "loss_tangent",
            "series_resistance_ohm",
            "capacitance_pf",
            "temperature_k",
            "breakdown_v_per_um",
            "ion_distance_um",
            "secular_mhz",
            "target_heating_rate",
        ],
    ),
    (
        "solver",
        &["box_factor", "grid_scale", "stretch", "tol", "max_iters", "method", "richardson", "thin_electrodes", "sigma_z"],
    ),
    ("override", &["eta", "epsilon", "kappa", "l_eff_um", "d_eff_um"]),
    ("sweep", &["parameter", "quantity", "from", "to", "steps", "delta", "radius", "endcap"]),
];

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

struct Raw {
    entries: HashMap<(&'static str, &'static str), Entry>,
    sections: HashMap<&'static str, usize>,
}

impl Raw {
    fn get(&self, section: &'static str, key: &'static str) -> Option<&Entry> {
        self.entries.get(&(section, key))
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn parsed<T>(
        &self,
        section: &'static str,
        key: &'static str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|m| err(e.line, e.column, format!("{section}.{key}: {m}"))),
        }
    }

    fn number(&self, section: &'static str, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.parsed(section, key, parse_f64)
    }

    fn required(&self, section: &'static str, key: &'static str) -> Result<f64, ConfigError> {
        self.number(section, key)?.ok_or_else(|| missing(self, section, key))
    }
}

fn missing(raw: &Raw, section: &str, key: &str) -> ConfigError {
    let line = raw.sections.get(section).copied().unwrap_or(0);
    err(line, 0, format!("missing required key {section}.{key}"))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("`{s}` is not true or false")),
    }
}

fn choice<'a, T: Copy>(options: &'a [(&'a str, T)]) -> impl Fn(&str) -> Result<T, String> + 'a {
    move |s| {
        options
            .iter()
            .find(|(name, _)| *name == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                format!("`{s}` is not one of {}", names.join(", "))
            })
    }
}

const METHODS: &[(&str, Method)] = &[("multigrid", Method::MultigridCg), ("sor", Method::Sor)];
const PARAMETERS: &[(&str, SweepParameter)] = &[
    ("alpha", SweepParameter::Alpha),
    ("b", SweepParameter::B),
    ("center_voltage", SweepParameter::CenterVoltage),
];
const QUANTITIES: &[(&str, SweepQuantity)] = &[
    ("eta", SweepQuantity::Eta),
    ("anharmonicity", SweepQuantity::Anharmonicity),
    ("depth", SweepQuantity::Depth),
    ("sigma_z", SweepQuantity::SigmaZ),
    ("theta", SweepQuantity::Theta),
];
const RADII: &[(&str, SweepRadius)] = &[("eighth", SweepRadius::Eighth), ("rmax", SweepRadius::Rmax)];
const ENDCAPS: &[(&str, EndcapLength)] = &[("fixed", EndcapLength::Fixed), ("five_leff", EndcapLength::FiveLeff)];

fn name_of<T: PartialEq>(options: &[(&'static str, T)], v: &T) -> &'static str {
    options.iter().find(|(_, o)| o == v).map(|(n, _)| *n).expect("every variant is named")
}

fn lex(text: &str) -> Result<Raw, ConfigError> {
    let mut raw = Raw { entries: HashMap::new(), sections: HashMap::new() };
    let mut current: Option<(&'static str, &'static [&'static str])> = None;
    for (idx, line) in text.lines().enumerate() {
        let ln = idx + 1;
        let body = line.trim_start();
        let indent = line.chars().count() - body.chars().count();
        let body = body.trim_end();
        if body.is_empty() || body.starts_with('#') || body.starts_with(';') {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(ln, indent + body.chars().count(), "expected `]` closing the section header"))?
                .trim();
            let (sec, keys) = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| err(ln, indent + 2, format!("unknown section [{name}]")))?;
            if raw.sections.insert(sec, ln).is_some() {
                return Err(err(ln, indent + 1, format!("section [{name}] appears twice")));
            }
            current = Some((sec, keys));
            continue;
        }
        let eq = body.find('=').ok_or_else(|| err(ln, indent + 1, "expected `key = value`"))?;
        let key = body[..eq].trim_end();
        if key.is_empty() {
            return Err(err(ln, indent + 1, "missing key before `=`"));
        }
        let (sec, keys) = current.ok_or_else(|| err(ln, indent + 1, "key outside of any section"))?;
        let key = keys
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| err(ln, indent + 1, format!("unknown key `{key}` in [{sec}]")))?;
        let after = &body[eq + 1..];
        let value = after.trim_start();
        let column = indent + body[..eq + 1].chars().count() + (after.chars().count() - value.chars().count()) + 1;
        if value.is_empty() {
            return Err(err(ln, column, format!("{sec}.{key} has no value")));
        }
        let entry = Entry { value: value.to_string(), line: ln, column };
        if raw.entries.insert((sec, key), entry).is_some() {
            return Err(err(ln, indent + 1, format!("{sec}.{key} is set twice")));
        }
    }
    Ok(raw)
}

impl DesignFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw = lex(text)?;
        let geometry = GeometryUm {
            a: raw.required("geometry", "a")?,
            d: raw.required("geometry", "d")?,
            w: raw.required("geometry", "w")?,
            b: raw.required("geometry", "b")?,
            c: raw.number("geometry", "c")?.unwrap_or(DEFAULT_ENDCAP_LENGTH_UM),
            g: raw.required("geometry", "g")?,
            h: raw.number("geometry", "h")?.unwrap_or(DEFAULT_CANTILEVER_LENGTH_UM),
        };
        let offsets = raw
            .parsed("drive", "center_offsets", |s| {
                let v: Vec<f64> = s.split(',').map(|p| parse_f64(p.trim())).collect::<Result<_, _>>()?;
                <[f64; 4]>::try_from(v).map_err(|v| format!("expected 4 values, got {}", v.len()))
            })?
            .unwrap_or([0.0; 4]);
        let drive = DriveBlock {
            v0: raw.required("drive", "V0")?,
            f_rf_mhz: raw.required("drive", "f_RF")?,
            u0: raw.required("drive", "U0")?,
            center_offsets: offsets,
        };
        let ion = IonBlock {
            mass_amu: raw.number("ion", "mass_amu")?.unwrap_or(CD111_MASS_AMU),
            charge: raw
                .parsed("ion", "charge", |s| s.parse::<u32>().map_err(|_| format!("`{s}` is not a charge number")))?
                .unwrap_or(1),
        };
        let material = if raw.has_section("material") {
            let m = "material";
            Some(MaterialBlock {
                youngs_modulus_gpa: raw.required(m, "youngs_modulus_gpa")?,
                density_g_cm3: raw.required(m, "density_g_cm3")?,
                resistivity_ohm_m: raw.required(m, "resistivity_ohm_m")?,
                loss_tangent: raw.required(m, "loss_tangent")?,
                series_resistance_ohm: raw.required(m, "series_resistance_ohm")?,
                capacitance_pf: raw.required(m, "capacitance_pf")?,
                temperature_k: raw.required(m, "temperature_k")?,
                breakdown_v_per_um: raw
                    .number(m, "breakdown_v_per_um")?
                    .unwrap_or(iontrap::engineering::BREAKDOWN_SEMICONDUCTOR),
                ion_distance_um: raw.number(m, "ion_distance_um")?,
                secular_mhz: raw.number(m, "secular_mhz")?,
                target_heating_rate: raw.number(m, "target_heating_rate")?,
            })
        } else {
            None
        };
        let d = SolverBlock::default();
        let s = "solver";
        let solver = SolverBlock {
            box_factor: raw.number(s, "box_factor")?.unwrap_or(d.box_factor),
            grid_scale: raw.number(s, "grid_scale")?.unwrap_or(d.grid_scale),
            stretch: raw.number(s, "stretch")?.or(d.stretch),
            tol: raw.number(s, "tol")?.unwrap_or(d.tol),
            max_iters: raw
                .parsed(s, "max_iters", |v| v.parse::<usize>().map_err(|_| format!("`{v}` is not a count")))?
                .unwrap_or(d.max_iters),
            method: raw.parsed(s, "method", choice(METHODS))?.unwrap_or(d.method),
            richardson: raw.parsed(s, "richardson", parse_bool)?.unwrap_or(d.richardson),
            thin_electrodes: raw.parsed(s, "thin_electrodes", parse_bool)?.unwrap_or(d.thin_electrodes),
            sigma_z: raw.parsed(s, "sigma_z", parse_bool)?.unwrap_or(d.sigma_z),
        };
        let positive = |key: &'static str| -> Result<Option<f64>, ConfigError> {
            raw.parsed("override", key, |v| {
                let x = parse_f64(v)?;
                if x > 0.0 {
                    Ok(x)
                } else {
                    Err(format!("`{v}` must be positive"))
                }
            })
        };
        let overrides = OverrideBlock {
            eta: positive("eta")?,
            epsilon: raw.number("override", "epsilon")?,
            kappa: positive("kappa")?,
            l_eff_um: positive("l_eff_um")?,
            d_eff_um: positive("d_eff_um")?,
        };
        let sweep = if raw.has_section("sweep") {
            let w = "sweep";
            let parameter = raw.parsed(w, "parameter", choice(PARAMETERS))?.ok_or_else(|| missing(&raw, w, "parameter"))?;
            let quantity = raw.parsed(w, "quantity", choice(QUANTITIES))?.ok_or_else(|| missing(&raw, w, "quantity"))?;
            let allowed = match parameter {
                SweepParameter::Alpha => matches!(
                    quantity,
                    SweepQuantity::Eta | SweepQuantity::Anharmonicity | SweepQuantity::Depth
                ),
                SweepParameter::B => quantity == SweepQuantity::SigmaZ,
                SweepParameter::CenterVoltage => quantity == SweepQuantity::Theta,
            };
            if !allowed {
                let e = raw.get(w, "quantity").expect("quantity was parsed");
                return Err(err(
                    e.line,
                    e.column,
                    format!("quantity `{}` cannot be swept over `{}`", e.value, name_of(PARAMETERS, &parameter)),
                ));
            }
            Some(SweepBlock {
                parameter,
                quantity,
                from: raw.required(w, "from")?,
                to: raw.required(w, "to")?,
                steps: raw
                    .parsed(w, "steps", |v| v.parse::<usize>().map_err(|_| format!("`{v}` is not a count")))?
                    .ok_or_else(|| missing(&raw, w, "steps"))?,
                delta: raw.number(w, "delta")?,
                radius: raw.parsed(w, "radius", choice(RADII))?.unwrap_or(SweepRadius::Eighth),
                endcap: raw.parsed(w, "endcap", choice(ENDCAPS))?.unwrap_or_default(),
            })
        } else {
            None
        };
        let file = DesignFile { geometry, drive, ion, material, solver, overrides, sweep };
        file.design().map_err(|e| err(0, 0, e.to_string()))?;
        file.material_props().map_err(|e| err(0, 0, e.to_string()))?;
        Ok(file)
    }

    pub fn design(&self) -> Result<Design, iontrap::model::ModelError> {
        let d = &self.drive;
        Ok(Design {
            geom: TrapGeometry::from_um(self.geometry)?,
            drive: DriveConfig::new(d.v0, d.f_rf_mhz, d.u0)?.with_center_offsets(d.center_offsets)?,
            ion: IonSpecies::new(self.ion.mass_amu, self.ion.charge)?,
        })
    }

    /// SI material properties, if the file has a [material] section.
    pub fn material_props(&self) -> Result<Option<MaterialProps>, iontrap::model::ModelError> {
        self.material
            .map(|m| {
                MaterialProps::new(
                    m.youngs_modulus_gpa * 1e9,
                    m.density_g_cm3 * 1e3,
                    m.resistivity_ohm_m,
                    m.loss_tangent,
                    m.series_resistance_ohm,
                    m.capacitance_pf * 1e-12,
                    m.temperature_k,
                )
            })
            .transpose()
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.solver;
        SolveOptions {
            box_factor: s.box_factor,
            grid_scale: s.grid_scale,
            stretch: s.stretch,
            solver: SolverConfig { method: s.method, tol: s.tol, max_iters: s.max_iters },
            richardson: s.richardson,
        }
    }

    /// Canonical text with every value spelled out; parses back to `self`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let g = &self.geometry;
        let _ = writeln!(out, "[geometry]");
        for (k, v) in [("a", g.a), ("d", g.d), ("w", g.w), ("b", g.b), ("c", g.c), ("g", g.g), ("h", g.h)] {
            let _ = writeln!(out, "{k} = {v:?}");
        }
        let d = &self.drive;
        let _ = writeln!(out, "\n[drive]\nV0 = {:?}\nf_RF = {:?}\nU0 = {:?}", d.v0, d.f_rf_mhz, d.u0);
        let offs: Vec<String> = d.center_offsets.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "center_offsets = {}", offs.join(", "));
        let _ = writeln!(out, "\n[ion]\nmass_amu = {:?}\ncharge = {}", self.ion.mass_amu, self.ion.charge);
        if let Some(m) = &self.material {
            let _ = writeln!(out, "\n[material]");
            for (k, v) in [
                ("youngs_modulus_gpa", m.youngs_modulus_gpa),
                ("density_g_cm3", m.density_g_cm3),
                ("resistivity_ohm_m", m.resistivity_ohm_m),
                ("loss_tangent", m.loss_tangent),
                ("series_resistance_ohm", m.series_resistance_ohm),
                ("capacitance_pf", m.capacitance_pf),
                ("temperature_k", m.temperature_k),
                ("breakdown_v_per_um", m.breakdown_v_per_um),
            ] {
                let _ = writeln!(out, "{k} = {v:?}");
            }
            for (k, v) in [
                ("ion_distance_um", m.ion_distance_um),
                ("secular_mhz", m.secular_mhz),
                ("target_heating_rate", m.target_heating_rate),
            ] {
                if let Some(v) = v {
                    let _ = writeln!(out, "{k} = {v:?}");
                }
            }
        }
        let s = &self.solver;
        let _ = writeln!(
            out,
            "\n[solver]\nbox_factor = {:?}\ngrid_scale = {:?}",
            s.box_factor, s.grid_scale
        );
        if let Some(st) = s.stretch {
            let _ = writeln!(out, "stretch = {st:?}");
        }
        let _ = writeln!(
            out,
            "tol = {:?}\nmax_iters = {}\nmethod = {}\nrichardson = {}\nthin_electrodes = {}\nsigma_z = {}",
            s.tol,
            s.max_iters,
            name_of(METHODS, &s.method),
            s.richardson,
            s.thin_electrodes,
            s.sigma_z
        );
        if self.overrides != OverrideBlock::default() {
            let _ = writeln!(out, "\n[override]");
            for (k, v) in self.overrides.entries() {
                if let Some(v) = v {
                    let _ = writeln!(out, "{k} = {v:?}");
                }
            }
        }
        if let Some(w) = &self.sweep {
            let _ = writeln!(
                out,
                "\n[sweep]\nparameter = {}\nquantity = {}\nfrom = {:?}\nto = {:?}\nsteps = {}",
                name_of(PARAMETERS, &w.parameter),
                name_of(QUANTITIES, &w.quantity),
                w.from,
                w.to,
                w.steps
            );
            if let Some(dl) = w.delta {
                let _ = writeln!(out, "delta = {dl:?}");
            }
            let _ = writeln!(out, "radius = {}\nendcap = {}", name_of(RADII, &w.radius), name_of(ENDCAPS, &w.endcap));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROW2: &str = "\
# second reference design
[geometry]
a = 40
d = 2
w = 2
b = 100
g = 2

[drive]
V0 = 20
f_RF = 50
U0 = 1
";

    #[test]
    fn minimal_file_uses_defaults() {
        let f = DesignFile::parse(ROW2).unwrap();
        assert_eq!(f.geometry.c, DEFAULT_ENDCAP_LENGTH_UM);
        assert_eq!(f.ion.charge, 1);
        assert_eq!(f.drive.center_offsets, [0.0; 4]);
        assert!(f.material.is_none() && f.sweep.is_none());
        assert!(!f.overrides.replaces_solves());
        assert_eq!(f.solver, SolverBlock::default());
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = ROW2.replace("g = 2", "g = 2\n  gap = 3");
        let e = DesignFile::parse(&text).unwrap_err();
        assert_eq!((e.line, e.column), (8, 3));
        assert!(e.message.contains("unknown key `gap`"));
    }

    #[test]
    fn bad_value_points_at_value() {
        let e = DesignFile::parse(&ROW2.replace("b = 100", "b =  1x0")).unwrap_err();
        assert_eq!((e.line, e.column), (6, 6));
    }

    #[test]
    fn missing_and_duplicate_keys() {
        let e = DesignFile::parse(&ROW2.replace("U0 = 1\n", "")).unwrap_err();
        assert!(e.message.contains("drive.U0"), "{e}");
        let e = DesignFile::parse(&ROW2.replace("d = 2", "d = 2\nd = 3")).unwrap_err();
        assert_eq!(e.line, 5);
        let e = DesignFile::parse("[geometri]\n").unwrap_err();
        assert_eq!((e.line, e.column), (1, 2));
        let e = DesignFile::parse("a = 1\n").unwrap_err();
        assert!(e.message.contains("outside"));
    }

    #[test]
    fn invalid_physics_rejected() {
        assert!(DesignFile::parse(&ROW2.replace("d = 2", "d = -2")).is_err());
        let e = DesignFile::parse(&format!("{ROW2}[override]\nkappa = -0.3\n")).unwrap_err();
        assert_eq!((e.line, e.column), (14, 9));
    }

    #[test]
    fn sweep_values_and_pairing() {
        let text = format!("{ROW2}\n[sweep]\nparameter = alpha\nquantity = eta\nfrom = 2\nto = 40\nsteps = 3\n");
        let f = DesignFile::parse(&text).unwrap();
        assert_eq!(f.sweep.unwrap().values().unwrap(), vec![2.0, 21.0, 40.0]);
        let empty = DesignFile::parse(&text.replace("steps = 3", "steps = 0")).unwrap();
        assert!(empty.sweep.unwrap().values().is_none());
        let bad = text.replace("quantity = eta", "quantity = theta");
        assert!(DesignFile::parse(&bad).is_err());
    }

    #[test]
    fn dump_round_trips() {
        let text = format!(
            "{ROW2}center_offsets = 0.1, 0, -0.1, 0\n[material]\nyoungs_modulus_gpa = 85.5\ndensity_g_cm3 = 5.31\n\
             resistivity_ohm_m = 1e-7\nloss_tangent = 0.0002\nseries_resistance_ohm = 10\ncapacitance_pf = 10\n\
             temperature_k = 300\nion_distance_um = 20\n[solver]\nstretch = 1.05\nmethod = sor\n\
             [override]\nkappa = 0.3\nd_eff_um = 59\n\
             [sweep]\nparameter = b\nquantity = sigma_z\nfrom = 50\nto = 200\nsteps = 4\nendcap = five_leff\n"
        );
        let f = DesignFile::parse(&text).unwrap();
        let again = DesignFile::parse(&f.dump()).unwrap();
        assert_eq!(f, again);
        assert_eq!(f.dump(), again.dump());
    }
}
