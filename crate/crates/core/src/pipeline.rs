//! End-to-end analyses built from the field solvers: numerical η, static
//! κ/ε with a Richardson estimate, σ_z, principal-axis rotation, full
//! characterization and the parameter sweeps.

use thiserror::Error;

use crate::laplace2d::{self, FieldError, GridSpec2D, LayoutOptions2D, RfDrive, ScalarField2D};
use crate::laplace3d::{
    self, CenterHessian, ElectrodeVolts, GridSpec3D, LayoutOptions3D, ScalarField3D,
};
use crate::model::{DriveConfig, GeometryUm, IonSpecies, ModelError, TrapGeometry};
use crate::multipole::{self, AnharmonicityReport, DepthReport, MultipoleError, RadiusChoice};
use crate::solver::SolverConfig;
use crate::trapchar::{self, StaticCharacterization, DesignRow, TrapCharacterization, TrapError};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error("2D field stage: {0}")]
    Field2D(FieldError),
    #[error("3D field stage: {0}")]
    Field3D(FieldError),
    #[error("multipole stage: {0}")]
    Multipole(#[from] MultipoleError),
    #[error("characterization stage: {0}")]
    Trap(#[from] TrapError),
}

impl Error {
    /// Short name of the failing stage.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::Model(_) => "model",
            Error::Field2D(_) => "solve2d",
            Error::Field3D(_) => "solve3d",
            Error::Multipole(_) => "multipole",
            Error::Trap(_) => "trapchar",
        }
    }
}

/// Grid, box and solver settings shared by every analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Box half-width beyond the electrodes, in units of a.
    pub box_factor: f64,
    /// Multiplies the automatic core spacing (below 1 is finer).
    pub grid_scale: f64,
    /// Graded-region ratio before scaling; `None` keeps the default.
    pub stretch: Option<f64>,
    pub solver: SolverConfig,
    /// Combine the 3D static result with one on a grid twice as coarse.
    pub richardson: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            box_factor: laplace3d::DEFAULT_BOX_FACTOR,
            grid_scale: 1.0,
            stretch: None,
            solver: SolverConfig::default(),
            richardson: false,
        }
    }
}

impl SolveOptions {
    pub fn grid_2d(&self, geom: &TrapGeometry, thin: bool) -> GridSpec2D {
        let mut g = GridSpec2D::auto(geom, thin);
        if let Some(s) = self.stretch {
            g.stretch = s;
        }
        g.h = g.h.map(|h| h * self.grid_scale);
        g.stretch = g.stretch.powf(self.grid_scale);
        g.solver = self.solver;
        g
    }

    pub fn grid_3d(&self, geom: &TrapGeometry) -> GridSpec3D {
        let mut g = GridSpec3D::auto(geom);
        if let Some(s) = self.stretch {
            g.stretch = s;
        }
        let mut g = g.scaled(self.grid_scale);
        g.solver = self.solver;
        g
    }

    pub fn layout_2d(&self, geom: &TrapGeometry, thin: bool, drive: RfDrive) -> LayoutOptions2D {
        LayoutOptions2D { box_half: Some(self.box_factor * geom.um().a), thin, drive }
    }

    pub fn layout_3d(&self, geom: &TrapGeometry) -> LayoutOptions3D {
        let g = geom.um();
        let far = self.box_factor * g.a;
        LayoutOptions3D { box_half: Some([far, far, g.b / 2.0 + g.g + g.c + far]) }
    }
}

/// RF cross-section solved with the balanced drive at the design's V₀.
pub fn solve_cross_section(
    geom: &TrapGeometry,
    drive: &DriveConfig,
    thin: bool,
    opts: &SolveOptions,
) -> Result<ScalarField2D, Error> {
    let layout = laplace2d::build_layout_2d(geom, drive, &opts.layout_2d(geom, thin, RfDrive::Balanced))
        .map_err(Error::Field2D)?;
    laplace2d::solve_laplace_2d(&layout, &opts.grid_2d(geom, thin)).map_err(Error::Field2D)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialAnalysis {
    pub eta: f64,
    /// Ratios at r₀ = a/8.
    pub at_eighth: AnharmonicityReport,
    /// Ratios at r₀ = r_max.
    pub at_rmax: AnharmonicityReport,
    pub depth: DepthReport,
}

/// η, anharmonicity and depth from one cross-section solve.
pub fn radial_analysis(
    geom: &TrapGeometry,
    drive: &DriveConfig,
    ion: &IonSpecies,
    thin: bool,
    opts: &SolveOptions,
) -> Result<RadialAnalysis, Error> {
    let field = solve_cross_section(geom, drive, thin, opts)?;
    radial_from_field(&field, geom, drive, ion)
}

pub fn radial_from_field(
    field: &ScalarField2D,
    geom: &TrapGeometry,
    drive: &DriveConfig,
    ion: &IonSpecies,
) -> Result<RadialAnalysis, Error> {
    let at_eighth = multipole::anharmonicity_report(field, geom, drive.v0, RadiusChoice::EighthOfTip)?;
    let at_rmax = multipole::anharmonicity_report(field, geom, drive.v0, RadiusChoice::Rmax)?;
    let depth = multipole::trap_depth_and_rmax(field, geom, drive, ion)?;
    Ok(RadialAnalysis {
        eta: multipole::eta(&at_eighth.expansion, geom),
        at_eighth,
        at_rmax,
        depth,
    })
}

/// Static end-cap field with 1 V on every end-cap.
pub fn solve_static(geom: &TrapGeometry, grid: &GridSpec3D, opts: &SolveOptions) -> Result<ScalarField3D, Error> {
    solve_volts(geom, &ElectrodeVolts::endcaps(1.0), grid, opts)
}

fn solve_volts(
    geom: &TrapGeometry,
    volts: &ElectrodeVolts,
    grid: &GridSpec3D,
    opts: &SolveOptions,
) -> Result<ScalarField3D, Error> {
    let layout = laplace3d::build_layout_3d(geom, volts, &opts.layout_3d(geom)).map_err(Error::Field3D)?;
    laplace3d::solve_laplace_3d(&layout, grid).map_err(Error::Field3D)
}

/// Fit window on a grid: the default, widened so every axis keeps at
/// least three nodes on each side.
fn fit_window(geom: &TrapGeometry, field: &ScalarField3D) -> f64 {
    let h = field.core_spacing();
    let hmax = h.iter().copied().fold(0.0, f64::max);
    laplace3d::default_fit_window(geom).max(3.0 * hmax * (1.0 + 1e-9))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticAnalysis {
    /// Best estimate (Richardson-extrapolated when enabled).
    pub kappa: f64,
    pub epsilon: f64,
    /// |fine − coarse|/3; `None` without a coarse solve.
    pub kappa_error: Option<f64>,
    pub epsilon_error: Option<f64>,
    /// Result on the finest grid alone.
    pub fine: StaticCharacterization,
    /// Hessian per end-cap volt on the finest grid (V/µm² per V).
    pub hessian: CenterHessian,
}

impl StaticAnalysis {
    /// |D_x + D_y + D_z| / |D_z| on the finest grid.
    pub fn trace_ratio(&self) -> f64 {
        (self.hessian.trace() / self.hessian.zz).abs()
    }
}

fn static_on(geom: &TrapGeometry, grid: &GridSpec3D, opts: &SolveOptions) -> Result<(StaticCharacterization, CenterHessian), Error> {
    let field = solve_static(geom, grid, opts)?;
    let hs = laplace3d::hessian_at_center(&field, fit_window(geom, &field)).map_err(Error::Field3D)?;
    let sc = trapchar::static_characterization(&hs.normalized(1.0), geom)?;
    Ok((sc, hs))
}

/// κ and ε from the end-cap solve. With Richardson enabled a second solve
/// on a grid twice as coarse gives v + (v − v₂)/3 and an error estimate.
pub fn static_analysis(geom: &TrapGeometry, opts: &SolveOptions) -> Result<StaticAnalysis, Error> {
    let grid = opts.grid_3d(geom);
    let (fine, hessian) = static_on(geom, &grid, opts)?;
    let coarse = if opts.richardson {
        match static_on(geom, &grid.scaled(2.0), opts) {
            Ok((c, _)) => Some(c),
            Err(Error::Field3D(e @ FieldError::GapTooSmallForGrid { .. })) => {
                log::warn!("no Richardson estimate: the coarse grid does not resolve the gap ({e})");
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let Some(coarse) = coarse else {
        return Ok(StaticAnalysis {
            kappa: fine.kappa,
            epsilon: fine.epsilon,
            kappa_error: None,
            epsilon_error: None,
            fine,
            hessian,
        });
    };
    let extrapolate = |f: f64, c: f64| (f + (f - c) / 3.0, (f - c).abs() / 3.0);
    let (kappa, ke) = extrapolate(fine.kappa, coarse.kappa);
    let (epsilon, ee) = extrapolate(fine.epsilon, coarse.epsilon);
    Ok(StaticAnalysis {
        kappa,
        epsilon,
        kappa_error: Some(ke),
        epsilon_error: Some(ee),
        fine,
        hessian,
    })
}

/// σ_z from the single-ended RF field at `v0`, using `eta` from the
/// cross-section.
pub fn sigma_z_analysis(geom: &TrapGeometry, v0: f64, eta: f64, opts: &SolveOptions) -> Result<f64, Error> {
    let rf = solve_volts(geom, &ElectrodeVolts::rf(v0, RfDrive::SingleEnded), &opts.grid_3d(geom), opts)?;
    let g = geom.um();
    let window = fit_window(geom, &rf).min(g.b / 4.0);
    let hz = laplace3d::axial_pseudo_curvature(&rf, window, g.b / 2.0).map_err(Error::Field3D)?;
    Ok(trapchar::sigma_z(hz, eta, geom.l_eff() * 1e6, v0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRotation {
    /// Frame rotation removing the xy cross-term (rad).
    pub theta: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub hessian: CenterHessian,
}

/// θ, ε and λ = 2H_xy/H_zz from a static Hessian.
pub fn rotation_from_hessian(h: &CenterHessian) -> Result<AxisRotation, Error> {
    if !(h.zz > 0.0) {
        return Err(TrapError::NotAxiallyConfining { dz: h.zz }.into());
    }
    let epsilon = -h.xx / h.zz;
    let lambda = 2.0 * h.xy / h.zz;
    let theta = trapchar::principal_axis_angle(epsilon, lambda)?;
    Ok(AxisRotation { theta, epsilon, lambda, hessian: *h })
}

fn scaled_sum(a: &CenterHessian, sa: f64, b: &CenterHessian, sb: f64) -> CenterHessian {
    CenterHessian {
        xx: sa * a.xx + sb * b.xx,
        yy: sa * a.yy + sb * b.yy,
        zz: sa * a.zz + sb * b.zz,
        xy: sa * a.xy + sb * b.xy,
        xz: sa * a.xz + sb * b.xz,
        yz: sa * a.yz + sb * b.yz,
    }
}

/// Principal-axis rotation with end-caps at `u0` and `uc` on the (+x,+y)
/// and (−x,−y) centre electrodes.
pub fn numerical_axis_rotation(geom: &TrapGeometry, u0: f64, uc: f64, opts: &SolveOptions) -> Result<AxisRotation, Error> {
    offset_axis_rotation(geom, u0, [uc, 0.0, uc, 0.0], opts)
}

/// Rotation with end-caps at `u0` and arbitrary centre-electrode offsets,
/// ordered by quadrant.
pub fn offset_axis_rotation(geom: &TrapGeometry, u0: f64, offsets: [f64; 4], opts: &SolveOptions) -> Result<AxisRotation, Error> {
    if !(u0 > 0.0) {
        return Err(TrapError::NonPositiveEndcapVoltage { u0 }.into());
    }
    let mut volts = ElectrodeVolts::endcaps(u0);
    for (quadrant, v) in offsets.into_iter().enumerate() {
        volts.set(laplace3d::ElectrodeId { quadrant, segment: laplace3d::Segment::Center }, v);
    }
    let field = solve_volts(geom, &volts, &opts.grid_3d(geom), opts)?;
    let hs = laplace3d::hessian_at_center(&field, fit_window(geom, &field)).map_err(Error::Field3D)?;
    rotation_from_hessian(&hs)
}

/// Hessians per volt of the end-caps and of the rotating centre pair. The
/// Hessian is linear in the voltages, so any (U₀, U_c) follows by
/// superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationBasis {
    pub endcap: CenterHessian,
    pub pair: CenterHessian,
}

impl RotationBasis {
    pub fn solve(geom: &TrapGeometry, opts: &SolveOptions) -> Result<Self, Error> {
        let grid = opts.grid_3d(geom);
        let hess = |v: ElectrodeVolts| -> Result<CenterHessian, Error> {
            let f = solve_volts(geom, &v, &grid, opts)?;
            laplace3d::hessian_at_center(&f, fit_window(geom, &f)).map_err(Error::Field3D)
        };
        Ok(RotationBasis {
            endcap: hess(ElectrodeVolts::endcaps(1.0))?,
            pair: hess(ElectrodeVolts::rotation_study(0.0, 1.0))?,
        })
    }

    pub fn at(&self, u0: f64, uc: f64) -> Result<AxisRotation, Error> {
        if !(u0 > 0.0) {
            return Err(TrapError::NonPositiveEndcapVoltage { u0 }.into());
        }
        rotation_from_hessian(&scaled_sum(&self.endcap, u0, &self.pair, uc))
    }
}

/// One trap design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design {
    pub geom: TrapGeometry,
    pub drive: DriveConfig,
    pub ion: IonSpecies,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Characterized {
    pub chr: TrapCharacterization,
    pub row: DesignRow,
    pub radial: RadialAnalysis,
    pub statics: StaticAnalysis,
}

/// η from the thick-electrode cross-section, κ and ε from the 3D end-cap
/// solve, then the net frequencies. σ_z is evaluated on request; θ and ε′
/// whenever the drive carries centre-electrode offsets.
pub fn characterize(design: &Design, opts: &SolveOptions, with_sigma_z: bool) -> Result<Characterized, Error> {
    let Design { geom, drive, ion } = *design;
    let radial = radial_analysis(&geom, &drive, &ion, false, opts)?;
    let statics = static_analysis(&geom, opts)?;
    let row = DesignRow {
        geom,
        drive,
        ion,
        eta: radial.eta,
        epsilon: statics.epsilon,
        kappa: statics.kappa,
        l_eff_um: None,
        d_eff_um: None,
    };
    let mut chr = trapchar::characterize_row(&row)?.chr;
    chr.r_max = Some(radial.depth.r_max);
    chr.depth = Some(radial.depth.depth_k);
    if with_sigma_z {
        chr.sigma_z = Some(sigma_z_analysis(&geom, drive.v0, radial.eta, opts)?);
    }
    if drive.center_offsets.iter().any(|v| *v != 0.0) {
        let rot = offset_axis_rotation(&geom, drive.u0, drive.center_offsets, opts)?;
        chr.theta_principal = rot.theta;
        chr.epsilon_prime = trapchar::rotated_anisotropy(rot.epsilon, rot.lambda, rot.theta);
    }
    Ok(Characterized { chr, row, radial, statics })
}

/// Geometry with d = a/α and w = d/δ, other dimensions kept.
pub fn geometry_at(base: &TrapGeometry, alpha: f64, delta: f64) -> Result<TrapGeometry, Error> {
    let g = base.um();
    let d = g.a / alpha;
    Ok(TrapGeometry::from_um(GeometryUm { d, w: d / delta, ..g })?)
}

/// `alpha,delta,eta` row.
pub fn eta_point(design: &Design, alpha: f64, delta: f64, thin: bool, opts: &SolveOptions) -> Result<[f64; 3], Error> {
    let geom = geometry_at(&design.geom, alpha, delta)?;
    let field = solve_cross_section(&geom, &design.drive, thin, opts)?;
    let e = multipole::expand(&field, design.drive.v0, geom.um().a / 8.0, multipole::DEFAULT_ORDER)?;
    Ok([alpha, delta, multipole::eta(&e, &geom)])
}

/// `alpha,delta,ratio_S4,ratio_C6,ratio_S8` row at the requested radius.
pub fn anharmonicity_point(
    design: &Design,
    alpha: f64,
    delta: f64,
    choice: RadiusChoice,
    opts: &SolveOptions,
) -> Result<[f64; 5], Error> {
    let geom = geometry_at(&design.geom, alpha, delta)?;
    let field = solve_cross_section(&geom, &design.drive, false, opts)?;
    let r = multipole::anharmonicity_report(&field, &geom, design.drive.v0, choice)?;
    Ok([alpha, delta, r.ratio_s4, r.ratio_c6, r.ratio_s8])
}

/// `alpha,delta,scaled_depth_K_um2_per_V2,r_max_um` row (111Cd at 50 MHz).
pub fn depth_point(design: &Design, alpha: f64, delta: f64, opts: &SolveOptions) -> Result<[f64; 4], Error> {
    let geom = geometry_at(&design.geom, alpha, delta)?;
    let field = solve_cross_section(&geom, &design.drive, false, opts)?;
    let d = multipole::trap_depth_and_rmax(&field, &geom, &design.drive, &design.ion)?;
    Ok([alpha, delta, d.scaled_depth_reference, d.r_max])
}

/// How the end-cap length follows the centre length in σ_z sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EndcapLength {
    /// Keep the design's c.
    #[default]
    Fixed,
    /// c = 5ℓ_eff.
    FiveLeff,
}

/// `b_um,sigma_z` row; η comes from the design's cross-section.
pub fn sigma_z_point(design: &Design, b: f64, eta: f64, endcap: EndcapLength, opts: &SolveOptions) -> Result<[f64; 2], Error> {
    let mut g = design.geom.um();
    g.b = b;
    if endcap == EndcapLength::FiveLeff {
        g.c = 5.0 * design.geom.l_eff() * 1e6;
    }
    let geom = TrapGeometry::from_um(g)?;
    Ok([b, sigma_z_analysis(&geom, design.drive.v0, eta, opts)?])
}

/// `center_voltage_V,theta_rad,theta_deg,epsilon,lambda` row.
pub fn rotation_row(basis: &RotationBasis, u0: f64, uc: f64) -> Result<[f64; 5], Error> {
    let r = basis.at(u0, uc)?;
    Ok([uc, r.theta, r.theta.to_degrees(), r.epsilon, r.lambda])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> TrapGeometry {
        TrapGeometry::from_um(GeometryUm { a: 16.0, d: 4.0, w: 4.0, b: 24.0, c: 16.0, g: 4.0, h: 10.0 }).unwrap()
    }

    fn quick() -> SolveOptions {
        SolveOptions { box_factor: 2.0, grid_scale: 2.0, richardson: false, ..Default::default() }
    }

    #[test]
    fn geometry_at_keeps_a_and_sets_ratios() {
        let g = geometry_at(&geom(), 8.0, 2.0).unwrap();
        assert!((g.alpha() - 8.0).abs() < 1e-12);
        assert!((g.delta() - 2.0).abs() < 1e-12);
        assert_eq!(g.um().a, 16.0);
    }

    #[test]
    fn rotation_basis_superposes_direct_solve() {
        let opts = quick();
        let basis = RotationBasis::solve(&geom(), &opts).unwrap();
        let direct = numerical_axis_rotation(&geom(), 2.0, 0.3, &opts).unwrap();
        let sup = basis.at(2.0, 0.3).unwrap();
        assert!((direct.theta - sup.theta).abs() < 1e-6 * direct.theta.abs().max(1e-3));
        assert!(basis.at(1.0, 0.0).unwrap().theta.abs() < 1e-12);
    }

    #[test]
    fn stage_names() {
        let e: Error = TrapError::DegenerateRotation.into();
        assert_eq!(e.stage(), "trapchar");
        assert_eq!(Error::Field3D(FieldError::InvalidGrid(String::new())).stage(), "solve3d");
    }
}
