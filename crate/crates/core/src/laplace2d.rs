//! Transverse (z = 0) RF potential amplitude.
//!
//! Coordinates are micrometres with the trap centre at the origin, which is
//! always a grid node. Layer inner faces sit at y = ±d/2 and the cantilever
//! tips at x = ±a/2. The grid is uniform around the electrodes and grows
//! geometrically towards the grounded box.

use std::io::{self, Write};

use thiserror::Error;

use crate::csvfmt::num;
use crate::grid::{self, DEFAULT_STRETCH};
use crate::model::{DriveConfig, TrapGeometry};
use crate::solver::{self, Lattice, SolveError, SolveStats, SolverConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("bounding box half-width {half_um} µm is smaller than a = {a_um} µm (box must be at least 2a across)")]
    BoundingBoxTooSmall { half_um: f64, a_um: f64 },
    #[error("electrode {index} spans fewer than 2 grid cells along {axis}")]
    ElectrodeTooNarrow { index: usize, axis: char },
    #[error("electrode {index} does not contain any grid node")]
    ElectrodeNotResolved { index: usize },
    #[error("gap of {gap_um} µm leaves no vacuum node at axial spacing {h_um} µm")]
    GapTooSmallForGrid { gap_um: f64, h_um: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("point ({x}, {y}, {z}) µm lies outside the grid")]
    OutOfDomain { x: f64, y: f64, z: f64 },
    #[error("fit window of {window_um} µm touches a non-vacuum node")]
    FitWindowOutsideVacuumRegion { window_um: f64 },
    #[error("fit window of {window_um} µm reaches the gap at {gap_start_um} µm")]
    FitWindowSpansGap { window_um: f64, gap_start_um: f64 },
    #[error("field solve failed: {0}")]
    Solve(#[from] SolveError),
}

/// How the RF amplitude is distributed over the two diagonal pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RfDrive {
    /// +V₀/2 on the (+x,+y)/(−x,−y) pair, −V₀/2 on the other pair.
    #[default]
    Balanced,
    /// V₀ on the (+x,+y)/(−x,−y) pair, the other pair grounded.
    SingleEnded,
}

impl RfDrive {
    /// Potentials of the (+x,+y)/(−x,−y) pair and of the other pair.
    pub fn pair_potentials(self, v0: f64) -> (f64, f64) {
        match self {
            RfDrive::Balanced => (0.5 * v0, -0.5 * v0),
            RfDrive::SingleEnded => (v0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    /// µm, inclusive bounds.
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub potential: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeLayout2D {
    pub rects: Vec<Rect>,
    /// Half-widths of the grounded bounding box (µm).
    pub half_extent: [f64; 2],
    /// Half-widths of the uniformly resolved region around the electrode
    /// edges (µm).
    pub core_half: [f64; 2],
    /// Electrodes are single node rows (zero thickness).
    pub thin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutOptions2D {
    /// Half-width of the bounding box in µm; `None` means
    /// [`DEFAULT_BOX_FACTOR`]·a.
    pub box_half: Option<f64>,
    pub thin: bool,
    pub drive: RfDrive,
}

impl Default for LayoutOptions2D {
    fn default() -> Self {
        LayoutOptions2D {
            box_half: None,
            thin: false,
            drive: RfDrive::Balanced,
        }
    }
}

/// Default box half-width in units of a. Doubling it from here moves η,
/// the depth and r_max by well under 2 %.
pub const DEFAULT_BOX_FACTOR: f64 = 16.0;

pub fn build_layout_2d(geom: &TrapGeometry, drive: &DriveConfig, opts: &LayoutOptions2D) -> Result<ElectrodeLayout2D, FieldError> {
    let g = geom.um();
    let half = opts.box_half.unwrap_or(DEFAULT_BOX_FACTOR * g.a);
    if !(half >= g.a) {
        return Err(FieldError::BoundingBoxTooSmall { half_um: half, a_um: g.a });
    }
    let top = if opts.thin { g.d / 2.0 } else { g.d / 2.0 + g.w };
    if top >= half {
        return Err(FieldError::BoundingBoxTooSmall { half_um: half, a_um: g.a });
    }
    let (va, vb) = opts.drive.pair_potentials(drive.v0);
    let mut rects = Vec::with_capacity(4);
    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
        let xs = if sx > 0.0 { [g.a / 2.0, half] } else { [-half, -g.a / 2.0] };
        let ys = if sy > 0.0 { [g.d / 2.0, top] } else { [-top, -g.d / 2.0] };
        let potential = if sx * sy > 0.0 { va } else { vb };
        rects.push(Rect { x: xs, y: ys, potential });
    }
    let margin = 4.0 * g.d.max(if opts.thin { 0.0 } else { g.w });
    let core_half = [(0.75 * g.a).min(half), (top + margin).max(0.75 * g.a).min(half)];
    Ok(ElectrodeLayout2D {
        rects,
        half_extent: [half, half],
        core_half,
        thin: opts.thin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec2D {
    /// Node spacing (µm) along x and y inside the core region.
    pub h: [f64; 2],
    /// Largest neighbouring-cell ratio outside the core; 1 gives a uniform
    /// grid.
    pub stretch: f64,
    pub solver: SolverConfig,
}

impl GridSpec2D {
    /// Spacing resolving the thinnest feature with eight cells, and the
    /// thin-electrode row on a node.
    pub fn auto(geom: &TrapGeometry, thin: bool) -> Self {
        let g = geom.um();
        let feature = if thin { (g.d).min(g.a / 8.0) } else { g.w.min(g.d).min(g.a / 8.0) };
        let h = feature / 8.0;
        GridSpec2D {
            h: [h, h],
            stretch: DEFAULT_STRETCH,
            solver: SolverConfig::default(),
        }
    }

    /// Uniform grid with spacing `h`.
    pub fn uniform(h: [f64; 2]) -> Self {
        GridSpec2D {
            h,
            stretch: 1.0,
            solver: SolverConfig::default(),
        }
    }

    /// Every cell split in two (the ratio of the graded region becomes its
    /// square root).
    pub fn halved(&self) -> Self {
        GridSpec2D {
            h: [self.h[0] / 2.0, self.h[1] / 2.0],
            stretch: self.stretch.sqrt(),
            solver: self.solver,
        }
    }

    pub fn doubled(&self) -> Self {
        GridSpec2D {
            h: [self.h[0] * 2.0, self.h[1] * 2.0],
            stretch: self.stretch * self.stretch,
            solver: self.solver,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Vacuum,
    /// Index into the layout's electrode list.
    Electrode(u16),
    Boundary,
}

impl NodeKind {
    pub fn code(self) -> u8 {
        match self {
            NodeKind::Vacuum => 0,
            NodeKind::Electrode(_) => 1,
            NodeKind::Boundary => 2,
        }
    }

    pub fn is_vacuum(self) -> bool {
        self == NodeKind::Vacuum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub nx: usize,
    pub ny: usize,
    /// Node positions along x and y (µm).
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    pub mask: Vec<NodeKind>,
    pub stats: SolveStats,
}

pub fn solve_laplace_2d(layout: &ElectrodeLayout2D, grid: &GridSpec2D) -> Result<ScalarField2D, FieldError> {
    let [hx, hy] = grid.h;
    if !(hx > 0.0 && hy > 0.0 && grid.stretch.is_finite()) {
        return Err(FieldError::InvalidGrid(format!("spacing must be positive, got {hx} × {hy}")));
    }
    let axis = |a: usize, h: f64| {
        grid::symmetric_axis(&grid::half_axis(h, layout.core_half[a], layout.half_extent[a], grid.stretch))
    };
    let (xs, ys) = (axis(0, hx), axis(1, hy));
    let (nx, ny) = (xs.len(), ys.len());
    let mut mask = vec![NodeKind::Vacuum; nx * ny];
    let mut values = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
                mask[j * nx + i] = NodeKind::Boundary;
            }
        }
    }
    // Electrodes run to the real box edge; the grid edge may lie further out.
    let grid_half = [xs[nx - 1], ys[ny - 1]];
    for (index, r) in layout.rects.iter().enumerate() {
        let extend = |b: [f64; 2], half: f64, edge: f64| {
            let lo = if (b[0] + half).abs() < 1e-9 * half { -edge } else { b[0] };
            let hi = if (b[1] - half).abs() < 1e-9 * half { edge } else { b[1] };
            [lo, hi]
        };
        let bx = extend(r.x, layout.half_extent[0], grid_half[0]);
        let by = extend(r.y, layout.half_extent[1], grid_half[1]);
        let (Some((i0, i1)), Some((j0, j1))) = (grid::span(&xs, bx), grid::span(&ys, by)) else {
            return Err(FieldError::ElectrodeNotResolved { index });
        };
        if i1 - i0 < 2 {
            return Err(FieldError::ElectrodeTooNarrow { index, axis: 'x' });
        }
        if !layout.thin && j1 - j0 < 2 {
            return Err(FieldError::ElectrodeTooNarrow { index, axis: 'y' });
        }
        for j in j0..=j1 {
            for i in i0..=i1 {
                mask[j * nx + i] = NodeKind::Electrode(index as u16);
                values[j * nx + i] = r.potential;
            }
        }
    }
    let lat = Lattice::new([xs.clone(), ys.clone(), vec![0.0]], [false; 3]);
    let fixed: Vec<bool> = mask.iter().map(|m| !m.is_vacuum()).collect();
    let stats = solver::solve(&lat, &fixed, &mut values, &grid.solver)?;
    Ok(ScalarField2D {
        nx,
        ny,
        xs,
        ys,
        values,
        mask,
        stats,
    })
}

impl ScalarField2D {
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    #[inline]
    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        self.mask[j * self.nx + i]
    }

    pub fn node_position(&self, i: usize, j: usize) -> (f64, f64) {
        (self.xs[i], self.ys[j])
    }

    /// Index of the node at the trap centre.
    pub fn center_node(&self) -> (usize, usize) {
        ((self.nx - 1) / 2, (self.ny - 1) / 2)
    }

    /// Bilinear interpolation at (x, y) in µm.
    pub fn sample(&self, x: f64, y: f64) -> Result<f64, FieldError> {
        let (i, tx) = grid::locate(&self.xs, x).ok_or(FieldError::OutOfDomain { x, y, z: 0.0 })?;
        let (j, ty) = grid::locate(&self.ys, y).ok_or(FieldError::OutOfDomain { x, y, z: 0.0 })?;
        let v00 = self.value(i, j);
        let v10 = self.value(i + 1, j);
        let v01 = self.value(i, j + 1);
        let v11 = self.value(i + 1, j + 1);
        Ok((1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11))
    }

    /// Distance from the centre to the nearest non-vacuum node (µm).
    pub fn nearest_fixed_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..self.ny {
            for i in 0..self.nx {
                if !self.kind(i, j).is_vacuum() {
                    let (x, y) = self.node_position(i, j);
                    best = best.min(x.hypot(y));
                }
            }
        }
        best
    }

    pub fn gradient_field(&self) -> GradientField2D {
        let (nx, ny) = (self.nx, self.ny);
        let mut gx = vec![0.0; nx * ny];
        let mut gy = vec![0.0; nx * ny];
        let mut valid = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let p = j * nx + i;
                if matches!(self.kind(i, j), NodeKind::Electrode(_)) {
                    continue;
                }
                gx[p] = grid::derivative(&self.xs, |t| self.value(t, j), i);
                gy[p] = grid::derivative(&self.ys, |t| self.value(i, t), j);
                valid[p] = true;
            }
        }
        GradientField2D {
            nx,
            ny,
            gx,
            gy,
            valid,
        }
    }

    /// CSV with header `x_um,y_um,V`, x running fastest.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x_um,y_um,V")?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.node_position(i, j);
                writeln!(out, "{},{},{}", num(x), num(y), num(self.value(i, j)))?;
            }
        }
        Ok(())
    }

    /// Mask in the same layout: 0 vacuum, 1 electrode, 2 outer boundary.
    pub fn write_mask_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x_um,y_um,mask")?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.node_position(i, j);
                writeln!(out, "{},{},{}", num(x), num(y), self.kind(i, j).code())?;
            }
        }
        Ok(())
    }
}

/// Gradient of a 2D field in V/µm; entries inside electrodes are invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField2D {
    pub nx: usize,
    pub ny: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub valid: Vec<bool>,
}

impl GradientField2D {
    /// |∇V|² at node (i, j), or `None` inside an electrode.
    pub fn magnitude_sq(&self, i: usize, j: usize) -> Option<f64> {
        let p = j * self.nx + i;
        self.valid[p].then(|| self.gx[p] * self.gx[p] + self.gy[p] * self.gy[p])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GeometryUm;

    fn geom(a: f64, d: f64, w: f64) -> TrapGeometry {
        TrapGeometry::from_um(GeometryUm { a, d, w, b: 100.0, c: 100.0, g: 2.0, h: 100.0 }).unwrap()
    }

    fn fixture(f: impl Fn(f64, f64) -> f64) -> ScalarField2D {
        let (nx, ny) = (21, 17);
        let xs: Vec<f64> = (0..nx).map(|i| -5.0 + i as f64 * 0.5).collect();
        let ys: Vec<f64> = (0..ny).map(|j| -2.0 + j as f64 * 0.25).collect();
        let mut values = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                values[j * nx + i] = f(xs[i], ys[j]);
            }
        }
        ScalarField2D {
            nx,
            ny,
            xs,
            ys,
            values,
            mask: vec![NodeKind::Vacuum; nx * ny],
            stats: SolveStats { iterations: 0, residual: 0.0 },
        }
    }

    #[test]
    fn layout_places_tips_and_layers() {
        let drive = DriveConfig::new(10.0, 50.0, 0.0).unwrap();
        let l = build_layout_2d(&geom(40.0, 2.0, 2.0), &drive, &LayoutOptions2D::default()).unwrap();
        assert_eq!(l.rects.len(), 4);
        assert_eq!(l.rects[0].x, [20.0, 640.0]);
        assert_eq!(l.rects[0].y, [1.0, 3.0]);
        assert_eq!(l.rects[2].y, [-3.0, -1.0]);
        assert_eq!(l.rects[0].potential, 5.0);
        assert_eq!(l.rects[2].potential, 5.0);
        assert_eq!(l.rects[1].potential, -5.0);
        assert_eq!(l.rects[3].potential, -5.0);
    }

    #[test]
    fn zero_drive_grounds_everything() {
        let drive = DriveConfig::new(0.0, 50.0, 0.0).unwrap();
        let l = build_layout_2d(&geom(40.0, 10.0, 10.0), &drive, &LayoutOptions2D::default()).unwrap();
        assert!(l.rects.iter().all(|r| r.potential == 0.0));
    }

    #[test]
    fn small_box_is_rejected() {
        let drive = DriveConfig::new(10.0, 50.0, 0.0).unwrap();
        let opts = LayoutOptions2D { box_half: Some(30.0), ..Default::default() };
        assert!(matches!(
            build_layout_2d(&geom(40.0, 2.0, 2.0), &drive, &opts),
            Err(FieldError::BoundingBoxTooSmall { .. })
        ));
    }

    #[test]
    fn narrow_electrode_is_an_error() {
        let drive = DriveConfig::new(10.0, 50.0, 0.0).unwrap();
        let l = build_layout_2d(&geom(40.0, 2.0, 2.0), &drive, &LayoutOptions2D::default()).unwrap();
        let grid = GridSpec2D::uniform([1.0, 1.5]);
        assert!(matches!(solve_laplace_2d(&l, &grid), Err(FieldError::ElectrodeTooNarrow { axis: 'y', .. })));
    }

    #[test]
    fn sample_is_exact_at_nodes_and_bilinear_inside() {
        let f = fixture(|x, y| x * y + 2.0 * x - y);
        assert_eq!(f.sample(-5.0, -2.0).unwrap(), f.value(0, 0));
        assert!((f.sample(0.5, 0.25).unwrap() - f.value(11, 9)).abs() < 1e-14);
        let centre = f.sample(0.25, 0.125).unwrap();
        let mean = (f.value(10, 8) + f.value(11, 8) + f.value(10, 9) + f.value(11, 9)) / 4.0;
        assert!((centre - mean).abs() < 1e-14);
        assert!(matches!(f.sample(6.0, 0.0), Err(FieldError::OutOfDomain { .. })));
    }

    #[test]
    fn gradient_of_fixtures() {
        let c = fixture(|_, _| 3.0).gradient_field();
        assert!(c.gx.iter().chain(&c.gy).all(|g| *g == 0.0));
        let ramp = fixture(|x, _| x).gradient_field();
        for j in 0..ramp.ny {
            for i in 0..ramp.nx {
                assert!((ramp.gx[j * ramp.nx + i] - 1.0).abs() < 1e-12);
                assert!(ramp.gy[j * ramp.nx + i].abs() < 1e-12);
            }
        }
        let f = fixture(|x, y| (x * x - y * y) / 2.0);
        let q = f.gradient_field();
        for j in 1..f.ny - 1 {
            for i in 1..f.nx - 1 {
                let (x, y) = f.node_position(i, j);
                assert!((q.gx[j * f.nx + i] - x).abs() < 1e-12);
                assert!((q.gy[j * f.nx + i] + y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_box_at_common_potential_is_constant() {
        let layout = ElectrodeLayout2D {
            rects: vec![Rect { x: [-10.0, 10.0], y: [-10.0, -9.0], potential: 1.0 }],
            half_extent: [10.0, 10.0],
            core_half: [10.0, 10.0],
            thin: false,
        };
        let mut grid = GridSpec2D::uniform([0.5, 0.5]);
        grid.solver.tol = 1e-10;
        let mut f = solve_laplace_2d(&layout, &grid).unwrap();
        // Re-solve with every boundary node at 1 V.
        for p in 0..f.values.len() {
            if f.mask[p] == NodeKind::Boundary {
                f.values[p] = 1.0;
            }
        }
        let lat = Lattice::new([f.xs.clone(), f.ys.clone(), vec![0.0]], [false; 3]);
        let fixed: Vec<bool> = f.mask.iter().map(|m| !m.is_vacuum()).collect();
        solver::solve(&lat, &fixed, &mut f.values, &grid.solver).unwrap();
        assert!(f.values.iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn antisymmetric_drive_gives_zero_centre() {
        let drive = DriveConfig::new(10.0, 50.0, 0.0).unwrap();
        let g = geom(40.0, 10.0, 10.0);
        let l = build_layout_2d(&g, &drive, &LayoutOptions2D::default()).unwrap();
        let f = solve_laplace_2d(&l, &GridSpec2D::auto(&g, false)).unwrap();
        let (ci, cj) = f.center_node();
        assert!(f.value(ci, cj).abs() < 2e-8 * 10.0);
        // V(ε, ε) is quadratic in ε.
        let v1 = f.sample(0.5, 0.5).unwrap();
        let v2 = f.sample(1.0, 1.0).unwrap();
        assert!((v2 / v1 - 4.0).abs() < 0.02, "ratio {}", v2 / v1);
    }
}
