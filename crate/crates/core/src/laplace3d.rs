//! Three-dimensional static and RF potentials of the twelve-electrode trap.
//!
//! The trap is symmetric under each of x → −x, y → −y and z → −z, so any
//! electrode voltage map splits into eight parity components. Each
//! component is solved on the non-negative octant only, with a mirror plane
//! (even) or a grounded plane (odd) at index 0 of every axis, and the full
//! field is their signed sum. Typical maps excite one or two components.

use std::io::{self, Write};

use crate::csvfmt::num;
use crate::fit::polyfit;
use crate::grid::{self, DEFAULT_STRETCH};
use crate::laplace2d::{FieldError, NodeKind, RfDrive};
use crate::model::TrapGeometry;
use crate::solver::{self, Lattice, SolveStats, SolverConfig};
use crate::trapchar::StaticCurvature;

/// Minimum number of samples in a derivative fit.
pub const MIN_FIT_POINTS: usize = 7;
const FIT_DEGREE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Center,
    /// End-cap on the +z side.
    EndcapPlus,
    /// End-cap on the −z side.
    EndcapMinus,
}

/// One of the twelve cantilevers. Quadrants follow the 2D layout order:
/// (+x,+y), (−x,+y), (−x,−y), (+x,−y).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElectrodeId {
    pub quadrant: usize,
    pub segment: Segment,
}

impl ElectrodeId {
    pub fn index(self) -> usize {
        let s = match self.segment {
            Segment::Center => 0,
            Segment::EndcapPlus => 1,
            Segment::EndcapMinus => 2,
        };
        self.quadrant * 3 + s
    }

    pub fn all() -> Vec<ElectrodeId> {
        let mut out = Vec::with_capacity(12);
        for quadrant in 0..4 {
            for segment in [Segment::Center, Segment::EndcapPlus, Segment::EndcapMinus] {
                out.push(ElectrodeId { quadrant, segment });
            }
        }
        out
    }

    fn signs(self) -> (f64, f64) {
        match self.quadrant {
            0 => (1.0, 1.0),
            1 => (-1.0, 1.0),
            2 => (-1.0, -1.0),
            _ => (1.0, -1.0),
        }
    }
}

/// Potential on each electrode, indexed by [`ElectrodeId::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectrodeVolts(pub [f64; 12]);

impl ElectrodeVolts {
    pub fn uniform(v: f64) -> Self {
        ElectrodeVolts([v; 12])
    }

    /// End-caps at `u0`, centre electrodes grounded.
    pub fn endcaps(u0: f64) -> Self {
        let mut v = [0.0; 12];
        for id in ElectrodeId::all() {
            if id.segment != Segment::Center {
                v[id.index()] = u0;
            }
        }
        ElectrodeVolts(v)
    }

    /// End-caps at `u0` and `uc` on the (+x,+y) and (−x,−y) centre electrodes.
    pub fn rotation_study(u0: f64, uc: f64) -> Self {
        let mut v = Self::endcaps(u0);
        v.set(ElectrodeId { quadrant: 0, segment: Segment::Center }, uc);
        v.set(ElectrodeId { quadrant: 2, segment: Segment::Center }, uc);
        v
    }

    /// RF amplitude on every segment following the 2D diagonal pattern.
    pub fn rf(v0: f64, drive: RfDrive) -> Self {
        let (pa, pb) = drive.pair_potentials(v0);
        let mut v = [0.0; 12];
        for id in ElectrodeId::all() {
            v[id.index()] = if id.quadrant % 2 == 0 { pa } else { pb };
        }
        ElectrodeVolts(v)
    }

    pub fn get(&self, id: ElectrodeId) -> f64 {
        self.0[id.index()]
    }

    pub fn set(&mut self, id: ElectrodeId, v: f64) {
        self.0[id.index()] = v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3 {
    /// µm, inclusive bounds.
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
    pub potential: f64,
}

impl Box3 {
    fn contains(&self, p: [f64; 3], eps: [f64; 3]) -> bool {
        let b = [self.x, self.y, self.z];
        (0..3).all(|a| p[a] >= b[a][0] - eps[a] && p[a] <= b[a][1] + eps[a])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeLayout3D {
    /// Indexed by [`ElectrodeId::index`].
    pub boxes: Vec<Box3>,
    /// Half-widths of the grounded bounding box (µm).
    pub half_extent: [f64; 3],
    /// Half-widths of the uniformly resolved region (µm).
    pub core_half: [f64; 3],
    /// Axial gap between centre and end-cap electrodes (µm), from z = b/2.
    pub gap: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LayoutOptions3D {
    /// Box half-widths in µm; `None` means [`default_box_half`].
    pub box_half: Option<[f64; 3]>,
}

/// Default box half-width in units of a, measured from the electrode
/// extent along z.
pub const DEFAULT_BOX_FACTOR: f64 = 16.0;

/// [`DEFAULT_BOX_FACTOR`]·a on every side of the electrode stack.
pub fn default_box_half(geom: &TrapGeometry) -> [f64; 3] {
    let g = geom.um();
    let far = DEFAULT_BOX_FACTOR * g.a;
    [far, far, g.b / 2.0 + g.g + g.c + far]
}

pub fn build_layout_3d(geom: &TrapGeometry, volts: &ElectrodeVolts, opts: &LayoutOptions3D) -> Result<ElectrodeLayout3D, FieldError> {
    let g = geom.um();
    let half = opts.box_half.unwrap_or_else(|| default_box_half(geom));
    let z_end = g.b / 2.0 + g.g + g.c;
    let top = g.d / 2.0 + g.w;
    if half.iter().any(|&h| !(h >= 2.0 * g.a)) || top >= half[1] || z_end >= half[2] {
        let worst = half.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(FieldError::BoundingBoxTooSmall { half_um: worst, a_um: g.a });
    }
    let mut boxes = Vec::with_capacity(12);
    for id in ElectrodeId::all() {
        let (sx, sy) = id.signs();
        let x = if sx > 0.0 { [g.a / 2.0, half[0]] } else { [-half[0], -g.a / 2.0] };
        let y = if sy > 0.0 { [g.d / 2.0, top] } else { [-top, -g.d / 2.0] };
        let z = match id.segment {
            Segment::Center => [-g.b / 2.0, g.b / 2.0],
            Segment::EndcapPlus => [g.b / 2.0 + g.g, z_end],
            Segment::EndcapMinus => [-z_end, -g.b / 2.0 - g.g],
        };
        boxes.push(Box3 {
            x,
            y,
            z,
            potential: volts.get(id),
        });
    }
    // Uniform core: every electrode edge near the trap and the derivative
    // fit window.
    let margin = 2.0 * top;
    let fit = 1.25 * default_fit_window(geom);
    let core_half = [
        (g.a / 2.0 + margin).max(fit).min(half[0]),
        (top + margin).max(fit).min(half[1]),
        (z_end + margin).min(half[2]),
    ];
    Ok(ElectrodeLayout3D {
        boxes,
        half_extent: half,
        core_half,
        gap: [g.b / 2.0, g.b / 2.0 + g.g],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec3D {
    /// Node spacing (µm) along x, y, z inside the core region.
    pub h: [f64; 3],
    /// Largest neighbouring-cell ratio outside the core; 1 gives a uniform
    /// grid.
    pub stretch: f64,
    pub solver: SolverConfig,
}

impl GridSpec3D {
    /// a/40 across, a quarter of the thinnest layer dimension vertically
    /// (and of the derivative fit window), at most half the gap axially.
    pub fn auto(geom: &TrapGeometry) -> Self {
        let g = geom.um();
        let hx = g.a / 40.0;
        let hy = (g.w.min(g.d) / 4.0).min(default_fit_window(geom) / 4.0);
        let hz = (g.g / 2.0).min(hx);
        GridSpec3D {
            h: [hx, hy, hz],
            stretch: DEFAULT_STRETCH,
            solver: SolverConfig::default(),
        }
    }

    /// Uniform grid with spacing `h`.
    pub fn uniform(h: [f64; 3]) -> Self {
        GridSpec3D {
            h,
            stretch: 1.0,
            solver: SolverConfig::default(),
        }
    }

    /// Spacing multiplied by `factor`; the graded ratio scales as its power.
    pub fn scaled(&self, factor: f64) -> Self {
        GridSpec3D {
            h: self.h.map(|h| h * factor),
            stretch: self.stretch.powf(factor),
            solver: self.solver,
        }
    }
}

/// One parity component on the non-negative octant.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityComponent {
    /// Odd (antisymmetric) under reflection of each axis.
    pub odd: [bool; 3],
    pub values: Vec<f64>,
    pub stats: SolveStats,
}

/// Potential on a symmetric grid centred on the trap, stored as parity
/// components over the octant. Signed node indices run from −(n−1) to n−1.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField3D {
    /// Octant nodes per axis; index 0 lies on the symmetry plane.
    pub n: [usize; 3],
    /// Non-negative node positions per axis (µm), starting at 0.
    pub pos: [Vec<f64>; 3],
    pub mask: Vec<NodeKind>,
    pub components: Vec<ParityComponent>,
}

impl ScalarField3D {
    pub fn nx(&self) -> usize {
        2 * self.n[0] - 1
    }

    pub fn ny(&self) -> usize {
        2 * self.n[1] - 1
    }

    pub fn nz(&self) -> usize {
        2 * self.n[2] - 1
    }

    /// Physical position of the most negative corner node (µm).
    pub fn origin(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| -self.pos[a][self.n[a] - 1])
    }

    /// Position of signed node index `i` along `axis` (µm).
    #[inline]
    pub fn coord(&self, axis: usize, i: isize) -> f64 {
        let x = self.pos[axis][i.unsigned_abs()];
        if i < 0 {
            -x
        } else {
            x
        }
    }

    /// Spacing at the centre along each axis (µm).
    pub fn core_spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.pos[a][1] - self.pos[a][0])
    }

    #[inline]
    fn octant_index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n[1] + j) * self.n[0] + i
    }

    /// Value at signed node indices.
    pub fn value(&self, i: isize, j: isize, k: isize) -> f64 {
        let p = self.octant_index(i.unsigned_abs(), j.unsigned_abs(), k.unsigned_abs());
        let neg = [i < 0, j < 0, k < 0];
        self.components
            .iter()
            .map(|c| {
                let flips = (0..3).filter(|&a| c.odd[a] && neg[a]).count();
                if flips % 2 == 1 {
                    -c.values[p]
                } else {
                    c.values[p]
                }
            })
            .sum()
    }

    pub fn kind(&self, i: isize, j: isize, k: isize) -> NodeKind {
        self.mask[self.octant_index(i.unsigned_abs(), j.unsigned_abs(), k.unsigned_abs())]
    }

    pub fn in_grid(&self, i: isize, j: isize, k: isize) -> bool {
        let idx = [i, j, k];
        (0..3).all(|a| idx[a].unsigned_abs() < self.n[a])
    }

    /// Total iterations and worst residual over the solved components.
    pub fn stats(&self) -> SolveStats {
        SolveStats {
            iterations: self.components.iter().map(|c| c.stats.iterations).sum(),
            residual: self.components.iter().map(|c| c.stats.residual).fold(0.0, f64::max),
        }
    }

    /// Trilinear interpolation at (x, y, z) µm.
    pub fn sample(&self, x: f64, y: f64, z: f64) -> Result<f64, FieldError> {
        let p = [x, y, z];
        // Per axis: the two bracketing signed nodes and the weight of the
        // second one.
        let mut ends = [[0isize; 2]; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let (i, t) = grid::locate(&self.pos[a], p[a].abs()).ok_or(FieldError::OutOfDomain { x, y, z })?;
            let sign = if p[a] < 0.0 { -1 } else { 1 };
            ends[a] = [sign * i as isize, sign * (i as isize + 1)];
            frac[a] = t;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let o = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
            let w: f64 = (0..3).map(|a| if o[a] == 1 { frac[a] } else { 1.0 - frac[a] }).product();
            if w != 0.0 {
                acc += w * self.value(ends[0][o[0]], ends[1][o[1]], ends[2][o[2]]);
            }
        }
        Ok(acc)
    }

    /// Centred-difference gradient (V/µm) at a signed interior node.
    pub fn gradient(&self, i: isize, j: isize, k: isize) -> [f64; 3] {
        let idx = [i, j, k];
        [0, 1, 2].map(|a| {
            let at = |off: isize| {
                let mut q = idx;
                q[a] += off;
                (self.coord(a, q[a]), self.value(q[0], q[1], q[2]))
            };
            let ((xm, vm), (x0, v0), (xp, vp)) = (at(-1), at(0), at(1));
            let (hm, hp) = (x0 - xm, xp - x0);
            (hm * hm * vp - hp * hp * vm + (hp * hp - hm * hm) * v0) / (hm * hp * (hm + hp))
        })
    }

    /// Plane of constant z (signed node index `k`) as `x_um,y_um,z_um,V`.
    pub fn write_plane_csv<W: Write>(&self, mut out: W, k: isize) -> io::Result<()> {
        writeln!(out, "x_um,y_um,z_um,V")?;
        let (nx, ny) = (self.n[0] as isize, self.n[1] as isize);
        for j in -(ny - 1)..ny {
            for i in -(nx - 1)..nx {
                let pos = [self.coord(0, i), self.coord(1, j), self.coord(2, k)];
                writeln!(out, "{},{},{},{}", num(pos[0]), num(pos[1]), num(pos[2]), num(self.value(i, j, k)))?;
            }
        }
        Ok(())
    }

    /// |∇V|² along the z axis as `z_um,gradV_sq` (V²/µm²), vacuum nodes only.
    pub fn write_axis_gradient_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "z_um,gradV_sq")?;
        let nz = self.n[2] as isize;
        for k in -(nz - 1)..nz {
            if self.kind(0, 0, k).is_vacuum() {
                let g = self.gradient(0, 0, k);
                writeln!(out, "{},{}", num(self.coord(2, k)), num(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]))?;
            }
        }
        Ok(())
    }

    /// The z axis (x = y = 0) as `z_um,V`.
    pub fn write_axis_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "z_um,V")?;
        let nz = self.n[2] as isize;
        for k in -(nz - 1)..nz {
            writeln!(out, "{},{}", num(self.coord(2, k)), num(self.value(0, 0, k)))?;
        }
        Ok(())
    }
}

pub fn solve_laplace_3d(layout: &ElectrodeLayout3D, grid: &GridSpec3D) -> Result<ScalarField3D, FieldError> {
    let h = grid.h;
    if h.iter().any(|&v| !(v > 0.0)) || !grid.stretch.is_finite() {
        return Err(FieldError::InvalidGrid(format!("spacing must be positive, got {h:?}")));
    }
    let pos = [0, 1, 2].map(|a| grid::half_axis(h[a], layout.core_half[a], layout.half_extent[a], grid.stretch));
    let n = [0, 1, 2].map(|a| pos[a].len());
    let eps = [0, 1, 2].map(|a| 1e-9 * pos[a][n[a] - 1].max(1.0));

    // At least one vacuum node strictly inside the axial gap.
    let [g0, g1] = layout.gap;
    if !pos[2].iter().any(|&z| z > g0 + eps[2] && z < g1 - eps[2]) {
        return Err(FieldError::GapTooSmallForGrid {
            gap_um: g1 - g0,
            h_um: h[2],
        });
    }

    // Electrodes touching the box run to the grid edge.
    let grid_half = [0, 1, 2].map(|a| pos[a][n[a] - 1]);
    let boxes: Vec<Box3> = layout
        .boxes
        .iter()
        .map(|b| {
            let extend = |r: [f64; 2], half: f64, edge: f64| {
                let lo = if (r[0] + half).abs() < 1e-9 * half { -edge } else { r[0] };
                let hi = if (r[1] - half).abs() < 1e-9 * half { edge } else { r[1] };
                [lo, hi]
            };
            Box3 {
                x: extend(b.x, layout.half_extent[0], grid_half[0]),
                y: extend(b.y, layout.half_extent[1], grid_half[1]),
                z: extend(b.z, layout.half_extent[2], grid_half[2]),
                potential: b.potential,
            }
        })
        .collect();

    let len = n[0] * n[1] * n[2];
    let idx = |i: usize, j: usize, k: usize| (k * n[1] + j) * n[0] + i;
    let mut mask = vec![NodeKind::Vacuum; len];
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                if i + 1 == n[0] || j + 1 == n[1] || k + 1 == n[2] {
                    mask[idx(i, j, k)] = NodeKind::Boundary;
                }
            }
        }
    }
    // Octant images of each box. Every electrode has a mirror image in the
    // octant, so marking the images of all twelve covers the mask.
    for (index, b) in boxes.iter().enumerate() {
        let mut span = [(0usize, 0usize); 3];
        for (a, r) in [b.x, b.y, b.z].into_iter().enumerate() {
            let r = if r[1] < 0.0 { [-r[1], -r[0]] } else { [r[0].max(0.0), r[1]] };
            span[a] = grid::span(&pos[a], r).ok_or(FieldError::ElectrodeNotResolved { index })?;
        }
        if span[1].1 - span[1].0 < 2 {
            return Err(FieldError::ElectrodeTooNarrow { index, axis: 'y' });
        }
        for k in span[2].0..=span[2].1 {
            for j in span[1].0..=span[1].1 {
                for i in span[0].0..=span[0].1 {
                    mask[idx(i, j, k)] = NodeKind::Electrode(index as u16);
                }
            }
        }
    }

    let potential_at = |p: [f64; 3]| -> f64 {
        boxes.iter().find(|b| b.contains(p, eps)).map_or(0.0, |b| b.potential)
    };
    let electrode_nodes: Vec<usize> = (0..len).filter(|&p| matches!(mask[p], NodeKind::Electrode(_))).collect();
    // Potential at the eight reflections of every octant electrode node.
    let images: Vec<[f64; 8]> = electrode_nodes
        .iter()
        .map(|&p| {
            let (i, j, k) = (p % n[0], (p / n[0]) % n[1], p / (n[0] * n[1]));
            let r = [pos[0][i], pos[1][j], pos[2][k]];
            let mut out = [0.0; 8];
            for (s, o) in out.iter_mut().enumerate() {
                let sign = |a: usize| if (s >> a) & 1 == 1 { -1.0 } else { 1.0 };
                *o = potential_at([r[0] * sign(0), r[1] * sign(1), r[2] * sign(2)]);
            }
            out
        })
        .collect();

    let mut components = Vec::new();
    for parity in 0..8usize {
        let odd = [parity & 1 == 1, parity & 2 == 2, parity & 4 == 4];
        let mut values = vec![0.0; len];
        let mut any = false;
        for (e, &p) in electrode_nodes.iter().enumerate() {
            let v: f64 = (0..8usize)
                .map(|s| {
                    let flips = (0..3).filter(|&a| odd[a] && (s >> a) & 1 == 1).count();
                    if flips % 2 == 1 {
                        -images[e][s]
                    } else {
                        images[e][s]
                    }
                })
                .sum::<f64>()
                / 8.0;
            if v.abs() > 1e-300 {
                any = true;
            }
            values[p] = v;
        }
        if !any {
            continue;
        }
        let mut fixed: Vec<bool> = mask.iter().map(|m| !m.is_vacuum()).collect();
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let on_odd_plane = (odd[0] && i == 0) || (odd[1] && j == 0) || (odd[2] && k == 0);
                    if on_odd_plane {
                        fixed[idx(i, j, k)] = true;
                        values[idx(i, j, k)] = 0.0;
                    }
                }
            }
        }
        let lat = Lattice::new(pos.clone(), [!odd[0], !odd[1], !odd[2]]);
        let stats = solver::solve(&lat, &fixed, &mut values, &grid.solver)?;
        log::debug!(
            "3D component odd={odd:?}: {} nodes, {} iterations, residual {:.2e}",
            len,
            stats.iterations,
            stats.residual
        );
        components.push(ParityComponent { odd, values, stats });
    }
    Ok(ScalarField3D { n, pos, mask, components })
}

/// Raw second derivatives of the potential at the origin (V/µm²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterHessian {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl CenterHessian {
    /// D coefficients: diagonal curvatures divided by U₀ (1/µm²).
    pub fn normalized(&self, u0: f64) -> StaticCurvature {
        StaticCurvature {
            dx: self.xx / u0,
            dy: self.yy / u0,
            dz: self.zz / u0,
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }
}

/// Derivative fit half-window min(a/8, b/4) in µm.
pub fn default_fit_window(geom: &TrapGeometry) -> f64 {
    let g = geom.um();
    (g.a / 8.0).min(g.b / 4.0)
}

/// Nodes on the uniform core of `axis` out to `window` µm, or an error if
/// the window leaves the core.
fn uniform_reach(field: &ScalarField3D, axis: usize, window: f64) -> Result<isize, FieldError> {
    let h = field.core_spacing()[axis];
    let m = (window / h + 1e-9).floor() as usize;
    let x = &field.pos[axis];
    if m >= x.len() || (x[m] - m as f64 * h).abs() > 1e-6 * h {
        return Err(FieldError::InvalidGrid(format!("fit window {window} µm leaves the uniform grid core")));
    }
    Ok(m as isize)
}

/// Second derivative along the node direction `dir` (in node steps), per
/// unit parameter t where the sample at t is node t·dir.
fn directional_curvature(field: &ScalarField3D, dir: [isize; 3], window: f64) -> Result<f64, FieldError> {
    let mut m = isize::MAX;
    for a in (0..3).filter(|&a| dir[a] != 0) {
        m = m.min(uniform_reach(field, a, window)? / dir[a].abs());
    }
    if ((2 * m + 1) as usize) < MIN_FIT_POINTS {
        return Err(FieldError::InvalidGrid(format!(
            "fit window {window} µm holds fewer than {MIN_FIT_POINTS} nodes"
        )));
    }
    let mut t = Vec::with_capacity((2 * m + 1) as usize);
    let mut v = Vec::with_capacity(t.capacity());
    for s in -m..=m {
        let (i, j, k) = (s * dir[0], s * dir[1], s * dir[2]);
        if !field.in_grid(i, j, k) || !field.kind(i, j, k).is_vacuum() {
            return Err(FieldError::FitWindowOutsideVacuumRegion { window_um: window });
        }
        t.push(s as f64);
        v.push(field.value(i, j, k));
    }
    let c = polyfit(&t, &v, FIT_DEGREE).ok_or_else(|| FieldError::InvalidGrid("degenerate derivative fit".into()))?;
    Ok(2.0 * c[2])
}

/// Hessian at the origin from degree-4 least-squares fits along the axes
/// and along node diagonals (for the mixed terms), within ±`window` µm.
pub fn hessian_at_center(field: &ScalarField3D, window: f64) -> Result<CenterHessian, FieldError> {
    let h = field.core_spacing();
    let axis = |a: usize| {
        let mut d = [0; 3];
        d[a] = 1;
        directional_curvature(field, d, window).map(|c| c / (h[a] * h[a]))
    };
    let (xx, yy, zz) = (axis(0)?, axis(1)?, axis(2)?);
    // Along (t·h_a, ±t·h_b): d²/dt² = h_a²V_aa ± 2h_a h_b V_ab + h_b²V_bb.
    let mixed = |a: usize, b: usize| -> Result<f64, FieldError> {
        let mut p = [0; 3];
        let mut q = [0; 3];
        p[a] = 1;
        p[b] = 1;
        q[a] = 1;
        q[b] = -1;
        let d1 = directional_curvature(field, p, window)?;
        let d2 = directional_curvature(field, q, window)?;
        Ok((d1 - d2) / (4.0 * h[a] * h[b]))
    };
    Ok(CenterHessian {
        xx,
        yy,
        zz,
        xy: mixed(0, 1)?,
        xz: mixed(0, 2)?,
        yz: mixed(1, 2)?,
    })
}

/// H_z = ½ ∂²|∇V|²/∂z² at the origin (V²/µm⁴) from a quadratic fit of
/// |∇V|² along the z axis within ±`window` µm. The window must stay clear
/// of the gap starting at `gap_start` µm.
pub fn axial_pseudo_curvature(rf: &ScalarField3D, window: f64, gap_start: f64) -> Result<f64, FieldError> {
    if window >= gap_start {
        return Err(FieldError::FitWindowSpansGap {
            window_um: window,
            gap_start_um: gap_start,
        });
    }
    let m = uniform_reach(rf, 2, window)?;
    if ((2 * m + 1) as usize) < MIN_FIT_POINTS {
        return Err(FieldError::InvalidGrid(format!(
            "fit window {window} µm holds fewer than {MIN_FIT_POINTS} nodes"
        )));
    }
    let mut t = Vec::new();
    let mut v = Vec::new();
    for k in -m..=m {
        if !rf.in_grid(1, 1, k + 1) || !rf.kind(0, 0, k).is_vacuum() {
            return Err(FieldError::FitWindowOutsideVacuumRegion { window_um: window });
        }
        let g = rf.gradient(0, 0, k);
        t.push(rf.coord(2, k));
        v.push(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    }
    let c = polyfit(&t, &v, 2).ok_or_else(|| FieldError::InvalidGrid("degenerate axial fit".into()))?;
    Ok(c[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GeometryUm;
    use crate::solver::Method;

    fn small_geom() -> TrapGeometry {
        TrapGeometry::from_um(GeometryUm { a: 16.0, d: 4.0, w: 4.0, b: 24.0, c: 16.0, g: 4.0, h: 10.0 }).unwrap()
    }

    /// The old compact box: 2a across, one a beyond the end-caps.
    fn small_box() -> LayoutOptions3D {
        LayoutOptions3D { box_half: Some([32.0, 32.0, 44.0]) }
    }

    fn coarse(geom: &TrapGeometry) -> GridSpec3D {
        let mut g = GridSpec3D::uniform([1.0, 1.0, 1.0]).scaled(geom.um().a / 16.0);
        g.solver.tol = 1e-10;
        g
    }

    #[test]
    fn electrode_map_defaults() {
        let v = ElectrodeVolts::endcaps(3.0);
        assert_eq!(v.0.iter().filter(|&&x| x == 3.0).count(), 8);
        assert_eq!(v.0.iter().filter(|&&x| x == 0.0).count(), 4);
        let r = ElectrodeVolts::rotation_study(1.0, -0.5);
        assert_eq!(r.0.iter().filter(|&&x| x == -0.5).count(), 2);
    }

    #[test]
    fn uniform_drive_gives_constant_interior() {
        let g = small_geom();
        let layout = build_layout_3d(&g, &ElectrodeVolts::uniform(1.0), &small_box()).unwrap();
        let f = solve_laplace_3d(&layout, &coarse(&g)).unwrap();
        let c = f.value(0, 0, 0);
        assert!(c > 0.0 && c < 1.0);
        // Maximum principle over a slab of interior nodes.
        for k in -10..=10 {
            for j in -5..=5 {
                for i in -10..=10 {
                    let v = f.value(i, j, k);
                    assert!((-1e-12..=1.0 + 1e-12).contains(&v));
                }
            }
        }
    }

    #[test]
    fn symmetric_endcaps_have_zero_gradient_and_trace() {
        let g = small_geom();
        let layout = build_layout_3d(&g, &ElectrodeVolts::endcaps(1.0), &small_box()).unwrap();
        let f = solve_laplace_3d(&layout, &coarse(&g)).unwrap();
        assert_eq!(f.components.len(), 1);
        let grad = f.gradient(0, 0, 0);
        assert!(grad.iter().all(|g| g.abs() < 1e-12));
        let hs = hessian_at_center(&f, 3.0).unwrap();
        assert!(hs.zz > 0.0);
        assert!(hs.trace().abs() < 0.01 * hs.zz.abs(), "{hs:?}");
        assert!(hs.xy.abs() < 1e-12 && hs.xz.abs() < 1e-12 && hs.yz.abs() < 1e-12);
        // z → −z mirror.
        for k in 1..10 {
            assert_eq!(f.value(2, 1, k), f.value(2, 1, -k));
        }
    }

    #[test]
    fn parity_split_matches_direct_solve_off_symmetry() {
        // One electrode alone breaks every symmetry; compare against a
        // full-domain solve on the same lattice.
        let g = small_geom();
        let mut volts = ElectrodeVolts::uniform(0.0);
        volts.set(ElectrodeId { quadrant: 1, segment: Segment::EndcapPlus }, 1.0);
        let layout = build_layout_3d(&g, &volts, &small_box()).unwrap();
        let grid = coarse(&g);
        let f = solve_laplace_3d(&layout, &grid).unwrap();
        assert_eq!(f.components.len(), 8);

        let n = [f.nx(), f.ny(), f.nz()];
        let full = [0, 1, 2].map(|a| grid::symmetric_axis(&f.pos[a]));
        let lat = Lattice::new(full, [false; 3]);
        let off = [0, 1, 2].map(|a| (f.n[a] - 1) as isize);
        let mut fixed = vec![false; lat.len()];
        let mut x = vec![0.0; lat.len()];
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let (si, sj, sk) = (i as isize - off[0], j as isize - off[1], k as isize - off[2]);
                    let p = lat.idx(i, j, k);
                    if !f.kind(si, sj, sk).is_vacuum() {
                        fixed[p] = true;
                        let pos = [f.coord(0, si), f.coord(1, sj), f.coord(2, sk)];
                        let eps = [1e-9; 3];
                        x[p] = layout.boxes.iter().find(|b| b.contains(pos, eps)).map_or(0.0, |b| b.potential);
                    }
                }
            }
        }
        let cfg = SolverConfig { method: Method::MultigridCg, tol: 1e-11, max_iters: 10_000 };
        solver::solve(&lat, &fixed, &mut x, &cfg).unwrap();
        let mut worst: f64 = 0.0;
        for p in 0..lat.len() {
            let [i, j, k] = lat.coords(p);
            let v = f.value(i as isize - off[0], j as isize - off[1], k as isize - off[2]);
            worst = worst.max((v - x[p]).abs());
        }
        assert!(worst < 1e-8, "max deviation {worst:e}");
    }

    #[test]
    fn hyperbolic_fixture_hessian() {
        // Dirichlet data from a harmonic quadratic: the discrete solution is
        // exact, so the fitted Hessian returns the generating coefficients.
        let (eps, s) = (3.5, 7.0);
        let n = [17, 17, 17];
        let h = [0.5, 0.25, 0.5];
        let u = |x: f64, y: f64, z: f64| (-eps * x * x - (1.0 - eps) * y * y + z * z) / (s * s);
        let len = n[0] * n[1] * n[2];
        let mut values = vec![0.0; len];
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    values[(k * n[1] + j) * n[0] + i] = u(i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]);
                }
            }
        }
        let field = ScalarField3D {
            n,
            pos: [0, 1, 2].map(|a| (0..n[a]).map(|i| i as f64 * h[a]).collect()),
            mask: vec![NodeKind::Vacuum; len],
            components: vec![ParityComponent { odd: [false; 3], values, stats: SolveStats { iterations: 0, residual: 0.0 } }],
        };
        let hs = hessian_at_center(&field, 3.0).unwrap();
        let d = hs.normalized(1.0);
        assert!((d.dz - 2.0 / (s * s)).abs() < 1e-12);
        assert!((d.dx + 2.0 * eps / (s * s)).abs() < 1e-12);
        assert!(hs.trace().abs() < 1e-12);
        assert!(matches!(hessian_at_center(&field, 0.6), Err(FieldError::InvalidGrid(_))));
    }

    #[test]
    fn gap_must_hold_a_vacuum_node() {
        let g = TrapGeometry::from_um(GeometryUm { a: 16.0, d: 4.0, w: 4.0, b: 24.0, c: 16.0, g: 1.0, h: 10.0 }).unwrap();
        let layout = build_layout_3d(&g, &ElectrodeVolts::endcaps(1.0), &small_box()).unwrap();
        let grid = GridSpec3D::uniform([1.0, 1.0, 1.0]);
        assert!(matches!(solve_laplace_3d(&layout, &grid), Err(FieldError::GapTooSmallForGrid { .. })));
    }

    #[test]
    fn axial_window_must_avoid_gap() {
        let g = small_geom();
        let layout = build_layout_3d(&g, &ElectrodeVolts::rf(1.0, RfDrive::SingleEnded), &small_box()).unwrap();
        let f = solve_laplace_3d(&layout, &coarse(&g)).unwrap();
        assert!(matches!(axial_pseudo_curvature(&f, 12.0, 12.0), Err(FieldError::FitWindowSpansGap { .. })));
        let hz = axial_pseudo_curvature(&f, 6.0, 12.0).unwrap();
        assert!(hz.is_finite());
    }
}
