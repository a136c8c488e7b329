//! Finite-difference Laplace kernel shared by the 2D and 3D solvers.
//!
//! A [`Lattice`] is a tensor-product vertex grid with up to three active
//! axes (an axis with a single node is inactive); spacing may vary along
//! each axis. The lower face of an axis may be a mirror plane: nodes at
//! index 0 then see their +1 neighbour twice, which is the even extension
//! of the field across the plane. Odd
//! extensions are expressed by fixing the plane nodes to zero.
//!
//! Nodes flagged in the `fixed` mask hold Dirichlet values; every other
//! node obeys the 5- or 7-point discrete Laplace equation. The upper face of
//! every active axis, and the lower face of non-mirrored axes, must be fixed.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("solver did not converge after {max_iters} iterations (relative residual {residual:.3e})")]
    NoConvergence { max_iters: usize, residual: f64 },
    #[error("lattice node on an open face is not fixed (axis {axis})")]
    OpenBoundary { axis: usize },
    #[error("lattice and data sizes disagree")]
    SizeMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Red-black successive over-relaxation.
    Sor,
    /// Conjugate gradients preconditioned by one geometric multigrid V-cycle.
    MultigridCg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Relative tolerance on the largest node correction, scaled by the
    /// largest fixed potential.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::MultigridCg,
            tol: 1e-8,
            max_iters: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Largest |residual / diagonal| over free nodes divided by the
    /// potential scale.
    pub residual: f64,
}

/// Per-axis stencil data for a possibly non-uniform node distribution.
#[derive(Debug, Clone, PartialEq)]
struct AxisStencil {
    /// Node positions.
    x: Vec<f64>,
    /// Coupling to the minus / plus neighbour.
    cm: Vec<f64>,
    cp: Vec<f64>,
    /// Dual-cell length: the node's share of the inner-product weight.
    w: Vec<f64>,
}

impl AxisStencil {
    fn new(x: Vec<f64>, mirror: bool) -> Self {
        let n = x.len();
        let mut cm = vec![0.0; n];
        let mut cp = vec![0.0; n];
        let mut w = vec![1.0; n];
        if n > 1 {
            for t in 0..n {
                let hp = if t + 1 < n { x[t + 1] - x[t] } else { x[t] - x[t - 1] };
                let hm = if t > 0 { x[t] - x[t - 1] } else { hp };
                let m = 0.5 * (hm + hp);
                cm[t] = 1.0 / (m * hm);
                cp[t] = 1.0 / (m * hp);
                // A mirror plane owns half of its dual cell.
                w[t] = if t == 0 && mirror { 0.5 * hp } else { m };
            }
        }
        AxisStencil { x, cm, cp, w }
    }
}

/// Tensor-product vertex grid with up to three active axes. Node spacing
/// may vary along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub n: [usize; 3],
    pub mirror: [bool; 3],
    axes: [AxisStencil; 3],
}

impl Lattice {
    /// Nodes at the given positions along each axis (a single position
    /// makes the axis inactive). Positions must be strictly increasing.
    pub fn new(positions: [Vec<f64>; 3], mirror: [bool; 3]) -> Self {
        let n = [positions[0].len(), positions[1].len(), positions[2].len()];
        for (a, p) in positions.iter().enumerate() {
            assert!(!p.is_empty(), "axis {a} has no nodes");
            assert!(p.windows(2).all(|w| w[1] > w[0]), "axis {a} positions are not increasing");
        }
        let [px, py, pz] = positions;
        Lattice {
            n,
            mirror,
            axes: [
                AxisStencil::new(px, mirror[0]),
                AxisStencil::new(py, mirror[1]),
                AxisStencil::new(pz, mirror[2]),
            ],
        }
    }

    /// Uniform spacing `h` along each axis, starting at 0.
    pub fn uniform(n: [usize; 3], h: [f64; 3], mirror: [bool; 3]) -> Self {
        Self::new([0, 1, 2].map(|a| (0..n[a]).map(|t| t as f64 * h[a]).collect()), mirror)
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n[1] + j) * self.n[0] + i
    }

    /// Index triple of flat node `p`.
    pub fn coords(&self, p: usize) -> [usize; 3] {
        let i = p % self.n[0];
        let j = (p / self.n[0]) % self.n[1];
        let k = p / (self.n[0] * self.n[1]);
        [i, j, k]
    }

    pub fn positions(&self, axis: usize) -> &[f64] {
        &self.axes[axis].x
    }

    fn active(&self, axis: usize) -> bool {
        self.n[axis] > 1
    }

    fn min_spacing(&self, axis: usize) -> f64 {
        self.axes[axis].x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    fn strides(&self) -> [isize; 3] {
        [1, self.n[0] as isize, (self.n[0] * self.n[1]) as isize]
    }

    /// Neighbour offsets and couplings along `axis` at index `t`.
    #[inline]
    fn stencil(&self, axis: usize, t: usize) -> Tap {
        if !self.active(axis) {
            return Tap::default();
        }
        let s = self.strides()[axis];
        let ax = &self.axes[axis];
        let om = if t == 0 { s } else { -s };
        let op = if t + 1 == self.n[axis] { -s } else { s };
        Tap {
            om,
            op,
            cm: ax.cm[t],
            cp: ax.cp[t],
        }
    }

    #[inline]
    fn weight_1d(&self, axis: usize, t: usize) -> f64 {
        self.axes[axis].w[t]
    }

    fn check_boundary(&self, fixed: &[bool]) -> Result<(), SolveError> {
        if fixed.len() != self.len() {
            return Err(SolveError::SizeMismatch);
        }
        for p in 0..self.len() {
            if fixed[p] {
                continue;
            }
            let c = self.coords(p);
            for a in 0..3 {
                if !self.active(a) {
                    continue;
                }
                if c[a] + 1 == self.n[a] || (c[a] == 0 && !self.mirror[a]) {
                    return Err(SolveError::OpenBoundary { axis: a });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tap {
    om: isize,
    op: isize,
    cm: f64,
    cp: f64,
}

/// Solves the Dirichlet problem in place. Fixed entries of `x` are the
/// boundary data; free entries are the initial guess.
pub fn solve(lat: &Lattice, fixed: &[bool], x: &mut [f64], cfg: &SolverConfig) -> Result<SolveStats, SolveError> {
    if x.len() != lat.len() {
        return Err(SolveError::SizeMismatch);
    }
    lat.check_boundary(fixed)?;
    let scale = fixed
        .iter()
        .zip(x.iter())
        .filter(|(f, _)| **f)
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    if scale == 0.0 {
        for (v, f) in x.iter_mut().zip(fixed) {
            if !f {
                *v = 0.0;
            }
        }
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    let stats = match cfg.method {
        Method::Sor => sor(lat, fixed, x, cfg, scale),
        Method::MultigridCg => mg_cg(lat, fixed, x, cfg, scale),
    }?;
    log::debug!(
        "lattice {:?} solved in {} iterations, residual {:.2e}",
        lat.n,
        stats.iterations,
        stats.residual
    );
    Ok(stats)
}

/// Largest |(L x)_p| / D over free nodes: the correction a Jacobi step
/// would make, in potential units.
pub fn max_correction(lat: &Lattice, fixed: &[bool], x: &[f64]) -> f64 {
    let mut r = vec![0.0; lat.len()];
    residual(lat, fixed, &vec![0.0; lat.len()], x, &mut r);
    scaled_max(lat, &r)
}

/// max |r_p / D_p|.
fn scaled_max(lat: &Lattice, r: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for_nodes(lat, None, |p, t| {
        m = m.max((r[p] / diag(&t)).abs());
    });
    m
}

/// Visits every node of one colour (or all nodes if `color` is `None`)
/// with its flat index and per-axis stencil.
#[inline]
fn for_nodes<F: FnMut(usize, [Tap; 3])>(lat: &Lattice, color: Option<usize>, mut f: F) {
    let [n0, n1, n2] = lat.n;
    for k in 0..n2 {
        let tz = lat.stencil(2, k);
        for j in 0..n1 {
            let ty = lat.stencil(1, j);
            let row = lat.idx(0, j, k);
            let (start, step) = match color {
                Some(c) => ((j + k + c) % 2, 2),
                None => (0, 1),
            };
            let mut i = start;
            while i < n0 {
                f(row + i, [lat.stencil(0, i), ty, tz]);
                i += step;
            }
        }
    }
}

#[inline]
fn diag(t: &[Tap; 3]) -> f64 {
    t.iter().map(|a| a.cm + a.cp).sum()
}

#[inline]
fn neighbour_sum(x: &[f64], p: usize, t: &[Tap; 3]) -> f64 {
    let p = p as isize;
    let mut s = 0.0;
    for a in t {
        if a.om != 0 {
            s += a.cm * x[(p + a.om) as usize] + a.cp * x[(p + a.op) as usize];
        }
    }
    s
}

/// r = f − A x on free nodes, where A = −L; zero on fixed nodes.
fn residual(lat: &Lattice, fixed: &[bool], f: &[f64], x: &[f64], r: &mut [f64]) {
    for_nodes(lat, None, |p, t| {
        r[p] = if fixed[p] {
            0.0
        } else {
            f[p] + neighbour_sum(x, p, &t) - diag(&t) * x[p]
        };
    });
}

/// q = A p with p treated as zero on fixed nodes.
fn apply(lat: &Lattice, fixed: &[bool], p_in: &[f64], q: &mut [f64]) {
    for_nodes(lat, None, |p, t| {
        q[p] = if fixed[p] {
            0.0
        } else {
            diag(&t) * p_in[p] - neighbour_sum(p_in, p, &t)
        };
    });
}

fn gs_color(lat: &Lattice, fixed: &[bool], f: &[f64], x: &mut [f64], color: usize) {
    for_nodes(lat, Some(color), |p, t| {
        if !fixed[p] {
            x[p] = (f[p] + neighbour_sum(x, p, &t)) / diag(&t);
        }
    });
}

fn wdot(lat: &Lattice, a: &[f64], b: &[f64]) -> f64 {
    let [n0, n1, n2] = lat.n;
    let mut total = 0.0;
    for k in 0..n2 {
        let wk = lat.weight_1d(2, k);
        for j in 0..n1 {
            let wjk = wk * lat.weight_1d(1, j);
            let row = lat.idx(0, j, k);
            let mut s = 0.0;
            for i in 0..n0 {
                s += lat.weight_1d(0, i) * a[row + i] * b[row + i];
            }
            total += wjk * s;
        }
    }
    total
}

fn sor(lat: &Lattice, fixed: &[bool], x: &mut [f64], cfg: &SolverConfig, scale: f64) -> Result<SolveStats, SolveError> {
    // Jacobi spectral radius of the enclosing box, taken at the finest
    // spacing of each axis, sets the relaxation factor.
    let mut rho = 0.0;
    let mut dsum = 0.0;
    for a in 0..3 {
        if lat.active(a) {
            let h = lat.min_spacing(a);
            let span = if lat.mirror[a] { 2 * (lat.n[a] - 1) } else { lat.n[a] - 1 };
            rho += (std::f64::consts::PI / span as f64).cos() / (h * h);
            dsum += 1.0 / (h * h);
        }
    }
    rho /= dsum;
    let omega = 2.0 / (1.0 + (1.0 - rho * rho).max(0.0).sqrt());
    let mut last = f64::INFINITY;
    for sweep in 1..=cfg.max_iters {
        for color in 0..2 {
            for_nodes(lat, Some(color), |p, t| {
                if !fixed[p] {
                    let target = neighbour_sum(x, p, &t) / diag(&t);
                    x[p] += omega * (target - x[p]);
                }
            });
        }
        if sweep % SOR_CHECK_EVERY == 0 || sweep == cfg.max_iters {
            last = max_correction(lat, fixed, x) / scale;
            if !last.is_finite() {
                break;
            }
            if last < cfg.tol {
                return Ok(SolveStats { iterations: sweep, residual: last });
            }
        }
    }
    Err(SolveError::NoConvergence {
        max_iters: cfg.max_iters,
        residual: last,
    })
}

const SOR_CHECK_EVERY: usize = 10;

struct Level {
    lat: Lattice,
    fixed: Vec<bool>,
    /// Axes halved on the way to the next coarser level.
    coarsen: [bool; 3],
    f: Vec<f64>,
    e: Vec<f64>,
    r: Vec<f64>,
}

const COARSEST_NODES: usize = 4096;

fn coarsen_axes(lat: &Lattice) -> Option<[bool; 3]> {
    let h_min = (0..3)
        .filter(|&a| lat.active(a))
        .map(|a| lat.min_spacing(a))
        .fold(f64::INFINITY, f64::min);
    let mut axes = [false; 3];
    for a in 0..3 {
        let n = lat.n[a];
        axes[a] = lat.active(a) && (n - 1).is_multiple_of(2) && n >= 5 && lat.min_spacing(a) <= 1.5 * h_min;
    }
    axes.iter().any(|&b| b).then_some(axes)
}

fn build_hierarchy(lat: &Lattice, fixed: &[bool]) -> Vec<Level> {
    let mut levels = Vec::new();
    let mut cur_lat = lat.clone();
    let mut cur_fixed = fixed.to_vec();
    loop {
        let axes = if cur_lat.len() > COARSEST_NODES {
            coarsen_axes(&cur_lat)
        } else {
            None
        };
        let len = cur_lat.len();
        let Some(axes) = axes else {
            levels.push(Level {
                lat: cur_lat,
                fixed: cur_fixed,
                coarsen: [false; 3],
                f: vec![0.0; len],
                e: vec![0.0; len],
                r: vec![0.0; len],
            });
            break;
        };
        let positions = [0, 1, 2].map(|a| {
            let x = cur_lat.positions(a);
            if axes[a] {
                x.iter().step_by(2).copied().collect()
            } else {
                x.to_vec()
            }
        });
        let coarse = Lattice::new(positions, cur_lat.mirror);
        let mut coarse_fixed = vec![false; coarse.len()];
        for (q, cf) in coarse_fixed.iter_mut().enumerate() {
            let c = coarse.coords(q);
            let fi = |a: usize| if axes[a] { 2 * c[a] } else { c[a] };
            *cf = cur_fixed[cur_lat.idx(fi(0), fi(1), fi(2))];
        }
        levels.push(Level {
            lat: cur_lat,
            fixed: cur_fixed,
            coarsen: axes,
            f: vec![0.0; len],
            e: vec![0.0; len],
            r: vec![0.0; len],
        });
        cur_lat = coarse;
        cur_fixed = coarse_fixed;
    }
    levels
}

/// Up to three (index, weight) taps along one axis.
type Taps = ([(usize, f64); 3], usize);

fn single(i: usize) -> Taps {
    ([(i, 1.0), (0, 0.0), (0, 0.0)], 1)
}

/// Linear-interpolation taps for fine index `fi` on a halved axis.
fn prolong_taps(x: &[f64], fi: usize) -> Taps {
    if fi.is_multiple_of(2) {
        return single(fi / 2);
    }
    let span = x[fi + 1] - x[fi - 1];
    (
        [
            ((fi - 1) / 2, (x[fi + 1] - x[fi]) / span),
            (fi.div_ceil(2), (x[fi] - x[fi - 1]) / span),
            (0, 0.0),
        ],
        2,
    )
}

/// Restriction taps R = W_c⁻¹ Pᵀ W_f for coarse index `ci`; on a uniform
/// axis these are the full-weighting (¼, ½, ¼), folded at a mirror plane.
fn restrict_taps(fine: &Lattice, coarse: &Lattice, a: usize, ci: usize) -> Taps {
    let x = fine.positions(a);
    let c = 2 * ci;
    let wc = coarse.weight_1d(a, ci);
    let wf = |i: usize| fine.weight_1d(a, i) / wc;
    let mut t = single(c);
    t.0[0].1 = wf(c);
    if c > 0 {
        t.0[t.1] = (c - 1, wf(c - 1) * (x[c - 1] - x[c - 2]) / (x[c] - x[c - 2]));
        t.1 += 1;
    }
    if c + 1 < x.len() {
        t.0[t.1] = (c + 1, wf(c + 1) * (x[c + 2] - x[c + 1]) / (x[c + 2] - x[c]));
        t.1 += 1;
    }
    t
}

fn restrict(fine: &Lattice, axes: [bool; 3], r: &[f64], coarse: &Lattice, coarse_fixed: &[bool], out: &mut [f64]) {
    let taps = |a: usize, ci: usize| if axes[a] { restrict_taps(fine, coarse, a, ci) } else { single(ci) };
    for q in 0..coarse.len() {
        if coarse_fixed[q] {
            out[q] = 0.0;
            continue;
        }
        let c = coarse.coords(q);
        let (tx, nx) = taps(0, c[0]);
        let (ty, ny) = taps(1, c[1]);
        let (tz, nz) = taps(2, c[2]);
        let mut s = 0.0;
        for &(k, wz) in &tz[..nz] {
            for &(j, wy) in &ty[..ny] {
                let wyz = wy * wz;
                let row = fine.idx(0, j, k);
                for &(i, wx) in &tx[..nx] {
                    s += wx * wyz * r[row + i];
                }
            }
        }
        out[q] = s;
    }
}

/// e_fine += P e_coarse on free fine nodes.
fn prolong_add(fine: &Lattice, fine_fixed: &[bool], axes: [bool; 3], ec: &[f64], coarse: &Lattice, e: &mut [f64]) {
    let taps = |a: usize, fi: usize| if axes[a] { prolong_taps(fine.positions(a), fi) } else { single(fi) };
    for p in 0..fine.len() {
        if fine_fixed[p] {
            continue;
        }
        let c = fine.coords(p);
        let (tx, nx) = taps(0, c[0]);
        let (ty, ny) = taps(1, c[1]);
        let (tz, nz) = taps(2, c[2]);
        let mut s = 0.0;
        for &(k, wz) in &tz[..nz] {
            for &(j, wy) in &ty[..ny] {
                let row = coarse.idx(0, j, k);
                for &(i, wx) in &tx[..nx] {
                    s += wx * wy * wz * ec[row + i];
                }
            }
        }
        e[p] += s;
    }
}

const PRE_SMOOTH: usize = 2;
const POST_SMOOTH: usize = 2;

fn vcycle(levels: &mut [Level]) {
    let (head, tail) = levels.split_first_mut().expect("non-empty hierarchy");
    head.e.iter_mut().for_each(|v| *v = 0.0);
    if tail.is_empty() {
        coarse_solve(head);
        return;
    }
    for _ in 0..PRE_SMOOTH {
        gs_color(&head.lat, &head.fixed, &head.f, &mut head.e, 0);
        gs_color(&head.lat, &head.fixed, &head.f, &mut head.e, 1);
    }
    residual(&head.lat, &head.fixed, &head.f, &head.e, &mut head.r);
    {
        let next = &mut tail[0];
        restrict(&head.lat, head.coarsen, &head.r, &next.lat, &next.fixed, &mut next.f);
    }
    vcycle(tail);
    let next = &tail[0];
    prolong_add(&head.lat, &head.fixed, head.coarsen, &next.e, &next.lat, &mut head.e);
    for _ in 0..POST_SMOOTH {
        gs_color(&head.lat, &head.fixed, &head.f, &mut head.e, 1);
        gs_color(&head.lat, &head.fixed, &head.f, &mut head.e, 0);
    }
}

fn coarse_solve(level: &mut Level) {
    let lat = &level.lat;
    let len = lat.len();
    let x = &mut level.e;
    let mut r = level.f.clone();
    for (v, f) in r.iter_mut().zip(&level.fixed) {
        if *f {
            *v = 0.0;
        }
    }
    let mut p = r.clone();
    let mut q = vec![0.0; len];
    let mut rr = wdot(lat, &r, &r);
    let stop = rr * 1e-24;
    for _ in 0..4 * len {
        if rr <= stop || rr == 0.0 {
            break;
        }
        apply(lat, &level.fixed, &p, &mut q);
        let alpha = rr / wdot(lat, &p, &q);
        for t in 0..len {
            x[t] += alpha * p[t];
            r[t] -= alpha * q[t];
        }
        let rr_new = wdot(lat, &r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for t in 0..len {
            p[t] = r[t] + beta * p[t];
        }
    }
}

fn mg_cg(lat: &Lattice, fixed: &[bool], x: &mut [f64], cfg: &SolverConfig, scale: f64) -> Result<SolveStats, SolveError> {
    let mut levels = build_hierarchy(lat, fixed);
    log::trace!(
        "multigrid hierarchy: {:?}",
        levels.iter().map(|l| l.lat.n).collect::<Vec<_>>()
    );
    let len = lat.len();
    let zero = vec![0.0; len];
    let mut r = vec![0.0; len];
    residual(lat, fixed, &zero, x, &mut r);
    let mut rel = scaled_max(lat, &r) / scale;
    if rel < cfg.tol {
        return Ok(SolveStats { iterations: 0, residual: rel });
    }
    levels[0].f.copy_from_slice(&r);
    vcycle(&mut levels);
    let mut p = levels[0].e.clone();
    let mut rz = wdot(lat, &r, &p);
    let mut q = vec![0.0; len];
    for it in 1..=cfg.max_iters {
        apply(lat, fixed, &p, &mut q);
        let pq = wdot(lat, &p, &q);
        let alpha = rz / pq;
        if !alpha.is_finite() {
            break;
        }
        for t in 0..len {
            x[t] += alpha * p[t];
            r[t] -= alpha * q[t];
        }
        rel = scaled_max(lat, &r) / scale;
        if rel < cfg.tol {
            // Confirm against the true residual before reporting success.
            residual(lat, fixed, &zero, x, &mut r);
            rel = scaled_max(lat, &r) / scale;
            if rel < cfg.tol {
                return Ok(SolveStats { iterations: it, residual: rel });
            }
        }
        levels[0].f.copy_from_slice(&r);
        vcycle(&mut levels);
        let z = &levels[0].e;
        let rz_new = wdot(lat, &r, z);
        let beta = rz_new / rz;
        rz = rz_new;
        for t in 0..len {
            p[t] = z[t] + beta * p[t];
        }
    }
    Err(SolveError::NoConvergence {
        max_iters: cfg.max_iters,
        residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(n: [usize; 3], h: [f64; 3], mirror: [bool; 3]) -> (Lattice, Vec<bool>) {
        let lat = Lattice::uniform(n, h, mirror);
        let mut fixed = vec![false; lat.len()];
        for (p, f) in fixed.iter_mut().enumerate() {
            let c = lat.coords(p);
            for a in 0..3 {
                if n[a] > 1 && (c[a] + 1 == n[a] || (c[a] == 0 && !mirror[a])) {
                    *f = true;
                }
            }
        }
        (lat, fixed)
    }

    fn cfg(method: Method) -> SolverConfig {
        SolverConfig {
            method,
            tol: 1e-11,
            max_iters: 200_000,
        }
    }

    /// Harmonic polynomial x² − y² is reproduced exactly by the 5-point stencil.
    fn harmonic_case(method: Method) {
        let (lat, fixed) = boxed([33, 41, 1], [0.5, 0.25, 1.0], [false; 3]);
        let pos = |p: usize| {
            let c = lat.coords(p);
            (c[0] as f64 * 0.5 - 3.0, c[1] as f64 * 0.25 - 2.0)
        };
        let exact: Vec<f64> = (0..lat.len()).map(|p| {
            let (x, y) = pos(p);
            x * x - y * y + 0.3 * x * y
        }).collect();
        let mut x: Vec<f64> = (0..lat.len()).map(|p| if fixed[p] { exact[p] } else { 0.0 }).collect();
        solve(&lat, &fixed, &mut x, &cfg(method)).unwrap();
        for p in 0..lat.len() {
            assert!((x[p] - exact[p]).abs() < 1e-8, "node {p}: {} vs {}", x[p], exact[p]);
        }
    }

    #[test]
    fn sor_reproduces_harmonic_polynomial() {
        harmonic_case(Method::Sor);
    }

    #[test]
    fn mgcg_reproduces_harmonic_polynomial() {
        harmonic_case(Method::MultigridCg);
    }

    #[test]
    fn graded_lattice_reproduces_harmonic_polynomial() {
        // Geometric stretching on x, uneven steps on y, mirror at x = 0.
        let xs: Vec<f64> = (0..33).map(|i| 0.2 * (1.08f64.powi(i) - 1.0) / 0.08).collect();
        let ys: Vec<f64> = (0..41).map(|j| j as f64 * 0.25 + 0.02 * (j % 3) as f64 - 2.0).collect();
        let lat = Lattice::new([xs.clone(), ys.clone(), vec![0.0]], [true, false, false]);
        let mut fixed = vec![false; lat.len()];
        for (p, f) in fixed.iter_mut().enumerate() {
            let c = lat.coords(p);
            *f = c[0] == 32 || c[1] == 0 || c[1] == 40;
        }
        // Even in x, so the mirror is exact.
        let exact: Vec<f64> = (0..lat.len())
            .map(|p| {
                let c = lat.coords(p);
                let (x, y) = (xs[c[0]], ys[c[1]]);
                x * x - y * y + 0.7 * y
            })
            .collect();
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for m in [Method::Sor, Method::MultigridCg] {
            let mut x: Vec<f64> = (0..lat.len()).map(|p| if fixed[p] { exact[p] } else { 0.0 }).collect();
            solve(&lat, &fixed, &mut x, &cfg(m)).unwrap();
            for p in 0..lat.len() {
                assert!((x[p] - exact[p]).abs() < 1e-8 * scale, "{m:?} node {p}: {} vs {}", x[p], exact[p]);
            }
        }
    }

    #[test]
    fn mirror_matches_full_domain() {
        // Full domain symmetric about i = 16; a point electrode off axis.
        let (full, mut ff) = boxed([33, 33, 1], [1.0; 3], [false; 3]);
        let (half, mut hf) = boxed([17, 33, 1], [1.0; 3], [true, false, false]);
        let mut xf = vec![0.0; full.len()];
        let mut xh = vec![0.0; half.len()];
        for (i, j, v) in [(16usize, 20usize, 1.0), (22, 10, -0.5), (10, 10, -0.5)] {
            let p = full.idx(i, j, 0);
            ff[p] = true;
            xf[p] = v;
            if i >= 16 {
                let q = half.idx(i - 16, j, 0);
                hf[q] = true;
                xh[q] = v;
            }
        }
        for m in [Method::Sor, Method::MultigridCg] {
            let mut a = xf.clone();
            let mut b = xh.clone();
            solve(&full, &ff, &mut a, &cfg(m)).unwrap();
            solve(&half, &hf, &mut b, &cfg(m)).unwrap();
            for j in 0..33 {
                for i in 0..17 {
                    let va = a[full.idx(16 + i, j, 0)];
                    let vb = b[half.idx(i, j, 0)];
                    assert!((va - vb).abs() < 1e-9, "{m:?} ({i},{j}) {va} {vb}");
                }
            }
        }
    }

    #[test]
    fn three_dimensional_methods_agree() {
        let (lat, mut fixed) = boxed([17, 17, 21], [1.0, 0.5, 1.0], [true, false, true]);
        let mut x0 = vec![0.0; lat.len()];
        for k in 0..6 {
            for j in 10..13 {
                let p = lat.idx(5, j, k);
                fixed[p] = true;
                x0[p] = 2.0;
            }
        }
        let mut a = x0.clone();
        let mut b = x0.clone();
        let sa = solve(&lat, &fixed, &mut a, &cfg(Method::Sor)).unwrap();
        let sb = solve(&lat, &fixed, &mut b, &cfg(Method::MultigridCg)).unwrap();
        assert!(sb.iterations < sa.iterations);
        for p in 0..lat.len() {
            assert!((a[p] - b[p]).abs() < 1e-8);
        }
        assert!(max_correction(&lat, &fixed, &b) < 1e-10);
    }

    #[test]
    fn open_face_is_rejected() {
        let lat = Lattice::uniform([5, 5, 1], [1.0; 3], [false; 3]);
        let fixed = vec![false; 25];
        let mut x = vec![0.0; 25];
        assert!(matches!(
            solve(&lat, &fixed, &mut x, &SolverConfig::default()),
            Err(SolveError::OpenBoundary { .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let (lat, fixed) = boxed([65, 65, 1], [1.0; 3], [false; 3]);
        let mut x: Vec<f64> = (0..lat.len()).map(|p| if fixed[p] { 1.0 } else { 0.0 }).collect();
        let c = SolverConfig { method: Method::Sor, tol: 1e-12, max_iters: 3 };
        match solve(&lat, &fixed, &mut x, &c) {
            Err(SolveError::NoConvergence { max_iters: 3, residual }) => assert!(residual > 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
