//! Principal-axis angle against an eigen-decomposition of the xy block.

use std::f64::consts::FRAC_PI_2;

use iontrap::model::{GeometryUm, TrapGeometry};
use iontrap::pipeline::{RotationBasis, SolveOptions};
use iontrap::trapchar::{principal_axis_angle, rotated_form};
use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use proptest::prelude::*;

/// Angle of `v` with respect to the direction at angle `phi`, folded to
/// the distance from the nearest multiple of π/2.
fn misalignment(v: Vector2<f64>, phi: f64) -> f64 {
    let d = v.y.atan2(v.x) - phi;
    let r = d.rem_euclid(FRAC_PI_2);
    r.min(FRAC_PI_2 - r)
}

fn eigen_of(xx: f64, yy: f64, xy: f64) -> SymmetricEigen<f64, nalgebra::U2> {
    Matrix2::new(xx, xy, xy, yy).symmetric_eigen()
}

proptest! {
    #[test]
    fn axes_are_eigenvectors(eps in -3.0f64..5.0, lambda in -5.0f64..5.0) {
        prop_assume!((2.0 * eps - 1.0).abs() > 1e-3 || lambda.abs() > 1e-3);
        let theta = principal_axis_angle(eps, lambda).unwrap();
        // −εx² − (1−ε)y² + λxy.
        let e = eigen_of(-eps, -(1.0 - eps), 0.5 * lambda);
        prop_assume!((e.eigenvalues[0] - e.eigenvalues[1]).abs() > 1e-6);
        // x = x′cosθ + y′sinθ puts the x′ axis at −θ.
        for k in 0..2 {
            prop_assert!(misalignment(e.eigenvectors.column(k).into(), -theta) < 1e-9);
        }
        let (xx, yy, xy) = rotated_form(eps, lambda, theta);
        prop_assert!(xy.abs() < 1e-12 * (xx.abs() + yy.abs()));
        let mut got = [xx, yy];
        let mut want = [e.eigenvalues[0], e.eigenvalues[1]];
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        prop_assert!((got[0] - want[0]).abs() < 1e-10 && (got[1] - want[1]).abs() < 1e-10);
    }
}

#[test]
fn numerical_rotation_matches_hessian_eigenvectors() {
    let g = TrapGeometry::from_um(GeometryUm { a: 16.0, d: 4.0, w: 4.0, b: 24.0, c: 16.0, g: 4.0, h: 100.0 }).unwrap();
    let opts = SolveOptions { box_factor: 2.0, grid_scale: 2.0, ..Default::default() };
    let basis = RotationBasis::solve(&g, &opts).unwrap();
    let sym = basis.at(1.0, 0.0).unwrap();
    assert!(sym.theta.abs() < 1e-9, "θ = {}", sym.theta);
    for uc in [-0.2, 0.1, 0.3] {
        let r = basis.at(1.0, uc).unwrap();
        let h = r.hessian;
        // The angle takes H_yy from the trace-free condition.
        let e = eigen_of(h.xx, -(h.xx + h.zz), h.xy);
        // The raw block differs by the solver's trace residual.
        let raw = eigen_of(h.xx, h.yy, h.xy);
        let slack = 10.0 * (h.trace() / h.zz).abs();
        for k in 0..2 {
            let m = misalignment(e.eigenvectors.column(k).into(), -r.theta);
            assert!(m < 1e-9, "uc = {uc}: misaligned by {m}");
            let m = misalignment(raw.eigenvectors.column(k).into(), -r.theta);
            assert!(m < slack, "uc = {uc}: raw block misaligned by {m}");
        }
    }
}
