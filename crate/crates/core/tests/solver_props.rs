//! Field-solver invariants on small designs: maximum principle, mirror
//! symmetry, linearity and grid convergence.

use iontrap::model::{DriveConfig, GeometryUm, TrapGeometry};
use iontrap::multipole;
use iontrap::pipeline::{solve_cross_section, solve_static, SolveOptions};
use proptest::prelude::*;

fn geom(a: f64, d: f64, w: f64) -> TrapGeometry {
    TrapGeometry::from_um(GeometryUm { a, d, w, b: 24.0, c: 16.0, g: 4.0, h: 100.0 }).unwrap()
}

fn small() -> SolveOptions {
    SolveOptions { box_factor: 2.0, grid_scale: 2.0, ..Default::default() }
}

const DESIGNS: [(f64, f64, f64); 3] = [(16.0, 4.0, 4.0), (24.0, 4.0, 2.0), (32.0, 4.0, 4.0)];

#[test]
fn cross_section_obeys_maximum_principle_and_mirrors() {
    for (a, d, w) in DESIGNS {
        let g = geom(a, d, w);
        let drive = DriveConfig::new(10.0, 50.0, 0.0).unwrap();
        let f = solve_cross_section(&g, &drive, false, &small()).unwrap();
        let (nx, ny) = (f.nx, f.ny);
        for i in 0..nx {
            assert!((f.xs[i] + f.xs[nx - 1 - i]).abs() < 1e-9);
        }
        for j in 0..ny {
            for i in 0..nx {
                let v = f.value(i, j);
                assert!(v.abs() <= 5.0 + 1e-9, "|V| = {v} at ({i},{j})");
                // The balanced drive is odd under each mirror and even under inversion.
                let tol = 1e-6 * 5.0;
                assert!((v + f.value(nx - 1 - i, j)).abs() < tol, "x mirror at ({i},{j})");
                assert!((v + f.value(i, ny - 1 - j)).abs() < tol, "y mirror at ({i},{j})");
                assert!((v - f.value(nx - 1 - i, ny - 1 - j)).abs() < tol);
            }
        }
        let (ci, cj) = f.center_node();
        assert!(f.value(ci, cj).abs() < 1e-9);
    }
}

#[test]
fn quadrupole_coefficient_converges_on_halving() {
    for (a, d, w) in DESIGNS {
        let g = geom(a, d, w);
        let drive = DriveConfig::new(10.0, 50.0, 0.0).unwrap();
        let c2 = |scale: f64| {
            let opts = SolveOptions { grid_scale: scale, ..small() };
            let f = solve_cross_section(&g, &drive, false, &opts).unwrap();
            multipole::expand(&f, drive.v0, a / 8.0, multipole::DEFAULT_ORDER).unwrap().c[2]
        };
        let (coarse, fine) = (c2(1.0), c2(0.5));
        assert!((coarse / fine - 1.0).abs() < 0.01, "a={a}: C2 {coarse} vs {fine}");
    }
}

#[test]
fn static_field_bounded_by_electrodes() {
    let g = geom(16.0, 4.0, 4.0);
    let opts = small();
    let f = solve_static(&g, &opts.grid_3d(&g), &opts).unwrap();
    let [nx, ny, nz] = f.n.map(|n| n as isize);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in -nz + 1..nz {
        for j in -ny + 1..ny {
            for i in -nx + 1..nx {
                let v = f.value(i, j, k);
                lo = lo.min(v);
                hi = hi.max(v);
                assert_eq!(v, f.value(-i, j, k));
                assert_eq!(v, f.value(i, -j, -k));
            }
        }
    }
    assert!(lo >= -1e-9 && hi <= 1.0 + 1e-9, "range [{lo}, {hi}]");
    // The centre sits strictly between ground and the end-cap potential.
    let v0 = f.value(0, 0, 0);
    assert!(v0 > 0.0 && v0 < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn cross_section_is_linear_in_drive(v0 in 0.5f64..200.0) {
        let g = geom(16.0, 4.0, 4.0);
        let unit = solve_cross_section(&g, &DriveConfig::new(1.0, 50.0, 0.0).unwrap(), false, &small()).unwrap();
        let f = solve_cross_section(&g, &DriveConfig::new(v0, 50.0, 0.0).unwrap(), false, &small()).unwrap();
        for (a, b) in unit.values.iter().zip(&f.values) {
            prop_assert!((a * v0 - b).abs() < 1e-6 * v0);
        }
    }
}
