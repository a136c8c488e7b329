//! Small least-squares helpers for extracting local derivatives.

use nalgebra::{DMatrix, DVector};

/// Least-squares polynomial coefficients `c[0] + c[1] t + ...` of the given
/// degree. Abscissae are rescaled to [−1, 1] internally for conditioning.
pub fn polyfit(t: &[f64], v: &[f64], degree: usize) -> Option<Vec<f64>> {
    assert_eq!(t.len(), v.len());
    if t.len() <= degree {
        return None;
    }
    let scale = t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    let a = DMatrix::from_fn(t.len(), degree + 1, |i, j| (t[i] / scale).powi(j as i32));
    let b = DVector::from_column_slice(v);
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-13).ok()?;
    Some((0..=degree).map(|j| x[j] / scale.powi(j as i32)).collect())
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
