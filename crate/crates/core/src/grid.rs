//! Graded node distributions: a uniform core around the electrodes followed
//! by geometric growth out to a distant grounded box.

/// Default largest ratio between neighbouring cells in the graded region.
pub const DEFAULT_STRETCH: f64 = 1.08;

/// Cell counts are multiples of this, so the multigrid hierarchy is deep.
const CELL_QUANTUM: usize = 16;

fn round_up(n: usize) -> usize {
    n.max(1).div_ceil(CELL_QUANTUM) * CELL_QUANTUM
}

/// Σ_{k=1..m} r^k.
fn growth_sum(r: f64, m: usize) -> f64 {
    if (r - 1.0).abs() < 1e-12 {
        m as f64
    } else {
        r * (r.powi(m as i32) - 1.0) / (r - 1.0)
    }
}

/// Node positions from 0 outwards: spacing `h` up to at least `core`, then
/// geometric growth with ratio at most `stretch` ending exactly at `extent`.
///
/// With `stretch <= 1`, or when the core already covers the extent, the
/// axis is uniform and its last node may lie beyond `extent`.
pub fn half_axis(h: f64, core: f64, extent: f64, stretch: f64) -> Vec<f64> {
    let uniform = |cells: usize| (0..=cells).map(|i| i as f64 * h).collect::<Vec<_>>();
    let nc = (core / h - 1e-9).ceil().max(1.0) as usize;
    if stretch <= 1.0 || (nc + 1) as f64 * h >= extent {
        return uniform(round_up((extent / h - 1e-9).ceil() as usize));
    }
    for extra in 0..4 * CELL_QUANTUM {
        let n_core = nc + extra;
        let rem = (extent - n_core as f64 * h) / h;
        if rem <= 1.0 {
            break;
        }
        let mut m = 1;
        while growth_sum(stretch, m) < rem {
            m += 1;
        }
        if !(n_core + m).is_multiple_of(CELL_QUANTUM) {
            continue;
        }
        // Ratio hitting the box exactly with m graded cells.
        let (mut lo, mut hi) = (0.5, stretch);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if growth_sum(mid, m) < rem {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        let mut x = uniform(n_core);
        let mut step = h;
        for _ in 0..m {
            step *= r;
            let last = *x.last().expect("non-empty core");
            x.push(last + step);
        }
        *x.last_mut().expect("non-empty") = extent;
        return x;
    }
    uniform(round_up((extent / h - 1e-9).ceil() as usize))
}

/// Mirror a half axis (starting at 0) into a symmetric full axis.
pub fn symmetric_axis(half: &[f64]) -> Vec<f64> {
    half.iter().rev().map(|x| -x).chain(half[1..].iter().copied()).collect()
}

/// Cell `i` with x_i ≤ x ≤ x_{i+1} and the fractional offset inside it.
pub fn locate(xs: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = xs.len();
    if n < 2 {
        return (n == 1 && (x - xs[0]).abs() <= 1e-9).then_some((0, 0.0));
    }
    let tol = 1e-9 * (xs[n - 1] - xs[0]);
    if !(x >= xs[0] - tol && x <= xs[n - 1] + tol) {
        return None;
    }
    let i = xs.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
    let t = ((x - xs[i]) / (xs[i + 1] - xs[i])).clamp(0.0, 1.0);
    Some((i, t))
}

/// Inclusive node index range inside `[lo, hi]`; `None` if empty.
pub fn span(xs: &[f64], b: [f64; 2]) -> Option<(usize, usize)> {
    let tol = 1e-9 * (xs[xs.len() - 1] - xs[0]).max(1.0);
    let lo = xs.partition_point(|&v| v < b[0] - tol);
    let hi = xs.partition_point(|&v| v <= b[1] + tol);
    (hi > lo).then(|| (lo, hi - 1))
}

/// First derivative at node `i` from neighbouring values; exact for
/// quadratics in the interior, one-sided at the ends.
pub fn derivative<F: Fn(usize) -> f64>(xs: &[f64], v: F, i: usize) -> f64 {
    let n = xs.len();
    if n < 2 {
        0.0
    } else if i == 0 {
        (v(1) - v(0)) / (xs[1] - xs[0])
    } else if i + 1 == n {
        (v(i) - v(i - 1)) / (xs[i] - xs[i - 1])
    } else {
        let hm = xs[i] - xs[i - 1];
        let hp = xs[i + 1] - xs[i];
        (hm * hm * v(i + 1) - hp * hp * v(i - 1) + (hp * hp - hm * hm) * v(i)) / (hm * hp * (hm + hp))
    }
}

/// Smallest spacing along an axis.
pub fn min_spacing(xs: &[f64]) -> f64 {
    xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_axis_shape() {
        let x = half_axis(0.25, 10.0, 640.0, 1.08);
        assert_eq!((x.len() - 1) % 16, 0);
        assert_eq!(x[0], 0.0);
        assert_eq!(*x.last().unwrap(), 640.0);
        let steps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.iter().take_while(|s| (**s - 0.25).abs() < 1e-12).count() >= 40);
        for w in steps.windows(2) {
            assert!(w[1] / w[0] <= 1.08 + 1e-9, "{w:?}");
            assert!(w[1] >= w[0] * (1.0 - 1e-12));
        }
    }

    #[test]
    fn uniform_fallback() {
        let x = half_axis(0.5, 100.0, 20.0, 1.08);
        assert_eq!(x.len(), 49);
        assert_eq!(x[48], 24.0);
        let y = half_axis(1.0, 2.0, 30.0, 1.0);
        assert_eq!(y.len(), 33);
    }

    #[test]
    fn symmetric_and_lookup() {
        let full = symmetric_axis(&[0.0, 1.0, 3.0]);
        assert_eq!(full, vec![-3.0, -1.0, 0.0, 1.0, 3.0]);
        assert_eq!(locate(&full, 2.0), Some((3, 0.5)));
        assert_eq!(locate(&full, 3.0), Some((3, 1.0)));
        assert_eq!(locate(&full, -3.0), Some((0, 0.0)));
        assert_eq!(locate(&full, 3.5), None);
        assert_eq!(span(&full, [-1.0, 2.0]), Some((1, 3)));
        assert_eq!(span(&full, [1.5, 2.0]), None);
    }

    #[test]
    fn derivative_exact_for_quadratic() {
        let xs = [0.0, 0.3, 1.0, 1.2, 2.5];
        let f = |x: f64| 2.0 * x * x - x + 4.0;
        for i in 1..4 {
            let d = derivative(&xs, |t| f(xs[t]), i);
            assert!((d - (4.0 * xs[i] - 1.0)).abs() < 1e-12);
        }
    }
}
