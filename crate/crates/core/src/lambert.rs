//! Complex Lambert W on every branch.
//!
//! `W_k(ξ)` solves `w e^w = ξ`. Branch cuts follow the usual convention:
//! values on a cut are continuous with the region above it
//! (counter-clockwise continuity), so `W_{-1}` is real on (−1/e, 0).

use std::f64::consts::{E, PI};

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LambertError {
    #[error("Lambert W iteration did not converge on branch {k} at {xi}")]
    NoConvergence { k: i64, xi: C64 },
    #[error("branch {k} is undefined at ξ = 0")]
    InvalidBranch { k: i64 },
    #[error("argument {0} is not finite")]
    NonFinite(C64),
}

const MAX_ITERS: usize = 100;
const BRANCH_POINT: f64 = -1.0 / E;

/// ⌈(Im ζ − π)/(2π)⌉: the branch whose image of e^ζ keeps z = ζ − W in the
/// principal strip.
pub fn select_branch(zeta: C64) -> i64 {
    ((zeta.im - PI) / (2.0 * PI)).ceil() as i64
}

fn tau() -> C64 {
    C64::new(0.0, 2.0 * PI)
}

/// Branch index implied by w + Log w − Log ξ; exact off the negative real axis.
fn implied_branch(w: C64, xi: C64) -> i64 {
    ((w + w.ln() - xi.ln()).im / (2.0 * PI)).round() as i64
}

fn on_negative_real_axis(xi: C64) -> bool {
    xi.im == 0.0 && xi.re < 0.0
}

fn in_branch_range(k: i64, w: C64) -> bool {
    let t = w.im / PI;
    match k {
        0 => t > -1.0 && t <= 1.0,
        k if k > 0 => t >= (2 * k - 2) as f64 && t < (2 * k + 1) as f64,
        k => t >= (2 * k - 1) as f64 && t <= (2 * k + 2) as f64,
    }
}

fn accepts(k: i64, w: C64, xi: C64) -> bool {
    if !(w.re.is_finite() && w.im.is_finite()) {
        return false;
    }
    if on_negative_real_axis(xi) {
        // The log identity is ambiguous on the cut; fall back to ranges,
        // plus the real-branch split at w = −1.
        return match k {
            0 => in_branch_range(0, w) && (xi.re < BRANCH_POINT || w.re >= -1.0 - 1e-7),
            -1 => in_branch_range(-1, w) && (xi.re < BRANCH_POINT || w.re <= -1.0 + 1e-7),
            _ => in_branch_range(k, w),
        };
    }
    implied_branch(w, xi) == k
}

fn asymptotic_guess(k: i64, xi: C64) -> C64 {
    let l1 = xi.ln() + tau() * k as f64;
    let l2 = l1.ln();
    l1 - l2 + l2 / l1 + l2 * (l2 - 2.0) / (2.0 * l1 * l1)
}

fn branch_point_series(sign: f64, xi: C64) -> C64 {
    let p = (2.0 * (E * xi + 1.0)).sqrt() * sign;
    -1.0 + p - p * p / 3.0 + p * p * p * (11.0 / 72.0)
}

fn candidates(k: i64, xi: C64) -> Vec<C64> {
    let mut out = Vec::with_capacity(4);
    let near_bp = (xi - BRANCH_POINT).norm() < 0.3;
    if near_bp {
        if k == 0 {
            out.push(branch_point_series(1.0, xi));
        } else if (k == -1 && xi.im >= 0.0) || (k == 1 && xi.im < 0.0) {
            out.push(branch_point_series(-1.0, xi));
        }
    }
    if k == 0 && xi.norm() < 0.5 {
        out.push(xi * (1.0 - xi * (1.0 - xi * (1.5 - xi * (8.0 / 3.0)))));
    }
    if k == 0 && xi.norm() < 10.0 && (xi + 1.0).norm() > 0.1 {
        let l = (xi + 1.0).ln();
        out.push(l * (1.0 - (l + 1.0).ln() / (l + 2.0)));
    }
    out.push(asymptotic_guess(k, xi));
    if k == -1 && on_negative_real_axis(xi) && xi.re > BRANCH_POINT {
        // Real lower branch: start below −1.
        out.push(C64::new((-xi.re).ln() - (-(-xi.re).ln()).ln(), 0.0));
    }
    out
}

fn halley(mut w: C64, xi: C64) -> Option<C64> {
    for _ in 0..MAX_ITERS {
        let ew = w.exp();
        let f = w * ew - xi;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return (f.norm() == 0.0).then_some(w);
        }
        w -= step;
        if step.norm() <= 4.0 * f64::EPSILON * w.norm().max(1.0) {
            return Some(w);
        }
    }
    // Near the branch point the step stalls at rounding level; accept a
    // small residual instead.
    ((w * w.exp() - xi).norm() <= 1e-13 * xi.norm().max(1.0)).then_some(w)
}

/// Newton on w + Log w = target, which never forms e^w.
fn log_newton(mut w: C64, target: C64) -> Option<C64> {
    for _ in 0..MAX_ITERS {
        let g = w + w.ln() - target;
        let step = g * w / (w + 1.0);
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        w -= step;
        if step.norm() <= 4.0 * f64::EPSILON * w.norm().max(1.0) {
            return Some(w);
        }
    }
    None
}

/// `W_k(ξ)`.
pub fn lambert_w(k: i64, xi: C64) -> Result<C64, LambertError> {
    if !(xi.re.is_finite() && xi.im.is_finite()) {
        return Err(LambertError::NonFinite(xi));
    }
    if xi == C64::new(0.0, 0.0) {
        return if k == 0 { Ok(xi) } else { Err(LambertError::InvalidBranch { k }) };
    }
    let at_bp = (xi - BRANCH_POINT).norm() <= 4.0 * f64::EPSILON;
    if at_bp && (k == 0 || (k == -1 && xi.im >= 0.0) || (k == 1 && xi.im < 0.0)) {
        return Ok(C64::new(-1.0, 0.0));
    }
    let big = xi.norm() > 1e100;
    let mut fallback = None;
    for guess in candidates(k, xi) {
        let w = if big || guess.re > 300.0 {
            log_newton(guess, xi.ln() + tau() * k as f64)
        } else {
            halley(guess, xi)
        };
        if let Some(w) = w {
            if accepts(k, w, xi) {
                return Ok(w);
            }
            fallback.get_or_insert(w);
        }
    }
    log::trace!("Lambert W branch check failed for k={k}, ξ={xi}; result {fallback:?}");
    Err(LambertError::NoConvergence { k, xi })
}

/// `W_k(e^ζ)` without forming e^ζ when Re ζ is large.
pub fn lambert_w_exp(k: i64, zeta: C64) -> Result<C64, LambertError> {
    if !(zeta.re.is_finite() && zeta.im.is_finite()) {
        return Err(LambertError::NonFinite(zeta));
    }
    if zeta.re < 20.0 {
        return lambert_w(k, zeta.exp());
    }
    // Log(e^ζ) = ζ − 2πi·m with m = select_branch(ζ).
    let target = zeta + tau() * (k - select_branch(zeta)) as f64;
    let guess = target - target.ln();
    log_newton(guess, target).ok_or(LambertError::NoConvergence { k, xi: zeta.exp() })
}
