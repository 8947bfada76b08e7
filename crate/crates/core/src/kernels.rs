//! Closed-form time antiderivatives of the 2D retarded single-layer kernel
//! and the kernels of the residual derivatives on the flat segment.
//!
//! The raw kernel `G(s, r) = H(s - r) / (2 pi sqrt(s^2 - r^2))` is never
//! integrated numerically; everything below is an exact antiderivative.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

const INV_TWO_PI: f64 = 1.0 / (2.0 * PI);

/// Heaviside with `H(0) = 1`.
#[inline]
pub fn heaviside(s: f64) -> f64 {
    if s >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// The fundamental solution `G(s, r)` for `s > r`, zero otherwise.
#[inline]
pub fn green(s: f64, r: f64) -> f64 {
    if s > r {
        INV_TWO_PI / ((s - r) * (s + r)).sqrt()
    } else {
        0.0
    }
}

/// `arccosh(lag / r)` inside the light cone, zero outside. Evaluated as
/// `ln_1p((g + sqrt(g (lag + r))) / r)` with the exact gap `g = lag - r`,
/// which keeps full accuracy at the cone edge.
#[inline]
pub fn cone_acosh(lag: f64, r: f64) -> f64 {
    let gap = lag - r;
    if gap <= 0.0 {
        return 0.0;
    }
    ((gap + (gap * (lag + r)).sqrt()) / r).ln_1p()
}

/// `gcal(t, tau, r) = (1 / 2 pi) H(t - tau - r) arccosh((t - tau) / r)`, the
/// time antiderivative of the retarded kernel. Requires `r > 0`.
#[inline]
pub fn gcal(t: f64, tau: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gcal needs a positive distance, got r = {r}"
        )));
    }
    Ok(gcal_unchecked(t - tau, r))
}

/// [`gcal`] in terms of the lag `t - tau`, without the domain check.
#[inline]
pub fn gcal_unchecked(lag: f64, r: f64) -> f64 {
    INV_TWO_PI * cone_acosh(lag, r)
}

/// Logarithmic form `log(s + sqrt(s^2 - r^2)) - log(r)` of [`gcal`].
pub fn gcal_log(t: f64, tau: f64, r: f64) -> f64 {
    let s = t - tau;
    if s - r <= 0.0 {
        return 0.0;
    }
    INV_TWO_PI * ((s + (s * s - r * r).max(0.0).sqrt()).ln() - r.ln())
}

#[inline]
fn clamped_sqrt(v: f64) -> f64 {
    v.max(0.0).sqrt()
}

/// `arctan(u / sqrt(lag^2 - u^2))` with the radicand clamped at zero.
#[inline]
fn cone_atan(u: f64, lag: f64) -> f64 {
    (u / clamped_sqrt(lag * lag - u * u)).atan()
}

/// Kernel of the time derivative of the residual:
/// `F(t, tau, x, y) = int_0^y H(t - tau - |x - z|) / sqrt((t - tau)^2 - (x - z)^2) dz`,
/// written as the three-arctangent expression with Heaviside gates.
pub fn kernel_f(t: f64, tau: f64, x: f64, y: f64) -> f64 {
    let lag = t - tau;
    if lag <= 0.0 {
        return 0.0;
    }
    let lo = (x - lag).max(0.0);
    let near = x.min(y);
    let gate_left = heaviside(near - lo);
    let far = (lag + x).min(y);
    let gate_right = heaviside(far - x) * heaviside(y - x);
    // x - lo and x - far, formed without cancellation at the cone edge
    let x_minus_lo = lag.min(x);
    let x_minus_far = (-lag).max(x - y);

    -cone_atan(x - near, lag) * gate_left + cone_atan(x_minus_lo, lag) * gate_left
        - cone_atan(x_minus_far, lag) * gate_right
}

/// Kernel of the space derivative of the residual:
/// `S(t, tau, x, y) = int_0^tau H(t - s - |x - y|) / sqrt((t - s)^2 - (x - y)^2) ds`.
pub fn kernel_s(t: f64, tau: f64, x: f64, y: f64) -> f64 {
    let r = (x - y).abs();
    if tau.min(t - r) < 0.0 {
        return 0.0;
    }
    // log(s + sqrt(s^2 - r^2)) with the radicand factored
    let log_cone = |s: f64| (s + clamped_sqrt((s - r) * (s + r))).ln();
    // once the cone edge cuts the range the lower end sits exactly at s = r
    let lower = if tau >= t - r { r.ln() } else { log_cone(t - tau) };
    log_cone(t) - lower
}

/// `int_0^u H(lag - |v|) / sqrt(lag^2 - v^2) dv = arcsin(clamp(u / lag))`.
///
/// `kernel_f(t, tau, x, y) = cone_arcsin(x, t - tau) - cone_arcsin(x - y, t - tau)`.
#[inline]
pub fn cone_arcsin(u: f64, lag: f64) -> f64 {
    if lag <= 0.0 {
        return 0.0;
    }
    let m = u.abs();
    if m >= lag {
        FRAC_PI_2.copysign(u)
    } else {
        u.atan2(((lag - m) * (lag + m)).sqrt())
    }
}
