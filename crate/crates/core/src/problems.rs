//! The four Dirichlet data of the benchmark suite.
//!
//! Each datum provides `f`, `df/dt`, `df/dx` and the locations where `f` is
//! not smooth, which the right-hand side quadrature uses as breakpoints.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::cone_acosh;
use crate::quadrature::{Breakpoint, Integrator};

const INV_TWO_PI: f64 = 1.0 / (2.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DirichletDatum {
    /// Datum generated by the density `psi(t, x) = x t`.
    Smooth,
    /// Compactly supported `sin^4` peak in `t < 1/4`, `1/3 < x < 2/3`.
    Peak,
    /// `sin^2` ramp in `t - k x` reaching the plateau `1` at `t - k x = 1/8`.
    Ramp { k: f64 },
    /// `t^(2/3)`, uniform in space.
    TimePower,
}

impl DirichletDatum {
    /// Example by number, 1 to 4. Example 3 uses `theta = pi / 2`, so `k = 0`.
    pub fn example(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Self::Smooth),
            2 => Ok(Self::Peak),
            3 => Ok(Self::Ramp { k: 0.0 }),
            4 => Ok(Self::TimePower),
            _ => Err(Error::InvalidArgument(format!("unknown example id {n}"))),
        }
    }

    /// Example 3 with incidence angle `theta`, `k = cos(theta)`.
    pub fn ramp_with_angle(theta: f64) -> Self {
        let k = if (theta - FRAC_PI_2).abs() < 1e-15 { 0.0 } else { theta.cos() };
        Self::Ramp { k }
    }

    pub fn number(&self) -> u32 {
        match self {
            Self::Smooth => 1,
            Self::Peak => 2,
            Self::Ramp { .. } => 3,
            Self::TimePower => 4,
        }
    }

    /// Published reference energy for `T = 1`.
    pub fn reference_energy(&self) -> Option<f64> {
        match self {
            Self::Smooth => Some(0.037135),
            Self::Peak => Some(35.7403),
            Self::Ramp { k } if *k == 0.0 => Some(20.7339),
            Self::Ramp { .. } => None,
            Self::TimePower => Some(3.64917),
        }
    }

    /// Marking parameter used with this datum by default.
    pub fn default_theta(&self) -> f64 {
        match self {
            Self::Smooth => 0.2,
            _ => 0.5,
        }
    }

    pub fn f(&self, t: f64, x: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Smooth => smooth::f(t, x),
            Self::Peak => peak::time(t) * peak::space(x),
            Self::Ramp { k } => ramp::value(t - k * x),
            Self::TimePower => t.powf(2.0 / 3.0),
        }
    }

    pub fn df_dt(&self, t: f64, x: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Smooth => smooth::df_dt(t, x),
            Self::Peak => peak::time_derivative(t) * peak::space(x),
            Self::Ramp { k } => ramp::derivative(t - k * x),
            Self::TimePower => (2.0 / 3.0) * t.powf(-1.0 / 3.0),
        }
    }

    pub fn df_dx(&self, t: f64, x: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Smooth => smooth::df_dx(t, x),
            Self::Peak => peak::time(t) * peak::space_derivative(x),
            Self::Ramp { k } => -k * ramp::derivative(t - k * x),
            Self::TimePower => 0.0,
        }
    }

    pub fn time_kinks(&self) -> Vec<f64> {
        match *self {
            Self::Smooth | Self::TimePower => vec![0.0],
            Self::Peak => vec![0.0, 0.125, 0.25],
            Self::Ramp { k: 0.0 } => vec![0.0, 0.125],
            Self::Ramp { .. } => vec![],
        }
    }

    /// Points in `[0, 1]` where `f(t, .)` is not smooth.
    pub fn space_kinks(&self, t: f64) -> Vec<f64> {
        match *self {
            Self::Smooth => vec![t, 1.0 - t],
            Self::Peak => vec![1.0 / 3.0, 2.0 / 3.0],
            Self::Ramp { k } if k != 0.0 => vec![t / k, (t - 0.125) / k],
            Self::Ramp { .. } | Self::TimePower => vec![],
        }
    }

    /// `int_{x_lo}^{x_hi} f(t, x) dx` by composite Gauss split at the kinks.
    pub fn integrate_in_space(&self, t: f64, x_lo: f64, x_hi: f64, integrator: &Integrator) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::TimePower => (x_hi - x_lo) * self.f(t, 0.5),
            Self::Ramp { k } if *k == 0.0 => (x_hi - x_lo) * self.f(t, 0.5),
            _ => {
                let kinks: Vec<Breakpoint> = self.space_kinks(t).into_iter().map(Breakpoint::kink).collect();
                integrator.integrate(|x| self.f(t, x), x_lo, x_hi, &kinks)
            }
        }
    }
}

impl fmt::Display for DirichletDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Smooth => write!(f, "example1"),
            Self::Peak => write!(f, "example2"),
            Self::Ramp { k } if *k == 0.0 => write!(f, "example3"),
            Self::Ramp { k } => write!(f, "example3(k={k})"),
            Self::TimePower => write!(f, "example4"),
        }
    }
}

impl FromStr for DirichletDatum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches("example");
        trimmed
            .parse::<u32>()
            .map_err(|_| Error::InvalidArgument(format!("unknown example id {s:?}")))
            .and_then(Self::example)
    }
}

mod peak {
    use std::f64::consts::PI;

    pub fn time(t: f64) -> f64 {
        if t <= 0.0 || t >= 0.25 {
            0.0
        } else if t <= 0.125 {
            (4.0 * PI * t).sin().powi(4)
        } else {
            (4.0 * PI * (t - 0.25)).sin().powi(4)
        }
    }

    pub fn time_derivative(t: f64) -> f64 {
        if t <= 0.0 || t >= 0.25 {
            return 0.0;
        }
        let u = if t <= 0.125 { 4.0 * PI * t } else { 4.0 * PI * (t - 0.25) };
        16.0 * PI * u.sin().powi(3) * u.cos()
    }

    pub fn space(x: f64) -> f64 {
        if !(1.0 / 3.0..=2.0 / 3.0).contains(&x) {
            0.0
        } else {
            (3.0 * PI * (x - 1.0)).sin().powi(4)
        }
    }

    pub fn space_derivative(x: f64) -> f64 {
        if !(1.0 / 3.0..=2.0 / 3.0).contains(&x) {
            return 0.0;
        }
        let v = 3.0 * PI * (x - 1.0);
        12.0 * PI * v.sin().powi(3) * v.cos()
    }
}

mod ramp {
    use std::f64::consts::PI;

    pub fn value(s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else if s <= 0.125 {
            (4.0 * PI * s).sin().powi(2)
        } else {
            1.0
        }
    }

    pub fn derivative(s: f64) -> f64 {
        if s <= 0.0 || s >= 0.125 {
            0.0
        } else {
            4.0 * PI * (8.0 * PI * s).sin()
        }
    }
}

/// Datum of the smooth density `psi = x t`.
///
/// With `r = |x - y|` the time integral of the retarded kernel against `tau`
/// is `K(t, r) = (t acosh(t / r) - sqrt(t^2 - r^2)) / 2 pi` inside the cone,
/// and `f(t, x) = int_0^1 y K(t, |x - y|) dy`. The remaining `r` integrals are
/// elementary; the two halves `y < x` and `y > x` are cut at `min(x, t)` and
/// `min(1 - x, t)`.
pub mod smooth {
    use super::*;

    fn acosh_ratio(t: f64, r: f64) -> f64 {
        cone_acosh(t, r)
    }

    /// `arcsin(min(r / t, 1))` through the gap `t - r`.
    fn arcsin_ratio(t: f64, r: f64) -> f64 {
        r.atan2(((t - r) * (t + r)).max(0.0).sqrt())
    }

    /// `int_0^R acosh(t / r) dr`
    fn j0(t: f64, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        r * acosh_ratio(t, r) + t * arcsin_ratio(t, r)
    }

    /// `int_0^R r acosh(t / r) dr`
    fn j1(t: f64, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        0.5 * r * r * acosh_ratio(t, r) - 0.5 * t * (t * t - r * r).max(0.0).sqrt() + 0.5 * t * t
    }

    /// `int_0^R sqrt(t^2 - r^2) dr`
    fn q0(t: f64, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        0.5 * (r * (t * t - r * r).max(0.0).sqrt() + t * t * arcsin_ratio(t, r))
    }

    /// `int_0^R r sqrt(t^2 - r^2) dr`
    fn q1(t: f64, r: f64) -> f64 {
        (t * t * t - (t * t - r * r).max(0.0).powf(1.5)) / 3.0
    }

    /// Antiderivative of `sqrt(t^2 - r^2) / r`.
    fn h0(t: f64, r: f64) -> f64 {
        (t * t - r * r).max(0.0).sqrt() - t * acosh_ratio(t, r)
    }

    pub fn f(t: f64, x: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (r1, r2) = (x.min(t), (1.0 - x).min(t));
        let m0 = |r| t * j0(t, r) - q0(t, r);
        let m1 = |r| t * j1(t, r) - q1(t, r);
        INV_TWO_PI * (x * m0(r1) - m1(r1) + x * m0(r2) + m1(r2))
    }

    pub fn df_dt(t: f64, x: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (r1, r2) = (x.min(t), (1.0 - x).min(t));
        INV_TWO_PI * (x * j0(t, r1) - j1(t, r1) + x * j0(t, r2) + j1(t, r2))
    }

    pub fn df_dx(t: f64, x: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let (r1, r2) = (x.min(t), (1.0 - x).min(t));
        let pv = if x == 0.0 || r1 == r2 { 0.0 } else { x * (h0(t, r1) - h0(t, r2)) };
        -INV_TWO_PI * (pv - q0(t, r1) - q0(t, r2))
    }

    /// The same three functions evaluated by graded quadrature in `y`, with
    /// only the time integral done in closed form.
    pub struct QuadratureRoute<'a> {
        pub integrator: &'a Integrator,
    }

    impl QuadratureRoute<'_> {
        fn breakpoints(t: f64, x: f64) -> [Breakpoint; 3] {
            [Breakpoint::singular(x), Breakpoint::singular(x - t), Breakpoint::singular(x + t)]
        }

        pub fn f(&self, t: f64, x: f64) -> f64 {
            if t <= 0.0 {
                return 0.0;
            }
            let kernel = |y: f64| {
                let r = (x - y).abs();
                if r >= t {
                    0.0
                } else {
                    y * (t * acosh_ratio(t, r) - ((t - r) * (t + r)).sqrt())
                }
            };
            INV_TWO_PI * self.integrator.integrate(kernel, 0.0, 1.0, &Self::breakpoints(t, x))
        }

        pub fn df_dt(&self, t: f64, x: f64) -> f64 {
            if t <= 0.0 {
                return 0.0;
            }
            let kernel = |y: f64| y * acosh_ratio(t, (x - y).abs());
            INV_TWO_PI * self.integrator.integrate(kernel, 0.0, 1.0, &Self::breakpoints(t, x))
        }

        /// Principal value handled by pairing `y = x - r` with `y = x + r`.
        pub fn df_dx(&self, t: f64, x: f64) -> f64 {
            if t <= 0.0 {
                return 0.0;
            }
            let h = |r: f64| if r >= t { 0.0 } else { ((t - r) * (t + r)).sqrt() / r };
            let (r1, r2) = (x.min(t), (1.0 - x).min(t));
            let common = r1.min(r2);
            let cone = [Breakpoint::singular(t)];
            let paired = self.integrator.integrate(|r| -2.0 * r * h(r), 0.0, common, &cone);
            let left = self.integrator.integrate(|r| (x - r) * h(r), common, r1, &cone);
            let right = self.integrator.integrate(|r| (x + r) * h(r), common, r2, &cone);
            -INV_TWO_PI * (paired + left - right)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadConfig;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    const ALL: [DirichletDatum; 4] = [
        DirichletDatum::Smooth,
        DirichletDatum::Peak,
        DirichletDatum::Ramp { k: 0.0 },
        DirichletDatum::TimePower,
    ];

    #[test]
    fn causal_at_random_probes() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for d in ALL.iter().chain([DirichletDatum::Ramp { k: 0.4 }].iter()) {
            for _ in 0..1000 {
                let t = -rng.gen::<f64>();
                let x = rng.gen::<f64>();
                assert_eq!(d.f(t, x), 0.0);
                assert_eq!(d.f(0.0, x), 0.0);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let h = 1e-6;
        for d in ALL.iter().chain([DirichletDatum::Ramp { k: -0.3 }].iter()) {
            let mut checked = 0;
            while checked < 40 {
                let t = 0.02 + 0.95 * rng.gen::<f64>();
                let x = 0.02 + 0.96 * rng.gen::<f64>();
                let near_kink = d.time_kinks().iter().any(|k| (t - k).abs() < 1e-3)
                    || d.space_kinks(t).iter().any(|k| (x - k).abs() < 1e-3);
                if near_kink {
                    continue;
                }
                checked += 1;
                let fd_t = (d.f(t + h, x) - d.f(t - h, x)) / (2.0 * h);
                let fd_x = (d.f(t, x + h) - d.f(t, x - h)) / (2.0 * h);
                let scale_t = d.df_dt(t, x).abs().max(1e-3);
                let scale_x = d.df_dx(t, x).abs().max(1e-3);
                assert!((fd_t - d.df_dt(t, x)).abs() <= 1e-4 * scale_t, "{d} dt at ({t},{x}): {fd_t} vs {}", d.df_dt(t, x));
                assert!((fd_x - d.df_dx(t, x)).abs() <= 1e-4 * scale_x, "{d} dx at ({t},{x}): {fd_x} vs {}", d.df_dx(t, x));
            }
        }
    }

    #[test]
    fn smooth_closed_form_matches_quadrature_route() {
        let integrator = Integrator::from_config(&QuadConfig::default()).unwrap();
        let route = smooth::QuadratureRoute { integrator: &integrator };
        for &(t, x) in &[(0.5, 0.3), (0.2, 0.5), (0.9, 0.1), (1.0, 0.75), (0.05, 0.97), (0.6, 0.6)] {
            assert_relative_eq!(smooth::f(t, x), route.f(t, x), max_relative = 1e-10);
            assert_relative_eq!(smooth::df_dt(t, x), route.df_dt(t, x), max_relative = 1e-10);
            assert_relative_eq!(smooth::df_dx(t, x), route.df_dx(t, x), max_relative = 1e-9, epsilon = 1e-13);
        }
    }

    #[test]
    fn peak_values() {
        let d = DirichletDatum::Peak;
        assert_eq!(d.f(0.1, 0.2), 0.0);
        assert_eq!(d.f(0.1, 0.8), 0.0);
        assert_eq!(d.f(0.375, 0.5), 0.0);
        let below = (4.0 * PI * 0.125f64).sin().powi(4);
        let above = (4.0 * PI * (0.125f64 - 0.25)).sin().powi(4);
        assert!((below - above).abs() < 1e-12);
        assert!((d.f(0.125, 0.5) - 1.0).abs() < 1e-12);
        assert!((d.f(0.125 + 1e-14, 0.5) - d.f(0.125 - 1e-14, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn ramp_values() {
        let d = DirichletDatum::example(3).unwrap();
        assert_relative_eq!(d.f(1.0 / 16.0, 0.3), 0.5, max_relative = 1e-14);
        assert_eq!(d.f(0.5, 0.7), 1.0);
        for &(t, x) in &[(0.05, 0.1), (0.3, 0.9), (0.01, 0.5)] {
            assert_eq!(d.df_dx(t, x), 0.0);
        }
        assert_eq!(DirichletDatum::ramp_with_angle(FRAC_PI_2), d);
    }

    #[test]
    fn time_power_values() {
        let d = DirichletDatum::TimePower;
        assert_relative_eq!(d.f(1.0, 0.4), 1.0);
        assert_relative_eq!(d.f(0.125, 0.4), 0.25, max_relative = 1e-14);
        let v = d.df_dt(1e-6, 0.5);
        assert!((v - 200.0 / 3.0).abs() < 1e-9 && v.is_finite());
    }

    #[test]
    fn parse_ids() {
        assert_eq!("2".parse::<DirichletDatum>().unwrap(), DirichletDatum::Peak);
        assert_eq!("example4".parse::<DirichletDatum>().unwrap(), DirichletDatum::TimePower);
        assert!("7".parse::<DirichletDatum>().is_err());
        assert!("peak".parse::<DirichletDatum>().is_err());
    }
}
