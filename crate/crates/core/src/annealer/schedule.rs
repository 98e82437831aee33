//! Pulse shapes for the global detuning factor and the Rabi frequency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default protocol duration, us.
pub const DEFAULT_DURATION_US: f64 = 60.0;
pub const DEFAULT_COEFFICIENTS: usize = 6;
pub const DEFAULT_SAMPLE_COUNT: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Fourier,
    Spline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaParams {
    /// Value of the global factor at t = 0.
    pub initial: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaParams {
    pub coefficients: Vec<f64>,
    /// Clip bound, rad/us.
    pub omega_max: f64,
    /// Clamp the envelope at zero from below.
    #[serde(default)]
    pub nonnegative: bool,
}

/// Global detuning factor `D_G(t)` and Rabi frequency `W(t)` on `[0, T]`.
///
/// `D_G(0)` is `delta.initial`, `D_G(T) = 1` and `W(0) = W(T) = 0` hold for
/// any coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(rename = "T_us")]
    pub duration: f64,
    pub basis: Basis,
    pub delta: DeltaParams,
    pub omega: OmegaParams,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
}

fn default_sample_count() -> usize {
    DEFAULT_SAMPLE_COUNT
}

impl Schedule {
    /// Linear detuning ramp from `delta_initial` to 1 and a zero drive.
    pub fn linear_ramp(duration: f64, delta_initial: f64, omega_max: f64) -> Self {
        Self {
            duration,
            basis: Basis::Fourier,
            delta: DeltaParams {
                initial: delta_initial,
                coefficients: vec![0.0; DEFAULT_COEFFICIENTS],
            },
            omega: OmegaParams {
                coefficients: vec![0.0; DEFAULT_COEFFICIENTS],
                omega_max,
                nonnegative: false,
            },
            sample_count: DEFAULT_SAMPLE_COUNT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "duration {} must be positive",
                self.duration
            )));
        }
        if !(self.omega.omega_max > 0.0) {
            return Err(Error::InvalidSchedule("omega_max must be positive".into()));
        }
        if self.sample_count < 2 {
            return Err(Error::InvalidSchedule(
                "sample_count must be at least 2".into(),
            ));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !self.delta.initial.is_finite()
            || !finite(&self.delta.coefficients)
            || !finite(&self.omega.coefficients)
        {
            return Err(Error::InvalidSchedule("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Precomputes the basis functions for fast evaluation.
    pub fn profile(&self) -> Result<Profile> {
        self.validate()?;
        let (delta, omega) = match self.basis {
            Basis::Fourier => (
                Shape::Fourier(self.delta.coefficients.clone()),
                Shape::Fourier(self.omega.coefficients.clone()),
            ),
            Basis::Spline => (
                Shape::Spline(ClampedSpline::with_zero_ends(&self.delta.coefficients)),
                Shape::Spline(ClampedSpline::with_zero_ends(&self.omega.coefficients)),
            ),
        };
        Ok(Profile {
            duration: self.duration,
            delta_initial: self.delta.initial,
            delta,
            omega,
            omega_max: self.omega.omega_max,
            nonnegative: self.omega.nonnegative,
        })
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                duration: self.duration,
            });
        }
        Ok(())
    }
}

/// `D_G(t)` of a schedule.
pub fn delta_profile(s: &Schedule, t: f64) -> Result<f64> {
    s.check_time(t)?;
    Ok(s.profile()?.delta_global(t))
}

/// `W(t)` of a schedule.
pub fn omega_profile(s: &Schedule, t: f64) -> Result<f64> {
    s.check_time(t)?;
    Ok(s.profile()?.omega(t))
}

/// Time-dependent controls driving the Hamiltonian.
pub trait Drive {
    fn duration(&self) -> f64;
    fn omega(&self, t: f64) -> f64;
    fn delta_global(&self, t: f64) -> f64;
}

#[derive(Debug, Clone)]
enum Shape {
    Fourier(Vec<f64>),
    Spline(ClampedSpline),
}

impl Shape {
    /// Value at normalized time `u` in `[0, 1]`; zero at both ends.
    fn at(&self, u: f64) -> f64 {
        match self {
            Shape::Fourier(c) => {
                if u <= 0.0 || u >= 1.0 {
                    return 0.0;
                }
                c.iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * PI * u).sin())
                    .sum()
            }
            Shape::Spline(s) => s.at(u),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Profile {
    duration: f64,
    delta_initial: f64,
    delta: Shape,
    omega: Shape,
    omega_max: f64,
    nonnegative: bool,
}

impl Drive for Profile {
    fn duration(&self) -> f64 {
        self.duration
    }

    fn omega(&self, t: f64) -> f64 {
        let w = self
            .omega
            .at(t / self.duration)
            .clamp(-self.omega_max, self.omega_max);
        if self.nonnegative {
            w.max(0.0)
        } else {
            w
        }
    }

    fn delta_global(&self, t: f64) -> f64 {
        let u = t / self.duration;
        if u >= 1.0 {
            return 1.0;
        }
        if u <= 0.0 {
            return self.delta_initial;
        }
        self.delta_initial * (1.0 - u) + u + self.delta.at(u)
    }
}

/// Cubic spline on `[0, 1]` through equally spaced interior values, with zero
/// value and zero slope at both ends.
#[derive(Debug, Clone)]
struct ClampedSpline {
    y: Vec<f64>,
    m: Vec<f64>,
    h: f64,
}

impl ClampedSpline {
    fn with_zero_ends(interior: &[f64]) -> Self {
        let mut y = Vec::with_capacity(interior.len() + 2);
        y.push(0.0);
        y.extend_from_slice(interior);
        y.push(0.0);
        let k = y.len();
        let h = 1.0 / (k - 1) as f64;
        // second derivatives M from the clamped system, slopes zero at both ends
        let mut a = vec![h / 6.0; k];
        let mut b = vec![2.0 * h / 3.0; k];
        let mut c = vec![h / 6.0; k];
        let mut d = vec![0.0; k];
        b[0] = h / 3.0;
        b[k - 1] = h / 3.0;
        a[0] = 0.0;
        c[k - 1] = 0.0;
        d[0] = (y[1] - y[0]) / h;
        d[k - 1] = -(y[k - 1] - y[k - 2]) / h;
        for i in 1..k - 1 {
            d[i] = (y[i + 1] - y[i]) / h - (y[i] - y[i - 1]) / h;
        }
        // Thomas algorithm
        for i in 1..k {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        let mut m = vec![0.0; k];
        m[k - 1] = d[k - 1] / b[k - 1];
        for i in (0..k - 1).rev() {
            m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
        }
        Self { y, m, h }
    }

    fn at(&self, u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let k = self.y.len();
        let i = ((u / self.h) as usize).min(k - 2);
        let (x0, h) = (i as f64 * self.h, self.h);
        let (l, r) = ((x0 + h - u) / h, (u - x0) / h);
        self.m[i] * h * h * (l * l * l - l) / 6.0
            + self.m[i + 1] * h * h * (r * r * r - r) / 6.0
            + self.y[i] * l
            + self.y[i + 1] * r
    }

    #[cfg(test)]
    fn slope(&self, u: f64) -> f64 {
        let e = 1e-7;
        (self.at(u + e) - self.at(u - e)) / (2.0 * e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fourier(a: Vec<f64>, b: Vec<f64>) -> Schedule {
        let mut s = Schedule::linear_ramp(10.0, -1.0, 100.0);
        s.delta.coefficients = a;
        s.omega.coefficients = b;
        s
    }

    #[test]
    fn linear_ramp_without_coefficients() {
        let s = fourier(vec![0.0; 3], vec![0.0; 3]);
        for (t, want) in [(0.0, -1.0), (2.5, -0.5), (5.0, 0.0), (10.0, 1.0)] {
            assert!((delta_profile(&s, t).unwrap() - want).abs() < 1e-15);
            assert_eq!(omega_profile(&s, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn fourier_midpoint_values() {
        let s = fourier(vec![0.5], vec![1.0]);
        assert!((delta_profile(&s, 5.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((omega_profile(&s, 5.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_time_rejected() {
        let s = fourier(vec![], vec![]);
        assert!(matches!(
            delta_profile(&s, 10.5),
            Err(Error::TimeOutOfRange { .. })
        ));
        assert!(matches!(
            omega_profile(&s, -1e-9),
            Err(Error::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn omega_clipped_and_clamped() {
        let mut s = fourier(vec![], vec![-50.0]);
        s.omega.omega_max = 3.0;
        assert_eq!(omega_profile(&s, 5.0).unwrap(), -3.0);
        s.omega.nonnegative = true;
        assert_eq!(omega_profile(&s, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn spline_interpolates_and_is_clamped() {
        let sp = ClampedSpline::with_zero_ends(&[1.0, -2.0, 0.5]);
        for (k, v) in [1.0, -2.0, 0.5].iter().enumerate() {
            assert!((sp.at((k + 1) as f64 * 0.25) - v).abs() < 1e-12);
        }
        assert!(sp.slope(1e-6).abs() < 1e-3);
        assert!(sp.slope(1.0 - 1e-6).abs() < 1e-3);
        // continuity of the first derivative at a knot
        assert!((sp.slope(0.25 - 1e-6) - sp.slope(0.25 + 1e-6)).abs() < 1e-3);
    }

    #[test]
    fn spline_of_constant_interior_matches_closed_form_for_one_knot() {
        // single interior value: two cubic pieces symmetric about 1/2
        let sp = ClampedSpline::with_zero_ends(&[1.0]);
        assert!((sp.at(0.5) - 1.0).abs() < 1e-14);
        assert!((sp.at(0.25) - sp.at(0.75)).abs() < 1e-14);
        // Hermite cubic with zero end slopes and zero slope at the peak by symmetry
        let u: f64 = 0.25 / 0.5;
        assert!((sp.at(0.25) - (3.0 * u * u - 2.0 * u * u * u)).abs() < 1e-12);
    }

    #[test]
    fn schedule_json_round_trip() {
        let s = fourier(vec![0.1, 0.2], vec![0.3]);
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"T_us\"") && j.contains("\"fourier\""));
        let back: Schedule = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #[test]
        fn boundaries_exact(
            a in prop::collection::vec(-5.0f64..5.0, 0..8),
            b in prop::collection::vec(-5.0f64..5.0, 0..8),
            d0 in -4.0f64..0.0,
            spline in any::<bool>(),
        ) {
            let mut s = fourier(a, b);
            s.delta.initial = d0;
            if spline { s.basis = Basis::Spline; }
            prop_assert_eq!(delta_profile(&s, s.duration).unwrap(), 1.0);
            prop_assert_eq!(delta_profile(&s, 0.0).unwrap(), d0);
            prop_assert_eq!(omega_profile(&s, 0.0).unwrap(), 0.0);
            prop_assert_eq!(omega_profile(&s, s.duration).unwrap(), 0.0);
        }
    }
}
