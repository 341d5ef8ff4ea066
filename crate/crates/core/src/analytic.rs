//! Closed-form results for one and two batteries charged from a cat-state
//! charger in the `h → 0` limit.
//!
//! With `ω = √(δ² + 4κ²)` and `s = sin(ωt/2)` the single battery evolves as
//! `A(t)|ψ_G>|0> + B(t)|ψ_N>|1>` with
//!
//! ```text
//! A(t) = cos(ωt/2) + i (δ/ω) s        B(t) = i (2κ/ω) s
//! ```
//!
//! and everything below follows from `|A|²` and `|B|²`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::C64;

/// `t_max ≈ T_MAX_COEFF / ω` for the peak of the charging power.
pub const T_MAX_COEFF: f64 = 2.3312;
/// `P_max ≈ P_MAX_COEFF δκ²/ω`.
pub const P_MAX_COEFF: f64 = 1.45;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticParams {
    delta: f64,
    kappa: f64,
    omega: f64,
}

impl AnalyticParams {
    pub fn new(delta: f64, kappa: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0 && kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidParams(format!("delta = {delta}, kappa = {kappa}")));
        }
        Ok(Self { delta, kappa, omega: (delta * delta + 4.0 * kappa * kappa).sqrt() })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Oscillation period `2π/ω` of every observable.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    fn half_sin_sq(&self, t: f64) -> f64 {
        (self.omega * t / 2.0).sin().powi(2)
    }

    /// `4κ² / ω²`, the peak excited-state population.
    fn transfer(&self) -> f64 {
        if self.omega == 0.0 {
            0.0
        } else {
            4.0 * self.kappa * self.kappa / (self.omega * self.omega)
        }
    }

    /// `(A(t), B(t))`; the uncoupled, gapless case `ω = 0` is `(1, 0)`.
    pub fn amplitudes(&self, t: f64) -> (C64, C64) {
        if self.omega == 0.0 {
            return (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        }
        let (s, c) = (self.omega * t / 2.0).sin_cos();
        let a = C64::new(c, self.delta / self.omega * s);
        let b = C64::new(0.0, 2.0 * self.kappa / self.omega * s);
        (a, b)
    }

    /// `|B(t)|²`.
    pub fn excited_population(&self, t: f64) -> f64 {
        self.transfer() * self.half_sin_sq(t)
    }

    pub fn linear_entropy(&self, t: f64) -> f64 {
        if self.omega == 0.0 {
            return 0.0;
        }
        let s2 = self.half_sin_sq(t);
        let c2 = 1.0 - s2;
        let w2 = self.omega * self.omega;
        let ground = c2 + self.delta * self.delta / w2 * s2;
        let excited = 4.0 * self.kappa * self.kappa / w2 * s2;
        1.0 - (ground * ground + excited * excited)
    }

    /// `δ [(8κ²/(4κ²+δ²)) sin²(ωt/2) − 1]` without clamping; positive
    /// exactly on the ergotropy window.
    pub fn population_inversion_energy(&self, t: f64) -> f64 {
        self.delta * (2.0 * self.transfer() * self.half_sin_sq(t) - 1.0)
    }

    /// Single-battery ergotropy, zero outside the window.
    pub fn ergotropy(&self, t: f64) -> f64 {
        self.population_inversion_energy(t).max(0.0)
    }

    /// First window `[t₁*, t₂*]` on which `|B|² ≥ |A|²`, or `None` when
    /// `2κ < δ`.
    pub fn window_times(&self) -> Option<(f64, f64)> {
        if self.omega == 0.0 || 2.0 * self.kappa < self.delta {
            return None;
        }
        let k2 = self.kappa * self.kappa;
        let arg = ((4.0 * k2 - self.delta * self.delta) / (8.0 * k2)).sqrt();
        let t1 = 2.0 / self.omega * arg.acos();
        let t2 = 2.0 / self.omega * (-arg).acos();
        Some((t1, t2))
    }

    pub fn stored_energy(&self, t: f64) -> f64 {
        self.delta * self.excited_population(t)
    }

    /// `δ (1 − |B(t)|²)`; equals `ΔE − ξ` inside the window.
    pub fn unavailable(&self, t: f64) -> f64 {
        self.delta * (1.0 - self.excited_population(t))
    }

    /// `T = π/ω`.
    pub fn charging_time(&self) -> Result<f64> {
        if self.omega == 0.0 {
            return Err(Error::InvalidParams("charging time undefined for omega = 0".into()));
        }
        Ok(PI / self.omega)
    }

    /// `ΔE(t)/t`, zero at `t = 0`.
    pub fn power(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            self.stored_energy(t) / t
        }
    }

    /// Peak `(t_max, P_max)` of [`power`](Self::power) by golden-section
    /// search over `(0, T]`, where `sin²(ωt/2)/t` is unimodal.
    pub fn max_power(&self) -> Result<(f64, f64)> {
        let t_end = self.charging_time()?;
        let t = golden_section_max(|t| self.power(t), 0.0, t_end, 1e-12 * t_end.max(1.0));
        Ok((t, self.power(t)))
    }

    /// The rounded closed forms `(2.3312/ω, 1.45 δκ²/ω)`.
    pub fn max_power_approx(&self) -> (f64, f64) {
        (T_MAX_COEFF / self.omega, P_MAX_COEFF * self.delta * self.kappa * self.kappa / self.omega)
    }

    /// `P(T) = 4δκ² / (π ω)`.
    pub fn power_at_charging_time(&self) -> Result<f64> {
        self.charging_time()?;
        Ok(4.0 * self.delta * self.kappa * self.kappa / (PI * self.omega))
    }

    /// `ξ(T) = δ (4κ² − δ²)/(4κ² + δ²)`, zero when `2κ < δ`.
    pub fn max_ergotropy(&self) -> f64 {
        if self.omega == 0.0 {
            return 0.0;
        }
        let k4 = 4.0 * self.kappa * self.kappa;
        let d2 = self.delta * self.delta;
        (self.delta * (k4 - d2) / (k4 + d2)).max(0.0)
    }

    pub fn two_battery(&self, t: f64) -> TwoBattery {
        let w = self.omega;
        if w == 0.0 {
            return TwoBattery {
                a_even: 1.0,
                a_odd: C64::new(0.0, 0.0),
                b_even: 0.0,
                lambda1: 1.0,
                lambda4: 0.0,
                stored_energy: 0.0,
                ergotropy: 0.0,
            };
        }
        let s2 = self.half_sin_sq(t);
        let (sin_wt, cos_wt) = (w * t).sin_cos();
        let q = self.transfer();
        let a_even = cos_wt + q * s2;
        let a_odd = C64::new(0.0, self.delta / w * sin_wt);
        let b_even = -q * s2;
        // as printed, term by term
        let lambda1 = cos_wt * cos_wt
            + q * q * s2 * s2
            + 2.0 * q * cos_wt * s2
            + (self.delta / w).powi(2) * sin_wt * sin_wt;
        let lambda4 = q * q * s2 * s2;
        TwoBattery {
            a_even,
            a_odd,
            b_even,
            lambda1,
            lambda4,
            stored_energy: self.delta * (1.0 + lambda4 - lambda1),
            ergotropy: (2.0 * self.population_inversion_energy(t)).max(0.0),
        }
    }
}

/// Two batteries from `|ψ_G> ⊗ |00>`: amplitudes on `|ψ_G>|00>` and
/// `|ψ_G>|11>` and the resulting figures of merit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoBattery {
    /// Even-in-`t` part of the `|00>` amplitude.
    pub a_even: f64,
    /// Odd-in-`t` part of the `|00>` amplitude, `i (δ/ω) sin ωt`.
    pub a_odd: C64,
    /// `|11>` amplitude (it has no odd part).
    pub b_even: f64,
    /// `|00>` population.
    pub lambda1: f64,
    /// `|11>` population.
    pub lambda4: f64,
    pub stored_energy: f64,
    pub ergotropy: f64,
}

impl TwoBattery {
    /// `|A_even|² + |A_odd|²`, to compare against the term-by-term `λ₁`.
    pub fn lambda1_from_amplitudes(&self) -> f64 {
        self.a_even * self.a_even + self.a_odd.norm_sqr()
    }
}

/// Maximizer of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    (lo + hi) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> AnalyticParams {
        AnalyticParams::new(0.5, 2.0).unwrap()
    }

    #[test]
    fn amplitudes_start_in_ground_state() {
        let (a, b) = reference().amplitudes(0.0);
        assert_eq!((a, b), (C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
        let p = AnalyticParams::new(0.5, 0.0).unwrap();
        for t in [0.1, 1.0, 5.0] {
            assert_eq!(p.amplitudes(t).1.norm(), 0.0);
        }
        let frozen = AnalyticParams::new(0.0, 0.0).unwrap();
        assert_eq!(frozen.amplitudes(3.0), (C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
        assert!(frozen.charging_time().is_err());
    }

    #[test]
    fn values_at_charging_time() {
        let p = reference();
        let t = p.charging_time().unwrap();
        assert_relative_eq!(p.omega() * p.omega(), 16.25, max_relative = 1e-14);
        assert_relative_eq!(t, 0.779_333, epsilon = 1e-6);
        let (a, b) = p.amplitudes(t);
        assert_relative_eq!(a.norm_sqr(), 0.25 / 16.25, epsilon = 1e-14);
        assert_relative_eq!(b.norm_sqr(), 16.0 / 16.25, epsilon = 1e-14);
        assert_relative_eq!(p.linear_entropy(t), 0.030_296, epsilon = 1e-6);
        assert_relative_eq!(p.stored_energy(t), 0.492_308, epsilon = 1e-6);
        assert_relative_eq!(p.unavailable(t), 0.007_692, epsilon = 1e-6);
        assert_relative_eq!(p.ergotropy(t), 0.484_615, epsilon = 1e-6);
        assert_relative_eq!(p.max_ergotropy(), p.ergotropy(t), epsilon = 1e-14);
        assert_relative_eq!(p.power(t), 0.631_703, epsilon = 1e-6);
        assert_relative_eq!(p.power_at_charging_time().unwrap(), p.power(t), epsilon = 1e-14);
    }

    #[test]
    fn window_edges() {
        let p = reference();
        let (t1, t2) = p.window_times().unwrap();
        let t = p.charging_time().unwrap();
        assert_relative_eq!(t1, 0.3936, epsilon = 1e-4);
        assert_relative_eq!(t2, 1.1651, epsilon = 1e-4);
        assert_relative_eq!(t1 + t2, 2.0 * t, epsilon = 1e-12);
        assert!(p.population_inversion_energy(t1).abs() < 1e-12);
        assert!(p.population_inversion_energy(t2).abs() < 1e-12);
        assert_eq!(p.ergotropy(0.1), 0.0);

        let edge = AnalyticParams::new(0.5, 0.25).unwrap();
        let (a, b) = edge.window_times().unwrap();
        let t = edge.charging_time().unwrap();
        assert_relative_eq!(a, t, epsilon = 1e-12);
        assert_relative_eq!(b, t, epsilon = 1e-12);
        assert!(edge.max_ergotropy().abs() < 1e-15);
        assert!(AnalyticParams::new(0.5, 0.2).unwrap().window_times().is_none());

        // strong coupling: t1* → T/2
        let strong = AnalyticParams::new(0.5, 1e6).unwrap();
        let (a, _) = strong.window_times().unwrap();
        assert_relative_eq!(a, strong.charging_time().unwrap() / 2.0, max_relative = 1e-9);
        assert_relative_eq!(strong.max_ergotropy(), 0.5, max_relative = 1e-9);
    }

    #[test]
    fn window_matches_bisection() {
        let p = AnalyticParams::new(0.7, 0.9).unwrap();
        let f = |t: f64| p.population_inversion_energy(t);
        let bisect = |mut lo: f64, mut hi: f64| {
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) > 0.0) == (f(hi) > 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let t = p.charging_time().unwrap();
        let (t1, t2) = p.window_times().unwrap();
        assert!((bisect(0.0, t) - t1).abs() < 1e-9);
        assert!((bisect(t, 2.0 * t) - t2).abs() < 1e-9);
    }

    #[test]
    fn power_peak() {
        let p = reference();
        let (t_max, p_max) = p.max_power().unwrap();
        let (t_approx, p_approx) = p.max_power_approx();
        // stationary point of sin²(x)/x solves tan x = 2x, x = ωt/2
        let (mut lo, mut hi) = (1.0f64, 1.5f64);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if mid.tan() - 2.0 * mid < 0.0 { lo = mid } else { hi = mid }
        }
        assert_relative_eq!(t_max, 2.0 * lo / p.omega(), epsilon = 1e-8);
        assert_relative_eq!(t_max, 0.578_280, epsilon = 1e-6);
        assert_relative_eq!(t_approx, 0.578_300, epsilon = 1e-6);
        assert!((t_max - t_approx).abs() / t_max < 1e-4);
        assert!((p_max - p_approx).abs() / p_approx < 5e-3);
        // brute-force scan
        let brute = (1..200_000).map(|k| p.power(k as f64 * 1e-5)).fold(0.0, f64::max);
        assert!((brute - p_max).abs() < 1e-9);
        assert!(p_max > p.power(t_max - 1e-4) && p_max > p.power(t_max + 1e-4));
    }

    #[test]
    fn two_battery_doubles_single() {
        let p = reference();
        let t = p.charging_time().unwrap();
        let two = p.two_battery(t);
        assert_relative_eq!(two.stored_energy, 0.984_615, epsilon = 1e-6);
        assert_relative_eq!(two.ergotropy, 0.969_231, epsilon = 1e-6);
        let zero = p.two_battery(0.0);
        assert_relative_eq!(zero.lambda1, 1.0, epsilon = 1e-15);
        assert_eq!((zero.lambda4, zero.stored_energy), (0.0, 0.0));
        for k in 0..50 {
            let t = 0.037 * k as f64;
            let two = p.two_battery(t);
            assert!((two.lambda1 - two.lambda1_from_amplitudes()).abs() < 1e-12);
            assert!((two.stored_energy - 2.0 * p.stored_energy(t)).abs() < 1e-12);
            let excited = p.excited_population(t);
            // middle populations follow from the product structure
            let middle = 1.0 - two.lambda1 - two.lambda4;
            assert!((middle - 2.0 * excited * (1.0 - excited)).abs() < 1e-12);
        }
    }
}
