//! Closed-form bath functions.
//!
//! The non-Markovian bath has modes `ω_l = lΩ` (`l = 1..=M`) with couplings
//! `g_l = (h/Ω²) e^{-zl/2}`. With `c_l = coth(β ω_l / 2)`:
//!
//! ```text
//! γ₁(t) = Σ (g_l²/ω_l) sin(ω_l t) c_l          γ(t) = 2γ₀ + 2γ₁(t)
//! λ(t)  = Σ (g_l²/ω_l) [1 - cos(ω_l t)]
//! Γ(t)  = γ₀ t + Σ (g_l/ω_l)² [1 - cos(ω_l t)] c_l
//! Λ(t)  = Σ (g_l/ω_l)² [ω_l t - sin(ω_l t)]
//! ```
//!
//! so that `dΓ/dt = γ/2` and `dΛ/dt = λ`. All of them are periodic (or
//! periodic plus linear) with period `T = 2π/Ω`.

use alloc::vec::Vec;
use core::f64::consts::PI;


#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Parameters of the Markovian and non-Markovian dephasing baths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    /// Markovian dephasing rate γ₀.
    pub gamma0: f64,
    /// Non-Markovian coupling amplitude h.
    pub h: f64,
    /// Spectral decay exponent z.
    pub z: f64,
    /// Number of non-Markovian modes M.
    pub modes: usize,
    /// Inverse temperature of the non-Markovian bath; `f64::INFINITY` for
    /// the zero-temperature limit.
    pub beta: f64,
    /// Fundamental frequency Ω.
    pub omega: f64,
}

impl Default for BathParams {
    fn default() -> Self {
        BathParams { gamma0: 0.0, h: 0.0, z: 0.1, modes: 60, beta: f64::INFINITY, omega: 1.0 }
    }
}

impl BathParams {
    /// No coupling to either bath.
    pub fn closed() -> Self {
        Self::default()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn frequency(&self, l: usize) -> f64 {
        l as f64 * self.omega
    }

    pub fn coupling(&self, l: usize) -> f64 {
        self.h / (self.omega * self.omega) * (-0.5 * self.z * l as f64).exp()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::InvalidParameter { name, reason: reason.into() });
        if !(self.gamma0.is_finite() && self.gamma0 >= 0.0) {
            return bad("gamma0", "must be finite and non-negative");
        }
        if !(self.h.is_finite() && self.h >= 0.0) {
            return bad("h", "must be finite and non-negative");
        }
        if !(self.z.is_finite() && self.z > 0.0) {
            return bad("z", "must be finite and positive");
        }
        if self.modes == 0 {
            return bad("modes", "must be at least 1");
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return bad("beta", "must be positive (or infinite)");
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return bad("omega", "must be finite and positive");
        }
        Ok(())
    }
}

/// `coth(x)` for `x > 0`, exactly 1 beyond `x = 40`.
pub fn stable_coth(x: f64) -> f64 {
    if x > 40.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// Per-mode weights precomputed from [`BathParams`]; evaluating any rate is
/// then a single pass over the modes.
#[derive(Debug, Clone)]
pub struct BathRates {
    params: BathParams,
    freq: Vec<f64>,
    // g_l² / ω_l
    rate_weight: Vec<f64>,
    // (g_l / ω_l)²
    phase_weight: Vec<f64>,
    thermal: Vec<f64>,
}

impl BathRates {
    pub fn new(params: &BathParams) -> Result<Self> {
        params.validate()?;
        let mut freq = Vec::with_capacity(params.modes);
        let mut rate_weight = Vec::with_capacity(params.modes);
        let mut phase_weight = Vec::with_capacity(params.modes);
        let mut thermal = Vec::with_capacity(params.modes);
        for l in 1..=params.modes {
            let w = params.frequency(l);
            let g = params.coupling(l);
            freq.push(w);
            rate_weight.push(g * g / w);
            phase_weight.push((g / w) * (g / w));
            thermal.push(if params.beta.is_infinite() { 1.0 } else { stable_coth(0.5 * params.beta * w) });
        }
        Ok(BathRates { params: *params, freq, rate_weight, phase_weight, thermal })
    }

    pub fn params(&self) -> &BathParams {
        &self.params
    }

    pub fn period(&self) -> f64 {
        self.params.period()
    }

    /// True when every rate vanishes identically.
    pub fn is_closed(&self) -> bool {
        self.params.gamma0 == 0.0 && self.params.h == 0.0
    }

    fn modes(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.freq
            .iter()
            .zip(&self.rate_weight)
            .zip(&self.phase_weight)
            .zip(&self.thermal)
            .map(|(((&w, &r), &p), &c)| (w, r, p, c))
    }

    pub fn gamma1(&self, t: f64) -> f64 {
        self.modes().map(|(w, r, _, c)| r * (w * t).sin() * c).sum()
    }

    pub fn gamma_total(&self, t: f64) -> f64 {
        2.0 * self.params.gamma0 + 2.0 * self.gamma1(t)
    }

    pub fn lamb_shift(&self, t: f64) -> f64 {
        self.modes().map(|(w, r, _, _)| r * (1.0 - (w * t).cos())).sum()
    }

    pub fn big_gamma(&self, t: f64) -> f64 {
        self.params.gamma0 * t + self.modes().map(|(w, _, p, c)| p * (1.0 - (w * t).cos()) * c).sum::<f64>()
    }

    pub fn big_lambda(&self, t: f64) -> f64 {
        self.modes().map(|(w, _, p, _)| p * (w * t - (w * t).sin())).sum()
    }

    /// `(γ(t), λ(t))` in one pass, for the integrator.
    pub fn generator_coefficients(&self, t: f64) -> (f64, f64) {
        let mut g1 = 0.0;
        let mut lamb = 0.0;
        for (w, r, _, c) in self.modes() {
            let (s, co) = (w * t).sin_cos();
            g1 += r * s * c;
            lamb += r * (1.0 - co);
        }
        (2.0 * self.params.gamma0 + 2.0 * g1, lamb)
    }

    /// `(Γ(t), Λ(t))` in one pass, for the influence functional.
    pub fn influence_exponents(&self, t: f64) -> (f64, f64) {
        let mut gam = self.params.gamma0 * t;
        let mut lam = 0.0;
        for (w, _, p, c) in self.modes() {
            let (s, co) = (w * t).sin_cos();
            gam += p * (1.0 - co) * c;
            lam += p * (w * t - s);
        }
        (gam, lam)
    }

    /// `Σ_l g_l²/ω_l`, the mean of `λ` over a period.
    pub fn mean_lamb_shift(&self) -> f64 {
        self.rate_weight.iter().sum()
    }

    /// Location and value of the maximum of `γ₁` over one period, from a
    /// dense scan refined by golden-section search.
    pub fn max_gamma1(&self) -> (f64, f64) {
        let period = self.period();
        let samples = 4096;
        let step = period / samples as f64;
        let (mut best_k, mut best) = (0usize, f64::NEG_INFINITY);
        for k in 0..samples {
            let v = self.gamma1(k as f64 * step);
            if v > best {
                best = v;
                best_k = k;
            }
        }
        let (mut a, mut b) = ((best_k as f64 - 1.0) * step, (best_k as f64 + 1.0) * step);
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (self.gamma1(c), self.gamma1(d));
        while b - a > 1e-12 * period {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = self.gamma1(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = self.gamma1(d);
            }
        }
        let t = 0.5 * (a + b);
        (t - period * (t / period).floor(), self.gamma1(t).max(best))
    }
}

pub fn gamma1(t: f64, b: &BathParams) -> Result<f64> {
    Ok(BathRates::new(b)?.gamma1(t))
}

pub fn gamma_total(t: f64, b: &BathParams) -> Result<f64> {
    Ok(BathRates::new(b)?.gamma_total(t))
}

pub fn lamb_shift(t: f64, b: &BathParams) -> Result<f64> {
    Ok(BathRates::new(b)?.lamb_shift(t))
}

pub fn big_gamma(t: f64, b: &BathParams) -> Result<f64> {
    Ok(BathRates::new(b)?.big_gamma(t))
}

pub fn big_lambda(t: f64, b: &BathParams) -> Result<f64> {
    Ok(BathRates::new(b)?.big_lambda(t))
}

/// `Σ_{l≥1} e^{-zl} sin(lθ)/l = atan(e^{-z} sin θ / (1 - e^{-z} cos θ))`,
/// the infinite-mode limit of `γ₁` at zero temperature in units of `h²/Ω³`.
pub fn infinite_mode_sine_series(z: f64, theta: f64) -> f64 {
    let q = (-z).exp();
    (q * theta.sin()).atan2(1.0 - q * theta.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference(h: f64) -> BathParams {
        BathParams { h, ..BathParams::default() }
    }

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let step = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|k| f(a + k as f64 * step)).sum();
        step * (0.5 * f(a) + inner + 0.5 * f(b))
    }

    // One Richardson step on the trapezoid rule.
    fn refined_trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let coarse = trapezoid(&f, a, b, n);
        let fine = trapezoid(&f, a, b, 2 * n);
        (4.0 * fine - coarse) / 3.0
    }

    #[test]
    fn gamma1_vanishes_at_zero() {
        let r = BathRates::new(&reference(0.5)).unwrap();
        assert_eq!(r.gamma1(0.0), 0.0);
        assert_eq!(r.lamb_shift(0.0), 0.0);
        assert_eq!(r.big_gamma(0.0), 0.0);
        assert_eq!(r.big_lambda(0.0), 0.0);
    }

    #[test]
    fn reported_rate_maxima() {
        for (h, expect) in [(0.3, 0.1018), (0.5, 0.2827), (0.7, 0.5542)] {
            let (_, max) = BathRates::new(&reference(h)).unwrap().max_gamma1();
            assert!((max - expect).abs() < 1e-3, "h = {h}: {max}");
        }
    }

    #[test]
    fn maximum_scales_as_h_squared() {
        let m3 = BathRates::new(&reference(0.3)).unwrap().max_gamma1().1;
        let m5 = BathRates::new(&reference(0.5)).unwrap().max_gamma1().1;
        assert!((m3 / m5 - 0.36).abs() < 1e-12);
    }

    #[test]
    fn truncated_series_matches_closed_form_at_maximum() {
        let r = BathRates::new(&reference(1.0)).unwrap();
        let (t, max) = r.max_gamma1();
        let closed = infinite_mode_sine_series(0.1, t);
        assert!((max - closed).abs() < 1e-3, "{max} vs {closed}");
        // analytic maximum of the closed form is asin(e^{-z})
        assert!((closed - (-0.1f64).exp().asin()).abs() < 1e-3);
    }

    #[test]
    fn gamma1_has_zero_mean() {
        let r = BathRates::new(&reference(0.5)).unwrap();
        let integral = trapezoid(|t| r.gamma1(t), 0.0, r.period(), 20_000);
        assert!(integral.abs() < 1e-9);
    }

    #[test]
    fn closed_bath_is_constant() {
        let r = BathRates::new(&BathParams { gamma0: 0.3, ..BathParams::default() }).unwrap();
        for k in 0..10 {
            assert_eq!(r.gamma_total(k as f64 * 0.37), 0.6);
            assert_eq!(r.lamb_shift(k as f64 * 0.37), 0.0);
            assert_eq!(r.big_lambda(k as f64 * 0.37), 0.0);
        }
    }

    #[test]
    fn markovian_offset_makes_rate_nonnegative() {
        let nm = BathRates::new(&reference(0.5)).unwrap();
        let (_, max) = nm.max_gamma1();
        let r = BathRates::new(&BathParams { gamma0: max, ..reference(0.5) }).unwrap();
        let min = (0..4000).map(|k| r.gamma_total(k as f64 * r.period() / 4000.0)).fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-12, "{min}");
    }

    #[test]
    fn pure_non_markovian_rate_goes_negative_in_second_half() {
        let r = BathRates::new(&reference(0.5)).unwrap();
        let period = r.period();
        let negative = (1..1000)
            .map(|k| 0.5 * period + k as f64 * 0.5 * period / 1000.0)
            .any(|t| r.gamma_total(t) < 0.0);
        assert!(negative);
    }

    #[test]
    fn lamb_shift_is_symmetric_about_half_period() {
        let r = BathRates::new(&reference(0.7)).unwrap();
        let period = r.period();
        for k in 0..50 {
            let t = k as f64 * period / 50.0;
            assert!((r.lamb_shift(t) - r.lamb_shift(period - t)).abs() < 1e-12);
            assert!(r.lamb_shift(t) >= 0.0);
        }
    }

    #[test]
    fn integrated_functions_at_stroboscopic_times() {
        let b = BathParams { gamma0: 0.2, ..reference(0.5) };
        let r = BathRates::new(&b).unwrap();
        let period = r.period();
        for m in 1..4 {
            let t = m as f64 * period;
            assert!((r.big_gamma(t) - 0.2 * t).abs() < 1e-12);
            assert!((r.big_lambda(t) - t * r.mean_lamb_shift()).abs() < 1e-11);
        }
    }

    #[test]
    fn big_gamma_stays_nonnegative_without_markovian_part() {
        let r = BathRates::new(&reference(0.7)).unwrap();
        for k in 0..500 {
            assert!(r.big_gamma(k as f64 * 0.0251) >= 0.0);
        }
    }

    #[test]
    fn finite_difference_derivatives() {
        let b = BathParams { gamma0: 0.1, ..reference(0.5) };
        let r = BathRates::new(&b).unwrap();
        let delta = 1e-6 * r.period();
        for k in 1..20 {
            let t = k as f64 * 0.31;
            let dg = (r.big_gamma(t + delta) - r.big_gamma(t - delta)) / (2.0 * delta);
            let dl = (r.big_lambda(t + delta) - r.big_lambda(t - delta)) / (2.0 * delta);
            assert!((dg - 0.5 * r.gamma_total(t)).abs() < 1e-8, "Γ' at {t}");
            assert!((dl - r.lamb_shift(t)).abs() < 1e-8, "Λ' at {t}");
        }
    }

    #[test]
    fn big_gamma_matches_quadrature_of_gamma1() {
        let b = BathParams { gamma0: 0.15, ..reference(0.5) };
        let r = BathRates::new(&b).unwrap();
        for k in 1..=50 {
            let t = k as f64 * r.period() / 37.0;
            let quad = refined_trapezoid(|s| r.gamma1(s), 0.0, t, 20_000);
            assert!((r.big_gamma(t) - 0.15 * t - quad).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn periodicity() {
        let b = BathParams { gamma0: 0.1, beta: 3.0, ..reference(0.5) };
        let r = BathRates::new(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let t = rng.random_range(0.0..20.0);
            assert!((r.gamma_total(t + r.period()) - r.gamma_total(t)).abs() < 1e-12);
            assert!((r.lamb_shift(t + r.period()) - r.lamb_shift(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_temperature_raises_the_rate() {
        let cold = BathRates::new(&reference(0.5)).unwrap();
        let warm = BathRates::new(&BathParams { beta: 2.0, ..reference(0.5) }).unwrap();
        assert!(warm.max_gamma1().1 > cold.max_gamma1().1);
        assert_eq!(stable_coth(41.0), 1.0);
        assert!((stable_coth(1.0) - 1.0 / 1f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn coupling_spectrum() {
        let b = BathParams { h: 0.5, omega: 2.0, ..BathParams::default() };
        assert!((b.coupling(3) - 0.125 * (-0.15f64).exp()).abs() < 1e-15);
        assert_eq!(b.frequency(3), 6.0);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(BathParams { gamma0: -1.0, ..BathParams::default() }.validate().is_err());
        assert!(BathParams { z: 0.0, ..BathParams::default() }.validate().is_err());
        assert!(BathParams { modes: 0, ..BathParams::default() }.validate().is_err());
        assert!(BathParams { beta: 0.0, ..BathParams::default() }.validate().is_err());
        assert!(BathParams { beta: f64::NAN, ..BathParams::default() }.validate().is_err());
    }
}
