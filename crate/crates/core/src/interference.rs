//! Time-resolved two-photon interference: the analytic joint-detection model
//! for two exponential single-photon wavepackets and the Monte Carlo sampler
//! used as its independent counterpart.
//!
//! The one-sided expressions are symmetrized in τ (the detectors are
//! exchangeable), so all densities here are functions of |τ|.

use crate::error::{Error, Result};
use crate::rng::Stream;
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Parameters of the interference fit model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomModelParams {
    /// Emitter lifetime (ns).
    pub t1_ns: f64,
    /// Degree of indistinguishability, in [0, 1].
    pub chi: f64,
    /// Interference decay rate: half-width of the pair-detuning Lorentzian
    /// (rad/ns, equal to 1/tau_HOM).
    pub gamma_hom: f64,
    /// Gaussian timing response of the detector pair (ns).
    pub jitter_sigma_ns: f64,
    /// Additive background.
    pub background: f64,
}

impl HomModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t1_ns > 0.0) {
            return Err(Error::parameter("t1_ns must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.chi) {
            return Err(Error::parameter("chi must be in [0, 1]"));
        }
        if self.gamma_hom < 0.0 || self.jitter_sigma_ns < 0.0 || self.background < 0.0 {
            return Err(Error::parameter("rates and background must be >= 0"));
        }
        Ok(())
    }
}

/// Joint detection density for the first photon at `t0` and the second at
/// `t0 + tau`, at fixed pair detuning `delta`:
/// `exp((-2 t0 - tau)/T1) / (2 T1^2) * (1 - chi cos(delta tau))`.
/// Zero outside the physical domain `t0 >= 0`, `t0 + tau >= 0`.
pub fn joint_density<F: Float>(t0: F, tau: F, delta: F, t1: F, chi: F) -> F {
    if t0 < F::zero() || t0 + tau < F::zero() {
        return F::zero();
    }
    let two = F::from(2.0).unwrap();
    let env = ((-two * t0 - tau) / t1).exp() / (two * t1 * t1);
    env * (F::one() - chi * (delta * tau).cos())
}

/// Marginal of [`joint_density`] over the first detection time:
/// `exp(-|tau|/T1) / (4 T1) * (1 - chi cos(delta tau))`.
pub fn p_joint_tau<F: Float>(tau: F, delta: F, t1: F, chi: F) -> F {
    let four = F::from(4.0).unwrap();
    let env = (-(tau.abs()) / t1).exp() / (four * t1);
    env * (F::one() - chi * (delta * tau).cos())
}

/// Detuning-averaged interference curve before timing jitter:
/// `exp(-|tau|/T1) / (4 T1) * (1 - chi exp(-gamma_hom |tau|))`.
pub fn g2_hom_unconvolved<F: Float>(tau: F, t1: F, chi: F, gamma_hom: F) -> F {
    let four = F::from(4.0).unwrap();
    let at = tau.abs();
    ((-at / t1).exp() / (four * t1)) * (F::one() - chi * (-gamma_hom * at).exp())
}

/// Quadrature grid for the Gaussian jitter convolution.
#[derive(Clone, Copy, Debug)]
pub struct ConvolutionGrid {
    pub step_ns: f64,
    pub half_support_ns: f64,
}

impl ConvolutionGrid {
    /// Default grid: step `min(sigma/10, T1/100)`, support `±(5 sigma + 10 T1)`.
    pub fn for_model(m: &HomModelParams) -> Self {
        let step = if m.jitter_sigma_ns > 0.0 {
            (m.jitter_sigma_ns / 10.0).min(m.t1_ns / 100.0)
        } else {
            m.t1_ns / 100.0
        };
        ConvolutionGrid {
            step_ns: step,
            half_support_ns: 5.0 * m.jitter_sigma_ns + 10.0 * m.t1_ns,
        }
    }
}

/// Full fit model: the detuning-averaged curve convolved with the Gaussian
/// timing response (trapezoid quadrature on `grid`), plus the background.
pub fn g2_hom_model(tau_ns: f64, m: &HomModelParams, grid: &ConvolutionGrid) -> f64 {
    if m.jitter_sigma_ns == 0.0 {
        return g2_hom_unconvolved(tau_ns, m.t1_ns, m.chi, m.gamma_hom) + m.background;
    }
    let sigma = m.jitter_sigma_ns;
    let step = grid.step_ns;
    let n = (grid.half_support_ns / step).ceil() as i64;
    let norm = 1.0 / (sigma * (std::f64::consts::TAU).sqrt());
    let mut acc = 0.0;
    for k in -n..=n {
        let u = k as f64 * step;
        let kernel = norm * (-0.5 * (u / sigma) * (u / sigma)).exp();
        let weight = if k == -n || k == n { 0.5 } else { 1.0 };
        acc += weight * kernel * g2_hom_unconvolved(tau_ns - u, m.t1_ns, m.chi, m.gamma_hom);
    }
    acc * step + m.background
}

/// Pair-detuning draw: Lorentzian with half-width `gamma_hom` (FWHM
/// `2 gamma_hom`), truncated at ±50× the full width.
pub fn lorentzian_pair_detuning(rng: &mut Stream, gamma_hom: f64) -> Result<f64> {
    rng.lorentzian(0.0, 2.0 * gamma_hom)
}

/// Monte Carlo realization of the joint detection probability: draws the two
/// emission delays from independent exponentials and accepts a cross-port
/// coincidence with probability `(1 - chi cos(delta tau)) / 2`. Returns the
/// detection separation on acceptance, `None` when both photons exit the
/// same port.
pub fn sample_coincidence(
    rng: &mut Stream,
    delta: f64,
    t1: f64,
    chi: f64,
) -> Result<Option<f64>> {
    let ta = rng.exponential(t1)?;
    let tb = rng.exponential(t1)?;
    let tau = tb - ta;
    let p_cross = 0.5 * (1.0 - chi * (delta * tau).cos());
    if rng.bernoulli(p_cross) {
        Ok(Some(tau))
    } else {
        Ok(None)
    }
}

/// Interference visibility from the measured normalized correlations,
/// `1 - g2_parallel(0) / g2_perp(0)`.
pub fn visibility<F: Float>(g2_par_0: F, g2_perp_0: F) -> Result<F> {
    if g2_perp_0 <= F::zero() {
        return Err(Error::parameter("g2_perp(0) must be > 0"));
    }
    Ok(F::one() - g2_par_0 / g2_perp_0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const T1: f64 = 4.6;
    const GAMMA_HOM: f64 = 1.0 / 0.42;

    #[test]
    fn perfect_interference_suppresses_tau_zero() {
        for t0 in [0.0, 1.0, 7.3] {
            for delta in [0.0, 1.0, 10.0] {
                assert_eq!(joint_density(t0, 0.0, delta, T1, 1.0), 0.0);
            }
        }
        assert_eq!(p_joint_tau(0.0, 0.0, T1, 1.0), 0.0);
        let m = HomModelParams {
            t1_ns: T1,
            chi: 1.0,
            gamma_hom: GAMMA_HOM,
            jitter_sigma_ns: 0.0,
            background: 0.0,
        };
        assert_eq!(g2_hom_model(0.0, &m, &ConvolutionGrid::for_model(&m)), 0.0);
    }

    #[test]
    fn distinguishable_limit_is_product_of_exponentials() {
        let d = joint_density(2.0, 1.5, 3.0, T1, 0.0);
        let expected = ((-2.0 * 2.0 - 1.5) / T1).exp() / (2.0 * T1 * T1);
        assert!((d - expected).abs() < 1e-15);
    }

    #[test]
    fn joint_density_integrates_to_half_for_chi_zero() {
        // double quadrature in the detection-time variables (t1, t2) =
        // (t0, t0 + tau), whose domain is the smooth positive quadrant
        let h = T1 / 100.0;
        let lim = 40.0 * T1;
        let mut total = 0.0;
        let n = (lim / h) as i64;
        for i in 0..n {
            let t1 = (i as f64 + 0.5) * h;
            for j in 0..n {
                let t2 = (j as f64 + 0.5) * h;
                total += joint_density(t1, t2 - t1, 0.0, T1, 0.0) * h * h;
            }
        }
        assert!((total - 0.5).abs() < 1e-3, "integral {total}");
    }

    #[test]
    fn p_joint_tau_is_marginal_of_joint_density() {
        let delta = 2.0;
        let chi = 0.7;
        let h = T1 / 400.0;
        let lim = 40.0 * T1;
        let n = (lim / h) as i64;
        for tau in [-3.0, -0.4, 0.0, 0.4, 1.7, 6.0] {
            let mut marginal = 0.0;
            for i in 0..n {
                let t0 = (i as f64 + 0.5) * h;
                marginal += joint_density(t0, tau, delta, T1, chi) * h;
            }
            let direct = p_joint_tau(tau, delta, T1, chi);
            assert!(
                (marginal - direct).abs() < 1e-4 * (1.0 + direct),
                "tau {tau}: {marginal} vs {direct}"
            );
        }
    }

    #[test]
    fn p_joint_tau_integrates_to_half_for_chi_zero() {
        let h = T1 / 1000.0;
        let lim = 50.0 * T1;
        let n = (lim / h) as i64;
        let total: f64 = (-n..n)
            .map(|j| p_joint_tau((j as f64 + 0.5) * h, 0.0, T1, 0.0) * h)
            .sum();
        assert!((total - 0.5).abs() < 1e-6, "integral {total}");
    }

    #[test]
    fn detuning_average_matches_lorentzian_quadrature() {
        // integrate p_joint_tau against the pair-detuning Lorentzian with the
        // substitution delta = gamma tan(theta), which maps the line onto a
        // finite interval
        let chi = 0.8;
        let n = 400_001;
        let dtheta = std::f64::consts::PI / n as f64;
        for tau in [0.0, 0.1, 0.42, 1.0, 3.0] {
            let mut avg = 0.0;
            for i in 0..n {
                let theta = -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * dtheta;
                let delta = GAMMA_HOM * theta.tan();
                avg += p_joint_tau(tau, delta, T1, chi) * dtheta / std::f64::consts::PI;
            }
            let direct = g2_hom_unconvolved(tau, T1, chi, GAMMA_HOM);
            assert!(
                (avg - direct).abs() < 2e-3 * (direct + 0.01),
                "tau {tau}: {avg} vs {direct}"
            );
        }
    }

    #[test]
    fn jitter_convolution_preserves_integral() {
        let m = HomModelParams {
            t1_ns: T1,
            chi: 0.9,
            gamma_hom: GAMMA_HOM,
            jitter_sigma_ns: 0.252,
            background: 0.0,
        };
        // finer grid than the default so the cusp at tau = 0 is resolved to
        // the 1e-6 level
        let grid = ConvolutionGrid {
            step_ns: m.jitter_sigma_ns / 50.0,
            half_support_ns: 5.0 * m.jitter_sigma_ns + 10.0 * m.t1_ns,
        };
        let h = 0.01;
        let lim = 30.0 * T1;
        let n = (lim / h) as i64;
        let mut conv_int = 0.0;
        for j in -n..n {
            let tau = (j as f64 + 0.5) * h;
            conv_int += g2_hom_model(tau, &m, &grid) * h;
        }
        // closed-form integral of the unconvolved curve over the real line;
        // the tail beyond +/-30 T1 is below e^-30 and ignored
        let bare_int = 0.5 * (1.0 - m.chi / (1.0 + GAMMA_HOM * T1));
        assert!(
            (conv_int - bare_int).abs() < 1e-6 * bare_int,
            "{conv_int} vs {bare_int}"
        );
    }

    #[test]
    fn model_symmetric_and_monotone() {
        let m = HomModelParams {
            t1_ns: T1,
            chi: 0.9,
            gamma_hom: GAMMA_HOM,
            jitter_sigma_ns: 0.252,
            background: 0.05,
        };
        let grid = ConvolutionGrid::for_model(&m);
        for tau in [0.1, 0.5, 1.3, 4.0] {
            let p = g2_hom_model(tau, &m, &grid);
            let n = g2_hom_model(-tau, &m, &grid);
            assert!((p - n).abs() < 1e-12, "asymmetry at {tau}");
            assert!(p >= m.background);
        }
        // the interference suppression factor (model over the exponential
        // envelope) recovers monotonically in |tau|
        let m0 = HomModelParams {
            jitter_sigma_ns: 0.0,
            background: 0.0,
            ..m
        };
        let g0 = ConvolutionGrid::for_model(&m0);
        let mut prev = -1.0;
        let mut t = 0.0;
        while t <= 3.0 * T1 {
            let envelope = (-t / T1).exp() / (4.0 * T1);
            let v = g2_hom_model(t, &m0, &g0) / envelope;
            assert!(v >= prev - 1e-12, "suppression not monotone at {t}");
            prev = v;
            t += 0.05;
        }
    }

    #[test]
    fn pair_detuning_sampler_statistics() {
        let mut rng = Stream::from_seed(12);
        assert_eq!(lorentzian_pair_detuning(&mut rng, 0.0).unwrap(), 0.0);
        let n = 1_000_000;
        let mut xs: Vec<f64> = (0..n)
            .map(|_| lorentzian_pair_detuning(&mut rng, GAMMA_HOM).unwrap())
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let fwhm = 2.0 * GAMMA_HOM;
        let median = xs[n / 2];
        assert!(median.abs() < 3.0 * 2.0 * fwhm / (n as f64).sqrt());
        let iqr = xs[3 * n / 4] - xs[n / 4];
        // quartiles of the ±50×width truncated Lorentzian
        let q_tail = 0.5 - (100.0f64).atan() / std::f64::consts::PI;
        let p_eff = 0.25 * (1.0 - 2.0 * q_tail) + q_tail;
        let expected = -fwhm * (std::f64::consts::PI * (p_eff - 0.5)).tan();
        let se = fwhm * 2.0 / (n as f64).sqrt();
        assert!((iqr - expected).abs() < 3.0 * se, "IQR {iqr} vs {expected}");
    }

    #[test]
    fn coincidence_sampler_acceptance_rates() {
        let mut rng = Stream::from_seed(13);
        let n = 200_000;
        let accepted = (0..n)
            .filter(|_| sample_coincidence(&mut rng, 0.0, T1, 0.0).unwrap().is_some())
            .count();
        let frac = accepted as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * se, "{frac}");
        for _ in 0..10_000 {
            assert!(sample_coincidence(&mut rng, 0.0, T1, 1.0).unwrap().is_none());
        }
    }

    #[test]
    fn coincidence_sampler_matches_density() {
        // chi^2/dof of the accepted-tau histogram against p_joint_tau
        let mut rng = Stream::from_seed(14);
        let chi = 0.5;
        let delta = GAMMA_HOM;
        let n_draws = 4_000_000;
        let n_bins = 50;
        let lim = 3.0 * T1;
        let w = 2.0 * lim / n_bins as f64;
        let mut counts = vec![0u64; n_bins];
        for _ in 0..n_draws {
            if let Some(tau) = sample_coincidence(&mut rng, delta, T1, chi).unwrap() {
                if tau.abs() < lim {
                    let bin = ((tau + lim) / w) as usize;
                    counts[bin.min(n_bins - 1)] += 1;
                }
            }
        }
        // per draw, the accepted-tau density is exactly p_joint_tau; expected
        // bin counts by Simpson integration over each bin
        let mut chi2 = 0.0;
        for (i, &c) in counts.iter().enumerate() {
            let lo = -lim + i as f64 * w;
            let n_sub = 16;
            let hsub = w / n_sub as f64;
            let mut mu = 0.0;
            for s in 0..n_sub {
                mu += p_joint_tau(lo + (s as f64 + 0.5) * hsub, delta, T1, chi) * hsub;
            }
            mu *= n_draws as f64;
            chi2 += (c as f64 - mu).powi(2) / mu;
        }
        let dof = n_bins as f64;
        assert!(chi2 / dof < 1.5, "chi2/dof = {}", chi2 / dof);
    }

    #[test]
    fn visibility_formula() {
        assert!((visibility(0.26, 0.69).unwrap() - 0.6231884057971014).abs() < 1e-15);
        assert_eq!(visibility(0.0, 0.5).unwrap(), 1.0);
        assert_eq!(visibility(0.5, 0.5).unwrap(), 0.0);
        assert!(visibility::<f64>(0.2, 0.0).is_err());
    }
}
