//! Stochastic photon-emission streams for a two-level, spectrally diffusing
//! emitter under pulsed or CW excitation.
//!
//! Spectral diffusion is modeled on two timescales: a slow center-frequency
//! drift resampled once per `drift_block_ns` (Lorentzian, FWHM `linewidth_gamma`)
//! plus a fast per-photon jitter (Lorentzian, FWHM `hom_linewidth`). The fast
//! term makes the detuning between two successive photons Lorentzian with
//! half-width `hom_linewidth`, which is the convention that reproduces an
//! interference decay `exp(-hom_linewidth * |tau|)`.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::{ns_to_ps, Ps};
use serde::{Deserialize, Serialize};

/// Optional metastable (shelving) level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metastable {
    /// Probability per emission cycle of entering the shelf.
    pub shelving_prob: f64,
    /// Mean dwell time in the shelf (ns).
    pub shelf_lifetime_ns: f64,
}

/// Physical parameters of the emitter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterParams {
    /// Excited-state lifetime T1 (ns).
    pub lifetime_t1_ns: f64,
    /// Absolute ZPL center frequency (rad/ns); photon records carry offsets
    /// relative to this value.
    #[serde(default)]
    pub zpl_frequency: f64,
    /// Slow spectral-diffusion linewidth Gamma, FWHM in rad/ns.
    pub linewidth_gamma: f64,
    /// Effective two-photon linewidth Gamma_HOM in rad/ns (half-width of the
    /// successive-pair detuning distribution).
    pub hom_linewidth: f64,
    /// ZPL branching ratio.
    pub branching_zpl: f64,
    /// Quantum efficiency of the radiative transition.
    pub quantum_efficiency: f64,
    /// Block length for resampling the slow drift (ns).
    #[serde(default = "default_drift_block")]
    pub drift_block_ns: f64,
    #[serde(default)]
    pub metastable: Option<Metastable>,
}

fn default_drift_block() -> f64 {
    1e6 // 1 ms
}

/// Convert a linewidth quoted in GHz (ordinary frequency) to rad/ns.
pub fn ghz_to_rad_per_ns(f_ghz: f64) -> f64 {
    std::f64::consts::TAU * f_ghz
}

impl EmitterParams {
    /// Parameters of the emitter studied in the reference experiment:
    /// T1 = 4.6 ns, Gamma = 2pi x 2.8 GHz, Gamma_HOM = 2pi x 0.38 GHz,
    /// ZPL branching 0.18.
    pub fn g_center() -> Self {
        EmitterParams {
            lifetime_t1_ns: 4.6,
            zpl_frequency: 0.0,
            linewidth_gamma: ghz_to_rad_per_ns(2.8),
            hom_linewidth: ghz_to_rad_per_ns(0.38),
            branching_zpl: 0.18,
            quantum_efficiency: 1.0,
            drift_block_ns: default_drift_block(),
            metastable: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lifetime_t1_ns > 0.0) {
            return Err(Error::parameter("lifetime_t1_ns must be > 0"));
        }
        if self.linewidth_gamma < 0.0 {
            return Err(Error::parameter("linewidth_gamma must be >= 0"));
        }
        if self.hom_linewidth > 2.0 * self.linewidth_gamma {
            return Err(Error::parameter(
                "hom_linewidth must not exceed 2 * linewidth_gamma",
            ));
        }
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::parameter("quantum_efficiency must be in (0, 1]"));
        }
        if !(self.branching_zpl > 0.0 && self.branching_zpl <= 1.0) {
            return Err(Error::parameter("branching_zpl must be in (0, 1]"));
        }
        if !(self.drift_block_ns > 0.0) {
            return Err(Error::parameter("drift_block_ns must be > 0"));
        }
        if let Some(m) = &self.metastable {
            if !(0.0..=1.0).contains(&m.shelving_prob) {
                return Err(Error::parameter("shelving_prob must be in [0, 1]"));
            }
            if !(m.shelf_lifetime_ns > 0.0) {
                return Err(Error::parameter("shelf_lifetime_ns must be > 0"));
            }
        }
        Ok(())
    }
}

/// Pulsed excitation train. Pulse slots are spaced `repetition_period_ns`
/// apart; even slots are main pulses, odd slots carry the residual leakage
/// of the suppressed pulses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTrainParams {
    pub repetition_period_ns: f64,
    pub n_pulses: u64,
    /// Power suppression of the odd (leakage) pulses in dB; `f64::INFINITY`
    /// means perfect suppression, 0 means every slot fires at full strength.
    pub extinction_db: f64,
    /// Excitation probability of a main pulse.
    #[serde(default = "default_one")]
    pub excitation_prob: f64,
}

fn default_one() -> f64 {
    1.0
}

impl PulseTrainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.repetition_period_ns > 0.0) {
            return Err(Error::parameter("repetition_period_ns must be > 0"));
        }
        if self.extinction_db < 0.0 {
            return Err(Error::parameter("extinction_db must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.excitation_prob) {
            return Err(Error::parameter("excitation_prob must be in [0, 1]"));
        }
        Ok(())
    }

    /// Excitation probability of an odd (suppressed) slot.
    pub fn leakage_prob(&self) -> f64 {
        self.excitation_prob * 10f64.powf(-self.extinction_db / 10.0)
    }
}

/// One emitted photon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonRecord {
    /// Emission time (integer ps).
    pub emit_time_ps: Ps,
    /// Optical frequency relative to the ZPL center (rad/ns).
    pub frequency_offset: f64,
    /// Index of the originating excitation slot (sequential emission index
    /// for CW streams).
    pub pulse_index: u64,
    /// Polarization angle relative to the reference mode (radians).
    pub polarization: f64,
}

/// Exponential emission delay with mean `t1_ns`, by inverse CDF.
pub fn sample_emission_delay(rng: &mut Stream, t1_ns: f64) -> Result<f64> {
    rng.exponential(t1_ns)
}

/// Lorentzian frequency draw with the given FWHM around `center`,
/// truncated at ±50×FWHM. `fwhm = 0` returns `center`.
pub fn sample_zpl_frequency(rng: &mut Stream, center: f64, fwhm: f64) -> Result<f64> {
    rng.lorentzian(center, fwhm)
}

/// Saturation curve as printed in the reference: `R_sat/(1 + P/P_sat) + alpha*P`.
/// Note the printed form tends to `R_sat` as P -> 0.
pub fn saturation_rate(p: f64, r_sat: f64, p_sat: f64, alpha: f64) -> Result<f64> {
    if !(p_sat > 0.0) {
        return Err(Error::parameter("p_sat must be > 0"));
    }
    if p < 0.0 {
        return Err(Error::parameter("power must be >= 0"));
    }
    Ok(r_sat / (1.0 + p / p_sat) + alpha * p)
}

/// Shared frequency sampler for both stream kinds: slow drift per block plus
/// fast per-photon jitter.
struct FrequencyModel<'a> {
    params: &'a EmitterParams,
    drift_root: Stream,
    jitter: Stream,
    current_block: Option<(u64, f64)>,
}

impl<'a> FrequencyModel<'a> {
    fn new(params: &'a EmitterParams, rng: &Stream) -> Self {
        FrequencyModel {
            params,
            drift_root: rng.substream("drift"),
            jitter: rng.substream("frequency"),
            current_block: None,
        }
    }

    fn sample(&mut self, t_ns: f64) -> Result<f64> {
        let block = (t_ns / self.params.drift_block_ns).floor() as u64;
        let drift = match self.current_block {
            Some((b, d)) if b == block => d,
            _ => {
                let mut s = self.drift_root.substream_index(block);
                let d = s.lorentzian(0.0, self.params.linewidth_gamma)?;
                self.current_block = Some((block, d));
                d
            }
        };
        let fast = self.jitter.lorentzian(0.0, self.params.hom_linewidth)?;
        Ok(drift + fast)
    }
}

/// Generate the photon stream of a pulsed run. At most one photon is emitted
/// per excitation slot; odd slots fire at the leakage probability.
pub fn pulsed_emission_stream(
    emitter: &EmitterParams,
    train: &PulseTrainParams,
    rng: &Stream,
) -> Result<Vec<PhotonRecord>> {
    emitter.validate()?;
    train.validate()?;
    let mut fire = rng.substream("excitation");
    let mut delay = rng.substream("emission");
    let mut freq = FrequencyModel::new(emitter, rng);
    let leak = train.leakage_prob();
    let mut out = Vec::new();
    for k in 0..train.n_pulses {
        let p_fire = if k % 2 == 0 { train.excitation_prob } else { leak };
        let p_emit = p_fire * emitter.quantum_efficiency;
        if !fire.bernoulli(p_emit) {
            continue;
        }
        let t0 = k as f64 * train.repetition_period_ns;
        let t = t0 + sample_emission_delay(&mut delay, emitter.lifetime_t1_ns)?;
        out.push(PhotonRecord {
            emit_time_ps: ns_to_ps(t),
            frequency_offset: freq.sample(t)?,
            pulse_index: k,
            polarization: 0.0,
        });
    }
    Ok(out)
}

/// Generate the photon stream of a CW run as a renewal process: each cycle
/// waits an exponential excitation interval (mean `1/rate`), decays over an
/// exponential T1 interval, and with the shelving probability dwells in the
/// metastable shelf before the next cycle.
///
/// `rate_per_ns` is the excitation rate (1/ns); `duration_ns` the run length.
pub fn cw_emission_stream(
    emitter: &EmitterParams,
    rate_per_ns: f64,
    duration_ns: f64,
    rng: &Stream,
) -> Result<Vec<PhotonRecord>> {
    emitter.validate()?;
    if !(rate_per_ns > 0.0) {
        return Err(Error::parameter("excitation rate must be > 0"));
    }
    if duration_ns < 0.0 {
        return Err(Error::parameter("duration must be >= 0"));
    }
    let mut cycle = rng.substream("cw-cycle");
    let mut freq = FrequencyModel::new(emitter, rng);
    let mut out = Vec::new();
    let mut t = 0.0f64;
    let mut index = 0u64;
    loop {
        t += cycle.exponential(1.0 / rate_per_ns)?;
        t += cycle.exponential(emitter.lifetime_t1_ns)?;
        if t >= duration_ns {
            break;
        }
        if cycle.bernoulli(emitter.quantum_efficiency) {
            out.push(PhotonRecord {
                emit_time_ps: ns_to_ps(t),
                frequency_offset: freq.sample(t)?,
                pulse_index: index,
                polarization: 0.0,
            });
            index += 1;
        }
        if let Some(m) = &emitter.metastable {
            if m.shelving_prob > 0.0 && cycle.bernoulli(m.shelving_prob) {
                t += cycle.exponential(m.shelf_lifetime_ns)?;
            }
        }
    }
    Ok(out)
}
