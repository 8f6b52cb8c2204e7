//! Experiment configuration schema.
//!
//! Configs are JSON with a `kind` tag; unknown keys are rejected everywhere.
//! Stochastic kinds require a `seed`. The config hash is the SHA-256 of the
//! canonical (resolved, defaults applied) serialization, so two files that
//! differ only in formatting or omitted defaults hash identically, and any
//! resolved-parameter change alters the hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::EfficiencyChain;
use crate::detection::DetectorParams;
use crate::diffusion::AnnealSchedule;
use crate::emitter::{EmitterParams, PulseTrainParams};
use crate::error::{Error, Result};
use crate::optics::{FpParams, MziParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentConfig {
    /// Two-photon interference through the delayed interferometer.
    Hom(HomConfig),
    /// Hanbury Brown-Twiss on the pulsed source.
    PulsedG2(PulsedG2Config),
    /// Hanbury Brown-Twiss on continuous excitation.
    CwG2(CwG2Config),
    /// Scanning cavity across the emission line.
    SpectrumScan(SpectrumScanConfig),
    /// Count rate vs excitation power.
    Saturation(SaturationConfig),
    /// Implant anneal profile evolution.
    Diffusion(DiffusionConfig),
    /// Efficiency-chain arithmetic; no simulation.
    Budget(BudgetConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomConfig {
    pub seed: u64,
    pub emitter: EmitterParams,
    pub pulses: PulseTrainParams,
    pub mzi: MziParams,
    /// Pair timing response sigma; each detector contributes sigma / sqrt(2).
    pub detector: DetectorParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsedG2Config {
    pub seed: u64,
    pub emitter: EmitterParams,
    pub pulses: PulseTrainParams,
    pub detector: DetectorParams,
    /// HBT splitter transmittance towards channel 0.
    #[serde(default = "default_half")]
    pub splitter_transmittance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CwG2Config {
    pub seed: u64,
    pub emitter: EmitterParams,
    /// Mean excitation rate (1/ns).
    pub excitation_rate_per_ns: f64,
    pub duration_ns: f64,
    pub detector: DetectorParams,
    #[serde(default = "default_half")]
    pub splitter_transmittance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumScanConfig {
    pub seed: u64,
    pub emitter: EmitterParams,
    pub cavity: FpParams,
    /// Cavity center detuning sweep relative to the ZPL (rad/ns).
    pub scan_start: f64,
    pub scan_stop: f64,
    pub scan_points: u32,
    /// Photons sampled per scan point.
    pub photons_per_point: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationConfig {
    pub seed: u64,
    /// Saturated rate (counts/s).
    pub r_sat: f64,
    /// Saturation power (uW).
    pub p_sat: f64,
    /// Linear background slope (counts/s/uW).
    #[serde(default)]
    pub alpha: f64,
    /// Powers to sample (uW).
    pub powers_uw: Vec<f64>,
    /// Integration time per point (s).
    pub integration_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub mean_nm: f64,
    pub straggle_nm: f64,
    pub dose_cm2: f64,
    #[serde(default = "default_span")]
    pub span_nm: f64,
    #[serde(default = "default_dx")]
    pub dx_nm: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    pub anneal: AnnealSchedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub chain: EfficiencyChain,
    pub t1_ns: f64,
}

fn default_half() -> f64 {
    0.5
}
fn default_span() -> f64 {
    crate::diffusion::LAYER_NM
}
fn default_dx() -> f64 {
    1.0
}
fn default_safety() -> f64 {
    0.25
}

impl ExperimentConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentConfig::Hom(_) => "hom",
            ExperimentConfig::PulsedG2(_) => "pulsed_g2",
            ExperimentConfig::CwG2(_) => "cw_g2",
            ExperimentConfig::SpectrumScan(_) => "spectrum_scan",
            ExperimentConfig::Saturation(_) => "saturation",
            ExperimentConfig::Diffusion(_) => "diffusion",
            ExperimentConfig::Budget(_) => "budget",
        }
    }

    /// Seed of a stochastic kind; deterministic kinds carry none.
    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentConfig::Hom(c) => Some(c.seed),
            ExperimentConfig::PulsedG2(c) => Some(c.seed),
            ExperimentConfig::CwG2(c) => Some(c.seed),
            ExperimentConfig::SpectrumScan(c) => Some(c.seed),
            ExperimentConfig::Saturation(c) => Some(c.seed),
            ExperimentConfig::Diffusion(_) | ExperimentConfig::Budget(_) => None,
        }
    }

    pub fn set_seed(&mut self, seed: u64) -> Result<()> {
        match self {
            ExperimentConfig::Hom(c) => c.seed = seed,
            ExperimentConfig::PulsedG2(c) => c.seed = seed,
            ExperimentConfig::CwG2(c) => c.seed = seed,
            ExperimentConfig::SpectrumScan(c) => c.seed = seed,
            ExperimentConfig::Saturation(c) => c.seed = seed,
            ExperimentConfig::Diffusion(_) | ExperimentConfig::Budget(_) => {
                return Err(Error::Config(format!(
                    "kind '{}' is deterministic and takes no seed",
                    self.kind_name()
                )))
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Resolved serialization: struct field order, defaults filled in.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialization cannot fail")
    }

    pub fn config_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.to_canonical_json().as_bytes());
        h.finalize().into()
    }

    pub fn config_hash_hex(&self) -> String {
        hex(&self.config_hash())
    }

    /// Cross-field checks beyond what serde enforces.
    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::Hom(c) => {
                c.emitter.validate()?;
                c.pulses.validate()?;
                c.mzi.validate()?;
                c.detector.validate()?;
            }
            ExperimentConfig::PulsedG2(c) => {
                c.emitter.validate()?;
                c.pulses.validate()?;
                c.detector.validate()?;
                probability("splitter_transmittance", c.splitter_transmittance)?;
            }
            ExperimentConfig::CwG2(c) => {
                c.emitter.validate()?;
                c.detector.validate()?;
                probability("splitter_transmittance", c.splitter_transmittance)?;
                if !(c.excitation_rate_per_ns > 0.0) {
                    return Err(Error::Config("excitation_rate_per_ns must be > 0".into()));
                }
                if !(c.duration_ns >= 0.0) {
                    return Err(Error::Config("duration_ns must be >= 0".into()));
                }
            }
            ExperimentConfig::SpectrumScan(c) => {
                c.emitter.validate()?;
                c.cavity.validate()?;
                if c.scan_points < 2 || !(c.scan_stop > c.scan_start) {
                    return Err(Error::Config(
                        "scan needs at least 2 points and scan_stop > scan_start".into(),
                    ));
                }
            }
            ExperimentConfig::Saturation(c) => {
                if !(c.r_sat > 0.0) || !(c.p_sat > 0.0) {
                    return Err(Error::Config("r_sat and p_sat must be > 0".into()));
                }
                if c.powers_uw.is_empty() || c.powers_uw.iter().any(|&p| p < 0.0) {
                    return Err(Error::Config("powers_uw must be non-empty, non-negative".into()));
                }
                if !(c.integration_s > 0.0) {
                    return Err(Error::Config("integration_s must be > 0".into()));
                }
            }
            ExperimentConfig::Diffusion(c) => {
                c.anneal.validate()?;
                if !(c.safety > 0.0 && c.safety <= 0.5) {
                    return Err(Error::Config("safety must lie in (0, 0.5]".into()));
                }
            }
            ExperimentConfig::Budget(c) => {
                c.chain.validate()?;
                if !(c.t1_ns > 0.0) {
                    return Err(Error::Config("t1_ns must be > 0".into()));
                }
            }
        }
        Ok(())
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
