//! Passive optical elements: the time-delayed Mach-Zehnder interferometer,
//! polarization overlap, and the Fabry-Perot analysis cavity.
//!
//! Photons that are not part of an interfering pair route classically; the
//! joint two-photon outcome of interfering pairs is handled by the
//! [`crate::interference`] module.

use crate::emitter::PhotonRecord;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::{ns_to_ps, Ps};
use num_traits::Float;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Port {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arm {
    Short,
    Long,
}

/// Time-delayed Mach-Zehnder interferometer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MziParams {
    /// Extra delay of the long arm (ns).
    pub path_delay_ns: f64,
    /// Transmittance of the input beamsplitter; a transmitted photon takes
    /// the short arm.
    #[serde(default = "default_half")]
    pub bs1_transmittance: f64,
    /// Transmittance of the output beamsplitter towards port A.
    #[serde(default = "default_half")]
    pub bs2_transmittance: f64,
    /// Polarization rotation applied by the long arm (radians); 0 keeps the
    /// arms parallel, pi/2 makes them orthogonal.
    #[serde(default)]
    pub polarization_rotation: f64,
    /// Fractional loss of each arm.
    #[serde(default)]
    pub arm_loss_short: f64,
    #[serde(default)]
    pub arm_loss_long: f64,
}

fn default_half() -> f64 {
    0.5
}

impl MziParams {
    /// Lossless 50:50 interferometer with a 25 ns long arm.
    pub fn balanced_25ns() -> Self {
        MziParams {
            path_delay_ns: 25.0,
            bs1_transmittance: 0.5,
            bs2_transmittance: 0.5,
            polarization_rotation: 0.0,
            arm_loss_short: 0.0,
            arm_loss_long: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.path_delay_ns > 0.0) {
            return Err(Error::parameter("path_delay_ns must be > 0"));
        }
        for (name, v) in [
            ("bs1_transmittance", self.bs1_transmittance),
            ("bs2_transmittance", self.bs2_transmittance),
            ("arm_loss_short", self.arm_loss_short),
            ("arm_loss_long", self.arm_loss_long),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parameter(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Fabry-Perot analysis cavity (single Lorentzian resonance).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpParams {
    /// Cavity linewidth kappa, FWHM in rad/ns.
    pub linewidth_kappa: f64,
    /// Resonance center relative to the emitter ZPL (rad/ns).
    #[serde(default)]
    pub center: f64,
    #[serde(default = "default_one")]
    pub peak_transmission: f64,
}

fn default_one() -> f64 {
    1.0
}

impl FpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth_kappa > 0.0) {
            return Err(Error::parameter("linewidth_kappa must be > 0"));
        }
        if !(self.peak_transmission > 0.0 && self.peak_transmission <= 1.0) {
            return Err(Error::parameter("peak_transmission must be in (0, 1]"));
        }
        Ok(())
    }
}

/// A photon after the interferometer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoutedPhoton {
    pub port: Port,
    pub arm: Arm,
    pub arrival_time_ps: Ps,
    pub pulse_index: u64,
    pub frequency_offset: f64,
    /// Polarization angle after any long-arm rotation (radians).
    pub polarization: f64,
}

/// A photon after the arm choice but before the output beamsplitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmPhoton {
    pub arm: Arm,
    pub arrival_time_ps: Ps,
    pub pulse_index: u64,
    pub frequency_offset: f64,
    pub polarization: f64,
}

/// Route a photon through BS1, the arm (delay, loss, polarization rotation),
/// up to the input of BS2. Returns `None` if the photon is absorbed.
pub fn route_arm(photon: &PhotonRecord, m: &MziParams, rng: &mut Stream) -> Option<ArmPhoton> {
    let takes_short = rng.bernoulli(m.bs1_transmittance);
    let (arm, loss, delay_ps, rot) = if takes_short {
        (Arm::Short, m.arm_loss_short, 0, 0.0)
    } else {
        (Arm::Long, m.arm_loss_long, ns_to_ps(m.path_delay_ns), m.polarization_rotation)
    };
    if loss > 0.0 && rng.bernoulli(loss) {
        return None;
    }
    Some(ArmPhoton {
        arm,
        arrival_time_ps: photon.emit_time_ps + delay_ps,
        pulse_index: photon.pulse_index,
        frequency_offset: photon.frequency_offset,
        polarization: photon.polarization + rot,
    })
}

/// Classical BS2 port choice.
pub fn bs2_port(m: &MziParams, rng: &mut Stream) -> Port {
    if rng.bernoulli(m.bs2_transmittance) {
        Port::A
    } else {
        Port::B
    }
}

/// Full classical route through the interferometer. Returns `None` if the
/// photon is absorbed in an arm.
pub fn mzi_route(photon: &PhotonRecord, m: &MziParams, rng: &mut Stream) -> Option<RoutedPhoton> {
    let a = route_arm(photon, m, rng)?;
    let port = bs2_port(m, rng);
    Some(RoutedPhoton {
        port,
        arm: a.arm,
        arrival_time_ps: a.arrival_time_ps,
        pulse_index: a.pulse_index,
        frequency_offset: a.frequency_offset,
        polarization: a.polarization,
    })
}

/// True iff the two routed photons overlap at the output beamsplitter:
/// adjacent pulse slots, the earlier photon through the long arm and the
/// later one through the short arm.
pub fn interfering_pair_predicate(r1: &ArmPhoton, r2: &ArmPhoton) -> bool {
    let (early, late) = if r1.pulse_index <= r2.pulse_index {
        (r1, r2)
    } else {
        (r2, r1)
    };
    late.pulse_index == early.pulse_index + 1
        && early.arm == Arm::Long
        && late.arm == Arm::Short
}

/// Lorentzian cavity transmission at a frequency offset from the resonance:
/// `peak * (k/2)^2 / (nu^2 + (k/2)^2)`.
pub fn fp_transmission<F: Float>(nu_offset: F, linewidth_kappa: F, peak_transmission: F) -> F {
    let half = linewidth_kappa / F::from(2.0).unwrap();
    peak_transmission * half * half / (nu_offset * nu_offset + half * half)
}

impl FpParams {
    pub fn transmission(&self, nu: f64) -> f64 {
        fp_transmission(nu - self.center, self.linewidth_kappa, self.peak_transmission)
    }
}

/// Lorentzian widths add under convolution.
pub fn lorentzian_convolved_width<F: Float>(w1: F, w2: F) -> F {
    w1 + w2
}

/// Mode overlap of two linear polarizations at relative angle `rotation`.
pub fn polarization_overlap<F: Float>(rotation: F) -> F {
    let c = rotation.cos();
    c * c
}
