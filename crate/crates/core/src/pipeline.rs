//! End-to-end experiment pipelines: config in, artifact out.
//!
//! Every pipeline is a pure function of the configuration, built on named RNG
//! substreams, so a fixed seed reproduces the output byte for byte.

use serde_json::json;

use crate::config::ExperimentConfig;
use crate::detection::{dark_count_stream, detect_stream, merge_sorted, DetectorParams, TimeTag};
use crate::diffusion;
use crate::emitter::{
    cw_emission_stream, pulsed_emission_stream, sample_zpl_frequency, saturation_rate,
};
use crate::error::Result;
use crate::optics::{
    bs2_port, interfering_pair_predicate, polarization_overlap as pol_overlap, route_arm,
    ArmPhoton, Port,
};
use crate::ps_to_ns;
use crate::rng::Stream;
use crate::tagfile::{TagFileHeader, FORMAT_VERSION};

/// What a pipeline produces.
#[derive(Clone, Debug)]
pub enum Artifact {
    /// Time-tag stream (interference and correlation kinds).
    Tags {
        header: TagFileHeader,
        tags: Vec<TimeTag>,
    },
    /// Two-column numeric table (spectrum scan, saturation sweep).
    Table {
        x_label: &'static str,
        y_label: &'static str,
        rows: Vec<(f64, f64)>,
    },
    /// Depth profile (diffusion kind).
    Profile(diffusion::Profile),
    /// Plain JSON result (budget kind).
    Json(serde_json::Value),
}

/// Run the experiment described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<Artifact> {
    config.validate()?;
    match config {
        ExperimentConfig::Hom(c) => {
            let tags = hom_tags(c)?;
            Ok(tag_artifact(config, tags))
        }
        ExperimentConfig::PulsedG2(c) => {
            let root = Stream::from_seed(c.seed);
            let photons = pulsed_emission_stream(&c.emitter, &c.pulses, &root.substream("source"))?;
            let span_ns = (c.pulses.n_pulses as f64 + 2.0) * c.pulses.repetition_period_ns;
            let tags = hbt_detect(
                &photons.iter().map(|p| p.emit_time_ps).collect::<Vec<_>>(),
                c.splitter_transmittance,
                &c.detector,
                span_ns,
                &root,
            )?;
            Ok(tag_artifact(config, tags))
        }
        ExperimentConfig::CwG2(c) => {
            let root = Stream::from_seed(c.seed);
            let photons = cw_emission_stream(
                &c.emitter,
                c.excitation_rate_per_ns,
                c.duration_ns,
                &root.substream("source"),
            )?;
            let tags = hbt_detect(
                &photons.iter().map(|p| p.emit_time_ps).collect::<Vec<_>>(),
                c.splitter_transmittance,
                &c.detector,
                c.duration_ns,
                &root,
            )?;
            Ok(tag_artifact(config, tags))
        }
        ExperimentConfig::SpectrumScan(c) => {
            let root = Stream::from_seed(c.seed);
            let mut rows = Vec::with_capacity(c.scan_points as usize);
            for i in 0..c.scan_points {
                let frac = i as f64 / (c.scan_points - 1) as f64;
                let center = c.scan_start + frac * (c.scan_stop - c.scan_start);
                let mut rng = root.substream("scan").substream_index(u64::from(i));
                let mut cavity = c.cavity.clone();
                cavity.center = center;
                let mut counts = 0u64;
                for _ in 0..c.photons_per_point {
                    let nu = sample_zpl_frequency(&mut rng, 0.0, c.emitter.linewidth_gamma)?;
                    if rng.bernoulli(cavity.transmission(nu)) {
                        counts += 1;
                    }
                }
                rows.push((center, counts as f64));
            }
            Ok(Artifact::Table {
                x_label: "detuning_rad_per_ns",
                y_label: "counts",
                rows,
            })
        }
        ExperimentConfig::Saturation(c) => {
            let root = Stream::from_seed(c.seed);
            let mut rows = Vec::with_capacity(c.powers_uw.len());
            for (i, &p) in c.powers_uw.iter().enumerate() {
                let mut rng = root.substream("saturation").substream_index(i as u64);
                let rate = saturation_rate(p, c.r_sat, c.p_sat, c.alpha)?;
                let counts = rng.poisson(rate * c.integration_s)?;
                rows.push((p, counts as f64 / c.integration_s));
            }
            Ok(Artifact::Table {
                x_label: "power_uw",
                y_label: "rate_cps",
                rows,
            })
        }
        ExperimentConfig::Diffusion(c) => {
            let initial = diffusion::initial_profile(
                c.mean_nm,
                c.straggle_nm,
                c.dose_cm2,
                c.span_nm,
                c.dx_nm,
            )?;
            let evolved = diffusion::evolve(&initial, &c.anneal, c.safety)?;
            Ok(Artifact::Profile(evolved))
        }
        ExperimentConfig::Budget(c) => {
            let b = crate::analysis::efficiency_budget(&c.chain, c.t1_ns)?;
            Ok(Artifact::Json(json!({
                "eta_qe_bound": b.eta_qe_bound,
                "tau_r_upper_ns": b.tau_r_upper_ns,
                "chain": c.chain,
                "t1_ns": c.t1_ns,
            })))
        }
    }
}

/// Run manifest: everything needed to reproduce and audit the output.
pub fn manifest(config: &ExperimentConfig) -> serde_json::Value {
    json!({
        "kind": config.kind_name(),
        "seed": config.seed(),
        "config_hash": config.config_hash_hex(),
        "tag_format_version": FORMAT_VERSION,
        "resolved_config": serde_json::from_str::<serde_json::Value>(&config.to_canonical_json())
            .expect("canonical config is valid JSON"),
    })
}

fn tag_artifact(config: &ExperimentConfig, tags: Vec<TimeTag>) -> Artifact {
    Artifact::Tags {
        header: TagFileHeader::new(2, config.seed().unwrap_or(0), config.config_hash()),
        tags,
    }
}

/// Split the configured pair-response jitter across the two detectors.
fn per_detector(d: &DetectorParams) -> DetectorParams {
    let mut d = d.clone();
    d.jitter_sigma_ns /= std::f64::consts::SQRT_2;
    d
}

/// Detect a photon stream behind a beamsplitter: channel 0 with probability
/// `transmittance`, channel 1 otherwise, plus dark counts on both channels.
fn hbt_detect(
    arrivals_ps: &[i64],
    transmittance: f64,
    detector: &DetectorParams,
    span_ns: f64,
    root: &Stream,
) -> Result<Vec<TimeTag>> {
    let mut split = root.substream("splitter");
    let mut ch: [Vec<i64>; 2] = [Vec::new(), Vec::new()];
    for &t in arrivals_ps {
        let c = usize::from(!split.bernoulli(transmittance));
        ch[c].push(t);
    }
    detect_two_channels(ch, detector, span_ns, root)
}

fn detect_two_channels(
    mut per_channel_ps: [Vec<i64>; 2],
    detector: &DetectorParams,
    span_ns: f64,
    root: &Stream,
) -> Result<Vec<TimeTag>> {
    let d = per_detector(detector);
    let mut out = Vec::new();
    for (c, arrivals) in per_channel_ps.iter_mut().enumerate() {
        arrivals.sort_unstable();
        let mut det_rng = root.substream("detector").substream_index(c as u64);
        let clicks = detect_stream(arrivals, c as u8, &d, &mut det_rng)?;
        let mut dark_rng = root.substream("darks").substream_index(c as u64);
        let darks = dark_count_stream(d.dark_rate_per_ns, span_ns, c as u8, &mut dark_rng)?;
        out.push(merge_sorted(&[clicks, darks])?);
    }
    let merged = merge_sorted(&out)?;
    Ok(merged)
}

/// Hybrid interference simulation.
///
/// Photons route classically through the first beamsplitter and the arms.
/// When two consecutive emission slots put the earlier photon in the long arm
/// and the later one in the short arm, they overlap at the output splitter;
/// that pair's ports are drawn jointly with cross-port probability
/// `(1 - overlap * cos(delta * tau)) / 2` from the pair's actual detuning and
/// detection separation. All other photons pick an output port
/// independently.
fn hom_tags(c: &crate::config::HomConfig) -> Result<Vec<TimeTag>> {
    let root = Stream::from_seed(c.seed);
    let photons = pulsed_emission_stream(&c.emitter, &c.pulses, &root.substream("source"))?;
    let mut route_rng = root.substream("mzi");
    let routed: Vec<ArmPhoton> = photons
        .iter()
        .filter_map(|p| route_arm(p, &c.mzi, &mut route_rng))
        .collect();

    let mut port_rng = root.substream("ports");
    let mut ch: [Vec<i64>; 2] = [Vec::new(), Vec::new()];
    let push = |port: Port, t: i64, ch: &mut [Vec<i64>; 2]| {
        ch[usize::from(port == Port::B)].push(t);
    };
    let mut i = 0;
    while i < routed.len() {
        if i + 1 < routed.len() && interfering_pair_predicate(&routed[i], &routed[i + 1]) {
            let (early, late) = (&routed[i], &routed[i + 1]);
            let tau_ns = ps_to_ns(late.arrival_time_ps - early.arrival_time_ps);
            let delta = late.frequency_offset - early.frequency_offset;
            let overlap = pol_overlap(late.polarization - early.polarization);
            let p_cross = 0.5 * (1.0 - overlap * (delta * tau_ns).cos());
            let (pa, pb) = if port_rng.bernoulli(p_cross) {
                // opposite ports, labels exchangeable
                if port_rng.bernoulli(0.5) {
                    (Port::A, Port::B)
                } else {
                    (Port::B, Port::A)
                }
            } else if port_rng.bernoulli(0.5) {
                (Port::A, Port::A)
            } else {
                (Port::B, Port::B)
            };
            push(pa, early.arrival_time_ps, &mut ch);
            push(pb, late.arrival_time_ps, &mut ch);
            i += 2;
        } else {
            let port = bs2_port(&c.mzi, &mut port_rng);
            push(port, routed[i].arrival_time_ps, &mut ch);
            i += 1;
        }
    }
    let span_ns = (c.pulses.n_pulses as f64 + 2.0) * c.pulses.repetition_period_ns
        + c.mzi.path_delay_ns;
    detect_two_channels(ch, &c.detector, span_ns, &root)
}
