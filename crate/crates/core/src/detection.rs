//! Detector model: efficiency, Gaussian timing jitter, dark counts, and
//! optional non-paralyzable dead time.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::{ns_to_ps, Ps, PS_PER_NS};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub efficiency: f64,
    /// Gaussian timing jitter sigma (ns).
    pub jitter_sigma_ns: f64,
    /// Dark count rate (1/ns).
    #[serde(default)]
    pub dark_rate_per_ns: f64,
    /// Non-paralyzable dead time (ns); 0 disables it.
    #[serde(default)]
    pub dead_time_ns: f64,
}

impl DetectorParams {
    /// SNSPD of the reference setup: 60% efficiency, 252 ps jitter.
    pub fn snspd() -> Self {
        DetectorParams {
            efficiency: 0.6,
            jitter_sigma_ns: 0.252,
            dark_rate_per_ns: 0.0,
            dead_time_ns: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::parameter("efficiency must be in [0, 1]"));
        }
        if self.jitter_sigma_ns < 0.0 {
            return Err(Error::parameter("jitter_sigma_ns must be >= 0"));
        }
        if self.dark_rate_per_ns < 0.0 {
            return Err(Error::parameter("dark_rate_per_ns must be >= 0"));
        }
        if self.dead_time_ns < 0.0 {
            return Err(Error::parameter("dead_time_ns must be >= 0"));
        }
        Ok(())
    }
}

/// One detector click.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TimeTag {
    /// Sort by timestamp first so the derived `Ord` gives the merge order.
    pub timestamp_ps: Ps,
    pub channel: u8,
}

impl TimeTag {
    pub fn new(channel: u8, timestamp_ps: Ps) -> Self {
        TimeTag { timestamp_ps, channel }
    }
}

/// Detect a single arrival: with probability `efficiency` returns a tag at
/// the jittered arrival time, rounded half-to-even to integer ps. Dead time
/// is handled at the stream level.
pub fn detect(
    arrival_ns: f64,
    channel: u8,
    d: &DetectorParams,
    rng: &mut Stream,
) -> Option<TimeTag> {
    if !rng.bernoulli(d.efficiency) {
        return None;
    }
    let t = if d.jitter_sigma_ns > 0.0 {
        rng.normal(arrival_ns, d.jitter_sigma_ns)
    } else {
        arrival_ns
    };
    Some(TimeTag::new(channel, ns_to_ps(t)))
}

/// Detect a time-sorted arrival stream (ps timestamps) on one channel.
/// Non-paralyzable dead time: an arrival within `dead_time_ns` of the last
/// accepted arrival is dropped and does not extend the blocked window.
/// The output is re-sorted because jitter can reorder nearby clicks.
pub fn detect_stream(
    arrivals_ps: &[Ps],
    channel: u8,
    d: &DetectorParams,
    rng: &mut Stream,
) -> Result<Vec<TimeTag>> {
    d.validate()?;
    let dead_ps = ns_to_ps(d.dead_time_ns);
    let mut last_accept: Option<Ps> = None;
    let mut out = Vec::new();
    let mut prev = Ps::MIN;
    for &a in arrivals_ps {
        if a < prev {
            return Err(Error::data("arrival stream is not sorted"));
        }
        prev = a;
        if let Some(last) = last_accept {
            if dead_ps > 0 && a - last < dead_ps {
                continue;
            }
        }
        if let Some(tag) = detect(a as f64 / PS_PER_NS, channel, d, rng) {
            last_accept = Some(a);
            out.push(tag);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Homogeneous Poisson dark-count stream on one channel over `[0, duration)`.
pub fn dark_count_stream(
    rate_per_ns: f64,
    duration_ns: f64,
    channel: u8,
    rng: &mut Stream,
) -> Result<Vec<TimeTag>> {
    if rate_per_ns < 0.0 {
        return Err(Error::parameter("dark rate must be >= 0"));
    }
    let mut out = Vec::new();
    if rate_per_ns == 0.0 || duration_ns <= 0.0 {
        return Ok(out);
    }
    let mut t = 0.0f64;
    loop {
        t += rng.exponential(1.0 / rate_per_ns)?;
        if t >= duration_ns {
            break;
        }
        out.push(TimeTag::new(channel, ns_to_ps(t)));
    }
    Ok(out)
}

/// Stable k-way merge of sorted tag streams; ties broken by channel id.
pub fn merge_sorted(streams: &[Vec<TimeTag>]) -> Result<Vec<TimeTag>> {
    let mut total = 0usize;
    for s in streams {
        if s.windows(2).any(|w| w[1].timestamp_ps < w[0].timestamp_ps) {
            return Err(Error::data("merge input stream is not sorted"));
        }
        total += s.len();
    }
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; streams.len()];
    loop {
        let mut best: Option<(usize, TimeTag)> = None;
        for (i, s) in streams.iter().enumerate() {
            if let Some(&tag) = s.get(idx[i]) {
                let better = match best {
                    None => true,
                    Some((_, b)) => tag < b,
                };
                if better {
                    best = Some((i, tag));
                }
            }
        }
        match best {
            Some((i, tag)) => {
                idx[i] += 1;
                out.push(tag);
            }
            None => break,
        }
    }
    Ok(out)
}
