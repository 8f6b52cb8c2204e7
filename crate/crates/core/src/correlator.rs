//! Exact coincidence histograms g²(τ) from sorted time-tag streams.
//!
//! Counting is exact (no ring-buffer approximation): a streaming two-pointer
//! window over the sparse tag streams, O(N·w) with w the mean window
//! occupancy. τ is defined as `t_b - t_a`; bins are half-open
//! `[edge, edge + width)`.

use crate::detection::TimeTag;
use crate::error::{Error, Result};
use crate::Ps;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    Raw,
    /// Divided by the accidental level `r_a * r_b * bin_width * span`.
    Cw { rate_a_per_ps: f64, rate_b_per_ps: f64 },
    /// Each bin divided by `mean far-peak area * bin_width / period`, so a
    /// far side peak averages to 1 over its period window.
    Pulsed { far_peak_mean_area: f64, period_ps: Ps },
}

/// Binned coincidence counts vs delay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    /// Bin edges in ps, length = bins + 1, strictly increasing.
    pub bin_edges_ps: Vec<Ps>,
    pub counts: Vec<u64>,
    /// Normalized values; empty while `normalization` is `Raw`.
    pub g2: Vec<f64>,
    pub channel_pair: (u8, u8),
    pub total_tags: (u64, u64),
    /// Span covering both input streams (ps).
    pub acquisition_span_ps: Ps,
    pub normalization: Normalization,
}

impl CorrelationHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Center of bin `i` in ps (as f64 because log bins may not center on
    /// integer ps).
    pub fn bin_center_ps(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges_ps[i] as f64 + self.bin_edges_ps[i + 1] as f64)
    }

    pub fn bin_width_ps(&self, i: usize) -> Ps {
        self.bin_edges_ps[i + 1] - self.bin_edges_ps[i]
    }
}

fn check_sorted(tags: &[TimeTag], name: &str) -> Result<()> {
    if tags.windows(2).any(|w| w[1].timestamp_ps < w[0].timestamp_ps) {
        return Err(Error::data(format!("{name} tag stream is not sorted")));
    }
    Ok(())
}

fn span_of(a: &[TimeTag], b: &[TimeTag]) -> Ps {
    let first = a
        .first()
        .map(|t| t.timestamp_ps)
        .into_iter()
        .chain(b.first().map(|t| t.timestamp_ps))
        .min();
    let last = a
        .last()
        .map(|t| t.timestamp_ps)
        .into_iter()
        .chain(b.last().map(|t| t.timestamp_ps))
        .max();
    match (first, last) {
        (Some(f), Some(l)) => l - f,
        _ => 0,
    }
}

fn channel_pair(a: &[TimeTag], b: &[TimeTag]) -> (u8, u8) {
    (
        a.first().map(|t| t.channel).unwrap_or(0),
        b.first().map(|t| t.channel).unwrap_or(1),
    )
}

/// Count coincidences of one chunk of `a` against all of `b`.
fn correlate_chunk(
    chunk: &[TimeTag],
    b: &[TimeTag],
    bin_width: Ps,
    max_delay: Ps,
) -> Vec<u64> {
    let n_bins = (2 * max_delay / bin_width) as usize;
    let mut counts = vec![0u64; n_bins];
    if chunk.is_empty() || b.is_empty() {
        return counts;
    }
    // initial window position by binary search, then slide
    let t0 = chunk[0].timestamp_ps;
    let mut lo = b.partition_point(|t| t.timestamp_ps < t0 - max_delay);
    let mut hi = lo;
    for ta in chunk {
        let t = ta.timestamp_ps;
        while lo < b.len() && b[lo].timestamp_ps < t - max_delay {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < b.len() && b[hi].timestamp_ps < t + max_delay {
            hi += 1;
        }
        for tb in &b[lo..hi] {
            let tau = tb.timestamp_ps - t;
            let bin = ((tau + max_delay) / bin_width) as usize;
            counts[bin] += 1;
        }
    }
    counts
}

fn linear_edges(bin_width: Ps, max_delay: Ps) -> Vec<Ps> {
    let n_bins = (2 * max_delay / bin_width) as usize;
    (0..=n_bins).map(|i| -max_delay + i as Ps * bin_width).collect()
}

/// Exact linear-binned cross-correlation over `|tau| <= max_delay`.
pub fn cross_correlate(
    a: &[TimeTag],
    b: &[TimeTag],
    bin_width_ps: Ps,
    max_delay_ps: Ps,
) -> Result<CorrelationHistogram> {
    validate_linear(bin_width_ps, max_delay_ps)?;
    check_sorted(a, "a")?;
    check_sorted(b, "b")?;
    let counts = correlate_chunk(a, b, bin_width_ps, max_delay_ps);
    Ok(CorrelationHistogram {
        bin_edges_ps: linear_edges(bin_width_ps, max_delay_ps),
        counts,
        g2: Vec::new(),
        channel_pair: channel_pair(a, b),
        total_tags: (a.len() as u64, b.len() as u64),
        acquisition_span_ps: span_of(a, b),
        normalization: Normalization::Raw,
    })
}

/// Same result as [`cross_correlate`], computed by partitioning stream `a`
/// across threads; exact because each `a` tag is counted independently.
pub fn cross_correlate_parallel(
    a: &[TimeTag],
    b: &[TimeTag],
    bin_width_ps: Ps,
    max_delay_ps: Ps,
) -> Result<CorrelationHistogram> {
    validate_linear(bin_width_ps, max_delay_ps)?;
    check_sorted(a, "a")?;
    check_sorted(b, "b")?;
    let n_bins = (2 * max_delay_ps / bin_width_ps) as usize;
    let chunk_size = (a.len() / rayon::current_num_threads().max(1)).max(1024);
    let counts = a
        .par_chunks(chunk_size)
        .map(|chunk| correlate_chunk(chunk, b, bin_width_ps, max_delay_ps))
        .reduce(
            || vec![0u64; n_bins],
            |mut acc, part| {
                for (x, y) in acc.iter_mut().zip(part) {
                    *x += y;
                }
                acc
            },
        );
    Ok(CorrelationHistogram {
        bin_edges_ps: linear_edges(bin_width_ps, max_delay_ps),
        counts,
        g2: Vec::new(),
        channel_pair: channel_pair(a, b),
        total_tags: (a.len() as u64, b.len() as u64),
        acquisition_span_ps: span_of(a, b),
        normalization: Normalization::Raw,
    })
}

fn validate_linear(bin_width: Ps, max_delay: Ps) -> Result<()> {
    if bin_width <= 0 {
        return Err(Error::parameter("bin_width must be > 0"));
    }
    if max_delay <= 0 || max_delay % bin_width != 0 {
        return Err(Error::parameter("max_delay must be a positive multiple of bin_width"));
    }
    Ok(())
}

/// Log-spaced exact correlation over positive lags, for long-delay g².
/// Bin edges at `10^(decade_start + i/points_per_decade)` ns, rounded to ps.
pub fn multiscale_g2(
    a: &[TimeTag],
    b: &[TimeTag],
    decade_start: f64,
    decade_end: f64,
    points_per_decade: u32,
) -> Result<CorrelationHistogram> {
    if points_per_decade == 0 {
        return Err(Error::parameter("points_per_decade must be > 0"));
    }
    if decade_end <= decade_start {
        return Err(Error::parameter("decade_end must exceed decade_start"));
    }
    check_sorted(a, "a")?;
    check_sorted(b, "b")?;
    let n_bins = ((decade_end - decade_start) * points_per_decade as f64).round() as usize;
    let mut edges: Vec<Ps> = (0..=n_bins)
        .map(|i| {
            let ns = 10f64.powf(decade_start + i as f64 / points_per_decade as f64);
            (ns * 1e3).round() as Ps
        })
        .collect();
    edges.dedup();
    if edges.len() < 2 {
        return Err(Error::parameter("log grid collapses below ps resolution"));
    }
    let counts = count_in_edges(a, b, &edges);
    Ok(CorrelationHistogram {
        counts,
        bin_edges_ps: edges,
        g2: Vec::new(),
        channel_pair: channel_pair(a, b),
        total_tags: (a.len() as u64, b.len() as u64),
        acquisition_span_ps: span_of(a, b),
        normalization: Normalization::Raw,
    })
}

/// Exact per-bin pair counts for arbitrary increasing edges (positive lags):
/// bin k counts pairs with `t_b - t_a` in `[edges[k], edges[k+1])`.
/// One amortized-O(N) pointer sweep per bin.
fn count_in_edges(a: &[TimeTag], b: &[TimeTag], edges: &[Ps]) -> Vec<u64> {
    let n_bins = edges.len() - 1;
    let mut counts = vec![0u64; n_bins];
    if a.is_empty() || b.is_empty() {
        return counts;
    }
    for k in 0..n_bins {
        let (lo_off, hi_off) = (edges[k], edges[k + 1]);
        let mut lo = 0usize;
        let mut hi = 0usize;
        let mut c = 0u64;
        for ta in a {
            let t = ta.timestamp_ps;
            while lo < b.len() && b[lo].timestamp_ps < t + lo_off {
                lo += 1;
            }
            if hi < lo {
                hi = lo;
            }
            while hi < b.len() && b[hi].timestamp_ps < t + hi_off {
                hi += 1;
            }
            c += (hi - lo) as u64;
        }
        counts[k] = c;
    }
    counts
}

#[derive(Clone, Copy, Debug)]
pub enum NormalizeMode {
    /// Divide by the accidental coincidence level so uncorrelated Poissonian
    /// streams normalize to 1.
    Cw,
    /// Divide by the mean far side-peak area so side peaks average to 1 over
    /// a period window. Peaks with `|index| <= exclude` are excluded from the
    /// mean; at least `min_far_peaks` far peaks are required.
    Pulsed {
        period_ps: Ps,
        exclude: i64,
        min_far_peaks: usize,
    },
}

impl NormalizeMode {
    pub fn pulsed(period_ps: Ps) -> Self {
        NormalizeMode::Pulsed {
            period_ps,
            exclude: 2,
            min_far_peaks: 10,
        }
    }
}

/// Normalize a raw histogram to g² units.
pub fn normalize_g2(h: &CorrelationHistogram, mode: NormalizeMode) -> Result<CorrelationHistogram> {
    let mut out = h.clone();
    match mode {
        NormalizeMode::Cw => {
            let span = h.acquisition_span_ps as f64;
            if span <= 0.0 || h.total_tags.0 == 0 || h.total_tags.1 == 0 {
                return Err(Error::parameter("cw normalization needs nonzero rates and span"));
            }
            let ra = h.total_tags.0 as f64 / span;
            let rb = h.total_tags.1 as f64 / span;
            out.g2 = h
                .counts
                .iter()
                .enumerate()
                .map(|(i, &c)| c as f64 / (ra * rb * h.bin_width_ps(i) as f64 * span))
                .collect();
            out.normalization = Normalization::Cw {
                rate_a_per_ps: ra,
                rate_b_per_ps: rb,
            };
        }
        NormalizeMode::Pulsed {
            period_ps,
            exclude,
            min_far_peaks,
        } => {
            let areas = peak_areas(h, period_ps, period_ps / 2)?;
            let far: Vec<f64> = areas
                .iter()
                .filter(|(m, _)| m.abs() > exclude)
                .map(|&(_, a)| a)
                .collect();
            if far.len() < min_far_peaks {
                return Err(Error::parameter(format!(
                    "pulsed normalization needs >= {min_far_peaks} far peaks, found {}",
                    far.len()
                )));
            }
            let mean_far = far.iter().sum::<f64>() / far.len() as f64;
            if mean_far <= 0.0 {
                return Err(Error::parameter("far side peaks are empty"));
            }
            out.g2 = h
                .counts
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    c as f64 * period_ps as f64 / (mean_far * h.bin_width_ps(i) as f64)
                })
                .collect();
            out.normalization = Normalization::Pulsed {
                far_peak_mean_area: mean_far,
                period_ps,
            };
        }
    }
    Ok(out)
}

/// Integrate raw counts in `± half_window` around each multiple of `period`
/// that fits inside the histogram range. Windows must not overlap.
pub fn peak_areas(
    h: &CorrelationHistogram,
    period_ps: Ps,
    half_window_ps: Ps,
) -> Result<Vec<(i64, f64)>> {
    if period_ps <= 0 || half_window_ps <= 0 {
        return Err(Error::parameter("period and half_window must be > 0"));
    }
    if 2 * half_window_ps > period_ps {
        return Err(Error::parameter("peak windows overlap"));
    }
    let lo_edge = *h.bin_edges_ps.first().unwrap();
    let hi_edge = *h.bin_edges_ps.last().unwrap();
    let m_min = (lo_edge + half_window_ps).div_euclid(period_ps);
    let m_max = (hi_edge - half_window_ps).div_euclid(period_ps);
    let mut out = Vec::new();
    for m in m_min..=m_max {
        let center = m * period_ps;
        if center - half_window_ps < lo_edge || center + half_window_ps > hi_edge {
            continue;
        }
        let mut area = 0.0;
        for i in 0..h.n_bins() {
            let c = h.bin_center_ps(i);
            if c >= (center - half_window_ps) as f64 && c < (center + half_window_ps) as f64 {
                area += h.counts[i] as f64;
            }
        }
        out.push((m, area));
    }
    Ok(out)
}

/// g²(0) as the central-peak area over the mean far side-peak area.
pub fn g2_zero(h: &CorrelationHistogram, period_ps: Ps, exclude: i64) -> Result<f64> {
    let areas = peak_areas(h, period_ps, period_ps / 2)?;
    let central = areas
        .iter()
        .find(|(m, _)| *m == 0)
        .map(|&(_, a)| a)
        .ok_or_else(|| Error::parameter("histogram does not cover tau = 0"))?;
    let far: Vec<f64> = areas
        .iter()
        .filter(|(m, _)| m.abs() > exclude)
        .map(|&(_, a)| a)
        .collect();
    if far.is_empty() {
        return Err(Error::parameter("no far side peaks in range"));
    }
    Ok(central / (far.iter().sum::<f64>() / far.len() as f64))
}

#[cfg(test)]
pub(crate) fn brute_force_counts(
    a: &[TimeTag],
    b: &[TimeTag],
    edges: &[Ps],
) -> Vec<u64> {
    let mut counts = vec![0u64; edges.len() - 1];
    for ta in a {
        for tb in b {
            let tau = tb.timestamp_ps - ta.timestamp_ps;
            for k in 0..edges.len() - 1 {
                if tau >= edges[k] && tau < edges[k + 1] {
                    counts[k] += 1;
                }
            }
        }
    }
    counts
}
