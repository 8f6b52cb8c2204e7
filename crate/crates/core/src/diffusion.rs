//! 1-D dopant diffusion during rapid thermal annealing.
//!
//! Explicit FTCS (forward-time centred-space) solver on a uniform depth grid
//! with reflecting boundaries at both interfaces. Depths are in nm,
//! concentrations in cm^-3, the implant dose in cm^-2, and diffusivities in
//! cm^2/s (converted internally to nm^2/s).

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Boltzmann constant in eV/K.
pub const K_B_EV: f64 = 8.617333262e-5;

/// nm^2 per cm^2.
const NM2_PER_CM2: f64 = 1.0e14;

/// Arrhenius prefactor for substitutional carbon in silicon, cm^2/s.
pub const CARBON_D0_CM2_S: f64 = 0.33;
/// Activation energy for carbon diffusion in silicon, eV.
pub const CARBON_EA_EV: f64 = 2.92;

/// Device-layer thickness used throughout, nm.
pub const LAYER_NM: f64 = 220.0;

/// Concentration-vs-depth profile on a uniform grid.
///
/// The grid spans `[0, span_nm]` inclusive with `n` nodes; `dx_nm` is the
/// node spacing. `dose_cm2` records the intended areal dose; the trapezoidal
/// integral of `concentration_cm3` matches it after [`initial_profile`] and is
/// conserved by [`evolve`].
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub dx_nm: f64,
    pub concentration_cm3: Vec<f64>,
    pub dose_cm2: f64,
}

impl Profile {
    pub fn n_nodes(&self) -> usize {
        self.concentration_cm3.len()
    }

    pub fn span_nm(&self) -> f64 {
        (self.n_nodes() - 1) as f64 * self.dx_nm
    }

    pub fn depth_nm(&self, i: usize) -> f64 {
        i as f64 * self.dx_nm
    }

    /// Trapezoidal integral of the concentration over depth, in cm^-2.
    pub fn integral_cm2(&self) -> f64 {
        let c = &self.concentration_cm3;
        let n = c.len();
        if n < 2 {
            return 0.0;
        }
        let interior: f64 = c[1..n - 1].iter().sum();
        let dx_cm = self.dx_nm * 1.0e-7;
        (0.5 * (c[0] + c[n - 1]) + interior) * dx_cm
    }
}

/// One rapid-thermal-anneal step.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealSchedule {
    pub temperature_k: f64,
    pub duration_s: f64,
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature_k > 0.0) {
            return Err(Error::parameter(format!(
                "anneal temperature must be positive, got {} K",
                self.temperature_k
            )));
        }
        if !(self.duration_s >= 0.0) {
            return Err(Error::parameter(format!(
                "anneal duration must be non-negative, got {} s",
                self.duration_s
            )));
        }
        Ok(())
    }
}

/// Arrhenius diffusivity of carbon in silicon, cm^2/s.
pub fn diffusivity(temperature_k: f64) -> Result<f64> {
    if !(temperature_k > 0.0) {
        return Err(Error::parameter(format!(
            "temperature must be positive, got {temperature_k} K"
        )));
    }
    Ok(CARBON_D0_CM2_S * (-CARBON_EA_EV / (K_B_EV * temperature_k)).exp())
}

/// As-implanted profile: a Gaussian in depth truncated to the grid span and
/// rescaled so the trapezoidal integral equals `dose_cm2`.
///
/// A mean outside the span is accepted (the truncation handles it); the
/// rescale keeps the dose exact either way.
pub fn initial_profile(
    mean_nm: f64,
    straggle_nm: f64,
    dose_cm2: f64,
    span_nm: f64,
    dx_nm: f64,
) -> Result<Profile> {
    if !(straggle_nm > 0.0) {
        return Err(Error::parameter(format!(
            "straggle must be positive, got {straggle_nm} nm"
        )));
    }
    if !(dose_cm2 >= 0.0) {
        return Err(Error::parameter(format!(
            "dose must be non-negative, got {dose_cm2} cm^-2"
        )));
    }
    let n = grid_nodes(span_nm, dx_nm)?;
    let shape: Vec<f64> = (0..n)
        .map(|i| {
            let z = (i as f64 * dx_nm - mean_nm) / straggle_nm;
            (-0.5 * z * z).exp()
        })
        .collect();
    let mut p = Profile {
        dx_nm,
        concentration_cm3: shape,
        dose_cm2,
    };
    let raw = p.integral_cm2();
    if raw <= 0.0 {
        return Err(Error::numerical(
            "truncated profile has zero mass on the grid".to_string(),
        ));
    }
    let scale = dose_cm2 / raw;
    for c in &mut p.concentration_cm3 {
        *c *= scale;
    }
    Ok(p)
}

fn grid_nodes(span_nm: f64, dx_nm: f64) -> Result<usize> {
    if !(dx_nm > 0.0) || !(span_nm > 0.0) {
        return Err(Error::parameter(format!(
            "grid span and spacing must be positive, got span {span_nm} nm, dx {dx_nm} nm"
        )));
    }
    let cells = span_nm / dx_nm;
    let rounded = cells.round();
    if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
        return Err(Error::parameter(format!(
            "dx {dx_nm} nm does not divide the span {span_nm} nm"
        )));
    }
    Ok(rounded as usize + 1)
}

/// Advance a profile through one anneal with the explicit FTCS scheme.
///
/// Time step `dt = safety * dx^2 / (2 D)`; the last step is shortened to land
/// exactly on the schedule duration. Both boundaries are reflecting
/// (zero flux), which conserves the trapezoidal dose integral exactly.
pub fn evolve(p: &Profile, s: &AnnealSchedule, safety: f64) -> Result<Profile> {
    s.validate()?;
    if !(safety > 0.0 && safety <= 0.5) {
        return Err(Error::parameter(format!(
            "FTCS safety factor must lie in (0, 0.5], got {safety}"
        )));
    }
    if p.n_nodes() < 3 {
        return Err(Error::parameter(
            "profile needs at least 3 grid nodes".to_string(),
        ));
    }
    let d_nm2_s = diffusivity(s.temperature_k)? * NM2_PER_CM2;
    if d_nm2_s == 0.0 || s.duration_s == 0.0 {
        return Ok(p.clone());
    }
    let dx2 = p.dx_nm * p.dx_nm;
    let dt = safety * dx2 / (2.0 * d_nm2_s);
    let mut out = p.clone();
    let mut next = out.concentration_cm3.clone();
    let mut remaining = s.duration_s;
    while remaining > 0.0 {
        let step = dt.min(remaining);
        let r = d_nm2_s * step / dx2;
        let c = &out.concentration_cm3;
        let n = c.len();
        next[0] = c[0] + 2.0 * r * (c[1] - c[0]);
        for i in 1..n - 1 {
            next[i] = c[i] + r * (c[i + 1] - 2.0 * c[i] + c[i - 1]);
        }
        next[n - 1] = c[n - 1] + 2.0 * r * (c[n - 2] - c[n - 1]);
        std::mem::swap(&mut out.concentration_cm3, &mut next);
        remaining -= step;
    }
    Ok(out)
}

/// Min/max concentration ratio over the layer; 1 for a flat profile, near 0
/// for a sharply peaked one.
pub fn uniformity_metric(p: &Profile) -> f64 {
    let max = p.concentration_cm3.iter().cloned().fold(f64::MIN, f64::max);
    let min = p.concentration_cm3.iter().cloned().fold(f64::MAX, f64::min);
    if max <= 0.0 {
        return 0.0;
    }
    (min / max).max(0.0)
}

/// Write a profile as two-column CSV; `#` lines carry metadata.
pub fn write_profile_csv<W: Write>(mut w: W, p: &Profile, comments: &[String]) -> Result<()> {
    for line in comments {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "depth_nm,concentration_cm3")?;
    for (i, c) in p.concentration_cm3.iter().enumerate() {
        writeln!(w, "{},{}", p.depth_nm(i), c)?;
    }
    Ok(())
}

pub fn write_profile_file(path: &Path, p: &Profile, comments: &[String]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_profile_csv(std::io::BufWriter::new(f), p, comments)
}

/// Read a two-column profile CSV produced by [`write_profile_csv`].
///
/// The grid must be uniform starting at depth 0; the stored dose is set to
/// the trapezoidal integral of the read concentrations.
pub fn read_profile_csv<R: BufRead>(r: R) -> Result<Profile> {
    let mut depths = Vec::new();
    let mut concs = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("depth_nm") {
            continue;
        }
        let mut parts = t.split(',');
        let (d, c) = match (parts.next(), parts.next()) {
            (Some(d), Some(c)) => (d, c),
            _ => {
                return Err(Error::data(format!(
                    "line {}: expected 'depth_nm,concentration_cm3'",
                    lineno + 1
                )))
            }
        };
        let d: f64 = d
            .trim()
            .parse()
            .map_err(|e| Error::data(format!("line {}: bad depth: {e}", lineno + 1)))?;
        let c: f64 = c
            .trim()
            .parse()
            .map_err(|e| Error::data(format!("line {}: bad concentration: {e}", lineno + 1)))?;
        depths.push(d);
        concs.push(c);
    }
    if depths.len() < 2 {
        return Err(Error::data("profile CSV needs at least 2 rows".to_string()));
    }
    let dx = depths[1] - depths[0];
    if !(dx > 0.0) || depths[0] != 0.0 {
        return Err(Error::data(
            "profile grid must be increasing and start at depth 0".to_string(),
        ));
    }
    for (i, d) in depths.iter().enumerate() {
        if (d - i as f64 * dx).abs() > 1e-6 * dx {
            return Err(Error::data(format!("non-uniform grid at row {i}")));
        }
    }
    let mut p = Profile {
        dx_nm: dx,
        concentration_cm3: concs,
        dose_cm2: 0.0,
    };
    p.dose_cm2 = p.integral_cm2();
    Ok(p)
}

pub fn read_profile_file(path: &Path) -> Result<Profile> {
    let f = std::fs::File::open(path)?;
    read_profile_csv(std::io::BufReader::new(f))
}
