//! Command-line front end binding the simulation and analysis modules into
//! reproducible experiment pipelines.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical
//! failure. All output files are written atomically (temp file + rename).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use photonstats::analysis;
use photonstats::config::{hex, ExperimentConfig};
use photonstats::correlator::{
    cross_correlate, cross_correlate_parallel, multiscale_g2, normalize_g2, CorrelationHistogram,
    NormalizeMode, Normalization,
};
use photonstats::diffusion;
use photonstats::error::Error;
use photonstats::ns_to_ps;
use photonstats::pipeline::{self, Artifact};
use photonstats::tagfile::{atomic_write, read_tagfile, write_tags, TagFileHeader};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "photonstats", version, about = "Single-photon-source simulation and analysis")]
struct Cli {
    /// Size of the worker thread pool for parallel correlation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a JSON config and write its artifact.
    Simulate {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path (tag file, CSV table, or JSON depending on kind).
        #[arg(long)]
        out: PathBuf,
    },
    /// Histogram coincidences from a binary tag file into a CSV.
    Correlate {
        /// Input tag file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Linear histogram bin width (ps).
        #[arg(long, default_value_t = 100)]
        bin_width_ps: i64,
        /// Linear histogram half-range (ps); must be a multiple of the bin width.
        #[arg(long, default_value_t = 125_000)]
        max_delay_ps: i64,
        /// Use log-spaced bins over positive delays instead of a linear grid.
        #[arg(long)]
        log: bool,
        /// First decade of the log grid (log10 of delay in ns).
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        decade_start: f64,
        /// Last decade of the log grid (log10 of delay in ns).
        #[arg(long, default_value_t = 9.0)]
        decade_end: f64,
        #[arg(long, default_value_t = 8)]
        points_per_decade: u32,
        /// Normalization of the g2 column.
        #[arg(long, value_enum, default_value_t = Normalize::None)]
        normalize: Normalize,
        /// Pulse repetition period (ns), required for pulsed normalization.
        #[arg(long, default_value_t = 25.0)]
        period_ns: f64,
    },
    /// Fit one of the built-in models to two CSV columns.
    Fit {
        #[arg(long, value_enum)]
        model: FitModel,
        /// Input CSV; `#` lines are ignored and the first remaining line
        /// names the columns.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Column holding the independent variable (default: first column).
        #[arg(long)]
        x_col: Option<String>,
        /// Column holding the dependent variable (default: second column).
        #[arg(long)]
        y_col: Option<String>,
        /// Multiply x values by this factor before fitting (e.g. 1e-3 to
        /// fit a ps histogram axis in ns).
        #[arg(long, default_value_t = 1.0)]
        x_scale: f64,
        /// Emitter lifetime fixed during interference-dip fits (ns).
        #[arg(long, default_value_t = 4.6)]
        t1_ns: f64,
        /// Detector-pair timing jitter fixed during interference-dip fits (ns).
        #[arg(long, default_value_t = 0.252)]
        jitter_sigma_ns: f64,
    },
    /// Compute the detection-efficiency budget from a budget config.
    Budget {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the implant-anneal diffusion solver and write the final profile.
    Diffuse {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment end-to-end: simulate, correlate, and fit where the
    /// kind supports it, writing all artifacts into a directory.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Normalize {
    None,
    Cw,
    Pulsed,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitModel {
    Lifetime,
    Saturation,
    Lorentzian,
    Hom,
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: failed to size thread pool: {e}");
            std::process::exit(2);
        }
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 3,
        Error::Numerical(_) => 4,
        _ => 2,
    }
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Simulate { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            write_artifact(&cfg, pipeline::run(&cfg)?, &out)?;
            let manifest = serde_json::to_string_pretty(&pipeline::manifest(&cfg))
                .expect("manifest serializes");
            atomic_write(&with_suffix(&out, "manifest.json"), manifest.as_bytes())?;
            Ok(())
        }
        Command::Correlate {
            input,
            out,
            bin_width_ps,
            max_delay_ps,
            log,
            decade_start,
            decade_end,
            points_per_decade,
            normalize,
            period_ns,
        } => {
            let (header, tags) = read_tagfile(&input)?;
            let (a, b): (Vec<_>, Vec<_>) = tags.iter().copied().partition(|t| t.channel == 0);
            let h = if log {
                multiscale_g2(&a, &b, decade_start, decade_end, points_per_decade)?
            } else if a.len().max(b.len()) > 100_000 {
                cross_correlate_parallel(&a, &b, bin_width_ps, max_delay_ps)?
            } else {
                cross_correlate(&a, &b, bin_width_ps, max_delay_ps)?
            };
            let h = match normalize {
                Normalize::None => h,
                Normalize::Cw => normalize_g2(&h, NormalizeMode::Cw)?,
                Normalize::Pulsed => {
                    normalize_g2(&h, NormalizeMode::pulsed(ns_to_ps(period_ns)))?
                }
            };
            atomic_write(&out, histogram_csv(&h, &header).as_bytes())?;
            Ok(())
        }
        Command::Fit {
            model,
            data,
            out,
            x_col,
            y_col,
            x_scale,
            t1_ns,
            jitter_sigma_ns,
        } => {
            let (x, y) = read_xy_csv(&data, x_col.as_deref(), y_col.as_deref())?;
            let x: Vec<f64> = x.iter().map(|v| v * x_scale).collect();
            let fit = match model {
                FitModel::Lifetime => analysis::fit_exponential_lifetime(&x, &y)?,
                FitModel::Saturation => analysis::fit_saturation(&x, &y, None)?,
                FitModel::Lorentzian => analysis::fit_lorentzian(&x, &y)?,
                FitModel::Hom => analysis::fit_hom(t1_ns, jitter_sigma_ns, &x, &y, None)?,
            };
            let json =
                serde_json::to_string_pretty(&fit).expect("fit result serializes");
            atomic_write(&out, format!("{json}\n").as_bytes())?;
            Ok(())
        }
        Command::Budget { config, out } => {
            let cfg = load_config(&config, None)?;
            match &cfg {
                ExperimentConfig::Budget(_) => {}
                other => {
                    return Err(Error::Config(format!(
                        "budget expects a budget config, got kind {}",
                        other.kind_name()
                    )))
                }
            }
            write_artifact(&cfg, pipeline::run(&cfg)?, &out)
        }
        Command::Diffuse { config, out } => {
            let cfg = load_config(&config, None)?;
            match &cfg {
                ExperimentConfig::Diffusion(_) => {}
                other => {
                    return Err(Error::Config(format!(
                        "diffuse expects a diffusion config, got kind {}",
                        other.kind_name()
                    )))
                }
            }
            write_artifact(&cfg, pipeline::run(&cfg)?, &out)
        }
        Command::Report { config, seed, out } => report(&config, seed, &out),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(s) = seed {
        cfg.set_seed(s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

fn generated_by(config_hash_hex: &str) -> String {
    format!("# generated-by: photonstats {VERSION}\n# config-hash: {config_hash_hex}\n")
}

fn write_artifact(cfg: &ExperimentConfig, artifact: Artifact, out: &Path) -> Result<(), Error> {
    let meta = generated_by(&cfg.config_hash_hex());
    match artifact {
        Artifact::Tags { header, tags } => {
            let mut bytes = Vec::new();
            write_tags(&mut bytes, &header, &tags)?;
            atomic_write(out, &bytes)
        }
        Artifact::Table { x_label, y_label, rows } => {
            let mut s = meta;
            s.push_str(&format!("# kind: {}\n{x_label},{y_label}\n", cfg.kind_name()));
            for (x, y) in rows {
                s.push_str(&format!("{x},{y}\n"));
            }
            atomic_write(out, s.as_bytes())
        }
        Artifact::Profile(p) => {
            let mut s = Vec::new();
            let comments = [
                format!("generated-by: photonstats {VERSION}"),
                format!("config-hash: {}", cfg.config_hash_hex()),
                format!("dose_cm2: {}", p.dose_cm2),
            ];
            diffusion::write_profile_csv(&mut s, &p, &comments)?;
            atomic_write(out, &s)
        }
        Artifact::Json(v) => {
            let mut v = v;
            if let Some(obj) = v.as_object_mut() {
                obj.insert(
                    "generated_by".into(),
                    serde_json::json!(format!("photonstats {VERSION}")),
                );
                obj.insert("config_hash".into(), serde_json::json!(cfg.config_hash_hex()));
            }
            let json = serde_json::to_string_pretty(&v).expect("artifact serializes");
            atomic_write(out, format!("{json}\n").as_bytes())
        }
    }
}

/// Render a histogram as `tau_ps,counts,g2` CSV. The g2 column is empty for
/// raw (unnormalized) histograms.
fn histogram_csv(h: &CorrelationHistogram, header: &TagFileHeader) -> String {
    let mut s = generated_by(&hex(&header.config_hash));
    s.push_str(&format!("# seed: {}\n", header.seed));
    s.push_str(&format!(
        "# channels: {},{}\n# total-tags: {},{}\n# acquisition-span-ps: {}\n",
        h.channel_pair.0, h.channel_pair.1, h.total_tags.0, h.total_tags.1, h.acquisition_span_ps
    ));
    let norm = match &h.normalization {
        Normalization::Raw => "raw".to_string(),
        Normalization::Cw { .. } => "cw".to_string(),
        Normalization::Pulsed { period_ps, .. } => format!("pulsed period_ps={period_ps}"),
    };
    s.push_str(&format!("# normalization: {norm}\n"));
    s.push_str("tau_ps,counts,g2\n");
    for i in 0..h.n_bins() {
        let g2 = if h.g2.is_empty() {
            String::new()
        } else {
            h.g2[i].to_string()
        };
        s.push_str(&format!("{},{},{}\n", h.bin_center_ps(i), h.counts[i], g2));
    }
    s
}

/// Read two numeric columns from a CSV with `#` comments and a header line.
fn read_xy_csv(
    path: &Path,
    x_col: Option<&str>,
    y_col: Option<&str>,
) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Data(format!("{}: empty data file", path.display())))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let index_of = |want: Option<&str>, default: usize, axis: &str| -> Result<usize, Error> {
        match want {
            None => Ok(default),
            Some(n) => names.iter().position(|c| *c == n).ok_or_else(|| {
                Error::Data(format!(
                    "{}: no column named {n:?} for {axis} (have {names:?})",
                    path.display()
                ))
            }),
        }
    };
    let xi = index_of(x_col, 0, "x")?;
    let yi = index_of(y_col, 1, "y")?;
    let need = xi.max(yi) + 1;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < need {
            return Err(Error::Data(format!(
                "{}: row {} has {} fields, need {need}",
                path.display(),
                k + 1,
                fields.len()
            )));
        }
        let parse = |f: &str| -> Result<f64, Error> {
            f.parse().map_err(|_| {
                Error::Data(format!("{}: row {}: not a number: {f:?}", path.display(), k + 1))
            })
        };
        x.push(parse(fields[xi])?);
        y.push(parse(fields[yi])?);
    }
    Ok((x, y))
}

fn report(config: &Path, seed: Option<u64>, out_dir: &Path) -> Result<(), Error> {
    let cfg = load_config(config, seed)?;
    std::fs::create_dir_all(out_dir)?;
    let manifest = serde_json::to_string_pretty(&pipeline::manifest(&cfg))
        .expect("manifest serializes");
    atomic_write(&out_dir.join("manifest.json"), manifest.as_bytes())?;
    let artifact = pipeline::run(&cfg)?;
    match &artifact {
        Artifact::Tags { header, tags } => {
            let mut bytes = Vec::new();
            write_tags(&mut bytes, header, tags)?;
            atomic_write(&out_dir.join("tags.ptag"), &bytes)?;
            let (a, b): (Vec<_>, Vec<_>) = tags.iter().copied().partition(|t| t.channel == 0);
            let period_ps = match &cfg {
                ExperimentConfig::Hom(c) => Some(ns_to_ps(c.pulses.repetition_period_ns)),
                ExperimentConfig::PulsedG2(c) => Some(ns_to_ps(c.pulses.repetition_period_ns)),
                _ => None,
            };
            // enough range for the >=10 far peaks the pulsed normalization needs
            let max_delay = period_ps.map_or(1_000_000, |p| 15 * p);
            let h = cross_correlate(&a, &b, 100, max_delay)?;
            let h = match period_ps {
                Some(p) => normalize_g2(&h, NormalizeMode::pulsed(p))?,
                None => h,
            };
            let header = TagFileHeader::new(2, cfg.seed().unwrap_or(0), cfg.config_hash());
            atomic_write(
                &out_dir.join("histogram.csv"),
                histogram_csv(&h, &header).as_bytes(),
            )?;
        }
        _ => {
            let name = match &cfg {
                ExperimentConfig::Budget(_) => "budget.json",
                ExperimentConfig::Diffusion(_) => "profile.csv",
                _ => "table.csv",
            };
            write_artifact(&cfg, artifact, &out_dir.join(name))?;
        }
    }
    Ok(())
}
