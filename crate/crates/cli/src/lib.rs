//! `gapdelay` command-line front end.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gapdelay::spectrum::FrequencyReference;

use crate::commands::Sweep;
use crate::config::{AxisSpec, ChannelSpec, RunConfig, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "gapdelay",
    version,
    about = "Delay-separation bounds and delay-domain sidelobes of gapped Wi-Fi allocations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the scenario catalog with contiguous references.
    Scenarios {
        /// Restrict to these ids.
        ids: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Export per-tone mask weights.
    Mask(Common),
    /// Square-root CRLB of the delay separation versus SNR or separation.
    Crlb {
        #[arg(long, value_enum, default_value = "snr")]
        sweep: Sweep,
        #[command(flatten)]
        common: Common,
    },
    /// Normalized single-path delay response.
    Response {
        /// Also rebuild the response from its subband parts and report the deviation.
        #[arg(long)]
        check_recombination: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Two-path matched-filter scan and restricted peak report.
    Scan(Common),
    /// Bound versus separation joined with the normalized leakage.
    Leakage(Common),
    /// Peak-offset table for all six scenarios.
    Table2(Common),
    /// Every table and figure family into the output directory.
    ReproduceAll(Common),
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scenario ids (default: the group, or all six).
    #[arg(long = "scenario", value_delimiter = ',')]
    pub scenarios: Vec<String>,
    #[arg(long)]
    pub group: Option<String>,
    /// Custom allocation as `lo:hi` pairs in Hz, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub bands: Vec<String>,
    /// flat, flat-taper or toneplan-11ax.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub taper_edge_mhz: Option<f64>,
    /// Phase reference frequency: aperture-center or absolute.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long)]
    pub tau1_ns: Option<f64>,
    #[arg(long)]
    pub tau2_ns: Option<f64>,
    #[arg(long)]
    pub snr: Option<f64>,
    /// SNR grid in dB, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub snr_grid: Vec<f64>,
    /// Separation in ns for SNR sweeps.
    #[arg(long)]
    pub dtau: Option<f64>,
    /// Separation grid in ns, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dtau_grid: Vec<f64>,
    /// Delay axis `start:stop:step` in ns.
    #[arg(long)]
    pub axis: Option<String>,
    /// Peak search half-width in ns.
    #[arg(long)]
    pub window_ns: Option<f64>,
    /// Seeded noisy observation at `--snr` instead of the noise-free scan.
    #[arg(long, conflicts_with = "noise_free")]
    pub noise: bool,
    #[arg(long)]
    pub noise_free: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Omit the timestamp comment from outputs.
    #[arg(long)]
    pub no_meta: bool,
}

impl Common {
    /// Config file (or defaults) with every given flag applied, validated.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.scenarios.is_empty() {
            cfg.scenarios = self.scenarios.clone();
            cfg.group = None;
        }
        if let Some(g) = &self.group {
            cfg.group = Some(g.clone());
            cfg.scenarios.clear();
        }
        if !self.bands.is_empty() {
            cfg.bands_hz = Some(
                self.bands
                    .iter()
                    .map(|b| parse_band(b))
                    .collect::<anyhow::Result<_>>()?,
            );
        }
        if let Some(p) = &self.preset {
            cfg.shaping = p.clone();
        }
        if let Some(e) = self.taper_edge_mhz {
            cfg.taper_edge_hz = e * 1e6;
        }
        if let Some(r) = &self.reference {
            cfg.reference = match r.as_str() {
                "aperture-center" => FrequencyReference::ApertureCenter,
                "absolute" => FrequencyReference::Absolute,
                other => anyhow::bail!("unknown phase reference '{other}'"),
            };
        }
        if self.tau1_ns.is_some() || self.tau2_ns.is_some() {
            let base = cfg.channel.unwrap_or_else(|| ChannelSpec::reference_point(5.0, 15.0));
            cfg.channel = Some(ChannelSpec {
                tau1_ns: self.tau1_ns.unwrap_or(base.tau1_ns),
                tau2_ns: self.tau2_ns.unwrap_or(base.tau2_ns),
                ..base
            });
        }
        if let Some(s) = self.snr {
            cfg.snr_db = s;
        }
        if !self.snr_grid.is_empty() {
            cfg.snr_grid_db = Some(self.snr_grid.clone());
        }
        if let Some(d) = self.dtau {
            cfg.dtau_ns = d;
        }
        if !self.dtau_grid.is_empty() {
            cfg.dtau_grid_ns = Some(self.dtau_grid.clone());
        }
        if let Some(a) = &self.axis {
            cfg.axis = parse_axis(a)?;
        }
        if let Some(w) = self.window_ns {
            cfg.window_ns = w;
        }
        if self.noise {
            cfg.noise = true;
        }
        if self.noise_free {
            cfg.noise = false;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = Some(o.clone());
        }
        if self.no_meta {
            cfg.no_meta = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_band(s: &str) -> anyhow::Result<[f64; 2]> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| anyhow::anyhow!("band '{s}' is not of the form lo:hi"))?;
    Ok([lo.trim().parse()?, hi.trim().parse()?])
}

fn parse_axis(s: &str) -> anyhow::Result<AxisSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        anyhow::bail!("axis '{s}' is not of the form start:stop:step");
    };
    Ok(AxisSpec {
        start_ns: start.trim().parse()?,
        stop_ns: stop.trim().parse()?,
        step_ns: step.trim().parse()?,
    })
}

/// 0 success, 2 usage or validation error, 3 numerical failure.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<gapdelay::Error>())
        .any(gapdelay::Error::is_numerical);
    if numerical {
        3
    } else {
        2
    }
}

/// Runs one command, writing the list of produced files and any tables to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Scenarios { ids, json } => {
            write!(out, "{}", commands::scenarios(&ids, json)?)?;
        }
        Command::Mask(c) => list(out, &commands::mask(&c.resolve()?)?)?,
        Command::Crlb { sweep, common } => list(out, &commands::crlb(&common.resolve()?, sweep)?)?,
        Command::Response {
            check_recombination,
            common,
        } => {
            let (files, checks) = commands::response(&common.resolve()?, check_recombination)?;
            list(out, &files)?;
            for (id, dev) in checks {
                writeln!(out, "recombination {id}: max deviation {dev:.3e}")?;
            }
        }
        Command::Scan(c) => {
            let (files, reports) = commands::scan(&c.resolve()?)?;
            list(out, &files)?;
            let rows: Vec<_> = reports.iter().map(gapdelay::export::PeakRow::from).collect();
            write!(out, "{}", commands::format_table2(&rows))?;
        }
        Command::Leakage(c) => list(out, &commands::leakage_join(&c.resolve()?)?)?,
        Command::Table2(c) => {
            let (files, rows) = commands::table2(&catalog_only(c.resolve()?))?;
            list(out, &files)?;
            write!(out, "{}", commands::format_table2(&rows))?;
        }
        Command::ReproduceAll(c) => {
            list(out, &commands::reproduce_all(&catalog_only(c.resolve()?))?)?;
        }
    }
    Ok(())
}

/// Table and full-reproduction runs always cover the six catalog scenarios.
fn catalog_only(mut cfg: RunConfig) -> RunConfig {
    cfg.scenarios.clear();
    cfg.group = None;
    cfg.bands_hz = None;
    cfg
}

fn list(out: &mut dyn Write, files: &[PathBuf]) -> std::io::Result<()> {
    for f in files {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}
