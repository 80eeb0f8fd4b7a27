//! Subcommand implementations. Each returns the files it wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use gapdelay::channel::{observe, sigma_from_snr};
use gapdelay::crlb::{scenario_variants, sweep_delta_tau, sweep_snr};
use gapdelay::delay_response::{
    leakage, peak_report, single_path_complex, single_path_response, subband_decomposition, two_path_scan, PeakReport,
};
use gapdelay::export::{
    self, write_crlb_csv, write_leakage_join_csv, write_mask_csv, write_observation_csv, write_scan_csv, PeakRow,
    SweepAxis,
};
use gapdelay::spectrum::{build_mask_with_reference, scenario_catalog, SpectralMask};

use crate::config::{ChannelSpec, RunConfig};

/// File-name form of a scenario id (`A2*` becomes `A2_ref`).
pub fn file_stem(id: &str) -> String {
    id.replace('*', "_ref")
}

/// Plain decimal form of a number for file names.
fn tag(x: f64) -> String {
    format!("{x}").replace('-', "m")
}

struct Output<'a> {
    dir: PathBuf,
    cfg: &'a RunConfig,
    written: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(cfg: &'a RunConfig) -> anyhow::Result<Self> {
        let dir = cfg.out_dir();
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir,
            cfg,
            written: Vec::new(),
        })
    }

    fn meta(&self, extra: &[(&str, String)]) -> export::Meta {
        let mut m: export::Meta = extra.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        m.push(("preset".into(), self.cfg.shaping.clone()));
        if !self.cfg.no_meta {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            m.push(("generated_unix".into(), secs.to_string()));
        }
        m
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, |w| writeln!(w, "{text}"))
    }
}

/// Every mask a run touches: each scenario followed by its contiguous reference.
fn variants(cfg: &RunConfig) -> anyhow::Result<Vec<SpectralMask>> {
    let shaping = cfg.shaping()?;
    let mut out = Vec::new();
    for s in cfg.scenarios()? {
        for m in scenario_variants(&s, shaping, cfg.delta_f_hz)? {
            out.push(m.with_reference(cfg.reference));
        }
    }
    Ok(out)
}

/// The scenarios themselves, without references.
fn base_masks(cfg: &RunConfig) -> anyhow::Result<Vec<SpectralMask>> {
    let shaping = cfg.shaping()?;
    cfg.scenarios()?
        .iter()
        .map(|s| Ok(build_mask_with_reference(s, shaping, cfg.delta_f_hz, cfg.reference)?))
        .collect()
}

/// Catalog text, or JSON when `json` is set. Unknown ids are an error.
pub fn scenarios(ids: &[String], json: bool) -> anyhow::Result<String> {
    let catalog = scenario_catalog();
    for id in ids {
        if !catalog.iter().any(|s| &s.id == id) {
            bail!(gapdelay::Error::UnknownScenario(id.clone()));
        }
    }
    let selected: Vec<_> = catalog
        .iter()
        .filter(|s| ids.is_empty() || ids.contains(&s.id))
        .collect();
    if json {
        let rows: Vec<_> = selected.iter().map(|s| s.export()).collect();
        return Ok(serde_json::to_string_pretty(&rows)? + "\n");
    }
    let mut text = format!(
        "{:<5} {:<32} {:>13} {:>9} {}\n",
        "id", "bands [GHz]", "aperture MHz", "gap MHz", "reference of"
    );
    for s in selected {
        let bands: Vec<String> = s
            .bands
            .iter()
            .map(|(lo, hi)| format!("[{:.2},{:.2}]", lo * 1e-9, hi * 1e-9))
            .collect();
        text += &format!(
            "{:<5} {:<32} {:>13.0} {:>9.0} {}\n",
            s.id,
            bands.join(" "),
            s.aperture() * 1e-6,
            s.gap() * 1e-6,
            s.reference_of.as_deref().unwrap_or("-")
        );
    }
    Ok(text)
}

pub fn mask(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Output::new(cfg)?;
    for m in variants(cfg)? {
        let meta = out.meta(&[("scenario", m.scenario_id.clone())]);
        out.write(&format!("mask_{}.csv", file_stem(&m.scenario_id)), |w| {
            write_mask_csv(w, &m, &meta)
        })?;
    }
    Ok(out.written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Sweep {
    Snr,
    Dtau,
}

pub fn crlb(cfg: &RunConfig, sweep: Sweep) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Output::new(cfg)?;
    let masks = variants(cfg)?;
    for m in &masks {
        let base = cfg.channel_for(&m.scenario_id);
        match sweep {
            Sweep::Snr => {
                let spec = ChannelSpec {
                    tau2_ns: base.tau1_ns + cfg.dtau_ns,
                    ..base
                };
                let rows = sweep_snr(std::slice::from_ref(m), &spec.to_channel()?, &cfg.snr_grid())?;
                let meta = out.meta(&[
                    ("scenario", m.scenario_id.clone()),
                    ("x", "snr_db".into()),
                    ("channel", spec.to_string()),
                ]);
                let name = format!("crlb_snr_dtau{}ns_{}.csv", tag(cfg.dtau_ns), file_stem(&m.scenario_id));
                out.write(&name, |w| write_crlb_csv(w, SweepAxis::SnrDb, &rows, &meta))?;
            }
            Sweep::Dtau => {
                let rows = sweep_delta_tau(
                    std::slice::from_ref(m),
                    &base.to_channel()?,
                    cfg.snr_db,
                    &cfg.dtau_grid(),
                )?;
                let meta = out.meta(&[
                    ("scenario", m.scenario_id.clone()),
                    ("x", "dtau_ns".into()),
                    ("snr_db", cfg.snr_db.to_string()),
                    (
                        "channel",
                        format!("tau1={} ns tau2=tau1+dtau {}", base.tau1_ns, base.gains()),
                    ),
                ]);
                let name = format!("crlb_dtau_snr{}db_{}.csv", tag(cfg.snr_db), file_stem(&m.scenario_id));
                out.write(&name, |w| write_crlb_csv(w, SweepAxis::DeltaTauNs, &rows, &meta))?;
            }
        }
    }
    Ok(out.written)
}

/// Largest deviation between the subband recombination and the direct
/// normalized response, relative to the peak value of 1.
pub fn recombination_deviation(mask: &SpectralMask, cfg: &RunConfig) -> anyhow::Result<f64> {
    let axis = cfg.axis.to_axis()?;
    let direct = single_path_complex(mask, &axis)?;
    let g0 = mask.power();
    let parts = subband_decomposition(mask, &axis)?;
    Ok(parts
        .recombine()
        .iter()
        .zip(&direct)
        .map(|(r, d)| (r - d / g0).norm())
        .fold(0.0, f64::max))
}

/// Scenario id and largest recombination deviation.
pub type RecombinationCheck = (String, f64);

pub fn response(cfg: &RunConfig, check_recombination: bool) -> anyhow::Result<(Vec<PathBuf>, Vec<RecombinationCheck>)> {
    let mut out = Output::new(cfg)?;
    let axis = cfg.axis.to_axis()?;
    let mut checks = Vec::new();
    for m in variants(cfg)? {
        let scan = single_path_response(&m, &axis)?;
        let meta = out.meta(&[
            ("scenario", m.scenario_id.clone()),
            ("quantity", "|g(tau)|/g(0)".into()),
        ]);
        out.write(&format!("response_{}.csv", file_stem(&m.scenario_id)), |w| {
            write_scan_csv(w, &scan, &meta)
        })?;
        if check_recombination && m.subbands().len() == 2 {
            checks.push((m.scenario_id.clone(), recombination_deviation(&m, cfg)?));
        }
    }
    Ok((out.written, checks))
}

/// Scans for every configured scenario, with a peak report per scenario.
pub fn scan(cfg: &RunConfig) -> anyhow::Result<(Vec<PathBuf>, Vec<PeakReport>)> {
    let mut out = Output::new(cfg)?;
    let axis = cfg.axis.to_axis()?;
    let mut reports = Vec::new();
    for m in base_masks(cfg)? {
        let spec = cfg.channel_for(&m.scenario_id);
        let ch = spec.to_channel()?;
        let stem = file_stem(&m.scenario_id);
        let (scan, sigma2, kind) = if cfg.noise {
            let sigma2 = sigma_from_snr(&ch.params(), &m, cfg.snr_db)?;
            let obs = observe(&ch.path_set(), &m, sigma2, cfg.seed)?;
            let meta = out.meta(&[
                ("scenario", m.scenario_id.clone()),
                ("channel", spec.to_string()),
                ("sigma2", export::fmt_num(sigma2)),
                ("seed", cfg.seed.to_string()),
            ]);
            out.write(&format!("obs_{stem}.csv"), |w| write_observation_csv(w, &obs, &meta))?;
            (two_path_scan(&m, &ch, &axis, Some(&obs))?, sigma2, "noisy")
        } else {
            (two_path_scan(&m, &ch, &axis, None)?, 0.0, "noisefree")
        };
        let report = peak_report(&scan, &ch, cfg.window_ns * 1e-9)?;
        if report.windows_overlap {
            eprintln!(
                "warning: {}: peak windows of ±{} ns around {} and {} ns overlap",
                m.scenario_id, cfg.window_ns, spec.tau1_ns, spec.tau2_ns
            );
        }
        let meta = out.meta(&[
            ("scenario", m.scenario_id.clone()),
            ("channel", spec.to_string()),
            ("sigma2", export::fmt_num(sigma2)),
        ]);
        out.write(&format!("scan_{kind}_{stem}.csv"), |w| write_scan_csv(w, &scan, &meta))?;
        out.write_json(&format!("peaks_{kind}_{stem}.json"), &PeakRow::from(&report))?;
        reports.push(report);
    }
    Ok((out.written, reports))
}

pub fn leakage_join(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Output::new(cfg)?;
    let grid = cfg.dtau_grid();
    for m in variants(cfg)? {
        let base = cfg.channel_for(&m.scenario_id);
        let rows = sweep_delta_tau(std::slice::from_ref(&m), &base.to_channel()?, cfg.snr_db, &grid)?;
        let curve = leakage(&m, &grid)?;
        let meta = out.meta(&[
            ("scenario", m.scenario_id.clone()),
            ("snr_db", cfg.snr_db.to_string()),
            (
                "channel",
                format!("tau1={} ns tau2=tau1+dtau {}", base.tau1_ns, base.gains()),
            ),
        ]);
        out.write(&format!("leakage_{}.csv", file_stem(&m.scenario_id)), |w| {
            write_leakage_join_csv(w, &rows, &curve, &meta)
        })?;
    }
    Ok(out.written)
}

/// Peak-offset table over the six scenarios.
pub fn table2(cfg: &RunConfig) -> anyhow::Result<(Vec<PathBuf>, Vec<PeakRow>)> {
    let (mut written, reports) = scan(cfg)?;
    let rows: Vec<PeakRow> = reports.iter().map(PeakRow::from).collect();
    let mut out = Output::new(cfg)?;
    out.write_json("table2.json", &rows)?;
    out.write("table2.csv", |w| {
        writeln!(w, "id,tau_hat_1_ns,d_tau_1_ns,tau_hat_2_ns,d_tau_2_ns")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.id,
                export::fmt_num(r.tau_hat_1_ns),
                export::fmt_num(r.d_tau_1_ns),
                export::fmt_num(r.tau_hat_2_ns),
                export::fmt_num(r.d_tau_2_ns)
            )?;
        }
        Ok(())
    })?;
    written.extend(out.written);
    Ok((written, rows))
}

pub fn format_table2(rows: &[PeakRow]) -> String {
    let mut s = format!(
        "{:<4} {:>9} {:>9} {:>9} {:>9}\n",
        "id", "tau1_hat", "d_tau1", "tau2_hat", "d_tau2"
    );
    for r in rows {
        s += &format!(
            "{:<4} {:>9.3} {:>+9.3} {:>9.3} {:>+9.3}\n",
            r.id, r.tau_hat_1_ns, r.d_tau_1_ns, r.tau_hat_2_ns, r.d_tau_2_ns
        );
    }
    s
}

/// Every table and figure family into one directory.
pub fn reproduce_all(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Output::new(cfg)?;
    let catalog = scenarios(&[], true)?;
    out.write("scenarios.json", |w| w.write_all(catalog.as_bytes()))?;
    // The record stays valid wherever the directory is moved.
    out.write_json(
        "config.json",
        &RunConfig {
            out_dir: None,
            ..cfg.clone()
        },
    )?;
    let mut written = out.written;

    written.extend(mask(cfg)?);
    for dtau in [1.0, 10.0] {
        written.extend(crlb(
            &RunConfig {
                dtau_ns: dtau,
                ..cfg.clone()
            },
            Sweep::Snr,
        )?);
    }
    written.extend(crlb(cfg, Sweep::Dtau)?);
    written.extend(response(cfg, false)?.0);
    written.extend(
        table2(&RunConfig {
            noise: false,
            ..cfg.clone()
        })?
        .0,
    );
    written.extend(
        scan(&RunConfig {
            noise: true,
            ..cfg.clone()
        })?
        .0,
    );
    written.extend(leakage_join(cfg)?);
    Ok(written)
}
