//! CSV writers for masks, observations, scans and sweeps.
//!
//! Numbers use 17 significant digits, `.` as separator and LF line
//! endings. Optional metadata goes in leading `# key: value` lines.

use std::io::{self, Write};

use serde::Serialize;

use crate::channel::Observation;
use crate::crlb::CrlbResult;
use crate::delay_response::{DelayScan, LeakageCurve, PeakReport};
use crate::spectrum::SpectralMask;

/// Shortest-exact-width scientific notation, 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub type Meta = Vec<(String, String)>;

fn write_meta<W: Write>(w: &mut W, meta: &[(String, String)]) -> io::Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

/// `n,f_hz,weight` for every grid tone.
pub fn write_mask_csv<W: Write>(w: &mut W, mask: &SpectralMask, meta: &[(String, String)]) -> io::Result<()> {
    write_meta(w, meta)?;
    writeln!(w, "n,f_hz,weight")?;
    let grid = mask.grid();
    for (n, a) in mask.weights().iter().enumerate() {
        writeln!(w, "{n},{},{}", fmt_num(grid.freq(n)), fmt_num(*a))?;
    }
    Ok(())
}

/// `n,f_hz,re,im` for the used tones, in stacking order.
pub fn write_observation_csv<W: Write>(w: &mut W, obs: &Observation, meta: &[(String, String)]) -> io::Result<()> {
    write_meta(w, meta)?;
    writeln!(w, "n,f_hz,re,im")?;
    let grid = obs.mask.grid();
    let used = obs.mask.used_set().map_err(io::Error::other)?;
    for (n, y) in used.iter().zip(&obs.y_stacked) {
        writeln!(w, "{n},{},{},{}", fmt_num(grid.freq(*n)), fmt_num(y.re), fmt_num(y.im))?;
    }
    Ok(())
}

/// `tau_ns,value`.
pub fn write_scan_csv<W: Write>(w: &mut W, scan: &DelayScan, meta: &[(String, String)]) -> io::Result<()> {
    write_meta(w, meta)?;
    writeln!(w, "tau_ns,value")?;
    for (i, v) in scan.values.iter().enumerate() {
        writeln!(w, "{},{}", fmt_num(scan.tau_axis.at(i) * 1e9), fmt_num(*v))?;
    }
    Ok(())
}

/// `tau_ns,value` with the separation as abscissa.
pub fn write_leakage_csv<W: Write>(w: &mut W, curve: &LeakageCurve, meta: &[(String, String)]) -> io::Result<()> {
    write_meta(w, meta)?;
    writeln!(w, "tau_ns,value")?;
    for (d, v) in curve.delta_tau.iter().zip(&curve.level) {
        writeln!(w, "{},{}", fmt_num(d * 1e9), fmt_num(*v))?;
    }
    Ok(())
}

/// Abscissa of a CRLB sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    SnrDb,
    DeltaTauNs,
}

impl SweepAxis {
    fn value(self, r: &CrlbResult) -> f64 {
        match self {
            SweepAxis::SnrDb => r.snr_db.unwrap_or(f64::NAN),
            SweepAxis::DeltaTauNs => r.delta_tau * 1e9,
        }
    }
}

/// `x,sqrt_crlb_ns,cond_alpha,cond_eff`. Flagged points are written as `nan`.
pub fn write_crlb_csv<W: Write>(
    w: &mut W,
    axis: SweepAxis,
    rows: &[CrlbResult],
    meta: &[(String, String)],
) -> io::Result<()> {
    write_meta(w, meta)?;
    writeln!(w, "x,sqrt_crlb_ns,cond_alpha,cond_eff")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_num(axis.value(r)),
            fmt_num(r.sqrt_crlb_ns()),
            fmt_num(r.cond_alpha),
            fmt_num(r.cond_eff)
        )?;
    }
    Ok(())
}

/// `dtau_ns,sqrt_crlb_ns,leakage`; rows are matched by position.
pub fn write_leakage_join_csv<W: Write>(
    w: &mut W,
    crlb: &[CrlbResult],
    curve: &LeakageCurve,
    meta: &[(String, String)],
) -> io::Result<()> {
    if crlb.len() != curve.level.len() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("{} bound rows vs {} leakage rows", crlb.len(), curve.level.len()),
        ));
    }
    write_meta(w, meta)?;
    writeln!(w, "dtau_ns,sqrt_crlb_ns,leakage")?;
    for ((r, d), l) in crlb.iter().zip(&curve.delta_tau).zip(&curve.level) {
        writeln!(w, "{},{},{}", fmt_num(d * 1e9), fmt_num(r.sqrt_crlb_ns()), fmt_num(*l))?;
    }
    Ok(())
}

/// One row of the peak-offset table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakRow {
    pub id: String,
    pub tau_hat_1_ns: f64,
    pub d_tau_1_ns: f64,
    pub tau_hat_2_ns: f64,
    pub d_tau_2_ns: f64,
}

impl From<&PeakReport> for PeakRow {
    fn from(r: &PeakReport) -> Self {
        Self {
            id: r.id.clone(),
            tau_hat_1_ns: r.peaks[0].tau_hat * 1e9,
            d_tau_1_ns: r.peaks[0].offset * 1e9,
            tau_hat_2_ns: r.peaks[1].tau_hat * 1e9,
            d_tau_2_ns: r.peaks[1].offset * 1e9,
        }
    }
}
