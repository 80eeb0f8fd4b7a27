//! Delay-domain response of a spectral mask.
//!
//! The single-path response is `g(τ) = Σ_{n∈K_s} a[n]²·exp(-j2π f[n] τ)`,
//! the transform of the effective spectral window. A two-path
//! matched-filter scan is the magnitude of two shifted copies of it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{Observation, TwoPathChannel};
use crate::error::{Error, Result};
use crate::phasor::{cis, phasor_sums, phasor_sums_uniform, PhaseSign};
use crate::spectrum::SpectralMask;

/// Default scan window half-width around each true delay.
pub const DEFAULT_PEAK_WINDOW: f64 = 1.0e-9;

/// Minimum number of grid steps a peak window must span.
pub const MIN_WINDOW_STEPS: usize = 5;

/// Uniform delay axis `start + i·step`, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayAxis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl DelayAxis {
    /// Axis from `start` to `stop` inclusive; `stop - start` must be a
    /// whole number of steps.
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidAxis(format!("step {step} s must be positive")));
        }
        if !(stop > start) {
            return Err(Error::InvalidAxis(format!("stop {stop} s must exceed start {start} s")));
        }
        let steps = (stop - start) / step;
        let n = steps.round();
        if (steps - n).abs() > 1e-6 * n.max(1.0) {
            return Err(Error::InvalidAxis(format!(
                "span {} s is not a multiple of step {step} s",
                stop - start
            )));
        }
        Ok(Self {
            start,
            step,
            len: n as usize + 1,
        })
    }

    /// `[0, 50] ns` at 1 ps.
    pub fn default_scan() -> Self {
        Self {
            start: 0.0,
            step: 1e-12,
            len: 50_001,
        }
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn stop(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }

    fn shifted_ns(&self, shift: f64) -> (f64, f64) {
        ((self.start - shift) * 1e9, self.step * 1e9)
    }
}

/// Sampled nonnegative delay-domain function.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayScan {
    pub tau_axis: DelayAxis,
    pub values: Vec<f64>,
    pub normalized: bool,
    pub scenario_id: String,
}

impl DelayScan {
    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Complex `g(τ - shift)` on `axis`.
fn single_path_shifted(mask: &SpectralMask, axis: &DelayAxis, shift: f64) -> Result<Vec<Complex64>> {
    let tones = mask.used_tones()?;
    let power: Vec<f64> = tones.weight.iter().map(|a| a * a).collect();
    let (t0, dt) = axis.shifted_ns(shift);
    Ok(phasor_sums_uniform(
        &tones.freq_ghz,
        &power,
        t0,
        dt,
        axis.len,
        PhaseSign::Negative,
    ))
}

/// Complex, unnormalized `g(τ)` on `axis`.
pub fn single_path_complex(mask: &SpectralMask, axis: &DelayAxis) -> Result<Vec<Complex64>> {
    single_path_shifted(mask, axis, 0.0)
}

/// Complex, unnormalized `g(τ)` at arbitrary delays (seconds).
pub fn single_path_at(mask: &SpectralMask, taus: &[f64]) -> Result<Vec<Complex64>> {
    let tones = mask.used_tones()?;
    let power: Vec<f64> = tones.weight.iter().map(|a| a * a).collect();
    let ns: Vec<f64> = taus.iter().map(|t| t * 1e9).collect();
    Ok(phasor_sums(&tones.freq_ghz, &power, &ns, PhaseSign::Negative))
}

/// `|g(τ)| / g(0)`.
pub fn single_path_response(mask: &SpectralMask, axis: &DelayAxis) -> Result<DelayScan> {
    let g = single_path_complex(mask, axis)?;
    let g0 = mask.power();
    Ok(DelayScan {
        tau_axis: *axis,
        values: g.iter().map(|z| z.norm() / g0).collect(),
        normalized: true,
        scenario_id: mask.scenario_id.clone(),
    })
}

/// Basebanded per-subband responses of a two-subband mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandResponse {
    pub tau_axis: DelayAxis,
    pub g1: Vec<Complex64>,
    pub g2: Vec<Complex64>,
    /// Absolute subband centers, Hz.
    pub f_c1: f64,
    pub f_c2: f64,
    /// Phase reference of the mask, Hz.
    pub reference_hz: f64,
}

impl SubbandResponse {
    /// `exp(-j2π f_c1 τ)·G1(τ) + exp(-j2π f_c2 τ)·G2(τ)`, equal to `g(τ)/g(0)`.
    pub fn recombine(&self) -> Vec<Complex64> {
        let c1 = (self.f_c1 - self.reference_hz) * 1e-9;
        let c2 = (self.f_c2 - self.reference_hz) * 1e-9;
        (0..self.tau_axis.len)
            .map(|i| {
                let t = self.tau_axis.at(i) * 1e9;
                cis(-2.0 * PI * c1 * t) * self.g1[i] + cis(-2.0 * PI * c2 * t) * self.g2[i]
            })
            .collect()
    }
}

/// `G_i(τ) = Σ_{n∈K_i} a_i[n]²/Σ a[m]² · exp(-j2π (f[n] - f_ci) τ)`.
pub fn subband_decomposition(mask: &SpectralMask, axis: &DelayAxis) -> Result<SubbandResponse> {
    let subbands = mask.subbands();
    if subbands.len() != 2 {
        return Err(Error::SubbandCount(subbands.len()));
    }
    let total = mask.power();
    if !(total > 0.0) {
        return Err(Error::EmptyUsedSet);
    }
    let grid = mask.grid();
    let (t0, dt) = axis.shifted_ns(0.0);
    let part = |i: usize| {
        let sb = subbands[i];
        let fc = sb.center();
        let (freq, w): (Vec<f64>, Vec<f64>) = mask
            .subband_weights(i)
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(n, &a)| ((grid.freq(n) - fc) * 1e-9, a * a / total))
            .unzip();
        phasor_sums_uniform(&freq, &w, t0, dt, axis.len, PhaseSign::Negative)
    };
    Ok(SubbandResponse {
        tau_axis: *axis,
        g1: part(0),
        g2: part(1),
        f_c1: subbands[0].center(),
        f_c2: subbands[1].center(),
        reference_hz: mask.reference_hz(),
    })
}

/// Minima expected from inter-subband cancellation and the subband envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedMinima {
    /// `(m + 1/2)/Δf_c` for `m = 0..=m_max`, seconds.
    pub gap_minima: Vec<f64>,
    /// `k/B_sb` for `k = 1..=m_max`, seconds.
    pub envelope_minima: Vec<f64>,
}

pub fn predicted_minima(delta_fc: f64, b_sb: f64, m_max: usize) -> Result<PredictedMinima> {
    if !(delta_fc > 0.0) || !(b_sb > 0.0) {
        return Err(Error::InvalidBands(format!(
            "center spacing {delta_fc} Hz and subband width {b_sb} Hz must be positive"
        )));
    }
    Ok(PredictedMinima {
        gap_minima: (0..=m_max).map(|m| (m as f64 + 0.5) / delta_fc).collect(),
        envelope_minima: (1..=m_max).map(|k| k as f64 / b_sb).collect(),
    })
}

/// Two-path matched-filter scan `T(τ) = |Σ a[n]·y[n]·exp(+j2π f[n] τ)|`.
///
/// Without an observation the noise-free scan is evaluated through the
/// shifted-copy identity `|α1·g*(τ-τ1) + α2·g*(τ-τ2)|`.
pub fn two_path_scan(
    mask: &SpectralMask,
    channel: &TwoPathChannel,
    axis: &DelayAxis,
    observation: Option<&Observation>,
) -> Result<DelayScan> {
    let values = match observation {
        None => {
            let g1 = single_path_shifted(mask, axis, channel.tau1)?;
            let g2 = single_path_shifted(mask, axis, channel.tau2)?;
            g1.iter()
                .zip(&g2)
                .map(|(a, b)| (channel.alpha1 * a.conj() + channel.alpha2 * b.conj()).norm())
                .collect()
        }
        Some(obs) => {
            let tones = mask.used_tones()?;
            if obs.y_stacked.len() != tones.len() {
                return Err(Error::LengthMismatch {
                    expected: tones.len(),
                    got: obs.y_stacked.len(),
                });
            }
            let w: Vec<Complex64> = tones.weight.iter().zip(&obs.y_stacked).map(|(&a, &y)| a * y).collect();
            let (t0, dt) = axis.shifted_ns(0.0);
            phasor_sums_uniform(&tones.freq_ghz, &w, t0, dt, axis.len, PhaseSign::Positive)
                .iter()
                .map(|z| z.norm())
                .collect()
        }
    };
    Ok(DelayScan {
        tau_axis: *axis,
        values,
        normalized: false,
        scenario_id: mask.scenario_id.clone(),
    })
}

/// Peak found near one true delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakEstimate {
    pub tau_true: f64,
    pub tau_hat: f64,
    /// `tau_hat - tau_true`.
    pub offset: f64,
    /// Half-width of the search window.
    pub window: f64,
    /// Parabolic refinement was applied.
    pub refined: bool,
}

/// Largest scan value in `[tau_true - window, tau_true + window]`, refined
/// by a 3-point parabola through the grid maximum and its neighbours.
pub fn restricted_peak(scan: &DelayScan, tau_true: f64, window: f64) -> Result<PeakEstimate> {
    let axis = scan.tau_axis;
    let lo = tau_true - window;
    let hi = tau_true + window;
    let eps = 1e-6 * axis.step;
    if !(lo > axis.start + eps && hi < axis.stop() - eps) {
        return Err(Error::WindowOutsideAxis { lo, hi });
    }
    let steps = (2.0 * window / axis.step + 1e-9).floor() as usize;
    if steps < MIN_WINDOW_STEPS {
        return Err(Error::WindowTooNarrow {
            steps,
            min: MIN_WINDOW_STEPS,
        });
    }
    let i_lo = ((lo - axis.start) / axis.step - 1e-9).ceil() as usize;
    let i_hi = ((hi - axis.start) / axis.step + 1e-9).floor() as usize;
    let (i_max, _) = scan.values[i_lo..=i_hi]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, v)| (i_lo + k, *v))
        .expect("window is non-empty");

    let mut tau_hat = axis.at(i_max);
    let mut refined = false;
    if i_max > i_lo && i_max < i_hi {
        let (ym, y0, yp) = (scan.values[i_max - 1], scan.values[i_max], scan.values[i_max + 1]);
        let denom = ym - 2.0 * y0 + yp;
        if denom < 0.0 {
            let delta = 0.5 * (ym - yp) / denom;
            if delta.abs() <= 1.0 {
                tau_hat += delta * axis.step;
                refined = true;
            }
        }
    }
    Ok(PeakEstimate {
        tau_true,
        tau_hat,
        offset: tau_hat - tau_true,
        window,
        refined,
    })
}

/// Restricted peaks around both true delays of a two-path scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakReport {
    pub id: String,
    pub peaks: [PeakEstimate; 2],
    /// The two search windows overlap.
    pub windows_overlap: bool,
}

pub fn peak_report(scan: &DelayScan, channel: &TwoPathChannel, window: f64) -> Result<PeakReport> {
    Ok(PeakReport {
        id: scan.scenario_id.clone(),
        peaks: [
            restricted_peak(scan, channel.tau1, window)?,
            restricted_peak(scan, channel.tau2, window)?,
        ],
        windows_overlap: channel.tau1 + window > channel.tau2 - window,
    })
}

/// Normalized single-path leakage `ℓ(Δτ) = |g(Δτ)| / |g(0)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageCurve {
    /// Seconds.
    pub delta_tau: Vec<f64>,
    pub level: Vec<f64>,
    pub scenario_id: String,
}

pub fn leakage(mask: &SpectralMask, delta_tau: &[f64]) -> Result<LeakageCurve> {
    if delta_tau.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::InvalidAxis("separations must be ≥ 0".into()));
    }
    let g = single_path_at(mask, delta_tau)?;
    let g0 = mask.power();
    Ok(LeakageCurve {
        delta_tau: delta_tau.to_vec(),
        level: g.iter().map(|z| z.norm() / g0).collect(),
        scenario_id: mask.scenario_id.clone(),
    })
}
