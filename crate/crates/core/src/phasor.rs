//! Weighted phasor sums `Σ_n w[n]·exp(s·j2π f[n] τ)` over many delays.
//!
//! Frequencies are in GHz and delays in ns, so `f·τ` is in cycles.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

/// Delays per block on a uniform axis. Each block restarts from exact
/// `sin_cos` phasors, which bounds the rotation drift to ~1e-14.
const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSign {
    /// `exp(-j2π f τ)`, the channel signature.
    Negative,
    /// `exp(+j2π f τ)`, the matched-filter conjugate.
    Positive,
}

impl PhaseSign {
    fn factor(self) -> f64 {
        match self {
            PhaseSign::Negative => -TAU,
            PhaseSign::Positive => TAU,
        }
    }
}

#[inline]
pub fn cis(phase: f64) -> Complex64 {
    let (s, c) = phase.sin_cos();
    Complex64::new(c, s)
}

/// Sum at a single delay.
pub fn phasor_sum<W>(freq_ghz: &[f64], weights: &[W], tau_ns: f64, sign: PhaseSign) -> Complex64
where
    W: Copy + Into<Complex64>,
{
    let k = sign.factor() * tau_ns;
    freq_ghz.iter().zip(weights).map(|(&f, &w)| w.into() * cis(k * f)).sum()
}

/// Sums at arbitrary delays.
pub fn phasor_sums<W>(freq_ghz: &[f64], weights: &[W], taus_ns: &[f64], sign: PhaseSign) -> Vec<Complex64>
where
    W: Copy + Into<Complex64> + Sync,
{
    taus_ns
        .par_iter()
        .map(|&t| phasor_sum(freq_ghz, weights, t, sign))
        .collect()
}

/// Sums at `start + i·step` for `i in 0..len`.
pub fn phasor_sums_uniform<W>(
    freq_ghz: &[f64],
    weights: &[W],
    start_ns: f64,
    step_ns: f64,
    len: usize,
    sign: PhaseSign,
) -> Vec<Complex64>
where
    W: Copy + Into<Complex64> + Sync,
{
    let k = sign.factor();
    let weights: Vec<Complex64> = weights.iter().map(|&w| w.into()).collect();
    let steps: Vec<Complex64> = freq_ghz.iter().map(|&f| cis(k * f * step_ns)).collect();
    let n_blocks = len.div_ceil(BLOCK);

    (0..n_blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let i0 = b * BLOCK;
            let i1 = (i0 + BLOCK).min(len);
            let t0 = start_ns + i0 as f64 * step_ns;
            let mut rot: Vec<Complex64> = freq_ghz
                .iter()
                .zip(&weights)
                .map(|(&f, &w)| w * cis(k * f * t0))
                .collect();
            let mut out = Vec::with_capacity(i1 - i0);
            for i in i0..i1 {
                if i > i0 {
                    for (r, s) in rot.iter_mut().zip(&steps) {
                        *r *= s;
                    }
                }
                out.push(rot.iter().sum());
            }
            out
        })
        .collect()
}
