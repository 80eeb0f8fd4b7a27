//! Fisher information and Cramér–Rao bounds for the two-path delay separation.
//!
//! Internally frequencies are in GHz (relative to the mask phase reference)
//! and delays in ns. [`FimMatrix`] entries are reported in those units: rows
//! and columns 0–1 (the delays) carry a factor ns⁻¹ each. [`CrlbResult`]
//! converts the bound back to seconds.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix6, SymmetricEigen, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{sigma_from_snr, ParamVector, TwoPathChannel};
use crate::error::{Error, Result};
use crate::phasor::cis;
use crate::spectrum::{contiguous_reference, Scenario, Shaping, SpectralMask, UsedTones};

/// Condition number above which a block is treated as singular.
pub const SINGULAR_COND: f64 = 1e12;

/// Separations below this are flagged instead of bounded (seconds).
pub const MIN_SEPARATION: f64 = 1e-12;

/// `∂μ/∂θ_i` for the six parameters, stacked over `K_s`.
///
/// Delay derivatives are per ns.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSet {
    pub d: [Vec<Complex64>; 6],
}

impl DerivativeSet {
    /// `(2/σ²)·Re{D^H D}`, the Gram form of the Fisher information.
    pub fn gram_fim(&self, sigma2: f64) -> Matrix6<f64> {
        let k = 2.0 / sigma2;
        Matrix6::from_fn(|i, j| {
            k * self.d[i]
                .iter()
                .zip(&self.d[j])
                .map(|(a, b)| (a.conj() * b).re)
                .sum::<f64>()
        })
    }
}

pub fn derivative_vectors(theta: &ParamVector, mask: &SpectralMask) -> Result<DerivativeSet> {
    let tones = mask.used_tones()?;
    Ok(derivatives_on(theta, &tones))
}

fn derivatives_on(theta: &ParamVector, tones: &UsedTones) -> DerivativeSet {
    let (t1, t2) = (theta.tau1 * 1e9, theta.tau2 * 1e9);
    let (al1, al2) = (theta.alpha1(), theta.alpha2());
    let j = Complex64::i();
    let n = tones.len();
    let mut d: [Vec<Complex64>; 6] = std::array::from_fn(|_| Vec::with_capacity(n));
    for (&f, &a) in tones.freq_ghz.iter().zip(&tones.weight) {
        let e1 = cis(-2.0 * PI * f * t1) * a;
        let e2 = cis(-2.0 * PI * f * t2) * a;
        d[0].push(-j * 2.0 * PI * al1 * f * e1);
        d[1].push(-j * 2.0 * PI * al2 * f * e2);
        d[2].push(e1);
        d[3].push(j * e1);
        d[4].push(e2);
        d[5].push(j * e2);
    }
    DerivativeSet { d }
}

/// 6×6 Fisher information in `(τ1, τ2, Re α1, Im α1, Re α2, Im α2)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct FimMatrix {
    pub entries: Matrix6<f64>,
    pub sigma2: f64,
    /// Scenario and parameter point, for error messages.
    pub label: String,
}

impl FimMatrix {
    pub fn tau_tau(&self) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn tau_alpha(&self) -> Matrix2x4<f64> {
        self.entries.fixed_view::<2, 4>(0, 2).into_owned()
    }

    pub fn alpha_alpha(&self) -> Matrix4<f64> {
        self.entries.fixed_view::<4, 4>(2, 2).into_owned()
    }
}

/// Weighted tone sums shared by the closed-form entries.
struct ToneSums {
    s0: f64,
    s1: f64,
    s2: f64,
    c0: Complex64,
    c1: Complex64,
    c2: Complex64,
}

fn tone_sums(tones: &UsedTones, dtau_ns: f64) -> ToneSums {
    let mut s = ToneSums {
        s0: 0.0,
        s1: 0.0,
        s2: 0.0,
        c0: Complex64::new(0.0, 0.0),
        c1: Complex64::new(0.0, 0.0),
        c2: Complex64::new(0.0, 0.0),
    };
    for (&f, &a) in tones.freq_ghz.iter().zip(&tones.weight) {
        let p = a * a;
        let e = cis(-2.0 * PI * f * dtau_ns) * p;
        s.s0 += p;
        s.s1 += p * f;
        s.s2 += p * f * f;
        s.c0 += e;
        s.c1 += e * f;
        s.c2 += e * f * f;
    }
    s
}

/// Fisher information assembled from the closed-form tone sums.
pub fn fim_closed_form(theta: &ParamVector, mask: &SpectralMask, sigma2: f64) -> Result<FimMatrix> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::NonPositiveVariance(sigma2));
    }
    let tones = mask.used_tones()?;
    let dtau_ns = (theta.tau2 - theta.tau1) * 1e9;
    let s = tone_sums(&tones, dtau_ns);
    let (a1, a2) = (theta.alpha1(), theta.alpha2());
    let j = Complex64::i();
    let k = 2.0 / sigma2;
    let w2 = 4.0 * PI * PI;
    let w1 = 2.0 * PI;

    let mut m = Matrix6::zeros();
    m[(0, 0)] = k * w2 * a1.norm_sqr() * s.s2;
    m[(1, 1)] = k * w2 * a2.norm_sqr() * s.s2;
    m[(0, 1)] = k * w2 * (a2 * a1.conj() * s.c2).re;

    for i in 2..6 {
        m[(i, i)] = k * s.s0;
    }
    // Within-path gain cross terms (2,3) and (4,5) are exactly zero.
    m[(2, 4)] = k * s.c0.re;
    m[(3, 5)] = k * s.c0.re;
    m[(2, 5)] = -k * s.c0.im;
    m[(3, 4)] = k * s.c0.im;

    m[(0, 2)] = k * w1 * a1.im * s.s1;
    m[(0, 3)] = -k * w1 * a1.re * s.s1;
    m[(1, 4)] = k * w1 * a2.im * s.s1;
    m[(1, 5)] = -k * w1 * a2.re * s.s1;

    // d4 = j·d3 and d6 = j·d5 fix the signs of the (·,3) and (·,5) columns.
    m[(0, 4)] = k * w1 * (j * a1.conj() * s.c1).re;
    m[(0, 5)] = -k * w1 * (a1.conj() * s.c1).re;
    m[(1, 2)] = k * w1 * (j * a2.conj() * s.c1.conj()).re;
    m[(1, 3)] = -k * w1 * (a2.conj() * s.c1.conj()).re;

    for i in 0..6 {
        for jj in 0..i {
            m[(i, jj)] = m[(jj, i)];
        }
    }
    Ok(FimMatrix {
        entries: m,
        sigma2,
        label: point_label(&mask.scenario_id, theta),
    })
}

fn point_label(scenario: &str, theta: &ParamVector) -> String {
    format!(
        "{scenario} (tau1 = {:.6} ns, tau2 = {:.6} ns)",
        theta.tau1 * 1e9,
        theta.tau2 * 1e9
    )
}

/// `max|λ| / min|λ|` from the eigenvalues of a symmetric matrix.
fn condition(eigenvalues: &[f64]) -> f64 {
    let max = eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let min = eigenvalues.iter().fold(f64::INFINITY, |a, &x| a.min(x.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Effective delay information after eliminating the gains.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveFim {
    pub matrix: Matrix2<f64>,
    pub cond_alpha: f64,
    pub cond_eff: f64,
}

/// Schur complement `I_ττ - I_τα·I_αα⁻¹·I_ατ`, solved by pivoted LU.
pub fn effective_fim(fim: &FimMatrix) -> Result<EffectiveFim> {
    let aa = fim.alpha_alpha();
    let cond_alpha = condition(SymmetricEigen::new(aa).eigenvalues.as_slice());
    if !(cond_alpha <= SINGULAR_COND) {
        return Err(Error::SingularGainBlock {
            context: fim.label.clone(),
            cond: cond_alpha,
        });
    }
    let ta = fim.tau_alpha();
    let solved = aa.lu().solve(&ta.transpose()).ok_or_else(|| Error::SingularGainBlock {
        context: fim.label.clone(),
        cond: cond_alpha,
    })?;
    let mut eff = fim.tau_tau() - ta * solved;
    let off = 0.5 * (eff[(0, 1)] + eff[(1, 0)]);
    eff[(0, 1)] = off;
    eff[(1, 0)] = off;
    Ok(EffectiveFim {
        matrix: eff,
        cond_alpha,
        cond_eff: condition(SymmetricEigen::new(eff).eigenvalues.as_slice()),
    })
}

/// Bound on the variance of any locally unbiased estimate of `τ2 - τ1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrlbResult {
    pub scenario_id: String,
    pub snr_db: Option<f64>,
    /// Seconds.
    pub delta_tau: f64,
    pub sigma2: f64,
    /// s². NaN when `near_coincident`.
    pub var_delta_tau: f64,
    /// s. NaN when `near_coincident`.
    pub sqrt_crlb: f64,
    /// ns⁻² units.
    #[serde(skip)]
    pub i_eff: Matrix2<f64>,
    pub cond_alpha: f64,
    pub cond_eff: f64,
    /// Separation below [`MIN_SEPARATION`]: the bound diverges and is not reported.
    pub near_coincident: bool,
}

impl CrlbResult {
    pub fn sqrt_crlb_ns(&self) -> f64 {
        self.sqrt_crlb * 1e9
    }
}

/// `g^T I_eff⁻¹ g` with `g = [-1, 1]^T`.
pub fn crlb_delta_tau(theta: &ParamVector, mask: &SpectralMask, sigma2: f64) -> Result<CrlbResult> {
    let fim = fim_closed_form(theta, mask, sigma2)?;
    let eff = effective_fim(&fim)?;
    let delta_tau = theta.delta_tau();
    let mut out = CrlbResult {
        scenario_id: mask.scenario_id.clone(),
        snr_db: None,
        delta_tau,
        sigma2,
        var_delta_tau: f64::NAN,
        sqrt_crlb: f64::NAN,
        i_eff: eff.matrix,
        cond_alpha: eff.cond_alpha,
        cond_eff: eff.cond_eff,
        near_coincident: delta_tau.abs() < MIN_SEPARATION,
    };
    if out.near_coincident {
        return Ok(out);
    }
    if !(eff.cond_eff <= SINGULAR_COND) {
        return Err(Error::SingularEffective {
            context: fim.label,
            cond: eff.cond_eff,
        });
    }
    let g = Vector2::new(-1.0, 1.0);
    let x = eff.matrix.lu().solve(&g).ok_or_else(|| Error::SingularEffective {
        context: fim.label.clone(),
        cond: eff.cond_eff,
    })?;
    let var_ns2 = g.dot(&x);
    out.var_delta_tau = var_ns2 * 1e-18;
    out.sqrt_crlb = var_ns2.sqrt() * 1e-9;
    Ok(out)
}

/// CRLB at a target SNR, with `σ²` calibrated at `theta` on `mask`.
pub fn crlb_at_snr(theta: &ParamVector, mask: &SpectralMask, snr_db: f64) -> Result<CrlbResult> {
    let sigma2 = sigma_from_snr(theta, mask, snr_db)?;
    let mut r = crlb_delta_tau(theta, mask, sigma2)?;
    r.snr_db = Some(snr_db);
    Ok(r)
}

/// The scenario mask followed by its contiguous reference when it is gapped.
pub fn scenario_variants(scenario: &Scenario, shaping: Shaping, delta_f: f64) -> Result<Vec<SpectralMask>> {
    let mut out = vec![crate::spectrum::build_mask(scenario, shaping, delta_f)?];
    if scenario.is_gapped() && !scenario.is_contiguous_reference() {
        let r = contiguous_reference(scenario)?;
        out.push(crate::spectrum::build_mask(&r.scenario, shaping, delta_f)?);
    }
    Ok(out)
}

/// −10…40 dB in 2 dB steps.
pub fn default_snr_grid() -> Vec<f64> {
    (0..=25).map(|i| -10.0 + 2.0 * i as f64).collect()
}

/// 400 log-spaced separations from 0.1 to 50 ns, in seconds.
pub fn default_dtau_grid() -> Vec<f64> {
    log_grid(0.1e-9, 50e-9, 400)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// One row per (variant, SNR), variants in input order.
pub fn sweep_snr(masks: &[SpectralMask], channel: &TwoPathChannel, snr_grid: &[f64]) -> Result<Vec<CrlbResult>> {
    if snr_grid.is_empty() {
        return Err(Error::InvalidSweep("SNR grid is empty".into()));
    }
    let theta = channel.params();
    let jobs: Vec<(&SpectralMask, f64)> = masks
        .iter()
        .flat_map(|m| snr_grid.iter().map(move |&s| (m, s)))
        .collect();
    jobs.par_iter().map(|&(m, s)| crlb_at_snr(&theta, m, s)).collect()
}

/// One row per (variant, Δτ) with `τ1` fixed and `τ2 = τ1 + Δτ`.
pub fn sweep_delta_tau(
    masks: &[SpectralMask],
    channel: &TwoPathChannel,
    snr_db: f64,
    dtau_grid: &[f64],
) -> Result<Vec<CrlbResult>> {
    if dtau_grid.is_empty() {
        return Err(Error::InvalidSweep("separation grid is empty".into()));
    }
    if dtau_grid.iter().any(|&d| !(d > 0.0)) || dtau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSweep("separations must be positive and ascending".into()));
    }
    let jobs: Vec<(&SpectralMask, f64)> = masks
        .iter()
        .flat_map(|m| dtau_grid.iter().map(move |&d| (m, d)))
        .collect();
    jobs.par_iter()
        .map(|&(m, d)| {
            let mut theta = channel.params();
            theta.tau2 = theta.tau1 + d;
            crlb_at_snr(&theta, m, snr_db)
        })
        .collect()
}
