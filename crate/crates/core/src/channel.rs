//! Multipath channel synthesis, noisy CFR observations and the two-path
//! mean model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasor::cis;
use crate::spectrum::{FrequencyGrid, FrequencyReference, SpectralMask};

/// One propagation path: complex gain and delay in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub alpha: Complex64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    paths: Vec<Path>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidChannel("no paths".into()));
        }
        for p in &paths {
            if !(p.tau >= 0.0) || !p.tau.is_finite() {
                return Err(Error::InvalidChannel(format!("delay {} s must be ≥ 0", p.tau)));
            }
            if !(p.alpha.re.is_finite() && p.alpha.im.is_finite()) {
                return Err(Error::InvalidChannel(format!("gain {} is not finite", p.alpha)));
            }
        }
        Ok(Self { paths })
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// Union of two path sets.
    pub fn merged(&self, other: &PathSet) -> PathSet {
        let mut paths = self.paths.clone();
        paths.extend_from_slice(&other.paths);
        PathSet { paths }
    }
}

/// Two-path channel with `tau2 ≥ tau1` (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPathChannel {
    pub tau1: f64,
    pub tau2: f64,
    pub alpha1: Complex64,
    pub alpha2: Complex64,
}

impl TwoPathChannel {
    pub fn new(tau1: f64, tau2: f64, alpha1: Complex64, alpha2: Complex64) -> Result<Self> {
        let ch = Self {
            tau1,
            tau2,
            alpha1,
            alpha2,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Dominant path `α1 = 1`, second path `α2 = 0.7·exp(jπ/3)`.
    pub fn reference_point(tau1: f64, tau2: f64) -> Result<Self> {
        Self::new(
            tau1,
            tau2,
            Complex64::new(1.0, 0.0),
            Complex64::from_polar(0.7, PI / 3.0),
        )
    }

    fn validate(&self) -> Result<()> {
        PathSet::new(vec![
            Path {
                alpha: self.alpha1,
                tau: self.tau1,
            },
            Path {
                alpha: self.alpha2,
                tau: self.tau2,
            },
        ])?;
        if self.tau2 < self.tau1 {
            return Err(Error::InvalidChannel(format!(
                "tau2 = {} s is below tau1 = {} s",
                self.tau2, self.tau1
            )));
        }
        Ok(())
    }

    pub fn delta_tau(&self) -> f64 {
        self.tau2 - self.tau1
    }

    pub fn params(&self) -> ParamVector {
        ParamVector {
            tau1: self.tau1,
            tau2: self.tau2,
            a1_re: self.alpha1.re,
            a1_im: self.alpha1.im,
            a2_re: self.alpha2.re,
            a2_im: self.alpha2.im,
        }
    }

    pub fn path_set(&self) -> PathSet {
        PathSet {
            paths: vec![
                Path {
                    alpha: self.alpha1,
                    tau: self.tau1,
                },
                Path {
                    alpha: self.alpha2,
                    tau: self.tau2,
                },
            ],
        }
    }
}

/// `θ = (τ1, τ2, Re α1, Im α1, Re α2, Im α2)`, delays in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub tau1: f64,
    pub tau2: f64,
    pub a1_re: f64,
    pub a1_im: f64,
    pub a2_re: f64,
    pub a2_im: f64,
}

impl ParamVector {
    pub fn as_array(&self) -> [f64; 6] {
        [self.tau1, self.tau2, self.a1_re, self.a1_im, self.a2_re, self.a2_im]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            tau1: v[0],
            tau2: v[1],
            a1_re: v[2],
            a1_im: v[3],
            a2_re: v[4],
            a2_im: v[5],
        }
    }

    pub fn alpha1(&self) -> Complex64 {
        Complex64::new(self.a1_re, self.a1_im)
    }

    pub fn alpha2(&self) -> Complex64 {
        Complex64::new(self.a2_re, self.a2_im)
    }

    pub fn delta_tau(&self) -> f64 {
        self.tau2 - self.tau1
    }
}

impl From<ParamVector> for PathSet {
    fn from(p: ParamVector) -> Self {
        PathSet {
            paths: vec![
                Path {
                    alpha: p.alpha1(),
                    tau: p.tau1,
                },
                Path {
                    alpha: p.alpha2(),
                    tau: p.tau2,
                },
            ],
        }
    }
}

impl From<TwoPathChannel> for PathSet {
    fn from(c: TwoPathChannel) -> Self {
        c.path_set()
    }
}

fn response_at(paths: &PathSet, f_rel_ghz: f64) -> Complex64 {
    paths
        .paths
        .iter()
        .map(|p| p.alpha * cis(-2.0 * PI * f_rel_ghz * p.tau * 1e9))
        .sum()
}

/// `H[n] = Σ_ℓ α_ℓ exp(-j2π (f[n] - f_ref) τ_ℓ)` on every grid tone.
pub fn cfr(paths: &PathSet, grid: &FrequencyGrid, reference: FrequencyReference) -> Vec<Complex64> {
    let f_ref = reference.frequency_hz(grid);
    (0..grid.n_tones())
        .map(|n| response_at(paths, (grid.freq(n) - f_ref) * 1e-9))
        .collect()
}

/// Noiseless stacked mean `μ[k] = a[n_k]·H(f[n_k])` over ascending `K_s`.
pub fn mean_model(theta: &ParamVector, mask: &SpectralMask) -> Result<Vec<Complex64>> {
    stacked_response(&PathSet::from(*theta), mask)
}

fn stacked_response(paths: &PathSet, mask: &SpectralMask) -> Result<Vec<Complex64>> {
    let tones = mask.used_tones()?;
    Ok(tones
        .freq_ghz
        .iter()
        .zip(&tones.weight)
        .map(|(&f, &a)| a * response_at(paths, f))
        .collect())
}

/// `‖μ‖² / N_s`.
pub fn mean_tone_power(mu: &[Complex64]) -> f64 {
    mu.iter().map(|z| z.norm_sqr()).sum::<f64>() / mu.len() as f64
}

/// Noise variance giving `snr_db` average per-occupied-tone SNR at `theta0`.
pub fn sigma_from_snr(theta0: &ParamVector, mask: &SpectralMask, snr_db: f64) -> Result<f64> {
    let mu = mean_model(theta0, mask)?;
    let power = mean_tone_power(&mu);
    if !(power > 0.0) {
        return Err(Error::ZeroMeanModel);
    }
    Ok(power / 10f64.powf(snr_db / 10.0))
}

/// Empirical SNR of a noisy stacked observation against its noiseless mean.
pub fn measured_snr(mu: &[Complex64], y: &[Complex64]) -> f64 {
    let noise: f64 = mu.iter().zip(y).map(|(m, v)| (v - m).norm_sqr()).sum();
    mean_tone_power(mu) / (noise / mu.len() as f64)
}

/// Noisy CFR observation of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub mask: SpectralMask,
    /// Length `N_f`, zero off `K_s`.
    pub y_full: Vec<Complex64>,
    /// Restriction of `y_full` to `K_s` in ascending tone order.
    pub y_stacked: Vec<Complex64>,
    pub sigma2: f64,
    pub seed: u64,
}

/// `y[n] = a[n]·H(f[n]) + w[n]` on `K_s` with `w ~ CN(0, σ²)`.
///
/// Noise is drawn from ChaCha8 seeded with `seed`, one standard normal for
/// the real part then one for the imaginary part per used tone in ascending
/// order, each scaled by `sqrt(σ²/2)`.
pub fn observe(paths: &PathSet, mask: &SpectralMask, sigma2: f64, seed: u64) -> Result<Observation> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::NonPositiveVariance(sigma2));
    }
    let mut y_stacked = stacked_response(paths, mask)?;
    if sigma2 > 0.0 {
        let scale = (sigma2 / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for y in &mut y_stacked {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *y += Complex64::new(re, im) * scale;
        }
    }
    let k = mask.used_set()?;
    let mut y_full = vec![Complex64::new(0.0, 0.0); mask.grid().n_tones()];
    for (&n, &y) in k.iter().zip(&y_stacked) {
        y_full[n] = y;
    }
    Ok(Observation {
        mask: mask.clone(),
        y_full,
        y_stacked,
        sigma2,
        seed,
    })
}

/// Delay-domain taps from an `N_f`-point inverse DFT.
#[derive(Debug, Clone, PartialEq)]
pub struct CirEstimate {
    pub taps: Vec<Complex64>,
    /// `t[p] = p / (N_f·Δf)` in seconds.
    pub t_axis: Vec<f64>,
    /// Unambiguous delay window `1/Δf` in seconds.
    pub window: f64,
}

/// `y[p] = (1/N_f)·Σ_n Y[n]·exp(j2π n p / N_f)`.
pub fn cir_idft(y_full: &[Complex64], grid: &FrequencyGrid) -> Result<CirEstimate> {
    let n = grid.n_tones();
    if y_full.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: y_full.len(),
        });
    }
    let mut buf = y_full.to_vec();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for z in &mut buf {
        *z *= scale;
    }
    let ts = 1.0 / (n as f64 * grid.delta_f());
    Ok(CirEstimate {
        taps: buf,
        t_axis: (0..n).map(|p| p as f64 * ts).collect(),
        window: 1.0 / grid.delta_f(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{build_mask, lookup_scenario, Shaping, WIFI_SUBCARRIER_SPACING_HZ};
    use approx::assert_relative_eq;

    fn a2_flat() -> SpectralMask {
        build_mask(
            &lookup_scenario("A2").unwrap(),
            Shaping::Flat,
            WIFI_SUBCARRIER_SPACING_HZ,
        )
        .unwrap()
    }

    #[test]
    fn zero_delay_unit_path() {
        let grid = FrequencyGrid::new(5.17e9, 5.33e9, WIFI_SUBCARRIER_SPACING_HZ).unwrap();
        let p = PathSet::new(vec![Path {
            alpha: Complex64::new(1.0, 0.0),
            tau: 0.0,
        }])
        .unwrap();
        for r in [FrequencyReference::Absolute, FrequencyReference::ApertureCenter] {
            assert!(cfr(&p, &grid, r).iter().all(|h| *h == Complex64::new(1.0, 0.0)));
        }
    }

    #[test]
    fn coincident_delays_add_gains() {
        let grid = FrequencyGrid::new(5.17e9, 5.33e9, 1e6).unwrap();
        let (a1, a2) = (Complex64::new(1.0, 0.2), Complex64::new(-0.3, 0.5));
        let tau = 7.3e-9;
        let both = PathSet::new(vec![Path { alpha: a1, tau }, Path { alpha: a2, tau }]).unwrap();
        let h = cfr(&both, &grid, FrequencyReference::Absolute);
        for (n, z) in h.iter().enumerate() {
            let e = (a1 + a2) * cis(-2.0 * PI * grid.freq(n) * tau);
            assert!((z - e).norm() < 1e-9);
        }
    }

    #[test]
    fn reference_gain() {
        let ch = TwoPathChannel::reference_point(5e-9, 15e-9).unwrap();
        assert_relative_eq!(ch.alpha2.norm(), 0.7, epsilon = 1e-15);
        assert_relative_eq!(ch.alpha2.re, 0.35, epsilon = 1e-12);
        assert_relative_eq!(ch.alpha2.im, 0.606_217_782_649_107, epsilon = 1e-12);
        assert_relative_eq!(ch.delta_tau(), 10e-9, epsilon = 1e-20);
    }

    #[test]
    fn channel_validation() {
        assert!(TwoPathChannel::reference_point(10e-9, 5e-9).is_err());
        assert!(TwoPathChannel::reference_point(-1e-9, 5e-9).is_err());
        assert!(PathSet::new(vec![]).is_err());
    }

    #[test]
    fn single_path_reduction() {
        let m = a2_flat();
        let theta = ParamVector::from_array([4e-9, 9e-9, 0.8, -0.1, 0.0, 0.0]);
        let mu = mean_model(&theta, &m).unwrap();
        let t = m.used_tones().unwrap();
        for (k, z) in mu.iter().enumerate() {
            let e = t.weight[k] * theta.alpha1() * cis(-2.0 * PI * t.freq_ghz[k] * 4.0);
            assert!((z - e).norm() < 1e-12);
        }
        assert_eq!(mu.len(), m.used_set().unwrap().len());
    }

    #[test]
    fn sigma_calibration() {
        let m = a2_flat();
        let one = ParamVector::from_array([3e-9, 3e-9, 1.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(sigma_from_snr(&one, &m, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(sigma_from_snr(&one, &m, 20.0).unwrap(), 0.01, epsilon = 1e-14);
        for snr in [-10.0, 3.0, 37.0] {
            assert_relative_eq!(
                sigma_from_snr(&one, &m, snr).unwrap(),
                10f64.powf(-snr / 10.0),
                max_relative = 1e-12
            );
        }
        let th = TwoPathChannel::reference_point(5e-9, 15e-9).unwrap().params();
        let p0 = mean_tone_power(&mean_model(&th, &m).unwrap());
        assert_relative_eq!(sigma_from_snr(&th, &m, 0.0).unwrap(), p0, max_relative = 1e-15);
        assert_relative_eq!(sigma_from_snr(&th, &m, 20.0).unwrap(), p0 / 100.0, max_relative = 1e-15);

        let zero = ParamVector::from_array([3e-9, 5e-9, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(sigma_from_snr(&zero, &m, 10.0), Err(Error::ZeroMeanModel));
    }

    #[test]
    fn noiseless_observation_is_mean() {
        let m = a2_flat();
        let ch = TwoPathChannel::reference_point(5e-9, 15e-9).unwrap();
        let obs = observe(&ch.path_set(), &m, 0.0, 7).unwrap();
        assert_eq!(obs.y_stacked, mean_model(&ch.params(), &m).unwrap());
        let k = m.used_set().unwrap();
        for (n, y) in obs.y_full.iter().enumerate() {
            if k.binary_search(&n).is_err() {
                assert_eq!(*y, Complex64::new(0.0, 0.0));
            }
        }
        assert!(observe(&ch.path_set(), &m, -1.0, 7).is_err());
    }

    #[test]
    fn observation_is_seeded() {
        let m = a2_flat();
        let ch = TwoPathChannel::reference_point(5e-9, 15e-9).unwrap();
        let a = observe(&ch.path_set(), &m, 0.1, 42).unwrap();
        let b = observe(&ch.path_set(), &m, 0.1, 42).unwrap();
        let c = observe(&ch.path_set(), &m, 0.1, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.y_stacked, c.y_stacked);
    }

    #[test]
    fn idft_of_zero_is_zero() {
        let grid = FrequencyGrid::new(0.0, 63.0, 1.0).unwrap();
        let cir = cir_idft(&vec![Complex64::new(0.0, 0.0); 64], &grid).unwrap();
        assert!(cir.taps.iter().all(|z| z.norm() == 0.0));
        assert_relative_eq!(cir.window, 1.0);
        assert!(cir_idft(&[Complex64::new(0.0, 0.0); 3], &grid).is_err());
    }
}
