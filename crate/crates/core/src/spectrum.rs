//! Global frequency grids, the multiband scenario catalog and spectral masks.
//!
//! All public quantities are in Hz. Masks additionally carry a phase
//! reference frequency; every delay-domain and Fisher-information kernel
//! evaluates phases as `exp(-j2π (f[n] - f_ref) τ)`, so complex path gains
//! are referred to `f_ref`. The default reference is the aperture center.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 802.11ax subcarrier spacing.
pub const WIFI_SUBCARRIER_SPACING_HZ: f64 = 78_125.0;

/// Default raised-cosine edge width of the `flat-taper` preset.
pub const DEFAULT_TAPER_EDGE_HZ: f64 = 2.0e6;

const GRID_REL_TOL: f64 = 1e-6;

/// Uniform grid `f[n] = f_start + n·Δf`, `n = 0..n_tones`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    f_start: f64,
    delta_f: f64,
    n_tones: usize,
}

impl FrequencyGrid {
    /// Grid spanning `[f_start, f_stop]` inclusive at spacing `delta_f`.
    pub fn new(f_start: f64, f_stop: f64, delta_f: f64) -> Result<Self> {
        if !(delta_f > 0.0) || !delta_f.is_finite() {
            return Err(Error::NonPositiveSpacing(delta_f));
        }
        if !(f_stop > f_start) {
            return Err(Error::EmptySpan { f_start, f_stop });
        }
        let span = f_stop - f_start;
        let steps = span / delta_f;
        let rounded = steps.round();
        let residual = steps - rounded;
        if residual.abs() > GRID_REL_TOL * rounded.max(1.0) {
            return Err(Error::NonDivisibleSpan {
                span,
                delta_f,
                residual,
            });
        }
        Ok(Self {
            f_start,
            delta_f,
            n_tones: rounded as usize + 1,
        })
    }

    pub fn f_start(&self) -> f64 {
        self.f_start
    }

    pub fn delta_f(&self) -> f64 {
        self.delta_f
    }

    pub fn n_tones(&self) -> usize {
        self.n_tones
    }

    pub fn freq(&self, n: usize) -> f64 {
        self.f_start + n as f64 * self.delta_f
    }

    pub fn f_stop(&self) -> f64 {
        self.freq(self.n_tones - 1)
    }

    /// `B_tot = (N_f - 1)·Δf`.
    pub fn aperture(&self) -> f64 {
        (self.n_tones - 1) as f64 * self.delta_f
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_tones).map(|n| self.freq(n)).collect()
    }

    /// Index of the tone at `f`, if `f` lies on the grid.
    pub fn index_of(&self, f: f64) -> Option<usize> {
        let pos = (f - self.f_start) / self.delta_f;
        let n = pos.round();
        if (pos - n).abs() > GRID_REL_TOL * n.abs().max(1.0) || n < 0.0 {
            return None;
        }
        let n = n as usize;
        (n < self.n_tones).then_some(n)
    }
}

/// One occupied band mapped onto the global grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subband {
    pub f_lo: f64,
    pub f_hi: f64,
    /// First tone index owned by this subband (inclusive).
    pub tone_lo: usize,
    /// Last tone index owned by this subband (inclusive).
    pub tone_hi: usize,
}

impl Subband {
    /// Geometric center `(f_lo + f_hi) / 2`.
    pub fn center(&self) -> f64 {
        0.5 * (self.f_lo + self.f_hi)
    }

    pub fn bandwidth(&self) -> f64 {
        self.f_hi - self.f_lo
    }

    pub fn contains_tone(&self, n: usize) -> bool {
        (self.tone_lo..=self.tone_hi).contains(&n)
    }
}

/// A named set of occupied bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    /// Sorted, non-overlapping `(f_lo, f_hi)` pairs in Hz.
    pub bands: Vec<(f64, f64)>,
    /// Id of the gapped scenario this one is the contiguous reference for.
    pub reference_of: Option<String>,
}

impl Scenario {
    pub fn new(id: impl Into<String>, bands: Vec<(f64, f64)>) -> Result<Self> {
        let s = Self {
            id: id.into(),
            bands,
            reference_of: None,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::InvalidBands(format!("{}: no bands", self.id)));
        }
        for &(lo, hi) in &self.bands {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBands(format!("{}: band [{lo}, {hi}] is empty", self.id)));
            }
        }
        for w in self.bands.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::InvalidBands(format!(
                    "{}: bands must be sorted and non-overlapping",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn f_min(&self) -> f64 {
        self.bands[0].0
    }

    pub fn f_max(&self) -> f64 {
        self.bands[self.bands.len() - 1].1
    }

    pub fn aperture(&self) -> f64 {
        self.f_max() - self.f_min()
    }

    /// Total unoccupied width between consecutive bands.
    pub fn gap(&self) -> f64 {
        self.bands.windows(2).fold(0.0, |acc, w| acc + (w[1].0 - w[0].1))
    }

    pub fn occupied_bandwidth(&self) -> f64 {
        self.bands.iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn is_contiguous_reference(&self) -> bool {
        self.reference_of.is_some()
    }

    pub fn is_gapped(&self) -> bool {
        self.gap() > 0.0
    }

    pub fn export(&self) -> ScenarioExport {
        ScenarioExport {
            id: self.id.clone(),
            bands_hz: self.bands.iter().map(|&(lo, hi)| [lo, hi]).collect(),
            aperture_hz: self.aperture(),
            gap_hz: self.gap(),
            reference_of: self.reference_of.clone(),
        }
    }
}

/// JSON record of a catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioExport {
    pub id: String,
    pub bands_hz: Vec<[f64; 2]>,
    pub aperture_hz: f64,
    pub gap_hz: f64,
    pub reference_of: Option<String>,
}

const fn mhz(x_mhz: u64) -> f64 {
    (x_mhz * 1_000_000) as f64
}

fn entry(id: &str, bands_mhz: &[(u64, u64)], reference_of: Option<&str>) -> Scenario {
    Scenario {
        id: id.to_string(),
        bands: bands_mhz.iter().map(|&(lo, hi)| (mhz(lo), mhz(hi))).collect(),
        reference_of: reference_of.map(str::to_string),
    }
}

/// The six multiband scenarios followed by the four contiguous references.
pub fn scenario_catalog() -> Vec<Scenario> {
    vec![
        entry("A1", &[(5170, 5330)], None),
        entry("A2", &[(5250, 5330), (5490, 5570)], None),
        entry("A3", &[(5490, 5570), (5970, 6050)], None),
        entry("B1", &[(5970, 6130), (6130, 6290)], None),
        entry("B2", &[(5170, 5330), (5490, 5650)], None),
        entry("B3", &[(5490, 5650), (5970, 6130)], None),
        entry("A2*", &[(5250, 5570)], Some("A2")),
        entry("A3*", &[(5490, 6050)], Some("A3")),
        entry("B2*", &[(5170, 5650)], Some("B2")),
        entry("B3*", &[(5490, 6130)], Some("B3")),
    ]
}

pub fn lookup_scenario(id: &str) -> Result<Scenario> {
    scenario_catalog()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::UnknownScenario(id.to_string()))
}

/// Scenario ids of one catalog group (`"A"` or `"B"`), gapped then references.
pub fn group_ids(group: &str) -> Result<Vec<String>> {
    let ids: Vec<String> = scenario_catalog()
        .into_iter()
        .filter(|s| s.id.starts_with(group))
        .map(|s| s.id)
        .collect();
    if ids.is_empty() {
        return Err(Error::UnknownScenario(group.to_string()));
    }
    Ok(ids)
}

/// Result of [`contiguous_reference`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContiguousReference {
    pub scenario: Scenario,
    /// The input had no gap; `scenario` is the input itself.
    pub already_contiguous: bool,
}

/// Single band spanning the full aperture of a two-band scenario.
pub fn contiguous_reference(scenario: &Scenario) -> Result<ContiguousReference> {
    if scenario.bands.len() == 1 || !scenario.is_gapped() {
        return Ok(ContiguousReference {
            scenario: scenario.clone(),
            already_contiguous: true,
        });
    }
    if scenario.bands.len() != 2 {
        return Err(Error::SubbandCount(scenario.bands.len()));
    }
    Ok(ContiguousReference {
        scenario: Scenario {
            id: format!("{}*", scenario.id),
            bands: vec![(scenario.f_min(), scenario.f_max())],
            reference_of: Some(scenario.id.clone()),
        },
        already_contiguous: false,
    })
}

/// Per-tone spectral shaping inside each occupied band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shaping {
    /// Every in-band tone has weight 1.
    Flat,
    /// Raised-cosine roll-off over `edge_hz` at both band edges, flat top.
    FlatTaper { edge_hz: f64 },
    /// HE 80 MHz tone plan per 80 MHz segment: 12 left guards, 11 right
    /// guards, 5 nulls around the segment center, 996 active tones.
    Toneplan11ax,
}

impl Default for Shaping {
    fn default() -> Self {
        Shaping::FlatTaper {
            edge_hz: DEFAULT_TAPER_EDGE_HZ,
        }
    }
}

impl Shaping {
    pub fn name(&self) -> &'static str {
        match self {
            Shaping::Flat => "flat",
            Shaping::FlatTaper { .. } => "flat-taper",
            Shaping::Toneplan11ax => "toneplan-11ax",
        }
    }

    /// Parse a preset name; `taper_edge_hz` only applies to `flat-taper`.
    pub fn from_name(name: &str, taper_edge_hz: f64) -> Result<Self> {
        match name {
            "flat" => Ok(Shaping::Flat),
            "flat-taper" => Ok(Shaping::FlatTaper { edge_hz: taper_edge_hz }),
            "toneplan-11ax" => Ok(Shaping::Toneplan11ax),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Shaping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shaping::FlatTaper { edge_hz } => write!(f, "flat-taper(edge={edge_hz} Hz)"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Shaping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shaping::from_name(s, DEFAULT_TAPER_EDGE_HZ)
    }
}

/// Frequency that complex gains and delay phases are referred to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyReference {
    /// Phases use absolute RF frequency `f[n]`.
    Absolute,
    /// Phases use `f[n] - (f_start + f_stop)/2`.
    #[default]
    ApertureCenter,
}

impl FrequencyReference {
    pub fn frequency_hz(self, grid: &FrequencyGrid) -> f64 {
        match self {
            FrequencyReference::Absolute => 0.0,
            FrequencyReference::ApertureCenter => 0.5 * (grid.f_start() + grid.f_stop()),
        }
    }
}

const HE80_SPAN_TONES: usize = 1024;
const HE80_LEFT_GUARD: usize = 12;
const HE80_RIGHT_GUARD: usize = 11;
const HE80_HALF_NULLS: i64 = 2;

/// Weight of tone `k` of an 80 MHz segment, `k` counted from the lower edge.
fn he80_weight(k: usize) -> f64 {
    let rel = k as i64 - (HE80_SPAN_TONES / 2) as i64;
    let in_guard = !(HE80_LEFT_GUARD..HE80_SPAN_TONES - HE80_RIGHT_GUARD).contains(&k);
    if in_guard || rel.abs() <= HE80_HALF_NULLS {
        0.0
    } else {
        1.0
    }
}

/// Number of active tones in one 80 MHz HE segment.
pub fn he80_active_tones() -> usize {
    (0..HE80_SPAN_TONES).filter(|&k| he80_weight(k) > 0.0).count()
}

/// Per-tone weights `a[n] ≥ 0` on a global grid with subband bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMask {
    pub scenario_id: String,
    grid: FrequencyGrid,
    weights: Vec<f64>,
    subbands: Vec<Subband>,
    shaping: Shaping,
    reference_hz: f64,
}

impl SpectralMask {
    /// Assemble a mask from raw parts. Weights outside all subbands must be zero.
    pub fn from_parts(
        scenario_id: impl Into<String>,
        grid: FrequencyGrid,
        weights: Vec<f64>,
        subbands: Vec<Subband>,
        shaping: Shaping,
        reference: FrequencyReference,
    ) -> Result<Self> {
        if weights.len() != grid.n_tones() {
            return Err(Error::LengthMismatch {
                expected: grid.n_tones(),
                got: weights.len(),
            });
        }
        for (n, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidBands(format!("weight a[{n}] = {w} is not ≥ 0")));
            }
            if w != 0.0 && !subbands.iter().any(|sb| sb.contains_tone(n)) {
                return Err(Error::InvalidBands(format!(
                    "weight a[{n}] is nonzero outside every subband"
                )));
            }
        }
        for sb in &subbands {
            if sb.tone_hi >= grid.n_tones() || sb.tone_lo > sb.tone_hi {
                return Err(Error::InvalidBands(format!(
                    "subband tones {}..={} outside grid",
                    sb.tone_lo, sb.tone_hi
                )));
            }
        }
        let reference_hz = reference.frequency_hz(&grid);
        Ok(Self {
            scenario_id: scenario_id.into(),
            grid,
            weights,
            subbands,
            shaping,
            reference_hz,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn subbands(&self) -> &[Subband] {
        &self.subbands
    }

    pub fn shaping(&self) -> Shaping {
        self.shaping
    }

    pub fn reference_hz(&self) -> f64 {
        self.reference_hz
    }

    /// Same weights with a different phase reference.
    pub fn with_reference(mut self, reference: FrequencyReference) -> Self {
        self.reference_hz = reference.frequency_hz(&self.grid);
        self
    }

    /// Weights of subband `i` alone (`a_i[n]`), zero elsewhere.
    pub fn subband_weights(&self, i: usize) -> Vec<f64> {
        let sb = self.subbands[i];
        self.weights
            .iter()
            .enumerate()
            .map(|(n, &w)| if sb.contains_tone(n) { w } else { 0.0 })
            .collect()
    }

    /// Ascending indices `n` with `a[n] ≠ 0`.
    pub fn used_set(&self) -> Result<Vec<usize>> {
        let k: Vec<usize> = (0..self.weights.len()).filter(|&n| self.weights[n] != 0.0).collect();
        if k.is_empty() {
            return Err(Error::EmptyUsedSet);
        }
        Ok(k)
    }

    /// Used tones in the units the numerical kernels work in.
    pub fn used_tones(&self) -> Result<UsedTones> {
        let index = self.used_set()?;
        let freq_ghz = index
            .iter()
            .map(|&n| (self.grid.freq(n) - self.reference_hz) * 1e-9)
            .collect();
        let weight = index.iter().map(|&n| self.weights[n]).collect();
        Ok(UsedTones {
            index,
            freq_ghz,
            weight,
        })
    }

    /// Subband centers and, for exactly two subbands, `Δf_c = f_c2 - f_c1`.
    pub fn subband_centers(&self) -> (Vec<f64>, Option<f64>) {
        let centers: Vec<f64> = self.subbands.iter().map(Subband::center).collect();
        let spacing = (centers.len() == 2).then(|| centers[1] - centers[0]);
        (centers, spacing)
    }

    pub fn active_tone_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }

    /// `Σ a[n]²`.
    pub fn power(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

/// Used subcarriers `K_s` with phase frequencies in GHz relative to the
/// mask reference and their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct UsedTones {
    pub index: Vec<usize>,
    pub freq_ghz: Vec<f64>,
    pub weight: Vec<f64>,
}

impl UsedTones {
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// Build the mask of `scenario` referred to the aperture center.
pub fn build_mask(scenario: &Scenario, shaping: Shaping, delta_f: f64) -> Result<SpectralMask> {
    build_mask_with_reference(scenario, shaping, delta_f, FrequencyReference::default())
}

pub fn build_mask_with_reference(
    scenario: &Scenario,
    shaping: Shaping,
    delta_f: f64,
    reference: FrequencyReference,
) -> Result<SpectralMask> {
    scenario.validate()?;
    let grid = FrequencyGrid::new(scenario.f_min(), scenario.f_max(), delta_f)?;
    let mut weights = vec![0.0; grid.n_tones()];
    let mut subbands = Vec::with_capacity(scenario.bands.len());

    for (b, &(f_lo, f_hi)) in scenario.bands.iter().enumerate() {
        let lo = grid
            .index_of(f_lo)
            .ok_or(Error::MisalignedBand { edge: f_lo, delta_f })?;
        let hi = grid
            .index_of(f_hi)
            .ok_or(Error::MisalignedBand { edge: f_hi, delta_f })?;
        // A tone shared with the previous band belongs to the lower band.
        let shares_edge = b > 0 && subbands.last().is_some_and(|p: &Subband| p.tone_hi == lo);
        let first = if shares_edge { lo + 1 } else { lo };

        match shaping {
            Shaping::Flat => {
                for w in &mut weights[first..=hi] {
                    *w = 1.0;
                }
            }
            Shaping::FlatTaper { edge_hz } => {
                if !(edge_hz > 0.0) || 2.0 * edge_hz > f_hi - f_lo {
                    return Err(Error::BandTooNarrow {
                        f_lo,
                        f_hi,
                        preset: shaping.to_string(),
                    });
                }
                for (n, w) in weights.iter_mut().enumerate().take(hi + 1).skip(first) {
                    let d = (n - lo).min(hi - n) as f64 * delta_f;
                    *w = if d >= edge_hz {
                        1.0
                    } else {
                        0.5 - 0.5 * (std::f64::consts::PI * d / edge_hz).cos()
                    };
                }
            }
            Shaping::Toneplan11ax => {
                let tones = hi - lo;
                if tones < HE80_SPAN_TONES || tones % HE80_SPAN_TONES != 0 {
                    return Err(Error::BandTooNarrow {
                        f_lo,
                        f_hi,
                        preset: shaping.to_string(),
                    });
                }
                for (n, w) in weights.iter_mut().enumerate().take(hi + 1).skip(first) {
                    let k = (n - lo) % HE80_SPAN_TONES;
                    // The upper band edge is the first slot of a segment that is not there.
                    *w = if n == hi { 0.0 } else { he80_weight(k) };
                }
            }
        }
        subbands.push(Subband {
            f_lo,
            f_hi,
            tone_lo: first,
            tone_hi: hi,
        });
    }

    let mask = SpectralMask::from_parts(scenario.id.clone(), grid, weights, subbands, shaping, reference)?;
    mask.used_set()?;
    Ok(mask)
}
