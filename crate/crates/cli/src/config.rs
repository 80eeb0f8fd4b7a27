//! Run configuration: a JSON file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use gapdelay::channel::TwoPathChannel;
use gapdelay::crlb::{default_dtau_grid, default_snr_grid};
use gapdelay::delay_response::DelayAxis;
use gapdelay::spectrum::{
    group_ids, lookup_scenario, FrequencyReference, Scenario, Shaping, DEFAULT_TAPER_EDGE_HZ,
    WIFI_SUBCARRIER_SPACING_HZ,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GAPDELAY_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub tau1_ns: f64,
    pub tau2_ns: f64,
    pub alpha1_re: f64,
    pub alpha1_im: f64,
    pub alpha2_re: f64,
    pub alpha2_im: f64,
}

impl ChannelSpec {
    /// `α1 = 1`, `α2 = 0.7·exp(jπ/3)` at the given delays.
    pub fn reference_point(tau1_ns: f64, tau2_ns: f64) -> Self {
        let a2 = Complex64::from_polar(0.7, std::f64::consts::PI / 3.0);
        Self {
            tau1_ns,
            tau2_ns,
            alpha1_re: 1.0,
            alpha1_im: 0.0,
            alpha2_re: a2.re,
            alpha2_im: a2.im,
        }
    }

    pub fn gains(&self) -> String {
        format!(
            "alpha1={}{:+}j alpha2={}{:+}j",
            self.alpha1_re, self.alpha1_im, self.alpha2_re, self.alpha2_im
        )
    }

    pub fn to_channel(&self) -> gapdelay::Result<TwoPathChannel> {
        TwoPathChannel::new(
            self.tau1_ns * 1e-9,
            self.tau2_ns * 1e-9,
            Complex64::new(self.alpha1_re, self.alpha1_im),
            Complex64::new(self.alpha2_re, self.alpha2_im),
        )
    }
}

impl std::fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "tau1={} ns tau2={} ns {}", self.tau1_ns, self.tau2_ns, self.gains())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub start_ns: f64,
    pub stop_ns: f64,
    pub step_ns: f64,
}

impl Default for AxisSpec {
    fn default() -> Self {
        Self {
            start_ns: 0.0,
            stop_ns: 50.0,
            step_ns: 1e-3,
        }
    }
}

impl AxisSpec {
    pub fn to_axis(&self) -> gapdelay::Result<DelayAxis> {
        DelayAxis::new(self.start_ns * 1e-9, self.stop_ns * 1e-9, self.step_ns * 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog ids; empty means the group, or every base scenario.
    pub scenarios: Vec<String>,
    pub group: Option<String>,
    /// Custom allocation; replaces the catalog when set.
    pub bands_hz: Option<Vec<[f64; 2]>>,
    pub shaping: String,
    pub taper_edge_hz: f64,
    pub delta_f_hz: f64,
    pub reference: FrequencyReference,
    /// Fixed channel point; unset means `τ1 = 5 ns` with `τ2` per group.
    pub channel: Option<ChannelSpec>,
    pub snr_db: f64,
    pub snr_grid_db: Option<Vec<f64>>,
    pub dtau_ns: f64,
    pub dtau_grid_ns: Option<Vec<f64>>,
    pub axis: AxisSpec,
    pub window_ns: f64,
    /// Seeded noisy scans instead of noise-free ones.
    pub noise: bool,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub no_meta: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenarios: Vec::new(),
            group: None,
            bands_hz: None,
            shaping: "flat-taper".into(),
            taper_edge_hz: DEFAULT_TAPER_EDGE_HZ,
            delta_f_hz: WIFI_SUBCARRIER_SPACING_HZ,
            reference: FrequencyReference::default(),
            channel: None,
            snr_db: 20.0,
            snr_grid_db: None,
            dtau_ns: 1.0,
            dtau_grid_ns: None,
            axis: AxisSpec::default(),
            window_ns: 1.0,
            noise: false,
            seed: 1,
            out_dir: None,
            no_meta: false,
        }
    }
}

/// Scenarios a run operates on, before contiguous references are added.
pub const BASE_IDS: [&str; 6] = ["A1", "A2", "A3", "B1", "B2", "B3"];

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn shaping(&self) -> gapdelay::Result<Shaping> {
        Shaping::from_name(&self.shaping, self.taper_edge_hz)
    }

    pub fn scenarios(&self) -> anyhow::Result<Vec<Scenario>> {
        if let Some(bands) = &self.bands_hz {
            let bands = bands.iter().map(|b| (b[0], b[1])).collect();
            return Ok(vec![Scenario::new("custom", bands)?]);
        }
        let ids: Vec<String> = if !self.scenarios.is_empty() {
            self.scenarios.clone()
        } else if let Some(g) = &self.group {
            let g = g.to_ascii_uppercase();
            group_ids(&g)?.into_iter().filter(|id| !id.ends_with('*')).collect()
        } else {
            BASE_IDS.iter().map(|s| s.to_string()).collect()
        };
        ids.iter().map(|id| Ok(lookup_scenario(id)?)).collect()
    }

    /// Channel point for a scenario: the configured one, or `τ1 = 5 ns`
    /// with `τ2 = 15 ns` (group A) or `10 ns` (group B).
    pub fn channel_for(&self, scenario_id: &str) -> ChannelSpec {
        self.channel.unwrap_or_else(|| {
            let tau2 = if scenario_id.starts_with('B') { 10.0 } else { 15.0 };
            ChannelSpec::reference_point(5.0, tau2)
        })
    }

    pub fn snr_grid(&self) -> Vec<f64> {
        self.snr_grid_db.clone().unwrap_or_else(default_snr_grid)
    }

    /// Seconds.
    pub fn dtau_grid(&self) -> Vec<f64> {
        match &self.dtau_grid_ns {
            Some(g) => g.iter().map(|d| d * 1e-9).collect(),
            None => default_dtau_grid(),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.shaping()?;
        self.scenarios()?;
        if !(self.delta_f_hz > 0.0) {
            bail!("subcarrier spacing must be positive");
        }
        if !self.snr_db.is_finite() {
            bail!("SNR must be finite");
        }
        if let Some(g) = &self.snr_grid_db {
            if g.is_empty() {
                bail!("SNR grid is empty");
            }
            if g.iter().any(|s| !s.is_finite()) {
                bail!("SNR grid has non-finite entries");
            }
        }
        if !(self.dtau_ns > 0.0) {
            bail!("separation must be positive, got {} ns", self.dtau_ns);
        }
        if let Some(g) = &self.dtau_grid_ns {
            if g.is_empty() {
                bail!("separation grid is empty");
            }
            if g.iter().any(|d| !(*d > 0.0)) || g.windows(2).any(|w| w[1] <= w[0]) {
                bail!("separation grid must be positive and strictly ascending");
            }
        }
        if let Some(ch) = &self.channel {
            ch.to_channel()?;
        }
        self.axis.to_axis()?;
        if !(self.window_ns > 0.0) {
            bail!("peak window must be positive");
        }
        Ok(())
    }
}
