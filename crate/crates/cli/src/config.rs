//! Run configuration: TOML file, `--set` overrides and validation.

use std::path::Path;

use lightstore::atomic_data::HyperfineData;
use lightstore::diffuse_mc::StorageGate;
use lightstore::memory_channel::ChannelState;
use lightstore::pulse_transport::Axis;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Spectrum,
    Scatter,
    Diffuse,
    Memory,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Scatter => "scatter",
            Scenario::Diffuse => "diffuse",
            Scenario::Memory => "memory",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    pub seed: u64,
    pub output: String,
    pub atom: HyperfineData,
    pub cloud: CloudSection,
    pub pulse: PulseSection,
    pub control: ControlSection,
    pub spectrum: SpectrumSection,
    pub scatter: ScatterSection,
    pub mc: McSection,
    pub memory: MemorySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: None,
            seed: 1,
            output: "out".into(),
            atom: HyperfineData::default(),
            cloud: CloudSection::default(),
            pulse: PulseSection::default(),
            control: ControlSection::default(),
            spectrum: SpectrumSection::default(),
            scatter: ScatterSection::default(),
            mc: McSection::default(),
            memory: MemorySection::default(),
        }
    }
}

/// Gaussian cloud; exactly one of `b0` and `n0` (ƛ⁻³) is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    /// Gaussian radius in ƛ.
    pub r0: f64,
}

impl Default for CloudSection {
    fn default() -> Self {
        CloudSection { b0: None, n0: None, r0: 2000.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSection {
    /// T in γ⁻¹.
    pub duration: f64,
    /// Δ in γ.
    pub detuning: f64,
    /// Input radius in r₀.
    pub aperture: f64,
}

impl Default for PulseSection {
    fn default() -> Self {
        PulseSection { duration: 60.0, detuning: 0.025, aperture: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    /// Rabi frequency Ω_c in γ.
    pub omega_c: f64,
    /// ω_c − ω₄₂ in γ.
    pub offset: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        ControlSection { omega_c: 3.0, offset: -0.4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Half-width of the fine scan around Δ = 0.
    pub fine_half_width: f64,
    pub fine_points: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection { start: -40.0, stop: 5.0, points: 4501, fine_half_width: 0.5, fine_points: 1001 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterSection {
    pub directions: Vec<String>,
    pub grid_points: usize,
    pub dt: f64,
    pub band_cut: f64,
    pub reference_scale: f64,
}

impl Default for ScatterSection {
    fn default() -> Self {
        ScatterSection {
            directions: vec!["+X".into(), "+Y".into(), "+Z".into()],
            grid_points: 8192,
            dt: 1.0,
            band_cut: 1e-10,
            reference_scale: 3e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    On,
    Off,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub paths: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub chunk_size: usize,
    pub grid_points: usize,
    pub dt: f64,
    pub band_cut: f64,
    pub roulette_threshold: f64,
    pub roulette_survival: f64,
    pub detectors: Vec<[f64; 3]>,
    pub control: ControlMode,
    pub record_chains: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub storage: Option<StorageGate>,
}

impl Default for McSection {
    fn default() -> Self {
        McSection {
            paths: 10_000,
            max_order: None,
            workers: None,
            chunk_size: 64,
            grid_points: 4096,
            dt: 2.0,
            band_cut: 1e-6,
            roulette_threshold: 1e-12,
            roulette_survival: 0.1,
            detectors: Vec::new(),
            control: ControlMode::Both,
            record_chains: 0,
            storage: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MemorySection {
    pub eta: f64,
    pub nbar: f64,
    pub n_max: usize,
    pub grid_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    pub sweep_points: usize,
}

impl Default for MemorySection {
    fn default() -> Self {
        MemorySection { eta: 1.0, nbar: 1.0, n_max: 20, grid_points: 257, extent: None, sweep_points: 101 }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("`{name}` must be positive, got {v}")))
    }
}

/// Parses `key.path=value`; the value is read as a TOML literal and falls
/// back to a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| bad(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(bad(format!("override `{spec}` has an empty key")));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| bad(format!("override `{key}`: `{part}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads the optional config file, applies overrides, fills defaults and
/// validates every field.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| bad(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text).map_err(|e| bad(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| bad(e.to_string()))?;
    if cfg.cloud.b0.is_some() && cfg.cloud.n0.is_some() {
        return Err(bad("`cloud.b0` and `cloud.n0` are mutually exclusive; set only one"));
    }
    if cfg.cloud.b0.is_none() && cfg.cloud.n0.is_none() {
        cfg.cloud.b0 = Some(10.0);
    }
    validate(&cfg)?;
    Ok(cfg)
}

pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.atom.validate().map_err(|e| bad(e.to_string()))?;
    if let Some(b0) = cfg.cloud.b0 {
        positive("cloud.b0", b0)?;
    }
    if let Some(n0) = cfg.cloud.n0 {
        positive("cloud.n0", n0)?;
    }
    positive("cloud.r0", cfg.cloud.r0)?;
    positive("pulse.duration", cfg.pulse.duration)?;
    positive("pulse.aperture", cfg.pulse.aperture)?;
    if !cfg.pulse.detuning.is_finite() {
        return Err(bad("`pulse.detuning` must be finite"));
    }
    if !(cfg.control.omega_c >= 0.0 && cfg.control.omega_c.is_finite()) {
        return Err(bad(format!("`control.omega_c` (Ω_c) must be non-negative, got {}", cfg.control.omega_c)));
    }
    if !cfg.control.offset.is_finite() {
        return Err(bad("`control.offset` must be finite"));
    }
    let s = &cfg.spectrum;
    if !(s.start < s.stop) || s.points < 2 {
        return Err(bad("`spectrum` needs start < stop and at least 2 points"));
    }
    positive("spectrum.fine_half_width", s.fine_half_width)?;
    if s.fine_points < 2 {
        return Err(bad("`spectrum.fine_points` must be at least 2"));
    }
    let sc = &cfg.scatter;
    for d in &sc.directions {
        Axis::parse(d).map_err(|_| bad(format!("`scatter.directions` entry `{d}` is not one of ±X, ±Y, ±Z")))?;
    }
    if sc.grid_points < 2048 || sc.grid_points % 2 != 0 {
        return Err(bad(format!("`scatter.grid_points` must be even and at least 2048, got {}", sc.grid_points)));
    }
    positive("scatter.dt", sc.dt)?;
    if !(sc.band_cut > 0.0 && sc.band_cut < 1.0) {
        return Err(bad("`scatter.band_cut` must lie in (0, 1)"));
    }
    if !(sc.reference_scale >= 0.0 && sc.reference_scale.is_finite()) {
        return Err(bad("`scatter.reference_scale` must be non-negative"));
    }
    let m = &cfg.mc;
    if m.grid_points < 2 || m.grid_points % 2 != 0 {
        return Err(bad(format!("`mc.grid_points` must be even, got {}", m.grid_points)));
    }
    positive("mc.dt", m.dt)?;
    crate::run::mc_config(cfg).validate().map_err(|e| bad(e.to_string()))?;
    if let Some(g) = &m.storage {
        if !(g.half_width > 0.0 && g.hold >= 0.0) {
            return Err(bad("`mc.storage` needs half_width > 0 and hold >= 0"));
        }
    }
    let mem = &cfg.memory;
    ChannelState::new(mem.eta, mem.nbar).map_err(|e| bad(e.to_string()))?;
    if mem.n_max < 2 {
        return Err(bad("`memory.n_max` must be at least 2"));
    }
    if mem.grid_points < 3 || mem.grid_points % 2 == 0 {
        return Err(bad("`memory.grid_points` must be odd and at least 3"));
    }
    if let Some(e) = mem.extent {
        positive("memory.extent", e)?;
    }
    if mem.sweep_points < 2 {
        return Err(bad("`memory.sweep_points` must be at least 2"));
    }
    Ok(())
}

/// TOML echo of a resolved config.
pub fn echo(cfg: &RunConfig) -> Result<String, CliError> {
    toml::to_string(cfg).map_err(|e| CliError::Internal(format!("config echo: {e}")))
}
