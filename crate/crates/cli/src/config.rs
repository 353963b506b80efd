//! Run configuration in laboratory units.
//!
//! Every physical key carries its unit in the name: rates in `2π·MHz`
//! (`*_2pi_mhz`), delays in ns, durations in μs. Internally everything is
//! converted to rad/s and seconds.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use cphase_core::decoupling::NoiseMode;
use cphase_core::network::{ElementModel, NetworkSpec, PathSegment};
use cphase_core::pulses::{frequency_grid, WavePacket};
use cphase_core::CavitySpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// `2π·MHz` to rad/s.
pub const RAD_PER_S_PER_2PI_MHZ: f64 = 2.0 * PI * 1e6;
pub const S_PER_NS: f64 = 1e-9;
pub const S_PER_US: f64 = 1e-6;

pub fn rate_from_2pi_mhz(x: f64) -> f64 {
    x * RAD_PER_S_PER_2PI_MHZ
}

pub fn rate_to_2pi_mhz(x: f64) -> f64 {
    x / RAD_PER_S_PER_2PI_MHZ
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub packet: PacketConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Uniform chain: every cavity and every path segment share parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub g_2pi_mhz: f64,
    pub kappa_2pi_mhz: f64,
    #[serde(default)]
    pub kappa_prime_2pi_mhz: f64,
    pub gamma_2pi_mhz: f64,
    #[serde(default)]
    pub tau_ns: f64,
    #[serde(default)]
    pub eta: f64,
    /// `φ_1 .. φ_{2(N-1)}`; empty means all zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phases_rad: Vec<f64>,
    #[serde(default = "default_block_detuning")]
    pub block_detuning_kappa: f64,
    #[serde(default)]
    pub model: ElementModel,
}

fn default_n() -> usize {
    2
}

fn default_block_detuning() -> f64 {
    cphase_core::components::DEFAULT_BLOCK_DETUNING_KAPPA
}

impl Default for NetworkConfig {
    /// `κ = 2π·10 MHz`, `γ = 2π·1 MHz`, `C = 100`, lossless paths.
    fn default() -> Self {
        NetworkConfig {
            n: 2,
            g_2pi_mhz: 1000f64.sqrt(),
            kappa_2pi_mhz: 10.0,
            kappa_prime_2pi_mhz: 0.0,
            gamma_2pi_mhz: 1.0,
            tau_ns: 0.0,
            eta: 0.0,
            phases_rad: Vec::new(),
            block_detuning_kappa: default_block_detuning(),
            model: ElementModel::Physical,
        }
    }
}

/// Gaussian packet given by exactly one of duration or bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    /// `ΔT = 2π/ΔΩ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_2pi_mhz: Option<f64>,
    /// Grid half-width in units of the bandwidth.
    #[serde(default = "default_half_width")]
    pub grid_half_width: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_half_width() -> f64 {
    cphase_core::pulses::DEFAULT_GRID_HALF_WIDTH
}

fn default_grid_points() -> usize {
    2049
}

impl Default for PacketConfig {
    /// `ΔΩ = κ/10` at the default `κ`.
    fn default() -> Self {
        PacketConfig {
            duration_us: None,
            bandwidth_2pi_mhz: Some(1.0),
            grid_half_width: default_half_width(),
            grid_points: default_grid_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default)]
    pub delta_rad: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub with_dd: bool,
    #[serde(default)]
    pub noise: NoiseMode,
}

fn default_samples() -> usize {
    64
}

fn default_true() -> bool {
    true
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            delta_rad: 0.0,
            samples: default_samples(),
            seed: 0,
            with_dd: true,
            noise: NoiseMode::QuasiStatic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn field(name: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        field: name.to_string(),
        reason: reason.into(),
    }
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(field(name, format!("must be finite and >= 0, got {x}")))
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(field(name, format!("must be finite and > 0, got {x}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| field("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n = &self.network;
        if !(1..=12).contains(&n.n) {
            return Err(field("network.n", format!("must be in 1..=12, got {}", n.n)));
        }
        non_negative("network.g_2pi_mhz", n.g_2pi_mhz)?;
        positive("network.kappa_2pi_mhz", n.kappa_2pi_mhz)?;
        non_negative("network.kappa_prime_2pi_mhz", n.kappa_prime_2pi_mhz)?;
        non_negative("network.gamma_2pi_mhz", n.gamma_2pi_mhz)?;
        non_negative("network.tau_ns", n.tau_ns)?;
        non_negative("network.eta", n.eta)?;
        positive("network.block_detuning_kappa", n.block_detuning_kappa)?;
        if !n.phases_rad.is_empty() && n.phases_rad.len() != 2 * (n.n - 1) {
            return Err(field(
                "network.phases_rad",
                format!("expected {} entries, got {}", 2 * (n.n - 1), n.phases_rad.len()),
            ));
        }
        if n.phases_rad.iter().any(|p| !p.is_finite()) {
            return Err(field("network.phases_rad", "entries must be finite"));
        }
        let p = &self.packet;
        match (p.duration_us, p.bandwidth_2pi_mhz) {
            (Some(d), None) => positive("packet.duration_us", d)?,
            (None, Some(b)) => positive("packet.bandwidth_2pi_mhz", b)?,
            _ => return Err(field("packet", "set exactly one of duration_us and bandwidth_2pi_mhz")),
        }
        if !(p.grid_half_width >= cphase_core::pulses::MIN_GRID_HALF_WIDTH && p.grid_half_width.is_finite()) {
            return Err(field(
                "packet.grid_half_width",
                format!("must be >= {}", cphase_core::pulses::MIN_GRID_HALF_WIDTH),
            ));
        }
        if p.grid_points < 65 {
            return Err(field("packet.grid_points", "must be >= 65"));
        }
        non_negative("mc.delta_rad", self.mc.delta_rad)?;
        if self.mc.samples == 0 {
            return Err(field("mc.samples", "must be >= 1"));
        }
        if let Some(s) = &self.sweep {
            s.param.parse::<crate::sweep::SweepParam>()?;
            if s.points == Some(0) {
                return Err(field("sweep.points", "must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        rate_from_2pi_mhz(self.network.kappa_2pi_mhz)
    }

    /// Packet bandwidth in rad/s.
    pub fn bandwidth(&self) -> f64 {
        match (self.packet.duration_us, self.packet.bandwidth_2pi_mhz) {
            (Some(d), _) => 2.0 * PI / (d * S_PER_US),
            (None, Some(b)) => rate_from_2pi_mhz(b),
            (None, None) => unreachable!("validated"),
        }
    }

    pub fn packet_with_bandwidth(&self, bandwidth: f64) -> Result<WavePacket> {
        let grid = frequency_grid(bandwidth, self.packet.grid_half_width, self.packet.grid_points);
        Ok(WavePacket::gaussian(bandwidth, grid)?)
    }

    pub fn wave_packet(&self) -> Result<WavePacket> {
        self.packet_with_bandwidth(self.bandwidth())
    }

    pub fn network_spec(&self) -> Result<NetworkSpec> {
        let n = &self.network;
        let segment = PathSegment::new(n.tau_ns * S_PER_NS, n.eta, 0.0)?;
        let mut spec = NetworkSpec::uniform(
            n.n,
            rate_from_2pi_mhz(n.g_2pi_mhz),
            rate_from_2pi_mhz(n.kappa_2pi_mhz),
            rate_from_2pi_mhz(n.kappa_prime_2pi_mhz),
            rate_from_2pi_mhz(n.gamma_2pi_mhz),
            segment,
        )?
        .with_model(n.model)
        .with_block_detuning(n.block_detuning_kappa)?;
        if !n.phases_rad.is_empty() {
            spec = spec.with_phases(&n.phases_rad)?;
        }
        Ok(spec)
    }

    /// The last cavity of the chain, the only one-sided element.
    pub fn end_cavity(&self) -> Result<CavitySpec> {
        Ok(*self.network_spec()?.cavities.last().expect("n >= 1"))
    }
}
