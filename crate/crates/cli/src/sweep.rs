//! One-parameter sweeps around a base configuration.

use std::fmt;
use std::str::FromStr;

use cphase_core::decoupling::noisy_fidelity_mc_with;
use cphase_core::fidelity::gate_fidelity;
use rayon::prelude::*;

use crate::config::{RunConfig, S_PER_US};
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// `1/C` at fixed `κ, γ`; the coupling follows.
    InverseCooperativity,
    /// `(ΔΩ/κ)²`.
    BandwidthSquared,
    /// Per-segment delay in ns.
    Delay,
    /// Phase-noise width `δ` in rad, with and without decoupling.
    PhaseNoise,
    /// `κ'/κ`.
    AbsorptionRatio,
    /// Per-segment amplitude loss.
    PathLoss,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::InverseCooperativity,
        SweepParam::BandwidthSquared,
        SweepParam::Delay,
        SweepParam::PhaseNoise,
        SweepParam::AbsorptionRatio,
        SweepParam::PathLoss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::InverseCooperativity => "inv_C",
            SweepParam::BandwidthSquared => "bandwidth_sq",
            SweepParam::Delay => "tau_ns",
            SweepParam::PhaseNoise => "delta",
            SweepParam::AbsorptionRatio => "kappa_prime_ratio",
            SweepParam::PathLoss => "eta",
        }
    }

    /// Range used when neither the config nor the flags give one.
    pub fn default_range(self) -> (f64, f64) {
        match self {
            SweepParam::InverseCooperativity => (1e-3, 2e-2),
            SweepParam::BandwidthSquared => (1e-4, 2e-2),
            SweepParam::Delay => (0.0, 20.0),
            SweepParam::PhaseNoise => (0.0, 0.3),
            SweepParam::AbsorptionRatio => (0.0, 0.1),
            SweepParam::PathLoss => (0.0, 0.1),
        }
    }

    /// Base config with the swept value applied.
    pub fn apply(self, base: &RunConfig, x: f64) -> Result<RunConfig> {
        let mut cfg = base.clone();
        let n = &mut cfg.network;
        let bad = |reason: &str| CliError::Config {
            field: format!("sweep value {} = {x}", self.name()),
            reason: reason.to_string(),
        };
        if !x.is_finite() {
            return Err(bad("must be finite"));
        }
        match self {
            SweepParam::InverseCooperativity => {
                if x <= 0.0 || n.gamma_2pi_mhz <= 0.0 {
                    return Err(bad("needs a positive value and gamma_2pi_mhz > 0"));
                }
                n.g_2pi_mhz = (n.kappa_2pi_mhz * n.gamma_2pi_mhz / x).sqrt();
            }
            SweepParam::BandwidthSquared => {
                if x <= 0.0 {
                    return Err(bad("must be > 0"));
                }
                cfg.packet.duration_us = None;
                cfg.packet.bandwidth_2pi_mhz = Some(n.kappa_2pi_mhz * x.sqrt());
            }
            SweepParam::Delay => n.tau_ns = x,
            SweepParam::PhaseNoise => cfg.mc.delta_rad = x,
            SweepParam::AbsorptionRatio => n.kappa_prime_2pi_mhz = x * n.kappa_2pi_mhz,
            SweepParam::PathLoss => n.eta = x,
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn columns(self) -> Vec<&'static str> {
        match self {
            SweepParam::PhaseNoise => vec![self.name(), "fidelity", "stderr", "fidelity_dd", "stderr_dd"],
            _ => vec![
                self.name(),
                "fidelity",
                "xi_us",
                "xi_kappa",
                "success_probability",
                "heralded_fidelity",
            ],
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| CliError::Config {
            field: "sweep.param".into(),
            reason: format!(
                "unknown parameter `{s}`; expected one of {}",
                SweepParam::ALL.map(|p| p.name()).join(", ")
            ),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub log: bool,
}

impl SweepRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        let bad = |reason: &str| CliError::Config {
            field: "sweep range".into(),
            reason: reason.to_string(),
        };
        if self.points == 0 {
            return Err(bad("points must be >= 1"));
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(bad("bounds must be finite"));
        }
        if self.log && !(self.from > 0.0 && self.to > 0.0) {
            return Err(bad("log spacing needs positive bounds"));
        }
        if self.points == 1 {
            return Ok(vec![self.from]);
        }
        let last = (self.points - 1) as f64;
        let (a, b) = if self.log { (self.from.ln(), self.to.ln()) } else { (self.from, self.to) };
        Ok((0..self.points)
            .map(|i| {
                if i == 0 {
                    self.from
                } else if i == self.points - 1 {
                    self.to
                } else {
                    let i = i as f64;
                    let t = (a * (last - i) + b * i) / last;
                    if self.log {
                        t.exp()
                    } else {
                        t
                    }
                }
            })
            .collect())
    }
}

fn row(param: SweepParam, cfg: &RunConfig, x: f64) -> Result<Vec<Cell>> {
    let spec = cfg.network_spec()?;
    let packet = cfg.wave_packet()?;
    if param == SweepParam::PhaseNoise {
        let mc = &cfg.mc;
        let bare = noisy_fidelity_mc_with(&spec, &packet, mc.delta_rad, mc.samples, false, mc.seed, mc.noise)?;
        let dd = noisy_fidelity_mc_with(&spec, &packet, mc.delta_rad, mc.samples, true, mc.seed, mc.noise)?;
        return Ok(vec![x.into(), bare.mean.into(), bare.stderr.into(), dd.mean.into(), dd.stderr.into()]);
    }
    let r = gate_fidelity(&spec, &packet)?;
    Ok(vec![
        x.into(),
        r.fidelity.into(),
        (r.xi_star / S_PER_US).into(),
        (r.xi_star * cfg.kappa()).into(),
        r.success_probability.into(),
        r.heralded_fidelity.into(),
    ])
}

/// Evaluates every point in parallel; rows keep the order of `values`.
pub fn run_sweep(base: &RunConfig, param: SweepParam, values: &[f64]) -> Result<Table> {
    let rows = values
        .par_iter()
        .map(|&x| row(param, &param.apply(base, x)?, x))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&param.columns());
    for r in rows {
        table.push(r);
    }
    Ok(table)
}
