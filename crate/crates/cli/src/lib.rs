//! Command-line driver: configuration, sweeps and machine-readable output.

pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cphase_core::components::{scatter_coefficients, QubitState, Sidedness};
use cphase_core::decoupling::{dd_sequence, noisy_fidelity_mc_with, verify_refocus, NoiseMode, SequenceStep};
use cphase_core::fidelity::{
    bandwidth_block, entanglement_fidelity_from, expansion_coefficient, gate_fidelity,
    inverse_cooperativity_coefficient, ExpansionSettings, ExpansionTerm,
};
use cphase_core::network::{BasisAmplitudeSet, BasisState};
use cphase_core::pulses::{scatter_time_domain, time_domain_discrepancy};
use serde::Serialize;

use config::{rate_from_2pi_mhz, rate_to_2pi_mhz, Format, RunConfig, S_PER_US};
use error::{CliError, Result, EXIT_NOT_REFOCUSED, EXIT_OK, EXIT_VALIDATION};
use output::{emit_report, emit_table, Metadata, Table};
use sweep::{run_sweep, SweepParam, SweepRange};

#[derive(Debug, Parser)]
#[command(name = "cphase", version, about = "Single-photon C-PHASE gates through chains of qubit-loaded cavities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML run configuration; the built-in baseline when absent.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent. CSV output also writes `<stem>.meta.json`.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Number of cavities, overriding the config.
    #[arg(long)]
    pub n: Option<usize>,
    /// Monte Carlo seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RangeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Logarithmic spacing.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reflection and transmission of one cavity versus detuning (2π·MHz).
    Components {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Network amplitude of every basis state versus detuning (2π·MHz).
    Transfer {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Time-domain scattering off the end cavity.
    Timedomain {
        #[command(flatten)]
        common: Common,
        /// Qubit state of the end cavity.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
        qubit: u8,
    },
    /// Gate fidelity report.
    Fidelity {
        #[command(flatten)]
        common: Common,
    },
    /// First-order error-budget coefficients.
    Coeffs {
        #[command(flatten)]
        common: Common,
    },
    /// One-parameter sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// inv_C, bandwidth_sq, tau_ns, delta, kappa_prime_ratio or eta.
        #[arg(long)]
        param: Option<String>,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Dynamical decoupling.
    Dd {
        #[command(subcommand)]
        action: DdCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum DdCommand {
    /// Checks that the decoupling sequence refocuses the path phases exactly.
    Verify {
        #[arg(long)]
        n: usize,
    },
    /// Monte Carlo fidelity under Gaussian path-phase noise.
    Fidelity {
        #[command(flatten)]
        common: Common,
        /// Noise width in rad.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Plain gate without the decoupling sequence.
        #[arg(long)]
        no_dd: bool,
        /// Fresh noise for every photon instead of one draw per sequence.
        #[arg(long)]
        per_photon: bool,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = if shown {
                write!(stdout, "{}", e.render())
            } else {
                write!(stderr, "{}", e.render())
            };
            return if shown { EXIT_OK } else { EXIT_VALIDATION };
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = common.n {
        cfg.network.n = n;
    }
    if let Some(seed) = common.seed {
        cfg.mc.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(f) = common.format {
        cfg.output.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn range_or(range: &RangeArgs, from: f64, to: f64, points: usize) -> SweepRange {
    SweepRange {
        from: range.from.unwrap_or(from),
        to: range.to.unwrap_or(to),
        points: range.points.unwrap_or(points),
        log: range.log,
    }
}

fn qubit_label(q: QubitState) -> &'static str {
    if q.is_one() {
        "1"
    } else {
        "0"
    }
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Components { common, range } => {
            let cfg = load_config(&common)?;
            let table = components_table(&cfg, &range)?;
            let meta = Metadata::new("components", &cfg);
            emit_table(&table, &meta, cfg.output.format, cfg.output.path.as_deref(), stdout)?;
        }
        Command::Transfer { common, range } => {
            let cfg = load_config(&common)?;
            let table = transfer_table(&cfg, &range)?;
            let meta = Metadata::new("transfer", &cfg);
            emit_table(&table, &meta, cfg.output.format, cfg.output.path.as_deref(), stdout)?;
        }
        Command::Timedomain { common, qubit } => {
            let cfg = load_config(&common)?;
            let (table, discrepancy) = timedomain_table(&cfg, QubitState::from_bit(qubit == 1))?;
            let meta = Metadata::new("timedomain", &cfg).with_extra(serde_json::json!({
                "qubit": qubit,
                "relative_l2_discrepancy_vs_frequency_domain": discrepancy,
            }));
            emit_table(&table, &meta, cfg.output.format, cfg.output.path.as_deref(), stdout)?;
        }
        Command::Fidelity { common } => {
            let cfg = load_config(&common)?;
            let report = fidelity_report(&cfg)?;
            emit_report(&report, &Metadata::new("fidelity", &cfg), cfg.output.path.as_deref(), stdout)?;
        }
        Command::Coeffs { common } => {
            let cfg = load_config(&common)?;
            let report = coeffs_report(cfg.network.n)?;
            emit_report(&report, &Metadata::new("coeffs", &cfg), cfg.output.path.as_deref(), stdout)?;
        }
        Command::Sweep { common, param, range } => {
            let mut cfg = load_config(&common)?;
            let from_config = cfg.sweep.clone();
            let name = param
                .or_else(|| from_config.as_ref().map(|s| s.param.clone()))
                .ok_or_else(|| CliError::Config {
                    field: "sweep.param".into(),
                    reason: "give --param or a [sweep] table".into(),
                })?;
            let p: SweepParam = name.parse()?;
            let (lo, hi) = p.default_range();
            let same_param = from_config.as_ref().filter(|s| s.param == name);
            let r = SweepRange {
                from: range.from.or(same_param.and_then(|s| s.from)).unwrap_or(lo),
                to: range.to.or(same_param.and_then(|s| s.to)).unwrap_or(hi),
                points: range.points.or(same_param.and_then(|s| s.points)).unwrap_or(11),
                log: range.log || same_param.is_some_and(|s| s.log),
            };
            cfg.sweep = Some(config::SweepConfig {
                param: name,
                from: Some(r.from),
                to: Some(r.to),
                points: Some(r.points),
                log: r.log,
            });
            let table = run_sweep(&cfg, p, &r.values()?)?;
            let meta = Metadata::new("sweep", &cfg);
            emit_table(&table, &meta, cfg.output.format, cfg.output.path.as_deref(), stdout)?;
        }
        Command::Dd { action } => return dd(action, stdout),
    }
    Ok(EXIT_OK)
}

pub fn components_table(cfg: &RunConfig, range: &RangeArgs) -> Result<Table> {
    let k = cfg.network.kappa_2pi_mhz;
    let omegas = range_or(range, -5.0 * k, 5.0 * k, 201).values()?;
    let spec = cfg.network_spec()?;
    let end = *spec.cavities.last().expect("n >= 1");
    let mut two = end;
    two.sidedness = Sidedness::TwoSided;
    let mut table = Table::new(&["omega_2pi_mhz", "sidedness", "qubit", "re_r", "im_r", "re_t", "im_t"]);
    for (label, cav) in [("one-sided", end), ("two-sided", two)] {
        for q in [QubitState::Zero, QubitState::One] {
            for &w in &omegas {
                let c = scatter_coefficients(rate_from_2pi_mhz(w), &cav, q)?;
                let t = c.transmission.unwrap_or_default();
                table.push(vec![
                    w.into(),
                    label.into(),
                    qubit_label(q).into(),
                    c.reflection.re.into(),
                    c.reflection.im.into(),
                    t.re.into(),
                    t.im.into(),
                ]);
            }
        }
    }
    Ok(table)
}

pub fn transfer_table(cfg: &RunConfig, range: &RangeArgs) -> Result<Table> {
    let b = rate_to_2pi_mhz(cfg.bandwidth());
    let omegas = range_or(range, -4.0 * b, 4.0 * b, 101).values()?;
    let spec = cfg.network_spec()?;
    let grid: Vec<f64> = omegas.iter().map(|&w| rate_from_2pi_mhz(w)).collect();
    let set = BasisAmplitudeSet::build(&spec, &grid)?;
    let mut table = Table::new(&["omega_2pi_mhz", "state", "re", "im"]);
    for s in BasisState::all(spec.n()) {
        for (w, a) in omegas.iter().zip(set.get(s)) {
            table.push(vec![(*w).into(), s.to_string().into(), a.re.into(), a.im.into()]);
        }
    }
    Ok(table)
}

/// Fields in `1/μs` so that `∫|b|² dt` over `t_us` is a probability.
pub fn timedomain_table(cfg: &RunConfig, q: QubitState) -> Result<(Table, f64)> {
    let cav = cfg.end_cavity()?;
    let packet = cfg.wave_packet()?;
    let state = scatter_time_domain(&packet, &cav, q)?;
    let discrepancy = time_domain_discrepancy(&state, &packet, &cav, q)?;
    let mut table = Table::new(&["t_us", "b_in_sq", "b_out_sq", "c_b_sq", "c_e_sq"]);
    for i in 0..state.t.len() {
        table.push(vec![
            (state.t[i] / S_PER_US).into(),
            (state.b_in[i].norm_sqr() * S_PER_US).into(),
            (state.b_out[i].norm_sqr() * S_PER_US).into(),
            state.c_b[i].norm_sqr().into(),
            state.c_e[i].norm_sqr().into(),
        ]);
    }
    Ok((table, discrepancy))
}

#[derive(Debug, Clone, Serialize)]
pub struct FidelityReport {
    pub n: usize,
    pub fidelity: f64,
    pub xi_star_us: f64,
    pub xi_star_kappa: f64,
    /// `[re, im]` per basis state, in index order.
    pub overlaps: Vec<[f64; 2]>,
    pub states: Vec<String>,
    pub success_probability: f64,
    pub heralded_fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entanglement_fidelity: Option<f64>,
}

pub fn fidelity_report(cfg: &RunConfig) -> Result<FidelityReport> {
    let spec = cfg.network_spec()?;
    let r = gate_fidelity(&spec, &cfg.wave_packet()?)?;
    Ok(FidelityReport {
        n: r.n,
        fidelity: r.fidelity,
        xi_star_us: r.xi_star / S_PER_US,
        xi_star_kappa: r.xi_star * cfg.kappa(),
        overlaps: r.overlaps.iter().map(|o| [o.re, o.im]).collect(),
        states: BasisState::all(r.n).map(|s| s.to_string()).collect(),
        success_probability: r.success_probability,
        heralded_fidelity: r.heralded_fidelity,
        entanglement_fidelity: (r.n == 2).then(|| entanglement_fidelity_from(&r)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientReport {
    pub n: usize,
    pub settings: ExpansionSettings,
    /// Slope of `1 - F` per unit of each small parameter.
    pub slopes: Vec<NamedSlope>,
    /// `1 - F ≈ (a/κ² + b τ/κ + c τ²) ΔΩ²`.
    pub bandwidth_block: cphase_core::fidelity::BandwidthBlock,
    pub bandwidth_block_bandwidth_kappa: f64,
    pub inv_c_closed_form: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedSlope {
    pub term: &'static str,
    pub slope: f64,
    pub coarse: f64,
}

/// Bandwidth (in `κ`) used to fit the `ΔΩ²` block.
pub const BLOCK_BANDWIDTH_KAPPA: f64 = 1e-2;

pub fn coeffs_report(n: usize) -> Result<CoefficientReport> {
    let settings = ExpansionSettings::default();
    let slopes = ExpansionTerm::ALL
        .into_iter()
        .map(|t| {
            let s = expansion_coefficient(n, t, &settings)?;
            Ok(NamedSlope {
                term: t.name(),
                slope: s.slope,
                coarse: s.coarse,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoefficientReport {
        n,
        settings,
        slopes,
        bandwidth_block: bandwidth_block(n, BLOCK_BANDWIDTH_KAPPA, settings.strong_coupling, settings.grid_points)?,
        bandwidth_block_bandwidth_kappa: BLOCK_BANDWIDTH_KAPPA,
        inv_c_closed_form: inverse_cooperativity_coefficient(n),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DdFidelityReport {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub rng: String,
    pub delta_rad: f64,
    pub with_dd: bool,
    pub noise: NoiseMode,
}

fn dd(action: DdCommand, stdout: &mut dyn Write) -> Result<i32> {
    match action {
        DdCommand::Verify { n } => {
            let seq = dd_sequence(n)?;
            let r = verify_refocus(&seq)?;
            let pulses = seq.iter().filter(|s| matches!(s, SequenceStep::Pulse(_))).count();
            writeln!(stdout, "n: {n}")?;
            writeln!(stdout, "pulses: {pulses}, photons: {}", seq.len() - pulses)?;
            writeln!(stdout, "refocused: {}", r.refocused)?;
            writeln!(stdout, "global phase: {}", r.global_phase)?;
            Ok(if r.refocused { EXIT_OK } else { EXIT_NOT_REFOCUSED })
        }
        DdCommand::Fidelity {
            common,
            delta,
            samples,
            no_dd,
            per_photon,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(d) = delta {
                cfg.mc.delta_rad = d;
            }
            if let Some(s) = samples {
                cfg.mc.samples = s;
            }
            if no_dd {
                cfg.mc.with_dd = false;
            }
            if per_photon {
                cfg.mc.noise = NoiseMode::PerPhoton;
            }
            cfg.validate()?;
            let report = dd_fidelity_report(&cfg)?;
            emit_report(&report, &Metadata::new("dd fidelity", &cfg), cfg.output.path.as_deref(), stdout)?;
            Ok(EXIT_OK)
        }
    }
}

pub fn dd_fidelity_report(cfg: &RunConfig) -> Result<DdFidelityReport> {
    let mc = &cfg.mc;
    let r = noisy_fidelity_mc_with(
        &cfg.network_spec()?,
        &cfg.wave_packet()?,
        mc.delta_rad,
        mc.samples,
        mc.with_dd,
        mc.seed,
        mc.noise,
    )?;
    Ok(DdFidelityReport {
        mean: r.mean,
        stderr: r.stderr,
        samples: r.samples,
        seed: r.seed,
        rng: r.rng,
        delta_rad: mc.delta_rad,
        with_dd: mc.with_dd,
        noise: mc.noise,
    })
}
