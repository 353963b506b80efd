//! Gate fidelity against the ideal C-PHASE, reference-delay optimisation,
//! small-parameter expansion coefficients, heralded and entanglement
//! fidelities.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::network::{BasisAmplitudeSet, BasisState, NetworkSpec, PathSegment};
use crate::optimize::bracket_and_maximize;
use crate::pulses::WavePacket;

/// Scan points used to bracket the reference delay before refinement.
pub const XI_SCAN_POINTS: usize = 401;
/// Reference-delay tolerance in units of `1/κ`.
pub const XI_TOLERANCE_KAPPA: f64 = 1e-6;

/// Ideal C-PHASE: `-1` on `|1...1>`, `+1` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetGate {
    pub n: usize,
}

impl TargetGate {
    pub fn new(n: usize) -> Self {
        TargetGate { n }
    }

    pub fn sign(&self, state: BasisState) -> f64 {
        if state.is_all_ones() {
            -1.0
        } else {
            1.0
        }
    }

    pub fn signs(&self) -> Vec<f64> {
        BasisState::all(self.n).map(|s| self.sign(s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub n: usize,
    pub fidelity: f64,
    /// Optimal reference delay.
    pub xi_star: f64,
    /// `∫ e^{iωξ*} |Φ|² T(ω, s) dω`, indexed by basis-state index.
    pub overlaps: Vec<Complex64>,
    /// Photon transmission probability averaged over basis states.
    pub success_probability: f64,
    /// `fidelity / success_probability`.
    pub heralded_fidelity: f64,
}

/// Spectral weights `|Φ(ω)|² dω` times per-state transfer functions.
struct WeightedResponse {
    grid: Vec<f64>,
    /// Per state, `w_i |Φ_i|² T_s(ω_i)`.
    weighted: Vec<Vec<Complex64>>,
    /// Per state, `∫ |Φ|² |T_s|² dω`.
    transmitted: Vec<f64>,
    signs: Vec<f64>,
}

impl WeightedResponse {
    fn build(spec: &NetworkSpec, packet: &WavePacket) -> Result<Self> {
        let amps = BasisAmplitudeSet::build(spec, packet.grid())?;
        let dens: Vec<f64> = packet
            .weights()
            .iter()
            .zip(packet.spectral_density())
            .map(|(w, d)| w * d)
            .collect();
        let weighted: Vec<Vec<Complex64>> = amps
            .amplitudes
            .iter()
            .map(|t| t.iter().zip(&dens).map(|(a, d)| a * d).collect())
            .collect();
        let transmitted = amps
            .amplitudes
            .iter()
            .map(|t| t.iter().zip(&dens).map(|(a, d)| a.norm_sqr() * d).sum())
            .collect();
        Ok(WeightedResponse {
            grid: packet.grid().to_vec(),
            weighted,
            transmitted,
            signs: TargetGate::new(spec.n()).signs(),
        })
    }

    fn overlap(&self, state: usize, xi: f64) -> Complex64 {
        self.grid
            .iter()
            .zip(&self.weighted[state])
            .map(|(&w, a)| a * Complex64::from_polar(1.0, w * xi))
            .sum()
    }

    fn overlaps(&self, xi: f64) -> Vec<Complex64> {
        (0..self.weighted.len()).map(|s| self.overlap(s, xi)).collect()
    }

    /// `CP`-signed average of the transfer functions, weighted by the packet.
    fn target_average(&self) -> Vec<Complex64> {
        let d = self.weighted.len() as f64;
        (0..self.grid.len())
            .map(|i| {
                self.weighted
                    .iter()
                    .zip(&self.signs)
                    .map(|(t, s)| t[i] * *s)
                    .sum::<Complex64>()
                    / d
            })
            .collect()
    }
}

fn fidelity_at(grid: &[f64], avg: &[Complex64], xi: f64) -> f64 {
    grid.iter()
        .zip(avg)
        .map(|(&w, a)| a * Complex64::from_polar(1.0, w * xi))
        .sum::<Complex64>()
        .norm_sqr()
}

/// Search window for the reference delay.
pub fn xi_window(spec: &NetworkSpec) -> (f64, f64) {
    let k = spec.kappa_scale();
    (-20.0 / k - 5.0 * spec.total_delay(), 20.0 / k)
}

fn optimise_xi<F: FnMut(f64) -> f64>(spec: &NetworkSpec, f: F) -> f64 {
    let (lo, hi) = xi_window(spec);
    let tol = XI_TOLERANCE_KAPPA / spec.kappa_scale();
    bracket_and_maximize(f, lo, hi, XI_SCAN_POINTS, tol).x
}

/// `F_N = max_ξ |2^{-N} Σ_s CP(s) ∫ e^{iωξ} |Φ|² T(ω, s) dω|²`.
pub fn gate_fidelity(spec: &NetworkSpec, packet: &WavePacket) -> Result<GateReport> {
    let resp = WeightedResponse::build(spec, packet)?;
    let avg = resp.target_average();
    let xi = optimise_xi(spec, |xi| fidelity_at(&resp.grid, &avg, xi));
    let fidelity = fidelity_at(&resp.grid, &avg, xi);
    let success_probability = resp.transmitted.iter().sum::<f64>() / resp.transmitted.len() as f64;
    let heralded_fidelity = if success_probability > 0.0 {
        fidelity / success_probability
    } else {
        0.0
    };
    Ok(GateReport {
        n: spec.n(),
        fidelity,
        xi_star: xi,
        overlaps: resp.overlaps(xi),
        success_probability,
        heralded_fidelity,
    })
}

/// Fidelity at a fixed reference delay, no optimisation.
pub fn gate_fidelity_at(spec: &NetworkSpec, packet: &WavePacket, xi: f64) -> Result<f64> {
    let resp = WeightedResponse::build(spec, packet)?;
    Ok(fidelity_at(&resp.grid, &resp.target_average(), xi))
}

/// The optimised reference delay `ξ*`; `0` when the objective is flat.
pub fn optimal_xi(spec: &NetworkSpec, packet: &WavePacket) -> Result<f64> {
    Ok(gate_fidelity(spec, packet)?.xi_star)
}

/// Per-state overlaps of one photon pass at reference delay `xi`. With
/// `None`, `ξ` maximises `Σ_s |O_s|`, which does not depend on the target
/// phases.
pub fn photon_overlaps(spec: &NetworkSpec, packet: &WavePacket, xi: Option<f64>) -> Result<(Vec<Complex64>, f64)> {
    let resp = WeightedResponse::build(spec, packet)?;
    let xi = match xi {
        Some(x) => x,
        None => optimise_xi(spec, |x| (0..resp.weighted.len()).map(|s| resp.overlap(s, x).norm()).sum()),
    };
    Ok((resp.overlaps(xi), xi))
}

/// Success probability and heralded fidelity.
pub fn heralded_report(spec: &NetworkSpec, packet: &WavePacket) -> Result<(f64, f64)> {
    let r = gate_fidelity(spec, packet)?;
    if r.success_probability < 1e-12 {
        return Err(Error::NoSignal(r.success_probability));
    }
    Ok((r.success_probability, r.heralded_fidelity))
}

/// `|¼(O_00 + O_01 + O_10 - O_11)|²` from the per-state overlaps at `ξ*`.
pub fn entanglement_fidelity(spec: &NetworkSpec, packet: &WavePacket) -> Result<f64> {
    if spec.n() != 2 {
        return Err(Error::QubitCount { expected: 2, got: spec.n() });
    }
    Ok(entanglement_fidelity_from(&gate_fidelity(spec, packet)?))
}

pub fn entanglement_fidelity_from(report: &GateReport) -> f64 {
    let o = &report.overlaps;
    ((o[0] + o[1] + o[2] - o[3]) / 4.0).norm_sqr()
}

/// Small parameters of the first-order fidelity expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionTerm {
    /// `1/C`, with `γ = κ`.
    InverseCooperativity,
    /// `κ'/κ`.
    AbsorptionRatio,
    /// Per-segment amplitude loss `η`.
    PathLoss,
}

impl ExpansionTerm {
    pub const ALL: [ExpansionTerm; 3] = [
        ExpansionTerm::InverseCooperativity,
        ExpansionTerm::AbsorptionRatio,
        ExpansionTerm::PathLoss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExpansionTerm::InverseCooperativity => "inv_C",
            ExpansionTerm::AbsorptionRatio => "kappa_prime_ratio",
            ExpansionTerm::PathLoss => "eta",
        }
    }
}

/// Regime used to isolate one expansion term. Rates are in units of `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSettings {
    /// Packet bandwidth in units of `κ`.
    pub bandwidth: f64,
    /// Coupling used when the term under study is not `1/C`, with `γ = 0`.
    pub strong_coupling: f64,
    /// Smallest value of the parameter; the fit also uses twice and four
    /// times this value.
    pub step: f64,
    pub grid_points: usize,
}

impl Default for ExpansionSettings {
    fn default() -> Self {
        ExpansionSettings {
            bandwidth: 1e-4,
            strong_coupling: 1e4,
            step: 5e-4,
            grid_points: 1025,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    /// Secant slope of `1 - F` between `x` and `2x`.
    pub slope: f64,
    /// Secant slope between `2x` and `4x`, kept as the drift check.
    pub coarse: f64,
}

/// `κ = 1` network with one small parameter set to `x`.
fn expansion_network(n: usize, term: ExpansionTerm, x: f64, s: &ExpansionSettings) -> Result<NetworkSpec> {
    let (g, kp, gamma, eta) = match term {
        ExpansionTerm::InverseCooperativity => ((1.0 / x).sqrt(), 0.0, 1.0, 0.0),
        ExpansionTerm::AbsorptionRatio => (s.strong_coupling, x, 0.0, 0.0),
        ExpansionTerm::PathLoss => (s.strong_coupling, 0.0, 0.0, x),
    };
    NetworkSpec::uniform(n, g, 1.0, kp, gamma, PathSegment::new(0.0, eta, 0.0)?)
}

fn infidelity(spec: &NetworkSpec, packet: &WavePacket) -> Result<f64> {
    Ok(1.0 - gate_fidelity(spec, packet)?.fidelity)
}

fn check_drift(coarse: f64, fine: f64) -> Result<()> {
    if !(coarse.is_finite() && fine.is_finite()) || (coarse - fine).abs() > 0.2 * fine.abs().max(coarse.abs()) {
        return Err(Error::NonAsymptotic { coarse, fine });
    }
    Ok(())
}

/// Linear coefficient of `1 - F_N` in one small parameter, in units of
/// `κ = 1`, by two-point secants at parameter values differing by ×2.
pub fn expansion_coefficient(n: usize, term: ExpansionTerm, settings: &ExpansionSettings) -> Result<SlopeEstimate> {
    if n < 1 {
        return Err(invalid("n", "must be >= 1"));
    }
    if !(settings.step > 0.0 && settings.bandwidth > 0.0) {
        return Err(invalid("step", "step and bandwidth must be > 0"));
    }
    let packet = WavePacket::gaussian(
        settings.bandwidth,
        crate::pulses::frequency_grid(settings.bandwidth, 8.0, settings.grid_points),
    )?;
    let xs = [settings.step, 2.0 * settings.step, 4.0 * settings.step];
    let losses = xs
        .par_iter()
        .map(|&x| infidelity(&expansion_network(n, term, x, settings)?, &packet))
        .collect::<Result<Vec<_>>>()?;
    let slope = (losses[1] - losses[0]) / xs[0];
    let coarse = (losses[2] - losses[1]) / xs[1];
    check_drift(coarse, slope)?;
    Ok(SlopeEstimate { slope, coarse })
}

/// `1 - F ≈ (a/κ² + b τ/κ + c τ²) ΔΩ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthBlock {
    pub constant: f64,
    pub delay_linear: f64,
    pub delay_quadratic: f64,
}

/// Fits the bandwidth block from `1 - F` at `τ ∈ {0, 1/2κ, 1/κ}` with
/// lossless strongly coupled cavities (`κ = 1`).
pub fn bandwidth_block(n: usize, bandwidth: f64, strong_coupling: f64, grid_points: usize) -> Result<BandwidthBlock> {
    let fit = |dw: f64| -> Result<BandwidthBlock> {
        let packet = WavePacket::gaussian(dw, crate::pulses::frequency_grid(dw, 8.0, grid_points))?;
        let l = [0.0, 0.5, 1.0]
            .par_iter()
            .map(|&tau| {
                let spec = NetworkSpec::uniform(n, strong_coupling, 1.0, 0.0, 0.0, PathSegment::new(tau, 0.0, 0.0)?)?;
                Ok(infidelity(&spec, &packet)? / (dw * dw))
            })
            .collect::<Result<Vec<_>>>()?;
        // a + b t + c t² through t = 0, 1/2, 1.
        let c = 2.0 * (l[2] - 2.0 * l[1] + l[0]);
        let b = l[2] - l[0] - c;
        Ok(BandwidthBlock {
            constant: l[0],
            delay_linear: b,
            delay_quadratic: c,
        })
    };
    let fine = fit(bandwidth)?;
    let coarse = fit(2.0 * bandwidth)?;
    check_drift(coarse.constant, fine.constant)?;
    Ok(fine)
}

/// Asymptotic `1/C` coefficient of `1 - F_N`, `(4N - 3)/2^{N-1}`.
pub fn inverse_cooperativity_coefficient(n: usize) -> f64 {
    (4.0 * n as f64 - 3.0) / 2f64.powi(n as i32 - 1)
}
