//! Single-photon wave packets in the frequency and time domains, and a
//! time-domain oracle for one-sided cavity scattering.
//!
//! Fourier convention: `b(t) = ∫ dω e^{-iω(t - t0)} Φ(ω) / sqrt(2π)` and
//! `Φ(ω) = ∫ dt e^{iω(t - t0)} b(t) / sqrt(2π)`, where `t0` is the time the
//! packet centre passes the reference plane.

pub mod ode;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::components::{one_sided_reflection, CavitySpec, QubitState, Sidedness};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{linspace, trapezoid, trapezoid_complex, trapezoid_weights};

use self::ode::{integrate, StepControl, Stats};

/// Default half-width of the detuning grid, in units of the bandwidth.
pub const DEFAULT_GRID_HALF_WIDTH: f64 = 8.0;
/// Default number of detuning samples.
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Minimum half-width a Gaussian packet grid must cover, in bandwidths.
pub const MIN_GRID_HALF_WIDTH: f64 = 6.0;

/// Uniform detuning grid spanning `±half_width·Δ𝛺`.
pub fn frequency_grid(delta_omega: f64, half_width: f64, points: usize) -> Vec<f64> {
    linspace(-half_width * delta_omega, half_width * delta_omega, points)
}

/// Spectral amplitude `Φ(ω)` of a single photon on a detuning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    grid: Vec<f64>,
    amplitude: Vec<Complex64>,
    bandwidth: Option<f64>,
}

impl WavePacket {
    pub fn new(grid: Vec<f64>, amplitude: Vec<Complex64>) -> Result<Self> {
        if grid.len() != amplitude.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points but {} amplitudes",
                grid.len(),
                amplitude.len()
            )));
        }
        if grid.len() < 2 || grid.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(invalid("grid", "need at least two strictly increasing samples"));
        }
        if grid.iter().any(|w| !w.is_finite()) || amplitude.iter().any(|a| !a.is_finite()) {
            return Err(invalid("grid", "non-finite sample"));
        }
        Ok(WavePacket {
            grid,
            amplitude,
            bandwidth: None,
        })
    }

    /// Gaussian packet with `|Φ(ω)|² = exp(-ω²/2Δ𝛺²) / (Δ𝛺 sqrt(2π))` and
    /// zero spectral phase.
    pub fn gaussian(delta_omega: f64, grid: Vec<f64>) -> Result<Self> {
        if !(delta_omega.is_finite() && delta_omega > 0.0) {
            return Err(invalid("delta_omega", format!("must be > 0, got {delta_omega}")));
        }
        let (lo, hi) = match (grid.first(), grid.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::Coverage("empty grid".into())),
        };
        let need = MIN_GRID_HALF_WIDTH * delta_omega * (1.0 - 1e-12);
        if lo > -need || hi < need {
            return Err(Error::Coverage(format!(
                "grid [{lo:e}, {hi:e}] narrower than ±{MIN_GRID_HALF_WIDTH}·Δ𝛺 = ±{:e}",
                MIN_GRID_HALF_WIDTH * delta_omega
            )));
        }
        let norm = 1.0 / (delta_omega * (2.0 * PI).sqrt());
        let amplitude = grid
            .iter()
            .map(|w| Complex64::new((norm * (-w * w / (2.0 * delta_omega * delta_omega)).exp()).sqrt(), 0.0))
            .collect();
        let mut p = Self::new(grid, amplitude)?;
        p.bandwidth = Some(delta_omega);
        Ok(p)
    }

    /// Gaussian on the default grid (±8Δ𝛺, 4096 points).
    pub fn gaussian_default(delta_omega: f64) -> Result<Self> {
        Self::gaussian(
            delta_omega,
            frequency_grid(delta_omega, DEFAULT_GRID_HALF_WIDTH, DEFAULT_GRID_POINTS),
        )
    }

    /// Gaussian whose bandwidth is set from the pulse duration, `Δ𝛺 = 2π/ΔT`.
    pub fn gaussian_from_duration(duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(invalid("duration", format!("must be > 0, got {duration}")));
        }
        Self::gaussian_default(2.0 * PI / duration)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn bandwidth(&self) -> Option<f64> {
        self.bandwidth
    }

    /// `ΔT = 2π/Δ𝛺` for packets built from a bandwidth.
    pub fn duration(&self) -> Option<f64> {
        self.bandwidth.map(|b| 2.0 * PI / b)
    }

    /// `|Φ(ω)|²` per sample.
    pub fn spectral_density(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `∫ |Φ|² dω`.
    pub fn norm_sqr(&self) -> f64 {
        trapezoid(&self.grid, &self.spectral_density())
    }

    /// Trapezoid weights of the grid.
    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.grid)
    }

    /// Multiplies the spectrum by a transfer function.
    pub fn scattered<F>(&self, transfer: F) -> Result<WavePacket>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        let amplitude = self
            .grid
            .iter()
            .zip(&self.amplitude)
            .map(|(&w, &a)| Ok(transfer(w)? * a))
            .collect::<Result<Vec<_>>>()?;
        Ok(WavePacket {
            grid: self.grid.clone(),
            amplitude,
            bandwidth: None,
        })
    }

    /// `e^{iωξ} Φ(ω)`: the packet delayed by `xi`.
    pub fn delayed(&self, xi: f64) -> WavePacket {
        WavePacket {
            grid: self.grid.clone(),
            amplitude: self
                .grid
                .iter()
                .zip(&self.amplitude)
                .map(|(&w, &a)| a * Complex64::from_polar(1.0, w * xi))
                .collect(),
            bandwidth: self.bandwidth,
        }
    }

    /// Pointwise sum on a common grid.
    pub fn superpose(&self, other: &WavePacket) -> Result<WavePacket> {
        check_same_grid(self, other)?;
        Ok(WavePacket {
            grid: self.grid.clone(),
            amplitude: self.amplitude.iter().zip(&other.amplitude).map(|(a, b)| a + b).collect(),
            bandwidth: None,
        })
    }

    /// Time-domain field `b(t)` at the requested times.
    pub fn to_time_domain(&self, times: &[f64], t0: f64) -> Vec<Complex64> {
        let synth = Synthesizer::new(self);
        times.iter().map(|&t| synth.eval(t - t0)).collect()
    }

    /// RMS spectral width `sqrt(∫ω²|Φ|² / ∫|Φ|²)`.
    pub fn rms_width(&self) -> f64 {
        let dens = self.spectral_density();
        let second: Vec<f64> = self.grid.iter().zip(&dens).map(|(w, d)| w * w * d).collect();
        (trapezoid(&self.grid, &second) / trapezoid(&self.grid, &dens)).sqrt()
    }
}

fn check_same_grid(a: &WavePacket, b: &WavePacket) -> Result<()> {
    if a.grid.len() != b.grid.len() {
        return Err(Error::GridMismatch(format!("{} vs {} samples", a.grid.len(), b.grid.len())));
    }
    let scale = a.grid.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    if a.grid.iter().zip(&b.grid).any(|(x, y)| (x - y).abs() > 1e-12 * scale) {
        return Err(Error::GridMismatch("grid samples differ".into()));
    }
    Ok(())
}

/// `gaussian_packet(Δ𝛺, grid)`
pub fn gaussian_packet(delta_omega: f64, grid: Vec<f64>) -> Result<WavePacket> {
    WavePacket::gaussian(delta_omega, grid)
}

/// `∫ a*(ω) b(ω) dω` by the trapezoid rule.
pub fn overlap(a: &WavePacket, b: &WavePacket) -> Result<Complex64> {
    check_same_grid(a, b)?;
    let prod: Vec<Complex64> = a.amplitude.iter().zip(&b.amplitude).map(|(x, y)| x.conj() * y).collect();
    Ok(trapezoid_complex(&a.grid, &prod))
}

/// Spectrum `Φ(ω)` on `grid` of a sampled time signal.
pub fn spectrum_from_time(times: &[f64], samples: &[Complex64], grid: &[f64], t0: f64) -> Vec<Complex64> {
    let weights = trapezoid_weights(times);
    let norm = 1.0 / (2.0 * PI).sqrt();
    grid.iter()
        .map(|&w| {
            times
                .iter()
                .zip(samples)
                .zip(&weights)
                .map(|((&t, &b), &wt)| wt * b * Complex64::from_polar(1.0, w * (t - t0)))
                .sum::<Complex64>()
                * norm
        })
        .collect()
}

/// Evaluates `∫ e^{-iωs} Φ(ω) dω / sqrt(2π)` by quadrature, using a phase
/// recurrence when the grid is uniform.
struct Synthesizer {
    grid: Vec<f64>,
    weighted: Vec<Complex64>,
    uniform: Option<(f64, f64)>,
}

impl Synthesizer {
    fn new(packet: &WavePacket) -> Self {
        let norm = 1.0 / (2.0 * PI).sqrt();
        let weighted = packet
            .weights()
            .iter()
            .zip(&packet.amplitude)
            .map(|(w, a)| a * (w * norm))
            .collect();
        let g = &packet.grid;
        let step = (g[g.len() - 1] - g[0]) / (g.len() - 1) as f64;
        let uniform = g
            .iter()
            .enumerate()
            .all(|(i, &w)| (w - (g[0] + step * i as f64)).abs() <= 1e-9 * step)
            .then_some((g[0], step));
        Synthesizer {
            grid: g.clone(),
            weighted,
            uniform,
        }
    }

    fn eval(&self, s: f64) -> Complex64 {
        match self.uniform {
            Some((w0, dw)) => {
                let mut phase = Complex64::from_polar(1.0, -w0 * s);
                let rot = Complex64::from_polar(1.0, -dw * s);
                let mut acc = Complex64::default();
                for (i, a) in self.weighted.iter().enumerate() {
                    acc += a * phase;
                    phase *= rot;
                    // Renormalise now and then against drift of the recurrence.
                    if i % 256 == 255 {
                        phase = Complex64::from_polar(1.0, -(w0 + dw * (i + 1) as f64) * s);
                    }
                }
                acc
            }
            None => self
                .grid
                .iter()
                .zip(&self.weighted)
                .map(|(&w, a)| a * Complex64::from_polar(1.0, -w * s))
                .sum(),
        }
    }
}

/// Sampled time-domain fields of a one-sided cavity driven by a photon.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainState {
    pub t: Vec<f64>,
    pub b_in: Vec<Complex64>,
    pub b_out: Vec<Complex64>,
    /// Cavity-field amplitude.
    pub c_b: Vec<Complex64>,
    /// Atomic excited-state amplitude.
    pub c_e: Vec<Complex64>,
    /// Reference time of the incident packet centre.
    pub t0: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl TimeDomainState {
    pub fn input_norm(&self) -> f64 {
        trapezoid(&self.t, &self.b_in.iter().map(|b| b.norm_sqr()).collect::<Vec<_>>())
    }

    pub fn output_norm(&self) -> f64 {
        trapezoid(&self.t, &self.b_out.iter().map(|b| b.norm_sqr()).collect::<Vec<_>>())
    }

    /// Spectrum of the outgoing field on `grid`.
    pub fn output_spectrum(&self, grid: &[f64]) -> Vec<Complex64> {
        spectrum_from_time(&self.t, &self.b_out, grid, self.t0)
    }

    /// Intensity-weighted mean time of a sampled field.
    pub fn centroid(&self, field: &[Complex64]) -> f64 {
        let dens: Vec<f64> = field.iter().map(|b| b.norm_sqr()).collect();
        let first: Vec<f64> = self.t.iter().zip(&dens).map(|(t, d)| t * d).collect();
        trapezoid(&self.t, &first) / trapezoid(&self.t, &dens)
    }
}

/// Knobs of the time-domain simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainOptions {
    pub rtol: f64,
    /// Output samples per `1/ω_max` of the detuning grid.
    pub samples_per_inverse_bandwidth: f64,
    /// Ring-down window after the pulse, in slowest cavity decay times.
    pub ringdown_decay_times: f64,
}

impl Default for TimeDomainOptions {
    fn default() -> Self {
        TimeDomainOptions {
            rtol: 1e-10,
            samples_per_inverse_bandwidth: 4.0,
            ringdown_decay_times: 40.0,
        }
    }
}

/// Slowest decay rate of the driven cavity-atom system.
fn slowest_decay(field_damping: f64, gamma: f64, g: f64) -> f64 {
    if g == 0.0 {
        return field_damping;
    }
    // Eigenvalues of [[a, -g], [g, b]].
    let (a, b) = (field_damping, gamma);
    let mean = Complex64::new(0.5 * (a + b), 0.0);
    let disc = (Complex64::new(0.25 * (a - b) * (a - b) - g * g, 0.0)).sqrt();
    (mean - disc).re.min((mean + disc).re).max(1e-3 * field_damping)
}

/// Integrates the one-sided cavity amplitude equations
///
/// ```text
/// dC_b/dt = g_q C_e - sqrt(κ) b_in(t) - (κ + κ')/2 C_b
/// dC_e/dt = -γ C_e - g_q C_b
/// b_out   = b_in + sqrt(κ) C_b
/// ```
///
/// with `b_in(t)` synthesized from the packet spectrum.
pub fn scatter_time_domain(packet: &WavePacket, cavity: &CavitySpec, q: QubitState) -> Result<TimeDomainState> {
    scatter_time_domain_with(packet, cavity, q, &TimeDomainOptions::default())
}

pub fn scatter_time_domain_with(
    packet: &WavePacket,
    cavity: &CavitySpec,
    q: QubitState,
    opts: &TimeDomainOptions,
) -> Result<TimeDomainState> {
    cavity.validate()?;
    if cavity.sidedness != Sidedness::OneSided {
        return Err(invalid("sidedness", "time-domain scattering is implemented for one-sided cavities"));
    }
    if cavity.is_blocked() {
        return Err(invalid("block_detuning", "time-domain scattering expects an unblocked cavity"));
    }
    let gq = q.coupling(cavity.g);
    let kappa = cavity.kappa;
    let sk = kappa.sqrt();
    let damping = 0.5 * (cavity.kappa + cavity.kappa_prime);
    let gamma = cavity.gamma;

    let width = packet.rms_width();
    let w_max = packet.grid().iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    if !(width > 0.0 && w_max > 0.0) {
        return Err(invalid("packet", "packet has no spectral width"));
    }
    // Gaussian |b(t)| ~ exp(-σ² t²): 8/σ puts the leading edge at e^{-64}.
    let half_span = 8.0 / width;
    let t0 = 5.0 / damping + half_span;
    let t_end = t0 + half_span + opts.ringdown_decay_times / slowest_decay(damping, gamma, gq);
    let dt = 1.0 / (opts.samples_per_inverse_bandwidth * w_max.max(damping));
    let points = (t_end / dt).ceil() as usize + 1;
    if points > 20_000_000 {
        return Err(invalid("packet", format!("time grid of {points} samples is too fine")));
    }
    let times = linspace(0.0, t_end, points);

    let synth = Synthesizer::new(packet);
    let b_in: Vec<Complex64> = times.iter().map(|&t| synth.eval(t - t0)).collect();
    let peak_in = b_in.iter().fold(0.0_f64, |m, b| m.max(b.norm()));
    let ctl = StepControl {
        rtol: opts.rtol,
        atol: opts.rtol * peak_in / sk,
        ..StepControl::default()
    };

    let gq_c = Complex64::new(gq, 0.0);
    let mut rhs = |t: f64, y: &[Complex64; 2]| {
        let drive = synth.eval(t - t0);
        [gq_c * y[1] - sk * drive - damping * y[0], -gamma * y[1] - gq_c * y[0]]
    };

    let mut stats = Stats::default();
    let mut y = [Complex64::default(); 2];
    let mut c_b = Vec::with_capacity(points);
    let mut c_e = Vec::with_capacity(points);
    c_b.push(y[0]);
    c_e.push(y[1]);
    let mut h = dt.min(0.1 / (damping + gamma + gq));
    for w in times.windows(2) {
        let (next, h_next) = integrate(&mut rhs, w[0], y, w[1], h, &ctl, &mut stats)?;
        y = next;
        h = h_next;
        c_b.push(y[0]);
        c_e.push(y[1]);
    }
    let b_out = b_in.iter().zip(&c_b).map(|(b, c)| b + sk * c).collect();
    Ok(TimeDomainState {
        t: times,
        b_in,
        b_out,
        c_b,
        c_e,
        t0,
        steps_accepted: stats.accepted,
        steps_rejected: stats.rejected,
    })
}

/// Relative L² distance between the time-domain output spectrum and the
/// frequency-domain prediction `R(ω)Φ(ω)`.
pub fn time_domain_discrepancy(state: &TimeDomainState, packet: &WavePacket, cavity: &CavitySpec, q: QubitState) -> Result<f64> {
    let predicted = packet.scattered(|w| one_sided_reflection(w, cavity, q))?;
    let measured = state.output_spectrum(packet.grid());
    let diff: Vec<f64> = measured
        .iter()
        .zip(predicted.amplitude())
        .map(|(m, p)| (m - p).norm_sqr())
        .collect();
    Ok((trapezoid(packet.grid(), &diff) / packet.norm_sqr()).sqrt())
}
