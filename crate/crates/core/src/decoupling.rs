//! Dynamical decoupling against slow path-phase noise.
//!
//! The symbolic part works with exact integer phase expressions
//! `a·π + Σ c_j φ_j`. A pulse `Π_i = exp(iπσ_x/2) = iσ_x` flips qubit `i` and
//! contributes a global quarter turn, so `Π_i U Π_i` is `U` with bit `i`
//! flipped times `e^{iπ}`.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fidelity::{photon_overlaps, TargetGate};
use crate::network::{BasisState, NetworkSpec};
use crate::pulses::WavePacket;

/// Name of the random generator used by the Monte Carlo.
pub const RNG_ALGORITHM: &str = "ChaCha20 (seed, stream = sample index)";

/// `pi·π + Σ phi[j-1]·φ_j` with `pi` reduced mod 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseExpression {
    pi: i64,
    phi: Vec<i64>,
}

impl PhaseExpression {
    pub fn zero(phases: usize) -> Self {
        PhaseExpression {
            pi: 0,
            phi: vec![0; phases],
        }
    }

    pub fn new(pi: i64, phi: Vec<i64>) -> Self {
        PhaseExpression {
            pi: pi.rem_euclid(2),
            phi,
        }
    }

    pub fn pi(&self) -> i64 {
        self.pi
    }

    pub fn phi(&self) -> &[i64] {
        &self.phi
    }

    pub fn add_pi(&mut self, count: i64) {
        self.pi = (self.pi + count).rem_euclid(2);
    }

    /// Adds `coeff·φ_index`, `index` 1-based.
    pub fn add_phi(&mut self, index: usize, coeff: i64) {
        assert!((1..=self.phi.len()).contains(&index), "phase index {index} out of range");
        self.phi[index - 1] += coeff;
    }

    pub fn is_phi_free(&self) -> bool {
        self.phi.iter().all(|&c| c == 0)
    }

    pub fn is_zero(&self) -> bool {
        self.pi == 0 && self.is_phi_free()
    }

    pub fn evaluate(&self, phases: &[f64]) -> f64 {
        assert_eq!(phases.len(), self.phi.len(), "phase vector length");
        self.pi as f64 * std::f64::consts::PI + self.phi.iter().zip(phases).map(|(&c, p)| c as f64 * p).sum::<f64>()
    }
}

impl Add for &PhaseExpression {
    type Output = PhaseExpression;

    fn add(self, rhs: &PhaseExpression) -> PhaseExpression {
        assert_eq!(self.phi.len(), rhs.phi.len());
        PhaseExpression::new(
            self.pi + rhs.pi,
            self.phi.iter().zip(&rhs.phi).map(|(a, b)| a + b).collect(),
        )
    }
}

impl Sub for &PhaseExpression {
    type Output = PhaseExpression;

    fn sub(self, rhs: &PhaseExpression) -> PhaseExpression {
        self + &(-rhs)
    }
}

impl Neg for &PhaseExpression {
    type Output = PhaseExpression;

    fn neg(self) -> PhaseExpression {
        PhaseExpression::new(-self.pi, self.phi.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for PhaseExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        if self.pi != 0 {
            terms.push("π".to_string());
        }
        for (j, &c) in self.phi.iter().enumerate() {
            match c {
                0 => {}
                1 => terms.push(format!("φ{}", j + 1)),
                -1 => terms.push(format!("-φ{}", j + 1)),
                c => terms.push(format!("{c}φ{}", j + 1)),
            }
        }
        if terms.is_empty() {
            return f.write_str("0");
        }
        let mut out = terms[0].clone();
        for t in &terms[1..] {
            match t.strip_prefix('-') {
                Some(rest) => out.push_str(&format!(" - {rest}")),
                None => out.push_str(&format!(" + {t}")),
            }
        }
        f.write_str(&out)
    }
}

/// Diagonal unitary `Σ_s e^{i phase(s)} |s><s|` times `e^{i global}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalGate {
    pub n: usize,
    /// Indexed by [`BasisState::index`].
    pub phases: Vec<PhaseExpression>,
    /// State-independent phase collected from pulse pairs.
    pub global: PhaseExpression,
}

impl DiagonalGate {
    pub fn phase(&self, state: BasisState) -> &PhaseExpression {
        &self.phases[state.index()]
    }

    fn from_fn(n: usize, f: impl Fn(BasisState) -> PhaseExpression) -> Self {
        DiagonalGate {
            n,
            phases: BasisState::all(n).map(f).collect(),
            global: PhaseExpression::zero(2 * (n - 1)),
        }
    }
}

/// `Π_i`, 1-indexed qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseOp {
    pub qubit: usize,
}

fn check_n(n: usize) -> Result<()> {
    if !(2..=24).contains(&n) {
        return Err(invalid("n", format!("decoupling needs 2..=24 qubits, got {n}")));
    }
    Ok(())
}

/// `φ_{2j-1} + φ_{2j}` added to `e`.
fn add_pair(e: &mut PhaseExpression, j: usize) {
    e.add_phi(2 * j - 1, 1);
    e.add_phi(2 * j, 1);
}

/// Noisy C-PHASE: `π` on `1^N` plus the phases of every segment pair the
/// leading run of `|1>` qubits reaches.
pub fn build_u_cp(n: usize) -> Result<DiagonalGate> {
    check_n(n)?;
    Ok(DiagonalGate::from_fn(n, |s| {
        let mut e = PhaseExpression::zero(2 * (n - 1));
        if s.is_all_ones() {
            e.add_pi(1);
        }
        for j in 1..=s.leading_ones().min(n - 1) {
            add_pair(&mut e, j);
        }
        e
    }))
}

/// Number of leading cavities blocked in addition to cavity `N`, if
/// `blocked` is one of the supported patterns `{N} ∪ {1..i}`, `i ≤ N - 2`.
fn block_prefix(n: usize, blocked: &BTreeSet<usize>) -> Result<usize> {
    let unsupported = || Error::UnsupportedBlockedSet(blocked.iter().copied().collect());
    if !blocked.contains(&n) {
        return Err(unsupported());
    }
    let i = blocked.len() - 1;
    if i > n - 2 || (1..=i).any(|j| !blocked.contains(&j)) {
        return Err(unsupported());
    }
    Ok(i)
}

/// Gate applied by a photon while cavity `N` and cavities `1..i` are
/// detuned: with `i` leading cavities skipped, the photon probes the run of
/// `|1>` qubits starting at `i + 1`.
pub fn build_u_block(n: usize, blocked: &BTreeSet<usize>) -> Result<DiagonalGate> {
    check_n(n)?;
    let i = block_prefix(n, blocked)?;
    Ok(DiagonalGate::from_fn(n, |s| {
        let mut e = PhaseExpression::zero(2 * (n - 1));
        let run = (i + 1..=n - 1).take_while(|&k| s.qubit(k).is_one()).count();
        for m in i + 1..=i + run {
            add_pair(&mut e, m);
        }
        if i + run == n - 1 {
            e.add_pi(1);
        }
        e
    }))
}

/// `Π_i · U · Π_i`: bit `i` flipped, `π` added to the global ledger.
pub fn conjugate_by_pulse(gate: &DiagonalGate, p: PulseOp) -> Result<DiagonalGate> {
    if !(1..=gate.n).contains(&p.qubit) {
        return Err(invalid("qubit", format!("pulse on qubit {} of {}", p.qubit, gate.n)));
    }
    let mut global = gate.global.clone();
    global.add_pi(1);
    Ok(DiagonalGate {
        n: gate.n,
        phases: BasisState::all(gate.n)
            .map(|s| gate.phases[s.flip(p.qubit).index()].clone())
            .collect(),
        global,
    })
}

/// One operation of a decoupling sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceStep {
    Pulse(PulseOp),
    /// One photon pass with the listed cavities detuned.
    Photon { gate: DiagonalGate, blocked: BTreeSet<usize> },
}

/// Pulse qubit and blocked set of each photon in a decoupling sequence, in
/// time order.
pub fn photon_schedule(n: usize) -> Result<Vec<(usize, BTreeSet<usize>)>> {
    check_n(n)?;
    let mut out = vec![(n, BTreeSet::new())];
    for j in 1..n {
        let mut blocked: BTreeSet<usize> = (1..j).collect();
        blocked.insert(n);
        out.push((j, blocked));
    }
    Ok(out)
}

/// `2N` pulses and `N` photons, in time order: `Π_N U_CP Π_N`, then
/// `Π_j U_B Π_j` for `j = 1..N-1` with cavities `N, 1..j-1` detuned.
pub fn dd_sequence(n: usize) -> Result<Vec<SequenceStep>> {
    let mut steps = Vec::with_capacity(3 * n);
    for (q, blocked) in photon_schedule(n)? {
        let gate = if blocked.is_empty() {
            build_u_cp(n)?
        } else {
            build_u_block(n, &blocked)?
        };
        steps.push(SequenceStep::Pulse(PulseOp { qubit: q }));
        steps.push(SequenceStep::Photon { gate, blocked });
        steps.push(SequenceStep::Pulse(PulseOp { qubit: q }));
    }
    Ok(steps)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefocusReport {
    pub refocused: bool,
    /// Phase common to all basis states, including pulse contributions.
    pub global_phase: PhaseExpression,
    /// Net bit flips left by the pulses, as a basis-state index.
    pub residual_flip: usize,
    /// Relative phase of each state against `|0...0>`.
    pub relative: Vec<PhaseExpression>,
}

/// Composes a sequence exactly. The product maps `|s>` to
/// `e^{iθ(s)} |s ⊕ mask>`; it is the C-PHASE up to a global phase iff the
/// mask is empty and `θ(s) - θ(0)` is `π` on `1^N` and `0` elsewhere.
pub fn verify_refocus(steps: &[SequenceStep]) -> Result<RefocusReport> {
    let n = steps
        .iter()
        .find_map(|s| match s {
            SequenceStep::Photon { gate, .. } => Some(gate.n),
            _ => None,
        })
        .ok_or_else(|| invalid("sequence", "no photon in sequence"))?;
    let dim = 1usize << n;
    let mut mask = 0usize;
    let mut quarter_turns = 0i64;
    let mut theta = vec![PhaseExpression::zero(2 * (n - 1)); dim];
    for step in steps {
        match step {
            SequenceStep::Pulse(p) => {
                if !(1..=n).contains(&p.qubit) {
                    return Err(invalid("qubit", format!("pulse on qubit {} of {n}", p.qubit)));
                }
                mask ^= 1 << (n - p.qubit);
                quarter_turns += 1;
            }
            SequenceStep::Photon { gate, .. } => {
                if gate.n != n {
                    return Err(Error::QubitCount { expected: n, got: gate.n });
                }
                for (s, t) in theta.iter_mut().enumerate() {
                    *t = &*t + &(&gate.phases[s ^ mask] + &gate.global);
                }
            }
        }
    }
    // Pulses contribute i each; with the mask cleared their count is even.
    let mut global = theta[0].clone();
    global.add_pi(quarter_turns / 2);
    let relative: Vec<PhaseExpression> = theta.iter().map(|t| t - &theta[0]).collect();
    let refocused = mask == 0
        && quarter_turns % 2 == 0
        && relative.iter().enumerate().all(|(s, r)| {
            let want = i64::from(s == dim - 1);
            r.is_phi_free() && r.pi() == want
        });
    Ok(RefocusReport {
        refocused,
        global_phase: global,
        residual_flip: mask,
        relative,
    })
}

/// How the path phases vary between the photons of one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// One draw per sequence.
    #[default]
    QuasiStatic,
    /// Fresh draw for every photon.
    PerPhoton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub rng: String,
}

fn sample_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn draw(rng: &mut ChaCha20Rng, base: &[f64], delta: f64) -> Vec<f64> {
    base.iter()
        .map(|b| {
            let z: f64 = StandardNormal.sample(rng);
            b + delta * z
        })
        .collect()
}

/// One decoupling photon: its pulse qubit, blocked network and reference
/// delay fixed from the noise-free network.
struct PhotonPass {
    qubit: usize,
    spec: NetworkSpec,
    xi: f64,
}

fn photon_passes(spec: &NetworkSpec, packet: &WavePacket) -> Result<Vec<PhotonPass>> {
    photon_schedule(spec.n())?
        .into_iter()
        .map(|(qubit, blocked)| {
            let blocked_spec = spec.clone().with_blocked(&blocked)?;
            let (_, xi) = photon_overlaps(&blocked_spec, packet, None)?;
            Ok(PhotonPass {
                qubit,
                spec: blocked_spec,
                xi,
            })
        })
        .collect()
}

/// Fidelity of the decoupled gate: each photon is projected on its own
/// reference mode and contributes `-O_p(s ⊕ bit q)` to the amplitude of
/// state `s`.
fn dd_fidelity(passes: &[PhotonPass], packet: &WavePacket, phases: &mut dyn FnMut() -> Vec<f64>) -> Result<f64> {
    let n = passes[0].spec.n();
    let mut amp = vec![Complex64::new(1.0, 0.0); 1 << n];
    for pass in passes {
        let spec = pass.spec.clone().with_phases(&phases())?;
        let (o, _) = photon_overlaps(&spec, packet, Some(pass.xi))?;
        let bit = 1 << (n - pass.qubit);
        for (s, a) in amp.iter_mut().enumerate() {
            *a *= -o[s ^ bit];
        }
    }
    let signs = TargetGate::new(n).signs();
    let avg: Complex64 = amp.iter().zip(&signs).map(|(a, s)| a * *s).sum::<Complex64>() / amp.len() as f64;
    Ok(avg.norm_sqr())
}

/// Fidelity of the decoupling sequence for fixed path phases.
pub fn dd_gate_fidelity(spec: &NetworkSpec, packet: &WavePacket) -> Result<f64> {
    let passes = photon_passes(spec, packet)?;
    let phases = spec.phases();
    dd_fidelity(&passes, packet, &mut || phases.clone())
}

/// Mean gate fidelity over Gaussian path-phase noise `φ_j += δ z_j`.
///
/// Sample `k` draws from a ChaCha20 stream `k` keyed by `seed`, so results
/// do not depend on the number of worker threads.
pub fn noisy_fidelity_mc(
    spec: &NetworkSpec,
    packet: &WavePacket,
    delta: f64,
    samples: usize,
    with_dd: bool,
    seed: u64,
) -> Result<McResult> {
    noisy_fidelity_mc_with(spec, packet, delta, samples, with_dd, seed, NoiseMode::QuasiStatic)
}

pub fn noisy_fidelity_mc_with(
    spec: &NetworkSpec,
    packet: &WavePacket,
    delta: f64,
    samples: usize,
    with_dd: bool,
    seed: u64,
    mode: NoiseMode,
) -> Result<McResult> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(invalid("delta", format!("must be >= 0, got {delta}")));
    }
    if samples == 0 {
        return Err(invalid("samples", "must be >= 1"));
    }
    spec.validate()?;
    let base = spec.phases();
    let passes = if with_dd { Some(photon_passes(spec, packet)?) } else { None };
    let values = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(seed, k);
            match &passes {
                None => {
                    let noisy = spec.clone().with_phases(&draw(&mut rng, &base, delta))?;
                    Ok(crate::fidelity::gate_fidelity(&noisy, packet)?.fidelity)
                }
                Some(passes) => {
                    let fixed = draw(&mut rng, &base, delta);
                    let mut next = || match mode {
                        NoiseMode::QuasiStatic => fixed.clone(),
                        NoiseMode::PerPhoton => draw(&mut rng, &base, delta),
                    };
                    dd_fidelity(passes, packet, &mut next)
                }
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    // Offset form: identical samples reproduce their value exactly.
    let mean = values[0] + values.iter().map(|v| v - values[0]).sum::<f64>() / samples as f64;
    let stderr = if samples > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        (var / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(McResult {
        mean,
        stderr,
        samples,
        seed,
        rng: RNG_ALGORITHM.to_string(),
    })
}
