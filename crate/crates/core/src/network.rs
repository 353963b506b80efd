//! N-cavity interferometer: `N - 1` two-sided cavities followed by one
//! one-sided cavity.
//!
//! The photon enters the front rail at cavity 1 (port `R^1`) and leaves on
//! the back rail at cavity 1 (port `L^1`). On the front rail, reflection off
//! cavity `k` sends the photon on to cavity `k + 1` and transmission drops it
//! onto the back rail towards the exit. On the back rail, reflection continues
//! towards the exit and transmission re-injects onto the front rail towards
//! cavity `k + 1`. The one-sided cavity turns the photon around.
//!
//! Forward segment `k` (front rail, `k -> k+1`) carries noise phase
//! `phi_{2k-1}`, return segment `k` (back rail, `k+1 -> k`) carries `phi_{2k}`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::components::{ideal_coefficients, scatter_coefficients, CavitySpec, QubitState, Sidedness, DEFAULT_BLOCK_DETUNING_KAPPA};
use crate::decoupling::PhaseExpression;
use crate::error::{invalid, Error, Result};

/// Propagation between neighbouring cavities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PathSegment {
    /// Delay; contributes `exp(i omega tau)`.
    pub tau: f64,
    /// Amplitude loss exponent; contributes `exp(-eta)` per traversal.
    pub eta: f64,
    /// Static phase offset.
    pub phi: f64,
}

impl PathSegment {
    pub fn new(tau: f64, eta: f64, phi: f64) -> Result<Self> {
        let s = PathSegment { tau, eta, phi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(invalid("tau", format!("must be finite and >= 0, got {}", self.tau)));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(invalid("eta", format!("must be finite and >= 0, got {}", self.eta)));
        }
        if !self.phi.is_finite() {
            return Err(invalid("phi", format!("must be finite, got {}", self.phi)));
        }
        Ok(())
    }

    pub fn factor(&self, omega: f64) -> Complex64 {
        Complex64::new(-self.eta, omega * self.tau + self.phi).exp()
    }
}

/// How cavity responses are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementModel {
    /// Closed-form input-output coefficients.
    #[default]
    Physical,
    /// `R, T` in `{0, +-1}`: the infinite-cooperativity, zero-bandwidth limit.
    Ideal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// Positions `1..N-1` two-sided, position `N` one-sided.
    pub cavities: Vec<CavitySpec>,
    /// Front rail, cavity `k -> k+1`.
    pub forward: Vec<PathSegment>,
    /// Back rail, cavity `k+1 -> k`.
    pub back: Vec<PathSegment>,
    #[serde(default)]
    pub model: ElementModel,
    /// Shift applied by [`NetworkSpec::with_blocked`], in units of each
    /// cavity's `kappa`.
    #[serde(default = "default_block_detuning")]
    pub block_detuning_kappa: f64,
}

fn default_block_detuning() -> f64 {
    DEFAULT_BLOCK_DETUNING_KAPPA
}

impl NetworkSpec {
    pub fn new(cavities: Vec<CavitySpec>, forward: Vec<PathSegment>, back: Vec<PathSegment>) -> Result<Self> {
        let spec = NetworkSpec {
            cavities,
            forward,
            back,
            model: ElementModel::Physical,
            block_detuning_kappa: DEFAULT_BLOCK_DETUNING_KAPPA,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Identical cavities and identical segments.
    pub fn uniform(n: usize, g: f64, kappa: f64, kappa_prime: f64, gamma: f64, segment: PathSegment) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "network needs at least one cavity"));
        }
        let mut cavities = vec![CavitySpec::two_sided(g, kappa, kappa_prime, gamma)?; n - 1];
        cavities.push(CavitySpec::one_sided(g, kappa, kappa_prime, gamma)?);
        Self::new(cavities, vec![segment; n - 1], vec![segment; n - 1])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cavities.len();
        if n == 0 {
            return Err(invalid("cavities", "network needs at least one cavity"));
        }
        if n > 24 {
            return Err(invalid("cavities", format!("{n} cavities exceeds the supported 24")));
        }
        for (i, c) in self.cavities.iter().enumerate() {
            c.validate()?;
            let want = if i + 1 == n { Sidedness::OneSided } else { Sidedness::TwoSided };
            if c.sidedness != want {
                return Err(invalid(
                    "cavities",
                    format!("cavity {} must be {:?}, found {:?}", i + 1, want, c.sidedness),
                ));
            }
        }
        if self.forward.len() != n - 1 || self.back.len() != n - 1 {
            return Err(invalid(
                "segments",
                format!(
                    "need {} forward and {} return segments, got {} and {}",
                    n - 1,
                    n - 1,
                    self.forward.len(),
                    self.back.len()
                ),
            ));
        }
        for s in self.forward.iter().chain(&self.back) {
            s.validate()?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.cavities.len()
    }

    pub fn with_model(mut self, model: ElementModel) -> Self {
        self.model = model;
        self
    }

    /// Sets `phi_1 .. phi_{2(N-1)}`: odd indices on the front rail, even on
    /// the back rail.
    pub fn with_phases(mut self, phases: &[f64]) -> Result<Self> {
        let want = 2 * (self.n() - 1);
        if phases.len() != want {
            return Err(invalid("phases", format!("expected {want} phases, got {}", phases.len())));
        }
        for (k, pair) in phases.chunks(2).enumerate() {
            self.forward[k].phi = pair[0];
            self.back[k].phi = pair[1];
        }
        Ok(self)
    }

    /// Current `phi_1 .. phi_{2(N-1)}`.
    pub fn phases(&self) -> Vec<f64> {
        self.forward
            .iter()
            .zip(&self.back)
            .flat_map(|(f, b)| [f.phi, b.phi])
            .collect()
    }

    pub fn with_block_detuning(mut self, detuning_kappa: f64) -> Result<Self> {
        if !(detuning_kappa.is_finite() && detuning_kappa > 0.0) {
            return Err(invalid("block_detuning_kappa", "must be finite and positive"));
        }
        self.block_detuning_kappa = detuning_kappa;
        Ok(self)
    }

    /// Blocks the listed cavities (1-indexed) and unblocks all others.
    pub fn with_blocked(mut self, blocked: &BTreeSet<usize>) -> Result<Self> {
        let n = self.n();
        if let Some(&bad) = blocked.iter().find(|&&i| i == 0 || i > n) {
            return Err(invalid("blocked", format!("cavity index {bad} out of 1..={n}")));
        }
        for (i, c) in self.cavities.iter_mut().enumerate() {
            *c = if blocked.contains(&(i + 1)) {
                let shift = self.block_detuning_kappa * c.kappa;
                c.unblocked().with_block_detuning(shift)
            } else {
                c.unblocked()
            };
        }
        Ok(self)
    }

    pub fn blocked_set(&self) -> BTreeSet<usize> {
        self.cavities
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_blocked())
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Sum of all segment delays.
    pub fn total_delay(&self) -> f64 {
        self.forward.iter().chain(&self.back).map(|s| s.tau).sum()
    }

    /// Smallest cavity damping rate; sets the time scale of the network.
    pub fn kappa_scale(&self) -> f64 {
        self.cavities.iter().map(|c| c.kappa).fold(f64::INFINITY, f64::min)
    }
}

/// Computational basis state `|q_1 q_2 ... q_N>`; `q_1` is the most
/// significant bit of [`BasisState::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    index: u32,
    n: u8,
}

impl BasisState {
    pub fn new(index: usize, n: usize) -> Self {
        assert!((1..=24).contains(&n), "basis states support 1..=24 qubits");
        assert!(index < (1usize << n), "index {index} out of range for {n} qubits");
        BasisState {
            index: index as u32,
            n: n as u8,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Self::new(index, bits.len())
    }

    pub fn all_ones(n: usize) -> Self {
        Self::new((1usize << n) - 1, n)
    }

    pub fn all(n: usize) -> impl Iterator<Item = BasisState> {
        (0..1usize << n).map(move |i| BasisState::new(i, n))
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn n(self) -> usize {
        self.n as usize
    }

    /// State of qubit `i`, 1-indexed.
    pub fn qubit(self, i: usize) -> QubitState {
        assert!((1..=self.n()).contains(&i));
        QubitState::from_bit(self.index >> (self.n() - i) & 1 == 1)
    }

    pub fn flip(self, i: usize) -> Self {
        assert!((1..=self.n()).contains(&i));
        BasisState {
            index: self.index ^ (1 << (self.n() - i)),
            n: self.n,
        }
    }

    pub fn is_all_ones(self) -> bool {
        self.index() == (1usize << self.n()) - 1
    }

    /// Length of the leading run of `|1>` qubits.
    pub fn leading_ones(self) -> usize {
        (1..=self.n()).take_while(|&i| self.qubit(i).is_one()).count()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.n() {
            f.write_str(if self.qubit(i).is_one() { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BasisState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 24 {
            return Err(invalid("state", format!("expected 1..=24 binary digits, got {s:?}")));
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(invalid("state", format!("not a binary string: {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(&bits))
    }
}

#[derive(Debug, Clone, Copy)]
struct Element {
    r: Complex64,
    t: Complex64,
}

fn element(spec: &NetworkSpec, position: usize, q: QubitState, omega: f64) -> Result<Element> {
    let cavity = &spec.cavities[position];
    let c = match spec.model {
        ElementModel::Physical => scatter_coefficients(omega, cavity, q)?,
        ElementModel::Ideal => ideal_coefficients(cavity.sidedness, q, cavity.is_blocked()),
    };
    Ok(Element {
        r: c.reflection,
        t: c.transmission.unwrap_or_default(),
    })
}

fn check_state(spec: &NetworkSpec, state: BasisState) -> Result<()> {
    if state.n() != spec.n() {
        return Err(Error::QubitCount {
            expected: spec.n(),
            got: state.n(),
        });
    }
    Ok(())
}

/// Port amplitudes of the network graph at one detuning. Nodes `0..N` are
/// arrivals at the front side of cavity `k + 1`, nodes `N..2N-1` arrivals at
/// the back side of cavity `k - N + 1`.
struct Graph {
    n: usize,
    elements: Vec<Element>,
    forward: Vec<Complex64>,
    back: Vec<Complex64>,
}

impl Graph {
    fn build(omega: f64, spec: &NetworkSpec, state: BasisState) -> Result<Self> {
        spec.validate()?;
        check_state(spec, state)?;
        if !omega.is_finite() {
            return Err(Error::NonFiniteDetuning(omega));
        }
        let n = spec.n();
        let elements = (0..n)
            .map(|k| element(spec, k, state.qubit(k + 1), omega))
            .collect::<Result<Vec<_>>>()?;
        Ok(Graph {
            n,
            elements,
            forward: spec.forward.iter().map(|s| s.factor(omega)).collect(),
            back: spec.back.iter().map(|s| s.factor(omega)).collect(),
        })
    }

    fn front(&self, k: usize) -> usize {
        k - 1
    }

    fn rear(&self, k: usize) -> usize {
        self.n + k - 1
    }

    fn nodes(&self) -> usize {
        2 * self.n - 1
    }

    /// Outgoing edges from a node: `(target, gain)`, `None` target = exit.
    fn edges(&self, node: usize) -> Vec<(Option<usize>, Complex64)> {
        let n = self.n;
        if node < n {
            let k = node + 1;
            let e = self.elements[k - 1];
            if k == n {
                // One-sided cavity: reflection onto the back rail.
                if n == 1 {
                    vec![(None, e.r)]
                } else {
                    vec![(Some(self.rear(n - 1)), self.back[n - 2] * e.r)]
                }
            } else {
                let transmitted = if k == 1 {
                    (None, e.t)
                } else {
                    (Some(self.rear(k - 1)), self.back[k - 2] * e.t)
                };
                vec![(Some(self.front(k + 1)), self.forward[k - 1] * e.r), transmitted]
            }
        } else {
            let k = node - n + 1;
            let e = self.elements[k - 1];
            let reflected = if k == 1 {
                (None, e.r)
            } else {
                (Some(self.rear(k - 1)), self.back[k - 2] * e.r)
            };
            vec![reflected, (Some(self.front(k + 1)), self.forward[k - 1] * e.t)]
        }
    }
}

/// Overall amplitude `T(omega, {g_{q_i}})` from input port `R^1` to output
/// port `L^1`, by solving the port-amplitude equations of the whole graph.
pub fn basis_amplitude(omega: f64, spec: &NetworkSpec, state: BasisState) -> Result<Complex64> {
    let graph = Graph::build(omega, spec, state)?;
    let edges: Vec<_> = (0..graph.nodes()).map(|node| graph.edges(node)).collect();
    // Only ports the photon can reach enter the solve; ideal elements can
    // leave unreachable lossless loops that would make the full system singular.
    let start = graph.front(1);
    let mut slot = vec![usize::MAX; edges.len()];
    let mut order = vec![start];
    slot[start] = 0;
    let mut i = 0;
    while i < order.len() {
        for &(target, gain) in &edges[order[i]] {
            if let Some(t) = target {
                if gain != Complex64::default() && slot[t] == usize::MAX {
                    slot[t] = order.len();
                    order.push(t);
                }
            }
        }
        i += 1;
    }
    let m = order.len();
    // x = G x + e_1 ; exit = sum of gains into the exit.
    let mut a = DMatrix::<Complex64>::identity(m, m);
    let mut exit = DVector::<Complex64>::zeros(m);
    for (col, &node) in order.iter().enumerate() {
        for &(target, gain) in &edges[node] {
            match target {
                Some(t) if slot[t] != usize::MAX => a[(slot[t], col)] -= gain,
                Some(_) => {}
                None => exit[col] += gain,
            }
        }
    }
    let mut rhs = DVector::<Complex64>::zeros(m);
    rhs[0] = Complex64::new(1.0, 0.0);
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("singular network equations".into()))?;
    let out = exit.dot(&x);
    if !out.is_finite() {
        return Err(Error::Internal("non-finite network amplitude".into()));
    }
    Ok(out)
}

/// Truncated path sum and the amplitude still in flight when it stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSum {
    pub value: Complex64,
    /// Sum of `|amplitude|` over photon paths cut at `max_bounces`.
    pub truncation: f64,
}

/// Sums contributions of all directed photon paths with at most
/// `max_bounces` cavity encounters.
pub fn basis_amplitude_pathsum(omega: f64, spec: &NetworkSpec, state: BasisState, max_bounces: usize) -> Result<PathSum> {
    if max_bounces == 0 {
        return Err(invalid("max_bounces", "must be >= 1"));
    }
    let graph = Graph::build(omega, spec, state)?;
    let m = graph.nodes();
    let edges: Vec<_> = (0..m).map(|node| graph.edges(node)).collect();
    let mut arriving = vec![Complex64::default(); m];
    arriving[graph.front(1)] = Complex64::new(1.0, 0.0);
    let mut value = Complex64::default();
    for _ in 0..max_bounces {
        let mut next = vec![Complex64::default(); m];
        for (node, amp) in arriving.iter().enumerate() {
            if *amp == Complex64::default() {
                continue;
            }
            for &(target, gain) in &edges[node] {
                match target {
                    Some(t) => next[t] += gain * amp,
                    None => value += gain * amp,
                }
            }
        }
        arriving = next;
    }
    Ok(PathSum {
        value,
        truncation: arriving.iter().map(|a| a.norm()).sum(),
    })
}

fn checked_ratio(num: Complex64, den: Complex64) -> Result<Complex64> {
    if den.norm() == 0.0 || !den.is_finite() {
        return Err(Error::Degenerate(format!("two-cavity closed form: denominator {den}")));
    }
    Ok(num / den)
}

/// Printed two-cavity transmission formula (`kappa' = 0`, identical
/// `kappa`, `gamma`), evaluated term by term as published.
///
/// Note: this expression is not passive (it exceeds unit modulus at
/// `gamma = 0`); [`cascade_closed_form`] is the expression the network
/// reproduces.
pub fn two_cavity_closed_form(omega: f64, g1: f64, g2: f64, kappa: f64, gamma: f64) -> Result<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let a = Complex64::new(gamma, -omega);
    let (g1s, g2s, w, k) = (g1 * g1, g2 * g2, omega, kappa);
    // num = 2 g1² g2² - A·n, den = 2 g1² g2² + A·d
    let n = 2.0 * g1s * (2.0 * k + i * w) + 2.0 * g2s * (k + 2.0 * i * w) + w * a * (2.0 * w - 5.0 * i * k);
    let d = 2.0 * g1s * (2.0 * k - i * w) + 2.0 * g2s * (k - i * w) - w * a * (2.0 * w + 5.0 * i * k);
    closed_form_ratio(g1s * g2s, g1s + g2s == 0.0, a, n, d, w, k)
}

/// Two-cavity transmission obtained by eliminating the port amplitudes of
/// the cascade (two-sided coupling `g_front`, one-sided coupling `g_end`,
/// `kappa' = 0`, trivial segments).
pub fn cascade_closed_form(omega: f64, g_front: f64, g_end: f64, kappa: f64, gamma: f64) -> Result<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let a = Complex64::new(gamma, -omega);
    let (gf, ge, w, k) = (g_front * g_front, g_end * g_end, omega, kappa);
    let n = gf * (k + 2.0 * i * w) + 2.0 * ge * (2.0 * k + i * w) + w * a * (2.0 * w - 5.0 * i * k);
    let d = gf * (k - 2.0 * i * w) + 2.0 * ge * (2.0 * k - i * w) - w * a * (2.0 * w + 5.0 * i * k);
    closed_form_ratio(gf * ge, gf + ge == 0.0, a, n, d, w, k)
}

/// `(2P - A n) / (2P + A d)`, cancelling the common factors of the
/// uncoupled cases so that `omega = 0` stays finite.
fn closed_form_ratio(p: f64, empty: bool, a: Complex64, n: Complex64, d: Complex64, w: f64, k: f64) -> Result<Complex64> {
    if p != 0.0 {
        return checked_ratio(2.0 * p - a * n, 2.0 * p + a * d);
    }
    if empty {
        // Only the A² w terms survive.
        let i5k = Complex64::new(0.0, 5.0 * k);
        return checked_ratio(2.0 * w - i5k, 2.0 * w + i5k);
    }
    checked_ratio(-n, d)
}

/// Phase acquired by `state` when every element takes its ideal value.
///
/// `pi` unless the state is `1^N`, plus the noise phases of every segment
/// the single loop-free path traverses. Blocked cavities reflect with `+1`.
pub fn ideal_phase_table(spec: &NetworkSpec, state: BasisState) -> Result<PhaseExpression> {
    spec.validate()?;
    check_state(spec, state)?;
    let n = spec.n();
    let reflects = |k: usize| spec.cavities[k - 1].is_blocked() || state.qubit(k).is_one();
    let mut phase = PhaseExpression::zero(2 * (n - 1));
    enum At {
        Front(usize),
        Back(usize),
    }
    let mut at = At::Front(1);
    // A loop-free path visits each port at most once.
    for _ in 0..=2 * n {
        match at {
            At::Front(k) if k == n => {
                if !reflects(k) {
                    phase.add_pi(1);
                }
                if n == 1 {
                    return Ok(phase);
                }
                phase.add_phi(2 * (n - 1), 1);
                at = At::Back(n - 1);
            }
            At::Front(k) => {
                if reflects(k) {
                    phase.add_phi(2 * k - 1, 1);
                    at = At::Front(k + 1);
                } else {
                    phase.add_pi(1);
                    if k == 1 {
                        return Ok(phase);
                    }
                    phase.add_phi(2 * (k - 1), 1);
                    at = At::Back(k - 1);
                }
            }
            At::Back(k) => {
                if reflects(k) {
                    if k == 1 {
                        return Ok(phase);
                    }
                    phase.add_phi(2 * (k - 1), 1);
                    at = At::Back(k - 1);
                } else {
                    phase.add_pi(1);
                    phase.add_phi(2 * k - 1, 1);
                    at = At::Front(k + 1);
                }
            }
        }
    }
    Err(Error::Internal("ideal path did not terminate".into()))
}

/// Per-state transfer functions sampled on a detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisAmplitudeSet {
    pub grid: Vec<f64>,
    /// Indexed by [`BasisState::index`], then by grid position.
    pub amplitudes: Vec<Vec<Complex64>>,
    pub n: usize,
}

impl BasisAmplitudeSet {
    pub fn build(spec: &NetworkSpec, grid: &[f64]) -> Result<Self> {
        spec.validate()?;
        let n = spec.n();
        let amplitudes = BasisState::all(n)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|s| grid.iter().map(|&w| basis_amplitude(w, spec, s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(BasisAmplitudeSet {
            grid: grid.to_vec(),
            amplitudes,
            n,
        })
    }

    pub fn get(&self, state: BasisState) -> &[Complex64] {
        &self.amplitudes[state.index()]
    }
}
