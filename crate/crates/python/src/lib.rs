//! Python bindings for the cphase simulator.

use std::collections::BTreeSet;

use cphase_core::components::{scatter_coefficients, CavitySpec, QubitState, Sidedness};
use cphase_core::decoupling::{dd_sequence, noisy_fidelity_mc, verify_refocus};
use cphase_core::fidelity::{self, ExpansionSettings, ExpansionTerm};
use cphase_core::network::{basis_amplitude, ideal_phase_table, BasisState, ElementModel, NetworkSpec, PathSegment};
use cphase_core::pulses::{frequency_grid, WavePacket, DEFAULT_GRID_HALF_WIDTH};
use cphase_core::{Complex64, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. }
        | Error::Coverage(_)
        | Error::GridMismatch(_)
        | Error::UnsupportedBlockedSet(_)
        | Error::QubitCount { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn qubit(q: u8) -> PyResult<QubitState> {
    match q {
        0 => Ok(QubitState::Zero),
        1 => Ok(QubitState::One),
        _ => Err(PyValueError::new_err(format!("qubit must be 0 or 1, got {q}"))),
    }
}

/// One cavity-qubit node. Rates share one angular-frequency unit.
#[pyclass(name = "Cavity", module = "cphase", skip_from_py_object)]
#[derive(Clone)]
pub struct PyCavity {
    inner: CavitySpec,
}

#[pymethods]
impl PyCavity {
    #[new]
    #[pyo3(signature = (g, kappa, kappa_prime = 0.0, gamma = 0.0, two_sided = false))]
    fn new(g: f64, kappa: f64, kappa_prime: f64, gamma: f64, two_sided: bool) -> PyResult<Self> {
        let sided = if two_sided { Sidedness::TwoSided } else { Sidedness::OneSided };
        Ok(PyCavity {
            inner: CavitySpec::new(g, kappa, kappa_prime, gamma, sided).map_err(to_py)?,
        })
    }

    /// `(reflection, transmission)`; transmission is `None` for one-sided cavities.
    fn coefficients(&self, omega: f64, q: u8) -> PyResult<(Complex64, Option<Complex64>)> {
        let c = scatter_coefficients(omega, &self.inner, qubit(q)?).map_err(to_py)?;
        Ok((c.reflection, c.transmission))
    }

    #[getter]
    fn cooperativity(&self) -> f64 {
        self.inner.cooperativity()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "Cavity(g={}, kappa={}, kappa_prime={}, gamma={}, two_sided={})",
            c.g,
            c.kappa,
            c.kappa_prime,
            c.gamma,
            c.sidedness == Sidedness::TwoSided
        )
    }
}

/// Chain of `n` identical cavities joined by identical path segments.
#[pyclass(name = "Network", module = "cphase", skip_from_py_object)]
#[derive(Clone)]
pub struct PyNetwork {
    inner: NetworkSpec,
}

fn parse_state(spec: &NetworkSpec, state: &Bound<'_, PyAny>) -> PyResult<BasisState> {
    let n = spec.n();
    if let Ok(s) = state.extract::<String>() {
        let b: BasisState = s.parse().map_err(to_py)?;
        if b.n() != n {
            return Err(PyValueError::new_err(format!("state {s:?} has {} qubits, network has {n}", b.n())));
        }
        return Ok(b);
    }
    let i: usize = state.extract()?;
    if i >= 1 << n {
        return Err(PyValueError::new_err(format!("state index {i} out of range for {n} qubits")));
    }
    Ok(BasisState::new(i, n))
}

#[pymethods]
impl PyNetwork {
    #[new]
    #[pyo3(signature = (n, g, kappa, kappa_prime = 0.0, gamma = 0.0, tau = 0.0, eta = 0.0, phases = None, ideal = false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n: usize,
        g: f64,
        kappa: f64,
        kappa_prime: f64,
        gamma: f64,
        tau: f64,
        eta: f64,
        phases: Option<Vec<f64>>,
        ideal: bool,
    ) -> PyResult<Self> {
        let segment = PathSegment::new(tau, eta, 0.0).map_err(to_py)?;
        let mut spec = NetworkSpec::uniform(n, g, kappa, kappa_prime, gamma, segment).map_err(to_py)?;
        if let Some(p) = phases {
            spec = spec.with_phases(&p).map_err(to_py)?;
        }
        if ideal {
            spec = spec.with_model(ElementModel::Ideal);
        }
        Ok(PyNetwork { inner: spec })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn phases(&self) -> Vec<f64> {
        self.inner.phases()
    }

    /// Output amplitude for a basis state given as a bit string or index.
    fn amplitude(&self, omega: f64, state: &Bound<'_, PyAny>) -> PyResult<Complex64> {
        let s = parse_state(&self.inner, state)?;
        basis_amplitude(omega, &self.inner, s).map_err(to_py)
    }

    /// Phase of the ideal network for a basis state, e.g. `"π + φ1 + φ2"`.
    fn ideal_phase(&self, state: &Bound<'_, PyAny>) -> PyResult<String> {
        let s = parse_state(&self.inner, state)?;
        Ok(ideal_phase_table(&self.inner, s).map_err(to_py)?.to_string())
    }

    /// Copy with the listed cavities (1-indexed) blocked.
    fn with_blocked(&self, blocked: Vec<usize>) -> PyResult<Self> {
        let set: BTreeSet<usize> = blocked.into_iter().collect();
        Ok(PyNetwork {
            inner: self.inner.clone().with_blocked(&set).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Network(n={}, phases={:?})", self.inner.n(), self.inner.phases())
    }
}

/// Gaussian single-photon wave packet on a uniform detuning grid.
#[pyclass(name = "Packet", module = "cphase", skip_from_py_object)]
#[derive(Clone)]
pub struct PyPacket {
    inner: WavePacket,
}

#[pymethods]
impl PyPacket {
    #[staticmethod]
    #[pyo3(signature = (bandwidth, half_width = DEFAULT_GRID_HALF_WIDTH, points = 2049))]
    fn gaussian(bandwidth: f64, half_width: f64, points: usize) -> PyResult<Self> {
        let grid = frequency_grid(bandwidth, half_width, points);
        Ok(PyPacket {
            inner: WavePacket::gaussian(bandwidth, grid).map_err(to_py)?,
        })
    }

    /// Packet of duration `2π/bandwidth`.
    #[staticmethod]
    #[pyo3(signature = (duration, half_width = DEFAULT_GRID_HALF_WIDTH, points = 2049))]
    fn from_duration(duration: f64, half_width: f64, points: usize) -> PyResult<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(PyValueError::new_err("duration must be > 0"));
        }
        Self::gaussian(2.0 * std::f64::consts::PI / duration, half_width, points)
    }

    #[getter]
    fn bandwidth(&self) -> Option<f64> {
        self.inner.bandwidth()
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    #[getter]
    fn amplitude(&self) -> Vec<Complex64> {
        self.inner.amplitude().to_vec()
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }
}

#[pyclass(name = "GateReport", module = "cphase", get_all)]
pub struct PyGateReport {
    n: usize,
    fidelity: f64,
    xi_star: f64,
    overlaps: Vec<Complex64>,
    success_probability: f64,
    heralded_fidelity: f64,
}

#[pymethods]
impl PyGateReport {
    fn __repr__(&self) -> String {
        format!(
            "GateReport(n={}, fidelity={}, xi_star={}, success_probability={}, heralded_fidelity={})",
            self.n, self.fidelity, self.xi_star, self.success_probability, self.heralded_fidelity
        )
    }
}

#[pyfunction]
fn gate_fidelity(network: &PyNetwork, packet: &PyPacket) -> PyResult<PyGateReport> {
    let r = fidelity::gate_fidelity(&network.inner, &packet.inner).map_err(to_py)?;
    Ok(PyGateReport {
        n: r.n,
        fidelity: r.fidelity,
        xi_star: r.xi_star,
        overlaps: r.overlaps,
        success_probability: r.success_probability,
        heralded_fidelity: r.heralded_fidelity,
    })
}

#[pyfunction]
fn entanglement_fidelity(network: &PyNetwork, packet: &PyPacket) -> PyResult<f64> {
    fidelity::entanglement_fidelity(&network.inner, &packet.inner).map_err(to_py)
}

/// Linear coefficient of `1 - F_N` in `inv_C`, `kappa_prime_ratio` or `eta`.
#[pyfunction]
fn expansion_coefficient(n: usize, term: &str) -> PyResult<f64> {
    let t = ExpansionTerm::ALL
        .into_iter()
        .find(|t| t.name() == term)
        .ok_or_else(|| PyValueError::new_err(format!("unknown term {term:?}")))?;
    Ok(fidelity::expansion_coefficient(n, t, &ExpansionSettings::default())
        .map_err(to_py)?
        .slope)
}

#[pyfunction]
fn inverse_cooperativity_coefficient(n: usize) -> f64 {
    fidelity::inverse_cooperativity_coefficient(n)
}

/// `(refocused, global_phase)` for the `n`-qubit decoupling sequence.
#[pyfunction]
fn dd_verify(n: usize) -> PyResult<(bool, String)> {
    let r = verify_refocus(&dd_sequence(n).map_err(to_py)?).map_err(to_py)?;
    Ok((r.refocused, r.global_phase.to_string()))
}

/// `(mean, stderr)` of the fidelity under Gaussian path-phase noise.
#[pyfunction]
#[pyo3(signature = (network, packet, delta, samples, with_dd = true, seed = 0))]
fn noisy_fidelity(
    network: &PyNetwork,
    packet: &PyPacket,
    delta: f64,
    samples: usize,
    with_dd: bool,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let r = noisy_fidelity_mc(&network.inner, &packet.inner, delta, samples, with_dd, seed).map_err(to_py)?;
    Ok((r.mean, r.stderr))
}

#[pymodule]
fn cphase(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCavity>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyPacket>()?;
    m.add_class::<PyGateReport>()?;
    m.add_function(wrap_pyfunction!(gate_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(entanglement_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(expansion_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_cooperativity_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(dd_verify, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_fidelity, m)?)?;
    Ok(())
}
