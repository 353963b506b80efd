//! Single-cavity scattering coefficients.
//!
//! A qubit in `|1>` couples to the cavity mode with strength `g`; `|0>` is
//! dark. All rates are amplitude rates in the same angular-frequency unit as
//! the detuning `omega`, measured from the cavity resonance.
//!
//! The one-sided coefficient carries the factors of two of the one-mirror rate
//! convention, the two-sided coefficients the symmetric two-mirror one. Both
//! come out of the same input-output equations (see
//! [`frequency_domain_oracle`]), so the mixed conventions are consistent.

use nalgebra::{Matrix1, Matrix2, Vector1, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Detuning applied to a blocked cavity when none is given, in units of kappa.
pub const DEFAULT_BLOCK_DETUNING_KAPPA: f64 = 1.0e3;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// Physical parameters of one cavity-qubit node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    /// Qubit-cavity coupling for `|1>`.
    pub g: f64,
    /// Per-mirror transmission damping rate.
    pub kappa: f64,
    /// Per-mirror absorption loss rate.
    pub kappa_prime: f64,
    /// Excited-state decay rate (amplitude).
    pub gamma: f64,
    pub sidedness: Sidedness,
    /// When set, the cavity is blocked: it is evaluated at `omega - detuning`.
    pub block_detuning: Option<f64>,
}

impl CavitySpec {
    pub fn new(g: f64, kappa: f64, kappa_prime: f64, gamma: f64, sidedness: Sidedness) -> Result<Self> {
        let spec = CavitySpec {
            g,
            kappa,
            kappa_prime,
            gamma,
            sidedness,
            block_detuning: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn one_sided(g: f64, kappa: f64, kappa_prime: f64, gamma: f64) -> Result<Self> {
        Self::new(g, kappa, kappa_prime, gamma, Sidedness::OneSided)
    }

    pub fn two_sided(g: f64, kappa: f64, kappa_prime: f64, gamma: f64) -> Result<Self> {
        Self::new(g, kappa, kappa_prime, gamma, Sidedness::TwoSided)
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name, v: f64| {
            if !v.is_finite() || v < 0.0 {
                Err(invalid(name, format!("must be finite and >= 0, got {v}")))
            } else {
                Ok(())
            }
        };
        finite_nonneg("g", self.g)?;
        finite_nonneg("kappa_prime", self.kappa_prime)?;
        finite_nonneg("gamma", self.gamma)?;
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(invalid("kappa", format!("must be finite and > 0, got {}", self.kappa)));
        }
        if let Some(d) = self.block_detuning {
            if !d.is_finite() {
                return Err(invalid("block_detuning", format!("must be finite, got {d}")));
            }
        }
        Ok(())
    }

    /// `g^2 / (kappa gamma)`; infinite when `gamma = 0` and `g > 0`.
    pub fn cooperativity(&self) -> f64 {
        if self.gamma == 0.0 {
            if self.g == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.g * self.g / (self.kappa * self.gamma)
        }
    }

    /// Blocks the cavity with the default detuning of `1e3 kappa`.
    pub fn blocked(self) -> Self {
        let detuning = DEFAULT_BLOCK_DETUNING_KAPPA * self.kappa;
        self.with_block_detuning(detuning)
    }

    pub fn with_block_detuning(mut self, detuning: f64) -> Self {
        self.block_detuning = Some(detuning);
        self
    }

    pub fn unblocked(mut self) -> Self {
        self.block_detuning = None;
        self
    }

    pub fn is_blocked(&self) -> bool {
        self.block_detuning.is_some()
    }

    /// Detuning seen by the cavity after applying the block shift.
    pub fn effective_detuning(&self, omega: f64) -> f64 {
        omega - self.block_detuning.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QubitState {
    Zero,
    One,
}

impl QubitState {
    /// `g_0 = 0`, `g_1 = g`.
    pub fn coupling(self, g: f64) -> f64 {
        match self {
            QubitState::Zero => 0.0,
            QubitState::One => g,
        }
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            QubitState::One
        } else {
            QubitState::Zero
        }
    }

    pub fn is_one(self) -> bool {
        self == QubitState::One
    }
}

/// Reflection and (for two-sided cavities) transmission at one detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterCoefficients {
    pub reflection: Complex64,
    pub transmission: Option<Complex64>,
}

impl ScatterCoefficients {
    /// `|R|^2 + |T|^2`.
    pub fn total_flux(&self) -> f64 {
        self.reflection.norm_sqr() + self.transmission.map_or(0.0, |t| t.norm_sqr())
    }
}

fn check_detuning(omega: f64) -> Result<()> {
    if omega.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteDetuning(omega))
    }
}

fn divide(num: Complex64, den: Complex64, what: &str) -> Result<Complex64> {
    if den.norm() == 0.0 || !den.is_finite() {
        return Err(Error::Degenerate(format!("{what}: denominator {den}")));
    }
    let q = num / den;
    if !q.is_finite() {
        return Err(Error::Degenerate(format!("{what}: non-finite ratio")));
    }
    Ok(q)
}

/// Reflection coefficient `R_{1,q}(omega)` of a one-sided cavity.
pub fn one_sided_reflection(omega: f64, cavity: &CavitySpec, q: QubitState) -> Result<Complex64> {
    check_detuning(omega)?;
    cavity.validate()?;
    if cavity.sidedness != Sidedness::OneSided {
        return Err(invalid("sidedness", "one_sided_reflection needs a one-sided cavity"));
    }
    let w = cavity.effective_detuning(omega);
    let gq = q.coupling(cavity.g);
    let (k, kp, gamma) = (cavity.kappa, cavity.kappa_prime, cavity.gamma);
    let loss = k + kp;
    let ratio = if gq == 0.0 {
        // Atom decoupled; the common (gamma - i w) factor is cancelled so that
        // gamma = 0 stays regular at w = 0.
        divide(Complex64::new(2.0 * k, 0.0), Complex64::new(loss, -2.0 * w), "R_1")?
    } else {
        let num = 2.0 * k * Complex64::new(gamma, -w);
        let den = Complex64::new(2.0 * (gq * gq - w * w), 0.0)
            + gamma * Complex64::new(loss, -2.0 * w)
            - I * loss * w;
        divide(num, den, "R_1")?
    };
    Ok(Complex64::new(1.0, 0.0) - ratio)
}

/// Transmission `T_{2,q}` and reflection `R_{2,q} = 1 + T_{2,q}` of a
/// symmetric two-sided cavity.
pub fn two_sided_coefficients(omega: f64, cavity: &CavitySpec, q: QubitState) -> Result<ScatterCoefficients> {
    check_detuning(omega)?;
    cavity.validate()?;
    if cavity.sidedness != Sidedness::TwoSided {
        return Err(invalid("sidedness", "two_sided_coefficients needs a two-sided cavity"));
    }
    let w = cavity.effective_detuning(omega);
    let gq = q.coupling(cavity.g);
    let (k, kp, gamma) = (cavity.kappa, cavity.kappa_prime, cavity.gamma);
    let loss = k + kp;
    let t = if gq == 0.0 {
        -divide(Complex64::new(k, 0.0), Complex64::new(loss, -w), "T_2")?
    } else {
        let num = k * Complex64::new(gamma, -w);
        let den = Complex64::new(gq * gq - w * w, 0.0) + gamma * Complex64::new(loss, -w) - I * loss * w;
        -divide(num, den, "T_2")?
    };
    Ok(ScatterCoefficients {
        reflection: Complex64::new(1.0, 0.0) + t,
        transmission: Some(t),
    })
}

/// Closed-form coefficients for either geometry.
pub fn scatter_coefficients(omega: f64, cavity: &CavitySpec, q: QubitState) -> Result<ScatterCoefficients> {
    match cavity.sidedness {
        Sidedness::OneSided => Ok(ScatterCoefficients {
            reflection: one_sided_reflection(omega, cavity, q)?,
            transmission: None,
        }),
        Sidedness::TwoSided => two_sided_coefficients(omega, cavity, q),
    }
}

/// Ideal-limit element: `|1>` and blocked cavities reflect with `+1`, an empty
/// one-sided cavity reflects with `-1`, an empty two-sided cavity transmits
/// with `-1`.
pub fn ideal_coefficients(sidedness: Sidedness, q: QubitState, blocked: bool) -> ScatterCoefficients {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let reflecting = blocked || q.is_one();
    match sidedness {
        Sidedness::OneSided => ScatterCoefficients {
            reflection: if reflecting { one } else { -one },
            transmission: None,
        },
        Sidedness::TwoSided => ScatterCoefficients {
            reflection: if reflecting { one } else { zero },
            transmission: Some(if reflecting { zero } else { -one }),
        },
    }
}

/// Solves the frequency-domain amplitude equations for the cavity field
/// `C_b` and excited-state amplitude `C_e` with unit drive, then applies
/// `b_out = b_in + sqrt(kappa) C_b` on each port.
///
/// This is an independent route to the closed forms above.
pub fn frequency_domain_oracle(omega: f64, cavity: &CavitySpec, q: QubitState) -> Result<ScatterCoefficients> {
    check_detuning(omega)?;
    cavity.validate()?;
    let w = cavity.effective_detuning(omega);
    let gq = q.coupling(cavity.g);
    let sk = cavity.kappa.sqrt();
    // Cavity-field amplitude damping: (kappa + kappa')/2 per mirror pair seen.
    let field_damping = match cavity.sidedness {
        Sidedness::OneSided => 0.5 * (cavity.kappa + cavity.kappa_prime),
        Sidedness::TwoSided => cavity.kappa + cavity.kappa_prime,
    };
    let diag_b = Complex64::new(field_damping, -w);
    let diag_e = Complex64::new(cavity.gamma, -w);

    // Response of C_b to one unit of b_in on one port.
    let cb = if gq == 0.0 {
        // C_e is not driven; keep it out of the system.
        let m = Matrix1::new(diag_b);
        m.lu()
            .solve(&Vector1::new(Complex64::new(-sk, 0.0)))
            .ok_or_else(|| Error::Degenerate("singular cavity equation".into()))?[0]
    } else {
        //  (kappa_tot/2 - i w) C_b - g C_e = -sqrt(kappa) b_in
        //  g C_b + (gamma - i w) C_e       = 0
        let m = Matrix2::new(diag_b, Complex64::new(-gq, 0.0), Complex64::new(gq, 0.0), diag_e);
        let rhs = Vector2::new(Complex64::new(-sk, 0.0), Complex64::new(0.0, 0.0));
        m.lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Degenerate("singular amplitude equations".into()))?[0]
    };
    if !cb.is_finite() {
        return Err(Error::Degenerate("non-finite cavity amplitude".into()));
    }
    let response = sk * cb;
    Ok(match cavity.sidedness {
        Sidedness::OneSided => ScatterCoefficients {
            reflection: Complex64::new(1.0, 0.0) + response,
            transmission: None,
        },
        // Drive enters on one port only: same-port output picks up b_in,
        // the far port sees only the cavity leakage.
        Sidedness::TwoSided => ScatterCoefficients {
            reflection: Complex64::new(1.0, 0.0) + response,
            transmission: Some(response),
        },
    })
}

/// Finite-difference step used by [`group_delay`].
pub fn group_delay_step(omega: f64, kappa: f64) -> f64 {
    (1e-6 * kappa).max(1e-9 * omega.abs() + 1e-12 * kappa)
}

/// Group delay `d arg(f) / d omega` by central difference.
///
/// `kappa` sets the step scale. The phase difference is taken from
/// `f(w + h) conj(f(w - h))`, so branch cuts of `arg` do not matter.
pub fn group_delay<F>(coefficient: F, omega: f64, kappa: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    check_detuning(omega)?;
    let centre = coefficient(omega)?;
    if centre.norm() < 1e-9 {
        return Err(Error::UndefinedPhase {
            omega,
            amplitude: centre.norm(),
        });
    }
    let h = group_delay_step(omega, kappa);
    let up = coefficient(omega + h)?;
    let down = coefficient(omega - h)?;
    Ok((up * down.conj()).arg() / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one(g: f64, k: f64, kp: f64, gamma: f64) -> CavitySpec {
        CavitySpec::one_sided(g, k, kp, gamma).unwrap()
    }

    fn two(g: f64, k: f64, kp: f64, gamma: f64) -> CavitySpec {
        CavitySpec::two_sided(g, k, kp, gamma).unwrap()
    }

    #[test]
    fn empty_one_sided_reflects_with_pi() {
        let r = one_sided_reflection(0.0, &one(3.0, 1.3, 0.0, 0.7), QubitState::Zero).unwrap();
        assert_relative_eq!(r.re, -1.0, epsilon = 1e-15);
        assert_relative_eq!(r.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn coupled_one_sided_resonance_value() {
        let (g, k, gamma) = (5.0, 1.0, 0.5);
        let r = one_sided_reflection(0.0, &one(g, k, 0.0, gamma), QubitState::One).unwrap();
        let expected = 1.0 - 2.0 * k * gamma / (2.0 * g * g + gamma * k);
        assert_relative_eq!(r.re, expected, epsilon = 1e-14);
        let r_big = one_sided_reflection(0.0, &one(1e5, k, 0.0, gamma), QubitState::One).unwrap();
        assert!((r_big - 1.0).norm() < 1e-9);
    }

    #[test]
    fn two_sided_ideal_values() {
        let c = two(2.0, 1.0, 0.0, 0.3);
        let empty = two_sided_coefficients(0.0, &c, QubitState::Zero).unwrap();
        assert_relative_eq!(empty.transmission.unwrap().re, -1.0, epsilon = 1e-15);
        assert!(empty.reflection.norm() < 1e-15);
        let strong = two_sided_coefficients(0.0, &two(1e6, 1.0, 0.0, 0.3), QubitState::One).unwrap();
        assert!((strong.reflection - 1.0).norm() < 1e-9);
        assert!(strong.transmission.unwrap().norm() < 1e-9);
    }

    #[test]
    fn wrong_geometry_is_rejected() {
        assert!(one_sided_reflection(0.0, &two(1.0, 1.0, 0.0, 1.0), QubitState::One).is_err());
        assert!(two_sided_coefficients(0.0, &one(1.0, 1.0, 0.0, 1.0), QubitState::One).is_err());
    }

    #[test]
    fn non_finite_detuning_is_rejected() {
        let c = one(1.0, 1.0, 0.0, 1.0);
        assert!(matches!(
            one_sided_reflection(f64::NAN, &c, QubitState::One),
            Err(Error::NonFiniteDetuning(_))
        ));
        assert!(matches!(
            one_sided_reflection(f64::INFINITY, &c, QubitState::One),
            Err(Error::NonFiniteDetuning(_))
        ));
    }

    #[test]
    fn zero_kappa_is_degenerate() {
        assert!(CavitySpec::one_sided(0.0, 0.0, 0.0, 0.0).is_err());
        let mut c = one(1.0, 1.0, 0.0, 1.0);
        c.kappa = 0.0;
        assert!(one_sided_reflection(0.0, &c, QubitState::Zero).is_err());
        assert!(frequency_domain_oracle(0.0, &c, QubitState::Zero).is_err());
    }

    #[test]
    fn absorption_reduces_reflection() {
        let r = frequency_domain_oracle(0.0, &one(0.0, 1.0, 0.1, 1.0), QubitState::Zero).unwrap();
        assert!(r.reflection.norm() < 1.0);
    }

    #[test]
    fn empty_two_sided_oracle_is_lorentzian() {
        let (k, w) = (1.7, 0.4);
        let c = two(0.0, k, 0.0, 0.0);
        let t = frequency_domain_oracle(w, &c, QubitState::Zero).unwrap().transmission.unwrap();
        let expected = -k / Complex64::new(k, -w);
        assert!((t - expected).norm() < 1e-15);
        // With gamma > 0 the factored form still holds.
        let c = two(0.0, k, 0.2, 0.9);
        let t = frequency_domain_oracle(w, &c, QubitState::Zero).unwrap().transmission.unwrap();
        let gamma = Complex64::new(0.9, -w);
        let expected = -k * gamma / (gamma * Complex64::new(k + 0.2, -w));
        assert!((t - expected).norm() < 1e-14);
    }

    #[test]
    fn blocked_cavity_shifts_detuning() {
        let c = two(3.0, 1.0, 0.0, 0.1);
        let b = c.blocked();
        assert_eq!(b.block_detuning, Some(1e3));
        let direct = two_sided_coefficients(0.5, &b, QubitState::Zero).unwrap();
        let shifted = two_sided_coefficients(0.5 - 1e3, &c, QubitState::Zero).unwrap();
        assert_eq!(direct, shifted);
        assert!((direct.reflection - 1.0).norm() < 2e-3);
    }

    #[test]
    fn empty_one_sided_group_delay_matches_analytic() {
        // R = -(k + 2iw)/(k - 2iw): arg' (0) = 4/k.
        let k = 2.0;
        let c = one(0.0, k, 0.0, 1e-6);
        let d = group_delay(|w| one_sided_reflection(w, &c, QubitState::Zero), 0.0, k).unwrap();
        assert_relative_eq!(d, 4.0 / k, max_relative = 1e-6);
    }

    #[test]
    fn empty_two_sided_transmission_delay_is_inverse_kappa() {
        let k = 3.0;
        let c = two(0.0, k, 0.0, 0.0);
        let d = group_delay(
            |w| Ok(two_sided_coefficients(w, &c, QubitState::Zero)?.transmission.unwrap()),
            0.0,
            k,
        )
        .unwrap();
        assert_relative_eq!(d, 1.0 / k, max_relative = 1e-6);
    }

    #[test]
    fn strong_coupling_has_little_delay() {
        let k = 1.0;
        let c = one(100.0, k, 0.0, 0.1);
        let d = group_delay(|w| one_sided_reflection(w, &c, QubitState::One), 0.0, k).unwrap();
        assert!(d.abs() < 0.01 / k, "delay {d}");
    }

    #[test]
    fn group_delay_rejects_dark_points() {
        let c = two(0.0, 1.0, 0.0, 0.0);
        let err = group_delay(|w| Ok(two_sided_coefficients(w, &c, QubitState::Zero)?.reflection), 0.0, 1.0);
        assert!(matches!(err, Err(Error::UndefinedPhase { .. })));
    }

    #[test]
    fn cooperativity_accessor() {
        assert_relative_eq!(one(3.0, 2.0, 0.0, 0.5).cooperativity(), 9.0);
        assert!(one(3.0, 2.0, 0.0, 0.0).cooperativity().is_infinite());
    }
}
