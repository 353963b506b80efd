//! Adaptive Dormand-Prince 5(4) stepper for small complex systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-10,
            atol: 1e-14,
            h_min: 1e-300,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded 4th-order error weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo<const D: usize>(y: &[Complex64; D], h: f64, terms: &[(f64, &[Complex64; D])]) -> [Complex64; D] {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..D {
            out[i] += h * coef * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`, starting with step `h`.
/// Returns the state at `t1` and a suggested next step.
pub fn integrate<const D: usize, F>(
    f: &mut F,
    t0: f64,
    y0: [Complex64; D],
    t1: f64,
    mut h: f64,
    ctl: &StepControl,
    stats: &mut Stats,
) -> Result<([Complex64; D], f64)>
where
    F: FnMut(f64, &[Complex64; D]) -> [Complex64; D],
{
    let mut t = t0;
    let mut y = y0;
    if t1 <= t0 {
        return Ok((y, h));
    }
    h = h.min(t1 - t0).max(ctl.h_min);
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > ctl.max_steps {
            return Err(Error::Integrator {
                t,
                step: h,
                reason: format!("exceeded {} steps", ctl.max_steps),
            });
        }
        let last = t + h >= t1;
        let hh = if last { t1 - t } else { h };
        let k2 = f(t + C2 * hh, &combo(&y, hh, &[(A21, &k1)]));
        let k3 = f(t + C3 * hh, &combo(&y, hh, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * hh, &combo(&y, hh, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * hh,
            &combo(&y, hh, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + hh,
            &combo(&y, hh, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = combo(&y, hh, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + hh, &y_new);

        let mut err_sq = 0.0;
        for i in 0..D {
            let e = hh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = ctl.atol + ctl.rtol * y[i].norm().max(y_new[i].norm());
            err_sq += (e.norm() / scale).powi(2);
        }
        let err = (err_sq / D as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integrator {
                t,
                step: hh,
                reason: "non-finite error estimate".into(),
            });
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + hh };
            y = y_new;
            k1 = k7;
            // A step clipped to land on t1 says little about the natural step.
            h = if last { h.max(hh * factor) } else { hh * factor };
        } else {
            stats.rejected += 1;
            h = hh * factor.min(1.0);
            if h < ctl.h_min {
                return Err(Error::Integrator {
                    t,
                    step: h,
                    reason: "step size underflow".into(),
                });
            }
        }
    }
    Ok((y, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn driven_damped_oscillator_matches_closed_form() {
        // y' = -(a + i w) y + 1, y(0) = 0  =>  y = (1 - e^{-(a + i w) t}) / (a + i w)
        let rate = Complex64::new(0.7, 3.0);
        let mut f = |_t: f64, y: &[Complex64; 1]| [-rate * y[0] + 1.0];
        let mut stats = Stats::default();
        let (y, _) = integrate(&mut f, 0.0, [Complex64::default()], 4.0, 1e-3, &StepControl::default(), &mut stats).unwrap();
        let exact = (Complex64::new(1.0, 0.0) - (-rate * 4.0).exp()) / rate;
        assert!((y[0] - exact).norm() < 1e-9 * exact.norm(), "{} vs {}", y[0], exact);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn rabi_pair_conserves_norm() {
        let g = 2.0;
        let mut f = |_t: f64, y: &[Complex64; 2]| [g * y[1], -g * y[0]];
        let mut stats = Stats::default();
        let y0 = [Complex64::new(1.0, 0.0), Complex64::default()];
        let (y, _) = integrate(&mut f, 0.0, y0, 10.0, 0.1, &StepControl::default(), &mut stats).unwrap();
        assert!((y[0].re - (g * 10.0).cos()).abs() < 1e-8);
        assert!((y[0].norm_sqr() + y[1].norm_sqr() - 1.0).abs() < 1e-8);
    }
}
