//! One-dimensional maximization: coarse scan for a bracket, then
//! golden-section refinement inside it.

/// `(sqrt(5) - 1) / 2`
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// True when the scan saw no variation; `x` is then the conventional 0
    /// (or the nearest window edge).
    pub flat: bool,
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // The interior probes can beat the midpoint by rounding.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, p| if p.1 > best.1 { p } else { best })
}

/// Scan `[lo, hi]` on `scan_points` samples, bracket the best sample and
/// refine with golden-section search to `tol`.
pub fn bracket_and_maximize<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, scan_points: usize, tol: f64) -> Maximum {
    assert!(scan_points >= 3 && hi > lo);
    let step = (hi - lo) / (scan_points - 1) as f64;
    let samples: Vec<(f64, f64)> = (0..scan_points)
        .map(|i| {
            let x = lo + step * i as f64;
            (x, f(x))
        })
        .collect();
    let (best_idx, &(_, best)) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty scan");
    let worst = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    if best - worst <= 1e-14 * best.abs().max(1e-300) {
        let x = 0.0_f64.clamp(lo, hi);
        return Maximum { x, value: f(x), flat: true };
    }
    let a = lo + step * best_idx.saturating_sub(1) as f64;
    let b = lo + step * (best_idx + 1).min(scan_points - 1) as f64;
    let (x, value) = golden_section_max(&mut f, a, b, tol);
    if value >= best {
        Maximum { x, value, flat: false }
    } else {
        Maximum { x: samples[best_idx].0, value: best, flat: false }
    }
}
