//! Acceptance suite. Prints one PASS/FAIL line per criterion, with the
//! measurements behind it on indented lines, and exits non-zero if any
//! criterion fails.

use std::collections::BTreeSet;
use std::time::Instant;

use cphase_cli::config::RunConfig;
use cphase_cli::{coeffs_report, fidelity_report};
use cphase_core::components::{frequency_domain_oracle, scatter_coefficients, CavitySpec, QubitState, Sidedness};
use cphase_core::decoupling::{dd_sequence, noisy_fidelity_mc, verify_refocus};
use cphase_core::fidelity::{entanglement_fidelity, gate_fidelity, inverse_cooperativity_coefficient};
use cphase_core::network::{
    basis_amplitude, basis_amplitude_pathsum, cascade_closed_form, two_cavity_closed_form, BasisState, NetworkSpec,
    PathSegment,
};
use cphase_core::pulses::{frequency_grid, scatter_time_domain, time_domain_discrepancy, WavePacket};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

struct Criterion {
    id: &'static str,
    title: &'static str,
    details: Vec<String>,
    pass: bool,
}

impl Criterion {
    fn new(id: &'static str, title: &'static str) -> Self {
        Criterion {
            id,
            title,
            details: Vec::new(),
            pass: true,
        }
    }

    /// Records a sub-check and folds it into the verdict.
    fn check(&mut self, ok: bool, line: String) {
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
        self.pass &= ok;
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("     {line}"));
    }

    fn report(&self, seconds: f64) {
        for d in &self.details {
            println!("      {d}");
        }
        println!(
            "{} [{}] {} ({seconds:.2} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title
        );
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn packet(dw: f64, points: usize) -> WavePacket {
    WavePacket::gaussian(dw, frequency_grid(dw, 8.0, points)).unwrap()
}

fn benchmark() -> Criterion {
    let mut c = Criterion::new("1", "benchmark fidelity 0.65 +- 0.02 in under 10 s");
    let start = Instant::now();
    let cfg = RunConfig::from_toml(
        "[network]\nn = 2\ng_2pi_mhz = 7.9\nkappa_2pi_mhz = 2.3\nkappa_prime_2pi_mhz = 0.2\n\
         gamma_2pi_mhz = 3.0\ntau_ns = 10.0\n\n[packet]\nduration_us = 5.0\n",
    )
    .unwrap();
    let r = fidelity_report(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    c.check((r.fidelity - 0.65).abs() <= 0.02, format!("F2 = {:.4}", r.fidelity));
    c.check(elapsed < 10.0, format!("runtime {elapsed:.3} s"));
    c.note(format!(
        "xi* = {:.4} us, P = {:.4}, heralded F = {:.4}",
        r.xi_star_us, r.success_probability, r.heralded_fidelity
    ));
    c
}

fn coefficients() -> Criterion {
    let mut c = Criterion::new("2", "first-order error-budget coefficients");
    let start = Instant::now();
    let inv_c = [2.5, 2.25, 1.6];
    let absorption = [1.8, 1.6, 1.3];
    let path_loss = [3.7, 5.0, 6.3];
    let mut reports = Vec::new();
    for n in 2..=4 {
        reports.push(coeffs_report(n).unwrap());
    }
    let slope = |r: &cphase_cli::CoefficientReport, term: &str| r.slopes.iter().find(|s| s.term == term).unwrap().slope;
    for (label, term, targets, tol) in [
        ("2a 1/C", "inv_C", inv_c, 0.10),
        ("2b kappa'/kappa", "kappa_prime_ratio", absorption, 0.10),
        ("2c eta", "eta", path_loss, 0.15),
    ] {
        for (r, t) in reports.iter().zip(targets) {
            let s = slope(r, term);
            c.check(within(s, t, tol), format!("{label} N={}: {s:.4} vs {t} (+-{:.0}%)", r.n, tol * 100.0));
        }
    }
    let b = reports[0].bandwidth_block;
    for (name, got, want) in [
        ("1/kappa^2", b.constant, 2.3),
        ("tau/kappa", b.delay_linear, 1.1),
        ("tau^2", b.delay_quadratic, 0.95),
    ] {
        c.check(within(got, want, 0.2), format!("2d bandwidth block N=2 {name}: {got:.4} vs {want} (+-20%)"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    c.check(elapsed < 300.0, format!("runtime {elapsed:.2} s"));
    c
}

fn n_scaling() -> Criterion {
    let mut c = Criterion::new("3", "(1-F_N) C -> (4N-3)/2^(N-1) at C = 1e3");
    let coop: f64 = 1e3;
    let p = packet(1e-4, 1025);
    for n in 2..=4 {
        let spec = NetworkSpec::uniform(n, coop.sqrt(), 1.0, 0.0, 1.0, PathSegment::default()).unwrap();
        let got = (1.0 - gate_fidelity(&spec, &p).unwrap().fidelity) * coop;
        let want = inverse_cooperativity_coefficient(n);
        c.check(within(got, want, 0.10), format!("N={n}: {got:.4} vs {want:.4} (+-10%)"));
    }
    c
}

fn reference_delay() -> Criterion {
    let mut c = Criterion::new("4", "optimal reference delay at the default baseline");
    let fits = [(2, -1.4, -1.0), (3, -1.1, -1.7), (4, -0.8, -2.2)];
    for (n, a, b) in fits {
        for tau_ns in [0.0, 10.0] {
            let mut cfg = RunConfig::default();
            cfg.network.n = n;
            cfg.network.tau_ns = tau_ns;
            let r = fidelity_report(&cfg).unwrap();
            let kappa_tau = cfg.kappa() * tau_ns * 1e-9;
            let want = a + b * kappa_tau;
            c.check(
                within(r.xi_star_kappa, want, 0.15),
                format!("N={n} tau={tau_ns} ns: xi*kappa = {:.4} vs {want:.4} (+-15%)", r.xi_star_kappa),
            );
        }
    }
    c
}

fn two_node_formula() -> Criterion {
    let mut c = Criterion::new("5", "two-node closed form equals the network solve to 1e-9");
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let (mut worst, mut worst_cascade) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (g1, g2) = (rng.random_range(0.0..4.0), rng.random_range(0.0..4.0));
        let k = rng.random_range(0.2..3.0);
        let gamma = rng.random_range(0.01..3.0);
        let w = rng.random_range(-3.0..3.0);
        let spec = NetworkSpec::new(
            vec![
                CavitySpec::two_sided(g1, k, 0.0, gamma).unwrap(),
                CavitySpec::one_sided(g2, k, 0.0, gamma).unwrap(),
            ],
            vec![PathSegment::default()],
            vec![PathSegment::default()],
        )
        .unwrap();
        for s in BasisState::all(2) {
            let (e1, e2) = (
                if s.qubit(1).is_one() { g1 } else { 0.0 },
                if s.qubit(2).is_one() { g2 } else { 0.0 },
            );
            let solve = basis_amplitude(w, &spec, s).unwrap();
            let closed = two_cavity_closed_form(w, e1, e2, k, gamma).unwrap();
            let cascade = cascade_closed_form(w, e1, e2, k, gamma).unwrap();
            worst = worst.max((solve - closed).norm());
            worst_cascade = worst_cascade.max((solve - cascade).norm());
        }
    }
    c.check(worst <= 1e-9, format!("max |solve - closed form| = {worst:.3e} over 20 draws x 4 states"));
    c.note(format!("max |solve - derived cascade form| = {worst_cascade:.3e}"));
    c
}

fn random_cavity(rng: &mut ChaCha20Rng) -> CavitySpec {
    let sided = if rng.random_bool(0.5) { Sidedness::OneSided } else { Sidedness::TwoSided };
    let c = CavitySpec::new(
        rng.random_range(0.0..5.0),
        rng.random_range(0.1..3.0),
        rng.random_range(0.0..1.0),
        rng.random_range(0.0..3.0),
        sided,
    )
    .unwrap();
    if rng.random_bool(0.2) {
        c.with_block_detuning(rng.random_range(10.0..1e3) * c.kappa)
    } else {
        c
    }
}

fn random_network(rng: &mut ChaCha20Rng, lossless: bool) -> NetworkSpec {
    let n = rng.random_range(1..=5usize);
    let loss = |rng: &mut ChaCha20Rng, hi: f64| if lossless { 0.0 } else { rng.random_range(0.0..hi) };
    let k = rng.random_range(0.3..3.0);
    let kp = loss(rng, 0.05 * k);
    let gamma = if lossless { 0.0 } else { rng.random_range(0.1..1.0) * k };
    let mut cavities = Vec::new();
    for i in 0..n {
        let g = if lossless { rng.random_range(0.0..5.0) } else { (rng.random_range(100.0..1e4) * k * gamma).sqrt() };
        cavities.push(if i + 1 == n {
            CavitySpec::one_sided(g, k, kp, gamma).unwrap()
        } else {
            CavitySpec::two_sided(g, k, kp, gamma).unwrap()
        });
    }
    let seg = |rng: &mut ChaCha20Rng| {
        let tau = rng.random_range(0.0..1.0) / k;
        let eta = loss(rng, 0.05);
        PathSegment::new(tau, eta, rng.random_range(-3.2..3.2)).unwrap()
    };
    let forward = (1..n).map(|_| seg(rng)).collect();
    let back = (1..n).map(|_| seg(rng)).collect();
    NetworkSpec::new(cavities, forward, back).unwrap()
}

fn oracles() -> Criterion {
    let mut c = Criterion::new("6", "oracle suite");
    let mut rng = ChaCha20Rng::seed_from_u64(6);

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let cav = random_cavity(&mut rng);
        let w = rng.random_range(-5.0..5.0);
        for q in [QubitState::Zero, QubitState::One] {
            let a = scatter_coefficients(w, &cav, q).unwrap();
            let b = frequency_domain_oracle(w, &cav, q).unwrap();
            worst = worst.max((a.reflection - b.reflection).norm());
            if let (Some(x), Some(y)) = (a.transmission, b.transmission) {
                worst = worst.max((x - y).norm());
            }
        }
    }
    c.check(worst <= 1e-12, format!("6a closed form vs linear system: max error {worst:.3e} (1000 cavities)"));

    let p = packet(0.5, 512);
    let mut worst = 0.0f64;
    for coop in [1.0f64, 10.0, 100.0] {
        let (k, gamma) = (1.0, 0.4);
        let cav = CavitySpec::one_sided((coop * k * gamma).sqrt(), k, 0.05, gamma).unwrap();
        for q in [QubitState::Zero, QubitState::One] {
            let s = scatter_time_domain(&p, &cav, q).unwrap();
            worst = worst.max(time_domain_discrepancy(&s, &p, &cav, q).unwrap());
        }
    }
    c.check(worst <= 1e-6, format!("6b time domain vs frequency domain: max relative L2 {worst:.3e} (C = 1, 10, 100)"));

    let (mut worst, mut trunc) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let spec = random_network(&mut rng, false);
        let s = BasisState::new(rng.random_range(0..1usize << spec.n()), spec.n());
        let w = rng.random_range(-0.1..0.1) * spec.kappa_scale();
        let exact = basis_amplitude(w, &spec, s).unwrap();
        let sum = basis_amplitude_pathsum(w, &spec, s, 20000).unwrap();
        worst = worst.max((sum.value - exact).norm());
        trunc = trunc.max(sum.truncation);
    }
    c.check(worst <= 1e-8, format!("6c path sum vs graph solve: max error {worst:.3e} (200 strongly coupled networks, 20000 bounces)"));
    c.note(format!("largest path-sum truncation bound {trunc:.3e}"));

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let spec = random_network(&mut rng, true);
        let s = BasisState::new(rng.random_range(0..1usize << spec.n()), spec.n());
        let w = rng.random_range(-4.0..4.0);
        worst = worst.max((basis_amplitude(w, &spec, s).unwrap().norm() - 1.0).abs());
    }
    c.check(worst <= 1e-10, format!("6d lossless flux: max ||a| - 1| = {worst:.3e} (1000 networks)"));
    c
}

/// Least-squares `y ≈ a + b x + c x²`.
fn quadratic_fit(x: &[f64], y: &[f64]) -> [f64; 3] {
    let mut m = [[0.0; 4]; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let basis = [1.0, xi, xi * xi];
        for r in 0..3 {
            for col in 0..3 {
                m[r][col] += basis[r] * basis[col];
            }
            m[r][3] += basis[r] * yi;
        }
    }
    for p in 0..3 {
        let pivot = (p..3).max_by(|&a, &b| m[a][p].abs().total_cmp(&m[b][p].abs())).unwrap();
        m.swap(p, pivot);
        for r in 0..3 {
            if r != p {
                let f = m[r][p] / m[p][p];
                let pivot_row = m[p];
                for (x, y) in m[r].iter_mut().zip(pivot_row).skip(p) {
                    *x -= f * y;
                }
            }
        }
    }
    [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]]
}

fn decoupling() -> Criterion {
    let mut c = Criterion::new("7", "dynamical decoupling");
    for n in 2..=6 {
        let r = verify_refocus(&dd_sequence(n).unwrap()).unwrap();
        c.check(r.refocused, format!("7a N={n}: refocused = {}, global phase {}", r.refocused, r.global_phase));
    }

    let near_ideal = NetworkSpec::uniform(2, 1e4, 1.0, 0.0, 1.0, PathSegment::default()).unwrap();
    let narrow = packet(1e-4, 513);
    let with_dd = noisy_fidelity_mc(&near_ideal, &narrow, 0.3, 64, true, 7).unwrap();
    c.check(
        with_dd.mean >= 0.999,
        format!("7b delta = 0.3 with decoupling: F = {:.6} +- {:.1e}", with_dd.mean, with_dd.stderr),
    );

    let deltas = [0.0, 0.05, 0.1, 0.15, 0.2];
    let losses: Vec<f64> = deltas
        .iter()
        .map(|&d| 1.0 - noisy_fidelity_mc(&near_ideal, &narrow, d, 400, false, 11).unwrap().mean)
        .collect();
    let [_, lin, quad] = quadratic_fit(&deltas, &losses);
    let ratio = lin.abs() / (quad * 0.1).abs();
    c.check(
        quad > 0.0 && ratio < 0.1,
        format!("7c no decoupling: 1-F ~ {lin:.3e} delta + {quad:.4} delta^2, |linear|/|quadratic delta| at 0.1 = {ratio:.3e}"),
    );

    let coop: f64 = 1e3;
    let spec = NetworkSpec::uniform(2, coop.sqrt(), 1.0, 0.0, 1.0, PathSegment::default()).unwrap();
    for delta in [0.0, 0.1, 0.3] {
        let mc = noisy_fidelity_mc(&spec, &narrow, delta, 16, true, 13).unwrap();
        let coeff = (1.0 - mc.mean) * coop;
        c.check(within(coeff, 6.5, 0.15), format!("7d decoupled N=2, C=1e3, delta={delta}: (1-F) C = {coeff:.4} vs 6.5 (+-15%)"));
    }
    c
}

fn entanglement() -> Criterion {
    let mut c = Criterion::new("8", "entanglement fidelity equals F2");
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let k = rng.random_range(0.5..2.0);
        let spec = NetworkSpec::uniform(
            2,
            rng.random_range(0.0..30.0),
            k,
            rng.random_range(0.0..0.3),
            rng.random_range(0.01..2.0),
            PathSegment::new(rng.random_range(0.0..1.0), rng.random_range(0.0..0.2), 0.0).unwrap(),
        )
        .unwrap()
        .with_phases(&[rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
        .unwrap();
        let p = packet(rng.random_range(0.01..0.5) * k, 513);
        let f2 = gate_fidelity(&spec, &p).unwrap().fidelity;
        let fe = entanglement_fidelity(&spec, &p).unwrap();
        worst = worst.max((f2 - fe).abs());
    }
    c.check(worst <= 1e-12, format!("max |F_ent - F2| = {worst:.3e} over 20 specs"));
    c
}

fn determinism() -> Criterion {
    let mut c = Criterion::new("9", "seeded sweeps are byte-identical");
    let dir = std::env::temp_dir().join(format!("cphase-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    // Same output path every time: the sidecar echoes it.
    let run = |threads: usize, param: &str, points: &str| -> (Vec<u8>, Vec<u8>) {
        let out = dir.join(format!("{param}.csv"));
        let args = [
            "cphase", "sweep", "--param", param, "--points", points, "--seed", "17", "--out",
            out.to_str().unwrap(),
        ];
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let code = pool.install(|| cphase_cli::run(args, &mut std::io::sink(), &mut std::io::stderr()));
        assert_eq!(code, 0, "sweep {param} failed");
        let meta = cphase_cli::output::sidecar_path(&out);
        (std::fs::read(&out).unwrap(), std::fs::read(meta).unwrap())
    };
    for (param, points) in [("tau_ns", "6"), ("delta", "3")] {
        let a = run(1, param, points);
        let b = run(4, param, points);
        let again = run(4, param, points);
        c.check(
            a == b && b == again,
            format!("{param}: csv {} bytes, sidecar {} bytes, 1 vs 4 threads and repeat identical = {}", a.0.len(), a.1.len(), a == b && b == again),
        );
    }
    let _ = std::fs::remove_dir_all(&dir);
    c
}

fn main() {
    let suite: [fn() -> Criterion; 9] = [
        benchmark,
        coefficients,
        n_scaling,
        reference_delay,
        two_node_formula,
        oracles,
        decoupling,
        entanglement,
        determinism,
    ];
    let mut failed = BTreeSet::new();
    for criterion in suite {
        let start = Instant::now();
        let c = criterion();
        c.report(start.elapsed().as_secs_f64());
        if !c.pass {
            failed.insert(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: {} of 9 criteria fail: {:?}", failed.len(), failed);
        std::process::exit(1);
    }
}
