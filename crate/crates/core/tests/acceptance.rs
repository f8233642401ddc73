//! One line per acceptance criterion. Runs as a plain binary so the lines
//! always show up in `cargo test` output.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use superchain::closed_solver::{closed_spectrum, decoupled_limit_spectrum, solve_symmetric_point_energies};
use superchain::dynamics::{evolve_state, lifetime, pair_resonance, survival_probability};
use superchain::linalg::{CMatrix, CVector};
use superchain::liouville::{
    coherence_scan, evolve_density, monte_carlo_dephasing, scan_initial_state, DensityMatrix, Hygiene, InitialState,
    MasterGenerator, NoiseModel, ScanOptions, ScanPoint, MASTER_TOLERANCES,
};
use superchain::open_solver::{band_structure_vs_lambda, detect_superradiance, superradiant_profiles, sweep_gamma};
use superchain::propagate::TaylorIntegrator;
use superchain::ChainSpec;

/// Criteria that fail by construction; see the project notes.
const KNOWN_DEFECTS: &[usize] = &[1];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fig5() -> ChainSpec {
    ChainSpec::default().with_lambda(0.01)
}

fn grid(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 0.5).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64)).collect()
}

fn normalized(v: CVector) -> CVector {
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> CVector {
    normalized(CVector::from_fn(d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
}

fn max_decoupled_error(lambda: f64, include_pair: bool) -> f64 {
    let spec = ChainSpec::default().with_lambda(lambda);
    let analytic = decoupled_limit_spectrum(&spec).unwrap();
    let numeric: Vec<f64> = closed_spectrum(&spec).unwrap().iter().map(|s| s.energy).collect();
    let formula = analytic.energies(lambda);
    let pair = analytic.central_pair(lambda);
    numeric
        .iter()
        .zip(&formula)
        .filter(|(_, f)| include_pair || !pair.contains(f))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn c1() -> Outcome {
    let t0 = Instant::now();
    let err = max_decoupled_error(1e-6, true);
    let lambdas = [1e-2, 1e-3, 1e-4];
    let errs: Vec<f64> = lambdas.iter().map(|&l| max_decoupled_error(l, true)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log10()).collect();
    let bounded: Vec<f64> = lambdas.iter().map(|&l| max_decoupled_error(l, false)).collect();
    let bounded_orders: Vec<f64> = bounded.windows(2).map(|w| (w[0] / w[1]).log10()).collect();
    let elapsed = t0.elapsed().as_secs_f64();
    // order 2 within a factor of 2 in the error ratio per decade
    let order_ok = errs.windows(2).all(|w| (50.0..=200.0).contains(&(w[0] / w[1])));
    outcome(
        err < 1e-6 && order_ok && elapsed < 1.0,
        format!(
            "max |dE| at lambda=1e-6: {err:.2e}; order {orders:.3?} (bounded states only {bounded_orders:.3?}); {elapsed:.2}s"
        ),
    )
}

fn c2() -> Outcome {
    let spec = ChainSpec::default();
    let roots = solve_symmetric_point_energies(&spec).unwrap();
    let mut band: Vec<f64> =
        closed_spectrum(&spec).unwrap().iter().map(|s| s.energy).filter(|&e| spec.in_band(e)).collect();
    band.sort_by(|a, b| b.total_cmp(a));
    let worst = roots.roots.iter().zip(&band).map(|(r, e)| (r.0 - e).abs()).fold(0.0, f64::max);
    outcome(
        roots.roots.len() == band.len() && worst < 1e-9,
        format!("{} roots vs {} in-band eigenvalues, max |dE| {worst:.2e}", roots.roots.len(), band.len()),
    )
}

fn c3_c4() -> (Outcome, Outcome) {
    let g = grid(0.05, 0.01, 20.0);
    let traj = sweep_gamma(&fig5(), &g).unwrap();
    let c3 = outcome(
        traj.max_width_sum_error < 1e-9,
        format!("{} points, max |sum Gamma - 2 gamma| {:.2e}", g.len(), traj.max_width_sum_error),
    );
    let c4 = match detect_superradiance(&traj) {
        Ok(report) => {
            let at = |gamma: f64| {
                let i = g.iter().position(|&x| (x - gamma).abs() < 1e-9).unwrap();
                report.metrics[i].top2_share
            };
            let (hi, lo) = (at(20.0), at(0.1));
            outcome(
                (1.5..=3.5).contains(&report.gamma_crit) && hi > 0.9 && lo < 0.3,
                format!(
                    "gamma_crit {:.2} (mean spacing {:.3}), S2(20) {hi:.4}, S2(0.1) {lo:.4}",
                    report.gamma_crit, report.mean_level_spacing
                ),
            )
        }
        Err(e) => outcome(false, format!("detection failed: {e}")),
    };
    (c3, c4)
}

fn c5() -> Outcome {
    let mut fractions = Vec::new();
    for lambda in [0.01, 2.0] {
        let p = superradiant_profiles(&ChainSpec::default().with_lambda(lambda), &[20.0]).unwrap();
        fractions.extend(p[0].profiles.iter().map(|pr| pr.edge_fraction()));
    }
    let worst = fractions.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(worst > 0.9, format!("edge fractions {fractions:.4?}"))
}

fn c6() -> Outcome {
    let bs = band_structure_vs_lambda(&ChainSpec::default(), &grid(0.05, 0.05, 20.0), 3.0).unwrap();
    match (bs.pair_variation(1), bs.pair_variation(5)) {
        (Some(v1), Some(v5)) => {
            outcome(10.0 * v5 <= v1, format!("variation I {v1:.4}, V {v5:.4e}, ratio {:.1}", v1 / v5))
        }
        other => outcome(false, format!("pair missing from labels: {other:?}")),
    }
}

fn tau_of(spec: &ChainSpec, pair: usize, upper: bool) -> (f64, f64) {
    let psi = normalized(pair_resonance(spec, pair, upper).unwrap().right_vec);
    let dt = 2e-3;
    let tau = lifetime(spec, &psi, dt, 10.0, 1e4).unwrap().unwrap_or(f64::INFINITY);
    let horizon = if tau.is_finite() { 2.0 * tau } else { 100.0 };
    let g: Vec<f64> = (0..=200).map(|k| k as f64 * horizon / 200.0).collect();
    let gap = evolve_state(spec, &psi, &g).unwrap().cross_check.unwrap_or(f64::NAN);
    (tau, gap)
}

fn c7() -> Outcome {
    let base = ChainSpec::default();
    let mut gaps = Vec::new();
    let mut pair_one = Vec::new();
    let mut superradiant = Vec::new();
    for gamma in [0.25, 2.5, 25.0] {
        let spec = base.with_gamma(gamma);
        let (t1, g1) = tau_of(&spec, 1, true);
        let (t5, g5) = tau_of(&spec, 5, true);
        pair_one.push(t1);
        superradiant.push(t5);
        gaps.extend([g1, g5]);
    }
    let ratio = pair_one[2] / pair_one[1];
    let gap = gaps.iter().copied().fold(0.0, f64::max);
    let decreasing = superradiant.windows(2).all(|w| w[1] < w[0]);
    outcome(
        ratio >= 5.0 && decreasing && gap < 1e-8,
        format!(
            "pair I tau {pair_one:.3?} (ratio {ratio:.2}); superradiant tau {superradiant:.4?}; path gap {gap:.1e}"
        ),
    )
}

fn c8() -> Outcome {
    let spec = ChainSpec::default().with_gamma(2.5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-3;
    let stencil: Vec<f64> = (0..5).map(|k| k as f64 * h).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let psi = random_state(&mut rng, spec.dim());
        let p = survival_probability(&spec, &psi, &stencil).unwrap();
        let slope = (-25.0 * p[0] + 48.0 * p[1] - 36.0 * p[2] + 16.0 * p[3] - 3.0 * p[4]) / (12.0 * h);
        let exact = -spec.gamma * (psi[0].norm_sqr() + psi[2 * spec.n - 1].norm_sqr());
        worst = worst.max((slope - exact).abs());
    }
    outcome(worst < 1e-6, format!("20 states, max |dP/dt - identity| {worst:.2e}"))
}

fn merge(acc: &mut Option<Hygiene>, h: Hygiene) {
    *acc = Some(match acc.take() {
        None => h,
        Some(a) => Hygiene {
            max_asymmetry: a.max_asymmetry.max(h.max_asymmetry),
            min_eigenvalue: a.min_eigenvalue.min(h.min_eigenvalue),
            max_trace_increase: a.max_trace_increase.max(h.max_trace_increase),
            steps: a.steps + h.steps,
        },
    });
}

fn c9(hygiene: &mut Option<Hygiene>) -> Outcome {
    let spec = ChainSpec::default().with_gamma(2.5);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let psi = random_state(&mut rng, spec.dim());
    let g = grid(0.0, 0.25, 50.0 / spec.nu);
    let p = survival_probability(&spec, &psi, &g).unwrap();
    let ev = evolve_density(&spec, &DensityMatrix::from_pure(&psi), &g).unwrap();
    merge(hygiene, ev.hygiene);
    let worst = ev.rho.iter().zip(&p).map(|(r, p)| (r.trace() - p).abs()).fold(0.0, f64::max);
    outcome(worst < 1e-6, format!("{} points, max |Tr rho - P| {worst:.2e}", g.len()))
}

fn c10(hygiene: &mut Option<Hygiene>) -> Outcome {
    let alpha = 1e-3;
    let d = ChainSpec::default().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let rho0 = DensityMatrix::from_pure(&random_state(&mut rng, d)).rho;
    let generator = MasterGenerator::pure_dephasing(d, alpha);
    let mut it = TaylorIntegrator::new(&generator, rho0.clone(), 0.0, MASTER_TOLERANCES);
    let t = 3.0 / (2.0 * alpha);
    let rho: CMatrix = it.sample(&[t]).unwrap().remove(0);
    let decay = (-2.0 * alpha * t).exp();
    let mut worst: f64 = 0.0;
    for j in 0..d {
        for i in 0..d {
            if i != j && rho0[(i, j)].norm() > 1e-12 {
                let expected = rho0[(i, j)] * decay;
                worst = worst.max((rho[(i, j)] - expected).norm() / expected.norm());
            }
        }
    }
    let dm = DensityMatrix { rho };
    merge(
        hygiene,
        Hygiene {
            max_asymmetry: it.max_asymmetry,
            min_eigenvalue: dm.min_eigenvalue(),
            max_trace_increase: dm.trace() - DensityMatrix { rho: rho0 }.trace(),
            steps: it.steps_taken(),
        },
    );
    outcome(worst < 1e-6, format!("t = {t}, max relative error {worst:.2e}"))
}

fn c11(hygiene: &mut Option<Hygiene>) -> Outcome {
    let spec = ChainSpec::default().with_gamma(2.5).with_alpha(1e-3);
    let psi = scan_initial_state(&spec, InitialState::OpenEigenstate).unwrap();
    let checkpoints = grid(5.0, 5.0, 50.0);
    let noise = NoiseModel { alpha_phi: 1e-3, seed: 2024, dt: 0.01, n_traj: 2000 };
    let t0 = Instant::now();
    let mc = monte_carlo_dephasing(&spec, &psi, &noise, &checkpoints).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let ev = evolve_density(&spec, &DensityMatrix::from_pure(&psi), &checkpoints).unwrap();
    merge(hygiene, ev.hygiene);
    let mut within = 0usize;
    let mut total = 0usize;
    let mut worst_z: f64 = 0.0;
    for ((mean, se), rho) in mc.mean.iter().zip(&mc.std_err).zip(&ev.rho) {
        let diff = (mean - &rho.rho).map(|z| z.norm());
        worst_z = worst_z.max(diff.max() / se.max());
        for (d, s) in diff.iter().zip(se.iter()) {
            total += 1;
            if *d <= 3.0 * s {
                within += 1;
            }
        }
    }
    outcome(
        within == total && elapsed < 60.0,
        format!(
            "max|d|/max SE {worst_z:.2} over 10 checkpoints; {:.2}% of elements within 3 SE; {elapsed:.1}s",
            100.0 * within as f64 / total as f64
        ),
    )
}

fn scan_failures(points: &[ScanPoint]) -> Option<String> {
    points.iter().find(|p| p.tau.is_none() || p.censored).map(|p| {
        format!("N={} gamma={} failed: {}", p.n, p.gamma, p.error.clone().unwrap_or_else(|| "censored".into()))
    })
}

fn c12(hygiene: &mut Option<Hygiene>) -> Outcome {
    let gammas = log_grid(0.05, 20.0, 15);
    let ns = [10, 20, 30, 40];
    let points = coherence_scan(&ChainSpec::default(), &gammas, &ns, &[1e-3], ScanOptions::default());
    if let Some(msg) = scan_failures(&points) {
        return outcome(false, msg);
    }
    points.iter().for_each(|p| merge(hygiene, p.hygiene.unwrap()));
    let mut minima = Vec::new();
    let mut ok = true;
    for &n in &ns {
        let taus: Vec<f64> = points.iter().filter(|p| p.n == n).map(|p| p.tau.unwrap()).collect();
        let k = (0..taus.len()).min_by(|&a, &b| taus[a].total_cmp(&taus[b])).unwrap();
        ok &= k > 0 && k + 1 < taus.len() && (1.0..=5.0).contains(&gammas[k]);
        minima.push((gammas[k], taus[k]));
    }
    ok &= minima.windows(2).all(|w| w[1].1 > w[0].1);
    let shown: Vec<String> = minima.iter().map(|(g, t)| format!("({g:.2}, {t:.1})")).collect();
    outcome(ok, format!("minima (gamma, tau) for N=10,20,30,40: {}", shown.join(" ")))
}

fn c13(hygiene: &mut Option<Hygiene>) -> Outcome {
    let gammas = log_grid(0.05, 20.0, 15);
    let points = coherence_scan(&ChainSpec::default(), &gammas, &[40], &[1e-1], ScanOptions::default());
    if let Some(msg) = scan_failures(&points) {
        return outcome(false, msg);
    }
    points.iter().for_each(|p| merge(hygiene, p.hygiene.unwrap()));
    let taus: Vec<f64> = points.iter().map(|p| p.tau.unwrap()).collect();
    let hi = taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / lo;
    outcome(spread < 0.2, format!("tau in [{lo:.4}, {hi:.4}], spread {:.3}%", 100.0 * spread))
}

fn c14(hygiene: Option<Hygiene>) -> Outcome {
    match hygiene {
        Some(h) => outcome(
            h.max_asymmetry < 1e-8 && h.min_eigenvalue >= -1e-8 && h.max_trace_increase <= 1e-9,
            format!(
                "asymmetry {:.1e}, min eigenvalue {:.1e}, max trace increase {:.1e}, {} steps",
                h.max_asymmetry, h.min_eigenvalue, h.max_trace_increase, h.steps
            ),
        ),
        None => outcome(false, "no trajectories recorded".into()),
    }
}

fn report(index: usize, o: &Outcome) {
    let status = match (o.pass, KNOWN_DEFECTS.contains(&index)) {
        (true, _) => "PASS",
        (false, true) => "FAIL (known)",
        (false, false) => "FAIL",
    };
    println!("criterion {index:>2}: {status:<12} {}", o.detail);
}

fn main() -> ExitCode {
    let mut hygiene = None;
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut run = |i: usize, o: Outcome| {
        report(i, &o);
        results.push((i, o));
    };
    run(1, c1());
    run(2, c2());
    let (o3, o4) = c3_c4();
    run(3, o3);
    run(4, o4);
    run(5, c5());
    run(6, c6());
    run(7, c7());
    run(8, c8());
    run(9, c9(&mut hygiene));
    run(10, c10(&mut hygiene));
    run(11, c11(&mut hygiene));
    run(12, c12(&mut hygiene));
    run(13, c13(&mut hygiene));
    run(14, c14(hygiene));

    let unexpected: Vec<usize> =
        results.iter().filter(|(i, o)| !o.pass && !KNOWN_DEFECTS.contains(i)).map(|(i, _)| *i).collect();
    let passed = results.iter().filter(|(_, o)| o.pass).count();
    println!("acceptance: {passed}/{} passed", results.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
